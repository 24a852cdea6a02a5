//! Monte Carlo sweeps, the marginal-law check and CSV output.
//!
//! Trial `k` of a sweep point runs with seed [`trial_seed`]`(base, k)`, a
//! SplitMix64 finalizer applied to `base + k·0x9E3779B97F4A7C15`. Trials are
//! fanned out over a worker pool and collected by index, so the aggregate does
//! not depend on scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::channel::{sample_state, ChannelModel, ChannelState, CorrelationMode, CsitView, Link, ViewId};
use crate::error::{Error, Result};
use crate::protocol::{
    run_asymmetric_with, run_baseline_no_csit, run_general_with, run_multicast, run_symmetric_with, RunOptions,
    Scheme, TrialReport,
};
use crate::regions::{corner_points, region_for_view, region_global_delayed, RatePair, RateRegion, ViewRegion, DEFAULT_TOL};

/// Significance level of the marginal-law test.
pub const MARGINAL_ALPHA: f64 = 0.01;

/// Seed of trial `k` derived from `base`.
#[must_use]
pub fn trial_seed(base: u64, k: u64) -> u64 {
    let mut z = base.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub view: ViewId,
    pub p: f64,
    /// Message lengths to sweep.
    pub m: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    /// Where the sweep CSV goes, if anywhere.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::SymmetricV2,
            view: ViewId::V2,
            p: 0.5,
            m: vec![1000],
            trials: 10,
            delta: crate::protocol::DEFAULT_DELTA,
            seed: 1,
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Checks ranges and that the view gives the scheme the gains it reads.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.m.is_empty() || self.m.iter().any(|&m| m < 100) {
            return Err(Error::Config("every m must be at least 100".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("p = {} is outside [0, 1]", self.p)));
        }
        let needs_outgoing = matches!(self.scheme, Scheme::SymmetricV2 | Scheme::AsymmetricV2 | Scheme::GeneralP);
        if needs_outgoing {
            let view = CsitView::preset(self.view);
            let has = |tx: u8| view.grants(tx, Link::new(tx, 1)) && view.grants(tx, Link::new(tx, 2));
            if !(has(1) && has(2)) {
                return Err(Error::Config(format!(
                    "{} sorts bits by each transmitter's outgoing gains, which view {} does not provide; \
                     without them the no-feedback region is the best possible",
                    self.scheme, self.view
                )));
            }
        }
        Ok(())
    }

    /// Runs trial `k` at message length `m`.
    pub fn run_trial(&self, m: usize, k: u64) -> Result<TrialReport> {
        let seed = trial_seed(self.seed, k);
        let opts = RunOptions {
            view: self.view,
            ..RunOptions::default()
        };
        match self.scheme {
            Scheme::SymmetricV2 => run_symmetric_with(m, self.p, self.delta, seed, &opts),
            Scheme::AsymmetricV2 => run_asymmetric_with(m, self.p, seed, &opts),
            Scheme::GeneralP => run_general_with(m, self.p, seed, &opts),
            Scheme::BaselineNoCsit => run_baseline_no_csit(m, m, self.p, self.delta, seed),
            Scheme::Multicast => run_multicast(m, m, self.p, self.delta, seed),
        }
    }
}

/// All trials at message length `m`, in trial order.
pub fn run_trials(cfg: &ExperimentConfig, m: usize, parallel: bool) -> Result<Vec<TrialReport>> {
    let n = cfg.trials as u64;
    if parallel {
        (0..n).into_par_iter().map(|k| cfg.run_trial(m, k)).collect()
    } else {
        (0..n).map(|k| cfg.run_trial(m, k)).collect()
    }
}

/// Statistics of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub m: usize,
    pub p: f64,
    pub trials: usize,
    pub successes: usize,
    /// Halted or undecoded trials over all trials.
    pub failure_fraction: f64,
    /// Mean rates over successful trials.
    pub mean_rate: Option<RatePair>,
    /// Standard error of the mean, from at least two successes.
    pub std_err: Option<RatePair>,
    pub mean_uses: f64,
}

/// Summary of a whole sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub scheme: Scheme,
    pub view: ViewId,
    pub points: Vec<SweepPoint>,
}

/// Mean and standard error of the successful trials' rates.
#[must_use]
pub fn summarize(m: usize, p: f64, reports: &[TrialReport]) -> SweepPoint {
    let rates: Vec<RatePair> = reports.iter().filter(|r| r.succeeded()).filter_map(|r| r.rate).collect();
    let n = rates.len();
    let mean = |f: fn(&RatePair) -> f64| rates.iter().map(f).sum::<f64>() / n as f64;
    let se = |f: fn(&RatePair) -> f64, mu: f64| {
        let var = rates.iter().map(|r| (f(r) - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    let mean_rate = (n > 0).then(|| RatePair::new(mean(|r| r.r1), mean(|r| r.r2)));
    let std_err = mean_rate.filter(|_| n >= 2).map(|mu| RatePair::new(se(|r| r.r1, mu.r1), se(|r| r.r2, mu.r2)));
    SweepPoint {
        m,
        p,
        trials: reports.len(),
        successes: n,
        failure_fraction: if reports.is_empty() { 0.0 } else { (reports.len() - n) as f64 / reports.len() as f64 },
        mean_rate,
        std_err,
        mean_uses: reports.iter().map(|r| r.total_uses as f64).sum::<f64>() / reports.len().max(1) as f64,
    }
}

/// Runs every message length of `cfg` and writes the CSV when `cfg.out` is set.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.m.len());
    for &m in &cfg.m {
        let reports = run_trials(cfg, m, true)?;
        points.push(summarize(m, cfg.p, &reports));
    }
    let summary = SweepSummary {
        scheme: cfg.scheme,
        view: cfg.view,
        points,
    };
    if let Some(path) = &cfg.out {
        write_sweep_csv(&summary, std::fs::File::create(path)?)?;
    }
    Ok(summary)
}

/// True when the point's mean rate violates no outer-bound half-space by more
/// than `k` standard errors. Points without successes pass vacuously.
pub fn within_outer_bound(pt: &SweepPoint, k: f64) -> Result<bool> {
    let Some(mean) = pt.mean_rate else {
        return Ok(true);
    };
    let se = pt.std_err.unwrap_or(RatePair::new(0.0, 0.0));
    let outer = region_global_delayed(pt.p)?;
    Ok(outer.halfspaces.iter().all(|h| {
        let spread = ((h.a1 * se.r1).powi(2) + (h.a2 * se.r2).powi(2)).sqrt();
        h.lhs(mean) <= h.c + k * spread + DEFAULT_TOL
    }))
}

#[derive(Serialize)]
struct SweepRow<'a> {
    scheme: &'a str,
    view: String,
    p: f64,
    m: usize,
    trials: usize,
    successes: usize,
    failure_fraction: f64,
    mean_r1: Option<f64>,
    mean_r2: Option<f64>,
    se_r1: Option<f64>,
    se_r2: Option<f64>,
    mean_uses: f64,
}

/// Writes one row per sweep point.
pub fn write_sweep_csv<W: Write>(summary: &SweepSummary, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for pt in &summary.points {
        w.serialize(SweepRow {
            scheme: summary.scheme.name(),
            view: summary.view.to_string(),
            p: pt.p,
            m: pt.m,
            trials: pt.trials,
            successes: pt.successes,
            failure_fraction: pt.failure_fraction,
            mean_r1: pt.mean_rate.map(|r| r.r1),
            mean_r2: pt.mean_rate.map(|r| r.r2),
            se_r1: pt.std_err.map(|r| r.r1),
            se_r2: pt.std_err.map(|r| r.r2),
            mean_uses: pt.mean_uses,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct TrialRow<'a> {
    scheme: &'a str,
    view: String,
    p: f64,
    m1: usize,
    m2: usize,
    seed: u64,
    total_uses: usize,
    outcome: &'a str,
    r1: Option<f64>,
    r2: Option<f64>,
    type_i: bool,
    type_ii: bool,
    type_iii: bool,
    type_iv: bool,
}

/// Writes one row per trial.
pub fn write_trials_csv<W: Write>(reports: &[TrialReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in reports {
        let outcome = match &r.outcome {
            crate::protocol::Outcome::Success => "success",
            crate::protocol::Outcome::Halted => "halted",
            crate::protocol::Outcome::DecodeFailure { .. } => "decode-failure",
        };
        w.serialize(TrialRow {
            scheme: r.scheme.name(),
            view: r.view.to_string(),
            p: r.p,
            m1: r.m[0],
            m2: r.m[1],
            seed: r.seed,
            total_uses: r.total_uses,
            outcome,
            r1: r.rate.map(|x| x.r1),
            r2: r.rate.map(|x| x.r2),
            type_i: r.ledger.type_i,
            type_ii: r.ledger.type_ii,
            type_iii: r.ledger.type_iii,
            type_iv: r.ledger.type_iv,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Chi-square homogeneity test of one receiver's pair of incoming gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointTest {
    pub rx: u8,
    /// Counts of `(g_{1j}, g_{2j})` as codes `2·g_{1j} + g_{2j}`, per generator.
    pub counts: [[u64; 4]; 2],
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub pass: bool,
}

/// Outcome of [`verify_marginals`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalReport {
    pub p: f64,
    pub samples: usize,
    pub tests: [JointTest; 2],
}

impl MarginalReport {
    #[must_use]
    pub fn pass(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }
}

fn homogeneity(rx: u8, counts: [[u64; 4]; 2]) -> JointTest {
    let rows = [counts[0].iter().sum::<u64>() as f64, counts[1].iter().sum::<u64>() as f64];
    let total = rows[0] + rows[1];
    let mut stat = 0.0;
    let mut cells = 0;
    for c in 0..4 {
        let col = (counts[0][c] + counts[1][c]) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (r, &row) in rows.iter().enumerate() {
            let expected = row * col / total;
            stat += (counts[r][c] as f64 - expected).powi(2) / expected;
        }
    }
    let dof = cells.max(1) - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(stat)
    };
    JointTest {
        rx,
        counts,
        statistic: stat,
        dof,
        p_value,
        pass: p_value >= MARGINAL_ALPHA,
    }
}

/// Compares the receiver-side joint laws of the independent and the
/// outgoing-correlated generators over `samples` draws of each.
pub fn verify_marginals(samples: usize, p: f64, seed: u64) -> Result<MarginalReport> {
    verify_marginals_with(samples, p, seed, |_| {})
}

/// As [`verify_marginals`], with `tamper` applied to every correlated draw.
pub fn verify_marginals_with(
    samples: usize,
    p: f64,
    seed: u64,
    tamper: impl Fn(&mut ChannelState),
) -> Result<MarginalReport> {
    let models = [
        ChannelModel::with_mode(p, CorrelationMode::Independent)?,
        ChannelModel::with_mode(p, CorrelationMode::OutgoingCorrelated)?,
    ];
    let mut counts = [[[0u64; 4]; 2]; 2];
    for (k, model) in models.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        for _ in 0..samples {
            let mut s = sample_state(model, &mut rng);
            if k == 1 {
                tamper(&mut s);
            }
            for rx in [1u8, 2] {
                let code = 2 * usize::from(s.g(1, rx)) + usize::from(s.g(2, rx));
                counts[usize::from(rx - 1)][k][code] += 1;
            }
        }
    }
    Ok(MarginalReport {
        p,
        samples,
        tests: [homogeneity(1, counts[0]), homogeneity(2, counts[1])],
    })
}

#[derive(Serialize)]
struct OverlayRow {
    kind: String,
    a1: Option<f64>,
    a2: Option<f64>,
    c: Option<f64>,
    r1: Option<f64>,
    r2: Option<f64>,
    m: Option<usize>,
}

fn region_rows(region: &RateRegion, suffix: &str, rows: &mut Vec<OverlayRow>) {
    for h in &region.halfspaces {
        rows.push(OverlayRow {
            kind: format!("halfspace{suffix}"),
            a1: Some(h.a1),
            a2: Some(h.a2),
            c: Some(h.c),
            r1: None,
            r2: None,
            m: None,
        });
    }
    for pt in corner_points(region) {
        rows.push(OverlayRow {
            kind: format!("corner{suffix}"),
            a1: None,
            a2: None,
            c: None,
            r1: Some(pt.r1),
            r2: Some(pt.r2),
            m: None,
        });
    }
}

/// Writes the view's region, its corners and one row per rate point; returns the row count.
///
/// Columns are `kind,a1,a2,c,r1,r2,m`; a half-space row fills `a1·R1 + a2·R2 ≤ c`,
/// corner and point rows fill `r1,r2`, and point rows carry their message length.
pub fn write_region_csv<W: Write>(view: ViewId, p: f64, points: &[SweepPoint], out: W) -> Result<usize> {
    let mut rows = Vec::new();
    match region_for_view(view, p)? {
        ViewRegion::Known(r) => region_rows(&r, "", &mut rows),
        ViewRegion::Open { inner, outer } => {
            region_rows(&inner, ":inner", &mut rows);
            region_rows(&outer, ":outer", &mut rows);
        }
    }
    for pt in points {
        if let Some(r) = pt.mean_rate {
            rows.push(OverlayRow {
                kind: "point".into(),
                a1: None,
                a2: None,
                c: None,
                r1: Some(r.r1),
                r2: Some(r.r2),
                m: Some(pt.m),
            });
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(rows.len())
}

/// Region overlay of a sweep written to `path`; returns the row count.
pub fn emit_region_overlay(view: ViewId, p: f64, sweep: &SweepSummary, path: &Path) -> Result<usize> {
    if sweep.points.is_empty() {
        return Err(Error::InvalidParameter("the sweep has no points".into()));
    }
    write_region_csv(view, p, &sweep.points, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(scheme: Scheme, m: usize, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            scheme,
            m: vec![m],
            trials,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn outer_bound_check() {
        let mut pt = summarize(1000, 0.5, &[]);
        assert!(within_outer_bound(&pt, 3.0).unwrap());
        pt.mean_rate = Some(RatePair::new(0.45, 0.45));
        assert!(within_outer_bound(&pt, 3.0).unwrap());
        pt.mean_rate = Some(RatePair::new(0.46, 0.46));
        assert!(!within_outer_bound(&pt, 3.0).unwrap());
        pt.std_err = Some(RatePair::new(0.01, 0.01));
        assert!(within_outer_bound(&pt, 3.0).unwrap());
    }

    #[test]
    fn seeds_are_spread() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(trial_seed(1, 1), trial_seed(2, 0));
        assert_eq!(trial_seed(7, 3), trial_seed(7, 3));
    }

    #[test]
    fn validation() {
        assert!(cfg(Scheme::SymmetricV2, 1000, 1).validate().is_ok());
        assert!(cfg(Scheme::SymmetricV2, 50, 1).validate().is_err());
        assert!(cfg(Scheme::SymmetricV2, 1000, 0).validate().is_err());
        let mut c = cfg(Scheme::SymmetricV2, 1000, 1);
        c.view = ViewId::V1;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.scheme = Scheme::BaselineNoCsit;
        assert!(c.validate().is_ok());
        c.view = ViewId::V8;
        c.scheme = Scheme::AsymmetricV2;
        assert!(c.validate().is_ok());
        c.p = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn serial_and_parallel_agree() {
        let c = cfg(Scheme::SymmetricV2, 1000, 6);
        let a = run_trials(&c, 1000, true).unwrap();
        let b = run_trials(&c, 1000, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(summarize(1000, 0.5, &a), summarize(1000, 0.5, &b));
    }

    #[test]
    fn single_trial_has_no_std_err() {
        let s = run_sweep(&cfg(Scheme::Multicast, 500, 1)).unwrap();
        assert_eq!(s.points[0].trials, 1);
        assert!(s.points[0].std_err.is_none());
    }

    #[test]
    fn csv_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(Scheme::BaselineNoCsit, 400, 3);
        let mut bytes = Vec::new();
        for name in ["a.csv", "b.csv"] {
            c.out = Some(dir.path().join(name));
            run_sweep(&c).unwrap();
            bytes.push(std::fs::read(dir.path().join(name)).unwrap());
        }
        assert_eq!(bytes[0], bytes[1]);
        let text = String::from_utf8(bytes.pop().unwrap()).unwrap();
        assert!(text.starts_with("scheme,view,p,m,trials,successes,failure_fraction,mean_r1"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn marginals_pass_and_tampering_fails() {
        let r = verify_marginals(100_000, 0.5, 3).unwrap();
        assert!(r.pass(), "{r:?}");
        let zero = verify_marginals(100_000, 0.0, 3).unwrap();
        assert!(zero.pass());
        assert_eq!(zero.tests[0].counts[1][0], 100_000);
        let bad = verify_marginals_with(100_000, 0.5, 3, |s| s.g21 = s.g11).unwrap();
        assert!(!bad.tests[0].pass);
    }

    #[test]
    fn overlay_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.csv");
        let sweep = SweepSummary {
            scheme: Scheme::SymmetricV2,
            view: ViewId::V8,
            points: vec![summarize(1000, 0.5, &[])],
        };
        // No successful trial, so no point row: 4 half-spaces + 6 corners including the axes.
        assert_eq!(emit_region_overlay(ViewId::V8, 0.5, &sweep, &path).unwrap(), 10);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("corner,,,,0.375,0.5,"));
        assert!(text.contains("corner,,,,0.45,0.45,"));
        assert!(text.contains("corner,,,,0.5,0.375,"));
    }
}
