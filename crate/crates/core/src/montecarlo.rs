//! Regeneration of critical-value tables by simulation.
//!
//! One cell fixes the sample size N and the truncation fraction p. Each
//! replication draws N values with truncation point 1 and
//! λ = (1−p)/p (or an untruncated sample when p = 0), refits them, and
//! records both test statistics when the fit is regular. Replications
//! that end on the Pareto boundary are discarded and counted.
//!
//! Replication `r` always uses the stream seeded by
//! `derive_seed(master_seed, cell_id, r)`, and statistics are sorted
//! before quantiles are taken, so results are bit-identical for any
//! number of workers.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::TruncatedLogLogistic;
use crate::error::{Error, Result};
use crate::estimation::{FitOutcome, Sample, fit};
use crate::gof::{CriticalEntry, CriticalTables, GofStatistics, Level, TestKind};
use crate::rng;

pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub reps: usize,
    /// Truncation fraction p = 1/(1+λ); 0 means untruncated.
    pub p: f64,
    /// Shape of the generating distribution.
    pub beta_gen: f64,
    pub levels: Vec<Level>,
    pub master_seed: u64,
    pub workers: usize,
    /// Report progress on standard error.
    #[serde(skip)]
    pub progress: bool,
}

impl SimConfig {
    pub fn new(n: usize, reps: usize, p: f64, master_seed: u64) -> Self {
        Self {
            n,
            reps,
            p,
            beta_gen: 1.0,
            levels: Level::ALL.to_vec(),
            master_seed,
            workers: 1,
            progress: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooFewObservations { n: self.n, min: 2 });
        }
        if self.reps < MIN_REPS {
            return Err(Error::InvalidParameter {
                name: "reps",
                value: self.reps as f64,
                reason: "need at least 100 replications",
            });
        }
        if !(self.p.is_finite() && (0.0..1.0).contains(&self.p)) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: self.p,
                reason: "truncation fraction must lie in [0, 1)",
            });
        }
        if !(self.beta_gen.is_finite() && self.beta_gen > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta_gen",
                value: self.beta_gen,
                reason: "must be positive",
            });
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter {
                name: "workers",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidParameter {
                name: "levels",
                value: 0.0,
                reason: "at least one level is required",
            });
        }
        Ok(())
    }

    /// λ = (1−p)/p in units where x_L = 1; `None` when untruncated.
    pub fn lambda(&self) -> Option<f64> {
        (self.p > 0.0).then(|| (1.0 - self.p) / self.p)
    }

    /// The generating distribution.
    pub fn generator(&self) -> Result<TruncatedLogLogistic> {
        match self.lambda() {
            None => TruncatedLogLogistic::new(1.0, self.beta_gen, 0.0),
            Some(lambda) => TruncatedLogLogistic::from_ln_lambda(lambda.ln(), self.beta_gen, 1.0),
        }
    }

    /// Stream identifier of this cell, mixed into every replication seed.
    pub fn cell_id(&self) -> u64 {
        rng::mix64(
            self.n as u64 ^ rng::mix64(self.p.to_bits() ^ rng::mix64(self.beta_gen.to_bits())),
        )
    }
}

/// Quantile of a simulated statistic with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub q: f64,
    pub quantile: f64,
    pub std_err: f64,
    /// Regular fits that contributed a statistic.
    pub kept: usize,
    /// Replications ending on the Pareto boundary.
    pub discarded: usize,
    /// Replications whose fit failed.
    pub failed: usize,
}

/// The ⌈qC⌉-th order statistic (1-based) of `sorted`, with standard error
/// √(q(1−q)/C) / f̂, where the density f̂ is the central difference of the
/// order statistics ⌈√C⌉ ranks either side.
pub fn quantile_with_error(sorted: &[f64], q: f64) -> Result<QuantileEstimate> {
    let c = sorted.len();
    if c < MIN_REPS {
        return Err(Error::TooFewObservations { n: c, min: MIN_REPS });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            name: "q",
            value: q,
            reason: "must lie in (0, 1)",
        });
    }
    let cf = c as f64;
    // the small offset keeps q·C = 950.0000000001 from rounding up a rank
    let k = ((q * cf - 1e-9).ceil() as usize).clamp(1, c);
    let h = cf.sqrt().ceil() as usize;
    let lo = k.saturating_sub(h).max(1);
    let hi = (k + h).min(c);
    let spread = sorted[hi - 1] - sorted[lo - 1];
    let density = (hi - lo) as f64 / cf / spread;
    let std_err = if density.is_finite() && density > 0.0 {
        (q * (1.0 - q) / cf).sqrt() / density
    } else {
        0.0
    };
    Ok(QuantileEstimate {
        q,
        quantile: sorted[k - 1],
        std_err,
        kept: c,
        discarded: 0,
        failed: 0,
    })
}

enum Replication {
    Kept(f64, f64),
    Discarded,
    Failed,
}

fn replicate(cfg: &SimConfig, generator: &TruncatedLogLogistic, cell_id: u64, r: usize) -> Replication {
    let mut stream = rng::stream(rng::derive_seed(cfg.master_seed, cell_id, r as u64));
    let values = generator.sample_from(&mut stream, cfg.n);
    let Ok(sample) = Sample::new(values, generator.x_l()) else {
        return Replication::Failed;
    };
    match fit(&sample) {
        Ok(res) => match res.outcome {
            FitOutcome::Regular(reg) => match GofStatistics::compute(&sample, &reg.distribution()) {
                Ok(s) => Replication::Kept(s.ks_scaled, s.ad),
                Err(_) => Replication::Failed,
            },
            FitOutcome::ParetoBoundary { .. } => Replication::Discarded,
            FitOutcome::NoFiniteMaximum { .. } => Replication::Failed,
        },
        Err(_) => Replication::Failed,
    }
}

/// Simulated statistics and quantiles of one (N, p) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: SimConfig,
    pub kept: usize,
    pub discarded: usize,
    pub failed: usize,
    pub ks: Vec<QuantileEstimate>,
    pub ad: Vec<QuantileEstimate>,
    /// Sorted √N·D values of the kept replications.
    pub ks_values: Vec<f64>,
    /// Sorted A² values of the kept replications.
    pub ad_values: Vec<f64>,
}

impl CellResult {
    pub fn estimate(&self, test: TestKind, level: Level) -> Option<&QuantileEstimate> {
        let list = match test {
            TestKind::Ks => &self.ks,
            TestKind::Ad => &self.ad,
        };
        self.config
            .levels
            .iter()
            .position(|&l| l == level)
            .and_then(|i| list.get(i))
    }

    pub fn discarded_fraction(&self) -> f64 {
        self.discarded as f64 / self.config.reps as f64
    }
}

pub fn run_cell(cfg: &SimConfig) -> Result<CellResult> {
    cfg.validate()?;
    let generator = cfg.generator()?;
    let cell_id = cfg.cell_id();
    let done = AtomicUsize::new(0);
    let tick = (cfg.reps / 10).max(1);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Convergence(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Replication> = pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|r| {
                let out = replicate(cfg, &generator, cell_id, r);
                if cfg.progress {
                    let d = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if d.is_multiple_of(tick) {
                        eprintln!("[N={} p={}] {d}/{} replications", cfg.n, cfg.p, cfg.reps);
                    }
                }
                out
            })
            .collect()
    });

    let mut ks_values = Vec::with_capacity(cfg.reps);
    let mut ad_values = Vec::with_capacity(cfg.reps);
    let (mut discarded, mut failed) = (0, 0);
    for o in outcomes {
        match o {
            Replication::Kept(ks, ad) => {
                ks_values.push(ks);
                ad_values.push(ad);
            }
            Replication::Discarded => discarded += 1,
            Replication::Failed => failed += 1,
        }
    }
    ks_values.sort_by(f64::total_cmp);
    ad_values.sort_by(f64::total_cmp);
    let kept = ks_values.len();

    let estimates = |values: &[f64]| -> Result<Vec<QuantileEstimate>> {
        cfg.levels
            .iter()
            .map(|l| {
                let mut e = quantile_with_error(values, l.probability())?;
                e.discarded = discarded;
                e.failed = failed;
                Ok(e)
            })
            .collect()
    };
    Ok(CellResult {
        config: cfg.clone(),
        kept,
        discarded,
        failed,
        ks: estimates(&ks_values)?,
        ad: estimates(&ad_values)?,
        ks_values,
        ad_values,
    })
}

/// Assembles cell results into a table asset. The second element lists
/// grid points (p, N) that the cells do not cover.
pub fn emit_table(cells: &[CellResult]) -> (CriticalTables, Vec<(f64, usize)>) {
    let mut out = CriticalTables::default();
    let meta = |k: &str, v: String| (k.to_string(), v);
    out.metadata.push(meta("format", "lltrunc-critical-values/1".into()));
    out.metadata.push(meta(
        "generator",
        format!("lltrunc {} montecarlo", env!("CARGO_PKG_VERSION")),
    ));
    out.metadata.push(meta(
        "statistic",
        "KS = sqrt(N)*D, AD = A^2, parameters re-estimated in every replication".into(),
    ));
    out.metadata.push(meta(
        "quantile",
        "order statistic ceil(qC) of the regular fits; Pareto-boundary fits discarded".into(),
    ));
    let join = |vals: BTreeSet<String>| vals.into_iter().collect::<Vec<_>>().join(",");
    out.metadata.push(meta(
        "master_seed",
        join(cells.iter().map(|c| c.config.master_seed.to_string()).collect()),
    ));
    out.metadata.push(meta(
        "reps",
        join(cells.iter().map(|c| c.config.reps.to_string()).collect()),
    ));
    out.metadata.push(meta(
        "beta_gen",
        join(cells.iter().map(|c| c.config.beta_gen.to_string()).collect()),
    ));
    out.metadata.push(meta("columns", "test level p n quantile std_err".into()));

    for cell in cells {
        for (i, &level) in cell.config.levels.iter().enumerate() {
            for (test, list) in [(TestKind::Ks, &cell.ks), (TestKind::Ad, &cell.ad)] {
                let e = &list[i];
                out.insert(
                    test,
                    level,
                    cell.config.p,
                    cell.config.n,
                    CriticalEntry {
                        quantile: e.quantile,
                        std_err: e.std_err,
                    },
                );
            }
        }
    }

    let ps: Vec<f64> = {
        let mut v: Vec<f64> = cells.iter().map(|c| c.config.p).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let ns: BTreeSet<usize> = cells.iter().map(|c| c.config.n).collect();
    let mut missing = Vec::new();
    for &p in &ps {
        for &n in &ns {
            if !cells.iter().any(|c| c.config.p == p && c.config.n == n) {
                missing.push((p, n));
            }
        }
    }
    (out, missing)
}
