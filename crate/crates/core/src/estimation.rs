//! Maximum likelihood estimation via the profile likelihood in β.
//!
//! The sample is rescaled so the truncation point becomes 1 (or, when
//! untruncated, so the logs are centred on their mean). In those units
//! the likelihood maximiser over λ = α^β at fixed β is the unique root of
//! a monotone equation, [`lambda_profile`], and the fit reduces to the
//! scalar equation [`master_residual`]`(β) = 0`.
//!
//! For truncated samples a regular maximum exists iff β₀ > β_C, where
//! β₀ = N / Σ ln X_i and β_C solves (1/N) Σ X_i^−β = 1/2 (both in
//! normalised units). Otherwise the likelihood is maximised on the
//! boundary λ → 0 and the fitted model is the Pareto density with shape
//! β₀. A sample whose values are all equal has no finite maximum at all.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::distribution::{ParetoTail, TruncatedLogLogistic};
use crate::error::{Error, Result};
use crate::numeric::{Tolerance, brent, log_add_exp, logistic, softplus};

/// Bracket doublings allowed before the fit gives up.
pub const MAX_DOUBLINGS: usize = 200;

/// Grid size of the optional multiple-root scan.
pub const SCAN_POINTS: usize = 512;

/// Residual tolerance of the master equation, per observation.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Observations strictly above a known truncation point, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    x_l: f64,
}

impl Sample {
    pub fn new(mut values: Vec<f64>, x_l: f64) -> Result<Self> {
        if !(x_l.is_finite() && x_l >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "x_l",
                value: x_l,
                reason: "must be finite and non-negative",
            });
        }
        if values.is_empty() {
            return Err(Error::TooFewObservations { n: 0, min: 1 });
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && value > x_l && value > 0.0) {
                return Err(Error::BelowTruncation { index, value, x_l });
            }
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, x_l })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x_l(&self) -> f64 {
        self.x_l
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_truncated(&self) -> bool {
        self.x_l > 0.0
    }

    pub fn normalize(&self) -> Result<NormalizedSample> {
        NormalizedSample::new(self)
    }
}

/// Log-observations in units where the truncation point is 1, together
/// with the existence thresholds β₀ and β_C.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSample {
    logs: Vec<f64>,
    sum_logs: f64,
    ln_scale: f64,
    truncated: bool,
    beta0: Option<f64>,
    beta_c: f64,
    all_equal: bool,
}

impl NormalizedSample {
    fn new(sample: &Sample) -> Result<Self> {
        let n = sample.len();
        if n < 2 {
            return Err(Error::TooFewObservations { n, min: 2 });
        }
        let truncated = sample.is_truncated();
        let all_equal = sample.values[0] == sample.values[n - 1];

        let (logs, ln_scale) = if truncated {
            let x_l = sample.x_l;
            (sample.values.iter().map(|&x| (x / x_l).ln()).collect::<Vec<_>>(), x_l.ln())
        } else {
            let raw: Vec<f64> = sample.values.iter().map(|x| x.ln()).collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            let centred = if all_equal {
                vec![0.0; n]
            } else {
                raw.iter().map(|l| l - mean).collect()
            };
            (centred, mean)
        };
        let sum_logs: f64 = logs.iter().sum();

        let mut ns = Self {
            logs,
            sum_logs,
            ln_scale,
            truncated,
            beta0: truncated.then(|| n as f64 / sum_logs),
            beta_c: 0.0,
            all_equal,
        };
        if truncated {
            ns.beta_c = ns.solve_beta_c()?;
        }
        Ok(ns)
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// S = Σ s_i in normalised units.
    pub fn sum_logs(&self) -> f64 {
        self.sum_logs
    }

    /// ln of the factor the data were divided by.
    pub fn ln_scale(&self) -> f64 {
        self.ln_scale
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    /// β₀ = N / S; only defined for truncated samples.
    pub fn beta0(&self) -> Option<f64> {
        self.beta0
    }

    /// β_C; zero for untruncated samples.
    pub fn beta_c(&self) -> f64 {
        self.beta_c
    }

    pub fn all_equal(&self) -> bool {
        self.all_equal
    }

    /// q(β) = (1/N) Σ exp(−β s_i)
    pub fn q(&self, beta: f64) -> f64 {
        self.logs.iter().map(|s| (-beta * s).exp()).sum::<f64>() / self.len() as f64
    }

    fn solve_beta_c(&self) -> Result<f64> {
        // Jensen: q(β) ≥ exp(−β s̄), and q(β) ≤ exp(−β s_min).
        let mean = self.sum_logs / self.len() as f64;
        let s_min = self.logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let lo = std::f64::consts::LN_2 / mean;
        let hi = std::f64::consts::LN_2 / s_min;
        let f = |b: f64| self.q(b) - 0.5;
        let (flo, fhi) = (f(lo), f(hi));
        if flo <= 0.0 {
            return Ok(lo);
        }
        if fhi >= 0.0 {
            return Ok(hi);
        }
        brent(f, lo, hi, flo, fhi, Tolerance::default())
    }
}

/// Root of the existence threshold equation q(β) = 1/2.
pub fn beta_c(ns: &NormalizedSample) -> f64 {
    ns.beta_c
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "beta",
            value: beta,
            reason: "must be positive",
        })
    }
}

/// ln Λ(β), or `None` where Λ(β) = 0.
///
/// Truncated samples: λ solves (2/N) Σ (1+λ)/(λ+X_i^β) = 1, which is the
/// first likelihood equation divided by λ. Each summand increases in λ
/// because X_i^β ≥ 1, so the root is unique; it exists iff 1 − 2q(β) > 0,
/// i.e. β > β_C.
///
/// Untruncated samples: λ solves (2/N) Σ X_i^β/(λ+X_i^β) = 1, which has a
/// unique root for every β > 0.
pub fn ln_lambda_profile(ns: &NormalizedSample, beta: f64) -> Result<Option<f64>> {
    check_beta(beta)?;
    let n = ns.len() as f64;
    let w: Vec<f64> = ns.logs.iter().map(|s| beta * s).collect();
    let w_min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = Tolerance {
        rtol: 0.0,
        atol: 1e-12,
        max_iter: 500,
    };

    if !ns.truncated {
        if w_max == w_min {
            return Ok(Some(w_max));
        }
        let k = |l: f64| 2.0 / n * w.iter().map(|&wi| logistic(wi - l)).sum::<f64>() - 1.0;
        return brent(k, w_min, w_max, k(w_min), k(w_max), tol).map(Some);
    }

    if beta <= ns.beta_c || 1.0 - 2.0 * ns.q(beta) <= 0.0 {
        return Ok(None);
    }
    let k = |l: f64| {
        let sp = softplus(l);
        1.0 - 2.0 / n * w.iter().map(|&wi| (sp - log_add_exp(l, wi)).exp()).sum::<f64>()
    };
    // At ln λ = max w every summand exceeds 1/2, so k < 0 there.
    let hi = w_max;
    let k_hi = k(hi);
    if k_hi >= 0.0 {
        return Ok(Some(hi));
    }
    let mut step = 1.0;
    for _ in 0..MAX_DOUBLINGS {
        let lo = hi - step;
        let k_lo = k(lo);
        if k_lo > 0.0 {
            return brent(k, lo, hi, k_lo, k_hi, tol).map(Some);
        }
        if k_lo == 0.0 {
            return Ok(Some(lo));
        }
        step *= 2.0;
    }
    // k(−∞) > 0 yet no positive value found: λ is below every representable
    // scale, indistinguishable from the boundary.
    Ok(None)
}

/// Λ(β): the λ maximising φ(·, β), zero for β ≤ β_C.
pub fn lambda_profile(ns: &NormalizedSample, beta: f64) -> Result<f64> {
    Ok(ln_lambda_profile(ns, beta)?.map_or(0.0, f64::exp))
}

fn objective_ln(ns: &NormalizedSample, ln_lambda: f64, beta: f64) -> f64 {
    let n = ns.len() as f64;
    let lead = if ns.truncated { softplus(ln_lambda) } else { ln_lambda };
    let tail: f64 = ns
        .logs
        .iter()
        .map(|s| log_add_exp(ln_lambda, beta * s))
        .sum();
    n * lead + n * beta.ln() + beta * ns.sum_logs - 2.0 * tail
}

/// φ(λ, β) = ln L + S in normalised units.
///
/// Truncated: N ln(1+1/λ) + N ln β − N ln λ + βS − 2 Σ ln(1 + X_i^β/λ).
/// Untruncated: the same without the N ln(1+1/λ) term.
pub fn objective(ns: &NormalizedSample, lambda: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain {
            name: "lambda",
            value: lambda,
            reason: "must be positive",
        });
    }
    Ok(objective_ln(ns, lambda.ln(), beta))
}

/// ∂φ/∂λ = (N/λ) { (2/N) Σ 1/(1 + λ/X_i^β) − 1 − 1/(1+λ) } (the last term
/// is absent when untruncated).
pub fn lambda_score(ns: &NormalizedSample, lambda: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain {
            name: "lambda",
            value: lambda,
            reason: "must be positive",
        });
    }
    let n = ns.len() as f64;
    let l = lambda.ln();
    let mean: f64 = ns.logs.iter().map(|s| logistic(beta * s - l)).sum::<f64>() * 2.0 / n;
    let trunc = if ns.truncated { logistic(-l) } else { 0.0 };
    Ok(n / lambda * (mean - 1.0 - trunc))
}

/// φ̃(β) = φ(Λ(β), β), equal to N ln β − βS where Λ(β) = 0.
pub fn profile_likelihood(ns: &NormalizedSample, beta: f64) -> Result<f64> {
    Ok(match ln_lambda_profile(ns, beta)? {
        Some(l) => objective_ln(ns, l, beta),
        None => ns.len() as f64 * beta.ln() - beta * ns.sum_logs,
    })
}

fn master_at(ns: &NormalizedSample, beta: f64, ln_lambda: Option<f64>) -> f64 {
    let n = ns.len() as f64;
    let weighted: f64 = match ln_lambda {
        Some(l) => ns.logs.iter().map(|s| s * logistic(beta * s - l)).sum(),
        None => ns.sum_logs,
    };
    n / beta + ns.sum_logs - 2.0 * weighted
}

/// N/β + Σ s_i − 2 Σ s_i X_i^β / (Λ(β) + X_i^β), the β-equation along the
/// profile; equals dφ̃/dβ.
pub fn master_residual(ns: &NormalizedSample, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    if beta <= ns.beta_c {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            reason: "must exceed beta_c",
        });
    }
    Ok(master_at(ns, beta, ln_lambda_profile(ns, beta)?))
}

fn residual_or_nan(ns: &NormalizedSample, beta: f64) -> f64 {
    match ln_lambda_profile(ns, beta) {
        Ok(l) => master_at(ns, beta, l),
        Err(_) => f64::NAN,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    /// Evaluate the master residual on a grid over the final bracket and
    /// count its sign changes.
    pub scan: bool,
}

/// Interior maximum, reported in the original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularFit {
    pub lambda_hat: f64,
    pub ln_lambda_hat: f64,
    pub beta_hat: f64,
    pub alpha_hat: f64,
    pub loglik: f64,
    pub x_l: f64,
}

impl RegularFit {
    pub fn distribution(&self) -> TruncatedLogLogistic {
        // parameters come from a successful fit and are positive
        TruncatedLogLogistic::new(self.alpha_hat, self.beta_hat, self.x_l)
            .expect("fitted parameters are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitOutcome {
    Regular(RegularFit),
    /// λ̂ = 0: the likelihood is maximised by the Pareto density with
    /// shape β₀ above x_L.
    ParetoBoundary { beta0: f64, x_l: f64, loglik: f64 },
    /// All observations equal X₁; the profile likelihood increases without
    /// bound.
    NoFiniteMaximum { x1: f64 },
}

impl FitOutcome {
    pub fn name(&self) -> &'static str {
        match self {
            FitOutcome::Regular(_) => "regular",
            FitOutcome::ParetoBoundary { .. } => "pareto_boundary",
            FitOutcome::NoFiniteMaximum { .. } => "no_finite_maximum",
        }
    }

    pub fn regular(&self) -> Option<&RegularFit> {
        match self {
            FitOutcome::Regular(r) => Some(r),
            _ => None,
        }
    }

    pub fn pareto(&self) -> Option<ParetoTail> {
        match *self {
            FitOutcome::ParetoBoundary { beta0, x_l, .. } => ParetoTail::new(beta0, x_l).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub n: usize,
    pub x_l: f64,
    /// Normalised units; absent when untruncated.
    pub beta0: Option<f64>,
    /// Normalised units; zero when untruncated.
    pub beta_c: f64,
    /// x_L^β̂ / λ̂; zero when untruncated, absent for non-regular outcomes.
    pub eta_hat: Option<f64>,
    pub master_residual: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    /// Sign changes of the master residual on the scan grid, when requested.
    pub sign_changes: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub outcome: FitOutcome,
    pub diagnostics: FitDiagnostics,
}

pub fn fit(sample: &Sample) -> Result<FitResult> {
    fit_with(sample, &FitOptions::default())
}

pub fn fit_with(sample: &Sample, options: &FitOptions) -> Result<FitResult> {
    let ns = sample.normalize()?;
    let n = ns.len();
    let nf = n as f64;
    let mut diagnostics = FitDiagnostics {
        n,
        x_l: sample.x_l(),
        beta0: ns.beta0,
        beta_c: ns.beta_c,
        eta_hat: None,
        master_residual: None,
        bracket: None,
        sign_changes: None,
    };

    if ns.all_equal {
        return Ok(FitResult {
            outcome: FitOutcome::NoFiniteMaximum { x1: sample.values[0] },
            diagnostics,
        });
    }

    if let Some(beta0) = ns.beta0
        && beta0 <= ns.beta_c
    {
        // Σ ln g(X_i | β₀) in original units
        let loglik = nf * beta0.ln() - nf * ns.ln_scale - (1.0 + beta0) * ns.sum_logs;
        return Ok(FitResult {
            outcome: FitOutcome::ParetoBoundary {
                beta0,
                x_l: sample.x_l(),
                loglik,
            },
            diagnostics,
        });
    }

    let (lo, r_lo, hi, r_hi) = bracket_master(&ns)?;
    diagnostics.bracket = Some((lo, hi));
    let beta_hat = brent(|b| residual_or_nan(&ns, b), lo, hi, r_lo, r_hi, Tolerance::default())?;
    let ln_lambda = ln_lambda_profile(&ns, beta_hat)?.ok_or_else(|| {
        Error::Convergence(format!("profile collapsed to the boundary at beta = {beta_hat}"))
    })?;
    let residual = master_at(&ns, beta_hat, Some(ln_lambda));
    if !(residual.abs() <= RESIDUAL_TOL * nf) {
        return Err(Error::Convergence(format!(
            "master residual {residual} at beta = {beta_hat} exceeds tolerance"
        )));
    }
    diagnostics.master_residual = Some(residual);
    diagnostics.eta_hat = Some(if ns.truncated { (-ln_lambda).exp() } else { 0.0 });
    if options.scan {
        diagnostics.sign_changes = Some(count_sign_changes(&ns, lo, hi));
    }

    let ln_lambda_hat = ln_lambda + beta_hat * ns.ln_scale;
    let loglik = objective_ln(&ns, ln_lambda, beta_hat) - ns.sum_logs - nf * ns.ln_scale;
    Ok(FitResult {
        outcome: FitOutcome::Regular(RegularFit {
            lambda_hat: ln_lambda_hat.exp(),
            ln_lambda_hat,
            beta_hat,
            alpha_hat: (ns.ln_scale + ln_lambda / beta_hat).exp(),
            loglik,
            x_l: sample.x_l(),
        }),
        diagnostics,
    })
}

/// Finds β_lo < β_hi with master residual positive at β_lo and negative
/// at β_hi. Truncated: β_lo starts just above β_C. Untruncated: both ends
/// start from 1/sd(s) and move outwards geometrically.
fn bracket_master(ns: &NormalizedSample) -> Result<(f64, f64, f64, f64)> {
    let r = |b: f64| residual_or_nan(ns, b);
    let (mut lo, mut r_lo);
    if ns.truncated {
        let mut eps = 1e-6;
        loop {
            lo = ns.beta_c * (1.0 + eps);
            r_lo = r(lo);
            if r_lo > 0.0 || eps < 1e-15 {
                break;
            }
            eps *= 1e-3;
        }
        if !(r_lo > 0.0) {
            return Err(Error::Convergence(format!(
                "master residual not positive just above beta_c = {}",
                ns.beta_c
            )));
        }
    } else {
        let n = ns.len() as f64;
        let var = ns.logs.iter().map(|s| s * s).sum::<f64>() / n;
        lo = 1.0 / var.sqrt();
        r_lo = r(lo);
        let mut doublings = 0;
        while !(r_lo > 0.0) {
            if doublings == MAX_DOUBLINGS {
                return Err(Error::Convergence(
                    "no positive master residual found for small beta".into(),
                ));
            }
            lo *= 0.5;
            r_lo = r(lo);
            doublings += 1;
        }
    }

    let mut hi = 2.0 * lo;
    let mut r_hi = r(hi);
    for _ in 0..MAX_DOUBLINGS {
        if r_hi <= 0.0 {
            return Ok((lo, r_lo, hi, r_hi));
        }
        if r_hi.is_nan() {
            break;
        }
        lo = hi;
        r_lo = r_hi;
        hi *= 2.0;
        r_hi = r(hi);
    }
    Err(Error::Convergence(format!(
        "master residual kept its sign up to beta = {hi}"
    )))
}

/// Sign changes of the master residual over [`SCAN_POINTS`] equally spaced
/// points spanning `[lo, hi]`.
pub fn count_sign_changes(ns: &NormalizedSample, lo: f64, hi: f64) -> usize {
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut changes = 0;
    let mut prev: Option<f64> = None;
    for i in 0..SCAN_POINTS {
        let v = residual_or_nan(ns, lo + step * i as f64);
        if v == 0.0 || v.is_nan() {
            continue;
        }
        if let Some(p) = prev
            && p.signum() != v.signum()
        {
            changes += 1;
        }
        prev = Some(v);
    }
    changes
}
