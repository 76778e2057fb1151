//! The left-truncated log-logistic family and its Pareto limit.
//!
//! Every power `x^β` is evaluated through `z = β (ln x − ln α)` so that
//! shapes in the hundreds and arguments many decades away from the scale
//! never overflow. `x_l = 0` is the untruncated distribution.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, logistic, softplus};
use crate::rng;

/// LL(α, β; x_L): log-logistic with scale `alpha` and shape `beta`,
/// conditioned on `X > x_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedLogLogistic {
    alpha: f64,
    beta: f64,
    x_l: f64,
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

impl TruncatedLogLogistic {
    pub fn new(alpha: f64, beta: f64, x_l: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        if !(x_l.is_finite() && x_l >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "x_l",
                value: x_l,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { alpha, beta, x_l })
    }

    /// Builds the distribution from `ln λ = β ln α`.
    pub fn from_ln_lambda(ln_lambda: f64, beta: f64, x_l: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        if !ln_lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "ln_lambda",
                value: ln_lambda,
                reason: "must be finite",
            });
        }
        Self::new((ln_lambda / beta).exp(), beta, x_l)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn x_l(&self) -> f64 {
        self.x_l
    }

    pub fn is_truncated(&self) -> bool {
        self.x_l > 0.0
    }

    pub fn ln_lambda(&self) -> f64 {
        self.beta * self.alpha.ln()
    }

    /// λ = α^β. May overflow to infinity for extreme parameters; use
    /// [`ln_lambda`](Self::ln_lambda) when that matters.
    pub fn lambda(&self) -> f64 {
        self.ln_lambda().exp()
    }

    /// ln η = β (ln x_L − ln α), `-inf` when untruncated.
    pub fn ln_eta(&self) -> f64 {
        self.z(self.x_l)
    }

    /// η = (x_L/α)^β
    pub fn eta(&self) -> f64 {
        self.ln_eta().exp()
    }

    /// Probability mass removed by the truncation, F(x_L) = η/(1+η).
    pub fn truncation_fraction(&self) -> f64 {
        logistic(self.ln_eta())
    }

    #[inline]
    fn z(&self, x: f64) -> f64 {
        if x == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.beta * (x.ln() - self.alpha.ln())
        }
    }

    fn check_support(&self, x: f64, closed: bool) -> Result<()> {
        let inside = if closed { x >= self.x_l } else { x > self.x_l };
        if inside && x.is_finite() && (closed || x > 0.0) {
            Ok(())
        } else {
            Err(Error::Domain {
                name: "x",
                value: x,
                reason: if closed {
                    "must be at least the truncation point"
                } else {
                    "must exceed the truncation point"
                },
            })
        }
    }

    /// ln f_LT(x)
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        self.check_support(x, false)?;
        let z = self.z(x);
        Ok(softplus(self.ln_eta()) + self.beta.ln() - x.ln() + z - 2.0 * softplus(z))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check_support(x, true)?;
        let z = self.z(x);
        Ok(-f64::exp_m1(self.ln_eta() - z) * logistic(z))
    }

    /// 1 − F_LT(x) = (1 + η) / (1 + (x/α)^β), accurate deep in the tail.
    pub fn sf(&self, x: f64) -> Result<f64> {
        self.check_support(x, true)?;
        Ok((softplus(self.ln_eta()) - softplus(self.z(x))).exp())
    }

    /// Inverse distribution function on `[0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain {
                name: "u",
                value: u,
                reason: "must lie in [0, 1)",
            });
        }
        if u == 0.0 {
            return Ok(self.x_l);
        }
        let ln_ratio = log_add_exp(u.ln(), self.ln_eta()) - (-u).ln_1p();
        Ok((self.alpha.ln() + ln_ratio / self.beta).exp())
    }

    /// `n` draws by inverse transform from the stream seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        let mut stream = rng::stream(seed);
        Ok(self.sample_from(&mut stream, n))
    }

    /// Draws `n` values from an existing generator. A uniform that would
    /// round onto the truncation point is redrawn, so every value is
    /// strictly above `x_l`.
    pub fn sample_from<R: RngCore>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| loop {
                let u = rng::uniform_open01(rng);
                // u in (0, 1) so quantile cannot fail
                let x = self.quantile(u).unwrap_or(f64::NAN);
                if x > self.x_l && x.is_finite() {
                    break x;
                }
            })
            .collect()
    }

    /// Distribution of `kX`: (kα, β; k x_L).
    pub fn rescale(&self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Domain {
                name: "k",
                value: k,
                reason: "scale factor must be positive",
            });
        }
        Self::new(k * self.alpha, self.beta, k * self.x_l)
    }
}

/// Pareto density β₀/x_L · (x/x_L)^−(1+β₀) on (x_L, ∞), the limit of the
/// truncated log-logistic as α → 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoTail {
    beta0: f64,
    x_l: f64,
}

impl ParetoTail {
    pub fn new(beta0: f64, x_l: f64) -> Result<Self> {
        check_positive("beta0", beta0)?;
        check_positive("x_l", x_l)?;
        Ok(Self { beta0, x_l })
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn x_l(&self) -> f64 {
        self.x_l
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        if !(x > self.x_l && x.is_finite()) {
            return Err(Error::Domain {
                name: "x",
                value: x,
                reason: "must exceed the truncation point",
            });
        }
        Ok(self.beta0.ln() - self.x_l.ln() - (1.0 + self.beta0) * (x / self.x_l).ln())
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.ln_pdf(x).map(f64::exp)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x >= self.x_l && x.is_finite()) {
            return Err(Error::Domain {
                name: "x",
                value: x,
                reason: "must be at least the truncation point",
            });
        }
        Ok(-f64::exp_m1(-self.beta0 * (x / self.x_l).ln()))
    }
}
