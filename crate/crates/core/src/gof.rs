//! Kolmogorov-Smirnov and Anderson-Darling tests for a fitted
//! left-truncated log-logistic model.
//!
//! Because the parameters are estimated from the same sample, the null
//! distribution of both statistics depends on the sample size and on the
//! truncation fraction p = η/(1+η). Critical values come from two sources:
//! the closed-form interpolation in (η, N) with the embedded coefficient
//! rows ([`critical_interpolated`]), and the embedded Monte Carlo grid
//! ([`CriticalTables`]).
//!
//! # Table format
//!
//! Plain UTF-8 text, one record per line:
//!
//! ```text
//! # format: lltrunc-critical-values/1
//! # master_seed: 20240101
//! # reps: 100000
//! KS 95 0 30 0.7661 0.0006
//! ```
//!
//! Lines starting with `#` are comments; a comment of the form
//! `# key: value` is kept as provenance metadata. Records carry six
//! whitespace-separated fields: test (`KS` or `AD`), level in percent
//! (85, 90, 95, 99), truncation fraction p, sample size N, quantile and
//! its standard error. Numbers use `.` as the decimal separator.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::distribution::TruncatedLogLogistic;
use crate::error::{Error, Result};
use crate::estimation::{FitResult, Sample};

const EMBEDDED_TABLES: &str = include_str!("../data/critical_values.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TestKind {
    #[serde(rename = "KS")]
    Ks,
    #[serde(rename = "AD")]
    Ad,
}

impl TestKind {
    pub const ALL: [TestKind; 2] = [TestKind::Ks, TestKind::Ad];
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Ks => "KS",
            TestKind::Ad => "AD",
        })
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "KS" => Ok(TestKind::Ks),
            "AD" => Ok(TestKind::Ad),
            _ => Err(Error::Unknown {
                kind: "test",
                value: s.to_string(),
            }),
        }
    }
}

/// Confidence level of a test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u32", try_from = "u32")]
pub enum Level {
    P85,
    P90,
    P95,
    P99,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::P85, Level::P90, Level::P95, Level::P99];

    pub fn percent(self) -> u32 {
        match self {
            Level::P85 => 85,
            Level::P90 => 90,
            Level::P95 => 95,
            Level::P99 => 99,
        }
    }

    /// The quantile probability, e.g. 0.95.
    pub fn probability(self) -> f64 {
        self.percent() as f64 / 100.0
    }

    pub fn from_percent(p: u32) -> Result<Self> {
        match p {
            85 => Ok(Level::P85),
            90 => Ok(Level::P90),
            95 => Ok(Level::P95),
            99 => Ok(Level::P99),
            _ => Err(Error::Unknown {
                kind: "confidence level",
                value: p.to_string(),
            }),
        }
    }
}

impl From<Level> for u32 {
    fn from(l: Level) -> u32 {
        l.percent()
    }
}

impl TryFrom<u32> for Level {
    type Error = Error;

    fn try_from(p: u32) -> Result<Self> {
        Level::from_percent(p)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent())
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_end_matches('%');
        t.parse::<u32>()
            .map_err(|_| Error::Unknown {
                kind: "confidence level",
                value: s.to_string(),
            })
            .and_then(Level::from_percent)
    }
}

/// One coefficient row θ₁…θ₉ of the critical-value interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaCoefficients {
    pub test: TestKind,
    pub level: Level,
    pub theta: [f64; 9],
}

pub const THETA: [ThetaCoefficients; 8] = [
    ThetaCoefficients {
        test: TestKind::Ad,
        level: Level::P85,
        theta: [0.5644, -0.0026, 0.1307, 0.0406, 0.2612, -0.0432, 0.0001, 0.0350, -0.1715],
    },
    ThetaCoefficients {
        test: TestKind::Ad,
        level: Level::P90,
        theta: [0.6390, -0.0005, 0.1540, 0.0361, 0.2750, -0.0497, 0.0000, 0.0398, -0.2066],
    },
    ThetaCoefficients {
        test: TestKind::Ad,
        level: Level::P95,
        theta: [0.7669, -0.0189, 0.1927, 0.0094, 0.2914, -0.0641, 0.0001, 0.0494, -0.2364],
    },
    ThetaCoefficients {
        test: TestKind::Ad,
        level: Level::P99,
        theta: [1.0714, -0.0589, 0.2933, 0.0301, 0.3272, -0.0943, 0.0002, 0.0598, -0.1787],
    },
    ThetaCoefficients {
        test: TestKind::Ks,
        level: Level::P85,
        theta: [0.7421, -0.0492, 0.1565, -0.0517, 0.2210, -0.0238, 0.0000, 0.1492, -0.2115],
    },
    ThetaCoefficients {
        test: TestKind::Ks,
        level: Level::P90,
        theta: [0.7821, -0.0818, 0.1742, -0.0917, 0.2336, -0.0298, 0.0001, 0.1500, -0.2723],
    },
    ThetaCoefficients {
        test: TestKind::Ks,
        level: Level::P95,
        theta: [0.8443, -0.1204, 0.1987, -0.1318, 0.2470, -0.0298, 0.0001, 0.1417, -0.3753],
    },
    ThetaCoefficients {
        test: TestKind::Ks,
        level: Level::P99,
        theta: [0.9711, -0.1729, 0.2672, -0.1687, 0.2895, -0.0392, 0.0001, 0.1416, -0.5325],
    },
];

pub fn theta(test: TestKind, level: Level) -> &'static ThetaCoefficients {
    THETA
        .iter()
        .find(|t| t.test == test && t.level == level)
        .expect("every test and level has a coefficient row")
}

/// Critical value from the interpolation formula
///
/// ```text
/// (θ₁η + θ₂√η + θ₃) / (θ₄√η + θ₅ + η) + θ₆√(η/N) + θ₇η^{3/2} + θ₈/√N + θ₉/N
/// ```
pub fn critical_interpolated(test: TestKind, level: Level, eta: f64, n: usize) -> Result<f64> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            reason: "must be finite and non-negative",
        });
    }
    if n < 2 {
        return Err(Error::TooFewObservations { n, min: 2 });
    }
    let t = &theta(test, level).theta;
    let nf = n as f64;
    let r = eta.sqrt();
    Ok((t[0] * eta + t[1] * r + t[2]) / (t[3] * r + t[4] + eta)
        + t[5] * (eta / nf).sqrt()
        + t[6] * eta * r
        + t[7] / nf.sqrt()
        + t[8] / nf)
}

/// √N · D with D the two-sided Kolmogorov-Smirnov distance
/// max_i max{ i/N − F(X_(i)), F(X_(i)) − (i−1)/N }.
pub fn ks_statistic(sample: &Sample, fitted: &TruncatedLogLogistic) -> Result<f64> {
    check_truncation(sample, fitted)?;
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.values().iter().enumerate() {
        let f = fitted.cdf(x)?;
        let i = i as f64;
        d = d.max((i + 1.0) / n - f).max(f - i / n);
    }
    Ok(n.sqrt() * d)
}

/// Lower clamp for F(X_i) in the Anderson-Darling sum.
pub const AD_CDF_FLOOR: f64 = 1e-300;
/// Lower clamp for 1 − F(X_i).
pub const AD_SF_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    pub value: f64,
    /// Set when some F(X_i) was 0 or 1 to working precision and had to be
    /// clamped into [1e−300, 1 − 1e−16].
    pub clamped: bool,
}

/// A² = −N − (1/N) Σ (2i−1) [ln F(X_(i)) + ln(1 − F(X_(N−i+1)))].
pub fn ad_statistic(sample: &Sample, fitted: &TruncatedLogLogistic) -> Result<AndersonDarling> {
    check_truncation(sample, fitted)?;
    let values = sample.values();
    let n = values.len();
    let mut clamped = false;
    let mut ln_cdf = Vec::with_capacity(n);
    let mut ln_sf = Vec::with_capacity(n);
    for &x in values {
        let mut f = fitted.cdf(x)?;
        let mut s = fitted.sf(x)?;
        if f < AD_CDF_FLOOR {
            f = AD_CDF_FLOOR;
            clamped = true;
        }
        if s < AD_SF_FLOOR {
            s = AD_SF_FLOOR;
            clamped = true;
        }
        ln_cdf.push(f.ln());
        ln_sf.push(s.ln());
    }
    let total: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (ln_cdf[i] + ln_sf[n - 1 - i]))
        .sum();
    let nf = n as f64;
    Ok(AndersonDarling {
        value: -nf - total / nf,
        clamped,
    })
}

fn check_truncation(sample: &Sample, fitted: &TruncatedLogLogistic) -> Result<()> {
    let (a, b) = (sample.x_l(), fitted.x_l());
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(Error::TruncationMismatch {
            sample: a,
            fitted: b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofStatistics {
    /// √N · D
    pub ks_scaled: f64,
    /// A²
    pub ad: f64,
    pub n: usize,
    pub ad_clamped: bool,
}

impl GofStatistics {
    pub fn compute(sample: &Sample, fitted: &TruncatedLogLogistic) -> Result<Self> {
        let ad = ad_statistic(sample, fitted)?;
        Ok(Self {
            ks_scaled: ks_statistic(sample, fitted)?,
            ad: ad.value,
            n: sample.len(),
            ad_clamped: ad.clamped,
        })
    }

    pub fn get(&self, test: TestKind) -> f64 {
        match test {
            TestKind::Ks => self.ks_scaled,
            TestKind::Ad => self.ad,
        }
    }
}

/// Truncation fraction p = η/(1+η).
pub fn truncation_fraction(eta: f64) -> f64 {
    eta / (1.0 + eta)
}

fn sqrt_eta_of(p: f64) -> f64 {
    (p / (1.0 - p)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEntry {
    pub quantile: f64,
    pub std_err: f64,
}

/// Monte Carlo quantiles of one test at one level over a (p, N) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalValueTable {
    pub test: TestKind,
    pub level: Level,
    ps: Vec<f64>,
    ns: Vec<usize>,
    cells: BTreeMap<(usize, usize), CriticalEntry>,
}

/// Grid points closer than this in p are the same row.
const P_MATCH: f64 = 1e-9;

impl CriticalValueTable {
    pub fn new(test: TestKind, level: Level) -> Self {
        Self {
            test,
            level,
            ps: Vec::new(),
            ns: Vec::new(),
            cells: BTreeMap::new(),
        }
    }

    fn p_index(&self, p: f64) -> Option<usize> {
        self.ps.iter().position(|&q| (q - p).abs() <= P_MATCH)
    }

    /// Inserts or replaces a cell.
    pub fn insert(&mut self, p: f64, n: usize, entry: CriticalEntry) {
        let pi = match self.p_index(p) {
            Some(i) => i,
            None => {
                let at = self.ps.partition_point(|&q| q < p);
                self.ps.insert(at, p);
                self.cells = std::mem::take(&mut self.cells)
                    .into_iter()
                    .map(|((i, j), e)| ((if i >= at { i + 1 } else { i }, j), e))
                    .collect();
                at
            }
        };
        let ni = match self.ns.binary_search(&n) {
            Ok(i) => i,
            Err(at) => {
                self.ns.insert(at, n);
                self.cells = std::mem::take(&mut self.cells)
                    .into_iter()
                    .map(|((i, j), e)| ((i, if j >= at { j + 1 } else { j }), e))
                    .collect();
                at
            }
        };
        self.cells.insert((pi, ni), entry);
    }

    pub fn ps(&self) -> &[f64] {
        &self.ps
    }

    pub fn ns(&self) -> &[usize] {
        &self.ns
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Iterates `(p, n, entry)` in grid order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, usize, CriticalEntry)> + '_ {
        self.cells
            .iter()
            .map(|(&(i, j), &e)| (self.ps[i], self.ns[j], e))
    }

    /// The tabulated entry at an exact grid point.
    pub fn entry(&self, p: f64, n: usize) -> Option<CriticalEntry> {
        let i = self.p_index(p)?;
        let j = self.ns.binary_search(&n).ok()?;
        self.cells.get(&(i, j)).copied()
    }

    /// Exact grid hits return the tabulated quantile; other points inside
    /// the grid are interpolated bilinearly in (√η, ln N). Points outside
    /// the grid, or whose surrounding cells are missing, give `None`.
    pub fn lookup(&self, p: f64, n: usize) -> Option<f64> {
        if !(p.is_finite() && (0.0..1.0).contains(&p)) || n == 0 {
            return None;
        }
        if let Some(e) = self.entry(p, n) {
            return Some(e.quantile);
        }
        let (p_first, p_last) = (*self.ps.first()?, *self.ps.last()?);
        let (n_first, n_last) = (*self.ns.first()?, *self.ns.last()?);
        if p < p_first - P_MATCH || p > p_last + P_MATCH || n < n_first || n > n_last {
            return None;
        }

        let (i0, i1, tx) = match self.p_index(p) {
            Some(i) => (i, i, 0.0),
            None => {
                let i1 = self.ps.partition_point(|&q| q < p);
                let i0 = i1 - 1;
                let (x0, x1) = (sqrt_eta_of(self.ps[i0]), sqrt_eta_of(self.ps[i1]));
                (i0, i1, (sqrt_eta_of(p) - x0) / (x1 - x0))
            }
        };
        let (j0, j1, ty) = match self.ns.binary_search(&n) {
            Ok(j) => (j, j, 0.0),
            Err(j1) => {
                let j0 = j1 - 1;
                let (y0, y1) = ((self.ns[j0] as f64).ln(), (self.ns[j1] as f64).ln());
                (j0, j1, ((n as f64).ln() - y0) / (y1 - y0))
            }
        };
        let q = |i, j| self.cells.get(&(i, j)).map(|e| e.quantile);
        let (q00, q10, q01, q11) = (q(i0, j0)?, q(i1, j0)?, q(i0, j1)?, q(i1, j1)?);
        Some(
            q00 * (1.0 - tx) * (1.0 - ty)
                + q10 * tx * (1.0 - ty)
                + q01 * (1.0 - tx) * ty
                + q11 * tx * ty,
        )
    }
}

/// A full set of critical-value tables with provenance metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalTables {
    pub metadata: Vec<(String, String)>,
    tables: BTreeMap<(TestKind, Level), CriticalValueTable>,
}

impl CriticalTables {
    /// The tables shipped with the crate.
    pub fn embedded() -> &'static CriticalTables {
        static TABLES: OnceLock<CriticalTables> = OnceLock::new();
        TABLES.get_or_init(|| {
            CriticalTables::parse(EMBEDDED_TABLES).expect("embedded critical value table is valid")
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = CriticalTables::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once(':') {
                    out.metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::TableFormat {
                    line,
                    msg: format!("expected 6 fields, found {}", fields.len()),
                });
            }
            let bad = |what: &str, s: &str| Error::TableFormat {
                line,
                msg: format!("bad {what} '{s}'"),
            };
            let test: TestKind = fields[0].parse().map_err(|_| bad("test", fields[0]))?;
            let level: Level = fields[1].parse().map_err(|_| bad("level", fields[1]))?;
            let p: f64 = fields[2].parse().map_err(|_| bad("p", fields[2]))?;
            let n: usize = fields[3].parse().map_err(|_| bad("n", fields[3]))?;
            let quantile: f64 = fields[4].parse().map_err(|_| bad("quantile", fields[4]))?;
            let std_err: f64 = fields[5].parse().map_err(|_| bad("std_err", fields[5]))?;
            if !(0.0..1.0).contains(&p) {
                return Err(bad("p", fields[2]));
            }
            out.insert(test, level, p, n, CriticalEntry { quantile, std_err });
        }
        Ok(out)
    }

    pub fn insert(&mut self, test: TestKind, level: Level, p: f64, n: usize, entry: CriticalEntry) {
        self.tables
            .entry((test, level))
            .or_insert_with(|| CriticalValueTable::new(test, level))
            .insert(p, n, entry);
    }

    pub fn get(&self, test: TestKind, level: Level) -> Option<&CriticalValueTable> {
        self.tables.get(&(test, level))
    }

    pub fn tables(&self) -> impl Iterator<Item = &CriticalValueTable> {
        self.tables.values()
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn lookup(&self, test: TestKind, level: Level, p: f64, n: usize) -> Option<f64> {
        self.get(test, level)?.lookup(p, n)
    }
}

impl fmt::Display for CriticalTables {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.metadata {
            writeln!(f, "# {k}: {v}")?;
        }
        for table in self.tables.values() {
            for (p, n, e) in table.entries() {
                writeln!(
                    f,
                    "{} {} {} {} {} {}",
                    table.test,
                    table.level.percent(),
                    p,
                    n,
                    e.quantile,
                    e.std_err
                )?;
            }
        }
        Ok(())
    }
}

/// Critical value from the embedded Monte Carlo tables.
pub fn critical_table(test: TestKind, level: Level, p: f64, n: usize) -> Option<f64> {
    CriticalTables::embedded().lookup(test, level, p, n)
}

/// Outcome of one test at one confidence level. A test passes when the
/// statistic is strictly below the critical value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub test: TestKind,
    pub level: Level,
    pub statistic: f64,
    pub critical_interpolated: f64,
    pub critical_table: Option<f64>,
    pub pass_interpolated: bool,
    pub pass_table: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub statistics: GofStatistics,
    pub eta_hat: f64,
    pub decisions: Vec<Decision>,
}

impl GofReport {
    pub fn decision(&self, test: TestKind, level: Level) -> Option<&Decision> {
        self.decisions
            .iter()
            .find(|d| d.test == test && d.level == level)
    }
}

/// Both statistics and all test/level decisions for a regular fit, using
/// the embedded tables.
pub fn run_gof(sample: &Sample, fit: &FitResult) -> Result<GofReport> {
    run_gof_with(sample, fit, CriticalTables::embedded())
}

pub fn run_gof_with(sample: &Sample, fit: &FitResult, tables: &CriticalTables) -> Result<GofReport> {
    let regular = fit
        .outcome
        .regular()
        .ok_or(Error::UnsupportedOutcome(fit.outcome.name()))?;
    let dist = regular.distribution();
    let statistics = GofStatistics::compute(sample, &dist)?;
    let eta_hat = fit.diagnostics.eta_hat.unwrap_or(0.0);
    let p_hat = truncation_fraction(eta_hat);
    let n = sample.len();

    let mut decisions = Vec::with_capacity(8);
    for test in TestKind::ALL {
        let statistic = statistics.get(test);
        for level in Level::ALL {
            let critical_interpolated = critical_interpolated(test, level, eta_hat, n)?;
            let critical_table = tables.lookup(test, level, p_hat, n);
            decisions.push(Decision {
                test,
                level,
                statistic,
                critical_interpolated,
                critical_table,
                pass_interpolated: statistic < critical_interpolated,
                pass_table: critical_table.map(|c| statistic < c),
            });
        }
    }
    Ok(GofReport {
        statistics,
        eta_hat,
        decisions,
    })
}
