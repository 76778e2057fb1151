//! Data ingestion and report formatting behind the `lltrunc` binary.

use std::fmt::Write as _;
use std::path::Path;

use lltrunc::estimation::{FitOutcome, FitResult, Sample, fit};
use lltrunc::gof::{CriticalTables, GofReport, Level, TestKind, run_gof_with};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}, line {line}: cannot parse '{text}' as a number")]
    Parse {
        path: String,
        line: usize,
        text: String,
    },
    #[error("{path}: no observations above x_L = {x_l} ({dropped} dropped)")]
    EmptyAfterTruncation {
        path: String,
        x_l: f64,
        dropped: usize,
    },
    #[error("{path}: need at least 2 observations above x_L = {x_l}, got {n}")]
    TooFew { path: String, x_l: f64, n: usize },
    #[error("missing required option {0}")]
    Missing(&'static str),
    #[error(transparent)]
    Core(#[from] lltrunc::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses newline-separated decimals. Blank lines and `#` comments are
/// skipped; a single non-numeric first line is taken as a column header.
pub fn parse_values(text: &str, path: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_end_matches(',').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.trim_matches('"');
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if !seen_content => {}
            _ => {
                return Err(CliError::Parse {
                    path: path.to_string(),
                    line: idx + 1,
                    text: raw.to_string(),
                });
            }
        }
        seen_content = true;
    }
    Ok(values)
}

/// A sample after the truncation filter.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub sample: Sample,
    /// Values at or below x_L that were removed.
    pub dropped: usize,
}

/// Keeps the values strictly above `x_l`.
pub fn truncate(values: &[f64], x_l: f64, path: &str) -> Result<Ingested> {
    let kept: Vec<f64> = values.iter().copied().filter(|&v| v > x_l).collect();
    let dropped = values.len() - kept.len();
    match kept.len() {
        0 => Err(CliError::EmptyAfterTruncation {
            path: path.to_string(),
            x_l,
            dropped,
        }),
        1 => Err(CliError::TooFew {
            path: path.to_string(),
            x_l,
            n: 1,
        }),
        _ => Ok(Ingested {
            sample: Sample::new(kept, x_l)?,
            dropped,
        }),
    }
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    parse_values(&text, &name)
}

pub fn ingest(path: &Path, x_l: f64) -> Result<Ingested> {
    let values = read_values(path)?;
    truncate(&values, x_l, &path.display().to_string())
}

/// One row of a fit or goodness-of-fit report.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub x_l: f64,
    pub n: usize,
    pub dropped: usize,
    pub fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gof: Option<GofReport>,
}

impl ReportRow {
    /// Fits the sample and, when `tables` is given and the fit is regular,
    /// runs the goodness-of-fit tests.
    pub fn build(ing: &Ingested, tables: Option<&CriticalTables>) -> Result<Self> {
        let fit = fit(&ing.sample)?;
        let gof = match (tables, fit.outcome.regular()) {
            (Some(t), Some(_)) => Some(run_gof_with(&ing.sample, &fit, t)?),
            _ => None,
        };
        Ok(Self {
            x_l: ing.sample.x_l(),
            n: ing.sample.len(),
            dropped: ing.dropped,
            fit,
            gof,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

/// `sig` significant digits, without exponent for ordinary magnitudes.
pub fn sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn mark(pass: bool) -> &'static str {
    if pass { "✓" } else { "✗" }
}

fn outcome_note(fit: &FitResult) -> Option<String> {
    match fit.outcome {
        FitOutcome::Regular(_) => None,
        FitOutcome::ParetoBoundary { beta0, x_l, loglik } => Some(format!(
            "boundary / Pareto limit: beta0 = {beta0:.6} <= beta_C = {:.6} in units of x_L; \
             no interior maximum exists and the likelihood is maximised by the Pareto density \
             g(x) = (beta0/x_L)(x/x_L)^-(1+beta0) above x_L = {x_l} (ln L = {loglik:.2})",
            fit.diagnostics.beta_c
        )),
        FitOutcome::NoFiniteMaximum { x1 } => Some(format!(
            "no finite maximum: every observation equals X1 = {x1}; the profile likelihood \
             increases without bound in beta, so no maximum likelihood estimate exists"
        )),
    }
}

pub fn render(rows: &[ReportRow], levels: &[Level], format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => render_table(rows, levels),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).expect("report rows serialize");
            s.push('\n');
            s
        }
        OutputFormat::Csv => render_csv(rows, levels),
    }
}

fn render_table(rows: &[ReportRow], levels: &[Level]) -> String {
    let with_gof = rows.iter().any(|r| r.gof.is_some());
    let mut out = String::new();
    let mut header = format!(
        "{:>8} {:>6} {:>10} {:>8} {:>10}",
        "x_L", "N", "alpha", "beta", "ln L"
    );
    if with_gof {
        header += &format!(" {:>8} {:>8}", "KS", "AD");
        for l in levels {
            header += &format!(" {:>6} {:>6}", format!("KS{}", l.percent()), format!("AD{}", l.percent()));
        }
    }
    out.push_str(header.trim_end());
    out.push('\n');
    let mut notes = Vec::new();
    for row in rows {
        let mut line = format!("{:>8} {:>6}", row.x_l, row.n);
        match &row.fit.outcome {
            FitOutcome::Regular(r) => {
                line += &format!(
                    " {:>10} {:>8} {:>10.2}",
                    sig(r.alpha_hat, 4),
                    sig(r.beta_hat, 4),
                    r.loglik
                );
            }
            FitOutcome::ParetoBoundary { beta0, loglik, .. } => {
                line += &format!(" {:>10} {:>8} {:>10.2}", "Pareto", sig(*beta0, 4), loglik);
            }
            FitOutcome::NoFiniteMaximum { .. } => {
                line += &format!(" {:>10} {:>8} {:>10}", "-", "-", "-");
            }
        }
        if let Some(g) = &row.gof {
            line += &format!(" {:>8.4} {:>8.4}", g.statistics.ks_scaled, g.statistics.ad);
            for &l in levels {
                for t in TestKind::ALL {
                    let d = g.decision(t, l).expect("all decisions present");
                    line += &format!(" {:>6}", mark(d.pass_interpolated));
                }
            }
        } else if with_gof {
            line += &format!(" {:>8} {:>8}", "n/a", "n/a");
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if let Some(n) = outcome_note(&row.fit) {
            notes.push(format!("x_L = {}: {n}", row.x_l));
        }
    }
    if with_gof {
        out.push_str("pass marks use the interpolated critical values; json output also carries the tabulated ones\n");
    }
    for n in notes {
        out.push_str(&n);
        out.push('\n');
    }
    out
}

fn render_csv(rows: &[ReportRow], levels: &[Level]) -> String {
    let mut out = String::from("x_l,n,dropped,outcome,alpha_hat,beta_hat,lambda_hat,loglik,beta0,beta_c,eta_hat,ks,ad");
    for l in levels {
        for t in TestKind::ALL {
            let _ = write!(out, ",{t}{p}_critical,{t}{p}_pass", p = l.percent());
        }
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        let d = &row.fit.diagnostics;
        let (alpha, beta, lambda, loglik) = match row.fit.outcome {
            FitOutcome::Regular(r) => (Some(r.alpha_hat), Some(r.beta_hat), Some(r.lambda_hat), Some(r.loglik)),
            FitOutcome::ParetoBoundary { beta0, loglik, .. } => (None, Some(beta0), Some(0.0), Some(loglik)),
            FitOutcome::NoFiniteMaximum { .. } => (None, None, None, None),
        };
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.x_l,
            row.n,
            row.dropped,
            row.fit.outcome.name(),
            opt(alpha),
            opt(beta),
            opt(lambda),
            opt(loglik),
            opt(d.beta0),
            d.beta_c,
            opt(d.eta_hat),
            opt(row.gof.as_ref().map(|g| g.statistics.ks_scaled)),
            opt(row.gof.as_ref().map(|g| g.statistics.ad)),
        );
        for &l in levels {
            for t in TestKind::ALL {
                match row.gof.as_ref().and_then(|g| g.decision(t, l)) {
                    Some(dec) => {
                        let _ = write!(out, ",{},{}", dec.critical_interpolated, dec.pass_interpolated);
                    }
                    None => out.push_str(",,"),
                }
            }
        }
        out.push('\n');
    }
    out
}
