use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentKind, Format, TrialRecord, TypeGridRow};
use crate::error::{Error, Result};
use crate::moduli::Measured;

/// Reports describe finite checks of the approximation bounds; denseness is a
/// statement about infinite spaces of metrics and is not what they show.
pub const DENSENESS_NOTE: &str = "finite-size checks of the constructive approximation bounds; \
these runs do not demonstrate denseness of any set of metrics";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub total: usize,
    pub passed: usize,
    pub all_pass: bool,
    pub note: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trials: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub type_grid: Vec<TypeGridRow>,
}

impl Report {
    pub fn from_trials(config: &ExperimentConfig, trials: Vec<TrialRecord>) -> Self {
        let passed = trials.iter().filter(|t| t.pass).count();
        Report {
            experiment: config.experiment,
            seed: config.seed,
            total: trials.len(),
            passed,
            all_pass: passed == trials.len(),
            note: DENSENESS_NOTE.into(),
            trials,
            type_grid: Vec::new(),
        }
    }

    pub fn from_grid(config: &ExperimentConfig, rows: Vec<TypeGridRow>) -> Self {
        let passed = rows.iter().filter(|r| r.pass).count();
        Report {
            experiment: config.experiment,
            seed: config.seed,
            total: rows.len(),
            passed,
            all_pass: passed == rows.len(),
            note: DENSENESS_NOTE.into(),
            trials: Vec::new(),
            type_grid: rows,
        }
    }
}

#[derive(Serialize)]
struct MeasuredColumns {
    doubling_constant: Option<f64>,
    delta_star: Option<f64>,
    c_star: Option<f64>,
    r_min: Option<f64>,
}

impl From<&Option<Measured>> for MeasuredColumns {
    fn from(m: &Option<Measured>) -> Self {
        MeasuredColumns {
            doubling_constant: m.as_ref().map(|m| m.doubling_constant),
            delta_star: m.as_ref().map(|m| m.delta_star),
            c_star: m.as_ref().map(|m| m.c_star),
            r_min: m.as_ref().map(|m| m.r_min),
        }
    }
}

#[derive(Serialize)]
struct TrialRow<'a> {
    trial: usize,
    seed: u64,
    digest: &'a str,
    epsilon: f64,
    achieved: f64,
    bound: f64,
    before_doubling: Option<f64>,
    before_delta_star: Option<f64>,
    before_c_star: Option<f64>,
    after_doubling: Option<f64>,
    after_delta_star: Option<f64>,
    after_c_star: Option<f64>,
    subset_checks: usize,
    pass: bool,
    error: &'a str,
}

#[derive(Serialize)]
struct GridRow<'a> {
    target: &'a str,
    recipe: String,
    digest: &'a str,
    before_type: &'a str,
    after_type: &'a str,
    before_doubling: Option<f64>,
    before_delta_star: Option<f64>,
    before_c_star: Option<f64>,
    after_doubling: Option<f64>,
    after_delta_star: Option<f64>,
    after_c_star: Option<f64>,
    epsilon: f64,
    achieved: f64,
    bound: f64,
    pass: bool,
    error: &'a str,
}

/// Writes the report as pretty JSON or as CSV (one row per trial or grid row).
pub fn write_report<W: Write>(report: &Report, format: Format, out: W) -> Result<()> {
    match format {
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let csv_err = |e: csv::Error| Error::Io(e.to_string());
            for t in &report.trials {
                let (b, a) = (
                    MeasuredColumns::from(&t.before),
                    MeasuredColumns::from(&t.after),
                );
                w.serialize(TrialRow {
                    trial: t.trial,
                    seed: t.seed,
                    digest: &t.digest,
                    epsilon: t.epsilon,
                    achieved: t.achieved,
                    bound: t.bound,
                    before_doubling: b.doubling_constant,
                    before_delta_star: b.delta_star,
                    before_c_star: b.c_star,
                    after_doubling: a.doubling_constant,
                    after_delta_star: a.delta_star,
                    after_c_star: a.c_star,
                    subset_checks: t.subset_checks,
                    pass: t.pass,
                    error: t.error.as_deref().unwrap_or(""),
                })
                .map_err(csv_err)?;
            }
            for r in &report.type_grid {
                let (b, a) = (
                    MeasuredColumns::from(&r.before),
                    MeasuredColumns::from(&r.after),
                );
                w.serialize(GridRow {
                    target: &r.target,
                    recipe: serde_json::to_value(r.recipe)?
                        .as_str()
                        .unwrap_or_default()
                        .to_string(),
                    digest: &r.digest,
                    before_type: r.before_type.as_deref().unwrap_or(""),
                    after_type: r.after_type.as_deref().unwrap_or(""),
                    before_doubling: b.doubling_constant,
                    before_delta_star: b.delta_star,
                    before_c_star: b.c_star,
                    after_doubling: a.doubling_constant,
                    after_delta_star: a.delta_star,
                    after_c_star: a.c_star,
                    epsilon: r.epsilon,
                    achieved: r.achieved,
                    bound: r.bound,
                    pass: r.pass,
                    error: r.error.as_deref().unwrap_or(""),
                })
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
