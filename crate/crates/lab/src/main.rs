use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use metric_dense::build::{
    amalgamate_metric, amalgamate_ultrametric, approximate_doubling, approximate_ud,
    approximate_ultrametric, approximate_up, sequence_below, ClopenPartition, SequentialPieces,
};
use metric_dense::cantor::{
    depth_for, exponential_sequence, generate_type, is_exponential_window, sequential_metric,
    up_obstructions, RangeSet, ShrinkingSequence,
};
use metric_dense::lab::{run, write_report, ExperimentConfig, Format};
use metric_dense::moduli::{moduli_report, Thresholds};
use metric_dense::space::{sup_distance, ultra_distance, validate, SpaceFile};
use metric_dense::{FiniteMetricSpace, Flavor};

/// Finite metric spaces: validation, moduli, amalgamation, approximation and
/// the seeded experiments.
#[derive(Parser)]
#[command(name = "metlab", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config for `experiment`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count (overrides the config for `experiment`).
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Metric,
    Ultrametric,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Property {
    Doubling,
    Ud,
    Up,
    Ultrametric,
}

#[derive(Subcommand)]
enum Command {
    /// Check the metric (or ultrametric) axioms of a space file.
    Validate {
        file: PathBuf,
        /// Relative tolerance for the triangle inequalities.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Check as this flavor instead of the one in the file.
        #[arg(long, value_enum)]
        flavor: Option<FlavorArg>,
    },
    /// Doubling constant, disconnectedness modulus, perfectness constant and
    /// the thresholded type.
    Moduli {
        file: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        /// Scale cutoff (default: smallest positive distance).
        #[arg(long)]
        rmin: Option<f64>,
        /// Thresholds JSON; missing fields take their defaults.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Glue piece metrics along a partition of a host space.
    Amalgamate {
        host: PathBuf,
        partition: PathBuf,
        pieces: Vec<PathBuf>,
        /// Use the max formula over this range set (ultrametric inputs).
        #[arg(long)]
        range: Option<PathBuf>,
    },
    /// Move a space by a bounded amount to one with the requested property.
    Approximate {
        file: PathBuf,
        #[arg(long, value_enum)]
        property: Property,
        /// Fraction of the diameter, or an absolute value with `--absolute`.
        #[arg(long, default_value_t = 0.125)]
        epsilon: f64,
        #[arg(long)]
        absolute: bool,
        /// Range set JSON, required for `--property ultrametric`.
        #[arg(long)]
        range: Option<PathBuf>,
    },
    /// Truncated Cantor spaces.
    Cantor {
        #[command(subcommand)]
        command: CantorCommand,
    },
    /// Range-set checks and sequences.
    Rangeset {
        #[command(subcommand)]
        command: RangeCommand,
    },
    /// Run an experiment config and report every trial.
    Experiment { config: PathBuf },
}

#[derive(Subcommand)]
enum CantorCommand {
    /// A sequential metric from a sequence file, or a space of a given type.
    Gen {
        /// Sequence JSON (`{"values": [...], "envelope": null}`).
        #[arg(long, conflicts_with = "type", required_unless_present = "type")]
        sequence: Option<PathBuf>,
        /// Type bits such as `101` (doubling, disconnected, perfect).
        #[arg(long = "type")]
        r#type: Option<String>,
        #[arg(long, default_value_t = 7)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum RangeCommand {
    /// Check the exponential windows `[M^-1 a^n, M a^n]` for `n <= max_n`.
    Check {
        range: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long = "M", alias = "m")]
        m: f64,
        #[arg(long, default_value_t = 32)]
        max_n: usize,
        /// Also list the perfectness obstructions for this `c`.
        #[arg(long)]
        c: Option<f64>,
    },
    /// An exponentially shrinking sequence inside the range set.
    Sequence {
        range: PathBuf,
        #[arg(long)]
        b: f64,
        #[arg(long = "M", alias = "m")]
        m: f64,
        #[arg(long, default_value_t = 16)]
        len: usize,
    },
}

/// What a command produced: a JSON document, optional CSV rows, and whether
/// every pass flag held.
struct Output {
    json: serde_json::Value,
    csv: Option<Vec<serde_json::Value>>,
    pass: bool,
}

impl Output {
    fn new(json: serde_json::Value, pass: bool) -> Self {
        Output {
            json,
            csv: None,
            pass,
        }
    }

    fn rows(mut self, rows: Vec<serde_json::Value>) -> Self {
        self.csv = Some(rows);
        self
    }
}

fn read_space(path: &Path) -> Result<FiniteMetricSpace> {
    read_json(path).with_context(|| format!("reading space {}", path.display()))
}

/// Reads a space file, or the `space` field of a report written by
/// `cantor gen` or `amalgamate`.
fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(inner) = value.get_mut("space").filter(|v| v.get("matrix").is_some()) {
        value = inner.take();
    }
    serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

/// Matrix rows with the labels as header, for CSV output of a space.
fn space_rows(space: &FiniteMetricSpace) -> Vec<serde_json::Value> {
    let labels = space.labels();
    (0..space.len())
        .map(|i| {
            let mut row = serde_json::Map::new();
            row.insert("label".into(), json!(labels[i]));
            for (j, l) in labels.iter().enumerate() {
                row.insert(l.clone(), json!(space.d(i, j)));
            }
            serde_json::Value::Object(row)
        })
        .collect()
}

fn parse_type(bits: &str) -> Result<[bool; 3]> {
    let digits: Vec<char> = bits
        .chars()
        .filter(|c| !matches!(c, '(' | ')' | ','))
        .collect();
    if digits.len() != 3 {
        bail!("type must have three digits, got {bits:?}");
    }
    let mut out = [false; 3];
    for (k, c) in digits.iter().enumerate() {
        out[k] = match c {
            '0' => false,
            '1' => true,
            _ => bail!("type digits must be 0 or 1, got {c:?}"),
        };
    }
    Ok(out)
}

fn cmd_validate(file: &Path, tolerance: f64, flavor: Option<FlavorArg>) -> Result<Output> {
    let raw: SpaceFile = read_json(file)?;
    let flavor = match flavor {
        Some(FlavorArg::Metric) => Flavor::Metric,
        Some(FlavorArg::Ultrametric) => Flavor::Ultrametric,
        None => raw.flavor,
    };
    let n = raw.matrix.len();
    let result = validate(raw.labels, raw.matrix, flavor, tolerance);
    let json = match &result {
        Ok(_) => json!({"valid": true, "points": n, "flavor": flavor, "tolerance": tolerance}),
        Err(e) => json!({
            "valid": false, "points": n, "flavor": flavor, "tolerance": tolerance,
            "error": e.to_string(), "detail": format!("{e:?}"),
        }),
    };
    let row = json!({
        "valid": result.is_ok(),
        "points": n,
        "error": result.as_ref().err().map(|e| e.to_string()).unwrap_or_default(),
    });
    Ok(Output::new(json, result.is_ok()).rows(vec![row]))
}

fn cmd_moduli(
    file: &Path,
    beta: Option<f64>,
    rmin: Option<f64>,
    thresholds: Option<&Path>,
) -> Result<Output> {
    let space = read_space(file)?;
    let mut th: Thresholds = match thresholds {
        Some(p) => read_json(p)?,
        None => Thresholds::default(),
    };
    if let Some(b) = beta {
        th.beta = b;
    }
    let report = moduli_report(&space, &th, rmin)?;
    let m = &report.types.measured;
    let row = json!({
        "type": report.types.label(),
        "doubling_constant": m.doubling_constant,
        "doubling_mode": m.doubling_mode,
        "delta_star": m.delta_star,
        "c_star": m.c_star,
        "r_min": m.r_min,
    });
    Ok(Output::new(to_value(&report)?, true).rows(vec![row]))
}

fn cmd_amalgamate(
    host: &Path,
    partition: &Path,
    pieces: &[PathBuf],
    range: Option<&Path>,
) -> Result<Output> {
    let d = read_space(host)?;
    let partition = ClopenPartition::read_json(partition)
        .with_context(|| format!("reading partition {}", partition.display()))?;
    let pieces = pieces
        .iter()
        .map(|p| read_space(p))
        .collect::<Result<Vec<_>>>()?;
    let (out, distance) = match range {
        Some(r) => {
            let range: RangeSet = read_json(r)?;
            let out = amalgamate_ultrametric(&d, &partition, &pieces, &range)?;
            let dist = ultra_distance(&d, &out, &range)?;
            (out, dist)
        }
        None => {
            let out = amalgamate_metric(&d, &partition, &pieces)?;
            let dist = sup_distance(&d, &out)?;
            (out, dist)
        }
    };
    let rows = space_rows(&out);
    let json = json!({"distance_to_host": distance, "space": out});
    Ok(Output::new(json, true).rows(rows))
}

fn cmd_approximate(
    file: &Path,
    property: Property,
    epsilon: f64,
    absolute: bool,
    range: Option<&Path>,
) -> Result<Output> {
    let d = read_space(file)?;
    let eps = if absolute {
        epsilon
    } else {
        epsilon * d.diameter()
    };
    let (space, bound, extra) = match property {
        Property::Doubling => {
            let a = approximate_doubling(&d, eps)?;
            (
                a.space,
                a.bound,
                json!({"net": a.net, "dimension": a.embedding.dimension}),
            )
        }
        Property::Ud => {
            let (a, ud) = approximate_ud(&d, eps, &SequentialPieces::default())?;
            let extra = json!({"pieces": a.partition.len(), "delta_star": ud.delta_star});
            (a.space, a.bound, extra)
        }
        Property::Up => {
            let a = approximate_up(&d, eps)?;
            let extra = json!({
                "pieces": a.approximation.partition.len(),
                "r_min": a.r_min,
                "c_star": a.up.as_ref().map(|u| u.c_star),
                "lower_bound": a.lower_bound,
            });
            (a.approximation.space, a.approximation.bound, extra)
        }
        Property::Ultrametric => {
            let Some(r) = range else {
                bail!("--property ultrametric needs --range");
            };
            let range: RangeSet = read_json(r)?;
            let seq = sequence_below(&range, eps, depth_for(d.len()))?;
            let a = approximate_ultrametric(&d, &range, eps, &seq)?;
            let achieved = ultra_distance(&d, &a.space, &range)?;
            let json = json!({
                "property": "ultrametric", "epsilon": eps, "bound": a.bound,
                "achieved": achieved.value, "pass": achieved.value <= a.bound,
                "pieces": a.partition.len(), "space": a.space,
            });
            let row = json!({
                "property": "ultrametric", "epsilon": eps, "bound": a.bound,
                "achieved": achieved.value, "pass": achieved.value <= a.bound,
            });
            return Ok(Output::new(json, achieved.value <= a.bound).rows(vec![row]));
        }
    };
    let achieved = sup_distance(&d, &space)?.value;
    let pass = achieved <= bound;
    let name = match property {
        Property::Doubling => "doubling",
        Property::Ud => "ud",
        Property::Up => "up",
        Property::Ultrametric => unreachable!(),
    };
    let row = json!({
        "property": name, "epsilon": eps, "bound": bound, "achieved": achieved, "pass": pass,
    });
    let json = json!({
        "property": name, "epsilon": eps, "bound": bound, "achieved": achieved, "pass": pass,
        "details": extra, "space": space,
    });
    Ok(Output::new(json, pass).rows(vec![row]))
}

fn cmd_cantor(command: &CantorCommand, seed: u64) -> Result<Output> {
    let CantorCommand::Gen {
        sequence,
        r#type,
        depth,
    } = command;
    let (space, meta) = match (sequence, r#type) {
        (Some(p), _) => {
            let s: ShrinkingSequence = read_json(p)?;
            (sequential_metric(&s, *depth)?, json!({"sequence": s}))
        }
        (None, Some(bits)) => {
            let (space, target) = generate_type(parse_type(bits)?, *depth, seed)?;
            (space, json!({"target": target}))
        }
        (None, None) => bail!("give --sequence or --type"),
    };
    let rows = space_rows(&space);
    Ok(Output::new(json!({"meta": meta, "space": space}), true).rows(rows))
}

fn cmd_rangeset(command: &RangeCommand) -> Result<Output> {
    match command {
        RangeCommand::Check {
            range,
            a,
            m,
            max_n,
            c,
        } => {
            let s: RangeSet = read_json(range)?;
            let check = is_exponential_window(&s, *a, *m, *max_n)?;
            let obstructions = match c {
                Some(c) => Some(up_obstructions(&s, *c, *max_n)?),
                None => None,
            };
            let row = json!({
                "holds": check.holds,
                "first_failure": check.first_failure,
                "checked": max_n + 1,
            });
            let json = json!({"window": check, "up_obstructions": obstructions});
            Ok(Output::new(json, check.holds).rows(vec![row]))
        }
        RangeCommand::Sequence { range, b, m, len } => {
            let s: RangeSet = read_json(range)?;
            let seq = exponential_sequence(&s, *b, *m, *len)?;
            let rows = seq
                .values()
                .iter()
                .enumerate()
                .map(|(n, v)| json!({"n": n, "value": v}))
                .collect();
            Ok(Output::new(to_value(&seq)?, true).rows(rows))
        }
    }
}

fn cmd_experiment(
    config: &Path,
    global: &Global,
) -> Result<(metric_dense::lab::Report, Format, Option<PathBuf>)> {
    let mut config = ExperimentConfig::read_json(config)
        .with_context(|| format!("reading config {}", config.display()))?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if let Some(trials) = global.trials {
        config.trials = trials;
    }
    config.validate()?;
    let report = run(&config)?;
    // command-line format and path win over the config
    let format = match global.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => config.format,
    };
    let out = global.out.clone().or(config.output.clone());
    Ok((report, format, out))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(output: &Output, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    match (format, &output.csv) {
        (OutputFormat::Csv, Some(rows)) => {
            let mut csv = csv::Writer::from_writer(w);
            let header: Vec<String> = match rows.first() {
                Some(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
                _ => Vec::new(),
            };
            csv.write_record(&header)?;
            for row in rows {
                let cells: Vec<String> = header
                    .iter()
                    .map(|k| match &row[k] {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Null => String::new(),
                        v => v.to_string(),
                    })
                    .collect();
                csv.write_record(&cells)?;
            }
            csv.flush()?;
        }
        _ => {
            serde_json::to_writer_pretty(&mut w, &output.json)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let output = match &cli.command {
        Command::Validate {
            file,
            tolerance,
            flavor,
        } => cmd_validate(file, *tolerance, *flavor)?,
        Command::Moduli {
            file,
            beta,
            rmin,
            thresholds,
        } => cmd_moduli(file, *beta, *rmin, thresholds.as_deref())?,
        Command::Amalgamate {
            host,
            partition,
            pieces,
            range,
        } => cmd_amalgamate(host, partition, pieces, range.as_deref())?,
        Command::Approximate {
            file,
            property,
            epsilon,
            absolute,
            range,
        } => cmd_approximate(file, *property, *epsilon, *absolute, range.as_deref())?,
        Command::Cantor { command } => cmd_cantor(command, g.seed.unwrap_or(0))?,
        Command::Rangeset { command } => cmd_rangeset(command)?,
        Command::Experiment { config } => {
            let (report, format, out) = cmd_experiment(config, g)?;
            let w = sink(out.as_deref())?;
            write_report(&report, format, w)?;
            return Ok(report.all_pass);
        }
    };
    emit(&output, g.format, g.out.as_deref())?;
    Ok(output.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
