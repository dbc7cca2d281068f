mod io;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fracproj::experiments::{
    compare_anchors, extract_anchors, run_suite, AnchorFile, ExperimentConfig, ExperimentReport, Fixture, RunOptions,
};
use fracproj::transversality::DEFAULT_DELTAS;
use fracproj::{
    box_dimension, box_dimension_offsets, check_transversality_bound, correlation_dimension, empirical_transversality,
    energy, energy_layercake, pushforward, FamilyRegistry, DEFAULT_POINT_CAP,
};
use serde::Deserialize;
use serde_json::json;

use io::{emit, read_measure, render_measure, write_series, Format};

#[derive(Parser)]
#[command(name = "fracproj", version, about = "Projection theorems for fractal measures, checked numerically")]
struct Cli {
    /// Config file (experiment suite for `verify`, fixture file for `generate`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    Cantor,
    CantorProduct,
    Sierpinski,
    Atom,
    Segment,
}

#[derive(Clone, Copy, ValueEnum)]
enum DimMethod {
    Box,
    Correlation,
}

#[derive(Subcommand)]
enum Command {
    /// Build a fixture measure and write it as a measure file
    Generate {
        #[arg(long, value_enum)]
        fixture: Option<FixtureKind>,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        /// Point count for `segment`, ambient dimension for `atom`
        #[arg(long, default_value_t = 1)]
        size: usize,
    },
    /// Truncated s-energy of a measure
    Energy {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        r_min: f64,
        /// Evaluate through the layer-cake identity instead of the direct sum
        #[arg(long)]
        layercake: bool,
    },
    /// Box or correlation dimension over a fixed window
    Dimension {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_enum, default_value_t = DimMethod::Box)]
        method: DimMethod,
        #[arg(long, value_delimiter = ',', required = true)]
        scales: Vec<f64>,
        /// Average box counts over this many randomly shifted grids
        #[arg(long)]
        offsets: Option<usize>,
    },
    /// Empirical transversality of a projection family
    Transversality {
        #[arg(long)]
        family: String,
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10_000)]
        n_lambda: usize,
        #[arg(long, default_value_t = 16)]
        n_pairs: usize,
        #[arg(long)]
        alpha_override: Option<f64>,
        #[arg(long)]
        bound_c: Option<f64>,
        #[arg(long)]
        bound_kappa: Option<f64>,
    },
    /// Push a measure forward under one parameter
    Project {
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        lambda: Vec<f64>,
        #[arg(long)]
        measure: PathBuf,
    },
    /// Run the configured checks and write a report
    Verify {
        /// Frozen anchor file; written on first use, compared afterwards
        #[arg(long)]
        anchors: Option<PathBuf>,
        /// Record per-check wall time (reports are then not reproducible)
        #[arg(long)]
        timings: bool,
        /// Skip writing plot data files
        #[arg(long)]
        no_plots: bool,
    },
    /// Re-render a stored report
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[derive(Deserialize)]
struct FixtureFile {
    fixture: Fixture,
    #[serde(default)]
    max_points: Option<usize>,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("--config is required")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn summary_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "theorem", "expect", "status", "outcome_ok", "bound", "slack", "margin"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for c in &report.checks {
        w.write_record([
            c.id.clone(),
            c.theorem.clone(),
            format!("{:?}", c.expect).to_lowercase(),
            format!("{:?}", c.status).to_lowercase(),
            c.outcome_ok.to_string(),
            opt(c.bound),
            opt(c.slack),
            opt(c.margin),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn render_report(report: &ExperimentReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(report.to_json()),
        Format::Csv => summary_csv(report),
    }
}

fn print_summary(report: &ExperimentReport) {
    for c in &report.checks {
        eprintln!(
            "{:<28} {:<14} {:<12} {}",
            c.id,
            c.theorem,
            format!("{:?}", c.status).to_lowercase(),
            if c.outcome_ok { "ok" } else { "UNEXPECTED" }
        );
    }
    eprintln!("{}/{} checks as expected", report.summary.ok, report.summary.total);
}

fn json_line(value: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&value).expect("json");
    s.push('\n');
    s
}

fn run(cli: &Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    let registry = FamilyRegistry::default();
    match &cli.command {
        Command::Generate { fixture, depth, size } => {
            let (fixture, cap) = match fixture {
                Some(kind) => {
                    let f = match kind {
                        FixtureKind::Cantor => Fixture::Cantor { depth: *depth },
                        FixtureKind::CantorProduct => Fixture::CantorProduct { depth: *depth },
                        FixtureKind::Sierpinski => Fixture::Sierpinski { depth: *depth },
                        FixtureKind::Atom => Fixture::Atom { dim: *size },
                        FixtureKind::Segment => Fixture::Segment { n: *size },
                    };
                    (f, DEFAULT_POINT_CAP)
                }
                None => {
                    let path = cli.config.as_ref().context("give --fixture or a --config fixture file")?;
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    let file: FixtureFile = toml::from_str(&text).with_context(|| format!("in {}", path.display()))?;
                    (file.fixture, file.max_points.unwrap_or(DEFAULT_POINT_CAP))
                }
            };
            let mu = fixture.build(cap)?;
            emit(out, &render_measure(&mu, cli.format)?)?;
            Ok(true)
        }
        Command::Energy {
            measure,
            s,
            r_min,
            layercake,
        } => {
            let mu = read_measure(measure)?;
            let value = if *layercake {
                energy_layercake(&mu, *s, *r_min)?
            } else {
                energy(&mu, *s, *r_min)?
            };
            let text = match cli.format {
                Format::Json => json_line(json!({ "s": s, "r_min": r_min, "energy": value })),
                Format::Csv => format!("s,r_min,energy\n{s:?},{r_min:?},{value:?}\n"),
            };
            emit(out, &text)?;
            Ok(true)
        }
        Command::Dimension {
            measure,
            method,
            scales,
            offsets,
        } => {
            let mu = read_measure(measure)?;
            let est = match (method, offsets) {
                (DimMethod::Box, None) => box_dimension(mu.cloud(), scales)?,
                (DimMethod::Box, Some(k)) => box_dimension_offsets(mu.cloud(), scales, *k, cli.seed.unwrap_or(0))?,
                (DimMethod::Correlation, None) => correlation_dimension(&mu, scales)?,
                (DimMethod::Correlation, Some(_)) => bail!("--offsets applies to box counting only"),
            };
            let text = match cli.format {
                Format::Json => json_line(serde_json::to_value(&est)?),
                Format::Csv => {
                    let mut t = String::from("scale,log_value\n");
                    for (s, v) in est.scales.iter().zip(&est.log_values) {
                        t.push_str(&format!("{s:?},{v:?}\n"));
                    }
                    t
                }
            };
            emit(out, &text)?;
            Ok(true)
        }
        Command::Transversality {
            family,
            measure,
            deltas,
            n_lambda,
            n_pairs,
            alpha_override,
            bound_c,
            bound_kappa,
        } => {
            let fam = registry.get(family)?;
            let mu = read_measure(measure)?.embed(fam.domain_dim())?;
            let deltas = deltas.clone().unwrap_or_else(|| DEFAULT_DELTAS.to_vec());
            let est = empirical_transversality(
                fam.as_ref(),
                &mu,
                &deltas,
                *n_lambda,
                *n_pairs,
                *alpha_override,
                cli.seed.unwrap_or(0),
            )?;
            let c = bound_c.or(fam.declared_c()).unwrap_or(1.0);
            let check = check_transversality_bound(&est, c, bound_kappa.unwrap_or(fam.kappa()));
            let text = match cli.format {
                Format::Json => json_line(json!({ "estimate": est, "bound_check": check })),
                Format::Csv => {
                    let mut t = String::from("delta,worst_prob,std_err,bound,margin\n");
                    for (k, row) in check.rows.iter().enumerate() {
                        t.push_str(&format!(
                            "{:?},{:?},{:?},{:?},{:?}\n",
                            row.delta, row.observed, est.std_err[k], row.bound, row.margin
                        ));
                    }
                    t
                }
            };
            emit(out, &text)?;
            Ok(check.passed)
        }
        Command::Project { family, lambda, measure } => {
            let fam = registry.get(family)?;
            let mu = read_measure(measure)?.embed(fam.domain_dim())?;
            let nu = pushforward(fam.as_ref(), lambda, &mu)?;
            emit(out, &render_measure(&nu, cli.format)?)?;
            Ok(true)
        }
        Command::Verify {
            anchors,
            timings,
            no_plots,
        } => {
            let cfg = load_config(cli)?;
            let report = run_suite(&cfg, &registry, RunOptions { timings: *timings })?;
            emit(out, &render_report(&report, cli.format)?)?;
            if let (Some(path), false) = (out, no_plots) {
                let dir = plot_dir(path)?;
                for series in report.checks.iter().flat_map(|c| &c.series) {
                    write_series(&dir, series)?;
                }
            }
            print_summary(&report);
            let mut ok = report.summary.all_ok;
            if let Some(path) = anchors {
                ok &= anchor_step(path, &report)?;
            }
            Ok(ok)
        }
        Command::Report { input } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let report = ExperimentReport::from_json(&text)?;
            emit(out, &render_report(&report, cli.format)?)?;
            print_summary(&report);
            Ok(report.summary.all_ok)
        }
    }
}

/// Plot data lives in `<report stem>_plots/` next to the report.
fn plot_dir(report: &Path) -> Result<PathBuf> {
    let stem = report.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let dir = report.with_file_name(format!("{stem}_plots"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn anchor_step(path: &Path, report: &ExperimentReport) -> Result<bool> {
    let fresh = extract_anchors(report);
    if !path.exists() {
        fs::write(path, fresh.to_json()).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("froze {} anchors in {}", fresh.values.len(), path.display());
        return Ok(true);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let frozen = AnchorFile::from_json(&text)?;
    let diff = compare_anchors(&frozen, &fresh);
    for line in &diff {
        eprintln!("anchor mismatch: {line}");
    }
    if diff.is_empty() {
        eprintln!("{} anchors reproduced", frozen.values.len());
    }
    Ok(diff.is_empty())
}
