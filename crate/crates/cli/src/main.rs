//! `nfe`: command-line front end for the near-field electric link model.

mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nfe_core::fieldregion::{self, RegionQuery};
use nfe_core::harness::compare::{self, compare_technologies};
use nfe_core::harness::fit::{self, FitOptions};
use nfe_core::harness::sweep::{self, distance_grid, SweepOptions};
use nfe_core::harness::{anchors, MeasurementLog, Params, Scenario};
use nfe_core::linklayer;
use nfe_core::units::{parse_list, parse_quantity, Unit};
use nfe_core::{Error, Result};

/// Root seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Parser, Debug)]
#[command(name = "nfe", version, about = "Near-field electric link simulator")]
struct Cli {
    /// Parameter file; overrides NFE_PARAMS and the built-in defaults.
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the primary output here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Root seed for Monte Carlo draws [default: 20240611].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Progress and timing on standard error.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Report,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field-region boundaries for an aperture and wavelength.
    Region(RegionArgs),
    /// Channel response and link statistics at one distance.
    Link(LinkArgs),
    /// PER and throughput over a distance grid, with ranges per rate.
    Sweep(SweepArgs),
    /// Simulated packet outcomes at one distance.
    Montecarlo(MonteCarloArgs),
    /// Fit model parameters to a measurement log.
    Fit(FitArgs),
    /// Technology comparison table.
    Compare(CompareArgs),
}

fn meters(s: &str) -> std::result::Result<f64, String> {
    parse_quantity(s, Unit::Meter).map_err(|e| e.to_string())
}
fn hertz(s: &str) -> std::result::Result<f64, String> {
    parse_quantity(s, Unit::Hertz).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
struct Rates(Vec<f64>);

fn bps_list(s: &str) -> std::result::Result<Rates, String> {
    let v = parse_list(s, Unit::BitsPerSecond).map_err(|e| e.to_string())?;
    if v.is_empty() || v.iter().any(|r| r.is_nan() || *r <= 0.0) {
        return Err("rates must be a non-empty list of positive values".into());
    }
    Ok(Rates(v))
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Largest aperture dimension.
    #[arg(long, value_parser = meters)]
    aperture: f64,
    /// Wavelength.
    #[arg(long, value_parser = meters, required_unless_present = "frequency", conflicts_with = "frequency")]
    wavelength: Option<f64>,
    /// Carrier frequency, as an alternative to the wavelength.
    #[arg(long, value_parser = hertz)]
    frequency: Option<f64>,
    /// Distance to classify.
    #[arg(long, value_parser = meters)]
    distance: Option<f64>,
}

#[derive(Args, Debug)]
struct LinkArgs {
    /// Built-in scenario id or scenario file.
    #[arg(long)]
    scenario: String,
    /// Device separation; defaults to the scenario's fixed gap.
    #[arg(long, value_parser = meters)]
    distance: Option<f64>,
    #[arg(long, value_parser = bps_list, default_value = "1M,3.33M,5M")]
    rates: Rates,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, value_parser = bps_list, default_value = "1M,3.33M,5M")]
    rates: Rates,
    /// First grid distance [default: the step].
    #[arg(long, value_parser = meters)]
    dmin: Option<f64>,
    #[arg(long, value_parser = meters)]
    dmax: f64,
    #[arg(long, value_parser = meters, default_value = "0.01")]
    step: f64,
    /// Replace analytic PER by this many simulated packets per point.
    #[arg(long)]
    packets: Option<u64>,
    /// PER threshold for the reported ranges [default: the scenario's].
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct MonteCarloArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, value_parser = meters)]
    distance: Option<f64>,
    #[arg(long, value_parser = bps_list, default_value = "1M,3.33M,5M")]
    rates: Rates,
    #[arg(long, default_value_t = 10_000)]
    packets: u64,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Run the staged default calibration and fit every profile.
    #[arg(long, conflicts_with_all = ["scenario", "free"])]
    calibrate: bool,
    /// Measurement log CSV [default with --calibrate: built-in anchor log].
    #[arg(long, required_unless_present = "calibrate")]
    log: Option<PathBuf>,
    /// Scenario to fit; the log rows are selected by its config and test.
    #[arg(long, required_unless_present = "calibrate")]
    scenario: Option<String>,
    /// Free parameters, e.g. `c0,d_scale,p`.
    #[arg(long, required_unless_present = "calibrate")]
    free: Option<String>,
    /// Write the fitted scenario (or parameter file with --calibrate) here.
    #[arg(long)]
    write_params: Option<PathBuf>,
    #[arg(long, default_value_t = FitOptions::default().max_iterations)]
    max_iterations: usize,
    /// Skip the distance-monotonicity penalty.
    #[arg(long)]
    no_monotone: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Technology records file [default: built-in dataset].
    #[arg(long)]
    records: Option<PathBuf>,
}

struct Ctx {
    params: Params,
    format: Option<Format>,
    seed: u64,
    verbose: u8,
}

impl Ctx {
    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose > 0 {
            eprintln!("nfe: {}", msg.as_ref());
        }
    }

    fn scenario(&self, arg: &str) -> Result<Scenario> {
        let path = Path::new(arg);
        if path.is_file() {
            Scenario::from_toml(&read(path)?)
        } else {
            self.params.scenario(arg)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so a failed run never leaves a partial file behind.
fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn gap_for(s: &Scenario, distance: Option<f64>) -> Result<f64> {
    distance.or(s.fixed_gap_m).ok_or_else(|| {
        Error::Config(format!(
            "scenario `{}` has no fixed gap; pass --distance",
            s.id
        ))
    })
}

fn region(ctx: &Ctx, a: &RegionArgs) -> Result<String> {
    let wavelength = match (a.wavelength, a.frequency) {
        (Some(l), _) => l,
        (None, Some(f)) if f > 0.0 => RegionQuery::wavelength_of(f),
        _ => return Err(Error::Config("frequency must be positive".into())),
    };
    let q = RegionQuery::new(a.aperture, wavelength, a.distance)?;
    let class = match q.distance {
        Some(_) => Some(fieldregion::classify_region(&q)?),
        None => None,
    };
    render::region(ctx.format_or(Format::Table), &q, class.as_ref())
}

fn link(ctx: &Ctx, a: &LinkArgs) -> Result<String> {
    let s = ctx.scenario(&a.scenario)?;
    let gap = gap_for(&s, a.distance)?;
    let points = a
        .rates
        .0
        .iter()
        .map(|&r| s.evaluate(gap, r).map(|p| (r, p)))
        .collect::<Result<Vec<_>>>()?;
    render::link(ctx.format_or(Format::Table), &s.id, gap, &points)
}

fn sweep_cmd(ctx: &Ctx, a: &SweepArgs) -> Result<String> {
    let mut s = ctx.scenario(&a.scenario)?;
    if let Some(t) = a.threshold {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config("threshold must be in (0, 1)".into()));
        }
        s.link.per_threshold = t;
    }
    let grid = distance_grid(a.dmin.unwrap_or(a.step), a.dmax, a.step)?;
    let opts = SweepOptions {
        seed: ctx.seed,
        packets_per_point: a.packets,
    };
    let r = sweep::sweep_distance(&s, &grid, &a.rates.0, &ctx.params.version, opts)?;
    for rate in &r.rates {
        ctx.note(format!(
            "{}: range {} m at {} bps",
            r.scenario_id, rate.range_m, rate.rate_bps
        ));
    }
    match ctx.format_or(Format::Csv) {
        Format::Csv => r.to_csv(),
        Format::Report => r.to_json().map(|j| j + "\n"),
        Format::Table => Ok(render::sweep_table(&r)),
    }
}

fn montecarlo(ctx: &Ctx, a: &MonteCarloArgs) -> Result<String> {
    let s = ctx.scenario(&a.scenario)?;
    let gap = gap_for(&s, a.distance)?;
    let mut rows = Vec::new();
    for (i, &rate) in a.rates.0.iter().enumerate() {
        let cfg = s.link.at_rate(rate)?;
        let model = s.evaluate(gap, rate)?.per;
        let seed = linklayer::derive_seed(ctx.seed, i as u64, 0);
        let st = linklayer::monte_carlo_packets(model, a.packets, seed, &cfg)?;
        rows.push(render::McRow {
            rate_bps: rate,
            distance_m: gap,
            model_per: model,
            stats: st,
        });
    }
    render::montecarlo(ctx.format_or(Format::Table), &s.id, ctx.seed, &rows)
}

fn fit_cmd(ctx: &Ctx, a: &FitArgs) -> Result<String> {
    let opts = FitOptions {
        max_iterations: a.max_iterations,
        monotone: !a.no_monotone,
        ..FitOptions::default()
    };
    let log = match &a.log {
        Some(p) => MeasurementLog::from_path(p)?,
        None => anchors::calibration_log(),
    };
    let started = std::time::Instant::now();
    let (reports, artifact) = if a.calibrate {
        let (p, reports) = fit::calibrate(&ctx.params, &log, opts)?;
        (reports, p.to_toml()?)
    } else {
        let id = a.scenario.as_deref().unwrap_or_default();
        let s = ctx.scenario(id)?;
        let free = fit::parse_free(a.free.as_deref().unwrap_or_default())?;
        let rows = log.select(
            s.config.as_deref().unwrap_or_default(),
            s.test.as_deref().unwrap_or_default(),
        );
        if rows.rows.is_empty() {
            return Err(Error::Config(format!(
                "log has no rows for config `{}` test `{}`",
                s.config.as_deref().unwrap_or_default(),
                s.test.as_deref().unwrap_or_default()
            )));
        }
        let (fitted, report) = fit::fit_parameters(&rows, &s, &free, opts)?;
        (vec![report], fitted.to_toml()?)
    };
    ctx.note(format!("fit finished in {:.2?}", started.elapsed()));
    let text = render::fit(ctx.format_or(Format::Table), &reports)?;
    if let Some(p) = &a.write_params {
        write_atomic(p, &artifact)?;
    }
    Ok(text)
}

fn compare_cmd(ctx: &Ctx, a: &CompareArgs) -> Result<String> {
    let records = match &a.records {
        Some(p) => compare::parse_records(&read(p)?)?,
        None => compare::embedded_records(),
    };
    let rows = compare_technologies(&records)?;
    render::compare(ctx.format_or(Format::Table), &rows)
}

fn run(cli: &Cli) -> Result<()> {
    let params = match &cli.params {
        Some(p) => Params::load(p)?,
        None => Params::load_default()?,
    };
    let ctx = Ctx {
        params,
        format: cli.format,
        seed: cli.seed.unwrap_or(DEFAULT_SEED),
        verbose: cli.verbose,
    };
    ctx.note(format!("parameter set {}", ctx.params.version));
    let text = match &cli.command {
        Command::Region(a) => region(&ctx, a)?,
        Command::Link(a) => link(&ctx, a)?,
        Command::Sweep(a) => sweep_cmd(&ctx, a)?,
        Command::Montecarlo(a) => montecarlo(&ctx, a)?,
        Command::Fit(a) => fit_cmd(&ctx, a)?,
        Command::Compare(a) => compare_cmd(&ctx, a)?,
    };
    emit(cli.output.as_deref(), &text)
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let one_line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error kind={kind} message={one_line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let first = first.trim_start_matches("error: ");
            return fail("usage", first, 1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(
            e.kind(),
            &e.to_string(),
            if e.is_numerical() { 2 } else { 1 },
        ),
    }
}
