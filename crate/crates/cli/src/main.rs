//! `ivfen` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ivfen::dgp::{generate_dgp, DgpKind, DgpSpec, LogBase};
use ivfen::io::{load_csv, save_csv, CsvSchema};
use ivfen::pipeline::{run_experiment, ExperimentConfig};
use ivfen::series::from_center_range;
use ivfen::stats::{acf, confidence_band, pacf, select_order};
use ivfen::Error;

const MODEL_FILE: &str = "fen_model.json";

#[derive(Parser)]
#[command(name = "ivfen", version, about = "Image-based feature extraction for interval-valued time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic interval series and write it as `t,lower,upper` CSV.
    Gen(GenArgs),
    /// Print autocorrelations and the selected lag orders of a series.
    Orders(OrdersArgs),
    /// Run network selection and the prediction grid from a JSON config.
    Run(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_dgp)]
    dgp: DgpKind,
    #[arg(long, default_value_t = 1500)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    /// Use base-10 logarithms in the C3 range recursion.
    #[arg(long)]
    log10: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OrdersArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_schema, default_value = "bounds")]
    schema: CsvSchema,
    #[arg(long, default_value_t = 40)]
    max_lag: usize,
    /// Report these `center,range` orders instead of the automatic choice.
    #[arg(long, value_parser = parse_pin)]
    pin: Option<(usize, usize)>,
    /// Write `component,lag,acf,pacf,band` rows to this CSV file.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Validate the config and print the planned grid only.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_dgp(s: &str) -> Result<DgpKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_schema(s: &str) -> Result<CsvSchema, String> {
    match s.to_ascii_lowercase().as_str() {
        "bounds" => Ok(CsvSchema::Bounds),
        "ohlc" => Ok(CsvSchema::Ohlc),
        other => Err(format!("unknown schema: {other} (expected bounds or ohlc)")),
    }
}

fn parse_pin(s: &str) -> Result<(usize, usize), String> {
    let (c, r) = s.split_once(',').ok_or("expected CENTER,RANGE")?;
    let parse = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("invalid order: {v}")),
    };
    Ok((parse(c)?, parse(r)?))
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn runtime(stage: &str, err: impl std::fmt::Display) -> Self {
        Self { code: 1, message: format!("{stage}: {err}") }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Orders(args) => cmd_orders(&args),
        Command::Run(args) => cmd_run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let spec = DgpSpec {
        noise_std: args.noise_std,
        burn_in: args.burn_in,
        log_base: if args.log10 { LogBase::Ten } else { LogBase::Natural },
        ..DgpSpec::new(args.dgp, args.length, args.seed)
    };
    spec.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let series = generate_dgp(&spec).map_err(|e| Failure::runtime("generate", e))?;
    let interval = from_center_range(series.center(), series.range()).map_err(|e| Failure::runtime("generate", e))?;
    save_csv(&interval, &args.out).map_err(|e| Failure::runtime("write", e))
}

#[derive(Serialize)]
struct ComponentOrders {
    acf: Vec<f64>,
    pacf: Vec<f64>,
    band: f64,
    /// Largest lag whose partial autocorrelation leaves the band.
    auto_order: usize,
    order: usize,
}

#[derive(Serialize)]
struct OrdersReport {
    observations: usize,
    max_lag: usize,
    pinned: bool,
    center: ComponentOrders,
    range: ComponentOrders,
}

fn component_orders(x: &[f64], max_lag: usize, pinned: Option<usize>) -> ivfen::Result<ComponentOrders> {
    let auto_order = select_order(x, max_lag)?;
    Ok(ComponentOrders {
        acf: acf(x, max_lag)?,
        pacf: pacf(x, max_lag)?,
        band: confidence_band(x.len()),
        auto_order,
        order: pinned.unwrap_or(auto_order),
    })
}

fn cmd_orders(args: &OrdersArgs) -> Result<(), Failure> {
    let series = load_csv(&args.input, args.schema).map_err(|e| Failure::runtime("read", e))?.to_center_range();
    if series.len() < 3 {
        return Err(Failure::runtime("orders", "series needs at least 3 observations"));
    }
    let max_lag = args.max_lag.clamp(1, series.len() - 1);
    let (pc, pr) = args.pin.unzip();
    let report = OrdersReport {
        observations: series.len(),
        max_lag,
        pinned: args.pin.is_some(),
        center: component_orders(series.center(), max_lag, pc).map_err(|e| Failure::runtime("center", e))?,
        range: component_orders(series.range(), max_lag, pr).map_err(|e| Failure::runtime("range", e))?,
    };
    if let Some(path) = &args.emit_plot_data {
        write_plot_data(path, &report).map_err(|e| Failure::runtime("write", e))?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        print!("{}", orders_text(&report));
    }
    Ok(())
}

fn write_plot_data(path: &Path, report: &OrdersReport) -> std::io::Result<()> {
    let mut out = String::from("component,lag,acf,pacf,band\n");
    for (name, c) in [("center", &report.center), ("range", &report.range)] {
        for lag in 0..c.acf.len() {
            out.push_str(&format!("{name},{lag},{},{},{}\n", c.acf[lag], c.pacf[lag], c.band));
        }
    }
    std::fs::write(path, out)
}

fn orders_text(report: &OrdersReport) -> String {
    let mut out = format!(
        "{} observations, band +/-{:.4}\n{:>4} {:>10} {:>10} {:>10} {:>10}\n",
        report.observations, report.center.band, "lag", "acf_c", "pacf_c", "acf_r", "pacf_r"
    );
    for lag in 1..report.center.acf.len() {
        out.push_str(&format!(
            "{lag:>4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}\n",
            report.center.acf[lag], report.center.pacf[lag], report.range.acf[lag], report.range.pacf[lag]
        ));
    }
    let kind = if report.pinned { "pinned" } else { "selected" };
    out.push_str(&format!("{kind} orders: center {}, range {}\n", report.center.order, report.range.order));
    out
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(jobs) = args.jobs {
        cfg.jobs = Some(jobs);
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    }
    if args.dry_run {
        print!("{}", cfg.plan());
        return Ok(());
    }
    let base = args.config.parent().filter(|p| !p.as_os_str().is_empty());
    let output = run_experiment(&cfg, base).map_err(|e| Failure::runtime("run", e))?;
    output.report.write(&args.out).map_err(|e| Failure::runtime("write report", e))?;
    output.model.save(args.out.join(MODEL_FILE)).map_err(|e| Failure::runtime("write model", e))?;
    print!("{}", output.report.summary_table());
    println!("wrote report.json, report.csv and {MODEL_FILE} to {}", args.out.display());
    Ok(())
}
