//! `tnet`: threshold-network estimation and market-regime metrics.
//!
//! Three subcommands drive the pipeline:
//!
//! - `synth`: generate a deterministic synthetic price panel
//! - `sweep`: estimate the optimal threshold by maximizing dynamic
//!   consistence over a threshold grid
//! - `metrics`: per-window network statistics at a fixed threshold
//!
//! Exit codes: 0 success, 1 malformed input, 2 invalid configuration,
//! 3 degenerate data (no defined consistence anywhere on the grid).

mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tnet_core::dissim::{d_measure_terms_from_profiles, DissimProfile};
use tnet_core::error::{Error, Result};
use tnet_core::estimate::{render_sweep_table, sweep, SweepConfig};
use tnet_core::ingest::{log_returns, parse_prices, write_prices, PriceTable, ReturnSeries};
use tnet_core::metrics::{metrics_series, render_metrics_table};
use tnet_core::netgraph::ThresholdGraph;
use tnet_core::rolling::{correlation_matrix, window_starts, write_matrix_dump, CorrMatrix};
use tnet_core::synth::generate_market;

use config::{resolve, Effective, FileConfig, Overrides};
use manifest::{deterministic_block, render_manifest, sha256_hex};

#[derive(Parser)]
#[command(
    name = "tnet",
    version,
    about = "Threshold networks for stock-market correlation matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the optimal threshold over a grid by dynamic consistence
    Sweep(AnalysisArgs),
    /// Evolutionary network metrics at a fixed threshold
    Metrics(AnalysisArgs),
    /// Generate a synthetic two-regime price panel
    Synth(SynthArgs),
}

#[derive(Args)]
struct AnalysisArgs {
    /// Input price file (CSV: date,<id1>,<id2>,...)
    #[arg(long)]
    input: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = "tnet-out")]
    out_dir: PathBuf,
    /// TOML config file; flags override its keys one-to-one
    #[arg(long)]
    config: Option<PathBuf>,
    /// Window width in trading days
    #[arg(long)]
    width: Option<usize>,
    /// Window step in trading days
    #[arg(long)]
    step: Option<usize>,
    /// Log-return interval in trading days
    #[arg(long)]
    return_interval: Option<usize>,
    /// Missing-data policy: drop-date | forward-fill
    #[arg(long)]
    missing_policy: Option<String>,
    /// Grid start; omit to derive from the observed correlation range
    #[arg(long, allow_hyphen_values = true)]
    theta_min: Option<f64>,
    /// Grid end
    #[arg(long)]
    theta_max: Option<f64>,
    /// Grid step
    #[arg(long)]
    theta_step: Option<f64>,
    /// Weight of the distance-distribution term
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of the node-dispersion term
    #[arg(long)]
    beta: Option<f64>,
    /// Weight of the centrality term
    #[arg(long)]
    gamma: Option<f64>,
    /// Matrix difference norm: frobenius | spectral
    #[arg(long)]
    norm: Option<String>,
    /// Worker threads (default: all cores); never changes results
    #[arg(long)]
    workers: Option<usize>,
    /// Histogram bins for the clustering entropy
    #[arg(long)]
    cluster_bins: Option<usize>,
    /// Threshold for `metrics` (required there, ignored by `sweep`)
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Dump each window's correlation matrix (binary, documented layout)
    #[arg(long)]
    dump_matrices: bool,
    /// Dump each window's edge list at the analysis threshold
    #[arg(long)]
    dump_edgelists: bool,
    /// Dump per-window-pair dissimilarity term contributions
    #[arg(long)]
    dump_terms: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Output price file
    #[arg(long, default_value = "prices.csv")]
    out: PathBuf,
    /// TOML config file; flags override its keys one-to-one
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of instruments
    #[arg(long)]
    n: Option<usize>,
    /// Number of trading days
    #[arg(long)]
    days: Option<usize>,
    /// Generator seed
    #[arg(long)]
    seed: Option<u64>,
    /// Daily return volatility
    #[arg(long)]
    idio_vol: Option<f64>,
    /// Regime schedule `start:loading,start:loading,...`
    #[arg(long)]
    regimes: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match outcome {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_)
        | Error::MalformedRow { .. }
        | Error::NonPositivePrice { .. }
        | Error::DuplicateDate { .. }
        | Error::NonIncreasingDate { .. }
        | Error::DuplicateInstrument { .. }
        | Error::TooFewDates { .. }
        | Error::CorruptDump { .. } => 1,
        Error::IntervalTooLong { .. }
        | Error::WindowTooWide { .. }
        | Error::InvalidConfig { .. }
        | Error::InvalidWeights { .. }
        | Error::InvalidDistribution { .. }
        | Error::TooFewVertices { .. }
        | Error::SizeMismatch { .. }
        | Error::SequenceTooShort { .. }
        | Error::TooFewWindows { .. } => 2,
        Error::ZeroVariance { .. } | Error::AllUndefined { .. } | Error::NoConnectedPairs => 3,
    }
}

fn load_effective(config: &Option<PathBuf>, flags: Overrides) -> Result<Effective> {
    let file = match config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    resolve(&file, &flags)
}

fn analysis_overrides(args: &AnalysisArgs) -> Overrides {
    Overrides {
        width: args.width,
        step: args.step,
        return_interval: args.return_interval,
        missing_policy: args.missing_policy.clone(),
        theta_min: args.theta_min,
        theta_max: args.theta_max,
        theta_step: args.theta_step,
        alpha: args.alpha,
        beta: args.beta,
        gamma: args.gamma,
        norm: args.norm.clone(),
        workers: args.workers,
        cluster_bins: args.cluster_bins,
        theta: args.theta,
        ..Default::default()
    }
}

fn read_input(path: &Path, eff: &Effective) -> Result<(PriceTable, ReturnSeries, String)> {
    let bytes = fs::read(path)?;
    let fingerprint = sha256_hex(&bytes);
    let table = parse_prices(bytes.as_slice(), eff.missing_policy)?;
    let returns = log_returns(&table, eff.return_interval)?;
    Ok((table, returns, fingerprint))
}

fn window_matrices(returns: &ReturnSeries, eff: &Effective) -> Result<Vec<CorrMatrix>> {
    let starts = window_starts(returns.num_observations(), eff.window()?)?;
    starts
        .iter()
        .enumerate()
        .map(|(k, &s)| correlation_matrix(returns, s, eff.width, k))
        .collect()
}

fn echo(block: &[(String, String)]) {
    for (k, v) in block {
        println!("{k} = {v}");
    }
}

fn cmd_sweep(args: AnalysisArgs) -> Result<()> {
    let eff = load_effective(&args.config, analysis_overrides(&args))?;
    let (_, returns, fingerprint) = read_input(&args.input, &eff)?;

    let mut cfg = SweepConfig::new(eff.window()?);
    cfg.grid = eff.grid_spec()?;
    cfg.weights = eff.weights()?;
    cfg.norm = eff.norm;
    cfg.workers = eff.workers;
    let result = sweep(&returns, &cfg)?;

    fs::create_dir_all(&args.out_dir)?;
    let mut config_echo = eff.echo_analysis();
    config_echo.push(("grid_start", result.grid[0].to_string()));
    config_echo.push(("grid_end", result.grid.last().unwrap().to_string()));
    config_echo.push(("grid_points", result.grid.len().to_string()));
    let block = deterministic_block("sweep", Some((&args.input, &fingerprint)), &config_echo);
    let block_refs: Vec<(&str, String)> =
        block.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();

    let table_path = args.out_dir.join("sweep.csv");
    let mut buf = Vec::new();
    render_sweep_table(&result, &block_refs, &mut buf)?;
    fs::write(&table_path, &buf)?;

    let extra = vec![
        ("theta_hat".to_string(), result.theta_hat.to_string()),
        (
            "tied_thetas".to_string(),
            result
                .tied_thetas
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
        (
            "correlation_min".to_string(),
            result.correlation_range.0.to_string(),
        ),
        (
            "correlation_max".to_string(),
            result.correlation_range.1.to_string(),
        ),
    ];
    fs::write(
        args.out_dir.join("manifest.toml"),
        render_manifest(&block, eff.workers, &extra),
    )?;

    if args.dump_matrices || args.dump_edgelists || args.dump_terms {
        let mats = window_matrices(&returns, &eff)?;
        write_dumps(&args, &eff, &mats, result.theta_hat)?;
    }

    echo(&block);
    if result.tied_thetas.len() > 1 {
        println!(
            "tied_thetas = {}",
            result
                .tied_thetas
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        );
    }
    println!("theta_hat = {}", result.theta_hat);
    println!("output = {}", table_path.display());
    Ok(())
}

fn cmd_metrics(args: AnalysisArgs) -> Result<()> {
    let eff = load_effective(&args.config, analysis_overrides(&args))?;
    let theta = eff.theta.ok_or_else(|| Error::InvalidConfig {
        reason: "metrics needs --theta (or config key theta)".into(),
    })?;
    if !theta.is_finite() {
        return Err(Error::InvalidConfig {
            reason: format!("theta must be finite, got {theta}"),
        });
    }
    let (_, returns, fingerprint) = read_input(&args.input, &eff)?;

    let mats = window_matrices(&returns, &eff)?;
    let graphs: Vec<ThresholdGraph> = mats
        .iter()
        .map(|w| ThresholdGraph::from_matrix(w, theta))
        .collect();
    let rows = metrics_series(&graphs, &mats, eff.cluster_bins)?;

    fs::create_dir_all(&args.out_dir)?;
    let block = deterministic_block(
        "metrics",
        Some((&args.input, &fingerprint)),
        &eff.echo_analysis(),
    );
    let block_refs: Vec<(&str, String)> =
        block.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    let table_path = args.out_dir.join("metrics.csv");
    let mut buf = Vec::new();
    render_metrics_table(&rows, &block_refs, &mut buf)?;
    fs::write(&table_path, &buf)?;
    fs::write(
        args.out_dir.join("manifest.toml"),
        render_manifest(&block, eff.workers, &[]),
    )?;

    write_dumps(&args, &eff, &mats, theta)?;

    echo(&block);
    println!("windows = {}", rows.len());
    println!("output = {}", table_path.display());
    Ok(())
}

fn write_dumps(
    args: &AnalysisArgs,
    eff: &Effective,
    mats: &[CorrMatrix],
    theta: f64,
) -> Result<()> {
    if args.dump_matrices {
        let dir = args.out_dir.join("matrices");
        fs::create_dir_all(&dir)?;
        for w in mats {
            let mut buf = Vec::new();
            write_matrix_dump(w, &mut buf)?;
            fs::write(dir.join(format!("window_{:04}.bin", w.window_index())), buf)?;
        }
    }
    if args.dump_edgelists {
        let dir = args.out_dir.join("edges");
        fs::create_dir_all(&dir)?;
        for w in mats {
            let g = ThresholdGraph::from_matrix(w, theta);
            let mut buf = Vec::new();
            g.write_edge_list(&mut buf)?;
            fs::write(
                dir.join(format!("window_{:04}_theta_{theta}.txt", w.window_index())),
                buf,
            )?;
        }
    }
    if args.dump_terms {
        let profiles: Vec<DissimProfile> = mats
            .iter()
            .map(|w| DissimProfile::of(&ThresholdGraph::from_matrix(w, theta)))
            .collect::<Result<_>>()?;
        let weights = eff.weights()?;
        let mut buf = String::new();
        buf.push_str(&format!("# theta = {theta}\n"));
        buf.push_str("pair,term_distance,term_dispersion,term_centrality\n");
        for k in 0..profiles.len().saturating_sub(1) {
            let t = d_measure_terms_from_profiles(&profiles[k], &profiles[k + 1], weights)?;
            buf.push_str(&format!(
                "{k},{},{},{}\n",
                t.distance, t.dispersion, t.centrality
            ));
        }
        fs::write(args.out_dir.join("dissim_terms.csv"), buf)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let flags = Overrides {
        n: args.n,
        days: args.days,
        seed: args.seed,
        idio_vol: args.idio_vol,
        regimes: args.regimes.clone(),
        ..Default::default()
    };
    let eff = load_effective(&args.config, flags)?;
    let table = generate_market(&eff.synth_config())?;

    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut buf = Vec::new();
    write_prices(&table, &mut buf)?;
    fs::write(&args.out, &buf)?;

    let block = deterministic_block("synth", None, &eff.echo_synth());
    let manifest_path = args.out.with_extension("manifest.toml");
    let extra = vec![("output_sha256".to_string(), sha256_hex(&buf))];
    fs::write(&manifest_path, render_manifest(&block, None, &extra))?;

    echo(&block);
    println!("output = {}", args.out.display());
    Ok(())
}
