mod commands;
mod output;

use clap::{Parser, Subcommand};
use commands::{exit_code, Context, Outcome};
use fracmon::config::ExperimentConfig;
use fracmon::quad::QuadOptions;
use output::Artifacts;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fracmon", version, about = "Fractional monodromy of m:-n resonant systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's `output` or `./out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Factor applied to all quadrature tolerances.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Worker threads for parallel grids (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Recorded in every output; the computations are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Admissibility report for the system.
    Validate,
    /// Asymptotic discriminant locus with root-gap check.
    Discriminant,
    /// Root trajectories along a parameter path.
    RootsTrack,
    /// Theta, tau and T over a grid of regular values.
    PeriodScan,
    /// Residue at the pole and the pole-cycle sum.
    Residue,
    /// Monodromy from one-sided real limits.
    MonodromyReal,
    /// Monodromy from analytic continuation around the critical line.
    MonodromyComplex,
    /// Transport of the real oval along semicircles.
    Transport,
    /// Semiclassical lattice and cell transport.
    Spectrum,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Discriminant => "discriminant",
            Command::RootsTrack => "roots-track",
            Command::PeriodScan => "period-scan",
            Command::Residue => "residue",
            Command::MonodromyReal => "monodromy-real",
            Command::MonodromyComplex => "monodromy-complex",
            Command::Transport => "transport",
            Command::Spectrum => "spectrum",
        }
    }
}

struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn input(kind: &str, message: impl Into<String>) -> Self {
        Failure { code: 2, kind: kind.into(), message: message.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<fracmon::Error>() {
            Some(fe) => Failure { code: exit_code(fe), kind: fe.kind().into(), message: fe.to_string() },
            None => Failure::input("Io", format!("{e:#}")),
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input("Io", format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Failure::input(
            "ConfigParse",
            format!("{}: line {}, column {}, field `{}`: {}", path.display(), inner.line(), inner.column(), e.path(), inner),
        )
    })?;
    cfg.check_version().map_err(|e| Failure::input(e.kind(), e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    if !(cli.tolerance_scale.is_finite() && cli.tolerance_scale > 0.0) {
        return Err(Failure::input("InvalidInput", "--tolerance-scale must be positive"));
    }
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::input("InvalidInput", e.to_string()))?;
    }
    let path = cli.config.as_ref().ok_or_else(|| Failure::input("InvalidInput", "--config is required"))?;
    let config = load_config(path)?;
    let system = config.system.build().map_err(|e| Failure::input(e.kind(), e.to_string()))?;
    let dir = cli.out.clone().or_else(|| config.output.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    let cx = Context { config, system, quad: QuadOptions::default().scaled(cli.tolerance_scale), seed: cli.seed };
    let mut art = Artifacts::new(&dir);
    let outcome = match cli.command {
        Command::Validate => commands::validate(&cx, &mut art),
        Command::Discriminant => commands::discriminant(&cx, &mut art),
        Command::RootsTrack => commands::roots_track(&cx, &mut art),
        Command::PeriodScan => commands::period_scan(&cx, &mut art),
        Command::Residue => commands::residue(&cx, &mut art),
        Command::MonodromyReal => commands::monodromy(&cx, &mut art, false),
        Command::MonodromyComplex => commands::monodromy(&cx, &mut art, true),
        Command::Transport => commands::transport(&cx, &mut art),
        Command::Spectrum => commands::spectrum(&cx, &mut art),
    }?;
    art.write(cli.command.name())?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            print!("{}", String::from_utf8_lossy(&output::to_json(&o.summary).unwrap_or_default()));
            if o.validation_failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            let err = serde_json::json!({
                "schemaVersion": fracmon::config::SCHEMA_VERSION,
                "error": { "kind": f.kind, "message": f.message, "exitCode": f.code },
            });
            eprintln!("{err}");
            ExitCode::from(f.code)
        }
    }
}
