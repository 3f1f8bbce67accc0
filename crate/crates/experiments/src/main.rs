use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use coopmag::{run_scenario, RunError, ScenarioConfig, SCENARIO_KINDS};

/// Cooperative dynamics of a qubit chain coupled through a magnon bath.
#[derive(Debug, Parser)]
#[command(name = "coopmag", version)]
struct Cli {
    /// Scenario kind.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SCENARIO_KINDS))]
    kind: String,

    /// TOML scenario file; every key is optional.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[arg(long)]
    preset: Option<String>,

    /// Master seed for disorder and trajectories.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Dotted-key override, e.g. `--set dynamics.t_max=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[arg(long)]
    n_qubits: Option<usize>,

    /// Comma-separated spacings in units of lambda.
    #[arg(long, value_delimiter = ',')]
    a_over_lambda: Vec<f64>,

    /// Comma-separated temperatures in K.
    #[arg(long, value_delimiter = ',')]
    temperature: Vec<f64>,

    /// dense | trajectories
    #[arg(long)]
    solver: Option<String>,

    #[arg(long)]
    trajectories: Option<usize>,

    /// Disorder strength.
    #[arg(long)]
    xi: Option<f64>,

    /// Number of disorder realizations.
    #[arg(long)]
    realizations: Option<usize>,

    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, String)>, RunError> {
        let mut out = vec![("kind".to_string(), format!("{:?}", self.kind))];
        let list = |v: &[f64]| format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "));
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        push("preset", self.preset.as_ref().map(|p| format!("{p:?}")));
        push("seed", self.seed.map(|s| s.to_string()));
        push("output.directory", self.out.as_ref().map(|p| format!("{:?}", p.display().to_string())));
        push("qubits.n_qubits", self.n_qubits.map(|n| n.to_string()));
        push("sweep.a_over_lambda", (!self.a_over_lambda.is_empty()).then(|| list(&self.a_over_lambda)));
        push("sweep.temperature", (!self.temperature.is_empty()).then(|| list(&self.temperature)));
        push("dynamics.solver", self.solver.as_ref().map(|s| format!("{s:?}")));
        push("dynamics.n_trajectories", self.trajectories.map(|n| n.to_string()));
        push("disorder.xi", self.xi.map(|x| format!("{x:?}")));
        push("disorder.n_realizations", self.realizations.map(|n| n.to_string()));
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| RunError::Config(format!("--set expects KEY=VALUE, got '{item}'")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

fn configure_threads() -> Result<(), RunError> {
    let Ok(raw) = std::env::var("COOPMAG_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RunError::Config(format!("COOPMAG_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RunError::Config(format!("COOPMAG_THREADS: {e}")))
}

fn run(cli: &Cli) -> Result<(), RunError> {
    configure_threads()?;
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| RunError::Io(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let config = ScenarioConfig::from_toml_with_overrides(&text, &cli.overrides()?)?;
    config.validate()?;
    if cli.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let dir = PathBuf::from(&config.output.directory);
    let manifest = run_scenario(&config, &dir)?;
    log::info!("{} finished in {:.1} s", manifest.kind, manifest.wall_clock_seconds);
    for file in &manifest.files {
        println!("{}  {}", file.sha256, dir.join(&file.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coopmag: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
