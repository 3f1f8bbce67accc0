//! Scenario runner for the magnon-bath qubit chain: configuration, figure
//! scenarios, disorder ensembles and provenance-stamped outputs.

pub mod config;
pub mod disorder;
pub mod error;
pub mod output;
pub mod scenarios;

use std::path::Path;
use std::time::Instant;

pub use config::ScenarioConfig;
pub use error::RunError;
pub use output::{Artifact, RunManifest, Table};
pub use scenarios::{scenario, Context, Scenario, ScenarioOutput, SCENARIO_KINDS};

use output::{Normalization, Seeds};

pub const CONFIG_NAME: &str = "config.toml";

/// Resolves and runs a scenario without touching the filesystem.
pub fn execute(config: &ScenarioConfig) -> Result<(Context, ScenarioOutput), RunError> {
    let runner = scenario(&config.kind)?;
    let ctx = Context::resolve(config)?;
    let out = runner.run(&ctx)?;
    Ok((ctx, out))
}

/// Runs a scenario and writes its data files, the resolved configuration and
/// finally the manifest into `dir`.
pub fn run_scenario(config: &ScenarioConfig, dir: &Path) -> Result<RunManifest, RunError> {
    let start = Instant::now();
    let (ctx, mut out) = execute(config)?;
    let resolved = config.to_toml();
    out.artifacts.push(Artifact::Text { name: CONFIG_NAME.into(), contents: resolved.clone() });
    let norm = Normalization::from_scales(&ctx.scales);
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: config.kind.clone(),
        config: resolved,
        derived_scales: ctx.scales.clone(),
        normalization: norm,
        seeds: Seeds { master_seed: config.seed, realization_seeds: out.realization_seeds.clone() },
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        files: Vec::new(),
    };
    output::persist(dir, &out.artifacts, &norm, manifest)
}
