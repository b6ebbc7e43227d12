use std::fmt::Write as _;
use std::io::Write;
use std::net::SocketAddr;
use std::path::Path;

use ips_core::{
    classify_all, fixture, parse_manifest, prepare, render_csv, render_ladder_text, render_text,
    run_ladder, run_recursive, run_scenario, slack_candidates, ConfigError, Dataset, EngineConfig,
    ManifestError, NoObserver, RowError, Scenario, ScenarioError, Schedule,
};
use thiserror::Error;

use crate::args::{Cli, Command, ReportFormat, ResultFormat};
use crate::service;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable files, malformed config or manifest rows.
    #[error("{0}")]
    Invalid(String),
    /// The data is valid but does not fit the yard.
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Runtime(_) => 1,
            CliError::Infeasible(_) => 2,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_infeasible() {
            CliError::Infeasible(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(format!("config: {e}"))
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        CliError::Invalid(format!("manifest: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub fn load_config(path: Option<&Path>) -> Result<EngineConfig, CliError> {
    match path {
        Some(p) => {
            let config = EngineConfig::load(p)?;
            config.validate()?;
            Ok(config)
        }
        None => Ok(fixture::config()),
    }
}

/// Reads the manifest (or the bundled fixture) and returns the dataset
/// together with the rows that were rejected.
pub fn load_dataset(
    path: Option<&Path>,
    config: &EngineConfig,
) -> Result<(Dataset, Vec<RowError>), CliError> {
    let bytes = match path {
        Some(p) => std::fs::read(p)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", p.display())))?,
        None => fixture::MANIFEST_CSV.as_bytes().to_vec(),
    };
    let manifest = parse_manifest(&bytes)?;
    Ok((
        Dataset {
            containers: manifest.containers,
            current_date: config.planning_date(),
        },
        manifest.rejected,
    ))
}

fn warn_rejected(rejected: &[RowError], err: &mut dyn Write) -> std::io::Result<()> {
    for r in rejected {
        writeln!(err, "warning: skipped {r}")?;
    }
    Ok(())
}

/// Executes one command, writing its report to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    let (dataset, rejected) = load_dataset(cli.csv.as_deref(), &config)?;

    if let Command::Ingest = cli.command {
        writeln!(out, "accepted = {}", dataset.containers.len())?;
        writeln!(out, "rejected = {}", rejected.len())?;
        for r in &rejected {
            writeln!(out, "{r}")?;
        }
        return if rejected.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(format!(
                "{} rows rejected",
                rejected.len()
            )))
        };
    }
    warn_rejected(&rejected, err)?;

    match cli.command {
        Command::Ingest => unreachable!("handled above"),
        Command::Classify => out.write_all(classify_table(&dataset, &config)?.as_bytes())?,
        Command::Optimize {
            scenario,
            seed,
            format,
        } => {
            let scenario = Scenario::from_number(scenario)
                .ok_or_else(|| CliError::Invalid(format!("no scenario {scenario}")))?;
            let result = run_scenario(&dataset, scenario, &config, seed.unwrap_or(config.seed))?;
            match format {
                ResultFormat::Text => out.write_all(render_text(&result).as_bytes())?,
                ResultFormat::Json => {
                    let text = serde_json::to_string_pretty(&result)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    writeln!(out, "{text}")?;
                }
            }
        }
        Command::Schedule { rebalance } => {
            out.write_all(schedule_text(&dataset, &config, rebalance)?.as_bytes())?
        }
        Command::Report { format, seed } => {
            let results = run_ladder(&dataset, &config, seed.unwrap_or(config.seed))?;
            let text = match format {
                ReportFormat::Text => render_ladder_text(&results),
                ReportFormat::Csv => render_csv(&results),
            };
            out.write_all(text.as_bytes())?;
        }
        Command::Serve { port, bind } => {
            let preload = cli.csv.is_some().then_some(dataset);
            let engine = match preload {
                Some(d) => service::Engine::load(config, &d)?,
                None => service::Engine::empty(config)?,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(service::serve(engine, SocketAddr::new(bind, port), err))?;
        }
    }
    Ok(())
}

fn classify_table(dataset: &Dataset, config: &EngineConfig) -> Result<String, CliError> {
    let classes = classify_all(
        &dataset.containers,
        dataset.current_date,
        &config.coefficients,
    )
    .map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut out = String::from(
        "container_id,category,class,remaining_free_days,consignee_value,cargo_value,z1,z2,z3\n",
    );
    for c in &dataset.containers {
        let k = &classes[&c.id];
        let _ = writeln!(
            out,
            "{},{:?},{:?},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            c.id,
            k.operational_category,
            k.stack_class,
            k.remaining_free_days,
            k.consignee_value,
            k.cargo_value,
            k.scores.c1,
            k.scores.c2,
            k.scores.c3
        );
    }
    Ok(out)
}

fn block_line(out: &mut String, schedule: &Schedule, index: usize, before: Option<usize>) {
    let m = schedule.blocks()[index].truck_count();
    let flag = if m > schedule.serviceable_max() {
        " congested"
    } else {
        ""
    };
    let _ = match before {
        Some(b) => writeln!(out, "block.{index} = {b} -> {m}{flag}"),
        None => writeln!(out, "block.{index} = {m}{flag}"),
    };
}

fn schedule_text(
    dataset: &Dataset,
    config: &EngineConfig,
    rebalance: bool,
) -> Result<String, CliError> {
    let prep = prepare(dataset, config)?;
    let mut out = String::new();
    let _ = writeln!(out, "day = {}", prep.schedule.day());
    let _ = writeln!(out, "m_max = {}", prep.schedule.serviceable_max());
    if !rebalance {
        for b in 0..prep.schedule.blocks().len() {
            block_line(&mut out, &prep.schedule, b, None);
        }
        return Ok(out);
    }

    let candidates = slack_candidates(&dataset.containers, &prep.classes);
    let (after, report) = match run_recursive(&prep.schedule, &candidates, &mut NoObserver) {
        Ok(r) => r,
        Err(never) => match never {},
    };
    let before = prep.schedule.counts();
    for (b, &n) in before.iter().enumerate() {
        block_line(&mut out, &after, b, Some(n));
    }
    let _ = writeln!(out, "moves = {}", report.moves.len());
    let _ = writeln!(out, "created = {}", report.created.len());
    let _ = writeln!(out, "converged = {}", report.converged);
    for m in &report.moves {
        let _ = writeln!(
            out,
            "move {} {} -> {}",
            m.container_id, m.from_block, m.to_block
        );
    }
    for c in &report.created {
        let _ = writeln!(out, "create {} {}", c.container_id, c.block);
    }
    for u in &report.unresolved {
        let _ = writeln!(out, "unresolved {} {}", u.container_id, u.block);
    }
    Ok(out)
}
