use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steiner_core::combinatorics::trial_seed;
use steiner_core::exact::enumerate_systems;
use steiner_core::experiments::{
    run_experiment, run_graph_census, ExperimentConfig, ExperimentKind, ExperimentReport,
};
use steiner_core::hypergraph::{read_edge_list, write_edge_list};
use steiner_core::process::{run_process, StopRule};
use steiner_core::{Error, GeneralGraph, Params, Result};

/// Simulation and verification experiments for the partial Steiner system
/// random process.
///
/// Exit status: 0 when every verdict passes, 1 when any verdict fails,
/// 2 on configuration or feasibility errors.
#[derive(Parser, Debug)]
#[command(name = "steiner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the process until connectivity (or until --m edges).
    Simulate,
    /// Hitting times tau_o and tau_c against the [m_L, m_R] window.
    HittingTimes,
    /// Isolated-vertex count at m_c against the Poisson limit.
    IsolatedDist,
    /// Monte Carlo acceptance probability against the count asymptotics.
    ValidateCount,
    /// Containment and degree-zero probabilities over uniform samples.
    ValidateContainment,
    /// Distribution of the process stage over all systems (no verdict).
    UniformityProbe,
    /// Class coverage and exact switching counts.
    SwitchingCensus,
    /// Exact number of systems with --m edges.
    Enumerate,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Simulate => ExperimentKind::Simulate,
            Command::HittingTimes => ExperimentKind::HittingTimes,
            Command::IsolatedDist => ExperimentKind::IsolatedDist,
            Command::ValidateCount => ExperimentKind::ValidateCount,
            Command::ValidateContainment => ExperimentKind::ValidateContainment,
            Command::UniformityProbe => ExperimentKind::UniformityProbe,
            Command::SwitchingCensus => ExperimentKind::SwitchingCensus,
            Command::Enumerate => ExperimentKind::Enumerate,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    r: Option<u32>,
    /// Defaults to 2.
    #[arg(long, global = true)]
    ell: Option<u32>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Key-value config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Records file; the report, summary and table go to sibling files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
    #[arg(long, global = true)]
    m: Option<u64>,
    /// Comma-separated edge counts.
    #[arg(long, global = true, value_delimiter = ',')]
    m_grid: Option<Vec<u64>>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    k: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Edge-list file to analyze (switching-census only).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Edge-list export: the final system of trial 0 (simulate) or every
    /// system as consecutive blocks (enumerate).
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
}

fn build_config(kind: ExperimentKind, a: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let mut cfg = ExperimentConfig::from_config_str(&text)?;
            if cfg.kind != kind {
                return Err(Error::Usage(format!(
                    "config file is for {}, not {}",
                    cfg.kind.name(),
                    kind.name()
                )));
            }
            if a.n.is_some() || a.r.is_some() || a.ell.is_some() {
                let p = cfg.params;
                cfg.params = Params::new(a.n.unwrap_or(p.n()), a.r.unwrap_or(p.r()), a.ell.unwrap_or(p.ell()))?;
            }
            cfg
        }
        None => {
            let (Some(n), Some(r)) = (a.n, a.r) else {
                return Err(Error::Usage("--n and --r are required without --config".into()));
            };
            ExperimentConfig::new(kind, Params::new(n, r, a.ell.unwrap_or(2))?)
        }
    };
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.threads {
        cfg.threads = v;
    }
    if let Some(v) = a.m {
        cfg.m = Some(v);
    }
    if let Some(v) = &a.m_grid {
        cfg.m_grid = v.clone();
    }
    if let Some(v) = a.c {
        cfg.c = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.omega {
        cfg.omega = Some(v);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_outputs(report: &ExperimentReport, a: &Common) -> Result<()> {
    let records = match a.format {
        Format::Jsonl => report.records_jsonl(),
        Format::Csv => report.records_csv(),
    };
    match &a.out {
        Some(path) => {
            fs::write(path, records)?;
            fs::write(sibling(path, ".report.json"), report.to_json()?)?;
            fs::write(sibling(path, ".summary.csv"), report.summary_csv())?;
            fs::write(sibling(path, ".table.txt"), report.table_text())?;
        }
        None => print!("{records}"),
    }
    Ok(())
}

fn export_edges(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    match cfg.kind {
        ExperimentKind::Simulate => {
            let stop = cfg.m.map_or(StopRule::AtConnectivity, StopRule::AtEdgeCount);
            let trace = run_process(cfg.params, trial_seed(cfg.seed, 0), stop)?;
            write_edge_list(&mut out, &cfg.params, &trace.accepted)?;
        }
        ExperimentKind::Enumerate => {
            for system in enumerate_systems(&cfg.params, cfg.m.unwrap_or(0))? {
                write_edge_list(&mut out, &cfg.params, &system)?;
            }
        }
        other => {
            return Err(Error::Usage(format!("--edges is not supported by {}", other.name())));
        }
    }
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let a = &cli.common;
    let kind = cli.command.kind();
    let report = if let Some(path) = &a.input {
        if kind != ExperimentKind::SwitchingCensus {
            return Err(Error::Usage(format!("--input is not supported by {}", kind.name())));
        }
        let (params, edges) = read_edge_list(BufReader::new(fs::File::open(path)?))?;
        let g = GeneralGraph::new(params, edges)?;
        let mut cfg = ExperimentConfig::new(kind, params);
        cfg.m = Some(g.edges().len() as u64);
        run_graph_census(&cfg, &g)?
    } else {
        let cfg = build_config(kind, a)?;
        if let Some(path) = &a.edges {
            export_edges(&cfg, path)?;
        }
        run_experiment(&cfg)?
    };
    write_outputs(&report, a)?;
    eprint!("{}", report.render());
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
