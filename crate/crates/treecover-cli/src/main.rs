//! `treecover <experiment> [options]`: run one experiment and write its report.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use serde_json::Value;
use treecover::config::{parse_value, Params, RunConfig, DEFAULT_SEED};
use treecover::experiments::{ExperimentRegistry, RunContext};
use treecover::report::{emit, ExperimentReport, Format};
use treecover::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "treecover", version, about = "Cover-time and local-time experiments on binary trees")]
struct Cli {
    /// Experiment name; `--list` shows them all.
    experiment: Option<String>,

    /// JSON or TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    depth: Option<u32>,
    /// Multiply every default replica count.
    #[arg(long)]
    scale: Option<f64>,
    /// `event-loop` or `branching`, where the experiment takes a sampler.
    #[arg(long)]
    sampler: Option<String>,
    /// Any other parameter; `name.key=value` reaches one suite member only.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,

    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv", "both"])]
    format: Option<String>,

    /// Print experiment names and exit.
    #[arg(long)]
    list: bool,
    /// Suppress the per-test listing.
    #[arg(long, short)]
    quiet: bool,
}

impl Cli {
    fn as_config(&self) -> anyhow::Result<RunConfig> {
        let mut params = std::collections::BTreeMap::new();
        let numeric = [
            ("n", self.n.map(Value::from)),
            ("k", self.k.map(Value::from)),
            ("s", self.s.map(Value::from)),
            ("u", self.u.map(Value::from)),
            ("eta", self.eta.map(Value::from)),
            ("replicas", self.replicas.map(Value::from)),
            ("depth", self.depth.map(Value::from)),
            ("scale", self.scale.map(Value::from)),
            ("sampler", self.sampler.clone().map(Value::from)),
        ];
        for (k, v) in numeric {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        }
        for kv in &self.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--param expects KEY=VALUE, got {kv:?}"))?;
            params.insert(k.trim().to_string(), parse_value(v.trim()));
        }
        Ok(RunConfig {
            experiment: self.experiment.clone(),
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            format: self.format.as_deref().map(str::parse).transpose()?,
            params,
        })
    }
}

fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var("TREECOVER_SEED") {
        Ok(s) => Ok(Some(s.trim().parse().with_context(|| format!("TREECOVER_SEED = {s:?}"))?)),
        Err(_) => Ok(None),
    }
}

fn summarize(report: &ExperimentReport, quiet: bool) {
    if !quiet {
        for t in &report.tests {
            println!(
                "  {} {:<48} {}",
                if t.pass { "pass" } else { "FAIL" },
                t.name,
                t.detail
            );
        }
        for n in &report.notes {
            println!("  note: {n}");
        }
    }
    let passed = report.tests.iter().filter(|t| t.pass).count();
    println!(
        "{}: {} ({passed}/{} tests pass, seed {})",
        report.name,
        if report.pass { "PASS" } else { "FAIL" },
        report.tests.len(),
        report.seeds.master
    );
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let registry = ExperimentRegistry::default();
    if cli.list {
        for e in registry.iter() {
            println!("{:<12} {}", e.name(), e.description());
        }
        return Ok(0);
    }
    let flags = cli.as_config()?;
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?.merge(flags),
        None => flags,
    };
    let Some(name) = config.experiment.clone() else {
        eprintln!("error: no experiment given; try --list");
        return Ok(EXIT_USAGE);
    };
    if let Err(e) = registry.get(&name) {
        eprintln!("error: {e}; known: {}", registry.names().join(", "));
        return Ok(EXIT_USAGE);
    }
    let seed = match config.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(DEFAULT_SEED),
    };
    let workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let format = config.format.unwrap_or(Format::Both);
    let ctx = RunContext::new(seed, Params::new(config.params.clone()), workers)?;

    match registry.run(&name, &ctx) {
        Ok(report) => {
            let files = emit(&report, &out, format)?;
            summarize(&report, cli.quiet);
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(if report.pass { 0 } else { EXIT_FAIL })
        }
        Err(e @ (Error::Argument(_) | Error::Range(_) | Error::Config(_) | Error::UnknownSampler(_))) => {
            eprintln!("error: {e}");
            Ok(EXIT_USAGE)
        }
        Err(e) => {
            // partial report: what was configured, and why it stopped
            let mut report = ExperimentReport::new(&name, seed);
            for (k, v) in ctx.params.effective() {
                report.params.insert(k, v);
            }
            report.note(format!("aborted: {e}"));
            report.finalize();
            report.pass = false;
            let files = emit(&report, &out, format)?;
            eprintln!("error: {e}");
            for f in files {
                eprintln!("wrote partial report {}", f.display());
            }
            Ok(EXIT_NUMERIC)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
