use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use neat_core::evolution::evolve_with;
use neat_core::RngKey;

use crate::config::ExperimentConfig;
use crate::{with_threads, CliError};

#[derive(Debug, Clone, Default)]
pub struct BenchArgs {
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub seed: u64,
    /// Population sizes to time in turn; the config's `pop_size` otherwise.
    pub sweep: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub pop_size: usize,
    /// Wall clock of the whole run, initialization included.
    pub total_ms: f64,
    pub per_generation_ms: Vec<f64>,
    /// Best fitness per generation.
    pub trajectory: Vec<f64>,
}

impl BenchRow {
    pub fn generations(&self) -> usize {
        self.per_generation_ms.len()
    }

    pub fn cumulative_ms(&self) -> Vec<f64> {
        self.per_generation_ms
            .iter()
            .scan(0.0, |acc, &t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }
}

/// Times one run per population size. Writes `timing.csv` (single run) or
/// `sweep.csv` plus `timing_<pop>.csv` (sweep) into `out` when given.
pub fn cmd_bench(args: &BenchArgs) -> Result<Vec<BenchRow>, CliError> {
    let cfg = ExperimentConfig::load(args.config.as_deref(), &args.overrides)?;
    let problem = cfg.problem()?;
    let sizes = args.sweep.clone().unwrap_or_else(|| vec![cfg.pop_size]);
    if sizes.is_empty() {
        return Err(CliError::Config("sweep: empty list".into()));
    }
    let configs = sizes
        .iter()
        .map(|&p| cfg.neat_config(problem.as_ref(), args.seed).map(|c| neat_core::NeatConfig { pop_size: p, ..c }))
        .collect::<Result<Vec<_>, _>>()?;
    for c in &configs {
        c.validate()?;
    }

    let mut rows = Vec::with_capacity(configs.len());
    for neat in &configs {
        let mut per_gen = Vec::new();
        let mut best = Vec::new();
        let start = Instant::now();
        let quiet = args.quiet;
        let mut cumulative = 0.0;
        with_threads(args.threads, || {
            evolve_with(problem.as_ref(), neat, RngKey::from_seed(args.seed), |s| {
                cumulative += s.elapsed_ms;
                per_gen.push(s.elapsed_ms);
                best.push(s.best);
                if !quiet {
                    println!(
                        "pop {:>6} gen {:>4}  {:>10.3} ms  cumulative {:>12.3} ms  best {:.6}",
                        neat.pop_size, s.generation, s.elapsed_ms, cumulative, s.best
                    );
                }
            })
        })??;
        let total_ms = start.elapsed().as_secs_f64() * 1e3;
        rows.push(BenchRow { pop_size: neat.pop_size, total_ms, per_generation_ms: per_gen, trajectory: best });
    }

    let mut table = String::from("pop_size,generations,total_ms,ms_per_generation,best\n");
    for r in &rows {
        let _ = writeln!(
            table,
            "{},{},{:.3},{:.3},{}",
            r.pop_size,
            r.generations(),
            r.total_ms,
            r.cumulative_ms().last().copied().unwrap_or(0.0) / r.generations().max(1) as f64,
            r.trajectory.last().copied().unwrap_or(f64::NAN)
        );
    }
    if !args.quiet && args.sweep.is_some() {
        println!();
        println!("{:>9}  {:>11}  {:>12}  {:>12}", "pop_size", "generations", "total_ms", "ms/gen");
        for r in &rows {
            println!(
                "{:>9}  {:>11}  {:>12.1}  {:>12.3}",
                r.pop_size,
                r.generations(),
                r.total_ms,
                r.cumulative_ms().last().copied().unwrap_or(0.0) / r.generations().max(1) as f64
            );
        }
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        for r in &rows {
            let mut csv = String::from("generation,elapsed_ms,cumulative_ms\n");
            for (g, (t, c)) in r.per_generation_ms.iter().zip(r.cumulative_ms()).enumerate() {
                let _ = writeln!(csv, "{g},{t},{c}");
            }
            let name = if args.sweep.is_some() { format!("timing_{}.csv", r.pop_size) } else { "timing.csv".into() };
            fs::write(dir.join(name), csv)?;
        }
        if args.sweep.is_some() {
            fs::write(dir.join("sweep.csv"), &table)?;
        }
    }
    Ok(rows)
}
