use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use neat_core::export::save_genome;
use neat_core::evolution::evolve_with;
use neat_core::{RngKey, RunStats};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Seeds};
use crate::{with_threads, CliError};

#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub config: Option<PathBuf>,
    /// Re-run exactly what an earlier manifest describes.
    pub manifest: Option<PathBuf>,
    pub overrides: Vec<String>,
    /// Replaces the config's `seed` list.
    pub seeds: Option<Vec<u64>>,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutputs {
    pub seed: u64,
    pub stats: PathBuf,
    pub timing: PathBuf,
    pub best_genome: PathBuf,
    pub summary: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub outputs: Vec<SeedOutputs>,
    pub started_at: String,
    pub finished_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub generations: usize,
    pub best_fitness: f64,
    pub solved: bool,
    pub total_ms: f64,
    pub species_count: usize,
}

/// `3`, `0..9` (inclusive) or `1,4,7`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("seeds: cannot parse `{spec}` (use 3, 0..9 or 1,4,7)"));
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn timestamp() -> String {
    chrono::Local::now().to_rfc3339()
}

fn write_manifest(path: &Path, m: &RunManifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(m).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))
}

/// Stats rows hold only deterministic columns, so identical runs produce
/// identical files; wall-clock times go to the separate timing file.
fn stats_row(s: &RunStats) -> String {
    format!("{},{},{},{},{}\n", s.generation, s.best, s.mean, s.std, s.species_count)
}

/// Runs every seed in turn, writing `<out>/manifest.json` before the first
/// generation and `<out>/seed_<s>/` with `stats.csv`, `timing.csv`,
/// `best_genome.json` and `summary.json` per seed.
pub fn cmd_run(args: &RunArgs) -> Result<Vec<SeedReport>, CliError> {
    let (cfg, seeds) = match &args.manifest {
        Some(m) => {
            let m = read_manifest(m)?;
            (m.config, m.seeds)
        }
        None => {
            let cfg = ExperimentConfig::load(args.config.as_deref(), &args.overrides)?;
            let seeds = args.seeds.clone().unwrap_or_else(|| cfg.seed.to_vec());
            (cfg, seeds)
        }
    };
    if seeds.is_empty() {
        return Err(CliError::Config("seeds: empty list".into()));
    }
    let problem = cfg.problem()?;
    // Surface config errors before anything is written.
    cfg.neat_config(problem.as_ref(), seeds[0])?;

    fs::create_dir_all(&args.out)?;
    let outputs: Vec<SeedOutputs> = seeds
        .iter()
        .map(|&seed| {
            let dir = args.out.join(format!("seed_{seed}"));
            SeedOutputs {
                seed,
                stats: dir.join("stats.csv"),
                timing: dir.join("timing.csv"),
                best_genome: dir.join("best_genome.json"),
                summary: dir.join("summary.json"),
            }
        })
        .collect();
    let mut manifest = RunManifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: ExperimentConfig { seed: Seeds::Many(seeds.clone()), ..cfg.clone() },
        seeds: seeds.clone(),
        outputs: outputs.clone(),
        started_at: timestamp(),
        finished_at: None,
    };
    let manifest_path = args.out.join("manifest.json");
    write_manifest(&manifest_path, &manifest)?;

    let mut reports = Vec::with_capacity(seeds.len());
    for out in &outputs {
        let neat = cfg.neat_config(problem.as_ref(), out.seed)?;
        fs::create_dir_all(out.stats.parent().expect("seed dir"))?;
        let mut stats = BufWriter::new(File::create(&out.stats)?);
        let mut timing = BufWriter::new(File::create(&out.timing)?);
        stats.write_all(b"generation,best,mean,std,species_count\n")?;
        timing.write_all(b"generation,elapsed_ms\n")?;

        let mut io_err: Option<std::io::Error> = None;
        let quiet = args.quiet;
        let seed = out.seed;
        let start = Instant::now();
        let outcome = with_threads(args.threads, || {
            evolve_with(problem.as_ref(), &neat, RngKey::from_seed(seed), |s| {
                let res = stats
                    .write_all(stats_row(s).as_bytes())
                    .and_then(|_| writeln!(timing, "{},{}", s.generation, s.elapsed_ms));
                if let Err(e) = res {
                    io_err.get_or_insert(e);
                }
                if !quiet {
                    println!(
                        "seed {seed} gen {:>4}  best {:.6}  mean {:.6}  std {:.6}  species {:>2}  {:.1} ms",
                        s.generation, s.best, s.mean, s.std, s.species_count, s.elapsed_ms
                    );
                }
            })
        })??;
        let total_ms = start.elapsed().as_secs_f64() * 1e3;
        if let Some(e) = io_err {
            return Err(e.into());
        }
        stats.flush()?;
        timing.flush()?;
        fs::write(&out.best_genome, save_genome(&outcome.best, &outcome.schema))?;

        let last = outcome.stats.last().expect("at least one generation");
        let report = SeedReport {
            seed,
            generations: outcome.stats.len(),
            best_fitness: outcome.best_fitness,
            solved: outcome.solved,
            total_ms,
            species_count: last.species_count,
        };
        let summary = serde_json::json!({
            "seed": seed,
            "problem": cfg.problem,
            "generations": report.generations,
            "best_fitness": report.best_fitness,
            "solved": report.solved,
            "total_ms": report.total_ms,
            "final_species_sizes": last.species_sizes,
        });
        fs::write(&out.summary, serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))? + "\n")?;
        if !quiet {
            println!(
                "seed {seed} done: {} generations, best {:.6}{}, {:.0} ms",
                report.generations,
                report.best_fitness,
                if report.solved { " (target reached)" } else { "" },
                total_ms
            );
        }
        reports.push(report);
    }

    manifest.finished_at = Some(timestamp());
    write_manifest(&manifest_path, &manifest)?;
    Ok(reports)
}
