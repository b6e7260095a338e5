//! Experiment matrices with a resumable CSV result log.

use std::collections::{BTreeSet, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use batchsched_core::{run, IgConfig, Instance, Toggles, Variant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::BenchArgs;
use crate::commands::load_instance;
use crate::{CliError, CliResult};

/// One solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub instance: String,
    pub variant: Variant,
    pub eta: usize,
    pub config: String,
    pub run: usize,
    pub seed: u64,
    pub twct: i64,
    pub feasible: bool,
    pub time_s: f64,
    pub iterations_to_best: usize,
}

impl ResultRecord {
    pub fn key(&self) -> CellKey {
        CellKey {
            instance: self.instance.clone(),
            variant: self.variant,
            eta: self.eta,
            config: self.config.clone(),
            run: self.run,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub instance: String,
    pub variant: Variant,
    pub eta: usize,
    pub config: String,
    pub run: usize,
}

impl CellKey {
    /// Seed of this cell: the first eight bytes of the SHA-256 digest of the
    /// base seed and the key.
    pub fn seed(&self, base: u64) -> u64 {
        let text = format!("{base}|{}|{}|{}|{}|{}", self.instance, self.variant, self.eta, self.config, self.run);
        let d = Sha256::digest(text.as_bytes());
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Full description of an experiment matrix.
#[derive(Debug, Clone)]
pub struct BenchRunSpec {
    pub instances: Vec<(String, Instance)>,
    pub variants: Vec<Variant>,
    pub etas: Vec<usize>,
    pub runs: usize,
    pub base_seed: u64,
    pub configs: Vec<(String, Toggles)>,
    pub log: PathBuf,
    pub threads: usize,
}

/// `Complete`, an ablation label, or the switched-off features joined by `+`.
pub fn toggles_label(t: Toggles) -> String {
    if let Some((label, _)) = Toggles::ablation_set().into_iter().find(|(_, a)| *a == t) {
        return label.to_string();
    }
    let parts: Vec<&str> = [
        (t.local_search, "No LS"),
        (t.sim_annealing, "No SA"),
        (t.destroy_repair, "No DR"),
        (t.infeasibility, "No Inf."),
        (t.restore, "No Rest."),
    ]
    .iter()
    .filter(|(on, _)| !on)
    .map(|(_, l)| *l)
    .collect();
    parts.join("+")
}

/// Expands files and directories into `(stem, path)` pairs, sorted by stem.
pub fn collect_instance_paths(paths: &[PathBuf]) -> CliResult<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in fs::read_dir(p)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "txt") {
                    files.push(path);
                }
            }
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(CliError::Usage(format!("no such instance file or directory: {}", p.display())));
        }
    }
    let mut out: Vec<(String, PathBuf)> = files
        .into_iter()
        .map(|f| (f.file_stem().unwrap_or_default().to_string_lossy().into_owned(), f))
        .collect();
    out.sort();
    out.dedup();
    for w in out.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(CliError::Usage(format!("duplicate instance name {:?}", w[0].0)));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no instance files found".into()));
    }
    Ok(out)
}

impl BenchRunSpec {
    pub fn from_args(args: &BenchArgs) -> CliResult<Self> {
        let mut instances = Vec::new();
        for (name, path) in collect_instance_paths(&args.instances)? {
            instances.push((name, load_instance(&path)?));
        }
        let configs = if args.ablation {
            if args.toggles.no_ls || args.toggles.no_sa || args.toggles.no_dr || args.toggles.no_inf || args.toggles.no_restore {
                return Err(CliError::Usage("--ablation cannot be combined with --no-* flags".into()));
            }
            Toggles::ablation_set().into_iter().map(|(l, t)| (l.to_string(), t)).collect()
        } else {
            let t = args.toggles.apply(Toggles::default());
            vec![(toggles_label(t), t)]
        };
        let spec = BenchRunSpec {
            instances,
            variants: dedup(&args.variants),
            etas: dedup(&args.etas),
            runs: args.runs,
            base_seed: args.seed,
            configs,
            log: args.out_dir.join(&args.log),
            threads: args.threads,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.instances.is_empty() || self.variants.is_empty() || self.etas.is_empty() || self.runs == 0 {
            return Err(CliError::Usage("need at least one instance, variant, budget and run".into()));
        }
        if self.etas.contains(&0) {
            return Err(CliError::Usage("budgets must be at least 1".into()));
        }
        Ok(())
    }

    /// Every cell of the matrix in a fixed order.
    pub fn cells(&self) -> Vec<(usize, CellKey, Toggles)> {
        let mut out = Vec::new();
        for (idx, (name, _)) in self.instances.iter().enumerate() {
            for &variant in &self.variants {
                for &eta in &self.etas {
                    for (label, t) in &self.configs {
                        for run in 1..=self.runs {
                            let key = CellKey { instance: name.clone(), variant, eta, config: label.clone(), run };
                            out.push((idx, key, *t));
                        }
                    }
                }
            }
        }
        out
    }
}

fn dedup<T: Ord + Copy>(v: &[T]) -> Vec<T> {
    let mut seen = BTreeSet::new();
    v.iter().copied().filter(|x| seen.insert(*x)).collect()
}

pub fn read_log(path: &Path) -> CliResult<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec.map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSummary {
    pub written: usize,
    pub skipped: usize,
}

/// Runs the cells missing from the log and appends their records. Workers
/// hand records to a single writer, which flushes after each one.
pub fn run_bench(spec: &BenchRunSpec) -> CliResult<BenchSummary> {
    spec.validate()?;
    let existing = if spec.log.exists() { read_log(&spec.log)? } else { Vec::new() };
    let done: HashSet<CellKey> = existing.iter().map(ResultRecord::key).collect();
    let todo: Vec<_> = spec.cells().into_iter().filter(|(_, k, _)| !done.contains(k)).collect();
    let skipped = spec.cells().len() - todo.len();

    if let Some(dir) = spec.log.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let needs_header = fs::metadata(&spec.log).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(&spec.log)?;
    let mut writer = csv::WriterBuilder::new().has_headers(needs_header).from_writer(file);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| CliError::Domain(e.to_string()))?;
    let (tx, rx) = mpsc::channel::<ResultRecord>();
    let mut written = 0;
    let mut write_err: Option<CliError> = None;
    let worker_result = std::thread::scope(|s| {
        let handle = s.spawn(|| {
            pool.install(|| {
                todo.par_iter().try_for_each_with(tx, |tx, (idx, key, toggles)| {
                    let cfg = IgConfig {
                        eta: key.eta,
                        variant: key.variant,
                        toggles: *toggles,
                        seed: key.seed(spec.base_seed),
                        ..IgConfig::default()
                    };
                    let res = run(&spec.instances[*idx].1, &cfg)
                        .map_err(|e| CliError::Domain(format!("{}: {e}", key.instance)))?;
                    let rec = ResultRecord {
                        instance: key.instance.clone(),
                        variant: key.variant,
                        eta: key.eta,
                        config: key.config.clone(),
                        run: key.run,
                        seed: cfg.seed,
                        twct: res.best_cost,
                        feasible: res.feasible,
                        time_s: res.wall_time.as_secs_f64(),
                        iterations_to_best: res.iterations_to_best,
                    };
                    tx.send(rec).map_err(|_| CliError::Domain("result writer stopped".into()))
                })
            })
        });
        for rec in rx {
            let r = writer.serialize(&rec).and_then(|_| writer.flush().map_err(csv::Error::from));
            if let Err(e) = r {
                write_err = Some(e.into());
                break;
            }
            written += 1;
        }
        handle.join().expect("bench worker panicked")
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    worker_result?;
    Ok(BenchSummary { written, skipped })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = BenchRunSpec::from_args(args)?;
    let s = run_bench(&spec)?;
    writeln!(out, "records_written={} skipped={} log={}", s.written, s.skipped, spec.log.display())?;
    Ok(())
}
