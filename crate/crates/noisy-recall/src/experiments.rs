//! Experiment runner.
//!
//! Every Monte-Carlo trial draws from its own stream keyed by
//! `(experiment seed, grid point, trial)`. Trials fan out over a rayon pool,
//! results are collected in index order and reduced sequentially, so the
//! emitted CSV bytes do not depend on the worker count.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use noisy_recall_core::analysis::{self, PciRow};
use noisy_recall_core::generator::{self, construct_subspace_model};
use noisy_recall_core::recall::sequential_peeling;
use noisy_recall_core::{
    rng, GeneratorError, NetworkModel, NoiseSpec, PatternBasis, PatternNoise, PeelingLimits, Thresholds,
};
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind, ManifestInfo};
use crate::modelio;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stream id of the reference pattern used by correction-probability tables.
const REFERENCE_POINT: u64 = u64::MAX - 1;
/// Base stream ids of the stopping-set scenario.
const STOPPING_BUILD: u64 = 1 << 40;
const STOPPING_RUN: u64 = 1 << 41;
/// Attempts allowed per stopping set before giving up.
const STOPPING_ATTEMPTS: u64 = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Infeasible(#[from] GeneratorError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl RunError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Infeasible(_) => 2,
            RunError::Io { .. } => 3,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

fn invalid(msg: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Invalid(msg.into()))
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub model_sha256: String,
}

/// One aggregated row of a recall sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub upsilon: f64,
    pub nu: f64,
    pub trials: usize,
    pub ser_mean: f64,
    pub per_mean: f64,
    pub mean_iterations: f64,
    pub failure_rate: f64,
}

/// A constructed stopping set and how recall fared on it.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSet {
    /// `(neuron, error)` pairs, ascending by neuron.
    pub errors: Vec<(usize, i32)>,
    pub corrupted_clusters: usize,
    /// Candidates discarded because noiseless recall escaped them.
    pub rejected: usize,
}

/// Everything a run needs besides its configuration.
pub struct Setup {
    pub model: NetworkModel,
    pub basis: PatternBasis,
    pub thresholds: Thresholds,
    pub limits: PeelingLimits,
    pub model_sha256: String,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self, RunError> {
        config.validate()?;
        let (model, basis) = construct_subspace_model(&config.generator_spec())?;
        let model_sha256 = modelio::model_hash(&model);
        if let Some(info) = &config.manifest {
            if info.model_sha256 != model_sha256 {
                return Err(invalid(format!(
                    "regenerated model hash {model_sha256} differs from the manifest's {}",
                    info.model_sha256
                )));
            }
        }
        let thresholds = Thresholds::new(config.thresholds.psi, config.thresholds.phi, model.eta())
            .map_err(|e| invalid(e.to_string()))?;
        let limits = PeelingLimits { t_max: config.recall.t_max_inner, t_outer: config.recall.t_max_outer };
        Ok(Setup { model, basis, thresholds, limits, model_sha256 })
    }
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")
}

/// Canonical `(epsilon, upsilon, nu)` grid.
pub fn sweep_points(config: &ExperimentConfig) -> Vec<(f64, f64, f64)> {
    let n = &config.noise;
    let mut out = Vec::new();
    for &e in &n.epsilon_grid {
        for &u in &n.upsilon_grid {
            for &v in &n.nu_grid {
                out.push((e, u, v));
            }
        }
    }
    out
}

/// Outcome of one recall trial in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub symbol_errors: usize,
    pub pattern_error: bool,
    pub iterations: usize,
    pub failure: bool,
}

/// Per-trial outcomes of a recall sweep, one vector per point. Trial `t` of
/// point `p` uses stream `(seed, p, t)` for its pattern, its external error
/// and all internal noise.
pub fn sweep_trials(
    setup: &Setup,
    points: &[(f64, f64, f64)],
    s: u32,
    law: PatternNoise,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<Vec<TrialOutcome>>, RunError> {
    let noises: Vec<NoiseSpec> = points
        .iter()
        .map(|&(e, u, v)| NoiseSpec::new(u, v, e, s).map(|n| n.with_law(law)))
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(e.to_string()))?;
    let model = &setup.model;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..trials).map(move |t| (p, t))).collect();
    let results: Vec<TrialOutcome> = pool(workers).install(|| {
        jobs.par_iter()
            .map(|&(p, t)| {
                let noise = &noises[p];
                let mut rng = rng::stream(seed, p as u64, t as u64);
                let x = setup.basis.sample(&mut rng);
                let z = generator::sample_external_error(model.n(), noise, &mut rng);
                let y = generator::corrupt(&x, &z, model.q());
                let o = sequential_peeling(model, &x, &y, &setup.thresholds, noise, setup.limits, &mut rng);
                TrialOutcome {
                    symbol_errors: o.symbol_errors,
                    pattern_error: o.pattern_error,
                    iterations: o.outer_iterations,
                    failure: o.declared_failure,
                }
            })
            .collect()
    });
    if trials == 0 {
        return Ok(vec![Vec::new(); points.len()]);
    }
    Ok(results.chunks(trials).map(|c| c.to_vec()).collect())
}

/// Recall sweep over `(epsilon, upsilon, nu)` points, aggregated per point.
pub fn run_sweep(
    setup: &Setup,
    points: &[(f64, f64, f64)],
    s: u32,
    law: PatternNoise,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<SweepRow>, RunError> {
    let n = setup.model.n() as f64;
    let per_point = sweep_trials(setup, points, s, law, trials, seed, workers)?;
    Ok(points
        .iter()
        .zip(per_point)
        .map(|(&(epsilon, upsilon, nu), chunk)| {
            let k = chunk.len() as f64;
            let mut ser = 0.0;
            let (mut per, mut it, mut fail) = (0usize, 0usize, 0usize);
            for r in &chunk {
                ser += r.symbol_errors as f64 / n;
                per += r.pattern_error as usize;
                it += r.iterations;
                fail += r.failure as usize;
            }
            SweepRow {
                epsilon,
                upsilon,
                nu,
                trials: chunk.len(),
                ser_mean: ser / k,
                per_mean: per as f64 / k,
                mean_iterations: it as f64 / k,
                failure_rate: fail as f64 / k,
            }
        })
        .collect())
}

/// Pattern used as the clean state of every correction-probability estimate.
pub fn reference_pattern(setup: &Setup, seed: u64) -> Vec<u32> {
    setup.basis.sample(&mut rng::stream(seed, REFERENCE_POINT, 0))
}

/// Correction-probability table over `(upsilon, nu, i)`; entry `p` uses
/// stream `(seed, p, 0)`.
pub fn run_pci(
    setup: &Setup,
    settings: &[(f64, f64)],
    max_errors: usize,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<PciRow>, RunError> {
    let reference = reference_pattern(setup, seed);
    let jobs: Vec<(f64, f64, usize)> =
        settings.iter().flat_map(|&(u, v)| (1..=max_errors).map(move |i| (u, v, i))).collect();
    let rows: Vec<Result<PciRow, noisy_recall_core::AnalysisError>> = pool(workers).install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(p, &(u, v, i))| {
                let noise = NoiseSpec::internal(u, v);
                let mut rng = rng::stream(seed, p as u64, 0);
                analysis::estimate_pci(
                    &setup.model,
                    &reference,
                    i,
                    &noise,
                    &setup.thresholds,
                    setup.limits.t_max,
                    trials,
                    &mut rng,
                )
            })
            .collect()
    });
    rows.into_iter().collect::<Result<_, _>>().map_err(|e| invalid(e.to_string()))
}

fn corrupted_clusters(model: &NetworkModel, errors: &BTreeMap<usize, i32>) -> Vec<usize> {
    model
        .clusters()
        .iter()
        .map(|c| c.members().iter().filter(|j| errors.contains_key(j)).count())
        .collect()
}

/// Greedy stopping-set placement: a random pair inside a random cluster,
/// then one more error inside every cluster left with exactly one, until no
/// such cluster remains.
fn place_stopping_set(model: &NetworkModel, s: u32, rng: &mut rng::Stream) -> Option<BTreeMap<usize, i32>> {
    let clusters = model.clusters();
    let draw = |rng: &mut rng::Stream| -> i32 {
        let v = rng::index(rng, 2 * s as usize) as i32 - s as i32;
        if v >= 0 {
            v + 1
        } else {
            v
        }
    };
    let mut errors = BTreeMap::new();
    let first = &clusters[rng::index(rng, clusters.len())];
    for k in rng::sample_distinct(rng, first.n_members(), 2) {
        let e = draw(rng);
        errors.insert(first.members()[k], e);
    }
    loop {
        let counts = corrupted_clusters(model, &errors);
        let Some(l) = counts.iter().position(|&c| c == 1) else { break };
        let free: Vec<usize> = clusters[l].members().iter().copied().filter(|j| !errors.contains_key(j)).collect();
        if free.is_empty() {
            return None;
        }
        let j = free[rng::index(rng, free.len())];
        let e = draw(rng);
        errors.insert(j, e);
    }
    Some(errors)
}

/// Builds `sets` stopping sets on which noiseless recall fails. Candidate
/// `a` of set `k` uses stream `(seed, STOPPING_BUILD + k, a)`.
pub fn build_stopping_sets(
    setup: &Setup,
    reference: &[u32],
    sets: usize,
    s: u32,
    seed: u64,
    workers: usize,
) -> Result<Vec<StoppingSet>, RunError> {
    let model = &setup.model;
    let noiseless = NoiseSpec::noiseless();
    let built: Vec<Option<StoppingSet>> = pool(workers).install(|| {
        (0..sets)
            .into_par_iter()
            .map(|k| {
                let mut rejected = 0;
                for a in 0..STOPPING_ATTEMPTS {
                    let mut rng = rng::stream(seed, STOPPING_BUILD + k as u64, a);
                    let Some(errors) = place_stopping_set(model, s, &mut rng) else {
                        rejected += 1;
                        continue;
                    };
                    let mut z = vec![0i32; model.n()];
                    for (&j, &e) in &errors {
                        z[j] = e;
                    }
                    let y = generator::corrupt(reference, &z, model.q());
                    let o = sequential_peeling(model, reference, &y, &setup.thresholds, &noiseless, setup.limits, &mut rng);
                    if !o.pattern_error {
                        rejected += 1;
                        continue;
                    }
                    let corrupted = corrupted_clusters(model, &errors).iter().filter(|&&c| c > 0).count();
                    return Some(StoppingSet {
                        errors: errors.into_iter().collect(),
                        corrupted_clusters: corrupted,
                        rejected,
                    });
                }
                None
            })
            .collect()
    });
    built
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(RunError::Infeasible(GeneratorError::Infeasible("could not construct a stopping set")))
}

/// Successful restarts per stopping set for one noise setting. Restart `r`
/// of set `k` in setting `c` uses stream `(seed, STOPPING_RUN + c * sets + k, r)`.
#[allow(clippy::too_many_arguments)]
pub fn run_stopping_restarts(
    setup: &Setup,
    reference: &[u32],
    sets: &[StoppingSet],
    noise: &NoiseSpec,
    setting: usize,
    restarts: usize,
    seed: u64,
    workers: usize,
) -> Vec<usize> {
    let model = &setup.model;
    let jobs: Vec<(usize, usize)> = (0..sets.len()).flat_map(|k| (0..restarts).map(move |r| (k, r))).collect();
    let ok: Vec<bool> = pool(workers).install(|| {
        jobs.par_iter()
            .map(|&(k, r)| {
                let mut z = vec![0i32; model.n()];
                for &(j, e) in &sets[k].errors {
                    z[j] = e;
                }
                let y = generator::corrupt(reference, &z, model.q());
                let stream_id = STOPPING_RUN + (setting * sets.len() + k) as u64;
                let mut rng = rng::stream(seed, stream_id, r as u64);
                !sequential_peeling(model, reference, &y, &setup.thresholds, noise, setup.limits, &mut rng).pattern_error
            })
            .collect()
    });
    ok.chunks(restarts).map(|c| c.iter().filter(|&&b| b).count()).collect()
}

// ---- CSV output ----

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
    let ctx = || format!("writing {}", path.display());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| RunError::Io { context: ctx(), source: e.into() })?;
    let mut put = |rec: &[String]| w.write_record(rec).map_err(|e| RunError::Io { context: ctx(), source: e.into() });
    put(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for r in rows {
        put(r)?;
    }
    w.flush().map_err(io_err(ctx()))
}

pub const SWEEP_HEADER: [&str; 8] =
    ["epsilon", "upsilon", "nu", "trials", "ser_mean", "per_mean", "mean_iterations", "failure_rate"];
pub const PCI_HEADER: [&str; 6] = ["upsilon", "nu", "i", "trials", "p_ci", "ci_halfwidth"];

fn sweep_record(r: &SweepRow) -> Vec<String> {
    vec![
        num(r.epsilon),
        num(r.upsilon),
        num(r.nu),
        r.trials.to_string(),
        num(r.ser_mean),
        num(r.per_mean),
        num(r.mean_iterations),
        num(r.failure_rate),
    ]
}

fn pci_record(r: &PciRow) -> Vec<String> {
    vec![num(r.upsilon), num(r.nu), r.i.to_string(), r.trials.to_string(), num(r.p_ci), num(r.ci_halfwidth)]
}

/// Parses a sweep CSV written by this module.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, RunError> {
    let ctx = || format!("reading {}", path.display());
    let mut r = csv::Reader::from_path(path).map_err(|e| RunError::Io { context: ctx(), source: e.into() })?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| RunError::Io { context: ctx(), source: e.into() })?;
        let f = |i: usize| -> Result<f64, RunError> {
            rec[i].parse().map_err(|_| RunError::Io { context: ctx(), source: io::ErrorKind::InvalidData.into() })
        };
        out.push(SweepRow {
            epsilon: f(0)?,
            upsilon: f(1)?,
            nu: f(2)?,
            trials: f(3)? as usize,
            ser_mean: f(4)?,
            per_mean: f(5)?,
            mean_iterations: f(6)?,
            failure_rate: f(7)?,
        });
    }
    Ok(out)
}

// ---- experiment kinds ----

fn settings(config: &ExperimentConfig) -> Vec<(f64, f64)> {
    let n = &config.noise;
    n.upsilon_grid.iter().flat_map(|&u| n.nu_grid.iter().map(move |&v| (u, v))).collect()
}

/// Runs the configured experiment and writes its CSVs, the model file and
/// the run manifest into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let setup = Setup::new(config)?;
    let out = config.experiment.out.clone();
    std::fs::create_dir_all(&out).map_err(io_err(format!("creating {}", out.display())))?;
    let model_path = out.join("model.txt");
    modelio::write_model(&setup.model, &model_path).map_err(|e| match e {
        modelio::ModelIoError::Io(source) => RunError::Io { context: format!("writing {}", model_path.display()), source },
        other => invalid(other.to_string()),
    })?;
    let mut manifest = config.clone();
    manifest.manifest = Some(ManifestInfo { version: VERSION.to_string(), model_sha256: setup.model_sha256.clone() });
    let manifest_path = out.join("manifest.toml");
    std::fs::write(&manifest_path, manifest.to_toml()).map_err(io_err(format!("writing {}", manifest_path.display())))?;
    let mut files = vec![model_path, manifest_path];

    let seed = config.experiment.seed;
    let workers = config.experiment.workers;
    let trials = config.experiment.trials;
    let s = config.noise.s;
    use ExperimentKind::*;
    match config.experiment.kind {
        SerSweep | IterationSweep | LargerAlphabet | NoExternalNoise => {
            let law = if config.experiment.kind == NoExternalNoise { PatternNoise::Flip } else { PatternNoise::Uniform };
            let rows = run_sweep(&setup, &sweep_points(config), s, law, trials, seed, workers)?;
            let path = out.join("sweep.csv");
            write_csv(&path, &SWEEP_HEADER, &rows.iter().map(sweep_record).collect::<Vec<_>>())?;
            files.push(path);
        }
        PciGrid => {
            let rows = run_pci(&setup, &settings(config), config.pci.max_errors, config.pci.trials, seed, workers)?;
            let path = out.join("pci.csv");
            write_csv(&path, &PCI_HEADER, &rows.iter().map(pci_record).collect::<Vec<_>>())?;
            files.push(path);
        }
        DeCompare => files.extend(run_de_compare(config, &setup, &out)?),
        StoppingSetDemo => files.extend(run_stopping_demo(config, &setup, &out)?),
    }
    Ok(RunSummary { out_dir: out, files, model_sha256: setup.model_sha256 })
}

fn run_de_compare(config: &ExperimentConfig, setup: &Setup, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let seed = config.experiment.seed;
    let workers = config.experiment.workers;
    let settings = settings(config);
    let k = config.pci.max_errors;
    let pci = run_pci(setup, &settings, k, config.pci.trials, seed, workers)?;
    let graph = generator::contract_and_degree_distributions(&setup.model);
    let tol = config.de.tol;
    let mut threshold_rows = Vec::new();
    let mut trajectory_rows = Vec::new();
    let mut bound: BTreeMap<(usize, usize), (f64, bool)> = BTreeMap::new();
    for (c, &(u, v)) in settings.iter().enumerate() {
        let pc: Vec<f64> = pci[c * k..(c + 1) * k].iter().map(|r| r.p_ci).collect();
        let star = analysis::de_threshold(&graph.lambda, &graph.rho, &pc, tol, config.de.grid)
            .map_err(|e| invalid(e.to_string()))?;
        let mut rec = vec![num(u), num(v), num(star)];
        rec.extend(pc.iter().map(|&p| num(p)));
        threshold_rows.push(rec);
        for (ei, &eps) in config.noise.epsilon_grid.iter().enumerate() {
            let d = analysis::de_trajectory(eps, &graph.lambda, &graph.rho, &pc, tol, 1000)
                .map_err(|e| invalid(e.to_string()))?;
            for (t, z) in d.trajectory.iter().enumerate() {
                trajectory_rows.push(vec![num(u), num(v), num(eps), t.to_string(), num(*z)]);
            }
            bound.insert((ei, c), (d.final_value, d.success));
        }
    }
    // sweep points are ordered epsilon, upsilon, nu like `settings` within each epsilon
    let rows = run_sweep(setup, &sweep_points(config), config.noise.s, PatternNoise::Uniform, config.experiment.trials, seed, workers)?;
    let compare: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(p, r)| {
            let (ei, c) = (p / settings.len(), p % settings.len());
            let (z, ok) = bound[&(ei, c)];
            let mut rec = sweep_record(r);
            rec.push(num(z));
            rec.push(ok.to_string());
            rec
        })
        .collect();
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    header.extend(["de_final", "de_success"]);
    let p1 = out.join("de_compare.csv");
    write_csv(&p1, &header, &compare)?;
    let pc_names: Vec<String> = (1..=k).map(|i| format!("p_c{i}")).collect();
    let mut th_header = vec!["upsilon", "nu", "epsilon_star"];
    th_header.extend(pc_names.iter().map(|s| s.as_str()));
    let p2 = out.join("de_threshold.csv");
    write_csv(&p2, &th_header, &threshold_rows)?;
    let p3 = out.join("de_trajectory.csv");
    write_csv(&p3, &["upsilon", "nu", "epsilon", "t", "z_t"], &trajectory_rows)?;
    let p4 = out.join("pci.csv");
    write_csv(&p4, &PCI_HEADER, &pci.iter().map(pci_record).collect::<Vec<_>>())?;
    Ok(vec![p1, p2, p3, p4])
}

fn run_stopping_demo(config: &ExperimentConfig, setup: &Setup, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let seed = config.experiment.seed;
    let workers = config.experiment.workers;
    let reference = reference_pattern(setup, seed);
    let sets = build_stopping_sets(setup, &reference, config.stopping.sets, config.noise.s, seed, workers)?;
    let mut set_rows = Vec::new();
    for (k, set) in sets.iter().enumerate() {
        for &(j, e) in &set.errors {
            set_rows.push(vec![k.to_string(), j.to_string(), e.to_string()]);
        }
    }
    let mut summary = Vec::new();
    for (c, &(u, v)) in settings(config).iter().enumerate() {
        let noise = NoiseSpec::internal(u, v);
        let wins = run_stopping_restarts(setup, &reference, &sets, &noise, c, config.stopping.restarts, seed, workers);
        for (k, (set, w)) in sets.iter().zip(wins).enumerate() {
            summary.push(vec![
                k.to_string(),
                num(u),
                num(v),
                set.errors.len().to_string(),
                set.corrupted_clusters.to_string(),
                set.rejected.to_string(),
                config.stopping.restarts.to_string(),
                w.to_string(),
                (w > 0).to_string(),
            ]);
        }
    }
    let p1 = out.join("stopping_sets.csv");
    write_csv(&p1, &["set", "neuron", "error"], &set_rows)?;
    let p2 = out.join("stopping_summary.csv");
    write_csv(
        &p2,
        &["set", "upsilon", "nu", "errors", "corrupted_clusters", "rejected_candidates", "restarts", "successes", "escaped"],
        &summary,
    )?;
    Ok(vec![p1, p2])
}
