use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vqec_core::ansatz::{Ansatz, AnsatzSpec, ParamVector};
use vqec_core::optimizer::{run, RunResult};
use vqec_core::problems::{
    random_constrained_graph, random_lp, ConstrainedProblem, InstanceFile,
};
use vqec_core::reference::{brute_force_qcbo, lp_solve, success_probability, BruteForce};
use vqec_core::seed::{derive_seed, rng_for};

use crate::config::{ExperimentConfig, Setup};
use crate::trace::{emit_theta, emit_trace, rel_cost_err, relative_error};

// Purposes below the master seed.
const THETA0_STREAM: u64 = 1;
const REPETITION_STREAM: u64 = 2;

/// Optimal values the runs are measured against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// Optimum of the LP over the simplex; this is also `𝓛*`.
    pub p_star: f64,
    /// Optimal multipliers of that LP.
    pub lambda_star: Vec<f64>,
    /// Exhaustive-search result of the underlying binary program.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<BruteForce>,
}

impl Reference {
    pub fn lagrangian_star(&self) -> f64 {
        self.p_star
    }
}

/// Instance, problem, circuit and start point shared by all repetitions.
pub struct Prepared {
    pub instance: InstanceFile,
    pub problem: ConstrainedProblem,
    pub reference: Reference,
    pub ansatz: Ansatz,
    pub theta0: Vec<f64>,
}

/// Builds or loads the instance and solves it classically.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let instance = match cfg.setup {
        Setup::S1 | Setup::S2 => {
            let g = random_constrained_graph(cfg.n, cfg.specs, &mut rng_for(cfg.instance_seed, &[0]))?;
            InstanceFile::graph(&g)
                .with_provenance("generator", "complete graph, weights Uniform(0,1], specifications from a planted spin assignment")
                .with_provenance("instance_seed", cfg.instance_seed)
        }
        Setup::S3 => {
            let lp = random_lp(1 << cfg.n, cfg.lp_constraints, cfg.instance_seed)?;
            InstanceFile::lp(&lp.problem)
                .with_provenance("generator", "i.i.d. standard-normal columns, infeasible draws discarded")
                .with_provenance("instance_seed", cfg.instance_seed)
                .with_provenance("redraws", lp.redraws)
        }
        Setup::Custom => {
            let path = cfg.instance.as_deref().context("setup custom needs an instance file")?;
            InstanceFile::load(path)?
        }
    };
    if cfg.setup == Setup::Custom && instance.num_qubits() != cfg.n {
        bail!(
            "instance has {} qubits but n = {}",
            instance.num_qubits(),
            cfg.n
        );
    }
    let problem = instance.to_problem(cfg.formulation)?;
    let lp = lp_solve(&problem)?;
    if !lp.is_optimal() {
        bail!("the LP over the simplex is {:?}; no reference optimum", lp.status);
    }
    let brute_force = problem.source().map(brute_force_qcbo).transpose()?;
    let spec = AnsatzSpec::new(problem.num_qubits(), cfg.depth, cfg.entanglement)?
        .with_repeat(cfg.repeat)?;
    let theta0 = ParamVector::random_uniform(spec.num_params(), &mut rng_for(cfg.seed, &[THETA0_STREAM]))
        .into_inner();
    Ok(Prepared {
        instance,
        problem,
        reference: Reference {
            p_star: lp.value,
            lambda_star: lp.lambda,
            brute_force,
        },
        ansatz: Ansatz::new(spec),
        theta0,
    })
}

/// Final-iterate metrics of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionSummary {
    pub rep: usize,
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    /// Exact `F_0..F_M` at the final parameters.
    pub final_values: Vec<f64>,
    pub final_lambda: Vec<f64>,
    pub rel_cost_err: f64,
    pub lagrangian: f64,
    pub lagrangian_rel_err: f64,
    /// Mass of the final PMF on the minimizers of the binary program.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_probability: Option<f64>,
    pub cum_shots: u64,
    pub cum_compilations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub num_params: usize,
    pub reference: Reference,
    pub repetitions: Vec<RepetitionSummary>,
    /// Minimum success probability over repetitions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_case_success: Option<f64>,
}

/// Summary plus the full trace of every repetition.
pub struct Experiment {
    pub summary: ExperimentSummary,
    pub runs: Vec<RunResult>,
}

/// Seed of repetition `rep` under master seed `master`.
pub fn repetition_seed(master: u64, rep: usize) -> u64 {
    derive_seed(master, &[REPETITION_STREAM, rep as u64])
}

/// Runs one repetition of a prepared experiment.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    rep: usize,
) -> Result<(RunResult, RepetitionSummary)> {
    let seed = repetition_seed(cfg.seed, rep);
    let result = run(
        &prepared.ansatz,
        prepared.problem.observables(),
        &cfg.optimizer(seed),
        &prepared.theta0,
    )
    .with_context(|| format!("repetition {rep} failed"))?;
    let last = result.trace.last();
    let p_star = prepared.reference.p_star;
    let success_probability = match &prepared.reference.brute_force {
        Some(bf @ BruteForce::Optimal { .. }) => {
            let pmf = prepared.ansatz.forward(&last.theta)?.pmf();
            Some(success_probability(&pmf, bf.minimizers())?)
        }
        _ => None,
    };
    let summary = RepetitionSummary {
        rep,
        seed,
        converged: result.converged,
        iterations: result.iterations,
        final_values: last.values.clone(),
        final_lambda: last.lambda.values().to_vec(),
        rel_cost_err: rel_cost_err(last, p_star),
        lagrangian: last.lagrangian(),
        lagrangian_rel_err: relative_error(last.lagrangian(), prepared.reference.lagrangian_star()),
        success_probability,
        cum_shots: last.cum_shots,
        cum_compilations: last.cum_compilations,
    };
    Ok((result, summary))
}

/// Paths of the artifacts written by [`run_experiment`].
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn instance(&self) -> PathBuf {
        self.dir.join("instance.json")
    }

    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }

    pub fn trace(&self, rep: usize) -> PathBuf {
        self.dir.join(format!("trace_rep{rep}.csv"))
    }

    pub fn theta(&self, rep: usize) -> PathBuf {
        self.dir.join(format!("theta_rep{rep}.csv"))
    }
}

/// Runs every repetition and writes `instance.json`, `trace_rep{r}.csv`,
/// `theta_rep{r}.csv` and `summary.json` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    let prepared = prepare(cfg)?;
    let artifacts = Artifacts {
        dir: cfg.out.clone(),
    };
    fs::create_dir_all(&artifacts.dir)
        .with_context(|| format!("cannot create {}", artifacts.dir.display()))?;
    prepared.instance.save(&artifacts.instance())?;

    let mut runs = Vec::with_capacity(cfg.reps);
    let mut repetitions = Vec::with_capacity(cfg.reps);
    for rep in 0..cfg.reps {
        let (result, summary) = run_repetition(cfg, &prepared, rep)?;
        emit_trace(&result.trace, prepared.reference.p_star, &artifacts.trace(rep))?;
        emit_theta(&result.trace, &artifacts.theta(rep))?;
        runs.push(result);
        repetitions.push(summary);
    }
    let worst_case_success = repetitions
        .iter()
        .map(|r| r.success_probability)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(f64::INFINITY, f64::min));
    let summary = ExperimentSummary {
        config: cfg.clone(),
        num_params: prepared.ansatz.num_params(),
        reference: prepared.reference,
        repetitions,
        worst_case_success,
    };
    write_summary(&summary, &artifacts.summary())?;
    Ok(Experiment { summary, runs })
}

fn write_summary(summary: &ExperimentSummary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_summary(path: &Path) -> Result<ExperimentSummary> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).context("malformed summary")
}
