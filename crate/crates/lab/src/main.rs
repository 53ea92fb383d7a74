use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use serde_json::{json, Map, Value};
use vqec_cli::config::{parse_formulation, parse_schedule, read_overrides};
use vqec_cli::{run_experiment, ExperimentConfig};

/// Runs constrained variational optimization experiments on a simulated
/// two-local circuit.
#[derive(Parser, Debug)]
#[command(name = "vqec", version)]
struct Cli {
    /// Settings file (.toml or .json); flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// s1, s2, s3 or custom.
    #[arg(long)]
    setup: Option<String>,
    /// Instance file for the custom setup.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    instance_seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    specs: Option<usize>,
    #[arg(long)]
    lp_constraints: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// full, linear or circular.
    #[arg(long)]
    entanglement: Option<String>,
    #[arg(long)]
    repeat: Option<usize>,
    /// average, deterministic, chance or explicit-lp.
    #[arg(long)]
    formulation: Option<String>,
    /// Violation probability of the chance formulation.
    #[arg(long)]
    beta: Option<f64>,
    /// Shots per circuit; 0 means exact expectations.
    #[arg(long)]
    shots: Option<usize>,
    /// pd, ppd or egm.
    #[arg(long)]
    method: Option<String>,
    /// const:v, harmonic:a,b (a/(t+b)) or geometric:a,q (a·q^t).
    #[arg(long)]
    mu_theta: Option<String>,
    #[arg(long)]
    mu_lambda: Option<String>,
    #[arg(long)]
    nu_theta: Option<f64>,
    #[arg(long)]
    nu_lambda: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    eps_conv: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Result<Map<String, Value>> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("setup", self.setup.as_ref().map(|s| json!(s)));
        put("instance", self.instance.as_ref().map(|s| json!(s)));
        put("instance_seed", self.instance_seed.map(|x| json!(x)));
        put("n", self.n.map(|x| json!(x)));
        put("specs", self.specs.map(|x| json!(x)));
        put("lp_constraints", self.lp_constraints.map(|x| json!(x)));
        put("depth", self.depth.map(|x| json!(x)));
        put("entanglement", self.entanglement.as_ref().map(|s| json!(s)));
        put("repeat", self.repeat.map(|x| json!(x)));
        put("shots", self.shots.map(|x| json!(x)));
        put("method", self.method.as_ref().map(|s| json!(s)));
        put("nu_theta", self.nu_theta.map(|x| json!(x)));
        put("nu_lambda", self.nu_lambda.map(|x| json!(x)));
        put("iters", self.iters.map(|x| json!(x)));
        put("eps_conv", self.eps_conv.map(|x| json!(x)));
        put("reps", self.reps.map(|x| json!(x)));
        put("seed", self.seed.map(|x| json!(x)));
        put("out", self.out.as_ref().map(|s| json!(s)));
        if let Some(s) = &self.formulation {
            m.insert("formulation".into(), serde_json::to_value(parse_formulation(s, self.beta)?)?);
        } else if self.beta.is_some() {
            anyhow::bail!("--beta needs --formulation chance");
        }
        if let Some(s) = &self.mu_theta {
            m.insert("mu_theta".into(), serde_json::to_value(parse_schedule(s)?)?);
        }
        if let Some(s) = &self.mu_lambda {
            m.insert("mu_lambda".into(), serde_json::to_value(parse_schedule(s)?)?);
        }
        Ok(m)
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut settings = match &cli.config {
        Some(path) => read_overrides(path)?,
        None => Map::new(),
    };
    settings.extend(cli.overrides()?);
    ExperimentConfig::from_overrides(settings)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| {
        let experiment = run_experiment(&cfg)?;
        let s = &experiment.summary;
        println!(
            "{} | P* = {:.6} | {} repetition(s) written to {}",
            cfg.setup,
            s.reference.p_star,
            s.repetitions.len(),
            cfg.out.display()
        );
        for r in &s.repetitions {
            println!(
                "rep {}: iterations {} converged {} rel_cost_err {:.3e} F = {:?} shots {}",
                r.rep, r.iterations, r.converged, r.rel_cost_err, r.final_values, r.cum_shots
            );
        }
        if let Some(p) = s.worst_case_success {
            println!("worst-case success probability {p:.4}");
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
