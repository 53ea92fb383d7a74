use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vqec_core::ansatz::Entanglement;
use vqec_core::gradient::Mode;
use vqec_core::optimizer::{Method, OptimizerConfig, StepSchedule};
use vqec_core::problems::Formulation;

/// Instance seed of the constrained-MaxCut instance shared by `s1` and `s2`.
pub const S1_INSTANCE_SEED: u64 = 18;
/// Instance seed of the `s3` LP.
pub const S3_INSTANCE_SEED: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    /// Average-constrained MaxCut, exact mode.
    S1,
    /// Deterministic-constrained MaxCut on the `s1` instance, 50 shots.
    S2,
    /// Random LP over the simplex, 150 shots.
    S3,
    /// Instance read from a file.
    Custom,
}

impl FromStr for Setup {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" => Ok(Self::S1),
            "s2" => Ok(Self::S2),
            "s3" => Ok(Self::S3),
            "custom" => Ok(Self::Custom),
            other => bail!("unknown setup '{other}' (expected s1, s2, s3 or custom)"),
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::S1 => "s1",
            Self::S2 => "s2",
            Self::S3 => "s3",
            Self::Custom => "custom",
        })
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setup: Setup,
    /// Instance file, required by `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<PathBuf>,
    /// Seed of the generated instance (`s1`, `s2`, `s3`).
    pub instance_seed: u64,
    /// Qubits; for `s3` the LP has `2^n` entries.
    pub n: usize,
    /// Specification pairs of a generated MaxCut instance.
    pub specs: usize,
    /// Constraints of a generated LP.
    pub lp_constraints: usize,
    pub depth: usize,
    pub entanglement: Entanglement,
    pub repeat: usize,
    pub formulation: Formulation,
    /// Shots per circuit; 0 selects exact mode.
    pub shots: usize,
    pub method: Method,
    pub mu_theta: StepSchedule,
    pub mu_lambda: StepSchedule,
    pub nu_theta: f64,
    pub nu_lambda: f64,
    pub iters: usize,
    pub eps_conv: f64,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(setup: Setup) -> Self {
        let s1 = Self {
            setup,
            instance: None,
            instance_seed: S1_INSTANCE_SEED,
            n: 14,
            specs: 7,
            lp_constraints: 3,
            depth: 3,
            entanglement: Entanglement::Full,
            repeat: 1,
            formulation: Formulation::Average,
            shots: 0,
            method: Method::Ppd,
            mu_theta: StepSchedule::Harmonic { a: 1.5, b: 0.0 },
            mu_lambda: StepSchedule::Harmonic { a: 0.1, b: 15.0 },
            nu_theta: 0.05,
            nu_lambda: 0.05,
            iters: 2000,
            eps_conv: 1e-5,
            reps: 1,
            seed: 0,
            out: PathBuf::from(format!("runs/{setup}")),
        };
        match setup {
            Setup::S1 | Setup::Custom => s1,
            Setup::S2 => Self {
                formulation: Formulation::Deterministic,
                shots: 50,
                mu_theta: StepSchedule::Harmonic { a: 12.0, b: 10.0 },
                mu_lambda: StepSchedule::Harmonic { a: 4.0, b: 15.0 },
                nu_theta: 1.0,
                nu_lambda: 1.5,
                reps: 8,
                ..s1
            },
            Setup::S3 => Self {
                instance_seed: S3_INSTANCE_SEED,
                n: 8,
                formulation: Formulation::ExplicitLp,
                shots: 150,
                mu_theta: StepSchedule::Geometric { a: 0.02, q: 0.999 },
                mu_lambda: StepSchedule::Geometric { a: 0.02, q: 0.999 },
                nu_theta: 3.0,
                nu_lambda: 3.0,
                reps: 8,
                ..s1
            },
        }
    }

    /// Preset of the `setup` key (default `s1`) with `overrides` laid over it.
    pub fn from_overrides(overrides: Map<String, Value>) -> Result<Self> {
        let setup = match overrides.get("setup") {
            None => Setup::S1,
            Some(Value::String(s)) => s.parse()?,
            Some(other) => bail!("setup must be a string, got {other}"),
        };
        let Value::Object(mut merged) = serde_json::to_value(Self::preset(setup))? else {
            unreachable!("a struct serializes to an object");
        };
        merged.extend(overrides);
        let cfg: Self =
            serde_json::from_value(Value::Object(merged)).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a `.toml` or `.json` file; keys absent from it keep the preset
    /// of its `setup`.
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_overrides(read_overrides(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n >= 1, "n must be at least 1");
        ensure!(self.depth >= 1, "depth must be at least 1");
        ensure!(self.repeat >= 1, "repeat must be at least 1");
        ensure!(self.reps >= 1, "reps must be at least 1");
        ensure!(self.iters >= 1, "iters must be at least 1");
        match self.setup {
            Setup::Custom => ensure!(self.instance.is_some(), "setup custom needs an instance file"),
            Setup::S3 => {
                ensure!(
                    self.formulation == Formulation::ExplicitLp,
                    "setup s3 solves an explicit LP"
                );
                ensure!(self.lp_constraints >= 1, "lp_constraints must be at least 1");
            }
            Setup::S1 | Setup::S2 => {
                ensure!(self.n >= 2, "a MaxCut instance needs at least 2 vertices");
                ensure!(
                    self.formulation != Formulation::ExplicitLp,
                    "setup {} builds a binary program, not an explicit LP",
                    self.setup
                );
            }
        }
        self.optimizer(self.seed)
            .validate()
            .context("invalid optimizer settings")?;
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        if self.shots == 0 {
            Mode::Exact
        } else {
            Mode::Shots(self.shots)
        }
    }

    /// Optimizer settings of one repetition.
    pub fn optimizer(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            method: self.method,
            mu_theta: self.mu_theta,
            mu_lambda: self.mu_lambda,
            nu_theta: self.nu_theta,
            nu_lambda: self.nu_lambda,
            max_iters: self.iters,
            eps_conv: self.eps_conv,
            mode: self.mode(),
            seed,
            shot_ramp: None,
        }
    }
}

/// The raw settings of a `.toml` or `.json` config file.
pub fn read_overrides(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let value: Value = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).context("malformed TOML config")?,
        Some("json") => serde_json::from_str(&text).context("malformed JSON config")?,
        _ => bail!(
            "config {} must end in .toml or .json",
            path.display()
        ),
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => bail!("config must be a table of settings"),
    }
}

/// Parses `const:v`, `harmonic:a,b` or `geometric:a,q`.
pub fn parse_schedule(s: &str) -> Result<StepSchedule> {
    let (kind, args) = s
        .split_once(':')
        .with_context(|| format!("schedule '{s}' must look like kind:args"))?;
    let nums = args
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("schedule '{s}' has a non-numeric argument"))?;
    let schedule = match (kind, nums.as_slice()) {
        ("const" | "constant", &[value]) => StepSchedule::Constant { value },
        ("harmonic", &[a, b]) => StepSchedule::Harmonic { a, b },
        ("geometric", &[a, q]) => StepSchedule::Geometric { a, q },
        _ => bail!("schedule '{s}' is not const:v, harmonic:a,b or geometric:a,q"),
    };
    Ok(schedule)
}

/// Parses `average`, `deterministic`, `chance` (with `beta`) or `explicit-lp`.
pub fn parse_formulation(s: &str, beta: Option<f64>) -> Result<Formulation> {
    Ok(match s {
        "average" => Formulation::Average,
        "deterministic" => Formulation::Deterministic,
        "chance" => Formulation::Chance {
            beta: beta.context("formulation chance needs --beta")?,
        },
        "explicit-lp" => Formulation::ExplicitLp,
        other => bail!(
            "unknown formulation '{other}' (expected average, deterministic, chance or explicit-lp)"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn overrides(v: Value) -> Map<String, Value> {
        match v {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }

    #[test]
    fn presets_validate() {
        for setup in [Setup::S1, Setup::S2, Setup::S3] {
            ExperimentConfig::preset(setup).validate().unwrap();
        }
        assert!(ExperimentConfig::preset(Setup::Custom).validate().is_err());
    }

    #[test]
    fn s1_preset_values() {
        let c = ExperimentConfig::preset(Setup::S1);
        assert_eq!((c.n, c.specs, c.depth, c.shots), (14, 7, 3, 0));
        assert_eq!(c.method, Method::Ppd);
        assert_eq!(c.mu_theta.at(1), 1.5);
        assert_eq!(c.mu_lambda.at(5), 0.1 / 20.0);
        assert_eq!((c.nu_theta, c.nu_lambda, c.eps_conv), (0.05, 0.05, 1e-5));
        assert_eq!(c.mode(), Mode::Exact);
    }

    #[test]
    fn s3_preset_values() {
        let c = ExperimentConfig::preset(Setup::S3);
        assert_eq!((c.n, c.lp_constraints, c.shots, c.reps), (8, 3, 150, 8));
        assert!((c.mu_theta.at(10) - 0.02 * 0.999f64.powi(10)).abs() < 1e-15);
        assert_eq!((c.nu_theta, c.nu_lambda), (3.0, 3.0));
    }

    #[test]
    fn overrides_take_the_setup_preset() {
        let c = ExperimentConfig::from_overrides(overrides(json!({"setup": "s2", "reps": 2})))
            .unwrap();
        assert_eq!(c.setup, Setup::S2);
        assert_eq!(c.reps, 2);
        assert_eq!(c.shots, 50);
        assert_eq!(c.formulation, Formulation::Deterministic);
    }

    #[test]
    fn bad_overrides_are_rejected() {
        for bad in [
            json!({"reps": 0}),
            json!({"eps_conv": -1.0}),
            json!({"setup": "s4"}),
            json!({"unknown_key": 1}),
            json!({"setup": "custom"}),
            json!({"setup": "s3", "formulation": {"kind": "average"}}),
        ] {
            assert!(ExperimentConfig::from_overrides(overrides(bad.clone())).is_err(), "{bad}");
        }
    }

    #[test]
    fn toml_and_json_files_load() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("c.toml");
        std::fs::write(
            &toml_path,
            "setup = \"s1\"\nshots = 25\nmu_theta = { kind = \"harmonic\", a = 2.0, b = 1.0 }\n",
        )
        .unwrap();
        let c = ExperimentConfig::load(&toml_path).unwrap();
        assert_eq!(c.shots, 25);
        assert_eq!(c.mu_theta, StepSchedule::Harmonic { a: 2.0, b: 1.0 });

        let json_path = dir.path().join("c.json");
        std::fs::write(&json_path, serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&json_path).unwrap(), c);

        let other = dir.path().join("c.yaml");
        std::fs::write(&other, "").unwrap();
        assert!(ExperimentConfig::load(&other).is_err());
    }

    #[test]
    fn schedule_strings() {
        assert_eq!(
            parse_schedule("harmonic:1.5,0").unwrap(),
            StepSchedule::Harmonic { a: 1.5, b: 0.0 }
        );
        assert_eq!(
            parse_schedule("geometric:0.02,0.999").unwrap(),
            StepSchedule::Geometric { a: 0.02, q: 0.999 }
        );
        assert_eq!(
            parse_schedule("const:0.1").unwrap(),
            StepSchedule::Constant { value: 0.1 }
        );
        for bad in ["harmonic:1", "linear:1,2", "const", "geometric:a,b"] {
            assert!(parse_schedule(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formulation_strings() {
        assert_eq!(parse_formulation("average", None).unwrap(), Formulation::Average);
        assert_eq!(
            parse_formulation("chance", Some(0.1)).unwrap(),
            Formulation::Chance { beta: 0.1 }
        );
        assert!(parse_formulation("chance", None).is_err());
        assert!(parse_formulation("robust", None).is_err());
    }
}
