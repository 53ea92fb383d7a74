//! Saddle-point iterations on the parameterized Lagrangian
//! `L(θ; λ) = F_0(θ) + Σ_m λ_m F_m(θ)`: primal-dual (PD), perturbed
//! primal-dual (PPD) and the extragradient variant (EGM).
//!
//! The multiplier of the objective is the constant `λ_0 = 1` and is never
//! stored. Iteration `t ≥ 1` maps `(θ^{t-1}, λ^{t-1})` to `(θ^t, λ^t)` with step
//! sizes evaluated at `t`.

use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{arg_err, check_dim, Result, VqecError};
use crate::gradient::{observable_values, parameter_shift_gradient, GradientRequest, Mode};
use crate::observables::DiagonalObservable;
use crate::seed::derive_seed;

/// Multipliers `λ_1..λ_M`, nonnegative by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualVector(Vec<f64>);

impl DualVector {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    /// Projects onto the nonnegative orthant.
    pub fn project(raw: Vec<f64>) -> Self {
        Self(raw.into_iter().map(|x| x.max(0.0)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `[λ + μ·g]₊`.
    pub fn ascent(&self, mu: f64, g: &[f64]) -> Self {
        Self::project(self.0.iter().zip(g).map(|(l, x)| l + mu * x).collect())
    }
}

/// Step-size rule evaluated at iteration `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StepSchedule {
    Constant {
        value: f64,
    },
    /// `a/(t+b)`.
    Harmonic {
        a: f64,
        b: f64,
    },
    /// `a·qᵗ`.
    Geometric {
        a: f64,
        q: f64,
    },
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        let t = t as f64;
        match *self {
            Self::Constant { value } => value,
            Self::Harmonic { a, b } => a / (t + b),
            Self::Geometric { a, q } => a * q.powf(t),
        }
    }

    /// Rejects rules that are not positive and finite at `t = 1`, or that
    /// can turn nonpositive later.
    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            Self::Constant { value } => value > 0.0 && value.is_finite(),
            Self::Harmonic { a, b } => a > 0.0 && a.is_finite() && b > -1.0 && b.is_finite(),
            Self::Geometric { a, q } => a > 0.0 && a.is_finite() && q > 0.0 && q.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            arg_err(format!("step schedule {name} is not positive: {self:?}"))
        }
    }
}

/// `step_size(schedule, t)`.
pub fn step_size(schedule: &StepSchedule, t: usize) -> f64 {
    schedule.at(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pd,
    Ppd,
    Egm,
}

impl std::str::FromStr for Method {
    type Err = VqecError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pd" => Ok(Self::Pd),
            "ppd" | "vqec" => Ok(Self::Ppd),
            "egm" => Ok(Self::Egm),
            other => arg_err(format!(
                "unknown method {other:?} (expected pd, ppd or egm)"
            )),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pd => "pd",
            Self::Ppd => "ppd",
            Self::Egm => "egm",
        })
    }
}

/// Optional growth of the shot count: `S_t = min(S, initial·2^⌊(t-1)/every⌋)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRamp {
    pub initial: usize,
    pub doubling_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub mu_theta: StepSchedule,
    pub mu_lambda: StepSchedule,
    pub nu_theta: f64,
    pub nu_lambda: f64,
    pub max_iters: usize,
    pub eps_conv: f64,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub shot_ramp: Option<ShotRamp>,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.mu_theta.validate("mu_theta")?;
        self.mu_lambda.validate("mu_lambda")?;
        if !(self.eps_conv > 0.0) {
            return arg_err(format!(
                "convergence tolerance {} must be positive",
                self.eps_conv
            ));
        }
        if self.method != Method::Pd && !(self.nu_theta > 0.0 && self.nu_lambda > 0.0) {
            return arg_err(format!("{} needs positive perturbation steps", self.method));
        }
        if self.mode == Mode::Shots(0) {
            return arg_err("shot count must be at least 1");
        }
        if let Some(r) = self.shot_ramp {
            if r.initial == 0 || r.doubling_every == 0 {
                return arg_err("shot ramp needs positive initial count and period");
            }
        }
        Ok(())
    }

    /// Step sizes at iteration `t`.
    pub fn steps_at(&self, t: usize) -> StepSizes {
        StepSizes {
            mu_theta: self.mu_theta.at(t),
            mu_lambda: self.mu_lambda.at(t),
            nu_theta: self.nu_theta,
            nu_lambda: self.nu_lambda,
        }
    }

    fn mode_at(&self, t: usize) -> Mode {
        match (self.mode, self.shot_ramp) {
            (Mode::Shots(s), Some(r)) => {
                let doublings = ((t - 1) / r.doubling_every).min(63) as u32;
                Mode::Shots(r.initial.saturating_mul(1usize << doublings).min(s))
            }
            (mode, _) => mode,
        }
    }
}

/// Step sizes of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub mu_theta: f64,
    pub mu_lambda: f64,
    pub nu_theta: f64,
    pub nu_lambda: f64,
}

/// `Σ_{m=0}^M λ_m ∇F_m` with `λ_0 = 1`.
pub fn lagrangian_gradient(gradients: &[Vec<f64>], lambda: &DualVector) -> Vec<f64> {
    let mut g = gradients[0].clone();
    for (row, &l) in gradients[1..].iter().zip(lambda.values()) {
        if l != 0.0 {
            for (gi, ri) in g.iter_mut().zip(row) {
                *gi += l * ri;
            }
        }
    }
    g
}

/// `F_0 + Σ λ_m F_m`.
pub fn lagrangian(values: &[f64], lambda: &DualVector) -> f64 {
    values[0]
        + values[1..]
            .iter()
            .zip(lambda.values())
            .map(|(f, l)| f * l)
            .sum::<f64>()
}

fn descend(theta: &[f64], mu: f64, g: &[f64]) -> Vec<f64> {
    theta.iter().zip(g).map(|(t, gi)| t - mu * gi).collect()
}

/// One PD iteration from gradients and values at `(θ, λ)`.
pub fn pd_step(
    theta: &[f64],
    lambda: &DualVector,
    gradients: &[Vec<f64>],
    values: &[f64],
    steps: &StepSizes,
) -> (Vec<f64>, DualVector) {
    let theta_next = descend(
        theta,
        steps.mu_theta,
        &lagrangian_gradient(gradients, lambda),
    );
    let lambda_next = lambda.ascent(steps.mu_lambda, &values[1..]);
    (theta_next, lambda_next)
}

/// Perturbed point `(θ̃, λ̃)` shared by PPD and EGM.
pub fn perturb(
    theta: &[f64],
    lambda: &DualVector,
    gradients: &[Vec<f64>],
    values: &[f64],
    steps: &StepSizes,
) -> (Vec<f64>, DualVector) {
    let theta_tilde = descend(
        theta,
        steps.nu_theta,
        &lagrangian_gradient(gradients, lambda),
    );
    let lambda_tilde = lambda.ascent(steps.nu_lambda, &values[1..]);
    (theta_tilde, lambda_tilde)
}

/// Output of a perturbed step.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedStep {
    pub theta: Vec<f64>,
    pub lambda: DualVector,
    pub theta_tilde: Vec<f64>,
    pub lambda_tilde: DualVector,
}

/// Completes a PPD iteration given the perturbed point and `F_m(θ̃)`; the
/// descent reuses the gradients taken at `θ`.
pub fn ppd_finish(
    theta: &[f64],
    lambda: &DualVector,
    gradients: &[Vec<f64>],
    theta_tilde: Vec<f64>,
    lambda_tilde: DualVector,
    values_at_tilde: &[f64],
    steps: &StepSizes,
) -> PerturbedStep {
    let theta_next = descend(
        theta,
        steps.mu_theta,
        &lagrangian_gradient(gradients, &lambda_tilde),
    );
    let lambda_next = lambda.ascent(steps.mu_lambda, &values_at_tilde[1..]);
    PerturbedStep {
        theta: theta_next,
        lambda: lambda_next,
        theta_tilde,
        lambda_tilde,
    }
}

/// One PPD iteration.
pub fn ppd_step(
    theta: &[f64],
    lambda: &DualVector,
    gradients: &[Vec<f64>],
    values_at_theta: &[f64],
    values_at_tilde: &[f64],
    steps: &StepSizes,
) -> PerturbedStep {
    let (tt, lt) = perturb(theta, lambda, gradients, values_at_theta, steps);
    ppd_finish(theta, lambda, gradients, tt, lt, values_at_tilde, steps)
}

/// Completes an EGM iteration from the perturbed point, with gradients and
/// values taken at `θ̃`.
pub fn egm_finish(
    theta_tilde: Vec<f64>,
    lambda_tilde: DualVector,
    gradients_at_tilde: &[Vec<f64>],
    values_at_tilde: &[f64],
    steps: &StepSizes,
) -> PerturbedStep {
    let theta_next = descend(
        &theta_tilde,
        steps.mu_theta,
        &lagrangian_gradient(gradients_at_tilde, &lambda_tilde),
    );
    let lambda_next = lambda_tilde.ascent(steps.mu_lambda, &values_at_tilde[1..]);
    PerturbedStep {
        theta: theta_next,
        lambda: lambda_next,
        theta_tilde,
        lambda_tilde,
    }
}

/// One EGM iteration.
pub fn egm_step(
    theta: &[f64],
    lambda: &DualVector,
    gradients_at_theta: &[Vec<f64>],
    gradients_at_tilde: &[Vec<f64>],
    values_at_theta: &[f64],
    values_at_tilde: &[f64],
    steps: &StepSizes,
) -> PerturbedStep {
    let (tt, lt) = perturb(theta, lambda, gradients_at_theta, values_at_theta, steps);
    egm_finish(tt, lt, gradients_at_tilde, values_at_tilde, steps)
}

/// State after iteration `t` (`t = 0` is the initial point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub t: usize,
    pub theta: Vec<f64>,
    pub lambda: DualVector,
    pub theta_tilde: Option<Vec<f64>>,
    pub lambda_tilde: Option<DualVector>,
    /// Exact `F_0..F_M` at `θ^t`, read from the statevector.
    pub values: Vec<f64>,
    /// `F_0..F_M` at `θ^{t-1}` as seen by the update (estimates in shot mode).
    pub measured: Option<Vec<f64>>,
    /// `‖θ^t − θ^{t-1}‖/‖θ^{t-1}‖`.
    pub theta_change_rel: f64,
    pub cum_shots: u64,
    pub cum_compilations: u64,
}

impl IterateRecord {
    /// `L(θ^t; λ^t)` from exact values.
    pub fn lagrangian(&self) -> f64 {
        lagrangian(&self.values, &self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
}

impl IterateTrace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace holds the initial record")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub trace: IterateTrace,
    pub converged: bool,
    /// Number of updates performed.
    pub iterations: usize,
}

impl RunResult {
    pub fn final_theta(&self) -> &[f64] {
        &self.trace.last().theta
    }

    pub fn final_lambda(&self) -> &DualVector {
        &self.trace.last().lambda
    }
}

// Seed paths of the circuits prepared in one iteration.
const VALUES_AT_THETA: u64 = 0;
const GRADIENT_AT_THETA: u64 = 1;
const VALUES_AT_TILDE: u64 = 2;
const GRADIENT_AT_TILDE: u64 = 3;

struct Evaluator<'a> {
    ansatz: &'a Ansatz,
    observables: &'a [DiagonalObservable],
    seed: u64,
    shots: u64,
    compilations: u64,
}

impl Evaluator<'_> {
    fn request<'b>(
        &'b self,
        theta: &'b [f64],
        mode: Mode,
        seed: u64,
        active: Option<&'b [bool]>,
    ) -> GradientRequest<'b> {
        GradientRequest {
            ansatz: self.ansatz,
            theta,
            observables: self.observables,
            mode,
            seed,
            active,
        }
    }

    fn values(&mut self, theta: &[f64], mode: Mode, t: usize, purpose: u64) -> Result<Vec<f64>> {
        let seed = derive_seed(self.seed, &[t as u64, purpose]);
        let e = observable_values(&self.request(theta, mode, seed, None))?;
        self.shots += e.shots;
        self.compilations += e.compilations;
        Ok(e.values)
    }

    // Rows with a zero weight are skipped in shot mode only.
    fn gradient(
        &mut self,
        theta: &[f64],
        mode: Mode,
        t: usize,
        purpose: u64,
        weights: &[&DualVector],
    ) -> Result<Vec<Vec<f64>>> {
        let seed = derive_seed(self.seed, &[t as u64, purpose]);
        let mask: Option<Vec<bool>> = match mode {
            Mode::Exact => None,
            Mode::Shots(_) => Some(
                std::iter::once(true)
                    .chain(
                        (0..self.observables.len() - 1)
                            .map(|m| weights.iter().any(|w| w.values()[m] != 0.0)),
                    )
                    .collect(),
            ),
        };
        let g = parameter_shift_gradient(&self.request(theta, mode, seed, mask.as_deref()))?;
        self.shots += g.shots;
        self.compilations += g.compilations;
        Ok(g.rows)
    }

    fn exact(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(observable_values(&self.request(theta, Mode::Exact, 0, None))?.values)
    }
}

fn check_finite(t: usize, what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(VqecError::NonFinite {
            iteration: t,
            what: format!("{what}[{i}] = {}", xs[i]),
        }),
    }
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let diff = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let base = old.iter().map(|x| x * x).sum::<f64>().sqrt();
    if diff == 0.0 {
        0.0
    } else {
        diff / base
    }
}

/// Runs the configured method from `θ⁰` and `λ⁰ = 0` until
/// `‖θ^t − θ^{t-1}‖/‖θ^{t-1}‖ ≤ ε` or `max_iters` updates.
///
/// `observables[0]` is the objective and the rest are constraints `F_m ≤ 0`.
pub fn run(
    ansatz: &Ansatz,
    observables: &[DiagonalObservable],
    config: &OptimizerConfig,
    theta0: &[f64],
) -> Result<RunResult> {
    config.validate()?;
    check_dim(ansatz.num_params(), theta0.len(), "initial parameters")?;
    if observables.is_empty() {
        return arg_err("at least the objective observable is required");
    }
    check_finite(0, "theta", theta0)?;
    let num_constraints = observables.len() - 1;
    let mut ev = Evaluator {
        ansatz,
        observables,
        seed: config.seed,
        shots: 0,
        compilations: 0,
    };

    let mut theta = theta0.to_vec();
    let mut lambda = DualVector::zeros(num_constraints);
    let mut exact_now = ev.exact(&theta)?;
    let mut records = vec![IterateRecord {
        t: 0,
        theta: theta.clone(),
        lambda: lambda.clone(),
        theta_tilde: None,
        lambda_tilde: None,
        values: exact_now.clone(),
        measured: None,
        theta_change_rel: 0.0,
        cum_shots: 0,
        cum_compilations: 0,
    }];
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=config.max_iters {
        let steps = config.steps_at(t);
        let mode = config.mode_at(t);
        let exact_mode = mode == Mode::Exact;
        // In exact mode the previous record already holds F(θ); the preparation
        // is still counted.
        let measured = if exact_mode {
            ev.compilations += 1;
            exact_now.clone()
        } else {
            ev.values(&theta, mode, t, VALUES_AT_THETA)?
        };
        check_finite(t, "F(theta)", &measured)?;

        let (theta_next, lambda_next, theta_tilde, lambda_tilde) = match config.method {
            Method::Pd => {
                let g = ev.gradient(&theta, mode, t, GRADIENT_AT_THETA, &[&lambda])?;
                let (th, la) = pd_step(&theta, &lambda, &g, &measured, &steps);
                (th, la, None, None)
            }
            Method::Ppd => {
                let lambda_tilde = lambda.ascent(steps.nu_lambda, &measured[1..]);
                let g = ev.gradient(
                    &theta,
                    mode,
                    t,
                    GRADIENT_AT_THETA,
                    &[&lambda, &lambda_tilde],
                )?;
                let (tt, lt) = perturb(&theta, &lambda, &g, &measured, &steps);
                check_finite(t, "theta_tilde", &tt)?;
                let at_tilde = ev.values(&tt, mode, t, VALUES_AT_TILDE)?;
                let s = ppd_finish(&theta, &lambda, &g, tt, lt, &at_tilde, &steps);
                (s.theta, s.lambda, Some(s.theta_tilde), Some(s.lambda_tilde))
            }
            Method::Egm => {
                let lambda_tilde = lambda.ascent(steps.nu_lambda, &measured[1..]);
                let g = ev.gradient(&theta, mode, t, GRADIENT_AT_THETA, &[&lambda])?;
                let (tt, lt) = perturb(&theta, &lambda, &g, &measured, &steps);
                check_finite(t, "theta_tilde", &tt)?;
                let g_tilde = ev.gradient(&tt, mode, t, GRADIENT_AT_TILDE, &[&lambda_tilde])?;
                let at_tilde = ev.values(&tt, mode, t, VALUES_AT_TILDE)?;
                let s = egm_finish(tt, lt, &g_tilde, &at_tilde, &steps);
                (s.theta, s.lambda, Some(s.theta_tilde), Some(s.lambda_tilde))
            }
        };
        check_finite(t, "theta", &theta_next)?;
        check_finite(t, "lambda", lambda_next.values())?;

        let change = relative_change(&theta_next, &theta);
        theta = theta_next;
        lambda = lambda_next;
        exact_now = ev.exact(&theta)?;
        iterations = t;
        records.push(IterateRecord {
            t,
            theta: theta.clone(),
            lambda: lambda.clone(),
            theta_tilde,
            lambda_tilde,
            values: exact_now.clone(),
            measured: Some(measured),
            theta_change_rel: change,
            cum_shots: ev.shots,
            cum_compilations: ev.compilations,
        });
        if change <= config.eps_conv {
            converged = true;
            break;
        }
    }

    Ok(RunResult {
        trace: IterateTrace { records },
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{AnsatzSpec, Entanglement, ParamVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn steps(mu_theta: f64, mu_lambda: f64, nu_theta: f64, nu_lambda: f64) -> StepSizes {
        StepSizes {
            mu_theta,
            mu_lambda,
            nu_theta,
            nu_lambda,
        }
    }

    fn dual(v: &[f64]) -> DualVector {
        DualVector::project(v.to_vec())
    }

    #[test]
    fn pd_examples() {
        let s = steps(0.1, 0.1, 0.0, 0.0);
        let (th, la) = pd_step(
            &[1.0],
            &dual(&[2.0]),
            &[vec![0.5], vec![0.25]],
            &[0.0, 0.0],
            &s,
        );
        assert!((th[0] - 0.9).abs() < 1e-15);
        assert_eq!(la.values(), &[2.0]);
        let (_, la) = pd_step(
            &[1.0],
            &dual(&[0.5]),
            &[vec![0.0], vec![0.0]],
            &[0.0, -10.0],
            &s,
        );
        assert_eq!(la.values(), &[0.0]);
        let (th, la) = pd_step(
            &[1.3, -0.2],
            &dual(&[0.7]),
            &[vec![0.0; 2], vec![0.0; 2]],
            &[4.0, 0.0],
            &s,
        );
        assert_eq!(th, vec![1.3, -0.2]);
        assert_eq!(la.values(), &[0.7]);
    }

    #[test]
    fn ppd_example() {
        let s = steps(0.1, 1.0, 1.0, 1.0);
        let out = ppd_step(
            &[1.0],
            &dual(&[0.0]),
            &[vec![0.5], vec![0.2]],
            &[0.0, 0.3],
            &[0.0, 0.1],
            &s,
        );
        assert!((out.lambda_tilde.values()[0] - 0.3).abs() < 1e-15);
        assert!((out.theta[0] - 0.944).abs() < 1e-15);
        assert!((out.lambda.values()[0] - 0.1).abs() < 1e-15);
        assert!((out.theta_tilde[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slack_constraints_keep_dual_at_origin() {
        let s = steps(0.1, 1.0, 1.0, 1.0);
        let out = ppd_step(
            &[1.0, 2.0],
            &dual(&[0.0, 0.0]),
            &[vec![0.1, 0.2], vec![1.0, 1.0], vec![3.0, 0.0]],
            &[1.0, -0.3, -2.0],
            &[1.0, -0.1, -0.5],
            &s,
        );
        assert_eq!(out.lambda_tilde.values(), &[0.0, 0.0]);
        assert_eq!(out.lambda.values(), &[0.0, 0.0]);
    }

    #[test]
    fn egm_fixed_point() {
        let s = steps(0.3, 0.3, 0.5, 0.5);
        let zeros = [vec![0.0; 2], vec![0.0; 2]];
        let out = egm_step(
            &[0.4, 0.5],
            &dual(&[1.5]),
            &zeros,
            &zeros,
            &[2.0, 0.0],
            &[2.0, 0.0],
            &s,
        );
        assert_eq!(out.theta, vec![0.4, 0.5]);
        assert_eq!(out.lambda.values(), &[1.5]);
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(
            step_size(&StepSchedule::Harmonic { a: 1.5, b: 0.0 }, 3),
            0.5
        );
        assert!(
            (step_size(&StepSchedule::Harmonic { a: 0.1, b: 15.0 }, 1) - 0.00625).abs() < 1e-18
        );
        assert_eq!(
            step_size(&StepSchedule::Geometric { a: 0.02, q: 0.999 }, 0),
            0.02
        );
        assert_eq!(step_size(&StepSchedule::Constant { value: 0.3 }, 99), 0.3);
        assert!(StepSchedule::Harmonic { a: -1.0, b: 0.0 }
            .validate("x")
            .is_err());
        assert!(StepSchedule::Geometric { a: 1.0, q: 0.0 }
            .validate("x")
            .is_err());
    }

    fn arb_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<f64>)>
    {
        (1usize..5, 1usize..4).prop_flat_map(|(p, m)| {
            (
                prop::collection::vec(-5.0..5.0f64, p),
                prop::collection::vec(-1.0..3.0f64, m),
                prop::collection::vec(prop::collection::vec(-2.0..2.0f64, p), m + 1),
                prop::collection::vec(-2.0..2.0f64, m + 1),
                prop::collection::vec(-2.0..2.0f64, m + 1),
            )
        })
    }

    proptest! {
        #[test]
        fn ppd_without_perturbation_is_pd((theta, lam, g, f, f2) in arb_case(), mu in 0.01..1.0f64) {
            let lambda = dual(&lam);
            let s = steps(mu, mu / 2.0, 0.0, 0.0);
            let (th, la) = pd_step(&theta, &lambda, &g, &f, &s);
            let out = ppd_step(&theta, &lambda, &g, &f, &f, &s);
            prop_assert_eq!(&out.theta, &th);
            prop_assert_eq!(&out.lambda, &la);
            let _ = f2;
        }

        #[test]
        fn egm_without_perturbation_is_pd((theta, lam, g, f, _f2) in arb_case(), mu in 0.01..1.0f64) {
            let lambda = dual(&lam);
            let s = steps(mu, mu / 2.0, 0.0, 0.0);
            let (th, la) = pd_step(&theta, &lambda, &g, &f, &s);
            let out = egm_step(&theta, &lambda, &g, &g, &f, &f, &s);
            prop_assert_eq!(&out.theta, &th);
            prop_assert_eq!(&out.lambda, &la);
        }

        #[test]
        fn duals_stay_nonnegative((theta, lam, g, f, f2) in arb_case(), nu in 0.0..3.0f64, mu in 0.0..3.0f64) {
            let lambda = dual(&lam);
            let s = steps(mu, mu, nu, nu);
            let (_, la) = pd_step(&theta, &lambda, &g, &f, &s);
            let p = ppd_step(&theta, &lambda, &g, &f, &f2, &s);
            let e = egm_step(&theta, &lambda, &g, &g, &f, &f2, &s);
            for v in [la.values(), p.lambda.values(), p.lambda_tilde.values(), e.lambda.values()] {
                prop_assert!(v.iter().all(|&x| x >= 0.0));
            }
        }
    }

    fn small_problem(seed: u64) -> (Ansatz, Vec<DiagonalObservable>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ansatz = Ansatz::new(AnsatzSpec::new(3, 2, Entanglement::Full).unwrap());
        let obs = (0..3)
            .map(|_| {
                DiagonalObservable::Dense((0..8).map(|_| rng.random_range(-1.0..1.0)).collect())
            })
            .collect();
        let theta0 = ParamVector::random_uniform(6, &mut rng).into_inner();
        (ansatz, obs, theta0)
    }

    fn config(method: Method, mode: Mode, iters: usize) -> OptimizerConfig {
        OptimizerConfig {
            method,
            mu_theta: StepSchedule::Harmonic { a: 1.5, b: 0.0 },
            mu_lambda: StepSchedule::Harmonic { a: 0.1, b: 15.0 },
            nu_theta: 0.05,
            nu_lambda: 0.05,
            max_iters: iters,
            eps_conv: 1e-12,
            mode,
            seed: 99,
            shot_ramp: None,
        }
    }

    #[test]
    fn compilation_and_shot_accounting() {
        let (ansatz, obs, theta0) = small_problem(1);
        let p = ansatz.num_params() as u64;
        for (method, per_iter) in [
            (Method::Pd, 2 * p + 1),
            (Method::Ppd, 2 * p + 2),
            (Method::Egm, 4 * p + 2),
        ] {
            for mode in [Mode::Exact, Mode::Shots(5)] {
                let r = run(&ansatz, &obs, &config(method, mode, 6), &theta0).unwrap();
                assert_eq!(r.iterations, 6);
                for rec in &r.trace.records {
                    assert_eq!(rec.cum_compilations, per_iter * rec.t as u64);
                    assert_eq!(
                        rec.cum_shots,
                        per_iter * rec.t as u64 * mode.shots_per_circuit()
                    );
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let (ansatz, obs, theta0) = small_problem(2);
        for method in [Method::Pd, Method::Ppd, Method::Egm] {
            for mode in [Mode::Exact, Mode::Shots(3)] {
                let c = config(method, mode, 20);
                assert_eq!(
                    run(&ansatz, &obs, &c, &theta0).unwrap(),
                    run(&ansatz, &obs, &c, &theta0).unwrap()
                );
            }
        }
        let a = run(
            &ansatz,
            &obs,
            &config(Method::Ppd, Mode::Shots(3), 5),
            &theta0,
        )
        .unwrap();
        let mut c = config(Method::Ppd, Mode::Shots(3), 5);
        c.seed = 100;
        assert_ne!(a, run(&ansatz, &obs, &c, &theta0).unwrap());
    }

    #[test]
    fn constant_objective_with_slack_constraints_converges_immediately() {
        let ansatz = Ansatz::new(AnsatzSpec::new(2, 2, Entanglement::Linear).unwrap());
        let obs = vec![
            DiagonalObservable::Dense(vec![3.0; 4]),
            DiagonalObservable::Dense(vec![-1.0; 4]),
        ];
        let theta0 = vec![0.3, 0.4, 0.5, 0.6];
        let mut c = config(Method::Ppd, Mode::Exact, 100);
        c.eps_conv = 1e-5;
        let r = run(&ansatz, &obs, &c, &theta0).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trace.records.len(), 2);
        for (a, b) in r.final_theta().iter().zip(&theta0) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.final_lambda().values(), &[0.0]);
    }

    #[test]
    fn lagrangian_bounds_dual_function() {
        let (ansatz, obs, theta0) = small_problem(3);
        let tables: Vec<Vec<f64>> = obs.iter().map(|f| f.to_dense()).collect();
        for method in [Method::Pd, Method::Ppd] {
            let mut c = config(method, Mode::Exact, 200);
            c.mu_lambda = StepSchedule::Constant { value: 0.5 };
            let r = run(&ansatz, &obs, &c, &theta0).unwrap();
            for rec in &r.trace.records {
                let d = (0..8)
                    .map(|k| {
                        tables[0][k]
                            + (1..3)
                                .map(|m| rec.lambda.values()[m - 1] * tables[m][k])
                                .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(rec.lagrangian() >= d - 1e-12);
            }
        }
    }

    #[test]
    fn exact_values_match_forward_pass() {
        let (ansatz, obs, theta0) = small_problem(4);
        let r = run(
            &ansatz,
            &obs,
            &config(Method::Ppd, Mode::Shots(4), 5),
            &theta0,
        )
        .unwrap();
        for rec in &r.trace.records {
            let pmf = ansatz.forward(&rec.theta).unwrap().pmf();
            for (f, v) in obs.iter().zip(&rec.values) {
                assert!((f.exact_expectation(&pmf).unwrap() - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_steps_are_reported() {
        let (ansatz, obs, theta0) = small_problem(5);
        let mut c = config(Method::Pd, Mode::Exact, 5);
        c.mu_theta = StepSchedule::Harmonic {
            a: f64::MAX,
            b: -0.5,
        };
        let err = run(&ansatz, &obs, &c, &theta0).unwrap_err();
        assert!(
            matches!(err, VqecError::NonFinite { iteration: 1, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn invalid_configs_rejected() {
        let (ansatz, obs, theta0) = small_problem(6);
        let mut c = config(Method::Ppd, Mode::Exact, 5);
        c.nu_theta = 0.0;
        assert!(run(&ansatz, &obs, &c, &theta0).is_err());
        let mut c = config(Method::Pd, Mode::Exact, 5);
        c.eps_conv = 0.0;
        assert!(run(&ansatz, &obs, &c, &theta0).is_err());
        assert!(run(
            &ansatz,
            &obs,
            &config(Method::Pd, Mode::Shots(0), 5),
            &theta0
        )
        .is_err());
        assert!(run(
            &ansatz,
            &obs,
            &config(Method::Pd, Mode::Exact, 5),
            &theta0[1..]
        )
        .is_err());
    }

    #[test]
    fn shot_ramp_grows_to_cap() {
        let mut c = config(Method::Ppd, Mode::Shots(20), 5);
        c.shot_ramp = Some(ShotRamp {
            initial: 1,
            doubling_every: 2,
        });
        let got: Vec<Mode> = (1..=12).map(|t| c.mode_at(t)).collect();
        let want: Vec<Mode> = [1, 1, 2, 2, 4, 4, 8, 8, 16, 16, 20, 20]
            .iter()
            .map(|&s| Mode::Shots(s))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn method_parses() {
        assert_eq!("PPD".parse::<Method>().unwrap(), Method::Ppd);
        assert_eq!("egm".parse::<Method>().unwrap(), Method::Egm);
        assert!("sgd".parse::<Method>().is_err());
    }
}
