//! Observable values and parameter-shift gradients.
//!
//! With the gate `RY(2θ)` repeated `L` times, each `F_m` is a trigonometric
//! polynomial of degree one in `Lθ_p`, so
//! `∂F_m/∂θ_p = L·[F_m(θ + s·e_p) − F_m(θ − s·e_p)]` with `s = π/(4L)`.
//! Shifting by `±s` multiplies the gate by `RY(±π/2) = (I ± RY(π))/√2`, so the
//! shifted states are `ψ± = (ψ ± φ_p)/√2` with `φ_p = U_suffix·RY(π)_q·S_b`.
//!
//! In exact mode the difference `F(θ+s) − F(θ−s) = 2⟨f∘ψ, φ_p⟩` is accumulated
//! by pulling `f∘ψ` back through the circuit once per observable. In shot mode
//! each shifted circuit is prepared and sampled with its own stream.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::ansatz::Ansatz;
use crate::error::{arg_err, check_dim, Result, VqecError};
use crate::observables::{dot, DiagonalObservable};
use crate::seed::rng_for;
use crate::sim::{Pmf, RealStatevector};

/// How observables are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Exact expectations from the statevector.
    Exact,
    /// Sample means over this many shots per circuit.
    Shots(usize),
}

impl Mode {
    pub fn shots_per_circuit(self) -> u64 {
        match self {
            Mode::Exact => 0,
            Mode::Shots(s) => s as u64,
        }
    }
}

/// Everything needed to evaluate `F_0..F_M` or their gradients at `θ`.
#[derive(Debug, Clone, Copy)]
pub struct GradientRequest<'a> {
    pub ansatz: &'a Ansatz,
    pub theta: &'a [f64],
    pub observables: &'a [DiagonalObservable],
    pub mode: Mode,
    /// Seed of this evaluation; shifted circuits derive their own streams.
    pub seed: u64,
    /// Observables whose gradient rows are needed; `None` means all.
    pub active: Option<&'a [bool]>,
}

/// Observable values with their cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub shots: u64,
    pub compilations: u64,
}

/// Gradient rows `∇F_m`, one per observable, with their cost. Inactive rows
/// are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub rows: Vec<Vec<f64>>,
    pub shots: u64,
    pub compilations: u64,
}

/// Shift `s = π/(4L)` in the parameter space.
pub fn shift(repeat: usize) -> f64 {
    FRAC_PI_4 / repeat as f64
}

impl GradientRequest<'_> {
    fn validate(&self) -> Result<()> {
        check_dim(
            self.ansatz.num_params(),
            self.theta.len(),
            "parameter vector",
        )?;
        if self.observables.is_empty() {
            return arg_err("at least the objective observable is required");
        }
        let n = self.ansatz.spec().num_qubits();
        for f in self.observables {
            check_dim(n, f.num_qubits(), "observable qubit count")?;
        }
        if let Some(mask) = self.active {
            check_dim(self.observables.len(), mask.len(), "active mask")?;
        }
        if self.mode == Mode::Shots(0) {
            return arg_err("shot count must be at least 1");
        }
        if let Some(i) = self.theta.iter().position(|x| !x.is_finite()) {
            return Err(VqecError::Argument(format!("parameter {i} is not finite")));
        }
        Ok(())
    }

    fn is_active(&self, m: usize) -> bool {
        self.active.is_none_or(|mask| mask[m])
    }
}

fn values_from_pmf(observables: &[DiagonalObservable], pmf: &Pmf) -> Vec<f64> {
    observables
        .iter()
        .map(|f| match f.as_dense() {
            Some(v) => dot(v, pmf.probs()),
            None => f.exact_expectation(pmf).expect("dimensions checked"),
        })
        .collect()
}

fn sample_values(
    observables: &[DiagonalObservable],
    active: impl Fn(usize) -> bool,
    pmf: &Pmf,
    shots: usize,
    seed: u64,
    path: &[u64],
) -> Result<Vec<f64>> {
    let idx = pmf.sample_indices(shots, &mut rng_for(seed, path))?;
    Ok(observables
        .iter()
        .enumerate()
        .map(|(m, f)| {
            if active(m) {
                idx.iter().map(|&k| f.value(k)).sum::<f64>() / shots as f64
            } else {
                0.0
            }
        })
        .collect())
}

/// `F_m(θ)` for every observable from one circuit preparation. In shot mode all
/// observables share one sample set.
pub fn observable_values(req: &GradientRequest<'_>) -> Result<Evaluation> {
    req.validate()?;
    let pmf = req.ansatz.forward(req.theta)?.pmf();
    let values = match req.mode {
        Mode::Exact => values_from_pmf(req.observables, &pmf),
        Mode::Shots(s) => sample_values(req.observables, |_| true, &pmf, s, req.seed, &[])?,
    };
    Ok(Evaluation {
        values,
        shots: req.mode.shots_per_circuit(),
        compilations: 1,
    })
}

/// `⟨a, RY(π)_q s⟩` without materializing the rotated state.
fn ry_pi_overlap(a: &[f64], s: &[f64], mask: usize) -> f64 {
    a.chunks_exact(2 * mask)
        .zip(s.chunks_exact(2 * mask))
        .map(|(ac, sc)| {
            let (a0, a1) = ac.split_at(mask);
            let (s0, s1) = sc.split_at(mask);
            a0.iter()
                .zip(s1)
                .map(|(x, y)| -x * y)
                .chain(a1.iter().zip(s0).map(|(x, y)| x * y))
                .sum::<f64>()
        })
        .sum()
}

/// `(ψ+, ψ−)`, the outputs at `θ ± s·e_p`, built from the block states.
fn shifted_states(
    ansatz: &Ansatz,
    theta: &[f64],
    blocks: &[RealStatevector],
    p: usize,
) -> (Vec<f64>, Vec<f64>) {
    let spec = ansatz.spec();
    let (block, qubit) = spec.param_location(p);
    let mut phi = blocks[block].clone();
    phi.apply_ry_pi(qubit)
        .expect("qubit index is within the register");
    ansatz.propagate_after(&mut phi, theta, block);
    let psi = blocks[spec.depth() - 1].amplitudes();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = psi
        .iter()
        .zip(phi.amplitudes())
        .map(|(x, y)| r * (x + y))
        .collect();
    let minus = psi
        .iter()
        .zip(phi.amplitudes())
        .map(|(x, y)| r * (x - y))
        .collect();
    (plus, minus)
}

fn probabilities(amps: &[f64]) -> Pmf {
    let probs: Vec<f64> = amps.iter().map(|a| a * a).collect();
    Pmf::from_probs(probs).expect("shifted state is normalized")
}

/// `∂F_m/∂θ_p` for all active observables and all parameters, costing `2P`
/// circuit preparations.
pub fn parameter_shift_gradient(req: &GradientRequest<'_>) -> Result<Gradient> {
    req.validate()?;
    let spec = req.ansatz.spec();
    let num_params = spec.num_params();
    let l = spec.repeat() as f64;
    let blocks = req.ansatz.block_states(req.theta)?;
    let mut rows = vec![vec![0.0; num_params]; req.observables.len()];

    match req.mode {
        Mode::Exact => {
            let n = spec.num_qubits();
            let psi = blocks[spec.depth() - 1].amplitudes();
            for (m, f) in req.observables.iter().enumerate() {
                if !req.is_active(m) {
                    continue;
                }
                let fv = f.to_dense();
                let mut costate =
                    RealStatevector::from_raw(n, fv.iter().zip(psi).map(|(x, y)| x * y).collect());
                for block in (0..spec.depth()).rev() {
                    let s = blocks[block].amplitudes();
                    for q in 1..=n {
                        let mask = 1 << (n - q);
                        rows[m][spec.param_index(block, q)] =
                            2.0 * l * ry_pi_overlap(costate.amplitudes(), s, mask);
                    }
                    if block > 0 {
                        req.ansatz.adjoint_step(&mut costate, req.theta, block - 1);
                    }
                }
            }
        }
        Mode::Shots(shots) => {
            for p in 0..num_params {
                let (plus, minus) = shifted_states(req.ansatz, req.theta, &blocks, p);
                let active = |m| req.is_active(m);
                let f_plus = sample_values(
                    req.observables,
                    active,
                    &probabilities(&plus),
                    shots,
                    req.seed,
                    &[p as u64, 1],
                )?;
                let f_minus = sample_values(
                    req.observables,
                    active,
                    &probabilities(&minus),
                    shots,
                    req.seed,
                    &[p as u64, 0],
                )?;
                for m in 0..rows.len() {
                    rows[m][p] = l * (f_plus[m] - f_minus[m]);
                }
            }
        }
    }

    Ok(Gradient {
        rows,
        shots: 2 * num_params as u64 * req.mode.shots_per_circuit(),
        compilations: 2 * num_params as u64,
    })
}
