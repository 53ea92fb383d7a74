//! Two-local ansatz: alternating RY rotation blocks and CZ entanglement
//! blocks, with the final rotation block left unentangled.
//!
//! Parameters are in the half-angle convention: a logical parameter `θ_p`
//! drives `RY(2θ_p)`, so `p_1(θ) = sin²θ` on a single qubit. With repetition
//! factor `L`, each logical parameter drives `L` consecutive `RY(2θ_p)` gates
//! on its qubit while the parameter count stays `d·n`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, check_dim, Result, VqecError};
use crate::sim::{check_qubits, RealStatevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    /// CZ between every pair of qubits.
    Full,
    /// CZ between consecutive qubits.
    Linear,
    /// Linear plus CZ(n, 1) when `n > 2`.
    Circular,
}

impl Entanglement {
    /// CZ pairs of one entanglement block, grouped by ascending control and
    /// then ascending target.
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        match self {
            Entanglement::Full => (1..n)
                .flat_map(|a| (a + 1..=n).map(move |b| (a, b)))
                .collect(),
            Entanglement::Linear => (1..n).map(|a| (a, a + 1)).collect(),
            Entanglement::Circular => {
                let mut pairs: Vec<_> = (1..n).map(|a| (a, a + 1)).collect();
                // for n = 2 the closing gate would cancel the only linear one
                if n > 2 {
                    pairs.push((n, 1));
                }
                pairs
            }
        }
    }
}

impl fmt::Display for Entanglement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entanglement::Full => "full",
            Entanglement::Linear => "linear",
            Entanglement::Circular => "circular",
        })
    }
}

impl FromStr for Entanglement {
    type Err = VqecError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Entanglement::Full),
            "linear" => Ok(Entanglement::Linear),
            "circular" => Ok(Entanglement::Circular),
            other => arg_err(format!("unknown entanglement scheme {other:?}")),
        }
    }
}

/// Shape of a two-local circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzSpec {
    n: usize,
    depth: usize,
    entanglement: Entanglement,
    repeat: usize,
}

impl AnsatzSpec {
    pub fn new(n: usize, depth: usize, entanglement: Entanglement) -> Result<Self> {
        check_qubits(n)?;
        if depth == 0 {
            return arg_err("depth must be at least 1");
        }
        Ok(Self {
            n,
            depth,
            entanglement,
            repeat: 1,
        })
    }

    /// Sets the number of consecutive RY gates each parameter drives.
    pub fn with_repeat(mut self, repeat: usize) -> Result<Self> {
        if repeat == 0 {
            return arg_err("repetition factor must be at least 1");
        }
        self.repeat = repeat;
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entanglement(&self) -> Entanglement {
        self.entanglement
    }

    pub fn repeat(&self) -> usize {
        self.repeat
    }

    /// Logical parameter count `P = d·n`.
    pub fn num_params(&self) -> usize {
        self.depth * self.n
    }

    /// Position of the parameter for `block` (0-based) and `qubit` (1-based).
    pub fn param_index(&self, block: usize, qubit: usize) -> usize {
        block * self.n + (qubit - 1)
    }

    /// Inverse of [`param_index`](Self::param_index).
    pub fn param_location(&self, p: usize) -> (usize, usize) {
        (p / self.n, p % self.n + 1)
    }
}

/// Circuit parameters `θ ∈ ℝ^P`, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Entries drawn i.i.d. from `Uniform[0, 2π)`.
    pub fn random_uniform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random_range(0.0..2.0 * PI)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A spec prepared for repeated evaluation: the entanglement block is
/// precomputed as a diagonal sign table.
#[derive(Debug, Clone)]
pub struct Ansatz {
    spec: AnsatzSpec,
    flips: Vec<bool>,
}

impl Ansatz {
    pub fn new(spec: AnsatzSpec) -> Self {
        let n = spec.n;
        let masks: Vec<usize> = spec
            .entanglement
            .pairs(n)
            .into_iter()
            .map(|(a, b)| (1 << (n - a)) | (1 << (n - b)))
            .collect();
        let flips = if spec.depth > 1 {
            (0..1usize << n)
                .map(|k| masks.iter().filter(|&&m| k & m == m).count() % 2 == 1)
                .collect()
        } else {
            Vec::new()
        };
        Self { spec, flips }
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn num_params(&self) -> usize {
        self.spec.num_params()
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_dim(self.spec.num_params(), theta.len(), "parameter vector")
    }

    /// `S(θ)|0⟩_n`.
    pub fn forward(&self, theta: &[f64]) -> Result<RealStatevector> {
        self.check_theta(theta)?;
        let mut state = RealStatevector::zero_state(self.spec.n)?;
        for block in 0..self.spec.depth {
            self.rotate_block(&mut state, theta, block);
            self.entangle_after(&mut state, block);
        }
        Ok(state)
    }

    /// States right after each rotation block (before its entanglement),
    /// for `block = 0..d`. The last entry is the circuit output.
    pub fn block_states(&self, theta: &[f64]) -> Result<Vec<RealStatevector>> {
        self.check_theta(theta)?;
        let mut state = RealStatevector::zero_state(self.spec.n)?;
        let mut out = Vec::with_capacity(self.spec.depth);
        for block in 0..self.spec.depth {
            self.rotate_block(&mut state, theta, block);
            out.push(state.clone());
            self.entangle_after(&mut state, block);
        }
        Ok(out)
    }

    /// Applies everything that follows rotation block `block`.
    pub(crate) fn propagate_after(&self, state: &mut RealStatevector, theta: &[f64], block: usize) {
        self.entangle_after(state, block);
        for b in block + 1..self.spec.depth {
            self.rotate_block(state, theta, b);
            self.entangle_after(state, b);
        }
    }

    /// Pulls a costate back across rotation block `block + 1` and the
    /// entangler after `block`: `a_b = E_bᵀ R_{b+1}ᵀ a_{b+1}`.
    pub(crate) fn adjoint_step(&self, costate: &mut RealStatevector, theta: &[f64], block: usize) {
        let l = self.spec.repeat as f64;
        for q in 1..=self.spec.n {
            let angle = -2.0 * l * theta[self.spec.param_index(block + 1, q)];
            costate
                .apply_ry(q, angle)
                .expect("qubit index is within the register");
        }
        self.entangle_after(costate, block);
    }

    // The L repeated gates on a qubit commute and are applied as one rotation.
    fn rotate_block(&self, state: &mut RealStatevector, theta: &[f64], block: usize) {
        let l = self.spec.repeat as f64;
        for q in 1..=self.spec.n {
            let angle = 2.0 * l * theta[self.spec.param_index(block, q)];
            state
                .apply_ry(q, angle)
                .expect("qubit index is within the register");
        }
    }

    fn entangle_after(&self, state: &mut RealStatevector, block: usize) {
        if block + 1 < self.spec.depth {
            state
                .apply_sign_flips(&self.flips)
                .expect("sign table matches register size");
        }
    }
}

/// `S(θ)|0⟩_n` for a one-off evaluation.
pub fn forward(spec: &AnsatzSpec, theta: &ParamVector) -> Result<RealStatevector> {
    Ansatz::new(*spec).forward(theta)
}

/// Parameters whose circuit output is the basis state `|k⟩`.
///
/// All blocks but the last are zero, so the last block sees `|0…0⟩`. In the
/// last block a qubit whose bit is 0 gets angle 0; a qubit whose bit is 1 gets
/// π/2 or 3π/2, picking the sign that undoes the phase its controlling
/// qubits would imprint: the parity of the preceding 1-bits for full
/// entanglement, the previous qubit's bit for linear and circular (where
/// qubit 1's predecessor is qubit n). Angles are divided by the repetition
/// factor so the repeated gates compose to the intended rotation.
pub fn corner_params(spec: &AnsatzSpec, k: usize) -> Result<ParamVector> {
    let n = spec.n;
    if k >= 1 << n {
        return arg_err(format!("basis index {k} out of range for n = {n}"));
    }
    let bit = |p: usize| (k >> (n - p)) & 1;
    let mut theta = ParamVector::zeros(spec.num_params());
    let last = spec.depth - 1;
    let mut ones_before = 0;
    for p in 1..=n {
        if bit(p) == 1 {
            let flip = match spec.entanglement {
                Entanglement::Full => ones_before % 2 == 1,
                Entanglement::Linear => p > 1 && bit(p - 1) == 1,
                Entanglement::Circular if n > 2 => {
                    let prev = if p == 1 { n } else { p - 1 };
                    bit(prev) == 1
                }
                Entanglement::Circular => p > 1 && bit(p - 1) == 1,
            };
            let angle = if flip { 3.0 * FRAC_PI_2 } else { FRAC_PI_2 };
            theta.values_mut()[spec.param_index(last, p)] = angle / spec.repeat as f64;
            ones_before += 1;
        }
    }
    Ok(theta)
}
