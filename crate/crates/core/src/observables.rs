//! Diagonal observables `H_m = diag(f_m)`.
//!
//! The expectation of a diagonal observable under the circuit state is the
//! inner product `f_mᵀ p(θ)` with the outcome distribution, and a shot
//! estimate is the sample mean of `f_m` over measured bitstrings. All
//! observables of a problem are read off the same samples.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, check_dim, Result, VqecError};
use crate::sim::{check_qubits, Bitstring, Pmf};

/// `f(b) = bᵀAb + bᵀc + d0` over `b ∈ {0,1}^n`, with `A` symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
    d0: f64,
}

impl QuadraticForm {
    pub fn new(a: Vec<Vec<f64>>, c: Vec<f64>, d0: f64) -> Result<Self> {
        let form = Self { a, c, d0 };
        form.validate()?;
        Ok(form)
    }

    /// The zero form on `n` variables plus a constant.
    pub fn constant(n: usize, d0: f64) -> Self {
        Self {
            a: vec![vec![0.0; n]; n],
            c: vec![0.0; n],
            d0,
        }
    }

    /// Checks shape and symmetry; used after deserialization too.
    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        check_dim(n, self.a.len(), "quadratic form rows")?;
        for row in &self.a {
            check_dim(n, row.len(), "quadratic form columns")?;
        }
        for i in 0..n {
            for j in 0..i {
                if (self.a[i][j] - self.a[j][i]).abs() > 1e-12 {
                    return arg_err(format!("quadratic form is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    /// Evaluates at `b`.
    pub fn eval(&self, b: &Bitstring) -> Result<f64> {
        check_dim(self.num_vars(), b.len(), "bitstring length")?;
        Ok(self.eval_index(b.index()))
    }

    /// Evaluates at the bits of basis index `k` (variable 1 is the most
    /// significant bit).
    pub(crate) fn eval_index(&self, k: usize) -> f64 {
        let n = self.num_vars();
        let ones: Vec<usize> = (0..n).filter(|&i| (k >> (n - 1 - i)) & 1 == 1).collect();
        let mut v = self.d0;
        for &i in &ones {
            v += self.c[i];
            let row = &self.a[i];
            for &j in &ones {
                v += row[j];
            }
        }
        v
    }

    /// Dense table `f_k = f(bits(k))` for all `2^n` indices.
    pub fn tabulate(&self, n: usize) -> Result<DiagonalObservable> {
        check_dim(self.num_vars(), n, "qubit count")?;
        check_qubits(n)?;
        Ok(DiagonalObservable::Dense(
            (0..1usize << n).map(|k| self.eval_index(k)).collect(),
        ))
    }
}

/// Evaluator used by lazily defined observables.
pub type Evaluator = Arc<dyn Fn(&Bitstring) -> f64 + Send + Sync>;

/// A diagonal observable, either tabulated or defined by an evaluator.
#[derive(Clone)]
pub enum DiagonalObservable {
    Dense(Vec<f64>),
    Lazy { n: usize, eval: Evaluator },
}

impl fmt::Debug for DiagonalObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dense(v) => f.debug_tuple("Dense").field(v).finish(),
            Self::Lazy { n, .. } => f.debug_struct("Lazy").field("n", n).finish_non_exhaustive(),
        }
    }
}

impl DiagonalObservable {
    /// Wraps a value vector whose length is a power of two.
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return arg_err(format!(
                "observable length {} is not a power of two",
                values.len()
            ));
        }
        check_qubits(values.len().trailing_zeros() as usize)?;
        Ok(Self::Dense(values))
    }

    pub fn lazy(
        n: usize,
        eval: impl Fn(&Bitstring) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self::Lazy {
            n,
            eval: Arc::new(eval),
        })
    }

    /// Lazy observable backed by a quadratic form.
    pub fn from_quadratic(q: QuadraticForm) -> Result<Self> {
        Self::lazy(q.num_vars(), move |b| q.eval_index(b.index()))
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            Self::Dense(v) => v.len().trailing_zeros() as usize,
            Self::Lazy { n, .. } => *n,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits()
    }

    pub fn as_dense(&self) -> Option<&[f64]> {
        match self {
            Self::Dense(v) => Some(v),
            Self::Lazy { .. } => None,
        }
    }

    /// Value at basis index `k`.
    pub fn value(&self, k: usize) -> f64 {
        match self {
            Self::Dense(v) => v[k],
            Self::Lazy { n, eval } => eval(&Bitstring::from_index(*n, k).expect("index in range")),
        }
    }

    /// Materializes the value vector.
    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            Self::Dense(v) => v.clone(),
            Self::Lazy { .. } => (0..self.dim()).map(|k| self.value(k)).collect(),
        }
    }

    fn map(&self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        match self {
            Self::Dense(v) => Self::Dense(v.iter().map(|&x| g(x)).collect()),
            Self::Lazy { n, eval } => {
                let eval = Arc::clone(eval);
                Self::Lazy {
                    n: *n,
                    eval: Arc::new(move |b| g(eval(b))),
                }
            }
        }
    }

    /// `g_k = 1` where `f_k ≤ 0`, else 0.
    pub fn indicator_transform(&self) -> Self {
        self.map(|x| if x <= 0.0 { 1.0 } else { 0.0 })
    }

    /// `(1-β)·1 - g`, so that `⟨result, p⟩ ≤ 0` iff `⟨g, p⟩ ≥ 1-β`.
    pub fn chance_transform(&self, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return arg_err(format!("violation probability {beta} outside [0, 1)"));
        }
        if let Self::Dense(v) = self {
            if let Some(x) = v.iter().find(|&&x| x != 0.0 && x != 1.0) {
                return arg_err(format!("chance transform expects 0/1 entries, found {x}"));
            }
        }
        Ok(self.map(move |g| (1.0 - beta) - g))
    }

    /// `fᵀp`.
    pub fn exact_expectation(&self, p: &Pmf) -> Result<f64> {
        check_dim(self.dim(), p.dim(), "observable vs pmf")?;
        Ok(match self {
            Self::Dense(v) => dot(v, p.probs()),
            Self::Lazy { .. } => p
                .probs()
                .iter()
                .enumerate()
                .filter(|(_, &q)| q != 0.0)
                .map(|(k, &q)| q * self.value(k))
                .sum(),
        })
    }

    /// Sample mean `(1/S) Σ_s f(b_s)`.
    pub fn shot_estimate(&self, samples: &[Bitstring]) -> Result<f64> {
        if samples.is_empty() {
            return arg_err("shot estimate needs at least one sample");
        }
        let n = self.num_qubits();
        let mut total = 0.0;
        for b in samples {
            if b.len() != n {
                return Err(VqecError::Dimension {
                    expected: n,
                    got: b.len(),
                    context: "sampled bitstring",
                });
            }
            total += match self {
                Self::Dense(v) => v[b.index()],
                Self::Lazy { eval, .. } => eval(b),
            };
        }
        Ok(total / samples.len() as f64)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Exact expectations of every observable under `p`.
pub fn exact_all(observables: &[DiagonalObservable], p: &Pmf) -> Result<Vec<f64>> {
    observables.iter().map(|f| f.exact_expectation(p)).collect()
}

/// Estimates of every observable from one shared sample set.
pub fn estimate_all(observables: &[DiagonalObservable], samples: &[Bitstring]) -> Result<Vec<f64>> {
    observables
        .iter()
        .map(|f| f.shot_estimate(samples))
        .collect()
}
