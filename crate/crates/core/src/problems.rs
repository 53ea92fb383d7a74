//! Problem builders: MaxCut and constrained MaxCut as quadratic binary
//! programs, their variational formulations over diagonal observables,
//! random instances, and the instance file format.
//!
//! Spins and bits are related by `s = 1 − 2b`. Vertices, bits and qubits are
//! numbered from 1 in files and from 0 in memory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, check_dim, Result, VqecError};
use crate::observables::{DiagonalObservable, QuadraticForm};
use crate::seed::rng_for;
use crate::sim::check_qubits;

/// Largest register tabulated densely; larger problems use evaluators.
pub const DENSE_LIMIT: usize = 16;

/// Weighted graph with optional pairwise specifications.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    weights: Vec<Vec<f64>>,
    specs: Option<Vec<Vec<i8>>>,
}

impl GraphInstance {
    /// Builds from dense matrices; `W` must be symmetric, nonnegative and
    /// zero on the diagonal, `C` symmetric in {−1, 0, 1} with zero diagonal.
    pub fn new(weights: Vec<Vec<f64>>, specs: Option<Vec<Vec<i8>>>) -> Result<Self> {
        let n = weights.len();
        for (i, row) in weights.iter().enumerate() {
            check_dim(n, row.len(), "weight matrix columns")?;
            if row[i] != 0.0 {
                return arg_err(format!(
                    "weight matrix has nonzero diagonal at vertex {}",
                    i + 1
                ));
            }
            for (j, &w) in row.iter().enumerate() {
                if !(w >= 0.0) || !w.is_finite() {
                    return arg_err(format!(
                        "weight ({}, {}) = {w} is not a finite nonnegative number",
                        i + 1,
                        j + 1
                    ));
                }
                if w != weights[j][i] {
                    return arg_err(format!(
                        "weight matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        if let Some(c) = &specs {
            check_dim(n, c.len(), "specification matrix rows")?;
            for (i, row) in c.iter().enumerate() {
                check_dim(n, row.len(), "specification matrix columns")?;
                if row[i] != 0 {
                    return arg_err(format!(
                        "specification matrix has nonzero diagonal at vertex {}",
                        i + 1
                    ));
                }
                for (j, &v) in row.iter().enumerate() {
                    if !(-1..=1).contains(&v) || v != c[j][i] {
                        return arg_err(format!(
                            "specification ({}, {}) must be symmetric in {{-1, 0, 1}}",
                            i + 1,
                            j + 1
                        ));
                    }
                }
            }
        }
        Ok(Self { weights, specs })
    }

    /// Builds from 1-based edge and specification lists.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        specs: Option<&[(usize, usize, i8)]>,
    ) -> Result<Self> {
        let mut w = vec![vec![0.0; n]; n];
        for &(i, j, x) in edges {
            let (a, b) = pair_index(n, i, j)?;
            w[a][b] = x;
            w[b][a] = x;
        }
        let c = match specs {
            None => None,
            Some(list) => {
                let mut c = vec![vec![0i8; n]; n];
                for &(i, j, v) in list {
                    let (a, b) = pair_index(n, i, j)?;
                    c[a][b] = v;
                    c[b][a] = v;
                }
                Some(c)
            }
        };
        Self::new(w, c)
    }

    pub fn num_vertices(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn specs(&self) -> Option<&[Vec<i8>]> {
        self.specs.as_deref()
    }

    /// Nonzero weights as 1-based `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        upper_pairs(self.num_vertices())
            .filter(|&(i, j)| self.weights[i][j] != 0.0)
            .map(|(i, j)| (i + 1, j + 1, self.weights[i][j]))
            .collect()
    }

    /// Nonzero specifications as 1-based `(i, j, ±1)` with `i < j`.
    pub fn spec_edges(&self) -> Option<Vec<(usize, usize, i8)>> {
        self.specs.as_ref().map(|c| {
            upper_pairs(c.len())
                .filter(|&(i, j)| c[i][j] != 0)
                .map(|(i, j)| (i + 1, j + 1, c[i][j]))
                .collect()
        })
    }

    /// `sᵀWs`.
    pub fn spin_energy(&self, s: &[i8]) -> f64 {
        spin_form(&self.weights, s, |x| x)
    }

    /// `(1ᵀW1 − sᵀWs)/4`, the total weight of edges crossing the partition.
    pub fn cut_size(&self, s: &[i8]) -> f64 {
        let total: f64 = self.weights.iter().flatten().sum();
        (total - self.spin_energy(s)) / 4.0
    }

    /// Whether `sᵀCs ≥ Σ|C_ij|`.
    pub fn specs_satisfied(&self, s: &[i8]) -> bool {
        match &self.specs {
            None => true,
            Some(c) => {
                let lhs = spin_form(c, s, f64::from);
                let rhs: f64 = c.iter().flatten().map(|&v| f64::from(v.abs())).sum();
                lhs >= rhs
            }
        }
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> Result<(usize, usize)> {
    if i == 0 || j == 0 || i > n || j > n || i == j {
        return arg_err(format!("invalid vertex pair ({i}, {j}) for {n} vertices"));
    }
    Ok((i - 1, j - 1))
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn spin_form<T: Copy>(m: &[Vec<T>], s: &[i8], to_f64: impl Fn(T) -> f64) -> f64 {
    let mut v = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            v += to_f64(x) * f64::from(s[i]) * f64::from(s[j]);
        }
    }
    v
}

/// Spins of a bit vector, `s = 1 − 2b`.
pub fn spins_of_bits(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| 1 - 2 * b as i8).collect()
}

/// `min f_0(b)` subject to `f_m(b) ≤ 0` over `b ∈ {0,1}^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcboInstance {
    n: usize,
    cost: QuadraticForm,
    constraints: Vec<QuadraticForm>,
}

impl QcboInstance {
    pub fn new(cost: QuadraticForm, constraints: Vec<QuadraticForm>) -> Result<Self> {
        let n = cost.num_vars();
        if n == 0 {
            return arg_err("instance needs at least one variable");
        }
        for f in &constraints {
            check_dim(n, f.num_vars(), "constraint dimension")?;
        }
        Ok(Self {
            n,
            cost,
            constraints,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn cost(&self) -> &QuadraticForm {
        &self.cost
    }

    pub fn constraints(&self) -> &[QuadraticForm] {
        &self.constraints
    }

    /// Adds a constraint `f ≤ 0`.
    pub fn with_constraint(mut self, f: QuadraticForm) -> Result<Self> {
        check_dim(self.n, f.num_vars(), "constraint dimension")?;
        self.constraints.push(f);
        Ok(self)
    }
}

/// Binary form of `s ↦ sᵀMs`: `4bᵀMb − 4(M1)ᵀb + 1ᵀM1`.
fn spin_quadratic(m: &[Vec<f64>], scale: f64, offset: f64) -> QuadraticForm {
    let a = m
        .iter()
        .map(|row| row.iter().map(|&x| 4.0 * scale * x).collect())
        .collect();
    let row_sums: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
    let c = row_sums.iter().map(|&r| -4.0 * scale * r).collect();
    let total: f64 = row_sums.iter().sum();
    QuadraticForm::new(a, c, scale * total + offset).expect("symmetric by construction")
}

/// MaxCut as the QUBO `min sᵀWs` in bits.
pub fn maxcut_qubo(g: &GraphInstance) -> QcboInstance {
    QcboInstance::new(spin_quadratic(&g.weights, 1.0, 0.0), Vec::new()).expect("graph is nonempty")
}

/// Constrained MaxCut: the MaxCut cost with `Σ|C_ij| − sᵀCs ≤ 0`. Without
/// specifications this is plain MaxCut.
pub fn constrained_maxcut(g: &GraphInstance) -> QcboInstance {
    let mut q = maxcut_qubo(g);
    if let Some(c) = &g.specs {
        let cf: Vec<Vec<f64>> = c
            .iter()
            .map(|row| row.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let abs_sum: f64 = cf.iter().flatten().map(|x| x.abs()).sum();
        q.constraints.push(spin_quadratic(&cf, -1.0, abs_sum));
    }
    q
}

/// The balance constraint `−B ≤ sᵀ1 ≤ B` as the two forms
/// `sᵀ1 − B ≤ 0` and `−sᵀ1 − B ≤ 0`, with `sᵀ1 = n − 2·1ᵀb`.
pub fn balance_constraints(n: usize, bound: f64) -> [QuadraticForm; 2] {
    let zero = vec![vec![0.0; n]; n];
    let upper =
        QuadraticForm::new(zero.clone(), vec![-2.0; n], n as f64 - bound).expect("zero matrix");
    let lower = QuadraticForm::new(zero, vec![2.0; n], -(n as f64) - bound).expect("zero matrix");
    [upper, lower]
}

/// How constraints enter the variational problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Formulation {
    /// `E[f_m(b)] ≤ 0`.
    Average,
    /// `Pr[f_m(b) ≤ 0] = 1`.
    Deterministic,
    /// `Pr[f_m(b) ≤ 0] ≥ 1 − β`.
    Chance { beta: f64 },
    /// Explicit objective and constraint vectors.
    #[serde(rename = "explicit-lp")]
    ExplicitLp,
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Average => f.write_str("average"),
            Self::Deterministic => f.write_str("deterministic"),
            Self::Chance { beta } => write!(f, "chance({beta})"),
            Self::ExplicitLp => f.write_str("explicit-lp"),
        }
    }
}

/// `min f_0ᵀp(θ)` subject to `f_mᵀp(θ) ≤ 0`.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    n: usize,
    observables: Vec<DiagonalObservable>,
    formulation: Formulation,
    source: Option<QcboInstance>,
}

impl ConstrainedProblem {
    /// An explicit LP from dense columns `f_0..f_M`, each of length `2^n`.
    pub fn explicit(columns: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = columns.first() else {
            return arg_err("explicit LP needs at least the cost column");
        };
        let dim = first.len();
        let observables = columns
            .into_iter()
            .map(|col| {
                check_dim(dim, col.len(), "LP column length")?;
                DiagonalObservable::dense(col)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: observables[0].num_qubits(),
            observables,
            formulation: Formulation::ExplicitLp,
            source: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.observables.len() - 1
    }

    /// `[f_0, f_1, …, f_M]`.
    pub fn observables(&self) -> &[DiagonalObservable] {
        &self.observables
    }

    pub fn cost(&self) -> &DiagonalObservable {
        &self.observables[0]
    }

    pub fn constraints(&self) -> &[DiagonalObservable] {
        &self.observables[1..]
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    /// The binary program this problem was built from.
    pub fn source(&self) -> Option<&QcboInstance> {
        self.source.as_ref()
    }

    /// Dense columns `f_0..f_M`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.observables.iter().map(|f| f.to_dense()).collect()
    }
}

fn observable_of(f: &QuadraticForm, n: usize) -> Result<DiagonalObservable> {
    if n <= DENSE_LIMIT {
        f.tabulate(n)
    } else {
        DiagonalObservable::from_quadratic(f.clone())
    }
}

/// Diagonal observables of a binary program under a formulation. The cost is
/// always `f_0` itself; average constraints are `f_m`; deterministic and
/// chance constraints are `(1−β)·1 − 1[f_m ≤ 0]`.
pub fn build_variational(q: &QcboInstance, formulation: Formulation) -> Result<ConstrainedProblem> {
    let n = q.n;
    check_qubits(n)?;
    let beta = match formulation {
        Formulation::Average => None,
        Formulation::Deterministic => Some(0.0),
        Formulation::Chance { beta } => Some(beta),
        Formulation::ExplicitLp => {
            return arg_err("explicit LPs are built from columns, not binary programs")
        }
    };
    let mut observables = vec![observable_of(&q.cost, n)?];
    for f in &q.constraints {
        let obs = observable_of(f, n)?;
        observables.push(match beta {
            None => obs,
            Some(b) => obs.indicator_transform().chance_transform(b)?,
        });
    }
    Ok(ConstrainedProblem {
        n,
        observables,
        formulation,
        source: Some(q.clone()),
    })
}

/// Complete graph with weights drawn from Uniform(0, 1], plus `num_specs`
/// distinct vertex pairs whose specification is read off a random spin
/// assignment, so the constrained problem is feasible.
pub fn random_constrained_graph<R: Rng + ?Sized>(
    n: usize,
    num_specs: usize,
    rng: &mut R,
) -> Result<GraphInstance> {
    let pairs: Vec<(usize, usize)> = upper_pairs(n).collect();
    if num_specs > pairs.len() {
        return arg_err(format!(
            "{num_specs} specifications exceed the {} vertex pairs",
            pairs.len()
        ));
    }
    let mut w = vec![vec![0.0; n]; n];
    for &(i, j) in &pairs {
        let x = 1.0 - rng.random::<f64>();
        w[i][j] = x;
        w[j][i] = x;
    }
    let planted: Vec<i8> = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let specs = if num_specs == 0 {
        None
    } else {
        let mut c = vec![vec![0i8; n]; n];
        for k in sample(rng, pairs.len(), num_specs) {
            let (i, j) = pairs[k];
            c[i][j] = planted[i] * planted[j];
            c[j][i] = c[i][j];
        }
        Some(c)
    };
    GraphInstance::new(w, specs)
}

/// Constrained MaxCut on a random graph from [`random_constrained_graph`].
pub fn random_instance_s1<R: Rng + ?Sized>(
    n: usize,
    num_specs: usize,
    rng: &mut R,
) -> Result<QcboInstance> {
    Ok(constrained_maxcut(&random_constrained_graph(
        n, num_specs, rng,
    )?))
}

/// A random explicit LP and the number of infeasible draws discarded.
#[derive(Debug, Clone)]
pub struct RandomLp {
    pub problem: ConstrainedProblem,
    pub redraws: u64,
}

/// Columns `f_0..f_M` of length `dim` with i.i.d. standard-normal entries.
/// Draw `r` uses the stream `(seed, r)`; infeasible draws are discarded.
pub fn random_lp(dim: usize, num_constraints: usize, seed: u64) -> Result<RandomLp> {
    if dim < 2 || !dim.is_power_of_two() {
        return arg_err(format!("LP dimension {dim} is not a power of two ≥ 2"));
    }
    for redraws in 0..1000u64 {
        let mut rng = rng_for(seed, &[redraws]);
        let columns: Vec<Vec<f64>> = (0..=num_constraints)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let problem = ConstrainedProblem::explicit(columns)?;
        if crate::reference::lp_solve(&problem)?.is_optimal() {
            return Ok(RandomLp { problem, redraws });
        }
    }
    Err(VqecError::Argument(
        "no feasible LP found in 1000 draws".into(),
    ))
}

/// File format tag.
pub const INSTANCE_FORMAT: &str = "vqec-instance/1";

/// Payload of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceData {
    Graph {
        n: usize,
        /// `[i, j, w]`, 1-based.
        weights: Vec<(usize, usize, f64)>,
        /// `[i, j, ±1]`, 1-based.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        specs: Option<Vec<(usize, usize, i8)>>,
    },
    Qcbo {
        n: usize,
        cost: QuadraticForm,
        constraints: Vec<QuadraticForm>,
    },
    Lp {
        n: usize,
        /// `f_0..f_M`, each of length `2^n`.
        columns: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: String,
    #[serde(flatten)]
    pub data: InstanceData,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl InstanceFile {
    pub fn graph(g: &GraphInstance) -> Self {
        Self::wrap(InstanceData::Graph {
            n: g.num_vertices(),
            weights: g.edges(),
            specs: g.spec_edges(),
        })
    }

    pub fn qcbo(q: &QcboInstance) -> Self {
        Self::wrap(InstanceData::Qcbo {
            n: q.n,
            cost: q.cost.clone(),
            constraints: q.constraints.clone(),
        })
    }

    pub fn lp(p: &ConstrainedProblem) -> Self {
        Self::wrap(InstanceData::Lp {
            n: p.n,
            columns: p.columns(),
        })
    }

    fn wrap(data: InstanceData) -> Self {
        Self {
            format: INSTANCE_FORMAT.to_string(),
            data,
            provenance: BTreeMap::new(),
        }
    }

    pub fn with_provenance(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.insert(key.to_string(), value.to_string());
        self
    }

    pub fn num_qubits(&self) -> usize {
        match &self.data {
            InstanceData::Graph { n, .. }
            | InstanceData::Qcbo { n, .. }
            | InstanceData::Lp { n, .. } => *n,
        }
    }

    /// The binary program described by a graph or QCBO file.
    pub fn to_qcbo(&self) -> Result<QcboInstance> {
        match &self.data {
            InstanceData::Graph { n, weights, specs } => Ok(constrained_maxcut(
                &GraphInstance::from_edges(*n, weights, specs.as_deref())?,
            )),
            InstanceData::Qcbo {
                n,
                cost,
                constraints,
            } => {
                cost.validate()?;
                for f in constraints {
                    f.validate()?;
                }
                let q = QcboInstance::new(cost.clone(), constraints.clone())?;
                check_dim(*n, q.n, "instance size")?;
                Ok(q)
            }
            InstanceData::Lp { .. } => arg_err("an LP file does not describe a binary program"),
        }
    }

    pub fn to_graph(&self) -> Result<GraphInstance> {
        match &self.data {
            InstanceData::Graph { n, weights, specs } => {
                GraphInstance::from_edges(*n, weights, specs.as_deref())
            }
            _ => arg_err("instance file does not hold a graph"),
        }
    }

    /// The variational problem of this instance; LP files ignore the
    /// formulation.
    pub fn to_problem(&self, formulation: Formulation) -> Result<ConstrainedProblem> {
        match &self.data {
            InstanceData::Lp { n, columns } => {
                let p = ConstrainedProblem::explicit(columns.clone())?;
                check_dim(*n, p.n, "instance size")?;
                Ok(p)
            }
            _ => build_variational(&self.to_qcbo()?, formulation),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)
            .map_err(|e| VqecError::Argument(format!("malformed instance file: {e}")))?;
        if file.format != INSTANCE_FORMAT {
            return arg_err(format!(
                "unsupported instance format {:?} (expected {INSTANCE_FORMAT})",
                file.format
            ));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| VqecError::Argument(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VqecError::Argument(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
