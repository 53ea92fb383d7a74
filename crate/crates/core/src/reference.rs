//! Classical ground truth: exhaustive search over bitstrings, the exact LP
//! over the probability simplex, dual and Lagrangian values, the
//! degradation-bound calculator and success probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, check_dim, Result, VqecError};
use crate::observables::dot;
use crate::problems::{ConstrainedProblem, QcboInstance};
use crate::sim::Pmf;

/// Largest register for exhaustive search.
pub const BRUTE_FORCE_LIMIT: usize = 20;
/// Largest LP dimension.
pub const LP_LIMIT: usize = 1 << 16;

/// Outcome of exhaustive search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BruteForce {
    /// Optimal value and every basis index attaining it.
    Optimal {
        value: f64,
        minimizers: Vec<usize>,
    },
    Infeasible,
}

impl BruteForce {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Optimal { value, .. } => Some(*value),
            Self::Infeasible => None,
        }
    }

    pub fn minimizers(&self) -> &[usize] {
        match self {
            Self::Optimal { minimizers, .. } => minimizers,
            Self::Infeasible => &[],
        }
    }
}

/// Scans all `2^n` bitstrings. Values within `1e-9·max(1, |v*|)` of the best
/// count as ties, since complementary spin assignments reach the same value
/// through different rounding.
pub fn brute_force_qcbo(q: &QcboInstance) -> Result<BruteForce> {
    let n = q.num_vars();
    if n > BRUTE_FORCE_LIMIT {
        return Err(VqecError::Capacity {
            what: "brute-force variables",
            value: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let feasible: Vec<(usize, f64)> = (0..1usize << n)
        .filter(|&k| q.constraints().iter().all(|f| f.eval_index(k) <= 0.0))
        .map(|k| (k, q.cost().eval_index(k)))
        .collect();
    let Some(best) = feasible.iter().map(|&(_, v)| v).reduce(f64::min) else {
        return Ok(BruteForce::Infeasible);
    };
    let tol = 1e-9 * best.abs().max(1.0);
    let minimizers = feasible
        .iter()
        .filter(|&&(_, v)| v - best <= tol)
        .map(|&(k, _)| k)
        .collect();
    Ok(BruteForce::Optimal {
        value: best,
        minimizers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Solution of `min f_0ᵀp` s.t. `f_mᵀp ≤ 0`, `p` in the simplex. When
/// infeasible, `value` is `+∞` and the vectors are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Dense simplex tableau for `Ax = b, x ≥ 0` with an identity block of
/// artificial columns, which keeps `B⁻¹` readable at every step.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    num_structural: usize,
}

const PIVOT_TOL: f64 = 1e-11;

impl Tableau {
    fn num_cols(&self) -> usize {
        self.num_structural + self.rows.len()
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        for x in self.rows[r].iter_mut() {
            *x /= piv;
        }
        self.rhs[r] /= piv;
        let (prow, prhs) = (self.rows[r].clone(), self.rhs[r]);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][j];
            if factor != 0.0 {
                for (x, p) in self.rows[i].iter_mut().zip(&prow) {
                    *x -= factor * p;
                }
                self.rhs[i] -= factor * prhs;
                self.rows[i][j] = 0.0;
            }
        }
        self.basis[r] = j;
    }

    /// Minimizes `cᵀx` from the current basis with Bland's rule; columns at
    /// or beyond `enter_limit` never enter.
    fn minimize(&mut self, cost: &[f64], enter_limit: usize) -> Result<()> {
        loop {
            let cb: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();
            let entering = (0..enter_limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = self.rows.iter().zip(&cb).map(|(row, c)| c * row[j]).sum();
                cost[j] - z < -PIVOT_TOL
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][j];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(VqecError::Argument("LP is unbounded".into()));
            };
            self.pivot(r, j);
        }
    }
}

/// Exact LP over the simplex by a two-phase dense simplex method with Bland's
/// rule. Multipliers are `λ = −y_{1..M}` with `yᵀ = c_Bᵀ B⁻¹`.
pub fn lp_solve(problem: &ConstrainedProblem) -> Result<LpSolution> {
    let columns = problem.columns();
    lp_solve_columns(&columns[0], &columns[1..])
}

/// [`lp_solve`] on raw columns.
pub fn lp_solve_columns(cost: &[f64], constraints: &[Vec<f64>]) -> Result<LpSolution> {
    let n = cost.len();
    if n == 0 {
        return arg_err("LP needs at least one variable");
    }
    if n > LP_LIMIT {
        return Err(VqecError::Capacity {
            what: "LP dimension",
            value: n,
            limit: LP_LIMIT,
        });
    }
    for f in constraints {
        check_dim(n, f.len(), "LP constraint length")?;
    }
    let m = constraints.len();
    if m == 0 {
        // Without constraints the optimum is the best vertex; the simplex
        // could stop at a tie that is a rounding error worse.
        let k = (0..n).fold(0, |best, j| if cost[j] < cost[best] { j } else { best });
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            value: cost[k],
            p,
            lambda: Vec::new(),
        });
    }
    let num_structural = n + m;
    let num_rows = m + 1;

    let mut rows = Vec::with_capacity(num_rows);
    let mut first = vec![0.0; num_structural + num_rows];
    first[..n].fill(1.0);
    first[num_structural] = 1.0;
    rows.push(first);
    for (i, f) in constraints.iter().enumerate() {
        let mut row = vec![0.0; num_structural + num_rows];
        row[..n].copy_from_slice(f);
        row[n + i] = 1.0;
        row[num_structural + 1 + i] = 1.0;
        rows.push(row);
    }
    let mut rhs = vec![0.0; num_rows];
    rhs[0] = 1.0;
    let mut t = Tableau {
        rows,
        rhs,
        basis: (num_structural..num_structural + num_rows).collect(),
        num_structural,
    };

    let mut phase1 = vec![0.0; t.num_cols()];
    phase1[num_structural..].fill(1.0);
    t.minimize(&phase1, num_structural)?;
    let infeasibility: f64 = t
        .basis
        .iter()
        .zip(&t.rhs)
        .filter(|(&b, _)| b >= num_structural)
        .map(|(_, &x)| x)
        .sum();
    if infeasibility > 1e-9 {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            value: f64::INFINITY,
            p: Vec::new(),
            lambda: Vec::new(),
        });
    }
    for r in 0..num_rows {
        if t.basis[r] >= num_structural {
            if let Some(j) = (0..num_structural).find(|&j| t.rows[r][j].abs() > PIVOT_TOL) {
                t.pivot(r, j);
            }
        }
    }

    let mut phase2 = vec![0.0; t.num_cols()];
    phase2[..n].copy_from_slice(cost);
    t.minimize(&phase2, num_structural)?;

    let mut x = vec![0.0; num_structural];
    for (r, &b) in t.basis.iter().enumerate() {
        if b < num_structural {
            x[b] = t.rhs[r].max(0.0);
        }
    }
    // Rescaling removes pivoting drift from 1ᵀp = 1, so a vertex solution
    // reads exactly f_0[k].
    let total: f64 = x[..n].iter().sum();
    let p: Vec<f64> = x[..n].iter().map(|v| v / total).collect();
    let value = dot(cost, &p);
    let cb: Vec<f64> = t.basis.iter().map(|&b| phase2[b]).collect();
    let lambda = (1..num_rows)
        .map(|i| {
            let y: f64 = t
                .rows
                .iter()
                .zip(&cb)
                .map(|(row, c)| c * row[num_structural + i])
                .sum();
            (-y).max(0.0)
        })
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        p,
        lambda,
    })
}

fn check_nonnegative(lambda: &[f64]) -> Result<()> {
    match lambda.iter().position(|&l| !(l >= 0.0)) {
        None => Ok(()),
        Some(i) => arg_err(format!("multiplier {} = {} is negative", i + 1, lambda[i])),
    }
}

fn combined(cost: &[f64], constraints: &[Vec<f64>], lambda: &[f64]) -> Result<Vec<f64>> {
    check_dim(constraints.len(), lambda.len(), "multiplier count")?;
    check_nonnegative(lambda)?;
    let mut g = cost.to_vec();
    for (f, &l) in constraints.iter().zip(lambda) {
        check_dim(cost.len(), f.len(), "constraint length")?;
        for (gi, fi) in g.iter_mut().zip(f) {
            *gi += l * fi;
        }
    }
    Ok(g)
}

/// `D(λ) = min_k (f_0 + Fλ)_k`.
pub fn dual_function(cost: &[f64], constraints: &[Vec<f64>], lambda: &[f64]) -> Result<f64> {
    Ok(combined(cost, constraints, lambda)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// `(f_0 + Fλ)ᵀp`.
pub fn lagrangian_value(
    p: &Pmf,
    lambda: &[f64],
    cost: &[f64],
    constraints: &[Vec<f64>],
) -> Result<f64> {
    check_dim(cost.len(), p.dim(), "pmf length")?;
    Ok(dot(&combined(cost, constraints, lambda)?, p.probs()))
}

/// Inputs and result of the degradation bound
/// `D* ≤ D_θ* ≤ D* + ε‖f_0‖₁ + εL‖λ̃‖₁`, with `‖λ̃‖₁` replaced by its bound
/// `(f_0ᵀp̂ − P*)/s_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub eps: f64,
    pub slack: f64,
    /// `max_m ‖f_m‖₁`.
    pub l_const: f64,
    pub cost_l1: f64,
    pub multiplier_bound: f64,
    pub dual_optimum: f64,
    pub upper_bound: f64,
}

/// Degradation bound for a PMF approximation accuracy `eps`, given a point
/// `p̂` with `Fᵀp̂ ≤ −(εL + s_0)·1`.
pub fn degradation_bound(
    cost: &[f64],
    constraints: &[Vec<f64>],
    eps: f64,
    p_hat: &Pmf,
    slack: f64,
    p_star: f64,
    d_star: f64,
) -> Result<BoundReport> {
    if !(eps >= 0.0) || !(slack > 0.0) {
        return arg_err(format!(
            "need eps ≥ 0 and slack > 0, got eps = {eps}, slack = {slack}"
        ));
    }
    check_dim(cost.len(), p_hat.dim(), "pmf length")?;
    let l_const = constraints
        .iter()
        .map(|f| f.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let margin = -(eps * l_const) - slack;
    for (m, f) in constraints.iter().enumerate() {
        check_dim(cost.len(), f.len(), "constraint length")?;
        let v = dot(f, p_hat.probs());
        if v > margin {
            return Err(VqecError::Assumption(format!(
                "constraint {} at the strictly feasible point is {v}, above −(εL + s0) = {margin}",
                m + 1
            )));
        }
    }
    let cost_l1: f64 = cost.iter().map(|x| x.abs()).sum();
    let multiplier_bound = (dot(cost, p_hat.probs()) - p_star) / slack;
    Ok(BoundReport {
        eps,
        slack,
        l_const,
        cost_l1,
        multiplier_bound,
        dual_optimum: d_star,
        upper_bound: d_star + eps * cost_l1 + eps * l_const * multiplier_bound,
    })
}

/// `Σ_{k ∈ minimizers} p_k`.
pub fn success_probability(p: &Pmf, minimizers: &[usize]) -> Result<f64> {
    minimizers
        .iter()
        .map(|&k| {
            p.probs()
                .get(k)
                .copied()
                .ok_or_else(|| VqecError::Argument(format!("minimizer index {k} out of range")))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::QuadraticForm;
    use crate::problems::{build_variational, random_instance_s1, Formulation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn linear(c: Vec<f64>, d0: f64) -> QuadraticForm {
        let n = c.len();
        QuadraticForm::new(vec![vec![0.0; n]; n], c, d0).unwrap()
    }

    fn random_pmf(n: usize, rng: &mut ChaCha8Rng) -> Pmf {
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        Pmf::from_probs(raw.iter().map(|x| x / s).collect()).unwrap()
    }

    #[test]
    fn brute_force_examples() {
        let q = QcboInstance::new(
            linear(vec![1.0, 1.0], 0.0),
            vec![linear(vec![-1.0, -1.0], 1.0)],
        )
        .unwrap();
        assert_eq!(
            brute_force_qcbo(&q).unwrap(),
            BruteForce::Optimal {
                value: 1.0,
                minimizers: vec![1, 2]
            }
        );
        let q = QcboInstance::new(
            linear(vec![1.0, 1.0], 0.0),
            vec![linear(vec![0.0, 0.0], 1.0)],
        )
        .unwrap();
        assert_eq!(brute_force_qcbo(&q).unwrap(), BruteForce::Infeasible);
        let big = QcboInstance::new(QuadraticForm::constant(21, 0.0), vec![]).unwrap();
        assert!(matches!(
            brute_force_qcbo(&big),
            Err(VqecError::Capacity { .. })
        ));
    }

    #[test]
    fn brute_force_qubo_is_min_of_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = random_instance_s1(8, 0, &mut rng).unwrap();
        let table = q.cost().tabulate(8).unwrap().to_dense();
        let min = table.iter().cloned().fold(f64::MAX, f64::min);
        let bf = brute_force_qcbo(&q).unwrap();
        assert_eq!(bf.value(), Some(min));
        // MaxCut optima come in complementary pairs
        let mins = bf.minimizers();
        assert!(mins.len() >= 2 && mins.len() % 2 == 0);
        assert!(mins.iter().all(|&k| mins.contains(&(255 - k))));
    }

    #[test]
    fn lp_examples() {
        let s = lp_solve_columns(&[1.0, 2.0], &[]).unwrap();
        assert_eq!(
            (s.status, s.value, s.p.clone()),
            (LpStatus::Optimal, 1.0, vec![1.0, 0.0])
        );
        let s = lp_solve_columns(&[1.0, 2.0], &[vec![1.0, -1.0]]).unwrap();
        assert!((s.value - 1.5).abs() < 1e-12);
        assert!((s.p[0] - 0.5).abs() < 1e-12 && (s.p[1] - 0.5).abs() < 1e-12);
        assert!((s.lambda[0] - 0.5).abs() < 1e-12);
        let s = lp_solve_columns(&[1.0, 2.0], &[vec![1.0, 0.5]]).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(lp_solve_columns(&[1.0, 2.0], &[vec![1.0]]).is_err());
    }

    /// Solves a small square system by Gaussian elimination with partial
    /// pivoting; `None` when singular.
    fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() < 1e-10 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            x[r] = (b[r] - (r + 1..n).map(|c| a[r][c] * x[c]).sum::<f64>()) / a[r][r];
        }
        Some(x)
    }

    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        (0..n)
            .flat_map(|first| {
                subsets(n - first - 1, k - 1).into_iter().map(move |rest| {
                    std::iter::once(first)
                        .chain(rest.into_iter().map(|x| x + first + 1))
                        .collect()
                })
            })
            .collect()
    }

    /// Minimum over basic feasible points: supports of size `s ≤ M+1` with
    /// `s − 1` tight constraints.
    fn vertex_oracle(cost: &[f64], cons: &[Vec<f64>]) -> Option<f64> {
        let n = cost.len();
        let m = cons.len();
        let mut best: Option<f64> = None;
        for s in 1..=(m + 1).min(n) {
            for support in subsets(n, s) {
                for tight in subsets(m, s - 1) {
                    let mut a = vec![support.iter().map(|_| 1.0).collect::<Vec<_>>()];
                    a.extend(
                        tight
                            .iter()
                            .map(|&t| support.iter().map(|&k| cons[t][k]).collect()),
                    );
                    let mut b = vec![0.0; s];
                    b[0] = 1.0;
                    let Some(x) = solve_square(a, b) else {
                        continue;
                    };
                    if x.iter().any(|&v| v < -1e-9) {
                        continue;
                    }
                    let mut p = vec![0.0; n];
                    for (&k, &v) in support.iter().zip(&x) {
                        p[k] = v;
                    }
                    if cons.iter().any(|f| dot(f, &p) > 1e-9) {
                        continue;
                    }
                    let v = dot(cost, &p);
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
        }
        best
    }

    fn random_columns(n: usize, m: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>) {
        let cost = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let cons = (0..m)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        (cost, cons)
    }

    #[test]
    fn lp_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut feasible_seen = 0;
        for draw in 0..300 {
            let n = [2, 4, 8, 16][draw % 4];
            let m = draw % 4;
            let (cost, cons) = random_columns(n, m, &mut rng);
            let sol = lp_solve_columns(&cost, &cons).unwrap();
            match vertex_oracle(&cost, &cons) {
                None => assert_eq!(sol.status, LpStatus::Infeasible, "draw {draw}"),
                Some(v) => {
                    feasible_seen += 1;
                    assert!(sol.is_optimal(), "draw {draw}");
                    assert!(
                        (sol.value - v).abs() < 1e-9,
                        "draw {draw}: {} vs {v}",
                        sol.value
                    );
                }
            }
        }
        assert!(feasible_seen > 100);
    }

    #[test]
    fn lp_duality_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for draw in 0..100 {
            let n = [8, 16, 64, 256][draw % 4];
            let m = 1 + draw % 3;
            let (cost, cons) = random_columns(n, m, &mut rng);
            let sol = lp_solve_columns(&cost, &cons).unwrap();
            if !sol.is_optimal() {
                continue;
            }
            assert!(sol.p.iter().all(|&x| x >= 0.0));
            assert!((sol.p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (f, &l) in cons.iter().zip(&sol.lambda) {
                let v = dot(f, &sol.p);
                assert!(v <= 1e-9);
                assert!((l * v).abs() <= 1e-8, "complementary slackness");
            }
            let d = dual_function(&cost, &cons, &sol.lambda).unwrap();
            assert!(
                (d - sol.value).abs() <= 1e-8,
                "strong duality: {d} vs {}",
                sol.value
            );
            for _ in 0..20 {
                let lam: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..5.0)).collect();
                assert!(dual_function(&cost, &cons, &lam).unwrap() <= sol.value + 1e-12);
            }
        }
    }

    #[test]
    fn lp_relaxation_is_below_binary_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [4, 6, 8] {
            for specs in [0, 2, 4] {
                let q = random_instance_s1(n, specs, &mut rng).unwrap();
                let lp = lp_solve(&build_variational(&q, Formulation::Average).unwrap()).unwrap();
                let bf = brute_force_qcbo(&q).unwrap().value().unwrap();
                if specs == 0 {
                    assert!((lp.value - bf).abs() < 1e-9);
                } else {
                    assert!(lp.value <= bf + 1e-9);
                }
            }
        }
    }

    #[test]
    fn dual_function_examples() {
        assert_eq!(
            dual_function(&[1.0, 2.0], &[vec![-1.0, 1.0]], &[1.0]).unwrap(),
            0.0
        );
        assert_eq!(
            dual_function(&[3.0, 2.0], &[vec![-1.0, 1.0]], &[0.0]).unwrap(),
            2.0
        );
        assert!(dual_function(&[1.0, 2.0], &[vec![-1.0, 1.0]], &[-0.5]).is_err());
    }

    #[test]
    fn dual_function_is_concave() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (cost, cons) = random_columns(8, 2, &mut rng);
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..3.0)).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..3.0)).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let dm = dual_function(&cost, &cons, &mid).unwrap();
            let avg = 0.5
                * (dual_function(&cost, &cons, &a).unwrap()
                    + dual_function(&cost, &cons, &b).unwrap());
            assert!(dm >= avg - 1e-12);
        }
    }

    #[test]
    fn lagrangian_examples_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (cost, cons) = random_columns(8, 2, &mut rng);
        let p = random_pmf(8, &mut rng);
        assert!(
            (lagrangian_value(&p, &[0.0, 0.0], &cost, &cons).unwrap() - dot(&cost, p.probs()))
                .abs()
                < 1e-15
        );
        let e3 = Pmf::canonical(3, 3).unwrap();
        let lam = [0.5, 2.0];
        let want = cost[3] + 0.5 * cons[0][3] + 2.0 * cons[1][3];
        assert!((lagrangian_value(&e3, &lam, &cost, &cons).unwrap() - want).abs() < 1e-15);
        for _ in 0..100 {
            let p = random_pmf(8, &mut rng);
            let lam: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..3.0)).collect();
            let l = lagrangian_value(&p, &lam, &cost, &cons).unwrap();
            assert!(l >= dual_function(&cost, &cons, &lam).unwrap() - 1e-12);
        }
        assert!(lagrangian_value(&Pmf::uniform(2).unwrap(), &lam, &cost, &cons).is_err());
    }

    #[test]
    fn degradation_bound_examples() {
        let cost = vec![1.0, 3.0];
        let cons = vec![vec![1.0, -2.0], vec![0.5, 0.5]];
        let p_hat = Pmf::canonical(1, 1).unwrap();
        // f_2ᵀp̂ = 0.5 > 0, so no slack works
        assert!(matches!(
            degradation_bound(&cost, &cons, 0.0, &p_hat, 0.1, 1.0, 1.0),
            Err(VqecError::Assumption(_))
        ));
        let cons = vec![vec![1.0, -2.0], vec![0.5, -0.5]];
        let r = degradation_bound(&cost, &cons, 0.1, &p_hat, 0.1, 1.0, 0.8).unwrap();
        assert_eq!(r.l_const, 3.0);
        assert_eq!(r.cost_l1, 4.0);
        assert!((r.multiplier_bound - 20.0).abs() < 1e-12);
        assert!((r.upper_bound - (0.8 + 0.4 + 0.1 * 3.0 * 20.0)).abs() < 1e-12);
        let r0 = degradation_bound(&cost, &cons, 0.0, &p_hat, 0.1, 1.0, 0.8).unwrap();
        assert_eq!(r0.upper_bound, 0.8);
        // strict feasibility fails once εL + s0 exceeds the margin 0.5
        assert!(degradation_bound(&cost, &cons, 0.2, &p_hat, 0.1, 1.0, 0.8).is_err());
        assert!(degradation_bound(&cost, &cons, 0.1, &p_hat, 0.0, 1.0, 0.8).is_err());
    }

    #[test]
    fn degradation_bound_is_monotone_in_eps() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        for _ in 0..200 {
            let (cost, cons) = random_columns(8, 2, &mut rng);
            let p_hat = random_pmf(8, &mut rng);
            let Some(sol) = lp_solve_columns(&cost, &cons)
                .ok()
                .filter(|s| s.is_optimal())
            else {
                continue;
            };
            let mut prev = f64::NEG_INFINITY;
            for i in 0..10 {
                let eps = 0.002 * i as f64;
                if let Ok(r) =
                    degradation_bound(&cost, &cons, eps, &p_hat, 0.01, sol.value, sol.value)
                {
                    assert!(r.upper_bound >= prev);
                    assert!(r.upper_bound >= r.dual_optimum);
                    prev = r.upper_bound;
                    checked += 1;
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn success_probability_examples() {
        let u = Pmf::uniform(2).unwrap();
        assert_eq!(success_probability(&u, &[0, 3]).unwrap(), 0.5);
        assert_eq!(
            success_probability(&Pmf::canonical(2, 3).unwrap(), &[0, 3]).unwrap(),
            1.0
        );
        assert_eq!(
            success_probability(&Pmf::canonical(2, 1).unwrap(), &[0, 3]).unwrap(),
            0.0
        );
        assert!(success_probability(&u, &[4]).is_err());
    }
}
