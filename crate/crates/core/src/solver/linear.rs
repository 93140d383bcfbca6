//! Symmetric positive-definite solves with conditioning checks and
//! iterative refinement.

use std::collections::VecDeque;

use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};
use nalgebra_sparse::convert::serial::convert_csc_dense;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use super::assemble::{ConductanceSystem, SystemBranch};
use crate::error::{Error, Result};

/// Largest system factored densely under [`Method::Auto`].
pub const DENSE_LIMIT: usize = 2000;
/// Systems whose estimated 2-norm condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Required bound on `|G V - J|_inf / max(1, |J|_inf)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

const MAX_REFINEMENTS: usize = 10;
const MAX_EIGEN_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub v: DVector<f64>,
    /// Low-order part of the refined solution; `v + v_lo` in double-double.
    pub v_lo: DVector<f64>,
    pub condition_estimate: f64,
    pub residual_inf: f64,
}

enum Factor {
    Dense(Cholesky<f64, Dyn>),
    Sparse {
        chol: Box<CscCholesky<f64>>,
        perm: Vec<usize>,
    },
}

impl Factor {
    fn new(g: &CscMatrix<f64>, method: Method) -> Option<Factor> {
        let dense = match method {
            Method::Auto => g.nrows() <= DENSE_LIMIT,
            Method::Dense => true,
            Method::Sparse => false,
        };
        if dense {
            Cholesky::new(convert_csc_dense(g)).map(Factor::Dense)
        } else {
            let perm = reverse_cuthill_mckee(g);
            let permuted = permute_symmetric(g, &perm);
            CscCholesky::factor(&permuted).ok().map(|chol| Factor::Sparse {
                chol: Box::new(chol),
                perm,
            })
        }
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Dense(c) => c.solve(b),
            Factor::Sparse { chol, perm } => {
                let bp = DVector::from_iterator(perm.len(), perm.iter().map(|&i| b[i]));
                let xp = chol.solve(&bp);
                let mut x = DVector::zeros(perm.len());
                for (k, &i) in perm.iter().enumerate() {
                    x[i] = xp[(k, 0)];
                }
                x
            }
        }
    }
}

pub fn solve(sys: &ConductanceSystem) -> Result<LinearSolution> {
    solve_with(sys, Method::Auto)
}

pub fn solve_with(sys: &ConductanceSystem, method: Method) -> Result<LinearSolution> {
    let n = sys.dim();
    if n == 0 {
        return Ok(LinearSolution {
            v: DVector::zeros(0),
            v_lo: DVector::zeros(0),
            condition_estimate: 1.0,
            residual_inf: 0.0,
        });
    }
    let singular = |cond: Option<f64>| Error::SingularSystem {
        isolated: Vec::new(),
        condition_estimate: cond,
    };

    let factor = Factor::new(&sys.g, method).ok_or_else(|| singular(None))?;
    let condition = condition_estimate(&sys.g, &factor);
    if !(condition <= MAX_CONDITION) {
        return Err(singular(Some(condition)));
    }

    let mut v = factor.solve(&sys.j);
    let mut v_lo = DVector::zeros(n);
    let mut last_step = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        let r = residual_dd(sys, &v, &v_lo);
        if r.amax() == 0.0 {
            break;
        }
        let d = factor.solve(&r);
        let step = d.amax();
        if !(step < last_step) {
            break;
        }
        for i in 0..n {
            let (s, e) = two_sum(v[i], d[i]);
            let (hi, lo) = two_sum(s, v_lo[i] + e);
            v[i] = hi;
            v_lo[i] = lo;
        }
        last_step = step;
        if step <= f64::EPSILON * f64::EPSILON * v.amax() {
            break;
        }
    }

    let residual_inf = residual_dd(sys, &v, &v_lo).amax();
    if !(residual_inf <= RESIDUAL_TOLERANCE * sys.j.amax().max(1.0)) {
        return Err(singular(Some(condition)));
    }
    Ok(LinearSolution {
        v,
        v_lo,
        condition_estimate: condition,
        residual_inf,
    })
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Branch current `g (V_from - V_to + emf)` from double-double node
/// voltages, returned as a double-double pair.
pub fn branch_current_dd(b: &SystemBranch, v: &DVector<f64>, v_lo: &DVector<f64>) -> (f64, f64) {
    let hi = |i: Option<usize>| i.map_or(0.0, |i| v[i]);
    let lo = |i: Option<usize>| i.map_or(0.0, |i| v_lo[i]);
    let (d, de) = two_sum(hi(b.from), -hi(b.to));
    let (e, ee) = two_sum(d, b.emf);
    let (p, pe) = two_prod(b.conductance, e);
    (p, pe + b.conductance * (de + ee + (lo(b.from) - lo(b.to))))
}

/// `J - G v`, evaluated branch by branch as the net current into each node.
/// Branch currents and node sums are carried in double-double, so rounding
/// in the assembled diagonal does not act as a spurious path to ground.
pub fn residual(sys: &ConductanceSystem, v: &DVector<f64>) -> DVector<f64> {
    residual_dd(sys, v, &DVector::zeros(v.len()))
}

fn residual_dd(sys: &ConductanceSystem, v: &DVector<f64>, v_lo: &DVector<f64>) -> DVector<f64> {
    let mut hi = vec![0.0; v.len()];
    let mut lo = vec![0.0; v.len()];
    for b in &sys.branches {
        let (p, tail) = branch_current_dd(b, v, v_lo);
        for (node, sign) in [(b.from, -1.0), (b.to, 1.0)] {
            if let Some(i) = node {
                let (s, se) = two_sum(hi[i], sign * p);
                hi[i] = s;
                lo[i] += se + sign * tail;
            }
        }
    }
    DVector::from_iterator(v.len(), hi.iter().zip(&lo).map(|(h, l)| h + l))
}

fn matvec(g: &CscMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(x.len());
    for (c, col) in g.col_iter().enumerate() {
        for (&r, &val) in col.row_indices().iter().zip(col.values()) {
            y[r] += val * x[c];
        }
    }
    y
}

/// Ratio of the largest to the smallest eigenvalue, from power iteration on
/// `G` and inverse iteration through the factorization.
fn condition_estimate(g: &CscMatrix<f64>, factor: &Factor) -> f64 {
    let n = g.nrows();
    let start = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 97) as f64 / 97.0);
    let lambda_max = dominant_eigenvalue(start, |x| matvec(g, x));
    let inv_max = dominant_eigenvalue(DVector::from_element(n, 1.0), |x| factor.solve(x));
    if !(lambda_max > 0.0 && inv_max > 0.0) {
        return f64::INFINITY;
    }
    lambda_max * inv_max
}

fn dominant_eigenvalue(mut x: DVector<f64>, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> f64 {
    x /= x.norm();
    let mut lambda = 0.0;
    for _ in 0..MAX_EIGEN_ITERATIONS {
        let y = apply(&x);
        let next = x.dot(&y);
        let norm = y.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return next;
        }
        x = y / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Bandwidth-reducing ordering; `perm[k]` is the original index placed at `k`.
pub fn reverse_cuthill_mckee(g: &CscMatrix<f64>) -> Vec<usize> {
    let n = g.nrows();
    let adj: Vec<Vec<usize>> = g
        .col_iter()
        .enumerate()
        .map(|(c, col)| col.row_indices().iter().copied().filter(|&r| r != c).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn permute_symmetric(g: &CscMatrix<f64>, perm: &[usize]) -> CscMatrix<f64> {
    let mut inverse = vec![0; perm.len()];
    for (k, &i) in perm.iter().enumerate() {
        inverse[i] = k;
    }
    let mut coo = CooMatrix::new(g.nrows(), g.ncols());
    for (r, c, &v) in g.triplet_iter() {
        coo.push(inverse[r], inverse[c], v);
    }
    CscMatrix::from(&coo)
}

/// Dense copy of the system matrix.
pub fn dense(g: &CscMatrix<f64>) -> DMatrix<f64> {
    convert_csc_dense(g)
}
