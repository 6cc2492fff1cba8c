//! Constraint generation around a conic interior-point solve.
//!
//! Every program here has the shape `min f(x)` subject to `x ≥ lower` and
//! finitely many rows `c·x ≥ rhs` with `c ≥ 0`, where `f` is either a
//! weighted power sum `Σ w_i x_i^p` or a sum of weighted `p`-norms over
//! blocks of coordinates. Both are increasing in every coordinate on the
//! feasible set, so `x = lower` is optimal whenever it violates no row.

use crate::error::{Error, Result};
use crate::ext;
use clarabel::algebra::CscMatrix;
use nalgebra::{DMatrix, DVector};
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};

/// Relative feasibility tolerance for the rows.
pub const FEAS_TOL: f64 = 1e-9;
/// Largest KKT residual accepted before reporting a stall.
pub const STALL_TOL: f64 = 1e-6;
/// Rows added per constraint-generation round.
const BATCH: usize = 8;
const MAX_ROUNDS: usize = 400;
const IPM_MAX_ITER: u32 = 500;
const IPM_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub label: String,
}

impl Row {
    fn dot(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Objective {
    /// `Σ w_i x_i^p` over all variables.
    PowerSum { p: f64, weights: Vec<f64> },
    /// `Σ_b (Σ_j μ_j x_{off+j}^p)^{1/p}` over contiguous blocks `(off, μ)`.
    NormSum { p: f64, blocks: Vec<(usize, Vec<f64>)> },
}

impl Objective {
    fn p(&self) -> f64 {
        match self {
            Objective::PowerSum { p, .. } | Objective::NormSum { p, .. } => *p,
        }
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::PowerSum { p, weights } => weights.iter().zip(x).map(|(w, v)| w * v.powf(*p)).sum(),
            Objective::NormSum { p, blocks } => blocks.iter().map(|(off, mu)| block_norm(*p, mu, &x[*off..*off + mu.len()])).sum(),
        }
    }
}

fn block_norm(p: f64, mu: &[f64], x: &[f64]) -> f64 {
    mu.iter().zip(x).map(|(m, v)| m * v.powf(p)).sum::<f64>().powf(1.0 / p)
}

#[derive(Clone, Debug)]
pub(crate) struct Program {
    pub lower: Vec<f64>,
    pub objective: Objective,
    pub rows: Vec<Row>,
}

/// KKT evidence for a returned minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// One label per constraint (curve or pair).
    pub labels: Vec<String>,
    /// `c·x − rhs` per constraint.
    pub slacks: Vec<f64>,
    /// Multiplier per constraint; zero for constraints never generated.
    pub duals: Vec<f64>,
    pub primal_residual: f64,
    pub stationarity_residual: f64,
    pub complementarity_residual: f64,
    /// Constraints in the final subproblem, in the order they were generated.
    pub active: Vec<usize>,
    pub rounds: usize,
    pub status: String,
    /// A linear objective admits other minimizers.
    pub nonunique: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub optimum: f64,
    #[serde(with = "ext::vec")]
    pub minimizer: Vec<f64>,
    /// Companion variables (the gradient in capacity programs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary: Option<Vec<f64>>,
    pub certificate: Certificate,
    /// Largest of the three KKT residuals.
    pub tolerance: f64,
}

fn violation(row: &Row, x: &[f64]) -> f64 {
    (row.rhs - row.dot(x)) / row.rhs.abs().max(1.0)
}

struct Layout {
    n_var: usize,
    q: Vec<f64>,
    zero_rows: Vec<(Vec<(usize, f64)>, f64)>,
    cone_triples: Vec<[(Option<usize>, f64, f64); 3]>,
    alpha: f64,
}

/// Epigraph variables and cones for the objective.
fn layout(program: &Program) -> Layout {
    let n = program.lower.len();
    let p = program.objective.p();
    let alpha = 1.0 / p;
    let mut l = Layout { n_var: n, q: vec![0.0; n], zero_rows: Vec::new(), cone_triples: Vec::new(), alpha };
    let fresh = |l: &mut Layout| {
        l.q.push(0.0);
        l.n_var += 1;
        l.n_var - 1
    };
    match &program.objective {
        Objective::PowerSum { weights, .. } if p == 1.0 => l.q[..n].copy_from_slice(weights),
        Objective::PowerSum { weights, .. } => {
            for (i, w) in weights.iter().enumerate() {
                let t = fresh(&mut l);
                l.q[t] = *w;
                // t^{1/p} · 1^{1−1/p} ≥ x_i
                l.cone_triples.push([(Some(t), 1.0, 0.0), (None, 0.0, 1.0), (Some(i), 1.0, 0.0)]);
            }
        }
        Objective::NormSum { blocks, .. } if p == 1.0 => {
            for (off, mu) in blocks {
                for (j, m) in mu.iter().enumerate() {
                    l.q[off + j] += m;
                }
            }
        }
        Objective::NormSum { blocks, .. } => {
            for (off, mu) in blocks {
                let s = fresh(&mut l);
                l.q[s] = 1.0;
                let mut sum_row = vec![(s, -1.0)];
                for (j, m) in mu.iter().enumerate() {
                    let r = fresh(&mut l);
                    sum_row.push((r, 1.0));
                    // r^{1/p} s^{1−1/p} ≥ μ^{1/p} x, and Σ r = s gives s^p ≥ Σ μ x^p
                    l.cone_triples.push([(Some(r), 1.0, 0.0), (Some(s), 1.0, 0.0), (Some(off + j), m.powf(alpha), 0.0)]);
                }
                l.zero_rows.push((sum_row, 0.0));
            }
        }
    }
    l
}

struct Sub {
    x: Vec<f64>,
    duals: Vec<f64>,
    status: SolverStatus,
}

fn solve_subproblem(program: &Program, l: &Layout, active: &[usize]) -> Result<Sub> {
    let n = program.lower.len();
    let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut cones = Vec::new();
    let mut m = 0;
    for (row, rhs) in &l.zero_rows {
        for &(j, c) in row {
            ri.push(m);
            ci.push(j);
            vals.push(c);
        }
        b.push(*rhs);
        m += 1;
    }
    if !l.zero_rows.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(l.zero_rows.len()));
    }
    for (i, lo) in program.lower.iter().enumerate() {
        ri.push(m);
        ci.push(i);
        vals.push(-1.0);
        b.push(-lo);
        m += 1;
    }
    let first_active = m;
    for &k in active {
        let row = &program.rows[k];
        for &(j, c) in &row.coeffs {
            ri.push(m);
            ci.push(j);
            vals.push(-c);
        }
        b.push(-row.rhs);
        m += 1;
    }
    cones.push(SupportedConeT::NonnegativeConeT(n + active.len()));
    for triple in &l.cone_triples {
        for &(var, coef, constant) in triple {
            if let Some(j) = var {
                ri.push(m);
                ci.push(j);
                vals.push(-coef);
            }
            b.push(constant);
            m += 1;
        }
        cones.push(SupportedConeT::PowerConeT(l.alpha));
    }
    let a = CscMatrix::new_from_triplets(m, l.n_var, ri, ci, vals);
    let pmat = CscMatrix::<f64>::zeros((l.n_var, l.n_var));
    let settings = DefaultSettings {
        max_iter: IPM_MAX_ITER,
        verbose: false,
        tol_gap_abs: IPM_TOL,
        tol_gap_rel: IPM_TOL,
        tol_feas: IPM_TOL,
        tol_ktratio: 1e-8,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&pmat, &l.q, &a, &b, &cones, settings)
        .map_err(|e| Error::invalid(format!("conic program rejected: {e}")))?;
    solver.solve();
    let sol = &solver.solution;
    let x = sol.x[..n].iter().zip(&program.lower).map(|(v, lo)| v.max(*lo)).collect();
    let duals = active.iter().enumerate().map(|(k, _)| sol.z[first_active + k].max(0.0)).collect();
    Ok(Sub { x, duals, status: sol.status })
}

fn gradient_residuals(program: &Program, x: &[f64], nu: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = x.len();
    let mut aty = vec![0.0; n];
    for (row, &v) in program.rows.iter().zip(nu) {
        if v > 0.0 {
            for &(i, c) in &row.coeffs {
                aty[i] += v * c;
            }
        }
    }
    let mut grad = vec![0.0; n];
    let mut free = vec![false; n];
    let mut block_excess = 0.0_f64;
    match &program.objective {
        Objective::PowerSum { p, weights } => {
            for i in 0..n {
                grad[i] = if *p == 1.0 { weights[i] } else { p * weights[i] * x[i].powf(p - 1.0) };
            }
        }
        Objective::NormSum { p, blocks } => {
            for (off, mu) in blocks {
                let xs = &x[*off..*off + mu.len()];
                let norm = block_norm(*p, mu, xs);
                if *p == 1.0 {
                    grad[*off..*off + mu.len()].copy_from_slice(mu);
                } else if norm > 0.0 {
                    for (j, m) in mu.iter().enumerate() {
                        grad[off + j] = m * (xs[j] / norm).powf(p - 1.0);
                    }
                } else {
                    // At zero the subdifferential is the dual-norm unit ball.
                    let q = p / (p - 1.0);
                    let dual: f64 = mu
                        .iter()
                        .enumerate()
                        .map(|(j, m)| m.powf(1.0 - q) * aty[off + j].max(0.0).powf(q))
                        .sum::<f64>()
                        .powf(1.0 / q);
                    block_excess = block_excess.max(dual - 1.0);
                    for j in 0..mu.len() {
                        free[off + j] = true;
                    }
                }
            }
        }
    }
    let scale = grad.iter().chain(&aty).fold(1.0_f64, |m, v| m.max(v.abs()));
    let reduced: Vec<f64> = (0..n).map(|i| if free[i] { 0.0 } else { grad[i] - aty[i] }).collect();
    let stationarity = reduced.iter().fold(block_excess.max(0.0), |m, r| m.max(-r / scale));
    (stationarity, scale, reduced)
}

fn certify(program: &Program, x: &[f64], duals: Vec<f64>, active: &[usize], rounds: usize, status: &str) -> (Certificate, f64) {
    let n = x.len();
    let slacks: Vec<f64> = program.rows.iter().map(|r| r.dot(x) - r.rhs).collect();
    let primal = program.rows.iter().fold(0.0_f64, |m, r| m.max(violation(r, x)));
    let (stationarity, scale, reduced) = gradient_residuals(program, x, &duals);
    let xscale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut compl = 0.0_f64;
    for i in 0..n {
        compl = compl.max(reduced[i].abs() * (x[i] - program.lower[i]) / (scale * xscale));
    }
    for (k, row) in program.rows.iter().enumerate() {
        compl = compl.max(duals[k] * slacks[k].abs() / (scale * row.rhs.abs().max(1.0)));
    }
    let nonunique = program.objective.p() == 1.0 && {
        let delta = 1e-7 * xscale;
        let basic = (0..n).filter(|&i| x[i] - program.lower[i] > delta).count();
        let binding = duals.iter().filter(|&&v| v > 1e-7 * scale).count();
        let degenerate = (0..n).any(|i| x[i] - program.lower[i] <= delta && reduced[i].abs() <= 1e-7 * scale);
        basic > binding || (degenerate && rounds > 0)
    };
    let certificate = Certificate {
        labels: program.rows.iter().map(|r| r.label.clone()).collect(),
        slacks,
        duals,
        primal_residual: primal,
        stationarity_residual: stationarity,
        complementarity_residual: compl,
        active: active.to_vec(),
        rounds,
        status: status.to_string(),
        nonunique,
    };
    (certificate, primal.max(stationarity).max(compl))
}

/// Gradient and Hessian of the objective on the coordinates in `free`.
fn derivatives(objective: &Objective, x: &[f64], free: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
    let m = free.len();
    let mut g = DVector::zeros(m);
    let mut h = DMatrix::zeros(m, m);
    match objective {
        Objective::PowerSum { p, weights } => {
            for (a, &i) in free.iter().enumerate() {
                g[a] = p * weights[i] * x[i].powf(p - 1.0);
                h[(a, a)] = p * (p - 1.0) * weights[i] * x[i].powf(p - 2.0);
            }
        }
        Objective::NormSum { p, blocks } => {
            for (off, mu) in blocks {
                let range = *off..*off + mu.len();
                let norm = block_norm(*p, mu, &x[range.clone()]);
                if norm == 0.0 {
                    continue;
                }
                let local: Vec<(usize, usize)> = free.iter().enumerate().filter(|(_, i)| range.contains(i)).map(|(a, &i)| (a, i)).collect();
                let d1 = |i: usize| mu[i - off] * x[i].powf(p - 1.0);
                for &(a, i) in &local {
                    g[a] = d1(i) * norm.powf(1.0 - p);
                    h[(a, a)] += (p - 1.0) * mu[i - off] * x[i].powf(p - 2.0) * norm.powf(1.0 - p);
                    for &(b, j) in &local {
                        h[(a, b)] += (1.0 - p) * d1(i) * d1(j) * norm.powf(1.0 - 2.0 * p);
                    }
                }
            }
        }
    }
    (g, h)
}

/// Newton iterations on the KKT system of a guessed active set, starting
/// from the interior-point answer. The guess is corrected when a multiplier
/// turns negative, a reduced cost turns negative, or a row is violated.
fn polish(program: &Program, x0: &[f64], nu0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    if program.objective.p() == 1.0 {
        return None;
    }
    let n = x0.len();
    let lower = &program.lower;
    let xscale = x0.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut x = x0.to_vec();
    let mut nu = nu0.to_vec();
    let mut pinned: Vec<bool> = (0..n).map(|i| x[i] - lower[i] <= 1e-4 * xscale).collect();
    let mut binding: Vec<bool> = program
        .rows
        .iter()
        .zip(nu0)
        .map(|(r, &v)| v > 0.0 && violation(r, &x).abs() <= 1e-6 || violation(r, &x) >= -1e-9)
        .collect();
    for _ in 0..20 {
        for i in 0..n {
            if pinned[i] {
                x[i] = lower[i];
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| !pinned[i]).collect();
        let rows: Vec<usize> = (0..program.rows.len()).filter(|&k| binding[k]).collect();
        for (k, v) in nu.iter_mut().enumerate() {
            if !binding[k] {
                *v = 0.0;
            }
        }
        let (mf, mb) = (free.len(), rows.len());
        if mf + mb > 2000 {
            return None;
        }
        let mut pos = vec![usize::MAX; n];
        for (a, &i) in free.iter().enumerate() {
            pos[i] = a;
        }
        for _ in 0..50 {
            let (g, h) = derivatives(&program.objective, &x, &free);
            let mut kkt = DMatrix::zeros(mf + mb, mf + mb);
            let mut rhs = DVector::zeros(mf + mb);
            kkt.view_mut((0, 0), (mf, mf)).copy_from(&h);
            for a in 0..mf {
                rhs[a] = -g[a];
            }
            for (b, &k) in rows.iter().enumerate() {
                let row = &program.rows[k];
                for &(i, c) in &row.coeffs {
                    if pos[i] != usize::MAX {
                        kkt[(pos[i], mf + b)] = -c;
                        kkt[(mf + b, pos[i])] = c;
                        rhs[pos[i]] += nu[k] * c;
                    }
                }
                rhs[mf + b] = row.rhs - row.dot(&x);
            }
            let step = kkt.svd(true, true).solve(&rhs, 1e-14).ok()?;
            let mut alpha = 1.0;
            while (0..mf).any(|a| x[free[a]] + alpha * step[a] < lower[free[a]]) && alpha > 1e-12 {
                alpha *= 0.5;
            }
            for a in 0..mf {
                x[free[a]] = (x[free[a]] + alpha * step[a]).max(lower[free[a]]);
            }
            for (b, &k) in rows.iter().enumerate() {
                nu[k] += alpha * step[mf + b];
            }
            let size = (0..mf).fold(0.0_f64, |m, a| m.max((alpha * step[a]).abs()));
            if size <= 1e-15 * xscale {
                break;
            }
        }
        let (_, scale, reduced) = gradient_residuals(program, &x, &nu.iter().map(|v| v.max(0.0)).collect::<Vec<_>>());
        let mut changed = false;
        if let Some(k) = (0..nu.len()).filter(|&k| binding[k] && nu[k] < -1e-12 * scale).min_by(|&a, &b| nu[a].total_cmp(&nu[b])) {
            binding[k] = false;
            changed = true;
        }
        if let Some(k) = (0..program.rows.len())
            .filter(|&k| !binding[k] && violation(&program.rows[k], &x) > 1e-13)
            .max_by(|&a, &b| violation(&program.rows[a], &x).total_cmp(&violation(&program.rows[b], &x)))
        {
            binding[k] = true;
            changed = true;
        }
        for i in 0..n {
            if !pinned[i] && x[i] <= lower[i] {
                pinned[i] = true;
                changed = true;
            } else if pinned[i] && reduced[i] < -1e-10 * scale {
                pinned[i] = false;
                x[i] = lower[i] + 1e-6 * xscale;
                changed = true;
            }
        }
        if !changed {
            return Some((x, nu.iter().map(|v| v.max(0.0)).collect()));
        }
    }
    None
}

/// Newton ascent on the dual of a power-sum program. The primal point is the
/// Lagrangian minimizer `x_i = max(lower_i, ((Aᵀν)_i/(p w_i))^{1/(p−1)})`, so
/// stationarity holds by construction; this keeps coordinates that are tiny
/// but positive at small `p`. Rows enter when violated and leave when their
/// multiplier reaches zero.
fn dual_polish(program: &Program, nu0: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let Objective::PowerSum { p, weights } = &program.objective else {
        return None;
    };
    let p = *p;
    if p == 1.0 {
        return None;
    }
    let (n, rows) = (program.lower.len(), &program.rows);
    let expo = 1.0 / (p - 1.0);
    let aty = |nu: &[f64]| {
        let mut a = vec![0.0; n];
        for (row, &v) in rows.iter().zip(nu) {
            if v > 0.0 {
                row.coeffs.iter().for_each(|&(i, c)| a[i] += v * c);
            }
        }
        a
    };
    let primal = |a: &[f64]| -> Vec<f64> {
        (0..n).map(|i| program.lower[i].max((a[i].max(0.0) / (p * weights[i])).powf(expo))).collect()
    };
    let dual_value = |nu: &[f64]| {
        let a = aty(nu);
        let x = primal(&a);
        let lagr: f64 = (0..n).map(|i| weights[i] * x[i].powf(p) - a[i] * x[i]).sum();
        lagr + rows.iter().zip(nu).map(|(r, v)| v * r.rhs).sum::<f64>()
    };
    let top = nu0.iter().fold(0.0_f64, |m, v| m.max(*v));
    if !(top > 0.0) {
        return None;
    }
    let mut nu: Vec<f64> = nu0.iter().map(|&v| if v > 1e-9 * top { v } else { 0.0 }).collect();
    let mut binding: Vec<bool> = nu.iter().map(|&v| v > 0.0).collect();
    for _ in 0..50 {
        let set: Vec<usize> = (0..rows.len()).filter(|&k| binding[k]).collect();
        if set.len() > 2000 {
            return None;
        }
        for _ in 0..100 {
            let a = aty(&nu);
            let x = primal(&a);
            let grad: Vec<f64> = set.iter().map(|&k| rows[k].rhs - rows[k].dot(&x)).collect();
            // dx_i/da_i on coordinates above their bound
            let d: Vec<f64> = (0..n).map(|i| if x[i] > program.lower[i] && a[i] > 0.0 { expo * x[i] / a[i] } else { 0.0 }).collect();
            let m = set.len();
            let mut h = DMatrix::zeros(m, m);
            for (s, &k) in set.iter().enumerate() {
                for (t, &l) in set.iter().enumerate().skip(s) {
                    let mut v = 0.0;
                    for &(i, c) in &rows[k].coeffs {
                        if d[i] > 0.0 {
                            if let Some(&(_, c2)) = rows[l].coeffs.iter().find(|e| e.0 == i) {
                                v += c * c2 * d[i];
                            }
                        }
                    }
                    h[(s, t)] = v;
                    h[(t, s)] = v;
                }
            }
            let g = DVector::from_vec(grad.clone());
            let step = h.svd(true, true).solve(&g, 1e-14).ok()?;
            let before = dual_value(&nu);
            let mut alpha = 1.0;
            let mut improved = false;
            while alpha > 1e-12 {
                let mut trial = nu.clone();
                for (s, &k) in set.iter().enumerate() {
                    trial[k] = (nu[k] + alpha * step[s]).max(0.0);
                }
                if dual_value(&trial) >= before {
                    improved = trial != nu;
                    nu = trial;
                    break;
                }
                alpha *= 0.5;
            }
            let scale = set.iter().fold(1.0_f64, |m, &k| m.max(rows[k].rhs.abs()));
            let stuck = set.iter().zip(&grad).all(|(&k, g)| g.abs() <= 1e-15 * scale || (nu[k] == 0.0 && *g <= 0.0));
            if !improved || stuck {
                break;
            }
        }
        let x = primal(&aty(&nu));
        let mut changed = false;
        for k in 0..rows.len() {
            if binding[k] && nu[k] == 0.0 {
                binding[k] = false;
                changed = true;
            }
        }
        if let Some(k) = (0..rows.len())
            .filter(|&k| !binding[k] && violation(&rows[k], &x) > 1e-13)
            .max_by(|&a, &b| violation(&rows[a], &x).total_cmp(&violation(&rows[b], &x)))
        {
            binding[k] = true;
            changed = true;
        }
        if !changed {
            return Some((x, nu));
        }
    }
    None
}

/// Run constraint generation and certify the result. A weighted power sum
/// is first rescaled to unit weights (`x_i = w_i^{-1/p} y_i`); the
/// certificate residuals are measured in those coordinates.
pub(crate) fn solve(program: &Program) -> Result<Outcome> {
    let Objective::PowerSum { p, weights } = &program.objective else {
        return solve_unscaled(program);
    };
    if weights.iter().all(|w| *w == weights[0]) {
        return solve_unscaled(program);
    }
    let s: Vec<f64> = weights.iter().map(|w| w.powf(-1.0 / p)).collect();
    let scaled = Program {
        lower: program.lower.iter().zip(&s).map(|(l, s)| l / s).collect(),
        objective: Objective::PowerSum { p: *p, weights: vec![1.0; weights.len()] },
        rows: program
            .rows
            .iter()
            .map(|r| Row { coeffs: r.coeffs.iter().map(|&(i, c)| (i, c * s[i])).collect(), rhs: r.rhs, label: r.label.clone() })
            .collect(),
    };
    let mut out = solve_unscaled(&scaled)?;
    out.x = out.x.iter().zip(&s).map(|(y, s)| y * s).collect();
    Ok(out)
}

fn solve_unscaled(program: &Program) -> Result<Outcome> {
    let mut x = program.lower.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut nu_active: Vec<f64> = Vec::new();
    let mut rounds = 0;
    let mut status = "trivial".to_string();
    let mut stall: Option<String> = None;
    let layout = layout(program);
    loop {
        let mut worst: Vec<(f64, usize)> = program
            .rows
            .iter()
            .enumerate()
            .map(|(k, r)| (violation(r, &x), k))
            .filter(|(v, _)| *v > FEAS_TOL)
            .collect();
        if worst.is_empty() {
            break;
        }
        worst.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let fresh: Vec<usize> = worst.iter().map(|w| w.1).filter(|k| !active.contains(k)).take(BATCH).collect();
        if fresh.is_empty() {
            // only inner-solver round-off remains; the polish and certificate decide
            break;
        }
        if rounds == MAX_ROUNDS {
            stall = Some(format!("constraint generation exceeded {MAX_ROUNDS} rounds"));
            break;
        }
        active.extend(fresh);
        let sub = solve_subproblem(program, &layout, &active)?;
        rounds += 1;
        status = format!("{:?}", sub.status);
        if !matches!(sub.status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
            stall = Some(format!("inner solver returned {status}"));
            x = sub.x;
            nu_active = sub.duals;
            break;
        }
        x = sub.x;
        nu_active = sub.duals;
    }

    let mut duals = vec![0.0; program.rows.len()];
    for (k, v) in active.iter().zip(&nu_active) {
        duals[*k] = *v;
    }
    let (mut certificate, mut tolerance) = certify(program, &x, duals.clone(), &active, rounds, &status);
    if rounds > 0 {
        if let Some((px, pduals)) = polish(program, &x, &duals) {
            let (pc, pt) = certify(program, &px, pduals, &active, rounds, &status);
            if pt < tolerance {
                (x, certificate, tolerance) = (px, pc, pt);
            }
        }
        if tolerance > FEAS_TOL {
            if let Some((dx, dduals)) = dual_polish(program, &duals) {
                let (dc, dt) = certify(program, &dx, dduals, &active, rounds, &status);
                if dt < tolerance {
                    (x, certificate, tolerance) = (dx, dc, dt);
                }
            }
        }
    }
    if stall.is_none() && tolerance > STALL_TOL {
        stall = Some(format!("KKT residual {tolerance:.3e} above {STALL_TOL:.0e}"));
    }
    Ok(Outcome { x, certificate, tolerance, stall })
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub certificate: Certificate,
    pub tolerance: f64,
    pub stall: Option<String>,
}

impl Outcome {
    /// Package the minimizer, turning a stall into an error that still carries it.
    pub(crate) fn finish(self, optimum: f64, minimizer: Vec<f64>, auxiliary: Option<Vec<f64>>) -> Result<SolveResult> {
        let result = SolveResult { optimum, minimizer, auxiliary, certificate: self.certificate, tolerance: self.tolerance };
        match self.stall {
            None => Ok(result),
            Some(detail) => Err(Error::SolverStall { detail, result: Box::new(result) }),
        }
    }
}
