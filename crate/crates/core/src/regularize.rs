//! Truncation, gradient glueing, McShane extension, the fractional sharp
//! maximal function and constructive Lipschitz truncation on a finite
//! metric measure space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::metric::{is_upper_gradient, minimal_upper_gradient, CurveFamily, Mms, UpperGradientVerdict};
use crate::rearrange::WeightedSamples;
use crate::spaces::{norm_samples, NormSpec};

/// Relative slack for pairwise Lipschitz and Hajłasz checks.
pub const PAIR_TOL: f64 = 1e-12;

/// Doublings tried by each level scan before giving up.
pub const SCAN_BUDGET: u32 = 64;

/// Norm of a point function under `spec`, with the point weights as measure.
pub fn point_norm(space: &Mms, f: &[f64], spec: &NormSpec) -> Result<Ext> {
    space.check_fn(f, "function")?;
    if f.iter().all(|v| *v == 0.0) {
        spec.validate()?;
        return Ok(Ext::ZERO);
    }
    norm_samples(&WeightedSamples::new(f.to_vec(), space.weights().to_vec())?, spec)
}

fn check_finite(space: &Mms, f: &[f64], what: &str) -> Result<()> {
    space.check_fn(f, what)?;
    if f.iter().any(|v| v.is_infinite()) {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    Ok(())
}

fn clamp_all(u: &[f64], s: f64) -> Vec<f64> {
    u.iter().map(|v| v.clamp(-s, s)).collect()
}

fn masked(f: &[f64], keep: impl Fn(usize) -> bool) -> Vec<f64> {
    f.iter().enumerate().map(|(i, v)| if keep(i) { *v } else { 0.0 }).collect()
}

/// `u_σ = max(−σ, min(u, σ))` and its distance to `u`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationResult {
    pub u_sigma: Vec<f64>,
    pub sigma: f64,
    /// Points with `|u| > σ`.
    pub superlevel: Vec<usize>,
    pub norm_gap: Ext,
}

pub fn truncate(space: &Mms, u: &[f64], sigma: f64, spec: &NormSpec) -> Result<TruncationResult> {
    space.check_fn(u, "function")?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("truncation level must be positive and finite, got {sigma}")));
    }
    let u_sigma = clamp_all(u, sigma);
    let superlevel: Vec<usize> = (0..u.len()).filter(|&i| u[i].abs() > sigma).collect();
    let diff: Vec<f64> = u.iter().zip(&u_sigma).map(|(a, b)| if a == b { 0.0 } else { a - b }).collect();
    let norm_gap = point_norm(space, &diff, spec)?;
    Ok(TruncationResult { u_sigma, sigma, superlevel, norm_gap })
}

/// `g·χ_{u≠k}` with its upper-gradient verdict on the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueResult {
    pub gradient: Vec<f64>,
    pub verdict: UpperGradientVerdict,
    pub closed_under_subcurves: bool,
    pub warning: Option<String>,
}

pub fn glue_gradient(space: &Mms, u: &[f64], g: &[f64], k: f64, family: &CurveFamily) -> Result<GlueResult> {
    let before = is_upper_gradient(space, u, g, family)?;
    if !before.holds {
        return Err(Error::invalid(format!(
            "input is not an upper gradient: curve {:?} exceeds by {}",
            before.worst_curve, before.excess
        )));
    }
    let gradient = masked(g, |i| u[i] != k);
    let verdict = is_upper_gradient(space, u, &gradient, family)?;
    let closed = family.closed_under_subcurves();
    let warning = (!closed).then(|| "family is not closed under subcurves; glueing is not guaranteed".to_string());
    Ok(GlueResult { gradient, verdict, closed_under_subcurves: closed, warning })
}

fn worst_ratio(space: &Mms, pts: &[usize], vals: impl Fn(usize) -> f64) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for (a, &i) in pts.iter().enumerate() {
        for &j in &pts[a + 1..] {
            let r = (vals(i) - vals(j)).abs() / space.d(i, j);
            if worst.is_none_or(|w| r > w.2) {
                worst = Some((i, j, r));
            }
        }
    }
    worst
}

fn lipschitz_violation(space: &Mms, pts: &[usize], vals: impl Fn(usize) -> f64, l: f64) -> Option<Error> {
    worst_ratio(space, pts, vals)
        .filter(|w| w.2 > l * (1.0 + PAIR_TOL))
        .map(|(i, j, ratio)| Error::NotLipschitzOnSubset { i, j, constant: l, ratio })
}

/// Upper McShane extension `w(x) = min_{y∈S} (v(y) + L·d(x,y))` of values
/// given on `subset` (aligned with `values`).
pub fn mcshane_extend(space: &Mms, subset: &[usize], values: &[f64], l: f64) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::invalid("extension needs a nonempty subset"));
    }
    if subset.len() != values.len() {
        return Err(Error::invalid(format!("{} points but {} values", subset.len(), values.len())));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::invalid(format!("Lipschitz constant must be positive and finite, got {l}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("values must be finite"));
    }
    let mut on_set = vec![None; space.len()];
    for (&i, &v) in subset.iter().zip(values) {
        if i >= space.len() {
            return Err(Error::invalid(format!("point {i} out of range")));
        }
        if on_set[i].is_some_and(|w| w != v) {
            return Err(Error::invalid(format!("point {i} listed twice with different values")));
        }
        on_set[i] = Some(v);
    }
    let pts: Vec<usize> = (0..space.len()).filter(|&i| on_set[i].is_some()).collect();
    if let Some(e) = lipschitz_violation(space, &pts, |i| on_set[i].unwrap(), l) {
        return Err(e);
    }
    let w: Vec<f64> = (0..space.len())
        .map(|x| match on_set[x] {
            Some(v) => v,
            None => pts.iter().map(|&y| on_set[y].unwrap() + l * space.d(x, y)).fold(f64::INFINITY, f64::min),
        })
        .collect();
    let all: Vec<usize> = (0..space.len()).collect();
    if let Some(e) = lipschitz_violation(space, &all, |i| w[i], l) {
        return Err(e);
    }
    Ok(w)
}

/// `u♯(x) = sup_r (1/r) ⨍_{B(x,r)} |u − u_B|`. A ball changes only when `r`
/// crosses a distance, so the supremum over each constant stretch is its
/// left end: the value `osc/d` with `d` the largest distance inside.
pub fn sharp_maximal(space: &Mms, u: &[f64]) -> Result<Vec<f64>> {
    check_finite(space, u, "function")?;
    Ok((0..space.len())
        .map(|x| {
            space
                .balls(x)
                .iter()
                .skip(1)
                .map(|b| {
                    let r = b.members.iter().map(|&j| space.d(x, j)).fold(0.0, f64::max);
                    let m = space.mean(u, &b.members);
                    let dev: Vec<f64> = u.iter().map(|v| (v - m).abs()).collect();
                    space.mean(&dev, &b.members) / r
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Worst pair for `|u(x) − u(y)| ≤ d(x,y)(h(x) + h(y))`.
fn hajlasz_worst(space: &Mms, u: &[f64], h: &[f64]) -> Option<(usize, usize, f64)> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..space.len() {
        for j in i + 1..space.len() {
            let lhs = (u[i] - u[j]).abs();
            let rhs = space.d(i, j) * (h[i] + h[j]);
            let excess = lhs - rhs;
            if excess > PAIR_TOL * rhs.max(1.0) && worst.is_none_or(|w| excess > w.2) {
                worst = Some((i, j, excess));
            }
        }
    }
    worst
}

pub fn check_hajlasz(space: &Mms, u: &[f64], h: &[f64]) -> Result<()> {
    check_finite(space, u, "function")?;
    space.check_nonneg(h, "Hajlasz gradient")?;
    match hajlasz_worst(space, u, h) {
        Some((i, j, excess)) => Err(Error::HajlaszViolated { i, j, excess }),
        None => Ok(()),
    }
}

/// Smallest `c` with `c·h` a Hajłasz gradient of `u`.
pub fn hajlasz_constant(space: &Mms, u: &[f64], h: &[f64]) -> Result<Ext> {
    check_finite(space, u, "function")?;
    space.check_nonneg(h, "Hajlasz gradient")?;
    let mut c = 0.0_f64;
    for i in 0..space.len() {
        for j in i + 1..space.len() {
            let lhs = (u[i] - u[j]).abs();
            if lhs == 0.0 {
                continue;
            }
            let rhs = space.d(i, j) * (h[i] + h[j]);
            if rhs == 0.0 {
                return Ok(Ext::Infinite);
            }
            c = c.max(lhs / rhs);
        }
    }
    Ok(Ext::Finite(c))
}

/// `h(x) = max_y |u(x) − u(y)|/d(x,y)`, always a Hajłasz gradient.
pub fn pointwise_lipschitz(space: &Mms, u: &[f64]) -> Result<Vec<f64>> {
    check_finite(space, u, "function")?;
    Ok((0..space.len())
        .map(|i| (0..space.len()).filter(|&j| j != i).map(|j| (u[i] - u[j]).abs() / space.d(i, j)).fold(0.0, f64::max))
        .collect())
}

/// One trial level of a scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub stage: String,
    pub sigma: f64,
    pub first: Ext,
    pub second: Ext,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipTruncResult {
    pub u_eps: Vec<f64>,
    /// `2σ`.
    pub lipschitz_constant: f64,
    pub sigma: f64,
    pub sigma0: f64,
    /// Points where `u_eps` may differ from `u`: `{h > σ} ∪ {|u| > σ₀}`.
    pub e_eps: Vec<usize>,
    pub e_measure: f64,
    pub eta: f64,
    pub c_delta: f64,
    pub function_gap: Ext,
    /// Norm of the upper gradient `g·χ_{|u|>σ₀} + (g + 2σ)·χ_{h>σ}`, `g = 2h`.
    pub gradient_gap: Ext,
    /// `function_gap + gradient_gap`.
    pub norm_gap: Ext,
    /// `‖u − u_eps‖_p + ‖minimal upper gradient of u − u_eps‖_p` when requested.
    #[serde(default, with = "opt_scalar")]
    pub recomputed_gap: Option<f64>,
    pub trace: Vec<ScanRow>,
}

mod opt_scalar {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(crate::ext::Ext::from_f64).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<crate::ext::Ext>::deserialize(d)?.map(|e| e.value()))
    }
}

impl LipTruncResult {
    /// Exhaustive pairwise check of `|u_eps| ≤ σ`, `u_eps = u` off `E` and
    /// the `2σ`-Lipschitz bound.
    pub fn check_invariants(&self, space: &Mms, u: &[f64]) -> Result<()> {
        if let Some(i) = self.u_eps.iter().position(|v| v.abs() > self.sigma) {
            return Err(Error::invalid(format!("|u_eps| exceeds sigma at point {i}")));
        }
        let mut in_e = vec![false; u.len()];
        self.e_eps.iter().for_each(|&i| in_e[i] = true);
        if let Some(i) = (0..u.len()).find(|&i| !in_e[i] && self.u_eps[i] != u[i]) {
            return Err(Error::invalid(format!("u_eps differs from u outside the exceptional set at point {i}")));
        }
        let all: Vec<usize> = (0..u.len()).collect();
        match lipschitz_violation(space, &all, |i| self.u_eps[i], self.lipschitz_constant) {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

fn below(x: Ext, eta: f64) -> bool {
    x.finite().is_some_and(|v| v < eta)
}

/// Smallest power of two strictly above `floor` and at least `at_least`.
fn dyadic_start(floor: f64, at_least: f64) -> f64 {
    let mut s = 2f64.powi(floor.max(at_least).log2().floor() as i32);
    while s <= floor || s < at_least {
        s *= 2.0;
    }
    while s / 2.0 > floor && s / 2.0 >= at_least {
        s /= 2.0;
    }
    s
}

/// Lipschitz approximation of `u` given a Hajłasz gradient `h`.
///
/// Levels are scanned on powers of two, so runs with different `eps` share
/// one grid. `quasi_c_delta` is the triangle constant used for quasi-normed
/// families; normed families use 1. With `family` set and an `Lp` spec the
/// gap is recomputed with the minimal upper gradient of `u − u_eps`.
pub fn lipschitz_truncation(
    space: &Mms,
    u: &[f64],
    h: &[f64],
    spec: &NormSpec,
    family: Option<&CurveFamily>,
    eps: f64,
    quasi_c_delta: f64,
) -> Result<LipTruncResult> {
    spec.validate()?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive and finite, got {eps}")));
    }
    if !(quasi_c_delta.is_finite() && quasi_c_delta >= 1.0) {
        return Err(Error::invalid(format!("c_delta must be at least 1, got {quasi_c_delta}")));
    }
    check_finite(space, h, "Hajlasz gradient")?;
    check_hajlasz(space, u, h)?;
    let n = space.len();
    let c_delta = spec.triangle_constant(quasi_c_delta);
    let eta = eps / (6.0 * c_delta * c_delta);
    let g: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
    let mut trace = Vec::new();

    let min_pos = u.iter().map(|v| v.abs()).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let start = dyadic_start(1.0 / eps, if min_pos.is_finite() { min_pos } else { 0.0 });
    let mut sigma0 = None;
    for j in 0..=SCAN_BUDGET {
        let s = start * 2f64.powi(j as i32);
        let v = clamp_all(u, s);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| if a == b { 0.0 } else { a - b }).collect();
        let first = point_norm(space, &diff, spec)?;
        let second = point_norm(space, &masked(&g, |i| u[i].abs() > s), spec)?;
        let pass = match (first, second) {
            (Ext::Finite(a), Ext::Finite(b)) => a + b < eta,
            _ => false,
        };
        trace.push(ScanRow { stage: "sigma0".into(), sigma: s, first, second, pass });
        if pass {
            sigma0 = Some(s);
            break;
        }
    }
    let sigma0 = sigma0.ok_or_else(|| Error::BudgetExhausted {
        stage: "sigma0".into(),
        doublings: SCAN_BUDGET,
        last_sigma: trace.last().map_or(start, |r| r.sigma),
    })?;

    let mut sigma = None;
    for j in 0..=SCAN_BUDGET {
        let s = sigma0 * 2f64.powi(j as i32);
        let first = point_norm(space, &masked(&vec![s; n], |i| h[i] > s), spec)?;
        let second = point_norm(space, &masked(&g, |i| h[i] > s), spec)?;
        let pass = below(first, eta) && below(second, eta);
        trace.push(ScanRow { stage: "sigma".into(), sigma: s, first, second, pass });
        if pass {
            sigma = Some(s);
            break;
        }
    }
    let sigma = sigma.ok_or_else(|| Error::BudgetExhausted {
        stage: "sigma".into(),
        doublings: SCAN_BUDGET,
        last_sigma: trace.last().map_or(sigma0, |r| r.sigma),
    })?;

    let v = clamp_all(u, sigma0);
    let keep: Vec<usize> = (0..n).filter(|&i| h[i] <= sigma).collect();
    let lip = 2.0 * sigma;
    let u_eps = if keep.is_empty() {
        vec![0.0; n]
    } else {
        let vals: Vec<f64> = keep.iter().map(|&i| v[i]).collect();
        clamp_all(&mcshane_extend(space, &keep, &vals, lip)?, sigma)
    };
    let e_eps: Vec<usize> = (0..n).filter(|&i| h[i] > sigma || u[i].abs() > sigma0).collect();
    let e_measure = space.measure(&e_eps);

    let diff: Vec<f64> = u.iter().zip(&u_eps).map(|(a, b)| if a == b { 0.0 } else { a - b }).collect();
    let function_gap = point_norm(space, &diff, spec)?;
    let grad: Vec<f64> = (0..n)
        .map(|i| {
            let mut x = 0.0;
            if u[i].abs() > sigma0 {
                x += g[i];
            }
            if h[i] > sigma {
                x += g[i] + 2.0 * sigma;
            }
            x
        })
        .collect();
    let gradient_gap = point_norm(space, &grad, spec)?;
    let norm_gap = match (function_gap, gradient_gap) {
        (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
        _ => Ext::Infinite,
    };
    let recomputed_gap = match (family, spec) {
        (Some(fam), NormSpec::Lp { p }) if !fam.is_empty() => {
            let fg = space.lp_norm(&diff, *p);
            if diff.iter().all(|d| *d == 0.0) {
                Some(0.0)
            } else {
                Some(fg + minimal_upper_gradient(space, &diff, fam, *p)?.optimum)
            }
        }
        _ => None,
    };
    let out = LipTruncResult {
        u_eps,
        lipschitz_constant: lip,
        sigma,
        sigma0,
        e_eps,
        e_measure,
        eta,
        c_delta,
        function_gap,
        gradient_gap,
        norm_gap,
        recomputed_gap,
        trace,
    };
    out.check_invariants(space, u)?;
    Ok(out)
}

/// One level of a truncation sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub sigma: f64,
    /// `‖u − u_σ‖`.
    pub gap: Ext,
    /// Norm of an upper gradient of `u − u_σ`.
    pub gradient: Ext,
    /// True when the gradient is the solver's minimal one.
    pub solver: bool,
}

/// Gaps `‖u − u_σ‖` and gradient norms over `sigmas`. For `Lp` specs with a
/// nonempty family the gradient is the minimal upper gradient of `u − u_σ`;
/// otherwise it is `g·χ_{|u|>σ}` for the supplied upper gradient `g`.
pub fn truncation_convergence_report(
    space: &Mms,
    u: &[f64],
    g: &[f64],
    family: &CurveFamily,
    spec: &NormSpec,
    sigmas: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    check_finite(space, u, "function")?;
    space.check_nonneg(g, "gradient")?;
    let solver_p = match spec {
        NormSpec::Lp { p } if !family.is_empty() => Some(*p),
        _ => None,
    };
    if solver_p.is_none() && !family.is_empty() {
        let v = is_upper_gradient(space, u, g, family)?;
        if !v.holds {
            return Err(Error::invalid(format!("gradient fails on curve {:?} by {}", v.worst_curve, v.excess)));
        }
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let t = truncate(space, u, sigma, spec)?;
            let diff: Vec<f64> = u.iter().zip(&t.u_sigma).map(|(a, b)| if a == b { 0.0 } else { a - b }).collect();
            let gradient = match solver_p {
                Some(_) if diff.iter().all(|d| *d == 0.0) => Ext::ZERO,
                Some(p) => Ext::Finite(minimal_upper_gradient(space, &diff, family, p)?.optimum),
                None => point_norm(space, &masked(g, |i| u[i].abs() > sigma), spec)?,
            };
            Ok(ConvergenceRow { sigma, gap: t.norm_gap, gradient, solver: solver_p.is_some() })
        })
        .collect()
}
