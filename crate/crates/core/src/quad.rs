//! Quadrature and refinement helpers shared by the norm, maximal and
//! index computations.
//!
//! Integrals and suprema that reach down to `t = 0` are evaluated over
//! dyadic octaves `(top·2^{-k-1}, top·2^{-k}]`. The depth (number of
//! octaves) doubles between refinement levels; a quantity is classified
//! divergent when its increment at least doubles on two consecutive
//! refinements, and convergent once the increment falls below a relative
//! tolerance. Every evaluation keeps its trace.

use crate::ext::Ext;
use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;
use std::sync::LazyLock;

static RULE: LazyLock<GaussLegendre> =
    LazyLock::new(|| GaussLegendre::new(NonZeroUsize::new(12).unwrap()));

/// Octave counts visited by the refinement schedule.
pub const DEPTHS: [usize; 7] = [16, 32, 64, 128, 256, 512, 1000];

/// Increment ratio treated as "doubling" (slack for discretization).
const DOUBLING: f64 = 1.8;
const REL_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineStep {
    pub depth: usize,
    pub partial: f64,
}

/// Outcome of a refinement-classified evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub value: Ext,
    pub converged: bool,
    pub trace: Vec<RefineStep>,
}

impl Refined {
    pub fn exact(x: f64) -> Refined {
        Refined {
            value: Ext::from_f64(x),
            converged: true,
            trace: Vec::new(),
        }
    }

    pub fn infinite() -> Refined {
        Refined {
            value: Ext::Infinite,
            converged: true,
            trace: Vec::new(),
        }
    }
}

/// Fixed-order Gauss–Legendre on `[a, b]`.
pub fn gauss(a: f64, b: f64, f: impl FnMut(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    RULE.integrate(a, b, f)
}

/// `∫_a^b f` for `0 < a < b < ∞`, split geometrically into octaves and at
/// the supplied break points (kinks of piecewise forms).
pub fn integrate(a: f64, b: f64, mut f: impl FnMut(f64) -> f64, breaks: &[f64]) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut cuts = vec![a, b];
    if a > 0.0 {
        let mut t = a * 2.0;
        while t < b {
            cuts.push(t);
            t *= 2.0;
        }
    }
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).map(|w| gauss(w[0], w[1], &mut f)).sum()
}

fn octave(top: f64, k: usize) -> (f64, f64) {
    let hi = top * 0.5f64.powi(k as i32);
    (hi * 0.5, hi)
}

/// Decides the refinement status of a sequence of partial values.
/// `Some(true)`: divergent, `Some(false)`: converged, `None`: undecided.
fn classify(partials: &[f64]) -> Option<bool> {
    let n = partials.len();
    let last = partials[n - 1];
    if !last.is_finite() {
        return Some(true);
    }
    if n < 2 {
        return None;
    }
    let inc = |i: usize| partials[i] - partials[i - 1];
    let d = inc(n - 1);
    if d <= REL_TOL * last.abs() || last == 0.0 {
        return Some(false);
    }
    if n >= 3 {
        let d1 = inc(n - 2);
        let d0 = if n >= 4 { inc(n - 3) } else { partials[0] };
        let floor = 1e-12 * last.abs();
        if d0 > floor && d1 >= DOUBLING * d0 && d >= DOUBLING * d1 {
            return Some(true);
        }
    }
    None
}

fn run_schedule(level: impl FnMut(usize, usize) -> f64, combine_sum: bool) -> Refined {
    if combine_sum {
        run_schedule_with(level, |acc, x| acc + x)
    } else {
        run_schedule_with(level, f64::max)
    }
}

fn run_schedule_with(mut level: impl FnMut(usize, usize) -> f64, combine: impl Fn(f64, f64) -> f64) -> Refined {
    let mut trace = Vec::new();
    let mut partials = Vec::new();
    let mut acc = 0.0f64;
    let mut done = 0usize;
    for &depth in DEPTHS.iter() {
        let piece = level(done, depth);
        acc = combine(acc, piece);
        done = depth;
        partials.push(acc);
        trace.push(RefineStep { depth, partial: acc });
        match classify(&partials) {
            Some(true) => {
                return Refined {
                    value: Ext::Infinite,
                    converged: true,
                    trace,
                }
            }
            Some(false) => {
                return Refined {
                    value: Ext::from_f64(acc),
                    converged: true,
                    trace,
                }
            }
            None => {}
        }
    }
    Refined {
        value: Ext::from_f64(acc),
        converged: false,
        trace,
    }
}

/// Classifies a cumulative quantity computed afresh at each depth of the
/// schedule (for example a norm of a sampled profile).
pub fn refine_by_depth(mut partial_at: impl FnMut(usize) -> f64) -> Refined {
    run_schedule_with(|_, depth| partial_at(depth), |_, x| x)
}

/// `∫_0^top f` for a nonnegative integrand that may blow up at 0.
pub fn integrate_from_zero(top: f64, mut f: impl FnMut(f64) -> f64, breaks: &[f64]) -> Refined {
    if top <= 0.0 {
        return Refined::exact(0.0);
    }
    run_schedule(
        |from, to| {
            let mut s = 0.0;
            for k in from..to {
                let (lo, hi) = octave(top, k);
                s += integrate(lo, hi, &mut f, breaks);
            }
            s
        },
        true,
    )
}

/// `sup_{0<t≤top} f(t)` sampled on `per_octave` geometric points per
/// octave, refined in depth with the doubling rule.
pub fn sup_toward_zero(top: f64, per_octave: usize, mut f: impl FnMut(f64) -> f64) -> Refined {
    let per = per_octave.max(1);
    run_schedule(
        |from, to| {
            let mut m = 0.0f64;
            for k in from..to {
                let (_, hi) = octave(top, k);
                for j in 0..per {
                    let t = hi * 2f64.powf(-(j as f64) / per as f64);
                    let v = f(t);
                    if v.is_nan() {
                        continue;
                    }
                    m = m.max(v);
                }
            }
            m
        },
        false,
    )
}

/// Golden-section search for a maximum of `f` on `[a, b]`; the returned
/// value also accounts for both endpoints.
pub fn golden_max(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (a, b);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f(a).max(f(b)).max(f1).max(f2)
}

/// Maximum of `f` on `[a, b]` for functions that are quasi-convex between
/// consecutive `nodes` (exact) or merely continuous (scan plus golden
/// refinement around the best sample).
pub fn sup_on_interval(a: f64, b: f64, nodes: &[f64], exact: bool, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut pts = vec![a, b];
    pts.extend(nodes.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut best = f64::NEG_INFINITY;
    for &t in &pts {
        best = best.max(f(t));
    }
    if exact {
        return best;
    }
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        const SCAN: usize = 24;
        let geometric = lo > 0.0 && hi / lo > 4.0;
        let at = |i: usize| {
            let s = i as f64 / SCAN as f64;
            if geometric {
                lo * (hi / lo).powf(s)
            } else {
                lo + (hi - lo) * s
            }
        };
        let mut arg = 0;
        let mut val = f64::NEG_INFINITY;
        for i in 0..=SCAN {
            let v = f(at(i));
            if v > val {
                val = v;
                arg = i;
            }
        }
        let l = at(arg.saturating_sub(1));
        let r = at((arg + 1).min(SCAN));
        best = best.max(val).max(golden_max(l, r, &mut f));
    }
    best
}
