use super::norm::{norm, NormSpec};
use super::phi::{FundamentalFn, PhiForm};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::rearrange::{decreasing_rearrangement, WeightedSamples};
use serde::{Deserialize, Serialize};

const REL_TOL: f64 = 1e-12;
const SCAN_OCTAVES: i32 = 60;
const SCAN_PER_OCTAVE: i32 = 16;

/// Outcome of a quasi-concavity scan. `witness` is a pair `t₁ < t₂` at
/// which monotonicity of `f^q` or of `f^q/t` fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiVerdict {
    pub holds: bool,
    pub witness: Option<(f64, f64)>,
}

fn scan_grid(f: &FundamentalFn, lo: f64, hi: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..=SCAN_OCTAVES * SCAN_PER_OCTAVE)
        .map(|i| hi * 2f64.powf(-(i as f64) / SCAN_PER_OCTAVE as f64))
        .filter(|&t| t > lo)
        .collect();
    if lo > 0.0 {
        ts.push(lo);
    }
    ts.extend(f.nodes().into_iter().filter(|&t| t > lo && t < hi));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Checks that `f^q` increases and `f^q/t` decreases on a geometric grid
/// (16 points per octave, 60 octaves below `hi`) plus the nodes of `f`
/// inside the window `[lo, hi]`.
pub fn is_quasiconcave(f: &FundamentalFn, q: f64, window: (f64, f64)) -> Result<QuasiVerdict> {
    let (lo, hi) = window;
    if !(q > 0.0 && lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::invalid("quasi-concavity needs q > 0 and a finite window lo < hi"));
    }
    let ts = scan_grid(f, lo, hi);
    let vals: Vec<f64> = ts.iter().map(|&t| f.eval(t).powf(q)).collect();
    for i in 1..ts.len() {
        let (a, b) = (vals[i - 1], vals[i]);
        if !b.is_finite() || !a.is_finite() {
            return Err(Error::invalid("function is not finite on the window"));
        }
        let rising = b >= a * (1.0 - REL_TOL);
        let ratio_falls = b / ts[i] <= (a / ts[i - 1]) * (1.0 + REL_TOL);
        if !(rising && ratio_falls) {
            return Ok(QuasiVerdict { holds: false, witness: Some((ts[i - 1], ts[i])) });
        }
    }
    Ok(QuasiVerdict { holds: true, witness: None })
}

/// Quasi-concavity of `φ^q` on a window reaching well past its nodes.
pub(crate) fn fundamental_is_quasiconcave(phi: &FundamentalFn, q: f64) -> bool {
    let hi = phi.nodes().last().copied().unwrap_or(1.0).max(1.0) * 256.0;
    is_quasiconcave(phi, q, (0.0, hi)).map(|v| v.holds).unwrap_or(false)
}

/// Least concave majorant of the piecewise linear function through
/// `(0, 0)` and the nodes of `f` (its breakpoints and values), returned on
/// the same nodes. Verifies `f ≤ f̃ ≤ 2f` at every node.
pub fn least_concave_majorant(f: &crate::rearrange::GridFn) -> Result<crate::rearrange::GridFn> {
    let ts = &f.breakpoints()[1..];
    let vs = f.values();
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("majorant needs finite node values"));
    }
    let phi = FundamentalFn::sampled(f.clone());
    let lo = 0.0;
    let hi = f.span();
    if hi > 0.0 {
        let check = is_quasiconcave(&phi, 1.0, (lo, hi))?;
        if let Some((a, b)) = check.witness {
            return Err(Error::NotQuasiconcave(format!("f or f(t)/t fails to be monotone between t = {a} and t = {b}")));
        }
    }
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    pts.extend(ts.iter().copied().zip(vs.iter().copied()));
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let at = |t: f64| -> f64 {
        let last = hull[hull.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let j = hull.iter().position(|h| h.0 >= t).unwrap();
        let (a, b) = (hull[j - 1], hull[j]);
        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
    };
    let out: Vec<f64> = ts.iter().zip(vs).map(|(&t, &v)| at(t).max(v)).collect();
    for ((&t, &v), &m) in ts.iter().zip(vs).zip(&out) {
        if m > 2.0 * v * (1.0 + REL_TOL) {
            return Err(Error::NotQuasiconcave(format!("majorant {m} exceeds twice the value {v} at t = {t}")));
        }
    }
    crate::rearrange::GridFn::from_steps(ts, &out)
}

/// `ψ(t) = t^{1/p} sup_{t≤s≤1} φ(s)/s^{1/p}` on `(0,1]`, `ψ = φ` beyond,
/// as an exactly evaluable [`FundamentalFn`].
pub fn psi_form(phi: &FundamentalFn, p: f64) -> FundamentalFn {
    FundamentalFn::new(PhiForm::Psi { base: Box::new(phi.clone()), p })
}

/// Samples of `ψ` at the given grid points (cell ends of the result).
pub fn psi_majorant(phi: &FundamentalFn, p: f64, grid: &[f64]) -> Result<crate::rearrange::GridFn> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::unsupported("psi exponent must be >= 1"));
    }
    phi.validate()?;
    let hi = phi.nodes().last().copied().unwrap_or(1.0).max(1.0) * 4.0;
    let check = is_quasiconcave(phi, 1.0, (0.0, hi))?;
    if let Some((a, b)) = check.witness {
        return Err(Error::NotQuasiconcave(format!("phi fails between t = {a} and t = {b}")));
    }
    let mut ts: Vec<f64> = grid.iter().copied().filter(|t| *t > 0.0 && t.is_finite()).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let psi = psi_form(phi, p);
    let vals: Vec<f64> = ts.iter().map(|&t| psi.eval(t)).collect();
    crate::rearrange::GridFn::from_steps(&ts, &vals)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRatio {
    pub upper: f64,
    pub lower: f64,
    pub ratio: f64,
    /// `q^{1/q − 1/p}`.
    pub bound: f64,
}

/// `‖u‖_{Λ^p_φ} / ‖u‖_{Λ^q_φ}` for `1 ≤ q < p`.
pub fn lorentz_embedding_ratio(u: &WeightedSamples, phi: &FundamentalFn, q: f64, p: f64) -> Result<EmbeddingRatio> {
    if !(q >= 1.0 && q < p && p.is_finite()) {
        return Err(Error::unsupported(format!("need 1 <= q < p < inf, got q = {q}, p = {p}")));
    }
    let ustar = decreasing_rearrangement(u);
    let upper = norm(&ustar, &NormSpec::LambdaQPhi { phi: phi.clone(), q: p })?;
    let lower = norm(&ustar, &NormSpec::LambdaQPhi { phi: phi.clone(), q })?;
    let (upper, lower) = match (upper, lower) {
        (Ext::Finite(a), Ext::Finite(b)) => (a, b),
        _ => return Err(Error::invalid("Lorentz norm is infinite; the ratio is undefined")),
    };
    if lower == 0.0 && upper == 0.0 {
        return Err(Error::DegenerateRatio);
    }
    Ok(EmbeddingRatio { upper, lower, ratio: upper / lower, bound: q.powf(1.0 / q - 1.0 / p) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrange::GridFn;
    use proptest::prelude::*;

    #[test]
    fn power_third_is_quasiconcave_squared_not_fourth() {
        let phi = FundamentalFn::power(1.0 / 3.0);
        assert!(is_quasiconcave(&phi, 2.0, (0.0, 1.0)).unwrap().holds);
        let v = is_quasiconcave(&phi, 4.0, (0.0, 1.0)).unwrap();
        assert!(!v.holds);
        let (a, b) = v.witness.unwrap();
        assert!(a < b && phi.eval(b).powi(4) / b > phi.eval(a).powi(4) / a);
    }

    #[test]
    fn linear_is_boundary_case() {
        let phi = FundamentalFn::power(1.0).scaled(3.0);
        assert!(is_quasiconcave(&phi, 1.0, (0.0, 1.0)).unwrap().holds);
    }

    fn upper_hull_oracle(pts: &[(f64, f64)], t: f64) -> f64 {
        // max over chords through pairs of points (and single points)
        let mut best = f64::NEG_INFINITY;
        for a in pts {
            for b in pts {
                if a.0 <= t && t <= b.0 {
                    let v = if b.0 == a.0 { a.1.max(b.1) } else { a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0) };
                    best = best.max(v);
                }
            }
        }
        best
    }

    #[test]
    fn majorant_of_concave_is_identity() {
        let f = GridFn::from_steps(&[0.5, 1.0, 2.0, 3.0], &[0.5, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(least_concave_majorant(&f).unwrap(), f);
    }

    #[test]
    fn majorant_of_max_of_powers() {
        let ts: Vec<f64> = (1..=64).map(|i| i as f64 / 16.0).collect();
        let vs: Vec<f64> = ts.iter().map(|&t: &f64| t.max(t.sqrt())).collect();
        let f = GridFn::from_steps(&ts, &vs).unwrap();
        let m = least_concave_majorant(&f).unwrap();
        let mut pts = vec![(0.0, 0.0)];
        pts.extend(ts.iter().copied().zip(vs.iter().copied()));
        for ((&t, &v), &mv) in ts.iter().zip(&vs).zip(m.values()) {
            let oracle = upper_hull_oracle(&pts, t);
            assert!((mv - oracle).abs() < 1e-12, "t={t}: {mv} vs {oracle}");
            assert!(v <= mv && mv <= 2.0 * v);
        }
    }

    #[test]
    fn majorant_rejects_non_quasiconcave() {
        let f = GridFn::from_steps(&[1.0, 2.0], &[1.0, 3.0]).unwrap();
        assert!(matches!(least_concave_majorant(&f), Err(Error::NotQuasiconcave(_))));
    }

    #[test]
    fn psi_examples() {
        let grid: Vec<f64> = (1..=40).map(|i| i as f64 / 20.0).collect();
        // q > p: ψ = φ
        let phi = FundamentalFn::power(1.0 / 3.0);
        let psi = psi_majorant(&phi, 2.0, &grid).unwrap();
        for (t, v) in grid.iter().zip(psi.values()) {
            assert!((v - phi.eval(*t)).abs() < 1e-15);
        }
        // q < p: ψ = max(t^{1/p}, t^{1/q})
        let phi = FundamentalFn::power(0.5);
        let psi = psi_majorant(&phi, 3.0, &grid).unwrap();
        for (t, v) in grid.iter().zip(psi.values()) {
            assert!((v - t.powf(1.0 / 3.0).max(t.sqrt())).abs() < 1e-15);
        }
        // constant φ: ψ = c on (0,1], via a grid supremum oracle
        let phi = FundamentalFn::constant(1.5);
        let psi = psi_majorant(&phi, 2.0, &grid).unwrap();
        for (&t, v) in grid.iter().zip(psi.values()) {
            let s_max = (0..=1000)
                .map(|k| t + (1.0 - t).max(0.0) * k as f64 / 1000.0)
                .map(|s| 1.5 / s.sqrt())
                .fold(0.0, f64::max);
            let oracle = if t <= 1.0 { t.sqrt() * s_max } else { 1.5 };
            assert!((v - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_power_is_quasiconcave_on_unit_interval() {
        let phi = FundamentalFn::max_of(vec![FundamentalFn::power(0.2), FundamentalFn::power(0.7).scaled(2.0)]);
        let psi = psi_form(&phi, 2.0);
        assert!(is_quasiconcave(&psi, 2.0, (0.0, 1.0)).unwrap().holds);
    }

    #[test]
    fn embedding_bound_values() {
        let u = WeightedSamples::new(vec![1.0], vec![0.7]).unwrap();
        let phi = FundamentalFn::power(0.3);
        let r = lorentz_embedding_ratio(&u, &phi, 1.0, 2.0).unwrap();
        assert_eq!(r.bound, 1.0);
        // indicator: (∫_0^a t^{0.3 p - 1})^{1/p} = a^{0.3}(0.3 p)^{-1/p}
        let exact = |p: f64| 0.7f64.powf(0.3) * (0.3 * p).powf(-1.0 / p);
        assert!((r.ratio - exact(2.0) / exact(1.0)).abs() < 1e-13);
        assert!(r.ratio <= r.bound);
        let r = lorentz_embedding_ratio(&u, &phi, 2.0, 4.0).unwrap();
        assert!((r.bound - 2f64.powf(0.25)).abs() < 1e-15);
        let zero = WeightedSamples::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(lorentz_embedding_ratio(&zero, &phi, 1.0, 2.0), Err(Error::DegenerateRatio)));
    }

    fn quasi_concave_phi() -> impl Strategy<Value = FundamentalFn> {
        prop_oneof![
            (0.05f64..1.0).prop_map(FundamentalFn::power),
            ((0.05f64..1.0), (0.05f64..1.0), (0.2f64..5.0))
                .prop_map(|(a, b, s)| FundamentalFn::max_of(vec![FundamentalFn::power(a), FundamentalFn::power(b).scaled(s)])),
            ((0.1f64..1.0), (0.1f64..10.0)).prop_map(|(a, c)| FundamentalFn::power(a).capped(c)),
            (prop::collection::vec(0.01f64..1.0, 1..6)).prop_map(|incs| {
                // concave piecewise linear: decreasing slopes
                let mut slopes = incs.clone();
                slopes.sort_by(|a, b| b.total_cmp(a));
                let mut t = 0.0;
                let mut v = 0.0;
                let (mut ts, mut vs) = (Vec::new(), Vec::new());
                for s in slopes {
                    t += 0.5;
                    v += s * 0.5;
                    ts.push(t);
                    vs.push(v);
                }
                FundamentalFn::sampled(GridFn::from_steps(&ts, &vs).unwrap())
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn embedding_bound_holds(
            vals in prop::collection::vec(0.0f64..10.0, 1..10),
            wts in prop::collection::vec(0.01f64..2.0, 10),
            phi in quasi_concave_phi(),
            q in 1.0f64..3.0,
            gap in 0.1f64..4.0,
        ) {
            let n = vals.len();
            let u = WeightedSamples::new(vals, wts[..n].to_vec()).unwrap();
            match lorentz_embedding_ratio(&u, &phi, q, q + gap) {
                Ok(r) => prop_assert!(r.ratio <= r.bound * (1.0 + 1e-12), "{:?}", r),
                Err(Error::DegenerateRatio) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn psi_dominates_and_preserves_marcinkiewicz_norms(
            vals in prop::collection::vec(0.0f64..10.0, 1..8),
            wts in prop::collection::vec(0.01f64..1.0, 8),
            phi in quasi_concave_phi(),
            p in 1.0f64..4.0,
        ) {
            let n = vals.len();
            let u = WeightedSamples::new(vals, wts[..n].to_vec()).unwrap();
            let psi = psi_form(&phi, p);
            for k in 1..=20 {
                let t = k as f64 / 20.0;
                prop_assert!(psi.eval(t) >= phi.eval(t) * (1.0 - 1e-15));
            }
            let us = decreasing_rearrangement(&u);
            for local in [false, true] {
                let (a, b) = if local {
                    (NormSpec::MarcinkiewiczPLoc { phi: phi.clone(), p }, NormSpec::MarcinkiewiczPLoc { phi: psi.clone(), p })
                } else {
                    (NormSpec::MarcinkiewiczP { phi: phi.clone(), p }, NormSpec::MarcinkiewiczP { phi: psi.clone(), p })
                };
                let (x, y) = (norm(&us, &a).unwrap(), norm(&us, &b).unwrap());
                match (x, y) {
                    (Ext::Finite(x), Ext::Finite(y)) => prop_assert!((x - y).abs() <= 1e-9 * x.max(y), "{} vs {}", x, y),
                    _ => prop_assert_eq!(x, y),
                }
            }
        }
    }
}
