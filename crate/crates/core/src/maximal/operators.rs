use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::metric::Mms;
use crate::rearrange::{decreasing_rearrangement, GridFn, WeightedSamples};
use serde::{Deserialize, Serialize};

fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent p = {p} must be finite and at least 1")))
    }
}

fn check_decreasing(ustar: &GridFn) -> Result<()> {
    if ustar.is_decreasing() && ustar.values().iter().all(|&v| v >= 0.0) && ustar.tail() >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("expected a nonnegative decreasing function"))
    }
}

/// `M_p u*(t) = (⨍_0^t u*^p)^{1/p}`, exact on cells.
pub fn maximal_decreasing(ustar: &GridFn, p: f64, t: f64) -> Result<Ext> {
    check_exponent(p)?;
    check_decreasing(ustar)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t = {t} must be finite and positive")));
    }
    Ok(ustar.integral_pow(p, t).map(|s| (s / t).powf(1.0 / p)))
}

/// Measure of `{t : M_p u*(t) > σ}`. `M_p u*` is non-increasing, so the set
/// is an initial interval; its end is solved exactly on the cell where the
/// level is crossed.
pub fn maximal_superlevel_measure(ustar: &GridFn, p: f64, sigma: f64) -> Result<Ext> {
    check_exponent(p)?;
    check_decreasing(ustar)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("level {sigma} must be finite and positive")));
    }
    let level = sigma.powf(p);
    // running ∫_0^lo u*^p
    let mut acc = 0.0;
    let mut cells: Vec<(f64, f64, f64)> = ustar.cells().collect();
    cells.push((ustar.span(), f64::INFINITY, ustar.tail()));
    for (lo, hi, v) in cells {
        if v.is_infinite() {
            return Ok(Ext::Infinite);
        }
        let w = v.powf(p);
        let at_hi = if hi.is_infinite() { w } else { (acc + w * (hi - lo)) / hi };
        if at_hi <= level {
            // (acc + w (t − lo)) / t = level, solved for t in (lo, hi]
            if w >= level {
                return Ok(Ext::from_f64(hi));
            }
            let t = (acc - w * lo) / (level - w);
            return Ok(Ext::from_f64(t.clamp(lo, hi)));
        }
        if hi.is_infinite() {
            return Ok(Ext::Infinite);
        }
        acc += w * (hi - lo);
    }
    unreachable!("the tail cell always decides")
}

/// `P_a u*(t) = t^{-a} ∫_0^t u*(s) s^a ds/s`, exact on cells.
pub fn hardy(a: f64, ustar: &GridFn, t: f64) -> Result<Ext> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::invalid(format!("Hardy exponent a = {a} must lie in (0, 1]")));
    }
    check_decreasing(ustar)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("t = {t} must be finite and positive")));
    }
    let piece = |v: f64, lo: f64, hi: f64| v * (hi.powf(a) - lo.powf(a)) / a;
    let mut acc = 0.0;
    for (lo, hi, v) in ustar.cells() {
        if lo >= t {
            break;
        }
        if v.is_infinite() {
            return Ok(Ext::Infinite);
        }
        if v > 0.0 {
            acc += piece(v, lo, hi.min(t));
        }
    }
    if t > ustar.span() && ustar.tail() > 0.0 {
        acc += piece(ustar.tail(), ustar.span(), t);
    }
    Ok(Ext::from_f64(acc * t.powf(-a)))
}

/// Constants `(C₁, C₂)` with `P_{1/q} u* ≤ C₁ M_p u* ≤ C₂ P_{1/p} u*` for
/// `1 ≤ q < p`; from Hölder on the left and `‖f‖_p ≤ ‖f‖_{L^{p,1}}` on the
/// right.
pub fn sandwich_constants(p: f64, q: f64) -> Result<(f64, f64)> {
    if !(p > 1.0 && p.is_finite() && q >= 1.0 && q < p) {
        return Err(Error::invalid(format!("need 1 <= q < p < inf, got p = {p}, q = {q}")));
    }
    let conj = p / (p - 1.0);
    let c1 = (1.0 / (conj * (1.0 / q - 1.0 / p))).powf(1.0 / conj);
    Ok((c1, c1 / p))
}

/// `E_s f(t) = f(st)`.
pub fn dilation(f: &GridFn, s: f64) -> Result<GridFn> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("dilation factor {s} must be finite and positive")));
    }
    Ok(f.with_breakpoints_scaled(1.0 / s))
}

/// Non-centred `M_p u(x) = sup_{B∋x} (⨍_B |u|^p)^{1/p}` over every distinct
/// ball. For each centre the balls are distance prefixes, so a point's best
/// ball among them is a suffix maximum of the prefix means.
pub fn maximal_metric(space: &Mms, u: &[f64], p: f64) -> Result<Vec<f64>> {
    space.check_fn(u, "function")?;
    check_exponent(p)?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("function values must be finite"));
    }
    let n = space.len();
    let up: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
    let w = space.weights();
    let mut out = vec![0.0f64; n];
    let mut order: Vec<usize> = (0..n).collect();
    for c in 0..n {
        let row = &space.dist()[c];
        order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
        // mean over each closed prefix that ends a distance group
        let mut means = vec![0.0; n];
        let (mut mass, mut total) = (0.0, 0.0);
        for (k, &j) in order.iter().enumerate() {
            mass += w[j];
            total += w[j] * up[j];
            means[k] = total / mass;
        }
        let mut best = f64::NEG_INFINITY;
        let mut k = n;
        while k > 0 {
            // group of equal distances ending at k-1
            let d = row[order[k - 1]];
            let mut start = k - 1;
            while start > 0 && row[order[start - 1]] == d {
                start -= 1;
            }
            best = best.max(means[k - 1]);
            for &j in &order[start..k] {
                out[j] = out[j].max(best);
            }
            k = start;
        }
    }
    Ok(out.into_iter().map(|m| m.powf(1.0 / p)).collect())
}

/// Extremes of `M_p u*(t) / (M_p u)*(t)` over `(0, μ(P))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerzRiesz {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `(t, ratio)` at both ends of every cell of the common partition.
    pub samples: Vec<(f64, f64)>,
}

pub fn herz_riesz_ratios(space: &Mms, u: &[f64], p: f64) -> Result<HerzRiesz> {
    let maximal = maximal_metric(space, u, p)?;
    let w = space.weights().to_vec();
    let ustar = decreasing_rearrangement(&WeightedSamples::new(u.to_vec(), w.clone())?);
    if ustar.values().is_empty() {
        return Err(Error::ZeroFunction);
    }
    let mstar = decreasing_rearrangement(&WeightedSamples::new(maximal, w)?);
    let total = space.total_measure();
    let mut cuts: Vec<f64> = ustar.breakpoints().iter().chain(mstar.breakpoints()).copied().collect();
    cuts.push(total);
    cuts.retain(|&t| t <= total);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut samples = Vec::new();
    for win in cuts.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let mid = 0.5 * (lo + hi);
        let denom = mstar.eval(mid);
        let at = |t: f64| -> Result<f64> {
            if t == 0.0 {
                Ok(ustar.eval(0.0))
            } else {
                Ok(maximal_decreasing(&ustar, p, t)?.value())
            }
        };
        samples.push((lo, at(lo)? / denom));
        samples.push((hi, at(hi)? / denom));
    }
    let min_ratio = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let max_ratio = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(HerzRiesz { min_ratio, max_ratio, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn inverse_square_root_mean() {
        let g = GridFn::sample_decreasing(|t| t.powf(-0.5), 1.0, 40, 64).unwrap();
        for &t in &[1.0, 0.5, 0.01, 1e-4] {
            let m = maximal_decreasing(&g, 1.0, t).unwrap().value();
            // quadrature oracle on the same step function
            let oracle = quad::integrate(1e-30, t, |s| g.eval(s), g.breakpoints()) / t;
            assert!(close(m, oracle, 1e-9), "{m} vs {oracle}");
            assert!(close(m, 2.0 * t.powf(-0.5), 2e-2), "t={t}: {m}");
        }
    }

    #[test]
    fn constant_mean_is_constant() {
        let c = GridFn::new(vec![0.0, 3.0], vec![2.5], 2.5).unwrap();
        for &t in &[0.1, 3.0, 50.0] {
            assert_eq!(maximal_decreasing(&c, 2.0, t).unwrap().value(), 2.5);
        }
    }

    #[test]
    fn power_profile_constant() {
        for &(p, q) in &[(1.0, 2.0), (2.0, 3.0), (1.5, 4.0)] {
            let g = GridFn::sample_decreasing(|t| t.powf(-1.0 / q), 1.0, 50, 64).unwrap();
            let c = (q / (q - p)).powf(1.0 / p);
            for &t in &[0.5, 1e-3, 1e-6] {
                let m = maximal_decreasing(&g, p, t).unwrap().value();
                assert!(close(m, c * t.powf(-1.0 / q), 1e-2), "p={p} q={q} t={t}");
            }
        }
    }

    #[test]
    fn divergent_cells_give_marker() {
        let g = GridFn::new(vec![0.0, 1.0], vec![f64::INFINITY], 0.0).unwrap();
        assert_eq!(maximal_decreasing(&g, 1.0, 0.5).unwrap(), Ext::Infinite);
        assert_eq!(hardy(0.5, &g, 0.5).unwrap(), Ext::Infinite);
    }

    #[test]
    fn superlevel_measure_of_power_profile() {
        let (p, q) = (1.0, 2.0);
        let g = GridFn::sample_decreasing(|t| t.powf(-1.0 / q), 1.0, 60, 64).unwrap();
        let c = (q / (q - p)).powf(1.0 / p);
        for &sigma in &[3.0, 10.0, 100.0] {
            let m = maximal_superlevel_measure(&g, p, sigma).unwrap().value();
            assert!(close(m, (c / sigma).powf(q), 2e-2), "sigma={sigma}: {m}");
            let at = maximal_decreasing(&g, p, m).unwrap().value();
            assert!(close(at, sigma, 1e-9));
        }
        let flat = GridFn::new(vec![0.0, 1.0], vec![2.0], 1.0).unwrap();
        assert_eq!(maximal_superlevel_measure(&flat, 1.0, 0.5).unwrap(), Ext::Infinite);
        assert_eq!(maximal_superlevel_measure(&flat, 1.0, 3.0).unwrap().value(), 0.0);
        // (2·1 + 1·(t−1))/t = 1.5 at t = 2
        assert_eq!(maximal_superlevel_measure(&flat, 1.0, 1.5).unwrap().value(), 2.0);
    }

    #[test]
    fn hardy_indicator_values() {
        let chi = GridFn::indicator(1.0, 1.0).unwrap();
        for &a in &[0.25, 0.5, 1.0] {
            for &t in &[0.3, 1.0] {
                assert!(close(hardy(a, &chi, t).unwrap().value(), 1.0 / a, 1e-14));
            }
        }
        assert!(close(hardy(1.0, &chi, 2.0).unwrap().value(), 0.5, 1e-15));
        assert_eq!(hardy(0.5, &GridFn::zero(), 3.0).unwrap().value(), 0.0);
    }

    #[test]
    fn dilation_unfolds() {
        let chi = GridFn::indicator(1.0, 1.0).unwrap();
        assert_eq!(dilation(&chi, 1.0).unwrap(), chi);
        assert_eq!(dilation(&chi, 0.5).unwrap(), GridFn::indicator(2.0, 1.0).unwrap());
        assert_eq!(dilation(&chi, 2.0).unwrap(), GridFn::indicator(0.5, 1.0).unwrap());
        assert!(dilation(&chi, 0.0).is_err());
    }

    /// Brute force over explicit balls.
    fn maximal_oracle(space: &Mms, u: &[f64], p: f64) -> Vec<f64> {
        let mut out = vec![0.0f64; space.len()];
        for c in 0..space.len() {
            for ball in space.balls(c) {
                let up: Vec<f64> = u.iter().map(|v| v.abs().powf(p)).collect();
                let m = space.mean(&up, &ball.members).powf(1.0 / p);
                for &x in &ball.members {
                    out[x] = out[x].max(m);
                }
            }
        }
        out
    }

    #[test]
    fn two_point_maximal() {
        let s = Mms::path(2).unwrap();
        assert_eq!(maximal_metric(&s, &[0.0, 2.0], 1.0).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn maximal_of_constant_and_indicator() {
        let s = Mms::grid(3, 4).unwrap();
        let m = maximal_metric(&s, &[1.5; 12], 2.0).unwrap();
        assert!(m.iter().all(|&v| close(v, 1.5, 1e-15)));
        let mut e = vec![0.0; 12];
        e[5] = 1.0;
        let m = maximal_metric(&s, &e, 1.0).unwrap();
        assert!(m.iter().all(|&v| v >= 1.0 / 12.0 - 1e-15));
        assert_eq!(m[5], 1.0);
    }

    #[test]
    fn herz_riesz_trivial_cases() {
        let one = Mms::path(1).unwrap();
        let r = herz_riesz_ratios(&one, &[3.0], 1.0).unwrap();
        assert_eq!((r.min_ratio, r.max_ratio), (1.0, 1.0));
        let s = Mms::tree(2, 3).unwrap();
        let r = herz_riesz_ratios(&s, &vec![2.0; s.len()], 2.0).unwrap();
        assert!(close(r.min_ratio, 1.0, 1e-14) && close(r.max_ratio, 1.0, 1e-14));
        assert!(matches!(herz_riesz_ratios(&s, &vec![0.0; s.len()], 1.0), Err(Error::ZeroFunction)));
    }

    fn decreasing_steps() -> impl Strategy<Value = GridFn> {
        (prop::collection::vec((0.01f64..3.0, 0.0f64..5.0), 1..8), 0.0f64..1.0).prop_map(|(cells, tail_frac)| {
            let mut vals: Vec<f64> = cells.iter().map(|c| c.1 + 0.01).collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            let mut ends = Vec::new();
            let mut acc = 0.0;
            for c in &cells {
                acc += c.0;
                ends.push(acc);
            }
            let tail = vals.last().unwrap() * tail_frac * 0.5;
            let mut bp = vec![0.0];
            bp.extend(ends);
            GridFn::new(bp, vals, tail).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn maximal_metric_matches_ball_enumeration(
            n in 2usize..9,
            vals in prop::collection::vec(-3.0f64..3.0, 9),
            p in 1.0f64..4.0,
        ) {
            let s = Mms::path(n).unwrap();
            let u = &vals[..n];
            let fast = maximal_metric(&s, u, p).unwrap();
            let slow = maximal_oracle(&s, u, p);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
            }
            for (m, v) in fast.iter().zip(u) {
                prop_assert!(*m >= v.abs() * (1.0 - 1e-12));
            }
        }

        #[test]
        fn maximal_decreasing_is_monotone_and_dominates(g in decreasing_steps(), p in 1.0f64..5.0) {
            let mut prev = f64::INFINITY;
            for k in 0..40 {
                let t = 1e-3 * 1.3f64.powi(k);
                let m = maximal_decreasing(&g, p, t).unwrap().value();
                prop_assert!(m <= prev * (1.0 + 1e-12));
                prop_assert!(m >= g.eval(t) * (1.0 - 1e-12));
                prev = m;
            }
        }

        #[test]
        fn hardy_sandwich(g in decreasing_steps(), p in 1.1f64..6.0, frac in 0.0f64..0.95) {
            let q = 1.0 + frac * (p - 1.0);
            let (c1, c2) = sandwich_constants(p, q).unwrap();
            for k in 0..40 {
                let t = 1e-3 * 1.3f64.powi(k);
                let low = hardy(1.0 / q, &g, t).unwrap().value();
                let mid = c1 * maximal_decreasing(&g, p, t).unwrap().value();
                let high = c2 * hardy(1.0 / p, &g, t).unwrap().value();
                prop_assert!(low <= mid * (1.0 + 1e-10), "t={} {} > {}", t, low, mid);
                prop_assert!(mid <= high * (1.0 + 1e-10), "t={} {} > {}", t, mid, high);
            }
        }
    }

    #[test]
    fn herz_riesz_path_envelope() {
        use rand::{Rng, SeedableRng};
        let s = Mms::path(50).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
            let r = herz_riesz_ratios(&s, &u, 1.0).unwrap();
            lo = lo.min(r.min_ratio);
            hi = hi.max(r.max_ratio);
        }
        assert!(lo > 0.0 && hi.is_finite() && lo <= 1.0 + 1e-12);
    }
}
