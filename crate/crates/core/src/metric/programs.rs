use super::curves::CurveFamily;
use super::solve::{solve, Objective, Program, Row, SolveResult};
use super::space::Mms;
use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::unsupported(format!("solver-backed programs need finite p >= 1, got {p}")));
    }
    Ok(())
}

fn check_finite(space: &Mms, u: &[f64]) -> Result<()> {
    space.check_fn(u, "function")?;
    if u.iter().any(|v| v.is_infinite()) {
        return Err(Error::invalid("function values must be finite"));
    }
    Ok(())
}

fn curve_rows(space: &Mms, family: &CurveFamily, rhs: impl Fn(usize, usize) -> f64) -> Vec<Row> {
    family
        .curves
        .iter()
        .enumerate()
        .map(|(k, c)| Row { coeffs: c.trapezoid_weights(space), rhs: rhs(c.start(), c.end()), label: format!("curve {k}") })
        .collect()
}

/// Discrete `p`-modulus: minimize `Σ μ_i ρ_i^p` over `ρ ≥ 0` with `∫_γ ρ ≥ 1` for every curve.
pub fn modulus(space: &Mms, family: &CurveFamily, p: f64) -> Result<SolveResult> {
    check_p(p)?;
    let objective = Objective::PowerSum { p, weights: space.weights().to_vec() };
    let program = Program { lower: vec![0.0; space.len()], objective, rows: curve_rows(space, family, |_, _| 1.0) };
    let out = solve(&program)?;
    let optimum = program.objective.value(&out.x);
    let x = out.x.clone();
    out.finish(optimum, x, None)
}

/// Smallest `‖g‖_p` over upper gradients `g` of `u` along the family.
pub fn minimal_upper_gradient(space: &Mms, u: &[f64], family: &CurveFamily, p: f64) -> Result<SolveResult> {
    check_p(p)?;
    check_finite(space, u)?;
    let objective = Objective::PowerSum { p, weights: space.weights().to_vec() };
    let rows = curve_rows(space, family, |a, b| (u[a] - u[b]).abs());
    let program = Program { lower: vec![0.0; space.len()], objective, rows };
    let out = solve(&program)?;
    let optimum = space.lp_norm(&out.x, p);
    let x = out.x.clone();
    out.finish(optimum, x, None)
}

/// Smallest `‖h‖_p` with `|u(x) − u(y)| ≤ d(x,y)(h(x) + h(y))` for every pair.
pub fn minimal_hajlasz(space: &Mms, u: &[f64], p: f64) -> Result<SolveResult> {
    check_p(p)?;
    check_finite(space, u)?;
    let n = space.len();
    let mut rows = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = space.d(i, j);
            rows.push(Row { coeffs: vec![(i, d), (j, d)], rhs: (u[i] - u[j]).abs(), label: format!("pair {i}-{j}") });
        }
    }
    let objective = Objective::PowerSum { p, weights: space.weights().to_vec() };
    let program = Program { lower: vec![0.0; n], objective, rows };
    let out = solve(&program)?;
    let optimum = space.lp_norm(&out.x, p);
    let x = out.x.clone();
    out.finish(optimum, x, None)
}

/// Sobolev capacity of `set`: minimize `‖u‖_p + ‖g‖_p` over `u ≥ χ_set`,
/// `g ≥ 0` with `g` an upper gradient of `u` along the family. The minimizer
/// is `u`; the auxiliary vector is `g`.
pub fn capacity(space: &Mms, set: &[usize], family: &CurveFamily, p: f64) -> Result<SolveResult> {
    check_p(p)?;
    if set.is_empty() {
        return Err(Error::invalid("capacity needs a nonempty set"));
    }
    let n = space.len();
    if let Some(i) = set.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("point {i} out of range")));
    }
    let mut lower = vec![0.0; 2 * n];
    for &i in set {
        lower[i] = 1.0;
    }
    let mut rows = Vec::with_capacity(2 * family.len());
    for (k, c) in family.curves.iter().enumerate() {
        let g: Vec<(usize, f64)> = c.trapezoid_weights(space).into_iter().map(|(i, w)| (n + i, w)).collect();
        let (a, b) = (c.start(), c.end());
        for (sign, tag) in [(1.0, "+"), (-1.0, "-")] {
            let mut coeffs = g.clone();
            coeffs.push((a, -sign));
            coeffs.push((b, sign));
            rows.push(Row { coeffs, rhs: 0.0, label: format!("curve {k}{tag}") });
        }
    }
    let mu = space.weights().to_vec();
    let objective = Objective::NormSum { p, blocks: vec![(0, mu.clone()), (n, mu)] };
    let program = Program { lower, objective, rows };
    let out = solve(&program)?;
    let optimum = program.objective.value(&out.x);
    let (u, g) = (out.x[..n].to_vec(), out.x[n..].to_vec());
    out.finish(optimum, u, Some(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::curves::{is_upper_gradient, Curve};
    use proptest::prelude::*;

    fn assert_certified(r: &SolveResult) {
        assert!(r.tolerance < 1e-6, "tolerance {}", r.tolerance);
        assert!(r.certificate.primal_residual < 1e-8);
        assert!(r.certificate.complementarity_residual < 1e-6);
    }

    /// Coarse grid over a box, then repeated local grids shrinking tenfold.
    fn grid_min(dim: usize, hi: f64, f: impl Fn(&[f64]) -> Option<f64>) -> f64 {
        let mut best = (f64::INFINITY, vec![0.0; dim]);
        let coarse = 100usize;
        let step = hi / coarse as f64;
        let mut idx = vec![0usize; dim];
        loop {
            let x: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
            if let Some(v) = f(&x) {
                if v < best.0 {
                    best = (v, x);
                }
            }
            let mut d = 0;
            while d < dim {
                idx[d] += 1;
                if idx[d] <= coarse {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == dim {
                break;
            }
        }
        let mut h = step;
        while h > 1e-7 {
            let centre = best.1.clone();
            let k = 20i64;
            let fine = h / 10.0;
            let mut idx = vec![-k; dim];
            loop {
                let x: Vec<f64> = centre.iter().zip(&idx).map(|(c, &j)| (c + j as f64 * fine).max(0.0)).collect();
                if let Some(v) = f(&x) {
                    if v < best.0 {
                        best = (v, x);
                    }
                }
                let mut d = 0;
                while d < dim {
                    idx[d] += 1;
                    if idx[d] <= k {
                        break;
                    }
                    idx[d] = -k;
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
            h = fine;
        }
        best.0
    }

    fn single_curve_closed_form(w: &[f64], mu: &[f64], p: f64) -> f64 {
        let s: f64 = w.iter().zip(mu).map(|(w, m)| m.powf(-1.0 / (p - 1.0)) * w.powf(p / (p - 1.0))).sum();
        s.powf(-(p - 1.0))
    }

    #[test]
    fn empty_family_is_trivial() {
        let s = Mms::path(3).unwrap();
        let r = modulus(&s, &CurveFamily::empty(), 2.0).unwrap();
        assert_eq!(r.optimum, 0.0);
        assert_eq!(r.minimizer, vec![0.0; 3]);
        let r = minimal_upper_gradient(&s, &[0.0, 5.0, -1.0], &CurveFamily::empty(), 1.5).unwrap();
        assert_eq!(r.optimum, 0.0);
        let w = s.with_weights(vec![0.5, 2.0, 3.0]).unwrap();
        let r = capacity(&w, &[1], &CurveFamily::empty(), 2.0).unwrap();
        assert_eq!(r.optimum, 2.0_f64.sqrt());
        assert_eq!(r.minimizer, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_curve_matches_lagrange_form() {
        let s = Mms::path(4).unwrap();
        let fam = CurveFamily::explicit(&s, vec![vec![0, 1, 2, 3]]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let r = modulus(&s, &fam, p).unwrap();
            assert_certified(&r);
            let w: Vec<f64> = fam.curves[0].trapezoid_weights(&s).iter().map(|e| e.1).collect();
            let exact = single_curve_closed_form(&w, s.weights(), p);
            assert!((r.optimum - exact).abs() < 1e-6 * exact, "p={p}: {} vs {exact}", r.optimum);
        }
    }

    #[test]
    fn p_one_modulus_is_a_linear_program() {
        let s = Mms::path(3).unwrap();
        let fam = CurveFamily::explicit(&s, vec![vec![0, 1, 2]]).unwrap();
        let r = modulus(&s, &fam, 1.0).unwrap();
        // trapezoid weights (1/2, 1, 1/2): all mass on the middle vertex
        assert!((r.optimum - 1.0).abs() < 1e-7);
        assert!(!r.certificate.nonunique);
        let s = Mms::path(2).unwrap();
        let r = modulus(&s, &CurveFamily::pairs(&s), 1.0).unwrap();
        assert!((r.optimum - 2.0).abs() < 1e-7);
        assert!(r.certificate.nonunique);
    }

    #[test]
    fn disjoint_copies_double_the_modulus() {
        let one = Mms::path(3).unwrap();
        let single = modulus(&one, &CurveFamily::explicit(&one, vec![vec![0, 1, 2]]).unwrap(), 2.0).unwrap();
        let mut dist = vec![vec![10.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    dist[i][j] = 0.0;
                } else if i / 3 == j / 3 {
                    dist[i][j] = one.d(i % 3, j % 3);
                }
            }
        }
        let two = Mms::new(dist, vec![1.0; 6]).unwrap();
        let fam = CurveFamily::explicit(&two, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let both = modulus(&two, &fam, 2.0).unwrap();
        assert!((both.optimum - 2.0 * single.optimum).abs() < 1e-7);
    }

    #[test]
    fn tiny_positive_coordinates_are_certified() {
        // at p near 1 the optimum has a coordinate near 4e-7 that must not be pinned to zero
        let pos = [0.0, 0.6948614805751937, 2.0436168415054414, 4.827035953663598, 6.587060909915512, 7.885191515397897, 10.551284132789908];
        let dist = pos.iter().map(|a| pos.iter().map(|b| f64::abs(a - b)).collect()).collect();
        let weights = vec![2.483425635783151, 1.5240765764482191, 1.5733807183987167, 0.9698824704398403, 2.5283176137944112, 2.520028426692433, 2.0628565961855743];
        let s = Mms::new(dist, weights).unwrap();
        let lists = vec![
            vec![0, 1, 2], vec![0, 1, 2, 3, 4], vec![0, 1, 2, 3, 4, 5, 6], vec![1, 2], vec![1, 2, 3],
            vec![1, 2, 3, 4], vec![1, 2, 3, 4, 5], vec![1, 2, 3, 4, 5, 6], vec![2, 3], vec![2, 3, 4],
        ];
        let r = modulus(&s, &CurveFamily::explicit(&s, lists).unwrap(), 1.2517605953798068).unwrap();
        assert_certified(&r);
        assert!(r.minimizer[3] > 1e-7 && r.minimizer[3] < 1e-6, "{:?}", r.minimizer);
    }

    #[test]
    fn upper_gradient_examples() {
        let s = Mms::path(2).unwrap();
        let fam = CurveFamily::pairs(&s);
        let r = minimal_upper_gradient(&s, &[3.0, 3.0], &fam, 2.0).unwrap();
        assert_eq!(r.optimum, 0.0);
        let r = minimal_upper_gradient(&s, &[0.0, 1.0], &fam, 2.0).unwrap();
        assert_certified(&r);
        assert!((r.optimum - 2.0_f64.sqrt()).abs() < 1e-7);
        assert!(r.minimizer.iter().all(|g| (g - 1.0).abs() < 1e-6));
    }

    #[test]
    fn upper_gradient_on_a_path_matches_grid_search() {
        let s = Mms::path(3).unwrap();
        let u = [0.0, 1.0, 2.0];
        let fam = CurveFamily::explicit(&s, vec![vec![0, 1], vec![1, 2], vec![0, 1, 2]]).unwrap();
        let r = minimal_upper_gradient(&s, &u, &fam, 2.0).unwrap();
        assert_certified(&r);
        let oracle = grid_min(3, 3.0, |g| {
            let ok = fam.curves.iter().all(|c| {
                let w = c.trapezoid_weights(&s);
                w.iter().map(|(i, w)| w * g[*i]).sum::<f64>() >= (u[c.start()] - u[c.end()]).abs()
            });
            ok.then(|| g.iter().map(|v| v * v).sum::<f64>().sqrt())
        });
        assert!((r.optimum - oracle).abs() < 1e-4, "{} vs {oracle}", r.optimum);
        assert!(is_upper_gradient(&s, &u, &r.minimizer, &fam).unwrap().excess < 1e-8);
    }

    #[test]
    fn hajlasz_examples() {
        let s = Mms::path(2).unwrap();
        assert_eq!(minimal_hajlasz(&s, &[1.0, 1.0], 2.0).unwrap().optimum, 0.0);
        let r = minimal_hajlasz(&s, &[0.0, 1.0], 2.0).unwrap();
        assert_certified(&r);
        assert!((r.optimum - 0.5_f64.sqrt()).abs() < 1e-7);
        assert!(r.minimizer.iter().all(|h| (h - 0.5).abs() < 1e-6));

        let dist = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]];
        let s = Mms::new(dist, vec![1.0, 2.0, 0.5]).unwrap();
        let u = [0.0, 2.0, 1.0];
        let r = minimal_hajlasz(&s, &u, 2.0).unwrap();
        assert_certified(&r);
        let oracle = grid_min(3, 3.0, |h| {
            let ok = (0..3).all(|i| (0..3).all(|j| (u[i] - u[j]).abs() <= s.d(i, j) * (h[i] + h[j])));
            ok.then(|| s.lp_norm(h, 2.0))
        });
        assert!((r.optimum - oracle).abs() < 1e-4, "{} vs {oracle}", r.optimum);
    }

    #[test]
    fn capacity_examples() {
        let s = Mms::path(3).unwrap();
        let all = capacity(&s, &[0, 1, 2], &CurveFamily::shortest_paths(&s).unwrap(), 2.0).unwrap();
        assert_eq!(all.optimum, 3.0_f64.sqrt());

        let s = Mms::path(2).unwrap();
        let fam = CurveFamily::pairs(&s);
        let r = capacity(&s, &[0], &fam, 2.0).unwrap();
        assert_certified(&r);
        let oracle = grid_min(3, 2.0, |x| {
            let (u1, g0, g1) = (x[0], x[1], x[2]);
            ((g0 + g1) / 2.0 >= (1.0 - u1).abs()).then(|| (1.0 + u1 * u1).sqrt() + (g0 * g0 + g1 * g1).sqrt())
        });
        assert!((r.optimum - oracle).abs() < 1e-4, "{} vs {oracle}", r.optimum);
        let g = r.auxiliary.as_ref().unwrap();
        assert!(is_upper_gradient(&s, &r.minimizer, g, &fam).unwrap().excess < 1e-8);
    }

    #[test]
    fn capacity_with_a_long_curve_is_certified() {
        let s = Mms::path(5).unwrap();
        let fam = CurveFamily::k_hop(&s, 4).unwrap();
        for p in [1.0, 1.5, 2.0] {
            let r = capacity(&s, &[0], &fam, p).unwrap();
            assert!(r.tolerance < 1e-6, "p={p}: {}", r.tolerance);
            assert!(r.optimum <= s.lp_norm(&[1.0, 1.0, 1.0, 1.0, 1.0], p) + 1e-9);
            assert!(r.optimum >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn twice_hajlasz_is_a_pair_upper_gradient() {
        let s = Mms::grid(2, 3).unwrap();
        let u = [0.0, 1.0, 3.0, -1.0, 0.5, 2.0];
        let r = minimal_hajlasz(&s, &u, 2.0).unwrap();
        let g: Vec<f64> = r.minimizer.iter().map(|h| 2.0 * h).collect();
        let v = is_upper_gradient(&s, &u, &g, &CurveFamily::pairs(&s)).unwrap();
        assert!(v.holds, "excess {}", v.excess);
    }

    #[test]
    fn modulus_grows_with_the_family() {
        let s = Mms::grid(2, 3).unwrap();
        let all = CurveFamily::k_hop(&s, 3).unwrap();
        let mut prev = 0.0;
        for k in [1, 4, 9, 16, all.len()] {
            let fam = CurveFamily { curves: all.curves[..k.min(all.len())].to_vec(), generator: all.generator.clone() };
            let r = modulus(&s, &fam, 2.0).unwrap();
            assert!(r.optimum >= prev - 1e-8);
            prev = r.optimum;
        }
    }

    fn random_instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (2usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(0.2f64..3.0, n - 1),
                prop::collection::vec(0.2f64..3.0, n),
                prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.1f64..4.0],
            )
        })
    }

    fn path_space(gaps: &[f64], mu: Vec<f64>) -> Mms {
        let n = gaps.len() + 1;
        let pos: Vec<f64> = std::iter::once(0.0).chain(gaps.iter().scan(0.0, |a, g| {
            *a += g;
            Some(*a)
        })).collect();
        let dist = (0..n).map(|i| (0..n).map(|j| (pos[i] - pos[j]).abs()).collect()).collect();
        Mms::new(dist, mu).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn single_curve_closed_form_holds((gaps, mu, p) in random_instance()) {
            let s = path_space(&gaps, mu);
            let curve = Curve::new(&s, (0..s.len()).collect()).unwrap();
            let w: Vec<f64> = curve.trapezoid_weights(&s).iter().map(|e| e.1).collect();
            let fam = CurveFamily { curves: vec![curve], generator: crate::metric::FamilyGenerator::Explicit };
            let r = modulus(&s, &fam, p).unwrap();
            let exact = single_curve_closed_form(&w, s.weights(), p);
            prop_assert!((r.optimum - exact).abs() <= 1e-6 * exact, "{} vs {}", r.optimum, exact);
        }

        #[test]
        fn modulus_scales_inversely((gaps, _mu, p) in random_instance(), scale in 0.25f64..4.0) {
            let s = path_space(&gaps, vec![1.0; gaps.len() + 1]);
            let fam = CurveFamily::k_hop(&s, 2).unwrap();
            let base = modulus(&s, &fam, p).unwrap().optimum;
            let scaled = modulus(&s.scaled(scale).unwrap(), &fam, p).unwrap().optimum;
            prop_assert!((scaled - base * scale.powf(-p)).abs() <= 1e-6 * scaled.max(base * scale.powf(-p)));
        }
    }
}
