use super::space::{Ball, Mms};
use crate::error::{Error, Result};
use crate::ext::Ext;
use serde::{Deserialize, Serialize};

/// The ball with the largest Poincaré ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub ratio: Ext,
    pub ball: Ball,
    /// Mean oscillation `⨍_B |u − u_B|`.
    pub oscillation: f64,
    pub diameter: f64,
    /// `(⨍_{λB} g^p)^{1/p}`.
    pub gradient_mean: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Largest `⨍_B |u − u_B| / (diam B · (⨍_{λB} g^p)^{1/p})` over every
/// distinct ball; a lower bound for the Poincaré constant. Balls where both
/// sides vanish are skipped.
pub fn poincare_ratio(space: &Mms, u: &[f64], g: &[f64], p: f64, lambda: f64) -> Result<PoincareReport> {
    space.check_fn(u, "function")?;
    space.check_nonneg(g, "gradient")?;
    if u.iter().any(|v| v.is_infinite()) {
        return Err(Error::invalid("function values must be finite"));
    }
    if !(p >= 1.0 && p.is_finite()) || !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("need finite p >= 1 and lambda >= 1, got p={p}, lambda={lambda}")));
    }
    let mut best: Option<PoincareReport> = None;
    let (mut evaluated, mut skipped) = (0, 0);
    for center in 0..space.len() {
        for ball in space.balls(center) {
            let mean = space.mean(u, &ball.members);
            let dev: Vec<f64> = u.iter().map(|v| (v - mean).abs()).collect();
            let oscillation = space.mean(&dev, &ball.members);
            let diameter = space.diameter(&ball.members);
            let dilated = space.open_ball(center, lambda * ball.radius);
            let gp: Vec<f64> = g.iter().map(|v| v.powf(p)).collect();
            let gradient_mean = space.mean(&gp, &dilated).powf(1.0 / p);
            let denom = diameter * gradient_mean;
            if oscillation == 0.0 && denom == 0.0 {
                skipped += 1;
                continue;
            }
            evaluated += 1;
            let ratio = if denom == 0.0 { Ext::Infinite } else { Ext::Finite(oscillation / denom) };
            if best.as_ref().map_or(true, |b| ratio > b.ratio) {
                best = Some(PoincareReport { ratio, ball, oscillation, diameter, gradient_mean, evaluated: 0, skipped: 0 });
            }
        }
    }
    let mut report = best.ok_or(Error::AllDegenerate)?;
    report.evaluated = evaluated;
    report.skipped = skipped;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{minimal_upper_gradient, CurveFamily};

    #[test]
    fn constant_function_is_degenerate() {
        let s = Mms::path(3).unwrap();
        assert!(matches!(poincare_ratio(&s, &[1.0; 3], &[0.0; 3], 2.0, 1.0), Err(Error::AllDegenerate)));
    }

    #[test]
    fn two_point_edge() {
        let s = Mms::path(2).unwrap();
        let r = poincare_ratio(&s, &[0.0, 1.0], &[1.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(r.ratio, Ext::Finite(0.5));
        assert_eq!(r.ball.members, vec![0, 1]);
    }

    #[test]
    fn linear_function_on_refined_paths() {
        let mut ratios = Vec::new();
        for n in [5usize, 9, 17] {
            let s = Mms::path(n).unwrap().scaled(1.0 / (n - 1) as f64).unwrap();
            let u: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let fam = CurveFamily::shortest_paths(&s).unwrap();
            let g = minimal_upper_gradient(&s, &u, &fam, 2.0).unwrap().minimizer;
            let r = poincare_ratio(&s, &u, &g, 2.0, 1.0).unwrap();
            ratios.push(r.ratio.value());
        }
        let recorded = [0.49029033784545994, 0.49694186733680945, 0.49913718670542123];
        for (r, want) in ratios.iter().zip(recorded) {
            assert!((r - want).abs() < 1e-6, "{ratios:?}");
        }
        assert!(ratios.windows(2).all(|w| (w[1] - w[0]).abs() < 0.01));
    }
}
