use super::operators::dilation;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::rearrange::GridFn;
use crate::spaces::{norm, phi_of, FundamentalFn, NormSpec};
use serde::{Deserialize, Serialize};

/// Geometric range and density of the `t`-grid used for numeric suprema
/// over `(0, ∞)`.
const T_OCTAVES: i32 = 60;
const T_PER_OCTAVE: i32 = 8;

/// `s = 2^{k/2}`, `k = 1..=80`.
pub fn default_s_grid() -> Vec<f64> {
    (1..=80).map(|k| 2f64.powf(k as f64 / 2.0)).collect()
}

fn check_s_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() || s_grid.iter().any(|&s| !(s > 1.0 && s.is_finite())) {
        return Err(Error::invalid("dilation grid must be nonempty with every s > 1"));
    }
    Ok(())
}

/// `k(s) = sup_t φ(st)/φ(t)` and `β̄ = min_s log k(s)/log s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZippinEstimate {
    pub k_samples: Vec<(f64, f64)>,
    pub beta: f64,
    /// Closed form (powers); otherwise a grid supremum.
    pub exact: bool,
}

pub fn zippin_upper(phi: &FundamentalFn, s_grid: &[f64]) -> Result<ZippinEstimate> {
    phi.validate()?;
    check_s_grid(s_grid)?;
    if let Some(pieces) = phi.power_pieces() {
        let a = pieces.iter().copied().fold(0.0, f64::max);
        let k_samples = s_grid.iter().map(|&s| (s, s.powf(a))).collect();
        return Ok(ZippinEstimate { k_samples, beta: a, exact: true });
    }
    let mut base: Vec<f64> = (-T_OCTAVES * T_PER_OCTAVE..=T_OCTAVES * T_PER_OCTAVE)
        .map(|i| 2f64.powf(i as f64 / T_PER_OCTAVE as f64))
        .collect();
    base.extend(phi.nodes());
    let mut k_samples = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let mut ts = base.clone();
        ts.extend(phi.nodes().iter().map(|x| x / s));
        let mut k = 1.0f64;
        for t in ts {
            let den = phi.eval(t);
            if den > 0.0 {
                k = k.max(phi.eval(s * t) / den);
            }
        }
        k_samples.push((s, k));
    }
    let beta = min_log_ratio(&k_samples);
    Ok(ZippinEstimate { k_samples, beta, exact: false })
}

fn min_log_ratio(samples: &[(f64, f64)]) -> f64 {
    samples.iter().map(|&(s, k)| k.ln() / s.ln()).fold(f64::INFINITY, f64::min).max(0.0)
}

/// Exact upper Boyd index for families whose dilation norm is a power.
pub fn closed_form_alpha(spec: &NormSpec) -> Option<f64> {
    match spec {
        NormSpec::Lp { p } | NormSpec::LorentzPq { p, .. } | NormSpec::LorentzPInf { p } => Some(1.0 / p),
        NormSpec::LambdaPhi { phi } | NormSpec::Marcinkiewicz { phi } | NormSpec::WeakMarcinkiewicz { phi } => {
            phi.as_power()
        }
        NormSpec::LambdaQPhi { phi, .. } => phi.as_power().filter(|&a| a > 0.0),
        NormSpec::MarcinkiewiczP { phi, p } => phi.as_power().filter(|&a| a <= 1.0 / p),
        NormSpec::OrliczLux { psi } => psi.is_power().map(|r| 1.0 / r),
        _ => None,
    }
}

/// `h(s) = sup ‖E_{1/s} f‖/‖f‖`, from below unless a closed form applies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoydEstimate {
    pub h_samples: Vec<(f64, f64)>,
    pub alpha: f64,
    pub lower_bound_only: bool,
    pub note: String,
}

/// Lower estimate of `h` from the candidates and from `k ≤ h` (indicators
/// are admissible candidates); closed forms override.
pub fn boyd_upper_lowerbound(spec: &NormSpec, candidates: &[GridFn], s_grid: &[f64]) -> Result<BoydEstimate> {
    spec.validate()?;
    check_s_grid(s_grid)?;
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate functions"));
    }
    if candidates.iter().any(|f| !f.is_decreasing()) {
        return Err(Error::invalid("candidates must be decreasing"));
    }
    let mut usable = Vec::new();
    for f in candidates {
        if let Ext::Finite(n) = norm(f, spec)? {
            if n > 0.0 {
                usable.push((f, n));
            }
        }
    }
    if usable.is_empty() {
        return Err(Error::invalid("every candidate has zero or infinite norm"));
    }
    if let Some(a) = closed_form_alpha(spec) {
        return Ok(BoydEstimate {
            h_samples: s_grid.iter().map(|&s| (s, s.powf(a))).collect(),
            alpha: a,
            lower_bound_only: false,
            note: "closed form".into(),
        });
    }
    let zippin = zippin_upper(&phi_of(spec)?, s_grid)?;
    let mut h_samples = Vec::with_capacity(s_grid.len());
    for (&s, &(_, k)) in s_grid.iter().zip(&zippin.k_samples) {
        let mut h = k;
        for &(f, n) in &usable {
            if let Ext::Finite(m) = norm(&dilation(f, 1.0 / s)?, spec)? {
                h = h.max(m / n);
            }
        }
        h_samples.push((s, h));
    }
    let alpha = min_log_ratio(&h_samples);
    Ok(BoydEstimate {
        h_samples,
        alpha,
        lower_bound_only: true,
        note: format!("{} candidates plus indicators; h is bounded from below only", usable.len()),
    })
}

/// Dilation data behind the upper fundamental and Boyd indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub k_samples: Vec<(f64, f64)>,
    pub h_samples: Vec<(f64, f64)>,
    pub beta_upper: f64,
    pub alpha_lower: f64,
    pub beta_exact: bool,
    pub lower_bound_only: bool,
    pub note: String,
}

pub fn index_report(spec: &NormSpec, candidates: &[GridFn], s_grid: &[f64]) -> Result<IndexReport> {
    let zippin = zippin_upper(&phi_of(spec)?, s_grid)?;
    let boyd = boyd_upper_lowerbound(spec, candidates, s_grid)?;
    Ok(IndexReport {
        k_samples: zippin.k_samples,
        h_samples: boyd.h_samples,
        beta_upper: zippin.beta,
        alpha_lower: boyd.alpha,
        beta_exact: zippin.exact,
        lower_bound_only: boyd.lower_bound_only,
        note: boyd.note,
    })
}
