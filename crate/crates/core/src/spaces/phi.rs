use super::young::NFunction;
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::quad;
use crate::rearrange::GridFn;
use serde::{Deserialize, Serialize};

/// A fundamental function `φ` on `[0, ∞)`.
///
/// The value is `scale · form(min(t, cap))`, so a finite `cap` holds `φ`
/// constant beyond it (the measure of the underlying space).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalFn {
    #[serde(flatten)]
    pub form: PhiForm,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PhiForm {
    /// `t^a`.
    Power { exponent: f64 },
    /// `t^a (1 + log(1/t))^b` for `t < 1`, `t^a` for `t ≥ 1`.
    PowerLog { exponent: f64, log_exponent: f64 },
    /// `1/Ψ^{-1}(1/t)`.
    OrliczInverse { young: NFunction },
    /// Linear interpolation through `(0,0)` and the nodes
    /// `(t_i, values[i-1])`; constant after the last node.
    Sampled { grid: GridFn },
    /// Pointwise maximum.
    Max { parts: Vec<FundamentalFn> },
    /// `t^{1/p} sup_{t≤s≤1} φ(s)/s^{1/p}` on `(0,1]`, `φ` beyond.
    Psi { base: Box<FundamentalFn>, p: f64 },
}

impl FundamentalFn {
    pub fn new(form: PhiForm) -> FundamentalFn {
        FundamentalFn { form, scale: 1.0, cap: None }
    }

    pub fn power(exponent: f64) -> FundamentalFn {
        FundamentalFn::new(PhiForm::Power { exponent })
    }

    pub fn power_log(exponent: f64, log_exponent: f64) -> FundamentalFn {
        FundamentalFn::new(PhiForm::PowerLog { exponent, log_exponent })
    }

    pub fn constant(c: f64) -> FundamentalFn {
        FundamentalFn::power(0.0).scaled(c)
    }

    pub fn sampled(grid: GridFn) -> FundamentalFn {
        FundamentalFn::new(PhiForm::Sampled { grid })
    }

    pub fn orlicz(young: NFunction) -> FundamentalFn {
        FundamentalFn::new(PhiForm::OrliczInverse { young })
    }

    pub fn max_of(parts: Vec<FundamentalFn>) -> FundamentalFn {
        FundamentalFn::new(PhiForm::Max { parts })
    }

    pub fn scaled(mut self, c: f64) -> FundamentalFn {
        self.scale *= c;
        self
    }

    pub fn capped(mut self, cap: f64) -> FundamentalFn {
        self.cap = Some(self.cap.map_or(cap, |c| c.min(cap)));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::unsupported("phi scale must be finite and positive"));
        }
        if let Some(c) = self.cap {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::unsupported("phi cap must be finite and positive"));
            }
        }
        match &self.form {
            PhiForm::Power { exponent } => {
                if !(0.0..=1.0).contains(exponent) {
                    return Err(Error::unsupported(format!("power exponent {exponent} outside [0,1]")));
                }
            }
            PhiForm::PowerLog { exponent, log_exponent } => {
                if !(*exponent > 0.0 && *exponent <= 1.0 && log_exponent.is_finite()) {
                    return Err(Error::unsupported("power-log needs exponent in (0,1] and a finite log exponent"));
                }
            }
            PhiForm::OrliczInverse { young } => young.validate()?,
            PhiForm::Sampled { grid } => {
                if grid.values().is_empty() {
                    return Err(Error::invalid("sampled phi needs at least one node"));
                }
                if grid.values().iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("sampled phi values must be finite"));
                }
            }
            PhiForm::Max { parts } => {
                if parts.is_empty() {
                    return Err(Error::invalid("max of an empty list"));
                }
                for part in parts {
                    part.validate()?;
                }
            }
            PhiForm::Psi { base, p } => {
                if !(*p >= 1.0 && p.is_finite()) {
                    return Err(Error::unsupported("psi exponent must be >= 1"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let t = self.cap.map_or(t, |c| t.min(c));
        self.scale * self.raw(t)
    }

    fn raw(&self, t: f64) -> f64 {
        match &self.form {
            PhiForm::Power { exponent } => {
                if t.is_infinite() {
                    return if *exponent > 0.0 { f64::INFINITY } else { 1.0 };
                }
                t.powf(*exponent)
            }
            PhiForm::PowerLog { exponent, log_exponent } => {
                if t < 1.0 {
                    t.powf(*exponent) * (1.0 - t.ln()).powf(*log_exponent)
                } else {
                    t.powf(*exponent)
                }
            }
            PhiForm::OrliczInverse { young } => 1.0 / young.inverse(1.0 / t),
            PhiForm::Sampled { grid } => {
                let bp = grid.breakpoints();
                let vals = grid.values();
                let span = grid.span();
                if t >= span {
                    return *vals.last().unwrap();
                }
                let i = bp.partition_point(|&b| b < t);
                let (t0, t1) = (bp[i - 1], bp[i]);
                let v0 = if i == 1 { 0.0 } else { vals[i - 2] };
                let v1 = vals[i - 1];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
            PhiForm::Max { parts } => parts.iter().map(|f| f.eval(t)).fold(0.0, f64::max),
            PhiForm::Psi { base, p } => {
                if t >= 1.0 {
                    return base.eval(t);
                }
                let g = |s: f64| base.eval(s) / s.powf(1.0 / p);
                let nodes = base.nodes();
                let m = quad::sup_on_interval(t, 1.0, &nodes, base.piecewise_exact(), g);
                t.powf(1.0 / p) * m
            }
        }
    }

    /// Kinks and switch points relevant for exact suprema and quadrature.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = match &self.form {
            PhiForm::Power { .. } => Vec::new(),
            PhiForm::PowerLog { .. } => vec![1.0],
            PhiForm::OrliczInverse { young } => young.phi_kinks(),
            PhiForm::Sampled { grid } => grid.breakpoints()[1..].to_vec(),
            PhiForm::Max { parts } => {
                let mut v: Vec<f64> = parts.iter().flat_map(|f| f.nodes()).collect();
                for (i, a) in parts.iter().enumerate() {
                    for b in &parts[i + 1..] {
                        if let (PhiForm::Power { exponent: ea }, PhiForm::Power { exponent: eb }) = (&a.form, &b.form) {
                            if ea != eb {
                                v.push((a.scale / b.scale).powf(1.0 / (eb - ea)));
                            }
                        }
                    }
                }
                v
            }
            PhiForm::Psi { base, .. } => {
                let mut v = base.nodes();
                v.push(1.0);
                v
            }
        };
        if let Some(c) = self.cap {
            out.retain(|&x| x < c);
            out.push(c);
        }
        out.retain(|x| x.is_finite() && *x > 0.0);
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// True when, between consecutive nodes, every norm-side supremum of
    /// the shape `(A + B t)·φ(t)^P/t` is attained at an end point.
    pub fn piecewise_exact(&self) -> bool {
        match &self.form {
            PhiForm::Power { .. } | PhiForm::Sampled { .. } => true,
            PhiForm::OrliczInverse { young } => young.is_power().is_some(),
            PhiForm::PowerLog { .. } => false,
            PhiForm::Max { parts } => parts.iter().all(|f| f.piecewise_exact()),
            PhiForm::Psi { base, .. } => base.piecewise_exact(),
        }
    }

    /// The exponent when `φ = c·t^a` on the whole half-line.
    pub fn as_power(&self) -> Option<f64> {
        if self.cap.is_some() {
            return None;
        }
        match &self.form {
            PhiForm::Power { exponent } => Some(*exponent),
            PhiForm::OrliczInverse { young } => young.is_power().map(|r| 1.0 / r),
            _ => None,
        }
    }

    /// Exponents of all power pieces when `φ` is an uncapped maximum of
    /// powers (or a single power).
    pub(crate) fn power_pieces(&self) -> Option<Vec<f64>> {
        if let Some(a) = self.as_power() {
            return Some(vec![a]);
        }
        match &self.form {
            PhiForm::Max { parts } if self.cap.is_none() => {
                let mut v = Vec::new();
                for part in parts {
                    v.extend(part.power_pieces()?);
                }
                Some(v)
            }
            _ => None,
        }
    }

    /// `φ(0+)`.
    pub fn at_zero(&self) -> f64 {
        let raw = match &self.form {
            PhiForm::Power { exponent } => {
                if *exponent == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PhiForm::PowerLog { .. } | PhiForm::OrliczInverse { .. } | PhiForm::Sampled { .. } => 0.0,
            PhiForm::Max { parts } => parts.iter().map(|f| f.at_zero()).fold(0.0, f64::max) / self.scale,
            PhiForm::Psi { base, .. } => base.at_zero() / self.scale,
        };
        self.scale * raw
    }

    /// `φ(∞)` (possibly infinite).
    pub fn at_infinity(&self) -> f64 {
        if let Some(c) = self.cap {
            return self.eval(c);
        }
        match &self.form {
            PhiForm::Power { exponent } if *exponent == 0.0 => self.scale,
            PhiForm::Sampled { grid } => self.scale * grid.values().last().unwrap(),
            PhiForm::Max { parts } => parts.iter().map(|f| f.at_infinity()).fold(0.0, f64::max) * self.scale,
            PhiForm::Psi { base, .. } => base.at_infinity() * self.scale,
            _ => f64::INFINITY,
        }
    }

    /// A point beyond which `φ` is constant, when one exists.
    pub(crate) fn flat_from(&self) -> Option<f64> {
        if let Some(c) = self.cap {
            return Some(c);
        }
        match &self.form {
            PhiForm::Power { exponent } if *exponent == 0.0 => Some(0.0),
            PhiForm::Sampled { grid } => Some(grid.span()),
            PhiForm::Max { parts } => parts.iter().map(|f| f.flat_from()).try_fold(0.0f64, |m, x| x.map(|x| m.max(x))),
            PhiForm::Psi { base, .. } => base.flat_from().map(|x| x.max(1.0)),
            _ => None,
        }
    }

    /// `∫_a^b φ(t)^q dt/t` for `0 ≤ a < b ≤ ∞`.
    pub fn pow_integral_over_t(&self, q: f64, a: f64, b: f64) -> Ext {
        if b <= a {
            return Ext::ZERO;
        }
        if let Some(flat) = self.flat_from() {
            if b > flat {
                let k = self.at_infinity().powf(q);
                let lo = flat.max(a);
                let tail = if b.is_infinite() || lo == 0.0 {
                    if k > 0.0 {
                        Ext::Infinite
                    } else {
                        Ext::ZERO
                    }
                } else {
                    Ext::from_f64(k * (b / lo).ln())
                };
                return self.pow_integral_over_t(q, a, flat.max(a)).add(tail);
            }
        }
        if b.is_infinite() {
            return if self.at_infinity() > 0.0 { Ext::Infinite } else { Ext::ZERO };
        }
        if let PhiForm::Power { exponent } = self.form {
            // flat_from already handled exponent 0 and caps
            let e = exponent * q;
            return Ext::from_f64(self.scale.powf(q) * (b.powf(e) - a.powf(e)) / e);
        }
        let nodes = self.nodes();
        let f = |t: f64| self.eval(t).powf(q) / t;
        if a == 0.0 {
            if self.at_zero() > 0.0 {
                return Ext::Infinite;
            }
            quad::integrate_from_zero(b, f, &nodes).value
        } else {
            Ext::from_f64(quad::integrate(a, b, f, &nodes))
        }
    }
}
