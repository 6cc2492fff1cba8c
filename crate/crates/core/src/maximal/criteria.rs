use super::indices::{closed_form_alpha, default_s_grid, zippin_upper};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::quad::{self, RefineStep, Refined};
use crate::spaces::{phi_of, FundamentalFn, NormSpec, PhiForm};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Samples per octave for sampled suprema.
const PER_OCTAVE: usize = 8;
/// Octaves below `δ` scanned by grid-based shape checks.
const SHAPE_OCTAVES: i32 = 60;
const SHAPE_PER_OCTAVE: i32 = 16;
/// Index estimates must clear `1/p` by this much before they certify.
const INDEX_MARGIN: f64 = 1e-9;
const EXACT_TOL: f64 = 1e-12;

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("p = {p} must be finite and at least 1")))
    }
}

/// `sup_{0<t<δ} φ(t)^p ⨍_0^t φ^{-p}`, classified with the refinement rule.
pub fn criterion_b(phi: &FundamentalFn, p: f64, delta: f64) -> Result<Refined> {
    check_p(p)?;
    phi.validate()?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1]")));
    }
    if let Some(a) = phi.as_power() {
        return Ok(if a * p < 1.0 { Refined::exact(1.0 / (1.0 - a * p)) } else { Refined::infinite() });
    }
    let nodes = phi.nodes();
    Ok(quad::refine_by_depth(|depth| {
        // w = (1/t) ∫_{t_D}^t (φ(t)/φ(s))^p ds, carried upward octave by octave
        let mut w = 0.0f64;
        let mut best = 0.0f64;
        for k in (0..depth).rev() {
            let hi = delta * 0.5f64.powi(k as i32);
            let lo = 0.5 * hi;
            let (f_lo, f_hi) = (phi.eval(lo), phi.eval(hi));
            if !(f_lo > 0.0) {
                return f64::INFINITY;
            }
            let mut acc = 0.0; // ∫_lo^t (φ(hi)/φ(s))^p ds
            let mut prev = lo;
            for j in (0..PER_OCTAVE).rev() {
                let t = hi * 2f64.powf(-(j as f64) / PER_OCTAVE as f64);
                acc += quad::integrate(prev, t, |s| (f_hi / phi.eval(s)).powf(p), &nodes);
                prev = t;
                let ft = phi.eval(t);
                let v = (ft / f_lo).powf(p) * (lo / t) * w + (ft / f_hi).powf(p) * acc / t;
                best = best.max(v);
                if j == 0 {
                    w = v;
                }
            }
        }
        best
    }))
}

/// `‖m_φ‖_{L^p(0,1)}` with `m_φ(s) = sup_{0<t<1} φ(t)/φ(st)`. The trace
/// holds partial values of `∫ m_φ^p`.
pub fn m_phi_norm(phi: &FundamentalFn, p: f64) -> Result<Refined> {
    check_p(p)?;
    phi.validate()?;
    if let Some(a) = phi.as_power() {
        return Ok(if a * p < 1.0 { Refined::exact((1.0 / (1.0 - a * p)).powf(1.0 / p)) } else { Refined::infinite() });
    }
    let nodes: Vec<f64> = phi.nodes().into_iter().filter(|&t| t < 1.0).collect();
    let mut base: Vec<f64> = (0..=SHAPE_OCTAVES * PER_OCTAVE as i32)
        .map(|i| 2f64.powf(-(i as f64) / PER_OCTAVE as f64))
        .collect();
    base.extend(&nodes);
    let m = |s: f64| {
        let mut best = 1.0f64;
        let shifted = nodes.iter().map(|x| x / s).filter(|&t| t < 1.0);
        for t in base.iter().copied().chain(shifted) {
            let den = phi.eval(s * t);
            if !(den > 0.0) {
                return f64::INFINITY;
            }
            best = best.max(phi.eval(t) / den);
        }
        best.powf(p)
    };
    let mut r = quad::integrate_from_zero(1.0, m, &nodes);
    r.value = r.value.map(|x| x.powf(1.0 / p));
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

impl Verdict {
    fn label(self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One condition with its certificate: the computed quantity, a witness
/// exponent when one exists, and how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub statement: String,
    pub verdict: Verdict,
    pub value: Option<Ext>,
    pub witness: Option<f64>,
    pub note: String,
}

impl Condition {
    fn new(id: &str, statement: &str) -> Condition {
        Condition {
            id: id.into(),
            statement: statement.into(),
            verdict: Verdict::Inconclusive,
            value: None,
            witness: None,
            note: String::new(),
        }
    }

    fn set(mut self, verdict: Verdict, note: impl Into<String>) -> Condition {
        self.verdict = verdict;
        self.note = note.into();
        self
    }

    fn value(mut self, v: Ext) -> Condition {
        self.value = Some(v);
        self
    }

    fn witness(mut self, q: f64) -> Condition {
        self.witness = Some(q);
        self
    }
}

/// Implications between conditions that every report must respect.
pub const IMPLICATIONS: [(&str, &str); 11] = [
    ("ii", "i"),
    ("v", "iv"),
    ("vi", "iv"),
    ("vii", "iv"),
    ("viii", "vii"),
    ("v", "vi"),
    ("ix", "viii"),
    ("c-i", "c-ii"),
    ("c-iv", "c-iii"),
    ("viii", "c-iii"),
    ("ix", "c-iv"),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub spec: NormSpec,
    pub p: f64,
    pub delta: f64,
    pub complete_space: bool,
    pub absolutely_continuous: bool,
    pub normable: bool,
    /// Conditions `i`–`ix` for a general Poincaré space.
    pub conditions: Vec<Condition>,
    /// The relaxed conditions `c-i`–`c-iv` for complete spaces; empty
    /// unless requested.
    pub complete_conditions: Vec<Condition>,
    pub density: bool,
    /// First condition that certifies density.
    pub route: Option<String>,
    pub warnings: Vec<String>,
}

impl CriteriaReport {
    pub fn condition(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().chain(&self.complete_conditions).find(|c| c.id == id)
    }

    /// Pairs `(a, b)` with `a` true and `b` false.
    pub fn implication_violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (a, b) in IMPLICATIONS {
            if let (Some(ca), Some(cb)) = (self.condition(a), self.condition(b)) {
                if ca.verdict == Verdict::True && cb.verdict == Verdict::False {
                    out.push((a.to_string(), b.to_string()));
                }
            }
        }
        out
    }

    /// One row per condition: id, verdict, value, witness, note.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<6} {:<13} {:<24} {:<10} note", "id", "verdict", "value", "witness");
        for c in self.conditions.iter().chain(&self.complete_conditions) {
            let value = c.value.map_or("-".to_string(), |v| v.to_string());
            let witness = c.witness.map_or("-".to_string(), |q| format!("{q}"));
            let _ = writeln!(s, "{:<6} {:<13} {:<24} {:<10} {}", c.id, c.verdict.label(), value, witness, c.note);
        }
        let _ = writeln!(
            s,
            "density: {} (absolutely continuous: {}, normable: {}, route: {})",
            self.density,
            self.absolutely_continuous,
            self.normable,
            self.route.as_deref().unwrap_or("-")
        );
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

/// `(r, s)` when the space is `L^{r,s}` up to equivalent quasi-norms.
pub fn lorentz_type(spec: &NormSpec) -> Option<(f64, f64)> {
    let power = |phi: &FundamentalFn| phi.as_power().filter(|&a| a > 0.0);
    match spec {
        NormSpec::Lp { p } => Some((*p, *p)),
        NormSpec::LorentzPq { p, q } => Some((*p, *q)),
        NormSpec::LorentzPInf { p } => Some((*p, f64::INFINITY)),
        NormSpec::LambdaPhi { phi } => power(phi).map(|a| (1.0 / a, 1.0)),
        NormSpec::LambdaQPhi { phi, q } => power(phi).map(|a| (1.0 / a, *q)),
        NormSpec::Marcinkiewicz { phi } => power(phi).map(|a| if a == 1.0 { (1.0, 1.0) } else { (1.0 / a, f64::INFINITY) }),
        NormSpec::WeakMarcinkiewicz { phi } => power(phi).map(|a| (1.0 / a, f64::INFINITY)),
        NormSpec::MarcinkiewiczP { phi, p } => power(phi).and_then(|a| {
            if a < 1.0 / p {
                Some((1.0 / a, f64::INFINITY))
            } else if a == 1.0 / p {
                Some((*p, *p))
            } else {
                None
            }
        }),
        NormSpec::OrliczLux { psi } => psi.is_power().map(|r| (r, r)),
        _ => None,
    }
}

/// Whether the family admits an equivalent norm (so that it is a genuine
/// rearrangement-invariant Banach function space).
pub fn normable(spec: &NormSpec) -> bool {
    let lorentz = |r: f64, s: f64| s >= 1.0 && (r > 1.0 || s <= r);
    match spec {
        NormSpec::IntersectionMax { parts } => parts.iter().all(normable),
        NormSpec::Lp { .. } | NormSpec::OrliczLux { .. } => true,
        _ => match lorentz_type(spec) {
            Some((r, s)) => lorentz(r, s),
            None => !spec.quasi_only(),
        },
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXACT_TOL * a.abs().max(b.abs())
}

/// Embedding conditions for Lorentz-type spaces, in terms of `(r, s)`.
fn embedding_conditions(spec: &NormSpec, p: f64) -> [Condition; 3] {
    let c1 = Condition::new("i", "X embeds into M^p_loc(X)");
    let c2 = Condition::new("ii", "X embeds into Lambda^p_psi locally");
    let c3 = Condition::new("iii", "L^{p,1} embeds into X and X into L^p, locally");
    let Some((r, s)) = lorentz_type(spec) else {
        let note = "no embedding test for this family";
        return [c1.set(Verdict::Inconclusive, note), c2.set(Verdict::Inconclusive, note), c3.set(Verdict::Inconclusive, note)];
    };
    let at_p = same(r, p);
    let note = format!("X = L^({r},{s}) locally");
    let v1 = r > p && !at_p || at_p && s <= p;
    let v2 = (r > p || at_p) && s <= p;
    let v3 = at_p && s <= p;
    let b = |x: bool| if x { Verdict::True } else { Verdict::False };
    [c1.set(b(v1), note.clone()), c2.set(b(v2), note.clone()), c3.set(b(v3), note)]
}

/// Sup of the local exponent `t φ'(t)/φ(t)` on `(0, δ)`, when known in
/// closed form.
enum Shape {
    Power(f64),
    PowerLog { sup: f64, attained: bool },
    Grid,
}

fn shape(phi: &FundamentalFn, delta: f64) -> Shape {
    match &phi.form {
        PhiForm::Power { exponent } => Shape::Power(*exponent),
        PhiForm::OrliczInverse { young } if young.is_power().is_some() => Shape::Power(1.0 / young.is_power().unwrap()),
        PhiForm::PowerLog { exponent: a, log_exponent: b } if phi.cap.is_none() => {
            if *b >= 0.0 {
                Shape::PowerLog { sup: *a, attained: *b == 0.0 || delta > 1.0 }
            } else {
                let m = delta.min(1.0);
                Shape::PowerLog { sup: a - b / (1.0 - m.ln()), attained: delta > 1.0 }
            }
        }
        _ => Shape::Grid,
    }
}

fn shape_grid(phi: &FundamentalFn, delta: f64) -> Vec<f64> {
    let lo = delta * 2f64.powi(-SHAPE_OCTAVES);
    let mut ts: Vec<f64> = (0..=SHAPE_OCTAVES * SHAPE_PER_OCTAVE)
        .map(|i| delta * 2f64.powf(-(i as f64) / SHAPE_PER_OCTAVE as f64))
        .collect();
    ts.extend(phi.nodes().into_iter().filter(|&t| t > lo && t < delta));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Largest secant exponent `log(φ(b)/φ(a))/log(b/a)` over adjacent grid
/// points, with the pair attaining it.
fn secant_exponent(phi: &FundamentalFn, ts: &[f64]) -> (f64, (f64, f64)) {
    let mut best = (f64::NEG_INFINITY, (ts[0], ts[0]));
    for w in ts.windows(2) {
        let (a, b) = (phi.eval(w[0]), phi.eval(w[1]));
        let e = if a > 0.0 { (b / a).ln() / (w[1] / w[0]).ln() } else { f64::INFINITY };
        if e > best.0 {
            best = (e, (w[0], w[1]));
        }
    }
    best
}

/// Concavity of `φ^q` on the grid: slopes must not increase.
fn concave_on_grid(phi: &FundamentalFn, q: f64, ts: &[f64]) -> Option<(f64, f64)> {
    let vals: Vec<f64> = ts.iter().map(|&t| phi.eval(t).powf(q)).collect();
    let slope = |i: usize| (vals[i + 1] - vals[i]) / (ts[i + 1] - ts[i]);
    for i in 1..ts.len() - 1 {
        let (prev, next) = (slope(i - 1), slope(i));
        if next > prev + 1e-9 * prev.abs().max(next.abs()) {
            return Some((ts[i - 1], ts[i + 1]));
        }
    }
    None
}

/// Conditions on `φ^q`: concavity (`concave`) or monotonicity of `φ^q/t`,
/// for some `q > p` (`strict`) or for `q = p`.
fn shape_condition(phi: &FundamentalFn, p: f64, delta: f64, concave: bool, strict: bool, base: Condition) -> Condition {
    let target = 1.0 / p;
    match shape(phi, delta) {
        Shape::Power(a) => {
            let ok = if strict { a < target && !same(a, target) } else { a <= target || same(a, target) };
            let mut c = base.value(Ext::Finite(a));
            if ok && strict {
                c = c.witness(if a > 0.0 { 1.0 / a } else { 2.0 * p });
            }
            let v = if ok { Verdict::True } else { Verdict::False };
            c.set(v, "power: exponent of phi in closed form")
        }
        Shape::PowerLog { sup, attained } => {
            let c = base.value(Ext::Finite(sup));
            let ok = if strict { sup < target && !same(sup, target) } else { sup < target || same(sup, target) || (!attained && sup <= target) };
            if !ok {
                return c.set(Verdict::False, "power-log: supremum of the local exponent in closed form");
            }
            let q = if strict { 2.0 / (sup + target) } else { p };
            let c = if strict { c.witness(q) } else { c };
            if !concave {
                return c.set(Verdict::True, "power-log: supremum of the local exponent in closed form");
            }
            let ts = shape_grid(phi, delta);
            match concave_on_grid(phi, q, &ts) {
                None => c.set(Verdict::True, format!("concavity checked on {} grid points in [{:e}, {delta}]", ts.len(), ts[0])),
                Some(pair) => c.set(Verdict::False, format!("phi^{q} loses concavity on [{:e}, {:e}]", pair.0, pair.1)),
            }
        }
        Shape::Grid => {
            let ts = shape_grid(phi, delta);
            let (e, pair) = secant_exponent(phi, &ts);
            let c = base.value(Ext::from_f64(e));
            let grid_note = format!("{} grid points in [{:e}, {delta}]", ts.len(), ts[0]);
            let ok = if strict { e < target } else { e <= target * (1.0 + EXACT_TOL) };
            if !ok {
                return c.set(
                    Verdict::False,
                    format!("phi^q/t increases on [{:e}, {:e}] (secant exponent {e})", pair.0, pair.1),
                );
            }
            let q = if strict { 2.0 / (e + target) } else { p };
            let c = if strict { c.witness(q) } else { c };
            if !concave {
                return c.set(Verdict::True, grid_note);
            }
            match concave_on_grid(phi, q, &ts) {
                None => c.set(Verdict::True, grid_note),
                Some(pair) => c.set(Verdict::False, format!("phi^{q} loses concavity on [{:e}, {:e}]", pair.0, pair.1)),
            }
        }
    }
}

fn refined_condition(r: &Refined, base: Condition, what: &str) -> Condition {
    let depth = r.trace.last().map_or(0, |s: &RefineStep| s.depth);
    let grid = if r.trace.is_empty() { "closed form".to_string() } else { format!("{what}, {depth} octaves") };
    let c = base.value(r.value);
    match (r.value, r.converged) {
        (Ext::Infinite, _) => c.set(Verdict::False, format!("diverges ({grid})")),
        (Ext::Finite(_), true) => c.set(Verdict::True, grid),
        (Ext::Finite(_), false) => c.set(Verdict::Inconclusive, format!("refinement undecided ({grid})")),
    }
}

/// Evaluates every density condition for the space `spec` and exponent
/// `p`; with `complete_space` the relaxed conditions for complete spaces
/// are evaluated as well. `δ` bounds the window of the local conditions.
pub fn density_criteria_report(spec: &NormSpec, p: f64, complete_space: bool, delta: f64) -> Result<CriteriaReport> {
    check_p(p)?;
    spec.validate()?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta = {delta} must lie in (0, 1]")));
    }
    let phi = phi_of(spec)?;
    let target = 1.0 / p;
    let mut conditions: Vec<Condition> = embedding_conditions(spec, p).into();

    let b = criterion_b(&phi, p, delta)?;
    conditions.push(refined_condition(&b, Condition::new("iv", "phi^p times the mean of phi^-p is bounded near 0"), "dyadic octaves"));
    conditions.push(shape_condition(&phi, p, delta, true, true, Condition::new("v", "phi^q concave near 0 for some q > p")));
    conditions.push(shape_condition(&phi, p, delta, false, true, Condition::new("vi", "phi^q/t decreasing near 0 for some q > p")));
    let m = m_phi_norm(&phi, p)?;
    conditions.push(refined_condition(&m, Condition::new("vii", "m_phi in L^p(0,1)"), "dyadic octaves"));

    let s_grid = default_s_grid();
    let zippin = zippin_upper(&phi, &s_grid)?;
    let beta = Ext::Finite(zippin.beta);
    let beta_note = if zippin.exact {
        "exact".to_string()
    } else {
        format!("grid estimate over s in [{}, {:e}]", s_grid[0], s_grid[s_grid.len() - 1])
    };
    let viii = Condition::new("viii", "upper fundamental index < 1/p").value(beta);
    conditions.push(if zippin.exact {
        let v = if zippin.beta < target && !same(zippin.beta, target) { Verdict::True } else { Verdict::False };
        viii.set(v, beta_note.clone())
    } else if zippin.beta < target - INDEX_MARGIN {
        viii.set(Verdict::True, beta_note.clone())
    } else {
        viii.set(Verdict::Inconclusive, format!("{beta_note}; estimate does not clear 1/p"))
    });
    let alpha = closed_form_alpha(spec);
    let ix = Condition::new("ix", "upper Boyd index < 1/p");
    conditions.push(match alpha {
        Some(a) => {
            let v = if a < target && !same(a, target) { Verdict::True } else { Verdict::False };
            ix.value(Ext::Finite(a)).set(v, "closed form")
        }
        None if zippin.exact && (zippin.beta > target || same(zippin.beta, target)) => {
            ix.value(beta).set(Verdict::False, "Boyd index is at least the fundamental index, which is >= 1/p")
        }
        None => ix.set(Verdict::Inconclusive, "Boyd index is only bounded from below"),
    });

    let mut complete_conditions = Vec::new();
    if complete_space {
        complete_conditions.push(shape_condition(&phi, p, delta, true, false, Condition::new("c-i", "phi^p concave near 0")));
        complete_conditions.push(shape_condition(&phi, p, delta, false, false, Condition::new("c-ii", "phi^p/t decreasing near 0")));
        let ciii = Condition::new("c-iii", "upper fundamental index <= 1/p").value(beta);
        complete_conditions.push(if zippin.exact {
            let v = if zippin.beta <= target || same(zippin.beta, target) { Verdict::True } else { Verdict::False };
            ciii.set(v, beta_note.clone())
        } else if zippin.beta <= target - INDEX_MARGIN {
            ciii.set(Verdict::True, beta_note.clone())
        } else {
            ciii.set(Verdict::Inconclusive, format!("{beta_note}; estimate does not clear 1/p"))
        });
        let civ = Condition::new("c-iv", "upper Boyd index <= 1/p");
        complete_conditions.push(match alpha {
            Some(a) => {
                let v = if a <= target || same(a, target) { Verdict::True } else { Verdict::False };
                civ.value(Ext::Finite(a)).set(v, "closed form")
            }
            None if zippin.exact && zippin.beta > target && !same(zippin.beta, target) => {
                civ.value(beta).set(Verdict::False, "Boyd index is at least the fundamental index, which is > 1/p")
            }
            None => civ.set(Verdict::Inconclusive, "Boyd index is only bounded from below"),
        });
    }

    let mut report = CriteriaReport {
        spec: spec.clone(),
        p,
        delta,
        complete_space,
        absolutely_continuous: spec.absolutely_continuous(),
        normable: normable(spec),
        conditions,
        complete_conditions,
        density: false,
        route: None,
        warnings: Vec::new(),
    };
    propagate(&mut report);
    let route = report
        .conditions
        .iter()
        .chain(&report.complete_conditions)
        .find(|c| c.verdict == Verdict::True)
        .map(|c| c.id.clone());
    report.density = report.absolutely_continuous && report.normable && route.is_some();
    report.route = route;
    if let Some((r, s)) = lorentz_type(spec) {
        if s.is_infinite() && same(r, p) {
            report.warnings.push(format!("X is of type L^({r},inf) at the critical exponent; density can fail there"));
        }
    }
    if !report.absolutely_continuous {
        report.warnings.push("the norm is not absolutely continuous; no condition yields density".into());
    }
    if !report.normable {
        report.warnings.push("the space is only quasi-normed; no condition yields density".into());
    }
    Ok(report)
}

/// Upgrades inconclusive verdicts that a true condition implies.
fn propagate(report: &mut CriteriaReport) {
    for _ in 0..IMPLICATIONS.len() {
        for (a, b) in IMPLICATIONS {
            let holds = report.condition(a).is_some_and(|c| c.verdict == Verdict::True);
            if !holds {
                continue;
            }
            let target = report.conditions.iter_mut().chain(report.complete_conditions.iter_mut()).find(|c| c.id == b);
            if let Some(c) = target {
                if c.verdict == Verdict::Inconclusive {
                    c.verdict = Verdict::True;
                    c.note = format!("implied by ({a}); {}", c.note);
                }
            }
        }
    }
}
