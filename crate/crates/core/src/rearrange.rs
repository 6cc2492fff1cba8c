//! Distribution functions, decreasing rearrangements, elementary maximal
//! functions and superlevel sets of prescribed measure.
//!
//! A finite weighted sample set plays the role of the measure space. All
//! operations are exact up to floating-point summation: rearrangement is a
//! stable sort by magnitude (ties by ascending index) followed by a running
//! sum of weights.

use crate::error::{Error, Result};
use crate::ext::{self, Ext};
use serde::{Deserialize, Serialize};

/// Absolute tolerance on accumulated weights when matching a target
/// measure.
pub const MEASURE_TOL: f64 = 1e-12;

/// Piecewise-constant nonnegative function on `(0, ∞)`.
///
/// Cell `i` is `(t_i, t_{i+1}]` with value `values[i]`; beyond the last
/// breakpoint the function equals `tail`. `f64::INFINITY` marks a cell on
/// which the function is `+∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFn", into = "RawGridFn")]
pub struct GridFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    tail: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGridFn {
    breakpoints: Vec<f64>,
    #[serde(with = "ext::vec")]
    values: Vec<f64>,
    #[serde(default)]
    tail: f64,
}

impl TryFrom<RawGridFn> for GridFn {
    type Error = Error;
    fn try_from(r: RawGridFn) -> Result<GridFn> {
        GridFn::new(r.breakpoints, r.values, r.tail)
    }
}

impl From<GridFn> for RawGridFn {
    fn from(g: GridFn) -> RawGridFn {
        RawGridFn {
            breakpoints: g.breakpoints,
            values: g.values,
            tail: g.tail,
        }
    }
}

impl GridFn {
    /// `breakpoints` must start at 0 and increase strictly; `values` has
    /// one entry per cell.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, tail: f64) -> Result<GridFn> {
        if breakpoints.is_empty() || breakpoints[0] != 0.0 {
            return Err(Error::invalid("breakpoints must start at 0"));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::invalid(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid("breakpoints must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("breakpoints must increase strictly"));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::invalid("cell values must be nonnegative"));
        }
        if !(tail.is_finite() && tail >= 0.0) {
            return Err(Error::invalid("tail must be a finite nonnegative constant"));
        }
        Ok(GridFn {
            breakpoints,
            values,
            tail,
        })
    }

    /// Builds from right cell ends `t_1 < … < t_N` (the leading 0 is implied).
    pub fn from_steps(ends: &[f64], values: &[f64]) -> Result<GridFn> {
        let mut bp = Vec::with_capacity(ends.len() + 1);
        bp.push(0.0);
        bp.extend_from_slice(ends);
        GridFn::new(bp, values.to_vec(), 0.0)
    }

    /// `c·χ_(0,a]`.
    pub fn indicator(a: f64, c: f64) -> Result<GridFn> {
        GridFn::new(vec![0.0, a], vec![c], 0.0)
    }

    pub fn zero() -> GridFn {
        GridFn {
            breakpoints: vec![0.0],
            values: Vec::new(),
            tail: 0.0,
        }
    }

    /// Samples a decreasing function on `(0, top]` over a geometric grid
    /// with `per_octave` cells per halving, down to `top·2^{-octaves}`.
    /// Each cell carries the value at its geometric midpoint; the first
    /// cell `(0, t_min]` carries `f(t_min)`.
    pub fn sample_decreasing(f: impl Fn(f64) -> f64, top: f64, octaves: usize, per_octave: usize) -> Result<GridFn> {
        let per = per_octave.max(1);
        let n = octaves * per;
        let ratio = 2f64.powf(1.0 / per as f64);
        let mut ends: Vec<f64> = (0..=n).map(|i| top * ratio.powi(i as i32 - n as i32)).collect();
        *ends.last_mut().unwrap() = top;
        let mut values = Vec::with_capacity(n + 1);
        values.push(f(ends[0]));
        for w in ends.windows(2) {
            values.push(f((w[0] * w[1]).sqrt()));
        }
        GridFn::from_steps(&ends, &values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Right end of the last cell.
    pub fn span(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn has_infinite(&self) -> bool {
        self.values.iter().any(|v| v.is_infinite())
    }

    pub fn is_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
            && self.values.last().map_or(true, |&v| self.tail <= v)
    }

    /// Value on the cell containing `t` (cells are `(t_{i-1}, t_i]`).
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values.first().copied().unwrap_or(self.tail);
        }
        match self.breakpoints.partition_point(|&b| b < t) {
            0 => self.values.first().copied().unwrap_or(self.tail),
            i if i < self.breakpoints.len() => self.values[i - 1],
            _ => self.tail,
        }
    }

    /// `∫_0^t f^p`, with the marker for any `+∞` cell of positive overlap.
    pub fn integral_pow(&self, p: f64, t: f64) -> Ext {
        let mut acc = 0.0;
        for (lo, hi, v) in self.cells() {
            if lo >= t {
                return Ext::from_f64(acc);
            }
            let len = hi.min(t) - lo;
            if v.is_infinite() {
                return Ext::Infinite;
            }
            if v > 0.0 {
                acc += v.powf(p) * len;
            }
        }
        if t > self.span() && self.tail > 0.0 {
            if t.is_infinite() {
                return Ext::Infinite;
            }
            acc += self.tail.powf(p) * (t - self.span());
        }
        Ext::from_f64(acc)
    }

    /// The decreasing rearrangement of this function with respect to
    /// Lebesgue measure. Cells whose value is at most a positive tail sit
    /// "at infinity" and drop out.
    pub fn rearranged(&self) -> GridFn {
        if self.is_decreasing() {
            return self.clone();
        }
        let mut cells: Vec<(f64, f64)> = self
            .cells()
            .filter(|&(_, _, v)| v > self.tail)
            .map(|(lo, hi, v)| (v, hi - lo))
            .collect();
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut bp = vec![0.0];
        let mut vals: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (v, len) in cells {
            acc += len;
            if vals.last() == Some(&v) {
                *bp.last_mut().unwrap() = acc;
            } else {
                bp.push(acc);
                vals.push(v);
            }
        }
        GridFn {
            breakpoints: bp,
            values: vals,
            tail: self.tail,
        }
    }

    /// Rows `(t_lo, t_hi, value)`; the tail is emitted with `t_hi = inf`
    /// when it is nonzero.
    pub fn csv_rows(&self) -> Vec<(f64, f64, f64)> {
        let mut rows: Vec<_> = self.cells().collect();
        if self.tail != 0.0 {
            rows.push((self.span(), f64::INFINITY, self.tail));
        }
        rows
    }

    pub(crate) fn with_breakpoints_scaled(&self, factor: f64) -> GridFn {
        GridFn {
            breakpoints: self.breakpoints.iter().map(|b| b * factor).collect(),
            values: self.values.clone(),
            tail: self.tail,
        }
    }
}

/// A function on a finite weighted point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSamples", into = "RawSamples")]
pub struct WeightedSamples {
    values: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSamples {
    #[serde(with = "ext::vec")]
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawSamples> for WeightedSamples {
    type Error = Error;
    fn try_from(r: RawSamples) -> Result<WeightedSamples> {
        WeightedSamples::new(r.values, r.weights)
    }
}

impl From<WeightedSamples> for RawSamples {
    fn from(s: WeightedSamples) -> RawSamples {
        RawSamples {
            values: s.values,
            weights: s.weights,
        }
    }
}

impl WeightedSamples {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<WeightedSamples> {
        if values.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("weights must be finite and strictly positive"));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("values must not be NaN"));
        }
        Ok(WeightedSamples { values, weights })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Indices ordered by decreasing magnitude, ties by ascending index.
    fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| self.values[b].abs().total_cmp(&self.values[a].abs()));
        idx
    }
}

/// `μ_u(t)`: total weight of `{|u| > t}`.
pub fn distribution(u: &WeightedSamples, t: f64) -> f64 {
    u.values
        .iter()
        .zip(&u.weights)
        .filter(|(v, _)| v.abs() > t)
        .map(|(_, w)| w)
        .sum()
}

/// `u*` as a decreasing step function; equal magnitudes share one cell
/// and zero values are dropped (the function vanishes after them).
pub fn decreasing_rearrangement(u: &WeightedSamples) -> GridFn {
    let mut bp = vec![0.0];
    let mut vals: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    for i in u.order() {
        let v = u.values[i].abs();
        if v == 0.0 {
            break;
        }
        acc += u.weights[i];
        if vals.last() == Some(&v) {
            *bp.last_mut().unwrap() = acc;
        } else {
            bp.push(acc);
            vals.push(v);
        }
    }
    GridFn {
        breakpoints: bp,
        values: vals,
        tail: 0.0,
    }
}

/// `u**(t) = (1/t)∫_0^t u*`.
pub fn star_star(ustar: &GridFn, t: f64) -> Result<Ext> {
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    Ok(ustar.integral_pow(1.0, t).map(|s| s / t))
}

/// A set of prescribed measure sandwiched between the strict and the
/// non-strict superlevel set at the level `u*(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperlevelSet {
    pub indices: Vec<usize>,
    pub target_measure: f64,
    pub measure: f64,
    pub level: f64,
}

/// Returns a canonical member of the family of sets `A` with measure `t`
/// and `{|u| > u*(t)} ⊆ A ⊆ {|u| ≥ u*(t)}`. Among tied magnitudes, lower
/// indices are taken first.
pub fn superlevel_family(u: &WeightedSamples, t: f64) -> Result<SuperlevelSet> {
    let total = u.total_weight();
    if !(t >= 0.0) || t > total + MEASURE_TOL {
        return Err(Error::invalid(format!("measure {t} outside [0, {total}]")));
    }
    let order = u.order();
    let mag = |pos: usize| u.values[order[pos]].abs();
    if t <= MEASURE_TOL {
        let level = if order.is_empty() { 0.0 } else { mag(0) };
        return Ok(SuperlevelSet {
            indices: Vec::new(),
            target_measure: t,
            measure: 0.0,
            level,
        });
    }
    let mut prefix = vec![0.0];
    for &i in &order {
        prefix.push(prefix.last().unwrap() + u.weights[i]);
    }
    if let Some(k) = (1..prefix.len()).find(|&k| (prefix[k] - t).abs() <= MEASURE_TOL) {
        let mut indices = order[..k].to_vec();
        indices.sort_unstable();
        return Ok(SuperlevelSet {
            indices,
            target_measure: t,
            measure: prefix[k],
            level: mag(k - 1),
        });
    }
    // The cut falls strictly inside position k.
    let k = (0..order.len()).find(|&k| prefix[k + 1] > t).unwrap_or(order.len() - 1);
    let level = mag(k);
    let g0 = (0..=k).find(|&j| mag(j) == level).unwrap();
    let g1 = (k..order.len()).take_while(|&j| mag(j) == level).last().unwrap() + 1;
    let group: Vec<usize> = order[g0..g1].to_vec();
    let need = t - prefix[g0];
    let not_attainable = Error::NotAttainable {
        target: t,
        below: prefix[k],
        above: prefix[k + 1],
    };
    if group.len() > 24 {
        return Err(not_attainable);
    }
    let weights: Vec<f64> = group.iter().map(|&i| u.weights[i]).collect();
    let mut chosen = Vec::new();
    if !subset_with_sum(&weights, 0, need, &mut chosen) {
        return Err(not_attainable);
    }
    let mut indices: Vec<usize> = order[..g0].to_vec();
    indices.extend(chosen.iter().map(|&j| group[j]));
    indices.sort_unstable();
    let measure = indices.iter().map(|&i| u.weights[i]).sum();
    Ok(SuperlevelSet {
        indices,
        target_measure: t,
        measure,
        level,
    })
}

/// Depth-first search preferring inclusion of earlier members, so the
/// first hit is the lexicographically lowest index set.
fn subset_with_sum(w: &[f64], from: usize, need: f64, chosen: &mut Vec<usize>) -> bool {
    if need.abs() <= MEASURE_TOL {
        return true;
    }
    if need < 0.0 || from == w.len() {
        return false;
    }
    let rest: f64 = w[from..].iter().sum();
    if rest + MEASURE_TOL < need {
        return false;
    }
    chosen.push(from);
    if subset_with_sum(w, from + 1, need - w[from], chosen) {
        return true;
    }
    chosen.pop();
    subset_with_sum(w, from + 1, need, chosen)
}
