use super::space::Mms;
use crate::error::{Error, Result};
use crate::ext::{self, Ext};
use petgraph::algo::{all_simple_paths, astar};
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::hash::RandomState;

/// Relative slack in the upper-gradient inequality.
pub const UG_TOL: f64 = 1e-12;

/// A polygonal curve through consecutive distinct points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curve {
    vertices: Vec<usize>,
}

impl Curve {
    pub fn new(space: &Mms, vertices: Vec<usize>) -> Result<Curve> {
        if vertices.len() < 2 {
            return Err(Error::invalid("a curve needs at least two vertices"));
        }
        if let Some(v) = vertices.iter().find(|&&v| v >= space.len()) {
            return Err(Error::invalid(format!("curve vertex {v} out of range")));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("consecutive curve vertices must differ"));
        }
        Ok(Curve { vertices })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().unwrap()
    }

    pub fn length(&self, space: &Mms) -> f64 {
        self.vertices.windows(2).map(|w| space.d(w[0], w[1])).sum()
    }

    /// Trapezoid weights: `∫_γ g = Σ_i w_i g_i`, one entry per distinct vertex.
    pub fn trapezoid_weights(&self, space: &Mms) -> Vec<(usize, f64)> {
        let mut acc: Vec<(usize, f64)> = Vec::with_capacity(self.vertices.len());
        let mut add = |i: usize, w: f64| match acc.iter_mut().find(|(j, _)| *j == i) {
            Some(slot) => slot.1 += w,
            None => acc.push((i, w)),
        };
        for w in self.vertices.windows(2) {
            let half = 0.5 * space.d(w[0], w[1]);
            add(w[0], half);
            add(w[1], half);
        }
        acc.sort_by_key(|e| e.0);
        acc
    }

    /// Contiguous pieces with at least two vertices, including the curve itself.
    pub fn subcurves(&self) -> Vec<Curve> {
        let n = self.vertices.len();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 2..=n {
                out.push(Curve { vertices: self.vertices[a..b].to_vec() });
            }
        }
        out
    }

    fn reversed(&self) -> Curve {
        Curve { vertices: self.vertices.iter().rev().copied().collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyGenerator {
    Explicit,
    ShortestPaths,
    KHop { k: usize },
    Pairs,
    Empty,
}

/// A finite family of curves together with how it was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFamily {
    pub curves: Vec<Curve>,
    pub generator: FamilyGenerator,
}

fn graph_of(space: &Mms) -> (UnGraph<(), f64>, Vec<NodeIndex>) {
    let mut g = UnGraph::<(), f64>::new_undirected();
    let nodes: Vec<NodeIndex> = (0..space.len()).map(|_| g.add_node(())).collect();
    for (a, b) in space.edges() {
        g.add_edge(nodes[a], nodes[b], space.d(a, b));
    }
    (g, nodes)
}

impl CurveFamily {
    /// The empty family, for which every function has the zero upper gradient.
    pub fn empty() -> CurveFamily {
        CurveFamily { curves: Vec::new(), generator: FamilyGenerator::Empty }
    }

    pub fn explicit(space: &Mms, lists: Vec<Vec<usize>>) -> Result<CurveFamily> {
        let curves = lists.into_iter().map(|v| Curve::new(space, v)).collect::<Result<Vec<_>>>()?;
        Ok(CurveFamily { curves, generator: FamilyGenerator::Explicit })
    }

    /// One shortest path along the edge set (or the complete graph) per unordered pair.
    pub fn shortest_paths(space: &Mms) -> Result<CurveFamily> {
        let (g, nodes) = graph_of(space);
        let mut curves = Vec::new();
        for i in 0..space.len() {
            for j in i + 1..space.len() {
                let (_, path) = astar(&g, nodes[i], |v| v == nodes[j], |e| *e.weight(), |_| 0.0)
                    .ok_or_else(|| Error::invalid(format!("no path from {i} to {j}")))?;
                curves.push(Curve { vertices: path.into_iter().map(|v| v.index()).collect() });
            }
        }
        Ok(CurveFamily { curves, generator: FamilyGenerator::ShortestPaths })
    }

    /// Every simple path with between one and `k` edges, one orientation per path.
    pub fn k_hop(space: &Mms, k: usize) -> Result<CurveFamily> {
        if k == 0 {
            return Err(Error::invalid("k-hop families need k >= 1"));
        }
        let (g, nodes) = graph_of(space);
        let mut curves = Vec::new();
        for i in 0..space.len() {
            for j in i + 1..space.len() {
                let paths = all_simple_paths::<Vec<NodeIndex>, _, RandomState>(&g, nodes[i], nodes[j], 0, Some(k - 1));
                let mut found: Vec<Curve> =
                    paths.map(|p| Curve { vertices: p.into_iter().map(|v| v.index()).collect() }).collect();
                found.sort();
                curves.extend(found);
            }
        }
        Ok(CurveFamily { curves, generator: FamilyGenerator::KHop { k } })
    }

    /// All two-vertex curves.
    pub fn pairs(space: &Mms) -> CurveFamily {
        let curves = (0..space.len())
            .flat_map(|i| (i + 1..space.len()).map(move |j| Curve { vertices: vec![i, j] }))
            .collect();
        CurveFamily { curves, generator: FamilyGenerator::Pairs }
    }

    /// Close the family under taking subcurves.
    pub fn with_subcurves(&self) -> CurveFamily {
        let mut seen = BTreeSet::new();
        let mut curves = Vec::new();
        for c in &self.curves {
            for s in c.subcurves() {
                let key = s.clone().min(s.reversed());
                if seen.insert(key) {
                    curves.push(s);
                }
            }
        }
        CurveFamily { curves, generator: self.generator.clone() }
    }

    /// Whether every subcurve of every member (in either orientation) is a member.
    pub fn closed_under_subcurves(&self) -> bool {
        let have: HashSet<&Curve> = self.curves.iter().collect();
        self.curves.iter().all(|c| {
            c.subcurves().iter().all(|s| have.contains(s) || have.contains(&s.reversed()))
        })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }
}

pub(crate) fn integrate_unchecked(space: &Mms, g: &[f64], curve: &Curve) -> Ext {
    let mut total = 0.0;
    for w in curve.vertices.windows(2) {
        let (a, b) = (g[w[0]], g[w[1]]);
        if a.is_infinite() || b.is_infinite() {
            return Ext::Infinite;
        }
        total += space.d(w[0], w[1]) * 0.5 * (a + b);
    }
    Ext::Finite(total)
}

/// Trapezoid-rule line integral of `g ≥ 0` along `curve`.
pub fn line_integral(space: &Mms, g: &[f64], curve: &Curve) -> Result<Ext> {
    space.check_nonneg(g, "integrand")?;
    if let Some(v) = curve.vertices.iter().find(|&&v| v >= space.len()) {
        return Err(Error::invalid(format!("curve vertex {v} out of range")));
    }
    Ok(integrate_unchecked(space, g, curve))
}

/// Outcome of checking `|u(start) − u(end)| ≤ ∫_γ g` over a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperGradientVerdict {
    pub holds: bool,
    /// Curve with the largest excess of the left side over the right side.
    pub worst_curve: Option<usize>,
    /// That excess; nonpositive when the inequality holds everywhere.
    #[serde(with = "ext::scalar")]
    pub excess: f64,
}

fn endpoint_gap(u: &[f64], curve: &Curve) -> f64 {
    let (a, b) = (u[curve.start()], u[curve.end()]);
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        (a - b).abs()
    }
}

pub fn is_upper_gradient(space: &Mms, u: &[f64], g: &[f64], family: &CurveFamily) -> Result<UpperGradientVerdict> {
    space.check_fn(u, "function")?;
    space.check_nonneg(g, "gradient")?;
    let mut verdict = UpperGradientVerdict { holds: true, worst_curve: None, excess: f64::NEG_INFINITY };
    for (k, curve) in family.curves.iter().enumerate() {
        let lhs = endpoint_gap(u, curve);
        let rhs = integrate_unchecked(space, g, curve);
        let (excess, ok) = match (lhs.is_infinite(), rhs) {
            (_, Ext::Infinite) => (if lhs.is_infinite() { 0.0 } else { f64::NEG_INFINITY }, true),
            (true, Ext::Finite(_)) => (f64::INFINITY, false),
            (false, Ext::Finite(r)) => (lhs - r, lhs <= r + UG_TOL * r.max(1.0)),
        };
        if excess > verdict.excess || verdict.worst_curve.is_none() {
            verdict.excess = excess;
            verdict.worst_curve = Some(k);
        }
        verdict.holds &= ok;
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> Mms {
        Mms::path(2).unwrap()
    }

    #[test]
    fn trapezoid_rule_examples() {
        let dist = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 2.0], vec![3.0, 2.0, 0.0]];
        let s = Mms::new(dist, vec![1.0; 3]).unwrap();
        let c = Curve::new(&s, vec![0, 1, 2]).unwrap();
        assert_eq!(line_integral(&s, &[0.0, 1.0, 0.0], &c).unwrap(), Ext::Finite(1.5));
        assert_eq!(line_integral(&s, &[2.0; 3], &c).unwrap(), Ext::Finite(6.0));
        assert_eq!(line_integral(&s, &[0.0; 3], &c).unwrap(), Ext::Finite(0.0));
        assert_eq!(line_integral(&s, &[0.0, f64::INFINITY, 0.0], &c).unwrap(), Ext::Infinite);
        assert!(line_integral(&s, &[0.0, -1.0, 0.0], &c).is_err());
        assert_eq!(c.trapezoid_weights(&s), vec![(0, 0.5), (1, 1.5), (2, 1.0)]);
    }

    #[test]
    fn upper_gradient_examples() {
        let s = two_point();
        let fam = CurveFamily::pairs(&s);
        let v = is_upper_gradient(&s, &[0.0, 1.0], &[1.0, 1.0], &fam).unwrap();
        assert!(v.holds);
        assert_eq!(v.excess, 0.0);
        let v = is_upper_gradient(&s, &[0.0, 1.0], &[0.9, 0.9], &fam).unwrap();
        assert!(!v.holds);
        assert!((v.excess - 0.1).abs() < 1e-15);
        assert_eq!(v.worst_curve, Some(0));
        assert!(is_upper_gradient(&s, &[2.0, 2.0], &[0.0, 0.0], &fam).unwrap().holds);
        let v = is_upper_gradient(&s, &[f64::INFINITY, 0.0], &[1.0, 1.0], &fam).unwrap();
        assert!(!v.holds);
        let v = is_upper_gradient(&s, &[f64::INFINITY, 0.0], &[f64::INFINITY, 1.0], &fam).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn families_from_graphs() {
        let p = Mms::path(4).unwrap();
        let sp = CurveFamily::shortest_paths(&p).unwrap();
        assert_eq!(sp.len(), 6);
        assert!(sp.curves.iter().all(|c| (c.length(&p) - p.d(c.start(), c.end())).abs() < 1e-15));
        let hop = CurveFamily::k_hop(&p, 2).unwrap();
        assert_eq!(hop.len(), 5);
        let g = Mms::grid(2, 2).unwrap();
        assert_eq!(CurveFamily::k_hop(&g, 3).unwrap().len(), 12);
        assert!(!CurveFamily::explicit(&p, vec![vec![0, 1, 2]]).unwrap().closed_under_subcurves());
        let closed = CurveFamily::explicit(&p, vec![vec![0, 1, 2]]).unwrap().with_subcurves();
        assert_eq!(closed.len(), 3);
        assert!(closed.closed_under_subcurves());
        assert!(CurveFamily::pairs(&p).closed_under_subcurves());
    }
}
