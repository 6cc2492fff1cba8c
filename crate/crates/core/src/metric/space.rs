use crate::error::{Error, Result};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

/// Relative slack allowed in the triangle inequality.
pub const TRIANGLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct RawMms {
    dist: Vec<Vec<f64>>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<(usize, usize)>>,
}

/// A finite metric measure space: a distance matrix, point masses, and an
/// optional edge set used to enumerate curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMms", into = "RawMms")]
pub struct Mms {
    dist: Vec<Vec<f64>>,
    weights: Vec<f64>,
    labels: Vec<String>,
    edges: Option<Vec<(usize, usize)>>,
}

impl TryFrom<RawMms> for Mms {
    type Error = Error;

    fn try_from(raw: RawMms) -> Result<Mms> {
        let mut space = Mms::new(raw.dist, raw.weights)?;
        if !raw.labels.is_empty() {
            space = space.with_labels(raw.labels)?;
        }
        if let Some(edges) = raw.edges {
            space = space.with_edges(edges)?;
        }
        Ok(space)
    }
}

impl From<Mms> for RawMms {
    fn from(m: Mms) -> RawMms {
        RawMms { dist: m.dist, weights: m.weights, labels: m.labels, edges: m.edges }
    }
}

impl Mms {
    pub fn new(dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Mms> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::invalid("a space needs at least one point"));
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::invalid(format!("distance matrix must be {n}x{n}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::invalid(format!("weights must be positive and finite, got {w}")));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(Error::invalid(format!("d({i},{i}) = {} is not zero", dist[i][i])));
            }
            for j in 0..n {
                let d = dist[i][j];
                if i != j && !(d.is_finite() && d > 0.0) {
                    return Err(Error::invalid(format!("d({i},{j}) = {d} must be positive and finite")));
                }
                if d != dist[j][i] {
                    return Err(Error::invalid(format!("distance is not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (lhs, rhs) = (dist[i][j], dist[i][k] + dist[k][j]);
                    if lhs > rhs + TRIANGLE_TOL * rhs.max(1.0) {
                        return Err(Error::invalid(format!(
                            "triangle inequality fails: d({i},{j}) = {lhs} > d({i},{k}) + d({k},{j}) = {rhs}"
                        )));
                    }
                }
            }
        }
        Ok(Mms { dist, weights, labels: Vec::new(), edges: None })
    }

    /// Shortest-path metric of an undirected graph with unit edges and unit weights.
    pub fn from_graph(n: usize, edges: Vec<(usize, usize)>) -> Result<Mms> {
        let mut g = UnGraph::<(), f64>::new_undirected();
        let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(Error::invalid(format!("bad edge ({a},{b}) for {n} points")));
            }
            g.add_edge(nodes[a], nodes[b], 1.0);
        }
        let mut dist = vec![vec![0.0; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            let reach = dijkstra(&g, nodes[i], None, |e| *e.weight());
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = *reach
                    .get(&nodes[j])
                    .ok_or_else(|| Error::invalid(format!("graph is disconnected: {j} unreachable from {i}")))?;
            }
        }
        Mms::new(dist, vec![1.0; n])?.with_edges(edges)
    }

    pub fn path(n: usize) -> Result<Mms> {
        Mms::from_graph(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    /// `m × n` grid; point `(r, c)` has index `r·n + c`.
    pub fn grid(m: usize, n: usize) -> Result<Mms> {
        let mut edges = Vec::new();
        for r in 0..m {
            for c in 0..n {
                let i = r * n + c;
                if c + 1 < n {
                    edges.push((i, i + 1));
                }
                if r + 1 < m {
                    edges.push((i, i + n));
                }
            }
        }
        Mms::from_graph(m * n, edges)
    }

    /// Complete `b`-ary tree of depth `d` (root alone has depth 0), breadth-first indices.
    pub fn tree(b: usize, d: usize) -> Result<Mms> {
        if b == 0 {
            return Err(Error::invalid("tree branching must be positive"));
        }
        let mut edges = Vec::new();
        let (mut level, mut next) = (vec![0usize], 1usize);
        for _ in 0..d {
            let mut children = Vec::new();
            for &parent in &level {
                for _ in 0..b {
                    edges.push((parent, next));
                    children.push(next);
                    next += 1;
                }
            }
            level = children;
        }
        Mms::from_graph(next, edges)
    }

    /// Parse `path:N`, `grid:M,N` or `tree:B,D`.
    pub fn generate(text: &str) -> Result<Mms> {
        let (kind, args) = text
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("generator needs KIND:ARGS, got {text:?}")))?;
        let nums: Vec<usize> = args
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::invalid(format!("bad size {s:?}"))))
            .collect::<Result<_>>()?;
        match (kind, nums.as_slice()) {
            ("path", [n]) if *n >= 1 => Mms::path(*n),
            ("grid", [m, n]) if *m >= 1 && *n >= 1 => Mms::grid(*m, *n),
            ("tree", [b, d]) => Mms::tree(*b, *d),
            _ => Err(Error::invalid(format!("unknown generator {text:?}"))),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Mms> {
        if labels.len() != self.len() {
            return Err(Error::invalid("one label per point is required"));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_edges(mut self, edges: Vec<(usize, usize)>) -> Result<Mms> {
        let n = self.len();
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
            return Err(Error::invalid(format!("bad edge ({a},{b}) for {n} points")));
        }
        self.edges = Some(edges);
        Ok(self)
    }

    /// Same points and weights with every distance multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Mms> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid(format!("scale {s} must be positive")));
        }
        let dist = self.dist.iter().map(|row| row.iter().map(|d| d * s).collect()).collect();
        let mut out = Mms::new(dist, self.weights.clone())?;
        out.labels = self.labels.clone();
        out.edges = self.edges.clone();
        Ok(out)
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Mms> {
        let mut out = Mms::new(self.dist.clone(), weights)?;
        out.labels = self.labels.clone();
        out.edges = self.edges.clone();
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn declared_edges(&self) -> Option<&[(usize, usize)]> {
        self.edges.as_deref()
    }

    /// Declared edges, or every pair when none were declared.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match &self.edges {
            Some(e) => e.clone(),
            None => (0..self.len()).flat_map(|i| (i + 1..self.len()).map(move |j| (i, j))).collect(),
        }
    }

    pub fn measure(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.weights[i]).sum()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted `L^p` norm of a point function.
    pub fn lp_norm(&self, f: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        }
        let s: f64 = f.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).sum();
        s.powf(1.0 / p)
    }

    pub(crate) fn check_fn(&self, f: &[f64], what: &str) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::invalid(format!("{what} has {} values for {} points", f.len(), self.len())));
        }
        if f.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid(format!("{what} contains NaN")));
        }
        Ok(())
    }

    pub(crate) fn check_nonneg(&self, f: &[f64], what: &str) -> Result<()> {
        self.check_fn(f, what)?;
        if let Some(v) = f.iter().find(|v| **v < 0.0) {
            return Err(Error::invalid(format!("{what} must be nonnegative, found {v}")));
        }
        Ok(())
    }

    /// Every distinct ball around `center`, smallest first.
    pub fn balls(&self, center: usize) -> Vec<Ball> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.dist[center][a].total_cmp(&self.dist[center][b]).then(a.cmp(&b)));
        let radii: Vec<f64> = {
            let mut r: Vec<f64> = order.iter().map(|&j| self.dist[center][j]).collect();
            r.dedup();
            r
        };
        let mut out = Vec::with_capacity(radii.len());
        let mut end = 0;
        for (k, &r) in radii.iter().enumerate() {
            while end < order.len() && self.dist[center][order[end]] <= r {
                end += 1;
            }
            let radius = match (radii.get(k + 1), k) {
                (Some(next), _) => 0.5 * (r + next),
                (None, 0) => 1.0,
                (None, _) => r + 0.5 * (r - radii[k - 1]),
            };
            let mut members = order[..end].to_vec();
            members.sort_unstable();
            out.push(Ball { center, radius, members });
        }
        out
    }

    /// Points at distance strictly less than `r` from `center`.
    pub fn open_ball(&self, center: usize, r: f64) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.dist[center][j] < r).collect()
    }

    pub fn diameter(&self, set: &[usize]) -> f64 {
        let mut d = 0.0_f64;
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                d = d.max(self.dist[i][j]);
            }
        }
        d
    }

    /// Weighted mean of `f` over `set`.
    pub fn mean(&self, f: &[f64], set: &[usize]) -> f64 {
        let m = self.measure(set);
        set.iter().map(|&i| self.weights[i] * f[i]).sum::<f64>() / m
    }
}

/// An open ball `B(center, radius)` together with its points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    /// Generating radius: midway to the next distance from the center.
    pub radius: f64,
    pub members: Vec<usize>,
}
