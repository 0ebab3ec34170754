//! Cayley graphs of finite marked groups, balls in arbitrary marked groups,
//! BFS metrics and exports.
//!
//! Edges join `g` and `s g` for `s` in `S ∪ S^{-1}`. Parallel edges and
//! self-loops are dropped, so every graph here is simple.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::element::{Element, FiniteMatrix};
use crate::error::{Error, Result};
use crate::groups::{GroupSpec, MarkedGroup, SlGens};
use crate::ring::Ring;
use crate::words::{letters, Letter};

pub mod dense;

pub const DEFAULT_VERTEX_CAP: usize = 2_000_000;

/// Result of a breadth-first exploration from the identity.
#[derive(Clone, Debug)]
pub struct Ball {
    pub radius: Option<usize>,
    pub elements: Vec<Element>,
    pub keys: Vec<Vec<u8>>,
    pub index: HashMap<Vec<u8>, u32>,
    pub dist: Vec<u32>,
    /// CSR adjacency, filled for every vertex strictly inside the radius.
    pub offsets: Vec<usize>,
    pub neighbors: Vec<u32>,
    /// First letter (in canonical order) producing each adjacency entry.
    pub labels: Vec<Letter>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Neighbors of `v`; empty for vertices on the outer sphere of a bounded ball.
    pub fn adjacent(&self, v: usize) -> &[u32] {
        if v + 1 < self.offsets.len() {
            &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
        } else {
            &[]
        }
    }

    pub fn lookup(&self, e: &Element) -> Option<usize> {
        self.index.get(&e.key()).map(|&i| i as usize)
    }
}

/// BFS from the identity by left multiplication, in canonical letter order.
/// With `radius = None` the whole (finite) group is explored.
pub fn explore(group: &MarkedGroup, radius: Option<usize>, cap: usize) -> Result<Ball> {
    let alphabet = letters(group.arity());
    let id = group.identity().clone();
    let mut ball = Ball {
        radius,
        keys: vec![id.key()],
        elements: vec![id],
        index: HashMap::new(),
        dist: vec![0],
        offsets: vec![0],
        neighbors: Vec::new(),
        labels: Vec::new(),
    };
    ball.index.insert(ball.keys[0].clone(), 0);
    let mut head = 0;
    while head < ball.elements.len() {
        let d = ball.dist[head];
        if radius.is_some_and(|r| d as usize >= r) {
            break;
        }
        let start = ball.neighbors.len();
        for &x in &alphabet {
            let next = group.mul(group.letter(x), &ball.elements[head])?;
            let key = next.key();
            let target = match ball.index.get(&key) {
                Some(&t) => t,
                None => {
                    if ball.elements.len() >= cap {
                        return Err(Error::CapExceeded(format!(
                            "{} has more than {cap} elements in the explored region",
                            group.spec()
                        )));
                    }
                    let t = ball.elements.len() as u32;
                    ball.index.insert(key.clone(), t);
                    ball.keys.push(key);
                    ball.elements.push(next);
                    ball.dist.push(d + 1);
                    t
                }
            };
            if target as usize != head && !ball.neighbors[start..].contains(&target) {
                ball.neighbors.push(target);
                ball.labels.push(x);
            }
        }
        ball.offsets.push(ball.neighbors.len());
        head += 1;
    }
    Ok(ball)
}

#[derive(Clone, Debug)]
pub struct CayleyGraph {
    spec: GroupSpec,
    arity: usize,
    ball: Ball,
    degree: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BfsMetrics {
    pub eccentricity: usize,
    pub sphere_sizes: Vec<usize>,
}

impl CayleyGraph {
    pub fn build(group: &MarkedGroup, cap: usize) -> Result<Self> {
        if !group.is_finite() {
            return Err(Error::CapExceeded(format!("{} is infinite", group.spec())));
        }
        let ball = explore(group, None, cap)?;
        let degree = (0..ball.len()).map(|v| ball.adjacent(v).len()).max().unwrap_or(0);
        Ok(CayleyGraph {
            spec: group.spec().clone(),
            arity: group.arity(),
            ball,
            degree,
        })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.ball.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ball.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        self.ball.adjacent(v)
    }

    pub fn element(&self, v: usize) -> &Element {
        &self.ball.elements[v]
    }

    pub fn key(&self, v: usize) -> &[u8] {
        &self.ball.keys[v]
    }

    pub fn vertex_of(&self, e: &Element) -> Option<usize> {
        self.ball.lookup(e)
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn edge_count(&self) -> usize {
        self.ball.neighbors.len() / 2
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.len() {
            for &v in self.neighbors(u) {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Distance from the identity to every vertex.
    pub fn distances_from_identity(&self) -> &[u32] {
        &self.ball.dist
    }

    pub fn metrics(&self) -> BfsMetrics {
        let ecc = self.ball.dist.iter().copied().max().unwrap_or(0) as usize;
        let mut spheres = vec![0; ecc + 1];
        for &d in &self.ball.dist {
            spheres[d as usize] += 1;
        }
        BfsMetrics {
            eccentricity: ecc,
            sphere_sizes: spheres,
        }
    }

    /// Diameter, read off the identity's eccentricity (right multiplications are
    /// graph automorphisms acting transitively).
    pub fn diameter(&self) -> usize {
        self.metrics().eccentricity
    }

    pub fn word_length(&self, target: &Element) -> Result<usize> {
        self.vertex_of(target)
            .map(|v| self.ball.dist[v] as usize)
            .ok_or_else(|| Error::NotFound(format!("element is not a vertex of {}", self.spec)))
    }

    /// BFS distances from `source`.
    pub fn bfs_from(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u] + 1;
                    queue.push_back(v as usize);
                }
            }
        }
        dist
    }

    /// Full distance matrix; intended for validation on small graphs.
    pub fn all_pairs(&self, limit: usize) -> Result<Vec<Vec<u32>>> {
        if self.len() > limit {
            return Err(Error::CapExceeded(format!(
                "all-pairs distances limited to {limit} vertices, graph has {}",
                self.len()
            )));
        }
        Ok((0..self.len()).map(|s| self.bfs_from(s)).collect())
    }

    pub fn export(&self, format: ExportFormat, out: &mut dyn Write) -> Result<()> {
        match format {
            ExportFormat::Edges => {
                let mut s = String::new();
                for (u, v) in self.edges() {
                    let _ = writeln!(s, "{u} {v}");
                }
                out.write_all(s.as_bytes())?;
            }
            ExportFormat::Dot => {
                let mut s = String::from("graph cayley {\n");
                for (u, v) in self.edges() {
                    let _ = writeln!(s, "  {u} -- {v};");
                }
                s.push_str("}\n");
                out.write_all(s.as_bytes())?;
            }
            ExportFormat::Json => {
                let doc = GraphJson {
                    spec: self.spec.to_string(),
                    vertices: self.len(),
                    edge_count: self.edge_count(),
                    degree: self.degree,
                    diameter: self.diameter(),
                    edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
                };
                serde_json::to_writer(&mut *out, &doc).map_err(|e| Error::Io(e.to_string()))?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Edges,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(ExportFormat::Dot),
            "edges" => Ok(ExportFormat::Edges),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::parse(0, format!("unknown export format `{s}`"))),
        }
    }
}

/// JSON graph export; keys appear in this order.
#[derive(Serialize)]
struct GraphJson {
    spec: String,
    vertices: usize,
    edge_count: usize,
    degree: usize,
    diameter: usize,
    edges: Vec<[u32; 2]>,
}

/// Reads the edge list back from a dot export.
pub fn parse_dot_edges(text: &str) -> Result<Vec<(u32, u32)>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        let Some(body) = line.strip_suffix(';') else {
            continue;
        };
        let (a, b) = body
            .split_once("--")
            .ok_or_else(|| Error::parse(line_no, format!("bad dot edge `{line}`")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::parse(line_no, format!("bad vertex `{s}`")))
        };
        out.push((parse(a)?, parse(b)?));
    }
    Ok(out)
}

/// One row of [`elementary_lengths`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementaryLength {
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    /// Ring value as its small integer encoding.
    pub value: u64,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementaryTable {
    pub m: usize,
    pub ring: String,
    pub rows: Vec<ElementaryLength>,
    pub max: usize,
    pub diameter: usize,
}

/// A standard generator `e_{i,j}(sign * a)`.
#[derive(Clone, Debug)]
pub struct StandardGenerator {
    pub i: usize,
    pub j: usize,
    pub sign: i8,
    /// Small encoding of `sign * a`.
    pub value: u64,
    pub matrix: FiniteMatrix,
}

/// The standard generators `e_{i,j}(±a)` of `SL(m, R)`, `a` running over the
/// ring generators (`1`, and `t` for `f2t:<k>`). Both signs are listed even
/// when they coincide in the ring.
pub fn standard_generators(m: usize, ring: Ring) -> Vec<StandardGenerator> {
    let mut values = vec![1u64];
    if let Some(t) = ring.t_small() {
        if t != 0 {
            values.push(t);
        }
    }
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            for &a in &values {
                for sign in [1i8, -1] {
                    let value = if sign > 0 { a } else { ring.neg_small(a) };
                    out.push(StandardGenerator {
                        i,
                        j,
                        sign,
                        value,
                        matrix: FiniteMatrix::elementary(ring, m, i, j, value),
                    });
                }
            }
        }
    }
    out
}

/// Word length of every standard generator of `SL(m, R)` with respect to
/// the `(sigma, tau)` marking.
pub fn elementary_lengths(m: usize, ring: Ring, cap: usize) -> Result<ElementaryTable> {
    let group = MarkedGroup::new(GroupSpec::Sl {
        m,
        ring,
        gens: SlGens::St,
    })?;
    let graph = CayleyGraph::build(&group, cap)?;
    let mut rows = Vec::new();
    for g in standard_generators(m, ring) {
        let length = graph.word_length(&Element::Matrix(g.matrix))?;
        rows.push(ElementaryLength {
            i: g.i,
            j: g.j,
            sign: g.sign,
            value: g.value,
            length,
        });
    }
    let max = rows.iter().map(|r| r.length).max().unwrap_or(0);
    Ok(ElementaryTable {
        m,
        ring: ring.to_string(),
        rows,
        max,
        diameter: graph.diameter(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(text: &str) -> CayleyGraph {
        let g = MarkedGroup::new(text.parse().unwrap()).unwrap();
        CayleyGraph::build(&g, DEFAULT_VERTEX_CAP).unwrap()
    }

    #[test]
    fn small_graphs() {
        let c6 = graph("cycle:n=6");
        assert_eq!((c6.len(), c6.degree(), c6.edge_count()), (6, 2, 6));
        let s4 = graph("sym:m=4");
        assert_eq!((s4.len(), s4.degree()), (24, 3));
        assert_eq!(graph("sl:m=3,ring=zmod2,gens=st").len(), 168);
        assert_eq!(graph("cycle:n=7").diameter(), 3);
        assert_eq!(graph("cycle:n=2").degree(), 1);
    }

    #[test]
    fn exports() {
        let c3 = graph("cycle:n=3");
        let mut buf = Vec::new();
        c3.export(ExportFormat::Edges, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1\n0 2\n1 2\n");
        let c5 = graph("cycle:n=5");
        let mut dot = Vec::new();
        c5.export(ExportFormat::Dot, &mut dot).unwrap();
        let back = parse_dot_edges(&String::from_utf8(dot).unwrap()).unwrap();
        assert_eq!(back, c5.edges());
        let mut json = Vec::new();
        c5.export(ExportFormat::Json, &mut json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["degree"], 2);
        assert_eq!(v["diameter"], 2);
    }

    #[test]
    fn word_lengths() {
        let g = MarkedGroup::new("cycle:n=9".parse().unwrap()).unwrap();
        let cg = CayleyGraph::build(&g, 100).unwrap();
        let w = crate::words::Word::parse(1, "s1.s1.s1.s1").unwrap();
        assert_eq!(cg.word_length(&g.evaluate(&w).unwrap()).unwrap(), 4);
        let s5 = MarkedGroup::new("sym:m=5".parse().unwrap()).unwrap();
        let cg = CayleyGraph::build(&s5, 1000).unwrap();
        assert_eq!(cg.word_length(&s5.generators()[1]).unwrap(), 1);
        let other = Element::Permutation(vec![0, 1, 2]);
        assert!(matches!(cg.word_length(&other), Err(Error::NotFound(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let g = MarkedGroup::new("sym:m=6".parse().unwrap()).unwrap();
        assert!(matches!(CayleyGraph::build(&g, 100), Err(Error::CapExceeded(_))));
        let lim = MarkedGroup::new(GroupSpec::LimitSym).unwrap();
        assert!(matches!(CayleyGraph::build(&lim, 100), Err(Error::CapExceeded(_))));
    }

    #[test]
    fn bounded_ball_in_limit_group() {
        let lim = MarkedGroup::new(GroupSpec::LimitSym).unwrap();
        let b = explore(&lim, Some(2), 1000).unwrap();
        // free-group ball of radius 2 has 17 words; relations tau^2 = 1 identify some
        assert!(b.len() <= 17);
        assert!(b.dist.iter().all(|&d| d <= 2));
        assert!(b.adjacent(b.len() - 1).is_empty());
    }

    #[test]
    fn elementary_table_shape() {
        let t = elementary_lengths(3, Ring::ZMod(2), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(t.rows.len(), 12);
        let t3 = elementary_lengths(3, Ring::ZMod(3), DEFAULT_VERTEX_CAP).unwrap();
        assert_eq!(t3.rows.len(), 12);
        assert!(t3.rows.iter().all(|r| r.length <= t3.diameter));
    }
}
