//! Coarse disjoint unions of finite Cayley graphs.
//!
//! Points are pairs `(index, vertex)`. Inside one component the distance is
//! the word metric; between components `m != n` it is
//! `diam(X_m) + diam(X_n) + m + n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::graph::CayleyGraph;
use crate::groups::{GroupSpec, MarkedGroup};

pub const METRIC_TAG: &str = "remark-cdu-v1";

/// Components up to this size carry full distance matrices in exports.
pub const DEFAULT_MATRIX_LIMIT: usize = 500;

#[derive(Clone, Debug)]
struct Built {
    group: MarkedGroup,
    graph: CayleyGraph,
}

#[derive(Clone, Debug)]
pub struct Component {
    pub index: u64,
    pub spec: GroupSpec,
    pub size: usize,
    pub diameter: usize,
    built: Option<Built>,
    matrix: Option<Vec<Vec<u32>>>,
}

impl Component {
    fn build(index: u64, spec: GroupSpec, cap: usize) -> Result<Self> {
        let group = MarkedGroup::new(spec.clone())?;
        let graph = CayleyGraph::build(&group, cap)?;
        Ok(Component {
            index,
            spec,
            size: graph.len(),
            diameter: graph.diameter(),
            built: Some(Built { group, graph }),
            matrix: None,
        })
    }

    pub fn graph(&self) -> Option<&CayleyGraph> {
        self.built.as_ref().map(|b| &b.graph)
    }

    /// Word-metric distance between two vertices.
    pub fn dist(&self, a: usize, b: usize) -> Result<u64> {
        if a >= self.size || b >= self.size {
            return Err(Error::NotFound(format!(
                "vertex {} is not in component {} of size {}",
                a.max(b),
                self.index,
                self.size
            )));
        }
        if let Some(m) = &self.matrix {
            return Ok(m[a][b] as u64);
        }
        let built = self.built.as_ref().expect("component without graph or matrix");
        // Edges join g and s g, so d(g, h) = |h g^{-1}|.
        let (g, h) = (built.graph.element(a), built.graph.element(b));
        let q = built.group.mul(h, &g.inverse()?)?;
        Ok(built.graph.word_length(&q)? as u64)
    }
}

#[derive(Clone, Debug)]
pub struct CoarseUnion {
    pub family: String,
    pub components: Vec<Component>,
}

pub fn build_union(family: &FamilySpec, cap: usize) -> Result<CoarseUnion> {
    let components = family
        .members()?
        .into_iter()
        .map(|m| Component::build(m.index, m.spec, cap))
        .collect::<Result<Vec<_>>>()?;
    CoarseUnion::new(family.to_string(), components)
}

impl CoarseUnion {
    fn new(family: String, components: Vec<Component>) -> Result<Self> {
        if components.windows(2).any(|w| w[0].index >= w[1].index) {
            return Err(Error::Domain("component indices must be strictly increasing".into()));
        }
        Ok(CoarseUnion { family, components })
    }

    pub fn component(&self, index: u64) -> Result<&Component> {
        self.components
            .binary_search_by_key(&index, |c| c.index)
            .map(|i| &self.components[i])
            .map_err(|_| Error::NotFound(format!("no component with index {index}")))
    }

    pub fn dist(&self, a: (u64, usize), b: (u64, usize)) -> Result<u64> {
        let (ca, cb) = (self.component(a.0)?, self.component(b.0)?);
        if a.0 == b.0 {
            return ca.dist(a.1, b.1);
        }
        for (c, v) in [(ca, a.1), (cb, b.1)] {
            if v >= c.size {
                return Err(Error::NotFound(format!("vertex {v} is not in component {}", c.index)));
            }
        }
        Ok(ca.diameter as u64 + cb.diameter as u64 + a.0 + b.0)
    }

    /// Metadata plus distance matrices for components up to `matrix_limit`.
    pub fn export(&self, matrix_limit: usize) -> Result<UnionExport> {
        let components = self
            .components
            .iter()
            .map(|c| {
                let small = c.size <= matrix_limit;
                let distances = match (&c.matrix, &c.built) {
                    _ if !small => None,
                    (Some(m), _) => Some(m.clone()),
                    (None, Some(b)) => Some(b.graph.all_pairs(matrix_limit)?),
                    (None, None) => None,
                };
                Ok(ExportedComponent {
                    index: c.index,
                    size: c.size,
                    diameter: c.diameter,
                    spec: c.spec.to_string(),
                    distances_omitted: distances.is_none(),
                    distances,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UnionExport {
            family: self.family.clone(),
            components,
            metric: METRIC_TAG.to_string(),
        })
    }

    pub fn to_json(&self, matrix_limit: usize) -> Result<String> {
        Ok(serde_json::to_string(&self.export(matrix_limit)?).expect("export serializes"))
    }

    /// Rebuilds a union; components exported without matrices are rebuilt
    /// from their specs within `cap`.
    pub fn import(export: &UnionExport, cap: usize) -> Result<Self> {
        if export.metric != METRIC_TAG {
            return Err(Error::UnsupportedParameter(format!("unknown metric `{}`", export.metric)));
        }
        let components = export
            .components
            .iter()
            .map(|c| {
                let spec: GroupSpec = c.spec.parse()?;
                match &c.distances {
                    Some(m) => {
                        if m.len() != c.size || m.iter().any(|row| row.len() != c.size) {
                            return Err(Error::Domain(format!(
                                "distance matrix of component {} is not {}x{}",
                                c.index, c.size, c.size
                            )));
                        }
                        Ok(Component {
                            index: c.index,
                            spec,
                            size: c.size,
                            diameter: c.diameter,
                            built: None,
                            matrix: Some(m.clone()),
                        })
                    }
                    None => {
                        let built = Component::build(c.index, spec, cap)?;
                        if (built.size, built.diameter) != (c.size, c.diameter) {
                            return Err(Error::Domain(format!(
                                "component {} does not match its spec",
                                c.index
                            )));
                        }
                        Ok(built)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        CoarseUnion::new(export.family.clone(), components)
    }

    pub fn from_json(text: &str, cap: usize) -> Result<Self> {
        let export: UnionExport =
            serde_json::from_str(text).map_err(|e| Error::parse(e.column(), e.to_string()))?;
        Self::import(&export, cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportedComponent {
    pub index: u64,
    pub size: usize,
    pub diameter: usize,
    pub spec: String,
    pub distances_omitted: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub distances: Option<Vec<Vec<u32>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnionExport {
    pub family: String,
    pub components: Vec<ExportedComponent>,
    pub metric: String,
}
