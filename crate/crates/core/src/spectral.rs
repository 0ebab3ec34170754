//! Spectral gap `λ₁` of the combinatorial Laplacian `L = D - A` of a Cayley
//! graph, the two-sided displacement bound, and scans over families.
//!
//! For a unit vector `ξ` orthogonal to the constants,
//! `Σ_{s ∈ S ∪ S⁻¹} ‖ξ - π(s)ξ‖² = 2 ξᵀLξ`: every edge is counted once from each
//! endpoint. Averaging gives `κ ≥ sqrt(2λ₁ / |S ∪ S⁻¹|)`; at the eigenvector each
//! term is at most the sum, so `κ ≤ sqrt(2λ₁)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CayleyGraph;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DENSE_LIMIT: usize = 3000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub spec: String,
    pub vertices: usize,
    pub degree: usize,
    pub lambda1: f64,
    pub method: Method,
    pub tol: f64,
    /// `‖Lx - λ₁x‖ / ‖x‖` for the returned eigenvector.
    pub residual: f64,
    #[serde(skip)]
    pub eigenvector: Vec<f64>,
}

impl SpectralReport {
    pub fn csv_header() -> &'static str {
        "spec,|V|,degree,lambda1,method,tol"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.12},{},{:e}",
            self.spec, self.vertices, self.degree, self.lambda1, self.method, self.tol
        )
    }
}

/// `y = L x`.
pub fn laplacian_apply(g: &CayleyGraph, x: &[f64], y: &mut [f64]) {
    for (v, out) in y.iter_mut().enumerate() {
        let nb = g.neighbors(v);
        let mut acc = nb.len() as f64 * x[v];
        for &u in nb {
            acc -= x[u as usize];
        }
        *out = acc;
    }
}

fn residual(g: &CayleyGraph, x: &[f64], lambda: f64) -> f64 {
    let mut y = vec![0.0; x.len()];
    laplacian_apply(g, x, &mut y);
    let r: f64 = y.iter().zip(x).map(|(a, b)| (a - lambda * b).powi(2)).sum();
    let n: f64 = x.iter().map(|a| a * a).sum();
    (r / n).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn dense_lambda1(g: &CayleyGraph) -> (f64, Vec<f64>) {
    let n = g.len();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for v in 0..n {
        let nb = g.neighbors(v);
        l[(v, v)] = nb.len() as f64;
        for &u in nb {
            l[(v, u as usize)] = -1.0;
        }
    }
    let eig = SymmetricEigen::new(l.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let i = order[1];
    let mut vec: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
    let mut lambda = eig.eigenvalues[i];
    // Clustered eigenvalues can leave the returned vector inaccurate; polish
    // it by inverse iteration with a slightly lowered shift.
    if residual(g, &vec, lambda) > 1e-12 {
        let shift = lambda - 1e-9 * lambda.abs().max(1.0);
        let lu = (l - DMatrix::<f64>::identity(n, n) * shift).lu();
        for _ in 0..4 {
            remove_mean(&mut vec);
            normalize(&mut vec);
            let Some(x) = lu.solve(&nalgebra::DVector::from_column_slice(&vec)) else {
                break;
            };
            vec = x.iter().copied().collect();
            remove_mean(&mut vec);
            normalize(&mut vec);
            let mut y = vec![0.0; n];
            laplacian_apply(g, &vec, &mut y);
            lambda = dot(&vec, &y);
            if residual(g, &vec, lambda) <= 1e-12 {
                break;
            }
        }
    }
    (lambda, vec)
}

/// Thick-restart Lanczos for the smallest eigenvalue of `L` on the
/// complement of the constants.
struct Lanczos<'a> {
    g: &'a CayleyGraph,
    basis_max: usize,
    keep: usize,
    max_restarts: usize,
    tol: f64,
    rng: ChaCha8Rng,
}

impl Lanczos<'_> {
    fn random_unit(&mut self, basis: &[Vec<f64>]) -> Vec<f64> {
        let n = self.g.len();
        loop {
            let mut x: Vec<f64> = (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect();
            remove_mean(&mut x);
            orthogonalize(&mut x, basis);
            if normalize(&mut x) > 1e-8 {
                return x;
            }
        }
    }

    fn run(&mut self) -> Result<(f64, Vec<f64>)> {
        let n = self.g.len();
        let dim = n - 1;
        let basis_max = self.basis_max.min(dim);
        let keep = self.keep.min(basis_max.saturating_sub(1)).max(1);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(basis_max + 1);
        let first = self.random_unit(&basis);
        basis.push(first);
        let mut t = DMatrix::<f64>::zeros(basis_max, basis_max);
        let mut w = vec![0.0; n];
        let mut start = 0;
        let mut best = (f64::INFINITY, Vec::new());
        for _ in 0..self.max_restarts {
            let mut beta = 0.0;
            let mut f = Vec::new();
            for j in start..basis_max {
                laplacian_apply(self.g, &basis[j], &mut w);
                remove_mean(&mut w);
                let scale = dot(&w, &w).sqrt().max(1.0);
                let mut h = vec![0.0; basis.len()];
                for _ in 0..2 {
                    remove_mean(&mut w);
                    for (i, v) in basis.iter().enumerate() {
                        let c = dot(&w, v);
                        h[i] += c;
                        w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
                    }
                }
                for (i, &c) in h.iter().enumerate() {
                    t[(i, j)] = c;
                    t[(j, i)] = c;
                }
                let mut next = w.clone();
                beta = normalize(&mut next);
                if j + 1 == basis_max {
                    f = next;
                    break;
                }
                if beta < 1e-6 * scale {
                    // Invariant subspace reached: continue with a fresh direction.
                    let fresh = self.random_unit(&basis);
                    basis.push(fresh);
                } else {
                    t[(j + 1, j)] = beta;
                    t[(j, j + 1)] = beta;
                    basis.push(next);
                }
            }
            let m = basis.len();
            let eig = SymmetricEigen::new(t.view((0, 0), (m, m)).into_owned());
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let ritz = |c: usize| -> Vec<f64> {
                let y = eig.eigenvectors.column(c);
                let mut x = vec![0.0; n];
                for (k, v) in basis.iter().enumerate() {
                    let yk = y[k];
                    x.iter_mut().zip(v).for_each(|(a, b)| *a += yk * b);
                }
                x
            };
            let c0 = order[0];
            let estimate = (beta * eig.eigenvectors[(m - 1, c0)]).abs();
            if estimate <= self.tol * 0.1 || m == dim {
                let mut x = ritz(c0);
                remove_mean(&mut x);
                normalize(&mut x);
                let lambda = {
                    let mut y = vec![0.0; n];
                    laplacian_apply(self.g, &x, &mut y);
                    dot(&x, &y)
                };
                let r = residual(self.g, &x, lambda);
                if r <= self.tol {
                    return Ok((lambda, x));
                }
                best = (lambda, x);
            }
            if m == dim {
                break;
            }
            // Thick restart with the `keep` smallest Ritz vectors.
            let mut fresh: Vec<Vec<f64>> = Vec::with_capacity(basis_max + 1);
            t.fill(0.0);
            for (slot, &c) in order.iter().take(keep).enumerate() {
                let mut x = ritz(c);
                remove_mean(&mut x);
                fresh.push(x);
                t[(slot, slot)] = eig.eigenvalues[c];
                let coupling = beta * eig.eigenvectors[(m - 1, c)];
                t[(keep, slot)] = coupling;
                t[(slot, keep)] = coupling;
            }
            // Re-orthonormalize to stop drift.
            for i in 0..fresh.len() {
                let (done, rest) = fresh.split_at_mut(i);
                orthogonalize(&mut rest[0], done);
                normalize(&mut rest[0]);
            }
            let mut f = f;
            remove_mean(&mut f);
            orthogonalize(&mut f, &fresh);
            if normalize(&mut f) < 1e-8 {
                f = self.random_unit(&fresh);
            }
            fresh.push(f);
            basis = fresh;
            start = keep;
        }
        Err(Error::NumericalFailure(format!(
            "Lanczos did not reach residual {:e}; best residual {:e} at value {}",
            self.tol,
            if best.1.is_empty() {
                f64::INFINITY
            } else {
                residual(self.g, &best.1, best.0)
            },
            best.0
        )))
    }
}

fn orthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        remove_mean(x);
        for v in basis {
            let c = dot(x, v);
            x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
    }
}

/// `λ₁` with the default method choice.
pub fn laplacian_lambda1(g: &CayleyGraph, tol: f64) -> Result<SpectralReport> {
    let method = if g.len() <= DENSE_LIMIT {
        Method::Dense
    } else {
        Method::Iterative
    };
    laplacian_lambda1_with(g, tol, method)
}

pub fn laplacian_lambda1_with(g: &CayleyGraph, tol: f64, method: Method) -> Result<SpectralReport> {
    if g.len() < 2 {
        return Err(Error::Domain("the spectral gap needs at least two vertices".into()));
    }
    let (lambda1, vec) = match method {
        Method::Dense => dense_lambda1(g),
        Method::Iterative if g.len() == 2 => dense_lambda1(g),
        Method::Iterative => Lanczos {
            g,
            basis_max: 80,
            keep: 20,
            max_restarts: 2000,
            tol,
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
        }
        .run()?,
    };
    let res = residual(g, &vec, lambda1);
    if res > tol {
        return Err(Error::NumericalFailure(format!(
            "eigenpair residual {res:e} exceeds {tol:e}"
        )));
    }
    Ok(SpectralReport {
        spec: g.spec().to_string(),
        vertices: g.len(),
        degree: g.degree(),
        lambda1,
        method,
        tol,
        residual: res,
        eigenvector: vec,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KappaInterval {
    pub lower: f64,
    pub upper: f64,
}

/// `[sqrt(2λ₁/|S ∪ S⁻¹|), sqrt(2λ₁)]`, where `generator_count` counts the
/// distinct nonidentity elements of `S ∪ S⁻¹`.
pub fn kappa_interval(lambda1: f64, generator_count: usize) -> KappaInterval {
    KappaInterval {
        lower: (2.0 * lambda1 / generator_count as f64).sqrt(),
        upper: (2.0 * lambda1).sqrt(),
    }
}

/// λ₁ over family members, with the minimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub rows: Vec<SpectralReport>,
    pub min_lambda1: f64,
}

impl ScanReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", SpectralReport::csv_header());
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }
}

pub fn expander_scan(graphs: &[CayleyGraph], tol: f64) -> Result<ScanReport> {
    let rows = graphs
        .iter()
        .map(|g| laplacian_lambda1(g, tol))
        .collect::<Result<Vec<_>>>()?;
    let min_lambda1 = rows.iter().map(|r| r.lambda1).fold(f64::INFINITY, f64::min);
    Ok(ScanReport { rows, min_lambda1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DEFAULT_VERTEX_CAP;
    use crate::groups::MarkedGroup;

    fn graph(text: &str) -> CayleyGraph {
        let g = MarkedGroup::new(text.parse().unwrap()).unwrap();
        CayleyGraph::build(&g, DEFAULT_VERTEX_CAP).unwrap()
    }

    #[test]
    fn cycle_values() {
        let r = laplacian_lambda1(&graph("cycle:n=4"), DEFAULT_TOL).unwrap();
        assert!((r.lambda1 - 2.0).abs() < 1e-9);
        let r = laplacian_lambda1(&graph("cycle:n=6"), DEFAULT_TOL).unwrap();
        assert!((r.lambda1 - 1.0).abs() < 1e-9);
        assert_eq!(r.method, Method::Dense);
    }

    #[test]
    fn iterative_matches_dense() {
        for text in ["cycle:n=40", "sym:m=5", "psl2:p=7", "sl:m=3,ring=zmod2,gens=st"] {
            let g = graph(text);
            let d = laplacian_lambda1_with(&g, DEFAULT_TOL, Method::Dense).unwrap();
            let mut asym = 0;
            for v in 0..g.len() { for &u in g.neighbors(v) { if !g.neighbors(u as usize).contains(&(v as u32)) { asym += 1; } } }
            eprintln!("asym {asym} degs {:?}", (0..g.len()).map(|v| g.neighbors(v).len()).collect::<std::collections::BTreeSet<_>>());
            let i = laplacian_lambda1_with(&g, DEFAULT_TOL, Method::Iterative).unwrap();
            assert!((d.lambda1 - i.lambda1).abs() < 1e-8, "{text}: {} vs {}", d.lambda1, i.lambda1);
            assert!(i.residual <= DEFAULT_TOL);
        }
    }

    #[test]
    fn kappa_examples() {
        let k = kappa_interval(1.0, 2);
        assert!((k.lower - 1.0).abs() < 1e-12 && (k.upper - 2f64.sqrt()).abs() < 1e-12);
        let k = kappa_interval(2.0, 2);
        assert!((k.lower - 2f64.sqrt()).abs() < 1e-12 && (k.upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_shape() {
        let scan = expander_scan(&[graph("cycle:n=6")], DEFAULT_TOL).unwrap();
        let csv = scan.to_csv();
        assert!(csv.starts_with("spec,|V|,degree,lambda1,method,tol\ncycle:n=6,6,2,1.0000"));
    }
}
