use crate::error::{Error, Result};
use crate::jet::Jet;

/// Metric components with their first and second coordinate derivatives at
/// one point. Row-major flat storage; index order `g[i][j]`, `∂_k g[i][j]`,
/// `∂_k ∂_l g[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub n: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub d2g: Vec<f64>,
}

impl MetricJet {
    /// Assembles the full symmetric arrays from lower-triangle jets.
    pub fn from_lower(n: usize, entries: &[Jet]) -> Result<Self> {
        if entries.len() != n * (n + 1) / 2 {
            return Err(Error::Dimension { expected: n * (n + 1) / 2, got: entries.len() });
        }
        let mut m = MetricJet { n, g: vec![0.0; n * n], dg: vec![0.0; n * n * n], d2g: vec![0.0; n * n * n * n] };
        for i in 0..n {
            for j in 0..=i {
                let e = &entries[i * (i + 1) / 2 + j];
                if !e.v.is_finite() || e.g.iter().chain(&e.h).any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("metric entry g[{i}][{j}]")));
                }
                for (a, b) in [(i, j), (j, i)] {
                    m.g[a * n + b] = e.v;
                    for k in 0..n {
                        m.dg[(a * n + b) * n + k] = e.grad(k);
                        for l in 0..n {
                            m.d2g[((a * n + b) * n + k) * n + l] = e.hess(k, l);
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    pub fn dg(&self, i: usize, j: usize, k: usize) -> f64 {
        self.dg[(i * self.n + j) * self.n + k]
    }

    pub fn d2g(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.d2g[((i * self.n + j) * self.n + k) * self.n + l]
    }
}
