//! Metric definitions read from `.metric` text.
//!
//! ```text
//! # Poincare half-plane
//! dim 2;
//! coords x y;
//! domain x (-inf, inf) y (0, inf);
//! g[0][0] = 1/(y*y);
//! g[1][0] = 0;
//! g[1][1] = 1/(y*y);
//! ```

mod expr;
mod parse;

use std::fmt::Write as _;

pub use expr::{Constant, Expr, ExprDisplay, Func};
pub use parse::parse_metric;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::jet::{Jet, Real};
use crate::metric::MetricJet;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    pub dim: usize,
    pub coords: Vec<String>,
    pub domain: Domain,
    /// Lower triangle, row by row: `g[0][0], g[1][0], g[1][1], g[2][0], ...`
    pub entries: Vec<Expr>,
}

impl MetricSpec {
    pub fn tri_index(i: usize, j: usize) -> usize {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[Self::tri_index(i, j)]
    }

    /// Evaluates the lower-triangle entries with any scalar type.
    pub fn eval_entries<R: Real>(&self, x: &[R]) -> Result<Vec<R>> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        self.entries.iter().map(|e| e.eval(x)).collect()
    }

    /// Value, gradient and Hessian of every metric entry at `x`.
    pub fn eval_jet2(&self, x: &[f64]) -> Result<MetricJet> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let n = self.dim;
        let vars: Vec<Jet> = (0..n).map(|i| Jet::variable(x[i], i, n, true)).collect();
        let entries = self.eval_entries(&vars)?;
        MetricJet::from_lower(n, &entries)
    }

    /// Canonical source text; parsing it gives back an equal spec.
    pub fn to_source(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {};", self.dim);
        let _ = writeln!(s, "coords {};", self.coords.join(" "));
        s.push_str("domain");
        for (name, &(lo, hi)) in self.coords.iter().zip(&self.domain.bounds) {
            let _ = write!(s, " {name} ({}, {})", fmt_bound(lo), fmt_bound(hi));
        }
        s.push_str(";\n");
        for i in 0..self.dim {
            for j in 0..=i {
                let _ = writeln!(s, "g[{i}][{j}] = {};", self.entry(i, j).display(&self.coords));
            }
        }
        s
    }
}

fn fmt_bound(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfplane_jet_values() {
        let spec = parse_metric(
            "dim 2; coords x y; domain x (-inf,inf) y (0,inf); g[0][0] = 1/(y*y); g[1][0] = 0; g[1][1] = 1/(y*y);",
        )
        .unwrap();
        let m = spec.eval_jet2(&[0.0, 2.0]).unwrap();
        assert_eq!(m.g(0, 0), 0.25);
        assert!((m.dg(0, 0, 1) + 0.25).abs() < 1e-15);
        assert!((m.d2g(0, 0, 1, 1) - 0.375).abs() < 1e-15);
        assert_eq!(m.dg(0, 0, 0), 0.0);
    }

    #[test]
    fn constant_metric_has_no_derivatives() {
        let spec = parse_metric("dim 2; coords a b; g[0][0] = 2; g[1][0] = 0.5; g[1][1] = 3;").unwrap();
        let m = spec.eval_jet2(&[0.3, -0.2]).unwrap();
        assert_eq!(m.g(1, 0), 0.5);
        assert_eq!(m.g(0, 1), 0.5);
        assert!(m.dg.iter().all(|&v| v == 0.0));
        assert!(m.d2g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sphere_entry_derivatives() {
        let spec = parse_metric("dim 2; coords t p; g[0][0] = 1; g[1][0] = 0; g[1][1] = sin(t)^2;").unwrap();
        let m = spec.eval_jet2(&[std::f64::consts::FRAC_PI_4, 0.0]).unwrap();
        assert!((m.g(1, 1) - 0.5).abs() < 1e-15);
        assert!((m.dg(1, 1, 0) - 1.0).abs() < 1e-15);
        assert!(m.d2g(1, 1, 0, 0).abs() < 1e-15);
    }

    #[test]
    fn evaluation_guards() {
        let spec = parse_metric("dim 1; coords u; g[0][0] = ln(u);").unwrap();
        assert!(matches!(spec.eval_jet2(&[-1.0]), Err(Error::DomainViolation(_))));
        let spec = parse_metric("dim 1; coords u; domain u (0, 1); g[0][0] = 1;").unwrap();
        assert!(matches!(spec.eval_jet2(&[2.0]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn source_round_trip() {
        let src = "dim 2; coords t p; domain t (0.05, pi - 0.05) p (-inf, inf);\
                   g[0][0] = -(1 - t)^-2 / exp(p); g[1][0] = 2 - (3 - p) - 1/(2*t); g[1][1] = sin(t)^2 + (-t)^3;";
        let spec = parse_metric(src).unwrap();
        let again = parse_metric(&spec.to_source()).unwrap();
        assert_eq!(spec, again);
    }
}
