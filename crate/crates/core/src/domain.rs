use serde::Serialize;

/// Open coordinate box `(lo_i, hi_i)` in which a chart is valid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn unbounded(n: usize) -> Self {
        Domain { bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n] }
    }

    pub fn new(bounds: Vec<(f64, f64)>) -> Self {
        Domain { bounds }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.bounds.len()
            && x.iter().zip(&self.bounds).all(|(&v, &(lo, hi))| v.is_finite() && v > lo && v < hi)
    }

    /// Finite box used to draw random sample points: well inside the open
    /// domain so finite-difference stencils and short geodesics stay valid.
    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
                (true, true) => {
                    let w = hi - lo;
                    let margin = (0.2 * w).max((0.35 * w).min(1.0));
                    (lo + margin, hi - margin)
                }
                (true, false) => (lo + 0.5, lo + 2.0),
                (false, true) => (hi - 2.0, hi - 0.5),
                (false, false) => (-1.0, 1.0),
            })
            .collect()
    }
}
