//! Forward-mode jets carrying a value, its gradient and (optionally) its
//! Hessian with respect to the chart coordinates.
//!
//! Everything that consumes metric derivatives (Christoffel symbols, frame
//! derivatives, classical curvature) is computed from these jets, so the
//! derivatives are exact up to rounding rather than finite differences.

use smallvec::SmallVec;

/// Scalar arithmetic shared by plain `f64` evaluation and jets.
///
/// Metric evaluators are written once against this trait; the same code path
/// then yields values, first derivatives or second derivatives depending on
/// the scalar type it is fed.
pub trait Real: Clone + std::fmt::Debug {
    fn value(&self) -> f64;
    /// A constant of the same kind as `self` (no derivatives).
    fn constant_like(&self, c: f64) -> Self;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
}

impl Real for f64 {
    fn value(&self) -> f64 {
        *self
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
}

type Grad = SmallVec<[f64; 4]>;
type Hess = SmallVec<[f64; 16]>;

/// Value with gradient and, for second-order jets, a row-major Hessian.
///
/// An empty gradient (or Hessian) stands for an all-zero one, so constants
/// are cheap and never need to know the dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Grad,
    pub h: Hess,
    second: bool,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: Grad::new(), h: Hess::new(), second: false }
    }

    /// Coordinate `index` of an `n`-dimensional chart, seeded with a unit
    /// gradient. `second` selects whether Hessians are propagated.
    pub fn variable(v: f64, index: usize, n: usize, second: bool) -> Self {
        let mut g: Grad = SmallVec::from_elem(0.0, n);
        g[index] = 1.0;
        Jet { v, g, h: Hess::new(), second }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn grad(&self, i: usize) -> f64 {
        self.g.get(i).copied().unwrap_or(0.0)
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let n = self.g.len();
        if self.h.is_empty() {
            0.0
        } else {
            self.h[i * n + j]
        }
    }

    fn from_parts(v: f64, g: Grad, h: Hess, second: bool) -> Self {
        Jet { v, g, h, second }
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.v`.
    fn chain(&self, f: f64, df: f64, d2f: f64) -> Jet {
        let n = self.g.len();
        if n == 0 {
            return Jet::constant(f);
        }
        let g: Grad = self.g.iter().map(|gi| df * gi).collect();
        let mut h = Hess::new();
        if self.second {
            h.reserve(n * n);
            for i in 0..n {
                for j in 0..n {
                    h.push(d2f * self.g[i] * self.g[j] + df * self.hess(i, j));
                }
            }
        }
        Jet::from_parts(f, g, h, self.second)
    }

    fn layout(&self, o: &Jet) -> (usize, bool) {
        (self.g.len().max(o.g.len()), self.second || o.second)
    }
}

impl Real for Jet {
    fn value(&self) -> f64 {
        self.v
    }

    fn constant_like(&self, c: f64) -> Self {
        Jet { v: c, g: Grad::new(), h: Hess::new(), second: self.second }
    }

    fn add(&self, o: &Self) -> Self {
        let (n, second) = self.layout(o);
        if n == 0 {
            return Jet::constant(self.v + o.v);
        }
        let g = (0..n).map(|i| self.grad(i) + o.grad(i)).collect();
        let mut h = Hess::new();
        if second {
            for i in 0..n {
                for j in 0..n {
                    h.push(self.hess(i, j) + o.hess(i, j));
                }
            }
        }
        Jet::from_parts(self.v + o.v, g, h, second)
    }

    fn sub(&self, o: &Self) -> Self {
        let (n, second) = self.layout(o);
        if n == 0 {
            return Jet::constant(self.v - o.v);
        }
        let g = (0..n).map(|i| self.grad(i) - o.grad(i)).collect();
        let mut h = Hess::new();
        if second {
            for i in 0..n {
                for j in 0..n {
                    h.push(self.hess(i, j) - o.hess(i, j));
                }
            }
        }
        Jet::from_parts(self.v - o.v, g, h, second)
    }

    fn mul(&self, o: &Self) -> Self {
        let (n, second) = self.layout(o);
        if n == 0 {
            return Jet::constant(self.v * o.v);
        }
        let g = (0..n).map(|i| self.grad(i) * o.v + self.v * o.grad(i)).collect();
        let mut h = Hess::new();
        if second {
            for i in 0..n {
                for j in 0..n {
                    h.push(
                        self.hess(i, j) * o.v
                            + self.grad(i) * o.grad(j)
                            + o.grad(i) * self.grad(j)
                            + self.v * o.hess(i, j),
                    );
                }
            }
        }
        Jet::from_parts(self.v * o.v, g, h, second)
    }

    fn div(&self, o: &Self) -> Self {
        let (n, second) = self.layout(o);
        let q = self.v / o.v;
        if n == 0 {
            return Jet::constant(q);
        }
        let g: Grad = (0..n).map(|i| (self.grad(i) - q * o.grad(i)) / o.v).collect();
        let mut h = Hess::new();
        if second {
            for i in 0..n {
                for j in 0..n {
                    h.push(
                        (self.hess(i, j) - q * o.hess(i, j) - o.grad(i) * g[j] - g[i] * o.grad(j))
                            / o.v,
                    );
                }
            }
        }
        Jet::from_parts(q, g, h, second)
    }

    fn neg(&self) -> Self {
        Jet::from_parts(
            -self.v,
            self.g.iter().map(|x| -x).collect(),
            self.h.iter().map(|x| -x).collect(),
            self.second,
        )
    }

    fn powi(&self, n: i32) -> Self {
        match n {
            0 => self.constant_like(1.0),
            1 => self.clone(),
            _ => {
                let v = self.v;
                let nf = n as f64;
                self.chain(v.powi(n), nf * v.powi(n - 1), nf * (nf - 1.0) * v.powi(n - 2))
            }
        }
    }

    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    fn sin(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    fn sinh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(s, c, s)
    }

    fn cosh(&self) -> Self {
        let (s, c) = (self.v.sinh(), self.v.cosh());
        self.chain(c, s, c)
    }

    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    fn ln(&self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }
}
