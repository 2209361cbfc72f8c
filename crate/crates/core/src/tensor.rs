//! Dense multilinear maps on `R^n` with vector values.

use serde::Serialize;

/// `B⟨a, b⟩` with values in `R^n`; `data[(i*n + a)*n + b]` is component
/// `i` of `B⟨e_a, e_b⟩`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bilinear {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Bilinear {
    pub fn zeros(n: usize) -> Self {
        Bilinear { n, data: vec![0.0; n * n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize, b: usize) -> f64 {
        self.data[(i * self.n + a) * self.n + b]
    }

    #[inline]
    pub fn set(&mut self, i: usize, a: usize, b: usize, v: f64) {
        self.data[(i * self.n + a) * self.n + b] = v;
    }

    pub fn apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for a in 0..n {
                    if u[a] == 0.0 {
                        continue;
                    }
                    let row = &self.data[(i * n + a) * n..(i * n + a + 1) * n];
                    s += u[a] * row.iter().zip(v).map(|(c, vb)| c * vb).sum::<f64>();
                }
                s
            })
            .collect()
    }

    /// The map with its two arguments exchanged.
    pub fn swapped(&self) -> Self {
        let n = self.n;
        let mut out = Bilinear::zeros(n);
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out.set(i, a, b, self.get(i, b, a));
                }
            }
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        Bilinear { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        max_abs_diff(&self.data, &o.data)
    }
}

/// `T⟨a, b, c⟩` with values in `R^n`; `data[((i*n + a)*n + b)*n + c]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trilinear {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Trilinear {
    pub fn zeros(n: usize) -> Self {
        Trilinear { n, data: vec![0.0; n * n * n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize, b: usize, c: usize) -> f64 {
        self.data[((i * self.n + a) * self.n + b) * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, i: usize, a: usize, b: usize, c: usize, v: f64) {
        self.data[((i * self.n + a) * self.n + b) * self.n + c] = v;
    }

    pub fn apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            s += self.get(i, a, b, c) * u[a] * v[b] * w[c];
                        }
                    }
                }
                s
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        max_abs_diff(&self.data, &o.data)
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| alpha * a + b).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|a| alpha * a).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}
