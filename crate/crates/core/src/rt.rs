//! The canonical translation group of a Riemannian chart.
//!
//! Elements at `x` are frame vectors `t`; the group acts by `x ↦ exp_x(t)`
//! and multiplies by `φ_x(t, t') = log_x(exp_{x'}(t'))` with
//! `x' = exp_x(t)`. Expansion coefficients of `φ` are extracted by finite
//! differences of this law.

use std::cell::RefCell;

use crate::error::Result;
use crate::fd;
use crate::geodesic::{exp_map, log_map, log_map_from, ExpLogConfig};
use crate::manifold::Manifold;
use crate::tensor::{norm, unit, Bilinear, Trilinear};

/// `φ_x(t, t')`, with `t'` read in the frame at `exp_x(t)`.
pub fn rt_multiply(m: &Manifold, x: &[f64], t: &[f64], t2: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    let xp = exp_map(m, x, t, cfg)?;
    let xpp = exp_map(m, &xp, t2, cfg)?;
    log_map(m, x, &xpp, cfg)
}

/// Action of the group on points, `f_x(t) = exp_x(t)`.
pub fn rt_act(m: &Manifold, x: &[f64], t: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    exp_map(m, x, t, cfg)
}

/// Inverse parameter: the element at `x' = exp_x(t)` leading back to `x`.
pub fn rt_inverse(m: &Manifold, x: &[f64], t: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    let xp = exp_map(m, x, t, cfg)?;
    log_map(m, &xp, x, cfg)
}

/// Memoized `exp_x(s·dir)` for the few distinct `s` values of a stencil.
struct ExpCache<'a> {
    m: &'a Manifold,
    x: &'a [f64],
    cfg: &'a ExpLogConfig,
    memo: RefCell<Vec<(Vec<u64>, Vec<f64>)>>,
}

impl<'a> ExpCache<'a> {
    fn new(m: &'a Manifold, x: &'a [f64], cfg: &'a ExpLogConfig) -> Self {
        ExpCache { m, x, cfg, memo: RefCell::new(Vec::new()) }
    }

    fn exp(&self, t: &[f64]) -> Result<Vec<f64>> {
        let key: Vec<u64> = t.iter().map(|v| v.to_bits()).collect();
        if let Some((_, p)) = self.memo.borrow().iter().find(|(k, _)| *k == key) {
            return Ok(p.clone());
        }
        let p = exp_map(self.m, self.x, t, self.cfg)?;
        self.memo.borrow_mut().push((key, p.clone()));
        Ok(p)
    }

    fn phi(&self, t: &[f64], t2: &[f64]) -> Result<Vec<f64>> {
        let xp = self.exp(t)?;
        let xpp = exp_map(self.m, &xp, t2, self.cfg)?;
        log_map(self.m, self.x, &xpp, self.cfg)
    }
}

fn lin(a: f64, u: &[f64], b: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(p, q)| a * p + b * q).collect()
}

/// λ-transport `λ_x(t)⟨θ'⟩ = ∂'φ_x(t, 0)⟨θ'⟩`: carries a frame vector at
/// `x' = exp_x(t)` back to `x` through the differential of the log map.
pub fn lambda_transport(m: &Manifold, x: &[f64], t: &[f64], theta: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    let xp = exp_map(m, x, t, cfg)?;
    fd::d1(cfg.fd_step, cfg.richardson, |e| {
        let q = exp_map(m, &xp, &crate::tensor::scale(e, theta), cfg)?;
        log_map_from(m, x, &q, Some(t), cfg)
    })
}

/// `μ_x(t)⟨l⟩ = ∂φ_x(0, t)⟨l⟩`.
pub fn mu_map(m: &Manifold, x: &[f64], t: &[f64], l: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    fd::d1(cfg.fd_step, cfg.richardson, |e| {
        let xp = exp_map(m, x, &crate::tensor::scale(e, l), cfg)?;
        let xpp = exp_map(m, &xp, t, cfg)?;
        log_map_from(m, x, &xpp, Some(t), cfg)
    })
}

/// Second-order coefficient `γ_x = ∂∂'φ_x(0, 0)` of the group law.
pub fn gamma_from_group(m: &Manifold, x: &[f64], cfg: &ExpLogConfig) -> Result<Bilinear> {
    let n = m.dim();
    let cache = ExpCache::new(m, x, cfg);
    let mut out = Bilinear::zeros(n);
    for a in 0..n {
        let ea = unit(n, a);
        for b in 0..n {
            let eb = unit(n, b);
            let d = fd::d11(cfg.fd_step, cfg.richardson, |s, u| {
                cache.phi(&crate::tensor::scale(s, &ea), &crate::tensor::scale(u, &eb))
            })?;
            for i in 0..n {
                out.set(i, a, b, d[i]);
            }
        }
    }
    Ok(out)
}

/// Third-order coefficient `ρ_x⟨a, b, c⟩ = ∂∂'²φ_x(0, 0)`, symmetric in
/// `b, c`.
pub fn rho_at(m: &Manifold, x: &[f64], cfg: &ExpLogConfig) -> Result<Trilinear> {
    let n = m.dim();
    let cache = ExpCache::new(m, x, cfg);
    let mut rho = Trilinear::zeros(n);
    for a in 0..n {
        let ea = unit(n, a);
        for b in 0..n {
            let eb = unit(n, b);
            for c in b..n {
                let ec = unit(n, c);
                let d = if b == c {
                    fd::d12(cfg.fd_step, cfg.richardson, |s, u| {
                        cache.phi(&crate::tensor::scale(s, &ea), &crate::tensor::scale(u, &eb))
                    })?
                } else {
                    fd::d111(cfg.fd_step, cfg.richardson, |s, u, v| {
                        cache.phi(&crate::tensor::scale(s, &ea), &lin(u, &eb, v, &ec))
                    })?
                };
                for i in 0..n {
                    rho.set(i, a, b, c, d[i]);
                    rho.set(i, a, c, b, d[i]);
                }
            }
        }
    }
    Ok(rho)
}

/// Curvature operator of the group, `R⟨t, l', l⟩ = ρ⟨l, l', t⟩ − ρ⟨l', l, t⟩`.
pub fn curvature_from_rho(rho: &Trilinear) -> Trilinear {
    let n = rho.n;
    let mut r = Trilinear::zeros(n);
    for i in 0..n {
        for t in 0..n {
            for lp in 0..n {
                for l in 0..n {
                    r.set(i, t, lp, l, rho.get(i, l, lp, t) - rho.get(i, lp, l, t));
                }
            }
        }
    }
    r
}

pub fn curvature_from_group(m: &Manifold, x: &[f64], cfg: &ExpLogConfig) -> Result<Trilinear> {
    Ok(curvature_from_rho(&rho_at(m, x, cfg)?))
}

/// Gram form of the λ-transport, `G_x(t)⟨θ, θ⟩ = η⟨λ_x(t)θ, λ_x(t)θ⟩`.
pub fn gram(m: &Manifold, x: &[f64], t: &[f64], theta: &[f64], cfg: &ExpLogConfig) -> Result<f64> {
    let v = lambda_transport(m, x, t, theta, cfg)?;
    Ok(norm(&v).powi(2))
}

/// `d²/ds² G_x(sτ)⟨θ, θ⟩` at `s = 0`.
pub fn gram_second_derivative(m: &Manifold, x: &[f64], tau: &[f64], theta: &[f64], cfg: &ExpLogConfig) -> Result<f64> {
    let g0 = vec![norm(theta).powi(2)];
    let d = fd::d2(cfg.fd_step, cfg.richardson, &g0, |s| {
        Ok(vec![gram(m, x, &crate::tensor::scale(s, tau), theta, cfg)?])
    })?;
    Ok(d[0])
}
