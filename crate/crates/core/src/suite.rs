//! Catalogue of identities of the translation and transport groups, each
//! evaluated at seeded random samples against its analytic counterpart.

use std::cell::OnceCell;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dp::{
    consistency_residual, dp_act_tangent, dp_multiply, first_integral_residual_every, frame_connection, l_map,
    orthogonality_defect, pi_matrix, sigma_at, DPElement, RotationOperator, SigmaOperator,
};
use crate::error::{Error, Result};
use crate::fd;
use crate::geodesic::{
    canonicity_residual, cauchy_residual, end_tangent, exp_map, exp_with_velocity, geodesic_ivp, log_map, speeds,
    ExpLogConfig,
};
use crate::manifold::Manifold;
use crate::rt::{
    curvature_from_rho, gamma_from_group, gram_second_derivative, lambda_transport, mu_map, rho_at, rt_multiply,
};
use crate::tensor::{add, dot, max_abs, max_abs_diff, norm, scale, sub, unit, Bilinear, Trilinear};

/// Largest norm of a sampled group parameter.
pub const PARAM_CAP: f64 = 0.3;
/// Step of the five-point stencil for base-point derivatives of analytic
/// fields.
pub const FIELD_STEP: f64 = 1e-3;

/// Random inputs shared by every identity at one sample index.
#[derive(Clone, Debug)]
pub struct Sample {
    pub index: usize,
    pub x: Vec<f64>,
    /// Group parameters with norms in `[0.1, PARAM_CAP]`.
    pub t: [Vec<f64>; 3],
    /// Unit frame vectors.
    pub l: [Vec<f64>; 3],
    pub theta: Vec<f64>,
    pub r: [RotationOperator; 2],
}

fn direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = norm(&v);
        if len > 0.1 {
            return scale(1.0 / len, &v);
        }
    }
}

impl Sample {
    /// Deterministic draw: stream `index` of a ChaCha8 generator seeded
    /// with `seed`.
    pub fn draw(m: &Manifold, seed: u64, index: usize) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let n = m.dim();
        let x = m.domain().sample_box().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let mut param = || {
            let d = direction(&mut rng, n);
            let len = rng.gen_range(0.1..PARAM_CAP);
            scale(len, &d)
        };
        let t = [param(), param(), param()];
        let l = [direction(&mut rng, n), direction(&mut rng, n), direction(&mut rng, n)];
        let theta = direction(&mut rng, n);
        let r = [RotationOperator::random(n, &mut rng), RotationOperator::random(n, &mut rng)];
        Sample { index, x, t, l, theta, r }
    }

    fn params(&self) -> BTreeMap<String, Vec<f64>> {
        let mut p = BTreeMap::new();
        for i in 0..3 {
            p.insert(format!("t{}", i + 1), self.t[i].clone());
            p.insert(format!("l{}", i + 1), self.l[i].clone());
        }
        p.insert("theta".into(), self.theta.clone());
        for i in 0..2 {
            p.insert(format!("r{}", i + 1), self.r[i].matrix().transpose().as_slice().to_vec());
        }
        p
    }
}

/// Per-sample evaluation state with lazily computed expensive operators.
pub struct Ctx<'a> {
    pub m: &'a Manifold,
    pub cfg: &'a ExpLogConfig,
    pub s: &'a Sample,
    rho: OnceCell<Result<Trilinear>>,
    sigma: OnceCell<Result<SigmaOperator>>,
}

impl<'a> Ctx<'a> {
    pub fn new(m: &'a Manifold, cfg: &'a ExpLogConfig, s: &'a Sample) -> Self {
        Ctx { m, cfg, s, rho: OnceCell::new(), sigma: OnceCell::new() }
    }

    fn x(&self) -> &[f64] {
        &self.s.x
    }

    fn phi(&self, x: &[f64], t: &[f64], t2: &[f64]) -> Result<Vec<f64>> {
        rt_multiply(self.m, x, t, t2, self.cfg)
    }

    fn rho(&self) -> Result<Trilinear> {
        self.rho.get_or_init(|| rho_at(self.m, self.x(), self.cfg)).clone()
    }

    fn group_curvature(&self) -> Result<Trilinear> {
        Ok(curvature_from_rho(&self.rho()?))
    }

    fn sigma(&self) -> Result<SigmaOperator> {
        self.sigma.get_or_init(|| sigma_at(self.m, self.x(), self.cfg)).clone()
    }

    /// `x + ε·k_x⟨l⟩`.
    fn shifted(&self, x: &[f64], l: &[f64], eps: f64) -> Result<Vec<f64>> {
        let v = self.m.frame_to_chart(x, l)?;
        Ok(add(x, &scale(eps, &v)))
    }

    /// Base-point derivative `e_l` of a solver-built quantity.
    fn e_group(&self, l: &[f64], mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        let x = self.x();
        fd::d1(self.cfg.fd_step, self.cfg.richardson, |e| f(&self.shifted(x, l, e)?))
    }

    /// Base-point derivative `e_l` of an analytic field.
    fn e_field(&self, l: &[f64], mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        let x = self.x();
        fd::d1_five(FIELD_STEP, |e| f(&self.shifted(x, l, e)?))
    }

    /// Frame tangent at `exp_x(t)` of the geodesic with initial vector
    /// `t/|t|`.
    fn unit_tangent_at_end(&self, t: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (xe, v) = end_tangent(self.m, self.x(), t, self.cfg)?;
        Ok((xe, scale(1.0 / norm(t), &v)))
    }
}

type Eval = fn(&Ctx) -> Result<f64>;

/// One checked identity.
pub struct Identity {
    pub id: &'static str,
    /// The relation in formula form.
    pub eq_ref: &'static str,
    pub tolerance: f64,
    pub eval: Eval,
}

fn tensor_cyclic(r: &Trilinear) -> f64 {
    let n = r.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let s = r.get(i, a, b, c) + r.get(i, b, c, a) + r.get(i, c, a, b);
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

fn antisym(g: &Bilinear) -> Bilinear {
    g.sub(&g.swapped())
}

/// `γ⟨l, ·⟩` as a matrix acting on frame vectors.
fn gamma_slot(g: &Bilinear, l: &[f64]) -> Vec<Vec<f64>> {
    let n = g.n;
    (0..n).map(|c| g.apply(l, &unit(n, c))).collect()
}

fn apply_cols(cols: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| cols.iter().zip(v).map(|(c, w)| c[i] * w).sum()).collect()
}

fn frame_metric(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let n = c.m.dim();
    let g = c.m.metric_at(x)?;
    let h = c.m.frame_at(x)?.h;
    let hth = h.transpose() * &h;
    let mut worst = 0.0f64;
    let mut scale_ = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((hth[(i, j)] - g.g(i, j)).abs());
            scale_ = scale_.max(g.g(i, j).abs());
        }
    }
    Ok(worst / scale_)
}

fn christoffel_symmetry(c: &Ctx) -> Result<f64> {
    let g = c.m.christoffel(c.x())?;
    Ok(g.max_abs_diff(&g.swapped()))
}

fn metric_compatibility(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let n = c.m.dim();
    let g = c.m.metric_at(x)?;
    let gam = c.m.christoffel(x)?;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut rhs = 0.0;
                for l in 0..n {
                    rhs += gam.get(l, k, i) * g.g(l, j) + gam.get(l, k, j) * g.g(i, l);
                }
                worst = worst.max((g.dg(i, j, k) - rhs).abs());
            }
        }
    }
    Ok(worst)
}

fn gamma_antisymmetry(c: &Ctx) -> Result<f64> {
    let g = c.m.gamma_at(c.x())?;
    let n = g.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((g.get(i, a, b) + g.get(b, a, i)).abs());
            }
        }
    }
    Ok(worst)
}

fn anholonomy_frame(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let n = c.m.dim();
    let cx = c.m.anholonomy_at(x)?;
    let frame = c.m.frame_at(x)?;
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let (ea, eb) = (unit(n, a), unit(n, b));
            let dab = c.e_field(&ea, |y| Ok(c.m.frame_at(y)?.to_chart(&eb)))?;
            let dba = c.e_field(&eb, |y| Ok(c.m.frame_at(y)?.to_chart(&ea)))?;
            let rhs = frame.to_chart(&cx.apply(&ea, &eb));
            worst = worst.max(max_abs_diff(&sub(&dab, &dba), &rhs));
        }
    }
    Ok(worst)
}

fn anholonomy_gamma(c: &Ctx) -> Result<f64> {
    let x = c.x();
    Ok(c.m.anholonomy_at(x)?.max_abs_diff(&antisym(&c.m.gamma_at(x)?)))
}

fn cyclic_classical(c: &Ctx) -> Result<f64> {
    Ok(tensor_cyclic(&c.m.riemann_classical_at(c.x())?))
}

fn bianchi_second(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let n = c.m.dim();
    let r = c.m.riemann_classical_at(x)?;
    let g = c.m.gamma_at(x)?;
    // covariant derivative ∇_l R for each basis direction l
    let mut nabla = Vec::with_capacity(n);
    for l in 0..n {
        let el = unit(n, l);
        let de = c.e_field(&el, |y| Ok(c.m.riemann_classical_at(y)?.data))?;
        let gl = gamma_slot(&g, &el);
        let mut d = Trilinear { n, data: de };
        for t in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let (et, ea, eb) = (unit(n, t), unit(n, a), unit(n, b));
                    let v = r.apply(&et, &ea, &eb);
                    let corr = sub(
                        &apply_cols(&gl, &v),
                        &add(
                            &add(&r.apply(&gl[t], &ea, &eb), &r.apply(&et, &gl[a], &eb)),
                            &r.apply(&et, &ea, &gl[b]),
                        ),
                    );
                    for i in 0..n {
                        d.set(i, t, a, b, d.get(i, t, a, b) + corr[i]);
                    }
                }
            }
        }
        nabla.push(d);
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for t in 0..n {
            for l in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let s = nabla[l].get(i, t, a, b) + nabla[a].get(i, t, b, l) + nabla[b].get(i, t, l, a);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn jacobi_anholonomy(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let cx = c.m.anholonomy_at(x)?;
    let l = &c.s.l;
    let mut total = vec![0.0; c.m.dim()];
    for (a, b, d) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let e = c.e_field(&l[a], |y| Ok(c.m.anholonomy_at(y)?.apply(&l[b], &l[d])))?;
        total = add(&total, &add(&e, &cx.apply(&l[a], &cx.apply(&l[b], &l[d]))));
    }
    Ok(max_abs(&total))
}

fn exp_log_roundtrip(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let xp = exp_map(c.m, c.x(), t, c.cfg)?;
    Ok(max_abs_diff(&log_map(c.m, c.x(), &xp, c.cfg)?, t))
}

fn canonicity(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let s = norm(t);
    canonicity_residual(c.m, c.x(), &scale(1.0 / s, t), s, norm(&c.s.t[1]), c.cfg)
}

fn cauchy(c: &Ctx) -> Result<f64> {
    let (xp, v) = exp_with_velocity(c.m, c.x(), &c.s.t[0], c.cfg)?;
    cauchy_residual(c.m, c.x(), &xp, &v, c.cfg)
}

fn speed(c: &Ctx) -> Result<f64> {
    let v0 = c.m.frame_to_chart(c.x(), &c.s.t[0])?;
    let path = geodesic_ivp(c.m, c.x(), &v0, 1.0, c.cfg)?;
    let sp = speeds(c.m, &path)?;
    Ok(sp.iter().map(|v| (v - sp[0]).abs()).fold(0.0, f64::max) / sp[0])
}

/// Number of legs in the scale-attachment check.
const ATTACH: usize = 4;

fn scale_attachment(c: &Ctx) -> Result<f64> {
    let u = scale(0.5, &c.s.t[0]);
    let mut x = c.x().to_vec();
    let mut step = u.clone();
    for _ in 0..ATTACH {
        let (xe, v) = end_tangent(c.m, &x, &step, c.cfg)?;
        x = xe;
        step = v;
    }
    let direct = exp_map(c.m, c.x(), &scale(ATTACH as f64, &u), c.cfg)?;
    Ok(max_abs_diff(&x, &direct))
}

fn unit_laws(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let z = vec![0.0; t.len()];
    let a = c.phi(c.x(), t, &z)?;
    let b = c.phi(c.x(), &z, t)?;
    Ok(max_abs_diff(&a, t).max(max_abs_diff(&b, t)))
}

fn inverse(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let xp = exp_map(c.m, c.x(), t, c.cfg)?;
    let inv = log_map(c.m, &xp, c.x(), c.cfg)?;
    Ok(max_abs(&c.phi(c.x(), t, &inv)?))
}

fn associativity(c: &Ctx) -> Result<f64> {
    let [t1, t2, t3] = &c.s.t;
    let x = c.x();
    let xp = exp_map(c.m, x, t1, c.cfg)?;
    let left = c.phi(x, &c.phi(x, t1, t2)?, t3)?;
    let right = c.phi(x, t1, &c.phi(&xp, t2, t3)?)?;
    Ok(max_abs_diff(&left, &right))
}

fn action_composition(c: &Ctx) -> Result<f64> {
    let [t1, t2, _] = &c.s.t;
    let x = c.x();
    let two = exp_map(c.m, &exp_map(c.m, x, t1, c.cfg)?, t2, c.cfg)?;
    let one = exp_map(c.m, x, &c.phi(x, t1, t2)?, c.cfg)?;
    Ok(max_abs_diff(&two, &one))
}

fn lie_mu(c: &Ctx) -> Result<f64> {
    let [t1, t2, _] = &c.s.t;
    let l = &c.s.l[0];
    let x = c.x();
    let mu = mu_map(c.m, x, t1, l, c.cfg)?;
    let lhs = fd::d1(c.cfg.fd_step, c.cfg.richardson, |e| c.phi(x, &add(t1, &scale(e, &mu)), t2))?;
    let p = c.phi(x, t1, t2)?;
    let rhs = add(&mu_map(c.m, x, &p, l, c.cfg)?, &c.e_group(l, |y| c.phi(y, t1, t2))?);
    Ok(max_abs_diff(&lhs, &rhs))
}

fn lie_lambda(c: &Ctx) -> Result<f64> {
    let [t1, t2, _] = &c.s.t;
    let th = &c.s.theta;
    let x = c.x();
    let xp = exp_map(c.m, x, t1, c.cfg)?;
    let lam = lambda_transport(c.m, &xp, t2, th, c.cfg)?;
    let lhs = fd::d1(c.cfg.fd_step, c.cfg.richardson, |e| c.phi(x, t1, &add(t2, &scale(e, &lam))))?;
    let rhs = lambda_transport(c.m, x, &c.phi(x, t1, t2)?, th, c.cfg)?;
    Ok(max_abs_diff(&lhs, &rhs))
}

fn action_lambda(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let th = &c.s.theta;
    let x = c.x();
    let lam = lambda_transport(c.m, x, t, th, c.cfg)?;
    let d = fd::d1(c.cfg.fd_step, c.cfg.richardson, |e| exp_map(c.m, x, &add(t, &scale(e, &lam)), c.cfg))?;
    let xp = exp_map(c.m, x, t, c.cfg)?;
    Ok(max_abs_diff(&c.m.chart_to_frame(&xp, &d)?, th))
}

fn action_mu(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let l = &c.s.l[0];
    let x = c.x();
    let mu = mu_map(c.m, x, t, l, c.cfg)?;
    let lhs = fd::d1(c.cfg.fd_step, c.cfg.richardson, |e| exp_map(c.m, x, &add(t, &scale(e, &mu)), c.cfg))?;
    let rhs = c.e_group(l, |y| exp_map(c.m, y, t, c.cfg))?;
    let xp = exp_map(c.m, x, t, c.cfg)?;
    Ok(max_abs_diff(&c.m.chart_to_frame(&xp, &lhs)?, &c.m.chart_to_frame(&xp, &rhs)?))
}

fn maurer_cartan_mu(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let [l1, l2, _] = &c.s.l;
    let x = c.x();
    let half = |a: &[f64], b: &[f64]| -> Result<Vec<f64>> {
        let e = c.e_group(a, |y| mu_map(c.m, y, t, b, c.cfg))?;
        let v = mu_map(c.m, x, t, b, c.cfg)?;
        let d = fd::d1(c.cfg.fd_step, c.cfg.richardson, |s| mu_map(c.m, x, &add(t, &scale(s, &v)), a, c.cfg))?;
        Ok(add(&e, &d))
    };
    let lhs = sub(&half(l1, l2)?, &half(l2, l1)?);
    let cx = c.m.anholonomy_at(x)?;
    let rhs = mu_map(c.m, x, t, &cx.apply(l1, l2), c.cfg)?;
    Ok(max_abs_diff(&lhs, &rhs))
}

fn maurer_cartan_lambda(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let [l1, l2, _] = &c.s.l;
    let x = c.x();
    let half = |a: &[f64], b: &[f64]| -> Result<Vec<f64>> {
        let v = lambda_transport(c.m, x, t, a, c.cfg)?;
        fd::d1(c.cfg.fd_step, c.cfg.richardson, |s| lambda_transport(c.m, x, &add(t, &scale(s, &v)), b, c.cfg))
    };
    let lhs = sub(&half(l1, l2)?, &half(l2, l1)?);
    let xp = exp_map(c.m, x, t, c.cfg)?;
    let cxp = c.m.anholonomy_at(&xp)?;
    let rhs = lambda_transport(c.m, x, t, &cxp.apply(l1, l2), c.cfg)?;
    Ok(max_abs_diff(&lhs, &rhs))
}

fn gamma_group(c: &Ctx) -> Result<f64> {
    let g = gamma_from_group(c.m, c.x(), c.cfg)?;
    Ok(g.max_abs_diff(&c.m.gamma_at(c.x())?))
}

fn structure_group(c: &Ctx) -> Result<f64> {
    let g = gamma_from_group(c.m, c.x(), c.cfg)?;
    Ok(antisym(&g).max_abs_diff(&c.m.anholonomy_at(c.x())?))
}

fn curvature_relation(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let n = c.m.dim();
    let g = c.m.gamma_at(x)?;
    let cx = c.m.anholonomy_at(x)?;
    let r = c.group_curvature()?;
    let [l1, l2, _] = &c.s.l;
    let mut worst = 0.0f64;
    for ti in 0..n {
        let t = unit(n, ti);
        let half = |a: &[f64], b: &[f64]| -> Result<Vec<f64>> {
            let e = c.e_field(a, |y| Ok(c.m.gamma_at(y)?.apply(b, &t)))?;
            Ok(add(&e, &g.apply(a, &g.apply(b, &t))))
        };
        let lhs = sub(&half(l1, l2)?, &half(l2, l1)?);
        let rhs = add(&r.apply(&t, l1, l2), &g.apply(&cx.apply(l1, l2), &t));
        worst = worst.max(max_abs_diff(&lhs, &rhs));
    }
    Ok(worst)
}

fn curvature_group(c: &Ctx) -> Result<f64> {
    Ok(c.group_curvature()?.max_abs_diff(&c.m.riemann_classical_at(c.x())?))
}

fn cyclic_group(c: &Ctx) -> Result<f64> {
    Ok(tensor_cyclic(&c.group_curvature()?))
}

fn rho_cyclic(c: &Ctx) -> Result<f64> {
    Ok(tensor_cyclic(&c.rho()?))
}

fn rho_two_thirds(c: &Ctx) -> Result<f64> {
    let rho = c.rho()?;
    let r = c.m.riemann_classical_at(c.x())?;
    let n = rho.n;
    let mut worst = 0.0f64;
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((rho.get(i, a, b, b) - 2.0 / 3.0 * r.get(i, b, b, a)).abs());
            }
        }
    }
    Ok(worst)
}

fn mu_canonicity(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let s = norm(t);
    let tau = scale(1.0 / s, t);
    let mu = mu_map(c.m, c.x(), t, &tau, c.cfg)?;
    let expect = add(&tau, &scale(s, &c.m.gamma_at(c.x())?.apply(&tau, &tau)));
    Ok(max_abs_diff(&mu, &expect))
}

fn lambda_canonicity(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let (_, tau_end) = c.unit_tangent_at_end(t)?;
    let lam = lambda_transport(c.m, c.x(), t, &tau_end, c.cfg)?;
    Ok(max_abs_diff(&lam, &scale(1.0 / norm(t), t)))
}

fn rt_membership(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let (_, tau_end) = c.unit_tangent_at_end(t)?;
    let lam = lambda_transport(c.m, c.x(), t, &tau_end, c.cfg)?;
    Ok((norm(&lam) - norm(&tau_end)).abs())
}

/// Coefficient of the curvature contraction in the second derivative of the
/// λ-transport Gram form.
pub const GRAM_COEFFICIENT: f64 = -2.0 / 3.0;

fn gram_curvature(c: &Ctx) -> Result<f64> {
    let tau = &c.s.l[0];
    let th = &c.s.theta;
    let lhs = gram_second_derivative(c.m, c.x(), tau, th, c.cfg)?;
    let r = c.m.riemann_classical_at(c.x())?;
    let rhs = GRAM_COEFFICIENT * dot(th, &r.apply(tau, tau, th));
    Ok((lhs - rhs).abs())
}

fn consistency(c: &Ctx) -> Result<f64> {
    consistency_residual(c.m, c.x(), c.cfg)
}

fn pi_orthogonality(c: &Ctx) -> Result<f64> {
    Ok(orthogonality_defect(&pi_matrix(c.m, c.x(), &c.s.t[0], c.cfg)?))
}

fn pi_lambda_tangent(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let (_, tau_end) = c.unit_tangent_at_end(t)?;
    let p = crate::dp::pi_transport(c.m, c.x(), t, &tau_end, c.cfg)?;
    let l = lambda_transport(c.m, c.x(), t, &tau_end, c.cfg)?;
    Ok(max_abs_diff(&p, &l))
}

fn element(t: &[f64], r: &RotationOperator) -> DPElement {
    DPElement { t: t.to_vec(), r: r.clone() }
}

fn dp_diff(a: &DPElement, b: &DPElement) -> f64 {
    max_abs_diff(&a.t, &b.t).max((a.r.matrix() - b.r.matrix()).amax())
}

fn dp_unit(c: &Ctx) -> Result<f64> {
    let n = c.m.dim();
    let a = element(&c.s.t[0], &c.s.r[0]);
    let e = DPElement::identity(n);
    let left = dp_multiply(c.m, c.x(), &e, &a, c.cfg)?;
    let right = dp_multiply(c.m, c.x(), &a, &e, c.cfg)?;
    Ok(dp_diff(&left, &a).max(dp_diff(&right, &a)))
}

fn dp_associativity(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let a = element(&c.s.t[0], &c.s.r[0]);
    let b = element(&c.s.t[1], &c.s.r[1]);
    let d = element(&c.s.t[2], &c.s.r[0]);
    let xp = exp_map(c.m, x, &a.t, c.cfg)?;
    let left = dp_multiply(c.m, x, &dp_multiply(c.m, x, &a, &b, c.cfg)?, &d, c.cfg)?;
    let right = dp_multiply(c.m, x, &a, &dp_multiply(c.m, &xp, &b, &d, c.cfg)?, c.cfg)?;
    Ok(dp_diff(&left, &right))
}

fn l_map_composition(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let a = element(&c.s.t[0], &c.s.r[0]);
    let b = element(&c.s.t[1], &c.s.r[1]);
    let xp = exp_map(c.m, x, &a.t, c.cfg)?;
    let prod = dp_multiply(c.m, x, &a, &b, c.cfg)?;
    let lhs = l_map(c.m, x, &prod, c.cfg)?;
    let rhs = l_map(c.m, x, &a, c.cfg)? * l_map(c.m, &xp, &b, c.cfg)?;
    Ok((lhs - rhs).amax())
}

fn dp_extended_canonicity(c: &Ctx) -> Result<f64> {
    let t = &c.s.t[0];
    let s2 = norm(&c.s.t[1]);
    let (_, tau_end) = c.unit_tangent_at_end(t)?;
    let a = DPElement::translation(t);
    let b = DPElement::translation(&scale(s2, &tau_end));
    let p = dp_multiply(c.m, c.x(), &a, &b, c.cfg)?;
    let expect = DPElement::translation(&scale(1.0 + s2 / norm(t), t));
    Ok(dp_diff(&p, &expect))
}

fn equality_principle(c: &Ctx) -> Result<f64> {
    let a = element(&c.s.t[0], &c.s.r[0]);
    let vs = [c.s.theta.clone(), scale(0.7, &c.s.l[0])];
    let moved: Vec<Vec<f64>> =
        vs.iter().map(|v| dp_act_tangent(c.m, c.x(), &a, v, c.cfg)).collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in i..2 {
            worst = worst.max((dot(&moved[i], &moved[j]) - dot(&vs[i], &vs[j])).abs());
        }
    }
    Ok(worst)
}

fn frame_connection_limit(c: &Ctx) -> Result<f64> {
    Ok(frame_connection(c.m, c.x(), c.cfg)?.max_abs_diff(&c.m.gamma_at(c.x())?))
}

fn sigma_translation(c: &Ctx) -> Result<f64> {
    Ok(c.sigma()?.translation.max_abs_diff(&c.m.anholonomy_at(c.x())?))
}

fn sigma_rotation(c: &Ctx) -> Result<f64> {
    Ok(c.sigma()?.rotation.max_abs_diff(&c.m.riemann_classical_at(c.x())?))
}

fn sigma_group_curvature(c: &Ctx) -> Result<f64> {
    Ok(c.sigma()?.rotation.max_abs_diff(&c.group_curvature()?))
}

fn dr_jacobi(c: &Ctx) -> Result<f64> {
    let x = c.x();
    let n = c.m.dim();
    let sig = c.sigma()?;
    let g = c.m.gamma_at(x)?;
    let l = &c.s.l;
    let mut trans = vec![0.0; n];
    let mut rot = vec![vec![0.0; n]; n];
    for (a, b, d) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let e = c.e_field(&l[a], |y| Ok(c.m.anholonomy_at(y)?.apply(&l[b], &l[d])))?;
        trans = add(&trans, &add(&e, &sig.translation.apply(&l[a], &sig.translation.apply(&l[b], &l[d]))));
        let ga = gamma_slot(&g, &l[a]);
        let inner = sig.translation.apply(&l[b], &l[d]);
        for ti in 0..n {
            let t = unit(n, ti);
            let de = c.e_field(&l[a], |y| Ok(c.m.riemann_classical_at(y)?.apply(&t, &l[b], &l[d])))?;
            // [γ_a, R_bd] t
            let comm = sub(
                &apply_cols(&ga, &sig.rotation.apply(&t, &l[b], &l[d])),
                &sig.rotation.apply(&ga[ti], &l[b], &l[d]),
            );
            let term = add(&add(&de, &comm), &sig.rotation.apply(&t, &l[a], &inner));
            rot[ti] = add(&rot[ti], &term);
        }
    }
    Ok(rot.iter().map(|v| max_abs(v)).fold(max_abs(&trans), f64::max))
}

/// Grid stride used for the first-integral check.
const FIRST_INTEGRAL_STRIDE: usize = 16;

fn first_integral(c: &Ctx) -> Result<f64> {
    let v0 = c.m.frame_to_chart(c.x(), &c.s.t[0])?;
    let path = geodesic_ivp(c.m, c.x(), &v0, 1.0, c.cfg)?;
    first_integral_residual_every(c.m, &path, &c.s.theta, FIRST_INTEGRAL_STRIDE, c.cfg)
}

macro_rules! identities {
    ($($id:literal, $eq:literal, $tol:expr, $f:ident;)*) => {
        &[$(Identity { id: $id, eq_ref: $eq, tolerance: $tol, eval: $f }),*]
    };
}

static CATALOGUE: &[Identity] = identities! {
    "frame_metric", "h^T h = g", 1e-12, frame_metric;
    "christoffel_symmetry", "Γ(a,b) = Γ(b,a)", 1e-12, christoffel_symmetry;
    "metric_compatibility", "∂_k g_ij = g(Γ(k,i), j) + g(i, Γ(k,j))", 1e-10, metric_compatibility;
    "gamma_antisymmetry", "η<τ, γ<t,τ>> = 0", 1e-9, gamma_antisymmetry;
    "anholonomy_frame", "e_l(k l') - e_l'(k l) = k C<l,l'>", 1e-8, anholonomy_frame;
    "anholonomy_gamma", "C<l,l'> = γ<l,l'> - γ<l',l>", 1e-9, anholonomy_gamma;
    "cyclic_classical", "R<t,l,l'> + R<l,l',t> + R<l',t,l> = 0 (classical)", 1e-9, cyclic_classical;
    "bianchi_second", "(∇_l R)<t,l',l''> + cycl(l,l',l'') = 0", 1e-8, bianchi_second;
    "jacobi_anholonomy", "e_l C<l',l''> + C<l, C<l',l''>> + cycl = 0", 1e-8, jacobi_anholonomy;
    "exp_log_roundtrip", "log_x(exp_x(t)) = t", 1e-7, exp_log_roundtrip;
    "canonicity", "φ(sτ, s'τ_x') = (s+s')τ", 1e-7, canonicity;
    "cauchy", "(∂²H - ∂H∘Γ)<τ',τ'> = 0", 1e-4, cauchy;
    "speed_conservation", "g<ẋ,ẋ> constant along geodesics", 1e-9, speed;
    "scale_attachment", "exp applied n times along the tangent = exp(n u)", 4e-7, scale_attachment;
    "unit_laws", "φ(t,0) = φ(0,t) = t", 1e-9, unit_laws;
    "inverse", "φ(t, log_x'(x)) = 0", 1e-7, inverse;
    "associativity", "φ(φ(t,t'),t'') = φ(t,φ(t',t''))", 1e-6, associativity;
    "action_composition", "f_x'(t') = f_x(φ(t,t'))", 1e-7, action_composition;
    "lie_mu", "∂φ(t,t')<μ(t)l> = μ(φ(t,t'))l + e_l φ(t,t')", 1e-5, lie_mu;
    "lie_lambda", "∂'φ(t,t')<λ_x'(t')θ> = λ(φ(t,t'))θ", 1e-5, lie_lambda;
    "action_lambda", "∂f(t)<λ(t)θ> = k_x' θ", 1e-6, action_lambda;
    "action_mu", "∂f_x(t)<μ(t)l> = e_l f_x(t)", 1e-6, action_mu;
    "maurer_cartan_mu", "e_l μ(t)l' + ∂μ(t)<μ(t)l', l> - (l<->l') = μ(t)C<l,l'>", 1e-5, maurer_cartan_mu;
    "maurer_cartan_lambda", "∂λ(t)<λ(t)l, l'> - (l<->l') = λ(t)C_x'<l,l'>", 1e-5, maurer_cartan_lambda;
    "gamma_from_group", "∂∂'φ(0,0) = γ", 1e-6, gamma_group;
    "structure_from_group", "∂∂'φ(0,0) - transpose = C", 1e-6, structure_group;
    "curvature_relation", "e_l γ<l',t> + γ<l,γ<l',t>> - (l<->l') = R<t,l,l'> + γ<C<l,l'>,t>", 5e-3, curvature_relation;
    "curvature_group_classical", "ρ<l,l',t> - ρ<l',l,t> = R_classical<t,l',l>", 5e-3, curvature_group;
    "cyclic_group", "R<t,l,l'> + R<l,l',t> + R<l',t,l> = 0 (group)", 5e-3, cyclic_group;
    "rho_cyclic", "ρ<l,l',l''> + cycl = 0", 5e-3, rho_cyclic;
    "rho_two_thirds", "ρ<l',l,l> = (2/3) R<l,l,l'>", 5e-3, rho_two_thirds;
    "mu_canonicity", "μ(sτ)τ = τ + sγ<τ,τ>", 1e-5, mu_canonicity;
    "lambda_canonicity", "λ(sτ)τ_x' = τ", 1e-6, lambda_canonicity;
    "rt_membership", "η<λ(sτ)τ_x', λ(sτ)τ_x'> = η<τ_x',τ_x'>", 1e-6, rt_membership;
    "gram_curvature", "d²/ds² G(sτ)<θ,θ> = -(2/3) η<θ, R<τ,τ,θ>>", 1e-4, gram_curvature;
    "consistency", "d/ds π(sl)θ = d/ds λ(sl)θ at s = 0", 1e-5, consistency;
    "pi_orthogonality", "π(t)^T π(t) = 1", 1e-9, pi_orthogonality;
    "pi_lambda_tangent", "π(sτ)τ_x' = λ(sτ)τ_x'", 1e-6, pi_lambda_tangent;
    "dp_unit", "(0,1)×ϑ = ϑ×(0,1) = ϑ", 1e-10, dp_unit;
    "dp_associativity", "(ϑ×ϑ')×ϑ'' = ϑ×(ϑ'×ϑ'')", 1e-5, dp_associativity;
    "l_map_composition", "L(Φ(ϑ,ϑ')) = L(ϑ)∘L_x'(ϑ')", 1e-5, l_map_composition;
    "dp_extended_canonicity", "(sτ,1)×(s'τ_x',1) = ((s+s')τ,1)", 1e-6, dp_extended_canonicity;
    "equality_principle", "η<rπ(t)a, rπ(t)b> = η<a,b>", 1e-9, equality_principle;
    "frame_connection", "lim (e_x - e'_x)/t = γ·e_x", 1e-5, frame_connection_limit;
    "sigma_translation", "Σ^T_TT = C", 5e-3, sigma_translation;
    "sigma_rotation", "Σ^R_TT = R", 5e-3, sigma_rotation;
    "sigma_group_curvature", "Σ^R_TT = ρ<l,l',t> - ρ<l',l,t>", 5e-3, sigma_group_curvature;
    "dr_jacobi", "DΣ<ξ,ξ',ξ''> + Σ<ξ,Σ<ξ',ξ''>> + cycl = 0 on translations", 5e-3, dr_jacobi;
    "first_integral", "π_x(H_x(x'-x))θ_x' = θ_x", 1e-6, first_integral;
};

pub fn catalogue() -> &'static [Identity] {
    CATALOGUE
}

pub fn find(id: &str) -> Option<&'static Identity> {
    CATALOGUE.iter().find(|i| i.id == id)
}

/// Residual of one identity at one sample.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityRecord {
    pub identity_id: String,
    pub eq_ref: String,
    pub sample: usize,
    pub point: Vec<f64>,
    pub params: BTreeMap<String, Vec<f64>>,
    /// Absent when the evaluation failed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySummary {
    pub identity_id: String,
    pub eq_ref: String,
    pub count: usize,
    pub failures: usize,
    pub errors: usize,
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    pub exp_log: ExpLogConfig,
    /// Per-identity tolerance overrides.
    pub tolerances: BTreeMap<String, f64>,
    /// Restrict the run to these identities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<String>>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, samples: 20, exp_log: ExpLogConfig::default(), tolerances: BTreeMap::new(), only: None }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        self.exp_log.validate()?;
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        let ids = self.tolerances.keys().chain(self.only.iter().flatten());
        for id in ids {
            if find(id).is_none() {
                return Err(Error::InvalidArgument(format!("unknown identity '{id}'")));
            }
        }
        for (id, tol) in &self.tolerances {
            if !(*tol > 0.0) || !tol.is_finite() {
                return Err(Error::InvalidArgument(format!("tolerance for '{id}' must be positive")));
            }
        }
        Ok(())
    }

    fn selected(&self) -> Vec<&'static Identity> {
        match &self.only {
            None => CATALOGUE.iter().collect(),
            Some(ids) => CATALOGUE.iter().filter(|i| ids.iter().any(|s| s == i.id)).collect(),
        }
    }

    pub fn tolerance(&self, ident: &Identity) -> f64 {
        self.tolerances.get(ident.id).copied().unwrap_or(ident.tolerance)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub summaries: Vec<IdentitySummary>,
    pub records: Vec<IdentityRecord>,
    pub pass: bool,
}

/// Evaluates `idents` at one sample.
pub fn evaluate_sample(
    m: &Manifold,
    sample: &Sample,
    idents: &[&Identity],
    cfg: &SuiteConfig,
) -> Vec<IdentityRecord> {
    let ctx = Ctx::new(m, &cfg.exp_log, sample);
    let params = sample.params();
    idents
        .iter()
        .map(|ident| {
            let tolerance = cfg.tolerance(ident);
            let (residual, error) = match (ident.eval)(&ctx) {
                Ok(r) if r.is_finite() => (Some(r), None),
                Ok(r) => (None, Some(format!("non_finite: residual {r}"))),
                Err(e) => (None, Some(format!("{}: {e}", e.kind()))),
            };
            IdentityRecord {
                identity_id: ident.id.to_string(),
                eq_ref: ident.eq_ref.to_string(),
                sample: sample.index,
                point: sample.x.clone(),
                params: params.clone(),
                pass: residual.is_some_and(|r| r < tolerance),
                residual,
                tolerance,
                error,
            }
        })
        .collect()
}

/// Runs the selected identities over `cfg.samples` seeded samples, in
/// parallel over samples on the current rayon pool. Output order is fixed by
/// catalogue order, then sample index.
pub fn run_suite(m: &Manifold, cfg: &SuiteConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    let idents = cfg.selected();
    let per_sample: Vec<Vec<IdentityRecord>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| evaluate_sample(m, &Sample::draw(m, cfg.seed, i), &idents, cfg))
        .collect();
    let mut records = Vec::with_capacity(idents.len() * cfg.samples);
    let mut summaries = Vec::with_capacity(idents.len());
    for (k, ident) in idents.iter().enumerate() {
        let recs: Vec<&IdentityRecord> = per_sample.iter().map(|v| &v[k]).collect();
        let max_residual = recs.iter().filter_map(|r| r.residual).fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.max(r)))
        });
        summaries.push(IdentitySummary {
            identity_id: ident.id.to_string(),
            eq_ref: ident.eq_ref.to_string(),
            count: recs.len(),
            failures: recs.iter().filter(|r| !r.pass).count(),
            errors: recs.iter().filter(|r| r.error.is_some()).count(),
            max_residual,
            tolerance: cfg.tolerance(ident),
            pass: recs.iter().all(|r| r.pass),
        });
        records.extend(recs.into_iter().cloned());
    }
    let pass = summaries.iter().all(|s| s.pass);
    Ok(SuiteResult { summaries, records, pass })
}
