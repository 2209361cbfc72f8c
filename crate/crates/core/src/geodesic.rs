//! Geodesic initial- and boundary-value problems: the exponential map
//! `x' = exp_x(t)` and its inverse `t = log_x(x')`, which serve as the
//! canonical deformation of the translation group.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::{ChartPoint, ChartVector, Manifold};
use crate::tensor::{max_abs, norm};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpLogConfig {
    /// RK4 steps per unit of affine parameter (arc length).
    pub steps_per_unit: usize,
    pub bvp_max_iter: usize,
    /// Endpoint mismatch, in chart coordinates, at which shooting stops.
    pub bvp_tol: f64,
    /// Base step of the finite differences taken through the group law.
    pub fd_step: f64,
    /// One level of Richardson extrapolation on top of central differences.
    pub richardson: bool,
}

impl Default for ExpLogConfig {
    fn default() -> Self {
        ExpLogConfig { steps_per_unit: 256, bvp_max_iter: 50, bvp_tol: 1e-12, fd_step: 1e-2, richardson: true }
    }
}

impl ExpLogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_unit == 0 || self.bvp_max_iter == 0 {
            return Err(Error::InvalidArgument("step and iteration counts must be positive".into()));
        }
        if !(self.bvp_tol > 0.0) || !self.bvp_tol.is_finite() {
            return Err(Error::InvalidArgument(format!("bvp_tol must be positive, got {}", self.bvp_tol)));
        }
        if !(1e-6..=1e-2).contains(&self.fd_step) {
            return Err(Error::InvalidArgument(format!("fd_step must lie in [1e-6, 1e-2], got {}", self.fd_step)));
        }
        Ok(())
    }

    /// Steps used by `exp_map` for a frame vector of length `len`.
    ///
    /// Constant for all `len < 1`, so the exponential map is a smooth
    /// function of its argument wherever finite differences are taken.
    pub fn exp_steps(&self, len: f64) -> usize {
        self.steps_per_unit * (len.ceil() as usize).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub base: ChartPoint,
    pub initial_velocity: ChartVector,
    pub s: Vec<f64>,
    pub points: Vec<ChartPoint>,
    pub velocities: Vec<ChartVector>,
}

impl GeodesicPath {
    pub fn end(&self) -> (&ChartPoint, &ChartVector) {
        (self.points.last().unwrap(), self.velocities.last().unwrap())
    }
}

/// Output of one integration: final position, velocity and, if requested,
/// the transported chart matrix (columns are parallel-transported vectors).
pub(crate) struct FlowEnd {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Option<DMatrix<f64>>,
}

/// Fixed-step RK4 on `ẋ = v, v̇ = −Γ(v, v)` and optionally
/// `Ṗ = −Γ(v, P)` for each column of `P`.
pub(crate) fn flow(
    m: &Manifold,
    x0: &[f64],
    v0: &[f64],
    p0: Option<&DMatrix<f64>>,
    duration: f64,
    steps: usize,
    mut record: impl FnMut(usize, &[f64]),
) -> Result<FlowEnd> {
    let n = m.dim();
    let cols = p0.map_or(0, |p| p.ncols());
    let len = 2 * n + n * cols;
    let mut y = Vec::with_capacity(len);
    y.extend_from_slice(x0);
    y.extend_from_slice(v0);
    if let Some(p) = p0 {
        // column-major storage of P matches nalgebra
        y.extend_from_slice(p.as_slice());
    }
    if m.is_cartesian() {
        return straight_flow(m, y, n, p0, duration, steps, record);
    }
    let mut gam = crate::tensor::Bilinear::zeros(n);
    let mut rhs = |y: &[f64], out: &mut [f64]| -> Result<()> {
        m.christoffel_into(&y[..n], &mut gam)?;
        let v = &y[n..2 * n];
        out[..n].copy_from_slice(v);
        let acc = gam.apply(v, v);
        for i in 0..n {
            out[n + i] = -acc[i];
        }
        for c in 0..cols {
            let col = &y[2 * n + c * n..2 * n + (c + 1) * n];
            let d = gam.apply(v, col);
            for i in 0..n {
                out[2 * n + c * n + i] = -d[i];
            }
        }
        Ok(())
    };
    let h = duration / steps as f64;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut tmp = vec![0.0; len];
    record(0, &y);
    for step in 0..steps {
        rhs(&y, &mut k1)?;
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(&tmp, &mut k2)?;
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(&tmp, &mut k3)?;
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(&tmp, &mut k4)?;
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("geodesic state after step {}", step + 1)));
        }
        if !m.domain().contains(&y[..n]) {
            return Err(Error::OutOfDomain { point: y[..n].to_vec() });
        }
        record(step + 1, &y);
    }
    Ok(FlowEnd {
        x: y[..n].to_vec(),
        v: y[n..2 * n].to_vec(),
        p: p0.map(|_| DMatrix::from_column_slice(n, cols, &y[2 * n..])),
    })
}

/// Integrates the geodesic through `x` with chart velocity `v0` for affine
/// length `s`, recording every step.
/// Closed-form flow for Cartesian charts: `x(σ) = x₀ + σ·v₀`, velocity and
/// transported vectors constant.
fn straight_flow(
    m: &Manifold,
    mut y: Vec<f64>,
    n: usize,
    p0: Option<&DMatrix<f64>>,
    duration: f64,
    steps: usize,
    mut record: impl FnMut(usize, &[f64]),
) -> Result<FlowEnd> {
    let x0 = y[..n].to_vec();
    record(0, &y);
    for step in 1..=steps {
        let sigma = duration * step as f64 / steps as f64;
        for i in 0..n {
            y[i] = x0[i] + sigma * y[n + i];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("geodesic state after step {step}")));
        }
        if !m.domain().contains(&y[..n]) {
            return Err(Error::OutOfDomain { point: y[..n].to_vec() });
        }
        record(step, &y);
    }
    Ok(FlowEnd {
        x: y[..n].to_vec(),
        v: y[n..2 * n].to_vec(),
        p: p0.cloned(),
    })
}

pub fn geodesic_ivp(m: &Manifold, x: &[f64], v0: &[f64], s: f64, cfg: &ExpLogConfig) -> Result<GeodesicPath> {
    check_dims(m, x, v0)?;
    if !s.is_finite() || v0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite geodesic data".into()));
    }
    m.frame_at(x)?;
    let steps = ((cfg.steps_per_unit as f64 * s.abs()).ceil() as usize).max(1);
    let n = m.dim();
    let mut path = GeodesicPath {
        base: x.into(),
        initial_velocity: v0.into(),
        s: Vec::with_capacity(steps + 1),
        points: Vec::with_capacity(steps + 1),
        velocities: Vec::with_capacity(steps + 1),
    };
    let h = s / steps as f64;
    flow(m, x, v0, None, s, steps, |i, y| {
        path.s.push(i as f64 * h);
        path.points.push(y[..n].into());
        path.velocities.push(y[n..2 * n].into());
    })?;
    Ok(path)
}

fn check_dims(m: &Manifold, a: &[f64], b: &[f64]) -> Result<()> {
    for len in [a.len(), b.len()] {
        if len != m.dim() {
            return Err(Error::Dimension { expected: m.dim(), got: len });
        }
    }
    Ok(())
}

/// Endpoint of the geodesic leaving `x` with frame velocity `t`, integrated
/// over unit affine parameter; also returns the chart velocity there.
pub fn exp_with_velocity(m: &Manifold, x: &[f64], t: &[f64], cfg: &ExpLogConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(m, x, t)?;
    let frame = m.frame_at(x)?;
    let v0 = frame.to_chart(t);
    if t.iter().all(|&c| c == 0.0) {
        return Ok((x.to_vec(), v0));
    }
    let end = flow(m, x, &v0, None, 1.0, cfg.exp_steps(norm(t)), |_, _| {})?;
    Ok((end.x, end.v))
}

pub fn exp_map(m: &Manifold, x: &[f64], t: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    Ok(exp_with_velocity(m, x, t, cfg)?.0)
}

/// Like [`exp_with_velocity`], additionally transporting the frame at `x`.
///
/// The returned matrix `F` maps frame components at `x` to frame components
/// of the parallel-transported vectors at the endpoint.
pub fn exp_with_transport(
    m: &Manifold,
    x: &[f64],
    t: &[f64],
    cfg: &ExpLogConfig,
) -> Result<(Vec<f64>, Vec<f64>, DMatrix<f64>)> {
    check_dims(m, x, t)?;
    let frame = m.frame_at(x)?;
    let v0 = frame.to_chart(t);
    let n = m.dim();
    if t.iter().all(|&c| c == 0.0) {
        return Ok((x.to_vec(), v0, DMatrix::identity(n, n)));
    }
    let end = flow(m, x, &v0, Some(&frame.k), 1.0, cfg.exp_steps(norm(t)), |_, _| {})?;
    let h_end = m.frame_at(&end.x)?.h;
    let f = h_end * end.p.expect("transport requested");
    Ok((end.x, end.v, f))
}

/// Inverse of [`exp_map`]: the frame vector `t` at `x` whose geodesic
/// reaches `target` at unit parameter.
pub fn log_map(m: &Manifold, x: &[f64], target: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    log_map_from(m, x, target, None, cfg)
}

/// [`log_map`] with an optional starting guess for the shooting iteration.
///
/// Shooting is a chord-Newton iteration: the finite-difference Jacobian of
/// the endpoint map is reused while it keeps contracting the mismatch well,
/// and one extra correction is applied after convergence so that the result
/// is a smooth function of `target` down to rounding level.
pub fn log_map_from(
    m: &Manifold,
    x: &[f64],
    target: &[f64],
    guess: Option<&[f64]>,
    cfg: &ExpLogConfig,
) -> Result<Vec<f64>> {
    check_dims(m, x, target)?;
    let n = m.dim();
    if !m.domain().contains(target) {
        return Err(Error::OutOfDomain { point: target.to_vec() });
    }
    let frame = m.frame_at(x)?;
    if x == target {
        return Ok(vec![0.0; n]);
    }
    let mut t = match guess {
        Some(g) => g.to_vec(),
        None => {
            let d: Vec<f64> = target.iter().zip(x).map(|(a, b)| a - b).collect();
            let gam = m.christoffel(x)?;
            let corr = gam.apply(&d, &d);
            let v: Vec<f64> = d.iter().zip(&corr).map(|(a, c)| a + 0.5 * c).collect();
            frame.to_frame(&v)
        }
    };
    let mismatch = |t: &[f64]| -> Result<Vec<f64>> {
        let end = exp_map(m, x, t, cfg)?;
        Ok(end.iter().zip(target).map(|(a, b)| a - b).collect())
    };
    let mut f = mismatch(&t)?;
    let mut res = max_abs(&f);
    let mut jac: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> = None;
    let mut fresh = false;
    for _ in 0..cfg.bvp_max_iter {
        if jac.is_none() {
            jac = Some(endpoint_jacobian(m, x, &t, &f, &mismatch)?);
            fresh = true;
        }
        let lu = jac.as_ref().unwrap();
        let step = lu
            .solve(&DVector::from_column_slice(&f))
            .ok_or(Error::NoConvergence { iterations: 0, residual: res })?;
        if res < cfg.bvp_tol {
            // polishing correction with the current Jacobian
            return Ok(t.iter().zip(step.iter()).map(|(a, d)| a - d).collect());
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let trial: Vec<f64> = t.iter().zip(step.iter()).map(|(a, d)| a - lambda * d).collect();
            if let Ok(ft) = mismatch(&trial) {
                let rt = max_abs(&ft);
                if rt < res {
                    accepted = Some((trial, ft, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, ft, rt)) => {
                // a stale Jacobian that contracts poorly is rebuilt
                if rt > 0.1 * res && !fresh {
                    jac = None;
                }
                fresh = false;
                t = trial;
                f = ft;
                res = rt;
            }
            None if !fresh => jac = None,
            None => break,
        }
    }
    Err(Error::NoConvergence { iterations: cfg.bvp_max_iter, residual: res })
}

fn endpoint_jacobian(
    m: &Manifold,
    _x: &[f64],
    t: &[f64],
    f0: &[f64],
    mismatch: &impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let n = m.dim();
    let delta = 1e-7 * (1.0 + norm(t));
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut tp = t.to_vec();
        tp[c] += delta;
        let fp = mismatch(&tp)?;
        for r in 0..n {
            j[(r, c)] = (fp[r] - f0[r]) / delta;
        }
    }
    Ok(j.lu())
}

/// Frame-vector tangent of the geodesic `exp_x(t)` at its endpoint, in the
/// frame there; its η-length equals that of `t`.
pub fn end_tangent(m: &Manifold, x: &[f64], t: &[f64], cfg: &ExpLogConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let (xe, ve) = exp_with_velocity(m, x, t, cfg)?;
    let tau = m.chart_to_frame(&xe, &ve)?;
    Ok((xe, tau))
}

/// `‖φ_x(sτ, s'τ_{x'}) − (s + s')τ‖` with `τ_{x'}` the unit tangent of the
/// geodesic at `x' = exp_x(sτ)`.
pub fn canonicity_residual(
    m: &Manifold,
    x: &[f64],
    tau: &[f64],
    s: f64,
    s2: f64,
    cfg: &ExpLogConfig,
) -> Result<f64> {
    let t: Vec<f64> = tau.iter().map(|c| s * c).collect();
    let (_, tan) = end_tangent(m, x, &t, cfg)?;
    let len = norm(&t);
    let tau_end: Vec<f64> = if len > 0.0 { tan.iter().map(|c| c / len * norm(tau)).collect() } else { tau.to_vec() };
    let t2: Vec<f64> = tau_end.iter().map(|c| s2 * c).collect();
    let prod = crate::rt::rt_multiply(m, x, &t, &t2, cfg)?;
    let expect: Vec<f64> = tau.iter().map(|c| (s + s2) * c).collect();
    Ok(norm(&crate::tensor::sub(&prod, &expect)))
}

/// Residual of the second-order equation satisfied by the log map along
/// geodesics through `x`:
/// `(∂²H − ∂H∘Γ_{x'})⟨τ̃', τ̃'⟩` with `H = log_x`, by central differences
/// of step `eps` in `x'`.
pub fn cauchy_residual_with_step(
    m: &Manifold,
    x: &[f64],
    xp: &[f64],
    tv: &[f64],
    eps: f64,
    cfg: &ExpLogConfig,
) -> Result<f64> {
    check_dims(m, x, xp)?;
    let h0 = log_map(m, x, xp, cfg)?;
    let at = |dir: &[f64], e: f64| -> Result<Vec<f64>> {
        let p: Vec<f64> = xp.iter().zip(dir).map(|(a, d)| a + e * d).collect();
        log_map_from(m, x, &p, Some(&h0), cfg)
    };
    let (hp, hm) = (at(tv, eps)?, at(tv, -eps)?);
    let w = m.christoffel(xp)?.apply(tv, tv);
    let (wp, wm) = (at(&w, eps)?, at(&w, -eps)?);
    let r: Vec<f64> = (0..m.dim())
        .map(|i| (hp[i] - 2.0 * h0[i] + hm[i]) / (eps * eps) - (wp[i] - wm[i]) / (2.0 * eps))
        .collect();
    Ok(norm(&r))
}

pub fn cauchy_residual(m: &Manifold, x: &[f64], xp: &[f64], tv: &[f64], cfg: &ExpLogConfig) -> Result<f64> {
    cauchy_residual_with_step(m, x, xp, tv, cfg.fd_step, cfg)
}

/// Metric speed `g⟨v, v⟩` at each recorded point of a path.
pub fn speeds(m: &Manifold, path: &GeodesicPath) -> Result<Vec<f64>> {
    let n = m.dim();
    path.points
        .iter()
        .zip(&path.velocities)
        .map(|(p, v)| {
            let g = m.metric_value(p)?;
            Ok((0..n).map(|i| (0..n).map(|j| g[i * n + j] * v[i] * v[j]).sum::<f64>()).sum())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_2, PI};

    fn cfg() -> ExpLogConfig {
        ExpLogConfig::default()
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(ExpLogConfig { fd_step: 0.1, ..cfg() }.validate().is_err());
        assert!(ExpLogConfig { steps_per_unit: 0, ..cfg() }.validate().is_err());
    }

    #[test]
    fn flat_ivp() {
        let m = Manifold::euclidean(2).unwrap();
        let p = geodesic_ivp(&m, &[0.0, 0.0], &[1.0, 0.0], 2.0, &cfg()).unwrap();
        let (x, v) = p.end();
        assert!((x[0] - 2.0).abs() < 1e-14 && x[1] == 0.0);
        assert_eq!(v.0, vec![1.0, 0.0]);
        assert_eq!(p.s.len(), 513);
    }

    #[test]
    fn halfplane_vertical_ivp() {
        let m = Manifold::halfplane();
        let p = geodesic_ivp(&m, &[0.0, 1.0], &[0.0, 1.0], 1.0, &cfg()).unwrap();
        assert!((p.end().0[1] - E).abs() < 1e-8);
        assert_eq!(p.end().0[0], 0.0);
    }

    #[test]
    fn sphere_equator_ivp() {
        let m = Manifold::sphere();
        let p = geodesic_ivp(&m, &[FRAC_PI_2, 0.0], &[0.0, 1.0], FRAC_PI_2, &cfg()).unwrap();
        let x = p.end().0;
        assert!((x[0] - FRAC_PI_2).abs() < 1e-8 && (x[1] - FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn ivp_leaving_domain_fails() {
        // a meridian runs into the excluded polar cap
        let m = Manifold::sphere();
        let r = geodesic_ivp(&m, &[1.0, 0.0], &[-1.0, 0.0], 2.0, &cfg());
        assert!(matches!(r, Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn exp_examples() {
        let m = Manifold::halfplane();
        let x = exp_map(&m, &[0.0, 1.0], &[0.0, 1.0], &cfg()).unwrap();
        assert!((x[1] - E).abs() < 1e-8);
        let e = Manifold::euclidean(2).unwrap();
        let y = exp_map(&e, &[1.0, 1.0], &[3.0, 4.0], &cfg()).unwrap();
        assert!(crate::tensor::max_abs_diff(&y, &[4.0, 5.0]) < 1e-12);
        assert_eq!(exp_map(&m, &[0.3, 0.7], &[0.0, 0.0], &cfg()).unwrap(), vec![0.3, 0.7]);
    }

    #[test]
    fn log_examples() {
        let m = Manifold::halfplane();
        let t = log_map(&m, &[0.0, 1.0], &[1.0, 1.0], &cfg()).unwrap();
        assert!((norm(&t) - 1.5f64.acosh()).abs() < 1e-6);
        let s = Manifold::sphere();
        let t = log_map(&s, &[FRAC_PI_2, 0.0], &[FRAC_PI_2, PI / 3.0], &cfg()).unwrap();
        assert!((norm(&t) - PI / 3.0).abs() < 1e-6);
        assert_eq!(log_map(&s, &[1.0, 0.5], &[1.0, 0.5], &cfg()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn exp_log_round_trip() {
        for m in [Manifold::sphere(), Manifold::halfplane()] {
            for (x, t) in [([1.2, 0.3], [0.3, -0.4]), ([0.9, 1.1], [-0.2, 0.1]), ([1.5, 0.5], [0.05, 0.35])] {
                let xp = exp_map(&m, &x, &t, &cfg()).unwrap();
                let back = log_map(&m, &x, &xp, &cfg()).unwrap();
                assert!(crate::tensor::max_abs_diff(&back, &t) < 1e-9, "{m}: {back:?} vs {t:?}");
            }
        }
    }

    #[test]
    fn antipodal_target_does_not_converge() {
        // the sphere's chart domain excludes the poles, but a far target
        // along a meridian beyond the domain must fail rather than wrap
        let m = Manifold::sphere();
        let r = log_map(&m, &[0.2, 0.0], &[PI - 0.2, PI], &ExpLogConfig { bvp_max_iter: 10, ..cfg() });
        assert!(r.is_err());
    }

    #[test]
    fn speed_is_conserved() {
        let m = Manifold::halfplane();
        let p = geodesic_ivp(&m, &[0.0, 1.0], &[0.6, 0.8], 2.0, &cfg()).unwrap();
        let sp = speeds(&m, &p).unwrap();
        let drift = sp.iter().fold(0.0f64, |a, s| a.max((s - sp[0]).abs() / sp[0]));
        assert!(drift < 1e-9, "{drift}");
    }

    #[test]
    fn transport_matrix_is_orthogonal() {
        let m = Manifold::sphere();
        let (_, _, f) = exp_with_transport(&m, &[1.0, 0.2], &[0.4, 0.5], &cfg()).unwrap();
        assert!((f.transpose() * &f - DMatrix::identity(2, 2)).abs().max() < 1e-10);
    }
}
