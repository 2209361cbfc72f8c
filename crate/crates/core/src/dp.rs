//! The group of parallel transports: translations paired with rotations of
//! the model space, acting on tangent vectors through π-transport along
//! geodesics.
//!
//! `π_x(t)` carries frame components at `x' = exp_x(t)` back to `x` by
//! parallel transport along the geodesic. It is obtained by integrating the
//! transport equation for all frame basis vectors together with the geodesic.

use std::cell::RefCell;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd;
use crate::geodesic::{exp_with_transport, flow, log_map, log_map_from, ExpLogConfig, GeodesicPath};
use crate::manifold::{mat_vec, Manifold};
use crate::rt::lambda_transport;
use crate::tensor::{dot, max_abs_diff, norm, scale, unit, Bilinear, Trilinear};

/// Tolerance on `rᵀr = 1` for user-supplied rotations.
pub const ROTATION_TOL: f64 = 1e-12;
/// Tolerance on `rᵀr = 1` for composed rotations returned by [`dp_multiply`].
pub const COMPOSED_ROTATION_TOL: f64 = 1e-9;

/// Orientation-preserving orthogonal operator on frame vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationOperator(DMatrix<f64>);

impl RotationOperator {
    pub fn identity(n: usize) -> Self {
        RotationOperator(DMatrix::identity(n, n))
    }

    /// Validates `rᵀr = 1` within [`ROTATION_TOL`] and `det r > 0`.
    pub fn new(r: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(r, ROTATION_TOL)
    }

    pub fn with_tolerance(r: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::InvalidArgument("rotation must be a square matrix".into()));
        }
        let defect = orthogonality_defect(&r);
        if !(defect <= tol) {
            return Err(Error::RotationDefect { defect });
        }
        if r.determinant() <= 0.0 {
            return Err(Error::InvalidArgument("rotation must preserve orientation".into()));
        }
        Ok(RotationOperator(r))
    }

    /// Product of plane rotations with uniformly drawn angles, one per
    /// coordinate plane.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut r = DMatrix::identity(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let a: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
                r = plane_rotation(n, i, j, a) * r;
            }
        }
        RotationOperator(r)
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane.
    pub fn plane(n: usize, i: usize, j: usize, angle: f64) -> Self {
        RotationOperator(plane_rotation(n, i, j, angle))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.0, v)
    }

    pub fn inverse(&self) -> Self {
        RotationOperator(self.0.transpose())
    }

    pub fn compose(&self, other: &RotationOperator) -> Self {
        RotationOperator(&self.0 * &other.0)
    }
}

fn plane_rotation(n: usize, i: usize, j: usize, a: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n, n);
    let (s, c) = a.sin_cos();
    g[(i, i)] = c;
    g[(j, j)] = c;
    g[(i, j)] = -s;
    g[(j, i)] = s;
    g
}

/// Largest entry of `rᵀr − 1`.
pub fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    let n = r.ncols();
    (r.transpose() * r - DMatrix::<f64>::identity(n, n)).amax()
}

/// Element `(t, r)` of the transport group at a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct DPElement {
    pub t: Vec<f64>,
    pub r: RotationOperator,
}

impl DPElement {
    pub fn identity(n: usize) -> Self {
        DPElement { t: vec![0.0; n], r: RotationOperator::identity(n) }
    }

    pub fn translation(t: &[f64]) -> Self {
        DPElement { t: t.to_vec(), r: RotationOperator::identity(t.len()) }
    }
}

/// The matrix of `π_x(t)`, mapping frame components at `exp_x(t)` to frame
/// components at `x`.
pub fn pi_matrix(m: &Manifold, x: &[f64], t: &[f64], cfg: &ExpLogConfig) -> Result<DMatrix<f64>> {
    let (_, _, f) = exp_with_transport(m, x, t, cfg)?;
    invert(f)
}

fn invert(f: DMatrix<f64>) -> Result<DMatrix<f64>> {
    f.try_inverse().ok_or_else(|| Error::NonFinite("singular transport matrix".into()))
}

/// `π_x(t)⟨θ'⟩` for `θ'` given at `exp_x(t)`.
pub fn pi_transport(m: &Manifold, x: &[f64], t: &[f64], theta: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    if theta.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: theta.len() });
    }
    Ok(mat_vec(&pi_matrix(m, x, t, cfg)?, theta))
}

/// Memoized transports from one base point.
struct Transports<'a> {
    m: &'a Manifold,
    cfg: &'a ExpLogConfig,
    memo: RefCell<Vec<(Vec<u64>, (Vec<f64>, DMatrix<f64>))>>,
}

impl<'a> Transports<'a> {
    fn new(m: &'a Manifold, cfg: &'a ExpLogConfig) -> Self {
        Transports { m, cfg, memo: RefCell::new(Vec::new()) }
    }

    /// Endpoint and forward transport `F = π⁻¹` of `exp_x(t)`.
    fn get(&self, x: &[f64], t: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let key: Vec<u64> = x.iter().chain(t).map(|v| v.to_bits()).collect();
        if let Some((_, v)) = self.memo.borrow().iter().find(|(k, _)| *k == key) {
            return Ok(v.clone());
        }
        let (xe, _, f) = exp_with_transport(self.m, x, t, self.cfg)?;
        self.memo.borrow_mut().push((key, (xe.clone(), f.clone())));
        Ok((xe, f))
    }

    fn multiply(&self, x: &[f64], a: &DPElement, b: &DPElement) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let (x1, f1) = self.get(x, &a.t)?;
        let (x2, f2) = self.get(&x1, &b.t)?;
        let guess: Vec<f64> = a.t.iter().zip(&mat_vec(&invert(f1.clone())?, &b.t)).map(|(p, q)| p + q).collect();
        let t = log_map_from(self.m, x, &x2, Some(&guess), self.cfg)?;
        let (_, f3) = self.get(x, &t)?;
        let r = a.r.matrix() * invert(f1)? * b.r.matrix() * invert(f2)? * f3;
        Ok((t, r))
    }
}

/// Group product `(t, r) × (t', r')` with `(t', r')` given at `exp_x(t)`:
/// `t'' = φ_x(t, t')`, `r'' = r∘π_x(t)∘r'∘π_{x'}(t')∘π_x(t'')⁻¹`.
pub fn dp_multiply(m: &Manifold, x: &[f64], a: &DPElement, b: &DPElement, cfg: &ExpLogConfig) -> Result<DPElement> {
    let (t, r) = Transports::new(m, cfg).multiply(x, a, b)?;
    Ok(DPElement { t, r: RotationOperator::with_tolerance(r, COMPOSED_ROTATION_TOL)? })
}

/// `L_x(t, r) = r∘π_x(t)`, the operator carrying vectors at `exp_x(t)` to `x`.
pub fn l_map(m: &Manifold, x: &[f64], a: &DPElement, cfg: &ExpLogConfig) -> Result<DMatrix<f64>> {
    Ok(a.r.matrix() * pi_matrix(m, x, &a.t, cfg)?)
}

/// Action on a tangent vector `τ'` at `exp_x(t)`: `r⟨π_x(t)⟨τ'⟩⟩`.
pub fn dp_act_tangent(m: &Manifold, x: &[f64], a: &DPElement, tau: &[f64], cfg: &ExpLogConfig) -> Result<Vec<f64>> {
    Ok(a.r.apply(&pi_transport(m, x, &a.t, tau, cfg)?))
}

/// Action on the orthonormal frame: the moved frame `π_x(t)⁻¹·r⁻¹·e_{x'}`
/// at `x' = exp_x(t)`, returned with chart components of the frame vectors as
/// columns.
pub fn dp_act_frame(m: &Manifold, x: &[f64], a: &DPElement, cfg: &ExpLogConfig) -> Result<DMatrix<f64>> {
    let (xp, _, f) = exp_with_transport(m, x, &a.t, cfg)?;
    let k = m.frame_at(&xp)?.k;
    Ok(k * f * a.r.inverse().matrix())
}

/// Connection recovered from the moving frame: `γ⟨l, θ⟩` is the rate at
/// which the transported frame falls behind `e_{x'}` as `x'` leaves `x`
/// along `l`.
pub fn frame_connection(m: &Manifold, x: &[f64], cfg: &ExpLogConfig) -> Result<Bilinear> {
    let n = m.dim();
    let mut out = Bilinear::zeros(n);
    for l in 0..n {
        let el = unit(n, l);
        let d = fd::d1(cfg.fd_step, cfg.richardson, |e| {
            let t = scale(e, &el);
            let moved = dp_act_frame(m, x, &DPElement::translation(&t), cfg)?;
            let xp = crate::geodesic::exp_map(m, x, &t, cfg)?;
            let h = m.frame_at(&xp)?.h;
            Ok((h * moved).as_slice().to_vec())
        })?;
        // column-major: entry (i, θ) sits at θ·n + i
        for th in 0..n {
            for i in 0..n {
                out.set(i, l, th, -d[th * n + i]);
            }
        }
    }
    Ok(out)
}

/// Structure operator of the transport group restricted to translation
/// slots.
#[derive(Clone, Debug)]
pub struct SigmaOperator {
    /// Translation block, `Σ^T⟨l, l'⟩`.
    pub translation: Bilinear,
    /// Rotation block as a curvature-shaped map: component `(i, t, l, l')`
    /// is entry `(i, t)` of the rotation generator `Σ^R⟨l, l'⟩`.
    pub rotation: Trilinear,
}

/// Antisymmetrized mixed second derivative of [`dp_multiply`] in the two
/// translation parameters at the unit.
pub fn sigma_at(m: &Manifold, x: &[f64], cfg: &ExpLogConfig) -> Result<SigmaOperator> {
    let n = m.dim();
    let tr = Transports::new(m, cfg);
    let mut mixed = vec![vec![Vec::new(); n]; n];
    for a in 0..n {
        let ea = unit(n, a);
        for b in 0..n {
            let eb = unit(n, b);
            mixed[a][b] = fd::d11(cfg.fd_step, cfg.richardson, |s, u| {
                let (t, r) = tr.multiply(
                    x,
                    &DPElement::translation(&scale(s, &ea)),
                    &DPElement::translation(&scale(u, &eb)),
                )?;
                let mut v = t;
                v.extend_from_slice(r.as_slice());
                Ok(v)
            })?;
        }
    }
    let mut translation = Bilinear::zeros(n);
    let mut rotation = Trilinear::zeros(n);
    for a in 0..n {
        for b in 0..n {
            let (p, q) = (&mixed[a][b], &mixed[b][a]);
            for i in 0..n {
                translation.set(i, a, b, p[i] - q[i]);
                for t in 0..n {
                    let k = n + t * n + i;
                    rotation.set(i, t, a, b, p[k] - q[k]);
                }
            }
        }
    }
    Ok(SigmaOperator { translation, rotation })
}

/// Outcome of transporting a frame around a geodesic polygon.
#[derive(Clone, Debug, Serialize)]
pub struct Holonomy {
    /// Net transport, frame at the start to frame at the end of the path.
    pub rotation: Vec<Vec<f64>>,
    /// Signed rotation angle in the plane of the first two legs, positive
    /// from the first leg toward the second.
    pub angle: f64,
    /// Geodesic distance between the end point and the start point.
    pub closure_defect: f64,
    pub vertices: Vec<Vec<f64>>,
}

/// Walks geodesic legs `legs[i]` (frame vectors at `x`, each carried along
/// the path by parallel transport before it is followed) and returns the
/// accumulated transport.
pub fn holonomy_polygon(m: &Manifold, x: &[f64], legs: &[Vec<f64>], cfg: &ExpLogConfig) -> Result<Holonomy> {
    let n = m.dim();
    if legs.len() < 2 {
        return Err(Error::InvalidArgument("a loop needs at least two legs".into()));
    }
    let (e1, e2) = plane_basis(&legs[0], &legs[1])?;
    let mut total = DMatrix::<f64>::identity(n, n);
    let mut p = x.to_vec();
    let mut vertices = vec![p.clone()];
    for leg in legs {
        if leg.len() != n {
            return Err(Error::Dimension { expected: n, got: leg.len() });
        }
        let dir = mat_vec(&total, leg);
        let (q, _, f) = exp_with_transport(m, &p, &dir, cfg)?;
        total = f * total;
        p = q;
        vertices.push(p.clone());
    }
    let closure_defect = norm(&log_map(m, x, &p, cfg)?);
    let q1 = mat_vec(&total, &e1);
    let angle = dot(&e2, &q1).atan2(dot(&e1, &q1));
    let rotation = (0..n).map(|i| (0..n).map(|j| total[(i, j)]).collect()).collect();
    Ok(Holonomy { rotation, angle, closure_defect, vertices })
}

fn plane_basis(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let na = norm(a);
    if na == 0.0 {
        return Err(Error::InvalidArgument("loop direction is zero".into()));
    }
    let e1 = scale(1.0 / na, a);
    let proj = dot(&e1, b);
    let r: Vec<f64> = b.iter().zip(&e1).map(|(p, q)| p - proj * q).collect();
    let nr = norm(&r);
    if nr <= 1e-12 * norm(b).max(1.0) {
        return Err(Error::InvalidArgument("loop directions are parallel".into()));
    }
    Ok((e1, scale(1.0 / nr, &r)))
}

/// Geodesic quadrilateral with legs `scale·a`, `scale·b`, `−scale·a`,
/// `−scale·b`, each turned by transport.
pub fn holonomy_loop(m: &Manifold, x: &[f64], a: &[f64], b: &[f64], scale_: f64, cfg: &ExpLogConfig) -> Result<Holonomy> {
    let legs = vec![scale(scale_, a), scale(scale_, b), scale(-scale_, a), scale(-scale_, b)];
    holonomy_polygon(m, x, &legs, cfg)
}

/// Deviation of `u(x', θ_{x'}) = π_x(log_x x')⟨θ_{x'}⟩` from `θ₀` along a
/// geodesic, where `θ` is carried by the transport equation. Every
/// `stride`-th grid point of the path is checked.
pub fn first_integral_residual_every(
    m: &Manifold,
    path: &GeodesicPath,
    theta0: &[f64],
    stride: usize,
    cfg: &ExpLogConfig,
) -> Result<f64> {
    let n = m.dim();
    if theta0.len() != n {
        return Err(Error::Dimension { expected: n, got: theta0.len() });
    }
    let x = &path.base[..];
    let steps = path.s.len() - 1;
    let duration = *path.s.last().unwrap();
    let frame = m.frame_at(x)?;
    let p0 = DMatrix::from_column_slice(n, 1, &frame.to_chart(theta0));
    let mut carried = Vec::new();
    if steps > 0 {
        let stride = stride.max(1);
        flow(m, x, &path.initial_velocity, Some(&p0), duration, steps, |i, y| {
            if i % stride == 0 || i == steps {
                carried.push((i, y[..n].to_vec(), y[2 * n..3 * n].to_vec()));
            }
        })?;
    }
    let t0 = frame.to_frame(&path.initial_velocity);
    let mut worst = 0.0f64;
    for (i, xp, th_chart) in carried {
        let theta = m.frame_at(&xp)?.to_frame(&th_chart);
        let guess = scale(path.s[i], &t0);
        let t = log_map_from(m, x, &xp, Some(&guess), cfg)?;
        let u = pi_transport(m, x, &t, &theta, cfg)?;
        worst = worst.max(max_abs_diff(&u, theta0));
    }
    Ok(worst)
}

pub fn first_integral_residual(m: &Manifold, path: &GeodesicPath, theta0: &[f64], cfg: &ExpLogConfig) -> Result<f64> {
    first_integral_residual_every(m, path, theta0, 1, cfg)
}

/// Largest difference between the first `s`-derivatives at `s = 0` of
/// `π_x(s·e_l)⟨e_θ⟩` and `λ_x(s·e_l)⟨e_θ⟩` over all basis pairs.
pub fn consistency_residual(m: &Manifold, x: &[f64], cfg: &ExpLogConfig) -> Result<f64> {
    let n = m.dim();
    let mut worst = 0.0f64;
    for l in 0..n {
        let el = unit(n, l);
        for th in 0..n {
            let eth = unit(n, th);
            let dpi = fd::d1(cfg.fd_step, cfg.richardson, |s| pi_transport(m, x, &scale(s, &el), &eth, cfg))?;
            let dlam = fd::d1(cfg.fd_step, cfg.richardson, |s| lambda_transport(m, x, &scale(s, &el), &eth, cfg))?;
            worst = worst.max(max_abs_diff(&dpi, &dlam));
        }
    }
    Ok(worst)
}
