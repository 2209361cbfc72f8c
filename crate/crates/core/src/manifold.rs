//! Charts with a metric, their orthonormal frames, Levi-Civita connection,
//! rotation coefficients and curvature.

use std::fmt;
use std::ops::Deref;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::domain::Domain;
use crate::dsl::{parse_metric, MetricSpec};
use crate::error::{Error, Result};
use crate::jet::{Jet, Real};
use crate::metric::MetricJet;
use crate::tensor::{Bilinear, Trilinear};

macro_rules! vector_newtype {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Debug, PartialEq, Serialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<f64>);

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(v)
            }
        }

        impl From<&[f64]> for $name {
            fn from(v: &[f64]) -> Self {
                $name(v.to_vec())
            }
        }
    };
}

vector_newtype!(
    /// Chart coordinates of a point.
    ChartPoint
);
vector_newtype!(
    /// Tangent vector in the coordinate basis.
    ChartVector
);
vector_newtype!(
    /// Tangent vector in orthonormal-frame components; group parameters
    /// live in this space.
    FrameVector
);

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Euclidean(usize),
    Sphere,
    HalfPlane,
    Custom(MetricSpec),
}

/// A single chart carrying a Riemannian metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifold {
    name: String,
    kind: Kind,
    domain: Domain,
    coords: Vec<String>,
}

/// Orthonormal frame at a point: `h` maps chart components to frame
/// components, `k = h⁻¹` maps back, `dk[m] = ∂_m k`.
#[derive(Clone, Debug)]
pub struct Frame {
    pub h: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub dk: Vec<DMatrix<f64>>,
}

impl Frame {
    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn to_frame(&self, v: &[f64]) -> Vec<f64> {
        mat_vec(&self.h, v)
    }

    pub fn to_chart(&self, t: &[f64]) -> Vec<f64> {
        mat_vec(&self.k, t)
    }
}

/// Christoffel symbols `Γ^i_ab` and their derivatives `dgamma[m] = ∂_m Γ`.
#[derive(Clone, Debug)]
pub struct Connection {
    pub gamma: Bilinear,
    pub dgamma: Vec<Bilinear>,
}

/// Everything local at one point, computed from a single second-order
/// evaluation of the metric.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub metric: MetricJet,
    pub frame: Frame,
    pub connection: Connection,
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

impl Manifold {
    pub const BUILTINS: [&'static str; 3] = ["euclidean<n>", "sphere", "halfplane"];

    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("euclidean dimension must be at least 1".into()));
        }
        Ok(Manifold {
            name: format!("euclidean{n}"),
            kind: Kind::Euclidean(n),
            domain: Domain::unbounded(n),
            coords: (0..n).map(|i| format!("x{i}")).collect(),
        })
    }

    /// Unit sphere in the polar chart `(theta, phi)`, kept away from the poles.
    pub fn sphere() -> Self {
        let pi = std::f64::consts::PI;
        Manifold {
            name: "sphere".into(),
            kind: Kind::Sphere,
            domain: Domain::new(vec![(0.05, pi - 0.05), (f64::NEG_INFINITY, f64::INFINITY)]),
            coords: vec!["theta".into(), "phi".into()],
        }
    }

    /// Poincaré upper half-plane, `g = (dx² + dy²)/y²`.
    pub fn halfplane() -> Self {
        Manifold {
            name: "halfplane".into(),
            kind: Kind::HalfPlane,
            domain: Domain::new(vec![(f64::NEG_INFINITY, f64::INFINITY), (0.0, f64::INFINITY)]),
            coords: vec!["x".into(), "y".into()],
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "sphere" => Some(Self::sphere()),
            "halfplane" => Some(Self::halfplane()),
            _ => name
                .strip_prefix("euclidean")
                .and_then(|d| d.parse::<usize>().ok())
                .and_then(|n| Self::euclidean(n).ok()),
        }
    }

    pub fn from_spec(name: impl Into<String>, spec: MetricSpec) -> Self {
        Manifold { name: name.into(), domain: spec.domain.clone(), coords: spec.coords.clone(), kind: Kind::Custom(spec) }
    }

    pub fn from_source(name: impl Into<String>, src: &str) -> Result<Self> {
        Ok(Self::from_spec(name, parse_metric(src)?))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// True for the built-in Cartesian Euclidean charts, where geodesics are
    /// straight lines.
    pub fn is_cartesian(&self) -> bool {
        matches!(self.kind, Kind::Euclidean(_))
    }

    pub fn spec(&self) -> Option<&MetricSpec> {
        match &self.kind {
            Kind::Custom(s) => Some(s),
            _ => None,
        }
    }

    /// Lower-triangle metric entries evaluated with any scalar type.
    ///
    /// Built-ins use the same arithmetic as the equivalent `.metric`
    /// expressions, so a file transcription reproduces them bit for bit.
    pub fn metric_entries<R: Real>(&self, x: &[R]) -> Result<Vec<R>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::Dimension { expected: n, got: x.len() });
        }
        match &self.kind {
            Kind::Euclidean(_) => Ok((0..n)
                .flat_map(|i| (0..=i).map(move |j| (i, j)))
                .map(|(i, j)| x[0].constant_like(if i == j { 1.0 } else { 0.0 }))
                .collect()),
            Kind::Sphere => {
                let t = &x[0];
                Ok(vec![t.constant_like(1.0), t.constant_like(0.0), t.sin().powi(2)])
            }
            Kind::HalfPlane => {
                let y = &x[1];
                let w = y.constant_like(1.0).div(&y.mul(y));
                if y.value() == 0.0 {
                    return Err(Error::DomainViolation("division by zero".into()));
                }
                Ok(vec![w.clone(), y.constant_like(0.0), w])
            }
            Kind::Custom(spec) => spec.eval_entries(x),
        }
    }

    fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        Ok(())
    }

    fn entry_jets(&self, x: &[f64], second: bool) -> Result<Vec<Jet>> {
        self.check_domain(x)?;
        let n = self.dim();
        let vars: Vec<Jet> = (0..n).map(|i| Jet::variable(x[i], i, n, second)).collect();
        self.metric_entries(&vars)
    }

    /// Metric matrix (values only), row-major.
    pub fn metric_value(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(x)?;
        let n = self.dim();
        let e = self.metric_entries(x)?;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = e[i * (i + 1) / 2 + j];
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("metric entry g[{i}][{j}]")));
                }
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    /// Metric with first and second derivatives; fails off-domain or where
    /// the metric is not positive definite.
    pub fn metric_at(&self, x: &[f64]) -> Result<MetricJet> {
        let jets = self.entry_jets(x, true)?;
        let m = MetricJet::from_lower(self.dim(), &jets)?;
        cholesky_lower(&jets, self.dim()).map_err(|_| Error::NotPositiveDefinite { point: x.to_vec() })?;
        Ok(m)
    }

    pub fn frame_at(&self, x: &[f64]) -> Result<Frame> {
        let jets = self.entry_jets(x, false)?;
        frame_from_jets(&jets, self.dim(), x)
    }

    /// Christoffel symbols only; the inner loop of every geodesic solve.
    pub fn christoffel(&self, x: &[f64]) -> Result<Bilinear> {
        let mut out = Bilinear::zeros(self.dim());
        self.christoffel_into(x, &mut out)?;
        Ok(out)
    }

    /// [`Manifold::christoffel`] writing into an existing buffer.
    pub fn christoffel_into(&self, x: &[f64], out: &mut Bilinear) -> Result<()> {
        let n = self.dim();
        out.n = n;
        out.data.resize(n * n * n, 0.0);
        if let Kind::Euclidean(_) = self.kind {
            self.check_domain(x)?;
            out.data.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        if n > SMALL {
            let m = self.metric_at(x)?;
            let ginv = spd_inverse(&m.g, n).ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
            *out = christoffel_symbols(&m, &ginv);
            return Ok(());
        }
        let jets = self.entry_jets(x, false)?;
        // fixed stride SMALL keeps everything on the stack
        const S: usize = SMALL;
        let mut g = [0.0; S * S];
        let mut dg = [0.0; S * S * S];
        for i in 0..n {
            for j in 0..=i {
                let e = &jets[i * (i + 1) / 2 + j];
                if !e.v.is_finite() {
                    return Err(Error::NonFinite(format!("metric entry g[{i}][{j}]")));
                }
                g[i * S + j] = e.v;
                g[j * S + i] = e.v;
                for (k, &d) in e.g.iter().enumerate() {
                    dg[(i * S + j) * S + k] = d;
                    dg[(j * S + i) * S + k] = d;
                }
            }
        }
        let ginv = stack_spd_inverse(&g, n).ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
        let mut first = [0.0; S * S * S];
        for d in 0..n {
            for a in 0..n {
                for b in 0..=a {
                    let v = 0.5 * (dg[(d * S + b) * S + a] + dg[(d * S + a) * S + b] - dg[(a * S + b) * S + d]);
                    first[(d * S + a) * S + b] = v;
                    first[(d * S + b) * S + a] = v;
                }
            }
        }
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    for d in 0..n {
                        s += ginv[i * S + d] * first[(d * S + a) * S + b];
                    }
                    out.data[(i * n + a) * n + b] = s;
                }
            }
        }
        Ok(())
    }

    pub fn christoffel_at(&self, x: &[f64]) -> Result<Connection> {
        Ok(self.geometry_at(x)?.connection)
    }

    pub fn geometry_at(&self, x: &[f64]) -> Result<PointGeometry> {
        let jets = self.entry_jets(x, true)?;
        let n = self.dim();
        let metric = MetricJet::from_lower(n, &jets)?;
        let frame = frame_from_jets(&jets, n, x)?;
        let ginv = spd_inverse(&metric.g, n).ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
        let gamma = christoffel_symbols(&metric, &ginv);

        // ∂_m Γ^i_ab = ∂_m(g^id) Γ_d,ab + g^id ∂_m Γ_d,ab
        let mut dgamma = Vec::with_capacity(n);
        for mm in 0..n {
            let mut dginv = vec![0.0; n * n];
            for i in 0..n {
                for d in 0..n {
                    let mut s = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            s -= ginv[i * n + p] * metric.dg(p, q, mm) * ginv[q * n + d];
                        }
                    }
                    dginv[i * n + d] = s;
                }
            }
            let mut dg = Bilinear::zeros(n);
            for i in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            let first = 0.5 * (metric.dg(d, b, a) + metric.dg(d, a, b) - metric.dg(a, b, d));
                            let dfirst = 0.5
                                * (metric.d2g(d, b, a, mm) + metric.d2g(d, a, b, mm) - metric.d2g(a, b, d, mm));
                            s += dginv[i * n + d] * first + ginv[i * n + d] * dfirst;
                        }
                        dg.set(i, a, b, s);
                    }
                }
            }
            dgamma.push(dg);
        }
        Ok(PointGeometry { metric, frame, connection: Connection { gamma, dgamma } })
    }

    pub fn gamma_at(&self, x: &[f64]) -> Result<Bilinear> {
        Ok(self.geometry_at(x)?.gamma())
    }

    pub fn anholonomy_at(&self, x: &[f64]) -> Result<Bilinear> {
        Ok(self.geometry_at(x)?.anholonomy())
    }

    pub fn riemann_classical_at(&self, x: &[f64]) -> Result<Trilinear> {
        Ok(self.geometry_at(x)?.riemann_frame())
    }

    /// Frame vector `t` at `x` converted to chart components.
    pub fn frame_to_chart(&self, x: &[f64], t: &[f64]) -> Result<Vec<f64>> {
        Ok(self.frame_at(x)?.to_chart(t))
    }

    pub fn chart_to_frame(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.frame_at(x)?.to_frame(v))
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.metric.n
    }

    /// Rotation coefficients `γ⟨l, l'⟩ = h(Γ(kl, kl') + ((kl)·∂k) l')`.
    pub fn gamma(&self) -> Bilinear {
        let n = self.dim();
        let Frame { h, k, dk } = &self.frame;
        let gam = &self.connection.gamma;
        let mut out = Bilinear::zeros(n);
        for a in 0..n {
            for b in 0..n {
                // chart vector Γ(k e_a, k e_b) + (k e_a · ∂)k e_b
                let mut v = vec![0.0; n];
                for j in 0..n {
                    let mut s = 0.0;
                    for c in 0..n {
                        for d in 0..n {
                            s += gam.get(j, c, d) * k[(c, a)] * k[(d, b)];
                        }
                    }
                    for m in 0..n {
                        s += k[(m, a)] * dk[m][(j, b)];
                    }
                    v[j] = s;
                }
                for i in 0..n {
                    out.set(i, a, b, (0..n).map(|j| h[(i, j)] * v[j]).sum());
                }
            }
        }
        out
    }

    /// Anholonomy of the frame, `C⟨l, l'⟩ = h((kl·∂)k l' − (kl'·∂)k l)`.
    pub fn anholonomy(&self) -> Bilinear {
        let n = self.dim();
        let Frame { h, k, dk } = &self.frame;
        let mut out = Bilinear::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let v: Vec<f64> = (0..n)
                    .map(|j| (0..n).map(|m| k[(m, a)] * dk[m][(j, b)] - k[(m, b)] * dk[m][(j, a)]).sum())
                    .collect();
                for i in 0..n {
                    out.set(i, a, b, (0..n).map(|j| h[(i, j)] * v[j]).sum());
                }
            }
        }
        out
    }

    /// Coordinate Riemann tensor, `get(a, b, c, d) = R^a_bcd` with
    /// `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`.
    pub fn riemann_chart(&self) -> Trilinear {
        let n = self.dim();
        let g = &self.connection.gamma;
        let dg = &self.connection.dgamma;
        let mut r = Trilinear::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = dg[c].get(a, d, b) - dg[d].get(a, c, b);
                        for e in 0..n {
                            s += g.get(a, c, e) * g.get(e, d, b) - g.get(a, d, e) * g.get(e, c, b);
                        }
                        r.set(a, b, c, d, s);
                    }
                }
            }
        }
        r
    }

    /// Frame curvature `R⟨t, l, l'⟩ = h R(kl, kl') kt`, antisymmetric in
    /// its last two slots.
    pub fn riemann_frame(&self) -> Trilinear {
        let n = self.dim();
        let rc = self.riemann_chart();
        let Frame { h, k, .. } = &self.frame;
        // contract the three lower slots with k one at a time
        let mut tmp = rc.clone();
        for slot in 1..4 {
            let mut next = Trilinear::zeros(n);
            for i in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            let mut s = 0.0;
                            for p in 0..n {
                                let (aa, bb, cc, kk) = match slot {
                                    1 => (p, b, c, k[(p, a)]),
                                    2 => (a, p, c, k[(p, b)]),
                                    _ => (a, b, p, k[(p, c)]),
                                };
                                s += tmp.get(i, aa, bb, cc) * kk;
                            }
                            next.set(i, a, b, c, s);
                        }
                    }
                }
            }
            tmp = next;
        }
        let mut out = Trilinear::zeros(n);
        for i in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        out.set(i, a, b, c, (0..n).map(|j| h[(i, j)] * tmp.get(j, a, b, c)).sum());
                    }
                }
            }
        }
        out
    }
}

/// Sectional curvature of the plane spanned by orthonormal frame vectors
/// `e_a`, `e_b`: `K = −η⟨e_b, R⟨e_a, e_a, e_b⟩⟩`.
pub fn sectional_curvature(r: &Trilinear, a: usize, b: usize) -> f64 {
    -r.get(b, a, a, b)
}

fn christoffel_symbols(m: &MetricJet, ginv: &[f64]) -> Bilinear {
    let n = m.n;
    let mut out = Bilinear::zeros(n);
    for i in 0..n {
        for a in 0..n {
            for b in 0..=a {
                let mut s = 0.0;
                for d in 0..n {
                    s += ginv[i * n + d] * 0.5 * (m.dg(d, b, a) + m.dg(d, a, b) - m.dg(a, b, d));
                }
                out.set(i, a, b, s);
                out.set(i, b, a, s);
            }
        }
    }
    out
}

const SMALL: usize = 4;

/// Inverse of an SPD matrix stored with stride [`SMALL`], `n ≤ SMALL`.
fn stack_spd_inverse(g: &[f64; SMALL * SMALL], n: usize) -> Option<[f64; SMALL * SMALL]> {
    const S: usize = SMALL;
    let mut l = [0.0; S * S];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i * S + j];
            for p in 0..j {
                s -= l[i * S + p] * l[j * S + p];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * S + i] = s.sqrt();
            } else {
                l[i * S + j] = s / l[j * S + j];
            }
        }
    }
    // g⁻¹ = L⁻ᵀ L⁻¹, column by column
    let mut inv = [0.0; S * S];
    let mut y = [0.0; S];
    for c in 0..n {
        for i in 0..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for p in 0..i {
                s -= l[i * S + p] * y[p];
            }
            y[i] = s / l[i * S + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in i + 1..n {
                s -= l[p * S + i] * inv[p * S + c];
            }
            inv[i * S + c] = s / l[i * S + i];
        }
    }
    Some(inv)
}

/// Inverse of a small symmetric positive-definite matrix via Cholesky.
pub(crate) fn spd_inverse(g: &[f64], n: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, g);
    let chol = nalgebra::linalg::Cholesky::new(m)?;
    let inv = chol.inverse();
    Some((0..n * n).map(|i| inv[(i / n, i % n)]).collect())
}

/// Lower Cholesky factor of the lower-triangle entries, row-major `n×n`.
fn cholesky_lower<R: Real>(entries: &[R], n: usize) -> std::result::Result<Vec<R>, ()> {
    let zero = entries[0].constant_like(0.0);
    let mut l = vec![zero; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = entries[i * (i + 1) / 2 + j].clone();
            for p in 0..j {
                s = s.sub(&l[i * n + p].mul(&l[j * n + p]));
            }
            if i == j {
                if !(s.value() > 0.0) || !s.value().is_finite() {
                    return Err(());
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s.div(&l[j * n + j]);
            }
        }
    }
    Ok(l)
}

fn frame_from_jets(jets: &[Jet], n: usize, x: &[f64]) -> Result<Frame> {
    let l = cholesky_lower(jets, n).map_err(|_| Error::NotPositiveDefinite { point: x.to_vec() })?;
    // inverse of the lower factor by forward substitution
    let zero = Jet::constant(0.0);
    let mut inv = vec![zero; n * n];
    for j in 0..n {
        inv[j * n + j] = Jet::constant(1.0).div(&l[j * n + j]);
        for i in j + 1..n {
            let mut s = Jet::constant(0.0);
            for p in j..i {
                s = s.add(&l[i * n + p].mul(&inv[p * n + j]));
            }
            inv[i * n + j] = s.neg().div(&l[i * n + i]);
        }
    }
    // h = Lᵀ, k = (L⁻¹)ᵀ
    let h = DMatrix::from_fn(n, n, |i, j| l[j * n + i].v);
    let k = DMatrix::from_fn(n, n, |i, j| inv[j * n + i].v);
    let dk = (0..n).map(|m| DMatrix::from_fn(n, n, |i, j| inv[j * n + i].grad(m))).collect();
    Ok(Frame { h, k, dk })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    const EPS: f64 = 1e-14;

    #[test]
    fn builtin_names_resolve() {
        assert_eq!(Manifold::builtin("euclidean3").unwrap().dim(), 3);
        assert!(Manifold::builtin("euclidean0").is_none());
        assert!(Manifold::builtin("torus").is_none());
        assert_eq!(Manifold::builtin("sphere").unwrap().coords(), ["theta", "phi"]);
    }

    #[test]
    fn metric_examples() {
        let m = Manifold::sphere().metric_at(&[PI / 2.0, 0.3]).unwrap();
        assert!((m.g(0, 0) - 1.0).abs() < EPS && (m.g(1, 1) - 1.0).abs() < EPS && m.g(0, 1) == 0.0);
        let m = Manifold::halfplane().metric_at(&[0.0, 2.0]).unwrap();
        assert_eq!((m.g(0, 0), m.g(1, 1)), (0.25, 0.25));
        let m = Manifold::euclidean(2).unwrap().metric_at(&[5.0, -3.0]).unwrap();
        assert_eq!(m.g, vec![1.0, 0.0, 0.0, 1.0]);
        assert!(m.dg.iter().chain(&m.d2g).all(|&v| v == 0.0));
    }

    #[test]
    fn out_of_domain_is_an_error() {
        assert!(matches!(Manifold::halfplane().metric_at(&[0.0, -1.0]), Err(Error::OutOfDomain { .. })));
        assert!(matches!(Manifold::sphere().frame_at(&[0.01, 0.0]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn frame_examples() {
        let f = Manifold::halfplane().frame_at(&[0.0, 2.0]).unwrap();
        assert_eq!(f.h, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        let f = Manifold::sphere().frame_at(&[FRAC_PI_4, 0.0]).unwrap();
        assert!((f.h[(1, 1)] - FRAC_PI_4.sin()).abs() < EPS);
        assert!((&f.h * &f.k - DMatrix::identity(2, 2)).abs().max() < EPS);
    }

    #[test]
    fn frame_derivative_matches_closed_form() {
        // half-plane: k = y·I, so ∂_y k = I
        let f = Manifold::halfplane().frame_at(&[0.3, 1.7]).unwrap();
        assert!((&f.dk[1] - DMatrix::identity(2, 2)).abs().max() < EPS);
        assert!(f.dk[0].abs().max() == 0.0);
    }

    #[test]
    fn christoffel_examples() {
        let c = Manifold::sphere().christoffel(&[FRAC_PI_4, 0.0]).unwrap();
        assert!((c.get(0, 1, 1) + 0.5).abs() < EPS);
        assert!((c.get(1, 0, 1) - 1.0).abs() < EPS);
        assert!((c.get(1, 1, 0) - 1.0).abs() < EPS);
        let c = Manifold::halfplane().christoffel(&[0.0, 1.0]).unwrap();
        assert!((c.get(0, 0, 1) + 1.0).abs() < EPS);
        assert!((c.get(1, 0, 0) - 1.0).abs() < EPS);
        assert!((c.get(1, 1, 1) + 1.0).abs() < EPS);
        assert!(c.get(0, 0, 0).abs() < EPS);
    }

    #[test]
    fn halfplane_vertical_gamma_vanishes() {
        let g = Manifold::halfplane().gamma_at(&[0.0, 1.0]).unwrap();
        assert!(g.apply(&[0.0, 1.0], &[0.0, 1.0]).iter().all(|v| v.abs() < EPS));
    }

    #[test]
    fn anholonomy_is_antisymmetrized_gamma() {
        let geo = Manifold::sphere().geometry_at(&[FRAC_PI_4, 0.2]).unwrap();
        let gam = geo.gamma();
        let c = geo.anholonomy();
        assert!(c.max_abs_diff(&gam.sub(&gam.swapped())) < 1e-14);
        assert!(c.max_abs() > 0.1);
    }

    #[test]
    fn sectional_curvatures() {
        for (m, k) in [(Manifold::sphere(), 1.0), (Manifold::halfplane(), -1.0)] {
            for x in [[1.0, 0.2], [2.0, 0.7], [0.7, 1.5]] {
                let r = m.riemann_classical_at(&x).unwrap();
                assert!((sectional_curvature(&r, 0, 1) - k).abs() < 1e-12, "{m} at {x:?}");
                assert!((sectional_curvature(&r, 1, 0) - k).abs() < 1e-12, "{m} at {x:?}");
            }
        }
        let r = Manifold::euclidean(3).unwrap().riemann_classical_at(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn non_positive_metric_is_rejected() {
        let m = Manifold::from_source("bad", "dim 1; coords u; g[0][0] = u;").unwrap();
        assert!(matches!(m.frame_at(&[-1.0]), Err(Error::NotPositiveDefinite { .. })));
        assert!(matches!(m.metric_at(&[-1.0]), Err(Error::NotPositiveDefinite { .. })));
    }
}
