//! Central finite-difference stencils at the origin, with optional one-level
//! Richardson extrapolation. All stencils are symmetric, so their error
//! expansions contain only even powers of the step and the combination
//! `(4·D(ε/2) − D(ε))/3` removes the leading term.

use crate::error::Result;

fn richardson(
    eps: f64,
    on: bool,
    mut stencil: impl FnMut(f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let coarse = stencil(eps)?;
    if !on {
        return Ok(coarse);
    }
    let fine = stencil(0.5 * eps)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

fn combine(terms: &[(f64, &[f64])], denom: f64) -> Vec<f64> {
    let n = terms[0].1.len();
    (0..n).map(|i| terms.iter().map(|(w, v)| w * v[i]).sum::<f64>() / denom).collect()
}

/// `f'(0)`.
pub fn d1(eps: f64, rich: bool, mut f: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    richardson(eps, rich, |e| {
        let (p, m) = (f(e)?, f(-e)?);
        Ok(combine(&[(1.0, &p), (-1.0, &m)], 2.0 * e))
    })
}

/// `f''(0)`, given `f(0)`.
pub fn d2(eps: f64, rich: bool, f0: &[f64], mut f: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    richardson(eps, rich, |e| {
        let (p, m) = (f(e)?, f(-e)?);
        Ok(combine(&[(1.0, &p), (-2.0, f0), (1.0, &m)], e * e))
    })
}

/// `∂_s ∂_u f(0, 0)`.
pub fn d11(eps: f64, rich: bool, mut f: impl FnMut(f64, f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    richardson(eps, rich, |e| {
        let (pp, pm, mp, mm) = (f(e, e)?, f(e, -e)?, f(-e, e)?, f(-e, -e)?);
        Ok(combine(&[(1.0, &pp), (-1.0, &pm), (-1.0, &mp), (1.0, &mm)], 4.0 * e * e))
    })
}

/// `∂_s ∂_u² f(0, 0)`.
pub fn d12(eps: f64, rich: bool, mut f: impl FnMut(f64, f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    richardson(eps, rich, |e| {
        let (pp, p0, pm) = (f(e, e)?, f(e, 0.0)?, f(e, -e)?);
        let (mp, m0, mm) = (f(-e, e)?, f(-e, 0.0)?, f(-e, -e)?);
        Ok(combine(&[(1.0, &pp), (-2.0, &p0), (1.0, &pm), (-1.0, &mp), (2.0, &m0), (-1.0, &mm)], 2.0 * e * e * e))
    })
}

/// `∂_s ∂_u ∂_v f(0, 0, 0)`.
pub fn d111(eps: f64, rich: bool, mut f: impl FnMut(f64, f64, f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    richardson(eps, rich, |e| {
        let mut acc: Option<Vec<f64>> = None;
        for (a, sa) in [(e, 1.0), (-e, -1.0)] {
            for (b, sb) in [(e, 1.0), (-e, -1.0)] {
                for (c, sc) in [(e, 1.0), (-e, -1.0)] {
                    let v = f(a, b, c)?;
                    let w = sa * sb * sc;
                    let acc = acc.get_or_insert_with(|| vec![0.0; v.len()]);
                    for (x, y) in acc.iter_mut().zip(&v) {
                        *x += w * y;
                    }
                }
            }
        }
        Ok(acc.unwrap().into_iter().map(|v| v / (8.0 * e * e * e)).collect())
    })
}

/// `f'(0)` from the fourth-order five-point stencil, without extrapolation.
pub fn d1_five(eps: f64, mut f: impl FnMut(f64) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let (p2, p1, m1, m2) = (f(2.0 * eps)?, f(eps)?, f(-eps)?, f(-2.0 * eps)?);
    Ok(combine(&[(-1.0, &p2), (8.0, &p1), (-8.0, &m1), (1.0, &m2)], 12.0 * eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_on_polynomials() {
        // f(s, u, v) = s·u·v + 3 s u² + s² u − 2 s
        let f = |s: f64, u: f64, v: f64| vec![s * u * v + 3.0 * s * u * u + s * s * u - 2.0 * s];
        let d = d1(1e-2, true, |e| Ok(f(e, 0.0, 0.0))).unwrap();
        assert!((d[0] + 2.0).abs() < 1e-12);
        let d = d11(1e-2, true, |a, b| Ok(f(a, b, 0.0))).unwrap();
        assert!(d[0].abs() < 1e-10);
        let d = d12(1e-2, true, |a, b| Ok(f(a, b, 0.0))).unwrap();
        assert!((d[0] - 6.0).abs() < 1e-8);
        let d = d111(1e-2, true, |a, b, c| Ok(f(a, b, c))).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-8);
        let d = d2(1e-2, false, &f(1.0, 1.0, 0.0), |e| Ok(f(1.0 + e, 1.0, 0.0))).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn richardson_improves_order() {
        let f = |s: f64| vec![s.sin()];
        let plain = d1(0.1, false, |e| Ok(f(e))).unwrap()[0];
        let rich = d1(0.1, true, |e| Ok(f(e))).unwrap()[0];
        assert!((rich - 1.0).abs() < 1e-2 * (plain - 1.0).abs());
        let five = d1_five(0.1, |e| Ok(f(e))).unwrap()[0];
        assert!((five - 1.0).abs() < 1e-2 * (plain - 1.0).abs());
    }
}
