use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rgroups::geodesic::{
    canonicity_residual, cauchy_residual_with_step, exp_map, exp_with_velocity, log_map, ExpLogConfig,
};
use rgroups::manifold::sectional_curvature;
use rgroups::tensor::{dot, max_abs_diff, norm, scale};
use rgroups::Manifold;

fn cfg() -> ExpLogConfig {
    ExpLogConfig::default()
}

fn random_point(m: &Manifold, rng: &mut impl Rng) -> Vec<f64> {
    m.domain().sample_box().iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()
}

#[test]
fn constant_curvature_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (m, k) in [(Manifold::sphere(), 1.0), (Manifold::halfplane(), -1.0)] {
        let ks: Vec<f64> = (0..60)
            .map(|_| sectional_curvature(&m.riemann_classical_at(&random_point(&m, &mut rng)).unwrap(), 0, 1))
            .collect();
        let lo = ks.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo < 1e-6, "{}: spread {}", m.name(), hi - lo);
        assert!((ks[0] - k).abs() < 1e-9, "{}: {}", m.name(), ks[0]);
    }
}

#[test]
fn curvature_is_metric() {
    // each R⟨·,a,b⟩ is η-antisymmetric, so η⟨θ', R⟨τ,τ,θ⟩⟩ is symmetric in θ, θ'
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let src = "dim 3; coords a b c; domain a (-1,1) b (-1,1) c (-1,1);\
               g[0][0] = 2 + a*b; g[1][0] = 0.3*c; g[1][1] = 1 + b^2; g[2][0] = 0; g[2][1] = 0.1*a; g[2][2] = exp(c);";
    let m = Manifold::from_source("bumpy", src).unwrap();
    for _ in 0..10 {
        let x = random_point(&m, &mut rng);
        let r = m.riemann_classical_at(&x).unwrap();
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a = dot(&v[1], &r.apply(&v[0], &v[0], &v[2]));
        let b = dot(&v[2], &r.apply(&v[0], &v[0], &v[1]));
        assert!((a - b).abs() < 1e-10, "{a} {b}");
        let a = dot(&v[1], &r.apply(&v[0], &v[2], &v[1]));
        let b = dot(&v[0], &r.apply(&v[1], &v[2], &v[1]));
        assert!((a + b).abs() < 1e-10, "{a} {b}");
        assert!(dot(&v[1], &r.apply(&v[0], &v[1], &v[2])).abs() > 1e-6);
    }
}

#[test]
fn geodesic_distances() {
    let c = cfg();
    let hp = Manifold::halfplane();
    let t = log_map(&hp, &[0.0, 1.0], &[1.0, 1.0], &c).unwrap();
    assert!((norm(&t) - 1.5f64.acosh()).abs() < 1e-6);
    let s2 = Manifold::sphere();
    let t = log_map(&s2, &[FRAC_PI_2, 0.0], &[FRAC_PI_2, PI / 3.0], &c).unwrap();
    assert!((norm(&t) - PI / 3.0).abs() < 1e-6);
    assert_eq!(log_map(&s2, &[1.0, 0.2], &[1.0, 0.2], &c).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn n_fold_attachment() {
    let c = cfg();
    for m in [Manifold::sphere(), Manifold::halfplane()] {
        let x0 = if m.name() == "sphere" { vec![1.3, 0.0] } else { vec![0.0, 1.0] };
        let tau = [0.6, 0.8];
        let step = scale(0.25, &tau);
        for n in 1..=8 {
            let mut x = x0.clone();
            let mut t = step.clone();
            for _ in 0..n {
                let (xe, ve) = exp_with_velocity(&m, &x, &t, &c).unwrap();
                let u = m.chart_to_frame(&xe, &ve).unwrap();
                t = scale(0.25 / norm(&u), &u);
                x = xe;
            }
            let direct = exp_map(&m, &x0, &scale(0.25 * n as f64, &tau), &c).unwrap();
            assert!(max_abs_diff(&x, &direct) < n as f64 * 1e-7, "{} n={n}", m.name());
        }
    }
}

#[test]
fn canonicity_examples() {
    let c = cfg();
    let flat = Manifold::euclidean(2).unwrap();
    assert!(canonicity_residual(&flat, &[0.1, 0.2], &[0.6, 0.8], 0.3, 0.4, &c).unwrap() < 1e-12);
    let hp = Manifold::halfplane();
    assert!(canonicity_residual(&hp, &[0.0, 1.0], &[0.0, 1.0], 0.5, 0.5, &c).unwrap() < 1e-7);
    let s2 = Manifold::sphere();
    assert!(canonicity_residual(&s2, &[FRAC_PI_2, 0.0], &[0.0, 1.0], 0.7, 0.2, &c).unwrap() < 1e-7);
}

#[test]
fn canonicity_on_random_triples() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in [Manifold::sphere(), Manifold::halfplane()] {
        for _ in 0..10 {
            let x = random_point(&m, &mut rng);
            let a: f64 = rng.gen_range(0.0..2.0 * PI);
            let (s, s2) = (rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4));
            let r = canonicity_residual(&m, &x, &[a.cos(), a.sin()], s, s2, &c).unwrap();
            assert!(r < 1e-7, "{}: {r}", m.name());
        }
    }
}

fn geodesic_velocity(m: &Manifold, x: &[f64], xp: &[f64]) -> Vec<f64> {
    let c = cfg();
    let t = log_map(m, x, xp, &c).unwrap();
    let (_, v) = exp_with_velocity(m, x, &t, &c).unwrap();
    scale(1.0 / norm(&t), &v)
}

#[test]
fn cauchy_examples() {
    let c = cfg();
    let flat = Manifold::euclidean(2).unwrap();
    let r = cauchy_residual_with_step(&flat, &[0.0, 0.0], &[0.4, -0.2], &[1.0, 0.5], 1e-3, &c).unwrap();
    assert!(r < 1e-8, "{r}");

    let hp = Manifold::halfplane();
    let (x, xp) = ([0.0, 1.0], [0.3, 1.2]);
    let tv = geodesic_velocity(&hp, &x, &xp);
    let r = cauchy_residual_with_step(&hp, &x, &xp, &tv, 1e-3, &c).unwrap();
    assert!(r < 1e-4, "{r}");
}

#[test]
fn cauchy_residual_is_second_order() {
    let c = cfg();
    let s2 = Manifold::sphere();
    let (x, xp) = ([1.2, 0.1], [1.35, 0.3]);
    let tv = geodesic_velocity(&s2, &x, &xp);
    let r1 = cauchy_residual_with_step(&s2, &x, &xp, &tv, 2e-2, &c).unwrap();
    let r2 = cauchy_residual_with_step(&s2, &x, &xp, &tv, 1e-2, &c).unwrap();
    let ratio = r1 / r2;
    assert!((ratio - 4.0).abs() < 0.8, "{r1} {r2} ratio {ratio}");
}

#[test]
fn speed_is_conserved_on_long_geodesics() {
    let c = cfg();
    let s2 = Manifold::sphere();
    let path = rgroups::geodesic::geodesic_ivp(&s2, &[1.0, 0.0], &[0.3, 0.9], 2.0, &c).unwrap();
    let sp = rgroups::geodesic::speeds(&s2, &path).unwrap();
    assert!(sp.iter().all(|v| (v - sp[0]).abs() < 1e-9 * sp[0]));
}

fn builtin() -> impl Strategy<Value = Manifold> {
    prop_oneof![
        Just(Manifold::euclidean(2).unwrap()),
        Just(Manifold::euclidean(3).unwrap()),
        Just(Manifold::sphere()),
        Just(Manifold::halfplane()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exp_then_log_is_identity(
        m in builtin(),
        u in proptest::collection::vec(0.0f64..1.0, 5),
        dir in proptest::collection::vec(-1.0f64..1.0, 3),
        len in 0.0f64..0.5,
    ) {
        let n = m.dim();
        let x: Vec<f64> = m.domain().sample_box().iter().zip(&u).map(|(&(lo, hi), s)| lo + s * (hi - lo)).collect();
        let d = &dir[..n];
        prop_assume!(norm(d) > 1e-3);
        let t = scale(len / norm(d), d);
        let c = cfg();
        let xp = exp_map(&m, &x, &t, &c).unwrap();
        let back = log_map(&m, &x, &xp, &c).unwrap();
        prop_assert!(max_abs_diff(&back, &t) < 1e-7, "{} {:?} {:?}", m.name(), t, back);
    }
}
