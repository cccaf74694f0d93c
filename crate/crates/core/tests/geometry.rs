use carnot_kit::calculus::{horizontal_gradient_fd, p_sublaplacian_with_scale, FdScheme, ScalarField};
use carnot_kit::norm::Region;
use carnot_kit::quadrature::{QuadratureBudget, SampleCloud};
use carnot_kit::{euclidean_group, gauge_norm, heisenberg_group, CarnotGroup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// u = x²y + sin t + x t with the frame X = ∂x + 2y∂t, Y = ∂y − 2x∂t worked out by hand.
#[test]
fn heisenberg_gradient_matches_hand_computed_frame() {
    let h = heisenberg_group(1).unwrap();
    let u = ScalarField::new("x²y + sin t + xt", |p| p[0] * p[0] * p[1] + p[2].sin() + p[0] * p[2]);
    let exact = |p: &[f64]| {
        let (x, y, t) = (p[0], p[1], p[2]);
        let ux = 2.0 * x * y + t;
        let uy = x * x;
        let ut = t.cos() + x;
        [ux + 2.0 * y * ut, uy - 2.0 * x * ut]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let fd = horizontal_gradient_fd(&h, &u, &p, &FdScheme::gradient()).unwrap();
        let ex = exact(&p);
        let scale = ex[0].hypot(ex[1]).max(1.0);
        for k in 0..2 {
            worst = worst.max((fd[k] - ex[k]).abs() / scale);
        }
    }
    assert!(worst <= 1e-6, "worst relative error {worst:e}");
}

#[test]
fn gauge_fundamental_solution_is_harmonic() {
    let h = heisenberg_group(1).unwrap();
    let s = gauge_norm(&h);
    let u = ScalarField::new("S^(2-Q)", move |x| s.evaluate(x).powi(-2));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let d = p_sublaplacian_with_scale(&h, &u, &x, 2.0, &FdScheme::nested()).unwrap();
        assert!(d.value.abs() <= 1e-3 * d.scale, "{x:?}: {d:?}");
    }
}

fn volume_checks(g: &CarnotGroup, samples: usize) {
    let s = gauge_norm(g);
    let q = g.hom_dim() as i32;
    let mut scaled = Vec::new();
    for (i, r) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        // one cloud on B_2R: the fraction inside B_R must be 2^{−Q}, i.e. |A_R|/|B_R| = 2^Q − 1
        let budget = QuadratureBudget::new(samples, 100 + i as u64);
        let cloud = SampleCloud::draw(g, &s, Region::ball(2.0 * r).unwrap(), &budget).unwrap();
        let inside = cloud.mask(&Region::ball(r).unwrap()).iter().filter(|&&m| m).count() as f64;
        let n = cloud.len() as f64;
        let frac = inside / n;
        let target = 2f64.powi(-q);
        let se = (target * (1.0 - target) / n).sqrt();
        assert!((frac - target).abs() <= 3.0 * se, "{}: R = {r}, fraction {frac} vs {target} ± {se}", g.label());

        let ball = SampleCloud::draw(g, &s, Region::ball(r).unwrap(), &budget).unwrap().measure();
        scaled.push((ball.value / r.powi(q), ball.std_error / r.powi(q)));
    }
    for a in &scaled {
        for b in &scaled {
            let se = a.1.hypot(b.1);
            assert!((a.0 - b.0).abs() <= 3.0 * se, "{}: |B_R|/R^Q {a:?} vs {b:?}", g.label());
        }
    }
}

#[test]
fn volume_laws_euclidean() {
    let e = euclidean_group(3).unwrap();
    volume_checks(&e, 200_000);
    // and the absolute volume of the unit ball
    let s = gauge_norm(&e);
    let m = SampleCloud::draw(&e, &s, Region::ball(1.0).unwrap(), &QuadratureBudget::new(200_000, 3)).unwrap().measure();
    assert!((m.value - 4.0 / 3.0 * std::f64::consts::PI).abs() <= 3.0 * m.std_error, "{m:?}");
}

#[test]
fn volume_laws_heisenberg() {
    volume_checks(&heisenberg_group(1).unwrap(), 200_000);
}

#[test]
fn clouds_are_reproducible() {
    let h = heisenberg_group(1).unwrap();
    let s = gauge_norm(&h);
    let b = QuadratureBudget::new(20_000, 77);
    let a1 = SampleCloud::draw(&h, &s, Region::annulus(3.0).unwrap(), &b).unwrap();
    let a2 = SampleCloud::draw(&h, &s, Region::annulus(3.0).unwrap(), &b).unwrap();
    assert_eq!(a1.len(), a2.len());
    for i in 0..a1.len() {
        assert_eq!(a1.point(i), a2.point(i));
    }
    assert_eq!(a1.measure().value.to_bits(), a2.measure().value.to_bits());
}
