use carnot_kit::calculus::{ambient_gradient_fd, horizontal_gradient, horizontal_gradient_fd, FdScheme, ScalarField};
use carnot_kit::carnot::group_plugin;
use carnot_kit::estimates::LineConstants;
use carnot_kit::liouville::hyp2_condition;
use carnot_kit::norm::{factorial_norm, Region};
use carnot_kit::quadrature::{ess_inf, QuadratureBudget};
use carnot_kit::sharpness::{definitive_claim, Claim};
use carnot_kit::{custom_group, euclidean_group, gauge_norm, heisenberg_group, CarnotGroup, HomogeneousNorm};
use proptest::prelude::*;
use std::sync::OnceLock;

fn groups() -> &'static [(CarnotGroup, HomogeneousNorm)] {
    static CACHE: OnceLock<Vec<(CarnotGroup, HomogeneousNorm)>> = OnceLock::new();
    CACHE.get_or_init(build_groups)
}

fn build_groups() -> Vec<(CarnotGroup, HomogeneousNorm)> {
    let mut out = Vec::new();
    for g in [euclidean_group(3).unwrap(), heisenberg_group(1).unwrap(), heisenberg_group(2).unwrap()] {
        let s = gauge_norm(&g);
        out.push((g, s));
    }
    let h = heisenberg_group(1).unwrap();
    out.push((h.clone(), factorial_norm(&h)));
    let engel = custom_group(group_plugin("engel").unwrap()).unwrap();
    let s = factorial_norm(&engel);
    out.push((engel, s));
    out
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, dim)
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dilation_is_an_automorphism(k in 0usize..5, x in point(5), y in point(5), r in 0.05f64..20.0) {
        let (g, _) = &groups()[k];
        let n = g.ambient_dim();
        let (x, y) = (&x[..n], &y[..n]);
        let lhs = g.dilate(r, &g.compose(x, y)).unwrap();
        let rhs = g.compose(&g.dilate(r, x).unwrap(), &g.dilate(r, y).unwrap());
        prop_assert!(rel(&lhs, &rhs) <= 1e-12, "{lhs:?} vs {rhs:?}");
    }

    #[test]
    fn group_axioms(k in 0usize..5, x in point(5), y in point(5), z in point(5)) {
        let (g, _) = &groups()[k];
        let n = g.ambient_dim();
        let (x, y, z) = (&x[..n], &y[..n], &z[..n]);
        let a = g.compose(&g.compose(x, y), z);
        let b = g.compose(x, &g.compose(y, z));
        prop_assert!(rel(&a, &b) <= 1e-12);
        let e = g.compose(x, &g.inverse(x));
        prop_assert!(e.iter().all(|v| v.abs() <= 1e-12), "{e:?}");
    }

    #[test]
    fn norm_is_homogeneous_and_symmetric(k in 0usize..5, x in point(5), r in 0.05f64..20.0) {
        let (g, s) = &groups()[k];
        let x = &x[..g.ambient_dim()];
        let sx = s.evaluate(x);
        prop_assert!((s.evaluate(&g.dilate(r, x).unwrap()) - r * sx).abs() <= 1e-12 * (1.0 + r * sx));
        prop_assert!((s.evaluate(&g.inverse(x)) - sx).abs() <= 1e-12 * (1.0 + sx));
    }

    /// C(x) = max(|x|/S, S/|x|^{1/r}) stays bounded on the unit ball.
    #[test]
    fn norm_equivalence_near_origin(k in 0usize..5, x in point(5), shrink in 0.01f64..1.0) {
        let (g, s) = &groups()[k];
        let x = &x[..g.ambient_dim()];
        let sx = s.evaluate(x);
        prop_assume!(sx > 1e-9);
        let y = g.dilate(shrink / sx, x).unwrap();
        let e = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sy = s.evaluate(&y);
        let c = (e / sy).max(sy / e.powf(1.0 / g.step() as f64));
        prop_assert!(c.is_finite() && c < 1e3, "C = {c}");
    }

    #[test]
    fn euclidean_frame_is_the_ambient_gradient(x in point(4)) {
        let e = euclidean_group(4).unwrap();
        let u = ScalarField::new("w", |p| (p[0] * p[1]).sin() + p[2] * p[3].exp());
        let h = horizontal_gradient_fd(&e, &u, &x, &FdScheme::gradient()).unwrap();
        let a = ambient_gradient_fd(&u, &x, 1e-4).unwrap();
        prop_assert_eq!(h, a);
    }

    #[test]
    fn default_young_parameter_halves_the_weight(p in 1.05f64..8.0, alpha in -5.0f64..-0.01) {
        let c = LineConstants::new(3.0, 1.0, p, alpha, None, None).unwrap();
        prop_assert!((c.c1 - alpha.abs() / 2.0).abs() <= 1e-12 * alpha.abs());
        for v in [c.c1, c.c2, c.c3, c.c4] {
            prop_assert!(v.is_finite() && v > 0.0);
        }
        // a smaller Young parameter shrinks c1's deficit and raises c2
        let smaller = LineConstants::new(3.0, 1.0, p, alpha, Some(0.5 * c.young), None).unwrap();
        prop_assert!(smaller.c1 > c.c1 && smaller.c2 > c.c2);
    }

    #[test]
    fn at_most_one_definitive_claim(qd in 2.5f64..20.0, a in 0.1f64..10.0, b in 0.1f64..10.0) {
        let v = hyp2_condition(qd, 2.0, 2.0, a, b).unwrap();
        let claim = definitive_claim(&v, None).unwrap();
        prop_assert_eq!(claim == Claim::Nonexistence, v.condition_holds == Some(true));
        if v.condition_holds != Some(true) {
            prop_assert_eq!(claim, Claim::Inconclusive);
        }
    }
}

#[test]
fn fd_gradient_is_second_order() {
    let h = heisenberg_group(1).unwrap();
    let u = ScalarField::new("smooth", |p| (p[0] + 0.3 * p[1]).sin() * (0.5 * p[2]).cos() + p[0] * p[0] * p[2]);
    let exact = |p: &[f64]| {
        let (x, y, t) = (p[0], p[1], p[2]);
        let c = (x + 0.3 * y).cos() * (0.5 * t).cos();
        let ux = c + 2.0 * x * t;
        let uy = 0.3 * c;
        let ut = -0.5 * (x + 0.3 * y).sin() * (0.5 * t).sin() + x * x;
        [ux + 2.0 * y * ut, uy - 2.0 * x * ut]
    };
    for x in [[0.4, -0.7, 1.1], [1.3, 0.2, -0.6], [-0.9, 1.5, 0.3]] {
        let ex = exact(&x);
        let err = |step: f64| {
            let fd = horizontal_gradient_fd(&h, &u, &x, &FdScheme::new(step).unwrap()).unwrap();
            (fd[0] - ex[0]).abs().max((fd[1] - ex[1]).abs())
        };
        let factor = err(2e-2) / err(1e-2);
        assert!((3.5..=4.5).contains(&factor), "{x:?}: factor {factor}");
    }
}

#[test]
fn closed_form_path_is_preferred() {
    let h = heisenberg_group(1).unwrap();
    let u = ScalarField::new("t", |p| p[2]).with_gradient(|p| vec![2.0 * p[1], -2.0 * p[0]]);
    assert_eq!(horizontal_gradient(&h, &u, &[1.0, 2.0, 3.0], &FdScheme::gradient()).unwrap(), vec![4.0, -2.0]);
}

#[test]
fn ess_inf_never_undershoots_known_infima() {
    for (i, (g, s)) in groups().iter().enumerate() {
        let s2 = s.clone();
        // decreasing radial fields: the infimum over B_R sits on the boundary sphere
        let w = ScalarField::new("1/(1+S^2)", move |x| 1.0 / (1.0 + s2.evaluate(x).powi(2)));
        for r in [0.5, 1.0, 3.0] {
            let est = ess_inf(g, s, Region::ball(r).unwrap(), &w, &QuadratureBudget::new(5_000, i as u64)).unwrap();
            let truth = 1.0 / (1.0 + r * r);
            assert!(est >= truth - 1e-9, "{}: {est} < {truth}", g.label());
            assert!(est <= truth * 1.05, "{}: {est} far above {truth}", g.label());
        }
    }
}
