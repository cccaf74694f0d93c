use carnot_kit::calculus::ScalarField;
use carnot_kit::carnot::CarnotGroup;
use carnot_kit::fields::{gauge_profile, min_fundamental};
use carnot_kit::harnack::{density_limit, harnack_scan};
use carnot_kit::norm::HomogeneousNorm;
use carnot_kit::quadrature::QuadratureBudget;
use carnot_kit::{euclidean_group, gauge_norm, heisenberg_group};

fn octaves(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(k)).collect()
}

/// p = 2 supersolutions on ℝ³ and ℍ¹.
fn battery() -> Vec<(CarnotGroup, HomogeneousNorm, ScalarField)> {
    let mut out = Vec::new();
    for g in [euclidean_group(3).unwrap(), heisenberg_group(1).unwrap()] {
        let s = gauge_norm(&g);
        let m = if g.is_euclidean() { 2.0 } else { 4.0 };
        for w in [
            gauge_profile(&g, &s, 1.0, m, 1.0 / m).unwrap(),
            gauge_profile(&g, &s, 1.0, m, 0.5 / m).unwrap(),
            min_fundamental(&g, &s, 2.0, 0.1).unwrap(),
        ] {
            out.push((g.clone(), s.clone(), w));
        }
    }
    out
}

#[test]
fn constant_fields_have_unit_ratio() {
    for g in [euclidean_group(3).unwrap(), heisenberg_group(1).unwrap()] {
        let s = gauge_norm(&g);
        let scan = harnack_scan(&g, &s, &ScalarField::constant(2.5), 2.0, None, &octaves(0, 6), &QuadratureBudget::new(5_000, 1)).unwrap();
        assert!(scan.ratios.iter().all(|&r| r == 1.0), "{:?}", scan.ratios);
        assert_eq!(scan.empirical_c_h, 1.0);
    }
}

#[test]
fn battery_has_bounded_stable_constant() {
    // default σ, half the critical exponent: at σ close to Q(p−1)/(Q−p) the
    // variance of u^σ for the capped S^{2−Q} is unbounded as R/ε grows
    for (g, s, w) in battery() {
        let scan = harnack_scan(&g, &s, &w, 2.0, None, &octaves(0, 6), &QuadratureBudget::new(40_000, 12)).unwrap();
        assert!(scan.empirical_c_h.is_finite() && scan.empirical_c_h > 0.0);
        assert!(scan.max_octave_drift <= 0.10, "{} {}: drift {}", g.label(), w.name(), scan.max_octave_drift);
        assert!(scan.running_max.windows(2).all(|m| m[1] >= m[0]));
    }
}

#[test]
fn density_tends_to_one_when_infimum_is_zero() {
    let e = euclidean_group(3).unwrap();
    let se = gauge_norm(&e);
    let h = heisenberg_group(1).unwrap();
    let sh = gauge_norm(&h);
    let cases = [
        (&e, &se, min_fundamental(&e, &se, 2.0, 0.1).unwrap(), octaves(4, 14)),
        (&h, &sh, min_fundamental(&h, &sh, 2.0, 0.1).unwrap(), octaves(2, 10)),
    ];
    for (g, s, w, radii) in cases {
        let d = density_limit(g, s, &w, 0.01, &radii, &QuadratureBudget::new(20_000, 4)).unwrap();
        assert!(*d.ball_fractions.last().unwrap() >= 0.99);
        assert!(*d.annulus_fractions.last().unwrap() >= 0.99);
        assert!(d.ball_fractions.windows(2).all(|w| w[1] >= w[0]));
    }
}
