//! Cutoff profiles φ₀ = ψ^κ and scaled test functions φ₁(x) = φ₀(S(δ_{1/R}x)).

use serde::Serialize;

use crate::calculus::ScalarField;
use crate::carnot::CarnotGroup;
use crate::error::{Error, Result};
use crate::norm::HomogeneousNorm;

/// φ₀ = ψ^κ with ψ(t) = min(1, max(0, 2 − |t|)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cutoff {
    pub p: f64,
    pub kappa: f64,
    /// sup |φ₀′|^p/φ₀^{p−1} = κ^p
    pub c_profile: f64,
}

pub fn default_kappa(p: f64) -> f64 {
    p.max(2.0)
}

pub fn make_cutoff(p: f64, kappa: f64) -> Result<Cutoff> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Precondition(format!("cutoff exponent p must exceed 1, got {p}")));
    }
    if !(kappa >= p) || !kappa.is_finite() {
        return Err(Error::Precondition(format!(
            "cutoff power κ = {kappa} must be at least p = {p}, otherwise |φ₀′|^p/φ₀^(p−1) is unbounded"
        )));
    }
    Ok(Cutoff {
        p,
        kappa,
        c_profile: kappa.powf(p),
    })
}

impl Cutoff {
    fn ramp(t: f64) -> f64 {
        (2.0 - t.abs()).clamp(0.0, 1.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        let psi = Self::ramp(t);
        if psi == 1.0 {
            1.0
        } else {
            psi.powf(self.kappa)
        }
    }

    /// φ₀′(t), taking the one-sided value 0 at the kinks |t| = 1, 2.
    pub fn derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 || a >= 2.0 {
            return 0.0;
        }
        -t.signum() * self.kappa * (2.0 - a).powf(self.kappa - 1.0)
    }

    /// |φ₀′|^p/φ₀^{p−1} = κ^p ψ^{κ−p} on 1 < |t| < 2, else 0.
    pub fn ratio(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= 1.0 || a >= 2.0 {
            return 0.0;
        }
        self.c_profile * (2.0 - a).powf(self.kappa - self.p)
    }
}

/// φ₁ for a given radius, with closed-form horizontal gradient
/// ∇_L φ₁(x) = φ₀′(S(x)/R)·∇_L S(x)/R.
#[derive(Clone, Debug)]
pub struct ScaledTestFunction {
    group: CarnotGroup,
    norm: HomogeneousNorm,
    pub cutoff: Cutoff,
    pub radius: f64,
}

pub fn scaled_test_function(g: &CarnotGroup, s: &HomogeneousNorm, cutoff: Cutoff, r: f64) -> Result<ScaledTestFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Precondition(format!("test-function radius must be positive, got {r}")));
    }
    Ok(ScaledTestFunction {
        group: g.clone(),
        norm: s.clone(),
        cutoff,
        radius: r,
    })
}

impl ScaledTestFunction {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_at_norm(self.norm.evaluate(x))
    }

    pub fn value_at_norm(&self, s: f64) -> f64 {
        self.cutoff.value(s / self.radius)
    }

    pub fn horizontal_gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = self.norm.evaluate(x);
        let d = self.cutoff.derivative(s / self.radius);
        if d == 0.0 {
            return vec![0.0; self.group.horizontal_dim()];
        }
        self.norm
            .horizontal_gradient(&self.group, x)
            .into_iter()
            .map(|c| d * c / self.radius)
            .collect()
    }

    /// |∇_L φ₁|^p/φ₁^{p−1} in closed form (0 where φ₁ = 0).
    pub fn ratio(&self, x: &[f64]) -> f64 {
        let s = self.norm.evaluate(x);
        let t = s / self.radius;
        let r0 = self.cutoff.ratio(t);
        if r0 == 0.0 {
            return 0.0;
        }
        let gs = self.norm.horizontal_gradient(&self.group, x);
        let gn = gs.iter().map(|c| c * c).sum::<f64>().sqrt();
        r0 * (gn / self.radius).powf(self.cutoff.p)
    }

    /// c_{φ₀}·‖∇_L S‖^p·R^{−p}, the pointwise bound on the ratio.
    pub fn ratio_bound(&self) -> f64 {
        self.cutoff.c_profile * self.norm.grad_sup_bound().powf(self.cutoff.p) * self.radius.powf(-self.cutoff.p)
    }

    pub fn field(&self) -> ScalarField {
        let a = self.clone();
        let b = self.clone();
        ScalarField::new(format!("cutoff(R={}, kappa={})", self.radius, self.cutoff.kappa), move |x| a.value(x))
            .with_gradient(move |x| b.horizontal_gradient(x))
            .with_smoothness(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{horizontal_gradient_fd, FdScheme};
    use crate::carnot::{euclidean_group, heisenberg_group};
    use crate::norm::gauge_norm;

    #[test]
    fn profile_constants() {
        let c = make_cutoff(2.0, 2.0).unwrap();
        assert_eq!(c.c_profile, 4.0);
        assert_eq!(c.value(0.5), 1.0);
        assert_eq!(c.value(3.0), 0.0);
        assert!(make_cutoff(3.0, 2.5).is_err());
        assert!(make_cutoff(1.0, 2.0).is_err());
    }

    #[test]
    fn ratio_scan_for_p3() {
        // dense scan of |φ₀′|³/φ₀² on (1,2) against κ^p = 27
        let c = make_cutoff(3.0, 3.0).unwrap();
        let mut max: f64 = 0.0;
        for i in 1..100_000 {
            let t = 1.0 + i as f64 / 100_000.0;
            let d = c.derivative(t);
            let direct = d.abs().powi(3) / c.value(t).powi(2);
            assert!((direct - c.ratio(t)).abs() <= 1e-9 * direct.max(1.0));
            max = max.max(direct);
        }
        assert!(max <= 27.0 * (1.0 + 1e-12) && max > 26.99);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let c = make_cutoff(2.5, 3.5).unwrap();
        for t in [1.2, 1.5, 1.9, -1.4] {
            let h = 1e-6;
            let fd = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            assert!((fd - c.derivative(t)).abs() < 1e-6);
        }
    }

    #[test]
    fn plateau_support_and_gradient() {
        let h = heisenberg_group(1).unwrap();
        let s = gauge_norm(&h);
        let phi = scaled_test_function(&h, &s, make_cutoff(2.0, 2.0).unwrap(), 2.0).unwrap();
        assert_eq!(phi.value(&[1.0, 0.0, 0.0]), 1.0);
        assert_eq!(phi.value(&[6.0, 0.0, 0.0]), 0.0);
        let x = [1.5, 1.0, 3.0];
        let f = phi.field();
        let fd = horizontal_gradient_fd(&h, &f, &x, &FdScheme::gradient()).unwrap();
        let cf = phi.horizontal_gradient(&x);
        for (a, b) in fd.iter().zip(&cf) {
            assert!((a - b).abs() < 1e-6, "{fd:?} vs {cf:?}");
        }
        assert!(scaled_test_function(&h, &s, make_cutoff(2.0, 2.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn ratio_bound_on_annulus() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let phi = scaled_test_function(&e, &s, make_cutoff(2.0, 2.0).unwrap(), 1.0).unwrap();
        assert_eq!(phi.ratio_bound(), 4.0);
        let mut worst: f64 = 0.0;
        for i in 1..2000 {
            let r = 1.0 + i as f64 / 2000.0;
            worst = worst.max(phi.ratio(&[r * 0.6, r * 0.8, 0.0]));
        }
        assert!(worst <= 4.0 * 1.05);
    }
}
