//! Named fields, fluxes and sources for configuration files, and the
//! manufactured instances used by tests and the acceptance suite.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calculus::{CoercivityClass, OperatorSpec, ScalarField};
use crate::carnot::{euclidean_group, heisenberg_group, CarnotGroup};
use crate::error::{Error, Result};
use crate::estimates::{Source, SystemInstance};
use crate::norm::{gauge_norm, HomogeneousNorm};

/// A registered name with numeric parameters, e.g. `{ name = "gauge_profile", s = 0.5 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedSpec {
    pub name: String,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl NamedSpec {
    pub fn new(name: &str) -> Self {
        NamedSpec {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    fn get(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.params.get(key), default) {
            (Some(v), _) => Ok(*v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::Config(format!("{} needs parameter {key:?}", self.name))),
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::Config(format!(
                "{} does not take parameter {k:?} (allowed: {allowed:?})",
                self.name
            )));
        }
        Ok(())
    }
}

pub const FIELD_NAMES: [&str; 5] = ["constant", "gauge_profile", "gauge_power", "min_fundamental", "quadratic"];
pub const FLUX_NAMES: [&str; 3] = ["power", "scaled_power", "variable_coefficient"];
pub const SOURCE_NAMES: [&str; 4] = ["manufactured", "zero", "constant", "power"];

/// (c + S^m)^{−s}, positive, bounded, decaying like S^{−ms}.
pub fn gauge_profile(g: &CarnotGroup, norm: &HomogeneousNorm, c: f64, m: f64, s: f64) -> Result<ScalarField> {
    if !(c > 0.0) || !(m > 0.0) || !(s > 0.0) {
        return Err(Error::Config(format!("gauge_profile needs c, m, s > 0, got c={c}, m={m}, s={s}")));
    }
    let (n1, n2, g2) = (norm.clone(), norm.clone(), g.clone());
    Ok(ScalarField::new(format!("({c}+S^{m})^(-{s})"), move |x| (c + n1.evaluate(x).powf(m)).powf(-s))
        .with_gradient(move |x| {
            let r = n2.evaluate(x);
            if r == 0.0 {
                return vec![0.0; g2.horizontal_dim()];
            }
            let d = -s * (c + r.powf(m)).powf(-s - 1.0) * m * r.powf(m - 1.0);
            n2.horizontal_gradient(&g2, x).into_iter().map(|v| d * v).collect()
        }))
}

/// S^{−e}; infinite at the origin, so only meaningful away from it.
pub fn gauge_power(g: &CarnotGroup, norm: &HomogeneousNorm, e: f64) -> ScalarField {
    let (n1, n2, g2) = (norm.clone(), norm.clone(), g.clone());
    ScalarField::new(format!("S^(-{e})"), move |x| n1.evaluate(x).powf(-e)).with_gradient(move |x| {
        let r = n2.evaluate(x);
        let d = -e * r.powf(-e - 1.0);
        n2.horizontal_gradient(&g2, x).into_iter().map(|v| d * v).collect()
    })
}

/// max(S, ε)^{(p−Q)/(p−1)}: the fundamental-solution profile capped near the
/// origin. It is p-harmonic off the cap on ℝ^N for every p, and on ℍⁿ with the
/// gauge for p = 2; as a minimum of two supersolutions it is a supersolution there.
pub fn min_fundamental(g: &CarnotGroup, norm: &HomogeneousNorm, p: f64, eps: f64) -> Result<ScalarField> {
    let q_dim = g.hom_dim() as f64;
    if !(p > 1.0) || !(p < q_dim) || !(eps > 0.0) {
        return Err(Error::Config(format!("min_fundamental needs 1 < p < Q = {q_dim} and eps > 0, got p={p}, eps={eps}")));
    }
    let gamma = (p - q_dim) / (p - 1.0);
    let (n1, n2, g2) = (norm.clone(), norm.clone(), g.clone());
    Ok(ScalarField::new(format!("max(S,{eps})^({gamma})"), move |x| n1.evaluate(x).max(eps).powf(gamma))
        .with_gradient(move |x| {
            let r = n2.evaluate(x);
            if r <= eps {
                return vec![0.0; g2.horizontal_dim()];
            }
            let d = gamma * r.powf(gamma - 1.0);
            n2.horizontal_gradient(&g2, x).into_iter().map(|v| d * v).collect()
        })
        .with_smoothness(1))
}

/// c + |x|² in ambient coordinates (not radial in the gauge off ℝ^N).
pub fn quadratic(c: f64) -> ScalarField {
    ScalarField::new(format!("{c}+|x|^2"), move |x| c + x.iter().map(|v| v * v).sum::<f64>())
}

/// c·w, keeping a closed-form gradient when w has one.
pub fn scaled(w: ScalarField, c: f64) -> ScalarField {
    let (w1, w2) = (w.clone(), w.clone());
    let out = ScalarField::new(format!("{c}*{}", w.name()), move |x| c * w1.value_unchecked(x)).with_smoothness(w.smoothness());
    if w.has_closed_form_gradient() {
        out.with_gradient(move |x| w2.closed_form_gradient(x).unwrap().into_iter().map(|v| c * v).collect())
    } else {
        out
    }
}

pub fn field_by_name(spec: &NamedSpec, g: &CarnotGroup, norm: &HomogeneousNorm) -> Result<ScalarField> {
    match spec.name.as_str() {
        "constant" => {
            spec.only(&["c"])?;
            Ok(ScalarField::constant(spec.get("c", Some(1.0))?))
        }
        "gauge_profile" => {
            spec.only(&["c", "m", "s", "amp"])?;
            let w = gauge_profile(g, norm, spec.get("c", Some(1.0))?, spec.get("m", Some(2.0))?, spec.get("s", None)?)?;
            match spec.get("amp", Some(1.0))? {
                a if a == 1.0 => Ok(w),
                a if a > 0.0 => Ok(scaled(w, a)),
                a => Err(Error::Config(format!("gauge_profile amplitude must be positive, got {a}"))),
            }
        }
        "gauge_power" => {
            spec.only(&["e"])?;
            Ok(gauge_power(g, norm, spec.get("e", None)?))
        }
        "min_fundamental" => {
            spec.only(&["p", "eps"])?;
            min_fundamental(g, norm, spec.get("p", Some(2.0))?, spec.get("eps", Some(0.1))?)
        }
        "quadratic" => {
            spec.only(&["c"])?;
            Ok(quadratic(spec.get("c", Some(1.0))?))
        }
        other => Err(Error::UnknownName {
            kind: "field".into(),
            name: other.into(),
        }),
    }
}

/// 𝒜 = (1 + δ sin x₁)|ξ|^{p−2}ξ with 0 ≤ δ < 1: strongly coercive with
/// h = 1 − δ and k = (1 − δ)(1 + δ)^{−p′}.
pub fn variable_coefficient(p: f64, delta: f64) -> Result<OperatorSpec> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Config(format!("variable_coefficient needs 0 ≤ delta < 1, got {delta}")));
    }
    let pp = p / (p - 1.0);
    OperatorSpec::new(
        format!("(1+{delta} sin x1)|ξ|^(p-2)ξ, p={p}"),
        p,
        CoercivityClass::Strong,
        1.0 - delta,
        (1.0 - delta) * (1.0 + delta).powf(-pp),
        move |x, _, xi| {
            let c = 1.0 + delta * x[0].sin();
            let n = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = if n == 0.0 { 0.0 } else { c * n.powf(p - 2.0) };
            xi.iter().map(|v| w * v).collect()
        },
    )
}

pub fn flux_by_name(spec: &NamedSpec, p: f64) -> Result<OperatorSpec> {
    match spec.name.as_str() {
        "power" => {
            spec.only(&[])?;
            OperatorSpec::p_laplacian(p)
        }
        "scaled_power" => {
            spec.only(&["c"])?;
            let c = spec.get("c", None)?;
            if !(c > 0.0) {
                return Err(Error::Config(format!("scaled_power needs c > 0, got {c}")));
            }
            OperatorSpec::scaled_p_laplacian(p, c)
        }
        "variable_coefficient" => {
            spec.only(&["delta"])?;
            variable_coefficient(p, spec.get("delta", Some(0.5))?)
        }
        other => Err(Error::UnknownName {
            kind: "flux".into(),
            name: other.into(),
        }),
    }
}

pub fn source_by_name(spec: &NamedSpec) -> Result<Source> {
    match spec.name.as_str() {
        "manufactured" => {
            spec.only(&[])?;
            Ok(Source::Manufactured)
        }
        "zero" => {
            spec.only(&[])?;
            Ok(Source::Zero)
        }
        "constant" => {
            spec.only(&["c"])?;
            let c = spec.get("c", None)?;
            if !(c >= 0.0) {
                return Err(Error::Config(format!("constant source must be nonnegative, got {c}")));
            }
            Ok(Source::general(format!("{c}"), move |_, _, _| c))
        }
        "power" => {
            spec.only(&["c", "e"])?;
            let c = spec.get("c", Some(1.0))?;
            if !(c > 0.0) {
                return Err(Error::Config(format!("power source needs c > 0, got {c}")));
            }
            Ok(Source::partner_power(c, spec.get("e", None)?))
        }
        other => Err(Error::UnknownName {
            kind: "source".into(),
            name: other.into(),
        }),
    }
}

/// ℝ³, p = q = 2, u = (1+|x|²)^{−1/2}, v = (1+|x|²)^{−1/4}, f = −Δu, g = −Δv.
pub fn manufactured_r3() -> Result<SystemInstance> {
    let e = euclidean_group(3)?;
    let s = gauge_norm(&e);
    let u = gauge_profile(&e, &s, 1.0, 2.0, 0.5)?;
    let v = gauge_profile(&e, &s, 1.0, 2.0, 0.25)?;
    Ok(SystemInstance::new(e, s, 2.0, 2.0, u, v)?.manufactured())
}

/// ℍ¹ (Q = 4), p = q = 2, u = (1+S⁴)^{−1/4}, v = (1+S⁴)^{−1/8} with the gauge
/// S = ((x²+y²)² + t²)^{1/4}; both are superharmonic since
/// Δ_H F(S) = |∇_H S|²(F″ + 3F′/S) ≤ 0 for these profiles.
pub fn manufactured_h1() -> Result<SystemInstance> {
    let h = heisenberg_group(1)?;
    let s = gauge_norm(&h);
    let u = gauge_profile(&h, &s, 1.0, 4.0, 0.25)?;
    let v = gauge_profile(&h, &s, 1.0, 4.0, 0.125)?;
    Ok(SystemInstance::new(h, s, 2.0, 2.0, u, v)?.manufactured())
}

/// ℝ³, p = q = 2, a = b = 5 (the power condition fails): u = v = C(1+|x|²)^{−1/4}
/// with f = v⁵, g = u⁵ and ess inf u = ess inf v = 0. Pointwise
/// −Δu = (C/2)(1+r²)^{−9/4}(3 + r²/2) ≥ (C/4)(1+r²)^{−5/4} ≥ v⁵ when C⁴ ≤ 1/4.
pub fn power_pair_r3(c: f64) -> Result<SystemInstance> {
    if !(c > 0.0 && c.powi(4) <= 0.25) {
        return Err(Error::Config(format!("amplitude must satisfy 0 < C ≤ 2^(-1/2), got {c}")));
    }
    let e = euclidean_group(3)?;
    let s = gauge_norm(&e);
    let w = scaled(gauge_profile(&e, &s, 1.0, 2.0, 0.25)?, c);
    Ok(SystemInstance::new(e, s, 2.0, 2.0, w.clone(), w)?
        .with_sources(Source::partner_power(1.0, 5.0), Source::partner_power(1.0, 5.0))
        .with_exponents(Some(5.0), Some(5.0))
        .with_infima(Some(0.0), Some(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{horizontal_gradient_fd, p_sublaplacian, FdScheme};

    #[test]
    fn closed_form_gradients_match_fd() {
        let h = heisenberg_group(1).unwrap();
        let s = gauge_norm(&h);
        let fields = [
            gauge_profile(&h, &s, 1.0, 4.0, 0.25).unwrap(),
            gauge_power(&h, &s, 2.0),
            min_fundamental(&h, &s, 2.0, 0.1).unwrap(),
        ];
        let x = [0.7, -0.4, 0.9];
        for f in &fields {
            let fd = horizontal_gradient_fd(&h, f, &x, &FdScheme::gradient()).unwrap();
            let cf = f.closed_form_gradient(&x).unwrap();
            for (a, b) in fd.iter().zip(&cf) {
                assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()), "{}: {fd:?} vs {cf:?}", f.name());
            }
        }
    }

    #[test]
    fn registry_lookups() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let f = field_by_name(&NamedSpec::new("gauge_profile").with("s", 0.5), &e, &s).unwrap();
        assert!((f.value(&[1.0, 0.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(field_by_name(&NamedSpec::new("gauge_profile"), &e, &s).is_err());
        assert!(field_by_name(&NamedSpec::new("constant").with("z", 1.0), &e, &s).is_err());
        assert!(matches!(
            field_by_name(&NamedSpec::new("nope"), &e, &s),
            Err(Error::UnknownName { .. })
        ));
        assert!(flux_by_name(&NamedSpec::new("scaled_power").with("c", 2.0), 3.0).is_ok());
        assert!(source_by_name(&NamedSpec::new("power").with("e", 2.0)).is_ok());
        assert!(source_by_name(&NamedSpec::new("constant").with("c", -1.0)).is_err());
    }

    #[test]
    fn variable_coefficient_is_strongly_coercive() {
        let op = variable_coefficient(3.0, 0.5).unwrap();
        let r = crate::calculus::coercivity_check(&op, 3, 3, 5_000, 4).unwrap();
        assert!(r.strong_holds, "{r:?}");
    }

    #[test]
    fn manufactured_fields_are_superharmonic() {
        for inst in [manufactured_r3().unwrap(), manufactured_h1().unwrap()] {
            for x in [[0.3, 0.2, 0.1], [1.5, -0.7, 2.0], [4.0, 1.0, -3.0]] {
                for w in [&inst.u, &inst.v] {
                    let l = p_sublaplacian(&inst.group, w, &x, 2.0, &FdScheme::nested()).unwrap();
                    assert!(l < 0.0, "{} at {x:?}: {l}", w.name());
                }
            }
        }
    }

    #[test]
    fn power_pair_pointwise() {
        let inst = power_pair_r3(0.5).unwrap();
        for r in [0.01, 0.5, 2.0, 30.0] {
            let x = [r, 0.0, 0.0];
            let lap = -p_sublaplacian(&inst.group, &inst.u, &x, 2.0, &FdScheme::nested()).unwrap();
            let src = inst.v.value(&x).unwrap().powi(5);
            assert!(lap >= src, "r = {r}");
        }
        assert!(power_pair_r3(0.8).is_err());
    }
}
