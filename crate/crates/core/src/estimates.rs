//! Numerical verification of the a priori estimate chain for
//!
//!   −Δ_{G,p} u ≥ f(x,u,v),  −Δ_{G,q} v ≥ g(x,u,v),  u, v ≥ 0,
//!
//! on explicit candidate pairs: the weak form, the weighted energy estimate,
//! its product-form consequence, the averaged bound over B_R, the power-mean
//! bound, the infimum bound, and the large-radius estimates that feed the
//! Liouville argument. Every check reports per-radius margins rhs − lhs with a
//! standard error; a violation is only claimed below −3σ.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{apply_operator, horizontal_gradient, p_sublaplacian, FdScheme, OperatorSpec, ScalarField};
use crate::carnot::CarnotGroup;
use crate::error::{Error, Result};
use crate::harnack::{critical_sigma, HarnackScan};
use crate::norm::{HomogeneousNorm, Region};
use crate::quadrature::{IntegralEstimate, QuadratureBudget, SampleCloud};
use crate::test_functions::{default_kappa, make_cutoff, scaled_test_function, ScaledTestFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Line {
    /// the inequality for u (exponent p, source f)
    U,
    /// the inequality for v (exponent q, source g)
    V,
}

impl Line {
    pub fn other(self) -> Line {
        match self {
            Line::U => Line::V,
            Line::V => Line::U,
        }
    }
}

/// Right-hand side of one inequality of the system.
#[derive(Clone)]
pub enum Source {
    Zero,
    /// max(0, −Δ_{G,p} w) of the line's own field (or −div 𝒜 for a custom operator).
    Manufactured,
    /// h(partner), e.g. f = f(v) on the first line.
    OfPartner { name: String, h: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
    /// Carathéodory function of (x, u, v).
    General { name: String, h: Arc<dyn Fn(&[f64], f64, f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Source {
    pub fn of_partner(name: impl Into<String>, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::OfPartner { name: name.into(), h: Arc::new(h) }
    }

    pub fn general(name: impl Into<String>, h: impl Fn(&[f64], f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::General { name: name.into(), h: Arc::new(h) }
    }

    /// t ↦ c·t^e of the partner.
    pub fn partner_power(c: f64, e: f64) -> Self {
        Self::of_partner(format!("{c}*t^{e}"), move |t| c * t.powf(e))
    }

    pub fn label(&self) -> String {
        match self {
            Source::Zero => "zero".into(),
            Source::Manufactured => "manufactured".into(),
            Source::OfPartner { name, .. } => format!("partner:{name}"),
            Source::General { name, .. } => format!("general:{name}"),
        }
    }

    pub fn partner_function(&self) -> Option<&Arc<dyn Fn(f64) -> f64 + Send + Sync>> {
        match self {
            Source::OfPartner { h, .. } => Some(h),
            _ => None,
        }
    }
}

/// A candidate pair (u, v) for the system together with everything needed to
/// test it.
#[derive(Clone, Debug)]
pub struct SystemInstance {
    pub group: CarnotGroup,
    pub norm: HomogeneousNorm,
    pub p: f64,
    pub q: f64,
    pub f: Source,
    pub g: Source,
    pub u: ScalarField,
    pub v: ScalarField,
    /// Exponents in liminf f(t)/t^a > 0 and liminf g(t)/t^b > 0.
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Declared ess inf over the whole group, with analytic justification kept by the caller.
    pub inf_u: Option<f64>,
    pub inf_v: Option<f64>,
    pub radii: Vec<f64>,
    pub budget: QuadratureBudget,
    pub scheme: FdScheme,
    pub operator_u: Option<OperatorSpec>,
    pub operator_v: Option<OperatorSpec>,
}

impl SystemInstance {
    pub fn new(group: CarnotGroup, norm: HomogeneousNorm, p: f64, q: f64, u: ScalarField, v: ScalarField) -> Result<Self> {
        for (name, e) in [("p", p), ("q", q)] {
            if !(e > 1.0) || !e.is_finite() {
                return Err(Error::Config(format!("exponent {name} must exceed 1, got {e}")));
            }
        }
        Ok(SystemInstance {
            group,
            norm,
            p,
            q,
            f: Source::Zero,
            g: Source::Zero,
            u,
            v,
            a: None,
            b: None,
            inf_u: None,
            inf_v: None,
            radii: vec![1.0, 2.0, 4.0, 8.0],
            budget: QuadratureBudget::new(100_000, 0),
            scheme: FdScheme::nested(),
            operator_u: None,
            operator_v: None,
        })
    }

    pub fn with_sources(mut self, f: Source, g: Source) -> Self {
        self.f = f;
        self.g = g;
        self
    }

    pub fn manufactured(self) -> Self {
        self.with_sources(Source::Manufactured, Source::Manufactured)
    }

    pub fn with_exponents(mut self, a: Option<f64>, b: Option<f64>) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn with_infima(mut self, inf_u: Option<f64>, inf_v: Option<f64>) -> Self {
        self.inf_u = inf_u;
        self.inf_v = inf_v;
        self
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Self {
        self.radii = radii;
        self
    }

    pub fn with_budget(mut self, budget: QuadratureBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_operators(mut self, u: Option<OperatorSpec>, v: Option<OperatorSpec>) -> Self {
        self.operator_u = u;
        self.operator_v = v;
        self
    }

    pub fn exponent(&self, line: Line) -> f64 {
        match line {
            Line::U => self.p,
            Line::V => self.q,
        }
    }

    pub fn field(&self, line: Line) -> &ScalarField {
        match line {
            Line::U => &self.u,
            Line::V => &self.v,
        }
    }

    pub fn source(&self, line: Line) -> &Source {
        match line {
            Line::U => &self.f,
            Line::V => &self.g,
        }
    }

    pub fn operator(&self, line: Line) -> Option<&OperatorSpec> {
        match line {
            Line::U => self.operator_u.as_ref(),
            Line::V => self.operator_v.as_ref(),
        }
    }

    pub fn hom_dim(&self) -> f64 {
        self.group.hom_dim() as f64
    }

    fn validate_radii(&self, radii: &[f64]) -> Result<()> {
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Config(format!("radius grid must be nonempty and positive, got {radii:?}")));
        }
        Ok(())
    }

    /// Source value of `line` at x given the values of u and v there.
    pub fn source_value(&self, line: Line, x: &[f64], u: f64, v: f64) -> Result<f64> {
        let (own, partner) = match line {
            Line::U => (u, v),
            Line::V => (v, u),
        };
        let _ = own;
        let value = match self.source(line) {
            Source::Zero => 0.0,
            Source::Manufactured => {
                let lap = match self.operator(line) {
                    Some(op) => apply_operator(&self.group, op, self.field(line), x, &self.scheme)?,
                    None => p_sublaplacian(&self.group, self.field(line), x, self.exponent(line), &self.scheme)?,
                };
                (-lap).max(0.0)
            }
            Source::OfPartner { h, .. } => h(partner),
            Source::General { h, .. } => h(x, u, v),
        };
        if value.is_nan() {
            return Err(Error::Evaluation {
                what: format!("source {}", self.source(line).label()),
                point: x.to_vec(),
            });
        }
        if value < 0.0 {
            return Err(Error::Precondition(format!(
                "source {} is negative ({value}) at {x:?}",
                self.source(line).label()
            )));
        }
        Ok(value)
    }

    /// Flux 𝒜(x, w, ∇_L w) of the line, |∇w|^{p−2}∇w by default.
    fn flux(&self, line: Line, x: &[f64], w: f64, grad: &[f64]) -> Vec<f64> {
        match self.operator(line) {
            Some(op) => op.eval(x, w, grad),
            None => {
                let p = self.exponent(line);
                let n = grad.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n == 0.0 {
                    vec![0.0; grad.len()]
                } else {
                    let s = n.powf(p - 2.0);
                    grad.iter().map(|c| c * s).collect()
                }
            }
        }
    }
}

/// Free parameters of the chain; unset values follow the documented defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSettings {
    #[serde(default = "minus_one")]
    pub alpha: f64,
    #[serde(default = "minus_one")]
    pub beta: f64,
    /// Shift ℓ in u_ℓ = u + ℓ; by default 0 when every power of u_ℓ in a check
    /// is nonnegative and 0.1 otherwise.
    #[serde(default)]
    pub ell: Option<f64>,
    /// Young parameter of the u line; default (|α|p′/2)^{1/p′}.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Young parameter of the v line; default (|β|q′/2)^{1/q′}.
    #[serde(default)]
    pub young_mu: Option<f64>,
    #[serde(default)]
    pub kappa_p: Option<f64>,
    #[serde(default)]
    pub kappa_q: Option<f64>,
    /// Integrability exponents for the power-mean and infimum bounds.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

fn minus_one() -> f64 {
    -1.0
}

impl Default for EstimateSettings {
    fn default() -> Self {
        EstimateSettings {
            alpha: -1.0,
            beta: -1.0,
            ell: None,
            eta: None,
            young_mu: None,
            kappa_p: None,
            kappa_q: None,
            sigma: None,
            delta: None,
        }
    }
}

impl EstimateSettings {
    pub fn weight_exponent(&self, line: Line) -> f64 {
        match line {
            Line::U => self.alpha,
            Line::V => self.beta,
        }
    }

    pub fn young(&self, line: Line) -> Option<f64> {
        match line {
            Line::U => self.eta,
            Line::V => self.young_mu,
        }
    }

    pub fn kappa(&self, line: Line) -> Option<f64> {
        match line {
            Line::U => self.kappa_p,
            Line::V => self.kappa_q,
        }
    }

    pub fn integrability(&self, line: Line) -> Option<f64> {
        match line {
            Line::U => self.sigma,
            Line::V => self.delta,
        }
    }

    fn ell_for(&self, exponents: &[f64]) -> f64 {
        self.ell
            .unwrap_or(if exponents.iter().all(|e| *e >= 0.0) { 0.0 } else { 0.1 })
    }
}

/// σ for the chain: midpoint of (p − 1, Q(p−1)/(Q−p)), so that both the
/// power-mean step (σ > p − 1) and the weak Harnack range are respected.
pub fn chain_sigma(q_dim: f64, p: f64) -> f64 {
    0.5 * ((p - 1.0) + critical_sigma(q_dim, p))
}

/// Weight exponent α < 0 for which both averaged powers α − 1 + p and
/// (1 − α)(p − 1) lie in [0, σ]: α = 1 − σ/(p−1) when that keeps α − 1 + p ≥ 0,
/// otherwise α = 1 − p.
pub fn holder_alpha(p: f64, sigma: f64) -> Result<f64> {
    if !(sigma > p - 1.0) {
        return Err(Error::Precondition(format!(
            "integrability exponent {sigma} must exceed p − 1 = {}",
            p - 1.0
        )));
    }
    let alpha = (1.0 - sigma / (p - 1.0)).max(1.0 - p);
    debug_assert!(alpha < 0.0);
    Ok(alpha)
}

/// Constants of one line of the chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineConstants {
    pub p: f64,
    pub alpha: f64,
    pub young: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub kappa: f64,
    pub c_profile: f64,
    pub grad_sup: f64,
    pub c4: f64,
    pub sigma: Option<f64>,
    pub c_h: Option<f64>,
    pub c5: Option<f64>,
}

impl LineConstants {
    pub fn new(q_dim: f64, grad_sup: f64, p: f64, alpha: f64, young: Option<f64>, kappa: Option<f64>) -> Result<Self> {
        if !(alpha < 0.0) {
            return Err(Error::Precondition(format!("weight exponent must be negative, got {alpha}")));
        }
        let pp = p / (p - 1.0);
        let young = young.unwrap_or_else(|| (alpha.abs() * pp / 2.0).powf(1.0 / pp));
        if !(young > 0.0) {
            return Err(Error::Precondition(format!("Young parameter must be positive, got {young}")));
        }
        let c1 = alpha.abs() - young.powf(pp) / pp;
        if !(c1 > 0.0) {
            return Err(Error::Precondition(format!(
                "c1 = |α| − η^p′/p′ = {c1} is not positive (α = {alpha}, η = {young}); choose a smaller Young parameter"
            )));
        }
        let c2 = young.powf(-p) / p;
        let c3 = (c2 / c1).powf(1.0 / pp);
        let kappa = kappa.unwrap_or_else(|| default_kappa(p));
        let cutoff = make_cutoff(p, kappa)?;
        // the cutoff ratio is bounded by c_φ₀·‖∇_L S‖^p·R^{−p}, so the p-th power
        // of the gradient bound enters here
        let c4 = c3 * (2f64.powf(q_dim) - 1.0) * cutoff.c_profile * grad_sup.powf(p);
        Ok(LineConstants {
            p,
            alpha,
            young,
            c1,
            c2,
            c3,
            kappa,
            c_profile: cutoff.c_profile,
            grad_sup,
            c4,
            sigma: None,
            c_h: None,
            c5: None,
        })
    }

    /// c₅ = c₄(1 − 2^{−Q})^{(1−p)/σ} c_H^{p−1}.
    pub fn with_harnack(mut self, q_dim: f64, sigma: f64, c_h: f64) -> Self {
        self.sigma = Some(sigma);
        self.c_h = Some(c_h);
        self.c5 = Some(self.c4 * (1.0 - 2f64.powf(-q_dim)).powf((1.0 - self.p) / sigma) * c_h.powf(self.p - 1.0));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateConstants {
    pub hom_dim: f64,
    pub u: LineConstants,
    pub v: LineConstants,
}

impl EstimateConstants {
    pub fn from_settings(inst: &SystemInstance, s: &EstimateSettings) -> Result<Self> {
        Self::with_weights(inst, s, s.alpha, s.beta)
    }

    pub fn with_weights(inst: &SystemInstance, s: &EstimateSettings, alpha: f64, beta: f64) -> Result<Self> {
        let q_dim = inst.hom_dim();
        let gs = inst.norm.grad_sup_bound();
        Ok(EstimateConstants {
            hom_dim: q_dim,
            u: LineConstants::new(q_dim, gs, inst.p, alpha, s.eta, s.kappa_p)?,
            v: LineConstants::new(q_dim, gs, inst.q, beta, s.young_mu, s.kappa_q)?,
        })
    }

    pub fn line(&self, line: Line) -> &LineConstants {
        match line {
            Line::U => &self.u,
            Line::V => &self.v,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation,
    Inconclusive,
}

impl Verdict {
    pub fn combine(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut any = false;
        let mut out = Verdict::Pass;
        for v in items {
            any = true;
            match v {
                Verdict::Violation => return Verdict::Violation,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        if any {
            out
        } else {
            Verdict::Inconclusive
        }
    }
}

/// One (inequality, line, radius) comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusRecord {
    pub check_id: String,
    pub line: String,
    #[serde(rename = "R")]
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub check_id: String,
    pub anchor: String,
    pub records: Vec<RadiusRecord>,
    pub verdict: Verdict,
    pub parameters: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl EstimateReport {
    fn new(check_id: &str, anchor: &str, records: Vec<RadiusRecord>) -> Self {
        let verdict = Verdict::combine(records.iter().map(|r| r.verdict));
        EstimateReport {
            check_id: check_id.into(),
            anchor: anchor.into(),
            records,
            verdict,
            parameters: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.into(), value);
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn constants(mut self, prefix: &str, c: &LineConstants) -> Self {
        for (k, v) in [
            ("alpha", c.alpha),
            ("young", c.young),
            ("c1", c.c1),
            ("c2", c.c2),
            ("c3", c.c3),
            ("kappa", c.kappa),
            ("c_profile", c.c_profile),
            ("grad_sup", c.grad_sup),
            ("c4", c.c4),
        ] {
            self.parameters.insert(format!("{prefix}.{k}"), v);
        }
        if let (Some(s), Some(h), Some(c5)) = (c.sigma, c.c_h, c.c5) {
            self.parameters.insert(format!("{prefix}.sigma"), s);
            self.parameters.insert(format!("{prefix}.c_h"), h);
            self.parameters.insert(format!("{prefix}.c5"), c5);
        }
        self
    }

    /// Smallest margin across records.
    pub fn min_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

pub const ID_WEAK_FORM: &str = "weak_form";
pub const ID_ENERGY: &str = "caccioppoli";
pub const ID_PRODUCT: &str = "product_bound";
pub const ID_AVERAGED: &str = "averaged_bound";
pub const ID_POWER_MEAN: &str = "power_mean_bound";
pub const ID_INFIMUM: &str = "infimum_bound";
pub const ID_LARGE_RADIUS: &str = "large_radius";

const ANCHOR_WEAK_FORM: &str = "weak solution: ∫|∇u|^{p−2}∇u·∇φ ≥ ∫fφ and ∫|∇v|^{q−2}∇v·∇φ ≥ ∫gφ";
const ANCHOR_ENERGY: &str = "weighted energy estimate: ∫f u_ℓ^α φ + c1∫|∇u|^p u_ℓ^{α−1}φ ≤ c2∫u_ℓ^{α−1+p}|∇φ|^p/φ^{p−1}";
const ANCHOR_PRODUCT: &str = "product bound: ∫fφ ≤ c3 (∫u_ℓ^{α−1+p}|∇φ|^p/φ^{p−1})^{1/p′} (∫u_ℓ^{(1−α)(p−1)}|∇φ|^p/φ^{p−1})^{1/p}";
const ANCHOR_AVERAGED: &str = "averaged bound: ⨍_{B_R} f ≤ c4 R^{−p} (⨍_{A_R} u^{α−1+p})^{1/p′} (⨍_{A_R} u^{(1−α)(p−1)})^{1/p}";
const ANCHOR_POWER_MEAN: &str = "power-mean bound: ⨍_{B_R} f ≤ c4 R^{−p} (⨍_{A_R} u^σ)^{(p−1)/σ}, σ > p − 1";
const ANCHOR_INFIMUM: &str = "infimum bound under weak Harnack: ⨍_{B_R} f ≤ c5 R^{−p} (ess inf_{B_R} u)^{p−1}";
const ANCHOR_LARGE_RADIUS: &str = "large-radius estimates for f = f(v) with liminf f(t)/t^a > 0 and ess inf v = 0";

fn line_name(line: Line) -> &'static str {
    match line {
        Line::U => "u",
        Line::V => "v",
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    check_id: &str,
    line: &str,
    radius: f64,
    lhs: f64,
    rhs: f64,
    std_error: f64,
    samples: usize,
    seed: u64,
) -> RadiusRecord {
    let margin = rhs - lhs;
    let verdict = if !lhs.is_finite() || !rhs.is_finite() || !std_error.is_finite() {
        Verdict::Inconclusive
    } else if margin < -3.0 * std_error {
        Verdict::Violation
    } else {
        Verdict::Pass
    };
    RadiusRecord {
        check_id: check_id.into(),
        line: line.into(),
        radius,
        lhs,
        rhs,
        margin,
        std_error,
        samples,
        seed,
        verdict,
        note: None,
    }
}

fn inconclusive(check_id: &str, line: &str, radius: f64, samples: usize, seed: u64, note: String) -> RadiusRecord {
    RadiusRecord {
        check_id: check_id.into(),
        line: line.into(),
        radius,
        lhs: f64::NAN,
        rhs: f64::NAN,
        margin: f64::NAN,
        std_error: f64::NAN,
        samples,
        seed,
        verdict: Verdict::Inconclusive,
        note: Some(note),
    }
}

/// Standard error of c·Π I_k^{e_k} by the delta method.
fn product_se(value: f64, factors: &[(IntegralEstimate, f64)]) -> f64 {
    let rel2: f64 = factors
        .iter()
        .map(|(i, e)| {
            if i.value == 0.0 {
                0.0
            } else {
                (e * i.std_error / i.value).powi(2)
            }
        })
        .sum();
    value.abs() * rel2.sqrt()
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// Values of u, v, f, g and the horizontal gradients at a point.
struct PointData {
    own: [f64; 2],
    source: [f64; 2],
    grad: [Vec<f64>; 2],
}

fn idx(line: Line) -> usize {
    match line {
        Line::U => 0,
        Line::V => 1,
    }
}

fn point_data(inst: &SystemInstance, x: &[f64], gradients: bool) -> Result<PointData> {
    let u = inst.u.value(x)?;
    let v = inst.v.value(x)?;
    if u < 0.0 || v < 0.0 {
        return Err(Error::Precondition(format!("candidate pair is negative at {x:?}: u = {u}, v = {v}")));
    }
    let f = inst.source_value(Line::U, x, u, v)?;
    let g = inst.source_value(Line::V, x, u, v)?;
    let scheme = FdScheme::gradient();
    let grad = if gradients {
        [
            horizontal_gradient(&inst.group, &inst.u, x, &scheme)?,
            horizontal_gradient(&inst.group, &inst.v, x, &scheme)?,
        ]
    } else {
        [Vec::new(), Vec::new()]
    };
    Ok(PointData {
        own: [u, v],
        source: [f, g],
        grad,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn tag(check: u64, radius_index: usize) -> u64 {
    check * 1_000_003 + radius_index as u64
}

/// Scaled cutoffs φ₁ at each radius, with κ = max(p, q, 2).
pub fn default_battery(inst: &SystemInstance, radii: &[f64]) -> Result<Vec<ScaledTestFunction>> {
    let p = inst.p.max(inst.q);
    let cutoff = make_cutoff(p, default_kappa(p))?;
    radii
        .iter()
        .map(|&r| scaled_test_function(&inst.group, &inst.norm, cutoff, r))
        .collect()
}

/// Both weak-form inequalities against every test function of the battery.
pub fn check_weak_solution(inst: &SystemInstance, battery: &[ScaledTestFunction]) -> Result<EstimateReport> {
    if battery.is_empty() {
        return Err(Error::Precondition("test-function battery is empty".into()));
    }
    let rows: Vec<Vec<RadiusRecord>> = battery
        .par_iter()
        .enumerate()
        .map(|(i, phi)| -> Result<Vec<RadiusRecord>> {
            let budget = inst.budget.derived(tag(1, i));
            let cloud = SampleCloud::draw(&inst.group, &inst.norm, Region::ball(2.0 * phi.radius)?, &budget)?;
            let data = cloud.map(|x, _| {
                let d = point_data(inst, x, true)?;
                let ph = phi.value(x);
                let gph = phi.horizontal_gradient(x);
                let mut lhs = [0.0; 2];
                let mut rhs = [0.0; 2];
                for line in [Line::U, Line::V] {
                    let k = idx(line);
                    lhs[k] = d.source[k] * ph;
                    rhs[k] = dot(&inst.flux(line, x, d.own[k], &d.grad[k]), &gph);
                }
                Ok((lhs, rhs))
            })?;
            let mut out = Vec::new();
            for line in [Line::U, Line::V] {
                let k = idx(line);
                let l: Vec<f64> = data.iter().map(|d| d.0[k]).collect();
                let r: Vec<f64> = data.iter().map(|d| d.1[k]).collect();
                let diff: Vec<f64> = data.iter().map(|d| d.1[k] - d.0[k]).collect();
                let li = cloud.integrate(&l)?;
                let ri = cloud.integrate(&r)?;
                let di = cloud.integrate(&diff)?;
                let mut rec = record(ID_WEAK_FORM, line_name(line), phi.radius, li.value, ri.value, di.std_error, cloud.len(), budget.seed);
                // the paired difference gives the sharper error; margin from it is identical up to rounding
                rec.margin = di.value;
                rec.verdict = if !di.value.is_finite() || !di.std_error.is_finite() {
                    Verdict::Inconclusive
                } else if di.value < -3.0 * di.std_error {
                    Verdict::Violation
                } else {
                    Verdict::Pass
                };
                out.push(rec);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut report = EstimateReport::new(ID_WEAK_FORM, ANCHOR_WEAK_FORM, rows.into_iter().flatten().collect());
    if inst.operator_u.is_some() || inst.operator_v.is_some() {
        report = report.note("custom fluxes used in the weak form");
    }
    Ok(report)
}

fn line_test_function(inst: &SystemInstance, c: &LineConstants, r: f64) -> Result<ScaledTestFunction> {
    scaled_test_function(&inst.group, &inst.norm, make_cutoff(c.p, c.kappa)?, r)
}

/// Per-point integrands for the energy and product checks on B_{2R}.
struct WeightedSums {
    energy_lhs: IntegralEstimate,
    energy_rhs: IntegralEstimate,
    source: IntegralEstimate,
    first: IntegralEstimate,
    second: IntegralEstimate,
}

fn weighted_sums(inst: &SystemInstance, line: Line, c: &LineConstants, ell: f64, cloud: &SampleCloud, phi: &ScaledTestFunction) -> Result<WeightedSums> {
    let p = c.p;
    let alpha = c.alpha;
    let k = idx(line);
    let rows = cloud.map(|x, _| {
        let d = point_data(inst, x, true)?;
        let w = d.own[k] + ell;
        let ph = phi.value(x);
        let ratio = phi.ratio(x);
        let gn = d.grad[k].iter().map(|c| c * c).sum::<f64>().sqrt();
        let lhs = if ph == 0.0 {
            0.0
        } else {
            d.source[k] * w.powf(alpha) * ph + c.c1 * gn.powf(p) * w.powf(alpha - 1.0) * ph
        };
        let first = if ratio == 0.0 { 0.0 } else { w.powf(alpha - 1.0 + p) * ratio };
        let second = if ratio == 0.0 { 0.0 } else { w.powf((1.0 - alpha) * (p - 1.0)) * ratio };
        Ok([lhs, first, second, d.source[k] * ph])
    })?;
    let col = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let first = cloud.integrate(&col(1))?;
    let mut energy_rhs = first;
    energy_rhs.value *= c.c2;
    energy_rhs.std_error *= c.c2;
    Ok(WeightedSums {
        energy_lhs: cloud.integrate(&col(0))?,
        energy_rhs,
        source: cloud.integrate(&col(3))?,
        first,
        second: cloud.integrate(&col(2))?,
    })
}

fn run_weighted(
    inst: &SystemInstance,
    consts: &EstimateConstants,
    settings: &EstimateSettings,
    radii: &[f64],
    check: u64,
    product: bool,
) -> Result<(Vec<RadiusRecord>, [f64; 2])> {
    inst.validate_radii(radii)?;
    let ells = [Line::U, Line::V].map(|line| {
        let c = consts.line(line);
        if product {
            settings.ell_for(&[c.alpha - 1.0 + c.p, (1.0 - c.alpha) * (c.p - 1.0)])
        } else {
            settings.ell_for(&[c.alpha, c.alpha - 1.0])
        }
    });
    let id = if product { ID_PRODUCT } else { ID_ENERGY };
    let rows: Vec<Vec<RadiusRecord>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<Vec<RadiusRecord>> {
            let budget = inst.budget.derived(tag(check, i));
            let cloud = SampleCloud::draw(&inst.group, &inst.norm, Region::ball(2.0 * r)?, &budget)?;
            let mut out = Vec::new();
            for line in [Line::U, Line::V] {
                let c = consts.line(line);
                let ell = ells[idx(line)];
                let phi = line_test_function(inst, c, r)?;
                let sums = match weighted_sums(inst, line, c, ell, &cloud, &phi) {
                    Ok(s) => s,
                    Err(e) => {
                        out.push(inconclusive(id, line_name(line), r, cloud.len(), budget.seed, e.to_string()));
                        continue;
                    }
                };
                let rec = if product {
                    let pp = c.p / (c.p - 1.0);
                    let rhs = c.c3 * sums.first.value.powf(1.0 / pp) * sums.second.value.powf(1.0 / c.p);
                    let se = product_se(rhs, &[(sums.first, 1.0 / pp), (sums.second, 1.0 / c.p)]);
                    record(id, line_name(line), r, sums.source.value, rhs, combined(sums.source.std_error, se), cloud.len(), budget.seed)
                } else {
                    record(
                        id,
                        line_name(line),
                        r,
                        sums.energy_lhs.value,
                        sums.energy_rhs.value,
                        combined(sums.energy_lhs.std_error, sums.energy_rhs.std_error),
                        cloud.len(),
                        budget.seed,
                    )
                };
                let rec = if rec.verdict == Verdict::Inconclusive {
                    RadiusRecord {
                        note: Some(format!(
                            "non-finite integrand: u_ℓ vanishes where a negative power is taken (ℓ = {ell})"
                        )),
                        ..rec
                    }
                } else {
                    rec
                };
                out.push(rec);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((rows.into_iter().flatten().collect(), ells))
}

/// The weighted energy estimate with φ₁ the scaled cutoff at each radius.
pub fn check_caccioppoli(inst: &SystemInstance, consts: &EstimateConstants, settings: &EstimateSettings, radii: &[f64]) -> Result<EstimateReport> {
    let (records, ells) = run_weighted(inst, consts, settings, radii, 2, false)?;
    Ok(EstimateReport::new(ID_ENERGY, ANCHOR_ENERGY, records)
        .constants("u", &consts.u)
        .constants("v", &consts.v)
        .param("u.ell", ells[0])
        .param("v.ell", ells[1]))
}

/// The product-form bound obtained from the energy estimate by Hölder.
pub fn check_product_bound(inst: &SystemInstance, consts: &EstimateConstants, settings: &EstimateSettings, radii: &[f64]) -> Result<EstimateReport> {
    let (records, ells) = run_weighted(inst, consts, settings, radii, 3, true)?;
    Ok(EstimateReport::new(ID_PRODUCT, ANCHOR_PRODUCT, records)
        .constants("u", &consts.u)
        .constants("v", &consts.v)
        .param("u.ell", ells[0])
        .param("v.ell", ells[1]))
}

/// Sample data on B_{2R} for the averaged bounds: source averages over B_R and
/// the own field on A_R.
struct AnnulusData {
    cloud: SampleCloud,
    seed: u64,
    own: [Vec<f64>; 2],
    source: [Vec<f64>; 2],
    ball: Vec<bool>,
    annulus: Vec<bool>,
}

fn annulus_data(inst: &SystemInstance, r: f64, budget: &QuadratureBudget) -> Result<AnnulusData> {
    let cloud = SampleCloud::draw(&inst.group, &inst.norm, Region::ball(2.0 * r)?, budget)?;
    let data = cloud.map(|x, _| point_data(inst, x, false))?;
    let ball = cloud.mask(&Region::ball(r)?);
    let annulus = cloud.mask(&Region::annulus(r)?);
    Ok(AnnulusData {
        own: [data.iter().map(|d| d.own[0]).collect(), data.iter().map(|d| d.own[1]).collect()],
        source: [data.iter().map(|d| d.source[0]).collect(), data.iter().map(|d| d.source[1]).collect()],
        cloud,
        seed: budget.seed,
        ball,
        annulus,
    })
}

fn powered(values: &[f64], e: f64) -> Vec<f64> {
    values.iter().map(|v| v.powf(e)).collect()
}

fn averaged_record(id: &str, line: Line, r: f64, c: &LineConstants, d: &AnnulusData) -> Result<RadiusRecord> {
    let k = idx(line);
    let p = c.p;
    let pp = p / (p - 1.0);
    let lhs = d.cloud.average_where(&d.source[k], &d.ball)?;
    let e1 = c.alpha - 1.0 + p;
    let e2 = (1.0 - c.alpha) * (p - 1.0);
    let a1 = d.cloud.average_where(&powered(&d.own[k], e1), &d.annulus)?;
    let a2 = d.cloud.average_where(&powered(&d.own[k], e2), &d.annulus)?;
    let rhs = c.c4 * r.powf(-p) * a1.value.powf(1.0 / pp) * a2.value.powf(1.0 / p);
    let se = product_se(rhs, &[(a1, 1.0 / pp), (a2, 1.0 / p)]);
    Ok(record(id, line_name(line), r, lhs.value, rhs, combined(lhs.std_error, se), d.cloud.len(), d.seed))
}

fn power_mean_record(line: Line, r: f64, c: &LineConstants, sigma: f64, d: &AnnulusData) -> Result<RadiusRecord> {
    let k = idx(line);
    let p = c.p;
    let lhs = d.cloud.average_where(&d.source[k], &d.ball)?;
    let a = d.cloud.average_where(&powered(&d.own[k], sigma), &d.annulus)?;
    let rhs = c.c4 * r.powf(-p) * a.value.powf((p - 1.0) / sigma);
    let se = product_se(rhs, &[(a, (p - 1.0) / sigma)]);
    Ok(record(ID_POWER_MEAN, line_name(line), r, lhs.value, rhs, combined(lhs.std_error, se), d.cloud.len(), d.seed))
}

/// The averaged bound over B_R with the constructed cutoff and closed-form c₄.
pub fn check_averaged_bound(inst: &SystemInstance, consts: &EstimateConstants, radii: &[f64]) -> Result<EstimateReport> {
    inst.validate_radii(radii)?;
    let rows: Vec<Vec<RadiusRecord>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<Vec<RadiusRecord>> {
            let d = annulus_data(inst, r, &inst.budget.derived(tag(4, i)))?;
            [Line::U, Line::V]
                .iter()
                .map(|&line| averaged_record(ID_AVERAGED, line, r, consts.line(line), &d))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(EstimateReport::new(ID_AVERAGED, ANCHOR_AVERAGED, rows.into_iter().flatten().collect())
        .constants("u", &consts.u)
        .constants("v", &consts.v))
}

/// Result of the chain check: the averaged bound and the power-mean bound
/// evaluated at the same weights on shared samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainOutcome {
    pub averaged: EstimateReport,
    pub power_mean: EstimateReport,
    /// Every radius/line where the averaged bound passes also passes the
    /// power-mean bound.
    pub implication_holds: bool,
}

/// Power-mean bound with σ (u line) and δ (v line), together with the
/// averaged bound at the matching weights α(σ), β(δ).
pub fn check_power_mean_chain(
    inst: &SystemInstance,
    settings: &EstimateSettings,
    sigma: f64,
    delta: f64,
    radii: &[f64],
) -> Result<ChainOutcome> {
    inst.validate_radii(radii)?;
    let alpha = holder_alpha(inst.p, sigma)?;
    let beta = holder_alpha(inst.q, delta)?;
    let consts = EstimateConstants::with_weights(inst, settings, alpha, beta)?;
    let exps = [sigma, delta];
    let rows: Vec<(Vec<RadiusRecord>, Vec<RadiusRecord>)> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<_> {
            let d = annulus_data(inst, r, &inst.budget.derived(tag(5, i)))?;
            let mut av = Vec::new();
            let mut pm = Vec::new();
            for line in [Line::U, Line::V] {
                let c = consts.line(line);
                av.push(averaged_record(ID_AVERAGED, line, r, c, &d)?);
                pm.push(power_mean_record(line, r, c, exps[idx(line)], &d)?);
            }
            Ok((av, pm))
        })
        .collect::<Result<_>>()?;
    let (av, pm): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let av: Vec<RadiusRecord> = av.into_iter().flatten().collect();
    let pm: Vec<RadiusRecord> = pm.into_iter().flatten().collect();
    let implication_holds = av
        .iter()
        .zip(&pm)
        .all(|(a, b)| a.verdict != Verdict::Pass || b.verdict == Verdict::Pass);
    let describe = |rep: EstimateReport| {
        rep.constants("u", &consts.u)
            .constants("v", &consts.v)
            .param("sigma", sigma)
            .param("delta", delta)
            .note("weights chosen as α = max(1 − p, 1 − σ/(p−1)) so that both averaged powers lie in [0, σ]")
    };
    Ok(ChainOutcome {
        averaged: describe(EstimateReport::new(ID_AVERAGED, ANCHOR_AVERAGED, av)),
        power_mean: describe(EstimateReport::new(ID_POWER_MEAN, ANCHOR_POWER_MEAN, pm)),
        implication_holds,
    })
}

/// Constants of the infimum bound: c₅ built from the power-mean weights and
/// the empirical c_H of each scan.
pub fn infimum_constants(inst: &SystemInstance, settings: &EstimateSettings, scan_u: &HarnackScan, scan_v: &HarnackScan) -> Result<EstimateConstants> {
    let q_dim = inst.hom_dim();
    for (scan, p, name) in [(scan_u, inst.p, "u"), (scan_v, inst.q, "v")] {
        if !(scan.sigma > p - 1.0) {
            return Err(Error::Precondition(format!(
                "harnack scan of {name} uses σ = {} but the infimum bound needs σ > {}",
                scan.sigma,
                p - 1.0
            )));
        }
        if !(scan.empirical_c_h.is_finite() && scan.empirical_c_h > 0.0) {
            return Err(Error::Precondition(format!("harnack scan of {name} has no usable c_H")));
        }
    }
    let alpha = holder_alpha(inst.p, scan_u.sigma)?;
    let beta = holder_alpha(inst.q, scan_v.sigma)?;
    let c = EstimateConstants::with_weights(inst, settings, alpha, beta)?;
    Ok(EstimateConstants {
        hom_dim: q_dim,
        u: c.u.with_harnack(q_dim, scan_u.sigma, scan_u.empirical_c_h),
        v: c.v.with_harnack(q_dim, scan_v.sigma, scan_v.empirical_c_h),
    })
}

/// ⨍_{B_R} f ≤ c₅ R^{−p}(ess inf_{B_R} u)^{p−1} and its v analogue.
pub fn check_infimum_bound(
    inst: &SystemInstance,
    settings: &EstimateSettings,
    scan_u: &HarnackScan,
    scan_v: &HarnackScan,
    radii: &[f64],
) -> Result<EstimateReport> {
    inst.validate_radii(radii)?;
    let consts = infimum_constants(inst, settings, scan_u, scan_v)?;
    let rows: Vec<Vec<RadiusRecord>> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<Vec<RadiusRecord>> {
            let budget = inst.budget.derived(tag(6, i));
            let d = annulus_data(inst, r, &budget)?;
            let ball = Region::ball(r)?;
            let mut out = Vec::new();
            for line in [Line::U, Line::V] {
                let k = idx(line);
                let c = consts.line(line);
                let lhs = d.cloud.average_where(&d.source[k], &d.ball)?;
                let ei = d
                    .cloud
                    .ess_inf_where(&inst.norm, inst.field(line), &d.own[k], &d.ball, &ball, &budget)?;
                let rhs = c.c5.expect("c5 set") * r.powf(-c.p) * ei.value.powf(c.p - 1.0);
                out.push(record(ID_INFIMUM, line_name(line), r, lhs.value, rhs, lhs.std_error, d.cloud.len(), d.seed));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut report = EstimateReport::new(ID_INFIMUM, ANCHOR_INFIMUM, rows.into_iter().flatten().collect())
        .constants("u", &consts.u)
        .constants("v", &consts.v)
        .note("ess inf is estimated from above (sample minimum refined by local descent); c_H is the largest measured harnack ratio");
    for (scan, name) in [(scan_u, "u"), (scan_v, "v")] {
        let need = 2.0 * radii.iter().cloned().fold(0.0, f64::max);
        if !scan.covers(need) {
            report = report.note(format!(
                "harnack scan of {name} stops at R = {:?}, below 2R = {need} used by the bound",
                scan.radii.last()
            ));
        }
    }
    Ok(report)
}

/// Certified lower bound f(t) ≥ c·t^a on (0, ε).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiminfCertificate {
    pub a: f64,
    pub c: f64,
    /// +∞ when f(t)/t^a is constant on the scanned grid (serialized as null).
    pub epsilon: f64,
    pub plateau_min: f64,
    pub plateau_log_slope: f64,
    pub grid_points: usize,
}

/// Scan f(t)/t^a on a log grid of [1e−8, 1]. An exactly constant ratio gives
/// c = that ratio and ε = ∞; otherwise c is half the minimum over t ≤ 1e−4 and
/// ε the largest grid point below which the ratio stays ≥ c.
pub fn certify_liminf(h: &dyn Fn(f64) -> f64, a: f64) -> Result<LiminfCertificate> {
    if !(a > 0.0) {
        return Err(Error::Precondition(format!("liminf exponent must be positive, got {a}")));
    }
    let n = 161;
    let grid: Vec<f64> = (0..n).map(|i| 10f64.powf(-8.0 + 8.0 * i as f64 / (n - 1) as f64)).collect();
    let ratios: Vec<f64> = grid.iter().map(|&t| h(t) / t.powf(a)).collect();
    if let Some(i) = ratios.iter().position(|r| r.is_nan() || *r < 0.0) {
        return Err(Error::Precondition(format!(
            "f(t)/t^a is invalid ({}) at t = {:e}",
            ratios[i], grid[i]
        )));
    }
    let plateau: Vec<usize> = (0..n).filter(|&i| grid[i] <= 1e-4 * (1.0 + 1e-9)).collect();
    let plateau_min = plateau.iter().map(|&i| ratios[i]).fold(f64::INFINITY, f64::min);
    let (x0, x1) = (plateau[0], *plateau.last().unwrap());
    let slope = if ratios[x0] > 0.0 && ratios[x1] > 0.0 && ratios[x0].is_finite() && ratios[x1].is_finite() {
        (ratios[x1].ln() - ratios[x0].ln()) / (grid[x1].ln() - grid[x0].ln())
    } else {
        0.0
    };
    if !(plateau_min > 1e-12) {
        return Err(Error::Precondition(format!(
            "liminf f(t)/t^{a} appears to vanish (minimum {plateau_min:e} on t ≤ 1e−4)"
        )));
    }
    if slope > 0.05 {
        return Err(Error::Precondition(format!(
            "f(t)/t^{a} decays towards t = 0 (log-slope {slope:.3} on t ≤ 1e−4); the liminf is likely 0"
        )));
    }
    let finite_min = ratios.iter().cloned().filter(|r| r.is_finite()).fold(f64::INFINITY, f64::min);
    let finite_max = ratios.iter().cloned().filter(|r| r.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if ratios.iter().all(|r| r.is_finite()) && (finite_max - finite_min) <= 1e-12 * finite_max {
        return Ok(LiminfCertificate {
            a,
            c: finite_min,
            epsilon: f64::INFINITY,
            plateau_min,
            plateau_log_slope: slope,
            grid_points: n,
        });
    }
    let c = 0.5 * plateau_min;
    let mut epsilon = grid[0];
    for i in 0..n {
        if ratios[i] >= c {
            epsilon = grid[i];
        } else {
            break;
        }
    }
    Ok(LiminfCertificate {
        a,
        c,
        epsilon,
        plateau_min,
        plateau_log_slope: slope,
        grid_points: n,
    })
}

/// Large-radius estimates for f = f(v), ess inf v = 0:
///
/// (infimum)          ess inf_{B_R} v ≤ c_i R^{−p/a}(ess inf_{B_R} u)^{(p−1)/a}
/// (source, by inf)   ∫_{B_R} g ≤ c_ii R^{Q−q−(q−1)p/a}(ess inf_{B_R} u)^{(p−1)(q−1)/a}
/// (source, by f)     ∫_{B_R} g ≤ c_iii R^{Q−q−Q(q−1)/a}(∫_{A_{R/2}} f(v))^{(q−1)/a}
///
/// and, when also g = g(u) with liminf g(t)/t^b > 0 and ess inf u = 0,
///
/// (decay)            (ess inf_{B_R} u)^{ab−(p−1)(q−1)} ≤ c R^{−aq−p(q−1)}, same for v,
/// (self bound)       ∫_{B_R} f ≤ c_v R^{Q−p−(p−1)q/b−Q(p−1)(q−1)/(ab)}(∫_{A_{R/2}} f)^{(p−1)(q−1)/(ab)}.
///
/// Constants are explicit: with the density gate |{v < ε} ∩ B_R| ≥ |B_R|/2 and
/// the same on A_{R/2}, c_i = (2c₅/c_f)^{1/a}, c_ii = w_S c̃₅ c_i^{q−1} and
/// c_iii = w_S c̃₅ [2^{Q+1}/(c_f w_S (2^Q−1))]^{(q−1)/a}; only radii passing
/// the gate are checked.
pub fn check_large_radius(
    inst: &SystemInstance,
    settings: &EstimateSettings,
    scan_u: &HarnackScan,
    scan_v: &HarnackScan,
    radii: &[f64],
) -> Result<EstimateReport> {
    inst.validate_radii(radii)?;
    if inst.inf_v != Some(0.0) {
        return Err(Error::Precondition(format!(
            "large-radius estimates need ess inf v = 0 declared, got {:?}",
            inst.inf_v
        )));
    }
    let f = inst.f.partner_function().ok_or_else(|| {
        Error::Precondition("large-radius estimates need f = f(v) (a partner-only source)".into())
    })?;
    let a = inst.a.ok_or_else(|| Error::Precondition("exponent a of liminf f(t)/t^a is not declared".into()))?;
    let cert_f = certify_liminf(f.as_ref(), a)?;
    let second = match (inst.inf_u, inst.g.partner_function(), inst.b) {
        (Some(z), Some(g), Some(b)) if z == 0.0 => Some((g.clone(), b, certify_liminf(g.as_ref(), b)?)),
        _ => None,
    };
    let consts = infimum_constants(inst, settings, scan_u, scan_v)?;
    let c5 = consts.u.c5.unwrap();
    let c5t = consts.v.c5.unwrap();
    let (p, q, qd) = (inst.p, inst.q, inst.hom_dim());
    let two_q = 2f64.powf(qd);

    struct Row {
        gate: bool,
        records: Vec<RadiusRecord>,
    }
    let rows: Vec<Row> = radii
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<Row> {
            let budget = inst.budget.derived(tag(7, i));
            let cloud = SampleCloud::draw(&inst.group, &inst.norm, Region::ball(r)?, &budget)?;
            let data = cloud.map(|x, _| point_data(inst, x, false))?;
            let u: Vec<f64> = data.iter().map(|d| d.own[0]).collect();
            let v: Vec<f64> = data.iter().map(|d| d.own[1]).collect();
            let fv: Vec<f64> = data.iter().map(|d| d.source[0]).collect();
            let gu: Vec<f64> = data.iter().map(|d| d.source[1]).collect();
            let all = cloud.all();
            let shell = cloud.mask(&Region::annulus(r / 2.0)?);
            let gate_f = cloud.sublevel_fraction_where(&v, &all, cert_f.epsilon) >= 0.5
                && cloud.sublevel_fraction_where(&v, &shell, cert_f.epsilon) >= 0.5;
            let gate_g = second.as_ref().is_none_or(|(_, _, cg)| {
                cloud.sublevel_fraction_where(&u, &all, cg.epsilon) >= 0.5
                    && cloud.sublevel_fraction_where(&u, &shell, cg.epsilon) >= 0.5
            });
            if !gate_f {
                return Ok(Row { gate: false, records: Vec::new() });
            }
            let ball = Region::ball(r)?;
            let ei_u = cloud.ess_inf_where(&inst.norm, &inst.u, &u, &all, &ball, &budget)?.value;
            let ei_v = cloud.ess_inf_where(&inst.norm, &inst.v, &v, &all, &ball, &budget)?.value;
            let vol = cloud.measure();
            let w_s = vol.value / r.powf(qd);
            let int_g = cloud.integrate(&gu)?;
            let int_f_ball = cloud.integrate(&fv)?;
            let int_f_shell = cloud.integrate_where(&fv, &shell)?;
            let n = cloud.len();
            let seed = budget.seed;
            let mut out = Vec::new();

            let c_i = (2.0 * c5 / cert_f.c).powf(1.0 / a);
            out.push(record(
                "large_radius_infimum",
                "v",
                r,
                ei_v,
                c_i * r.powf(-p / a) * ei_u.powf((p - 1.0) / a),
                0.0,
                n,
                seed,
            ));
            let c_ii = w_s * c5t * c_i.powf(q - 1.0);
            out.push(record(
                "large_radius_source_by_infimum",
                "v",
                r,
                int_g.value,
                c_ii * r.powf(qd - q - (q - 1.0) * p / a) * ei_u.powf((p - 1.0) * (q - 1.0) / a),
                int_g.std_error,
                n,
                seed,
            ));
            let c_iii = w_s * c5t * (2.0 * two_q / (cert_f.c * w_s * (two_q - 1.0))).powf((q - 1.0) / a);
            let rhs_iii = c_iii * r.powf(qd - q - qd * (q - 1.0) / a) * int_f_shell.value.powf((q - 1.0) / a);
            let se_iii = product_se(rhs_iii, &[(int_f_shell, (q - 1.0) / a)]);
            out.push(record(
                "large_radius_source_by_partner",
                "v",
                r,
                int_g.value,
                rhs_iii,
                combined(int_g.std_error, se_iii),
                n,
                seed,
            ));

            if let (Some((_, b, cg)), true) = (&second, gate_g) {
                let b = *b;
                let ab = a * b;
                let k = ab - (p - 1.0) * (q - 1.0);
                let c_prime = (2.0 * c5t / cg.c).powf(1.0 / b);
                out.push(record(
                    "large_radius_decay",
                    "u",
                    r,
                    ei_u.powf(k),
                    c_prime.powf(ab) * c_i.powf(a * (q - 1.0)) * r.powf(-a * q - p * (q - 1.0)),
                    0.0,
                    n,
                    seed,
                ));
                out.push(record(
                    "large_radius_decay",
                    "v",
                    r,
                    ei_v.powf(k),
                    c_i.powf(ab) * c_prime.powf(b * (p - 1.0)) * r.powf(-b * p - q * (p - 1.0)),
                    0.0,
                    n,
                    seed,
                ));
                let c_iii_mirror = w_s * c5 * (2.0 * two_q / (cg.c * w_s * (two_q - 1.0))).powf((p - 1.0) / b);
                let c_v = c_iii_mirror * c_iii.powf((p - 1.0) / b);
                let e = (p - 1.0) * (q - 1.0) / ab;
                let rhs_v = c_v * r.powf(qd - p - (p - 1.0) * q / b - qd * e) * int_f_shell.value.powf(e);
                let se_v = product_se(rhs_v, &[(int_f_shell, e)]);
                out.push(record(
                    "large_radius_self_bound",
                    "u",
                    r,
                    int_f_ball.value,
                    rhs_v,
                    combined(int_f_ball.std_error, se_v),
                    n,
                    seed,
                ));
            }
            Ok(Row { gate: true, records: out })
        })
        .collect::<Result<_>>()?;
    let r_min = radii.iter().zip(&rows).find(|(_, row)| row.gate).map(|(r, _)| *r);
    let skipped: Vec<f64> = radii.iter().zip(&rows).filter(|(_, row)| !row.gate).map(|(r, _)| *r).collect();
    let mut report = EstimateReport::new(ID_LARGE_RADIUS, ANCHOR_LARGE_RADIUS, rows.into_iter().flat_map(|r| r.records).collect())
        .constants("u", &consts.u)
        .constants("v", &consts.v)
        .param("a", a)
        .param("c_f", cert_f.c)
        .param("epsilon_f", cert_f.epsilon);
    if let Some(r) = r_min {
        report = report.param("R_min", r);
    }
    if let Some((_, b, cg)) = &second {
        report = report.param("b", *b).param("c_g", cg.c).param("epsilon_g", cg.epsilon);
    } else {
        report = report.note("decay and self-bound estimates skipped: they need g = g(u), a declared b and ess inf u = 0");
    }
    if !skipped.is_empty() {
        report = report.note(format!(
            "radii {skipped:?} are outside the large-radius regime (|{{v < ε}}| below half of B_R or A_(R/2))"
        ));
    }
    Ok(report)
}
