//! Nonexistence conditions for −Δ_{G,p} u ≥ f(v), −Δ_{G,q} v ≥ g(u) on the
//! whole group, and a rule-based classifier over declared source shapes.
//!
//! The power condition is evaluated in four algebraically equivalent forms:
//!
//!   min-form   min{Q−p−(p−1)q/b, Q−q−(q−1)p/a} ≤ Q(p−1)(q−1)/(ab)
//!   max-form   max{abp+aq(p−1), abq+bp(q−1)} ≥ Q(ab−(p−1)(q−1))
//!   p = q      max{a+p−1, b+p−1} ≥ (Q−p)/(p(p−1))·(ab−(p−1)²)
//!   p = q = 2  max{a+1, b+1} ≥ (Q−2)/2·(ab−1)
//!
//! Inputs given as decimal or fractional strings are evaluated exactly over
//! the rationals; plain floats get a margin and a boundary flag instead.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero as _};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating margins closer to zero than this are flagged as boundary cases.
pub const BOUNDARY_BAND: f64 = 1e-9;

/// A real input, exact when it came from a rational literal.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    /// Parses integers, decimals ("0.25", "1e-3") and fractions ("7/3") exactly;
    /// anything else f64 accepts becomes a float.
    pub fn parse(s: &str) -> Result<Number> {
        let t = s.trim();
        if let Some(r) = parse_rational(t) {
            return Ok(Number::Exact(r));
        }
        t.parse::<f64>()
            .map(Number::Float)
            .map_err(|_| Error::Config(format!("cannot parse number {s:?}")))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => ratio_to_f64(r),
            Number::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

impl FromStr for Number {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Number::parse(s)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => write!(f, "{r}"),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

fn parse_rational(t: &str) -> Option<BigRational> {
    if t.is_empty() {
        return None;
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).ok()?;
        let d = BigInt::from_str(d.trim()).ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int}{frac}");
    let mut value = BigRational::from_integer(BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?);
    let shift = exponent - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if shift.unsigned_abs() > 10_000 {
        return None;
    }
    for _ in 0..shift.unsigned_abs() {
        if shift > 0 {
            value *= &ten;
        } else {
            value /= &ten;
        }
    }
    Some(if neg { -value } else { value })
}

/// Which algebraic form of the power condition to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Min,
    Max,
    EqualExponents,
    QuadraticEqualExponents,
}

impl Form {
    pub fn formula(self) -> &'static str {
        match self {
            Form::Min => "min{Q−p−(p−1)q/b, Q−q−(q−1)p/a} ≤ Q(p−1)(q−1)/(ab)",
            Form::Max => "max{abp+aq(p−1), abq+bp(q−1)} ≥ Q(ab−(p−1)(q−1))",
            Form::EqualExponents => "max{a+p−1, b+p−1} ≥ (Q−p)/(p(p−1))·(ab−(p−1)²)",
            Form::QuadraticEqualExponents => "max{a+1, b+1} ≥ (Q−2)/2·(ab−1)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// f = f(v) continuous and positive on [0,∞): no weak solutions at all.
    PositiveSource,
    PowerCondition,
    /// The same condition for weakly coercive divergence-form operators.
    PowerConditionGeneralOperators,
    /// An exponent is at least Q: nonnegative supersolutions are constant.
    Parabolic,
    /// Shift by the forced infimum, then apply the positive-source route.
    TranslationThenPositiveSource,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    NoWeakSolutions,
    /// No weak solutions with ess inf u = ess inf v = 0.
    NoWeakSolutionsWithZeroInfima,
    NoNonconstantWeakSolutions,
    /// Components whose exponent is ≥ Q are constant.
    ConstantComponents,
    ConditionFails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionInputs {
    #[serde(rename = "Q")]
    pub hom_dim: f64,
    pub p: f64,
    pub q: f64,
    pub a: f64,
    pub b: f64,
    pub exact: bool,
    /// true when p, q label general coercive operators (p₁, p₂)
    pub general_operators: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiouvilleVerdict {
    pub inputs: ConditionInputs,
    pub form: Form,
    pub formula: String,
    /// The two arguments of the min (or max) on the left.
    pub lhs_terms: Option<[f64; 2]>,
    pub rhs: Option<f64>,
    /// Positive when the condition holds, in the form's own units.
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_terms: Option<ExactTerms>,
    /// None when the parabolic gate fires and the condition is not evaluated.
    pub condition_holds: Option<bool>,
    pub boundary: bool,
    pub route: Route,
    pub conclusion: Conclusion,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactTerms {
    pub lhs_terms: [String; 2],
    pub rhs: String,
    pub margin: String,
}

/// Field operations shared by the exact and floating evaluations.
pub trait ConditionScalar: Num + Clone + PartialOrd + fmt::Display {
    fn from_u32(n: u32) -> Self;
}

impl ConditionScalar for f64 {
    fn from_u32(n: u32) -> Self {
        n as f64
    }
}

impl ConditionScalar for BigRational {
    fn from_u32(n: u32) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

fn min_of<T: PartialOrd + Clone>(a: &T, b: &T) -> T {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

fn max_of<T: PartialOrd + Clone>(a: &T, b: &T) -> T {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Terms, right-hand side and signed margin (≥ 0 iff the condition holds).
pub fn form_terms<T: ConditionScalar>(form: Form, hom_dim: &T, p: &T, q: &T, a: &T, b: &T) -> ([T; 2], T, T) {
    let one = T::one();
    let two = T::from_u32(2);
    let (qd, p, q, a, b) = (hom_dim.clone(), p.clone(), q.clone(), a.clone(), b.clone());
    let pm = p.clone() - one.clone();
    let qm = q.clone() - one.clone();
    let ab = a.clone() * b.clone();
    match form {
        Form::Min => {
            let t1 = qd.clone() - p.clone() - pm.clone() * q.clone() / b.clone();
            let t2 = qd.clone() - q.clone() - qm.clone() * p.clone() / a.clone();
            let rhs = qd * pm * qm / ab;
            let margin = rhs.clone() - min_of(&t1, &t2);
            ([t1, t2], rhs, margin)
        }
        Form::Max => {
            let t1 = ab.clone() * p.clone() + a * q.clone() * pm.clone();
            let t2 = ab.clone() * q + b * p * qm.clone();
            let rhs = qd * (ab - pm * qm);
            let margin = max_of(&t1, &t2) - rhs.clone();
            ([t1, t2], rhs, margin)
        }
        Form::EqualExponents => {
            let t1 = a + pm.clone();
            let t2 = b + pm.clone();
            let rhs = (qd - p.clone()) / (p * pm.clone()) * (ab - pm.clone() * pm);
            let margin = max_of(&t1, &t2) - rhs.clone();
            ([t1, t2], rhs, margin)
        }
        Form::QuadraticEqualExponents => {
            let t1 = a + one.clone();
            let t2 = b + one.clone();
            let rhs = (qd - two.clone()) / two * (ab - one);
            let margin = max_of(&t1, &t2) - rhs.clone();
            ([t1, t2], rhs, margin)
        }
    }
}

fn check_inputs(hom_dim: f64, p: f64, q: f64, a: f64, b: f64) -> Result<()> {
    for (name, v) in [("Q", hom_dim), ("a", a), ("b", b)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Precondition(format!("{name} must be positive and finite, got {v}")));
        }
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(v > 1.0) || !v.is_finite() {
            return Err(Error::Precondition(format!("{name} must exceed 1, got {v}")));
        }
    }
    Ok(())
}

/// All five inputs of the power condition.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleInputs {
    pub hom_dim: Number,
    pub p: Number,
    pub q: Number,
    pub a: Number,
    pub b: Number,
    pub general_operators: bool,
}

impl LiouvilleInputs {
    pub fn floats(hom_dim: f64, p: f64, q: f64, a: f64, b: f64) -> Self {
        LiouvilleInputs {
            hom_dim: hom_dim.into(),
            p: p.into(),
            q: q.into(),
            a: a.into(),
            b: b.into(),
            general_operators: false,
        }
    }

    pub fn parse(hom_dim: &str, p: &str, q: &str, a: &str, b: &str) -> Result<Self> {
        Ok(LiouvilleInputs {
            hom_dim: Number::parse(hom_dim)?,
            p: Number::parse(p)?,
            q: Number::parse(q)?,
            a: Number::parse(a)?,
            b: Number::parse(b)?,
            general_operators: false,
        })
    }

    pub fn with_general_operators(mut self, general: bool) -> Self {
        self.general_operators = general;
        self
    }

    fn all(&self) -> [&Number; 5] {
        [&self.hom_dim, &self.p, &self.q, &self.a, &self.b]
    }

    fn exact(&self) -> Option<[BigRational; 5]> {
        let v: Vec<BigRational> = self
            .all()
            .iter()
            .filter_map(|n| match n {
                Number::Exact(r) => Some(r.clone()),
                Number::Float(_) => None,
            })
            .collect();
        v.try_into().ok()
    }

    fn summary(&self) -> ConditionInputs {
        let f = self.all().map(|n| n.to_f64());
        ConditionInputs {
            hom_dim: f[0],
            p: f[1],
            q: f[2],
            a: f[3],
            b: f[4],
            exact: self.exact().is_some(),
            general_operators: self.general_operators,
        }
    }
}

/// Evaluates one form of the power condition, with the parabolic gate first.
pub fn evaluate_condition(inputs: &LiouvilleInputs, form: Form) -> Result<LiouvilleVerdict> {
    let s = inputs.summary();
    check_inputs(s.hom_dim, s.p, s.q, s.a, s.b)?;
    let exact = inputs.exact();
    let same = |x: &Number, y: &Number| match (x, y) {
        (Number::Exact(r), Number::Exact(t)) => r == t,
        _ => x.to_f64() == y.to_f64(),
    };
    match form {
        Form::EqualExponents if !same(&inputs.p, &inputs.q) => {
            return Err(Error::Precondition(format!("the p = q form needs p = q, got p = {}, q = {}", inputs.p, inputs.q)));
        }
        Form::QuadraticEqualExponents if !(s.p == 2.0 && s.q == 2.0) || !same(&inputs.p, &inputs.q) => {
            return Err(Error::Precondition(format!("the p = q = 2 form needs p = q = 2, got p = {}, q = {}", inputs.p, inputs.q)));
        }
        _ => {}
    }
    let power_route = if inputs.general_operators {
        Route::PowerConditionGeneralOperators
    } else {
        Route::PowerCondition
    };

    let parabolic = match &exact {
        Some([qd, p, q, _, _]) => *qd <= max_of(p, q),
        None => s.hom_dim <= s.p.max(s.q),
    };
    if parabolic {
        return Ok(LiouvilleVerdict {
            inputs: s.clone(),
            form,
            formula: form.formula().into(),
            lhs_terms: None,
            rhs: None,
            margin: None,
            exact_terms: None,
            condition_holds: None,
            boundary: false,
            route: Route::Parabolic,
            conclusion: Conclusion::ConstantComponents,
            notes: vec![format!(
                "max(p, q) = {} ≥ Q = {}: every nonnegative supersolution with that exponent is constant, so the power condition is not evaluated",
                s.p.max(s.q),
                s.hom_dim
            )],
        });
    }

    let (terms, rhs, margin, holds, boundary, exact_terms) = match exact {
        Some([qd, p, q, a, b]) => {
            let (t, r, m) = form_terms(form, &qd, &p, &q, &a, &b);
            let holds = !m.is_negative();
            let et = ExactTerms {
                lhs_terms: [t[0].to_string(), t[1].to_string()],
                rhs: r.to_string(),
                margin: m.to_string(),
            };
            (
                [ratio_to_f64(&t[0]), ratio_to_f64(&t[1])],
                ratio_to_f64(&r),
                ratio_to_f64(&m),
                holds,
                m.is_zero(),
                Some(et),
            )
        }
        None => {
            let (t, r, m) = form_terms(form, &s.hom_dim, &s.p, &s.q, &s.a, &s.b);
            (t, r, m, m >= 0.0, m.abs() < BOUNDARY_BAND, None)
        }
    };
    let mut notes = Vec::new();
    if boundary {
        notes.push(if exact_terms.is_some() {
            "exact equality: the condition holds with zero margin".to_string()
        } else {
            format!("|margin| < {BOUNDARY_BAND:e}: floating verdict is at the boundary")
        });
    }
    let ab = s.a * s.b;
    if ab <= (s.p - 1.0) * (s.q - 1.0) {
        notes.push("ab ≤ (p−1)(q−1): the condition holds for every Q".into());
    }
    Ok(LiouvilleVerdict {
        inputs: s,
        form,
        formula: form.formula().into(),
        lhs_terms: Some(terms),
        rhs: Some(rhs),
        margin: Some(margin),
        exact_terms,
        condition_holds: Some(holds),
        boundary,
        route: power_route,
        conclusion: if holds {
            Conclusion::NoWeakSolutionsWithZeroInfima
        } else {
            Conclusion::ConditionFails
        },
        notes,
    })
}

/// Min-form on floats.
pub fn hyp_condition(hom_dim: f64, p: f64, q: f64, a: f64, b: f64) -> Result<LiouvilleVerdict> {
    evaluate_condition(&LiouvilleInputs::floats(hom_dim, p, q, a, b), Form::Min)
}

/// Max-form on floats.
pub fn hyp2_condition(hom_dim: f64, p: f64, q: f64, a: f64, b: f64) -> Result<LiouvilleVerdict> {
    evaluate_condition(&LiouvilleInputs::floats(hom_dim, p, q, a, b), Form::Max)
}

pub fn equal_exponent_condition(hom_dim: f64, p: f64, a: f64, b: f64) -> Result<LiouvilleVerdict> {
    evaluate_condition(&LiouvilleInputs::floats(hom_dim, p, p, a, b), Form::EqualExponents)
}

pub fn quadratic_condition(hom_dim: f64, a: f64, b: f64) -> Result<LiouvilleVerdict> {
    evaluate_condition(&LiouvilleInputs::floats(hom_dim, 2.0, 2.0, a, b), Form::QuadraticEqualExponents)
}

/// Plain boolean for sweeps; None under the parabolic gate.
pub fn condition_holds(hom_dim: f64, p: f64, q: f64, a: f64, b: f64) -> Result<Option<bool>> {
    Ok(hyp_condition(hom_dim, p, q, a, b)?.condition_holds)
}

// ---------------------------------------------------------------------------
// classification over declared shapes

/// A zero z of a source with liminf h(z + t)/t^exponent > 0 as t → 0⁺.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zero {
    pub at: f64,
    pub exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZeroSet {
    /// strictly positive on [0,∞)
    None,
    Isolated { zeros: Vec<Zero> },
    /// zeros at offset + k·period (k ∈ ℤ) in [0,∞), all with the same exponent
    Lattice { offset: f64, period: f64, exponent: Option<f64> },
    Unknown,
}

/// Lower bound g ≥ coefficient·own^own_power, optionally times a positive
/// continuous function of the partner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowerBound {
    pub own_power: f64,
    pub coefficient: f64,
    #[serde(default)]
    pub times_positive_partner_function: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceShape {
    /// h(partner) only (f = f(v) on the u line, g = g(u) on the v line).
    Partner {
        #[serde(default = "yes")]
        continuous: bool,
        zeros: ZeroSet,
    },
    /// Carathéodory in (x, u, v).
    General {
        #[serde(default)]
        positive: bool,
        #[serde(default)]
        lower_bound: Option<LowerBound>,
    },
}

fn yes() -> bool {
    true
}

impl SourceShape {
    /// t ↦ t^a: positive on (0,∞) with a zero of order a at 0 when a > 0,
    /// positive everywhere (possibly unbounded at 0) when a ≤ 0.
    pub fn power(a: f64) -> Self {
        SourceShape::Partner {
            continuous: true,
            zeros: if a > 0.0 {
                ZeroSet::Isolated { zeros: vec![Zero { at: 0.0, exponent: Some(a) }] }
            } else {
                ZeroSet::None
            },
        }
    }

    pub fn positive_partner() -> Self {
        SourceShape::Partner { continuous: true, zeros: ZeroSet::None }
    }

    pub fn general_positive() -> Self {
        SourceShape::General { positive: true, lower_bound: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    /// p- and q-sub-Laplacians
    #[default]
    SubLaplacian,
    /// weakly coercive fluxes 𝒜(x, ξ) not depending on the unknown
    CoerciveIndependentOfValue,
    /// weakly coercive fluxes 𝒜(x, t, ξ)
    Coercive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDescription {
    #[serde(rename = "Q")]
    pub hom_dim: f64,
    pub p: f64,
    pub q: f64,
    /// source of the u line
    pub f: SourceShape,
    /// source of the v line
    pub g: SourceShape,
    #[serde(default)]
    pub operators: OperatorFamily,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: Option<bool>,
    pub detail: String,
}

fn hyp(name: &str, holds: Option<bool>, detail: impl Into<String>) -> Hypothesis {
    Hypothesis {
        name: name.into(),
        holds,
        detail: detail.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub route: Option<Route>,
    pub conclusion: Conclusion,
    pub hypotheses: Vec<Hypothesis>,
    pub conditions: Vec<LiouvilleVerdict>,
    pub missing: Vec<String>,
    pub notes: Vec<String>,
}

impl Classification {
    fn inconclusive(hypotheses: Vec<Hypothesis>, missing: Vec<String>) -> Self {
        Classification {
            route: None,
            conclusion: Conclusion::Inconclusive,
            hypotheses,
            conditions: Vec::new(),
            missing,
            notes: Vec::new(),
        }
    }

    pub fn is_definitive_nonexistence(&self) -> bool {
        matches!(
            self.conclusion,
            Conclusion::NoWeakSolutions | Conclusion::NoWeakSolutionsWithZeroInfima | Conclusion::NoNonconstantWeakSolutions
        )
    }
}

/// Zeros in [0,∞) with their exponents; None if the set cannot be enumerated
/// (lattice zeros collapse to one representative, since all share an exponent).
fn zero_list(z: &ZeroSet) -> Option<Vec<Zero>> {
    match z {
        ZeroSet::None => Some(Vec::new()),
        ZeroSet::Isolated { zeros } => Some(zeros.clone()),
        ZeroSet::Lattice { offset, period, exponent } => {
            if !(*period > 0.0) {
                return None;
            }
            let first = offset - (offset / period).floor() * period;
            Some(vec![Zero { at: first, exponent: *exponent }])
        }
        ZeroSet::Unknown => None,
    }
}

/// Picks the strongest applicable conclusion for the declared shapes.
///
/// Rules, in order: the parabolic gate; a partner-only source with no zero on
/// [0,∞) (either line); a partner-only source with a single isolated zero
/// z > 0 whose partner line has a source bounded below by c·own^e (e > 0);
/// two partner-only sources with known vanishing orders at every zero, where
/// the power condition is tested for each pair of zeros after translating the
/// infima to 0. Anything else is inconclusive with the missing hypotheses.
pub fn classify_system(d: &SystemDescription) -> Result<Classification> {
    if !(d.hom_dim > 0.0) || !(d.p > 1.0) || !(d.q > 1.0) {
        return Err(Error::Precondition(format!(
            "need Q > 0 and p, q > 1, got Q = {}, p = {}, q = {}",
            d.hom_dim, d.p, d.q
        )));
    }
    let general = d.operators != OperatorFamily::SubLaplacian;
    let mut hs = vec![hyp(
        "exponents_below_homogeneous_dimension",
        Some(d.hom_dim > d.p.max(d.q)),
        format!("Q = {} against max(p, q) = {}", d.hom_dim, d.p.max(d.q)),
    )];
    if d.hom_dim <= d.p.max(d.q) {
        return Ok(Classification {
            route: Some(Route::Parabolic),
            conclusion: Conclusion::ConstantComponents,
            hypotheses: hs,
            conditions: Vec::new(),
            missing: Vec::new(),
            notes: vec!["a component whose exponent is ≥ Q is a nonnegative supersolution, hence constant".into()],
        });
    }

    // positive partner-only source on either line
    for (shape, line, partner) in [(&d.f, "f", "v"), (&d.g, "g", "u")] {
        if let SourceShape::Partner { continuous, zeros: ZeroSet::None } = shape {
            hs.push(hyp(
                &format!("{line}_depends_only_on_{partner}"),
                Some(true),
                format!("{line} = {line}({partner})"),
            ));
            hs.push(hyp(&format!("{line}_continuous"), Some(*continuous), ""));
            hs.push(hyp(&format!("{line}_positive_on_closed_half_line"), Some(true), format!("{line} > 0 on [0,∞)")));
            if *continuous {
                return Ok(Classification {
                    route: Some(Route::PositiveSource),
                    conclusion: Conclusion::NoWeakSolutions,
                    hypotheses: hs,
                    conditions: Vec::new(),
                    missing: Vec::new(),
                    notes: vec!["no assumption is needed on the other source".into()],
                });
            }
        }
    }

    // a single positive zero forces the infimum; the other line then has a
    // source bounded below by a positive function of the partner
    for (shape, other, line, partner) in [(&d.f, &d.g, "f", "v"), (&d.g, &d.f, "g", "u")] {
        let (SourceShape::Partner { continuous: true, zeros: ZeroSet::Isolated { zeros } }, SourceShape::General { lower_bound: Some(lb), .. }) = (shape, other) else {
            continue;
        };
        if zeros.len() != 1 || !(zeros[0].at > 0.0) {
            continue;
        }
        let z = zeros[0].at;
        if d.operators == OperatorFamily::Coercive {
            hs.push(hyp(
                "operators_independent_of_value",
                Some(false),
                "the infimum-is-a-zero step needs fluxes 𝒜(x, ξ)",
            ));
            continue;
        }
        let ok = lb.own_power > 0.0 && lb.coefficient > 0.0;
        hs.push(hyp(
            &format!("ess_inf_{partner}_is_zero_of_{line}"),
            Some(true),
            format!("the only zero of {line} is {partner} = {z}"),
        ));
        hs.push(hyp(
            "translated_source_positive",
            Some(ok),
            format!(
                "other source ≥ {}·{partner}^{}{} ≥ {} > 0 once {partner} ≥ {z}",
                lb.coefficient,
                lb.own_power,
                if lb.times_positive_partner_function { "·h(partner)" } else { "" },
                lb.coefficient * z.powf(lb.own_power)
            ),
        ));
        if ok {
            return Ok(Classification {
                route: Some(Route::TranslationThenPositiveSource),
                conclusion: Conclusion::NoWeakSolutions,
                hypotheses: hs,
                conditions: Vec::new(),
                missing: Vec::new(),
                notes: vec![format!(
                    "{partner}₁ = {partner} − {z} solves a system whose {} source is positive and continuous",
                    if line == "f" { "second" } else { "first" }
                )],
            });
        }
    }

    // both partner-only: translate the infima to zeros and test the power condition
    if let (SourceShape::Partner { continuous: cf, zeros: zf }, SourceShape::Partner { continuous: cg, zeros: zg }) = (&d.f, &d.g) {
        let mut missing = Vec::new();
        if !cf {
            missing.push("continuity of f".to_string());
        }
        if !cg {
            missing.push("continuity of g".to_string());
        }
        let lf = zero_list(zf);
        let lg = zero_list(zg);
        if lf.is_none() {
            missing.push("zero set of f".into());
        }
        if lg.is_none() {
            missing.push("zero set of g".into());
        }
        if d.operators == OperatorFamily::Coercive && (zf_has_positive(zf) || zf_has_positive(zg)) {
            missing.push("fluxes independent of the unknown (needed to locate the infima at zeros)".into());
        }
        if let (Some(lf), Some(lg)) = (&lf, &lg) {
            for (l, name) in [(lf, "f"), (lg, "g")] {
                for z in l.iter() {
                    match z.exponent {
                        Some(e) if e > 0.0 => {}
                        _ => missing.push(format!("positive vanishing order of {name} at {}", z.at)),
                    }
                }
            }
        }
        hs.push(hyp("sources_depend_only_on_partner", Some(true), "f = f(v), g = g(u)"));
        if !missing.is_empty() {
            return Ok(Classification::inconclusive(hs, missing));
        }
        let (lf, lg) = (lf.unwrap(), lg.unwrap());
        hs.push(hyp(
            "infima_are_zeros",
            Some(true),
            format!(
                "ess inf v ∈ {:?}, ess inf u ∈ {:?}",
                lf.iter().map(|z| z.at).collect::<Vec<_>>(),
                lg.iter().map(|z| z.at).collect::<Vec<_>>()
            ),
        ));
        let mut conditions = Vec::new();
        let mut all_hold = true;
        for zf in &lf {
            for zg in &lg {
                let inputs = LiouvilleInputs::floats(d.hom_dim, d.p, d.q, zf.exponent.unwrap(), zg.exponent.unwrap())
                    .with_general_operators(general);
                let v = evaluate_condition(&inputs, Form::Min)?;
                all_hold &= v.condition_holds == Some(true);
                conditions.push(v);
            }
        }
        let translated = lf.iter().any(|z| z.at != 0.0) || lg.iter().any(|z| z.at != 0.0);
        let mut notes = vec!["after translating the infima to 0, liminf f(t)/t^a > 0 and liminf g(t)/t^b > 0 hold with the declared orders".to_string()];
        if translated {
            notes.push("translation is allowed because the operators do not depend on the unknown".into());
        }
        let route = if general {
            Route::PowerConditionGeneralOperators
        } else {
            Route::PowerCondition
        };
        return Ok(Classification {
            route: Some(route),
            conclusion: if all_hold {
                Conclusion::NoNonconstantWeakSolutions
            } else {
                Conclusion::ConditionFails
            },
            hypotheses: hs,
            conditions,
            missing: Vec::new(),
            notes,
        });
    }

    let mut missing = Vec::new();
    match (&d.f, &d.g) {
        (SourceShape::General { .. }, SourceShape::General { .. }) => {
            missing.push("f = f(v) or g = g(u) (a source depending only on the partner)".into());
        }
        _ => {
            missing.push("a partner-only source without zeros, a single positive zero with a positive lower bound on the other line, or two partner-only sources with known vanishing orders".into());
        }
    }
    Ok(Classification::inconclusive(hs, missing))
}

fn zf_has_positive(z: &ZeroSet) -> bool {
    match z {
        ZeroSet::Isolated { zeros } => zeros.iter().any(|z| z.at > 0.0),
        ZeroSet::Lattice { .. } | ZeroSet::Unknown => true,
        ZeroSet::None => false,
    }
}

/// The "f(t) = v^a, g = h(u)(1−cos u)" family in ℝ³ with p = q = 2.
pub fn cosine_example(a: f64) -> SystemDescription {
    SystemDescription {
        hom_dim: 3.0,
        p: 2.0,
        q: 2.0,
        f: SourceShape::power(a),
        g: SourceShape::Partner {
            continuous: true,
            zeros: ZeroSet::Lattice {
                offset: 0.0,
                period: 2.0 * std::f64::consts::PI,
                exponent: Some(2.0),
            },
        },
        operators: OperatorFamily::SubLaplacian,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_exact_literals() {
        assert_eq!(rat("3"), BigRational::from_integer(3.into()));
        assert_eq!(rat("0.25"), BigRational::new(1.into(), 4.into()));
        assert_eq!(rat("-7/3"), BigRational::new((-7).into(), 3.into()));
        assert_eq!(rat("1e-3"), BigRational::new(1.into(), 1000.into()));
        assert_eq!(rat("2.5E2"), BigRational::from_integer(250.into()));
        assert_eq!(rat(".5"), BigRational::new(1.into(), 2.into()));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
        assert_eq!(Number::parse("inf").unwrap(), Number::Float(f64::INFINITY));
    }

    #[test]
    fn worked_case_q3() {
        // min{3−2−1, 3−2−2} = −1 ≤ 3/2
        let v = hyp_condition(3.0, 2.0, 2.0, 1.0, 2.0).unwrap();
        assert_eq!(v.lhs_terms, Some([0.0, -1.0]));
        assert_eq!(v.rhs, Some(1.5));
        assert_eq!(v.condition_holds, Some(true));
        assert_eq!(hyp2_condition(3.0, 2.0, 2.0, 1.0, 2.0).unwrap().condition_holds, Some(true));
    }

    #[test]
    fn q10_fails() {
        for f in [Form::Min, Form::Max, Form::EqualExponents, Form::QuadraticEqualExponents] {
            let v = evaluate_condition(&LiouvilleInputs::floats(10.0, 2.0, 2.0, 5.0, 5.0), f).unwrap();
            assert_eq!(v.condition_holds, Some(false), "{f:?}");
            assert_eq!(v.conclusion, Conclusion::ConditionFails);
        }
        let v = quadratic_condition(10.0, 5.0, 5.0).unwrap();
        assert_eq!(v.lhs_terms, Some([6.0, 6.0]));
        assert_eq!(v.rhs, Some(96.0));
    }

    #[test]
    fn exact_boundary() {
        // p = q = 2, Q = 4: max{a+1, b+1} ≥ ab − 1; a = b = 3 gives 4 ≥ 8, a = 1, b = 3: 4 ≥ 2
        // exact equality at a = b with a + 1 = a² − 1, irrational; use Q = 6: 2(ab−1) = a+1 at a=b=3/2
        let i = LiouvilleInputs::parse("6", "2", "2", "3/2", "1.5").unwrap();
        for f in [Form::Min, Form::Max, Form::EqualExponents, Form::QuadraticEqualExponents] {
            let v = evaluate_condition(&i, f).unwrap();
            assert!(v.boundary, "{f:?}");
            assert_eq!(v.condition_holds, Some(true));
            assert_eq!(v.exact_terms.as_ref().unwrap().margin, "0");
        }
    }

    #[test]
    fn parabolic_gate() {
        let v = hyp_condition(3.0, 3.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(v.condition_holds, None);
        assert_eq!(v.route, Route::Parabolic);
        assert!(v.lhs_terms.is_none());
        let v = evaluate_condition(&LiouvilleInputs::parse("2", "5/2", "2", "1", "1").unwrap(), Form::Max).unwrap();
        assert_eq!(v.route, Route::Parabolic);
    }

    #[test]
    fn bad_inputs() {
        assert!(hyp_condition(3.0, 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(hyp_condition(3.0, 2.0, 2.0, 0.0, 1.0).is_err());
        assert!(equal_exponent_condition(3.0, 2.0, 1.0, 1.0).is_ok());
        assert!(evaluate_condition(&LiouvilleInputs::floats(5.0, 2.0, 3.0, 1.0, 1.0), Form::EqualExponents).is_err());
        assert!(evaluate_condition(&LiouvilleInputs::floats(5.0, 3.0, 3.0, 1.0, 1.0), Form::QuadraticEqualExponents).is_err());
    }

    #[test]
    fn classifier_routes() {
        let c = classify_system(&cosine_example(1.0)).unwrap();
        assert_eq!(c.route, Some(Route::PowerCondition));
        assert_eq!(c.conclusion, Conclusion::NoNonconstantWeakSolutions);
        let c = classify_system(&cosine_example(-0.5)).unwrap();
        assert_eq!(c.route, Some(Route::PositiveSource));

        let shifted = SystemDescription {
            hom_dim: 3.0,
            p: 2.0,
            q: 2.0,
            f: SourceShape::Partner {
                continuous: true,
                zeros: ZeroSet::Isolated { zeros: vec![Zero { at: 1.0, exponent: Some(2.0) }] },
            },
            g: SourceShape::General {
                positive: false,
                lower_bound: Some(LowerBound { own_power: 3.0, coefficient: 1.0, times_positive_partner_function: false }),
            },
            operators: OperatorFamily::SubLaplacian,
        };
        let c = classify_system(&shifted).unwrap();
        assert_eq!(c.route, Some(Route::TranslationThenPositiveSource));
        assert_eq!(c.conclusion, Conclusion::NoWeakSolutions);

        let unknown = SystemDescription {
            f: SourceShape::Partner { continuous: true, zeros: ZeroSet::Unknown },
            g: SourceShape::power(2.0),
            ..shifted.clone()
        };
        let c = classify_system(&unknown).unwrap();
        assert_eq!(c.conclusion, Conclusion::Inconclusive);
        assert!(c.missing.iter().any(|m| m.contains("zero set of f")));

        let both_general = SystemDescription {
            f: SourceShape::general_positive(),
            g: SourceShape::general_positive(),
            ..shifted
        };
        assert_eq!(classify_system(&both_general).unwrap().conclusion, Conclusion::Inconclusive);
    }

    #[test]
    fn powers_in_high_dimension_fail() {
        let d = SystemDescription {
            hom_dim: 10.0,
            p: 2.0,
            q: 2.0,
            f: SourceShape::power(5.0),
            g: SourceShape::power(5.0),
            operators: OperatorFamily::SubLaplacian,
        };
        let c = classify_system(&d).unwrap();
        assert_eq!(c.conclusion, Conclusion::ConditionFails);
        assert_eq!(c.conditions.len(), 1);
    }
}
