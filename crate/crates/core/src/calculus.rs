//! Horizontal gradients, divergences and quasilinear operators by finite differences.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::carnot::CarnotGroup;
use crate::error::{finite, Error, Result};

pub type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
/// Flux signature (x, t, ξ) ↦ 𝒜(x, t, ξ) ∈ ℝ^l.
pub type FluxFn = dyn Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync;

/// A real function on the group with an optional closed-form horizontal gradient.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    eval: Arc<EvalFn>,
    gradient: Option<Arc<GradFn>>,
    smoothness: u32,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("closed_form_gradient", &self.gradient.is_some())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            name: name.into(),
            eval: Arc::new(eval),
            gradient: None,
            smoothness: 2,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c).with_gradient_fn(Arc::new(|x: &[f64]| vec![0.0; x.len()]))
    }

    /// Attach ∇_L u in closed form; the closure returns the l horizontal components.
    pub fn with_gradient(self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.with_gradient_fn(Arc::new(g))
    }

    fn with_gradient_fn(mut self, g: Arc<GradFn>) -> Self {
        self.gradient = Some(g);
        self
    }

    pub fn with_smoothness(mut self, k: u32) -> Self {
        self.smoothness = k;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn has_closed_form_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// Checked evaluation: NaN or ±∞ is an error carrying the point.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        finite((self.eval)(x), &self.name, x)
    }

    pub fn value_unchecked(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn closed_form_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }
}

/// Central-difference scheme (order 2).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdScheme {
    pub step: f64,
    /// Floor for |∇_L u| in the flux when p < 2; `None` selects 1e−12·(1+|∇_L u|).
    #[serde(default)]
    pub eps_grad: Option<f64>,
}

impl FdScheme {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
        }
        Ok(FdScheme { step, eps_grad: None })
    }

    /// h₀ = 1e−4, for first derivatives.
    pub fn gradient() -> Self {
        FdScheme { step: 1e-4, eps_grad: None }
    }

    /// h₀ = 1e−3, for nested second-order evaluations.
    pub fn nested() -> Self {
        FdScheme { step: 1e-3, eps_grad: None }
    }

    pub fn with_floor(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(Error::Config(format!("gradient floor must be nonnegative, got {eps}")));
        }
        self.eps_grad = Some(eps);
        Ok(self)
    }

    fn floor(&self, grad_norm: f64) -> f64 {
        self.eps_grad.unwrap_or(1e-12 * (1.0 + grad_norm))
    }
}

impl Default for FdScheme {
    fn default() -> Self {
        Self::nested()
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Central-difference ambient gradient of u at x.
pub fn ambient_gradient_fd(u: &ScalarField, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        y[j] = x[j] + h;
        let up = u.value(&y)?;
        y[j] = x[j] - h;
        let dn = u.value(&y)?;
        y[j] = x[j];
        out.push((up - dn) / (2.0 * h));
    }
    Ok(out)
}

/// μ(x)·(central-difference ambient gradient); always the FD path.
pub fn horizontal_gradient_fd(g: &CarnotGroup, u: &ScalarField, x: &[f64], scheme: &FdScheme) -> Result<Vec<f64>> {
    let amb = ambient_gradient_fd(u, x, scheme.step)?;
    Ok(g.frame(x).apply(&amb))
}

/// ∇_L u(x): the closed form when available, otherwise finite differences.
pub fn horizontal_gradient(g: &CarnotGroup, u: &ScalarField, x: &[f64], scheme: &FdScheme) -> Result<Vec<f64>> {
    match u.closed_form_gradient(x) {
        Some(grad) => {
            for c in &grad {
                finite(*c, &format!("closed-form gradient of {}", u.name()), x)?;
            }
            Ok(grad)
        }
        None => horizontal_gradient_fd(g, u, x, scheme),
    }
}

/// A horizontal divergence together with Σ_j |∂_j V_j|, the natural magnitude
/// against which the value is compared.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Divergence {
    pub value: f64,
    pub scale: f64,
}

/// div_L(h)(x) = div(μᵀh)(x), with `field` returning h at a point.
pub fn horizontal_divergence<F>(g: &CarnotGroup, field: F, x: &[f64], step: f64) -> Result<Divergence>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut y = x.to_vec();
    let mut value = 0.0;
    let mut scale = 0.0;
    for j in 0..x.len() {
        y[j] = x[j] + step;
        let up = g.frame(&y).apply_transpose(&field(&y)?)[j];
        y[j] = x[j] - step;
        let dn = g.frame(&y).apply_transpose(&field(&y)?)[j];
        y[j] = x[j];
        let d = (up - dn) / (2.0 * step);
        value += d;
        scale += d.abs();
    }
    Ok(Divergence {
        value: finite(value, "horizontal divergence", x)?,
        scale,
    })
}

fn power_flux(xi: &[f64], p: f64, floor: f64) -> Vec<f64> {
    let n = norm2(xi);
    if p == 2.0 {
        return xi.to_vec();
    }
    let n = n.max(floor);
    if n == 0.0 {
        return vec![0.0; xi.len()];
    }
    let w = n.powf(p - 2.0);
    xi.iter().map(|c| c * w).collect()
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Precondition(format!("operator exponent must exceed 1, got {p}")));
    }
    Ok(())
}

/// Δ_{G,p}u(x) = div_L(|∇_L u|^{p−2}∇_L u) together with its divergence scale.
pub fn p_sublaplacian_with_scale(
    g: &CarnotGroup,
    u: &ScalarField,
    x: &[f64],
    p: f64,
    scheme: &FdScheme,
) -> Result<Divergence> {
    check_exponent(p)?;
    let floor = if p < 2.0 {
        let g0 = horizontal_gradient(g, u, x, scheme)?;
        let n0 = norm2(&g0);
        let eps = scheme.floor(n0);
        if n0 <= eps {
            return Err(Error::DegenerateGradient { point: x.to_vec(), norm: n0 });
        }
        eps
    } else {
        0.0
    };
    horizontal_divergence(
        g,
        |y| {
            let grad = horizontal_gradient(g, u, y, scheme)?;
            Ok(power_flux(&grad, p, floor))
        },
        x,
        scheme.step,
    )
}

pub fn p_sublaplacian(g: &CarnotGroup, u: &ScalarField, x: &[f64], p: f64, scheme: &FdScheme) -> Result<f64> {
    p_sublaplacian_with_scale(g, u, x, p, scheme).map(|d| d.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoercivityClass {
    /// 𝒜·ξ ≥ h|ξ|^p ≥ k|𝒜|^{p′}
    #[serde(rename = "S-p-C")]
    Strong,
    /// 𝒜·ξ ≥ k|𝒜|^{p′}
    #[serde(rename = "W-p-C")]
    Weak,
}

/// A divergence-form operator −div_L 𝒜(x, u, ∇_L u).
#[derive(Clone)]
pub struct OperatorSpec {
    pub name: String,
    pub p: f64,
    pub flux: Arc<FluxFn>,
    pub class: CoercivityClass,
    pub h: f64,
    pub k: f64,
    /// Whether the flux reads its t argument; reported, never assumed.
    pub depends_on_t: bool,
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorSpec")
            .field("name", &self.name)
            .field("p", &self.p)
            .field("class", &self.class)
            .field("h", &self.h)
            .field("k", &self.k)
            .field("depends_on_t", &self.depends_on_t)
            .finish()
    }
}

impl OperatorSpec {
    pub fn new(
        name: impl Into<String>,
        p: f64,
        class: CoercivityClass,
        h: f64,
        k: f64,
        flux: impl Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        check_exponent(p)?;
        if !(h > 0.0) || !(k > 0.0) {
            return Err(Error::Config(format!("coercivity constants must be positive, got h={h}, k={k}")));
        }
        Ok(OperatorSpec {
            name: name.into(),
            p,
            flux: Arc::new(flux),
            class,
            h,
            k,
            depends_on_t: false,
        })
    }

    /// 𝒜 = |ξ|^{p−2}ξ, strongly coercive with h = k = 1.
    pub fn p_laplacian(p: f64) -> Result<Self> {
        Self::scaled_p_laplacian(p, 1.0)
    }

    /// 𝒜 = c|ξ|^{p−2}ξ: S-p-C with h = c, k = c^{1−p′}.
    pub fn scaled_p_laplacian(p: f64, c: f64) -> Result<Self> {
        check_exponent(p)?;
        let pp = p / (p - 1.0);
        Self::new(
            format!("power(p={p}, c={c})"),
            p,
            CoercivityClass::Strong,
            c,
            c.powf(1.0 - pp),
            move |_, _, xi| power_flux(xi, p, 0.0).into_iter().map(|v| c * v).collect(),
        )
    }

    pub fn with_t_dependence(mut self, depends: bool) -> Self {
        self.depends_on_t = depends;
        self
    }

    pub fn eval(&self, x: &[f64], t: f64, xi: &[f64]) -> Vec<f64> {
        (self.flux)(x, t, xi)
    }
}

/// div_L 𝒜(x, u(x), ∇_L u(x)) by nested central differences.
pub fn apply_operator_with_scale(
    g: &CarnotGroup,
    op: &OperatorSpec,
    u: &ScalarField,
    x: &[f64],
    scheme: &FdScheme,
) -> Result<Divergence> {
    if op.p < 2.0 {
        let g0 = horizontal_gradient(g, u, x, scheme)?;
        let n0 = norm2(&g0);
        if n0 <= scheme.floor(n0) {
            return Err(Error::DegenerateGradient { point: x.to_vec(), norm: n0 });
        }
    }
    horizontal_divergence(
        g,
        |y| {
            let grad = horizontal_gradient(g, u, y, scheme)?;
            let t = u.value(y)?;
            let f = op.eval(y, t, &grad);
            for c in &f {
                finite(*c, &format!("flux {}", op.name), y)?;
            }
            Ok(f)
        },
        x,
        scheme.step,
    )
}

pub fn apply_operator(g: &CarnotGroup, op: &OperatorSpec, u: &ScalarField, x: &[f64], scheme: &FdScheme) -> Result<f64> {
    apply_operator_with_scale(g, op, u, x, scheme).map(|d| d.value)
}

/// Worst sampled margins of the coercivity chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub operator: String,
    pub declared: CoercivityClass,
    pub samples: usize,
    /// min of (𝒜·ξ − h|ξ|^p)/(𝒜·ξ + h|ξ|^p)
    pub strong_lower_margin: f64,
    /// min of (h|ξ|^p − k|𝒜|^{p′})/(h|ξ|^p + k|𝒜|^{p′})
    pub strong_upper_margin: f64,
    /// min of (𝒜·ξ − k|𝒜|^{p′})/(𝒜·ξ + k|𝒜|^{p′})
    pub weak_margin: f64,
    pub strong_holds: bool,
    pub weak_holds: bool,
    pub classification: Option<CoercivityClass>,
}

const COERCIVITY_TOL: f64 = -1e-12;

fn relative(a: f64, b: f64) -> f64 {
    let d = a.abs() + b.abs();
    if d == 0.0 {
        0.0
    } else {
        (a - b) / d
    }
}

/// Sample (x, t, ξ) in [−2, 2]^N × [0, 4] × [−2, 2]^l and record the worst
/// relative margins of both inequality chains.
pub fn coercivity_check(op: &OperatorSpec, ambient_dim: usize, horizontal_dim: usize, samples: usize, seed: u64) -> Result<CoercivityReport> {
    if samples == 0 {
        return Err(Error::Precondition("coercivity check needs at least one sample".into()));
    }
    let pp = op.p / (op.p - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut up, mut weak) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for _ in 0..samples {
        let x: Vec<f64> = (0..ambient_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = rng.gen_range(0.0..4.0);
        let xi: Vec<f64> = (0..horizontal_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = op.eval(&x, t, &xi);
        let dot: f64 = a.iter().zip(&xi).map(|(p, q)| p * q).sum();
        let hxi = op.h * norm2(&xi).powf(op.p);
        let ka = op.k * norm2(&a).powf(pp);
        lo = lo.min(relative(dot, hxi));
        up = up.min(relative(hxi, ka));
        weak = weak.min(relative(dot, ka));
    }
    let strong_holds = lo >= COERCIVITY_TOL && up >= COERCIVITY_TOL;
    let weak_holds = weak >= COERCIVITY_TOL;
    Ok(CoercivityReport {
        operator: op.name.clone(),
        declared: op.class,
        samples,
        strong_lower_margin: lo,
        strong_upper_margin: up,
        weak_margin: weak,
        strong_holds,
        weak_holds,
        classification: if strong_holds {
            Some(CoercivityClass::Strong)
        } else if weak_holds {
            Some(CoercivityClass::Weak)
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carnot::{euclidean_group, heisenberg_group};
    use crate::norm::gauge_norm;

    fn sq_norm() -> ScalarField {
        ScalarField::new("|x|^2", |x| x.iter().map(|c| c * c).sum())
    }

    #[test]
    fn gradient_of_quadratic() {
        let e = euclidean_group(3).unwrap();
        let g = horizontal_gradient(&e, &sq_norm(), &[1.0, 0.0, 0.0], &FdScheme::gradient()).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-9 && g[1].abs() < 1e-12 && g[2].abs() < 1e-12);
    }

    #[test]
    fn heisenberg_gradient_of_t() {
        let h = heisenberg_group(1).unwrap();
        let u = ScalarField::new("t", |x| x[2]);
        let x = [0.7, -1.3, 0.2];
        let g = horizontal_gradient(&h, &u, &x, &FdScheme::gradient()).unwrap();
        assert!((g[0] - 2.0 * x[1]).abs() < 1e-9);
        assert!((g[1] + 2.0 * x[0]).abs() < 1e-9);
    }

    #[test]
    fn gauge_gradient_modulus_at_unit_point() {
        let h = heisenberg_group(1).unwrap();
        let s = gauge_norm(&h);
        let sf = ScalarField::new("S", move |x| s.evaluate(x));
        let g = horizontal_gradient_fd(&h, &sf, &[1.0, 0.0, 0.0], &FdScheme::gradient()).unwrap();
        assert!((norm2(&g) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn laplacian_of_quadratic() {
        for n in [1, 3, 5] {
            let e = euclidean_group(n).unwrap();
            let x = vec![0.3; n];
            let l = p_sublaplacian(&e, &sq_norm(), &x, 2.0, &FdScheme::nested()).unwrap();
            assert!((l - 2.0 * n as f64).abs() < 1e-6, "{l}");
        }
    }

    #[test]
    fn euclidean_fundamental_solutions() {
        let n = 3;
        let e = euclidean_group(n).unwrap();
        for p in [1.5, 2.0, 2.5] {
            let k = (p - n as f64) / (p - 1.0);
            let u = ScalarField::new("fund", move |x| x.iter().map(|c| c * c).sum::<f64>().sqrt().powf(k));
            let x = [0.6, -0.5, 0.7];
            let d = p_sublaplacian_with_scale(&e, &u, &x, p, &FdScheme::nested()).unwrap();
            assert!(d.value.abs() < 1e-4 * d.scale, "p={p}: {d:?}");
        }
    }

    #[test]
    fn gauge_fundamental_solution_on_h1() {
        let h = heisenberg_group(1).unwrap();
        let s = gauge_norm(&h);
        let u = ScalarField::new("S^-2", move |x| s.evaluate(x).powi(-2));
        let d = p_sublaplacian_with_scale(&h, &u, &[1.0, 0.0, 0.0], 2.0, &FdScheme::nested()).unwrap();
        assert!(d.value.abs() <= 1e-3 * d.scale, "{d:?}");
    }

    #[test]
    fn degenerate_gradient_rejected_below_two() {
        let e = euclidean_group(2).unwrap();
        let u = ScalarField::constant(1.0);
        let err = p_sublaplacian(&e, &u, &[0.1, 0.2], 1.5, &FdScheme::nested()).unwrap_err();
        assert!(matches!(err, Error::DegenerateGradient { .. }));
        // p ≥ 2 is fine
        assert_eq!(p_sublaplacian(&e, &u, &[0.1, 0.2], 3.0, &FdScheme::nested()).unwrap(), 0.0);
    }

    #[test]
    fn nan_is_reported_with_point() {
        let e = euclidean_group(1).unwrap();
        let u = ScalarField::new("bad", |x| if x[0] > 0.5 { f64::NAN } else { x[0] });
        match horizontal_gradient(&e, &u, &[0.5], &FdScheme::gradient()) {
            Err(Error::Evaluation { point, .. }) => assert!(point[0] > 0.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn operator_power_flux_matches_p_sublaplacian() {
        let h = heisenberg_group(1).unwrap();
        let u = ScalarField::new("u", |x| (1.0 + x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2]).powf(-0.3));
        let scheme = FdScheme::nested();
        for p in [1.7, 2.0, 3.0] {
            let op = OperatorSpec::p_laplacian(p).unwrap();
            let x = [0.4, -0.3, 0.25];
            let a = apply_operator(&h, &op, &u, &x, &scheme).unwrap();
            let b = p_sublaplacian(&h, &u, &x, p, &scheme).unwrap();
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-300), "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn coercivity_classes() {
        let op = OperatorSpec::p_laplacian(3.0).unwrap();
        let r = coercivity_check(&op, 3, 2, 500, 1).unwrap();
        assert!(r.strong_holds && r.strong_lower_margin.abs() < 1e-12);
        assert_eq!(r.classification, Some(CoercivityClass::Strong));

        let zero = OperatorSpec::new("zero", 2.0, CoercivityClass::Weak, 1.0, 1.0, |_, _, xi| vec![0.0; xi.len()]).unwrap();
        let r = coercivity_check(&zero, 3, 2, 500, 1).unwrap();
        assert!(r.weak_holds && !r.strong_holds);

        let twice = OperatorSpec::scaled_p_laplacian(2.5, 2.0).unwrap();
        let pp = 2.5 / 1.5;
        assert!((twice.k - 2f64.powf(1.0 - pp)).abs() < 1e-15);
        let r = coercivity_check(&twice, 3, 2, 500, 2).unwrap();
        assert!(r.strong_holds, "{r:?}");
    }
}
