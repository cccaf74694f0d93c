//! Explicit supersolution pairs for −Δ_{G,p} u ≥ v^a, −Δ_{G,q} v ≥ u^b when
//! the power condition fails.
//!
//! Profiles are u = λ^{α₀}C_u(1 + (λS)^{p′})^{−s}, v = λ^{β₀}C_v(1 + (λS)^{q′})^{−t},
//! seeded at the scaling exponents
//!
//!   α₀ = (p(q−1) + qa)/(ab − (p−1)(q−1)),  β₀ = (q(p−1) + pb)/(ab − (p−1)(q−1)),
//!
//! with s₀ = α₀/p′ and t₀ = β₀/q′, so that u ~ S^{−α₀} and v ~ S^{−β₀} at
//! infinity. Candidates are scored on a small cloud and the best few are
//! certified pointwise on a larger independent cloud with full finite
//! differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{p_sublaplacian_with_scale, FdScheme, ScalarField};
use crate::carnot::CarnotGroup;
use crate::error::{Error, Result};
use crate::estimates::{check_weak_solution, default_battery, EstimateReport, Source, SystemInstance, Verdict};
use crate::liouville::{hyp_condition, LiouvilleVerdict};
use crate::norm::HomogeneousNorm;
use crate::quadrature::{derive_seed, QuadratureBudget};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialAnsatz {
    pub p: f64,
    pub q: f64,
    pub c_u: f64,
    pub c_v: f64,
    pub s: f64,
    pub t: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    /// amplitude exponents used by `rescale`
    pub alpha0: f64,
    pub beta0: f64,
}

fn one() -> f64 {
    1.0
}

/// (α₀, β₀); None when ab ≤ (p−1)(q−1).
pub fn scaling_exponents(p: f64, q: f64, a: f64, b: f64) -> Option<(f64, f64)> {
    let d = a * b - (p - 1.0) * (q - 1.0);
    if !(d > 0.0) {
        return None;
    }
    Some(((p * (q - 1.0) + q * a) / d, (q * (p - 1.0) + p * b) / d))
}

fn profile(scale: f64, c: f64, lambda: f64, e: f64, s: f64, norm: f64) -> f64 {
    scale * c * (1.0 + (lambda * norm).powf(e)).powf(-s)
}

fn profile_derivative(scale: f64, c: f64, lambda: f64, e: f64, s: f64, norm: f64) -> f64 {
    if norm == 0.0 {
        return 0.0;
    }
    let ls = (lambda * norm).powf(e);
    -scale * c * s * (1.0 + ls).powf(-s - 1.0) * e * ls / norm
}

impl RadialAnsatz {
    pub fn new(p: f64, q: f64, a: f64, b: f64, s: f64, t: f64, c_u: f64, c_v: f64) -> Result<Self> {
        let (alpha0, beta0) = scaling_exponents(p, q, a, b).ok_or_else(|| {
            Error::Precondition(format!("ab = {} ≤ (p−1)(q−1) = {}: no scaling exponents", a * b, (p - 1.0) * (q - 1.0)))
        })?;
        for (name, x) in [("s", s), ("t", t), ("C_u", c_u), ("C_v", c_v)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Precondition(format!("ansatz parameter {name} must be positive, got {x}")));
            }
        }
        Ok(RadialAnsatz {
            p,
            q,
            c_u,
            c_v,
            s,
            t,
            lambda: 1.0,
            alpha0,
            beta0,
        })
    }

    /// (λ^{α₀}u(δ_λ x), λ^{β₀}v(δ_λ x)): preserves supersolutions exactly,
    /// since α₀(p−1) + p = aβ₀ and β₀(q−1) + q = bα₀.
    pub fn rescale(&self, lambda: f64) -> Self {
        RadialAnsatz {
            lambda: self.lambda * lambda,
            ..self.clone()
        }
    }

    fn amplitude(&self) -> (f64, f64) {
        (self.lambda.powf(self.alpha0), self.lambda.powf(self.beta0))
    }

    fn exps(&self) -> (f64, f64) {
        (self.p / (self.p - 1.0), self.q / (self.q - 1.0))
    }

    pub fn u_at_norm(&self, s_val: f64) -> f64 {
        profile(self.amplitude().0, self.c_u, self.lambda, self.exps().0, self.s, s_val)
    }

    pub fn v_at_norm(&self, s_val: f64) -> f64 {
        profile(self.amplitude().1, self.c_v, self.lambda, self.exps().1, self.t, s_val)
    }

    fn field(&self, g: &CarnotGroup, norm: &HomogeneousNorm, line_u: bool) -> ScalarField {
        let (amp, c, e, s) = if line_u {
            (self.amplitude().0, self.c_u, self.exps().0, self.s)
        } else {
            (self.amplitude().1, self.c_v, self.exps().1, self.t)
        };
        let lambda = self.lambda;
        let (n1, n2, g2) = (norm.clone(), norm.clone(), g.clone());
        let name = format!("{}·(1+({lambda}S)^{e})^(-{s})", amp * c);
        ScalarField::new(name, move |x| profile(amp, c, lambda, e, s, n1.evaluate(x)))
            .with_gradient(move |x| {
                let d = profile_derivative(amp, c, lambda, e, s, n2.evaluate(x));
                if d == 0.0 {
                    return vec![0.0; g2.horizontal_dim()];
                }
                n2.horizontal_gradient(&g2, x).into_iter().map(|c| d * c).collect()
            })
            .with_smoothness(2)
    }

    pub fn u_field(&self, g: &CarnotGroup, norm: &HomogeneousNorm) -> ScalarField {
        self.field(g, norm, true)
    }

    pub fn v_field(&self, g: &CarnotGroup, norm: &HomogeneousNorm) -> ScalarField {
        self.field(g, norm, false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    #[serde(default = "d_coarse")]
    pub coarse_points: usize,
    #[serde(default = "d_certify")]
    pub certify_points: usize,
    #[serde(default = "d_top")]
    pub certify_top: usize,
    #[serde(default = "d_tol")]
    pub tolerance: f64,
    /// C grid 2^{−k}, k = 0..=max_halvings
    #[serde(default = "d_halvings")]
    pub max_halvings: u32,
    /// radii of the ρ = S(x) range sampled, log-uniform
    #[serde(default = "d_rho")]
    pub rho_range: [f64; 2],
    /// samples per weak-form integral (0 skips the weak-form check)
    #[serde(default = "d_weak")]
    pub weak_form_samples: usize,
    #[serde(default = "d_weak_radii")]
    pub weak_form_radii: Vec<f64>,
}

fn d_coarse() -> usize {
    256
}
fn d_certify() -> usize {
    10_000
}
fn d_top() -> usize {
    5
}
fn d_tol() -> f64 {
    1e-6
}
fn d_halvings() -> u32 {
    12
}
fn d_rho() -> [f64; 2] {
    [1e-2, 1e2]
}
fn d_weak() -> usize {
    20_000
}
fn d_weak_radii() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

impl Default for SearchSettings {
    fn default() -> Self {
        SearchSettings {
            coarse_points: d_coarse(),
            certify_points: d_certify(),
            certify_top: d_top(),
            tolerance: d_tol(),
            max_halvings: d_halvings(),
            rho_range: d_rho(),
            weak_form_samples: d_weak(),
            weak_form_radii: d_weak_radii(),
        }
    }
}

/// Points δ_ρ(ω) with ω Gaussian-direction normalised to S(ω) = 1 and ρ
/// log-uniform in the range.
pub fn residual_points(g: &CarnotGroup, norm: &HomogeneousNorm, n: usize, rho: [f64; 2], seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(rho[0] > 0.0 && rho[1] >= rho[0]) {
        return Err(Error::Config(format!("invalid radius range {rho:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lr = Uniform::new_inclusive(rho[0].ln(), rho[1].ln());
    let dim = g.ambient_dim();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = norm.evaluate(&z);
        let r: f64 = lr.sample(&mut rng).exp();
        if s > 0.0 && s.is_finite() {
            out.push(g.dilate_unchecked(r / s, &z));
        }
    }
    Ok(out)
}

/// Values at one point with unit amplitudes.
struct Sample {
    lap: [f64; 2],
    val: [f64; 2],
}

fn residual_scale(lap: f64, source: f64) -> f64 {
    lap.abs().max(source.abs())
}

/// min over points of r/scale on both lines for given amplitudes, reusing
/// the unit-amplitude operators via −Δ_p(Cu) = C^{p−1}(−Δ_p u).
fn score(samples: &[Sample], p: f64, q: f64, a: f64, b: f64, cu: f64, cv: f64) -> f64 {
    let (ku, kv) = (cu.powf(p - 1.0), cv.powf(q - 1.0));
    let (su, sv) = (cv.powf(a), cu.powf(b));
    let mut worst = f64::INFINITY;
    for smp in samples {
        for (lap, src) in [(ku * smp.lap[0], su * smp.val[1].powf(a)), (kv * smp.lap[1], sv * smp.val[0].powf(b))] {
            let sc = residual_scale(lap, src);
            let rel = if sc == 0.0 { 0.0 } else { (lap - src) / sc };
            worst = worst.min(rel);
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub ansatz: RadialAnsatz,
    pub points: usize,
    pub seed: u64,
    /// min over points of (−Δ_{G,p}u − v^a)/scale, and the v analogue
    pub min_relative_residual: [f64; 2],
    pub worst_point_norm: [f64; 2],
    pub tolerance: f64,
    pub pointwise_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_form: Option<EstimateReport>,
    pub certified: bool,
}

/// Pointwise residuals on an independent cloud plus a weak-form spot check.
pub fn certify(
    ansatz: &RadialAnsatz,
    g: &CarnotGroup,
    norm: &HomogeneousNorm,
    a: f64,
    b: f64,
    settings: &SearchSettings,
    seed: u64,
) -> Result<Certificate> {
    let u = ansatz.u_field(g, norm);
    let v = ansatz.v_field(g, norm);
    let pts = residual_points(g, norm, settings.certify_points, settings.rho_range, seed)?;
    let scheme = FdScheme::nested();
    let rows: Vec<[(f64, f64); 2]> = pts
        .par_iter()
        .map(|x| -> Result<[(f64, f64); 2]> {
            let s = norm.evaluate(x);
            let lu = -p_sublaplacian_with_scale(g, &u, x, ansatz.p, &scheme)?.value;
            let lv = -p_sublaplacian_with_scale(g, &v, x, ansatz.q, &scheme)?.value;
            let fu = v.value(x)?.powf(a);
            let gv = u.value(x)?.powf(b);
            let rel = |lap: f64, src: f64| {
                let sc = residual_scale(lap, src);
                if sc == 0.0 {
                    0.0
                } else {
                    (lap - src) / sc
                }
            };
            Ok([(rel(lu, fu), s), (rel(lv, gv), s)])
        })
        .collect::<Result<_>>()?;
    let mut min = [f64::INFINITY; 2];
    let mut at = [f64::NAN; 2];
    for row in &rows {
        for k in 0..2 {
            if row[k].0 < min[k] || row[k].0.is_nan() {
                min[k] = row[k].0;
                at[k] = row[k].1;
            }
        }
    }
    let pointwise_ok = min.iter().all(|m| *m >= -settings.tolerance);
    let weak_form = if settings.weak_form_samples > 0 && pointwise_ok {
        let inst = SystemInstance::new(g.clone(), norm.clone(), ansatz.p, ansatz.q, u, v)?
            .with_sources(Source::partner_power(1.0, a), Source::partner_power(1.0, b))
            .with_budget(QuadratureBudget::new(settings.weak_form_samples, derive_seed(seed, 0x5eed)))
            .with_radii(settings.weak_form_radii.clone());
        Some(check_weak_solution(&inst, &default_battery(&inst, &settings.weak_form_radii)?)?)
    } else {
        None
    };
    let certified = pointwise_ok && weak_form.as_ref().is_none_or(|w| w.verdict == Verdict::Pass);
    Ok(Certificate {
        ansatz: ansatz.clone(),
        points: pts.len(),
        seed,
        min_relative_residual: min,
        worst_point_norm: at,
        tolerance: settings.tolerance,
        pointwise_ok,
        weak_form,
        certified,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchReport {
    pub found: bool,
    pub liouville: LiouvilleVerdict,
    pub alpha0: f64,
    pub beta0: f64,
    pub s0: f64,
    pub t0: f64,
    pub candidates_scored: usize,
    pub certificate: Option<Certificate>,
    /// best candidates that failed certification, in score order
    pub rejected: Vec<Certificate>,
    pub seed: u64,
    pub notes: Vec<String>,
}

const SHAPE_FACTORS: [f64; 6] = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4];

/// Grid search over (s, t, C_u, C_v) near the scaling seeds.
pub fn search_counterexample(
    g: &CarnotGroup,
    norm: &HomogeneousNorm,
    p: f64,
    q: f64,
    a: f64,
    b: f64,
    settings: &SearchSettings,
    seed: u64,
) -> Result<SearchReport> {
    let q_dim = g.hom_dim() as f64;
    let verdict = hyp_condition(q_dim, p, q, a, b)?;
    match verdict.condition_holds {
        None => {
            return Err(Error::Precondition(format!(
                "max(p, q) ≥ Q = {q_dim}: nonnegative supersolutions are constant, no search"
            )))
        }
        Some(true) => {
            return Err(Error::Precondition(format!(
                "the power condition holds at (Q, p, q, a, b) = ({q_dim}, {p}, {q}, {a}, {b}); no solutions with zero infima exist"
            )))
        }
        Some(false) => {}
    }
    if settings.coarse_points == 0 || settings.certify_points == 0 || settings.certify_top == 0 {
        return Err(Error::Config("search needs positive point counts and certify_top".into()));
    }
    let (alpha0, beta0) = scaling_exponents(p, q, a, b).expect("condition fails only when ab > (p−1)(q−1)");
    let (pp, qq) = (p / (p - 1.0), q / (q - 1.0));
    let (s0, t0) = (alpha0 / pp, beta0 / qq);
    let pts = residual_points(g, norm, settings.coarse_points, settings.rho_range, derive_seed(seed, 1))?;
    let scheme = FdScheme::nested();

    let shapes: Vec<(f64, f64)> = SHAPE_FACTORS
        .iter()
        .flat_map(|e1| SHAPE_FACTORS.iter().map(move |e2| (s0 * (1.0 + e1), t0 * (1.0 + e2))))
        // u ~ S^{−p′s} must decay slower than the fundamental solution S^{−(Q−p)/(p−1)}
        .filter(|(s, t)| pp * s < (q_dim - p) / (p - 1.0) && qq * t < (q_dim - q) / (q - 1.0))
        .collect();
    let halvings: Vec<f64> = (0..=settings.max_halvings).map(|k| 2f64.powi(-(k as i32))).collect();

    let mut scored: Vec<(f64, RadialAnsatz)> = shapes
        .par_iter()
        .map(|&(s, t)| -> Result<Vec<(f64, RadialAnsatz)>> {
            let unit = RadialAnsatz::new(p, q, a, b, s, t, 1.0, 1.0)?;
            let (u, v) = (unit.u_field(g, norm), unit.v_field(g, norm));
            let samples: Vec<Sample> = pts
                .iter()
                .map(|x| -> Result<Sample> {
                    Ok(Sample {
                        lap: [
                            -p_sublaplacian_with_scale(g, &u, x, p, &scheme)?.value,
                            -p_sublaplacian_with_scale(g, &v, x, q, &scheme)?.value,
                        ],
                        val: [u.value(x)?, v.value(x)?],
                    })
                })
                .collect::<Result<_>>()?;
            let mut out = Vec::new();
            for &cu in &halvings {
                for &cv in &halvings {
                    let sc = score(&samples, p, q, a, b, cu, cv);
                    if sc.is_finite() {
                        out.push((sc, RadialAnsatz { c_u: cu, c_v: cv, ..unit.clone() }));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let candidates_scored = scored.len();
    // deterministic order: score, then parameters
    scored.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then(x.1.s.total_cmp(&y.1.s))
            .then(x.1.t.total_cmp(&y.1.t))
            .then(y.1.c_u.total_cmp(&x.1.c_u))
            .then(y.1.c_v.total_cmp(&x.1.c_v))
    });
    let mut rejected = Vec::new();
    let mut certificate = None;
    for (i, (_, cand)) in scored.iter().take(settings.certify_top).enumerate() {
        let cert = certify(cand, g, norm, a, b, settings, derive_seed(seed, 100 + i as u64))?;
        if cert.certified {
            certificate = Some(cert);
            break;
        }
        rejected.push(cert);
    }
    let mut notes = vec![format!(
        "profiles decay like S^(−{alpha0:.6}) and S^(−{beta0:.6}); residuals are relative to max(|−Δ term|, source)"
    )];
    if certificate.is_none() {
        notes.push("no candidate certified within the search budget; this is not evidence of nonexistence".into());
    }
    Ok(SearchReport {
        found: certificate.is_some(),
        liouville: verdict,
        alpha0,
        beta0,
        s0,
        t0,
        candidates_scored,
        certificate,
        rejected,
        seed,
        notes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    Nonexistence,
    Counterexample,
    Inconclusive,
}

/// At most one definitive claim per parameter tuple.
pub fn definitive_claim(verdict: &LiouvilleVerdict, search: Option<&SearchReport>) -> Result<Claim> {
    let found = search.is_some_and(|s| s.found);
    match (verdict.condition_holds, found) {
        (Some(true), true) => Err(Error::Precondition(
            "contradictory claims: the power condition holds and a counterexample was certified".into(),
        )),
        (Some(true), false) => Ok(Claim::Nonexistence),
        (_, true) => Ok(Claim::Counterexample),
        _ => Ok(Claim::Inconclusive),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carnot::euclidean_group;
    use crate::norm::gauge_norm;

    #[test]
    fn seeds_for_q10() {
        let (a0, b0) = scaling_exponents(2.0, 2.0, 5.0, 5.0).unwrap();
        assert!((a0 - 0.5).abs() < 1e-15 && (b0 - 0.5).abs() < 1e-15);
        assert!(scaling_exponents(2.0, 2.0, 1.0, 1.0).is_none());
    }

    #[test]
    fn closed_form_residual_in_r10() {
        // −Δ(1+r²)^{−s} = 2s(1+r²)^{−s−2}(N + (N−2−2s)r²)
        let e = euclidean_group(10).unwrap();
        let s = gauge_norm(&e);
        let an = RadialAnsatz::new(2.0, 2.0, 5.0, 5.0, 0.25, 0.25, 1.0, 1.0).unwrap();
        let u = an.u_field(&e, &s);
        for r in [0.05, 0.7, 3.0, 40.0] {
            let mut x = vec![0.0; 10];
            x[0] = r * 0.6;
            x[3] = r * 0.8;
            let lap = -p_sublaplacian_with_scale(&e, &u, &x, 2.0, &FdScheme::nested()).unwrap().value;
            let exact = 0.5 * (1.0 + r * r).powf(-2.25) * (10.0 + 7.5 * r * r);
            assert!((lap - exact).abs() <= 1e-5 * exact, "r = {r}: {lap} vs {exact}");
        }
    }

    #[test]
    fn rescaling_preserves_residual_sign() {
        let e = euclidean_group(10).unwrap();
        let s = gauge_norm(&e);
        let an = RadialAnsatz::new(2.0, 2.0, 5.0, 5.0, 0.25, 0.25, 1.0, 1.0).unwrap();
        let settings = SearchSettings {
            certify_points: 400,
            weak_form_samples: 0,
            ..SearchSettings::default()
        };
        for lambda in [0.5, 1.0, 3.0] {
            let c = certify(&an.rescale(lambda), &e, &s, 5.0, 5.0, &settings, 7).unwrap();
            assert!(c.pointwise_ok, "λ = {lambda}: {:?}", c.min_relative_residual);
        }
    }

    #[test]
    fn refuses_when_condition_holds() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let err = search_counterexample(&e, &s, 2.0, 2.0, 1.0, 2.0, &SearchSettings::default(), 0).unwrap_err();
        assert!(err.to_string().contains("holds"));
    }
}
