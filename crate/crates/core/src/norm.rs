//! Homogeneous norms, gauge balls and annuli.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::carnot::CarnotGroup;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// |x| on ℝ^N.
    Euclidean,
    /// ((Σ x_i² + y_i²)² + t²)^{1/4} on ℍⁿ.
    HeisenbergGauge,
    /// (Σ_i |ξ^{(i)}|^{2r!/i})^{1/(2r!)} on a step-r group.
    Factorial,
}

/// How `grad_sup_bound` was obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum BoundSource {
    Exact,
    Sampled { samples: usize, raw_max: f64, inflation: f64 },
}

/// A homogeneous norm S with a bound on |∇_L S|.
///
/// All built-in norms are of the layered form S^m = Σ_i (|ξ^{(i)}|²)^{e_i}
/// with m = 2·r! and e_i = r!/i, which is exactly the factorial-exponent
/// formula; on ℍⁿ it is the quartic gauge and for r = 1 the Euclidean norm.
#[derive(Clone, Debug)]
pub struct HomogeneousNorm {
    kind: NormKind,
    layer_dims: Vec<usize>,
    exponents: Vec<i32>,
    m: f64,
    grad_sup: f64,
    source: BoundSource,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NormSummary {
    pub kind: NormKind,
    pub grad_sup_bound: f64,
    pub bound_source: BoundSource,
}

fn factorial(n: usize) -> i32 {
    (1..=n as i32).product()
}

/// The canonical norm of `g`: Euclidean on ℝ^N, the quartic gauge on ℍⁿ and
/// the factorial-exponent norm on plugin groups.
pub fn gauge_norm(g: &CarnotGroup) -> HomogeneousNorm {
    let kind = if g.is_euclidean() {
        NormKind::Euclidean
    } else if g.is_heisenberg() {
        NormKind::HeisenbergGauge
    } else {
        NormKind::Factorial
    };
    HomogeneousNorm::layered(g, kind)
}

/// The factorial-exponent norm on any group.
pub fn factorial_norm(g: &CarnotGroup) -> HomogeneousNorm {
    HomogeneousNorm::layered(g, NormKind::Factorial)
}

impl HomogeneousNorm {
    fn layered(g: &CarnotGroup, kind: NormKind) -> Self {
        let r = g.step();
        let rf = factorial(r);
        let exponents = (1..=r as i32).map(|i| rf / i).collect();
        let mut norm = HomogeneousNorm {
            kind,
            layer_dims: g.layer_dims().to_vec(),
            exponents,
            m: 2.0 * rf as f64,
            grad_sup: 1.0,
            source: BoundSource::Exact,
        };
        // |∇_L S| = 1 on ℝ^N and |∇_H S| = |z|/S ≤ 1 on ℍⁿ. Other groups get a
        // sampled bound.
        if !(g.is_euclidean() || g.is_heisenberg()) {
            let samples = 20_000;
            let raw = norm.sample_grad_sup(g, samples, 0x5eed_0001);
            let inflation = 1.1;
            norm.grad_sup = raw * inflation;
            norm.source = BoundSource::Sampled {
                samples,
                raw_max: raw,
                inflation,
            };
        }
        norm
    }

    fn sample_grad_sup(&self, g: &CarnotGroup, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = self.box_half_widths(1.0);
        let mut best: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let y: Vec<f64> = widths.iter().map(|w| w * (2.0 * rng.gen::<f64>() - 1.0)).collect();
            let s = self.evaluate(&y);
            if s <= 1e-8 {
                continue;
            }
            // degree-0 homogeneity: the sup is attained on the unit sphere
            let x = g.dilate_unchecked(1.0 / s, &y);
            let h = self.horizontal_gradient(g, &x);
            best = best.max(h.iter().map(|c| c * c).sum::<f64>().sqrt());
            taken += 1;
        }
        best
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn grad_sup_bound(&self) -> f64 {
        self.grad_sup
    }

    pub fn bound_source(&self) -> &BoundSource {
        &self.source
    }

    pub fn summary(&self) -> NormSummary {
        NormSummary {
            kind: self.kind,
            grad_sup_bound: self.grad_sup,
            bound_source: self.source.clone(),
        }
    }

    fn layer_squares(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layer_dims.len());
        let mut offset = 0;
        for &d in &self.layer_dims {
            out.push(x[offset..offset + d].iter().map(|c| c * c).sum());
            offset += d;
        }
        out
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        if self.kind == NormKind::Euclidean || self.layer_dims.len() == 1 {
            return x.iter().map(|c| c * c).sum::<f64>().sqrt();
        }
        let sq = self.layer_squares(x);
        let p: f64 = sq
            .iter()
            .zip(&self.exponents)
            .map(|(s, &e)| s.powi(e))
            .sum();
        p.powf(1.0 / self.m)
    }

    /// Ambient gradient ∂S/∂ξ_j = ξ_j |ξ^{(i)}|^{2(e_i−1)} / (i·S^{m−1}); zero at the origin.
    pub fn ambient_gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = self.evaluate(x);
        if s == 0.0 {
            return vec![0.0; x.len()];
        }
        if self.layer_dims.len() == 1 {
            return x.iter().map(|c| c / s).collect();
        }
        let sq = self.layer_squares(x);
        let denom = s.powf(self.m - 1.0);
        let mut out = Vec::with_capacity(x.len());
        for (i, (&d, &e)) in self.layer_dims.iter().zip(&self.exponents).enumerate() {
            let w = sq[i].powi(e - 1) / ((i + 1) as f64 * denom);
            let offset = out.len();
            out.extend(x[offset..offset + d].iter().map(|c| c * w));
        }
        out
    }

    /// Closed-form ∇_L S = μ(ξ)·∇S.
    pub fn horizontal_gradient(&self, g: &CarnotGroup, x: &[f64]) -> Vec<f64> {
        g.frame(x).apply(&self.ambient_gradient(x))
    }

    /// Half-widths of the Euclidean box containing B_R: layer i is bounded by R^i.
    pub fn box_half_widths(&self, r: f64) -> Vec<f64> {
        self.layer_dims
            .iter()
            .enumerate()
            .flat_map(|(i, &d)| std::iter::repeat(r.powi(i as i32 + 1)).take(d))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// B_R = {S < R}
    Ball,
    /// A_R = B_{2R} \ closure(B_R)
    Annulus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub radius: f64,
}

impl Region {
    fn checked(kind: RegionKind, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Precondition(format!("region radius must be positive, got {radius}")));
        }
        Ok(Region { kind, radius })
    }

    pub fn ball(radius: f64) -> Result<Self> {
        Self::checked(RegionKind::Ball, radius)
    }

    pub fn annulus(radius: f64) -> Result<Self> {
        Self::checked(RegionKind::Annulus, radius)
    }

    /// Membership in terms of the norm value s = S(ξ).
    pub fn contains_norm(&self, s: f64) -> bool {
        match self.kind {
            RegionKind::Ball => s < self.radius,
            RegionKind::Annulus => s > self.radius && s < 2.0 * self.radius,
        }
    }

    /// Radius of the smallest ball containing the region.
    pub fn outer_radius(&self) -> f64 {
        match self.kind {
            RegionKind::Ball => self.radius,
            RegionKind::Annulus => 2.0 * self.radius,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            RegionKind::Ball => format!("B_{}", self.radius),
            RegionKind::Annulus => format!("A_{}", self.radius),
        }
    }
}
