//! Monte-Carlo and tensor-grid quadrature over gauge balls and annuli.
//!
//! Points are drawn by rejection from the Euclidean box containing the region.
//! Chunk k of the proposal stream uses ChaCha8 stream k of the run seed, so the
//! accepted cloud depends only on (seed, samples, method) and never on thread
//! scheduling; reductions run sequentially in point order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::ScalarField;
use crate::carnot::CarnotGroup;
use crate::error::{Error, Result};
use crate::norm::{HomogeneousNorm, Region};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    MonteCarlo,
    TensorGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureBudget {
    /// Accepted points (Monte Carlo) or box grid points (tensor grid).
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    /// Euclidean radius masked around each singular point.
    #[serde(default)]
    pub exclusion_radius: f64,
    /// Singular points; empty with a positive radius means the origin.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub singular_points: Vec<Vec<f64>>,
}

impl QuadratureBudget {
    pub fn new(samples: usize, seed: u64) -> Self {
        QuadratureBudget {
            samples,
            seed,
            method: Method::MonteCarlo,
            exclusion_radius: 0.0,
            singular_points: Vec::new(),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_exclusion(mut self, radius: f64) -> Self {
        self.exclusion_radius = radius;
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut b = self.clone();
        b.seed = seed;
        b
    }

    pub fn with_samples(&self, samples: usize) -> Self {
        let mut b = self.clone();
        b.samples = samples;
        b
    }

    /// Budget for an independent sub-computation, tagged deterministically.
    pub fn derived(&self, tag: u64) -> Self {
        self.with_seed(derive_seed(self.seed, tag))
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("quadrature budget needs samples >= 1".into()));
        }
        if !(self.exclusion_radius >= 0.0) {
            return Err(Error::Config(format!(
                "exclusion radius must be nonnegative, got {}",
                self.exclusion_radius
            )));
        }
        Ok(())
    }

    fn masked(&self, x: &[f64]) -> bool {
        if self.exclusion_radius <= 0.0 {
            return false;
        }
        let r2 = self.exclusion_radius * self.exclusion_radius;
        let dist2 = |c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        if self.singular_points.is_empty() {
            x.iter().map(|a| a * a).sum::<f64>() < r2
        } else {
            self.singular_points.iter().any(|c| dist2(c) < r2)
        }
    }
}

/// splitmix64 finaliser applied to (base, tag).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples_used: usize,
}

/// Lower-bound side is impossible from point samples; this is an upper bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssInfEstimate {
    pub value: f64,
    pub sample_min: f64,
    pub starts: usize,
    pub direction: &'static str,
}

const CHUNK: usize = 4096;
const EMPTY_LIMIT: u64 = 1 << 22;

struct Chunk {
    /// (index within chunk, point, norm)
    accepted: Vec<(u32, Vec<f64>, f64)>,
    excluded: Vec<u32>,
}

fn draw_chunk(
    seed: u64,
    index: u64,
    widths: &[f64],
    norm: &HomogeneousNorm,
    region: &Region,
    budget: &QuadratureBudget,
) -> Chunk {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut accepted = Vec::new();
    let mut excluded = Vec::new();
    let mut x = vec![0.0; widths.len()];
    for i in 0..CHUNK as u32 {
        for (xj, w) in x.iter_mut().zip(widths) {
            *xj = w * (2.0 * rng.gen::<f64>() - 1.0);
        }
        let s = norm.evaluate(&x);
        if !region.contains_norm(s) {
            continue;
        }
        if budget.masked(&x) {
            excluded.push(i);
            continue;
        }
        accepted.push((i, x.clone(), s));
    }
    Chunk { accepted, excluded }
}

/// A fixed set of accepted points in a region, reusable for several integrands
/// and for sub-regions.
#[derive(Clone, Debug)]
pub struct SampleCloud {
    region: Region,
    dim: usize,
    points: Vec<f64>,
    norms: Vec<f64>,
    proposals: u64,
    excluded: u64,
    box_volume: f64,
    method: Method,
    coarse: Vec<bool>,
    cell_volume: f64,
    seed: u64,
}

impl SampleCloud {
    pub fn draw(_g: &CarnotGroup, norm: &HomogeneousNorm, region: Region, budget: &QuadratureBudget) -> Result<Self> {
        budget.validate()?;
        match budget.method {
            Method::MonteCarlo => Self::draw_monte_carlo(norm, region, budget),
            Method::TensorGrid => Self::draw_grid(norm, region, budget),
        }
    }

    fn draw_monte_carlo(norm: &HomogeneousNorm, region: Region, budget: &QuadratureBudget) -> Result<Self> {
        let widths = norm.box_half_widths(region.outer_radius());
        let dim = widths.len();
        let box_volume: f64 = widths.iter().map(|w| 2.0 * w).product();
        let target = budget.samples;
        let mut points = Vec::with_capacity(target * dim);
        let mut norms = Vec::with_capacity(target);
        let mut excluded = 0u64;
        let mut next_chunk = 0u64;
        let proposals;
        let mut rate_hint: f64 = 1.0;
        'outer: loop {
            let remaining = (target - norms.len()) as f64;
            let want = ((remaining / rate_hint.max(1e-6)) / CHUNK as f64 * 1.1).ceil() as u64;
            let batch = want.clamp(1, 256);
            let chunks: Vec<Chunk> = (next_chunk..next_chunk + batch)
                .into_par_iter()
                .map(|k| draw_chunk(budget.seed, k, &widths, norm, &region, budget))
                .collect();
            for (offset, chunk) in chunks.into_iter().enumerate() {
                let base = (next_chunk + offset as u64) * CHUNK as u64;
                let need = target - norms.len();
                if chunk.accepted.len() >= need {
                    let (last, _, _) = chunk.accepted[need - 1];
                    for (_, x, s) in chunk.accepted.into_iter().take(need) {
                        points.extend_from_slice(&x);
                        norms.push(s);
                    }
                    excluded += chunk.excluded.iter().filter(|&&i| i < last).count() as u64;
                    proposals = base + last as u64 + 1;
                    break 'outer;
                }
                for (_, x, s) in chunk.accepted {
                    points.extend_from_slice(&x);
                    norms.push(s);
                }
                excluded += chunk.excluded.len() as u64;
            }
            next_chunk += batch;
            let drawn = next_chunk * CHUNK as u64;
            if norms.is_empty() && drawn >= EMPTY_LIMIT {
                return Err(Error::EmptyRegion(format!(
                    "no admissible point in {} after {drawn} proposals",
                    region.label()
                )));
            }
            rate_hint = (norms.len() as f64 / drawn as f64).max(1.0 / drawn as f64);
        }
        Ok(SampleCloud {
            region,
            dim,
            points,
            norms,
            proposals,
            excluded,
            box_volume,
            method: Method::MonteCarlo,
            coarse: Vec::new(),
            cell_volume: 0.0,
            seed: budget.seed,
        })
    }

    fn draw_grid(norm: &HomogeneousNorm, region: Region, budget: &QuadratureBudget) -> Result<Self> {
        let widths = norm.box_half_widths(region.outer_radius());
        let dim = widths.len();
        let mut k = (budget.samples as f64).powf(1.0 / dim as f64).ceil() as usize;
        k = k.max(2);
        if k % 2 == 1 {
            k += 1;
        }
        let total = k.pow(dim as u32);
        let cell_volume: f64 = widths.iter().map(|w| 2.0 * w / k as f64).product();
        let mut points = Vec::new();
        let mut norms = Vec::new();
        let mut coarse = Vec::new();
        let mut excluded = 0u64;
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        for _ in 0..total {
            for j in 0..dim {
                x[j] = -widths[j] + (idx[j] as f64 + 0.5) * 2.0 * widths[j] / k as f64;
            }
            let s = norm.evaluate(&x);
            if region.contains_norm(s) {
                if budget.masked(&x) {
                    excluded += 1;
                } else {
                    points.extend_from_slice(&x);
                    norms.push(s);
                    coarse.push(idx.iter().all(|i| i % 2 == 0));
                }
            }
            for j in 0..dim {
                idx[j] += 1;
                if idx[j] < k {
                    break;
                }
                idx[j] = 0;
            }
        }
        if norms.is_empty() {
            return Err(Error::EmptyRegion(format!("no grid point in {}", region.label())));
        }
        Ok(SampleCloud {
            region,
            dim,
            points,
            norms,
            proposals: total as u64,
            excluded,
            box_volume: cell_volume * total as f64,
            method: Method::TensorGrid,
            coarse,
            cell_volume,
            seed: budget.seed,
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn proposals(&self) -> u64 {
        self.proposals
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn norm_value(&self, i: usize) -> f64 {
        self.norms[i]
    }

    /// Lebesgue measure of the sampled region (mask removed).
    pub fn measure(&self) -> IntegralEstimate {
        let n = self.proposals as f64;
        let m = self.len() as f64;
        match self.method {
            Method::MonteCarlo => {
                let frac = m / n;
                IntegralEstimate {
                    value: self.box_volume * frac,
                    std_error: self.box_volume * (frac * (1.0 - frac) / n).sqrt(),
                    samples_used: self.len(),
                }
            }
            Method::TensorGrid => {
                let coarse = self.coarse.iter().filter(|&&c| c).count() as f64;
                let fine = self.cell_volume * m;
                let crude = self.cell_volume * 2f64.powi(self.dim as i32) * coarse;
                IntegralEstimate {
                    value: fine,
                    std_error: (fine - crude).abs(),
                    samples_used: self.len(),
                }
            }
        }
    }

    /// Measure removed by the singularity mask.
    pub fn excluded_measure(&self) -> f64 {
        self.box_volume * self.excluded as f64 / self.proposals as f64
    }

    /// Indicator of a sub-region, evaluated on the cloud.
    pub fn mask(&self, sub: &Region) -> Vec<bool> {
        self.norms.iter().map(|&s| sub.contains_norm(s)).collect()
    }

    pub fn all(&self) -> Vec<bool> {
        vec![true; self.len()]
    }

    /// Values of a closure at every point, evaluated in parallel, in point order.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64], f64) -> Result<T> + Sync + Send,
    {
        (0..self.len())
            .into_par_iter()
            .map(|i| f(self.point(i), self.norms[i]))
            .collect()
    }

    pub fn evaluate(&self, w: &ScalarField) -> Result<Vec<f64>> {
        self.map(|x, _| w.value(x))
    }

    /// Mean of `values` over masked points with its standard error.
    pub fn average_where(&self, values: &[f64], mask: &[bool]) -> Result<IntegralEstimate> {
        // shifted sum: a constant integrand averages to itself exactly
        let Some(shift) = values.iter().zip(mask).find(|(_, &m)| m).map(|(v, _)| *v) else {
            return Err(Error::EmptyRegion("no sample falls in the requested sub-region".into()));
        };
        let mut count = 0usize;
        let mut sum = 0.0;
        for (v, &m) in values.iter().zip(mask) {
            if m {
                sum += v - shift;
                count += 1;
            }
        }
        let mean = shift + sum / count as f64;
        let se = match self.method {
            Method::MonteCarlo => {
                if count < 2 {
                    f64::INFINITY
                } else {
                    let mut ss = 0.0;
                    for (v, &m) in values.iter().zip(mask) {
                        if m {
                            ss += (v - mean) * (v - mean);
                        }
                    }
                    (ss / (count as f64 - 1.0) / count as f64).sqrt()
                }
            }
            Method::TensorGrid => {
                let mut csum = 0.0;
                let mut ccount = 0usize;
                for ((v, &m), &c) in values.iter().zip(mask).zip(&self.coarse) {
                    if m && c {
                        csum += v;
                        ccount += 1;
                    }
                }
                if ccount == 0 {
                    mean.abs()
                } else {
                    (mean - csum / ccount as f64).abs()
                }
            }
        };
        Ok(IntegralEstimate {
            value: mean,
            std_error: se,
            samples_used: count,
        })
    }

    pub fn average(&self, values: &[f64]) -> Result<IntegralEstimate> {
        self.average_where(values, &self.all())
    }

    /// Measure of the masked sub-region, estimated from the same proposals.
    pub fn measure_where(&self, mask: &[bool]) -> IntegralEstimate {
        let count = mask.iter().filter(|&&m| m).count();
        let whole = self.measure();
        let frac = count as f64 / self.len() as f64;
        match self.method {
            Method::MonteCarlo => {
                let n = self.proposals as f64;
                let pf = count as f64 / n;
                IntegralEstimate {
                    value: whole.value * frac,
                    std_error: self.box_volume * (pf * (1.0 - pf) / n).sqrt(),
                    samples_used: count,
                }
            }
            Method::TensorGrid => {
                let coarse = mask.iter().zip(&self.coarse).filter(|(&m, &c)| m && c).count() as f64;
                let fine = self.cell_volume * count as f64;
                let crude = self.cell_volume * 2f64.powi(self.dim as i32) * coarse;
                IntegralEstimate {
                    value: fine,
                    std_error: (fine - crude).abs(),
                    samples_used: count,
                }
            }
        }
    }

    /// ∫_{sub} w dx = |sub| · mean_{sub}(w), with both errors combined.
    pub fn integrate_where(&self, values: &[f64], mask: &[bool]) -> Result<IntegralEstimate> {
        let avg = self.average_where(values, mask)?;
        let meas = self.measure_where(mask);
        let value = meas.value * avg.value;
        let std_error = ((meas.value * avg.std_error).powi(2) + (avg.value * meas.std_error).powi(2)).sqrt();
        Ok(IntegralEstimate {
            value,
            std_error,
            samples_used: avg.samples_used,
        })
    }

    pub fn integrate(&self, values: &[f64]) -> Result<IntegralEstimate> {
        self.integrate_where(values, &self.all())
    }

    /// Fraction of masked points with value below ε.
    pub fn sublevel_fraction_where(&self, values: &[f64], mask: &[bool], eps: f64) -> f64 {
        let mut count = 0usize;
        let mut below = 0usize;
        for (v, &m) in values.iter().zip(mask) {
            if m {
                count += 1;
                if *v < eps {
                    below += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            below as f64 / count as f64
        }
    }

    /// Sample minimum over the masked points refined by Nelder–Mead from the
    /// ten best samples, constrained to `sub` and the singularity mask.
    #[allow(clippy::too_many_arguments)]
    pub fn ess_inf_where(
        &self,
        norm: &HomogeneousNorm,
        w: &ScalarField,
        values: &[f64],
        mask: &[bool],
        sub: &Region,
        budget: &QuadratureBudget,
    ) -> Result<EssInfEstimate> {
        let mut order: Vec<usize> = (0..self.len()).filter(|&i| mask[i]).collect();
        if order.is_empty() {
            return Err(Error::EmptyRegion(format!("no sample in {}", sub.label())));
        }
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sample_min = values[order[0]];
        let widths = norm.box_half_widths(sub.outer_radius());
        let starts: Vec<usize> = order.into_iter().take(10).collect();
        let objective = |x: &[f64]| -> f64 {
            if !sub.contains_norm(norm.evaluate(x)) || budget.masked(x) {
                return f64::INFINITY;
            }
            match w.value(x) {
                Ok(v) => v,
                Err(_) => f64::INFINITY,
            }
        };
        let refined: Vec<f64> = starts
            .par_iter()
            .map(|&i| nelder_mead(&objective, self.point(i), &widths, 0.05))
            .collect();
        let value = refined.into_iter().fold(sample_min, f64::min);
        Ok(EssInfEstimate {
            value,
            sample_min,
            starts: starts.len(),
            direction: "upper_bound",
        })
    }
}

/// Minimises f from x0 with an axis-aligned initial simplex of relative size `rel`
/// of the given widths; returns the best value found.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], widths: &[f64], rel: f64) -> f64 {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for j in 0..n {
        let mut x = x0.to_vec();
        x[j] += rel * widths[j];
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let max_iter = 200 * (n + 1);
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if worst.is_finite() && (worst - best).abs() <= 1e-15 * (1.0 + best.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, y)| b + 0.5 * (y - b)).collect();
                    let fx = f(&x);
                    *v = (x, fx);
                }
            }
        }
    }
    simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
}

/// ∫_region w dx.
pub fn integrate(g: &CarnotGroup, s: &HomogeneousNorm, region: Region, w: &ScalarField, budget: &QuadratureBudget) -> Result<IntegralEstimate> {
    let cloud = SampleCloud::draw(g, s, region, budget)?;
    let values = cloud.evaluate(w)?;
    cloud.integrate(&values)
}

/// ⨍_region w dx as a ratio estimator on the shared sample set.
pub fn average(g: &CarnotGroup, s: &HomogeneousNorm, region: Region, w: &ScalarField, budget: &QuadratureBudget) -> Result<IntegralEstimate> {
    let cloud = SampleCloud::draw(g, s, region, budget)?;
    let values = cloud.evaluate(w)?;
    cloud.average(&values)
}

/// Upper-bound estimate of ess inf_region w.
pub fn ess_inf(g: &CarnotGroup, s: &HomogeneousNorm, region: Region, w: &ScalarField, budget: &QuadratureBudget) -> Result<f64> {
    let cloud = SampleCloud::draw(g, s, region, budget)?;
    let values = cloud.evaluate(w)?;
    Ok(cloud.ess_inf_where(s, w, &values, &cloud.all(), &region, budget)?.value)
}

/// Fraction of region samples with w < ε.
pub fn sublevel_fraction(
    g: &CarnotGroup,
    s: &HomogeneousNorm,
    region: Region,
    w: &ScalarField,
    eps: f64,
    budget: &QuadratureBudget,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("sublevel threshold must be positive, got {eps}")));
    }
    let cloud = SampleCloud::draw(g, s, region, budget)?;
    let values = cloud.evaluate(w)?;
    Ok(cloud.sublevel_fraction_where(&values, &cloud.all(), eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carnot::{euclidean_group, heisenberg_group};
    use crate::norm::gauge_norm;
    use std::f64::consts::PI;

    fn one() -> ScalarField {
        ScalarField::constant(1.0)
    }

    #[test]
    fn unit_ball_volume_r3() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let est = integrate(&e, &s, Region::ball(1.0).unwrap(), &one(), &QuadratureBudget::new(200_000, 3)).unwrap();
        assert!((est.value - 4.0 * PI / 3.0).abs() < 3.0 * est.std_error, "{est:?}");
        assert_eq!(est.samples_used, 200_000);
    }

    #[test]
    fn constant_average_is_exact() {
        let h = heisenberg_group(1).unwrap();
        let s = gauge_norm(&h);
        let avg = average(&h, &s, Region::ball(1.5).unwrap(), &ScalarField::constant(0.7), &QuadratureBudget::new(5_000, 9)).unwrap();
        assert_eq!(avg.value, 0.7);
    }

    #[test]
    fn average_of_square_norm() {
        // ⨍_{B_1} |x|² in ℝ³ = 3/5
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let w = ScalarField::new("r2", |x| x.iter().map(|c| c * c).sum());
        let avg = average(&e, &s, Region::ball(1.0).unwrap(), &w, &QuadratureBudget::new(100_000, 5)).unwrap();
        assert!((avg.value - 0.6).abs() < 3.0 * avg.std_error, "{avg:?}");
    }

    #[test]
    fn average_times_measure_is_integral() {
        let e = euclidean_group(2).unwrap();
        let s = gauge_norm(&e);
        let cloud = SampleCloud::draw(&e, &s, Region::ball(2.0).unwrap(), &QuadratureBudget::new(10_000, 1)).unwrap();
        let w = ScalarField::new("w", |x| 1.0 + x[0].sin());
        let vals = cloud.evaluate(&w).unwrap();
        let avg = cloud.average(&vals).unwrap();
        let int = cloud.integrate(&vals).unwrap();
        assert_eq!(avg.value * cloud.measure().value, int.value);
    }

    #[test]
    fn half_ball_fraction() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let cloud = SampleCloud::draw(&e, &s, Region::ball(2.0).unwrap(), &QuadratureBudget::new(50_000, 8)).unwrap();
        let mask = cloud.mask(&Region::ball(1.0).unwrap());
        let inner = cloud.measure_where(&mask);
        let whole = cloud.measure();
        let ratio = inner.value / whole.value;
        let se = (0.125 * 0.875 / 50_000f64).sqrt();
        assert!((ratio - 0.125).abs() < 3.0 * se, "{ratio}");
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let h = heisenberg_group(1).unwrap();
        let s = gauge_norm(&h);
        let w = ScalarField::new("w", |x| (1.0 + x[2] * x[2]).ln());
        let r = Region::annulus(1.0).unwrap();
        let a = integrate(&h, &s, r, &w, &QuadratureBudget::new(20_000, 42)).unwrap();
        let b = integrate(&h, &s, r, &w, &QuadratureBudget::new(20_000, 42)).unwrap();
        let c = integrate(&h, &s, r, &w, &QuadratureBudget::new(20_000, 43)).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
        assert_ne!(a.value.to_bits(), c.value.to_bits());
    }

    #[test]
    fn ess_inf_on_boundary_shell() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let w = ScalarField::new("w", |x| 1.0 / (1.0 + x.iter().map(|c| c * c).sum::<f64>()));
        let v = ess_inf(&e, &s, Region::ball(2.0).unwrap(), &w, &QuadratureBudget::new(10_000, 4)).unwrap();
        assert!(v >= 0.2 - 1e-9 && v < 0.2 + 1e-3, "{v}");
        let c = ess_inf(&e, &s, Region::ball(2.0).unwrap(), &ScalarField::constant(3.0), &QuadratureBudget::new(1_000, 4)).unwrap();
        assert_eq!(c, 3.0);
    }

    #[test]
    fn sublevel_fractions() {
        let e = euclidean_group(2).unwrap();
        let s = gauge_norm(&e);
        let r = Region::ball(1.0).unwrap();
        let b = QuadratureBudget::new(2_000, 2);
        assert_eq!(sublevel_fraction(&e, &s, r, &ScalarField::constant(0.0), 0.1, &b).unwrap(), 1.0);
        assert_eq!(sublevel_fraction(&e, &s, r, &ScalarField::constant(0.2), 0.1, &b).unwrap(), 0.0);
        assert!(sublevel_fraction(&e, &s, r, &one(), 0.0, &b).is_err());
    }

    #[test]
    fn exclusion_mask_removes_measure() {
        let e = euclidean_group(3).unwrap();
        let s = gauge_norm(&e);
        let b = QuadratureBudget::new(100_000, 6).with_exclusion(0.5);
        let cloud = SampleCloud::draw(&e, &s, Region::ball(1.0).unwrap(), &b).unwrap();
        let want = 4.0 * PI / 3.0 * 0.125;
        let got = cloud.excluded_measure();
        assert!((got - want).abs() < 0.03, "{got}");
        assert!((0..cloud.len()).all(|i| cloud.norm_value(i) >= 0.5));
    }

    #[test]
    fn tensor_grid_volume() {
        let e = euclidean_group(2).unwrap();
        let s = gauge_norm(&e);
        let b = QuadratureBudget::new(250_000, 0).with_method(Method::TensorGrid);
        let est = integrate(&e, &s, Region::ball(1.0).unwrap(), &one(), &b).unwrap();
        assert!((est.value - PI).abs() <= est.std_error.max(1e-3), "{est:?}");
    }

    #[test]
    fn empty_region_detected() {
        let e = euclidean_group(2).unwrap();
        let s = gauge_norm(&e);
        let b = QuadratureBudget::new(10, 0).with_exclusion(10.0);
        assert!(matches!(
            SampleCloud::draw(&e, &s, Region::ball(1.0).unwrap(), &b),
            Err(Error::EmptyRegion(_))
        ));
    }
}
