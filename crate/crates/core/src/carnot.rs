//! Homogeneous Carnot groups on ℝ^N.
//!
//! A group is described by its stratification (layer dimensions), a polynomial
//! group law, the inverse map and the horizontal frame μ(ξ), an l×N matrix whose
//! rows are the coefficients of the left-invariant fields X_1..X_l. Points are
//! dense coordinate vectors; layer i occupies a contiguous block and is scaled
//! by R^i under the dilation δ_R.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Row-major l×N matrix of frame coefficients μ_ij.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FrameMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FrameMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// The l×N matrix (I_l | 0).
    pub fn leading_identity(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// μ·g for an ambient vector g ∈ ℝ^N.
    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(g).map(|(m, x)| m * x).sum())
            .collect()
    }

    /// μᵀ·h for a horizontal vector h ∈ ℝ^l.
    pub fn apply_transpose(&self, h: &[f64]) -> Vec<f64> {
        debug_assert_eq!(h.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, hi) in h.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += m * hi;
            }
        }
        out
    }
}

/// Structure of a user-defined group, registered in the group plugin table.
pub trait GroupStructure: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn layer_dims(&self) -> Vec<usize>;
    fn compose(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    fn inverse(&self, x: &[f64]) -> Vec<f64>;
    fn frame(&self, x: &[f64]) -> FrameMatrix;
}

#[derive(Clone, Debug)]
enum GroupKind {
    Euclidean,
    Heisenberg { n: usize },
    Custom(Arc<dyn GroupStructure>),
}

/// A homogeneous Carnot group (ℝ^N, ∘, δ_R). Immutable once built.
#[derive(Clone, Debug)]
pub struct CarnotGroup {
    kind: GroupKind,
    layer_dims: Vec<usize>,
    degrees: Vec<i32>,
}

/// Serializable summary of a group, echoed in reports.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GroupSummary {
    pub label: String,
    pub ambient_dim: usize,
    pub step: usize,
    pub layer_dims: Vec<usize>,
    pub hom_dim: usize,
}

/// ℍⁿ on ℝ^{2n+1} with coordinates (x_1..x_n, y_1..y_n, t).
pub fn heisenberg_group(n: usize) -> Result<CarnotGroup> {
    if n == 0 {
        return Err(Error::Config("Heisenberg group needs n >= 1".into()));
    }
    CarnotGroup::build(GroupKind::Heisenberg { n }, vec![2 * n, 1])
}

/// ℝ^N with vector addition, a step-1 Carnot group with Q = N.
pub fn euclidean_group(dim: usize) -> Result<CarnotGroup> {
    if dim == 0 {
        return Err(Error::Config("Euclidean group needs N >= 1".into()));
    }
    CarnotGroup::build(GroupKind::Euclidean, vec![dim])
}

/// Wraps a plugin structure after validating its stratification.
pub fn custom_group(structure: Arc<dyn GroupStructure>) -> Result<CarnotGroup> {
    let dims = structure.layer_dims();
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::Config(format!(
            "group '{}' has invalid layer dims {:?}",
            structure.name(),
            dims
        )));
    }
    CarnotGroup::build(GroupKind::Custom(structure), dims)
}

impl CarnotGroup {
    fn build(kind: GroupKind, layer_dims: Vec<usize>) -> Result<Self> {
        let degrees = layer_dims
            .iter()
            .enumerate()
            .flat_map(|(i, &d)| std::iter::repeat((i + 1) as i32).take(d))
            .collect();
        Ok(CarnotGroup {
            kind,
            layer_dims,
            degrees,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Number of horizontal fields l = n_1.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Q = Σ i·n_i.
    pub fn hom_dim(&self) -> usize {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(i, d)| (i + 1) * d)
            .sum()
    }

    /// Homogeneity degree (layer index) of each ambient coordinate.
    pub fn coordinate_degrees(&self) -> &[i32] {
        &self.degrees
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, GroupKind::Euclidean)
    }

    pub fn is_heisenberg(&self) -> bool {
        matches!(self.kind, GroupKind::Heisenberg { .. })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            GroupKind::Euclidean => format!("euclidean(R^{})", self.ambient_dim()),
            GroupKind::Heisenberg { n } => format!("heisenberg(H^{n})"),
            GroupKind::Custom(s) => format!("custom({})", s.name()),
        }
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary {
            label: self.label(),
            ambient_dim: self.ambient_dim(),
            step: self.step(),
            layer_dims: self.layer_dims.clone(),
            hom_dim: self.hom_dim(),
        }
    }

    pub fn identity(&self) -> Vec<f64> {
        vec![0.0; self.ambient_dim()]
    }

    /// Group law x∘y.
    pub fn compose(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match &self.kind {
            GroupKind::Euclidean => x.iter().zip(y).map(|(a, b)| a + b).collect(),
            GroupKind::Heisenberg { n } => {
                let n = *n;
                let mut z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
                let mut twist = 0.0;
                for i in 0..n {
                    // x̃_i ŷ_i − x̂_i ỹ_i with x̂ = x (left factor), x̃ = y
                    twist += y[i] * x[n + i] - x[i] * y[n + i];
                }
                z[2 * n] += 2.0 * twist;
                z
            }
            GroupKind::Custom(s) => s.compose(x, y),
        }
    }

    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            GroupKind::Euclidean | GroupKind::Heisenberg { .. } => x.iter().map(|a| -a).collect(),
            GroupKind::Custom(s) => s.inverse(x),
        }
    }

    /// Horizontal frame μ(ξ); row i holds the ambient coefficients of X_i.
    pub fn frame(&self, x: &[f64]) -> FrameMatrix {
        let dim = self.ambient_dim();
        match &self.kind {
            GroupKind::Euclidean => FrameMatrix::leading_identity(dim, dim),
            GroupKind::Heisenberg { n } => {
                let n = *n;
                let mut m = FrameMatrix::leading_identity(2 * n, dim);
                for i in 0..n {
                    // X_i = ∂x_i + 2y_i ∂t,  Y_i = ∂y_i − 2x_i ∂t
                    m.set(i, 2 * n, 2.0 * x[n + i]);
                    m.set(n + i, 2 * n, -2.0 * x[i]);
                }
                m
            }
            GroupKind::Custom(s) => s.frame(x),
        }
    }

    /// δ_R(ξ); rejects R ≤ 0.
    pub fn dilate(&self, r: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Precondition(format!(
                "dilation factor must be positive, got {r}"
            )));
        }
        Ok(self.dilate_unchecked(r, x))
    }

    pub(crate) fn dilate_unchecked(&self, r: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.degrees)
            .map(|(xi, &d)| xi * r.powi(d))
            .collect()
    }
}

/// Engel group: step 3, layers (2, 1, 1), Q = 7, in exponential coordinates of
/// the first kind, so that ξ⁻¹ = −ξ. Brackets: [X_1, X_2] = X_3, [X_1, X_3] = X_4.
#[derive(Debug, Default)]
pub struct EngelGroup;

impl GroupStructure for EngelGroup {
    fn name(&self) -> &str {
        "engel"
    }

    fn layer_dims(&self) -> Vec<usize> {
        vec![2, 1, 1]
    }

    fn compose(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        // BCH truncated at step 3.
        let br = x[0] * y[1] - x[1] * y[0];
        vec![
            x[0] + y[0],
            x[1] + y[1],
            x[2] + y[2] + 0.5 * br,
            x[3] + y[3] + 0.5 * (x[0] * y[2] - x[2] * y[0]) + (x[0] - y[0]) * br / 12.0,
        ]
    }

    fn inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|a| -a).collect()
    }

    fn frame(&self, x: &[f64]) -> FrameMatrix {
        let mut m = FrameMatrix::leading_identity(2, 4);
        m.set(0, 2, -0.5 * x[1]);
        m.set(0, 3, -0.5 * x[2] - x[0] * x[1] / 12.0);
        m.set(1, 2, 0.5 * x[0]);
        m.set(1, 3, x[0] * x[0] / 12.0);
        m
    }
}

/// Group plugin table for `kind = "custom"` configurations.
pub fn group_plugin(name: &str) -> Result<Arc<dyn GroupStructure>> {
    match name {
        "engel" => Ok(Arc::new(EngelGroup)),
        other => Err(Error::UnknownName {
            kind: "group plugin",
            name: other.to_string(),
        }),
    }
}
