//! Unit-threshold activation functions.
//!
//! All five neurons are stated in their unit form; per-element scaling is
//! handled by the diagonal layers wrapped around them (see [`super::blu`]).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::box_project_elementwise;

/// The activation families compared by the encoder experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    /// Bounded linear unit: clip(u, ±1). Identity inside the box, saturating
    /// outside; produces dense, nearly antipodal outputs.
    Blu,
    /// Smooth saturating unit; slope 1 at the origin, range (−1, 1).
    Tanh,
    /// max(u, 0).
    Relu,
    /// Soft-thresholding linear unit: sign(u)·max(|u| − 1, 0).
    Shelu,
    /// Hard-thresholding linear unit: 0 when |u| ≤ 1, identity otherwise.
    Helu,
}

/// Applies the unit form of the chosen neuron to a scalar.
pub fn neuron_apply(kind: NeuronKind, u: f64) -> f64 {
    match kind {
        NeuronKind::Blu => u.clamp(-1.0, 1.0),
        NeuronKind::Tanh => u.tanh(),
        NeuronKind::Relu => u.max(0.0),
        NeuronKind::Shelu => u.signum() * (u.abs() - 1.0).max(0.0),
        NeuronKind::Helu => {
            if u.abs() <= 1.0 {
                0.0
            } else {
                u
            }
        }
    }
}

/// Per-element bounded linear unit: entry i is clipped into [−λᵢ, λᵢ].
///
/// Computed through the learnable decomposition — scale by 1/λᵢ, unit clip,
/// scale back by λᵢ — which agrees with direct clipping to within rounding
/// and never exceeds the bound.
pub fn blu(u: &DVector<f64>, lambda: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != lambda.len() {
        return Err(Error::DimensionMismatch(format!(
            "input has length {} but λ has length {}",
            u.len(),
            lambda.len()
        )));
    }
    if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "λ entries must be positive, got {bad}"
        )));
    }
    let out = u.zip_map(lambda, |ui, li| li * (ui / li).clamp(-1.0, 1.0));
    debug_assert!({
        let direct = box_project_elementwise(u, lambda).expect("validated above");
        (&out - direct).amax() <= 1e-12
    });
    Ok(out)
}
