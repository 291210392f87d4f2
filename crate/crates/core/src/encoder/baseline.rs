//! Baseline encoder architectures matched to the main encoder's depth.
//!
//! Both baselines keep every weight layer at the main encoder's
//! dimensionality so comparisons isolate the activation and structure:
//!
//! * NNH — a generic three-layer feed-forward encoder with tanh units.
//! * SNNH — a two-stage unfolded soft-thresholding encoder whose
//!   per-element thresholds use the same diagonal-scaling decomposition as
//!   the bounded unit; its outputs are sparse rather than antipodal.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Nnh,
    Snnh,
}

/// Generic encoder: x = tanh(W₃ tanh(W₂ tanh(W₁y + c₁) + c₂) + c₃).
#[derive(Debug, Clone, PartialEq)]
pub struct NnhParams {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub w3: DMatrix<f64>,
    pub c1: DVector<f64>,
    pub c2: DVector<f64>,
    pub c3: DVector<f64>,
}

/// Unfolded soft-thresholding encoder with untied stage couplings:
///
/// ```text
/// z₁ = S_θ(W y)    z₂ = S_θ(W y + S₂ z₁)    z₃ = S_θ(W y + S₃ z₂)
/// ```
///
/// where S_θ is the per-element soft threshold θᵢ·shelu(uᵢ/θᵢ).
#[derive(Debug, Clone, PartialEq)]
pub struct SnnhParams {
    pub w: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub s3: DMatrix<f64>,
    /// Per-element thresholds, strictly positive.
    pub theta: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineParams {
    Nnh(NnhParams),
    Snnh(SnnhParams),
}

impl BaselineParams {
    /// Gaussian initialization scaled by fan-in; zero biases, thresholds 0.5.
    pub fn random(kind: BaselineKind, input_dim: usize, code_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gaussian = |rows: usize, cols: usize| {
            let scale = 1.0 / (cols as f64).sqrt();
            DMatrix::from_fn(rows, cols, |_, _| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        };
        match kind {
            BaselineKind::Nnh => BaselineParams::Nnh(NnhParams {
                w1: gaussian(code_dim, input_dim),
                w2: gaussian(code_dim, code_dim),
                w3: gaussian(code_dim, code_dim),
                c1: DVector::zeros(code_dim),
                c2: DVector::zeros(code_dim),
                c3: DVector::zeros(code_dim),
            }),
            BaselineKind::Snnh => BaselineParams::Snnh(SnnhParams {
                w: gaussian(code_dim, input_dim),
                s2: gaussian(code_dim, code_dim),
                s3: gaussian(code_dim, code_dim),
                theta: DVector::from_element(code_dim, 0.5),
            }),
        }
    }

    pub fn kind(&self) -> BaselineKind {
        match self {
            BaselineParams::Nnh(_) => BaselineKind::Nnh,
            BaselineParams::Snnh(_) => BaselineKind::Snnh,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            BaselineParams::Nnh(p) => p.w1.ncols(),
            BaselineParams::Snnh(p) => p.w.ncols(),
        }
    }

    pub fn code_dim(&self) -> usize {
        match self {
            BaselineParams::Nnh(p) => p.w1.nrows(),
            BaselineParams::Snnh(p) => p.w.nrows(),
        }
    }
}

/// Layer-by-layer record of a baseline forward pass.
#[derive(Debug, Clone)]
pub struct BaselineTape {
    pub input: DVector<f64>,
    pub pre: Vec<DVector<f64>>,
    pub post: Vec<DVector<f64>>,
}

impl BaselineTape {
    pub fn output(&self) -> &DVector<f64> {
        self.post.last().expect("tape has at least one layer")
    }
}

/// Gradients mirroring [`BaselineParams`].
#[derive(Debug, Clone)]
pub enum BaselineGradients {
    Nnh {
        w1: DMatrix<f64>,
        w2: DMatrix<f64>,
        w3: DMatrix<f64>,
        c1: DVector<f64>,
        c2: DVector<f64>,
        c3: DVector<f64>,
    },
    Snnh {
        w: DMatrix<f64>,
        s2: DMatrix<f64>,
        s3: DMatrix<f64>,
        theta: DVector<f64>,
    },
}

fn soft_threshold(u: &DVector<f64>, theta: &DVector<f64>) -> DVector<f64> {
    u.zip_map(theta, |ui, ti| ui.signum() * (ui.abs() - ti).max(0.0))
}

pub fn forward_baseline(params: &BaselineParams, signal: &DVector<f64>) -> Result<DVector<f64>> {
    forward_baseline_tape(params, signal).map(|(x, _)| x)
}

pub fn forward_baseline_tape(
    params: &BaselineParams,
    signal: &DVector<f64>,
) -> Result<(DVector<f64>, BaselineTape)> {
    if signal.len() != params.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has length {}, encoder expects {}",
            signal.len(),
            params.input_dim()
        )));
    }
    let (pre, post) = match params {
        BaselineParams::Nnh(p) => {
            let u1 = &p.w1 * signal + &p.c1;
            let h1 = u1.map(f64::tanh);
            let u2 = &p.w2 * &h1 + &p.c2;
            let h2 = u2.map(f64::tanh);
            let u3 = &p.w3 * &h2 + &p.c3;
            let h3 = u3.map(f64::tanh);
            (vec![u1, u2, u3], vec![h1, h2, h3])
        }
        BaselineParams::Snnh(p) => {
            if let Some(bad) = p.theta.iter().find(|t| !(**t > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "thresholds must be positive, got {bad}"
                )));
            }
            let wy = &p.w * signal;
            let u1 = wy.clone();
            let z1 = soft_threshold(&u1, &p.theta);
            let u2 = &wy + &p.s2 * &z1;
            let z2 = soft_threshold(&u2, &p.theta);
            let u3 = &wy + &p.s3 * &z2;
            let z3 = soft_threshold(&u3, &p.theta);
            (vec![u1, u2, u3], vec![z1, z2, z3])
        }
    };
    let output = post.last().expect("three layers").clone();
    Ok((
        output,
        BaselineTape {
            input: signal.clone(),
            pre,
            post,
        },
    ))
}

/// Accumulates the loss gradient `output_grad` through one baseline column
/// into `grads`. The soft threshold uses the inactive-at-the-kink
/// subgradient (zero when |u| ≤ θ).
pub fn backward_baseline(
    params: &BaselineParams,
    tape: &BaselineTape,
    output_grad: &DVector<f64>,
    grads: &mut BaselineGradients,
) -> Result<()> {
    match (params, grads) {
        (
            BaselineParams::Nnh(p),
            BaselineGradients::Nnh {
                w1,
                w2,
                w3,
                c1,
                c2,
                c3,
            },
        ) => {
            // dtanh(u) = 1 − tanh²(u), with tanh(u) already on the tape.
            let d3 = output_grad.zip_map(&tape.post[2], |g, h| g * (1.0 - h * h));
            *w3 += &d3 * tape.post[1].transpose();
            *c3 += &d3;
            let g2 = p.w3.transpose() * &d3;
            let d2 = g2.zip_map(&tape.post[1], |g, h| g * (1.0 - h * h));
            *w2 += &d2 * tape.post[0].transpose();
            *c2 += &d2;
            let g1 = p.w2.transpose() * &d2;
            let d1 = g1.zip_map(&tape.post[0], |g, h| g * (1.0 - h * h));
            *w1 += &d1 * tape.input.transpose();
            *c1 += &d1;
            Ok(())
        }
        (BaselineParams::Snnh(p), BaselineGradients::Snnh { w, s2, s3, theta }) => {
            let active = |u: &DVector<f64>| -> DVector<f64> {
                u.zip_map(&p.theta, |ui, ti| if ui.abs() > ti { 1.0 } else { 0.0 })
            };
            let d3 = output_grad.component_mul(&active(&tape.pre[2]));
            *theta += d3.zip_map(&tape.pre[2], |d, u| -d * u.signum());
            *s3 += &d3 * tape.post[1].transpose();
            *w += &d3 * tape.input.transpose();
            let g2 = p.s3.transpose() * &d3;
            let d2 = g2.component_mul(&active(&tape.pre[1]));
            *theta += d2.zip_map(&tape.pre[1], |d, u| -d * u.signum());
            *s2 += &d2 * tape.post[0].transpose();
            *w += &d2 * tape.input.transpose();
            let g1 = p.s2.transpose() * &d2;
            let d1 = g1.component_mul(&active(&tape.pre[0]));
            *theta += d1.zip_map(&tape.pre[0], |d, u| -d * u.signum());
            *w += &d1 * tape.input.transpose();
            Ok(())
        }
        _ => Err(Error::InvalidArgument(
            "gradient accumulator does not match the baseline kind".into(),
        )),
    }
}

impl BaselineGradients {
    pub fn zeros(params: &BaselineParams) -> Self {
        let n = params.input_dim();
        let code = params.code_dim();
        match params {
            BaselineParams::Nnh(_) => BaselineGradients::Nnh {
                w1: DMatrix::zeros(code, n),
                w2: DMatrix::zeros(code, code),
                w3: DMatrix::zeros(code, code),
                c1: DVector::zeros(code),
                c2: DVector::zeros(code),
                c3: DVector::zeros(code),
            },
            BaselineParams::Snnh(_) => BaselineGradients::Snnh {
                w: DMatrix::zeros(code, n),
                s2: DMatrix::zeros(code, code),
                s3: DMatrix::zeros(code, code),
                theta: DVector::zeros(code),
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            BaselineGradients::Nnh {
                w1,
                w2,
                w3,
                c1,
                c2,
                c3,
            } => {
                w1.iter().all(|v| v.is_finite())
                    && w2.iter().all(|v| v.is_finite())
                    && w3.iter().all(|v| v.is_finite())
                    && c1.iter().all(|v| v.is_finite())
                    && c2.iter().all(|v| v.is_finite())
                    && c3.iter().all(|v| v.is_finite())
            }
            BaselineGradients::Snnh { w, s2, s3, theta } => {
                w.iter().all(|v| v.is_finite())
                    && s2.iter().all(|v| v.is_finite())
                    && s3.iter().all(|v| v.is_finite())
                    && theta.iter().all(|v| v.is_finite())
            }
        }
    }
}

/// params − lr·grads, thresholds floored at 1e-6 to stay positive.
pub fn baseline_sgd_step(
    params: &BaselineParams,
    grads: &BaselineGradients,
    learning_rate: f64,
) -> Result<BaselineParams> {
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite baseline gradient".into()));
    }
    match (params, grads) {
        (
            BaselineParams::Nnh(p),
            BaselineGradients::Nnh {
                w1,
                w2,
                w3,
                c1,
                c2,
                c3,
            },
        ) => Ok(BaselineParams::Nnh(NnhParams {
            w1: &p.w1 - w1 * learning_rate,
            w2: &p.w2 - w2 * learning_rate,
            w3: &p.w3 - w3 * learning_rate,
            c1: &p.c1 - c1 * learning_rate,
            c2: &p.c2 - c2 * learning_rate,
            c3: &p.c3 - c3 * learning_rate,
        })),
        (BaselineParams::Snnh(p), BaselineGradients::Snnh { w, s2, s3, theta }) => {
            let stepped = &p.theta - theta * learning_rate;
            Ok(BaselineParams::Snnh(SnnhParams {
                w: &p.w - w * learning_rate,
                s2: &p.s2 - s2 * learning_rate,
                s3: &p.s3 - s3 * learning_rate,
                theta: stepped.map(|t| t.max(1e-6)),
            }))
        }
        _ => Err(Error::InvalidArgument(
            "gradient accumulator does not match the baseline kind".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnh_zero_weights_output_zero() {
        let params = BaselineParams::Nnh(NnhParams {
            w1: DMatrix::zeros(4, 6),
            w2: DMatrix::zeros(4, 4),
            w3: DMatrix::zeros(4, 4),
            c1: DVector::zeros(4),
            c2: DVector::zeros(4),
            c3: DVector::zeros(4),
        });
        let signal = DVector::from_element(6, 3.0);
        assert_eq!(forward_baseline(&params, &signal).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn snnh_dead_zone_outputs_zero() {
        // Pre-activations within [−θ, θ] are thresholded away everywhere.
        let params = BaselineParams::Snnh(SnnhParams {
            w: DMatrix::from_element(4, 6, 0.01),
            s2: DMatrix::from_element(4, 4, 0.1),
            s3: DMatrix::from_element(4, 4, 0.1),
            theta: DVector::from_element(4, 1.0),
        });
        let signal = DVector::from_element(6, 1.0);
        assert_eq!(forward_baseline(&params, &signal).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn snnh_rejects_nonpositive_threshold() {
        let params = BaselineParams::Snnh(SnnhParams {
            w: DMatrix::zeros(2, 3),
            s2: DMatrix::zeros(2, 2),
            s3: DMatrix::zeros(2, 2),
            theta: DVector::from_vec(vec![1.0, 0.0]),
        });
        assert!(forward_baseline(&params, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn baseline_dimension_mismatch() {
        let params = BaselineParams::random(BaselineKind::Nnh, 6, 4, 0);
        assert!(forward_baseline(&params, &DVector::zeros(5)).is_err());
    }

    #[test]
    fn random_baselines_deterministic() {
        let a = BaselineParams::random(BaselineKind::Snnh, 6, 4, 3);
        let b = BaselineParams::random(BaselineKind::Snnh, 6, 4, 3);
        assert_eq!(a, b);
    }
}
