//! Matching losses over relative-pose estimates and their analytic
//! gradients.
//!
//! Both losses compare a predicted relative pose (raw quaternion `q_hat`,
//! untangled translation `v_hat`) against the ground-truth relative pose
//! (`q`, `v`):
//!
//! - per-view term: `|1 - q . (q_hat/|q_hat|)| + |v - v_hat| + |1 - |q_hat||`
//! - multi-view loss: mean of the per-view term over all views
//! - single-view loss: per-view term plus `|theta - theta_hat|`
//!
//! The `1 - q . q_hat` term is sign-sensitive on purpose: predicting the
//! antipodal quaternion costs 2 even though it encodes the same rotation,
//! which regularizes estimates toward a consistent hemisphere.
//!
//! Gradients are with respect to the predicted quantities. At kinks of the
//! absolute values (any argument within 1e-9 of zero) the gradient of that
//! term is taken as 0 and the output is flagged non-differentiable.

use crate::error::{Error, Result};
use crate::pose::{RawQuaternion, UnitQuaternion, UntangledDelta};

/// Kink detection width for the absolute-value terms.
pub const NONDIFF_EPS: f64 = 1e-9;

/// One view's worth of prediction and ground truth.
#[derive(Debug, Clone, Copy)]
pub struct LossSample {
    /// Ground-truth relative rotation `q`.
    pub target_rot: UnitQuaternion,
    /// Ground-truth untangled translation `v`.
    pub target_v: UntangledDelta,
    /// Predicted rotation `q_hat`, not necessarily unit norm.
    pub pred_rot: RawQuaternion,
    /// Predicted untangled translation `v_hat`.
    pub pred_v: UntangledDelta,
}

/// Gradient of a loss with respect to one sample's predictions.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossGradient {
    /// d loss / d q_hat, component order w, x, y, z.
    pub d_q_hat: [f64; 4],
    /// d loss / d v_hat.
    pub d_v_hat: [f64; 3],
    /// d loss / d theta_hat (zero for the multi-view loss).
    pub d_theta_hat: f64,
    /// Set when any absolute-value argument sat within [`NONDIFF_EPS`] of
    /// zero; the affected term contributes a zero subgradient.
    pub nondifferentiable: bool,
}

struct TermParts {
    value: f64,
    grad: LossGradient,
}

/// Per-view term and its gradient w.r.t. `q_hat` and `v_hat`.
fn per_view_term(sample: &LossSample) -> Result<TermParts> {
    let q = sample.target_rot.components();
    let qh = sample.pred_rot.components();
    let r = sample.pred_rot.norm();
    if r < 1e-12 {
        return Err(Error::ZeroNormQuaternion);
    }
    let mut grad = LossGradient::default();

    // A = |1 - q . (q_hat / r)|
    let dot: f64 = q.iter().zip(&qh).map(|(a, b)| a * b).sum();
    let a_arg = 1.0 - dot / r;
    if a_arg.abs() < NONDIFF_EPS {
        grad.nondifferentiable = true;
    } else {
        let s = a_arg.signum();
        for i in 0..4 {
            // d(q.qh/r)/dqh_i = q_i / r - (q.qh) qh_i / r^3
            grad.d_q_hat[i] += -s * (q[i] / r - dot * qh[i] / (r * r * r));
        }
    }

    // B = |v - v_hat|_2
    let dv = [
        sample.target_v.vx - sample.pred_v.vx,
        sample.target_v.vy - sample.pred_v.vy,
        sample.target_v.vz - sample.pred_v.vz,
    ];
    let b = (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).sqrt();
    if b < NONDIFF_EPS {
        grad.nondifferentiable = true;
    } else {
        // d|v - vh|/dvh = (vh - v) / |v - vh|
        for i in 0..3 {
            grad.d_v_hat[i] += -dv[i] / b;
        }
    }

    // C = |1 - r|
    let c_arg = 1.0 - r;
    if c_arg.abs() < NONDIFF_EPS {
        grad.nondifferentiable = true;
    } else {
        let s = c_arg.signum();
        for i in 0..4 {
            grad.d_q_hat[i] += -s * qh[i] / r;
        }
    }

    Ok(TermParts {
        value: a_arg.abs() + b + c_arg.abs(),
        grad,
    })
}

/// Multi-view loss: the per-view term averaged over all views.
pub fn loss_mv(samples: &[LossSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("multi-view loss samples"));
    }
    let mut total = 0.0;
    for s in samples {
        total += per_view_term(s)?.value;
    }
    Ok(total / samples.len() as f64)
}

/// Per-sample gradients of [`loss_mv`]; each carries the 1/N factor.
pub fn grad_loss_mv(samples: &[LossSample]) -> Result<Vec<LossGradient>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("multi-view loss samples"));
    }
    let inv_n = 1.0 / samples.len() as f64;
    samples
        .iter()
        .map(|s| {
            let parts = per_view_term(s)?;
            let mut g = parts.grad;
            for v in &mut g.d_q_hat {
                *v *= inv_n;
            }
            for v in &mut g.d_v_hat {
                *v *= inv_n;
            }
            Ok(g)
        })
        .collect()
}

/// Single-view loss: per-view term plus the angle-estimate error
/// `|theta - theta_hat|` (degrees).
pub fn loss_sv(sample: &LossSample, theta_deg: f64, theta_hat_deg: f64) -> Result<f64> {
    Ok(per_view_term(sample)?.value + (theta_deg - theta_hat_deg).abs())
}

/// Gradient of [`loss_sv`] w.r.t. the predictions, including `theta_hat`.
pub fn grad_loss_sv(
    sample: &LossSample,
    theta_deg: f64,
    theta_hat_deg: f64,
) -> Result<LossGradient> {
    let parts = per_view_term(sample)?;
    let mut g = parts.grad;
    let d_arg = theta_deg - theta_hat_deg;
    if d_arg.abs() < NONDIFF_EPS {
        g.nondifferentiable = true;
    } else {
        g.d_theta_hat = -d_arg.signum();
    }
    Ok(g)
}

/// Central finite-difference gradient of [`loss_sv`] over the 8 prediction
/// coordinates (4 quaternion, 3 translation, 1 angle). The reference
/// implementation the analytic gradients are validated against.
pub fn fd_grad_loss_sv(
    sample: &LossSample,
    theta_deg: f64,
    theta_hat_deg: f64,
    h: f64,
) -> Result<LossGradient> {
    let eval = |s: &LossSample, th: f64| loss_sv(s, theta_deg, th);
    let mut g = LossGradient::default();
    for i in 0..4 {
        let mut plus = *sample;
        let mut minus = *sample;
        let mut cp = plus.pred_rot.components();
        cp[i] += h;
        plus.pred_rot = RawQuaternion::new(cp[0], cp[1], cp[2], cp[3]);
        let mut cm = minus.pred_rot.components();
        cm[i] -= h;
        minus.pred_rot = RawQuaternion::new(cm[0], cm[1], cm[2], cm[3]);
        g.d_q_hat[i] = (eval(&plus, theta_hat_deg)? - eval(&minus, theta_hat_deg)?) / (2.0 * h);
    }
    for i in 0..3 {
        let mut plus = *sample;
        let mut minus = *sample;
        let mut vp = plus.pred_v.components();
        vp[i] += h;
        plus.pred_v = UntangledDelta::new(vp[0], vp[1], vp[2]);
        let mut vm = minus.pred_v.components();
        vm[i] -= h;
        minus.pred_v = UntangledDelta::new(vm[0], vm[1], vm[2]);
        g.d_v_hat[i] = (eval(&plus, theta_hat_deg)? - eval(&minus, theta_hat_deg)?) / (2.0 * h);
    }
    g.d_theta_hat =
        (eval(sample, theta_hat_deg + h)? - eval(sample, theta_hat_deg - h)?) / (2.0 * h);
    Ok(g)
}

/// Relative disagreement between two gradients: norm of the difference over
/// the larger norm, floored to keep near-zero gradients comparable.
pub fn gradient_rel_err(a: &LossGradient, b: &LossGradient) -> f64 {
    let mut diff_sq = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    let pairs = a
        .d_q_hat
        .iter()
        .zip(&b.d_q_hat)
        .chain(a.d_v_hat.iter().zip(&b.d_v_hat))
        .chain(std::iter::once((&a.d_theta_hat, &b.d_theta_hat)));
    for (x, y) in pairs {
        diff_sq += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    diff_sq.sqrt() / na.sqrt().max(nb.sqrt()).max(1e-6)
}
