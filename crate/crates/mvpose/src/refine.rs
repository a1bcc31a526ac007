//! Iterative pose refinement: estimate, apply, repeat until the estimated
//! residual drops below threshold or the budget runs out.

use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::estimator::{apply_estimate, MatchQuery, PoseEstimator, SceneHandle};
use crate::pose::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinementConfig {
    /// Stop once the estimated residual angle falls below this, degrees.
    pub threshold_deg: f64,
    /// Maximum number of estimator calls per refinement.
    pub max_iterations: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            threshold_deg: 2.0,
            max_iterations: 50,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_deg > 0.0) {
            return Err(Error::InvalidConfig(
                "refinement threshold must be > 0".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "refinement needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// The estimated residual dropped below the threshold.
    Converged,
    /// Budget exhausted; the pose with the smallest estimated residual
    /// (earliest on ties) was returned.
    ExhaustedPickedBest,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::ExhaustedPickedBest => "exhausted_picked_best",
        }
    }
}

/// One estimator call: the pose that was queried and the residual estimate
/// it returned.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RefinementStep {
    pub pose: Pose,
    pub theta_hat_deg: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementOutcome {
    pub pose: Pose,
    pub reason: StopReason,
    /// One entry per estimator call, in call order.
    pub trace: Vec<RefinementStep>,
}

impl RefinementOutcome {
    /// Number of applied pose updates: every call but the last applies one.
    pub fn update_count(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }
}

/// Refine `start` against the scene. Each iteration queries the estimator
/// at the current pose; below-threshold residuals stop at that pose,
/// otherwise the estimated delta is applied and the loop continues.
pub fn refine(
    estimator: &dyn PoseEstimator,
    scene: &SceneHandle,
    start: Pose,
    cam: &CameraIntrinsics,
    config: &RefinementConfig,
) -> Result<RefinementOutcome> {
    config.validate()?;
    let mut pose = start;
    let mut trace = Vec::new();
    for _ in 0..config.max_iterations {
        let out = estimator.estimate(&MatchQuery::analytic(pose, scene), cam)?;
        trace.push(RefinementStep {
            pose,
            theta_hat_deg: out.theta_hat_deg,
        });
        if out.theta_hat_deg < config.threshold_deg {
            return Ok(RefinementOutcome {
                pose,
                reason: StopReason::Converged,
                trace,
            });
        }
        pose = apply_estimate(&pose, &out, cam)?;
    }
    // Exhausted: return the earliest pose with the smallest estimate.
    let mut best = 0;
    for (i, s) in trace.iter().enumerate() {
        if s.theta_hat_deg < trace[best].theta_hat_deg {
            best = i;
        }
    }
    Ok(RefinementOutcome {
        pose: trace[best].pose,
        reason: StopReason::ExhaustedPickedBest,
        trace,
    })
}
