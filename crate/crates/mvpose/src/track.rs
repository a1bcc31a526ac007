//! Frame-to-frame pose tracking with hold, update, and restart decisions.
//!
//! Each frame the tracker measures the estimated residual between its
//! current pose and the new frame:
//!
//! - above the restart threshold the track is considered lost and is
//!   re-acquired from the frame's detection (multi-view initialization
//!   followed by a full refinement),
//! - below the hold threshold the pose is kept bit-identical (no drift
//!   from needless updates),
//! - in between a single estimated delta is applied.
//!
//! Values exactly on a threshold fall through to the update branch.

use serde::{Deserialize, Serialize};

use crate::camera::{infer_translation_from_bbox, BBox, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::estimator::{
    apply_estimate, multi_view_initialize, MatchQuery, PoseEstimator, SceneHandle,
};
use crate::pose::Pose;
use crate::refine::{refine, RefinementConfig};
use crate::render::CanonicalViewSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Below this estimated residual the pose is held unchanged, degrees.
    pub hold_threshold_deg: f64,
    /// Above this estimated residual the track restarts from the frame's
    /// detection, degrees.
    pub restart_threshold_deg: f64,
    /// Refinement budget used at (re)initialization.
    pub refinement: RefinementConfig,
    /// Depth clamp for detection-based translation guesses, meters.
    pub z_range: [f64; 2],
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            hold_threshold_deg: 2.0,
            restart_threshold_deg: 25.0,
            refinement: RefinementConfig::default(),
            z_range: [0.4, 1.6],
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.refinement.validate()?;
        if !(self.hold_threshold_deg > 0.0) {
            return Err(Error::InvalidConfig("hold threshold must be > 0".into()));
        }
        if self.restart_threshold_deg <= self.hold_threshold_deg {
            return Err(Error::InvalidConfig(
                "restart threshold must exceed the hold threshold".into(),
            ));
        }
        if !(self.z_range[0] > 0.0 && self.z_range[1] > self.z_range[0]) {
            return Err(Error::InvalidConfig(
                "z range must satisfy 0 < lo < hi".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackerEvent {
    Held,
    Updated,
    Restarted,
}

impl TrackerEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackerEvent::Held => "held",
            TrackerEvent::Updated => "updated",
            TrackerEvent::Restarted => "restarted",
        }
    }
}

/// One frame of a tracking sequence: the scene in front of the camera and
/// the detector's box for it.
#[derive(Debug, Clone, Copy)]
pub struct TrackingFrame {
    pub true_pose: Pose,
    pub bbox: BBox,
}

/// Tracker output for one frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub event: TrackerEvent,
    /// The residual estimate that drove the event decision.
    pub theta_hat_deg: f64,
    pub pose: Pose,
}

/// Decide and apply one tracking step from `prev_pose` onto `frame`.
pub fn track_step(
    estimator: &dyn PoseEstimator,
    views: &CanonicalViewSet,
    prev_pose: Pose,
    frame: &TrackingFrame,
    diameter_m: f64,
    cam: &CameraIntrinsics,
    config: &TrackerConfig,
) -> Result<(TrackerEvent, f64, Pose)> {
    let scene = SceneHandle::new(frame.true_pose);
    let out = estimator.estimate(&MatchQuery::analytic(prev_pose, &scene), cam)?;
    let theta = out.theta_hat_deg;
    if theta > config.restart_threshold_deg {
        let pose = reacquire(estimator, views, frame, diameter_m, cam, config)?;
        Ok((TrackerEvent::Restarted, theta, pose))
    } else if theta < config.hold_threshold_deg {
        Ok((TrackerEvent::Held, theta, prev_pose))
    } else {
        let pose = apply_estimate(&prev_pose, &out, cam)?;
        Ok((TrackerEvent::Updated, theta, pose))
    }
}

/// Acquire a pose from scratch: translation from the detection box,
/// rotation from multi-view initialization, then a full refinement.
fn reacquire(
    estimator: &dyn PoseEstimator,
    views: &CanonicalViewSet,
    frame: &TrackingFrame,
    diameter_m: f64,
    cam: &CameraIntrinsics,
    config: &TrackerConfig,
) -> Result<Pose> {
    let scene = SceneHandle::new(frame.true_pose);
    let translation = infer_translation_from_bbox(&frame.bbox, diameter_m, cam, config.z_range);
    let init = multi_view_initialize(estimator, views, translation, &scene, cam)?;
    let refined = refine(estimator, &scene, init.pose, cam, &config.refinement)?;
    Ok(refined.pose)
}

/// Track a whole sequence. The pose is acquired from the first frame's
/// detection, then every frame (the first included) runs a normal tracking
/// step against the current pose.
pub fn track_sequence(
    estimator: &dyn PoseEstimator,
    views: &CanonicalViewSet,
    frames: &[TrackingFrame],
    diameter_m: f64,
    cam: &CameraIntrinsics,
    config: &TrackerConfig,
) -> Result<Vec<FrameRecord>> {
    config.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptyInput("tracking frames"));
    }
    let mut pose = reacquire(estimator, views, &frames[0], diameter_m, cam, config)?;
    let mut records = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        let (event, theta, next) =
            track_step(estimator, views, pose, frame, diameter_m, cam, config)?;
        records.push(FrameRecord {
            frame_index: i,
            event,
            theta_hat_deg: theta,
            pose: next,
        });
        pose = next;
    }
    Ok(records)
}
