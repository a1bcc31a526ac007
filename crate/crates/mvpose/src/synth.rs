//! Synthetic scene, dataset, and trajectory generation.
//!
//! Everything here is driven by explicit seeds. Dataset records are
//! generated from per-record derived seeds, so a record's content depends
//! only on `(params.seed, index)` and not on how many records are built,
//! in which order, or on how work is split across threads.

use serde::{Deserialize, Serialize};

use crate::camera::{bbox_from_mask, BBox, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::estimator::Observation;
use crate::exec::par_map_indexed;
use crate::mesh::TriangleMesh;
use crate::pose::{
    relative_rotation, untangle, Pose, RawQuaternion, StandardizationStats, UnitQuaternion, Vec3,
};
use crate::raster::{dilate_mask, Mask};
use crate::render::{render, RenderOutput};
use crate::rng::{
    mix_seed, normal, rng_from_seed, uniform, uniform_01, uniform_u32_inclusive, unit_axis,
};
use crate::track::TrackingFrame;

use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha8Rng;

/// Seed-stream tags, mixed in ahead of any per-item words so the record
/// stream, the statistics pool, and the trajectory stream never collide
/// even under the same base seed.
const STREAM_RECORD: u64 = 0;
const STREAM_STATS: u64 = 1;
const STREAM_TRAJECTORY: u64 = 2;

/// Draw a rotation uniformly distributed over the rotation group.
///
/// Uses the subgroup-algorithm construction from three independent
/// uniforms. The resulting quaternion components have unit norm by
/// construction.
pub fn sample_uniform_rotation(rng: &mut impl RngCore) -> UnitQuaternion {
    let u1 = uniform_01(rng);
    let u2 = uniform_01(rng);
    let u3 = uniform_01(rng);
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let t2 = std::f64::consts::TAU * u2;
    let t3 = std::f64::consts::TAU * u3;
    RawQuaternion::new(t3.cos() * b, t2.sin() * a, t2.cos() * a, t3.sin() * b)
        .normalized()
        .expect("components are on the unit sphere by construction")
}

/// CDF of the rotation angle (radians, in `[0, pi]`) of a uniformly random
/// rotation: `(theta - sin(theta)) / pi`.
pub fn rotation_angle_cdf(theta_rad: f64) -> f64 {
    let t = theta_rad.clamp(0.0, std::f64::consts::PI);
    (t - t.sin()) / std::f64::consts::PI
}

/// Inverse of [`rotation_angle_cdf`] by bisection, radians.
pub fn so3_angle_quantile(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    // 80 halvings take the bracket well below f64 resolution.
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if rotation_angle_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sample a pose with uniform rotation and a translation whose projection
/// lands inside the image with a `margin_frac` border on every side.
///
/// Draw order is fixed: rotation, depth, pixel u, pixel v.
pub fn sample_pose_in_frustum(
    rng: &mut impl RngCore,
    cam: &CameraIntrinsics,
    depth_range: [f64; 2],
    margin_frac: f64,
) -> Pose {
    let rotation = sample_uniform_rotation(rng);
    let z = uniform(rng, depth_range[0], depth_range[1]);
    let (w, h) = (cam.width as f64, cam.height as f64);
    let u = uniform(rng, margin_frac * w, (1.0 - margin_frac) * w);
    let v = uniform(rng, margin_frac * h, (1.0 - margin_frac) * h);
    let translation = cam
        .unproject([u, v], z)
        .expect("sampled depth is positive");
    Pose::new(rotation, translation)
}

/// Perturb a pose by a rotation of uniform angle in `[0, max_rot_deg]`
/// about a uniform axis (left-composed) plus an independent per-component
/// uniform translation offset in `[-max_trans_m, max_trans_m]`.
///
/// Draw order is fixed: axis, angle, then the three translation offsets.
pub fn perturb_pose(
    rng: &mut impl RngCore,
    pose: &Pose,
    max_rot_deg: f64,
    max_trans_m: f64,
) -> Pose {
    let axis = unit_axis(rng);
    let angle = uniform(rng, 0.0, max_rot_deg);
    let delta = UnitQuaternion::from_axis_angle_deg(axis, angle);
    let mut translation = pose.translation;
    for t in translation.iter_mut() {
        *t += uniform(rng, -max_trans_m, max_trans_m);
    }
    Pose::new(delta.compose(&pose.rotation), translation)
}

/// One benchmark scene: the ground truth, a perturbed starting pose, and a
/// simulated detection box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: usize,
    pub true_pose: Pose,
    pub start_pose: Pose,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetParams {
    pub n_samples: usize,
    pub depth_range: [f64; 2],
    /// Border kept free around projected object centers, as a fraction of
    /// each image dimension.
    pub margin_frac: f64,
    pub perturb_rot_deg: f64,
    pub perturb_trans_m: f64,
    /// Standard deviation of the detection edge jitter, pixels.
    pub bbox_jitter_px: f64,
    /// Detection masks are dilated by a square kernel of size uniform in
    /// `[0, mask_dilate_max]`, mimicking segmentation errors.
    pub mask_dilate_max: usize,
    pub seed: u64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self {
            n_samples: 200,
            depth_range: [0.4, 1.6],
            margin_frac: 0.1,
            perturb_rot_deg: 30.0,
            perturb_trans_m: 0.05,
            bbox_jitter_px: 2.0,
            mask_dilate_max: 40,
            seed: 42,
        }
    }
}

impl DatasetParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be > 0".into()));
        }
        if !(self.depth_range[0] > 0.0 && self.depth_range[1] > self.depth_range[0]) {
            return Err(Error::InvalidConfig(
                "depth range must satisfy 0 < lo < hi".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.margin_frac) {
            return Err(Error::InvalidConfig(
                "margin_frac must be in [0, 0.5)".into(),
            ));
        }
        if self.perturb_rot_deg < 0.0 || self.perturb_rot_deg > 180.0 {
            return Err(Error::InvalidConfig(
                "perturb_rot_deg must be in [0, 180]".into(),
            ));
        }
        if self.perturb_trans_m < 0.0 {
            return Err(Error::InvalidConfig(
                "perturb_trans_m must be >= 0".into(),
            ));
        }
        if self.bbox_jitter_px < 0.0 {
            return Err(Error::InvalidConfig(
                "bbox_jitter_px must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Turn a rendering into a detector-style observation: the mask dilated by
/// a random square kernel (size uniform in `[0, mask_dilate_max]`), and the
/// tight box of the original mask with independent Gaussian jitter on each
/// edge, clamped back into the image with positive extent.
///
/// Draw order is fixed: kernel size, then x0, y0, x1, y1 jitter.
pub fn simulate_detection(
    rng: &mut impl RngCore,
    out: &RenderOutput,
    mask_dilate_max: usize,
    jitter_px: f64,
) -> Result<(BBox, Mask)> {
    let k = uniform_u32_inclusive(rng, mask_dilate_max as u32) as usize;
    let dilated = dilate_mask(&out.mask, k);
    let bbox = bbox_from_mask(&out.mask)?;
    let mut x0 = bbox.x + normal(rng, 0.0, jitter_px);
    let mut y0 = bbox.y + normal(rng, 0.0, jitter_px);
    let mut x1 = bbox.x + bbox.w + normal(rng, 0.0, jitter_px);
    let mut y1 = bbox.y + bbox.h + normal(rng, 0.0, jitter_px);
    let (w, h) = (out.mask.width as f64, out.mask.height as f64);
    x0 = x0.clamp(0.0, w - 1.0);
    y0 = y0.clamp(0.0, h - 1.0);
    x1 = x1.clamp(x0 + 1.0, w);
    y1 = y1.clamp(y0 + 1.0, h);
    Ok((BBox::new(x0, y0, x1 - x0, y1 - y0), dilated))
}

/// A fully rendered dataset record: the scene plus everything a matcher
/// would see for it.
#[derive(Debug, Clone)]
pub struct RealizedRecord {
    pub record: SceneRecord,
    /// Full-frame rendering of the true pose.
    pub render: RenderOutput,
    /// Detection mask after the random dilation.
    pub detection_mask: Mask,
    /// Zoomed crop of the rendering under the detection box.
    pub observation: Observation,
}

fn record_rng(params: &DatasetParams, index: usize) -> ChaCha8Rng {
    rng_from_seed(mix_seed(params.seed, &[STREAM_RECORD, index as u64]))
}

/// Build record `index` of the dataset described by `params`.
///
/// The record is a pure function of `(params, index)`: its RNG is seeded
/// from those alone.
pub fn generate_record(
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    params: &DatasetParams,
    index: usize,
) -> Result<SceneRecord> {
    let (record, _) = scene_and_render(mesh, cam, params, index)?;
    Ok(record)
}

/// Like [`generate_record`] but keeps the rendering and derives the zoomed
/// observation. Produces the identical [`SceneRecord`] bit for bit.
pub fn realize_record(
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    params: &DatasetParams,
    index: usize,
) -> Result<RealizedRecord> {
    let (record, (out, detection_mask)) = scene_and_render(mesh, cam, params, index)?;
    let observation = Observation::observe(&out.image, &detection_mask, &record.bbox)?;
    Ok(RealizedRecord {
        record,
        render: out,
        detection_mask,
        observation,
    })
}

fn scene_and_render(
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    params: &DatasetParams,
    index: usize,
) -> Result<(SceneRecord, (RenderOutput, Mask))> {
    let mut rng = record_rng(params, index);
    let true_pose = sample_pose_in_frustum(&mut rng, cam, params.depth_range, params.margin_frac);
    let start_pose = perturb_pose(
        &mut rng,
        &true_pose,
        params.perturb_rot_deg,
        params.perturb_trans_m,
    );
    let out = render(mesh, &true_pose, cam)?;
    let (bbox, detection_mask) =
        simulate_detection(&mut rng, &out, params.mask_dilate_max, params.bbox_jitter_px)?;
    Ok((
        SceneRecord {
            id: index,
            true_pose,
            start_pose,
            bbox,
        },
        (out, detection_mask),
    ))
}

/// Build the full dataset. Records are independent, so generation is
/// data-parallel when the `parallel` feature is active.
pub fn generate_dataset(
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    params: &DatasetParams,
) -> Result<Vec<SceneRecord>> {
    params.validate()?;
    par_map_indexed(params.n_samples, |i| generate_record(mesh, cam, params, i))
        .into_iter()
        .collect()
}

/// A single injected rotation discontinuity in a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpSpec {
    /// Frame index that takes the jump instead of a normal step. Frame 0
    /// is the unstepped start, so the index must be at least 1.
    pub frame: usize,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryParams {
    pub n_frames: usize,
    /// Smallest per-frame rotation step, degrees.
    pub min_step_deg: f64,
    /// Largest per-frame rotation step, degrees.
    pub max_step_deg: f64,
    /// Per-component translation step bound, meters.
    pub trans_step_m: f64,
    /// Frames that take a discontinuous rotation of exactly the listed
    /// angle about a random axis.
    pub jumps: Vec<JumpSpec>,
    pub depth_range: [f64; 2],
    pub margin_frac: f64,
    pub bbox_jitter_px: f64,
    pub mask_dilate_max: usize,
    pub seed: u64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            n_frames: 100,
            min_step_deg: 2.5,
            max_step_deg: 4.0,
            trans_step_m: 0.01,
            jumps: Vec::new(),
            depth_range: [0.4, 1.6],
            margin_frac: 0.1,
            bbox_jitter_px: 2.0,
            mask_dilate_max: 40,
            seed: 7,
        }
    }
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::InvalidConfig("n_frames must be > 0".into()));
        }
        if !(self.min_step_deg >= 0.0 && self.max_step_deg >= self.min_step_deg) {
            return Err(Error::InvalidConfig(
                "rotation steps must satisfy 0 <= min <= max".into(),
            ));
        }
        if self.max_step_deg >= WAYPOINT_MIN_DEG {
            return Err(Error::InvalidConfig(format!(
                "max_step_deg must be below {WAYPOINT_MIN_DEG} so a full step always fits"
            )));
        }
        if self.trans_step_m < 0.0 {
            return Err(Error::InvalidConfig("trans_step_m must be >= 0".into()));
        }
        for (i, jump) in self.jumps.iter().enumerate() {
            if jump.frame == 0 || jump.frame >= self.n_frames {
                return Err(Error::InvalidConfig(format!(
                    "jump frame {} out of range 1..{}",
                    jump.frame, self.n_frames
                )));
            }
            if !(jump.angle_deg >= 0.0 && jump.angle_deg <= 180.0) {
                return Err(Error::InvalidConfig(
                    "jump angle must be in [0, 180]".into(),
                ));
            }
            if self.jumps[..i].iter().any(|j| j.frame == jump.frame) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate jump at frame {}",
                    jump.frame
                )));
            }
        }
        if !(self.depth_range[0] > 0.0 && self.depth_range[1] > self.depth_range[0]) {
            return Err(Error::InvalidConfig(
                "depth range must satisfy 0 < lo < hi".into(),
            ));
        }
        if !(0.0..0.5).contains(&self.margin_frac) {
            return Err(Error::InvalidConfig(
                "margin_frac must be in [0, 0.5)".into(),
            ));
        }
        if self.bbox_jitter_px < 0.0 {
            return Err(Error::InvalidConfig(
                "bbox_jitter_px must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Waypoints are resampled until they are at least this far from the
/// current rotation, so a full step toward one never overshoots.
const WAYPOINT_MIN_DEG: f64 = 30.0;

fn far_waypoint(rng: &mut ChaCha8Rng, from: &UnitQuaternion) -> UnitQuaternion {
    loop {
        let q = sample_uniform_rotation(rng);
        if from.angle_to(&q) >= WAYPOINT_MIN_DEG {
            return q;
        }
    }
}

/// Generate a smooth camera-frame trajectory of the object, with a
/// simulated detection for every frame.
///
/// The rotation chases randomly resampled waypoints along geodesics, so
/// every frame-to-frame rotation step is exactly the drawn step size in
/// `[min_step_deg, max_step_deg]`, except at listed jump frames, which
/// rotate by exactly their angle about a random axis. The translation
/// takes a per-component step bounded by `trans_step_m` biased to keep the
/// object near the depth range and image margins. Frame 0 is the starting
/// pose with no step applied.
pub fn generate_trajectory(
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    params: &TrajectoryParams,
) -> Result<Vec<TrackingFrame>> {
    params.validate()?;
    let mut rng = rng_from_seed(mix_seed(params.seed, &[STREAM_TRAJECTORY]));
    let mut pose = sample_pose_in_frustum(&mut rng, cam, params.depth_range, params.margin_frac);
    let mut waypoint = far_waypoint(&mut rng, &pose.rotation);
    let mut frames = Vec::with_capacity(params.n_frames);
    for i in 0..params.n_frames {
        if i > 0 {
            pose = step_pose(&mut rng, &pose, &mut waypoint, cam, params, i);
        }
        let out = render(mesh, &pose, cam)?;
        let (bbox, _) =
            simulate_detection(&mut rng, &out, params.mask_dilate_max, params.bbox_jitter_px)?;
        frames.push(TrackingFrame {
            true_pose: pose,
            bbox,
        });
    }
    Ok(frames)
}

fn step_pose(
    rng: &mut ChaCha8Rng,
    pose: &Pose,
    waypoint: &mut UnitQuaternion,
    cam: &CameraIntrinsics,
    params: &TrajectoryParams,
    frame: usize,
) -> Pose {
    let jump = params.jumps.iter().find(|j| j.frame == frame);
    let rotation = if let Some(jump) = jump {
        let axis = unit_axis(rng);
        let delta = UnitQuaternion::from_axis_angle_deg(axis, jump.angle_deg);
        let rotation = delta.compose(&pose.rotation);
        // The jump abandons the old heading; pick a fresh waypoint.
        *waypoint = far_waypoint(rng, &rotation);
        rotation
    } else {
        let step = uniform(rng, params.min_step_deg, params.max_step_deg);
        let mut remaining = pose.rotation.angle_to(waypoint);
        if remaining < step {
            *waypoint = far_waypoint(rng, &pose.rotation);
            remaining = pose.rotation.angle_to(waypoint);
        }
        pose.rotation.slerp(waypoint, step / remaining)
    };
    // Random walk, then pull toward the frustum, but never move any
    // component by more than the step bound in one frame. Both endpoints
    // of the clamp keep z inside the depth range, so the result does too.
    let s = params.trans_step_m;
    let mut pulled = pose.translation;
    for t in pulled.iter_mut() {
        *t += uniform(rng, -s, s);
    }
    pull_into_frustum(&mut pulled, cam, params.depth_range, params.margin_frac);
    let mut translation = pose.translation;
    for i in 0..3 {
        translation[i] += (pulled[i] - pose.translation[i]).clamp(-s, s);
    }
    Pose::new(rotation, translation)
}

/// Clamp depth into range and the projected center into the margins,
/// adjusting x and y at the clamped depth.
fn pull_into_frustum(
    translation: &mut Vec3,
    cam: &CameraIntrinsics,
    depth_range: [f64; 2],
    margin_frac: f64,
) {
    translation[2] = translation[2].clamp(depth_range[0], depth_range[1]);
    let uv = cam
        .project(*translation)
        .expect("depth was clamped positive");
    let (w, h) = (cam.width as f64, cam.height as f64);
    let u = uv[0].clamp(margin_frac * w, (1.0 - margin_frac) * w);
    let v = uv[1].clamp(margin_frac * h, (1.0 - margin_frac) * h);
    let back = cam
        .unproject([u, v], translation[2])
        .expect("depth was clamped positive");
    *translation = back;
}

/// Draw a pool of (relative rotation, untangled translation) samples from
/// the dataset distribution and fit standardization statistics to it.
///
/// The pool uses its own seed stream, so it never shares draws with the
/// dataset records themselves.
pub fn standardization_pool(
    cam: &CameraIntrinsics,
    params: &DatasetParams,
    n: usize,
) -> Result<StandardizationStats> {
    if n == 0 {
        return Err(Error::EmptyInput("standardization pool"));
    }
    let mut rng = rng_from_seed(mix_seed(params.seed, &[STREAM_STATS]));
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let true_pose =
            sample_pose_in_frustum(&mut rng, cam, params.depth_range, params.margin_frac);
        let start_pose = perturb_pose(
            &mut rng,
            &true_pose,
            params.perturb_rot_deg,
            params.perturb_trans_m,
        );
        let q = relative_rotation(&start_pose, &true_pose).components();
        let v = untangle(&start_pose, &true_pose, cam)?.components();
        samples.push([q[0], q[1], q[2], q[3], v[0], v[1], v[2]]);
    }
    StandardizationStats::from_samples(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriangleMesh;

    #[test]
    fn sampled_rotations_are_unit() {
        let mut rng = rng_from_seed(11);
        for _ in 0..200 {
            let q = sample_uniform_rotation(&mut rng);
            let c = q.components();
            let norm: f64 = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    /// For uniform rotations the squared inner product against any fixed
    /// unit quaternion has expectation 1/4.
    #[test]
    fn sampled_rotations_have_quarter_mean_square_dot() {
        let mut rng = rng_from_seed(12);
        let q0 = UnitQuaternion::from_axis_angle_deg([0.3, 0.5, 0.8], 57.0);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| {
                let d = sample_uniform_rotation(&mut rng).dot(&q0);
                d * d
            })
            .sum::<f64>()
            / n as f64;
        assert!(
            (mean - 0.25).abs() < 0.01,
            "mean square dot {mean} should be near 0.25"
        );
    }

    /// Kolmogorov-Smirnov test of the sampled rotation angles against the
    /// closed-form angle CDF. The critical value for n = 1000 at the 1%
    /// level is 1.628 / sqrt(n) = 0.0515.
    #[test]
    fn sampled_rotation_angles_match_cdf() {
        let mut rng = rng_from_seed(13);
        let n = 1000;
        let mut angles: Vec<f64> = (0..n)
            .map(|_| {
                sample_uniform_rotation(&mut rng)
                    .rotation_angle_deg()
                    .to_radians()
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, theta) in angles.iter().enumerate() {
            let f = rotation_angle_cdf(*theta);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            d = d.max((f - lo).abs()).max((hi - f).abs());
        }
        assert!(d < 0.0515, "KS statistic {d} exceeds the 1% critical value");
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let theta = so3_angle_quantile(p);
            assert!((rotation_angle_cdf(theta) - p).abs() < 1e-12);
        }
        let median = so3_angle_quantile(0.5);
        assert!(median > 1.0 && median < std::f64::consts::PI);
    }

    #[test]
    fn frustum_samples_respect_margins_and_depth() {
        let cam = CameraIntrinsics::default();
        let mut rng = rng_from_seed(14);
        let n = 1000;
        let mut zs = Vec::with_capacity(n);
        for _ in 0..n {
            let pose = sample_pose_in_frustum(&mut rng, &cam, [0.4, 1.6], 0.1);
            let z = pose.translation[2];
            assert!((0.4..=1.6).contains(&z));
            let uv = cam.project(pose.translation).unwrap();
            assert!(uv[0] >= 64.0 - 1e-9 && uv[0] <= 576.0 + 1e-9);
            assert!(uv[1] >= 48.0 - 1e-9 && uv[1] <= 432.0 + 1e-9);
            zs.push(z);
        }
        // Depth is uniform in range: KS against the linear CDF.
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d: f64 = 0.0;
        for (i, z) in zs.iter().enumerate() {
            let f = (z - 0.4) / 1.2;
            d = d.max((f - i as f64 / n as f64).abs())
                .max(((i + 1) as f64 / n as f64 - f).abs());
        }
        assert!(d < 0.0515, "depth KS statistic {d}");
    }

    #[test]
    fn frustum_samples_always_render_nonempty() {
        let cam = CameraIntrinsics::default();
        let mesh = TriangleMesh::cube(0.1);
        let mut rng = rng_from_seed(15);
        for _ in 0..200 {
            let pose = sample_pose_in_frustum(&mut rng, &cam, [0.4, 1.6], 0.1);
            let out = render(&mesh, &pose, &cam).unwrap();
            assert!(out.mask.count() > 0);
        }
    }

    #[test]
    fn perturbation_respects_bounds() {
        let cam = CameraIntrinsics::default();
        let mut rng = rng_from_seed(16);
        let mut max_seen: f64 = 0.0;
        for _ in 0..500 {
            let pose = sample_pose_in_frustum(&mut rng, &cam, [0.4, 1.6], 0.1);
            let moved = perturb_pose(&mut rng, &pose, 30.0, 0.05);
            let angle = pose.rotation.angle_to(&moved.rotation);
            assert!(angle <= 30.0 + 1e-9);
            max_seen = max_seen.max(angle);
            for i in 0..3 {
                assert!((pose.translation[i] - moved.translation[i]).abs() <= 0.05 + 1e-12);
            }
        }
        // The angle is uniform in [0, 30]; 500 draws all below 29 would be
        // a (29/30)^500 ~ 5e-8 event.
        assert!(max_seen > 29.0, "empirical max angle {max_seen}");
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let pose = Pose::new(
            UnitQuaternion::from_axis_angle_deg([0.1, 0.9, 0.3], 40.0),
            [0.1, -0.05, 0.9],
        );
        let mut rng = rng_from_seed(17);
        let moved = perturb_pose(&mut rng, &pose, 0.0, 0.0);
        assert!(pose.rotation.angle_to(&moved.rotation) < 1e-9);
        assert_eq!(pose.translation, moved.translation);
    }

    #[test]
    fn records_are_reproducible_and_order_independent() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let params = DatasetParams {
            n_samples: 6,
            ..DatasetParams::default()
        };
        let all = generate_dataset(&mesh, &cam, &params).unwrap();
        assert_eq!(all.len(), 6);
        // Rebuilding any single record out of context reproduces it bit
        // for bit.
        for (i, record) in all.iter().enumerate() {
            assert_eq!(record.id, i);
            let alone = generate_record(&mesh, &cam, &params, i).unwrap();
            assert_eq!(&alone, record);
        }
    }

    #[test]
    fn realized_record_matches_and_observes_at_zoom_size() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let params = DatasetParams::default();
        let realized = realize_record(&mesh, &cam, &params, 3).unwrap();
        let plain = generate_record(&mesh, &cam, &params, 3).unwrap();
        assert_eq!(realized.record, plain);
        assert_eq!(realized.observation.image.width, crate::camera::ZOOM_WIDTH);
        assert_eq!(realized.observation.image.height, crate::camera::ZOOM_HEIGHT);
        // The dilated detection mask covers the rendered mask.
        for y in 0..realized.render.mask.height {
            for x in 0..realized.render.mask.width {
                if realized.render.mask.get(x, y) {
                    assert!(realized.detection_mask.get(x, y));
                }
            }
        }
    }

    #[test]
    fn different_seeds_give_different_records() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let a = generate_record(&mesh, &cam, &DatasetParams::default(), 0).unwrap();
        let b = generate_record(
            &mesh,
            &cam,
            &DatasetParams {
                seed: 43,
                ..DatasetParams::default()
            },
            0,
        )
        .unwrap();
        assert_ne!(a.true_pose, b.true_pose);
    }

    #[test]
    fn detection_without_noise_is_exact() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let pose = Pose::new(
            UnitQuaternion::from_axis_angle_deg([0.2, 0.8, 0.1], 30.0),
            [0.0, 0.0, 0.8],
        );
        let out = render(&mesh, &pose, &cam).unwrap();
        let mut rng = rng_from_seed(18);
        let (bbox, mask) = simulate_detection(&mut rng, &out, 0, 0.0).unwrap();
        assert_eq!(bbox, bbox_from_mask(&out.mask).unwrap());
        assert_eq!(mask, out.mask);
    }

    #[test]
    fn detection_bbox_ignores_dilation() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let pose = Pose::new(UnitQuaternion::identity(), [0.0, 0.0, 0.9]);
        let out = render(&mesh, &pose, &cam).unwrap();
        let tight = bbox_from_mask(&out.mask).unwrap();
        let mut rng = rng_from_seed(19);
        for _ in 0..10 {
            let (bbox, mask) = simulate_detection(&mut rng, &out, 40, 0.0).unwrap();
            // The box tracks the original mask even when the returned mask
            // is dilated.
            assert_eq!(bbox, tight);
            assert!(mask.count() >= out.mask.count());
        }
    }

    #[test]
    fn jittered_detection_keeps_reasonable_overlap() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        // Close-up pose: the object spans well over 100 px.
        let pose = Pose::new(
            UnitQuaternion::from_axis_angle_deg([0.3, 0.7, 0.2], 35.0),
            [0.0, 0.0, 0.45],
        );
        let out = render(&mesh, &pose, &cam).unwrap();
        let tight = bbox_from_mask(&out.mask).unwrap();
        assert!(tight.w >= 100.0 && tight.h >= 100.0);
        let mut rng = rng_from_seed(20);
        for _ in 0..50 {
            let (bbox, _) = simulate_detection(&mut rng, &out, 0, 5.0).unwrap();
            let ix = (bbox.x + bbox.w).min(tight.x + tight.w) - bbox.x.max(tight.x);
            let iy = (bbox.y + bbox.h).min(tight.y + tight.h) - bbox.y.max(tight.y);
            let inter = ix.max(0.0) * iy.max(0.0);
            let union = bbox.w * bbox.h + tight.w * tight.h - inter;
            assert!(inter / union >= 0.5, "IoU {} too low", inter / union);
        }
    }

    #[test]
    fn trajectory_steps_stay_in_bounds() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let params = TrajectoryParams {
            n_frames: 40,
            ..TrajectoryParams::default()
        };
        let frames = generate_trajectory(&mesh, &cam, &params).unwrap();
        assert_eq!(frames.len(), 40);
        for w in frames.windows(2) {
            let step = w[0]
                .true_pose
                .rotation
                .angle_to(&w[1].true_pose.rotation);
            assert!(
                step >= params.min_step_deg - 1e-9 && step <= params.max_step_deg + 1e-9,
                "step {step} outside [{}, {}]",
                params.min_step_deg,
                params.max_step_deg
            );
            for i in 0..3 {
                let dt =
                    (w[1].true_pose.translation[i] - w[0].true_pose.translation[i]).abs();
                assert!(dt <= params.trans_step_m + 1e-12);
            }
        }
        for f in &frames {
            let z = f.true_pose.translation[2];
            assert!((params.depth_range[0]..=params.depth_range[1]).contains(&z));
        }
    }

    #[test]
    fn single_frame_trajectory_is_just_the_start() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let params = TrajectoryParams {
            n_frames: 1,
            ..TrajectoryParams::default()
        };
        let frames = generate_trajectory(&mesh, &cam, &params).unwrap();
        assert_eq!(frames.len(), 1);
    }

    #[test]
    fn trajectory_jump_has_exact_angle() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let params = TrajectoryParams {
            n_frames: 12,
            jumps: vec![JumpSpec {
                frame: 5,
                angle_deg: 30.0,
            }],
            ..TrajectoryParams::default()
        };
        let frames = generate_trajectory(&mesh, &cam, &params).unwrap();
        let step = frames[4]
            .true_pose
            .rotation
            .angle_to(&frames[5].true_pose.rotation);
        assert!((step - 30.0).abs() < 1e-9);
        // Frames around the jump keep normal step sizes.
        let before = frames[3]
            .true_pose
            .rotation
            .angle_to(&frames[4].true_pose.rotation);
        let after = frames[5]
            .true_pose
            .rotation
            .angle_to(&frames[6].true_pose.rotation);
        for step in [before, after] {
            assert!(step >= params.min_step_deg - 1e-9 && step <= params.max_step_deg + 1e-9);
        }
    }

    #[test]
    fn trajectory_is_reproducible() {
        let mesh = TriangleMesh::cube(0.1);
        let cam = CameraIntrinsics::default();
        let params = TrajectoryParams {
            n_frames: 8,
            ..TrajectoryParams::default()
        };
        let a = generate_trajectory(&mesh, &cam, &params).unwrap();
        let b = generate_trajectory(&mesh, &cam, &params).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.true_pose, fb.true_pose);
            assert_eq!(fa.bbox, fb.bbox);
        }
    }

    #[test]
    fn standardization_pool_is_usable() {
        let cam = CameraIntrinsics::default();
        let stats = standardization_pool(&cam, &DatasetParams::default(), 2000).unwrap();
        stats.validate().unwrap();
        // Relative rotations up to 30 degrees keep w near 1 and the
        // imaginary parts near 0.
        assert!(stats.mean[0] > 0.9);
        for i in 1..4 {
            assert!(stats.mean[i].abs() < 0.1);
        }
        for s in stats.std.iter() {
            assert!(*s > 0.0);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        for params in [
            DatasetParams {
                n_samples: 0,
                ..DatasetParams::default()
            },
            DatasetParams {
                depth_range: [0.0, 1.0],
                ..DatasetParams::default()
            },
            DatasetParams {
                margin_frac: 0.5,
                ..DatasetParams::default()
            },
            DatasetParams {
                bbox_jitter_px: -1.0,
                ..DatasetParams::default()
            },
        ] {
            assert!(params.validate().is_err());
        }
        for params in [
            TrajectoryParams {
                n_frames: 0,
                ..TrajectoryParams::default()
            },
            TrajectoryParams {
                min_step_deg: 5.0,
                max_step_deg: 4.0,
                ..TrajectoryParams::default()
            },
            TrajectoryParams {
                max_step_deg: 31.0,
                ..TrajectoryParams::default()
            },
            TrajectoryParams {
                jumps: vec![JumpSpec {
                    frame: 0,
                    angle_deg: 30.0,
                }],
                ..TrajectoryParams::default()
            },
            TrajectoryParams {
                n_frames: 10,
                jumps: vec![
                    JumpSpec {
                        frame: 4,
                        angle_deg: 30.0,
                    },
                    JumpSpec {
                        frame: 4,
                        angle_deg: 10.0,
                    },
                ],
                ..TrajectoryParams::default()
            },
            TrajectoryParams {
                depth_range: [1.0, 0.4],
                ..TrajectoryParams::default()
            },
        ] {
            assert!(params.validate().is_err());
        }
    }
}
