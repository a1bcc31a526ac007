//! Pose-difference estimators and multi-view initialization.
//!
//! An estimator answers one question: given a rendered guess of the object
//! pose and an observation of the target, what relative pose (rotation,
//! untangled translation) moves the guess onto the target, and how large is
//! the rotation residual `theta_hat`?
//!
//! The estimators here are analytic oracles: they read the ground truth
//! through an opaque [`SceneHandle`] and corrupt it with configurable,
//! seeded noise. They expose the exact interface a learned estimator would
//! (observation in, relative pose out), so the refinement and tracking
//! layers above cannot tell the difference.
//!
//! Determinism: an estimate is a pure function of the query and the noise
//! seed. The per-call RNG stream is derived by hashing the seed with the
//! query poses, so call order and thread scheduling cannot change results.

use serde::{Deserialize, Serialize};

use crate::camera::{expand_bbox_to_ratio, zoom_crop, zoom_mask, BBox, CameraIntrinsics, ZoomTransform, ZOOM_HEIGHT, ZOOM_WIDTH};
use crate::error::{Error, Result};
use crate::pose::{
    entangle, relative_rotation, untangle, Pose, RawQuaternion, UnitQuaternion, UntangledDelta,
    Vec3,
};
use crate::raster::{Image, Mask};
use crate::render::CanonicalViewSet;
use crate::rng::{mix_seed, normal, rng_from_seed, unit_axis};

/// A zoomed view of the target object: always [`ZOOM_WIDTH`] x
/// [`ZOOM_HEIGHT`], plus the transform that produced it.
#[derive(Debug, Clone)]
pub struct Observation {
    pub image: Image,
    pub mask: Mask,
    pub transform: ZoomTransform,
}

impl Observation {
    pub fn new(image: Image, mask: Mask, transform: ZoomTransform) -> Result<Self> {
        if image.width != ZOOM_WIDTH || image.height != ZOOM_HEIGHT {
            return Err(Error::InvalidConfig(format!(
                "observation image must be {ZOOM_WIDTH}x{ZOOM_HEIGHT}, got {}x{}",
                image.width, image.height
            )));
        }
        if mask.width != ZOOM_WIDTH || mask.height != ZOOM_HEIGHT {
            return Err(Error::InvalidConfig(format!(
                "observation mask must be {ZOOM_WIDTH}x{ZOOM_HEIGHT}, got {}x{}",
                mask.width, mask.height
            )));
        }
        Ok(Self {
            image,
            mask,
            transform,
        })
    }

    /// Build an observation from a full-frame image and a detection box:
    /// grow the box to the zoom aspect ratio and crop.
    pub fn observe(image: &Image, mask: &Mask, bbox: &BBox) -> Result<Self> {
        let expanded = expand_bbox_to_ratio(bbox, image.width as u32, image.height as u32)?;
        let (crop, transform) = zoom_crop(image, &expanded)?;
        let crop_mask = zoom_mask(mask, &expanded)?;
        Self::new(crop, crop_mask, transform)
    }
}

/// Opaque ground-truth carrier. Analytic estimators read the true pose from
/// it; everything else should treat it as an identifier for "the scene in
/// front of the camera".
#[derive(Debug, Clone, Copy)]
pub struct SceneHandle {
    true_pose: Pose,
}

impl SceneHandle {
    pub fn new(true_pose: Pose) -> Self {
        Self { true_pose }
    }

    pub fn ground_truth(&self) -> Pose {
        self.true_pose
    }
}

/// One estimation request: the pose the source view was rendered at, plus
/// whatever the estimator may look at.
#[derive(Debug, Clone, Copy)]
pub struct MatchQuery<'a> {
    pub rendered_pose: Pose,
    pub observation: Option<&'a Observation>,
    pub scene: Option<&'a SceneHandle>,
}

impl<'a> MatchQuery<'a> {
    pub fn analytic(rendered_pose: Pose, scene: &'a SceneHandle) -> Self {
        Self {
            rendered_pose,
            observation: None,
            scene: Some(scene),
        }
    }
}

/// A relative-pose estimate. The rotation is raw: consumers normalize it
/// before applying, and the matching losses penalize the norm deviation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub rotation: RawQuaternion,
    pub translation: UntangledDelta,
    /// Estimated rotation-residual angle between source and target, deg.
    pub theta_hat_deg: f64,
}

/// Noise applied by the oracle estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Std of the rotation noise angle, degrees.
    pub sigma_rot_deg: f64,
    /// Std of the untangled translation noise, per component.
    pub sigma_trans: f64,
    /// Std of the residual-angle estimate noise, degrees.
    pub sigma_theta_deg: f64,
    /// Scale all noise by `theta_true / 45 + 0.1`: estimates degrade for
    /// large viewpoint changes and stay crisp near the target.
    pub proportional: bool,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_rot_deg: 0.0,
            sigma_trans: 0.0,
            sigma_theta_deg: 0.0,
            proportional: false,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn is_noiseless(&self) -> bool {
        self.sigma_rot_deg == 0.0 && self.sigma_trans == 0.0 && self.sigma_theta_deg == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_rot_deg < 0.0 || self.sigma_trans < 0.0 || self.sigma_theta_deg < 0.0 {
            return Err(Error::InvalidConfig("noise sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

pub trait PoseEstimator: Send + Sync {
    fn estimate(&self, query: &MatchQuery, cam: &CameraIntrinsics) -> Result<EstimatorOutput>;

    fn name(&self) -> &str;
}

/// Analytic estimator: moves a fraction `gamma` of the way to the ground
/// truth and adds seeded Gaussian noise.
///
/// With `gamma = 1` and zero noise it lands exactly; with `gamma = 0.5` the
/// residual halves every call, which gives refinement loops a precisely
/// predictable contraction to test against.
#[derive(Debug, Clone, Copy)]
pub struct OracleEstimator {
    pub gamma: f64,
    pub noise: NoiseModel,
    name: &'static str,
}

impl OracleEstimator {
    pub fn new(gamma: f64, noise: NoiseModel) -> Self {
        Self {
            gamma,
            noise,
            name: "oracle",
        }
    }

    fn named(gamma: f64, noise: NoiseModel, name: &'static str) -> Self {
        Self { gamma, noise, name }
    }

    fn call_seed(&self, src: &Pose, tgt: &Pose) -> u64 {
        let mut words = Vec::with_capacity(14);
        for p in [src, tgt] {
            for c in p.rotation.components() {
                words.push(c.to_bits());
            }
            for c in p.translation {
                words.push(c.to_bits());
            }
        }
        mix_seed(self.noise.seed, &words)
    }
}

impl PoseEstimator for OracleEstimator {
    fn estimate(&self, query: &MatchQuery, cam: &CameraIntrinsics) -> Result<EstimatorOutput> {
        let scene = query.scene.ok_or(Error::MissingSceneHandle)?;
        let src = query.rendered_pose;
        let tgt = scene.ground_truth();

        let delta_rot = relative_rotation(&src, &tgt);
        let theta_true = src.rotation.angle_to(&tgt.rotation);
        let v_true = untangle(&src, &tgt, cam)?;

        let mut rng = rng_from_seed(self.call_seed(&src, &tgt));
        let scale = if self.noise.proportional {
            theta_true / 45.0 + 0.1
        } else {
            1.0
        };

        // Fixed draw order regardless of sigma values keeps the stream
        // layout stable across noise configurations.
        let axis = unit_axis(&mut rng);
        let noise_angle = normal(&mut rng, 0.0, self.noise.sigma_rot_deg * scale);
        let vn = [
            normal(&mut rng, 0.0, self.noise.sigma_trans * scale),
            normal(&mut rng, 0.0, self.noise.sigma_trans * scale),
            normal(&mut rng, 0.0, self.noise.sigma_trans * scale),
        ];
        let theta_noise = normal(&mut rng, 0.0, self.noise.sigma_theta_deg * scale);

        let step = UnitQuaternion::identity().slerp(&delta_rot, self.gamma);
        let rotation = if noise_angle == 0.0 {
            step
        } else {
            UnitQuaternion::from_axis_angle_deg(axis, noise_angle).compose(&step)
        };
        let translation = UntangledDelta::new(
            self.gamma * v_true.vx + vn[0],
            self.gamma * v_true.vy + vn[1],
            self.gamma * v_true.vz + vn[2],
        );
        let theta_hat_deg = (theta_true + theta_noise).max(0.0);

        Ok(EstimatorOutput {
            rotation: RawQuaternion::from(rotation),
            translation,
            theta_hat_deg,
        })
    }

    fn name(&self) -> &str {
        self.name
    }
}

/// Named estimator presets.
///
/// - `"oracle"`: full step (`gamma = 1`), noise as configured.
/// - `"contraction"`: half step (`gamma = 0.5`), noise as configured.
/// - `"noisy-proportional"`: full step with proportional noise forced on.
pub fn estimator_from_name(name: &str, noise: NoiseModel) -> Result<Box<dyn PoseEstimator>> {
    noise.validate()?;
    match name {
        "oracle" => Ok(Box::new(OracleEstimator::named(1.0, noise, "oracle"))),
        "contraction" => Ok(Box::new(OracleEstimator::named(0.5, noise, "contraction"))),
        "noisy-proportional" => Ok(Box::new(OracleEstimator::named(
            1.0,
            NoiseModel {
                proportional: true,
                ..noise
            },
            "noisy-proportional",
        ))),
        other => Err(Error::UnknownEstimator(other.to_string())),
    }
}

/// Normalize and apply an estimate to a pose.
pub fn apply_estimate(pose: &Pose, out: &EstimatorOutput, cam: &CameraIntrinsics) -> Result<Pose> {
    let rot = out.rotation.normalized()?;
    entangle(pose, &rot, &out.translation, cam)
}

/// Outcome of multi-view initialization.
#[derive(Debug, Clone)]
pub struct MultiViewInit {
    /// The winning candidate: the canonical rotation at the guessed
    /// translation, before any refinement.
    pub pose: Pose,
    pub view_index: usize,
    /// The winner's estimated residual.
    pub theta_hat_deg: f64,
    /// Estimated residual per canonical view, in view order.
    pub per_view_theta: Vec<f64>,
}

/// Query the estimator once per canonical view and keep the view with the
/// smallest estimated residual (first wins ties).
pub fn multi_view_initialize(
    estimator: &dyn PoseEstimator,
    views: &CanonicalViewSet,
    translation: Vec3,
    scene: &SceneHandle,
    cam: &CameraIntrinsics,
) -> Result<MultiViewInit> {
    if views.is_empty() {
        return Err(Error::EmptyInput("canonical view set"));
    }
    let mut per_view_theta = Vec::with_capacity(views.len());
    for rot in views.rotations() {
        let candidate = Pose::new(*rot, translation);
        let out = estimator.estimate(&MatchQuery::analytic(candidate, scene), cam)?;
        per_view_theta.push(out.theta_hat_deg);
    }
    let mut best = 0;
    for (i, t) in per_view_theta.iter().enumerate() {
        if *t < per_view_theta[best] {
            best = i;
        }
    }
    Ok(MultiViewInit {
        pose: Pose::new(views.rotations()[best], translation),
        view_index: best,
        theta_hat_deg: per_view_theta[best],
        per_view_theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::uniform;
    use crate::synth::sample_uniform_rotation;

    fn cam() -> CameraIntrinsics {
        CameraIntrinsics::default()
    }

    fn random_pose(rng: &mut impl rand_chacha::rand_core::RngCore) -> Pose {
        Pose::new(
            sample_uniform_rotation(rng),
            [
                uniform(rng, -0.2, 0.2),
                uniform(rng, -0.2, 0.2),
                uniform(rng, 0.4, 1.6),
            ],
        )
    }

    #[test]
    fn oracle_lands_exactly_in_one_step() {
        let cam = cam();
        let est = OracleEstimator::new(1.0, NoiseModel::default());
        let mut rng = rng_from_seed(73);
        for _ in 0..200 {
            let src = random_pose(&mut rng);
            let tgt = random_pose(&mut rng);
            let scene = SceneHandle::new(tgt);
            let out = est
                .estimate(&MatchQuery::analytic(src, &scene), &cam)
                .unwrap();
            let reached = apply_estimate(&src, &out, &cam).unwrap();
            assert!(reached.rotation.angle_to(&tgt.rotation) < 1e-9);
            for i in 0..3 {
                assert!((reached.translation[i] - tgt.translation[i]).abs() < 1e-12);
            }
            assert!((out.theta_hat_deg - src.rotation.angle_to(&tgt.rotation)).abs() < 1e-12);
        }
    }

    #[test]
    fn contraction_halves_residual() {
        let cam = cam();
        let est = estimator_from_name("contraction", NoiseModel::default()).unwrap();
        let tgt = Pose::new(UnitQuaternion::identity(), [0.0, 0.0, 1.0]);
        let src = Pose::new(
            UnitQuaternion::from_axis_angle_deg([0.3, 1.0, -0.2], 40.0),
            [0.05, -0.03, 1.3],
        );
        let scene = SceneHandle::new(tgt);
        let out = est
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        let next = apply_estimate(&src, &out, &cam).unwrap();
        assert!((next.rotation.angle_to(&tgt.rotation) - 20.0).abs() < 1e-9);
        // The untangled delta halves, so the log depth ratio halves too.
        let v_next = untangle(&next, &tgt, &cam).unwrap();
        let v_src = untangle(&src, &tgt, &cam).unwrap();
        assert!((v_next.vx - v_src.vx / 2.0).abs() < 1e-9);
        assert!((v_next.vy - v_src.vy / 2.0).abs() < 1e-9);
        assert!((v_next.vz - v_src.vz / 2.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_is_pure_in_query_and_seed() {
        let cam = cam();
        let noise = NoiseModel {
            sigma_rot_deg: 3.0,
            sigma_trans: 2.0,
            sigma_theta_deg: 1.0,
            proportional: false,
            seed: 99,
        };
        let est = OracleEstimator::new(1.0, noise);
        let mut rng = rng_from_seed(79);
        for _ in 0..50 {
            let src = random_pose(&mut rng);
            let tgt = random_pose(&mut rng);
            let scene = SceneHandle::new(tgt);
            let a = est
                .estimate(&MatchQuery::analytic(src, &scene), &cam)
                .unwrap();
            let b = est
                .estimate(&MatchQuery::analytic(src, &scene), &cam)
                .unwrap();
            assert_eq!(a.rotation.components(), b.rotation.components());
            assert_eq!(a.translation.components(), b.translation.components());
            assert_eq!(a.theta_hat_deg, b.theta_hat_deg);
        }
    }

    #[test]
    fn different_seeds_give_different_noise() {
        let cam = cam();
        let mut rng = rng_from_seed(83);
        let src = random_pose(&mut rng);
        let tgt = random_pose(&mut rng);
        let scene = SceneHandle::new(tgt);
        let noise = |seed| NoiseModel {
            sigma_rot_deg: 3.0,
            seed,
            ..NoiseModel::default()
        };
        let a = OracleEstimator::new(1.0, noise(1))
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        let b = OracleEstimator::new(1.0, noise(2))
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        assert_ne!(a.rotation.components(), b.rotation.components());
    }

    #[test]
    fn noiseless_estimate_ignores_seed() {
        let cam = cam();
        let mut rng = rng_from_seed(87);
        let src = random_pose(&mut rng);
        let tgt = random_pose(&mut rng);
        let scene = SceneHandle::new(tgt);
        let a = OracleEstimator::new(1.0, NoiseModel { seed: 1, ..NoiseModel::default() })
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        let b = OracleEstimator::new(1.0, NoiseModel { seed: 2, ..NoiseModel::default() })
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        assert_eq!(a.rotation.components(), b.rotation.components());
        assert_eq!(a.translation.components(), b.translation.components());
        assert_eq!(a.theta_hat_deg, b.theta_hat_deg);
    }

    #[test]
    fn theta_hat_clamps_at_zero() {
        let cam = cam();
        let noise = NoiseModel {
            sigma_theta_deg: 1e6,
            seed: 5,
            ..NoiseModel::default()
        };
        let est = OracleEstimator::new(1.0, noise);
        let mut rng = rng_from_seed(89);
        let mut saw_zero = false;
        for _ in 0..100 {
            let src = random_pose(&mut rng);
            let tgt = random_pose(&mut rng);
            let scene = SceneHandle::new(tgt);
            let out = est
                .estimate(&MatchQuery::analytic(src, &scene), &cam)
                .unwrap();
            assert!(out.theta_hat_deg >= 0.0);
            saw_zero |= out.theta_hat_deg == 0.0;
        }
        // With sigma 1e6, roughly half the draws clamp.
        assert!(saw_zero);
    }

    #[test]
    fn proportional_noise_scales_exactly_at_zero_residual() {
        // At theta_true = 0 the proportional scale is exactly 0.1, and both
        // runs consume identical RNG streams, so the translation noise
        // components must be exactly 10x apart (up to rounding).
        let cam = cam();
        let mut rng = rng_from_seed(97);
        let rot = sample_uniform_rotation(&mut rng);
        let src = Pose::new(rot, [0.02, -0.01, 0.9]);
        let scene = SceneHandle::new(src);
        let base = NoiseModel {
            sigma_rot_deg: 5.0,
            sigma_trans: 4.0,
            sigma_theta_deg: 2.0,
            proportional: false,
            seed: 123,
        };
        let plain = OracleEstimator::new(1.0, base)
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        let prop = OracleEstimator::new(1.0, NoiseModel { proportional: true, ..base })
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        for (p, q) in prop
            .translation
            .components()
            .iter()
            .zip(plain.translation.components())
        {
            assert!((p - 0.1 * q).abs() <= 1e-12 * q.abs().max(1.0), "{p} vs 0.1*{q}");
        }
        let a_prop = prop.rotation.normalized().unwrap().rotation_angle_deg();
        let a_plain = plain.rotation.normalized().unwrap().rotation_angle_deg();
        assert!((a_prop - 0.1 * a_plain).abs() < 1e-9, "{a_prop} vs {a_plain}");
    }

    #[test]
    fn missing_scene_handle_rejected() {
        let cam = cam();
        let est = OracleEstimator::new(1.0, NoiseModel::default());
        let query = MatchQuery {
            rendered_pose: Pose::new(UnitQuaternion::identity(), [0.0, 0.0, 1.0]),
            observation: None,
            scene: None,
        };
        assert!(matches!(
            est.estimate(&query, &cam),
            Err(Error::MissingSceneHandle)
        ));
    }

    #[test]
    fn estimator_names() {
        assert_eq!(
            estimator_from_name("oracle", NoiseModel::default()).unwrap().name(),
            "oracle"
        );
        assert_eq!(
            estimator_from_name("contraction", NoiseModel::default()).unwrap().name(),
            "contraction"
        );
        assert_eq!(
            estimator_from_name("noisy-proportional", NoiseModel::default())
                .unwrap()
                .name(),
            "noisy-proportional"
        );
        assert!(matches!(
            estimator_from_name("cnn", NoiseModel::default()),
            Err(Error::UnknownEstimator(_))
        ));
    }

    #[test]
    fn noisy_proportional_forces_proportional() {
        // theta_true = 0 must scale noise down 10x even when the config
        // left proportional off.
        let cam = cam();
        let src = Pose::new(UnitQuaternion::identity(), [0.0, 0.0, 1.0]);
        let scene = SceneHandle::new(src);
        let noise = NoiseModel {
            sigma_trans: 4.0,
            proportional: false,
            seed: 7,
            ..NoiseModel::default()
        };
        let plain = estimator_from_name("oracle", noise)
            .unwrap()
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        let forced = estimator_from_name("noisy-proportional", noise)
            .unwrap()
            .estimate(&MatchQuery::analytic(src, &scene), &cam)
            .unwrap();
        let p = forced.translation.vx;
        let q = plain.translation.vx;
        assert!((p - 0.1 * q).abs() <= 1e-12 * q.abs().max(1.0), "{p} vs {q}");
    }

    #[test]
    fn multi_view_picks_true_nearest_without_noise() {
        let cam = cam();
        let views = CanonicalViewSet::standard();
        let est = OracleEstimator::new(1.0, NoiseModel::default());
        let mut rng = rng_from_seed(101);
        for _ in 0..300 {
            let tgt = random_pose(&mut rng);
            let scene = SceneHandle::new(tgt);
            let init =
                multi_view_initialize(&est, &views, [0.0, 0.0, 1.0], &scene, &cam).unwrap();
            let (true_nearest, true_dist) = views.nearest_view(&tgt.rotation);
            // Noiseless theta_hat equals the true angle, so the same view
            // wins unless two views tie.
            assert!((init.theta_hat_deg - true_dist).abs() < 1e-9);
            let chosen_dist = views.rotations()[init.view_index].angle_to(&tgt.rotation);
            assert!((chosen_dist - true_dist).abs() < 1e-9);
            let _ = true_nearest;
        }
    }

    #[test]
    fn multi_view_residual_range() {
        // The views cover viewing directions, not roll, so the winner's
        // residual is not bounded by any small constant: a half turn about
        // the optical axis sits 180 degrees from every view. The residual
        // can only be trusted as "the best of six", nothing tighter.
        let cam = cam();
        let views = CanonicalViewSet::standard();
        let est = OracleEstimator::new(1.0, NoiseModel::default());
        let mut rng = rng_from_seed(103);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let tgt = random_pose(&mut rng);
            let scene = SceneHandle::new(tgt);
            let init =
                multi_view_initialize(&est, &views, [0.0, 0.0, 1.0], &scene, &cam).unwrap();
            let residual = init.pose.rotation.angle_to(&tgt.rotation);
            let (_, nearest_dist) = views.nearest_view(&tgt.rotation);
            assert!((residual - nearest_dist).abs() < 1e-9);
            worst = worst.max(residual);
        }
        assert!(worst <= 180.0);
        assert!(worst > 90.0, "residuals beyond 90 exist, saw at most {worst}");

        // The body-diagonal half turn lands at 2 acos(1/sqrt(3)).
        let tgt = Pose::new(
            UnitQuaternion::from_axis_angle_deg([1.0, 1.0, 1.0], 180.0),
            [0.0, 0.0, 1.0],
        );
        let scene = SceneHandle::new(tgt);
        let init = multi_view_initialize(&est, &views, [0.0, 0.0, 1.0], &scene, &cam).unwrap();
        let residual = init.pose.rotation.angle_to(&tgt.rotation);
        let expect = 2.0 * (1.0 / 3.0f64.sqrt()).acos().to_degrees();
        assert!((residual - expect).abs() < 1e-9);

        // A 180 degree roll defeats every view at once.
        let roll = UnitQuaternion::from_axis_angle_deg([0.0, 0.0, 1.0], 180.0);
        let (_, dist) = views.nearest_view(&roll);
        assert!((dist - 180.0).abs() < 1e-9);
    }

    #[test]
    fn multi_view_reports_all_views() {
        let cam = cam();
        let views = CanonicalViewSet::standard();
        let est = OracleEstimator::new(1.0, NoiseModel::default());
        let tgt = Pose::new(
            UnitQuaternion::from_axis_angle_deg([0.0, 1.0, 0.0], 85.0),
            [0.0, 0.0, 1.0],
        );
        let scene = SceneHandle::new(tgt);
        let init = multi_view_initialize(&est, &views, [0.0, 0.0, 1.0], &scene, &cam).unwrap();
        assert_eq!(init.per_view_theta.len(), 6);
        // 85 degrees of yaw: the +90 yaw view is 5 degrees away and wins.
        assert_eq!(init.view_index, 1);
        assert!((init.theta_hat_deg - 5.0).abs() < 1e-9);
    }

    #[test]
    fn observation_requires_zoom_dimensions() {
        let img = Image::new(ZOOM_WIDTH, ZOOM_HEIGHT);
        let mask = Mask::new(ZOOM_WIDTH, ZOOM_HEIGHT);
        let tf = ZoomTransform::new(BBox::new(0.0, 0.0, 640.0, 480.0));
        assert!(Observation::new(img, mask, tf).is_ok());
        let bad = Image::new(320, 240);
        assert!(Observation::new(bad, Mask::new(ZOOM_WIDTH, ZOOM_HEIGHT), tf).is_err());
    }

    #[test]
    fn observe_builds_zoomed_crop() {
        let mut img = Image::new(640, 480);
        let mut mask = Mask::new(640, 480);
        for y in 200..280 {
            for x in 280..360 {
                img.set(x, y, [200, 30, 90]);
                mask.set(x, y, true);
            }
        }
        let bbox = BBox::new(280.0, 200.0, 80.0, 80.0);
        let obs = Observation::observe(&img, &mask, &bbox).unwrap();
        assert_eq!(obs.image.width, ZOOM_WIDTH);
        // The object fills most of the crop once zoomed.
        assert!(obs.mask.count() > ZOOM_WIDTH * ZOOM_HEIGHT / 3);
        // The transform maps the expanded box onto the crop.
        assert!(obs.transform.bbox.contains(&bbox));
    }
}
