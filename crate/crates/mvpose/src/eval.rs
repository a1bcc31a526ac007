//! The (n degree, n centimeter) correctness metric, benchmark
//! orchestration, and report emission.
//!
//! Reports are written as CSV with a header row; summaries render as
//! aligned text tables with one row per method (the measured run plus any
//! baselines supplied in the config). All output is a pure function of
//! the configuration, so re-running a benchmark rewrites byte-identical
//! files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::{infer_translation_from_bbox, BBox, CameraIntrinsics, ZoomTransform};
use crate::config::{BaselineEntry, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimator::{multi_view_initialize, PoseEstimator, SceneHandle};
use crate::exec::par_map_indexed;
use crate::loss::{
    fd_grad_loss_sv, grad_loss_sv, gradient_rel_err, loss_mv, loss_sv, LossSample,
};
use crate::mesh::TriangleMesh;
use crate::pose::{
    entangle, relative_rotation, untangle, vec3_norm, vec3_sub, Pose, RawQuaternion,
    UnitQuaternion, UntangledDelta,
};
use crate::raster::dilate_mask;
use crate::refine::{refine, RefinementConfig, StopReason};
use crate::render::{render, CanonicalViewSet};
use crate::rng::{mix_seed, normal, rng_from_seed, uniform};
use crate::synth::{
    generate_record, generate_trajectory, sample_pose_in_frustum, sample_uniform_rotation,
    DatasetParams,
};
use crate::track::{track_sequence, TrackerEvent};

use rand_chacha::ChaCha8Rng;

/// The n values the standard reports evaluate at.
pub const ACCURACY_LEVELS: [u32; 3] = [2, 5, 10];

/// Rotation and translation error of one estimate against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub rot_deg: f64,
    /// Euclidean camera-frame translation distance, meters.
    pub trans_m: f64,
}

pub fn pose_error(estimate: &Pose, truth: &Pose) -> PoseError {
    PoseError {
        rot_deg: estimate.rotation.angle_to(&truth.rotation),
        trans_m: vec3_norm(vec3_sub(estimate.translation, truth.translation)),
    }
}

/// An estimate counts as correct at level n iff the rotation error is
/// strictly below n degrees and the translation error strictly below n
/// centimeters.
pub fn is_correct(error: &PoseError, n: u32) -> bool {
    error.rot_deg < f64::from(n) && error.trans_m < f64::from(n) / 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyLevel {
    pub n: u32,
    /// Fraction of samples correct at this level, in [0, 1].
    pub accuracy: f64,
}

/// Fraction of errors passing [`is_correct`] at each requested level.
pub fn accuracy(errors: &[PoseError], ns: &[u32]) -> Result<Vec<AccuracyLevel>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("pose errors"));
    }
    Ok(ns
        .iter()
        .map(|&n| AccuracyLevel {
            n,
            accuracy: errors.iter().filter(|e| is_correct(e, n)).count() as f64
                / errors.len() as f64,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub method: String,
    pub sample_count: usize,
    pub config_digest: String,
    pub levels: Vec<AccuracyLevel>,
}

/// One evaluated dataset record.
#[derive(Debug, Clone)]
pub struct EstimationRow {
    pub id: usize,
    pub error: PoseError,
    pub reason: StopReason,
    pub update_count: usize,
    /// The estimated residual recorded at each estimator call.
    pub trace_theta_deg: Vec<f64>,
}

/// Evaluate every dataset record: simulate its detection, initialize from
/// the canonical views at the detection-guessed translation, refine, and
/// score against ground truth. Records are independent and evaluate in
/// parallel when the `parallel` feature is active.
pub fn evaluate_estimation(
    mesh: &TriangleMesh,
    cam: &CameraIntrinsics,
    estimator: &dyn PoseEstimator,
    views: &CanonicalViewSet,
    params: &DatasetParams,
    refinement: &RefinementConfig,
) -> Result<Vec<EstimationRow>> {
    params.validate()?;
    refinement.validate()?;
    let diameter = mesh.diameter();
    par_map_indexed(params.n_samples, |id| -> Result<EstimationRow> {
        let record = generate_record(mesh, cam, params, id)?;
        let scene = SceneHandle::new(record.true_pose);
        let translation =
            infer_translation_from_bbox(&record.bbox, diameter, cam, params.depth_range);
        let init = multi_view_initialize(estimator, views, translation, &scene, cam)?;
        let outcome = refine(estimator, &scene, init.pose, cam, refinement)?;
        Ok(EstimationRow {
            id,
            error: pose_error(&outcome.pose, &record.true_pose),
            reason: outcome.reason,
            update_count: outcome.update_count(),
            trace_theta_deg: outcome.trace.iter().map(|s| s.theta_hat_deg).collect(),
        })
    })
    .into_iter()
    .collect()
}

/// Run the full estimation benchmark described by `config` and write
/// `report.csv`, `errors.csv`, and `traces.csv` under `out_dir`.
pub fn run_estimation_benchmark(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(AccuracyReport, Vec<EstimationRow>)> {
    config.validate()?;
    let mesh = config.mesh.build()?;
    let estimator = config.build_estimator()?;
    let views = CanonicalViewSet::standard();
    let rows = evaluate_estimation(
        &mesh,
        &config.camera,
        estimator.as_ref(),
        &views,
        &config.dataset,
        &config.refinement,
    )?;
    let errors: Vec<PoseError> = rows.iter().map(|r| r.error).collect();
    let report = AccuracyReport {
        method: config.name.clone(),
        sample_count: rows.len(),
        config_digest: config.digest(),
        levels: accuracy(&errors, &ACCURACY_LEVELS)?,
    };

    let mut report_csv = String::from("method,acc_2,acc_5,acc_10\n");
    let mut level_cells = String::new();
    for level in &report.levels {
        write!(level_cells, ",{}", level.accuracy).unwrap();
    }
    writeln!(report_csv, "{}{}", report.method, level_cells).unwrap();
    for b in &config.baselines {
        writeln!(report_csv, "{},{},{},{}", b.label, b.acc_2, b.acc_5, b.acc_10).unwrap();
    }
    write_file(out_dir, "report.csv", &report_csv)?;

    let mut errors_csv = String::from("id,rot_err_deg,trans_err_m,stop_reason,steps\n");
    let mut traces_csv = String::from("id,step,theta_hat_deg\n");
    for row in &rows {
        writeln!(
            errors_csv,
            "{},{},{},{},{}",
            row.id,
            row.error.rot_deg,
            row.error.trans_m,
            row.reason.as_str(),
            row.update_count
        )
        .unwrap();
        for (step, theta) in row.trace_theta_deg.iter().enumerate() {
            writeln!(traces_csv, "{},{},{}", row.id, step, theta).unwrap();
        }
    }
    write_file(out_dir, "errors.csv", &errors_csv)?;
    write_file(out_dir, "traces.csv", &traces_csv)?;

    Ok((report, rows))
}

/// Render the accuracy table: one row per method, one column per level.
pub fn accuracy_table(report: &AccuracyReport, baselines: &[BaselineEntry]) -> String {
    let headers: Vec<String> = report
        .levels
        .iter()
        .map(|l| format!("({n}deg,{n}cm)", n = l.n))
        .collect();
    let mut rows: Vec<(String, Vec<f64>)> = vec![(
        report.method.clone(),
        report.levels.iter().map(|l| l.accuracy).collect(),
    )];
    if report.levels.len() == 3 {
        for b in baselines {
            rows.push((b.label.clone(), vec![b.acc_2, b.acc_5, b.acc_10]));
        }
    }
    let name_w = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("method".len()))
        .max()
        .unwrap();
    let widths: Vec<usize> = headers.iter().map(|h| h.len().max(7)).collect();
    let mut out = String::new();
    write!(out, "{:<name_w$}", "method").unwrap();
    for (h, &w) in headers.iter().zip(&widths) {
        write!(out, "  {h:>w$}").unwrap();
    }
    out.push('\n');
    for (name, accs) in &rows {
        write!(out, "{name:<name_w$}").unwrap();
        for (acc, &w) in accs.iter().zip(&widths) {
            let cell = format!("{:.1}%", acc * 100.0);
            write!(out, "  {cell:>w$}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// One tracked frame with its error against the trajectory ground truth.
#[derive(Debug, Clone, Copy)]
pub struct TrackRow {
    pub frame_index: usize,
    pub event: TrackerEvent,
    pub theta_hat_deg: f64,
    pub error: PoseError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub method: String,
    pub config_digest: String,
    pub frames: usize,
    pub held: usize,
    pub updated: usize,
    pub restarted: usize,
    pub final_rot_err_deg: f64,
    pub final_trans_err_m: f64,
}

/// Run the tracking benchmark described by `config` and write `track.csv`
/// under `out_dir`.
pub fn run_tracking_benchmark(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(TrackReport, Vec<TrackRow>)> {
    config.validate()?;
    let mesh = config.mesh.build()?;
    let estimator = config.build_estimator()?;
    let views = CanonicalViewSet::standard();
    let frames = generate_trajectory(&mesh, &config.camera, &config.trajectory)?;
    let records = track_sequence(
        estimator.as_ref(),
        &views,
        &frames,
        mesh.diameter(),
        &config.camera,
        &config.tracker,
    )?;
    let rows: Vec<TrackRow> = records
        .iter()
        .zip(&frames)
        .map(|(record, frame)| TrackRow {
            frame_index: record.frame_index,
            event: record.event,
            theta_hat_deg: record.theta_hat_deg,
            error: pose_error(&record.pose, &frame.true_pose),
        })
        .collect();

    let mut csv = String::from("frame_index,event,theta_hat,rot_err_deg,trans_err_m\n");
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{}",
            row.frame_index,
            row.event.as_str(),
            row.theta_hat_deg,
            row.error.rot_deg,
            row.error.trans_m
        )
        .unwrap();
    }
    write_file(out_dir, "track.csv", &csv)?;

    let count = |event: TrackerEvent| rows.iter().filter(|r| r.event == event).count();
    let last = rows.last().expect("track_sequence rejects empty input");
    let report = TrackReport {
        method: config.name.clone(),
        config_digest: config.digest(),
        frames: rows.len(),
        held: count(TrackerEvent::Held),
        updated: count(TrackerEvent::Updated),
        restarted: count(TrackerEvent::Restarted),
        final_rot_err_deg: last.error.rot_deg,
        final_trans_err_m: last.error.trans_m,
    };
    Ok((report, rows))
}

/// Render the tracking summary as aligned key-value lines.
pub fn track_table(report: &TrackReport) -> String {
    let pairs = [
        ("method", report.method.clone()),
        ("config", report.config_digest.clone()),
        ("frames", report.frames.to_string()),
        ("held", report.held.to_string()),
        ("updated", report.updated.to_string()),
        ("restarted", report.restarted.to_string()),
        ("final rot err (deg)", format!("{:.6e}", report.final_rot_err_deg)),
        ("final trans err (m)", format!("{:.6e}", report.final_trans_err_m)),
    ];
    let key_w = pairs.iter().map(|(k, _)| k.len()).max().unwrap();
    let mut out = String::new();
    for (k, v) in &pairs {
        writeln!(out, "{k:<key_w$}  {v}").unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckRow {
    pub index: usize,
    pub rel_err: f64,
    pub ok: bool,
}

/// Anything within this distance of an absolute-value kink is resampled;
/// central differences at h = 1e-5 are accurate well inside it.
const KINK_MARGIN: f64 = 1e-3;

/// Seed-stream tag for the gradient-check sampler (dataset records use 0,
/// the standardization pool 1, trajectories 2).
const STREAM_GRADCHECK: u64 = 3;

fn far_from_kinks(sample: &LossSample, theta_deg: f64, theta_hat_deg: f64) -> bool {
    let r = sample.pred_rot.norm();
    if r < KINK_MARGIN {
        return false;
    }
    let q = sample.target_rot.components();
    let p = sample.pred_rot.components();
    let dot = (q[0] * p[0] + q[1] * p[1] + q[2] * p[2] + q[3] * p[3]) / r;
    let dv = vec3_sub(sample.target_v.components(), sample.pred_v.components());
    (1.0 - dot).abs() > KINK_MARGIN
        && vec3_norm(dv) > KINK_MARGIN
        && (1.0 - r).abs() > KINK_MARGIN
        && (theta_deg - theta_hat_deg).abs() > KINK_MARGIN
}

/// Draw a random loss evaluation point, resampling until it sits safely
/// away from every non-differentiable kink.
fn sample_smooth_check_point(rng: &mut ChaCha8Rng) -> (LossSample, f64, f64) {
    loop {
        let target_rot = sample_uniform_rotation(rng);
        let target_v = UntangledDelta::new(
            uniform(rng, -40.0, 40.0),
            uniform(rng, -40.0, 40.0),
            uniform(rng, -0.5, 0.5),
        );
        let q = target_rot.components();
        let pred_rot = RawQuaternion::new(
            q[0] + normal(rng, 0.0, 0.3),
            q[1] + normal(rng, 0.0, 0.3),
            q[2] + normal(rng, 0.0, 0.3),
            q[3] + normal(rng, 0.0, 0.3),
        );
        let v = target_v.components();
        let pred_v = UntangledDelta::new(
            v[0] + normal(rng, 0.0, 2.0),
            v[1] + normal(rng, 0.0, 2.0),
            v[2] + normal(rng, 0.0, 0.2),
        );
        let theta = uniform(rng, 0.0, 60.0);
        let theta_hat = theta + normal(rng, 0.0, 5.0);
        let sample = LossSample {
            target_rot,
            target_v,
            pred_rot,
            pred_v,
        };
        if far_from_kinks(&sample, theta, theta_hat) {
            return (sample, theta, theta_hat);
        }
    }
}

/// Compare analytic single-view loss gradients against central finite
/// differences on `n` random smooth points and write `gradcheck.csv`.
/// The second return value is true when every point agrees to relative
/// error below 1e-4.
pub fn run_gradient_check(
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<(Vec<GradCheckRow>, bool)> {
    if n == 0 {
        return Err(Error::EmptyInput("gradient check points"));
    }
    let mut rng = rng_from_seed(mix_seed(seed, &[STREAM_GRADCHECK]));
    let mut rows = Vec::with_capacity(n);
    let mut all_ok = true;
    for index in 0..n {
        let (sample, theta, theta_hat) = sample_smooth_check_point(&mut rng);
        let analytic = grad_loss_sv(&sample, theta, theta_hat)?;
        let fd = fd_grad_loss_sv(&sample, theta, theta_hat, 1e-5)?;
        let rel_err = gradient_rel_err(&analytic, &fd);
        let ok = rel_err < 1e-4 && !analytic.nondifferentiable;
        all_ok &= ok;
        rows.push(GradCheckRow { index, rel_err, ok });
    }
    let mut csv = String::from("index,rel_err,ok\n");
    for row in &rows {
        writeln!(csv, "{},{},{}", row.index, row.rel_err, row.ok).unwrap();
    }
    write_file(out_dir, "gradcheck.csv", &csv)?;
    Ok((rows, all_ok))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestResult {
    pub name: &'static str,
    pub pass: bool,
}

/// Run the built-in invariant suite and write `selftest.csv`. The second
/// return value is true when every check passed.
pub fn run_selftest(out_dir: &Path) -> Result<(Vec<SelftestResult>, bool)> {
    let results = vec![
        SelftestResult {
            name: "entangle_untangle_round_trip",
            pass: check_pose_round_trip(),
        },
        SelftestResult {
            name: "zoom_round_trip",
            pass: check_zoom_round_trip(),
        },
        SelftestResult {
            name: "loss_zero_at_truth",
            pass: check_loss_zero_at_truth(),
        },
        SelftestResult {
            name: "loss_antipodal_values",
            pass: check_loss_antipodal(),
        },
        SelftestResult {
            name: "canonical_view_angles",
            pass: check_canonical_view_angles(),
        },
        SelftestResult {
            name: "oracle_single_update",
            pass: check_oracle_single_update(),
        },
        SelftestResult {
            name: "contraction_sequence",
            pass: check_contraction_sequence(),
        },
        SelftestResult {
            name: "dataset_determinism",
            pass: check_dataset_determinism(),
        },
        SelftestResult {
            name: "dilation_monotone",
            pass: check_dilation_monotone(),
        },
        SelftestResult {
            name: "uniform_rotation_moment",
            pass: check_uniform_rotation_moment(),
        },
    ];
    let mut csv = String::from("check,status\n");
    for r in &results {
        writeln!(csv, "{},{}", r.name, if r.pass { "pass" } else { "fail" }).unwrap();
    }
    write_file(out_dir, "selftest.csv", &csv)?;
    let all_pass = results.iter().all(|r| r.pass);
    Ok((results, all_pass))
}

fn check_pose_round_trip() -> bool {
    let cam = CameraIntrinsics::default();
    let mut rng = rng_from_seed(101);
    (0..100).all(|_| {
        let src = sample_pose_in_frustum(&mut rng, &cam, [0.4, 1.6], 0.1);
        let tgt = sample_pose_in_frustum(&mut rng, &cam, [0.4, 1.6], 0.1);
        let rot = relative_rotation(&src, &tgt);
        let Ok(v) = untangle(&src, &tgt, &cam) else {
            return false;
        };
        let Ok(back) = entangle(&src, &rot, &v, &cam) else {
            return false;
        };
        back.rotation.angle_to(&tgt.rotation) < 1e-9
            && vec3_norm(vec3_sub(back.translation, tgt.translation)) < 1e-12
    })
}

fn check_zoom_round_trip() -> bool {
    let tf = ZoomTransform::new(BBox::new(96.0, 72.0, 320.0, 240.0));
    for i in 0..10 {
        for j in 0..10 {
            let p = [96.0 + 32.0 * i as f64, 72.0 + 24.0 * j as f64];
            let out = tf.invert(tf.apply(p));
            if (out[0] - p[0]).abs() > 1e-9 || (out[1] - p[1]).abs() > 1e-9 {
                return false;
            }
        }
    }
    true
}

fn loss_fixture() -> (UnitQuaternion, UntangledDelta) {
    (
        UnitQuaternion::from_axis_angle_deg([0.3, 0.8, 0.2], 25.0),
        UntangledDelta::new(3.0, -2.0, 0.1),
    )
}

fn check_loss_zero_at_truth() -> bool {
    let (q, v) = loss_fixture();
    let sample = LossSample {
        target_rot: q,
        target_v: v,
        pred_rot: RawQuaternion::new(q.w(), q.x(), q.y(), q.z()),
        pred_v: v,
    };
    matches!(loss_sv(&sample, 25.0, 25.0), Ok(l) if l.abs() < 1e-12)
        && matches!(loss_mv(&[sample; 6]), Ok(l) if l.abs() < 1e-12)
}

fn check_loss_antipodal() -> bool {
    let (q, v) = loss_fixture();
    let truth = LossSample {
        target_rot: q,
        target_v: v,
        pred_rot: RawQuaternion::new(q.w(), q.x(), q.y(), q.z()),
        pred_v: v,
    };
    let flipped = LossSample {
        pred_rot: RawQuaternion::new(-q.w(), -q.x(), -q.y(), -q.z()),
        ..truth
    };
    let sv = matches!(loss_sv(&flipped, 10.0, 10.0), Ok(l) if (l - 2.0).abs() < 1e-12);
    let mut views = [truth; 6];
    views[2] = flipped;
    let mv = matches!(loss_mv(&views), Ok(l) if (l - 1.0 / 3.0).abs() < 1e-12);
    sv && mv
}

fn check_canonical_view_angles() -> bool {
    let dirs = CanonicalViewSet::standard().directions();
    let mut right_angles = 0;
    let mut straight_angles = 0;
    for i in 0..dirs.len() {
        for j in (i + 1)..dirs.len() {
            let dot = dirs[i][0] * dirs[j][0] + dirs[i][1] * dirs[j][1] + dirs[i][2] * dirs[j][2];
            let angle = dot.clamp(-1.0, 1.0).acos().to_degrees();
            if (angle - 90.0).abs() < 1e-9 {
                right_angles += 1;
            } else if (angle - 180.0).abs() < 1e-9 {
                straight_angles += 1;
            } else {
                return false;
            }
        }
    }
    right_angles == 12 && straight_angles == 3
}

fn check_oracle_single_update() -> bool {
    let cam = CameraIntrinsics::default();
    let Ok(estimator) = crate::estimator::estimator_from_name("oracle", Default::default())
    else {
        return false;
    };
    let truth = Pose::new(
        UnitQuaternion::from_axis_angle_deg([0.2, 0.9, 0.1], 30.0),
        [0.02, -0.01, 0.9],
    );
    let start = Pose::new(
        UnitQuaternion::from_axis_angle_deg([0.7, 0.1, 0.4], 55.0),
        [0.0, 0.0, 1.1],
    );
    let scene = SceneHandle::new(truth);
    let Ok(outcome) = refine(
        estimator.as_ref(),
        &scene,
        start,
        &cam,
        &RefinementConfig::default(),
    ) else {
        return false;
    };
    outcome.reason == StopReason::Converged
        && outcome.update_count() == 1
        && outcome.pose.rotation.angle_to(&truth.rotation) < 1e-9
}

fn check_contraction_sequence() -> bool {
    let cam = CameraIntrinsics::default();
    let Ok(estimator) = crate::estimator::estimator_from_name("contraction", Default::default())
    else {
        return false;
    };
    let truth = Pose::new(UnitQuaternion::identity(), [0.0, 0.0, 1.0]);
    let start = Pose::new(
        UnitQuaternion::from_axis_angle_deg([0.0, 1.0, 0.0], 40.0),
        [0.0, 0.0, 1.0],
    );
    let scene = SceneHandle::new(truth);
    let Ok(outcome) = refine(
        estimator.as_ref(),
        &scene,
        start,
        &cam,
        &RefinementConfig::default(),
    ) else {
        return false;
    };
    let expected = [40.0, 20.0, 10.0, 5.0, 2.5, 1.25];
    outcome.reason == StopReason::Converged
        && outcome.trace.len() == expected.len()
        && outcome
            .trace
            .iter()
            .zip(expected)
            .all(|(step, want)| (step.theta_hat_deg - want).abs() < 1e-6)
}

fn check_dataset_determinism() -> bool {
    let mesh = TriangleMesh::cube(0.1);
    let cam = CameraIntrinsics::default();
    let params = DatasetParams::default();
    match (
        generate_record(&mesh, &cam, &params, 0),
        generate_record(&mesh, &cam, &params, 0),
    ) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn check_dilation_monotone() -> bool {
    let mesh = TriangleMesh::cube(0.1);
    let cam = CameraIntrinsics::default();
    let pose = Pose::new(
        UnitQuaternion::from_axis_angle_deg([0.3, 0.6, 0.1], 40.0),
        [0.0, 0.0, 0.9],
    );
    let Ok(out) = render(&mesh, &pose, &cam) else {
        return false;
    };
    let mut prev = 0;
    for k in [0usize, 1, 2, 4, 8, 16] {
        let count = dilate_mask(&out.mask, k).count();
        if count < prev {
            return false;
        }
        prev = count;
    }
    true
}

fn check_uniform_rotation_moment() -> bool {
    let mut rng = rng_from_seed(102);
    let q0 = UnitQuaternion::from_axis_angle_deg([0.1, 0.4, 0.9], 71.0);
    let n = 4000;
    let mean: f64 = (0..n)
        .map(|_| {
            let d = sample_uniform_rotation(&mut rng).dot(&q0);
            d * d
        })
        .sum::<f64>()
        / f64::from(n);
    (mean - 0.25).abs() < 0.02
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_is_strict_at_boundaries() {
        let on_rot = PoseError {
            rot_deg: 5.0,
            trans_m: 0.01,
        };
        let on_trans = PoseError {
            rot_deg: 1.0,
            trans_m: 0.05,
        };
        let inside = PoseError {
            rot_deg: 4.999,
            trans_m: 0.049,
        };
        assert!(!is_correct(&on_rot, 5));
        assert!(!is_correct(&on_trans, 5));
        assert!(is_correct(&inside, 5));
        assert!(!is_correct(&inside, 2));
    }

    #[test]
    fn accuracy_matches_brute_force() {
        let mut rng = rng_from_seed(30);
        let errors: Vec<PoseError> = (0..500)
            .map(|_| PoseError {
                rot_deg: uniform(&mut rng, 0.0, 15.0),
                trans_m: uniform(&mut rng, 0.0, 0.15),
            })
            .collect();
        let levels = accuracy(&errors, &ACCURACY_LEVELS).unwrap();
        for level in &levels {
            let count = errors
                .iter()
                .filter(|e| {
                    e.rot_deg < f64::from(level.n) && e.trans_m < f64::from(level.n) / 100.0
                })
                .count();
            assert_eq!(level.accuracy, count as f64 / errors.len() as f64);
        }
        // Monotone in n.
        assert!(levels[0].accuracy <= levels[1].accuracy);
        assert!(levels[1].accuracy <= levels[2].accuracy);
    }

    #[test]
    fn accuracy_rejects_empty_input() {
        assert!(matches!(
            accuracy(&[], &ACCURACY_LEVELS),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn pose_error_measures_both_parts() {
        let a = Pose::new(UnitQuaternion::identity(), [0.0, 0.0, 1.0]);
        let b = Pose::new(
            UnitQuaternion::from_axis_angle_deg([0.0, 1.0, 0.0], 10.0),
            [0.03, 0.04, 1.0],
        );
        let err = pose_error(&b, &a);
        assert!((err.rot_deg - 10.0).abs() < 1e-9);
        assert!((err.trans_m - 0.05).abs() < 1e-12);
    }

    #[test]
    fn noiseless_estimation_recovers_every_record() {
        let config = crate::config::ExperimentConfig {
            dataset: DatasetParams {
                n_samples: 10,
                ..DatasetParams::default()
            },
            ..Default::default()
        };
        let mesh = config.mesh.build().unwrap();
        let estimator = config.build_estimator().unwrap();
        let views = CanonicalViewSet::standard();
        let rows = evaluate_estimation(
            &mesh,
            &config.camera,
            estimator.as_ref(),
            &views,
            &config.dataset,
            &config.refinement,
        )
        .unwrap();
        assert_eq!(rows.len(), 10);
        for row in &rows {
            assert!(row.error.rot_deg < 1e-6, "record {} rot {}", row.id, row.error.rot_deg);
            assert!(row.error.trans_m < 1e-9);
            assert_eq!(row.reason, StopReason::Converged);
            assert_eq!(row.update_count, 1);
        }
    }

    #[test]
    fn estimation_benchmark_outputs_are_deterministic() {
        let config = crate::config::ExperimentConfig {
            dataset: DatasetParams {
                n_samples: 4,
                ..DatasetParams::default()
            },
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let (a_report, _) = run_estimation_benchmark(&config, &dir.path().join("a")).unwrap();
        let (b_report, _) = run_estimation_benchmark(&config, &dir.path().join("b")).unwrap();
        assert_eq!(a_report, b_report);
        for name in ["report.csv", "errors.csv", "traces.csv"] {
            let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }
        assert!((a_report.levels[0].accuracy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tracking_benchmark_writes_expected_csv() {
        let mut config = crate::config::ExperimentConfig::default();
        config.trajectory.n_frames = 6;
        let dir = tempfile::tempdir().unwrap();
        let (report, rows) = run_tracking_benchmark(&config, dir.path()).unwrap();
        assert_eq!(report.frames, 6);
        assert_eq!(rows.len(), 6);
        assert_eq!(report.held + report.updated + report.restarted, 6);
        let csv = std::fs::read_to_string(dir.path().join("track.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "frame_index,event,theta_hat,rot_err_deg,trans_err_m"
        );
        assert_eq!(lines.count(), 6);
        // Smooth default trajectory: tracking never restarts and ends on
        // the exact pose.
        assert_eq!(report.restarted, 0);
        assert!(report.final_rot_err_deg < 1e-6);
    }

    #[test]
    fn gradient_check_passes_on_smooth_points() {
        let dir = tempfile::tempdir().unwrap();
        let (rows, all_ok) = run_gradient_check(40, 5, dir.path()).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(all_ok, "worst rel err {:?}", rows
            .iter()
            .map(|r| r.rel_err)
            .fold(0.0f64, f64::max));
        let csv = std::fs::read_to_string(dir.path().join("gradcheck.csv")).unwrap();
        assert!(csv.starts_with("index,rel_err,ok\n"));
        assert_eq!(csv.lines().count(), 41);
    }

    #[test]
    fn selftest_passes_and_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let (results, all_pass) = run_selftest(dir.path()).unwrap();
        assert!(
            all_pass,
            "failing checks: {:?}",
            results.iter().filter(|r| !r.pass).collect::<Vec<_>>()
        );
        let csv = std::fs::read_to_string(dir.path().join("selftest.csv")).unwrap();
        assert!(csv.starts_with("check,status\n"));
        assert_eq!(csv.lines().count(), results.len() + 1);
    }

    #[test]
    fn accuracy_table_lines_up() {
        let report = AccuracyReport {
            method: "ours".into(),
            sample_count: 4,
            config_digest: "deadbeef".into(),
            levels: ACCURACY_LEVELS
                .iter()
                .map(|&n| AccuracyLevel { n, accuracy: 1.0 })
                .collect(),
        };
        let baselines = vec![crate::config::BaselineEntry {
            label: "published-method".into(),
            acc_2: 0.243,
            acc_5: 0.731,
            acc_10: 0.975,
        }];
        let table = accuracy_table(&report, &baselines);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("method"));
        assert!(lines[1].contains("100.0%"));
        assert!(lines[2].starts_with("published-method"));
        assert!(lines[2].contains("24.3%"));
        // Aligned columns: all rows share one width.
        assert_eq!(lines[0].len(), lines[1].len());
        assert_eq!(lines[1].len(), lines[2].len());
    }
}
