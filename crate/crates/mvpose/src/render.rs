//! Software rasterizer and the canonical view set.
//!
//! Rendering is deterministic: fixed traversal order, a z-buffer keyed on
//! perspective-correct depth, and a top-left fill rule so pixels on shared
//! edges are claimed by exactly one triangle. Shading is flat per triangle
//! with a headlight along the optical axis.

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::pose::{Pose, UnitQuaternion, Vec3};
use crate::raster::{Image, Mask};

/// Triangles with any vertex closer than this are skipped rather than
/// clipped.
const NEAR_EPS: f64 = 1e-6;

/// Ambient fraction of the flat shading model.
const AMBIENT: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: Image,
    pub mask: Mask,
    /// Per-pixel depth in meters, `f64::INFINITY` where nothing was drawn.
    pub depth: Vec<f64>,
}

impl RenderOutput {
    pub fn depth_at(&self, x: usize, y: usize) -> f64 {
        self.depth[y * self.image.width + x]
    }
}

/// Signed twice-area of `(a, b, c)` in pixel coordinates (y down). Negative
/// for triangles wound counter-clockwise as seen on screen.
#[inline]
fn orient2d(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Top-left rule for a positively oriented triangle: a boundary pixel
/// belongs to the triangle iff its zero-weight edge is a top edge
/// (horizontal, interior below) or a left edge (interior to the right).
#[inline]
fn edge_accepts_boundary(from: [f64; 2], to: [f64; 2]) -> bool {
    let ex = to[0] - from[0];
    let ey = to[1] - from[1];
    (ey == 0.0 && ex > 0.0) || ey < 0.0
}

/// Render the mesh at `pose`. Fails only when every vertex sits behind the
/// camera; objects straddling the image plane render their fully visible
/// triangles.
pub fn render(mesh: &TriangleMesh, pose: &Pose, cam: &CameraIntrinsics) -> Result<RenderOutput> {
    mesh.validate()?;
    let width = cam.width as usize;
    let height = cam.height as usize;
    let mut image = Image::new(width, height);
    let mut mask = Mask::new(width, height);
    let mut depth = vec![f64::INFINITY; width * height];

    // Transform once; projection reuses the camera-space points.
    let cam_pts: Vec<Vec3> = mesh.vertices.iter().map(|v| pose.transform_point(*v)).collect();
    if cam_pts.iter().all(|p| p[2] <= 0.0) {
        return Err(Error::ObjectBehindCamera);
    }
    let projected: Vec<Option<[f64; 2]>> = cam_pts
        .iter()
        .map(|p| {
            if p[2] > NEAR_EPS {
                Some([cam.fx * p[0] / p[2] + cam.px, cam.fy * p[1] / p[2] + cam.py])
            } else {
                None
            }
        })
        .collect();

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [i0, i1, i2] = *tri;
        let (p0, p1, p2) = match (projected[i0], projected[i1], projected[i2]) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => continue,
        };
        // Outward winding projects to negative orientation when front
        // facing; non-negative means back face or degenerate.
        if orient2d(p0, p1, p2) >= 0.0 {
            continue;
        }

        // Flat shading from the camera-space outward normal, computed
        // before any vertex swap.
        let normal = {
            let a = cam_pts[i0];
            let b = cam_pts[i1];
            let c = cam_pts[i2];
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            [n[0] / len, n[1] / len, n[2] / len]
        };
        let intensity = AMBIENT + (1.0 - AMBIENT) * (-normal[2]).max(0.0);
        let shade = |c0: u8, c1: u8, c2: u8| -> u8 {
            let mean = (f64::from(c0) + f64::from(c1) + f64::from(c2)) / 3.0;
            (mean * intensity).round().clamp(0.0, 255.0) as u8
        };
        let color = [
            shade(mesh.colors[i0][0], mesh.colors[i1][0], mesh.colors[i2][0]),
            shade(mesh.colors[i0][1], mesh.colors[i1][1], mesh.colors[i2][1]),
            shade(mesh.colors[i0][2], mesh.colors[i1][2], mesh.colors[i2][2]),
        ];
        let _ = t;

        // Swap to positive orientation for the edge functions; inverse
        // depths follow their vertices.
        let (a, b, c) = (p0, p2, p1);
        let (iza, izb, izc) = (
            1.0 / cam_pts[i0][2],
            1.0 / cam_pts[i2][2],
            1.0 / cam_pts[i1][2],
        );
        let area = orient2d(a, b, c);

        let min_x = a[0].min(b[0]).min(c[0]).floor().max(0.0) as usize;
        let max_x = (a[0].max(b[0]).max(c[0]).ceil() as usize).min(width.saturating_sub(1) + 1);
        let min_y = a[1].min(b[1]).min(c[1]).floor().max(0.0) as usize;
        let max_y = (a[1].max(b[1]).max(c[1]).ceil() as usize).min(height.saturating_sub(1) + 1);
        if min_x >= width || min_y >= height {
            continue;
        }

        let accept_bc = edge_accepts_boundary(b, c);
        let accept_ca = edge_accepts_boundary(c, a);
        let accept_ab = edge_accepts_boundary(a, b);

        for y in min_y..max_y.min(height) {
            for x in min_x..max_x.min(width) {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let w0 = orient2d(b, c, p);
                let w1 = orient2d(c, a, p);
                let w2 = orient2d(a, b, p);
                let inside = (w0 > 0.0 || (w0 == 0.0 && accept_bc))
                    && (w1 > 0.0 || (w1 == 0.0 && accept_ca))
                    && (w2 > 0.0 || (w2 == 0.0 && accept_ab));
                if !inside {
                    continue;
                }
                // 1/z interpolates linearly in screen space.
                let inv_z = (w0 * iza + w1 * izb + w2 * izc) / area;
                let z = 1.0 / inv_z;
                let idx = y * width + x;
                if z < depth[idx] {
                    depth[idx] = z;
                    image.set(x, y, color);
                    mask.set(x, y, true);
                }
            }
        }
    }

    Ok(RenderOutput { image, mask, depth })
}

/// The six canonical orientations used for multi-view initialization:
/// identity, yaw by +-90 and 180 degrees, pitch by +-90 degrees. Their
/// rotated optical axes cover all six axis directions.
#[derive(Debug, Clone)]
pub struct CanonicalViewSet {
    rotations: Vec<UnitQuaternion>,
}

impl CanonicalViewSet {
    pub fn standard() -> Self {
        let y = [0.0, 1.0, 0.0];
        let x = [1.0, 0.0, 0.0];
        Self {
            rotations: vec![
                UnitQuaternion::identity(),
                UnitQuaternion::from_axis_angle_deg(y, 90.0),
                UnitQuaternion::from_axis_angle_deg(y, -90.0),
                UnitQuaternion::from_axis_angle_deg(y, 180.0),
                UnitQuaternion::from_axis_angle_deg(x, 90.0),
                UnitQuaternion::from_axis_angle_deg(x, -90.0),
            ],
        }
    }

    pub fn rotations(&self) -> &[UnitQuaternion] {
        &self.rotations
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Where each view sends the optical axis.
    pub fn directions(&self) -> Vec<Vec3> {
        self.rotations.iter().map(|r| r.rotate([0.0, 0.0, 1.0])).collect()
    }

    /// Index and rotation-angle distance of the view closest to `q`.
    pub fn nearest_view(&self, q: &UnitQuaternion) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, r) in self.rotations.iter().enumerate() {
            let d = r.angle_to(q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

impl Default for CanonicalViewSet {
    fn default() -> Self {
        Self::standard()
    }
}

/// Render the mesh in every canonical orientation at a fixed translation.
pub fn render_views(
    mesh: &TriangleMesh,
    views: &CanonicalViewSet,
    translation: Vec3,
    cam: &CameraIntrinsics,
) -> Result<Vec<RenderOutput>> {
    views
        .rotations()
        .iter()
        .map(|r| render(mesh, &Pose::new(*r, translation), cam))
        .collect()
}
