//! Pinhole camera model, bounding boxes, and the zoom-in crop.
//!
//! Image coordinates are pixels, x right, y down, origin at the top-left
//! corner; the center of pixel `(i, j)` sits at `(i + 0.5, j + 0.5)`. The
//! zoom-in operation crops a 4:3 region around the object and resamples it
//! to a fixed 640x480 patch so downstream consumers always see the object
//! at a canonical scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Image, Mask};

/// Width of the zoomed patch, pixels.
pub const ZOOM_WIDTH: usize = 640;
/// Height of the zoomed patch, pixels.
pub const ZOOM_HEIGHT: usize = 480;
/// Zoom aspect ratio, width : height.
pub const ZOOM_RATIO: (u32, u32) = (4, 3);

/// Pinhole intrinsics. No distortion model; skew is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub px: f64,
    pub py: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    /// VGA intrinsics of a common benchmark RGB-D sensor.
    fn default() -> Self {
        Self {
            fx: 572.4114,
            fy: 573.57043,
            px: 325.2611,
            py: 242.04899,
            width: 640,
            height: 480,
        }
    }
}

impl CameraIntrinsics {
    /// Project a camera-frame point to pixel coordinates. The point must be
    /// strictly in front of the camera.
    pub fn project(&self, p: [f64; 3]) -> Result<[f64; 2]> {
        if p[2] <= 0.0 {
            return Err(Error::NonPositiveDepth(p[2]));
        }
        Ok([
            self.fx * p[0] / p[2] + self.px,
            self.fy * p[1] / p[2] + self.py,
        ])
    }

    /// Back-project a pixel at a given depth to a camera-frame point.
    pub fn unproject(&self, uv: [f64; 2], z: f64) -> Result<[f64; 3]> {
        if z <= 0.0 {
            return Err(Error::NonPositiveDepth(z));
        }
        Ok([
            (uv[0] - self.px) * z / self.fx,
            (uv[1] - self.py) * z / self.fy,
            z,
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidConfig("focal lengths must be > 0".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be > 0".into()));
        }
        Ok(())
    }
}

/// Axis-aligned box in pixel coordinates: top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> [f64; 2] {
        [self.x + self.w / 2.0, self.y + self.h / 2.0]
    }

    pub fn diagonal(&self) -> f64 {
        (self.w * self.w + self.h * self.h).sqrt()
    }

    /// True when `other` lies entirely inside `self` (closed edges).
    pub fn contains(&self, other: &BBox) -> bool {
        other.x >= self.x - 1e-9
            && other.y >= self.y - 1e-9
            && other.x + other.w <= self.x + self.w + 1e-9
            && other.y + other.h <= self.y + self.h + 1e-9
    }
}

/// Tight bounding box of the set pixels: pixel `(i, j)` covers the unit
/// square `[i, i+1) x [j, j+1)`.
pub fn bbox_from_mask(mask: &Mask) -> Result<BBox> {
    let mut min_x = usize::MAX;
    let mut min_y = usize::MAX;
    let mut max_x = 0usize;
    let mut max_y = 0usize;
    let mut any = false;
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                any = true;
                min_x = min_x.min(x);
                min_y = min_y.min(y);
                max_x = max_x.max(x);
                max_y = max_y.max(y);
            }
        }
    }
    if !any {
        return Err(Error::EmptyMask);
    }
    Ok(BBox {
        x: min_x as f64,
        y: min_y as f64,
        w: (max_x - min_x + 1) as f64,
        h: (max_y - min_y + 1) as f64,
    })
}

/// Grow `bbox` to the zoom aspect ratio about its center, then translate it
/// as little as possible to fit the `width x height` raster. The result
/// always contains the input: only the too-short axis grows, and clamping
/// can shift the box by at most its slack, which the growth covers.
pub fn expand_bbox_to_ratio(bbox: &BBox, width: u32, height: u32) -> Result<BBox> {
    let (rw, rh) = ZOOM_RATIO;
    let target = f64::from(rw) / f64::from(rh);
    let [cx, cy] = bbox.center();
    let (w, h) = if bbox.w < target * bbox.h {
        (target * bbox.h, bbox.h)
    } else {
        (bbox.w, bbox.w / target)
    };
    if w > f64::from(width) + 1e-9 || h > f64::from(height) + 1e-9 {
        return Err(Error::BBoxLargerThanImage {
            ratio_w: rw,
            ratio_h: rh,
            width,
            height,
        });
    }
    let x = (cx - w / 2.0).clamp(0.0, f64::from(width) - w);
    let y = (cy - h / 2.0).clamp(0.0, f64::from(height) - h);
    Ok(BBox { x, y, w, h })
}

/// Affine map from full-image pixel coordinates into the zoomed patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoomTransform {
    pub bbox: BBox,
}

impl ZoomTransform {
    pub fn new(bbox: BBox) -> Self {
        Self { bbox }
    }

    pub fn scale_x(&self) -> f64 {
        ZOOM_WIDTH as f64 / self.bbox.w
    }

    pub fn scale_y(&self) -> f64 {
        ZOOM_HEIGHT as f64 / self.bbox.h
    }

    /// Full-image pixel coordinate to zoomed-patch coordinate.
    pub fn apply(&self, uv: [f64; 2]) -> [f64; 2] {
        [
            (uv[0] - self.bbox.x) * self.scale_x(),
            (uv[1] - self.bbox.y) * self.scale_y(),
        ]
    }

    /// Exact inverse of [`Self::apply`].
    pub fn invert(&self, zuv: [f64; 2]) -> [f64; 2] {
        [
            zuv[0] / self.scale_x() + self.bbox.x,
            zuv[1] / self.scale_y() + self.bbox.y,
        ]
    }
}

fn check_bbox_in_image(bbox: &BBox, width: usize, height: usize) -> Result<()> {
    if bbox.w <= 0.0
        || bbox.h <= 0.0
        || bbox.x < -1e-9
        || bbox.y < -1e-9
        || bbox.x + bbox.w > width as f64 + 1e-9
        || bbox.y + bbox.h > height as f64 + 1e-9
    {
        return Err(Error::BBoxOutOfBounds {
            x: bbox.x,
            y: bbox.y,
            w: bbox.w,
            h: bbox.h,
            width: width as u32,
            height: height as u32,
        });
    }
    Ok(())
}

/// Crop `bbox` out of `image` and resample it to 640x480 with bilinear
/// interpolation under the pixel-center convention, so a 640x480 source with
/// the full-frame bbox reproduces itself exactly.
pub fn zoom_crop(image: &Image, bbox: &BBox) -> Result<(Image, ZoomTransform)> {
    check_bbox_in_image(bbox, image.width, image.height)?;
    let tf = ZoomTransform::new(*bbox);
    let mut out = Image::new(ZOOM_WIDTH, ZOOM_HEIGHT);
    let max_x = image.width as i64 - 1;
    let max_y = image.height as i64 - 1;
    for oy in 0..ZOOM_HEIGHT {
        let sy = tf.invert([0.0, oy as f64 + 0.5])[1] - 0.5;
        let y0 = sy.floor();
        let fy = sy - y0;
        let y0i = (y0 as i64).clamp(0, max_y) as usize;
        let y1i = (y0 as i64 + 1).clamp(0, max_y) as usize;
        for ox in 0..ZOOM_WIDTH {
            let sx = tf.invert([ox as f64 + 0.5, 0.0])[0] - 0.5;
            let x0 = sx.floor();
            let fx = sx - x0;
            let x0i = (x0 as i64).clamp(0, max_x) as usize;
            let x1i = (x0 as i64 + 1).clamp(0, max_x) as usize;
            let p00 = image.get(x0i, y0i);
            let p10 = image.get(x1i, y0i);
            let p01 = image.get(x0i, y1i);
            let p11 = image.get(x1i, y1i);
            let mut rgb = [0u8; 3];
            for c in 0..3 {
                let top = f64::from(p00[c]) * (1.0 - fx) + f64::from(p10[c]) * fx;
                let bot = f64::from(p01[c]) * (1.0 - fx) + f64::from(p11[c]) * fx;
                let v = top * (1.0 - fy) + bot * fy;
                rgb[c] = v.round().clamp(0.0, 255.0) as u8;
            }
            out.set(ox, oy, rgb);
        }
    }
    Ok((out, tf))
}

/// Resample a mask through the same transform with nearest-neighbor lookup,
/// which keeps the mask strictly binary.
pub fn zoom_mask(mask: &Mask, bbox: &BBox) -> Result<Mask> {
    check_bbox_in_image(bbox, mask.width, mask.height)?;
    let tf = ZoomTransform::new(*bbox);
    let mut out = Mask::new(ZOOM_WIDTH, ZOOM_HEIGHT);
    let max_x = mask.width as i64 - 1;
    let max_y = mask.height as i64 - 1;
    for oy in 0..ZOOM_HEIGHT {
        let sy = tf.invert([0.0, oy as f64 + 0.5])[1];
        let yi = (sy.floor() as i64).clamp(0, max_y) as usize;
        for ox in 0..ZOOM_WIDTH {
            let sx = tf.invert([ox as f64 + 0.5, 0.0])[0];
            let xi = (sx.floor() as i64).clamp(0, max_x) as usize;
            out.set(ox, oy, mask.get(xi, yi));
        }
    }
    Ok(out)
}

/// Depth guess from apparent size: a sphere of the object's diameter spans
/// about `diameter * f / z` pixels, so `z ~= diameter * fx / diagonal_px`.
/// Clamped to the working range.
pub fn depth_from_bbox(
    bbox: &BBox,
    diameter_m: f64,
    cam: &CameraIntrinsics,
    z_range: [f64; 2],
) -> f64 {
    let diag = bbox.diagonal().max(1e-9);
    (diameter_m * cam.fx / diag).clamp(z_range[0], z_range[1])
}

/// Initial translation from a detection: back-project the bbox center at the
/// heuristic depth.
pub fn infer_translation_from_bbox(
    bbox: &BBox,
    diameter_m: f64,
    cam: &CameraIntrinsics,
    z_range: [f64; 2],
) -> [f64; 3] {
    let z = depth_from_bbox(bbox, diameter_m, cam, z_range);
    cam.unproject(bbox.center(), z)
        .expect("clamped depth is positive")
}
