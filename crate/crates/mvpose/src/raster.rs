//! Image and mask buffers with binary PPM/PGM serialization.
//!
//! Pixels are row-major, y down, indexed `(x, y)` with the origin at the top
//! left. RGB channels are u8. Masks are boolean per pixel, serialized as
//! 0/255 grayscale.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// RGB triplets, row-major, `3 * width * height` bytes.
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; 3 * width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Serialize as binary PPM (P6, maxval 255).
    pub fn write_ppm(&self, w: &mut impl Write) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)?;
        Ok(())
    }

    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_ppm(&mut f)
    }

    pub fn read_ppm(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let (magic, rest) = parse_header(&bytes)?;
        if magic != "P6" {
            return Err(Error::RasterParse(format!(
                "expected P6 magic, found {magic:?}"
            )));
        }
        let (width, height, maxval, pixels) = rest;
        if maxval != 255 {
            return Err(Error::RasterParse(format!("unsupported maxval {maxval}")));
        }
        let expect = 3 * width * height;
        if pixels.len() < expect {
            return Err(Error::RasterParse(format!(
                "pixel payload truncated: {} < {expect}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data: pixels[..expect].to_vec(),
        })
    }

    pub fn load_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_ppm(&mut f)
    }
}

/// Boolean pixel mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Serialize as binary PGM (P5, maxval 255), 255 inside and 0 outside.
    pub fn write_pgm(&self, w: &mut impl Write) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_pgm(&mut f)
    }

    pub fn read_pgm(r: &mut impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let (magic, rest) = parse_header(&bytes)?;
        if magic != "P5" {
            return Err(Error::RasterParse(format!(
                "expected P5 magic, found {magic:?}"
            )));
        }
        let (width, height, maxval, pixels) = rest;
        if maxval != 255 {
            return Err(Error::RasterParse(format!("unsupported maxval {maxval}")));
        }
        let expect = width * height;
        if pixels.len() < expect {
            return Err(Error::RasterParse(format!(
                "pixel payload truncated: {} < {expect}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            // Any nonzero value counts as inside so thresholded sources load.
            data: pixels[..expect].iter().map(|&b| b != 0).collect(),
        })
    }

    pub fn load_pgm(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_pgm(&mut f)
    }
}

/// Parse a netpbm binary header: magic, whitespace/comment-separated width,
/// height, maxval, then a single whitespace byte before the payload.
fn parse_header(bytes: &[u8]) -> Result<(String, (usize, usize, usize, &[u8]))> {
    let mut pos = 0usize;
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and # comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::RasterParse("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = next_token(bytes)?;
    let width: usize = next_token(bytes)?
        .parse()
        .map_err(|e| Error::RasterParse(format!("bad width: {e}")))?;
    let height: usize = next_token(bytes)?
        .parse()
        .map_err(|e| Error::RasterParse(format!("bad height: {e}")))?;
    let maxval: usize = next_token(bytes)?
        .parse()
        .map_err(|e| Error::RasterParse(format!("bad maxval: {e}")))?;
    // Exactly one whitespace byte separates the header from the payload.
    if pos >= bytes.len() {
        return Err(Error::RasterParse("missing payload".into()));
    }
    pos += 1;
    Ok((magic, (width, height, maxval, &bytes[pos..])))
}

/// Dilate with a centered square structuring element of side
/// `2 * floor(k / 2) + 1`; `k = 0` is the identity. Runs in O(w h) using a
/// 2D prefix sum over the mask instead of per-pixel window scans.
pub fn dilate_mask(mask: &Mask, k: usize) -> Mask {
    let r = k / 2;
    if r == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width, mask.height);
    // prefix[y][x] = count of set pixels in the rectangle [0,x) x [0,y).
    let mut prefix = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += mask.get(x, y) as u32;
            prefix[(y + 1) * (w + 1) + (x + 1)] = prefix[y * (w + 1) + (x + 1)] + row;
        }
    }
    let rect_count = |x0: usize, y0: usize, x1: usize, y1: usize| -> u32 {
        // Set-pixel count in [x0,x1) x [y0,y1).
        prefix[y1 * (w + 1) + x1] + prefix[y0 * (w + 1) + x0]
            - prefix[y0 * (w + 1) + x1]
            - prefix[y1 * (w + 1) + x0]
    };
    let mut out = Mask::new(w, h);
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r + 1).min(w);
            out.set(x, y, rect_count(x0, y0, x1, y1) > 0);
        }
    }
    out
}
