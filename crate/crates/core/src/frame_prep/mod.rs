//! Frame preprocessing for detector and classifier inputs.

mod clahe;

pub use clahe::clahe;

use serde::{Deserialize, Serialize};

use crate::model::{BBox, Frame};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrepError {
    #[error("box {0:?} has no area inside the image")]
    DegenerateBox(BBox),
    #[error("unsupported patch size {0}; expected 32, 64, 128 or 224")]
    UnsupportedPatchSize(u32),
    #[error("invalid prep config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    /// Tile grid as `(columns, rows)`.
    pub clahe_tiles: (u32, u32),
    pub clahe_clip_limit: f64,
    pub target_size: u32,
    /// Letterbox fill for frames, as an 8-bit intensity.
    pub frame_pad_value: u8,
    /// Letterbox fill for histogram channels.
    pub hist_pad_value: f32,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self {
            clahe_tiles: (8, 8),
            clahe_clip_limit: 2.0,
            target_size: 640,
            frame_pad_value: 114,
            hist_pad_value: 0.0,
        }
    }
}

impl PrepConfig {
    pub fn validate(&self) -> Result<(), PrepError> {
        if self.clahe_tiles.0 == 0 || self.clahe_tiles.1 == 0 {
            return Err(PrepError::InvalidConfig("clahe_tiles must be >= 1".into()));
        }
        if !(self.clahe_clip_limit >= 1.0) {
            return Err(PrepError::InvalidConfig(format!(
                "clahe_clip_limit must be >= 1.0, got {}",
                self.clahe_clip_limit
            )));
        }
        if self.target_size < 32 {
            return Err(PrepError::InvalidConfig(format!(
                "target_size must be >= 32, got {}",
                self.target_size
            )));
        }
        Ok(())
    }

    /// CLAHE followed by scaling to `[0, 1]`.
    pub fn prepare_frame(&self, frame: &Frame) -> ImageF32 {
        let eq = clahe(
            frame,
            self.clahe_tiles.0,
            self.clahe_tiles.1,
            self.clahe_clip_limit,
        );
        normalize_unit(&eq)
    }
}

/// Single-channel float image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF32 {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl ImageF32 {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Option<Self> {
        (data.len() == width as usize * height as usize).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// Copies the `[x0, x1) x [y0, y1)` region.
    pub fn crop(&self, x0: u32, y0: u32, x1: u32, y1: u32) -> ImageF32 {
        let w = x1 - x0;
        let mut data = Vec::with_capacity(w as usize * (y1 - y0) as usize);
        for y in y0..y1 {
            let row = y as usize * self.width as usize;
            data.extend_from_slice(&self.data[row + x0 as usize..row + x1 as usize]);
        }
        ImageF32 {
            width: w,
            height: y1 - y0,
            data,
        }
    }
}

/// Divides every pixel by 255.
pub fn normalize_unit(frame: &Frame) -> ImageF32 {
    ImageF32 {
        width: frame.width,
        height: frame.height,
        data: frame.pixels.iter().map(|&p| f32::from(p) / 255.0).collect(),
    }
}

/// Samples `src` at fractional coordinates with clamped bilinear weights.
fn sample_bilinear(src: &ImageF32, sx: f64, sy: f64) -> f32 {
    let max_x = (src.width - 1) as f64;
    let max_y = (src.height - 1) as f64;
    let sx = sx.clamp(0.0, max_x);
    let sy = sy.clamp(0.0, max_y);
    let x0 = sx.floor();
    let y0 = sy.floor();
    let fx = (sx - x0) as f32;
    let fy = (sy - y0) as f32;
    let (x0, y0) = (x0 as u32, y0 as u32);
    let x1 = (x0 + 1).min(src.width - 1);
    let y1 = (y0 + 1).min(src.height - 1);
    let top = src.get(x0, y0) * (1.0 - fx) + src.get(x1, y0) * fx;
    let bottom = src.get(x0, y1) * (1.0 - fx) + src.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Half-pixel-centred bilinear resize with independent axis scales.
pub fn resize_bilinear(src: &ImageF32, out_w: u32, out_h: u32) -> ImageF32 {
    let sx = src.width as f64 / out_w as f64;
    let sy = src.height as f64 / out_h as f64;
    let mut data = Vec::with_capacity(out_w as usize * out_h as usize);
    for v in 0..out_h {
        let y = (v as f64 + 0.5) * sy - 0.5;
        for u in 0..out_w {
            data.push(sample_bilinear(src, (u as f64 + 0.5) * sx - 0.5, y));
        }
    }
    ImageF32 {
        width: out_w,
        height: out_h,
        data,
    }
}

/// Affine map from source pixels to letterboxed pixels: `p' = p * scale + pad`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LetterboxTransform {
    pub scale: f64,
    pub pad_x: f64,
    pub pad_y: f64,
    pub content_w: u32,
    pub content_h: u32,
}

impl LetterboxTransform {
    pub fn for_size(width: u32, height: u32, target: u32) -> Self {
        let scale = target as f64 / width.max(height) as f64;
        let content_w = ((width as f64 * scale).round() as u32).min(target);
        let content_h = ((height as f64 * scale).round() as u32).min(target);
        Self {
            scale,
            pad_x: ((target - content_w) / 2) as f64,
            pad_y: ((target - content_h) / 2) as f64,
            content_w,
            content_h,
        }
    }

    pub fn forward(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale + self.pad_x, y * self.scale + self.pad_y)
    }

    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale)
    }

    pub fn forward_box(&self, b: BBox) -> BBox {
        let (x, y) = self.forward(b.x, b.y);
        BBox::new(x, y, b.w * self.scale, b.h * self.scale)
    }

    pub fn inverse_box(&self, b: BBox) -> BBox {
        let (x, y) = self.inverse(b.x, b.y);
        BBox::new(x, y, b.w / self.scale, b.h / self.scale)
    }
}

/// Aspect-preserving resize into a `target x target` square, centred, with
/// `pad_value` around the content.
pub fn letterbox(image: &ImageF32, target: u32, pad_value: f32) -> (ImageF32, LetterboxTransform) {
    let tf = LetterboxTransform::for_size(image.width, image.height, target);
    let mut out = ImageF32::filled(target, target, pad_value);
    let (px, py) = (tf.pad_x as u32, tf.pad_y as u32);
    for v in 0..tf.content_h {
        let sy = (v as f64 + 0.5) / tf.scale - 0.5;
        let row = (v + py) as usize * target as usize;
        for u in 0..tf.content_w {
            let sx = (u as f64 + 0.5) / tf.scale - 0.5;
            out.data[row + (u + px) as usize] = sample_bilinear(image, sx, sy);
        }
    }
    (out, tf)
}

pub const PATCH_SIZES: [u32; 4] = [32, 64, 128, 224];

/// Crops the part of `bbox` (top-left corner) that lies inside the image and
/// stretches it to `out_size x out_size`.
pub fn crop_patch(image: &ImageF32, bbox: BBox, out_size: u32) -> Result<ImageF32, PrepError> {
    if !PATCH_SIZES.contains(&out_size) {
        return Err(PrepError::UnsupportedPatchSize(out_size));
    }
    let clipped = bbox
        .clip_to(image.width as f64, image.height as f64)
        .ok_or(PrepError::DegenerateBox(bbox))?;
    let x0 = clipped.x.floor() as u32;
    let y0 = clipped.y.floor() as u32;
    let x1 = (clipped.x2().ceil() as u32).min(image.width);
    let y1 = (clipped.y2().ceil() as u32).min(image.height);
    if x1 <= x0 || y1 <= y0 {
        return Err(PrepError::DegenerateBox(bbox));
    }
    Ok(resize_bilinear(
        &image.crop(x0, y0, x1, y1),
        out_size,
        out_size,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: u32, h: u32) -> ImageF32 {
        let data = (0..w * h).map(|i| (i % w) as f32 + (i / w) as f32 * 0.5).collect();
        ImageF32::new(w, h, data).unwrap()
    }

    #[test]
    fn unit_normalization() {
        let f = Frame::new(0, 3, 1, vec![0, 128, 255]).unwrap();
        let n = normalize_unit(&f);
        assert_eq!(n.data[0], 0.0);
        assert!((f64::from(n.data[1]) - 128.0 / 255.0).abs() < 1e-7);
        assert!((n.data[1] - 0.50196).abs() < 1e-5);
        assert_eq!(n.data[2], 1.0);
    }

    #[test]
    fn davis_frame_letterbox_geometry() {
        let tf = LetterboxTransform::for_size(346, 260, 640);
        assert_eq!(tf.scale, 640.0 / 346.0);
        assert_eq!((tf.content_w, tf.content_h), (640, 481));
        // 159 rows of padding: 79 above, 80 below
        assert_eq!(tf.pad_y, 79.0);
        assert_eq!(640 - 481 - 79, 80);
        assert_eq!(tf.pad_x, 0.0);

        let (img, _) = letterbox(&ImageF32::filled(346, 260, 0.5), 640, 0.25);
        assert_eq!(img.get(10, 78), 0.25);
        assert_eq!(img.get(10, 79), 0.5);
        assert_eq!(img.get(10, 559), 0.5);
        assert_eq!(img.get(10, 560), 0.25);
    }

    #[test]
    fn square_letterbox_has_no_padding() {
        let src = ramp(64, 64);
        let (img, tf) = letterbox(&src, 128, -1.0);
        assert_eq!((tf.pad_x, tf.pad_y), (0.0, 0.0));
        assert!(img.data.iter().all(|&v| v >= 0.0));
        let (same, tf) = letterbox(&src, 64, -1.0);
        assert_eq!(tf.scale, 1.0);
        assert_eq!(same, src);
    }

    #[test]
    fn box_round_trip() {
        let tf = LetterboxTransform::for_size(346, 260, 640);
        let b = BBox::new(12.25, 200.5, 30.75, 41.0);
        let back = tf.inverse_box(tf.forward_box(b));
        for (a, b) in [(b.x, back.x), (b.y, back.y), (b.w, back.w), (b.h, back.h)] {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn crop_inside_matches_slice_then_resize() {
        let img = ramp(40, 30);
        let patch = crop_patch(&img, BBox::new(5.0, 6.0, 10.0, 8.0), 32).unwrap();
        let expected = resize_bilinear(&img.crop(5, 6, 15, 14), 32, 32);
        assert_eq!(patch, expected);
    }

    #[test]
    fn crop_half_outside_is_clipped() {
        let img = ramp(40, 30);
        let patch = crop_patch(&img, BBox::new(-10.0, 20.0, 20.0, 20.0), 64).unwrap();
        let expected = resize_bilinear(&img.crop(0, 20, 10, 30), 64, 64);
        assert_eq!(patch, expected);
    }

    #[test]
    fn crop_outside_is_degenerate() {
        let img = ramp(40, 30);
        assert!(matches!(
            crop_patch(&img, BBox::new(50.0, 0.0, 5.0, 5.0), 32),
            Err(PrepError::DegenerateBox(_))
        ));
        assert!(matches!(
            crop_patch(&img, BBox::new(0.0, 0.0, 5.0, 5.0), 33),
            Err(PrepError::UnsupportedPatchSize(33))
        ));
    }

    #[test]
    fn config_bounds() {
        assert!(PrepConfig::default().validate().is_ok());
        let bad = PrepConfig {
            clahe_clip_limit: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PrepConfig {
            target_size: 16,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
