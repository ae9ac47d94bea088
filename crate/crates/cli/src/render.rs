use anyhow::Context;
use evpipe_core::association::SampleBundle;
use evpipe_core::io::read_sample_bundle;
use evpipe_core::{BBox, Polarity};
use image::{Rgb, RgbImage};

use crate::args::{Global, RenderArgs};

pub const BOX_COLOR: Rgb<u8> = Rgb([0, 0, 255]);

fn level(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Inclusive pixel span `[floor(a*s), ceil(b*s) - 1]` of the interval
/// `[a, b)`, clamped to `[0, len - 1]`. `None` when it misses the image.
pub fn pixel_span(a: f64, b: f64, scale: u32, len: u32) -> Option<(u32, u32)> {
    let s = f64::from(scale);
    let lo = (a * s).floor();
    let hi = (b * s).ceil() - 1.0;
    if hi < 0.0 || lo > f64::from(len - 1) || hi < lo {
        return None;
    }
    Some((lo.max(0.0) as u32, hi.min(f64::from(len - 1)) as u32))
}

fn draw_box(img: &mut RgbImage, b: &BBox, scale: u32) {
    let (w, h) = img.dimensions();
    let (Some((x0, x1)), Some((y0, y1))) = (
        pixel_span(b.x, b.x + b.w, scale, w),
        pixel_span(b.y, b.y + b.h, scale, h),
    ) else {
        return;
    };
    for x in x0..=x1 {
        img.put_pixel(x, y0, BOX_COLOR);
        img.put_pixel(x, y1, BOX_COLOR);
    }
    for y in y0..=y1 {
        img.put_pixel(x0, y, BOX_COLOR);
        img.put_pixel(x1, y, BOX_COLOR);
    }
}

/// Positive events in red, negative in green, labels as blue outlines.
pub fn render(bundle: &SampleBundle, scale: u32, boxes: bool) -> RgbImage {
    let h = &bundle.histogram;
    let g = h.geometry;
    let (pos, neg) = (h.channel(Polarity::Positive), h.channel(Polarity::Negative));
    let mut img = RgbImage::from_fn(g.width * scale, g.height * scale, |x, y| {
        let i = (y / scale * g.width + x / scale) as usize;
        Rgb([level(pos[i]), level(neg[i]), 0])
    });
    if boxes {
        for a in &bundle.annotations {
            draw_box(&mut img, &a.bbox, scale);
        }
    }
    img
}

pub fn run(_global: &Global, args: &RenderArgs) -> anyhow::Result<()> {
    let b = read_sample_bundle(&args.bundle).with_context(|| format!("cannot read {}", args.bundle.display()))?;
    let img = render(&b, args.scale, !args.no_boxes);
    img.save_with_format(&args.out, image::ImageFormat::Png)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}
