//! Contrast-limited adaptive histogram equalization for 8-bit frames.
//!
//! Follows OpenCV's `CLAHE` arithmetic: frames whose size is not a multiple
//! of the tile grid are extended with reflect-101 borders for the LUT pass,
//! per-bin clip limits are truncated to integers, the excess is spread as a
//! uniform batch plus a strided residual, and the output blends the four
//! surrounding tile LUTs in single precision.

use crate::model::Frame;

const BINS: usize = 256;

pub fn clahe(frame: &Frame, tiles_x: u32, tiles_y: u32, clip_limit: f64) -> Frame {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let (tx, ty) = (tiles_x.max(1) as usize, tiles_y.max(1) as usize);
    if w == 0 || h == 0 {
        return frame.clone();
    }

    // Source for the LUT pass, extended when the grid does not divide it.
    let (lut_src, ext_w, ext_h) = if w % tx == 0 && h % ty == 0 {
        (None, w, h)
    } else {
        let ext_w = w + tx - w % tx;
        let ext_h = h + ty - h % ty;
        (Some(extend_reflect101(frame, ext_w, ext_h)), ext_w, ext_h)
    };
    let src: &[u8] = lut_src.as_deref().unwrap_or(&frame.pixels);
    let tile_w = ext_w / tx;
    let tile_h = ext_h / ty;
    let tile_area = tile_w * tile_h;

    let clip = if clip_limit > 0.0 {
        ((clip_limit * tile_area as f64 / BINS as f64) as usize).max(1)
    } else {
        usize::MAX
    };
    let lut_scale = (BINS - 1) as f32 / tile_area as f32;

    let mut luts = vec![[0u8; BINS]; tx * ty];
    for (i, lut) in luts.iter_mut().enumerate() {
        let (col, row) = (i % tx, i / tx);
        let mut hist = [0usize; BINS];
        for y in row * tile_h..(row + 1) * tile_h {
            let line = &src[y * ext_w..(y + 1) * ext_w];
            for &v in &line[col * tile_w..(col + 1) * tile_w] {
                hist[v as usize] += 1;
            }
        }
        clip_histogram(&mut hist, clip);
        let mut sum = 0usize;
        for (level, out) in lut.iter_mut().enumerate() {
            sum += hist[level];
            *out = saturate_u8(sum as f32 * lut_scale);
        }
    }

    let inv_tw = 1.0f32 / tile_w as f32;
    let inv_th = 1.0f32 / tile_h as f32;
    let cols: Vec<(usize, usize, f32)> = (0..w)
        .map(|x| {
            let txf = x as f32 * inv_tw - 0.5;
            let t1 = txf.floor();
            let xa = txf - t1;
            let t1 = t1 as i64;
            let c1 = t1.max(0) as usize;
            let c2 = ((t1 + 1) as usize).min(tx - 1);
            (c1, c2, xa)
        })
        .collect();

    let mut out = vec![0u8; w * h];
    for y in 0..h {
        let tyf = y as f32 * inv_th - 0.5;
        let t1 = tyf.floor();
        let ya = tyf - t1;
        let ya1 = 1.0 - ya;
        let t1 = t1 as i64;
        let r1 = t1.max(0) as usize;
        let r2 = ((t1 + 1) as usize).min(ty - 1);
        for (x, &(c1, c2, xa)) in cols.iter().enumerate() {
            let v = frame.pixels[y * w + x] as usize;
            let xa1 = 1.0 - xa;
            let top = luts[r1 * tx + c1][v] as f32 * xa1 + luts[r1 * tx + c2][v] as f32 * xa;
            let bottom = luts[r2 * tx + c1][v] as f32 * xa1 + luts[r2 * tx + c2][v] as f32 * xa;
            out[y * w + x] = saturate_u8(top * ya1 + bottom * ya);
        }
    }

    Frame {
        t: frame.t,
        width: frame.width,
        height: frame.height,
        pixels: out,
    }
}

fn clip_histogram(hist: &mut [usize; BINS], limit: usize) {
    let mut clipped = 0;
    for bin in hist.iter_mut() {
        if *bin > limit {
            clipped += *bin - limit;
            *bin = limit;
        }
    }
    let batch = clipped / BINS;
    let mut residual = clipped % BINS;
    for bin in hist.iter_mut() {
        *bin += batch;
    }
    if residual > 0 {
        let step = (BINS / residual).max(1);
        let mut i = 0;
        while i < BINS && residual > 0 {
            hist[i] += 1;
            residual -= 1;
            i += step;
        }
    }
}

/// Round half to even, then clamp, as `saturate_cast<uchar>(float)`.
fn saturate_u8(v: f32) -> u8 {
    v.round_ties_even().clamp(0.0, 255.0) as u8
}

fn reflect101(i: usize, n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    let period = 2 * n - 2;
    let r = i % period;
    if r >= n {
        period - r
    } else {
        r
    }
}

fn extend_reflect101(frame: &Frame, ext_w: usize, ext_h: usize) -> Vec<u8> {
    let (w, h) = (frame.width as usize, frame.height as usize);
    let mut out = vec![0u8; ext_w * ext_h];
    for y in 0..ext_h {
        let sy = reflect101(y, h);
        for x in 0..ext_w {
            out[y * ext_w + x] = frame.pixels[sy * w + reflect101(x, w)];
        }
    }
    out
}
