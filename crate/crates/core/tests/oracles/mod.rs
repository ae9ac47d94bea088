//! Slow, obviously-correct reference implementations used by the property
//! tests. Each recomputes from scratch instead of sharing code with the
//! library.
#![allow(dead_code)]

use std::ops::Range;

use evpipe_core::{BBox, Event, Polarity};

/// Indices of events with `t` in `[lo, hi]`, by linear scan.
pub fn filter_window(events: &[Event], lo: i64, hi: i64) -> Vec<usize> {
    (0..events.len()).filter(|&i| events[i].t >= lo && events[i].t <= hi).collect()
}

fn as_range(idx: &[usize]) -> Option<Range<usize>> {
    let (first, last) = (*idx.first()?, *idx.last()?);
    assert_eq!(last + 1 - first, idx.len(), "selection is not contiguous");
    Some(first..last + 1)
}

pub fn fixed_time(events: &[Event], center: i64, length: i64) -> Option<Range<usize>> {
    let half = length / 2;
    as_range(&filter_window(events, center - half, center + half))
}

pub fn fixed_count(n: usize, anchor: usize, count: usize) -> Range<usize> {
    let take = count.min(n).max(1);
    // Slide a window of `take` events until it covers the anchor with the
    // anchor as close to `take / 2` events from its start as the edges allow.
    let mut best = None;
    for start in 0..=n - take {
        if !(start..start + take).contains(&anchor) {
            continue;
        }
        let before = anchor - start;
        let cost = (before as i64 - (take / 2) as i64).abs();
        if best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, start));
        }
    }
    let start = best.unwrap().1;
    start..start + take
}

/// Grid cell of a pixel: `floor(W/n) x floor(H/m)` blocks, last row and
/// column absorbing the remainder.
pub fn cell(x: u16, y: u16, width: u32, height: u32, rows: u32, cols: u32) -> usize {
    let (cw, ch) = (width / cols, height / rows);
    let c = (u32::from(x) / cw).min(cols - 1);
    let r = (u32::from(y) / ch).min(rows - 1);
    (r * cols + c) as usize
}

pub fn cell_counts(events: &[Event], width: u32, height: u32, rows: u32, cols: u32) -> Vec<u64> {
    let mut counts = vec![0u64; (rows * cols) as usize];
    for e in events {
        counts[cell(e.x, e.y, width, height, rows, cols)] += 1;
    }
    counts
}

pub fn max_excess(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let mean = total as f64 / counts.len() as f64;
    *counts.iter().max().unwrap() as f64 - mean
}

pub fn grid_threshold(
    events: &[Event],
    start: usize,
    dims: (u32, u32),
    grid: (u32, u32),
    threshold: u64,
) -> Option<Range<usize>> {
    (start + 1..=events.len()).map(|end| start..end).find(|r| {
        let counts = cell_counts(&events[r.clone()], dims.0, dims.1, grid.0, grid.1);
        counts.iter().any(|&c| c > threshold)
    })
}

/// Growth loop with every quantity recomputed from scratch per step.
pub fn adaptive(
    events: &[Event],
    anchor: usize,
    dims: (u32, u32),
    grid: (u32, u32),
    q: usize,
    t_th: i64,
    a_th: f64,
) -> Option<Range<usize>> {
    let n = events.len();
    let mut count = 1;
    loop {
        let sid = anchor.saturating_sub(q * count);
        let eid = (anchor + q * count).min(n);
        let slice = &events[sid..eid];
        let duration = slice.last().unwrap().t - slice.first().unwrap().t;
        let excess = max_excess(&cell_counts(slice, dims.0, dims.1, grid.0, grid.1));
        if duration > t_th && excess > a_th {
            return Some(sid..eid);
        }
        if sid == 0 && eid == n {
            return None;
        }
        count += 1;
    }
}

pub fn polarity_counts(events: &[Event]) -> (u64, u64) {
    let pos = events.iter().filter(|e| e.p == Polarity::Positive).count() as u64;
    (pos, events.len() as u64 - pos)
}

/// Two-pass clip and normalize over raw bins, positive channel first.
pub fn clip_normalize(bins: &[f64]) -> Vec<f64> {
    let n = bins.len() as f64;
    let mean = bins.iter().sum::<f64>() / n;
    let var = bins.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    let clipped: Vec<f64> = if sigma == 0.0 {
        bins.to_vec()
    } else {
        bins.iter().map(|&b| b.min(3.0 * sigma)).collect()
    };
    let max = clipped.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        clipped
    } else {
        clipped.iter().map(|v| v / max).collect()
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.w * a.h + b.w * b.h - inter)
}

/// Integer-coordinate IoU by counting unit pixels.
pub fn pixel_iou(a: (i32, i32, i32, i32), b: (i32, i32, i32, i32)) -> f64 {
    let inside = |r: (i32, i32, i32, i32), x: i32, y: i32| x >= r.0 && x < r.0 + r.2 && y >= r.1 && y < r.1 + r.3;
    let (lo_x, hi_x) = (a.0.min(b.0), (a.0 + a.2).max(b.0 + b.2));
    let (lo_y, hi_y) = (a.1.min(b.1), (a.1 + a.3).max(b.1 + b.3));
    let (mut inter, mut union) = (0u64, 0u64);
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let (ia, ib) = (inside(a, x, y), inside(b, x, y));
            inter += u64::from(ia && ib);
            union += u64::from(ia || ib);
        }
    }
    inter as f64 / union as f64
}

/// Visiting order: repeatedly take the highest remaining score, first index
/// on ties.
pub fn greedy_order(scores: &[f64]) -> Vec<usize> {
    let mut left: Vec<usize> = (0..scores.len()).collect();
    let mut order = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for k in 1..left.len() {
            if scores[left[k]] > scores[left[best]] {
                best = k;
            }
        }
        order.push(left.remove(best));
    }
    order
}

/// Per detection (input order): index of the ground truth it takes.
pub fn greedy_match(dets: &[(BBox, f64)], gts: &[BBox], thr: f64) -> Vec<Option<usize>> {
    let scores: Vec<f64> = dets.iter().map(|d| d.1).collect();
    let mut taken = vec![false; gts.len()];
    let mut out = vec![None; dets.len()];
    for d in greedy_order(&scores) {
        let cands: Vec<(usize, f64)> = (0..gts.len())
            .filter(|&g| !taken[g])
            .map(|g| (g, iou(&dets[d].0, &gts[g])))
            .filter(|&(_, v)| v >= thr)
            .collect();
        let top = cands.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        if let Some(&(g, _)) = cands.iter().filter(|c| c.1 == top).last() {
            taken[g] = true;
            out[d] = Some(g);
        }
    }
    out
}

/// Indices kept by exhaustive suppression, ascending.
pub fn nms(boxes: &[BBox], scores: &[f64], thr: f64) -> Vec<usize> {
    let mut alive: Vec<bool> = vec![true; boxes.len()];
    let mut kept = Vec::new();
    for i in greedy_order(scores) {
        if !alive[i] {
            continue;
        }
        kept.push(i);
        for j in 0..boxes.len() {
            if j != i && alive[j] && iou(&boxes[i], &boxes[j]) > thr {
                alive[j] = false;
            }
        }
        alive[i] = false;
    }
    kept.sort_unstable();
    kept
}

/// 101-point AP: at each recall level, the best precision among operating
/// points reaching it.
pub fn ap_from_flags(flags: &[bool], n_gt: usize) -> f64 {
    let mut points = Vec::new();
    let mut tp = 0;
    for (i, &f) in flags.iter().enumerate() {
        tp += usize::from(f);
        points.push((tp as f64 / (i + 1) as f64, tp as f64 / n_gt as f64));
    }
    let mut sum = 0.0;
    for k in 0..=100 {
        let r = if k == 100 { 1.0 } else { k as f64 * 0.01 };
        sum += points.iter().filter(|p| p.1 >= r).map(|p| p.0).fold(0.0, f64::max);
    }
    sum / 101.0
}

/// Single-image, single-class AP.
pub fn ap_single(dets: &[(BBox, f64)], gts: &[BBox], thr: f64) -> Option<f64> {
    if gts.is_empty() {
        return None;
    }
    let m = greedy_match(dets, gts, thr);
    let scores: Vec<f64> = dets.iter().map(|d| d.1).collect();
    let flags: Vec<bool> = greedy_order(&scores).iter().map(|&d| m[d].is_some()).collect();
    Some(ap_from_flags(&flags, gts.len()))
}
