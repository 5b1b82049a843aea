//! Superpixel quality measures.
//!
//! Ground-truth based: boundary recall (`rec`), undersegmentation error
//! (`ue`, the bounded variant) and the original Levinshtein form
//! (`ue_levin`). Intrinsic: explained variation (`ev`) and compactness (`co`).
//!
//! Boundary pixels are marked on one side of each crack only: a pixel is a
//! boundary pixel iff its right or bottom neighbor carries another id. The
//! same rule is applied to ground truth and segmentation.

use std::collections::HashMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::imageio::{LabImage, Labeling};

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}

pub type Result<T> = std::result::Result<T, MetricError>;

fn check_dims(aw: usize, ah: usize, bw: usize, bh: usize) -> Result<()> {
    if (aw, ah) != (bw, bh) {
        return Err(MetricError::DimensionMismatch(aw, ah, bw, bh));
    }
    Ok(())
}

pub fn boundary_pixels(lab: &Labeling) -> Vec<bool> {
    let (w, h) = (lab.width(), lab.height());
    let ids = lab.ids();
    (0..w * h)
        .map(|p| {
            let (x, y) = (p % w, p / w);
            (x + 1 < w && ids[p + 1] != ids[p]) || (y + 1 < h && ids[p + w] != ids[p])
        })
        .collect()
}

/// Fraction of ground-truth boundary pixels that have a segmentation boundary
/// pixel within Chebyshev distance `tolerance`. 1.0 if the ground truth has
/// no boundary.
pub fn boundary_recall(gt: &Labeling, seg: &Labeling, tolerance: usize) -> Result<f64> {
    check_dims(gt.width(), gt.height(), seg.width(), seg.height())?;
    let (w, h) = (gt.width(), gt.height());
    let gt_b = boundary_pixels(gt);
    let seg_b = boundary_pixels(seg);

    // prefix sums over the segmentation mask give O(1) window queries
    let stride = w + 1;
    let mut integral = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            integral[(y + 1) * stride + x + 1] = u32::from(seg_b[y * w + x])
                + integral[y * stride + x + 1]
                + integral[(y + 1) * stride + x]
                - integral[y * stride + x];
        }
    }
    let window = |x0: usize, y0: usize, x1: usize, y1: usize| {
        integral[y1 * stride + x1] + integral[y0 * stride + x0]
            - integral[y0 * stride + x1]
            - integral[y1 * stride + x0]
    };

    let (mut tp, mut fn_) = (0usize, 0usize);
    for (p, _) in gt_b.iter().enumerate().filter(|(_, &b)| b) {
        let (x, y) = (p % w, p / w);
        let x0 = x.saturating_sub(tolerance);
        let y0 = y.saturating_sub(tolerance);
        let x1 = (x + tolerance + 1).min(w);
        let y1 = (y + tolerance + 1).min(h);
        if window(x0, y0, x1, y1) > 0 {
            tp += 1;
        } else {
            fn_ += 1;
        }
    }
    if tp + fn_ == 0 {
        return Ok(1.0);
    }
    Ok(tp as f64 / (tp + fn_) as f64)
}

/// Joint pixel counts `|S_j ∩ G_i|` keyed by `(gt id, seg id)`.
fn overlaps(gt: &Labeling, seg: &Labeling) -> HashMap<(usize, usize), usize> {
    let mut counts = HashMap::new();
    for (&g, &s) in gt.ids().iter().zip(seg.ids()) {
        *counts.entry((g, s)).or_insert(0) += 1;
    }
    counts
}

pub fn undersegmentation_error(gt: &Labeling, seg: &Labeling) -> Result<f64> {
    check_dims(gt.width(), gt.height(), seg.width(), seg.height())?;
    let seg_sizes = seg.sizes();
    let leak: usize = overlaps(gt, seg)
        .iter()
        .map(|(&(_, s), &inside)| inside.min(seg_sizes[s] - inside))
        .sum();
    Ok(leak as f64 / gt.len() as f64)
}

pub fn ue_levin(gt: &Labeling, seg: &Labeling) -> Result<f64> {
    check_dims(gt.width(), gt.height(), seg.width(), seg.height())?;
    let seg_sizes = seg.sizes();
    let gt_sizes = gt.sizes();
    let mut covering = vec![0usize; gt.region_count()];
    for &(g, s) in overlaps(gt, seg).keys() {
        covering[g] += seg_sizes[s];
    }
    let total: f64 = covering
        .iter()
        .zip(&gt_sizes)
        .map(|(&c, &g)| (c - g) as f64 / g as f64)
        .sum();
    Ok(total / gt.region_count() as f64)
}

pub fn explained_variation(img: &LabImage, seg: &Labeling) -> Result<f64> {
    check_dims(img.width(), img.height(), seg.width(), seg.height())?;
    let px = img.pixels();
    if px.iter().all(|p| *p == px[0]) {
        return Ok(1.0);
    }
    let n = px.len() as f64;
    let mut mean = [0.0; 3];
    for p in px {
        for c in 0..3 {
            mean[c] += p[c] / n;
        }
    }
    let mut sums = vec![[0.0f64; 3]; seg.region_count()];
    for (p, &s) in px.iter().zip(seg.ids()) {
        for c in 0..3 {
            sums[s][c] += p[c];
        }
    }
    let sq = |a: [f64; 3], b: [f64; 3]| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
    let explained: f64 = sums
        .iter()
        .zip(seg.sizes())
        .map(|(s, size)| size as f64 * sq(s.map(|v| v / size as f64), mean))
        .sum();
    let total: f64 = px.iter().map(|&p| sq(p, mean)).sum();
    Ok((explained / total).clamp(0.0, 1.0))
}

/// Size-weighted isoperimetric quotient `4πA / P²`, with `A` the pixel count
/// and `P` the number of pixel sides on the region border (image border
/// included).
pub fn compactness(seg: &Labeling) -> f64 {
    let (w, h) = (seg.width(), seg.height());
    let ids = seg.ids();
    let mut perimeter = vec![0usize; seg.region_count()];
    for p in 0..w * h {
        let (x, y) = (p % w, p / w);
        let id = ids[p];
        let sides = [
            x == 0 || ids[p - 1] != id,
            x + 1 == w || ids[p + 1] != id,
            y == 0 || ids[p - w] != id,
            y + 1 == h || ids[p + w] != id,
        ];
        perimeter[id] += sides.iter().filter(|&&s| s).count();
    }
    let total: f64 = seg
        .sizes()
        .iter()
        .zip(&perimeter)
        .map(|(&a, &p)| {
            let a = a as f64;
            a * 4.0 * PI * a / (p as f64).powi(2)
        })
        .sum();
    total / seg.len() as f64
}

/// Boundary-recall tolerance: 0.25% of the image diagonal, rounded.
pub fn default_tolerance(width: usize, height: usize) -> usize {
    (0.0025 * ((width * width + height * height) as f64).sqrt()).round() as usize
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub rec: f64,
    pub ue: f64,
    pub ue_levin: f64,
    pub ev: f64,
    pub co: f64,
    pub k_actual: usize,
    pub tolerance_px: usize,
}

pub fn evaluate(
    img: &LabImage,
    gt: &Labeling,
    seg: &Labeling,
    tolerance: usize,
) -> Result<MetricReport> {
    check_dims(img.width(), img.height(), gt.width(), gt.height())?;
    Ok(MetricReport {
        rec: boundary_recall(gt, seg, tolerance)?,
        ue: undersegmentation_error(gt, seg)?,
        ue_levin: ue_levin(gt, seg)?,
        ev: explained_variation(img, seg)?,
        co: compactness(seg),
        k_actual: seg.region_count(),
        tolerance_px: tolerance,
    })
}
