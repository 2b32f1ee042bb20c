//! Line segment detection: level-line region growing with density control,
//! rectangle approximation with an NFA validation test, and global
//! contour-confidence filtering.

use serde::{Deserialize, Serialize};

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::imagebuf::ImageBuffer;
use crate::segmentation::{boundary_strength, BoundaryStrengthMap};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LsdConfig {
    /// Angle tolerance tau in degrees for region growing and alignment.
    pub angle_tolerance: f64,
    /// Minimum proportion of aligned points in the fitted rectangle.
    pub density_threshold: f64,
    /// Small-gradient cutoff rho on the 0-255 scale.
    pub magnitude_cutoff: f64,
    /// Number-of-false-alarms acceptance threshold.
    pub nfa_epsilon: f64,
    /// Confidence filter keeps segments with confidence >= (1 - alpha) * C.
    pub alpha: f64,
    /// Segments shorter than this are dropped before triangle fitting.
    pub min_length: f64,
}

impl Default for LsdConfig {
    fn default() -> Self {
        LsdConfig {
            angle_tolerance: 22.5,
            density_threshold: 0.2,
            magnitude_cutoff: 2.0,
            nfa_epsilon: 1.0,
            alpha: 0.5,
            min_length: 10.0,
        }
    }
}

impl LsdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.density_threshold && self.density_threshold <= 1.0) {
            return Err(Error::InvalidInput("density_threshold outside (0,1]".into()));
        }
        if !(0.0 < self.angle_tolerance && self.angle_tolerance < 90.0) {
            return Err(Error::InvalidInput("angle_tolerance outside (0,90)".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidInput("alpha outside [0,1]".into()));
        }
        Ok(())
    }
}

/// A detected line segment with its support pixels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineSegment {
    pub p0: Point2,
    pub p1: Point2,
    pub support_pixels: Vec<(u32, u32)>,
    pub confidence: f64,
}

impl LineSegment {
    pub fn length(&self) -> f64 {
        self.p0.distance(&self.p1)
    }

    pub fn orientation_deg(&self) -> f64 {
        let dx = self.p1.x - self.p0.x;
        let dy = self.p1.y - self.p0.y;
        (-dy).atan2(dx).to_degrees().rem_euclid(180.0)
    }
}

/// Per-pixel level-line orientation (degrees in [0,180)) and gradient
/// magnitude; pixels at or below the magnitude cutoff are unusable.
pub struct LevelLineField {
    width: u32,
    height: u32,
    angle: Vec<f64>,
    magnitude: Vec<f64>,
    usable: Vec<bool>,
}

impl LevelLineField {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn angle(&self, x: u32, y: u32) -> f64 {
        self.angle[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn magnitude(&self, x: u32, y: u32) -> f64 {
        self.magnitude[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn usable(&self, x: u32, y: u32) -> bool {
        self.usable[(y * self.width + x) as usize]
    }

    pub fn usable_count(&self) -> usize {
        self.usable.iter().filter(|&&u| u).count()
    }
}

/// Smallest absolute difference between two orientations modulo 180.
fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Level-line field on a 2x2 finite-difference stencil. The level line is
/// perpendicular to the gradient; orientation uses the image-up-is-90
/// convention shared with the rest of the crate.
pub fn level_line_field(img: &ImageBuffer, cfg: &LsdConfig) -> LevelLineField {
    let (w, h) = (img.width(), img.height());
    let n = (w * h) as usize;
    let mut angle = vec![0.0; n];
    let mut magnitude = vec![0.0; n];
    let mut usable = vec![false; n];
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let a = img.luma(x, y);
            let b = img.luma(x + 1, y);
            let c = img.luma(x, y + 1);
            let d = img.luma(x + 1, y + 1);
            let gx = (b + d - a - c) / 2.0;
            let gy = (c + d - a - b) / 2.0;
            let mag = gx.hypot(gy);
            let i = (y * w + x) as usize;
            magnitude[i] = mag;
            if mag > cfg.magnitude_cutoff {
                // level-line direction is the gradient rotated by 90 degrees
                let (dx, dy) = (-gy, gx);
                angle[i] = (-dy).atan2(dx).to_degrees().rem_euclid(180.0);
                usable[i] = true;
            }
        }
    }
    LevelLineField { width: w, height: h, angle, magnitude, usable }
}

/// A connected set of pixels sharing level-line orientation within tolerance.
#[derive(Debug, Clone)]
pub struct LineSupportRegion {
    pub pixels: Vec<(u32, u32)>,
    pub mean_angle: f64,
}

/// Partition usable pixels into line-support regions. Seeds are taken in
/// decreasing magnitude order; growth is 8-connected and admits pixels
/// within tolerance of the running mean angle. Each pixel is used once.
pub fn grow_regions(field: &LevelLineField, cfg: &LsdConfig) -> Vec<LineSupportRegion> {
    let (w, h) = (field.width, field.height);
    let mut order: Vec<u32> = (0..(w * h))
        .filter(|&i| field.usable[i as usize])
        .collect();
    order.sort_by(|&a, &b| {
        field.magnitude[b as usize]
            .partial_cmp(&field.magnitude[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut used = vec![false; (w * h) as usize];
    let mut regions = Vec::new();
    for &seed in &order {
        if used[seed as usize] {
            continue;
        }
        let (sx, sy) = (seed % w, seed / w);
        let mut pixels = vec![(sx, sy)];
        used[seed as usize] = true;
        let seed_angle = field.angle[seed as usize];
        // running mean via doubled-angle vector sum (orientation mod 180)
        let mut vx = (2.0 * seed_angle.to_radians()).cos();
        let mut vy = (2.0 * seed_angle.to_radians()).sin();
        let mut mean = seed_angle;
        let mut head = 0;
        while head < pixels.len() {
            let (px, py) = pixels[head];
            head += 1;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = px as i64 + dx;
                    let ny = py as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let ni = (ny as u32 * w + nx as u32) as usize;
                    if used[ni] || !field.usable[ni] {
                        continue;
                    }
                    let a = field.angle[ni];
                    if angle_diff(a, mean) <= cfg.angle_tolerance {
                        used[ni] = true;
                        pixels.push((nx as u32, ny as u32));
                        vx += (2.0 * a.to_radians()).cos();
                        vy += (2.0 * a.to_radians()).sin();
                        mean = (vy.atan2(vx).to_degrees() / 2.0).rem_euclid(180.0);
                    }
                }
            }
        }
        regions.push(LineSupportRegion { pixels, mean_angle: mean });
    }
    regions
}

/// Rectangle approximation of a line-support region.
#[derive(Debug, Clone)]
pub struct RectFit {
    pub center: Point2,
    /// unit axis in image coordinates
    pub axis: (f64, f64),
    pub axis_angle: f64,
    pub lmin: f64,
    pub lmax: f64,
    pub half_width: f64,
}

fn fit_rect(pixels: &[(u32, u32)], field: &LevelLineField) -> Option<RectFit> {
    if pixels.len() < 2 {
        return None;
    }
    let mut wsum = 0.0;
    let (mut cx, mut cy) = (0.0, 0.0);
    for &(x, y) in pixels {
        let m = field.magnitude(x, y).max(1e-9);
        wsum += m;
        cx += m * x as f64;
        cy += m * y as f64;
    }
    cx /= wsum;
    cy /= wsum;
    let (mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let m = field.magnitude(x, y).max(1e-9);
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        mxx += m * dx * dx;
        myy += m * dy * dy;
        mxy += m * dx * dy;
    }
    mxx /= wsum;
    myy /= wsum;
    mxy /= wsum;
    // principal axis: eigenvector of the larger eigenvalue
    let tr = mxx + myy;
    let det = mxx * myy - mxy * mxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let (ax, ay) = if mxy.abs() > 1e-12 {
        (l1 - myy, mxy)
    } else if mxx >= myy {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let norm = ax.hypot(ay);
    if norm < 1e-12 {
        return None;
    }
    let axis = (ax / norm, ay / norm);
    let axis_angle = (-axis.1).atan2(axis.0).to_degrees().rem_euclid(180.0);
    let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut wmax = 0.0f64;
    for &(x, y) in pixels {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let along = dx * axis.0 + dy * axis.1;
        let across = (-dx * axis.1 + dy * axis.0).abs();
        lmin = lmin.min(along);
        lmax = lmax.max(along);
        wmax = wmax.max(across);
    }
    Some(RectFit {
        center: Point2::new(cx, cy),
        axis,
        axis_angle,
        lmin,
        lmax,
        half_width: wmax + 0.5,
    })
}

/// Number of false alarms for a rectangle with `total` pixels of which
/// `aligned` are aligned, Bonferroni-corrected by the (W*H)^(5/2) number of
/// rectangle tests. Alignment probability is tau/180.
pub fn nfa(aligned: usize, total: usize, tau_deg: f64, img_w: u32, img_h: u32) -> f64 {
    let n_tests = ((img_w as f64) * (img_h as f64)).powf(2.5);
    if aligned == 0 {
        return n_tests;
    }
    if aligned >= total {
        let p = tau_deg / 180.0;
        return n_tests * p.powi(total as i32);
    }
    let p = tau_deg / 180.0;
    // P[Bin(n, p) >= k] via the regularized incomplete beta function
    let tail = beta_reg(aligned as f64, (total - aligned + 1) as f64, p);
    n_tests * tail
}

fn count_rect(rect: &RectFit, field: &LineSupportRegion, lvl: &LevelLineField, tau: f64) -> (usize, usize) {
    let _ = field;
    let (w, h) = (lvl.width as i64, lvl.height as i64);
    // bounding box of the rectangle
    let corners = [
        (rect.lmin, rect.half_width),
        (rect.lmin, -rect.half_width),
        (rect.lmax, rect.half_width),
        (rect.lmax, -rect.half_width),
    ];
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(al, ac) in &corners {
        let x = rect.center.x + al * rect.axis.0 - ac * rect.axis.1;
        let y = rect.center.y + al * rect.axis.1 + ac * rect.axis.0;
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let mut total = 0usize;
    let mut aligned = 0usize;
    for y in (y0.floor() as i64).max(0)..=(y1.ceil() as i64).min(h - 1) {
        for x in (x0.floor() as i64).max(0)..=(x1.ceil() as i64).min(w - 1) {
            let dx = x as f64 - rect.center.x;
            let dy = y as f64 - rect.center.y;
            let along = dx * rect.axis.0 + dy * rect.axis.1;
            let across = (-dx * rect.axis.1 + dy * rect.axis.0).abs();
            if along < rect.lmin || along > rect.lmax || across > rect.half_width {
                continue;
            }
            total += 1;
            let (xu, yu) = (x as u32, y as u32);
            if lvl.usable(xu, yu) && angle_diff(lvl.angle(xu, yu), rect.axis_angle) <= tau {
                aligned += 1;
            }
        }
    }
    (total, aligned)
}

/// Approximate a region by its principal-axis rectangle and emit a segment
/// when the NFA test passes and the (possibly shrink-refined) density meets
/// the threshold. Rejection returns `None`.
pub fn rect_and_validate(
    region: &LineSupportRegion,
    field: &LevelLineField,
    cfg: &LsdConfig,
) -> Option<LineSegment> {
    let mut pixels = region.pixels.clone();
    let tau = cfg.angle_tolerance;
    loop {
        let rect = fit_rect(&pixels, field)?;
        let (total, aligned) = count_rect(&rect, region, field, tau);
        if total == 0 {
            return None;
        }
        let density = aligned as f64 / total as f64;
        if density >= cfg.density_threshold {
            let v = nfa(aligned, total, tau, field.width, field.height);
            if v > cfg.nfa_epsilon {
                return None;
            }
            let p0 = Point2::new(
                rect.center.x + rect.lmin * rect.axis.0,
                rect.center.y + rect.lmin * rect.axis.1,
            );
            let p1 = Point2::new(
                rect.center.x + rect.lmax * rect.axis.0,
                rect.center.y + rect.lmax * rect.axis.1,
            );
            return Some(LineSegment { p0, p1, support_pixels: pixels, confidence: 0.0 });
        }
        // shrink refinement: keep pixels close to the center and refit
        let radius = pixels
            .iter()
            .map(|&(x, y)| (x as f64 - rect.center.x).hypot(y as f64 - rect.center.y))
            .fold(0.0f64, f64::max);
        let cut = radius * 0.75;
        let before = pixels.len();
        pixels.retain(|&(x, y)| (x as f64 - rect.center.x).hypot(y as f64 - rect.center.y) <= cut);
        if pixels.len() < 2 || pixels.len() == before {
            return None;
        }
    }
}

/// Set each segment's confidence to the max contour confidence over its
/// support pixels, then keep segments with confidence >= (1 - alpha) * C
/// where C is the max confidence over all segments.
pub fn confidence_filter(
    mut segments: Vec<LineSegment>,
    contours: &BoundaryStrengthMap,
    alpha: f64,
) -> Vec<LineSegment> {
    if segments.is_empty() {
        return segments;
    }
    for seg in &mut segments {
        seg.confidence = seg
            .support_pixels
            .iter()
            .map(|&(x, y)| contours.get(x, y))
            .fold(0.0, f64::max);
    }
    let c = segments.iter().map(|s| s.confidence).fold(0.0, f64::max);
    let threshold = (1.0 - alpha) * c;
    segments.retain(|s| s.confidence >= threshold);
    segments
}

/// Full detection pipeline. When no contour map is supplied, the boundary
/// strength of the image substitutes for confidence filtering.
pub fn detect_line_segments(
    img: &ImageBuffer,
    cfg: &LsdConfig,
    contours: Option<&BoundaryStrengthMap>,
) -> Result<Vec<LineSegment>> {
    cfg.validate()?;
    let field = level_line_field(img, cfg);
    let regions = grow_regions(&field, cfg);
    let mut segments: Vec<LineSegment> = regions
        .iter()
        .filter_map(|r| rect_and_validate(r, &field, cfg))
        .filter(|s| s.length() >= cfg.min_length)
        .collect();
    let fallback;
    let contours = match contours {
        Some(c) => {
            if c.width() != img.width() || c.height() != img.height() {
                return Err(Error::DimensionMismatch("contour map size".into()));
            }
            c
        }
        None => {
            fallback = boundary_strength(img);
            &fallback
        }
    };
    segments = confidence_filter(segments, contours, cfg.alpha);
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_image() -> ImageBuffer {
        ImageBuffer::from_fn(64, 64, |x, _| if x < 32 { [0, 0, 0] } else { [200, 200, 200] })
            .unwrap()
    }

    #[test]
    fn vertical_step_edge_level_lines_are_vertical() {
        let field = level_line_field(&step_image(), &LsdConfig::default());
        for y in 5..60 {
            assert!(field.usable(31, y));
            assert!((field.angle(31, y) - 90.0).abs() < 1e-9, "angle {}", field.angle(31, y));
        }
    }

    #[test]
    fn constant_image_has_no_usable_pixels() {
        let img = ImageBuffer::filled(32, 32, [77, 77, 77]).unwrap();
        let field = level_line_field(&img, &LsdConfig::default());
        assert_eq!(field.usable_count(), 0);
    }

    #[test]
    fn diagonal_ramp_level_lines_at_135() {
        // brightness increasing toward visual up-right
        let img = ImageBuffer::from_fn(64, 64, |x, y| {
            let v = ((x as i64 - y as i64 + 64) * 2).clamp(0, 255) as u8;
            [v, v, v]
        })
        .unwrap();
        let field = level_line_field(&img, &LsdConfig::default());
        assert!(field.usable(32, 32));
        assert!((field.angle(32, 32) - 135.0).abs() < 1e-6, "angle {}", field.angle(32, 32));
    }

    #[test]
    fn grow_regions_partition_usable_pixels() {
        let field = level_line_field(&step_image(), &LsdConfig::default());
        let regions = grow_regions(&field, &LsdConfig::default());
        let total: usize = regions.iter().map(|r| r.pixels.len()).sum();
        assert_eq!(total, field.usable_count());
        let mut seen = std::collections::HashSet::new();
        for r in &regions {
            for p in &r.pixels {
                assert!(seen.insert(*p), "pixel {p:?} in two regions");
            }
        }
    }

    #[test]
    fn perpendicular_lines_make_two_regions() {
        // an L shape: vertical and horizontal strokes meeting at a corner
        let img = ImageBuffer::from_fn(64, 64, |x, y| {
            if (x == 20 && (10..54).contains(&y)) || (y == 53 && (20..54).contains(&x)) {
                [255, 255, 255]
            } else {
                [0, 0, 0]
            }
        })
        .unwrap();
        let cfg = LsdConfig::default();
        let field = level_line_field(&img, &cfg);
        let regions: Vec<_> = grow_regions(&field, &cfg)
            .into_iter()
            .filter(|r| r.pixels.len() >= 10)
            .collect();
        assert!(regions.len() >= 2, "got {} regions", regions.len());
    }

    #[test]
    fn nfa_monotone_in_aligned_points() {
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let v = nfa(k, 100, 22.5, 500, 330);
            assert!(v <= prev + 1e-9, "NFA increased at k={k}");
            prev = v;
        }
    }

    #[test]
    fn tiny_region_rejected_by_nfa() {
        // binomial tail for 3 aligned of 3 at p=0.125, corrected by
        // (500*330)^2.5 tests, is far above epsilon = 1
        let v = nfa(3, 3, 22.5, 500, 330);
        assert!(v > 1.0, "nfa {v}");
    }

    #[test]
    fn confidence_filter_arithmetic() {
        let seg = |conf: f64, x: u32| LineSegment {
            p0: Point2::new(0.0, 0.0),
            p1: Point2::new(10.0, 0.0),
            support_pixels: vec![(x, 0)],
            confidence: conf,
        };
        let contours = BoundaryStrengthMap::new(3, 1, vec![0.9, 0.5, 0.3]).unwrap();
        let segs = vec![seg(0.0, 0), seg(0.0, 1), seg(0.0, 2)];
        let kept = confidence_filter(segs.clone(), &contours, 0.5);
        let confs: Vec<f64> = kept.iter().map(|s| s.confidence).collect();
        assert_eq!(confs, vec![0.9, 0.5]);

        // alpha = 1 keeps everything
        assert_eq!(confidence_filter(segs.clone(), &contours, 1.0).len(), 3);
        // alpha -> 0 keeps only the maximal-confidence segment
        assert_eq!(confidence_filter(segs, &contours, 0.0).len(), 1);
    }

    #[test]
    fn blank_image_detects_nothing() {
        let img = ImageBuffer::filled(64, 64, [128, 128, 128]).unwrap();
        let segs = detect_line_segments(&img, &LsdConfig::default(), None).unwrap();
        assert!(segs.is_empty());
    }

    #[test]
    fn emitted_segments_meet_density() {
        let img = step_image();
        let cfg = LsdConfig::default();
        let field = level_line_field(&img, &cfg);
        for region in grow_regions(&field, &cfg) {
            if let Some(seg) = rect_and_validate(&region, &field, &cfg) {
                // re-fit the accepted support and check the density bound
                let rect = fit_rect(&seg.support_pixels, &field).unwrap();
                let (total, aligned) = count_rect(&rect, &region, &field, cfg.angle_tolerance);
                assert!(aligned as f64 / total as f64 >= cfg.density_threshold);
            }
        }
    }
}
