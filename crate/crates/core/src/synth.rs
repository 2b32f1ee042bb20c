//! Synthetic scene renderers with known ground truth: perspective sector
//! scenes for segmentation and vanishing-point experiments, and rendered
//! line/arc/triangle images for detector tests. Also used by the benches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{polar_angle, Point2, Triangle2};
use crate::imagebuf::ImageBuffer;
use crate::labels::RegionLabelMap;

/// Render with 3x3 supersampling so region boundaries come out
/// anti-aliased, as they would in a resampled photograph.
fn supersampled(width: u32, height: u32, f: impl Fn(f64, f64) -> [u8; 3]) -> ImageBuffer {
    ImageBuffer::from_fn(width, height, |x, y| {
        let mut acc = [0.0f64; 3];
        for sy in 0..3 {
            for sx in 0..3 {
                let px = x as f64 + (2 * sx + 1) as f64 / 6.0;
                let py = y as f64 + (2 * sy + 1) as f64 / 6.0;
                let c = f(px, py);
                for k in 0..3 {
                    acc[k] += c[k] as f64;
                }
            }
        }
        [(acc[0] / 9.0).round() as u8, (acc[1] / 9.0).round() as u8, (acc[2] / 9.0).round() as u8]
    })
    .expect("valid dimensions")
}

/// A perspective scene of angular plane sectors around a vanishing point,
/// radially banded so that plane boundaries are photometrically ambiguous:
/// adjacent bands within a plane contrast strongly, while colors across a
/// plane boundary differ only slightly at equal radius.
///
/// Returns the image and the ground-truth plane label map.
pub fn sector_scene(
    width: u32,
    height: u32,
    vp: Point2,
    plane_count: usize,
    seed: u64,
) -> (ImageBuffer, RegionLabelMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // sector boundaries: evenly spaced with jitter
    let mut boundaries: Vec<f64> = (0..plane_count)
        .map(|i| {
            let base = i as f64 * 360.0 / plane_count as f64;
            (base + rng.gen_range(-12.0..12.0)).rem_euclid(360.0)
        })
        .collect();
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let band_width = 42.0;
    let band_palette = [70.0, 190.0];
    let plane_for = |theta: f64| -> usize {
        // index of the sector containing theta
        for (i, w) in boundaries.windows(2).enumerate() {
            if theta >= w[0] && theta < w[1] {
                return i;
            }
        }
        plane_count - 1
    };
    let color_at = |x: f64, y: f64| -> [u8; 3] {
        let p = Point2::new(x, y);
        let (theta, r) = match polar_angle(vp, p) {
            Ok(t) => (t, p.distance(&vp)),
            Err(_) => (boundaries[0], 0.0),
        };
        let plane = plane_for(theta);
        let band = (r / band_width) as usize;
        let base = band_palette[band % band_palette.len()];
        // small plane-dependent chroma offset keeps boundaries detectable
        // but photometrically weak
        let off = 6.0 * plane as f64;
        let v = |c: f64| c.clamp(0.0, 255.0) as u8;
        [v(base + off), v(base), v(base - off)]
    };
    let img = supersampled(width, height, color_at);
    let mut labels = vec![0u32; (width * height) as usize];
    for y in 0..height {
        for x in 0..width {
            let p = Point2::new(x as f64, y as f64);
            let theta = polar_angle(vp, p).unwrap_or(boundaries[0]);
            labels[(y * width + x) as usize] = plane_for(theta) as u32;
        }
    }
    let gt = RegionLabelMap::from_labels(width, height, &labels).expect("sizes match");
    (img, gt)
}

/// A star of angular sectors with strong pairwise color contrast; the
/// sector boundaries all converge at `vp`.
pub fn star_scene(width: u32, height: u32, vp: Point2, sector_count: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const PALETTE: [[u8; 3]; 12] = [
        [200, 60, 60],
        [60, 200, 60],
        [60, 60, 200],
        [220, 200, 40],
        [40, 200, 220],
        [220, 40, 220],
        [240, 140, 40],
        [120, 220, 120],
        [140, 80, 220],
        [90, 90, 90],
        [230, 230, 230],
        [30, 120, 60],
    ];
    let mut boundaries: Vec<f64> = (0..sector_count)
        .map(|i| {
            let base = i as f64 * 360.0 / sector_count as f64;
            (base + rng.gen_range(-10.0..10.0)).rem_euclid(360.0)
        })
        .collect();
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    supersampled(width, height, |x, y| {
        let p = Point2::new(x, y);
        let theta = polar_angle(vp, p).unwrap_or(boundaries[0]);
        let mut sector = sector_count - 1;
        for (i, w) in boundaries.windows(2).enumerate() {
            if theta >= w[0] && theta < w[1] {
                sector = i;
                break;
            }
        }
        PALETTE[sector % PALETTE.len()]
    })
}

/// Distance from a point to a segment.
fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    (p.x - (a.x + t * dx)).hypot(p.y - (a.y + t * dy))
}

fn blend(img: &mut ImageBuffer, x: u32, y: u32, color: [u8; 3], coverage: f64) {
    let cov = coverage.clamp(0.0, 1.0);
    let cur = img.get(x, y);
    let mix = |c: u8, n: u8| ((1.0 - cov) * c as f64 + cov * n as f64).round() as u8;
    img.set(x, y, [mix(cur[0], color[0]), mix(cur[1], color[1]), mix(cur[2], color[2])]);
}

/// Draw an anti-aliased stroke of the given thickness: per-pixel coverage
/// falls off linearly with distance from the stroke spine, as it would in
/// a resampled photograph.
pub fn draw_stroke(img: &mut ImageBuffer, p0: Point2, p1: Point2, color: [u8; 3], thickness: f64) {
    let r = (thickness * 0.5).max(0.5);
    let pad = r + 1.5;
    let x0 = (p0.x.min(p1.x) - pad).floor().max(0.0) as u32;
    let x1 = ((p0.x.max(p1.x) + pad).ceil().max(0.0) as u32).min(img.width().saturating_sub(1));
    let y0 = (p0.y.min(p1.y) - pad).floor().max(0.0) as u32;
    let y1 = ((p0.y.max(p1.y) + pad).ceil().max(0.0) as u32).min(img.height().saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = segment_distance(Point2::new(x as f64, y as f64), p0, p1);
            let cov = (r + 0.5 - d).clamp(0.0, 1.0);
            if cov > 0.0 {
                blend(img, x, y, color, cov);
            }
        }
    }
}

/// A light background with the given dark strokes drawn at 1 px thickness.
pub fn line_image(width: u32, height: u32, strokes: &[(Point2, Point2)], contrast: u8) -> ImageBuffer {
    let bg = 230u8;
    let fg = bg.saturating_sub(contrast);
    let mut img = ImageBuffer::filled(width, height, [bg, bg, bg]).expect("valid dimensions");
    for &(p0, p1) in strokes {
        draw_stroke(&mut img, p0, p1, [fg, fg, fg], 1.0);
    }
    img
}

/// A circular arc stroke from `start_deg` to `end_deg` (visual angles,
/// counter-clockwise, image-up is 90).
pub fn arc_image(
    width: u32,
    height: u32,
    center: Point2,
    radius: f64,
    start_deg: f64,
    end_deg: f64,
    contrast: u8,
) -> ImageBuffer {
    let bg = 230u8;
    let fg = bg.saturating_sub(contrast);
    let mut img = ImageBuffer::filled(width, height, [bg, bg, bg]).expect("valid dimensions");
    // approximate the arc by short chords, each drawn anti-aliased
    let steps = (((end_deg - start_deg).abs() * radius.max(1.0)).to_radians() / 2.0).ceil() as usize + 1;
    let at = |t: f64| {
        let a = (start_deg + t * (end_deg - start_deg)).to_radians();
        Point2::new(center.x + radius * a.cos(), center.y - radius * a.sin())
    };
    for i in 0..steps {
        let t0 = i as f64 / steps as f64;
        let t1 = (i + 1) as f64 / steps as f64;
        draw_stroke(&mut img, at(t0), at(t1), [fg, fg, fg], 1.0);
    }
    img
}

/// A rendered two-sided triangle scene: two sides from a shared apex, each
/// with one occlusion gap in its outer fifth, plus random clutter strokes.
///
/// Returns the image and the ground-truth triangle (apex + the two full
/// side endpoints).
pub fn triangle_scene(width: u32, height: u32, seed: u64) -> (ImageBuffer, Triangle2) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let apex = Point2::new(rng.gen_range(150.0..200.0), rng.gen_range(280.0..308.0));
    let a1: f64 = rng.gen_range(20.0..40.0);
    let a2: f64 = rng.gen_range(a1 + 68.0..a1 + 80.0);
    let len1: f64 = rng.gen_range(240.0..255.0);
    let len2: f64 = rng.gen_range(240.0..255.0);
    // clip a side length so its endpoint keeps a 12 px frame margin
    let margin = 12.0;
    let clip = |angle_deg: f64, len: f64| -> f64 {
        let a = angle_deg.to_radians();
        let (dx, dy) = (a.cos(), -a.sin());
        let mut t = len;
        if dx > 1e-9 {
            t = t.min((width as f64 - margin - apex.x) / dx);
        } else if dx < -1e-9 {
            t = t.min((margin - apex.x) / dx);
        }
        if dy > 1e-9 {
            t = t.min((height as f64 - margin - apex.y) / dy);
        } else if dy < -1e-9 {
            t = t.min((margin - apex.y) / dy);
        }
        t
    };
    let endpoint = |angle_deg: f64, len: f64| {
        let a = angle_deg.to_radians();
        Point2::new(apex.x + len * a.cos(), apex.y - len * a.sin())
    };
    let e1 = endpoint(a1, clip(a1, len1));
    let e2 = endpoint(a2, clip(a2, len2));

    let mut strokes = Vec::new();
    for &end in [&e1, &e2] {
        let gap_start: f64 = rng.gen_range(0.84..0.88);
        let gap_len: f64 = rng.gen_range(0.04..0.05);
        let at = |t: f64| Point2::new(apex.x + t * (end.x - apex.x), apex.y + t * (end.y - apex.y));
        strokes.push((at(0.0), at(gap_start)));
        strokes.push((at(gap_start + gap_len), at(1.0)));
    }
    // clutter: short strokes at random positions and orientations
    let clutter = 3;
    for _ in 0..clutter {
        let cx = rng.gen_range(60.0..width as f64 - 60.0);
        let cy = rng.gen_range(40.0..height as f64 - 40.0);
        let a: f64 = rng.gen_range(0.0..180.0f64).to_radians();
        let l: f64 = rng.gen_range(25.0..45.0);
        strokes.push((
            Point2::new(cx - 0.5 * l * a.cos(), cy + 0.5 * l * a.sin()),
            Point2::new(cx + 0.5 * l * a.cos(), cy - 0.5 * l * a.sin()),
        ));
    }
    let img = line_image(width, height, &strokes, 190);
    (img, Triangle2::new(apex, e1, e2))
}
