//! Deterministic rendering of analysis results over a photograph: detected
//! triangle sides, the dominant vanishing point, line segments, and
//! mean-color region fills. With nothing to draw the overlay equals the
//! input image.

use crate::geometry::Point2;
use crate::imagebuf::ImageBuffer;
use crate::labels::RegionLabelMap;
use crate::line_segments::LineSegment;
use crate::triangles::TriangleCandidate;

pub const TRIANGLE_COLOR: [u8; 3] = [220, 30, 30];
pub const SEGMENT_COLOR: [u8; 3] = [30, 200, 60];
pub const VP_COLOR: [u8; 3] = [250, 220, 30];

/// Draw a line of the given thickness by stamping a disc along the span.
pub fn draw_line(img: &mut ImageBuffer, p0: Point2, p1: Point2, color: [u8; 3], thickness: f64) {
    let len = p0.distance(&p1);
    let steps = (len * 2.0).ceil() as usize + 1;
    let radius = (thickness * 0.5).max(0.5);
    for i in 0..steps {
        let t = i as f64 / (steps - 1).max(1) as f64;
        let c = Point2::new(p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y));
        draw_disc(img, c, radius, color);
    }
}

/// Fill a disc of the given radius, clipped to the frame.
pub fn draw_disc(img: &mut ImageBuffer, center: Point2, radius: f64, color: [u8; 3]) {
    let r = radius.max(0.0);
    let x0 = (center.x - r).floor().max(0.0) as u32;
    let x1 = ((center.x + r).ceil().max(0.0) as u32).min(img.width().saturating_sub(1));
    let y0 = (center.y - r).floor().max(0.0) as u32;
    let y1 = ((center.y + r).ceil().max(0.0) as u32).min(img.height().saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 - center.x;
            let dy = y as f64 - center.y;
            if dx * dx + dy * dy <= r * r {
                img.set(x, y, color);
            }
        }
    }
}

/// Draw each triangle as its two recovered sides (apex to each side vertex),
/// 2 px wide.
pub fn overlay_triangles(img: &mut ImageBuffer, triangles: &[TriangleCandidate]) {
    for t in triangles {
        draw_line(img, t.apex, t.vertex1, TRIANGLE_COLOR, 2.0);
        draw_line(img, t.apex, t.vertex2, TRIANGLE_COLOR, 2.0);
    }
}

/// Draw detected line segments, 2 px wide.
pub fn overlay_segments(img: &mut ImageBuffer, segments: &[LineSegment]) {
    for s in segments {
        draw_line(img, s.p0, s.p1, SEGMENT_COLOR, 2.0);
    }
}

/// Mark the vanishing point with a filled disc of 6 px diameter.
pub fn overlay_vp(img: &mut ImageBuffer, vp: Point2) {
    draw_disc(img, vp, 3.0, VP_COLOR);
}

/// Render a segmentation as a flat image where every region is filled with
/// its mean color from the source photograph.
pub fn region_mean_fill(img: &ImageBuffer, labels: &RegionLabelMap) -> ImageBuffer {
    let n = labels.num_regions() as usize;
    let mut sums = vec![[0u64; 3]; n];
    let mut counts = vec![0u64; n];
    for y in 0..img.height() {
        for x in 0..img.width() {
            let r = labels.get(x, y) as usize;
            let px = img.get(x, y);
            for c in 0..3 {
                sums[r][c] += px[c] as u64;
            }
            counts[r] += 1;
        }
    }
    let means: Vec<[u8; 3]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| {
            let c = c.max(1);
            [(s[0] / c) as u8, (s[1] / c) as u8, (s[2] / c) as u8]
        })
        .collect();
    ImageBuffer::from_fn(img.width(), img.height(), |x, y| means[labels.get(x, y) as usize])
        .expect("source image has valid dimensions")
}
