//! Triangle fitting from candidate line segments via a modified RANSAC,
//! scored by continuity ratio and total ratio, plus sketch-query matching.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orientation_diff_deg, Line, Point2, Triangle2};
use crate::line_segments::LineSegment;
use crate::metrics::triangle_match;
use crate::par::maybe_par_map;

/// Which of the four directions the apex angle opens toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Opening {
    Up,
    Down,
    Left,
    Right,
}

impl std::str::FromStr for Opening {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Opening::Up),
            "down" => Ok(Opening::Down),
            "left" => Ok(Opening::Left),
            "right" => Ok(Opening::Right),
            other => Err(Error::InvalidInput(format!("unknown opening '{other}'"))),
        }
    }
}

/// A fitted triangle: apex at the line intersection, two fitted vertices,
/// and its quality scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleCandidate {
    pub apex: Point2,
    pub vertex1: Point2,
    pub vertex2: Point2,
    pub continuity_ratio: f64,
    pub total_ratio: f64,
    pub opening: Opening,
    /// Orientations of the two sides in degrees in [0, 180).
    pub side1_orientation: f64,
    pub side2_orientation: f64,
}

impl TriangleCandidate {
    pub fn triangle(&self) -> Triangle2 {
        Triangle2::new(self.apex, self.vertex1, self.vertex2)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: u32,
    /// Neighborhood band half-width in pixels.
    pub d_nb: f64,
    pub min_cr: f64,
    pub min_tr: f64,
    /// Pairs closer in orientation than this are rejected as near-parallel.
    pub min_pair_angle: f64,
    pub rng_seed: u64,
    /// Vertex-distance threshold for non-maximum suppression.
    pub nms_delta: f64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            iterations: 2000,
            d_nb: 5.0,
            min_cr: 0.1,
            min_tr: 0.1,
            min_pair_angle: 10.0,
            rng_seed: 0,
            nms_delta: 0.3,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_nb <= 0.0 {
            return Err(Error::InvalidInput("d_nb must be positive".into()));
        }
        for (name, v) in [("min_cr", self.min_cr), ("min_tr", self.min_tr)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} outside [0,1]")));
            }
        }
        Ok(())
    }
}

/// A sketch query: two side orientations plus an opening direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SketchQuery {
    pub orient1: f64,
    pub orient2: f64,
    pub opening: Opening,
    pub orient_tolerance: f64,
}

impl SketchQuery {
    pub fn new(orient1: f64, orient2: f64, opening: Opening) -> Result<Self> {
        let q = SketchQuery { orient1, orient2, opening, orient_tolerance: 11.25 };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let d = (self.orient1 - self.orient2).rem_euclid(180.0);
        if !(45.0..=135.0).contains(&d) && !(45.0..=135.0).contains(&(180.0 - d)) {
            return Err(Error::InvalidInput(format!(
                "included angle between {} and {} outside [45, 135]",
                self.orient1, self.orient2
            )));
        }
        Ok(())
    }
}

/// All support pixels of all segments whose perpendicular distance to the
/// line is at most `d_nb`. A segment crossing the band contributes only its
/// in-band pixels.
pub fn collect_inliers(line: &Line, segments: &[LineSegment], d_nb: f64) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for seg in segments {
        for &(x, y) in &seg.support_pixels {
            if line.distance(Point2::new(x as f64, y as f64)) <= d_nb {
                out.push((x, y));
            }
        }
    }
    out
}

/// Integer arc-length offsets of projected pixels on the two half lines at
/// `origin`. Offsets are rounded and deduplicated; offset 0 goes to the
/// positive half line.
pub fn project_pixels(
    line: &Line,
    inliers: &[(u32, u32)],
    origin: Point2,
) -> (BTreeSet<i64>, BTreeSet<i64>) {
    let dir = line.direction();
    let mut positive = BTreeSet::new();
    let mut negative = BTreeSet::new();
    for &(x, y) in inliers {
        let proj = line.project(Point2::new(x as f64, y as f64));
        let offset = (proj.x - origin.x) * dir.0 + (proj.y - origin.y) * dir.1;
        let rounded = offset.round() as i64;
        if rounded >= 0 {
            positive.insert(rounded);
        } else {
            negative.insert(-rounded);
        }
    }
    (positive, negative)
}

/// Best fitted side on a half line: for each candidate endpoint X at a
/// projected offset, the fraction of positions in [0, offset(X)] that are
/// covered, with the denominator offset(X)+1 and ties broken by the largest
/// offset. Returns (continuity ratio, offset of the chosen vertex).
pub fn continuity_ratio(projected: &BTreeSet<i64>) -> Option<(f64, i64)> {
    if projected.is_empty() {
        return None;
    }
    let mut best_cr = -1.0;
    let mut best_offset = 0i64;
    let mut covered = 0u64;
    for &offset in projected {
        covered += 1;
        let cr = (covered as f64 / (offset + 1) as f64).min(1.0);
        if cr >= best_cr {
            best_cr = cr;
            best_offset = offset;
        }
    }
    Some((best_cr, best_offset))
}

/// Opening direction from the internal-angle bisector at the apex, split
/// into 45-degree sectors around the image axes.
pub fn opening_direction(apex: Point2, v1: Point2, v2: Point2) -> Option<Opening> {
    let norm = |p: Point2| {
        let dx = p.x - apex.x;
        let dy = p.y - apex.y;
        let n = dx.hypot(dy);
        if n < 1e-12 {
            None
        } else {
            Some((dx / n, dy / n))
        }
    };
    let (ax, ay) = norm(v1)?;
    let (bx, by) = norm(v2)?;
    let (sx, sy) = (ax + bx, ay + by);
    if sx.hypot(sy) < 1e-12 {
        return None;
    }
    Some(if sx.abs() >= sy.abs() {
        if sx > 0.0 {
            Opening::Right
        } else {
            Opening::Left
        }
    } else if sy < 0.0 {
        Opening::Up
    } else {
        Opening::Down
    })
}

/// Combine side ratios into the triangle scores: continuity-ratio product,
/// total ratio (triangle area over image area), and opening direction.
/// Degenerate triangles return `None`.
pub fn score_triangle(
    apex: Point2,
    v1: Point2,
    v2: Point2,
    cr1: f64,
    cr2: f64,
    img_w: u32,
    img_h: u32,
) -> Option<(f64, f64, Opening)> {
    let tri = Triangle2::new(apex, v1, v2);
    if tri.is_degenerate() {
        return None;
    }
    let opening = opening_direction(apex, v1, v2)?;
    let total_ratio = tri.area() / (img_w as f64 * img_h as f64);
    Some((cr1 * cr2, total_ratio, opening))
}

fn half_line_vertex(line: &Line, origin: Point2, offset: i64, positive: bool) -> Point2 {
    let dir = line.direction();
    let sign = if positive { 1.0 } else { -1.0 };
    Point2::new(
        origin.x + sign * offset as f64 * dir.0,
        origin.y + sign * offset as f64 * dir.1,
    )
}

fn evaluate_pair(
    l1: &Line,
    l2: &Line,
    segments: &[LineSegment],
    cfg: &RansacConfig,
    img_w: u32,
    img_h: u32,
) -> Vec<TriangleCandidate> {
    let Some(origin) = l1.intersect(l2) else { return Vec::new() };
    let inliers1 = collect_inliers(l1, segments, cfg.d_nb);
    let inliers2 = collect_inliers(l2, segments, cfg.d_nb);
    let (pos1, neg1) = project_pixels(l1, &inliers1, origin);
    let (pos2, neg2) = project_pixels(l2, &inliers2, origin);
    let halves1 = [(pos1, true), (neg1, false)];
    let halves2 = [(pos2, true), (neg2, false)];
    let mut out = Vec::new();
    for (proj1, sign1) in &halves1 {
        let Some((cr1, off1)) = continuity_ratio(proj1) else { continue };
        let v1 = half_line_vertex(l1, origin, off1, *sign1);
        for (proj2, sign2) in &halves2 {
            let Some((cr2, off2)) = continuity_ratio(proj2) else { continue };
            let v2 = half_line_vertex(l2, origin, off2, *sign2);
            let Some((cr, tr, opening)) = score_triangle(origin, v1, v2, cr1, cr2, img_w, img_h)
            else {
                continue;
            };
            if cr >= cfg.min_cr && tr >= cfg.min_tr {
                out.push(TriangleCandidate {
                    apex: origin,
                    vertex1: v1,
                    vertex2: v2,
                    continuity_ratio: cr,
                    total_ratio: tr,
                    opening,
                    side1_orientation: l1.orientation_deg(),
                    side2_orientation: l2.orientation_deg(),
                });
            }
        }
    }
    out
}

/// Greedy non-maximum suppression: candidates sorted by descending
/// continuity ratio; a candidate is dropped when it matches an already-kept
/// one under the vertex-distance measure.
pub fn suppress_duplicates(mut candidates: Vec<TriangleCandidate>, delta: f64) -> Vec<TriangleCandidate> {
    candidates.sort_by(|a, b| {
        b.continuity_ratio
            .partial_cmp(&a.continuity_ratio)
            .unwrap()
            .then(b.total_ratio.partial_cmp(&a.total_ratio).unwrap())
            .then(a.apex.x.partial_cmp(&b.apex.x).unwrap())
            .then(a.apex.y.partial_cmp(&b.apex.y).unwrap())
    });
    let mut kept: Vec<TriangleCandidate> = Vec::new();
    for cand in candidates {
        let duplicate = kept.iter().any(|k| {
            triangle_match(&k.triangle(), &cand.triangle(), delta).unwrap_or(false)
        });
        if !duplicate {
            kept.push(cand);
        }
    }
    kept
}

/// Modified RANSAC triangle detection. Segments are canonicalized before
/// sampling so the output is invariant to input order for a fixed seed.
pub fn ransac_detect(
    segments: &[LineSegment],
    cfg: &RansacConfig,
    img_w: u32,
    img_h: u32,
) -> Result<Vec<TriangleCandidate>> {
    cfg.validate()?;
    if segments.len() < 2 {
        return Ok(Vec::new());
    }
    let mut ordered: Vec<&LineSegment> = segments.iter().collect();
    ordered.sort_by(|a, b| {
        (a.p0.x, a.p0.y, a.p1.x, a.p1.y)
            .partial_cmp(&(b.p0.x, b.p0.y, b.p1.x, b.p1.y))
            .unwrap()
    });
    let owned: Vec<LineSegment> = ordered.into_iter().cloned().collect();

    // per-iteration derived seeds keep sampling independent of scheduling
    let picks: Vec<(usize, usize)> = (0..cfg.iterations)
        .map(|it| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(it as u64));
            let i = rng.gen_range(0..owned.len());
            let mut j = rng.gen_range(0..owned.len() - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();

    let batches = maybe_par_map(&picks, |&(i, j)| {
        let si = &owned[i];
        let sj = &owned[j];
        let (Ok(l1), Ok(l2)) = (Line::through(si.p0, si.p1), Line::through(sj.p0, sj.p1)) else {
            return Vec::new();
        };
        if orientation_diff_deg(l1.orientation_deg(), l2.orientation_deg()) < cfg.min_pair_angle {
            return Vec::new();
        }
        evaluate_pair(&l1, &l2, &owned, cfg, img_w, img_h)
    });
    let all: Vec<TriangleCandidate> = batches.into_iter().flatten().collect();
    Ok(suppress_duplicates(all, cfg.nms_delta))
}

/// Filter candidates by side orientations (within tolerance, in either
/// assignment) and opening direction, ranked by descending continuity ratio.
pub fn match_sketch(query: &SketchQuery, candidates: &[TriangleCandidate]) -> Vec<TriangleCandidate> {
    let mut matched: Vec<TriangleCandidate> = candidates
        .iter()
        .filter(|c| {
            if c.opening != query.opening {
                return false;
            }
            let direct = orientation_diff_deg(c.side1_orientation, query.orient1)
                <= query.orient_tolerance
                && orientation_diff_deg(c.side2_orientation, query.orient2) <= query.orient_tolerance;
            let swapped = orientation_diff_deg(c.side1_orientation, query.orient2)
                <= query.orient_tolerance
                && orientation_diff_deg(c.side2_orientation, query.orient1) <= query.orient_tolerance;
            direct || swapped
        })
        .cloned()
        .collect();
    matched.sort_by(|a, b| b.continuity_ratio.partial_cmp(&a.continuity_ratio).unwrap());
    matched
}
