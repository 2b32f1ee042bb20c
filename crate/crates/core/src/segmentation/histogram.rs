//! 360-bin polar-angle histograms and the geometric distance between
//! adjacent regions.

use crate::error::{Error, Result};
use crate::geometry::{polar_angle, Point2};

pub const NUM_BINS: usize = 360;

/// Counts of region pixels per 1-degree polar-angle bin around a pole.
/// Bin `b` covers `[b, b+1)` degrees. The pole pixel itself is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarAngleHistogram {
    counts: Vec<u32>,
    total: u64,
}

impl PolarAngleHistogram {
    pub fn empty() -> Self {
        PolarAngleHistogram { counts: vec![0; NUM_BINS], total: 0 }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn add_angle(&mut self, deg: f64) {
        let bin = (deg.floor() as usize).min(NUM_BINS - 1);
        self.counts[bin] += 1;
        self.total += 1;
    }

    /// Elementwise sum; merged regions carry the sum of their parts.
    pub fn merge_in(&mut self, other: &PolarAngleHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }
}

/// Build the polar-angle histogram of a region's pixels around `pole`.
/// The pole pixel, if inside the region, is skipped; a region consisting of
/// only the pole is an error.
pub fn build_histogram(pixels: &[(u32, u32)], pole: Point2) -> Result<PolarAngleHistogram> {
    if pixels.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let mut h = PolarAngleHistogram::empty();
    for &(x, y) in pixels {
        let p = Point2::new(x as f64, y as f64);
        match polar_angle(pole, p) {
            Ok(deg) => h.add_angle(deg),
            Err(Error::UndefinedAngle) => continue,
            Err(e) => return Err(e),
        }
    }
    if h.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    Ok(h)
}

/// Geometric distance between two regions:
/// `W_g = 1 - max(sum_min/|R_i|, sum_min/|R_j|)` where `sum_min` is the
/// elementwise-min overlap of the two histograms. Zero whenever one
/// histogram dominates the other at every bin.
pub fn geometric_weight(hi: &PolarAngleHistogram, hj: &PolarAngleHistogram) -> Result<f64> {
    if hi.total == 0 || hj.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut overlap: u64 = 0;
    for (a, b) in hi.counts.iter().zip(&hj.counts) {
        overlap += u64::from(*a.min(b));
    }
    let frac = (overlap as f64 / hi.total as f64).max(overlap as f64 / hj.total as f64);
    Ok((1.0 - frac).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hist(counts: &[u32]) -> PolarAngleHistogram {
        let mut h = PolarAngleHistogram::empty();
        for (i, &c) in counts.iter().enumerate() {
            h.counts[i] = c;
            h.total += u64::from(c);
        }
        h
    }

    #[test]
    fn full_dominance_gives_zero() {
        let hi = hist(&[4, 4, 4]);
        let hj = hist(&[1, 2, 1]);
        assert_relative_eq!(geometric_weight(&hi, &hj).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_give_one() {
        let hi = hist(&[5, 0]);
        let hj = hist(&[0, 5]);
        assert_relative_eq!(geometric_weight(&hi, &hj).unwrap(), 1.0);
    }

    #[test]
    fn partial_overlap() {
        let hi = hist(&[3, 1]);
        let hj = hist(&[1, 3]);
        assert_relative_eq!(geometric_weight(&hi, &hj).unwrap(), 0.5);
    }

    #[test]
    fn symmetric() {
        let hi = hist(&[7, 2, 0, 5]);
        let hj = hist(&[1, 4, 4, 2]);
        assert_eq!(
            geometric_weight(&hi, &hj).unwrap(),
            geometric_weight(&hj, &hi).unwrap()
        );
    }

    #[test]
    fn histogram_binning() {
        // single pixel at a 45.3 degree angle lands in bin 45
        let pole = Point2::new(0.0, 0.0);
        let mut h = PolarAngleHistogram::empty();
        h.add_angle(45.3);
        assert_eq!(h.counts()[45], 1);
        assert_eq!(h.total(), 1);
        h.add_angle(45.9);
        assert_eq!(h.counts()[45], 2);

        // full ring of 360 pixels at 1-degree spacing -> every bin = 1
        // (sampled at bin centers so atan2 rounding cannot move bins)
        let mut ring = PolarAngleHistogram::empty();
        for i in 0..360 {
            let theta = (i as f64 + 0.5).to_radians();
            let p = Point2::new(1000.0 * theta.cos(), -1000.0 * theta.sin());
            ring.add_angle(polar_angle(pole, p).unwrap());
        }
        assert!(ring.counts().iter().all(|&c| c == 1));
    }

    #[test]
    fn pole_pixel_skipped() {
        let pixels = vec![(5, 5), (6, 5)];
        let h = build_histogram(&pixels, Point2::new(5.0, 5.0)).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts()[0], 1);
    }

    #[test]
    fn pole_only_region_is_error() {
        let pixels = vec![(5, 5)];
        assert!(build_histogram(&pixels, Point2::new(5.0, 5.0)).is_err());
    }

    #[test]
    fn additivity() {
        let pole = Point2::new(2.0, 2.0);
        let a: Vec<(u32, u32)> = vec![(0, 0), (1, 0), (4, 4)];
        let b: Vec<(u32, u32)> = vec![(3, 1), (0, 4)];
        let mut joint: Vec<(u32, u32)> = a.clone();
        joint.extend(&b);
        let ha = build_histogram(&a, pole).unwrap();
        let hb = build_histogram(&b, pole).unwrap();
        let hj = build_histogram(&joint, pole).unwrap();
        let mut sum = ha.clone();
        sum.merge_in(&hb);
        assert_eq!(sum, hj);
    }
}
