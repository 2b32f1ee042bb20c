//! Evaluation machinery: segmentation benchmarks (RI, VOI, SC),
//! vanishing-point success rates, and triangle precision/recall.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle2};
use crate::labels::RegionLabelMap;

/// Two partitions over the same pixel grid with their region-overlap
/// contingency table.
pub struct PartitionPair {
    pub n: u64,
    pub sizes1: Vec<u64>,
    pub sizes2: Vec<u64>,
    /// (region in s1, region in s2) -> overlap pixel count
    pub contingency: HashMap<(u32, u32), u64>,
}

impl PartitionPair {
    pub fn new(s1: &RegionLabelMap, s2: &RegionLabelMap) -> Result<Self> {
        if s1.width() != s2.width() || s1.height() != s2.height() {
            return Err(Error::DimensionMismatch("partition dimensions differ".into()));
        }
        let mut contingency: HashMap<(u32, u32), u64> = HashMap::new();
        for (&a, &b) in s1.labels().iter().zip(s2.labels()) {
            *contingency.entry((a, b)).or_insert(0) += 1;
        }
        let mut sizes1 = vec![0u64; s1.num_regions() as usize];
        let mut sizes2 = vec![0u64; s2.num_regions() as usize];
        for (&(a, b), &c) in &contingency {
            sizes1[a as usize] += c;
            sizes2[b as usize] += c;
        }
        Ok(PartitionPair { n: s1.labels().len() as u64, sizes1, sizes2, contingency })
    }
}

fn pairs(n: u64) -> u64 {
    n * (n - 1) / 2
}

/// Rand index: probability that an arbitrary pixel pair has the same label
/// in both partitions or different labels in both. Closed form from the
/// contingency table.
pub fn rand_index(p: &PartitionPair) -> f64 {
    let total = pairs(p.n);
    if total == 0 {
        return 1.0;
    }
    let sum_nij: u64 = p.contingency.values().map(|&c| pairs(c)).sum();
    let sum_a: u64 = p.sizes1.iter().map(|&c| pairs(c)).sum();
    let sum_b: u64 = p.sizes2.iter().map(|&c| pairs(c)).sum();
    // agreements = same-in-both + different-in-both
    let agreements = total + 2 * sum_nij - sum_a - sum_b;
    agreements as f64 / total as f64
}

/// Variation of information in bits: `H(S1|S2) + H(S2|S1)`.
pub fn variation_of_information(p: &PartitionPair) -> f64 {
    let n = p.n as f64;
    let mut h1 = 0.0;
    for &c in &p.sizes1 {
        if c > 0 {
            let q = c as f64 / n;
            h1 -= q * q.log2();
        }
    }
    let mut h2 = 0.0;
    for &c in &p.sizes2 {
        if c > 0 {
            let q = c as f64 / n;
            h2 -= q * q.log2();
        }
    }
    let mut mi = 0.0;
    for (&(a, b), &c) in &p.contingency {
        let pij = c as f64 / n;
        let pa = p.sizes1[a as usize] as f64 / n;
        let pb = p.sizes2[b as usize] as f64 / n;
        mi += pij * (pij / (pa * pb)).log2();
    }
    (h1 + h2 - 2.0 * mi).max(0.0)
}

/// Which direction the covering is computed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoveringDirection {
    /// Covering of S1 by S2.
    S2CoversS1,
    /// Covering of S2 by S1.
    S1CoversS2,
}

/// Segmentation covering: size-weighted best Jaccard overlap per region.
pub fn segmentation_covering(p: &PartitionPair, direction: CoveringDirection) -> f64 {
    if p.n == 0 {
        return 1.0;
    }
    // best overlap per region of the covered partition
    let (covered_sizes, covering_sizes) = match direction {
        CoveringDirection::S2CoversS1 => (&p.sizes1, &p.sizes2),
        CoveringDirection::S1CoversS2 => (&p.sizes2, &p.sizes1),
    };
    let mut best = vec![0.0f64; covered_sizes.len()];
    for (&(a, b), &c) in &p.contingency {
        let (covered, covering) = match direction {
            CoveringDirection::S2CoversS1 => (a, b),
            CoveringDirection::S1CoversS2 => (b, a),
        };
        let union = covered_sizes[covered as usize] + covering_sizes[covering as usize] - c;
        let jaccard = c as f64 / union as f64;
        if jaccard > best[covered as usize] {
            best[covered as usize] = jaccard;
        }
    }
    covered_sizes
        .iter()
        .zip(&best)
        .map(|(&sz, &j)| sz as f64 * j)
        .sum::<f64>()
        / p.n as f64
}

/// Fraction of detections within Euclidean distance `t` of ground truth
/// (strict inequality).
pub fn vp_success_rate(detections: &[Point2], truths: &[Point2], t: f64) -> Result<f64> {
    if detections.len() != truths.len() {
        return Err(Error::DimensionMismatch("detections vs truths length".into()));
    }
    if detections.is_empty() {
        return Ok(0.0);
    }
    let hits = detections
        .iter()
        .zip(truths)
        .filter(|(d, g)| d.distance(g) < t)
        .count();
    Ok(hits as f64 / detections.len() as f64)
}

/// Success-rate-vs-threshold curve at the given thresholds.
pub fn vp_success_curve(detections: &[Point2], truths: &[Point2], ts: &[f64]) -> Result<Vec<(f64, f64)>> {
    ts.iter()
        .map(|&t| vp_success_rate(detections, truths, t).map(|r| (t, r)))
        .collect()
}

/// Vertex-displacement match: true iff the displacement sum over the ground
/// truth perimeter is at most `delta`, minimized over all 6 vertex
/// correspondences.
pub fn triangle_match(gt: &Triangle2, cand: &Triangle2, delta: f64) -> Result<bool> {
    Ok(triangle_match_score(gt, cand)? <= delta)
}

/// The Eq.-style displacement ratio itself (lower is better).
pub fn triangle_match_score(gt: &Triangle2, cand: &Triangle2) -> Result<f64> {
    if gt.is_degenerate() {
        return Err(Error::DegenerateTriangle);
    }
    let perimeter = gt.perimeter();
    let g = gt.vertices();
    let c = cand.vertices();
    const PERMS: [[usize; 3]; 6] =
        [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let best = PERMS
        .iter()
        .map(|perm| {
            g.iter()
                .zip(perm.iter().map(|&i| &c[i]))
                .map(|(a, b)| a.distance(b))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(best / perimeter)
}

/// Precision and recall under greedy one-to-one matching: each candidate
/// (in the given order, typically descending continuity ratio) consumes at
/// most one unmatched ground truth.
pub fn precision_recall(gt: &[Triangle2], candidates: &[Triangle2], delta: f64) -> Result<(f64, f64)> {
    let mut taken = vec![false; gt.len()];
    let mut matches = 0usize;
    for cand in candidates {
        for (i, g) in gt.iter().enumerate() {
            if !taken[i] && triangle_match(g, cand, delta)? {
                taken[i] = true;
                matches += 1;
                break;
            }
        }
    }
    let precision = if candidates.is_empty() { 0.0 } else { matches as f64 / candidates.len() as f64 };
    let recall = if gt.is_empty() { 0.0 } else { matches as f64 / gt.len() as f64 };
    Ok((precision, recall))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn map(w: u32, h: u32, raw: &[u32]) -> RegionLabelMap {
        RegionLabelMap::from_labels(w, h, raw).unwrap()
    }

    #[test]
    fn rand_index_cases() {
        let a = map(2, 2, &[0, 0, 1, 1]);
        let pair = PartitionPair::new(&a, &a).unwrap();
        assert_relative_eq!(rand_index(&pair), 1.0);

        // S1 = {{a,b},{c,d}}, S2 = one region: 2 agreeing of 6 pairs
        let one = map(2, 2, &[0, 0, 0, 0]);
        let pair = PartitionPair::new(&a, &one).unwrap();
        assert_relative_eq!(rand_index(&pair), 2.0 / 6.0, epsilon = 1e-12);

        // one region vs all singletons over n=4: no pair agrees
        let singles = map(2, 2, &[0, 1, 2, 3]);
        let pair = PartitionPair::new(&one, &singles).unwrap();
        assert_relative_eq!(rand_index(&pair), 0.0);
    }

    #[test]
    fn voi_cases() {
        let a = map(2, 2, &[0, 0, 1, 1]);
        let pair = PartitionPair::new(&a, &a).unwrap();
        assert_relative_eq!(variation_of_information(&pair), 0.0);

        let one = map(2, 2, &[0, 0, 0, 0]);
        let singles = map(2, 2, &[0, 1, 2, 3]);
        let pair = PartitionPair::new(&singles, &one).unwrap();
        assert_relative_eq!(variation_of_information(&pair), 2.0, epsilon = 1e-12);

        let halves = map(2, 2, &[0, 0, 1, 1]);
        let pair = PartitionPair::new(&halves, &one).unwrap();
        assert_relative_eq!(variation_of_information(&pair), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn covering_cases() {
        let a = map(2, 2, &[0, 0, 1, 1]);
        let pair = PartitionPair::new(&a, &a).unwrap();
        assert_relative_eq!(segmentation_covering(&pair, CoveringDirection::S2CoversS1), 1.0);

        let one = map(2, 2, &[0, 0, 0, 0]);
        let halves = map(2, 2, &[0, 0, 1, 1]);
        let pair = PartitionPair::new(&one, &halves).unwrap();
        assert_relative_eq!(
            segmentation_covering(&pair, CoveringDirection::S2CoversS1),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn symmetry() {
        let a = map(3, 2, &[0, 0, 1, 1, 2, 2]);
        let b = map(3, 2, &[0, 1, 1, 2, 2, 2]);
        let ab = PartitionPair::new(&a, &b).unwrap();
        let ba = PartitionPair::new(&b, &a).unwrap();
        assert_relative_eq!(rand_index(&ab), rand_index(&ba));
        assert_relative_eq!(variation_of_information(&ab), variation_of_information(&ba));
    }

    #[test]
    fn vp_rates() {
        let d = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 0.0),
        ];
        let g = vec![
            Point2::new(5.0, 0.0),
            Point2::new(12.0, 0.0),
            Point2::new(30.0, 0.0),
        ];
        assert_relative_eq!(vp_success_rate(&d, &g, 10.0).unwrap(), 1.0 / 3.0);
        assert_relative_eq!(vp_success_rate(&d, &g, 0.0).unwrap(), 0.0);
        assert_relative_eq!(vp_success_rate(&d, &g, 1e9).unwrap(), 1.0);
        // non-decreasing in t
        let curve = vp_success_curve(&d, &g, &[0.0, 6.0, 13.0, 31.0]).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn triangle_match_cases() {
        let gt = Triangle2::new(
            Point2::new(0.0, 0.0),
            Point2::new(100.0, 0.0),
            Point2::new(0.0, 100.0),
        );
        assert!(triangle_match(&gt, &gt, 0.3).unwrap());

        // each vertex displaced 3 px on a triangle with perimeter ~341
        let moved = Triangle2::new(
            Point2::new(3.0, 0.0),
            Point2::new(103.0, 0.0),
            Point2::new(3.0, 100.0),
        );
        assert!(triangle_match(&gt, &moved, 0.3).unwrap());

        // displacement sum 120, perimeter 300 -> 0.4 > 0.3
        let equi = Triangle2::new(
            Point2::new(0.0, 0.0),
            Point2::new(100.0, 0.0),
            Point2::new(50.0, 86.6),
        );
        let far = Triangle2::new(
            Point2::new(40.0, 0.0),
            Point2::new(140.0, 0.0),
            Point2::new(90.0, 86.6),
        );
        let score = triangle_match_score(&equi, &far).unwrap();
        assert_relative_eq!(score, 120.0 / equi.perimeter(), epsilon = 1e-9);
        assert!(!triangle_match(&equi, &far, 0.3).unwrap());
    }

    #[test]
    fn triangle_match_permutation_invariant() {
        let gt = Triangle2::new(
            Point2::new(0.0, 0.0),
            Point2::new(100.0, 0.0),
            Point2::new(0.0, 100.0),
        );
        let permuted = Triangle2::new(gt.c, gt.a, gt.b);
        assert_relative_eq!(triangle_match_score(&gt, &permuted).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_gt_is_error() {
        let bad = Triangle2::new(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 2.0),
        );
        assert!(triangle_match(&bad, &bad, 0.3).is_err());
    }

    #[test]
    fn precision_recall_cases() {
        let t = |x: f64| {
            Triangle2::new(
                Point2::new(x, 0.0),
                Point2::new(x + 100.0, 0.0),
                Point2::new(x, 100.0),
            )
        };
        let g: Vec<_> = (0..4).map(|i| t(i as f64 * 1000.0)).collect();
        let q = vec![t(0.0), t(1000.0)];
        let (p, r) = precision_recall(&g, &q, 0.3).unwrap();
        assert_relative_eq!(p, 1.0);
        assert_relative_eq!(r, 0.5);

        let g2 = vec![t(0.0), t(1000.0)];
        let q2 = vec![t(0.0), t(5000.0), t(6000.0), t(7000.0)];
        let (p, r) = precision_recall(&g2, &q2, 0.3).unwrap();
        assert_relative_eq!(p, 0.25);
        assert_relative_eq!(r, 0.5);

        let (p, r) = precision_recall(&g, &g, 0.3).unwrap();
        assert_relative_eq!(p, 1.0);
        assert_relative_eq!(r, 1.0);
    }
}
