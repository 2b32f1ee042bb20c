//! Dominant vanishing point detection by exhaustive grid search maximizing
//! the boundary-consensus score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::imagebuf::ImageBuffer;
use crate::labels::{region_adjacency, RegionLabelMap};
use crate::par::maybe_par_map;
use crate::segmentation::{
    boundary_strength, build_histogram, geometric_weight, overseg_initial, photometric_weight,
    BoundaryStrengthMap, SegmentationConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VpSearchConfig {
    pub grid_cols: u32,
    pub grid_rows: u32,
    pub coarse_to_fine: bool,
    /// Minimum region size for the internal over-segmentation. Consensus
    /// scoring needs regions with substantial angular support; thin sliver
    /// regions left along anti-aliased boundaries otherwise flood the score
    /// with near-degenerate histogram pairs.
    pub overseg_min_size: usize,
}

impl Default for VpSearchConfig {
    fn default() -> Self {
        VpSearchConfig { grid_cols: 50, grid_rows: 33, coarse_to_fine: false, overseg_min_size: 600 }
    }
}

impl VpSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_cols < 2 || self.grid_rows < 2 {
            return Err(Error::InvalidInput("grid must be at least 2x2".into()));
        }
        Ok(())
    }
}

/// Scores over the search grid plus the argmax.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VpScoreMap {
    pub grid_cols: u32,
    pub grid_rows: u32,
    /// Row-major (row index varies slowest), `grid_rows * grid_cols` values.
    pub scores: Vec<f64>,
    pub best: Point2,
    pub best_score: f64,
}

/// Pole-independent per-edge data reused across all grid vertices.
pub struct ConsensusInput {
    /// Pixels of each region.
    pub region_pixels: Vec<Vec<(u32, u32)>>,
    /// (region i, region j, W_p) per adjacency edge.
    pub edges: Vec<(u32, u32, f64)>,
}

impl ConsensusInput {
    pub fn prepare(overseg: &RegionLabelMap, strengths: &BoundaryStrengthMap) -> Result<Self> {
        let adjacency = region_adjacency(overseg);
        let mut edges = Vec::with_capacity(adjacency.edges.len());
        for ((i, j), pairs) in &adjacency.edges {
            edges.push((*i, *j, photometric_weight(pairs, strengths)?));
        }
        Ok(ConsensusInput { region_pixels: overseg.region_pixels(), edges })
    }
}

/// Consensus score for one pole: sum over adjacency edges of `W_p * W_g`,
/// where `W_g` uses histograms rebuilt around the given pole.
pub fn consensus_score(input: &ConsensusInput, pole: Point2) -> f64 {
    if input.edges.is_empty() {
        return 0.0;
    }
    let histograms: Vec<_> = input
        .region_pixels
        .iter()
        .map(|px| build_histogram(px, pole).ok())
        .collect();
    let mut score = 0.0;
    for &(i, j, w_p) in &input.edges {
        if let (Some(hi), Some(hj)) = (&histograms[i as usize], &histograms[j as usize]) {
            if let Ok(w_g) = geometric_weight(hi, hj) {
                score += w_p * w_g;
            }
        }
    }
    score
}

/// Grid vertex positions: cell centers of an m x n partition of the frame.
fn grid_points(width: u32, height: u32, cols: u32, rows: u32) -> Vec<Point2> {
    let mut pts = Vec::with_capacity((cols * rows) as usize);
    for r in 0..rows {
        for c in 0..cols {
            let x = (c as f64 + 0.5) * width as f64 / cols as f64;
            let y = (r as f64 + 0.5) * height as f64 / rows as f64;
            pts.push(Point2::new(x, y));
        }
    }
    pts
}

fn argmax_row_major(scores: &[f64]) -> (usize, f64) {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    (best, best_score)
}

/// Score a fixed list of poles; parallel across poles when enabled.
pub fn score_poles(input: &ConsensusInput, poles: &[Point2]) -> Vec<f64> {
    maybe_par_map(poles, |&p| consensus_score(input, p))
}

/// Sequential reference used by the benches for parallel-vs-serial timing.
pub fn score_poles_seq(input: &ConsensusInput, poles: &[Point2]) -> Vec<f64> {
    crate::par::seq_map(poles, |&p| consensus_score(input, p))
}

/// Detect the dominant vanishing point by evaluating the consensus score at
/// every grid vertex (the search is restricted to the image frame).
pub fn detect_dominant_vp(img: &ImageBuffer, cfg: &VpSearchConfig) -> Result<VpScoreMap> {
    cfg.validate()?;
    let seg_cfg =
        SegmentationConfig { overseg_min_size: cfg.overseg_min_size, ..SegmentationConfig::default() };
    let overseg = overseg_initial(img, &seg_cfg);
    let strengths = boundary_strength(img);
    let input = ConsensusInput::prepare(&overseg, &strengths)?;
    detect_on_input(&input, img.width(), img.height(), cfg)
}

/// Grid search over a prepared consensus input.
pub fn detect_on_input(
    input: &ConsensusInput,
    width: u32,
    height: u32,
    cfg: &VpSearchConfig,
) -> Result<VpScoreMap> {
    cfg.validate()?;
    if cfg.coarse_to_fine {
        return detect_coarse_to_fine(input, width, height, cfg);
    }
    let poles = grid_points(width, height, cfg.grid_cols, cfg.grid_rows);
    let scores = score_poles(input, &poles);
    let (best_idx, best_score) = argmax_row_major(&scores);
    Ok(VpScoreMap {
        grid_cols: cfg.grid_cols,
        grid_rows: cfg.grid_rows,
        scores,
        best: poles[best_idx],
        best_score,
    })
}

/// Coarse 10x7 pass, then full-resolution refinement restricted to the 3x3
/// cell neighborhood of the coarse argmax. The exhaustive search is the
/// reference; scores outside the refined window are reported as 0.
fn detect_coarse_to_fine(
    input: &ConsensusInput,
    width: u32,
    height: u32,
    cfg: &VpSearchConfig,
) -> Result<VpScoreMap> {
    let (cc, cr) = (10u32.min(cfg.grid_cols), 7u32.min(cfg.grid_rows));
    let coarse = grid_points(width, height, cc, cr);
    let coarse_scores = score_poles(input, &coarse);
    let (ci, _) = argmax_row_major(&coarse_scores);
    let (crow, ccol) = (ci as u32 / cc, ci as u32 % cc);
    // bounding box of the 3x3 coarse-cell neighborhood
    let x0 = ccol.saturating_sub(1) as f64 * width as f64 / cc as f64;
    let x1 = ((ccol + 2).min(cc)) as f64 * width as f64 / cc as f64;
    let y0 = crow.saturating_sub(1) as f64 * height as f64 / cr as f64;
    let y1 = ((crow + 2).min(cr)) as f64 * height as f64 / cr as f64;

    let fine = grid_points(width, height, cfg.grid_cols, cfg.grid_rows);
    let selected: Vec<(usize, Point2)> = fine
        .iter()
        .enumerate()
        .filter(|(_, p)| p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1)
        .map(|(i, &p)| (i, p))
        .collect();
    let poles: Vec<Point2> = selected.iter().map(|&(_, p)| p).collect();
    let sel_scores = score_poles(input, &poles);
    let mut scores = vec![0.0; fine.len()];
    for (&(idx, _), &s) in selected.iter().zip(&sel_scores) {
        scores[idx] = s;
    }
    let (best_idx, best_score) = argmax_row_major(&scores);
    Ok(VpScoreMap {
        grid_cols: cfg.grid_cols,
        grid_rows: cfg.grid_rows,
        scores,
        best: fine[best_idx],
        best_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_all_scores_zero() {
        let img = ImageBuffer::filled(100, 66, [90, 90, 90]).unwrap();
        let cfg = VpSearchConfig { grid_cols: 10, grid_rows: 7, ..VpSearchConfig::default() };
        let map = detect_dominant_vp(&img, &cfg).unwrap();
        assert!(map.scores.iter().all(|&s| s == 0.0));
        // deterministic row-major tie-break: first grid vertex
        let first = grid_points(100, 66, 10, 7)[0];
        assert_eq!(map.best, first);
    }

    #[test]
    fn single_region_scores_zero() {
        let labels = RegionLabelMap::from_labels(4, 4, &[0; 16]).unwrap();
        let strengths = BoundaryStrengthMap::new(4, 4, vec![1.0; 16]).unwrap();
        let input = ConsensusInput::prepare(&labels, &strengths).unwrap();
        assert_eq!(consensus_score(&input, Point2::new(2.0, 2.0)), 0.0);
    }

    #[test]
    fn zero_photometric_strength_scores_zero() {
        let raw: Vec<u32> = (0..16).map(|i| i % 2).collect();
        let labels = RegionLabelMap::from_labels(4, 4, &raw).unwrap();
        let strengths = BoundaryStrengthMap::new(4, 4, vec![0.0; 16]).unwrap();
        let input = ConsensusInput::prepare(&labels, &strengths).unwrap();
        for &(x, y) in &[(0.5, 0.5), (2.0, 2.0), (3.5, 0.5)] {
            assert_eq!(consensus_score(&input, Point2::new(x, y)), 0.0);
        }
    }

    #[test]
    fn scores_are_nonnegative_and_deterministic() {
        let img = ImageBuffer::from_fn(64, 48, |x, y| {
            [((x * 5 + y * 3) % 256) as u8, ((x * 11) % 256) as u8, ((y * 7) % 256) as u8]
        })
        .unwrap();
        let cfg = VpSearchConfig { grid_cols: 6, grid_rows: 4, ..VpSearchConfig::default() };
        let a = detect_dominant_vp(&img, &cfg).unwrap();
        let b = detect_dominant_vp(&img, &cfg).unwrap();
        assert!(a.scores.iter().all(|&s| s >= 0.0));
        assert_eq!(a.scores, b.scores);
        assert_eq!(a.best, b.best);
    }
}
