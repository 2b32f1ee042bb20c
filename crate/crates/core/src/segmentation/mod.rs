//! Hierarchical segmentation: region graph construction, combined
//! photometric/geometric edge weights, and the greedy merge loop.

mod boundary;
mod histogram;
mod overseg;

pub use boundary::{boundary_strength, photometric_weight, BoundaryStrengthMap};
pub use histogram::{build_histogram, geometric_weight, PolarAngleHistogram, NUM_BINS};
pub use overseg::overseg_initial;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::labels::{region_adjacency, RegionLabelMap};

/// Segmentation parameters. Defaults follow the published constants
/// (lambda = 0.6, stopping threshold 0.55).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub lambda: f64,
    pub stop_delta: f64,
    pub target_regions: Option<u32>,
    pub overseg_min_size: usize,
    pub overseg_scale: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            lambda: 0.6,
            stop_delta: 0.55,
            target_regions: None,
            overseg_min_size: 20,
            overseg_scale: 100.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidInput(format!("lambda {} outside [0,1]", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.stop_delta) {
            return Err(Error::InvalidInput(format!("stop_delta {} outside [0,1]", self.stop_delta)));
        }
        if let Some(k) = self.target_regions {
            if k < 1 {
                return Err(Error::InvalidInput("target_regions must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Linear combination of the geometric and photometric distances.
pub fn combined_weight(w_g: f64, w_p: f64, lambda: f64) -> f64 {
    lambda * w_g + (1.0 - lambda) * w_p
}

/// A live region during merging.
#[derive(Debug, Clone)]
pub struct RegionNode {
    pub pixel_count: u64,
    pub histogram: PolarAngleHistogram,
}

/// An adjacency edge with its boundary pixel pairs and weights.
#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub boundary: Vec<(u32, u32)>,
    pub w_p: f64,
    pub w_g: f64,
    pub w: f64,
}

/// Region adjacency graph with photometric/geometric/combined weights and
/// per-region polar-angle histograms around a fixed pole.
#[derive(Debug, Clone)]
pub struct RegionGraph {
    pub lambda: f64,
    pub pole: Point2,
    /// Indexed by region ID; `None` once absorbed by a merge.
    pub nodes: Vec<Option<RegionNode>>,
    pub edges: BTreeMap<(u32, u32), GraphEdge>,
}

impl RegionGraph {
    /// Build the weighted graph for a label map, boundary strengths, and pole.
    pub fn build(
        labels: &RegionLabelMap,
        strengths: &BoundaryStrengthMap,
        pole: Point2,
        lambda: f64,
    ) -> Result<Self> {
        if labels.width() != strengths.width() || labels.height() != strengths.height() {
            return Err(Error::DimensionMismatch(
                "label map and strength map dimensions differ".into(),
            ));
        }
        let pixels = labels.region_pixels();
        let mut nodes = Vec::with_capacity(pixels.len());
        for px in &pixels {
            nodes.push(Some(RegionNode {
                pixel_count: px.len() as u64,
                histogram: build_histogram(px, pole)?,
            }));
        }
        let adjacency = region_adjacency(labels);
        let mut edges = BTreeMap::new();
        for ((i, j), pairs) in adjacency.edges {
            let w_p = photometric_weight(&pairs, strengths)?;
            let w_g = geometric_weight(
                &nodes[i as usize].as_ref().unwrap().histogram,
                &nodes[j as usize].as_ref().unwrap().histogram,
            )?;
            let w = combined_weight(w_g, w_p, lambda);
            edges.insert((i, j), GraphEdge { boundary: pairs, w_p, w_g, w });
        }
        Ok(RegionGraph { lambda, pole, nodes, edges })
    }

    pub fn live_regions(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_some()).count()
    }

    /// The minimum-weight live edge; ties resolve to the smallest key.
    pub fn min_edge(&self) -> Option<((u32, u32), f64)> {
        let mut best: Option<((u32, u32), f64)> = None;
        for (&key, e) in &self.edges {
            match best {
                Some((_, w)) if e.w >= w => {}
                _ => best = Some((key, e.w)),
            }
        }
        best
    }

    /// Merge region `absorbed` into region `survivor`, fusing duplicate
    /// edges and recomputing weights incident to the survivor.
    pub fn merge(&mut self, survivor: u32, absorbed: u32, strengths: &BoundaryStrengthMap) {
        let node = self.nodes[absorbed as usize].take().expect("absorbed region live");
        {
            let s = self.nodes[survivor as usize].as_mut().expect("survivor live");
            s.pixel_count += node.pixel_count;
            s.histogram.merge_in(&node.histogram);
        }
        // re-key edges incident to the absorbed region
        let incident: Vec<(u32, u32)> = self
            .edges
            .keys()
            .filter(|&&(i, j)| i == absorbed || j == absorbed)
            .cloned()
            .collect();
        for key in incident {
            let edge = self.edges.remove(&key).unwrap();
            let other = if key.0 == absorbed { key.1 } else { key.0 };
            if other == survivor {
                continue; // the merged edge itself disappears
            }
            let new_key = if survivor < other { (survivor, other) } else { (other, survivor) };
            self.edges
                .entry(new_key)
                .and_modify(|e| e.boundary.extend(&edge.boundary))
                .or_insert(edge);
        }
        // recompute weights for all edges incident to the survivor
        let keys: Vec<(u32, u32)> = self
            .edges
            .keys()
            .filter(|&&(i, j)| i == survivor || j == survivor)
            .cloned()
            .collect();
        for key in keys {
            let (i, j) = key;
            let w_g = geometric_weight(
                &self.nodes[i as usize].as_ref().unwrap().histogram,
                &self.nodes[j as usize].as_ref().unwrap().histogram,
            )
            .expect("live regions have non-empty histograms");
            let edge = self.edges.get_mut(&key).unwrap();
            edge.w_g = w_g;
            edge.w_p = photometric_weight(&edge.boundary, strengths)
                .expect("adjacency edges have boundary pairs");
            edge.w = combined_weight(edge.w_g, edge.w_p, self.lambda);
        }
    }
}

/// One recorded merge: the combined weight at merge time, the surviving
/// region ID, and the absorbed region ID.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub weight: f64,
    pub survivor: u32,
    pub absorbed: u32,
}

/// The initial partition plus the ordered merge sequence.
#[derive(Debug, Clone)]
pub struct MergeHierarchy {
    pub initial: RegionLabelMap,
    pub merges: Vec<MergeStep>,
}

/// Stopping rule for extracting a segmentation from a hierarchy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop when the region count reaches K.
    Regions(u32),
    /// Stop before the first merge whose weight exceeds delta.
    Delta(f64),
}

/// Greedy merge loop: repeatedly merge the globally minimum-weight edge
/// (ties broken by smallest lexicographic region-ID pair) until the region
/// count reaches `target_regions` or the minimum weight exceeds `stop_delta`.
///
/// Pass `stop_delta = 1.0` with no target to record the full hierarchy.
pub fn merge_hierarchy(
    mut graph: RegionGraph,
    initial: &RegionLabelMap,
    strengths: &BoundaryStrengthMap,
    cfg: &SegmentationConfig,
) -> MergeHierarchy {
    let mut merges = Vec::new();
    let mut live = graph.live_regions();
    loop {
        if let Some(k) = cfg.target_regions {
            if live as u32 <= k {
                break;
            }
        }
        let Some(((i, j), w)) = graph.min_edge() else { break };
        if w > cfg.stop_delta {
            break;
        }
        graph.merge(i, j, strengths);
        merges.push(MergeStep { weight: w, survivor: i, absorbed: j });
        live -= 1;
    }
    MergeHierarchy { initial: initial.clone(), merges }
}

/// Replay merges until the stop condition and relabel to contiguous IDs.
/// A K larger than the initial region count returns the initial map.
pub fn segment_at(h: &MergeHierarchy, stop: StopRule) -> RegionLabelMap {
    let n = h.initial.num_regions();
    let mut parent: Vec<u32> = (0..n).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let mut live = n;
    for step in &h.merges {
        match stop {
            StopRule::Regions(k) => {
                if live <= k {
                    break;
                }
            }
            StopRule::Delta(d) => {
                if step.weight > d {
                    break;
                }
            }
        }
        let s = find(&mut parent, step.survivor);
        let a = find(&mut parent, step.absorbed);
        if s != a {
            parent[a as usize] = s;
            live -= 1;
        }
    }
    let raw: Vec<u32> = h
        .initial
        .labels()
        .iter()
        .map(|&l| find(&mut parent, l))
        .collect();
    RegionLabelMap::from_labels(h.initial.width(), h.initial.height(), &raw).expect("sizes match")
}

/// Convenience pipeline: over-segment, weight, and merge with the configured
/// stopping rule. Returns the final label map plus the hierarchy.
pub fn segment_image(
    img: &crate::imagebuf::ImageBuffer,
    pole: Point2,
    cfg: &SegmentationConfig,
) -> Result<(RegionLabelMap, MergeHierarchy)> {
    cfg.validate()?;
    let overseg = overseg_initial(img, cfg);
    let strengths = boundary_strength(img);
    let graph = RegionGraph::build(&overseg, &strengths, pole, cfg.lambda)?;
    let hierarchy = merge_hierarchy(graph, &overseg, &strengths, cfg);
    let stop = match cfg.target_regions {
        Some(k) => StopRule::Regions(k),
        None => StopRule::Delta(cfg.stop_delta),
    };
    Ok((segment_at(&hierarchy, stop), hierarchy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_setup() -> (RegionLabelMap, BoundaryStrengthMap) {
        // 3 vertical stripes of 2 columns each in a 6x4 map
        let raw: Vec<u32> = (0..24).map(|i| (i % 6) / 2).collect();
        let labels = RegionLabelMap::from_labels(6, 4, &raw).unwrap();
        let strengths = BoundaryStrengthMap::new(6, 4, vec![0.5; 24]).unwrap();
        (labels, strengths)
    }

    #[test]
    fn combined_weight_arithmetic() {
        assert!((combined_weight(0.8, 0.3, 0.6) - 0.6).abs() < 1e-12);
        assert_eq!(combined_weight(0.7, 0.3, 0.0), 0.3);
        assert_eq!(combined_weight(0.7, 0.3, 1.0), 0.7);
    }

    #[test]
    fn graph_invariant_w_combination() {
        let (labels, strengths) = tiny_setup();
        let pole = Point2::new(-10.0, -10.0);
        let g = RegionGraph::build(&labels, &strengths, pole, 0.6).unwrap();
        for e in g.edges.values() {
            assert!((e.w - combined_weight(e.w_g, e.w_p, 0.6)).abs() < 1e-12);
        }
    }

    #[test]
    fn min_weight_edge_merges_first() {
        let (labels, strengths) = tiny_setup();
        let pole = Point2::new(-10.0, -10.0);
        let mut g = RegionGraph::build(&labels, &strengths, pole, 0.6).unwrap();
        // force weights: e(0,1)=0.1, e(1,2)=0.5
        g.edges.get_mut(&(0, 1)).unwrap().w = 0.1;
        g.edges.get_mut(&(1, 2)).unwrap().w = 0.5;
        let cfg = SegmentationConfig { target_regions: Some(2), stop_delta: 1.0, ..Default::default() };
        let h = merge_hierarchy(g, &labels, &strengths, &cfg);
        assert_eq!(h.merges.len(), 1);
        assert_eq!((h.merges[0].survivor, h.merges[0].absorbed), (0, 1));
    }

    #[test]
    fn delta_below_all_weights_means_no_merges() {
        let (labels, strengths) = tiny_setup();
        let pole = Point2::new(-10.0, -10.0);
        let g = RegionGraph::build(&labels, &strengths, pole, 0.6).unwrap();
        let cfg = SegmentationConfig { stop_delta: 0.05, ..Default::default() };
        let h = merge_hierarchy(g, &labels, &strengths, &cfg);
        assert!(h.merges.is_empty());
    }

    #[test]
    fn segment_at_identity_and_full() {
        let (labels, strengths) = tiny_setup();
        let pole = Point2::new(-10.0, -10.0);
        let g = RegionGraph::build(&labels, &strengths, pole, 0.6).unwrap();
        let cfg = SegmentationConfig { stop_delta: 1.0, ..Default::default() };
        let h = merge_hierarchy(g, &labels, &strengths, &cfg);
        let ident = segment_at(&h, StopRule::Regions(3));
        assert_eq!(ident, labels);
        // K larger than initial count returns the initial map
        let big = segment_at(&h, StopRule::Regions(10));
        assert_eq!(big, labels);
        let one = segment_at(&h, StopRule::Regions(1));
        assert_eq!(one.num_regions(), 1);
    }

    #[test]
    fn hierarchy_nesting() {
        // random-ish 5-region map; K=4 equals K=5 with one extra merge
        let raw: Vec<u32> = (0..30).map(|i| (i % 10) / 2).collect();
        let labels = RegionLabelMap::from_labels(10, 3, &raw).unwrap();
        let strengths = BoundaryStrengthMap::new(10, 3, (0..30).map(|i| i as f64 / 30.0).collect()).unwrap();
        let pole = Point2::new(-5.0, -5.0);
        let g = RegionGraph::build(&labels, &strengths, pole, 0.6).unwrap();
        let cfg = SegmentationConfig { stop_delta: 1.0, ..Default::default() };
        let h = merge_hierarchy(g, &labels, &strengths, &cfg);
        let at5 = segment_at(&h, StopRule::Regions(5));
        let at4 = segment_at(&h, StopRule::Regions(4));
        // every coarse region is a union of fine regions
        let mut mapping = std::collections::HashMap::new();
        for (f, c) in at5.labels().iter().zip(at4.labels()) {
            let prev = mapping.insert(*f, *c);
            if let Some(p) = prev {
                assert_eq!(p, *c, "fine region split across coarse regions");
            }
        }
        assert_eq!(at4.num_regions(), 4.min(at5.num_regions()));
    }

    #[test]
    fn full_hierarchy_reaches_one_region_per_component() {
        let (labels, strengths) = tiny_setup();
        let pole = Point2::new(-10.0, -10.0);
        let g = RegionGraph::build(&labels, &strengths, pole, 0.6).unwrap();
        let cfg = SegmentationConfig { stop_delta: 1.0, ..Default::default() };
        let h = merge_hierarchy(g, &labels, &strengths, &cfg);
        // the stripe image is connected: all merges lead to one region
        assert_eq!(h.merges.len() as u32, labels.num_regions() - 1);
    }
}
