//! Per-pixel region label maps and the region adjacency structure.

use std::collections::BTreeMap;
use std::path::Path;

use image::ImageBuffer as RawBuffer;
use image::Luma;

use crate::error::{Error, Result};

/// A per-pixel assignment of region IDs. IDs form a contiguous range
/// `0..num_regions` and every ID occurs at least once.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLabelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    num_regions: u32,
}

impl RegionLabelMap {
    /// Build from raw labels, relabeling to a contiguous 0-based range.
    /// First occurrence order (row-major) determines the new IDs.
    pub fn from_labels(width: u32, height: u32, raw: &[u32]) -> Result<Self> {
        if raw.len() != (width * height) as usize {
            return Err(Error::DimensionMismatch(format!(
                "label count {} does not match {width}x{height}",
                raw.len()
            )));
        }
        let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
        let mut next = 0u32;
        let mut labels = Vec::with_capacity(raw.len());
        for &l in raw {
            let id = *remap.entry(l).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            labels.push(id);
        }
        Ok(RegionLabelMap { width, height, labels, num_regions: next })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn num_regions(&self) -> u32 {
        self.num_regions
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[(y * self.width + x) as usize]
    }

    /// Pixel count per region.
    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_regions as usize];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Pixels of each region as (x, y) lists, row-major order.
    pub fn region_pixels(&self) -> Vec<Vec<(u32, u32)>> {
        let mut out = vec![Vec::new(); self.num_regions as usize];
        for y in 0..self.height {
            for x in 0..self.width {
                out[self.get(x, y) as usize].push((x, y));
            }
        }
        out
    }

    /// Serialize as 16-bit grayscale PNG (region ID = gray value).
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.num_regions > u16::MAX as u32 + 1 {
            return Err(Error::InvalidInput("more than 65536 regions".into()));
        }
        let img: RawBuffer<Luma<u16>, Vec<u16>> = RawBuffer::from_fn(self.width, self.height, |x, y| {
            Luma([self.get(x, y) as u16])
        });
        img.save(path.as_ref()).map_err(Error::from)
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path)?.to_luma16();
        let (w, h) = img.dimensions();
        let raw: Vec<u32> = img.into_raw().into_iter().map(u32::from).collect();
        Self::from_labels(w, h, &raw)
    }
}

/// Adjacency between regions: edge (i, j) with i < j exists iff some pixel of
/// region i is 4-adjacent to a pixel of region j. Each edge carries the
/// ordered list of inter-pixel boundary pairs as linear pixel indices.
#[derive(Debug, Clone)]
pub struct RegionAdjacency {
    pub edges: BTreeMap<(u32, u32), Vec<(u32, u32)>>,
}

/// Build the 4-adjacency region graph (edges only, no weights).
pub fn region_adjacency(labels: &RegionLabelMap) -> RegionAdjacency {
    let (w, h) = (labels.width(), labels.height());
    let mut edges: BTreeMap<(u32, u32), Vec<(u32, u32)>> = BTreeMap::new();
    let mut add = |a: u32, b: u32, pa: u32, pb: u32| {
        if a == b {
            return;
        }
        let (key, pair) = if a < b { ((a, b), (pa, pb)) } else { ((b, a), (pb, pa)) };
        edges.entry(key).or_default().push(pair);
    };
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            let l = labels.get(x, y);
            if x + 1 < w {
                add(l, labels.get(x + 1, y), idx, idx + 1);
            }
            if y + 1 < h {
                add(l, labels.get(x, y + 1), idx, idx + w);
            }
        }
    }
    RegionAdjacency { edges }
}
