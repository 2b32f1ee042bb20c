//! Photometric boundary strength and per-edge photometric weights.

use crate::error::{Error, Result};
use crate::imagebuf::ImageBuffer;

/// Per-pixel boundary strength in [0, 1]. Stand-in for an externally
/// computed contour map; an imported grayscale PNG passes through unchanged.
#[derive(Debug, Clone)]
pub struct BoundaryStrengthMap {
    width: u32,
    height: u32,
    strength: Vec<f64>,
}

impl BoundaryStrengthMap {
    pub fn new(width: u32, height: u32, strength: Vec<f64>) -> Result<Self> {
        if strength.len() != (width * height) as usize {
            return Err(Error::DimensionMismatch("strength buffer size".into()));
        }
        let strength = strength.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(BoundaryStrengthMap { width, height, strength })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.strength[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn get_linear(&self, idx: u32) -> f64 {
        self.strength[idx as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.strength
    }

    /// Import an external contour map from a grayscale PNG (0-255 -> [0,1]).
    pub fn load_png(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let img = image::open(path)?.to_luma8();
        let (w, h) = img.dimensions();
        let strength = img.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
        Self::new(w, h, strength)
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn smooth(plane: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let radius = (k.len() / 2) as i64;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let xx = (x + i as i64 - radius).clamp(0, w as i64 - 1);
                acc += kv * plane[(y * w as i64 + xx) as usize];
            }
            tmp[(y * w as i64 + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let yy = (y + i as i64 - radius).clamp(0, h as i64 - 1);
                acc += kv * tmp[(yy * w as i64 + x) as usize];
            }
            out[(y * w as i64 + x) as usize] = acc;
        }
    }
    out
}

/// Per-pixel boundary strength: gradient magnitude of the Gaussian-smoothed
/// (sigma = 1.0) luminance-plus-chroma planes, normalized by the 99th
/// percentile and clamped to [0, 1].
pub fn boundary_strength(img: &ImageBuffer) -> BoundaryStrengthMap {
    let (w, h) = (img.width() as usize, img.height() as usize);
    // YCbCr planes
    let mut planes = vec![vec![0.0; w * h]; 3];
    for y in 0..h {
        for x in 0..w {
            let [r, g, b] = img.get(x as u32, y as u32);
            let (r, g, b) = (r as f64, g as f64, b as f64);
            let luma = 0.299 * r + 0.587 * g + 0.114 * b;
            planes[0][y * w + x] = luma;
            planes[1][y * w + x] = 0.564 * (b - luma);
            planes[2][y * w + x] = 0.713 * (r - luma);
        }
    }
    let mut mag = vec![0.0; w * h];
    for plane in &planes {
        let s = smooth(plane, w, h, 1.0);
        for y in 0..h {
            for x in 0..w {
                let xm = x.saturating_sub(1);
                let xp = (x + 1).min(w - 1);
                let ym = y.saturating_sub(1);
                let yp = (y + 1).min(h - 1);
                let gx = (s[y * w + xp] - s[y * w + xm]) / (xp - xm).max(1) as f64;
                let gy = (s[yp * w + x] - s[ym * w + x]) / (yp - ym).max(1) as f64;
                mag[y * w + x] += gx * gx + gy * gy;
            }
        }
    }
    for v in &mut mag {
        *v = v.sqrt();
    }
    // normalize by the 99th percentile
    let mut sorted = mag.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p99 = sorted[((sorted.len() - 1) as f64 * 0.99) as usize];
    if p99 > 1e-12 {
        for v in &mut mag {
            *v = (*v / p99).clamp(0.0, 1.0);
        }
    } else {
        for v in &mut mag {
            *v = 0.0;
        }
    }
    BoundaryStrengthMap::new(img.width(), img.height(), mag).expect("sizes match")
}

/// Photometric distance of an edge: mean boundary strength over the edge's
/// boundary pixels, with both sides of each pair averaged.
pub fn photometric_weight(pairs: &[(u32, u32)], strengths: &BoundaryStrengthMap) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("edge with empty boundary".into()));
    }
    // sum in canonical sorted order so the result does not depend on how
    // the pair list was accumulated (merged edges concatenate their
    // boundaries, possibly with flipped pair orientation)
    let mut sorted: Vec<(u32, u32)> =
        pairs.iter().map(|&(a, b)| if a <= b { (a, b) } else { (b, a) }).collect();
    sorted.sort_unstable();
    let sum: f64 = sorted
        .iter()
        .map(|&(a, b)| 0.5 * (strengths.get_linear(a) + strengths.get_linear(b)))
        .sum();
    Ok((sum / pairs.len() as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_all_zero() {
        let img = ImageBuffer::filled(32, 32, [120, 80, 200]).unwrap();
        let map = boundary_strength(&img);
        assert!(map.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_edge_peaks_on_the_step() {
        let img = ImageBuffer::from_fn(64, 32, |x, _| if x < 32 { [0, 0, 0] } else { [255, 255, 255] })
            .unwrap();
        let map = boundary_strength(&img);
        // strong response at the step, near zero far away
        assert!(map.get(32, 16) > 0.9, "step strength {}", map.get(32, 16));
        assert!(map.get(5, 16) < 0.05);
        assert!(map.get(60, 16) < 0.05);
    }

    #[test]
    fn photometric_weight_arithmetic() {
        let map = BoundaryStrengthMap::new(3, 1, vec![0.2, 0.4, 0.6]).unwrap();
        // pairs whose both sides carry the listed strengths
        let pairs = vec![(0, 0), (1, 1), (2, 2)];
        let w = photometric_weight(&pairs, &map).unwrap();
        assert!((w - 0.4).abs() < 1e-12);

        let zero = BoundaryStrengthMap::new(2, 1, vec![0.0, 0.0]).unwrap();
        assert_eq!(photometric_weight(&[(0, 1)], &zero).unwrap(), 0.0);

        let one = BoundaryStrengthMap::new(2, 1, vec![1.0, 1.0]).unwrap();
        assert_eq!(photometric_weight(&[(0, 1)], &one).unwrap(), 1.0);
    }

    #[test]
    fn empty_boundary_is_error() {
        let map = BoundaryStrengthMap::new(2, 1, vec![0.0, 0.0]).unwrap();
        assert!(photometric_weight(&[], &map).is_err());
    }
}
