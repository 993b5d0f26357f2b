//! The 26-dimensional local-contrast descriptor.
//!
//! A 25×25 template centred on a pixel is split into 25 disjoint 5×5 tiles,
//! numbered in raster order so that tile 13 (index 12) is the centre tile.
//! With `m_i` the tile means and `m_bck = min m_i`:
//!
//! - `x_i = m_i - m_bck` for `i = 1..=25`
//! - `x_26 = max(centre tile) - m_bck`
//!
//! Tile sums are accumulated row by row (each row left to right, then the row
//! sums top to bottom). [`TileSums`] precomputes the same sums for every tile
//! position in a frame, so its vectors are bit-identical to
//! [`extract_features`].

use crate::error::{Error, Result};
use crate::image::Frame;

pub const TEMPLATE_SIZE: usize = 25;
pub const TILE_SIZE: usize = 5;
pub const TILES_PER_SIDE: usize = 5;
pub const FEATURE_DIM: usize = 26;
/// Pixels within this distance of an edge are never template centres.
pub const HALF_TEMPLATE: usize = TEMPLATE_SIZE / 2;
/// Zero-based index of the centre tile mean (x₁₃).
pub const CENTER_TILE: usize = 12;
/// Zero-based index of the centre-tile maximum (x₂₆).
pub const MAX_FEATURE: usize = 25;
/// Identifies the feature layout; stored in model files.
pub const FEATURE_ORDER_TAG: &str = "tiles5x5-raster-center13-max26";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn zeros() -> Self {
        Self([0.0; FEATURE_DIM])
    }

    #[inline]
    pub fn values(&self) -> &[f64; FEATURE_DIM] {
        &self.0
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut v = self.0;
        v.iter_mut().for_each(|x| *x *= k);
        Self(v)
    }

    fn from_tiles(means: &[f64; 25], center_max: f64) -> Self {
        let m_bck = means.iter().copied().fold(f64::INFINITY, f64::min);
        let mut v = [0.0; FEATURE_DIM];
        for (x, m) in v.iter_mut().zip(means) {
            *x = m - m_bck;
        }
        v[MAX_FEATURE] = center_max - m_bck;
        Self(v)
    }
}

/// True when the template centred at `(cx, cy)` lies inside the frame.
#[inline]
pub fn template_fits(width: usize, height: usize, cx: usize, cy: usize) -> bool {
    cx >= HALF_TEMPLATE && cy >= HALF_TEMPLATE && cx + HALF_TEMPLATE < width && cy + HALF_TEMPLATE < height
}

fn tile_sum(frame: &Frame, x0: usize, y0: usize) -> f64 {
    let mut total = 0.0;
    for y in y0..y0 + TILE_SIZE {
        let mut row = 0.0;
        for x in x0..x0 + TILE_SIZE {
            row += frame.get(x, y);
        }
        total += row;
    }
    total
}

pub fn extract_features(frame: &Frame, cx: usize, cy: usize) -> Result<FeatureVector> {
    if !template_fits(frame.width(), frame.height(), cx, cy) {
        return Err(Error::TemplateOutOfBounds {
            x: cx,
            y: cy,
            width: frame.width(),
            height: frame.height(),
        });
    }
    let left = cx - HALF_TEMPLATE;
    let top = cy - HALF_TEMPLATE;
    let mut means = [0.0; 25];
    for (i, m) in means.iter_mut().enumerate() {
        let (r, c) = (i / TILES_PER_SIDE, i % TILES_PER_SIDE);
        *m = tile_sum(frame, left + c * TILE_SIZE, top + r * TILE_SIZE) / (TILE_SIZE * TILE_SIZE) as f64;
    }
    let mut center_max = f64::NEG_INFINITY;
    for y in cy - 2..=cy + 2 {
        for x in cx - 2..=cx + 2 {
            center_max = center_max.max(frame.get(x, y));
        }
    }
    Ok(FeatureVector::from_tiles(&means, center_max))
}

/// Per-position 5×5 sums and maxima for a whole frame.
///
/// Entry `(x, y)` describes the tile whose top-left pixel is `(x, y)`.
#[derive(Debug, Clone)]
pub struct TileSums {
    width: usize,
    height: usize,
    sums: Vec<f64>,
    maxima: Vec<f64>,
}

impl TileSums {
    pub fn new(frame: &Frame) -> Result<Self> {
        let (w, h) = (frame.width(), frame.height());
        if w < TEMPLATE_SIZE || h < TEMPLATE_SIZE {
            return Err(Error::FrameTooSmall { width: w, height: h, min: TEMPLATE_SIZE });
        }
        let tw = w - TILE_SIZE + 1;
        let th = h - TILE_SIZE + 1;
        let data = frame.data();

        let mut row_sums = vec![0.0; tw * h];
        let mut row_max = vec![0.0; tw * h];
        for y in 0..h {
            let row = &data[y * w..(y + 1) * w];
            for x in 0..tw {
                let mut s = 0.0;
                let mut m = f64::NEG_INFINITY;
                for v in &row[x..x + TILE_SIZE] {
                    s += v;
                    m = m.max(*v);
                }
                row_sums[y * tw + x] = s;
                row_max[y * tw + x] = m;
            }
        }
        let mut sums = vec![0.0; tw * th];
        let mut maxima = vec![0.0; tw * th];
        for y in 0..th {
            for x in 0..tw {
                let mut s = 0.0;
                let mut m = f64::NEG_INFINITY;
                for dy in 0..TILE_SIZE {
                    s += row_sums[(y + dy) * tw + x];
                    m = m.max(row_max[(y + dy) * tw + x]);
                }
                sums[y * tw + x] = s;
                maxima[y * tw + x] = m;
            }
        }
        Ok(Self { width: w, height: h, sums, maxima })
    }

    #[inline]
    fn tile_width(&self) -> usize {
        self.width - TILE_SIZE + 1
    }

    /// Feature vector of the template centred at `(cx, cy)`; the caller
    /// guarantees [`template_fits`].
    #[inline]
    pub fn features_at(&self, cx: usize, cy: usize) -> FeatureVector {
        debug_assert!(template_fits(self.width, self.height, cx, cy));
        let tw = self.tile_width();
        let left = cx - HALF_TEMPLATE;
        let top = cy - HALF_TEMPLATE;
        let mut means = [0.0; 25];
        for (i, m) in means.iter_mut().enumerate() {
            let (r, c) = (i / TILES_PER_SIDE, i % TILES_PER_SIDE);
            *m = self.sums[(top + r * TILE_SIZE) * tw + left + c * TILE_SIZE] / (TILE_SIZE * TILE_SIZE) as f64;
        }
        let center_max = self.maxima[(cy - 2) * tw + cx - 2];
        FeatureVector::from_tiles(&means, center_max)
    }

    /// Sums of the tiles whose top edge is row `y`, indexed by left edge.
    pub fn tile_row(&self, y: usize) -> &[f64] {
        let tw = self.tile_width();
        &self.sums[y * tw..(y + 1) * tw]
    }

    /// Maxima of the tiles whose top edge is row `y`, indexed by left edge.
    pub fn max_row(&self, y: usize) -> &[f64] {
        let tw = self.tile_width();
        &self.maxima[y * tw..(y + 1) * tw]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}
