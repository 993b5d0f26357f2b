//! Crude classification: per-pixel classifier sweep, 8-connected labelling
//! and size filtering.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::classifier::LinearModel;
use crate::error::{Error, Result};
use crate::features::{TileSums, HALF_TEMPLATE, MAX_FEATURE, TEMPLATE_SIZE, TILES_PER_SIDE, TILE_SIZE};
use crate::image::{Frame, Mask};

/// Size filter below which components are treated as noise.
pub const DEFAULT_MIN_SIZE: usize = 35;

/// A set of 8-connected pixels, stored in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pixels: Vec<(usize, usize)>,
}

impl Component {
    /// Builds a component from arbitrary pixels, sorting into raster order and
    /// dropping duplicates. Connectivity is not checked.
    pub fn from_pixels(mut pixels: Vec<(usize, usize)>) -> Self {
        pixels.sort_by_key(|&(x, y)| (y, x));
        pixels.dedup();
        Self { pixels }
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// `(x_min, y_min, x_max, y_max)`, inclusive.
    pub fn bbox(&self) -> (usize, usize, usize, usize) {
        let mut b = (usize::MAX, usize::MAX, 0, 0);
        for &(x, y) in &self.pixels {
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x);
            b.3 = b.3.max(y);
        }
        b
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.pixels.binary_search_by_key(&(y, x), |&(px, py)| (py, px)).is_ok()
    }

    /// True if every pixel of `other` is in `self`.
    pub fn is_superset_of(&self, other: &Component) -> bool {
        other.pixels.iter().all(|&(x, y)| self.contains(x, y))
    }

    /// Row runs as `y:x0-x1` separated by `;`.
    pub fn run_length(&self) -> String {
        let mut s = String::new();
        let mut i = 0;
        while i < self.pixels.len() {
            let (x0, y) = self.pixels[i];
            let mut x1 = x0;
            while i + 1 < self.pixels.len() && self.pixels[i + 1] == (x1 + 1, y) {
                x1 += 1;
                i += 1;
            }
            if !s.is_empty() {
                s.push(';');
            }
            write!(s, "{y}:{x0}-{x1}").unwrap();
            i += 1;
        }
        s
    }

    pub fn to_mask(&self, width: usize, height: usize) -> Mask {
        Mask::from_pixels(width, height, &self.pixels)
    }
}

/// Applies the classifier to every pixel whose template fits; the 12-pixel
/// border stays background.
pub fn classify_frame(frame: &Frame, model: &LinearModel) -> Result<Mask> {
    let (w, h) = (frame.width(), frame.height());
    if w < TEMPLATE_SIZE || h < TEMPLATE_SIZE {
        return Err(Error::FrameTooSmall { width: w, height: h, min: TEMPLATE_SIZE });
    }
    let sums = TileSums::new(frame)?;
    let mut data = vec![false; w * h];
    data.par_chunks_mut(w)
        .enumerate()
        .skip(HALF_TEMPLATE)
        .take(h - 2 * HALF_TEMPLATE)
        .for_each(|(y, row)| classify_row(&sums, model, y, row));
    Mask::from_vec(w, h, data)
}

const LANES: usize = 8;

/// Scores one row. Groups of neighbouring pixels are evaluated side by side;
/// each pixel sees the same operations, in the same order, as
/// [`crate::classifier::decision_value`] on [`TileSums::features_at`].
fn classify_row(sums: &TileSums, model: &LinearModel, y: usize, row: &mut [bool]) {
    let rows: [&[f64]; TILES_PER_SIDE] = std::array::from_fn(|r| sums.tile_row(y - HALF_TEMPLATE + r * TILE_SIZE));
    let centre = sums.max_row(y - TILE_SIZE / 2);
    let area = (TILE_SIZE * TILE_SIZE) as f64;
    let end = row.len() - HALF_TEMPLATE;
    let mut x = HALF_TEMPLATE;
    while x < end {
        let n = LANES.min(end - x);
        let left = x - HALF_TEMPLATE;
        let mut means = [[0.0; 25]; LANES];
        for (i, r) in rows.iter().enumerate() {
            for c in 0..TILES_PER_SIDE {
                let tiles = &r[left + c * TILE_SIZE..][..n];
                for (m, t) in means.iter_mut().zip(tiles) {
                    m[i * TILES_PER_SIDE + c] = t / area;
                }
            }
        }
        // min is exact, so its evaluation order does not matter
        let mut lo = [f64::INFINITY; LANES];
        for i in 0..25 {
            for (l, m) in lo.iter_mut().zip(&means) {
                *l = l.min(m[i]);
            }
        }
        let mut acc = [0.0; LANES];
        for (i, w) in model.weights[..25].iter().enumerate() {
            for k in 0..LANES {
                acc[k] += w * (means[k][i] - lo[k]);
            }
        }
        let w = model.weights[MAX_FEATURE];
        let cmax = &centre[x - TILE_SIZE / 2..][..n];
        for ((a, c), l) in acc.iter_mut().zip(cmax).zip(&lo) {
            *a += w * (c - l);
        }
        for (out, a) in row[x..x + n].iter_mut().zip(&acc) {
            *out = a + model.bias >= model.threshold;
        }
        x += n;
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Two-pass union-find labelling with 8-connectivity. Components are ordered
/// by their first pixel in raster order.
pub fn connected_components(mask: &Mask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![usize::MAX; w * h];
    let mut parent: Vec<usize> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            // previously visited neighbours: W, NW, N, NE
            let mut neighbours = [usize::MAX; 4];
            if x > 0 {
                neighbours[0] = labels[y * w + x - 1];
            }
            if y > 0 {
                let up = (y - 1) * w;
                if x > 0 {
                    neighbours[1] = labels[up + x - 1];
                }
                neighbours[2] = labels[up + x];
                if x + 1 < w {
                    neighbours[3] = labels[up + x + 1];
                }
            }
            let mut label = usize::MAX;
            for &n in neighbours.iter().filter(|n| **n != usize::MAX) {
                if label == usize::MAX {
                    label = find(&mut parent, n);
                } else {
                    let (a, b) = (find(&mut parent, label), find(&mut parent, n));
                    if a != b {
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        parent[hi] = lo;
                        label = lo;
                    }
                }
            }
            if label == usize::MAX {
                label = parent.len();
                parent.push(label);
            }
            labels[y * w + x] = label;
        }
    }

    // roots are numbered by first appearance in raster order
    let mut slot = vec![usize::MAX; parent.len()];
    let mut components: Vec<Vec<(usize, usize)>> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == usize::MAX {
                continue;
            }
            let root = find(&mut parent, l);
            if slot[root] == usize::MAX {
                slot[root] = components.len();
                components.push(Vec::new());
            }
            components[slot[root]].push((x, y));
        }
    }
    components.into_iter().map(|pixels| Component { pixels }).collect()
}

/// Keeps components with at least `min_size` pixels.
pub fn filter_components(components: Vec<Component>, min_size: usize) -> Vec<Component> {
    components.into_iter().filter(|c| c.len() >= min_size.max(1)).collect()
}

/// Classification, labelling and size filtering in one call.
pub fn crude_classify(frame: &Frame, model: &LinearModel, min_size: usize) -> Result<Vec<Component>> {
    let map = classify_frame(frame, model)?;
    Ok(filter_components(connected_components(&map), min_size))
}

/// `id,size,x_min,y_min,x_max,y_max,runs` with a header row.
pub fn components_csv(components: &[Component], comment: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(c) = comment {
        writeln!(s, "# {c}").unwrap();
    }
    s.push_str("id,size,x_min,y_min,x_max,y_max,runs\n");
    for (i, c) in components.iter().enumerate() {
        let (x0, y0, x1, y1) = c.bbox();
        writeln!(s, "{i},{},{x0},{y0},{x1},{y1},{}", c.len(), c.run_length()).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_DIM;

    #[test]
    fn empty_map_no_components() {
        assert!(connected_components(&Mask::new(10, 10)).is_empty());
    }

    #[test]
    fn diagonal_pixels_join() {
        let m = Mask::from_pixels(4, 4, &[(1, 1), (2, 2)]);
        let cc = connected_components(&m);
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].pixels(), &[(1, 1), (2, 2)]);
    }

    #[test]
    fn u_shape_merges() {
        // two arms joined only at the bottom row
        let px = [(0, 0), (4, 0), (0, 1), (4, 1), (0, 2), (1, 2), (2, 2), (3, 2), (4, 2)];
        let cc = connected_components(&Mask::from_pixels(5, 3, &px));
        assert_eq!(cc.len(), 1);
        assert_eq!(cc[0].len(), 9);
    }

    #[test]
    fn scan_order_ids() {
        let m = Mask::from_pixels(6, 6, &[(5, 0), (0, 3), (0, 4)]);
        let cc = connected_components(&m);
        assert_eq!(cc[0].pixels()[0], (5, 0));
        assert_eq!(cc[1].pixels()[0], (0, 3));
    }

    #[test]
    fn filter_is_monotone() {
        let m = Mask::from_pixels(10, 10, &[(0, 0), (0, 1), (5, 5), (9, 9), (8, 9), (7, 9)]);
        let cc = connected_components(&m);
        assert_eq!(filter_components(cc.clone(), 1), cc);
        let big = filter_components(cc.clone(), 3);
        let small = filter_components(cc.clone(), 2);
        assert_eq!(big.len(), 1);
        assert!(big.iter().all(|c| small.contains(c)));
    }

    #[test]
    fn row_scorer_matches_per_pixel_prediction() {
        use crate::classifier::predict;
        use crate::features::{extract_features, template_fits};
        use crate::image::{gaussian_background, NoiseParams};
        let f = gaussian_background(61, 47, NoiseParams::standard(4)).unwrap();
        let mut w = [-0.01; FEATURE_DIM];
        w[12] = 0.2;
        w[25] = 0.02;
        let model = LinearModel::new(w, -0.15).with_threshold(0.0);
        let map = classify_frame(&f, &model).unwrap();
        let mut positives = 0;
        for y in 0..47 {
            for x in 0..61 {
                let expect = template_fits(61, 47, x, y) && predict(&model, &extract_features(&f, x, y).unwrap());
                assert_eq!(map.get(x, y), expect, "({x}, {y})");
                positives += expect as usize;
            }
        }
        assert!(positives > 0 && positives < map.data().len() / 2, "{positives}");
    }

    #[test]
    fn constant_frame_classifies_background() {
        let mut w = [0.1; FEATURE_DIM];
        w[25] = 0.05;
        let model = LinearModel::new(w, -0.2);
        let f = Frame::filled(40, 40, 30.0).unwrap();
        assert!(classify_frame(&f, &model).unwrap().is_empty());
        assert!(crude_classify(&f, &model, 35).unwrap().is_empty());
        assert!(classify_frame(&Frame::filled(24, 40, 1.0).unwrap(), &model).is_err());
    }

    #[test]
    fn rle_format() {
        let c = Component::from_pixels(vec![(3, 1), (1, 1), (2, 1), (5, 1), (0, 2)]);
        assert_eq!(c.run_length(), "1:1-3;1:5-5;2:0-0");
        assert_eq!(c.bbox(), (0, 1, 5, 2));
    }
}
