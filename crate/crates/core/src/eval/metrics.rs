use crate::error::{Error, Result};
use crate::image::{Frame, Mask};

/// How pixel grays are turned into centroid weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentroidWeights {
    /// `max(g - background_mu, 0)`.
    #[default]
    BackgroundSubtracted,
    /// Raw gray values.
    Raw,
}

/// Gray-weighted centroid of `pixels`.
pub fn centroid(
    frame: &Frame,
    pixels: &[(usize, usize)],
    background_mu: f64,
    weights: CentroidWeights,
) -> Result<(f64, f64)> {
    if pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for &(x, y) in pixels {
        let g = frame.get(x, y);
        let w = match weights {
            CentroidWeights::BackgroundSubtracted => (g - background_mu).max(0.0),
            CentroidWeights::Raw => g,
        };
        sw += w;
        sx += w * x as f64;
        sy += w * y as f64;
    }
    if sw <= 0.0 {
        return Err(Error::InvalidParameter("centroid weights are all zero".into()));
    }
    Ok((sx / sw, sy / sw))
}

pub fn centroid_error(c: (f64, f64), reference: (f64, f64)) -> f64 {
    (c.0 - reference.0).hypot(c.1 - reference.1)
}

fn sorted_unique(p: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut v = p.to_vec();
    v.sort_unstable_by_key(|&(x, y)| (y, x));
    v.dedup();
    v
}

/// Intersection over union of two pixel sets; two empty sets give 0.
pub fn iou(a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    let (a, b) = (sorted_unique(a), sorted_unique(b));
    let key = |p: &(usize, usize)| (p.1, p.0);
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match key(&a[i]).cmp(&key(&b[j])) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn mask_iou(a: &Mask, b: &Mask) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (p, q) in a.data().iter().zip(b.data()) {
        inter += (*p && *q) as usize;
        union += (*p || *q) as usize;
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centroid_examples() {
        let f = Frame::from_fn(10, 10, |x, y| match (x, y) {
            (0, 0) => 1.0,
            (2, 0) => 3.0,
            _ => 0.0,
        })
        .unwrap();
        let c = centroid(&f, &[(0, 0), (2, 0)], 0.0, CentroidWeights::Raw).unwrap();
        assert!((c.0 - 1.5).abs() < 1e-15 && c.1 == 0.0);
        let g = Frame::filled(10, 10, 5.0).unwrap();
        assert_eq!(centroid(&g, &[(7, 3)], 0.0, CentroidWeights::default()).unwrap(), (7.0, 3.0));
        assert!(centroid(&g, &[(7, 3)], 5.0, CentroidWeights::default()).is_err());
        assert!(centroid(&g, &[], 0.0, CentroidWeights::Raw).is_err());
    }

    #[test]
    fn error_and_iou() {
        assert_eq!(centroid_error((1.0, 1.0), (1.0, 1.0)), 0.0);
        assert_eq!(centroid_error((0.0, 0.0), (3.0, 4.0)), 5.0);
        let a = [(0, 0), (1, 0), (2, 0)];
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &[(5, 5)]), 0.0);
        assert_eq!(iou(&a, &[(1, 0), (2, 0), (3, 0)]), 0.5);
        assert_eq!(iou(&[], &[]), 0.0);
    }
}
