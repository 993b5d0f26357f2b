mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use streaklite::detector::{classify_frame, connected_components, Component};
use streaklite::eval::analysis::{ks_statistic, max_gray_samples, AnalysisParams, MaxGrayDistribution};
use streaklite::eval::{centroid_error, iou};
use streaklite::features::extract_features;
use streaklite::growth::{log_ajpd, log_normal_pdf, rasterize_layers, refine, GrowthConfig, LineGeometry};
use streaklite::image::{background_stats, Frame, Mask};
use streaklite::sim::{render_patch, render_signal, StreakParams};

fn patch(seed: u64, w: usize, h: usize) -> Frame {
    common::noise(w, h, seed)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn features_ignore_a_constant_offset(seed in 0u64..10_000, c in 0.0f64..200.0) {
        let f = patch(seed, 25, 25);
        let a = extract_features(&f, 12, 12).unwrap();
        let b = extract_features(&f.offset(c).unwrap(), 12, 12).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-9, "{x} {y}");
        }
    }

    #[test]
    fn rendered_pixels_match_closed_form(
        cx in 20.0f64..28.0, cy in 20.0f64..28.0, angle in 0.0f64..180.0, length in 0.0f64..24.0,
    ) {
        let s = StreakParams::new((cx, cy), angle, length, 1000.0);
        let p = render_patch(&s).unwrap();
        let peak = p.peak();
        for (x, y, v) in p.iter() {
            let want = common::streak_value(&s, x as f64, y as f64);
            prop_assert!((v - want).abs() <= 2e-3 * peak, "({x},{y}) {v} {want}");
        }
    }

    #[test]
    fn flux_is_conserved(
        cx in 30.0f64..34.0, cy in 30.0f64..34.0, angle in 0.0f64..180.0, length in 0.0f64..30.0,
    ) {
        let s = StreakParams::new((cx, cy), angle, length, 1000.0);
        let rendered: f64 = render_signal(64, 64, &s).unwrap().data().iter().sum();
        let oracle = common::quadrature_flux(&s, 10);
        prop_assert!((rendered - 1000.0).abs() < 0.5, "{rendered}");
        prop_assert!((rendered - oracle).abs() < 0.5, "{rendered} {oracle}");
    }

    #[test]
    fn ajpd_matches_density_product(
        grays in prop::collection::vec(0.0f64..60.0, 1..12), mu in 10.0f64..50.0, sigma in 2.0f64..12.0,
    ) {
        let n = grays.len() as f64;
        let log_product: f64 = grays.iter().map(|g| log_normal_pdf(*g, mu, sigma)).sum();
        let product: f64 = grays
            .iter()
            .map(|g| (-(g - mu).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
            .product();
        let log_got = n * log_ajpd(&grays, mu, sigma).unwrap();
        prop_assert!((log_got - log_product).abs() < 1e-9 * log_product.abs().max(1.0));
        // the raw product underflows for grays far from mu
        if product.is_normal() {
            let got = log_got.exp();
            prop_assert!(((got - product) / product).abs() < 1e-9, "{got} {product}");
        }
    }

    #[test]
    fn labeling_matches_flood_fill(bits in prop::collection::vec(prop::bool::weighted(0.45), 64 * 64)) {
        let mask = Mask::from_vec(64, 64, bits).unwrap();
        let got: Vec<Vec<(usize, usize)>> =
            connected_components(&mask).iter().map(|c| c.pixels().to_vec()).collect();
        prop_assert_eq!(got, common::flood_fill(&mask));
    }

    #[test]
    fn iou_matches_set_arithmetic(
        a in prop::collection::vec((0usize..12, 0usize..12), 0..60),
        b in prop::collection::vec((0usize..12, 0usize..12), 0..60),
    ) {
        let (sa, sb): (HashSet<_>, HashSet<_>) = (a.iter().copied().collect(), b.iter().copied().collect());
        let union = sa.union(&sb).count();
        let want = if union == 0 { 0.0 } else { sa.intersection(&sb).count() as f64 / union as f64 };
        prop_assert!((iou(&a, &b) - want).abs() < 1e-15);
    }

    #[test]
    fn centroid_error_is_euclidean(a in (-1e3f64..1e3, -1e3f64..1e3), b in (-1e3f64..1e3, -1e3f64..1e3)) {
        let want = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
        prop_assert!((centroid_error(a, b) - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn layers_are_nearest_offsets(ox in 20.0f64..30.0, oy in 20.0f64..30.0, angle in 0.0f64..360.0) {
        let frame = Frame::filled(50, 50, 0.0).unwrap();
        let t = angle.to_radians();
        let g = LineGeometry::new((ox, oy), (t.cos(), t.sin()));
        let layers = rasterize_layers(&frame, &g, (15, 35)).unwrap();
        // spacing of parallel digital lines measured across the axis
        let spacing = t.cos().abs().max(t.sin().abs());
        for (j, layer) in layers.iter().enumerate() {
            for &(x, y) in layer {
                let across = -(x as f64 - ox) * t.sin() + (y as f64 - oy) * t.cos();
                // sign convention of the minor axis: +y for x-major, +x otherwise
                let minor_sign = if t.cos().abs() >= t.sin().abs() { t.cos().signum() } else { -t.sin().signum() };
                let offset = (minor_sign * across / spacing + 0.5).floor() as i64;
                prop_assert_eq!(offset, j as i64 - 2, "pixel ({}, {}) angle {}", x, y, angle);
            }
        }
    }

    #[test]
    fn classification_ignores_a_constant_offset(seed in 0u64..1000, c in 1.0f64..100.0) {
        let f = patch(seed, 48, 40);
        let model = common::model();
        prop_assert_eq!(classify_frame(&f, model).unwrap(), classify_frame(&f.offset(c).unwrap(), model).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn growth_keeps_the_seed_and_respects_the_cap(
        seed in 0u64..10_000, angle in 0.0f64..180.0, psnr in 1.5f64..5.0, l_max in 1usize..12,
    ) {
        let s = common::calibrated((40.0, 40.0), angle, 14.0, psnr);
        let scene = common::scene(80, &[s], seed);
        // crude component: the ideal mask clipped to its central part
        let pixels: Vec<_> = scene
            .mask
            .pixels()
            .into_iter()
            .filter(|&(x, y)| (x as f64 - 40.0).hypot(y as f64 - 40.0) <= 5.0)
            .collect();
        prop_assume!(pixels.len() >= 3);
        let crude = Component::from_pixels(pixels);
        let config = GrowthConfig { l_max, ..GrowthConfig::default() };
        let bg = background_stats(&scene.noisy);
        for r in refine(&scene.noisy, std::slice::from_ref(&crude), &bg, &config) {
            prop_assert!(r.component.is_superset_of(&r.seed));
            prop_assert!(r.grew_forward <= l_max && r.grew_backward <= l_max);
            prop_assert_eq!(r.component.len(), r.seed.len() + 3 * (r.grew_forward + r.grew_backward));
        }
    }
}

#[test]
fn max_gray_samples_follow_the_analytic_cdf() {
    let p = AnalysisParams::default();
    let d = MaxGrayDistribution::new(&p).unwrap();
    let samples = max_gray_samples(&p, 100_000, 5).unwrap();
    let ks = ks_statistic(&samples, |g| d.cdf(g));
    assert!(ks < 0.01, "KS {ks}");
}
