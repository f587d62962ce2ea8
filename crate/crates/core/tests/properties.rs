use proptest::prelude::*;

use rct_core::cfcore::{compute_response, dft2, CropOperator, FilterModel, LearnStatus};
use rct_core::features::FeatureMap;
use rct_core::response::{quantize, ResponseMap};

fn map(rows: usize, cols: usize, k: usize, data: &[f64]) -> FeatureMap {
    FeatureMap::from_planes(rows, cols, k, data[..rows * cols * k].to_vec()).unwrap()
}

fn response(g: &FeatureMap, z: &FeatureMap) -> ResponseMap {
    let model = FilterModel {
        g_hat: dft2(g),
        model_xf: dft2(z),
        filter: g.clone(),
        crop: CropOperator::identity(g.rows, g.cols),
        status: LearnStatus::Converged,
    };
    compute_response(&model, &dft2(z)).unwrap()
}

fn roll(z: &FeatureMap, dr: usize, dc: usize) -> FeatureMap {
    let mut out = FeatureMap::zeros(z.rows, z.cols, z.channels);
    for k in 0..z.channels {
        for r in 0..z.rows {
            for c in 0..z.cols {
                out.set((r + dr) % z.rows, (c + dc) % z.cols, k, z.get(r, c, k));
            }
        }
    }
    out
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * 12 * 12 * 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn response_is_bilinear(
        rows in 2usize..12, cols in 2usize..12, data in values(), c in 0.1f64..10.0,
    ) {
        let n = rows * cols * 2;
        let g = map(rows, cols, 2, &data[..n]);
        let z = map(rows, cols, 2, &data[n..]);
        let base = response(&g, &z);
        let scaled = response(&g.scaled(c), &z.scaled(c));
        let one_side = response(&g.scaled(c), &z);
        for ((b, s), o) in base.values.iter().zip(&scaled.values).zip(&one_side.values) {
            prop_assert!((s - c * c * b).abs() < 1e-9 * (1.0 + c * c));
            prop_assert!((o - c * b).abs() < 1e-9 * (1.0 + c));
        }
    }

    #[test]
    fn shifting_the_window_shifts_the_response(
        rows in 2usize..12, cols in 2usize..12, data in values(), dr in 0usize..12, dc in 0usize..12,
    ) {
        let n = rows * cols * 2;
        let g = map(rows, cols, 2, &data[..n]);
        let z = map(rows, cols, 2, &data[n..]);
        let (dr, dc) = (dr % rows, dc % cols);
        let base = response(&g, &z);
        let moved = response(&g, &roll(&z, dr, dc));
        for r in 0..rows {
            for c in 0..cols {
                let expected = base.get(r, c);
                let got = moved.get((r + dr) % rows, (c + dc) % cols);
                prop_assert!((expected - got).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quantization_is_invariant_to_positive_affine_maps(
        data in prop::collection::vec(-5.0f64..5.0, 4..200), a in 0.01f64..100.0, b in -50.0f64..50.0,
    ) {
        let r = ResponseMap::new(1, data.len(), data.clone()).unwrap();
        let t = ResponseMap::new(1, data.len(), data.iter().map(|v| a * v + b).collect()).unwrap();
        let (q, qt) = (quantize(&r), quantize(&t));
        for (x, y) in q.gray.iter().zip(&qt.gray) {
            prop_assert!((*x as i32 - *y as i32).abs() <= 1);
        }
        if r.max() > r.min() {
            prop_assert!(q.gray.contains(&0) && q.gray.contains(&255));
        }
    }
}
