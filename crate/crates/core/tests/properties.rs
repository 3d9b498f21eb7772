//! Property tests for the core invariants.

use proptest::prelude::*;

use lumafuse::crf::Crf;
use lumafuse::exposedness::{compute_masks, gate};
use lumafuse::image::{LdrImage, Plane, RadianceImage};
use lumafuse::pyramid;
use lumafuse::synth::build_imf;

/// Monotone tabulated CRF tables from raw increments (plateaus allowed).
fn crf_table_strategy() -> impl Strategy<Value = [[f64; 256]; 3]> {
    proptest::collection::vec(0.0f64..1.0, 3 * 255).prop_map(|incs| {
        let mut tables = [[0.0f64; 256]; 3];
        for (c, table) in tables.iter_mut().enumerate() {
            let mut cum = 0.0;
            for i in 1..256 {
                let inc = incs[c * 255 + i - 1];
                // Quantize small increments to zero to create plateaus.
                cum += if inc < 0.3 { 0.0 } else { inc };
                table[i] = cum;
            }
            let total = table[255].max(1e-9);
            for v in table.iter_mut() {
                *v = (255.0 * (*v / total)).min(255.0);
            }
            table[0] = 0.0;
            table[255] = 255.0;
        }
        tables
    })
}

fn small_image_strategy() -> impl Strategy<Value = LdrImage> {
    (4usize..24, 4usize..24)
        .prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u8..=255, w * h * 3)
                .prop_map(move |data| LdrImage::new(w, h, data).unwrap())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn crf_round_trip_within_half_level(tables in crf_table_strategy()) {
        let crf = Crf::from_tables(tables).unwrap();
        for c in 0..3 {
            let mut prev = -1.0;
            for z in 0..=255u8 {
                let e = crf.invert(z, c);
                prop_assert!(e >= prev);
                prev = e;
                prop_assert!((crf.apply(e, c) - z as f64).abs() <= 0.5);
            }
        }
    }

    #[test]
    fn imf_tables_monotone_for_monotone_crf(
        tables in crf_table_strategy(),
        k in prop_oneof![Just(0.25f64), Just(0.5), Just(2.0), Just(4.0)],
    ) {
        let crf = Crf::from_tables(tables).unwrap();
        let imf = build_imf(&crf, 1.0, k);
        for c in 0..3 {
            let t = imf.table(c);
            for z in 1..256 {
                prop_assert!(t[z] >= t[z - 1] - 1e-9);
            }
        }
    }

    #[test]
    fn pyramid_round_trip(
        w in 8usize..40,
        h in 8usize..40,
        seed in 0u64..1000,
        extra in -1i32..=1,
    ) {
        let data: Vec<f64> = (0..w * h)
            .map(|i| (((i as u64).wrapping_mul(seed + 1) % 997) as f64) / 997.0)
            .collect();
        let plane = Plane::new(w, h, data);
        let levels = pyramid::level_count(w, h, extra);
        let back = pyramid::collapse(&pyramid::laplacian_pyramid(&plane, levels));
        for (a, b) in back.data().iter().zip(plane.data()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn gate_is_idempotent_and_masks_zero(img in small_image_strategy()) {
        let masks = compute_masks(&img, 250, 200);
        for mask in [&masks.m0, &masks.m2] {
            let once = gate(&img, mask).unwrap();
            let twice = gate(&once, mask).unwrap();
            prop_assert_eq!(&once, &twice);
            for (i, &m) in mask.data().iter().enumerate() {
                if m == 0 {
                    prop_assert_eq!(once.data()[i], 0);
                }
            }
        }
    }

    #[test]
    fn pfm_round_trip_value_exact(img in small_image_strategy()) {
        // f32-representable radiance built from the image levels.
        let data: Vec<f64> = img.data().iter().map(|&z| (z as f32 * 0.125) as f64).collect();
        let radiance = RadianceImage::new(img.width(), img.height(), data).unwrap();
        let mut buf = Vec::new();
        lumafuse::pfm::write_to(&radiance, &mut buf).unwrap();
        let back = lumafuse::pfm::read_bytes(&buf).unwrap();
        prop_assert_eq!(back, radiance);
    }

    #[test]
    fn csv_round_trip_bit_exact(tables in crf_table_strategy()) {
        let crf = Crf::from_tables(tables).unwrap();
        let mut buf = Vec::new();
        crf.write_csv(&mut buf).unwrap();
        let back = Crf::from_csv_reader(std::io::Cursor::new(&buf)).unwrap();
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }
}
