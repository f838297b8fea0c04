//! Property tests over the public API.

use proptest::prelude::*;

use podvs::channels::{extract_all, opponency_pixel, ChannelId};
use podvs::grouping::{bo_masks, grouping_activity, BorderOwnership, SideFields};
use podvs::kernels::KernelBank;
use podvs::normalize::{normalize_n1, LocalMaximaParams};
use podvs::pyramid::{build_reference_pyramid, collapse, reference_level_dims, ImagePyramid, PyramidKind};
use podvs::temporal::kernels_for_rate;
use podvs::{FieldMap, FrameHistory, FrameRGB};

fn field(w: usize, h: usize) -> impl Strategy<Value = FieldMap> {
    proptest::collection::vec(-100.0f64..100.0, w * h).prop_map(move |v| FieldMap::from_vec(w, h, v).unwrap())
}

fn non_negative(w: usize, h: usize) -> impl Strategy<Value = FieldMap> {
    proptest::collection::vec(0.0f64..50.0, w * h).prop_map(move |v| FieldMap::from_vec(w, h, v).unwrap())
}

fn per_theta(maps: Vec<FieldMap>) -> [FieldMap; 4] {
    maps.try_into().unwrap()
}

fn ownership(left: Vec<FieldMap>, right: Vec<FieldMap>) -> BorderOwnership {
    let zeros = || per_theta(vec![FieldMap::zeros(9, 8); 4]);
    BorderOwnership {
        light: SideFields { left: zeros(), right: zeros() },
        dark: SideFields { left: zeros(), right: zeros() },
        left: per_theta(left),
        right: per_theta(right),
    }
}

fn frame(w: usize, h: usize) -> impl Strategy<Value = FrameRGB> {
    proptest::collection::vec(any::<u8>(), w * h * 3).prop_map(move |d| FrameRGB::from_interleaved(w, h, &d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn opponent_pairs_never_coexist(r in -300.0f64..300.0, g in -300.0f64..300.0, b in -300.0f64..300.0) {
        let [rg, gr, by, yb] = opponency_pixel(r, g, b);
        prop_assert_eq!(rg * gr, 0.0);
        prop_assert_eq!(by * yb, 0.0);
        prop_assert!(rg >= 0.0 && gr >= 0.0 && by >= 0.0 && yb >= 0.0);
    }

    #[test]
    fn nine_channels_with_shared_orientation_input(frames in proptest::collection::vec(frame(7, 5), 1..8)) {
        let (strong, weak) = kernels_for_rate(24.0).unwrap();
        let mut h = FrameHistory::new(strong.len(), strong.frame_period_ms());
        for f in frames {
            h.push(f).unwrap();
        }
        let ch = extract_all(&h, &strong, &weak).unwrap();
        prop_assert_eq!(ch.len(), 9);
        let o0 = ch.get(ChannelId::O0);
        for id in [ChannelId::O45, ChannelId::O90, ChannelId::O135] {
            prop_assert_eq!(ch.get(id), o0);
        }
    }

    #[test]
    fn reference_levels_shrink(w in 40usize..700, h in 40usize..500) {
        let dims = reference_level_dims((w, h), 5).unwrap();
        for pair in dims.windows(2) {
            prop_assert!(pair[1].0 < pair[0].0 && pair[1].1 < pair[0].1);
        }
    }

    #[test]
    fn collapse_is_linear(a in -5.0f64..5.0, l0 in field(12, 10), l1 in field(8, 7), l2 in field(6, 5)) {
        let p = ImagePyramid::from_levels(vec![l0, l1, l2], PyramidKind::Reference).unwrap();
        let scaled = p.map_levels(|m| m.scaled(a));
        let lhs = collapse(&scaled, (12, 10));
        let rhs = collapse(&p, (12, 10)).scaled(a);
        for (x, y) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn constant_map_collapses_to_depth_times_constant(c in -50.0f64..50.0, depth in 1usize..6) {
        let p = build_reference_pyramid(&FieldMap::filled(64, 48, c), depth).unwrap();
        let out = collapse(&p, (64, 48));
        for &v in out.data() {
            prop_assert!((v - depth as f64 * c).abs() <= 1e-12 * (1.0 + c.abs()) * depth as f64);
        }
    }

    #[test]
    fn masks_partition_and_scaling_is_covariant(
        left in proptest::collection::vec(non_negative(9, 8), 4),
        right in proptest::collection::vec(non_negative(9, 8), 4),
        a in 0.01f64..100.0,
    ) {
        let bank = KernelBank::new(5).unwrap();
        let b = ownership(left.clone(), right.clone());
        let m = bo_masks(&b);
        for i in 0..4 {
            prop_assert!(m.left[i].data().iter().zip(m.right[i].data()).all(|(l, r)| l + r == 1.0));
        }
        let g = grouping_activity(&m, &b, &bank.von_mises, 1.0);
        let sb = ownership(left.iter().map(|f| f.scaled(a)).collect(), right.iter().map(|f| f.scaled(a)).collect());
        let sg = grouping_activity(&bo_masks(&sb), &sb, &bank.von_mises, 1.0);
        for i in 0..4 {
            let scale = g[i].max_abs().max(1.0) * a;
            for (x, y) in sg[i].data().iter().zip(g[i].data()) {
                prop_assert!((x - a * y).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn losing_side_only_inhibits(
        right in proptest::collection::vec(non_negative(9, 8), 4),
        frac in 0.0f64..0.5,
        bump in 0.0f64..0.4,
    ) {
        // Left stays strictly below right, so the right side wins everywhere.
        let bank = KernelBank::new(5).unwrap();
        let lower: Vec<FieldMap> = right.iter().map(|f| f.scaled(frac)).collect();
        let higher: Vec<FieldMap> = right.iter().map(|f| f.scaled(frac + bump)).collect();
        let right = right.into_iter().map(|f| f.map(|v| v + 1.0)).collect::<Vec<_>>();
        let b0 = ownership(lower, right.clone());
        let b1 = ownership(higher, right);
        let m = bo_masks(&b0);
        prop_assert_eq!(&m, &bo_masks(&b1));
        prop_assert!(m.left.iter().all(|f| f.max_abs() == 0.0));
        let g0 = grouping_activity(&m, &b0, &bank.von_mises, 1.0);
        let g1 = grouping_activity(&m, &b1, &bank.von_mises, 1.0);
        for i in 0..4 {
            for (x1, x0) in g1[i].data().iter().zip(g0[i].data()) {
                prop_assert!(*x1 <= *x0 + 1e-9);
            }
        }
    }

    #[test]
    fn single_peak_keeps_its_argmax(cx in 2usize..18, cy in 2usize..14, s in 1.0f64..4.0, amp in 0.1f64..10.0) {
        let m = FieldMap::from_fn(20, 16, |x, y| {
            let d2 = (x as f64 - cx as f64).powi(2) + (y as f64 - cy as f64).powi(2);
            amp * (-d2 / (2.0 * s * s)).exp()
        });
        let out = normalize_n1(&m, &LocalMaximaParams::default());
        prop_assert_eq!(out.argmax(), m.argmax());
        prop_assert!(out.max() > 0.0);
    }
}
