//! Map normalization and fusion.
//!
//! `N1` scales a map by `(m - mean_other_maxima)^2`, promoting maps with one
//! dominant peak over maps with many comparable ones. `N2` first rescales to
//! `[0, M]` so that channels of different modality compete on equal terms.

use crate::error::{Error, Result};
use crate::frame::FieldMap;
use crate::pyramid::{collapse, ImagePyramid};

#[derive(Clone, Debug, PartialEq)]
pub struct LocalMaximaParams {
    /// Chebyshev neighbourhood radius, pixels.
    pub radius: usize,
    /// Minimum value as a fraction of the global maximum.
    pub threshold: f64,
}

impl Default for LocalMaximaParams {
    fn default() -> Self {
        LocalMaximaParams {
            radius: 1,
            threshold: 0.05,
        }
    }
}

impl LocalMaximaParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::ConfigValue {
                key: "lm_radius".into(),
                msg: "radius must be at least 1".into(),
            });
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::ConfigValue {
                key: "lm_threshold".into(),
                msg: "threshold must lie in (0, 1)".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalMax {
    pub x: usize,
    pub y: usize,
    pub value: f64,
}

/// Pixels strictly greater than every in-bounds neighbour within the radius
/// and at least `threshold * global max`, in row-major order.
pub fn local_maxima(map: &FieldMap, p: &LocalMaximaParams) -> Vec<LocalMax> {
    let global = map.max();
    if global <= 0.0 {
        return Vec::new();
    }
    let floor = p.threshold * global;
    let (w, h) = map.dims();
    let r = p.radius;
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = map.get(x, y);
            if v < floor {
                continue;
            }
            let strict = (y.saturating_sub(r)..(y + r + 1).min(h)).all(|ny| {
                (x.saturating_sub(r)..(x + r + 1).min(w)).all(|nx| (nx, ny) == (x, y) || map.get(nx, ny) < v)
            });
            if strict {
                out.push(LocalMax { x, y, value: v });
            }
        }
    }
    out
}

/// The `N1` scale factor `(m - mean_other)^2`.
pub fn n1_factor(map: &FieldMap, p: &LocalMaximaParams) -> f64 {
    let m = map.max();
    let mut values: Vec<f64> = local_maxima(map, p).into_iter().map(|lm| lm.value).collect();
    if let Some(i) = values.iter().position(|&v| v == m) {
        values.remove(i);
    }
    let others = if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    (m - others) * (m - others)
}

pub fn normalize_n1(map: &FieldMap, p: &LocalMaximaParams) -> FieldMap {
    map.scaled(n1_factor(map, p))
}

/// Affine rescale to `[0, ceiling]`; a constant map has no structure and
/// becomes zero.
pub fn rescale(map: &FieldMap, ceiling: f64) -> FieldMap {
    let (lo, hi) = (map.min(), map.max());
    if hi <= lo {
        return FieldMap::zeros(map.width(), map.height());
    }
    let s = ceiling / (hi - lo);
    map.map(|v| (v - lo) * s)
}

pub fn normalize_n2(map: &FieldMap, ceiling: f64, p: &LocalMaximaParams) -> FieldMap {
    normalize_n1(&rescale(map, ceiling), p)
}

/// `N1` on every level, then collapse to `target`.
pub fn conspicuity(pyr: &ImagePyramid, target: (usize, usize), p: &LocalMaximaParams) -> FieldMap {
    collapse(&pyr.map_levels(|l| normalize_n1(l, p)), target)
}

/// `N2` on each conspicuity map, sum, and rescale to `[0, 1]`.
pub fn fuse(conspicuity_maps: &[FieldMap], ceiling: f64, p: &LocalMaximaParams) -> Result<FieldMap> {
    let first = conspicuity_maps
        .first()
        .ok_or_else(|| Error::InvalidInput("fusion needs at least one channel".into()))?;
    let mut sum = FieldMap::zeros(first.width(), first.height());
    for m in conspicuity_maps {
        first.same_dims(m)?;
        sum.add_assign(&normalize_n2(m, ceiling, p));
    }
    Ok(rescale(&sum, 1.0))
}

/// Conspicuity per channel pyramid, then [`fuse`].
pub fn fuse_pyramids(
    pyramids: &[ImagePyramid],
    target: (usize, usize),
    ceiling: f64,
    p: &LocalMaximaParams,
) -> Result<FieldMap> {
    let maps: Vec<FieldMap> = pyramids.iter().map(|pyr| conspicuity(pyr, target, p)).collect();
    fuse(&maps, ceiling, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyramid::PyramidKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lm() -> LocalMaximaParams {
        LocalMaximaParams::default()
    }

    fn spikes(spec: &[(usize, usize, f64)]) -> FieldMap {
        let mut m = FieldMap::zeros(12, 10);
        for &(x, y, v) in spec {
            m.set(x, y, v);
        }
        m
    }

    #[test]
    fn local_maxima_examples() {
        assert!(local_maxima(&FieldMap::filled(5, 5, 2.0), &lm()).is_empty());
        let one = local_maxima(&spikes(&[(4, 3, 1.0)]), &lm());
        assert_eq!(one, vec![LocalMax { x: 4, y: 3, value: 1.0 }]);
        let two = local_maxima(&spikes(&[(2, 2, 10.0), (8, 7, 4.0)]), &lm());
        assert_eq!(two.len(), 2);
        let faint = local_maxima(&spikes(&[(2, 2, 10.0), (8, 7, 0.4)]), &lm());
        assert_eq!(faint.len(), 1);
        // a plateau is not a strict maximum
        assert!(local_maxima(&spikes(&[(2, 2, 1.0), (3, 2, 1.0)]), &lm()).is_empty());
        assert!(lm().validate().is_ok());
        assert!(LocalMaximaParams { radius: 0, threshold: 0.5 }.validate().is_err());
        assert!(LocalMaximaParams { radius: 1, threshold: 1.0 }.validate().is_err());
    }

    #[test]
    fn n1_examples() {
        let single = spikes(&[(5, 5, 1.0)]);
        assert_eq!(normalize_n1(&single, &lm()), single);
        let tied = spikes(&[(2, 2, 1.0), (8, 7, 1.0)]);
        assert!(normalize_n1(&tied, &lm()).data().iter().all(|&v| v == 0.0));
        let three = spikes(&[(1, 1, 1.0), (5, 5, 0.4), (9, 8, 0.2)]);
        assert!((n1_factor(&three, &lm()) - 0.49).abs() < 1e-15);
    }

    #[test]
    fn n1_keeps_argmax_of_single_peak() {
        let m = FieldMap::from_fn(15, 11, |x, y| {
            let (dx, dy) = (x as f64 - 9.0, y as f64 - 4.0);
            (-(dx * dx + dy * dy) / 6.0).exp()
        });
        assert_eq!(normalize_n1(&m, &lm()).argmax(), (9, 4));
    }

    #[test]
    fn n2_examples() {
        let m = spikes(&[(5, 5, 1.0)]);
        assert_eq!(normalize_n2(&m, 1.0, &lm()), normalize_n1(&m, &lm()));
        assert!(normalize_n2(&FieldMap::filled(4, 4, 3.0), 1.0, &lm())
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn fuse_examples() {
        let z = vec![FieldMap::zeros(8, 6); 9];
        assert!(fuse(&z, 1.0, &lm()).unwrap().data().iter().all(|&v| v == 0.0));
        let mut one = z.clone();
        let mut bump = FieldMap::zeros(8, 6);
        bump.set(3, 2, 5.0);
        bump.set(4, 2, 2.0);
        one[4] = bump.clone();
        let fused = fuse(&one, 1.0, &lm()).unwrap();
        assert_eq!(fused, rescale(&normalize_n2(&bump, 1.0, &lm()), 1.0));
        assert!(fuse(&[], 1.0, &lm()).is_err());
        assert!(fuse(&[FieldMap::zeros(2, 2), FieldMap::zeros(3, 2)], 1.0, &lm()).is_err());
    }

    #[test]
    fn fuse_pyramids_collapses_first() {
        let levels = vec![FieldMap::filled(8, 6, 0.0), FieldMap::filled(4, 3, 0.0)];
        let mut l0 = levels[0].clone();
        l0.set(2, 2, 1.0);
        let p = ImagePyramid::from_levels(vec![l0, levels[1].clone()], PyramidKind::Reference).unwrap();
        let out = fuse_pyramids(&[p], (8, 6), 1.0, &lm()).unwrap();
        assert_eq!(out.argmax(), (2, 2));
        assert_eq!(out.max(), 1.0);
    }

    fn random_map(seed: u64) -> FieldMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FieldMap::from_fn(16, 12, |_, _| rng.gen_range(0.0..1.0))
    }

    proptest! {
        #[test]
        fn n2_is_affine_invariant(seed in any::<u64>(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
            let m = random_map(seed);
            let base = normalize_n2(&m, 1.0, &lm());
            let moved = normalize_n2(&m.map(|v| a * v + b), 1.0, &lm());
            for (x, y) in base.data().iter().zip(moved.data()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn fused_maps_lie_in_unit_interval(seed in any::<u64>()) {
            let maps: Vec<FieldMap> = (0..9).map(|i| random_map(seed.wrapping_add(i))).collect();
            let f = fuse(&maps, 1.0, &lm()).unwrap();
            prop_assert!(f.min() >= 0.0 && f.max() <= 1.0);
        }

        #[test]
        fn fused_argmax_ignores_positive_channel_gain(seed in any::<u64>(), gain in 0.1f64..10.0) {
            let maps: Vec<FieldMap> = (0..3).map(|i| random_map(seed.wrapping_add(i))).collect();
            let mut scaled = maps.clone();
            scaled[1] = scaled[1].scaled(gain);
            let a = fuse(&maps, 1.0, &lm()).unwrap();
            let b = fuse(&scaled, 1.0, &lm()).unwrap();
            prop_assert_eq!(a.argmax(), b.argmax());
        }
    }
}
