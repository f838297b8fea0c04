//! Multi-resolution decomposition and across-scale collapse.
//!
//! The reference pyramid steps down by `sqrt(2)` per level with bilinear
//! resampling. The hardware pyramid has three fixed levels and uses
//! nearest-neighbour addressing where the scale factor is applied as an
//! integer multiply followed by a right shift.

use crate::config::ResolutionMode;
use crate::error::{Error, Result};
use crate::filter::resize_bilinear;
use crate::frame::FieldMap;

/// How levels are resampled to one another.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PyramidKind {
    /// `sqrt(2)` steps, bilinear.
    Reference,
    /// Fixed three-level geometry, shift-table nearest neighbour.
    Hw,
}

impl PyramidKind {
    pub fn for_mode(mode: ResolutionMode) -> Self {
        if mode.is_hw() {
            PyramidKind::Hw
        } else {
            PyramidKind::Reference
        }
    }

    /// Resamples `map` to `width x height` with this pyramid's addressing.
    pub fn resample(self, map: &FieldMap, width: usize, height: usize) -> FieldMap {
        match self {
            PyramidKind::Reference => resize_bilinear(map, width, height),
            PyramidKind::Hw => resize_nearest_shift(map, width, height),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImagePyramid {
    levels: Vec<FieldMap>,
    kind: PyramidKind,
}

impl ImagePyramid {
    /// Assembles a pyramid from precomputed levels, finest first.
    pub fn from_levels(levels: Vec<FieldMap>, kind: PyramidKind) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("pyramid needs at least one level".into()));
        }
        for pair in levels.windows(2) {
            let (a, b) = (pair[0].dims(), pair[1].dims());
            if b.0 >= a.0 || b.1 >= a.1 {
                return Err(Error::InvalidInput(format!(
                    "pyramid levels must shrink: {}x{} then {}x{}",
                    a.0, a.1, b.0, b.1
                )));
            }
        }
        Ok(ImagePyramid { levels, kind })
    }

    pub fn levels(&self) -> &[FieldMap] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &FieldMap {
        &self.levels[i]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn kind(&self) -> PyramidKind {
        self.kind
    }

    pub fn base_dims(&self) -> (usize, usize) {
        self.levels[0].dims()
    }

    pub fn dims(&self) -> Vec<(usize, usize)> {
        self.levels.iter().map(FieldMap::dims).collect()
    }

    /// Linear downscale factor between consecutive levels, measured on widths.
    pub fn scale_ratio(&self, i: usize) -> f64 {
        self.levels[i].width() as f64 / self.levels[i + 1].width() as f64
    }

    pub fn map_levels(&self, f: impl Fn(&FieldMap) -> FieldMap) -> ImagePyramid {
        ImagePyramid {
            levels: self.levels.iter().map(f).collect(),
            kind: self.kind,
        }
    }

    pub fn into_levels(self) -> Vec<FieldMap> {
        self.levels
    }
}

/// Level sizes `round(base / sqrt(2)^i)` for `i < depth`.
pub fn reference_level_dims(base: (usize, usize), depth: usize) -> Result<Vec<(usize, usize)>> {
    if depth == 0 {
        return Err(Error::InvalidInput("pyramid depth must be at least 1".into()));
    }
    let dims: Vec<(usize, usize)> = (0..depth)
        .map(|i| {
            let f = 2f64.powf(-(i as f64) / 2.0);
            (
                (base.0 as f64 * f).round() as usize,
                (base.1 as f64 * f).round() as usize,
            )
        })
        .collect();
    if let Some(&(w, h)) = dims.iter().find(|&&(w, h)| w < 2 || h < 2) {
        return Err(Error::InvalidInput(format!(
            "pyramid depth {depth} yields a {w}x{h} level from {}x{}",
            base.0, base.1
        )));
    }
    Ok(dims)
}

/// Fixed hardware level sizes, finest first.
pub fn hw_level_dims(mode: ResolutionMode) -> Option<[(usize, usize); 3]> {
    match mode {
        ResolutionMode::Hw112 => Some([(112, 84), (80, 60), (56, 44)]),
        ResolutionMode::Hw80 => Some([(80, 60), (56, 42), (40, 30)]),
        ResolutionMode::Reference640 => None,
    }
}

pub fn build_reference_pyramid(map: &FieldMap, depth: usize) -> Result<ImagePyramid> {
    let dims = reference_level_dims(map.dims(), depth)?;
    let mut levels = Vec::with_capacity(depth);
    levels.push(map.clone());
    for &(w, h) in &dims[1..] {
        let prev = levels.last().expect("level 0 pushed");
        levels.push(resize_bilinear(prev, w, h));
    }
    ImagePyramid::from_levels(levels, PyramidKind::Reference)
}

pub fn build_hw_pyramid(map: &FieldMap) -> Result<ImagePyramid> {
    let mode = ResolutionMode::from_dims(map.width(), map.height())
        .filter(|m| m.is_hw())
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "hardware pyramid needs a 112x84 or 80x60 map, got {}x{}",
                map.width(),
                map.height()
            ))
        })?;
    let dims = hw_level_dims(mode).expect("hw mode");
    let levels = dims
        .iter()
        .map(|&(w, h)| resize_nearest_shift(map, w, h))
        .collect();
    ImagePyramid::from_levels(levels, PyramidKind::Hw)
}

/// Builds the pyramid the configured resolution mode calls for.
pub fn build_pyramid(map: &FieldMap, mode: ResolutionMode) -> Result<ImagePyramid> {
    match mode {
        ResolutionMode::Reference640 => build_reference_pyramid(map, mode.pyramid_depth()),
        _ => build_hw_pyramid(map),
    }
}

/// Bilinearly resizes every level to `target` and sums.
pub fn collapse(pyr: &ImagePyramid, target: (usize, usize)) -> FieldMap {
    let mut out = FieldMap::zeros(target.0, target.1);
    for level in pyr.levels() {
        out.add_assign(&resize_bilinear(level, target.0, target.1));
    }
    out
}

/// Multiplier and shift approximating `src_len / dst_len`; destination index
/// `d` reads source index `(d * q) >> s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftMap {
    pub src_len: usize,
    pub dst_len: usize,
    pub q: u32,
    pub s: u32,
}

/// Largest multiplier that fits the 16-bit address arithmetic.
pub const SHIFT_Q_MAX: u64 = 0xFFFF;

impl ShiftMap {
    /// Rounds the ratio up at the largest shift whose multiplier still fits
    /// 16 bits. Rounding up keeps `(d * q) >> s` equal to
    /// `floor(d * src / dst)` for every in-range `d` (checked in tests).
    pub fn new(src_len: usize, dst_len: usize) -> ShiftMap {
        assert!(src_len > 0 && dst_len > 0);
        let (src, dst) = (src_len as u64, dst_len as u64);
        let mut best = None;
        for s in 0..32u32 {
            let q = ((src << s) + dst - 1) / dst;
            if q > SHIFT_Q_MAX {
                break;
            }
            best = Some((q as u32, s));
        }
        let (q, s) = best.expect("ratio below 2^16");
        ShiftMap {
            src_len,
            dst_len,
            q,
            s,
        }
    }

    #[inline]
    pub fn index(&self, d: usize) -> usize {
        (((d as u64) * self.q as u64) >> self.s) as usize
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..self.dst_len).map(|d| self.index(d)).collect()
    }
}

/// Nearest-neighbour resize with shift-table addressing on both axes.
pub fn resize_nearest_shift(map: &FieldMap, width: usize, height: usize) -> FieldMap {
    if map.dims() == (width, height) {
        return map.clone();
    }
    let xs = ShiftMap::new(map.width(), width).indices();
    let ys = ShiftMap::new(map.height(), height).indices();
    FieldMap::from_fn(width, height, |x, y| map.get(xs[x], ys[y]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_dims_follow_sqrt2_rounding() {
        let dims = reference_level_dims((640, 480), 10).unwrap();
        for (i, &(w, h)) in dims.iter().enumerate() {
            let f = 1.0 / 2f64.sqrt().powi(i as i32);
            assert_eq!(w, (640.0 * f).round() as usize);
            assert_eq!(h, (480.0 * f).round() as usize);
        }
        assert_eq!(&dims[..3], &[(640, 480), (453, 339), (320, 240)]);
        assert!(reference_level_dims((8, 8), 7).is_err());
        assert!(reference_level_dims((8, 8), 0).is_err());
    }

    #[test]
    fn constant_map_stays_constant() {
        let m = FieldMap::filled(64, 48, 3.25);
        let p = build_reference_pyramid(&m, 6).unwrap();
        for l in p.levels() {
            assert!(l.data().iter().all(|&v| (v - 3.25).abs() < 1e-12));
        }
        let c = collapse(&p, (64, 48));
        assert!(c.data().iter().all(|&v| (v - 6.0 * 3.25).abs() < 1e-12));
        let hw = build_hw_pyramid(&FieldMap::filled(112, 84, 7.0)).unwrap();
        assert_eq!(hw.dims(), vec![(112, 84), (80, 60), (56, 44)]);
        assert!(hw.levels().iter().all(|l| l.data().iter().all(|&v| v == 7.0)));
    }

    #[test]
    fn depth_one_is_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = FieldMap::from_fn(9, 7, |_, _| rng.gen());
        let p = build_reference_pyramid(&m, 1).unwrap();
        assert_eq!(p.levels(), &[m.clone()]);
        assert_eq!(collapse(&p, (9, 7)), m);
    }

    #[test]
    fn hw_pyramid_rejects_other_sizes() {
        assert!(build_hw_pyramid(&FieldMap::zeros(640, 480)).is_err());
        assert!(build_hw_pyramid(&FieldMap::zeros(100, 84)).is_err());
        let p = build_hw_pyramid(&FieldMap::zeros(80, 60)).unwrap();
        assert_eq!(p.dims(), vec![(80, 60), (56, 42), (40, 30)]);
    }

    /// `(src, dst, q, s)` frozen golden data.
    const GOLDEN: &[(usize, usize, u32, u32)] = &[
        (112, 80, 45876, 15),
        (112, 56, 32768, 14),
        (84, 60, 45876, 15),
        (84, 44, 62558, 15),
        (80, 56, 46812, 15),
        (80, 40, 32768, 14),
        (60, 42, 46812, 15),
        (60, 30, 32768, 14),
        (80, 112, 46812, 16),
        (56, 112, 32768, 16),
        (60, 84, 46812, 16),
        (44, 84, 34329, 16),
        (56, 80, 45876, 16),
        (44, 60, 48060, 16),
        (42, 60, 45876, 16),
        (30, 60, 32768, 16),
        (40, 56, 46812, 16),
        (30, 42, 46812, 16),
        (40, 80, 32768, 16),
        (42, 80, 34407, 16),
    ];

    #[test]
    fn shift_table_is_frozen_and_exact() {
        for &(src, dst, q, s) in GOLDEN {
            let m = ShiftMap::new(src, dst);
            assert_eq!((m.q, m.s), (q, s), "{src}->{dst}");
            for d in 0..dst {
                assert_eq!(m.index(d), d * src / dst, "{src}->{dst} at {d}");
            }
        }
    }

    #[test]
    fn hw_levels_read_documented_addresses() {
        let src = FieldMap::from_fn(112, 84, |x, y| (y * 112 + x) as f64);
        let p = build_hw_pyramid(&src).unwrap();
        for l in &p.levels()[1..] {
            let (w, h) = l.dims();
            for y in 0..h {
                for x in 0..w {
                    let (sx, sy) = (x * 112 / w, y * 84 / h);
                    assert_eq!(l.get(x, y), src.get(sx, sy));
                }
            }
        }
    }

    fn naive_resize(m: &FieldMap, w: usize, h: usize) -> FieldMap {
        let src = |d: usize, s: usize, n: usize| {
            let v = (d as f64 + 0.5) * s as f64 / n as f64 - 0.5;
            v.max(0.0).min(s as f64 - 1.0)
        };
        FieldMap::from_fn(w, h, |x, y| {
            let (sx, sy) = (src(x, m.width(), w), src(y, m.height(), h));
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(m.width() - 1), (y0 + 1).min(m.height() - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            m.get(x0, y0) * (1.0 - fx) * (1.0 - fy)
                + m.get(x1, y0) * fx * (1.0 - fy)
                + m.get(x0, y1) * (1.0 - fx) * fy
                + m.get(x1, y1) * fx * fy
        })
    }

    #[test]
    fn collapse_matches_naive_resize_and_add() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let (w, h) = (rng.gen_range(6..20), rng.gen_range(6..20));
            let m = FieldMap::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0));
            let p = build_reference_pyramid(&m, 3).unwrap();
            let got = collapse(&p, (w, h));
            let mut want = FieldMap::zeros(w, h);
            for l in p.levels() {
                want.add_assign(&naive_resize(l, w, h));
            }
            for (a, b) in got.data().iter().zip(want.data()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn collapse_is_linear_and_levels_shrink() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = FieldMap::from_fn(40, 30, |_, _| rng.gen());
        let p = build_reference_pyramid(&m, 5).unwrap();
        for pair in p.dims().windows(2) {
            assert!(pair[1].0 < pair[0].0 && pair[1].1 < pair[0].1);
        }
        let a = 2.75;
        let scaled = p.map_levels(|l| l.scaled(a));
        let c1 = collapse(&scaled, (40, 30));
        let c0 = collapse(&p, (40, 30));
        for (x, y) in c1.data().iter().zip(c0.data()) {
            assert!((x - a * y).abs() <= 1e-12);
        }
        let two = ImagePyramid::from_levels(
            vec![FieldMap::filled(8, 6, 1.5), FieldMap::filled(4, 3, -0.25)],
            PyramidKind::Reference,
        )
        .unwrap();
        assert!(collapse(&two, (8, 6)).data().iter().all(|&v| (v - 1.25).abs() < 1e-15));
    }
}
