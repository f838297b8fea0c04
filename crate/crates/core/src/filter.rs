//! Spatial primitives: zero-padded 2-D correlation and convolution, and
//! bilinear resampling.
//!
//! Correlation is evaluated tap by tap (shift and accumulate) in a fixed
//! order, so results are bitwise reproducible regardless of threading.

use crate::error::{Error, Result};
use crate::frame::FieldMap;

/// A small dense kernel with the anchor at its centre.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Kernel {
    /// Odd dimensions are required so the anchor is a pixel.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "kernel dimensions must be odd, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} coefficients do not fill a {width}x{height} kernel",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kernel coefficients must be finite".into()));
        }
        Ok(Kernel {
            width,
            height,
            data,
        })
    }

    pub fn square(size: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(size, size, data)
    }

    /// `f(dx, dy)` with offsets from the anchor, `dy` growing downward.
    pub fn from_offsets(size: usize, mut f: impl FnMut(i64, i64) -> f64) -> Self {
        assert!(size % 2 == 1, "kernel size must be odd");
        let c = (size / 2) as i64;
        let mut data = Vec::with_capacity(size * size);
        for y in 0..size as i64 {
            for x in 0..size as i64 {
                data.push(f(x - c, y - c));
            }
        }
        Kernel {
            width: size,
            height: size,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Coefficient at offset `(dx, dy)` from the anchor.
    pub fn at(&self, dx: i64, dy: i64) -> f64 {
        let x = dx + (self.width / 2) as i64;
        let y = dy + (self.height / 2) as i64;
        self.get(x as usize, y as usize)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    /// The kernel turned by 180 degrees.
    pub fn rotated_180(&self) -> Kernel {
        let mut data = self.data.clone();
        data.reverse();
        Kernel {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn scaled(&self, a: f64) -> Kernel {
        Kernel {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v * a).collect(),
        }
    }
}

/// Valid destination range `[lo, hi)` along one axis for a tap at offset `d`.
#[inline]
fn span(len: usize, d: i64) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (len as i64 - d).clamp(0, len as i64) as usize;
    (lo.min(hi), hi)
}

/// `out(x, y) = sum_{dx,dy} k(dx, dy) * map(x + dx, y + dy)`, reading
/// out-of-range pixels as zero.
pub fn correlate(map: &FieldMap, kernel: &Kernel) -> FieldMap {
    let (w, h) = map.dims();
    let mut out = vec![0.0; w * h];
    let src = map.data();
    let cx = (kernel.width / 2) as i64;
    let cy = (kernel.height / 2) as i64;
    for ky in 0..kernel.height {
        let dy = ky as i64 - cy;
        let (y0, y1) = span(h, dy);
        for kx in 0..kernel.width {
            let wgt = kernel.get(kx, ky);
            if wgt == 0.0 {
                continue;
            }
            let dx = kx as i64 - cx;
            let (x0, x1) = span(w, dx);
            if x0 >= x1 {
                continue;
            }
            for y in y0..y1 {
                let sy = (y as i64 + dy) as usize;
                let drow = &mut out[y * w + x0..y * w + x1];
                let srow_start = (sy * w) as i64 + x0 as i64 + dx;
                let srow = &src[srow_start as usize..srow_start as usize + (x1 - x0)];
                for (d, s) in drow.iter_mut().zip(srow) {
                    *d += wgt * s;
                }
            }
        }
    }
    FieldMap::from_vec(w, h, out).expect("finite inputs give finite outputs")
}

/// True convolution: correlation with the 180-degree rotated kernel.
pub fn convolve(map: &FieldMap, kernel: &Kernel) -> FieldMap {
    correlate(map, &kernel.rotated_180())
}

/// Source coordinate sampled by destination index `d` when resizing an axis
/// from `src_len` to `dst_len` (pixel centres aligned).
#[inline]
pub fn bilinear_source(d: usize, src_len: usize, dst_len: usize) -> f64 {
    let s = (d as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5;
    s.clamp(0.0, (src_len - 1) as f64)
}

/// Precomputed `(i0, i1, frac)` triples for one axis.
fn axis_weights(src_len: usize, dst_len: usize) -> Vec<(usize, usize, f64)> {
    (0..dst_len)
        .map(|d| {
            let s = bilinear_source(d, src_len, dst_len);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src_len - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resampling with centre-aligned pixels and edge clamping.
pub fn resize_bilinear(map: &FieldMap, width: usize, height: usize) -> FieldMap {
    assert!(width > 0 && height > 0, "resize target must be non-empty");
    if map.dims() == (width, height) {
        return map.clone();
    }
    let xs = axis_weights(map.width(), width);
    let ys = axis_weights(map.height(), height);
    FieldMap::from_fn(width, height, |x, y| {
        let (x0, x1, fx) = xs[x];
        let (y0, y1, fy) = ys[y];
        let top = map.get(x0, y0) * (1.0 - fx) + map.get(x1, y0) * fx;
        let bottom = map.get(x0, y1) * (1.0 - fx) + map.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Zeroes entries whose magnitude is below `rel * scale`; removes floating
/// roundoff left behind by zero-DC kernels.
pub(crate) fn flush_small(map: &mut FieldMap, scale: f64, rel: f64) {
    let eps = rel * scale;
    map.map_in_place(|v| if v.abs() <= eps { 0.0 } else { v });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_correlate(map: &FieldMap, k: &Kernel) -> FieldMap {
        let (w, h) = map.dims();
        let (cx, cy) = ((k.width() / 2) as i64, (k.height() / 2) as i64);
        FieldMap::from_fn(w, h, |x, y| {
            let mut acc = 0.0;
            for ky in 0..k.height() {
                for kx in 0..k.width() {
                    let sx = x as i64 + kx as i64 - cx;
                    let sy = y as i64 + ky as i64 - cy;
                    if sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < h {
                        acc += k.get(kx, ky) * map.get(sx as usize, sy as usize);
                    }
                }
            }
            acc
        })
    }

    fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> FieldMap {
        FieldMap::from_fn(w, h, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn correlation_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (w, h) = (rng.gen_range(1..12), rng.gen_range(1..12));
            let n = [1, 3, 5, 7][rng.gen_range(0..4)];
            let k = Kernel::from_offsets(n, |_, _| rng.gen_range(-1.0..1.0));
            let m = random_map(&mut rng, w, h);
            let a = correlate(&m, &k);
            let b = naive_correlate(&m, &k);
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_map(&mut rng, 7, 5);
        let k = Kernel::from_offsets(3, |dx, dy| if dx == 0 && dy == 0 { 1.0 } else { 0.0 });
        assert_eq!(correlate(&m, &k), m);
    }

    #[test]
    fn shifted_delta_shows_orientation_conventions() {
        let mut m = FieldMap::zeros(5, 5);
        m.set(3, 2, 1.0);
        // correlation with a tap at dx = +1 reads the right neighbour
        let k = Kernel::from_offsets(3, |dx, dy| if dx == 1 && dy == 0 { 1.0 } else { 0.0 });
        assert_eq!(correlate(&m, &k).get(2, 2), 1.0);
        // convolution scatters the other way
        assert_eq!(convolve(&m, &k).get(4, 2), 1.0);
    }

    #[test]
    fn convolution_is_correlation_with_flipped_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_map(&mut rng, 9, 6);
        let k = Kernel::from_offsets(5, |_, _| rng.gen_range(-1.0..1.0));
        let flipped = Kernel::from_offsets(5, |dx, dy| k.at(-dx, -dy));
        assert_eq!(convolve(&m, &k), correlate(&m, &flipped));
    }

    #[test]
    fn kernel_validation() {
        assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel::new(3, 3, vec![0.0; 8]).is_err());
        assert!(Kernel::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn bilinear_constant_and_identity() {
        let m = FieldMap::filled(13, 9, 2.5);
        let r = resize_bilinear(&m, 7, 4);
        assert!(r.data().iter().all(|&v| (v - 2.5).abs() < 1e-15));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_map(&mut rng, 6, 6);
        assert_eq!(resize_bilinear(&m, 6, 6), m);
    }

    #[test]
    fn bilinear_halving_averages_pairs() {
        let m = FieldMap::from_fn(4, 2, |x, _| x as f64);
        let r = resize_bilinear(&m, 2, 1);
        assert_eq!(r.data(), &[0.5, 2.5]);
    }

    proptest! {
        #[test]
        fn correlation_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m1 = random_map(&mut rng, 8, 7);
            let m2 = random_map(&mut rng, 8, 7);
            let k = Kernel::from_offsets(5, |_, _| rng.gen_range(-1.0..1.0));
            let lhs = correlate(&m1.zip_with(&m2, |p, q| a * p + b * q), &k);
            let c1 = correlate(&m1, &k);
            let c2 = correlate(&m2, &k);
            for i in 0..lhs.len() {
                let rhs = a * c1.data()[i] + b * c2.data()[i];
                prop_assert!((lhs.data()[i] - rhs).abs() < 1e-12);
            }
        }
    }
}
