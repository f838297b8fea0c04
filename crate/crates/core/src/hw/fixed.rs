//! Two's-complement fixed-point arithmetic with round-half-even rescaling
//! and saturation.

use crate::filter::Kernel;
use crate::frame::FieldMap;

/// Cycles per multiply-accumulate step (load, multiply, add).
pub const MAC_CYCLES_PER_TAP: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FixedFormat {
    total: u32,
    frac: u32,
    signed: bool,
}

impl FixedFormat {
    /// Unchecked; `EngineConfig::validate` rejects unusable widths.
    pub const fn new(total_bits: u32, frac_bits: u32, signed: bool) -> Self {
        FixedFormat {
            total: total_bits,
            frac: frac_bits,
            signed,
        }
    }

    pub const fn total_bits(&self) -> u32 {
        self.total
    }

    pub const fn frac_bits(&self) -> u32 {
        self.frac
    }

    pub const fn signed(&self) -> bool {
        self.signed
    }

    pub fn max_raw(&self) -> i64 {
        if self.signed {
            (1i64 << (self.total - 1)) - 1
        } else {
            (1i64 << self.total) - 1
        }
    }

    pub fn min_raw(&self) -> i64 {
        if self.signed {
            -(1i64 << (self.total - 1))
        } else {
            0
        }
    }

    /// Real value of one least significant bit.
    pub fn ulp(&self) -> f64 {
        (-(self.frac as f64)).exp2()
    }

    pub fn max_value(&self) -> f64 {
        self.max_raw() as f64 * self.ulp()
    }

    pub fn min_value(&self) -> f64 {
        self.min_raw() as f64 * self.ulp()
    }

    /// Clamps a raw word into range; the flag reports clipping.
    #[inline]
    pub fn saturate(&self, raw: i128) -> (i64, bool) {
        let (lo, hi) = (self.min_raw() as i128, self.max_raw() as i128);
        if raw > hi {
            (hi as i64, true)
        } else if raw < lo {
            (lo as i64, true)
        } else {
            (raw as i64, false)
        }
    }

    /// Nearest representable word (ties to even), saturating.
    pub fn quantize_value(&self, v: f64) -> (i64, bool) {
        let scaled = v * (self.frac as f64).exp2();
        if scaled.is_nan() {
            return (0, true);
        }
        let r = scaled.round_ties_even();
        if r >= i128::MAX as f64 {
            return (self.max_raw(), true);
        }
        if r <= i128::MIN as f64 {
            return (self.min_raw(), true);
        }
        self.saturate(r as i128)
    }

    pub fn to_real(&self, raw: i64) -> f64 {
        raw as f64 * self.ulp()
    }
}

/// `v / 2^shift`, rounded half to even.
#[inline]
pub fn round_shift(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let floor = v >> shift;
    let rem = v - (floor << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && floor & 1 == 1) {
        floor + 1
    } else {
        floor
    }
}

/// Floor square root by Newton iteration.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = 1u128 << ((128 - n.leading_zeros()).div_ceil(2));
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Square root rounded to the nearest integer.
pub fn sqrt_round(n: u128) -> u128 {
    let r = isqrt(n);
    // (r + 1/2)^2 = r^2 + r + 1/4, so round up iff n - r^2 > r
    if n - r * r > r {
        r + 1
    } else {
        r
    }
}

/// Clipping events, counted over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FixedFlags {
    /// Results clipped to the output format.
    pub saturations: u64,
    /// Sums that exceeded the accumulator width.
    pub accumulator_overflows: u64,
}

impl FixedFlags {
    pub fn merge(&mut self, other: FixedFlags) {
        self.saturations += other.saturations;
        self.accumulator_overflows += other.accumulator_overflows;
    }
}

/// A map of raw fixed-point words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedMap {
    width: usize,
    height: usize,
    format: FixedFormat,
    data: Vec<i64>,
}

impl FixedMap {
    pub fn zeros(width: usize, height: usize, format: FixedFormat) -> Self {
        FixedMap {
            width,
            height,
            format,
            data: vec![0; width * height],
        }
    }

    pub fn from_raw(width: usize, height: usize, format: FixedFormat, data: Vec<i64>) -> Self {
        assert_eq!(data.len(), width * height);
        FixedMap {
            width,
            height,
            format,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn format(&self) -> FixedFormat {
        self.format
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.data[y * self.width + x]
    }

    /// Pointwise map with saturation into `format`.
    pub fn map_sat(&self, flags: &mut FixedFlags, f: impl Fn(i64) -> i128) -> FixedMap {
        let data = self
            .data
            .iter()
            .map(|&v| {
                let (r, clipped) = self.format.saturate(f(v));
                flags.saturations += clipped as u64;
                r
            })
            .collect();
        self.with_data(data)
    }

    /// Pointwise combination with saturation into `self`'s format.
    pub fn zip_sat(&self, other: &FixedMap, flags: &mut FixedFlags, f: impl Fn(i64, i64) -> i128) -> FixedMap {
        assert_eq!(self.dims(), other.dims());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let (r, clipped) = self.format.saturate(f(a, b));
                flags.saturations += clipped as u64;
                r
            })
            .collect();
        self.with_data(data)
    }

    /// Reindexes through per-axis source tables (nearest neighbour).
    pub fn gather(&self, xs: &[usize], ys: &[usize]) -> FixedMap {
        let mut data = Vec::with_capacity(xs.len() * ys.len());
        for &sy in ys {
            for &sx in xs {
                data.push(self.get(sx, sy));
            }
        }
        FixedMap {
            width: xs.len(),
            height: ys.len(),
            format: self.format,
            data,
        }
    }
}

impl FixedMap {
    fn with_data(&self, data: Vec<i64>) -> FixedMap {
        FixedMap {
            width: self.width,
            height: self.height,
            format: self.format,
            data,
        }
    }
}

/// Rounds every value to `fmt`; returns the map and the number of clipped
/// values.
pub fn quantize(map: &FieldMap, fmt: FixedFormat) -> (FixedMap, u64) {
    let mut clipped = 0;
    let data = map
        .data()
        .iter()
        .map(|&v| {
            let (r, c) = fmt.quantize_value(v);
            clipped += c as u64;
            r
        })
        .collect();
    (FixedMap::from_raw(map.width(), map.height(), fmt, data), clipped)
}

pub fn dequantize(map: &FixedMap) -> FieldMap {
    let ulp = map.format.ulp();
    FieldMap::from_vec(map.width, map.height, map.data.iter().map(|&v| v as f64 * ulp).collect())
        .expect("finite words")
}

/// A kernel with quantized coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedKernel {
    pub width: usize,
    pub height: usize,
    pub format: FixedFormat,
    pub coeffs: Vec<i64>,
}

impl FixedKernel {
    pub fn from_kernel(k: &Kernel, fmt: FixedFormat) -> Self {
        FixedKernel {
            width: k.width(),
            height: k.height(),
            format: fmt,
            coeffs: k.data().iter().map(|&v| fmt.quantize_value(v).0).collect(),
        }
    }

    pub fn rotated_180(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        FixedKernel { coeffs, ..self.clone() }
    }
}

/// One weighted sum with its modeled cycle cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacResult {
    pub value: i64,
    pub cycles: u64,
    pub saturated: bool,
    pub overflow: bool,
}

fn acc_limits(bits: u32) -> (i128, i128) {
    (-(1i128 << (bits - 1)), (1i128 << (bits - 1)) - 1)
}

/// Rescales a `data * coef` accumulator back to the data format.
#[inline]
fn finish(acc: i128, coef_frac: u32, acc_bits: u32, out: FixedFormat) -> (i64, bool, bool) {
    let (lo, hi) = acc_limits(acc_bits);
    let overflow = acc < lo || acc > hi;
    let acc = acc.clamp(lo, hi);
    let (v, sat) = out.saturate(round_shift(acc, coef_frac));
    (v, sat, overflow)
}

/// `sum patch[i] * kernel[i]` in a single wide accumulator, rounded once to
/// the data format. Costs `3` cycles per tap, 75 for a 5x5 window.
pub fn mac_weighted_sum(
    patch: &[i64],
    kernel: &[i64],
    data: FixedFormat,
    coef: FixedFormat,
    accumulator_bits: u32,
) -> MacResult {
    assert_eq!(patch.len(), kernel.len(), "patch and kernel sizes differ");
    let acc: i128 = patch.iter().zip(kernel).map(|(&p, &k)| p as i128 * k as i128).sum();
    let (value, saturated, overflow) = finish(acc, coef.frac_bits(), accumulator_bits, data);
    MacResult {
        value,
        cycles: MAC_CYCLES_PER_TAP * patch.len() as u64,
        saturated,
        overflow,
    }
}

/// Zero-padded correlation in fixed point. Each output equals
/// [`mac_weighted_sum`] over its window; accumulation is exact, so the
/// tap-major evaluation order does not change results.
pub fn correlate_fixed(map: &FixedMap, kernel: &FixedKernel, accumulator_bits: u32, flags: &mut FixedFlags) -> FixedMap {
    let (w, h) = map.dims();
    let mut acc = vec![0i128; w * h];
    let (cx, cy) = ((kernel.width / 2) as i64, (kernel.height / 2) as i64);
    for ky in 0..kernel.height {
        let dy = ky as i64 - cy;
        for kx in 0..kernel.width {
            let c = kernel.coeffs[ky * kernel.width + kx] as i128;
            if c == 0 {
                continue;
            }
            let dx = kx as i64 - cx;
            let x0 = (-dx).max(0) as usize;
            let x1 = (w as i64 - dx).clamp(0, w as i64) as usize;
            let y0 = (-dy).max(0) as usize;
            let y1 = (h as i64 - dy).clamp(0, h as i64) as usize;
            for y in y0..y1 {
                let sy = (y as i64 + dy) as usize;
                for x in x0..x1 {
                    let sx = (x as i64 + dx) as usize;
                    acc[y * w + x] += c * map.data[sy * w + sx] as i128;
                }
            }
        }
    }
    let data = acc
        .into_iter()
        .map(|a| {
            let (v, sat, ovf) = finish(a, kernel.format.frac_bits(), accumulator_bits, map.format);
            flags.saturations += sat as u64;
            flags.accumulator_overflows += ovf as u64;
            v
        })
        .collect();
    map.with_data(data)
}
