//! Phasic temporal filters.
//!
//! The temporal receptive field of a non-direction-selective V1 simple cell
//! is approximated by
//!
//! ```text
//! r(t) = alpha * (t - tau - delta) * exp(beta * (t - tau)^2)
//! ```
//!
//! with `t` in milliseconds into the past. The kernel is sampled once per
//! frame (`w_k = r(k * period)`) and applied independently at every pixel as
//! a short FIR filter over the frame history.

use crate::error::{Error, Result};
use crate::frame::{FieldMap, FrameHistory, Plane};

/// Frames older than this never contribute to a response.
pub const SUPPORT_MS: f64 = 250.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasicParams {
    pub alpha: f64,
    pub beta: f64,
    /// Time shift, ms.
    pub tau: f64,
    /// Phasic degree, ms.
    pub delta: f64,
}

impl PhasicParams {
    /// Magnocellular (motion-sensitive) cell.
    pub const STRONG: PhasicParams = PhasicParams {
        alpha: -0.00161,
        beta: -0.00111,
        tau: 86.2,
        delta: 5.6,
    };

    /// Parvocellular (colour-preserving) cell.
    pub const WEAK: PhasicParams = PhasicParams {
        alpha: -0.000487,
        beta: -0.000466,
        tau: 116.0,
        delta: 20.0,
    };

    /// Evaluates the continuous response at `t` ms.
    pub fn response(&self, t: f64) -> f64 {
        let s = t - self.tau;
        self.alpha * (t - self.tau - self.delta) * (self.beta * s * s).exp()
    }

    /// Time at which the linear factor changes sign.
    pub fn zero_crossing_ms(&self) -> f64 {
        self.tau + self.delta
    }

    /// Peak positive and peak negative amplitude of `r(t)` over
    /// `[0, horizon_ms]`, sampled every `step_ms`.
    pub fn peak_amplitudes(&self, horizon_ms: f64, step_ms: f64) -> (f64, f64) {
        let n = (horizon_ms / step_ms).round() as usize;
        let (mut hi, mut lo) = (0.0f64, 0.0f64);
        for i in 0..=n {
            let v = self.response(i as f64 * step_ms);
            hi = hi.max(v);
            lo = lo.min(v);
        }
        (hi, lo)
    }

    /// Peak positive over absolute peak negative amplitude.
    pub fn peak_ratio(&self, horizon_ms: f64, step_ms: f64) -> f64 {
        let (hi, lo) = self.peak_amplitudes(horizon_ms, step_ms);
        hi / lo.abs()
    }
}

/// Number of taps that fit inside the filter support at `frame_rate` Hz:
/// the count of `k >= 0` with `k * 1000 / rate < 250`.
pub fn tap_count_for_rate(frame_rate: f64) -> usize {
    let mut k = 0usize;
    while (k as f64) * 1000.0 < SUPPORT_MS * frame_rate {
        k += 1;
    }
    k.max(1)
}

/// Discretized filter: `taps[k]` weights the frame `k` frames in the past.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalKernel {
    taps: Vec<f64>,
    frame_period_ms: f64,
}

impl TemporalKernel {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn frame_period_ms(&self) -> f64 {
        self.frame_period_ms
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Furthest sample instant, ms.
    pub fn lookback_ms(&self) -> f64 {
        (self.taps.len() - 1) as f64 * self.frame_period_ms
    }
}

pub fn make_kernel(params: PhasicParams, frame_period_ms: f64, tap_count: usize) -> Result<TemporalKernel> {
    if !(frame_period_ms.is_finite() && frame_period_ms > 0.0) {
        return Err(Error::InvalidInput("frame period must be positive".into()));
    }
    if tap_count == 0 {
        return Err(Error::InvalidInput("tap count must be at least 1".into()));
    }
    let taps = (0..tap_count)
        .map(|k| params.response(k as f64 * frame_period_ms))
        .collect();
    Ok(TemporalKernel {
        taps,
        frame_period_ms,
    })
}

/// The strongly and weakly phasic kernels for a frame rate.
pub fn kernels_for_rate(frame_rate: f64) -> Result<(TemporalKernel, TemporalKernel)> {
    let period = 1000.0 / frame_rate;
    let taps = tap_count_for_rate(frame_rate);
    Ok((
        make_kernel(PhasicParams::STRONG, period, taps)?,
        make_kernel(PhasicParams::WEAK, period, taps)?,
    ))
}

/// `out(x, y) = sum_t frames[t](x, y) * w_t`, where `frames[0]` is the
/// current frame. Missing history repeats the oldest frame given.
pub fn apply_temporal(kernel: &TemporalKernel, frames: &[FieldMap]) -> Result<FieldMap> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidInput("empty frame history".into()))?;
    for f in frames {
        first.same_dims(f)?;
    }
    let mut out = FieldMap::zeros(first.width(), first.height());
    for (t, &w) in kernel.taps.iter().enumerate() {
        let frame = &frames[t.min(frames.len() - 1)];
        out.add_scaled(frame, w);
    }
    Ok(out)
}

/// Intensity (r+g+b)/3 of each stored frame, newest first.
pub fn intensity_history(history: &FrameHistory) -> Vec<FieldMap> {
    (0..history.len())
        .map(|t| crate::channels::to_intensity(history.past(t).expect("index within history")))
        .collect()
}

/// One colour plane of each stored frame, newest first.
pub fn plane_history(history: &FrameHistory, plane: Plane) -> Vec<FieldMap> {
    (0..history.len())
        .map(|t| history.past(t).expect("index within history").plane(plane))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PERIOD: f64 = 1000.0 / 24.0;

    fn signs(k: &TemporalKernel) -> Vec<bool> {
        k.taps().iter().map(|&w| w > 0.0).collect()
    }

    #[test]
    fn tap_count_at_24_hz_is_six() {
        assert_eq!(tap_count_for_rate(24.0), 6);
        assert_eq!(tap_count_for_rate(30.0), 8);
        let (s, _) = kernels_for_rate(24.0).unwrap();
        assert!(s.lookback_ms() < SUPPORT_MS);
        assert!((s.lookback_ms() - 208.333_333_333_333_3).abs() < 1e-9);
    }

    #[test]
    fn strong_sign_pattern_and_zero_crossing() {
        let k = make_kernel(PhasicParams::STRONG, PERIOD, 6).unwrap();
        assert_eq!(signs(&k), [true, true, true, false, false, false]);
        assert!((PhasicParams::STRONG.zero_crossing_ms() - 91.8).abs() < 1e-12);
    }

    #[test]
    fn weak_sign_pattern() {
        let k = make_kernel(PhasicParams::WEAK, PERIOD, 6).unwrap();
        assert_eq!(signs(&k), [true, true, true, true, false, false]);
        assert!((PhasicParams::WEAK.zero_crossing_ms() - 136.0).abs() < 1e-12);
    }

    #[test]
    fn strong_tap_two_matches_direct_evaluation() {
        // -0.00161 * (83.333.. - 91.8) * exp(-0.00111 * (83.333.. - 86.2)^2)
        let t: f64 = 2.0 * 1000.0 / 24.0;
        let expected = -0.00161 * (t - 91.8) * (-0.00111 * (t - 86.2) * (t - 86.2)).exp();
        let k = make_kernel(PhasicParams::STRONG, PERIOD, 6).unwrap();
        assert!((k.taps()[2] - expected).abs() < 1e-15);
        assert!((k.taps()[2] - 0.013_507_6).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_kernel(PhasicParams::STRONG, 0.0, 6).is_err());
        assert!(make_kernel(PhasicParams::STRONG, PERIOD, 0).is_err());
    }

    #[test]
    fn impulse_history_sifts_one_tap() {
        let k = make_kernel(PhasicParams::STRONG, PERIOD, 6).unwrap();
        let frames: Vec<FieldMap> = (0..6)
            .map(|t| FieldMap::filled(3, 2, if t == 2 { 100.0 } else { 0.0 }))
            .collect();
        let out = apply_temporal(&k, &frames).unwrap();
        for &v in out.data() {
            assert!((v - 100.0 * k.taps()[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_and_zero_history() {
        let k = make_kernel(PhasicParams::WEAK, PERIOD, 6).unwrap();
        let zeros = vec![FieldMap::zeros(4, 4); 6];
        assert!(apply_temporal(&k, &zeros).unwrap().data().iter().all(|&v| v == 0.0));
        let c = vec![FieldMap::filled(4, 4, 7.5); 6];
        let out = apply_temporal(&k, &c).unwrap();
        assert!(out.data().iter().all(|&v| (v - 7.5 * k.sum()).abs() < 1e-12));
    }

    #[test]
    fn mismatched_history_is_an_error() {
        let k = make_kernel(PhasicParams::WEAK, PERIOD, 6).unwrap();
        let frames = vec![FieldMap::zeros(4, 4), FieldMap::zeros(4, 3)];
        assert!(matches!(apply_temporal(&k, &frames), Err(Error::Dimension { .. })));
    }

    #[test]
    fn matches_naive_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = make_kernel(PhasicParams::STRONG, PERIOD, 6).unwrap();
        for _ in 0..20 {
            let frames: Vec<FieldMap> = (0..6)
                .map(|_| FieldMap::from_fn(8, 8, |_, _| rng.gen_range(0.0..255.0)))
                .collect();
            let out = apply_temporal(&k, &frames).unwrap();
            for r in 0..8 {
                for c in 0..8 {
                    let mut acc = 0.0;
                    for (t, frame) in frames.iter().enumerate() {
                        acc += frame.get(c, r) * k.taps()[t];
                    }
                    assert!((out.get(c, r) - acc).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn step_overshoot_is_larger_for_strong_cell() {
        // Response over the frames following a 0 -> 1 step, relative to the
        // sustained level once the whole kernel sees the new value.
        let overshoot = |p: PhasicParams| {
            let k = make_kernel(p, PERIOD, 6).unwrap();
            let mut partial = 0.0f64;
            let mut peak = 0.0f64;
            for &w in k.taps() {
                partial += w;
                peak = peak.max(partial.abs());
            }
            peak / k.sum().abs()
        };
        assert!(overshoot(PhasicParams::STRONG) > overshoot(PhasicParams::WEAK));
    }

    proptest! {
        #[test]
        fn linear_in_history(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = make_kernel(PhasicParams::WEAK, PERIOD, 6).unwrap();
            let h1: Vec<FieldMap> = (0..6).map(|_| FieldMap::from_fn(5, 4, |_, _| rng.gen_range(-50.0..50.0))).collect();
            let h2: Vec<FieldMap> = (0..6).map(|_| FieldMap::from_fn(5, 4, |_, _| rng.gen_range(-50.0..50.0))).collect();
            let mix: Vec<FieldMap> = h1.iter().zip(&h2).map(|(x, y)| x.zip_with(y, |p, q| a * p + b * q)).collect();
            let lhs = apply_temporal(&k, &mix).unwrap();
            let r1 = apply_temporal(&k, &h1).unwrap();
            let r2 = apply_temporal(&k, &h2).unwrap();
            for i in 0..lhs.len() {
                let rhs = a * r1.data()[i] + b * r2.data()[i];
                prop_assert!((lhs.data()[i] - rhs).abs() < 1e-12);
            }
        }
    }
}
