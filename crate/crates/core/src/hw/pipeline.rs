//! Bit-accurate grouping stages P1 to P7 for one channel.
//!
//! The channel response arrives from the host scaled to `input_bits`
//! (signed when the response has negative values). Intermediate words use
//! the data format, coefficients the coefficient format. Border-ownership
//! products are shifted down by an extra 8 bits so they stay within the data
//! range; dequantization undoes the shift and the input scaling.

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::frame::{FieldMap, FrameRGB};
use crate::grouping::PerTheta;
use crate::hw::fixed::{
    correlate_fixed, round_shift, sqrt_round, FixedFlags, FixedFormat, FixedKernel, FixedMap,
};
use crate::hw::ledger::HwProfile;
use crate::kernels::KernelBank;
use crate::pyramid::{hw_level_dims, ShiftMap};

/// Extra right shift applied to border-ownership products.
pub const BO_PRODUCT_SHIFT: u32 = 8;

/// Kernel banks with quantized coefficients.
#[derive(Clone, Debug)]
pub struct FixedBank {
    pub even: [FixedKernel; 4],
    pub odd: [FixedKernel; 4],
    pub cs: FixedKernel,
    pub vm_left: [FixedKernel; 4],
    pub vm_right: [FixedKernel; 4],
}

impl FixedBank {
    pub fn new(bank: &KernelBank, coef: FixedFormat) -> Self {
        let q = |k: &crate::filter::Kernel| FixedKernel::from_kernel(k, coef);
        FixedBank {
            even: std::array::from_fn(|i| q(&bank.edge.even[i])),
            odd: std::array::from_fn(|i| q(&bank.edge.odd[i])),
            cs: q(&bank.center_surround.on),
            vm_left: std::array::from_fn(|i| q(&bank.von_mises.left[i])),
            vm_right: std::array::from_fn(|i| q(&bank.von_mises.right[i])),
        }
    }
}

/// Host-side scaling of a channel response to `input_bits` integers;
/// returns `(words, scale)` with `word = round(v * scale)`.
pub fn scale_input(map: &FieldMap, input_bits: u32) -> (Vec<i64>, f64) {
    let peak = map.max_abs();
    if peak == 0.0 {
        return (vec![0; map.len()], 0.0);
    }
    let signed = map.min() < 0.0;
    let qmax = if signed {
        (1i64 << (input_bits - 1)) - 1
    } else {
        (1i64 << input_bits) - 1
    };
    let scale = qmax as f64 / peak;
    let words = map
        .data()
        .iter()
        .map(|&v| ((v * scale).round_ties_even() as i64).clamp(-qmax, qmax))
        .collect();
    (words, scale)
}

struct Stages<'a> {
    data: FixedFormat,
    coef: FixedFormat,
    acc_bits: u32,
    bank: &'a FixedBank,
    flags: FixedFlags,
}

type FixedTheta = [FixedMap; 4];

impl Stages<'_> {
    fn corr(&mut self, m: &FixedMap, k: &FixedKernel) -> FixedMap {
        correlate_fixed(m, k, self.acc_bits, &mut self.flags)
    }

    fn edges(&mut self, m: &FixedMap) -> FixedTheta {
        std::array::from_fn(|i| {
            let e = self.corr(m, &self.bank.even[i]);
            let o = self.corr(m, &self.bank.odd[i]);
            e.zip_sat(&o, &mut self.flags, |a, b| {
                let s = (a as i128 * a as i128 + b as i128 * b as i128) as u128;
                sqrt_round(s) as i128
            })
        })
    }

    fn center_surround(&mut self, m: &FixedMap) -> (FixedMap, FixedMap) {
        let cs = self.corr(m, &self.bank.cs);
        let on = cs.map_sat(&mut self.flags, |v| (v as i128).max(0));
        let off = cs.map_sat(&mut self.flags, |v| (-(v as i128)).max(0));
        (on, off)
    }

    /// Eight association-field responses: left theta 0..4, then right.
    fn von_mises(&mut self, m: &FixedMap) -> Vec<FixedMap> {
        let bank = self.bank;
        bank.vm_left
            .iter()
            .chain(bank.vm_right.iter())
            .map(|k| self.corr(m, k))
            .collect()
    }

    fn vm_sum(&mut self, levels: &[FixedMap]) -> Vec<FixedMap> {
        (0..levels.len())
            .map(|j| {
                let (w, h) = levels[j].dims();
                let mut acc = levels[j].clone();
                for (k, coarse) in levels.iter().enumerate().skip(j + 1) {
                    let xs = ShiftMap::new(coarse.width(), w).indices();
                    let ys = ShiftMap::new(coarse.height(), h).indices();
                    let mapped = coarse.gather(&xs, &ys);
                    let shift = (k - j) as u32;
                    acc = acc.zip_sat(&mapped, &mut self.flags, |a, b| a as i128 + round_shift(b as i128, shift));
                }
                acc
            })
            .collect()
    }

    fn gate(&mut self, e: &FixedMap, s: &FixedMap) -> FixedMap {
        let shift = self.data.frac_bits() + BO_PRODUCT_SHIFT;
        e.zip_sat(s, &mut self.flags, |a, b| round_shift((a as i128 * b as i128).max(0), shift))
    }

    fn grouping(&mut self, b_own: &FixedMap, b_other: &FixedMap, own_wins: impl Fn(i64, i64) -> bool, w_p: i64, k: &FixedKernel) -> FixedMap {
        let cf = self.coef.frac_bits();
        let src = b_own.zip_sat(b_other, &mut self.flags, |o, n| {
            if own_wins(o, n) {
                o as i128 - round_shift(w_p as i128 * n as i128, cf)
            } else {
                0
            }
        });
        self.corr(&src, &k.rotated_180())
    }
}

/// Runs stages P1 to P7 on one channel response and returns the
/// dequantized `GrpSum` per level and orientation, plus clipping counts.
pub fn group_channel_fixed(input: &FieldMap, cfg: &EngineConfig, bank: &FixedBank) -> Result<(Vec<PerTheta>, FixedFlags)> {
    let mode = cfg.resolution;
    let dims = hw_level_dims(mode).ok_or_else(|| Error::InvalidInput(format!("{mode} is not a hardware mode")))?;
    if input.dims() != dims[0] {
        return Err(Error::dims(dims[0], input.dims()));
    }
    let fx = cfg.fixed;
    let data = fx.data;
    let (words, scale) = scale_input(input, fx.input_bits);
    if scale == 0.0 {
        let zero = dims.iter().map(|&(w, h)| std::array::from_fn(|_| FieldMap::zeros(w, h))).collect();
        return Ok((zero, FixedFlags::default()));
    }
    let mut st = Stages {
        data,
        coef: fx.coef,
        acc_bits: fx.accumulator_bits,
        bank,
        flags: FixedFlags::default(),
    };
    // P1
    let base = FixedMap::from_raw(dims[0].0, dims[0].1, data, words.iter().map(|&q| q << data.frac_bits()).collect());
    // P2
    let levels: Vec<FixedMap> = dims
        .iter()
        .map(|&(w, h)| {
            base.gather(
                &ShiftMap::new(dims[0].0, w).indices(),
                &ShiftMap::new(dims[0].1, h).indices(),
            )
        })
        .collect();
    // P3
    let edges: Vec<FixedTheta> = levels.iter().map(|l| st.edges(l)).collect();
    let cs: Vec<(FixedMap, FixedMap)> = levels.iter().map(|l| st.center_surround(l)).collect();
    // P4
    let on_vm: Vec<Vec<FixedMap>> = cs.iter().map(|(on, _)| st.von_mises(on)).collect();
    let off_vm: Vec<Vec<FixedMap>> = cs.iter().map(|(_, off)| st.von_mises(off)).collect();
    // P5, per field across levels
    let sum_fields = |st: &mut Stages, vm: &[Vec<FixedMap>]| -> Vec<Vec<FixedMap>> {
        let per_field: Vec<Vec<FixedMap>> = (0..8)
            .map(|f| {
                let stack: Vec<FixedMap> = vm.iter().map(|lvl| lvl[f].clone()).collect();
                st.vm_sum(&stack)
            })
            .collect();
        (0..vm.len()).map(|j| (0..8).map(|f| per_field[f][j].clone()).collect()).collect()
    };
    let on_sum = sum_fields(&mut st, &on_vm);
    let off_sum = sum_fields(&mut st, &off_vm);
    let (w_p, _) = fx.coef.quantize_value(cfg.w_p);
    // undo the product shift and the input scaling
    let dequant = data.ulp() * f64::from(1u32 << BO_PRODUCT_SHIFT) / (scale * scale);
    let mut out = Vec::with_capacity(levels.len());
    for j in 0..levels.len() {
        let grp: PerTheta = std::array::from_fn(|i| {
            let e = &edges[j][i];
            // P6
            let light_l = st.gate(e, &on_sum[j][i]);
            let light_r = st.gate(e, &on_sum[j][i + 4]);
            let dark_l = st.gate(e, &off_sum[j][i]);
            let dark_r = st.gate(e, &off_sum[j][i + 4]);
            let b_l = light_l.zip_sat(&dark_l, &mut st.flags, |a, b| a as i128 + b as i128);
            let b_r = light_r.zip_sat(&dark_r, &mut st.flags, |a, b| a as i128 + b as i128);
            // P7 with host-side masks; ties go left
            let g_l = st.grouping(&b_l, &b_r, |l, r| l >= r, w_p, &bank.vm_left[i]);
            let g_r = st.grouping(&b_r, &b_l, |r, l| l < r, w_p, &bank.vm_right[i]);
            let sum = g_l.zip_sat(&g_r, &mut st.flags, |a, b| a as i128 + b as i128);
            FieldMap::from_vec(sum.width(), sum.height(), sum.data().iter().map(|&v| v as f64 * dequant).collect())
                .expect("finite")
        });
        out.push(grp);
    }
    Ok((out, st.flags))
}

/// Maps and ledger from a fixed-point run.
#[derive(Clone, Debug)]
pub struct HwRun {
    pub maps: Vec<FieldMap>,
    pub profile: HwProfile,
}

/// Processes a sequence through the fixed-point model. The profile's
/// clipping counters cover the whole run.
pub fn run_hw_pipeline(frames: &[FrameRGB], cfg: &EngineConfig, channels_parallel: usize) -> Result<HwRun> {
    if !cfg.resolution.is_hw() {
        return Err(Error::InvalidInput(format!(
            "fixed-point model needs a hardware resolution, got {}",
            cfg.resolution
        )));
    }
    let mut pipe = crate::pipeline::Pipeline::with_backend(cfg.clone(), crate::pipeline::Backend::Fixed)?;
    let mut maps = Vec::with_capacity(frames.len());
    for f in frames {
        maps.push(pipe.step(f.clone())?);
    }
    let mut profile = HwProfile::new(cfg.resolution, channels_parallel)?;
    profile.flags = pipe.fixed_flags();
    Ok(HwRun { maps, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ResolutionMode;
    use crate::grouping::group_pyramid;
    use crate::metrics::pcc;
    use crate::pyramid::build_hw_pyramid;

    fn default_hw_config() -> EngineConfig {
        EngineConfig::for_mode(ResolutionMode::Hw112)
    }

    fn square(w: usize, h: usize) -> FieldMap {
        FieldMap::from_fn(w, h, |x, y| if (40..60).contains(&x) && (30..50).contains(&y) { 200.0 } else { 20.0 })
    }

    #[test]
    fn input_scaling() {
        let m = FieldMap::from_vec(2, 1, vec![0.5, 1.0]).unwrap();
        let (w, s) = scale_input(&m, 8);
        assert_eq!(w, vec![128, 255]);
        assert_eq!(s, 255.0);
        let m = FieldMap::from_vec(2, 1, vec![-2.0, 1.0]).unwrap();
        let (w, _) = scale_input(&m, 8);
        assert_eq!(w, vec![-127, 64]);
        assert_eq!(scale_input(&FieldMap::zeros(3, 3), 8).1, 0.0);
    }

    #[test]
    fn rejects_wrong_geometry() {
        let cfg = default_hw_config();
        let bank = FixedBank::new(&KernelBank::new(5).unwrap(), cfg.fixed.coef);
        assert!(group_channel_fixed(&FieldMap::zeros(80, 60), &cfg, &bank).is_err());
        let refcfg = EngineConfig::for_mode(ResolutionMode::Reference640);
        assert!(group_channel_fixed(&FieldMap::zeros(640, 480), &refcfg, &bank).is_err());
    }

    #[test]
    fn fixed_grouping_tracks_float_grouping() {
        let cfg = default_hw_config();
        let kb = KernelBank::new(5).unwrap();
        let bank = FixedBank::new(&kb, cfg.fixed.coef);
        let m = square(112, 84);
        let (fixed, flags) = group_channel_fixed(&m, &cfg, &bank).unwrap();
        assert_eq!(flags.accumulator_overflows, 0);
        let float = group_pyramid(&build_hw_pyramid(&m).unwrap(), &kb, 1.0).unwrap();
        for (fl, fx) in float.levels.iter().zip(&fixed) {
            for i in 0..4 {
                let r = pcc(&fl.grp_sum[i], &fx[i]).unwrap();
                assert!(r > 0.95, "theta {i}: pcc {r}");
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let cfg = default_hw_config();
        let bank = FixedBank::new(&KernelBank::new(5).unwrap(), cfg.fixed.coef);
        let (out, flags) = group_channel_fixed(&FieldMap::zeros(112, 84), &cfg, &bank).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|l| l.iter().all(|f| f.max_abs() == 0.0)));
        assert_eq!(flags, FixedFlags::default());
    }
}
