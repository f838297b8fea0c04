//! Cycle and block-memory accounting for the seven-stage hardware dataflow.
//!
//! Stage costs follow from the pyramid geometry:
//!
//! | stage | work | cycles | storage |
//! |---|---|---|---|
//! | P1 | ingest one channel at 8 bits | bytes / link rate | 8 bits per base pixel |
//! | P2 | nearest-neighbour pyramid | 5 per pixel of the largest extra level | 8 bits per extra-level pixel |
//! | P3 | 8 edge + 1 centre-surround weighted sums | 114 per pyramid pixel | 6 bytes per pyramid pixel |
//! | P4 | 16 von Mises filterings | 114 per pyramid pixel | 16 bytes per pyramid pixel |
//! | P5 | across-level von Mises sum, in place | 6 per pixel per level depth | none |
//! | P6 | border ownership | 6 per base pixel | 8 bytes per pyramid pixel |
//! | P7 | grouping | 114 per pyramid pixel | 4 bytes per pyramid pixel |
//!
//! A per-pixel windowed stage costs 25 cycles to load the patch, 75 for the
//! 25 multiply-accumulates and 14 to drain, take the root and store.
//!
//! Stages run as a task-level pipeline, so one channel pass takes the slowest
//! stage plus a fixed host round trip (transfer, mask computation and
//! handshakes). That allowance is the model's single calibration constant.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::ResolutionMode;
use crate::error::{Error, Result};
use crate::hw::fixed::{FixedFlags, MAC_CYCLES_PER_TAP};
use crate::pyramid::hw_level_dims;

pub const CLOCK_HZ: f64 = 100e6;
pub const CHANNELS: usize = 9;
/// Host link throughput, bytes per second.
pub const LINK_BYTES_PER_SEC: f64 = 340e6;
pub const PATCH_LOAD_CYCLES: u64 = 25;
pub const WEIGHTED_SUM_CYCLES: u64 = 25 * MAC_CYCLES_PER_TAP;
pub const DRAIN_CYCLES: u64 = 14;
pub const WINDOW_CYCLES_PER_PIXEL: u64 = PATCH_LOAD_CYCLES + WEIGHTED_SUM_CYCLES + DRAIN_CYCLES;
pub const DOWNSAMPLE_CYCLES_PER_PIXEL: u64 = 5;
pub const VM_SUM_CYCLES_PER_PIXEL: u64 = 6;
pub const OWNERSHIP_CYCLES_PER_PIXEL: u64 = 6;
/// Host round trip per channel pass, cycles. Calibrated once so a single
/// channel engine at 112x84 runs the nine channels at 2.079 Hz.
pub const HOST_ALLOWANCE_CYCLES: u64 = 3_444_127;
/// 36 Kbit block RAMs on the modeled device.
pub const DEVICE_BRAM36: u64 = 325;
pub const BRAM36_BITS: u64 = 36 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stage {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    /// Mask computation on the host; costs no device cycles.
    HostMasks,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::P1 => "P1 ingest",
            Stage::P2 => "P2 pyramid",
            Stage::P3 => "P3 edges+cs",
            Stage::P4 => "P4 von-mises",
            Stage::P5 => "P5 vm-sum",
            Stage::P6 => "P6 ownership",
            Stage::P7 => "P7 grouping",
            Stage::HostMasks => "host masks",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageCost {
    pub stage: Stage,
    pub cycles: u64,
    pub memory_bits: u64,
}

impl StageCost {
    pub fn memory_bytes(&self) -> u64 {
        self.memory_bits / 8
    }
}

fn pixels(d: (usize, usize)) -> u64 {
    (d.0 * d.1) as u64
}

fn levels(mode: ResolutionMode) -> Result<[(usize, usize); 3]> {
    hw_level_dims(mode).ok_or_else(|| Error::InvalidInput(format!("{mode} is not a hardware mode")))
}

/// Per-channel cost of every stage, in pipeline order.
pub fn stage_costs(mode: ResolutionMode) -> Result<Vec<StageCost>> {
    let dims = levels(mode)?;
    let base = pixels(dims[0]);
    let extra: Vec<u64> = dims[1..].iter().map(|&d| pixels(d)).collect();
    let total: u64 = dims.iter().map(|&d| pixels(d)).sum();
    let depth = dims.len() as u64;
    // level j = 1 is the coarsest
    let vm_sum: u64 = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| pixels(d) * VM_SUM_CYCLES_PER_PIXEL * (depth - i as u64))
        .sum();
    let c = |stage, cycles, memory_bits| StageCost {
        stage,
        cycles,
        memory_bits,
    };
    Ok(vec![
        c(Stage::P1, (base as f64 / LINK_BYTES_PER_SEC * CLOCK_HZ).ceil() as u64, base * 8),
        c(
            Stage::P2,
            extra.iter().max().copied().unwrap_or(0) * DOWNSAMPLE_CYCLES_PER_PIXEL,
            extra.iter().sum::<u64>() * 8,
        ),
        c(Stage::P3, total * WINDOW_CYCLES_PER_PIXEL, total * 6 * 8),
        c(Stage::P4, total * WINDOW_CYCLES_PER_PIXEL, total * 16 * 8),
        c(Stage::P5, vm_sum, 0),
        c(Stage::P6, base * OWNERSHIP_CYCLES_PER_PIXEL, total * 8 * 8),
        c(Stage::HostMasks, 0, 0),
        c(Stage::P7, total * WINDOW_CYCLES_PER_PIXEL, total * 4 * 8),
    ])
}

/// Cycle and memory ledger for one resolution mode and channel parallelism.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HwProfile {
    pub mode: String,
    pub channels_parallel: usize,
    pub clock_hz: f64,
    pub stages: Vec<StageCost>,
    /// Sum of stage cycles for one channel pass.
    pub total_cycles: u64,
    /// Slowest stage plus host allowance.
    pub pass_cycles: u64,
    pub host_allowance_cycles: u64,
    pub frame_rate_hz: f64,
    /// Per-channel storage, bits.
    pub memory_bits_per_channel: u64,
    pub flags: FixedFlags,
}

impl HwProfile {
    pub fn new(mode: ResolutionMode, channels_parallel: usize) -> Result<Self> {
        if channels_parallel == 0 || channels_parallel > CHANNELS {
            return Err(Error::InvalidInput(format!(
                "channel parallelism must be in 1..=9, got {channels_parallel}"
            )));
        }
        let stages = stage_costs(mode)?;
        let total_cycles = stages.iter().map(|s| s.cycles).sum();
        let slowest = stages.iter().map(|s| s.cycles).max().unwrap_or(0);
        let pass_cycles = slowest + HOST_ALLOWANCE_CYCLES;
        let passes = CHANNELS as f64 / channels_parallel as f64;
        Ok(HwProfile {
            mode: mode.to_string(),
            channels_parallel,
            clock_hz: CLOCK_HZ,
            total_cycles,
            pass_cycles,
            host_allowance_cycles: HOST_ALLOWANCE_CYCLES,
            frame_rate_hz: CLOCK_HZ / (passes * pass_cycles as f64),
            memory_bits_per_channel: stages.iter().map(|s| s.memory_bits).sum(),
            stages,
            flags: FixedFlags::default(),
        })
    }

    pub fn stage(&self, s: Stage) -> &StageCost {
        self.stages.iter().find(|c| c.stage == s).expect("every stage listed")
    }

    /// One stage per line: name, cycles, bytes.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode {} channels_parallel {}", self.mode, self.channels_parallel);
        for c in &self.stages {
            let _ = writeln!(s, "{:<14} {:>10} cycles {:>10} bytes", c.stage.label(), c.cycles, c.memory_bytes());
        }
        let _ = writeln!(s, "{:<14} {:>10} cycles", "total", self.total_cycles);
        let _ = writeln!(s, "{:<14} {:>10} cycles", "host allowance", self.host_allowance_cycles);
        let _ = writeln!(s, "{:<14} {:>10} cycles", "channel pass", self.pass_cycles);
        let _ = writeln!(s, "frame rate {:.3} Hz at {:.0} MHz", self.frame_rate_hz, self.clock_hz / 1e6);
        let _ = writeln!(
            s,
            "flags saturations {} accumulator_overflows {}",
            self.flags.saturations, self.flags.accumulator_overflows
        );
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }
}

/// Modeled block-memory use against the device budget.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceReport {
    pub mode: String,
    pub channels: usize,
    /// `(stage, bytes)` for `channels` channels.
    pub stage_bytes: Vec<(Stage, u64)>,
    pub total_bytes: u64,
    /// 36 Kbit blocks needed if packed perfectly.
    pub bram36_needed: u64,
    pub bram36_available: u64,
    pub fits: bool,
}

/// Memory for `channels` parallel channel engines; storage scales linearly.
pub fn resource_report(mode: ResolutionMode, channels: usize) -> Result<ResourceReport> {
    let stages = stage_costs(mode)?;
    let n = channels as u64;
    let stage_bytes: Vec<(Stage, u64)> = stages.iter().map(|s| (s.stage, s.memory_bytes() * n)).collect();
    let total_bytes: u64 = stage_bytes.iter().map(|(_, b)| b).sum();
    let bram36_needed = (total_bytes * 8).div_ceil(BRAM36_BITS);
    Ok(ResourceReport {
        mode: mode.to_string(),
        channels,
        stage_bytes,
        total_bytes,
        bram36_needed,
        bram36_available: DEVICE_BRAM36,
        fits: bram36_needed <= DEVICE_BRAM36,
    })
}

/// Memory estimate for a lower-resolution engine obtained by scaling a
/// measured single-channel total by `factor`.
pub fn scaled_estimate(single_channel_bytes: u64, factor: f64) -> u64 {
    (single_channel_bytes as f64 * factor).round() as u64
}
