//! Per-frame orchestration: history, channels, pyramids, grouping, fusion.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::channels::{extract_all, ChannelId, ChannelInputs};
use crate::config::{validate_frame, EngineConfig};
use crate::error::{Error, Result};
use crate::frame::{FieldMap, FrameHistory, FrameRGB};
use crate::grouping::{channel_pyramid, group_pyramid, PerTheta};
use crate::hw::fixed::FixedFlags;
use crate::hw::pipeline::{group_channel_fixed, FixedBank};
use crate::kernels::KernelBank;
use crate::normalize::{conspicuity, fuse};
use crate::pyramid::{build_pyramid, PyramidKind};
use crate::temporal::{kernels_for_rate, TemporalKernel};

/// Environment variable capping the worker threads of a pipeline.
pub const THREADS_ENV: &str = "PODVS_THREADS";

/// Arithmetic used for the grouping stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Double precision.
    Float,
    /// Bit-accurate fixed-point model; hardware resolutions only.
    Fixed,
}

/// Distinct grouping inputs: the four orientation channels share one.
const GROUPING_SOURCES: [ChannelId; 6] = [
    ChannelId::Intensity,
    ChannelId::RG,
    ChannelId::GR,
    ChannelId::BY,
    ChannelId::YB,
    ChannelId::O0,
];

fn source_index(id: ChannelId) -> usize {
    match id.orientation_index() {
        Some(_) => 5,
        None => id.index(),
    }
}

/// Saliency plus the per-channel conspicuity maps it was fused from.
#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub saliency: FieldMap,
    pub conspicuity: Vec<(ChannelId, FieldMap)>,
}

pub struct Pipeline {
    cfg: EngineConfig,
    backend: Backend,
    history: FrameHistory,
    strong: TemporalKernel,
    weak: TemporalKernel,
    bank: KernelBank,
    fixed_bank: Option<FixedBank>,
    frames_seen: u64,
    flags: FixedFlags,
    pool: Arc<rayon::ThreadPool>,
}

impl Pipeline {
    /// Double-precision pipeline.
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        Self::with_backend(cfg, Backend::Float)
    }

    pub fn with_backend(cfg: EngineConfig, backend: Backend) -> Result<Self> {
        let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0);
        Self::with_threads(cfg, backend, threads)
    }

    /// `threads == 0` lets the pool size itself to the machine.
    pub fn with_threads(cfg: EngineConfig, backend: Backend, threads: usize) -> Result<Self> {
        cfg.validate()?;
        if backend == Backend::Fixed && !cfg.resolution.is_hw() {
            return Err(Error::InvalidInput(format!(
                "fixed-point model needs a hardware resolution, got {}",
                cfg.resolution
            )));
        }
        let (strong, weak) = kernels_for_rate(cfg.frame_rate)?;
        let bank = KernelBank::new(cfg.kernel_size())?;
        let fixed_bank = (backend == Backend::Fixed).then(|| FixedBank::new(&bank, cfg.fixed.coef));
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        Ok(Pipeline {
            history: FrameHistory::new(strong.len(), cfg.frame_period_ms()),
            cfg,
            backend,
            strong,
            weak,
            bank,
            fixed_bank,
            frames_seen: 0,
            flags: FixedFlags::default(),
            pool: Arc::new(pool),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn frames_seen(&self) -> u64 {
        self.frames_seen
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Clipping counters accumulated by the fixed-point backend.
    pub fn fixed_flags(&self) -> FixedFlags {
        self.flags
    }

    pub fn step(&mut self, frame: FrameRGB) -> Result<FieldMap> {
        Ok(self.step_detailed(frame)?.saliency)
    }

    pub fn step_detailed(&mut self, frame: FrameRGB) -> Result<FrameOutput> {
        validate_frame(&frame, &self.cfg)?;
        self.history.push(frame)?;
        self.frames_seen += 1;
        let inputs = extract_all(&self.history, &self.strong, &self.weak)?;
        let pool = Arc::clone(&self.pool);
        pool.install(|| self.process(&inputs))
    }

    fn group(&self, input: &FieldMap) -> Result<(Vec<PerTheta>, FixedFlags)> {
        match &self.fixed_bank {
            None => {
                let pyr = build_pyramid(input, self.cfg.resolution)?;
                Ok((group_pyramid(&pyr, &self.bank, self.cfg.w_p)?.grp_sums(), FixedFlags::default()))
            }
            Some(fb) => group_channel_fixed(input, &self.cfg, fb),
        }
    }

    fn process(&mut self, inputs: &ChannelInputs) -> Result<FrameOutput> {
        let grouped: Vec<(Vec<PerTheta>, FixedFlags)> = GROUPING_SOURCES
            .par_iter()
            .map(|&id| self.group(inputs.get(id)))
            .collect::<Result<_>>()?;
        for (_, f) in &grouped {
            self.flags.merge(*f);
        }
        let kind = PyramidKind::for_mode(self.cfg.resolution);
        let target = self.cfg.dims();
        let lm = &self.cfg.local_maxima;
        let conspicuity: Vec<(ChannelId, FieldMap)> = ChannelId::ALL
            .par_iter()
            .map(|&id| {
                let levels = &grouped[source_index(id)].0;
                let pyr = channel_pyramid(levels, id.orientation_index(), kind);
                (id, conspicuity(&pyr, target, lm))
            })
            .collect();
        let maps: Vec<FieldMap> = conspicuity.iter().map(|(_, m)| m.clone()).collect();
        let saliency = fuse(&maps, self.cfg.n2_ceiling, lm)?;
        Ok(FrameOutput { saliency, conspicuity })
    }
}

/// Maps in input order with wall-clock time per frame.
#[derive(Clone, Debug)]
pub struct SequenceOutput {
    pub maps: Vec<FieldMap>,
    pub frame_times: Vec<Duration>,
}

impl SequenceOutput {
    pub fn mean_frame_time(&self) -> Duration {
        if self.frame_times.is_empty() {
            return Duration::ZERO;
        }
        self.frame_times.iter().sum::<Duration>() / self.frame_times.len() as u32
    }
}

/// Runs the double-precision pipeline over a sequence.
pub fn run_sequence(frames: &[FrameRGB], cfg: &EngineConfig) -> Result<SequenceOutput> {
    run_sequence_with(frames, Pipeline::new(cfg.clone())?)
}

/// Runs a prepared pipeline over a sequence.
pub fn run_sequence_with(frames: &[FrameRGB], mut pipe: Pipeline) -> Result<SequenceOutput> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidInput("empty frame sequence".into()))?;
    for f in frames {
        if f.dims() != first.dims() {
            return Err(Error::dims(first.dims(), f.dims()));
        }
    }
    let mut maps = Vec::with_capacity(frames.len());
    let mut frame_times = Vec::with_capacity(frames.len());
    for f in frames {
        let t0 = Instant::now();
        maps.push(pipe.step(f.clone())?);
        frame_times.push(t0.elapsed());
    }
    Ok(SequenceOutput { maps, frame_times })
}
