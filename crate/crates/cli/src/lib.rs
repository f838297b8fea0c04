//! The `podvs` command line.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on data errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{error::ErrorKind, Args, Parser, Subcommand, ValueEnum};

use podvs::hw::{resource_report, run_hw_pipeline, HwProfile};
use podvs::io::{read_archive, read_frames, write_maps, write_ppm, ArchiveMeta};
use podvs::metrics::{self, MetricConfig, VideoMaps};
use podvs::pipeline::{run_sequence_with, Backend, Pipeline};
use podvs::synth::Scene;
use podvs::{load_config, EngineConfig, ResolutionMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "podvs", version, about = "Proto-object based dynamic visual saliency")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute saliency maps for a frame sequence.
    Run(RunArgs),
    /// Score map archives against eye fixations (shuffled AUC and KLD).
    Eval(EvalArgs),
    /// Compare two map archives frame by frame (PCC and masked-mean NSS).
    Compare(CompareArgs),
    /// Print the cycle and memory ledger of a hardware mode.
    Profile(ProfileArgs),
    /// Write the built-in synthetic videos as PPM frames.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Reference,
    Hw112,
    Hw80,
}

impl Mode {
    fn resolution(self) -> ResolutionMode {
        match self {
            Mode::Reference => ResolutionMode::Reference640,
            Mode::Hw112 => ResolutionMode::Hw112,
            Mode::Hw80 => ResolutionMode::Hw80,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Reference => "reference",
            Mode::Hw112 => "hw112",
            Mode::Hw80 => "hw80",
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Frame directory, or a text file listing frame paths.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Engine settings file; its resolution must match `--mode`.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Run a hardware mode in double precision instead of fixed point.
    #[arg(long)]
    float: bool,
    /// Also write raw 32-bit planes.
    #[arg(long)]
    raw: bool,
    /// Channels processed in parallel by the modeled device.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=9))]
    channels: u8,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Map archive of one video, as NAME=DIR; repeat per video.
    #[arg(long = "maps", value_name = "NAME=DIR", required = true, value_parser = parse_named_dir)]
    maps: Vec<(String, PathBuf)>,
    /// CSV with header `video,frame,subject,x,y`.
    #[arg(long, value_name = "CSV")]
    fixations: PathBuf,
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Reference archive; its maps define the NSS mask.
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 0.7)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=9))]
    channels: u8,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// onset, static, popout, moving or all.
    #[arg(long, default_value = "all")]
    scene: String,
    /// Frame size as WxH.
    #[arg(long, default_value = "112x84", value_parser = parse_size)]
    size: (usize, usize),
    #[arg(long, default_value_t = 15)]
    frames: usize,
}

fn parse_named_dir(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, dir)) if !name.is_empty() && !dir.is_empty() => Ok((name.to_string(), PathBuf::from(dir))),
        _ => Err(format!("expected NAME=DIR, got `{s}`")),
    }
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: usize = w.parse().map_err(|_| format!("bad width in `{s}`"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height in `{s}`"))?;
    if w < 16 || h < 16 {
        return Err(format!("frames must be at least 16x16, got {w}x{h}"));
    }
    Ok((w, h))
}

type CmdResult = Result<String, String>;

fn data_err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn engine_config(mode: Mode, config: Option<&Path>) -> Result<EngineConfig, String> {
    let cfg = match config {
        Some(p) => load_config(p).map_err(data_err)?,
        None => EngineConfig::for_mode(mode.resolution()),
    };
    if cfg.resolution != mode.resolution() {
        return Err(format!(
            "config resolution {} does not match --mode {}",
            cfg.resolution,
            mode.name()
        ));
    }
    Ok(cfg)
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    let cfg = engine_config(a.mode, a.config.as_deref())?;
    let frames = read_frames(&a.input).map_err(data_err)?;
    let fixed = cfg.resolution.is_hw() && !a.float;
    let mut report = String::new();
    let maps = if fixed {
        let run = run_hw_pipeline(&frames, &cfg, a.channels as usize).map_err(data_err)?;
        std::fs::create_dir_all(&a.out).map_err(data_err)?;
        std::fs::write(a.out.join("profile.txt"), run.profile.to_text()).map_err(data_err)?;
        std::fs::write(a.out.join("profile.json"), run.profile.to_json()).map_err(data_err)?;
        let _ = writeln!(
            report,
            "modeled frame rate {:.3} Hz, saturations {}, accumulator overflows {}",
            run.profile.frame_rate_hz, run.profile.flags.saturations, run.profile.flags.accumulator_overflows
        );
        run.maps
    } else {
        let pipe = Pipeline::with_backend(cfg.clone(), Backend::Float).map_err(data_err)?;
        let out = run_sequence_with(&frames, pipe).map_err(data_err)?;
        let _ = writeln!(report, "mean {:.1} ms/frame", out.mean_frame_time().as_secs_f64() * 1e3);
        out.maps
    };
    let (w, h) = cfg.dims();
    let meta = ArchiveMeta {
        width: w,
        height: h,
        frame_rate: cfg.frame_rate,
        mode: if cfg.resolution.is_hw() && !fixed {
            format!("{}-float", a.mode.name())
        } else {
            a.mode.name().to_string()
        },
        version: podvs::VERSION.to_string(),
        frames: maps.len(),
        raw: a.raw,
    };
    write_maps(&maps, &a.out, &meta).map_err(data_err)?;
    Ok(format!("wrote {} maps to {}\n{report}", maps.len(), a.out.display()))
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let fix = metrics::read_fixations_csv(&a.fixations).map_err(data_err)?;
    if fix.is_empty() {
        return Err("no fixations".into());
    }
    let mut maps = VideoMaps::new();
    for (name, dir) in &a.maps {
        let (meta, m) = read_archive(dir).map_err(data_err)?;
        fix.validate_bounds(meta.width, meta.height).map_err(data_err)?;
        if maps.insert(name.clone(), m).is_some() {
            return Err(format!("video `{name}` given twice"));
        }
    }
    let cfg = MetricConfig {
        repeats: a.repeats,
        bins: a.bins,
        seed: a.seed,
        ..Default::default()
    };
    let auc = metrics::auc_roc(&maps, &fix, &cfg).map_err(data_err)?;
    let kld = metrics::kld(&maps, &fix, &cfg).map_err(data_err)?;
    if a.json {
        let v = serde_json::json!({ "auc": auc, "kld": kld, "config": cfg });
        return Ok(format!("{}\n", serde_json::to_string_pretty(&v).map_err(data_err)?));
    }
    Ok(format!(
        "auc {:.4}\nkld {:.4}\nframes scored {} skipped {}\n",
        auc.value, kld.value, auc.frames_scored, auc.frames_skipped
    ))
}

fn cmd_compare(a: &CompareArgs) -> CmdResult {
    let (_, ma) = read_archive(&a.a).map_err(data_err)?;
    let (_, mb) = read_archive(&a.b).map_err(data_err)?;
    let c = metrics::compare_sequences(&ma, &mb, a.threshold).map_err(data_err)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
    let mut s = String::new();
    for (i, (p, n)) in c.frames.iter().enumerate() {
        let _ = writeln!(s, "frame {i} pcc {}", fmt(*p));
        let _ = writeln!(s, "frame {i} nss {}", fmt(*n));
    }
    let _ = writeln!(s, "mean pcc {}", fmt(c.mean_pcc));
    let _ = writeln!(s, "mean nss {}", fmt(c.mean_nss));
    Ok(s)
}

fn cmd_profile(a: &ProfileArgs) -> CmdResult {
    let res = a.mode.resolution();
    if !res.is_hw() {
        return Err("profile needs a hardware mode (hw112 or hw80)".into());
    }
    let p = HwProfile::new(res, a.channels as usize).map_err(data_err)?;
    if a.json {
        return Ok(format!("{}\n", p.to_json()));
    }
    let r = resource_report(res, a.channels as usize).map_err(data_err)?;
    Ok(format!(
        "{}memory {} bytes for {} channel(s), {} of {} BRAM36 blocks\n",
        p.to_text(),
        r.total_bytes,
        r.channels,
        r.bram36_needed,
        r.bram36_available
    ))
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    let scenes: Vec<Scene> = if a.scene == "all" {
        Scene::ALL.to_vec()
    } else {
        vec![a.scene.parse::<Scene>()?]
    };
    let (w, h) = a.size;
    for &s in &scenes {
        let dir = if scenes.len() == 1 { a.out.clone() } else { a.out.join(s.name()) };
        std::fs::create_dir_all(&dir).map_err(data_err)?;
        for (i, f) in s.frames(w, h, a.frames).iter().enumerate() {
            write_ppm(dir.join(format!("{i:03}.ppm")), f).map_err(data_err)?;
        }
    }
    Ok(format!("wrote {} scene(s) of {} frames at {w}x{h}\n", scenes.len(), a.frames))
}

/// Parses `args` (including the program name) and runs one subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(text) => {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DATA
        }
    }
}
