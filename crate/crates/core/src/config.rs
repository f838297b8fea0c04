//! Engine configuration and its flat `key=value` file format.
//!
//! Unspecified keys keep their defaults. Unknown keys, malformed lines and
//! out-of-range values are errors that name the offending key. Blank lines
//! and lines starting with `#` are ignored.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::FrameRGB;
use crate::hw::fixed::FixedFormat;
use crate::normalize::LocalMaximaParams;

/// Input resolution. Each mode fixes the grouping kernel size and pyramid
/// depth, so mixed combinations cannot be constructed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ResolutionMode {
    /// 640x480 input, 11x11 kernels, 10-level pyramid in sqrt(2) steps.
    Reference640,
    /// 112x84 input, 5x5 kernels, 3-level pyramid.
    Hw112,
    /// 80x60 input, 5x5 kernels, 3-level pyramid.
    Hw80,
}

impl ResolutionMode {
    pub const ALL: [ResolutionMode; 3] = [Self::Reference640, Self::Hw112, Self::Hw80];

    pub fn dims(self) -> (usize, usize) {
        match self {
            Self::Reference640 => (640, 480),
            Self::Hw112 => (112, 84),
            Self::Hw80 => (80, 60),
        }
    }

    pub fn kernel_size(self) -> usize {
        match self {
            Self::Reference640 => 11,
            Self::Hw112 | Self::Hw80 => 5,
        }
    }

    pub fn pyramid_depth(self) -> usize {
        match self {
            Self::Reference640 => 10,
            Self::Hw112 | Self::Hw80 => 3,
        }
    }

    pub fn is_hw(self) -> bool {
        !matches!(self, Self::Reference640)
    }

    pub fn from_dims(w: usize, h: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.dims() == (w, h))
    }
}

impl fmt::Display for ResolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (w, h) = self.dims();
        write!(f, "{w}x{h}")
    }
}

impl FromStr for ResolutionMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (w, h) = s
            .trim()
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
        let w: usize = w.trim().parse().map_err(|_| format!("bad width in `{s}`"))?;
        let h: usize = h.trim().parse().map_err(|_| format!("bad height in `{s}`"))?;
        Self::from_dims(w, h).ok_or_else(|| format!("unsupported resolution {w}x{h} (640x480, 112x84, 80x60)"))
    }
}

/// Word formats used by the fixed-point hardware model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPointConfig {
    /// Bits per transmitted input pixel.
    pub input_bits: u32,
    /// Intermediate responses.
    pub data: FixedFormat,
    /// Kernel coefficients.
    pub coef: FixedFormat,
    /// MAC accumulator width.
    pub accumulator_bits: u32,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            input_bits: 8,
            data: FixedFormat::new(18, 8, true),
            coef: FixedFormat::new(18, 16, true),
            accumulator_bits: 48,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub resolution: ResolutionMode,
    /// Input frame rate in Hz; only affects temporal kernel sampling.
    pub frame_rate: f64,
    /// Weight of the inhibitory connection to the opposing border side.
    pub w_p: f64,
    /// Range ceiling `M` used by the second normalization operator.
    pub n2_ceiling: f64,
    pub local_maxima: LocalMaximaParams,
    pub fixed: FixedPointConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::for_mode(ResolutionMode::Reference640)
    }
}

impl EngineConfig {
    pub fn for_mode(resolution: ResolutionMode) -> Self {
        EngineConfig {
            resolution,
            frame_rate: 24.0,
            w_p: 1.0,
            n2_ceiling: 1.0,
            local_maxima: LocalMaximaParams::default(),
            fixed: FixedPointConfig::default(),
        }
    }

    pub fn kernel_size(&self) -> usize {
        self.resolution.kernel_size()
    }

    pub fn pyramid_depth(&self) -> usize {
        self.resolution.pyramid_depth()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.resolution.dims()
    }

    pub fn frame_period_ms(&self) -> f64 {
        1000.0 / self.frame_rate
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::ConfigValue {
            key: key.into(),
            msg: msg.into(),
        });
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return bad("frame_rate", "frame rate must be positive");
        }
        if !(self.w_p.is_finite() && self.w_p >= 0.0) {
            return bad("w_p", "inhibition weight must be non-negative");
        }
        if !(self.n2_ceiling.is_finite() && self.n2_ceiling > 0.0) {
            return bad("n2_ceiling", "range ceiling must be positive");
        }
        if self.local_maxima.radius < 1 {
            return bad("lm_radius", "neighbourhood radius must be at least 1");
        }
        let t = self.local_maxima.threshold;
        if !(t > 0.0 && t < 1.0) {
            return bad("lm_threshold", "threshold must lie in (0, 1)");
        }
        let fx = &self.fixed;
        if fx.input_bits == 0 || fx.input_bits > 16 {
            return bad("input_bits", "input word width must be in 1..=16");
        }
        for (key, f) in [("data", fx.data), ("coef", fx.coef)] {
            if f.total_bits() < 2 || f.total_bits() > 32 {
                return bad(&format!("{key}_bits"), "word width must be in 2..=32");
            }
            if f.frac_bits() >= f.total_bits() {
                return bad(&format!("{key}_frac_bits"), "fraction bits must be below total bits");
            }
        }
        if fx.input_bits + 1 > fx.data.total_bits() - fx.data.frac_bits() {
            return bad("data_bits", "integer part too narrow to hold an input pixel");
        }
        if fx.accumulator_bits < fx.data.total_bits() + fx.coef.total_bits()
            || fx.accumulator_bits > 63
        {
            return bad(
                "accumulator_bits",
                "accumulator must hold one full product and fit in 63 bits",
            );
        }
        Ok(())
    }

    /// Parses the `key=value` format, starting from defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = EngineConfig::default();
        let mut kernel_size = None;
        let mut pyramid_depth = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: idx + 1,
                msg: format!("expected key=value, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| Error::ConfigValue {
                    key: key.into(),
                    msg: format!("not a number: `{v}`"),
                })
            };
            let int = |v: &str| -> Result<u32> {
                v.parse::<u32>().map_err(|_| Error::ConfigValue {
                    key: key.into(),
                    msg: format!("not a non-negative integer: `{v}`"),
                })
            };
            match key {
                "resolution" => {
                    let mode: ResolutionMode = value.parse().map_err(|msg| Error::ConfigValue {
                        key: key.into(),
                        msg,
                    })?;
                    let keep = cfg.clone();
                    cfg = EngineConfig {
                        resolution: mode,
                        ..keep
                    };
                }
                "kernel_size" => kernel_size = Some(int(value)? as usize),
                "pyramid_depth" => pyramid_depth = Some(int(value)? as usize),
                "frame_rate" => cfg.frame_rate = num(value)?,
                "w_p" => cfg.w_p = num(value)?,
                "n2_ceiling" => cfg.n2_ceiling = num(value)?,
                "lm_radius" => cfg.local_maxima.radius = int(value)? as usize,
                "lm_threshold" => cfg.local_maxima.threshold = num(value)?,
                "input_bits" => cfg.fixed.input_bits = int(value)?,
                "data_bits" => {
                    let d = cfg.fixed.data;
                    cfg.fixed.data = FixedFormat::new(int(value)?, d.frac_bits(), d.signed());
                }
                "data_frac_bits" => {
                    let d = cfg.fixed.data;
                    cfg.fixed.data = FixedFormat::new(d.total_bits(), int(value)?, d.signed());
                }
                "coef_bits" => {
                    let c = cfg.fixed.coef;
                    cfg.fixed.coef = FixedFormat::new(int(value)?, c.frac_bits(), c.signed());
                }
                "coef_frac_bits" => {
                    let c = cfg.fixed.coef;
                    cfg.fixed.coef = FixedFormat::new(c.total_bits(), int(value)?, c.signed());
                }
                "accumulator_bits" => cfg.fixed.accumulator_bits = int(value)?,
                _ => {
                    return Err(Error::ConfigValue {
                        key: key.into(),
                        msg: "unknown key".into(),
                    })
                }
            }
        }
        if let Some(k) = kernel_size {
            if k != cfg.kernel_size() {
                return Err(Error::ConfigValue {
                    key: "kernel_size".into(),
                    msg: format!("resolution {} requires kernel size {}", cfg.resolution, cfg.kernel_size()),
                });
            }
        }
        if let Some(d) = pyramid_depth {
            if d != cfg.pyramid_depth() {
                return Err(Error::ConfigValue {
                    key: "pyramid_depth".into(),
                    msg: format!(
                        "resolution {} requires {} pyramid levels",
                        cfg.resolution,
                        cfg.pyramid_depth()
                    ),
                });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let fx = &self.fixed;
        format!(
            "resolution={}\nkernel_size={}\npyramid_depth={}\nframe_rate={}\nw_p={}\nn2_ceiling={}\n\
             lm_radius={}\nlm_threshold={}\ninput_bits={}\ndata_bits={}\ndata_frac_bits={}\n\
             coef_bits={}\ncoef_frac_bits={}\naccumulator_bits={}\n",
            self.resolution,
            self.kernel_size(),
            self.pyramid_depth(),
            self.frame_rate,
            self.w_p,
            self.n2_ceiling,
            self.local_maxima.radius,
            self.local_maxima.threshold,
            fx.input_bits,
            fx.data.total_bits(),
            fx.data.frac_bits(),
            fx.coef.total_bits(),
            fx.coef.frac_bits(),
            fx.accumulator_bits,
        )
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<EngineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    EngineConfig::parse(&text)
}

/// Accepts a frame iff its dimensions equal the configured resolution.
pub fn validate_frame(frame: &FrameRGB, cfg: &EngineConfig) -> Result<()> {
    if frame.width() == 0 || frame.height() == 0 {
        return Err(Error::InvalidInput("empty frame".into()));
    }
    if frame.dims() != cfg.dims() {
        return Err(Error::dims(cfg.dims(), frame.dims()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = EngineConfig::parse("").unwrap();
        assert_eq!(cfg.resolution, ResolutionMode::Reference640);
        assert_eq!(cfg.frame_rate, 24.0);
        assert_eq!(cfg.w_p, 1.0);
        assert_eq!(cfg.kernel_size(), 11);
        assert_eq!(cfg.pyramid_depth(), 10);
        assert_eq!(cfg.dims(), (640, 480));
    }

    #[test]
    fn hw_resolution_selects_kernel_and_depth() {
        let cfg = EngineConfig::parse("resolution=112x84\n").unwrap();
        assert_eq!(cfg.kernel_size(), 5);
        assert_eq!(cfg.pyramid_depth(), 3);
        let cfg = EngineConfig::parse("resolution = 80x60").unwrap();
        assert_eq!(cfg.dims(), (80, 60));
    }

    #[test]
    fn zero_frame_rate_is_rejected() {
        let err = EngineConfig::parse("frame_rate=0").unwrap_err();
        assert!(err.to_string().contains("frame rate must be positive"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_errors() {
        let err = EngineConfig::parse("colour=red").unwrap_err();
        assert!(err.to_string().contains("colour"));
        assert!(matches!(
            EngineConfig::parse("# ok\nnot a pair").unwrap_err(),
            Error::ConfigSyntax { line: 2, .. }
        ));
    }

    #[test]
    fn mixed_kernel_and_resolution_rejected() {
        assert!(EngineConfig::parse("resolution=112x84\nkernel_size=11").is_err());
        assert!(EngineConfig::parse("pyramid_depth=3").is_err());
        assert!(EngineConfig::parse("resolution=112x84\npyramid_depth=3\nkernel_size=5").is_ok());
    }

    #[test]
    fn validate_frame_checks_dims() {
        let cfg = EngineConfig::for_mode(ResolutionMode::Hw112);
        assert!(validate_frame(&FrameRGB::filled(112, 84, [0; 3]).unwrap(), &cfg).is_ok());
        assert!(matches!(
            validate_frame(&FrameRGB::filled(640, 480, [0; 3]).unwrap(), &cfg),
            Err(Error::Dimension { .. })
        ));
        assert!(FrameRGB::filled(0, 0, [0; 3]).is_err());
    }

    fn arb_config() -> impl Strategy<Value = EngineConfig> {
        (
            prop::sample::select(ResolutionMode::ALL.to_vec()),
            1.0f64..120.0,
            0.0f64..4.0,
            0.1f64..10.0,
            1usize..4,
            0.01f64..0.99,
            6u32..=16,
        )
            .prop_map(|(res, rate, wp, m, radius, thr, frac)| {
                let mut cfg = EngineConfig::for_mode(res);
                cfg.frame_rate = rate;
                cfg.w_p = wp;
                cfg.n2_ceiling = m;
                cfg.local_maxima.radius = radius;
                cfg.local_maxima.threshold = thr;
                cfg.fixed.coef = FixedFormat::new(18, frac, true);
                cfg
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(cfg in arb_config()) {
            let text = cfg.to_text();
            let back = EngineConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(EngineConfig::parse(&back.to_text()).unwrap(), back);
        }
    }
}
