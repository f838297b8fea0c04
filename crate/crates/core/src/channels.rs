//! Decomposition of the (temporally filtered) input into nine feature
//! sub-channels: intensity, four colour opponencies and four orientations.

use std::fmt;

use crate::error::Result;
use crate::frame::{FieldMap, FrameHistory, FrameRGB, Plane};
use crate::temporal::{apply_temporal, intensity_history, plane_history, TemporalKernel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum ChannelId {
    Intensity,
    RG,
    GR,
    BY,
    YB,
    O0,
    O45,
    O90,
    O135,
}

impl ChannelId {
    pub const ALL: [ChannelId; 9] = [
        Self::Intensity,
        Self::RG,
        Self::GR,
        Self::BY,
        Self::YB,
        Self::O0,
        Self::O45,
        Self::O90,
        Self::O135,
    ];

    /// For orientation sub-channels, the index of the orientation they keep.
    pub fn orientation_index(self) -> Option<usize> {
        match self {
            Self::O0 => Some(0),
            Self::O45 => Some(1),
            Self::O90 => Some(2),
            Self::O135 => Some(3),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).expect("listed")
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Intensity => "I",
            Self::RG => "RG",
            Self::GR => "GR",
            Self::BY => "BY",
            Self::YB => "YB",
            Self::O0 => "O0",
            Self::O45 => "O45",
            Self::O90 => "O90",
            Self::O135 => "O135",
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The nine channel inputs of one frame, indexed in `ChannelId::ALL` order.
#[derive(Clone, Debug)]
pub struct ChannelInputs {
    maps: Vec<FieldMap>,
}

impl ChannelInputs {
    pub fn new(maps: Vec<FieldMap>) -> Self {
        assert_eq!(maps.len(), 9, "exactly nine channels");
        ChannelInputs { maps }
    }

    pub fn get(&self, id: ChannelId) -> &FieldMap {
        &self.maps[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ChannelId, &FieldMap)> {
        ChannelId::ALL.iter().copied().zip(&self.maps)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
}

/// Arithmetic mean of the three planes.
pub fn to_intensity(frame: &FrameRGB) -> FieldMap {
    let data = frame
        .r()
        .iter()
        .zip(frame.g())
        .zip(frame.b())
        .map(|((&r, &g), &b)| (f64::from(r) + f64::from(g) + f64::from(b)) / 3.0)
        .collect();
    FieldMap::from_vec(frame.width(), frame.height(), data).expect("frame dims are valid")
}

/// Opponency maps in the order RG, GR, BY, YB.
#[derive(Clone, Debug)]
pub struct Opponency {
    pub rg: FieldMap,
    pub gr: FieldMap,
    pub by: FieldMap,
    pub yb: FieldMap,
}

#[inline]
fn rect(v: f64) -> f64 {
    v.max(0.0)
}

/// Per-pixel opponency values for one `(r, g, b)` response.
pub fn opponency_pixel(r: f64, g: f64, b: f64) -> [f64; 4] {
    let rr = rect(r - (g + b) / 2.0);
    let gg = rect(g - (r + b) / 2.0);
    let bb = rect(b - (r + g) / 2.0);
    let yy = rect((r + g) / 2.0 - (r - g).abs() / 2.0 - b);
    [rect(rr - gg), rect(gg - rr), rect(bb - yy), rect(yy - bb)]
}

/// Broadly tuned colour channels and their opponencies, half-wave rectified
/// at every step.
pub fn color_opponency(r: &FieldMap, g: &FieldMap, b: &FieldMap) -> Result<Opponency> {
    r.same_dims(g)?;
    r.same_dims(b)?;
    let (w, h) = r.dims();
    let n = w * h;
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let px = opponency_pixel(r.data()[i], g.data()[i], b.data()[i]);
        for (c, v) in px.into_iter().enumerate() {
            out[c][i] = v;
        }
    }
    let [rg, gr, by, yb] = out.map(|d| FieldMap::from_vec(w, h, d).expect("dims"));
    Ok(Opponency { rg, gr, by, yb })
}

/// Grayscale of the current frame; orientation channels bypass temporal
/// filtering.
pub fn orientation_input(frame: &FrameRGB) -> FieldMap {
    to_intensity(frame)
}

/// Extracts all nine channel inputs from the history.
pub fn extract_all(
    history: &FrameHistory,
    strong: &TemporalKernel,
    weak: &TemporalKernel,
) -> Result<ChannelInputs> {
    let current = history
        .current()
        .ok_or_else(|| crate::Error::InvalidInput("empty frame history".into()))?;
    let intensity = apply_temporal(strong, &intensity_history(history))?;
    let r = apply_temporal(weak, &plane_history(history, Plane::Red))?;
    let g = apply_temporal(weak, &plane_history(history, Plane::Green))?;
    let b = apply_temporal(weak, &plane_history(history, Plane::Blue))?;
    let opp = color_opponency(&r, &g, &b)?;
    let orient = orientation_input(current);
    Ok(ChannelInputs::new(vec![
        intensity,
        opp.rg,
        opp.gr,
        opp.by,
        opp.yb,
        orient.clone(),
        orient.clone(),
        orient.clone(),
        orient,
    ]))
}
