//! Built-in synthetic videos with known salient targets.
//!
//! Every scene is deterministic: textures come from fixed-seed generators,
//! so the same `(scene, width, height, frames)` always yields the same bytes.
//! Geometry scales with the frame size.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frame::FrameRGB;

/// Frame at which the onset square appears.
pub const ONSET_FRAME: usize = 10;

const BACKGROUND: [u8; 3] = [128, 128, 128];

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    pub fn center(&self) -> (usize, usize) {
        ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)
    }

    fn square(cx: usize, cy: usize, side: usize) -> Rect {
        Rect {
            x0: cx - side / 2,
            y0: cy - side / 2,
            x1: cx - side / 2 + side,
            y1: cy - side / 2 + side,
        }
    }

    fn fill(&self, f: &mut FrameRGB, rgb: [u8; 3]) {
        let (w, h) = f.dims();
        for y in self.y0..self.y1.min(h) {
            for x in self.x0..self.x1.min(w) {
                f.set_pixel(x, y, rgb);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scene {
    /// A white square appears at [`ONSET_FRAME`] beside a static textured distractor.
    Onset,
    /// One bright square on a dark field.
    Static,
    /// One red square among green ones.
    Popout,
    /// A white square drifting right on a gray field.
    Moving,
}

impl Scene {
    pub const ALL: [Scene; 4] = [Scene::Onset, Scene::Static, Scene::Popout, Scene::Moving];

    pub fn name(self) -> &'static str {
        match self {
            Scene::Onset => "onset",
            Scene::Static => "static",
            Scene::Popout => "popout",
            Scene::Moving => "moving",
        }
    }

    pub fn frames(self, width: usize, height: usize, n: usize) -> Vec<FrameRGB> {
        match self {
            Scene::Onset => onset(width, height, n),
            Scene::Static => static_square(width, height, n),
            Scene::Popout => popout(width, height, n),
            Scene::Moving => moving_square(width, height, n),
        }
    }

    /// Where the salient target sits in frame `t`, if it is visible.
    pub fn target(self, width: usize, height: usize, t: usize) -> Option<Rect> {
        let side = square_side(height);
        match self {
            Scene::Onset => (t >= ONSET_FRAME).then(|| Rect::square(width / 4, height / 2, side)),
            Scene::Static => Some(Rect::square(2 * width / 5, 3 * height / 5, side)),
            Scene::Popout => {
                let cells = popout_cells(width, height);
                Some(cells[POPOUT_ODD_CELL])
            }
            Scene::Moving => Some(moving_rect(width, height, t)),
        }
    }
}

impl fmt::Display for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scene {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scene::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scene `{s}` (expected onset, static, popout or moving)"))
    }
}

fn square_side(height: usize) -> usize {
    (height / 6).max(3)
}

fn blank(width: usize, height: usize, rgb: [u8; 3]) -> FrameRGB {
    FrameRGB::filled(width, height, rgb).expect("scene dimensions are non-zero")
}

/// Static low-contrast texture around the distractor on the right half.
fn distractor(width: usize, height: usize) -> FrameRGB {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut f = blank(width, height, BACKGROUND);
    let side = 2 * square_side(height);
    let r = Rect::square(3 * width / 4, height / 2, side);
    for y in r.y0..r.y1 {
        for x in r.x0..r.x1 {
            let v = 128 + rng.gen_range(-24i32..=24);
            f.set_pixel(x, y, [v as u8; 3]);
        }
    }
    f
}

pub fn onset(width: usize, height: usize, n: usize) -> Vec<FrameRGB> {
    let base = distractor(width, height);
    (0..n)
        .map(|t| {
            let mut f = base.clone();
            if let Some(r) = Scene::Onset.target(width, height, t) {
                r.fill(&mut f, [255; 3]);
            }
            f
        })
        .collect()
}

pub fn static_square(width: usize, height: usize, n: usize) -> Vec<FrameRGB> {
    let mut f = blank(width, height, [24, 24, 24]);
    Scene::Static.target(width, height, 0).unwrap().fill(&mut f, [230, 230, 230]);
    vec![f; n]
}

const POPOUT_ODD_CELL: usize = 6;

/// A 4x3 grid of squares; cell [`POPOUT_ODD_CELL`] is the odd one.
fn popout_cells(width: usize, height: usize) -> Vec<Rect> {
    let side = square_side(height);
    let mut cells = Vec::with_capacity(12);
    for row in 0..3 {
        for col in 0..4 {
            let cx = (2 * col + 1) * width / 8;
            let cy = (2 * row + 1) * height / 6;
            cells.push(Rect::square(cx, cy, side));
        }
    }
    cells
}

pub fn popout(width: usize, height: usize, n: usize) -> Vec<FrameRGB> {
    let mut f = blank(width, height, [40, 40, 40]);
    for (i, c) in popout_cells(width, height).iter().enumerate() {
        let rgb = if i == POPOUT_ODD_CELL { [220, 30, 30] } else { [30, 200, 30] };
        c.fill(&mut f, rgb);
    }
    vec![f; n]
}

fn moving_rect(width: usize, height: usize, t: usize) -> Rect {
    let side = square_side(height);
    let span = width - 2 * side;
    let cx = side + (width / 8 + 2 * t) % span;
    Rect::square(cx, height / 2, side)
}

pub fn moving_square(width: usize, height: usize, n: usize) -> Vec<FrameRGB> {
    (0..n)
        .map(|t| {
            let mut f = blank(width, height, BACKGROUND);
            moving_rect(width, height, t).fill(&mut f, [255; 3]);
            f
        })
        .collect()
}

/// The frozen suite used by property and fidelity checks.
pub fn suite(width: usize, height: usize) -> Vec<(Scene, Vec<FrameRGB>)> {
    [(Scene::Onset, 15), (Scene::Static, 4), (Scene::Popout, 4), (Scene::Moving, 8)]
        .into_iter()
        .map(|(s, n)| (s, s.frames(width, height, n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_bitwise_stable() {
        for s in Scene::ALL {
            assert_eq!(s.frames(112, 84, 12), s.frames(112, 84, 12), "{s}");
            assert_eq!(s.frames(112, 84, 12).len(), 12);
        }
    }

    #[test]
    fn targets_lie_inside_frames_and_show_their_colour() {
        for (w, h) in [(112, 84), (80, 60), (640, 480)] {
            for s in Scene::ALL {
                let frames = s.frames(w, h, 14);
                for (t, f) in frames.iter().enumerate() {
                    let Some(r) = s.target(w, h, t) else { continue };
                    assert!(r.x1 <= w && r.y1 <= h && r.x0 < r.x1 && r.y0 < r.y1);
                    let (cx, cy) = r.center();
                    assert_ne!(f.pixel(cx, cy), [128; 3], "{s} at {t}");
                }
            }
        }
    }

    #[test]
    fn onset_square_appears_on_schedule() {
        let f = onset(112, 84, 12);
        let (cx, cy) = Scene::Onset.target(112, 84, ONSET_FRAME).unwrap().center();
        assert_eq!(f[ONSET_FRAME - 1].pixel(cx, cy), [128; 3]);
        assert_eq!(f[ONSET_FRAME].pixel(cx, cy), [255; 3]);
        assert_eq!(f[0], f[ONSET_FRAME - 1]);
    }

    #[test]
    fn scene_names_parse() {
        for s in Scene::ALL {
            assert_eq!(s.name().parse::<Scene>().unwrap(), s);
        }
        assert!("blink".parse::<Scene>().is_err());
    }
}
