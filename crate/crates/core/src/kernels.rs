//! Frozen spatial kernel banks used by grouping.
//!
//! Orientation `theta` is measured counter-clockwise from the image x-axis
//! with y pointing up; `theta = pi/2` responds to vertical edges. Kernels are
//! stored row-major with y pointing down, like images.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::filter::Kernel;

/// The four edge orientations, in radians.
pub const ORIENTATIONS: [f64; 4] = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];

/// Carrier wavelength as a fraction of kernel size.
pub const GABOR_WAVELENGTH: f64 = 0.5;
/// Gaussian envelope sigma as a fraction of kernel size.
pub const GABOR_SIGMA: f64 = 0.25;
/// Centre sigma of the difference of Gaussians, as a fraction of kernel size.
pub const CS_CENTER_SIGMA: f64 = 0.125;
pub const CS_SURROUND_RATIO: f64 = 3.0;
/// Angular concentration of the von Mises association field.
pub const VM_KAPPA: f64 = 4.0;
/// Annulus radius as a fraction of kernel size.
pub const VM_RADIUS: f64 = 0.5;
/// Radial width of the annulus, pixels.
pub const VM_RADIAL_SIGMA: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeBank {
    pub even: [Kernel; 4],
    pub odd: [Kernel; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct CenterSurroundBank {
    /// ON-centre kernel; the OFF response is its negation before rectification.
    pub on: Kernel,
}

/// Association fields on either side of an oriented border. `left[i]` is
/// `v_theta` and `right[i]` is `v_{theta + pi}`.
#[derive(Clone, Debug, PartialEq)]
pub struct VonMisesBank {
    pub left: [Kernel; 4],
    pub right: [Kernel; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelBank {
    pub size: usize,
    pub edge: EdgeBank,
    pub center_surround: CenterSurroundBank,
    pub von_mises: VonMisesBank,
}

fn l1_normalized(k: Kernel) -> Kernel {
    let l1 = k.l1();
    k.scaled(1.0 / l1)
}

/// Coordinate across the edge for orientation `theta`; `dy` is image-down.
#[inline]
fn across(theta: f64, dx: i64, dy: i64) -> f64 {
    let up = -dy as f64;
    -(dx as f64) * theta.sin() + up * theta.cos()
}

/// Forces `k(d) == sign * k(-d)` exactly.
fn symmetrize(k: Kernel, sign: f64) -> Kernel {
    let n = k.data().len();
    let mut data = k.data().to_vec();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let a = 0.5 * (data[i] + sign * data[j]);
        data[i] = a;
        data[j] = sign * a;
    }
    if sign < 0.0 {
        data[n / 2] = 0.0;
    }
    Kernel::new(k.width(), k.height(), data).expect("same shape")
}

pub fn even_kernel(size: usize, theta: f64) -> Kernel {
    let n = size as f64;
    let (lambda, sigma) = (GABOR_WAVELENGTH * n, GABOR_SIGMA * n);
    let raw = Kernel::from_offsets(size, |dx, dy| {
        let r2 = (dx * dx + dy * dy) as f64;
        (-r2 / (2.0 * sigma * sigma)).exp() * (2.0 * PI * across(theta, dx, dy) / lambda).cos()
    });
    let mean = raw.sum() / (size * size) as f64;
    let centred = Kernel::from_offsets(size, |dx, dy| raw.at(dx, dy) - mean);
    symmetrize(l1_normalized(centred), 1.0)
}

pub fn odd_kernel(size: usize, theta: f64) -> Kernel {
    let n = size as f64;
    let (lambda, sigma) = (GABOR_WAVELENGTH * n, GABOR_SIGMA * n);
    let raw = Kernel::from_offsets(size, |dx, dy| {
        let r2 = (dx * dx + dy * dy) as f64;
        (-r2 / (2.0 * sigma * sigma)).exp() * (2.0 * PI * across(theta, dx, dy) / lambda).sin()
    });
    symmetrize(l1_normalized(raw), -1.0)
}

fn gaussian(size: usize, sigma: f64) -> Kernel {
    let g = Kernel::from_offsets(size, |dx, dy| {
        (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp()
    });
    let s = g.sum();
    g.scaled(1.0 / s)
}

/// Difference of unit-mass Gaussians: excitatory centre, zero DC.
pub fn center_surround_kernel(size: usize) -> Kernel {
    let sc = CS_CENTER_SIGMA * size as f64;
    let c = gaussian(size, sc);
    let s = gaussian(size, CS_SURROUND_RATIO * sc);
    Kernel::from_offsets(size, |dx, dy| c.at(dx, dy) - s.at(dx, dy))
}

/// Annular field weighted towards `side` (radians, y up); zero at the centre.
pub fn von_mises_kernel(size: usize, side: f64) -> Kernel {
    let r0 = VM_RADIUS * size as f64;
    let k = Kernel::from_offsets(size, |dx, dy| {
        if dx == 0 && dy == 0 {
            return 0.0;
        }
        let (x, y) = (dx as f64, -dy as f64);
        let r = x.hypot(y);
        let phi = y.atan2(x);
        let radial = (-(r - r0) * (r - r0) / (2.0 * VM_RADIAL_SIGMA * VM_RADIAL_SIGMA)).exp();
        (VM_KAPPA * (phi - side).cos()).exp() * radial
    });
    l1_normalized(k)
}

impl EdgeBank {
    pub fn new(size: usize) -> Self {
        EdgeBank {
            even: ORIENTATIONS.map(|t| even_kernel(size, t)),
            odd: ORIENTATIONS.map(|t| odd_kernel(size, t)),
        }
    }
}

impl CenterSurroundBank {
    pub fn new(size: usize) -> Self {
        CenterSurroundBank {
            on: center_surround_kernel(size),
        }
    }
}

impl VonMisesBank {
    pub fn new(size: usize) -> Self {
        let left = ORIENTATIONS.map(|t| von_mises_kernel(size, t + PI / 2.0));
        let right = left.clone().map(|k| k.rotated_180());
        VonMisesBank { left, right }
    }
}

const HEADER: &str = "podvs-kernels 1";

impl KernelBank {
    pub fn new(size: usize) -> Result<Self> {
        if size % 2 == 0 || size < 3 {
            return Err(Error::InvalidInput(format!(
                "kernel size must be odd and at least 3, got {size}"
            )));
        }
        Ok(KernelBank {
            size,
            edge: EdgeBank::new(size),
            center_surround: CenterSurroundBank::new(size),
            von_mises: VonMisesBank::new(size),
        })
    }

    fn named(&self) -> Vec<(String, &Kernel)> {
        let mut out = Vec::new();
        for i in 0..4 {
            out.push((format!("even{i}"), &self.edge.even[i]));
        }
        for i in 0..4 {
            out.push((format!("odd{i}"), &self.edge.odd[i]));
        }
        out.push(("cs".to_string(), &self.center_surround.on));
        for i in 0..4 {
            out.push((format!("vm_left{i}"), &self.von_mises.left[i]));
        }
        for i in 0..4 {
            out.push((format!("vm_right{i}"), &self.von_mises.right[i]));
        }
        out
    }

    /// Plain-text grids; values print with round-trip precision.
    pub fn to_text(&self) -> String {
        let mut s = format!("{HEADER}\nsize {}\n", self.size);
        for (name, k) in self.named() {
            let _ = writeln!(s, "kernel {name}");
            for y in 0..k.height() {
                let row: Vec<String> = (0..k.width()).map(|x| format!("{:e}", k.get(x, y))).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::ConfigSyntax {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, l)) if l == HEADER => {}
            Some((n, _)) => return Err(bad(n, "missing kernel bank header")),
            None => return Err(bad(0, "empty kernel bank")),
        }
        let size = match lines.next() {
            Some((n, l)) => l
                .strip_prefix("size ")
                .and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| bad(n, "expected `size N`"))?,
            None => return Err(bad(0, "missing size")),
        };
        let mut template = KernelBank::new(size)?;
        let names: Vec<String> = template.named().into_iter().map(|(n, _)| n).collect();
        let mut parsed = Vec::with_capacity(names.len());
        for expected in &names {
            let (n, l) = lines.next().ok_or_else(|| bad(0, "truncated kernel bank"))?;
            if l.strip_prefix("kernel ") != Some(expected.as_str()) {
                return Err(bad(n, &format!("expected `kernel {expected}`")));
            }
            let mut data = Vec::with_capacity(size * size);
            for _ in 0..size {
                let (n, row) = lines.next().ok_or_else(|| bad(0, "truncated kernel grid"))?;
                let vals: std::result::Result<Vec<f64>, _> = row.split_whitespace().map(str::parse).collect();
                let vals = vals.map_err(|_| bad(n, "non-numeric coefficient"))?;
                if vals.len() != size {
                    return Err(bad(n, &format!("expected {size} coefficients")));
                }
                data.extend(vals);
            }
            parsed.push(Kernel::square(size, data)?);
        }
        if let Some((n, _)) = lines.next() {
            return Err(bad(n, "trailing data after kernel bank"));
        }
        let mut it = parsed.into_iter();
        for k in template.edge.even.iter_mut() {
            *k = it.next().expect("counted");
        }
        for k in template.edge.odd.iter_mut() {
            *k = it.next().expect("counted");
        }
        template.center_surround.on = it.next().expect("counted");
        for k in template.von_mises.left.iter_mut() {
            *k = it.next().expect("counted");
        }
        for k in template.von_mises.right.iter_mut() {
            *k = it.next().expect("counted");
        }
        Ok(template)
    }
}
