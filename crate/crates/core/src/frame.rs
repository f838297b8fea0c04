//! Pixel grids: 8-bit RGB input frames, real-valued activation maps, and the
//! short ring of past frames consumed by the temporal filters.
//!
//! All grids are row-major with the origin at the top-left corner; `y` grows
//! downward.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// An 8-bit RGB frame stored as three planes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameRGB {
    width: usize,
    height: usize,
    r: Vec<u8>,
    g: Vec<u8>,
    b: Vec<u8>,
}

impl FrameRGB {
    pub fn new(width: usize, height: usize, r: Vec<u8>, g: Vec<u8>, b: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "frame must be non-empty, got {width}x{height}"
            )));
        }
        let n = width * height;
        if r.len() != n || g.len() != n || b.len() != n {
            return Err(Error::InvalidInput(format!(
                "plane sizes ({}, {}, {}) do not match {width}x{height}",
                r.len(),
                g.len(),
                b.len()
            )));
        }
        Ok(FrameRGB {
            width,
            height,
            r,
            g,
            b,
        })
    }

    /// A frame filled with one colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![rgb[0]; n], vec![rgb[1]; n], vec![rgb[2]; n])
    }

    /// Builds a frame from interleaved `rgbrgb...` bytes.
    pub fn from_interleaved(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidInput(format!(
                "expected {} interleaved bytes, got {}",
                width * height * 3,
                data.len()
            )));
        }
        let r = data.iter().step_by(3).copied().collect();
        let g = data.iter().skip(1).step_by(3).copied().collect();
        let b = data.iter().skip(2).step_by(3).copied().collect();
        Self::new(width, height, r, g, b)
    }

    /// Replicates a grayscale plane into all three channels.
    pub fn from_gray(width: usize, height: usize, gray: Vec<u8>) -> Result<Self> {
        Self::new(width, height, gray.clone(), gray.clone(), gray)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn r(&self) -> &[u8] {
        &self.r
    }

    pub fn g(&self) -> &[u8] {
        &self.g
    }

    pub fn b(&self) -> &[u8] {
        &self.b
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = y * self.width + x;
        [self.r[i], self.g[i], self.b[i]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = y * self.width + x;
        self.r[i] = rgb[0];
        self.g[i] = rgb[1];
        self.b[i] = rgb[2];
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.r.len() * 3);
        for i in 0..self.r.len() {
            out.extend_from_slice(&[self.r[i], self.g[i], self.b[i]]);
        }
        out
    }

    /// One colour plane as a real-valued map.
    pub fn plane(&self, plane: Plane) -> FieldMap {
        let src = match plane {
            Plane::Red => &self.r,
            Plane::Green => &self.g,
            Plane::Blue => &self.b,
        };
        FieldMap {
            width: self.width,
            height: self.height,
            data: src.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plane {
    Red,
    Green,
    Blue,
}

/// A 2-D grid of real activations.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FieldMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "field map must be non-empty");
        FieldMap {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "field map must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} values do not fill {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field map values must be finite".into()));
        }
        Ok(FieldMap {
            width,
            height,
            data,
        })
    }

    /// Builds a map by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        FieldMap {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn same_dims(&self, other: &FieldMap) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    /// Position of the first maximal value in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FieldMap {
        FieldMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn map_in_place(&mut self, f: impl Fn(f64) -> f64) {
        for v in &mut self.data {
            *v = f(*v);
        }
    }

    /// Pointwise combination; panics on mismatched dimensions.
    pub fn zip_with(&self, other: &FieldMap, f: impl Fn(f64, f64) -> f64) -> FieldMap {
        assert_eq!(self.dims(), other.dims(), "zip_with on mismatched maps");
        FieldMap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> FieldMap {
        self.map(|v| a * v)
    }

    pub fn add_assign(&mut self, other: &FieldMap) {
        assert_eq!(self.dims(), other.dims(), "add_assign on mismatched maps");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &FieldMap, a: f64) {
        assert_eq!(self.dims(), other.dims(), "add_scaled on mismatched maps");
        for (d, s) in self.data.iter_mut().zip(&other.data) {
            *d += a * s;
        }
    }

    /// Half-wave rectification.
    pub fn rectified(&self) -> FieldMap {
        self.map(|v| v.max(0.0))
    }
}

/// The current frame plus up to `capacity - 1` predecessors, newest first.
///
/// Before the ring is full, lookups past the oldest stored frame return the
/// oldest frame (warm-up by cloning the earliest available frame).
#[derive(Clone, Debug)]
pub struct FrameHistory {
    frames: VecDeque<FrameRGB>,
    capacity: usize,
    frame_period_ms: f64,
}

impl FrameHistory {
    pub fn new(capacity: usize, frame_period_ms: f64) -> Self {
        assert!(capacity >= 1, "history needs at least one frame");
        FrameHistory {
            frames: VecDeque::with_capacity(capacity),
            capacity,
            frame_period_ms,
        }
    }

    pub fn push(&mut self, frame: FrameRGB) -> Result<()> {
        if let Some(front) = self.frames.front() {
            if front.dims() != frame.dims() {
                return Err(Error::dims(front.dims(), frame.dims()));
            }
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_back();
        }
        self.frames.push_front(frame);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn frame_period_ms(&self) -> f64 {
        self.frame_period_ms
    }

    pub fn current(&self) -> Option<&FrameRGB> {
        self.frames.front()
    }

    /// The frame `t` steps in the past, with warm-up clamping.
    pub fn past(&self, t: usize) -> Option<&FrameRGB> {
        if self.frames.is_empty() {
            return None;
        }
        self.frames.get(t.min(self.frames.len() - 1))
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }
}
