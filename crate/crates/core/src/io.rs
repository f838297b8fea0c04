//! Frame and map files.
//!
//! Frames are binary PPM (`P6`) or PGM (`P5`) with 8-bit samples. Map
//! archives are directories holding one 16-bit PGM per frame, an optional
//! raw `f32` plane per frame, and `archive.json` describing the run.
//!
//! Raw plane layout, all little-endian: `b"PSAL"`, width `u32`, height `u32`,
//! frame index `u32`, then `width * height` row-major `f32` samples.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FieldMap, FrameRGB};

pub const RAW_MAGIC: &[u8; 4] = b"PSAL";
pub const RAW_HEADER_BYTES: usize = 16;
pub const ARCHIVE_FILE: &str = "archive.json";

struct PnmHeader {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn malformed(path: &Path, msg: impl Into<String>) -> Error {
    Error::MalformedImage {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn parse_pnm_header(bytes: &[u8], path: &Path) -> Result<PnmHeader> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(malformed(path, "missing P magic"));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, "expected a decimal header field"))?;
    }
    // Exactly one whitespace byte separates the header from the samples.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(malformed(path, "header not terminated by whitespace"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(malformed(path, format!("bad header values {width} {height} {maxval}")));
    }
    Ok(PnmHeader {
        magic,
        width: width as usize,
        height: height as usize,
        maxval,
        data_start: pos + 1,
    })
}

/// Decodes an 8-bit binary PPM or PGM; grayscale is copied to all channels.
pub fn decode_frame(bytes: &[u8], path: &Path) -> Result<FrameRGB> {
    let h = parse_pnm_header(bytes, path)?;
    let channels = match &h.magic {
        b"P6" => 3,
        b"P5" => 1,
        _ => return Err(malformed(path, "only binary P6 and P5 are supported")),
    };
    if h.maxval > 255 {
        return Err(Error::UnsupportedDepth {
            path: path.to_path_buf(),
            maxval: h.maxval,
        });
    }
    let n = h.width * h.height * channels;
    let data = bytes
        .get(h.data_start..h.data_start + n)
        .ok_or_else(|| malformed(path, format!("expected {n} sample bytes")))?;
    if channels == 3 {
        FrameRGB::from_interleaved(h.width, h.height, data)
    } else {
        FrameRGB::from_gray(h.width, h.height, data.to_vec())
    }
}

pub fn read_frame(path: impl AsRef<Path>) -> Result<FrameRGB> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_frame(&bytes, path)
}

pub fn encode_ppm(frame: &FrameRGB) -> Vec<u8> {
    let (w, h) = frame.dims();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.extend(frame.to_interleaved());
    out
}

pub fn write_ppm(path: impl AsRef<Path>, frame: &FrameRGB) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(frame)).map_err(|e| Error::file(path, e))
}

/// Leading digits of the file stem, used to order frame files.
fn frame_number(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem.chars().filter(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn is_frame_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("ppm" | "pgm")
    )
}

/// Lists frame files: every `.ppm`/`.pgm` in a directory, ordered by the
/// number in the file name, or the paths listed one per line in a text file
/// (relative paths resolve against the list's directory).
pub fn list_frame_files(source: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let source = source.as_ref();
    let files = if source.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(source)
            .map_err(|e| Error::file(source, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_frame_file(p))
            .collect();
        files.sort_by(|a, b| (frame_number(a), a).cmp(&(frame_number(b), b)));
        files
    } else {
        let text = fs::read_to_string(source).map_err(|e| Error::file(source, e))?;
        let base = source.parent().unwrap_or(Path::new(""));
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };
    if files.is_empty() {
        return Err(Error::InvalidInput(format!("no frames found in {}", source.display())));
    }
    Ok(files)
}

/// Reads an ordered frame sequence with uniform dimensions.
pub fn read_frames(source: impl AsRef<Path>) -> Result<Vec<FrameRGB>> {
    let mut frames: Vec<FrameRGB> = Vec::new();
    for path in list_frame_files(source)? {
        let f = read_frame(&path)?;
        if let Some(first) = frames.first() {
            if f.dims() != first.dims() {
                return Err(Error::dims(first.dims(), f.dims()));
            }
        }
        frames.push(f);
    }
    Ok(frames)
}

/// 16-bit big-endian PGM with `round(v * 65535)`; values are clamped to `[0, 1]`.
pub fn encode_pgm16(map: &FieldMap) -> Vec<u8> {
    let (w, h) = map.dims();
    let mut out = format!("P5\n{w} {h}\n65535\n").into_bytes();
    for &v in map.data() {
        let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend(q.to_be_bytes());
    }
    out
}

pub fn decode_pgm16(bytes: &[u8], path: &Path) -> Result<FieldMap> {
    let h = parse_pnm_header(bytes, path)?;
    if &h.magic != b"P5" {
        return Err(malformed(path, "expected binary P5"));
    }
    let n = h.width * h.height;
    let max = h.maxval as f64;
    let data: Vec<f64> = if h.maxval > 255 {
        let raw = bytes
            .get(h.data_start..h.data_start + 2 * n)
            .ok_or_else(|| malformed(path, format!("expected {} sample bytes", 2 * n)))?;
        raw.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / max).collect()
    } else {
        let raw = bytes
            .get(h.data_start..h.data_start + n)
            .ok_or_else(|| malformed(path, format!("expected {n} sample bytes")))?;
        raw.iter().map(|&b| b as f64 / max).collect()
    };
    FieldMap::from_vec(h.width, h.height, data)
}

pub fn encode_raw(map: &FieldMap, frame_index: u32) -> Vec<u8> {
    let (w, h) = map.dims();
    let mut out = Vec::with_capacity(RAW_HEADER_BYTES + 4 * map.len());
    out.extend(RAW_MAGIC);
    out.extend((w as u32).to_le_bytes());
    out.extend((h as u32).to_le_bytes());
    out.extend(frame_index.to_le_bytes());
    for &v in map.data() {
        out.extend((v as f32).to_le_bytes());
    }
    out
}

/// Returns the map and its stored frame index.
pub fn decode_raw(bytes: &[u8], path: &Path) -> Result<(FieldMap, u32)> {
    if bytes.len() < RAW_HEADER_BYTES || &bytes[..4] != RAW_MAGIC {
        return Err(malformed(path, "missing PSAL header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (w, h, index) = (word(4) as usize, word(8) as usize, word(12));
    let body = &bytes[RAW_HEADER_BYTES..];
    if w == 0 || h == 0 || body.len() != 4 * w * h {
        return Err(malformed(path, format!("{w}x{h} plane needs {} bytes, found {}", 4 * w * h, body.len())));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((FieldMap::from_vec(w, h, data)?, index))
}

/// Run description stored next to the maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub width: usize,
    pub height: usize,
    pub frame_rate: f64,
    /// `reference`, `hw112` or `hw80`, with `-float` when the hw resolution
    /// ran in double precision.
    pub mode: String,
    pub version: String,
    pub frames: usize,
    pub raw: bool,
}

fn pgm_name(i: usize) -> String {
    format!("{i:06}.pgm")
}

fn raw_name(i: usize) -> String {
    format!("{i:06}.psal")
}

/// Writes a map archive; `meta.frames` and the dimensions must match `maps`.
pub fn write_maps(maps: &[FieldMap], dir: impl AsRef<Path>, meta: &ArchiveMeta) -> Result<()> {
    let dir = dir.as_ref();
    if meta.frames != maps.len() {
        return Err(Error::InvalidInput(format!(
            "metadata lists {} frames but {} maps were given",
            meta.frames,
            maps.len()
        )));
    }
    for m in maps {
        if m.dims() != (meta.width, meta.height) {
            return Err(Error::dims((meta.width, meta.height), m.dims()));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let put = |name: String, bytes: Vec<u8>| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::file(p, e))
    };
    for (i, m) in maps.iter().enumerate() {
        put(pgm_name(i), encode_pgm16(m))?;
        if meta.raw {
            put(raw_name(i), encode_raw(m, i as u32))?;
        }
    }
    put(ARCHIVE_FILE.into(), serde_json::to_vec_pretty(meta)?)
}

/// Reads an archive, preferring the raw planes when present.
pub fn read_archive(dir: impl AsRef<Path>) -> Result<(ArchiveMeta, Vec<FieldMap>)> {
    let dir = dir.as_ref();
    let meta_path = dir.join(ARCHIVE_FILE);
    let text = fs::read(&meta_path).map_err(|e| Error::file(&meta_path, e))?;
    let meta: ArchiveMeta = serde_json::from_slice(&text)?;
    let mut maps = Vec::with_capacity(meta.frames);
    for i in 0..meta.frames {
        let path = dir.join(if meta.raw { raw_name(i) } else { pgm_name(i) });
        let bytes = fs::read(&path).map_err(|e| Error::file(&path, e))?;
        let map = if meta.raw {
            let (m, idx) = decode_raw(&bytes, &path)?;
            if idx as usize != i {
                return Err(malformed(&path, format!("stores frame {idx}, expected {i}")));
            }
            m
        } else {
            decode_pgm16(&bytes, &path)?
        };
        if map.dims() != (meta.width, meta.height) {
            return Err(Error::dims((meta.width, meta.height), map.dims()));
        }
        maps.push(map);
    }
    Ok((meta, maps))
}
