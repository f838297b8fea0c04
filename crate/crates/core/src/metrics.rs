//! Fixation-prediction metrics.
//!
//! AUC and KLD are shuffled: negatives are fixations taken from other
//! videos and read from the current frame's map, which cancels centre bias.
//! PCC and the masked-mean NSS compare two maps directly.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::FieldMap;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FixationRecord {
    pub video: String,
    pub frame: usize,
    pub subject: String,
    pub x: usize,
    pub y: usize,
}

/// Fixations grouped by video and frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FixationSet {
    by_frame: BTreeMap<(String, usize), Vec<(usize, usize)>>,
}

impl FixationSet {
    pub fn new(records: impl IntoIterator<Item = FixationRecord>) -> Self {
        let mut by_frame: BTreeMap<(String, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for r in records {
            by_frame.entry((r.video, r.frame)).or_default().push((r.x, r.y));
        }
        FixationSet { by_frame }
    }

    pub fn is_empty(&self) -> bool {
        self.by_frame.is_empty()
    }

    pub fn len(&self) -> usize {
        self.by_frame.values().map(Vec::len).sum()
    }

    pub fn frame(&self, video: &str, frame: usize) -> &[(usize, usize)] {
        self.by_frame
            .get(&(video.to_string(), frame))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn videos(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.by_frame.keys().map(|(v, _)| v.as_str()).collect();
        v.dedup();
        v
    }

    /// Every fixation that does not belong to `video`.
    pub fn pool_excluding(&self, video: &str) -> Vec<(usize, usize)> {
        self.by_frame
            .iter()
            .filter(|((v, _), _)| v != video)
            .flat_map(|(_, pts)| pts.iter().copied())
            .collect()
    }

    /// Checks that every fixation lies inside a `width x height` frame.
    pub fn validate_bounds(&self, width: usize, height: usize) -> Result<()> {
        for ((video, frame), pts) in &self.by_frame {
            if let Some(&(x, y)) = pts.iter().find(|&&(x, y)| x >= width || y >= height) {
                return Err(Error::InvalidInput(format!(
                    "fixation ({x}, {y}) in {video} frame {frame} lies outside {width}x{height}"
                )));
            }
        }
        Ok(())
    }
}

/// Parses `video,frame,subject,x,y` rows after a header line.
pub fn parse_fixations_csv(text: &str) -> Result<FixationSet> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "video,frame,subject,x,y" => {}
        Some((n, _)) => {
            return Err(Error::ConfigSyntax {
                line: n + 1,
                msg: "expected header `video,frame,subject,x,y`".into(),
            })
        }
        None => return Ok(FixationSet::default()),
    }
    let mut records = Vec::new();
    for (n, line) in lines {
        let bad = |msg: &str| Error::ConfigSyntax {
            line: n + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(&format!("{what} must be a non-negative integer")));
        records.push(FixationRecord {
            video: f[0].to_string(),
            frame: num(f[1], "frame")?,
            subject: f[2].to_string(),
            x: num(f[3], "x")?,
            y: num(f[4], "y")?,
        });
    }
    Ok(FixationSet::new(records))
}

pub fn read_fixations_csv(path: impl AsRef<Path>) -> Result<FixationSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_fixations_csv(&text)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricConfig {
    pub repeats: usize,
    pub bins: usize,
    pub epsilon: f64,
    pub nss_threshold: f64,
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            repeats: 100,
            bins: 20,
            epsilon: 1e-6,
            nss_threshold: 0.7,
            seed: 0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: &str| {
            Err(Error::ConfigValue {
                key: key.into(),
                msg: msg.into(),
            })
        };
        if self.repeats < 1 {
            return bad("repeats", "at least one repeat is required");
        }
        if self.bins < 2 {
            return bad("bins", "at least two bins are required");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon", "smoothing must be positive");
        }
        if !(self.nss_threshold > 0.0 && self.nss_threshold < 1.0) {
            return bad("nss_threshold", "threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Averaged score with frame coverage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Score {
    pub value: f64,
    pub frames_scored: usize,
    /// Frames that had a map but no fixations.
    pub frames_skipped: usize,
}

/// Area under the ROC curve by the Mann-Whitney statistic; ties count half.
pub fn auc_pairs(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut neg = negatives.to_vec();
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &p in positives {
        let below = neg.partition_point(|&n| n < p);
        let not_above = neg.partition_point(|&n| n <= p);
        wins += below as f64 + 0.5 * (not_above - below) as f64;
    }
    wins / (positives.len() as f64 * neg.len() as f64)
}

fn histogram(values: &[f64], bins: usize, epsilon: f64) -> Vec<f64> {
    let mut h = vec![epsilon; bins];
    for &v in values {
        let b = ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        h[b] += 1.0;
    }
    let total: f64 = h.iter().sum();
    h.iter().map(|c| c / total).collect()
}

/// `KL(P || Q)` between smoothed histograms of two samples on `[0, 1]`.
pub fn kld_samples(p_values: &[f64], q_values: &[f64], bins: usize, epsilon: f64) -> f64 {
    let p = histogram(p_values, bins, epsilon);
    let q = histogram(q_values, bins, epsilon);
    p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0)
}

/// FNV-1a; a stable per-frame seed component.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn frame_rng(seed: u64, video: &str, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(video));
    rng.set_stream(frame as u64);
    rng
}

/// Per-video map sequences, indexed by frame number.
pub type VideoMaps = BTreeMap<String, Vec<FieldMap>>;

fn shuffled_score(
    maps: &VideoMaps,
    fix: &FixationSet,
    cfg: &MetricConfig,
    score: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<Score> {
    cfg.validate()?;
    let mut video_means = Vec::new();
    let (mut scored, mut skipped) = (0, 0);
    for (video, frames) in maps {
        let pool = fix.pool_excluding(video);
        let mut frame_scores = Vec::new();
        for (n, map) in frames.iter().enumerate() {
            let pts = fix.frame(video, n);
            if pts.is_empty() {
                skipped += 1;
                continue;
            }
            let (w, h) = map.dims();
            let value = |&(x, y): &(usize, usize)| map.get(x.min(w - 1), y.min(h - 1));
            let pos: Vec<f64> = pts.iter().map(value).collect();
            let local: Vec<(usize, usize)> = pool.iter().copied().filter(|&(x, y)| x < w && y < h).collect();
            if local.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "no fixations from other videos to shuffle against for {video}"
                )));
            }
            let mut rng = frame_rng(cfg.seed, video, n);
            let mut total = 0.0;
            for _ in 0..cfg.repeats {
                let neg: Vec<f64> = (0..pos.len()).map(|_| value(&local[rng.gen_range(0..local.len())])).collect();
                total += score(&pos, &neg);
            }
            frame_scores.push(total / cfg.repeats as f64);
            scored += 1;
        }
        if !frame_scores.is_empty() {
            video_means.push(frame_scores.iter().sum::<f64>() / frame_scores.len() as f64);
        }
    }
    if video_means.is_empty() {
        return Err(Error::NoFixations);
    }
    Ok(Score {
        value: video_means.iter().sum::<f64>() / video_means.len() as f64,
        frames_scored: scored,
        frames_skipped: skipped,
    })
}

/// Shuffled AUC averaged over repeats, then frames, then videos.
pub fn auc_roc(maps: &VideoMaps, fix: &FixationSet, cfg: &MetricConfig) -> Result<Score> {
    shuffled_score(maps, fix, cfg, auc_pairs)
}

/// Shuffled KL divergence of saliency at true versus shuffled fixations.
pub fn kld(maps: &VideoMaps, fix: &FixationSet, cfg: &MetricConfig) -> Result<Score> {
    let (bins, eps) = (cfg.bins, cfg.epsilon);
    shuffled_score(maps, fix, cfg, move |p, q| kld_samples(p, q, bins, eps))
}

/// Pearson correlation over all pixels.
pub fn pcc(a: &FieldMap, b: &FieldMap) -> Result<f64> {
    a.same_dims(b)?;
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Masked-mean NSS: mean of `test` where `reference >= threshold`.
pub fn nss(reference: &FieldMap, test: &FieldMap, threshold: f64) -> Result<f64> {
    reference.same_dims(test)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (&r, &t) in reference.data().iter().zip(test.data()) {
        if r >= threshold {
            sum += t;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoFixations);
    }
    Ok(sum / n as f64)
}

/// Per-frame PCC and NSS between two map sequences.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// `None` where the metric is undefined for that frame.
    pub frames: Vec<(Option<f64>, Option<f64>)>,
    pub mean_pcc: Option<f64>,
    pub mean_nss: Option<f64>,
}

fn mean_defined(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// `a` is the reference for NSS.
pub fn compare_sequences(a: &[FieldMap], b: &[FieldMap], threshold: f64) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "sequences differ in length: {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut frames = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        x.same_dims(y)?;
        frames.push((pcc(x, y).ok(), nss(x, y, threshold).ok()));
    }
    Ok(Comparison {
        mean_pcc: mean_defined(frames.iter().map(|f| f.0)),
        mean_nss: mean_defined(frames.iter().map(|f| f.1)),
        frames,
    })
}
