//! Motion files in and out: BVH, the JSON gait document, the corpus
//! manifest, windowing with downsampling, and train/val/test splits.

mod bvh;

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bvh::{parse_bvh, write_bvh};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kinematics::{align_pose_rotations, Gait, Pose, Skeleton, Versor};
use crate::model::EmotionVector;
use crate::rng;

/// Raw positional motion on one skeleton, before labelling.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionClip {
    pub skeleton: Skeleton,
    pub frames: Vec<Vec<Vec3>>,
    pub frame_rate: f64,
    pub source_id: String,
}

impl MotionClip {
    pub fn validate(&self) -> Result<()> {
        self.skeleton.validate()?;
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::validation("frame rate must be positive"));
        }
        let j = self.skeleton.joint_count();
        if let Some((t, f)) = self.frames.iter().enumerate().find(|(_, f)| f.len() != j) {
            return Err(Error::shape(format!("frame {t} has {} joints, skeleton {j}", f.len())));
        }
        Ok(())
    }

    /// Labels the clip, recovering per-bone versors from the positions.
    pub fn into_gait(self, emotion: EmotionVector) -> Result<Gait> {
        Gait::from_positions(self.skeleton, self.frames, self.frame_rate, emotion)
    }

    pub fn from_gait(gait: &Gait, source_id: &str) -> Self {
        MotionClip {
            skeleton: gait.skeleton.clone(),
            frames: gait.frames.iter().map(|f| f.positions.clone()).collect(),
            frame_rate: gait.frame_rate,
            source_id: source_id.to_string(),
        }
    }
}

/// Writes a gait's own versors as BVH.
pub fn gait_to_bvh(gait: &Gait) -> Result<String> {
    let rotations: Vec<Vec<Versor>> = gait.frames.iter().map(|f| f.rotations.clone()).collect();
    write_bvh(&MotionClip::from_gait(gait, ""), &rotations)
}

/// On-disk JSON form of a gait. Rotations are optional; when absent they
/// are recovered from the positions on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaitDocument {
    pub skeleton: Skeleton,
    pub frames: Vec<Vec<Vec3>>,
    pub frame_rate: f64,
    pub emotion: EmotionVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<Vec<Vec<Versor>>>,
    /// Per-frame emotion of generated transitions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<EmotionVector>>,
}

impl GaitDocument {
    pub fn from_gait(gait: &Gait) -> Self {
        GaitDocument {
            skeleton: gait.skeleton.clone(),
            frames: gait.frames.iter().map(|f| f.positions.clone()).collect(),
            frame_rate: gait.frame_rate,
            emotion: gait.emotion.clone(),
            rotations: Some(gait.frames.iter().map(|f| f.rotations.clone()).collect()),
            schedule: None,
        }
    }

    pub fn into_gait(self) -> Result<Gait> {
        match self.rotations {
            None => Gait::from_positions(self.skeleton, self.frames, self.frame_rate, self.emotion),
            Some(rots) => {
                if rots.len() != self.frames.len() {
                    return Err(Error::shape(format!(
                        "{} rotation frames for {} position frames",
                        rots.len(),
                        self.frames.len()
                    )));
                }
                let frames = self
                    .frames
                    .into_iter()
                    .zip(rots)
                    .map(|(positions, rotations)| Pose { positions, rotations })
                    .collect();
                let gait = Gait {
                    skeleton: self.skeleton,
                    frames,
                    frame_rate: self.frame_rate,
                    emotion: self.emotion,
                };
                gait.validate()?;
                Ok(gait)
            }
        }
    }
}

pub fn gait_to_json(gait: &Gait) -> Result<String> {
    Ok(serde_json::to_string(&GaitDocument::from_gait(gait))?)
}

pub fn gait_from_json(text: &str) -> Result<Gait> {
    serde_json::from_str::<GaitDocument>(text)?.into_gait()
}

pub fn save_gait(path: &Path, gait: &Gait) -> Result<()> {
    save_document(path, &GaitDocument::from_gait(gait))
}

pub fn save_document(path: &Path, doc: &GaitDocument) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string(doc)?)?;
    Ok(())
}

pub fn load_gait(path: &Path) -> Result<Gait> {
    let text = fs::read_to_string(path)?;
    gait_from_json(&text).map_err(|e| Error::validation(format!("{}: {e}", path.display())))
}

/// Dataset partition of a manifest entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unassigned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Gait document path, relative to the manifest file.
    pub path: String,
    pub emotion: EmotionVector,
    pub split: Split,
}

/// Labelled gait documents of a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl CorpusManifest {
    pub fn new(seed: u64) -> Self {
        CorpusManifest {
            seed,
            entries: Vec::new(),
        }
    }

    /// Reads a manifest; `path` may be the file or its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let text = fs::read_to_string(&file)
            .map_err(|e| Error::validation(format!("cannot read manifest {}: {e}", file.display())))?;
        let manifest: CorpusManifest = serde_json::from_str(&text)?;
        let base = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, base))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    /// Loads every gait of `split` (all entries when `None`), in manifest
    /// order. Each gait takes the manifest's emotion label.
    pub fn load_gaits(&self, base: &Path, split: Option<Split>) -> Result<Vec<Gait>> {
        self.entries
            .par_iter()
            .filter(|e| split.is_none_or(|s| e.split == s))
            .map(|e| {
                let mut g = load_gait(&base.join(&e.path))?;
                g.emotion = e.emotion.clone();
                Ok(g)
            })
            .collect()
    }
}

/// Keeps every `stride`-th frame, then cuts non-overlapping windows of
/// `window` frames. Leftover frames are dropped.
pub fn window_frames<T: Clone>(frames: &[T], stride: usize, window: usize) -> Result<Vec<Vec<T>>> {
    if stride == 0 || window < 2 {
        return Err(Error::validation(format!(
            "stride must be >= 1 and window >= 2, got {stride} / {window}"
        )));
    }
    let kept: Vec<T> = frames.iter().step_by(stride).cloned().collect();
    if frames.len() < stride * window {
        return Ok(Vec::new());
    }
    Ok(kept.chunks_exact(window).map(<[T]>::to_vec).collect())
}

/// Downsamples a gait and splits it into fixed-length gaits; the frame rate
/// is divided by `stride`.
pub fn window_and_downsample(gait: &Gait, stride: usize, window: usize) -> Result<Vec<Gait>> {
    Ok(window_frames(&gait.frames, stride, window)?
        .into_iter()
        .map(|mut frames| {
            align_pose_rotations(&mut frames);
            Gait {
                skeleton: gait.skeleton.clone(),
                frames,
                frame_rate: gait.frame_rate / stride as f64,
                emotion: gait.emotion.clone(),
            }
        })
        .collect())
}

/// Shuffles the entries deterministically under the manifest seed and tags
/// them train/val/test by the given fractions.
pub fn split_corpus(manifest: &CorpusManifest, fractions: (f64, f64, f64)) -> Result<CorpusManifest> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| *f < 0.0 || !f.is_finite()) {
        return Err(Error::validation(format!("negative split fraction in {fractions:?}")));
    }
    if (a + b + c - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "split fractions {fractions:?} do not sum to 1"
        )));
    }
    let n = manifest.entries.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(manifest.seed, "split"));
    let n_train = ((a * n as f64).round() as usize).min(n);
    let n_val = ((b * n as f64).round() as usize).min(n - n_train);
    let mut out = manifest.clone();
    for (rank, &i) in order.iter().enumerate() {
        out.entries[i].split = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(out)
}

/// Parses `"0.8,0.1,0.1"`.
pub fn parse_fractions(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::validation(format!("bad split {text:?}")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Error::validation(format!("split needs three fractions, got {text:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize, seed: u64) -> CorpusManifest {
        CorpusManifest {
            seed,
            entries: (0..n)
                .map(|i| ManifestEntry {
                    path: format!("g{i}.json"),
                    emotion: EmotionVector::one_hot(i % 4, 4),
                    split: Split::Unassigned,
                })
                .collect(),
        }
    }

    #[test]
    fn window_counts() {
        let frames: Vec<usize> = (0..240).collect();
        let w = window_frames(&frames, 4, 60).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0][1], 4);
        assert!(window_frames(&frames[..239], 4, 60).unwrap().is_empty());
        let long: Vec<usize> = (0..480).collect();
        let w = window_frames(&long, 4, 60).unwrap();
        assert_eq!(w.len(), 2);
        let flat: Vec<usize> = w.concat();
        assert_eq!(flat, (0..480).step_by(4).collect::<Vec<_>>());
        assert!(window_frames(&long, 0, 60).is_err());
    }

    #[test]
    fn split_counts_and_determinism() {
        let s = split_corpus(&manifest(10, 1), (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(
            (s.count(Split::Train), s.count(Split::Val), s.count(Split::Test)),
            (8, 1, 1)
        );
        let all = split_corpus(&manifest(10, 1), (1.0, 0.0, 0.0)).unwrap();
        assert_eq!(all.count(Split::Train), 10);
        let a = split_corpus(&manifest(1000, 5), (0.8, 0.1, 0.1)).unwrap();
        let b = split_corpus(&manifest(1000, 5), (0.8, 0.1, 0.1)).unwrap();
        let c = split_corpus(&manifest(1000, 6), (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            a.entries.iter().map(|e| e.split).collect::<Vec<_>>(),
            c.entries.iter().map(|e| e.split).collect::<Vec<_>>()
        );
        assert!(split_corpus(&manifest(3, 0), (1.2, -0.2, 0.0)).is_err());
        assert!(split_corpus(&manifest(3, 0), (0.5, 0.2, 0.2)).is_err());
    }

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_fractions("0.8,0.1,0.1").unwrap(), (0.8, 0.1, 0.1));
        assert!(parse_fractions("0.8,0.2").is_err());
    }
}
