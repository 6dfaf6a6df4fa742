//! Dataset manifests: per-frame records, quality grades, child-disjoint
//! splits, and the two summary tables (children per age bucket, frames per
//! video type).
//!
//! Two invariants are enforced whenever a manifest is built or loaded:
//! train and test share no child, and no bad-quality frame sits in the test
//! split. Grading is recorded per frame but decided per video, so a bad
//! video marks all of its frames bad.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::DepthImage;
use crate::rng::stream_rng;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

const CSV_HEADER: &str = "child_id,frame_path,video_type,age_bucket,quality,label_height_cm,split";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VideoType {
    #[serde(rename = "front")]
    Front,
    #[serde(rename = "back")]
    Back,
    #[serde(rename = "360")]
    Deg360,
}

impl VideoType {
    pub const ALL: [VideoType; 3] = [VideoType::Front, VideoType::Back, VideoType::Deg360];

    pub fn as_str(&self) -> &'static str {
        match self {
            VideoType::Front => "front",
            VideoType::Back => "back",
            VideoType::Deg360 => "360",
        }
    }

    pub fn table_label(&self) -> &'static str {
        match self {
            VideoType::Front => "Front video",
            VideoType::Back => "Back video",
            VideoType::Deg360 => "360-degree video",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "front" => Some(VideoType::Front),
            "back" => Some(VideoType::Back),
            "360" | "deg360" => Some(VideoType::Deg360),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgeBucket {
    From2To3,
    From3To4,
    From4To5,
}

impl AgeBucket {
    pub const ALL: [AgeBucket; 3] = [
        AgeBucket::From2To3,
        AgeBucket::From3To4,
        AgeBucket::From4To5,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AgeBucket::From2To3 => "2-3",
            AgeBucket::From3To4 => "3-4",
            AgeBucket::From4To5 => "4-5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "2-3" => Some(AgeBucket::From2To3),
            "3-4" => Some(AgeBucket::From3To4),
            "4-5" => Some(AgeBucket::From4To5),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quality {
    Good,
    Bad,
}

impl Quality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quality::Good => "good",
            Quality::Bad => "bad",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "good" => Some(Quality::Good),
            "bad" => Some(Quality::Bad),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One depth frame of one child's video.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub child_id: String,
    /// Path to the frame's depth PGM, relative to the manifest's directory.
    pub frame_path: String,
    pub video_type: VideoType,
    pub age_bucket: AgeBucket,
    pub quality: Quality,
    pub label_height_cm: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<SampleRecord>,
    pub schema_version: u32,
}

#[derive(Debug, Error, PartialEq)]
pub enum ManifestError {
    #[error("malformed manifest row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("child `{child_id}` appears in both train and test splits")]
    SplitLeak { child_id: String },
    #[error("bad-quality frame of child `{child_id}` in test split")]
    BadTestQuality { child_id: String },
}

impl Manifest {
    pub fn new(records: Vec<SampleRecord>) -> Result<Self, ManifestError> {
        let m = Manifest {
            records,
            schema_version: MANIFEST_SCHEMA_VERSION,
        };
        m.validate()?;
        Ok(m)
    }

    /// Check split disjointness and test-quality invariants.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut train_children = BTreeSet::new();
        let mut test_children = BTreeSet::new();
        for r in &self.records {
            if r.quality == Quality::Bad && r.split == Split::Test {
                return Err(ManifestError::BadTestQuality {
                    child_id: r.child_id.clone(),
                });
            }
            match r.split {
                Split::Train => train_children.insert(r.child_id.as_str()),
                Split::Test => test_children.insert(r.child_id.as_str()),
            };
        }
        if let Some(&leak) = train_children.intersection(&test_children).next() {
            return Err(ManifestError::SplitLeak {
                child_id: leak.to_string(),
            });
        }
        Ok(())
    }

    pub fn split_records(&self, split: Split) -> impl Iterator<Item = &SampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

pub fn save_manifest(manifest: &Manifest) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &manifest.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.child_id,
            r.frame_path,
            r.video_type.as_str(),
            r.age_bucket.as_str(),
            r.quality.as_str(),
            r.label_height_cm,
            r.split.as_str()
        ));
    }
    out.into_bytes()
}

pub fn load_manifest(bytes: &[u8]) -> Result<Manifest, ManifestError> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        other => {
            return Err(ManifestError::MalformedRow {
                line: 1,
                reason: format!("bad header `{}`", other.map(|(_, h)| h).unwrap_or("")),
            })
        }
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(ManifestError::MalformedRow {
                line: lineno,
                reason: format!("expected 7 fields, found {}", cols.len()),
            });
        }
        let bad = |reason: &str| ManifestError::MalformedRow {
            line: lineno,
            reason: reason.to_string(),
        };
        let label: f64 = cols[5].parse().map_err(|_| bad("bad label_height_cm"))?;
        if !(label > 0.0) || !label.is_finite() {
            return Err(bad("label_height_cm must be positive"));
        }
        records.push(SampleRecord {
            child_id: cols[0].to_string(),
            frame_path: cols[1].to_string(),
            video_type: VideoType::parse(cols[2]).ok_or_else(|| bad("bad video_type"))?,
            age_bucket: AgeBucket::parse(cols[3]).ok_or_else(|| bad("bad age_bucket"))?,
            quality: Quality::parse(cols[4]).ok_or_else(|| bad("bad quality"))?,
            label_height_cm: label,
            split: Split::parse(cols[6]).ok_or_else(|| bad("bad split"))?,
        });
    }
    Manifest::new(records)
}

/// Assign whole children to train or test.
///
/// All frames of a child travel together; children with any bad-quality
/// frame are forced into train. The test split receives
/// `round(test_fraction * child_count)` children (capped by how many are
/// eligible), drawn by a seeded shuffle, so the result is a pure function of
/// `(records, test_fraction, seed)`.
pub fn split_by_child(
    mut records: Vec<SampleRecord>,
    test_fraction: f64,
    seed: u64,
) -> Manifest {
    assert!(
        test_fraction > 0.0 && test_fraction < 1.0,
        "test_fraction must be in (0, 1)"
    );

    let mut bad_children = BTreeSet::new();
    let mut all_children = BTreeSet::new();
    for r in &records {
        all_children.insert(r.child_id.clone());
        if r.quality == Quality::Bad {
            bad_children.insert(r.child_id.clone());
        }
    }

    let mut eligible: Vec<&String> = all_children.difference(&bad_children).collect();
    let want = (test_fraction * all_children.len() as f64).round() as usize;
    let mut rng = stream_rng(seed, 0);
    eligible.shuffle(&mut rng);
    let test_children: BTreeSet<String> = eligible
        .into_iter()
        .take(want.min(all_children.len() - bad_children.len()))
        .cloned()
        .collect();

    for r in &mut records {
        r.split = if test_children.contains(&r.child_id) {
            Split::Test
        } else {
            Split::Train
        };
    }

    Manifest {
        records,
        schema_version: MANIFEST_SCHEMA_VERSION,
    }
}

/// Counts shaped like the two dataset tables: children per age bucket and
/// frames per video type, each broken down by split.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryReport {
    /// (bucket, total children, train children, test children)
    pub age_rows: Vec<(AgeBucket, usize, usize, usize)>,
    pub age_totals: (usize, usize, usize),
    /// (video type, total frames, train frames, test frames)
    pub video_rows: Vec<(VideoType, usize, usize, usize)>,
    pub video_totals: (usize, usize, usize),
}

pub fn summarize(manifest: &Manifest) -> SummaryReport {
    // Children are counted once per (bucket, split) they appear in.
    let mut children: BTreeMap<(AgeBucket, Split), BTreeSet<&str>> = BTreeMap::new();
    let mut frames: BTreeMap<(VideoType, Split), usize> = BTreeMap::new();
    for r in &manifest.records {
        children
            .entry((r.age_bucket, r.split))
            .or_default()
            .insert(r.child_id.as_str());
        *frames.entry((r.video_type, r.split)).or_default() += 1;
    }

    let child_count = |b, s| children.get(&(b, s)).map_or(0, BTreeSet::len);
    let age_rows: Vec<_> = AgeBucket::ALL
        .iter()
        .map(|&b| {
            let train = child_count(b, Split::Train);
            let test = child_count(b, Split::Test);
            (b, train + test, train, test)
        })
        .collect();
    let age_totals = age_rows
        .iter()
        .fold((0, 0, 0), |acc, r| (acc.0 + r.1, acc.1 + r.2, acc.2 + r.3));

    let frame_count = |v, s| frames.get(&(v, s)).copied().unwrap_or(0);
    let video_rows: Vec<_> = VideoType::ALL
        .iter()
        .map(|&v| {
            let train = frame_count(v, Split::Train);
            let test = frame_count(v, Split::Test);
            (v, train + test, train, test)
        })
        .collect();
    let video_totals = video_rows
        .iter()
        .fold((0, 0, 0), |acc, r| (acc.0 + r.1, acc.1 + r.2, acc.2 + r.3));

    SummaryReport {
        age_rows,
        age_totals,
        video_rows,
        video_totals,
    }
}

impl fmt::Display for SummaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Age-wise distribution of children")?;
        writeln!(f, "{:<18} {:>8} {:>9} {:>7}", "Age", "Total", "Training", "Test")?;
        for (b, total, train, test) in &self.age_rows {
            writeln!(f, "{:<18} {:>8} {:>9} {:>7}", b.as_str(), total, train, test)?;
        }
        let (t, tr, te) = self.age_totals;
        writeln!(f, "{:<18} {:>8} {:>9} {:>7}", "Total", t, tr, te)?;
        writeln!(f)?;
        writeln!(f, "Video type distribution of depth frames")?;
        writeln!(f, "{:<18} {:>8} {:>9} {:>7}", "Video Type", "Total", "Training", "Test")?;
        for (v, total, train, test) in &self.video_rows {
            writeln!(f, "{:<18} {:>8} {:>9} {:>7}", v.table_label(), total, train, test)?;
        }
        let (t, tr, te) = self.video_totals;
        writeln!(f, "{:<18} {:>8} {:>9} {:>7}", "Total", t, tr, te)?;
        Ok(())
    }
}

/// Synthetic-corruption grader: a frame whose figure-pixel count falls below
/// `min_figure_pixels` is graded bad.
///
/// Figure pixels are depth returns in the upper 70% of the frame that sit at
/// least 150 mm nearer than the dominant (modal) depth there, which for the
/// synthetic scenes is the back wall. This is a test utility for the
/// corruption operators, not a field-quality model.
pub fn grade_depth_image(img: &DepthImage, min_figure_pixels: usize) -> Quality {
    let upper_rows = (img.height as usize * 7) / 10;
    let w = img.width as usize;
    let upper = &img.depths_mm[..upper_rows * w];

    // Modal depth over 64 mm bins.
    let mut bins: BTreeMap<u16, usize> = BTreeMap::new();
    for &d in upper.iter().filter(|&&d| d != 0) {
        *bins.entry(d / 64).or_default() += 1;
    }
    let Some((&mode_bin, _)) = bins.iter().max_by_key(|(_, &c)| c) else {
        return Quality::Bad; // no returns at all
    };
    let wall_mm = mode_bin as u32 * 64 + 32;
    let cutoff = wall_mm.saturating_sub(150) as u16;

    let figure_pixels = upper
        .iter()
        .filter(|&&d| d != 0 && d < cutoff)
        .count();
    if figure_pixels < min_figure_pixels {
        Quality::Bad
    } else {
        Quality::Good
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(child: &str, split: Split, quality: Quality) -> SampleRecord {
        SampleRecord {
            child_id: child.to_string(),
            frame_path: format!("{child}.pgm"),
            video_type: VideoType::Front,
            age_bucket: AgeBucket::From3To4,
            quality,
            label_height_cm: 100.0,
            split,
        }
    }

    #[test]
    fn empty_manifest_round_trips() {
        let m = Manifest::new(vec![]).unwrap();
        assert_eq!(load_manifest(&save_manifest(&m)).unwrap(), m);
    }

    #[test]
    fn split_leak_is_rejected() {
        let records = vec![
            record("c1", Split::Train, Quality::Good),
            record("c1", Split::Test, Quality::Good),
        ];
        assert_eq!(
            Manifest::new(records).unwrap_err(),
            ManifestError::SplitLeak {
                child_id: "c1".into()
            }
        );
    }

    #[test]
    fn bad_quality_in_test_is_rejected() {
        let records = vec![record("c1", Split::Test, Quality::Bad)];
        assert_eq!(
            Manifest::new(records).unwrap_err(),
            ManifestError::BadTestQuality {
                child_id: "c1".into()
            }
        );
    }

    #[test]
    fn malformed_rows_are_reported_with_line_numbers() {
        let src = format!("{CSV_HEADER}\nc1,p.pgm,front,2-3,good,not_a_number,train\n");
        match load_manifest(src.as_bytes()) {
            Err(ManifestError::MalformedRow { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let src = format!("{CSV_HEADER}\nc1,p.pgm,front,2-3,good,-5,train\n");
        assert!(load_manifest(src.as_bytes()).is_err());
    }

    #[test]
    fn split_by_child_keeps_children_whole() {
        let mut records = Vec::new();
        for c in 0..10 {
            for _ in 0..3 {
                records.push(record(&format!("c{c}"), Split::Train, Quality::Good));
            }
        }
        let m = split_by_child(records, 0.3, 7);
        m.validate().unwrap();
        let test_children: BTreeSet<_> = m
            .split_records(Split::Test)
            .map(|r| r.child_id.clone())
            .collect();
        assert_eq!(test_children.len(), 3);
        assert_eq!(m.split_records(Split::Test).count(), 9);
    }

    #[test]
    fn all_bad_children_leave_test_empty() {
        let records = (0..5)
            .map(|c| record(&format!("c{c}"), Split::Train, Quality::Bad))
            .collect();
        let m = split_by_child(records, 0.5, 1);
        assert_eq!(m.split_records(Split::Test).count(), 0);
    }

    #[test]
    fn split_is_deterministic_in_seed() {
        let records: Vec<_> = (0..20)
            .map(|c| record(&format!("c{c}"), Split::Train, Quality::Good))
            .collect();
        let a = split_by_child(records.clone(), 0.25, 99);
        let b = split_by_child(records.clone(), 0.25, 99);
        let c = split_by_child(records, 0.25, 100);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn summarize_empty_manifest_is_all_zero() {
        let report = summarize(&Manifest::default());
        assert_eq!(report.age_totals, (0, 0, 0));
        assert_eq!(report.video_totals, (0, 0, 0));
        for (_, t, tr, te) in report.video_rows {
            assert_eq!((t, tr, te), (0, 0, 0));
        }
    }
}
