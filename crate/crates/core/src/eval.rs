//! Prediction quality metrics (MAE, MAPE, in-range fraction per video type)
//! and the standardisation-test statistics (Intra TEM, Bias from Supervisor)
//! with their SMART quality classes.
//!
//! Two overall aggregates are reported side by side: the unweighted mean of
//! the per-video-type values (the convention behind the published "Average"
//! row) and the frame-count-weighted mean.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::manifest::VideoType;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-positive ground-truth height {0}")]
    NonPositiveTruth(f64),
    #[error("negative metric value {0}")]
    NegativeValue(f64),
    #[error("missing round data: {0}")]
    MissingRound(String),
    #[error("malformed standardisation row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
}

/// MAE / MAPE / in-range triple for one group of predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mae_cm: f64,
    pub mape_percent: f64,
    pub in_range_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeMetrics {
    pub n_frames: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub threshold_cm: f64,
    pub per_video_type: BTreeMap<VideoType, TypeMetrics>,
    pub overall_unweighted: Metrics,
    pub overall_weighted: Metrics,
}

/// Aggregate per-type metrics into the unweighted and frame-weighted means.
///
/// The unweighted mean averages the per-type values of each metric over the
/// types present; the weighted mean weights by frame count.
pub fn aggregate(per_video_type: &BTreeMap<VideoType, TypeMetrics>) -> (Metrics, Metrics) {
    assert!(!per_video_type.is_empty(), "aggregate over no types");
    let k = per_video_type.len() as f64;
    let n_total: usize = per_video_type.values().map(|t| t.n_frames).sum();
    let mut unweighted = Metrics {
        mae_cm: 0.0,
        mape_percent: 0.0,
        in_range_fraction: 0.0,
    };
    let mut weighted = unweighted;
    for t in per_video_type.values() {
        unweighted.mae_cm += t.metrics.mae_cm / k;
        unweighted.mape_percent += t.metrics.mape_percent / k;
        unweighted.in_range_fraction += t.metrics.in_range_fraction / k;
        let w = t.n_frames as f64 / n_total as f64;
        weighted.mae_cm += t.metrics.mae_cm * w;
        weighted.mape_percent += t.metrics.mape_percent * w;
        weighted.in_range_fraction += t.metrics.in_range_fraction * w;
    }
    (unweighted, weighted)
}

/// Score (prediction, truth) pairs per video type.
///
/// MAE is the mean absolute error in cm, MAPE the mean of
/// `|pred - truth| / truth * 100`, and the in-range fraction counts errors
/// with `|pred - truth| <= threshold_cm`.
pub fn eval_predictions(
    pairs: &[(f64, f64, VideoType)],
    threshold_cm: f64,
) -> Result<EvalResult, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    assert!(threshold_cm > 0.0, "threshold must be positive");
    for &(_, truth, _) in pairs {
        if !(truth > 0.0) {
            return Err(EvalError::NonPositiveTruth(truth));
        }
    }

    let mut groups: BTreeMap<VideoType, Vec<(f64, f64)>> = BTreeMap::new();
    for &(pred, truth, vt) in pairs {
        groups.entry(vt).or_default().push((pred, truth));
    }

    let mut per_video_type = BTreeMap::new();
    for (vt, g) in groups {
        let n = g.len() as f64;
        let mae = g.iter().map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
        let mape = g.iter().map(|(p, t)| (p - t).abs() / t * 100.0).sum::<f64>() / n;
        let in_range =
            g.iter().filter(|(p, t)| (p - t).abs() <= threshold_cm).count() as f64 / n;
        per_video_type.insert(
            vt,
            TypeMetrics {
                n_frames: g.len(),
                metrics: Metrics {
                    mae_cm: mae,
                    mape_percent: mape,
                    in_range_fraction: in_range,
                },
            },
        );
    }

    let (overall_unweighted, overall_weighted) = aggregate(&per_video_type);
    Ok(EvalResult {
        threshold_cm,
        per_video_type,
        overall_unweighted,
        overall_weighted,
    })
}

impl fmt::Display for EvalResult {
    fmt_eval_table!();
}

macro_rules! fmt_eval_table {
    () => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            writeln!(
                f,
                "{:<18} {:>8} {:>14} {:>9} {:>9}",
                "Video Type", "Frames", "In-range", "MAPE", "MAE"
            )?;
            let row = |f: &mut fmt::Formatter<'_>, label: &str, n: String, m: &Metrics| {
                writeln!(
                    f,
                    "{:<18} {:>8} {:>13.2}% {:>8.3}% {:>6.2}cm",
                    label,
                    n,
                    m.in_range_fraction * 100.0,
                    m.mape_percent,
                    m.mae_cm
                )
            };
            for (vt, t) in &self.per_video_type {
                row(f, vt.table_label(), t.n_frames.to_string(), &t.metrics)?;
            }
            row(f, "Average", String::new(), &self.overall_unweighted)?;
            row(f, "Weighted avg", String::new(), &self.overall_weighted)?;
            write!(f, "(in-range threshold {} cm)", self.threshold_cm)
        }
    };
}
use fmt_eval_table;

/// One enumerator's two height measurements of one child plus the expert
/// supervisor's ground truth, all in cm.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardisationRecord {
    pub enumerator_id: String,
    pub child_id: String,
    pub round1_cm: f64,
    pub round2_cm: f64,
    pub supervisor_cm: f64,
}

/// Intra-observer technical error of measurement over one enumerator's
/// records: `sqrt(sum((round1 - round2)^2) / (2n))`.
pub fn intra_tem(records: &[StandardisationRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum_sq: f64 = records
        .iter()
        .map(|r| (r.round1_cm - r.round2_cm).powi(2))
        .sum();
    Ok((sum_sq / (2.0 * records.len() as f64)).sqrt())
}

/// Signed mean deviation of the enumerator's per-child round means from the
/// supervisor's measurements.
pub fn signed_bias_from_supervisor(records: &[StandardisationRecord]) -> Result<f64, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let sum: f64 = records
        .iter()
        .map(|r| (r.round1_cm + r.round2_cm) / 2.0 - r.supervisor_cm)
        .sum();
    Ok(sum / records.len() as f64)
}

/// Absolute bias from supervisor; the SMART ranges are one-sided, so
/// classification uses this magnitude (the signed value stays available via
/// [`signed_bias_from_supervisor`]).
pub fn bias_from_supervisor(records: &[StandardisationRecord]) -> Result<f64, EvalError> {
    signed_bias_from_supervisor(records).map(f64::abs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SmartClass {
    Good,
    Fair,
    Poor,
    Reject,
}

impl fmt::Display for SmartClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmartClass::Good => "Good",
            SmartClass::Fair => "Fair",
            SmartClass::Poor => "Poor",
            SmartClass::Reject => "Reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmartMetric {
    Tem,
    Bias,
}

/// Classify a TEM or bias value against the SMART measurement ranges.
///
/// TEM: Good up to 0.4 cm, Fair up to 0.6, Poor up to 1.2, Reject above.
/// Bias: same except Poor extends to 1.4 cm. Exact boundary values fall
/// into the better class.
pub fn classify_smart(value_cm: f64, metric: SmartMetric) -> Result<SmartClass, EvalError> {
    if !(value_cm >= 0.0) {
        return Err(EvalError::NegativeValue(value_cm));
    }
    let poor_limit = match metric {
        SmartMetric::Tem => 1.2,
        SmartMetric::Bias => 1.4,
    };
    Ok(if value_cm <= 0.4 {
        SmartClass::Good
    } else if value_cm <= 0.6 {
        SmartClass::Fair
    } else if value_cm <= poor_limit {
        SmartClass::Poor
    } else {
        SmartClass::Reject
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumeratorStats {
    pub n_children: usize,
    pub intra_tem_cm: f64,
    pub tem_class: SmartClass,
    /// Absolute bias used for classification.
    pub bias_cm: f64,
    /// Signed bias, kept for diagnostics.
    pub bias_signed_cm: f64,
    pub bias_class: SmartClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SmartReport {
    pub per_enumerator: BTreeMap<String, EnumeratorStats>,
}

/// Per-enumerator TEM and bias with SMART classes.
pub fn standardisation_report(
    records: &[StandardisationRecord],
) -> Result<SmartReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut by_enumerator: BTreeMap<&str, Vec<StandardisationRecord>> = BTreeMap::new();
    for r in records {
        by_enumerator
            .entry(r.enumerator_id.as_str())
            .or_default()
            .push(r.clone());
    }

    let mut per_enumerator = BTreeMap::new();
    for (id, recs) in by_enumerator {
        let tem = intra_tem(&recs)?;
        let signed = signed_bias_from_supervisor(&recs)?;
        per_enumerator.insert(
            id.to_string(),
            EnumeratorStats {
                n_children: recs.len(),
                intra_tem_cm: tem,
                tem_class: classify_smart(tem, SmartMetric::Tem)?,
                bias_cm: signed.abs(),
                bias_signed_cm: signed,
                bias_class: classify_smart(signed.abs(), SmartMetric::Bias)?,
            },
        );
    }
    Ok(SmartReport { per_enumerator })
}

impl fmt::Display for SmartReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>4} {:>14} {:>8} {:>11} {:>8}",
            "Enumerator", "N", "Intra TEM (cm)", "class", "Bias (cm)", "class"
        )?;
        for (id, s) in &self.per_enumerator {
            writeln!(
                f,
                "{:<14} {:>4} {:>14.3} {:>8} {:>11.3} {:>8}",
                id,
                s.n_children,
                s.intra_tem_cm,
                s.tem_class.to_string(),
                s.bias_signed_cm,
                s.bias_class.to_string()
            )?;
        }
        Ok(())
    }
}

/// Manual measurements next to model predictions for the same enumerators.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardisationComparison {
    pub manual: SmartReport,
    pub model: Option<SmartReport>,
}

/// One row of the standardisation CSV. The two optional directory columns
/// point at per-round depth-frame folders used in predictor mode.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardisationCsvRow {
    pub record: StandardisationRecord,
    pub round1_dir: Option<String>,
    pub round2_dir: Option<String>,
}

const STD_CSV_HEADER: &str = "enumerator_id,child_id,round1_cm,round2_cm,supervisor_cm";

/// Parse the standardisation records CSV
/// (`enumerator_id,child_id,round1_cm,round2_cm,supervisor_cm` with optional
/// trailing `round1_dir,round2_dir` columns).
pub fn load_standardisation_csv(bytes: &[u8]) -> Result<Vec<StandardisationCsvRow>, EvalError> {
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim().starts_with(STD_CSV_HEADER) => {}
        other => {
            return Err(EvalError::MalformedRow {
                line: 1,
                reason: format!("bad header `{}`", other.map(|(_, h)| h).unwrap_or("")),
            })
        }
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 && cols.len() != 7 {
            return Err(EvalError::MalformedRow {
                line: lineno,
                reason: format!("expected 5 or 7 fields, found {}", cols.len()),
            });
        }
        let num = |i: usize, what: &str| -> Result<f64, EvalError> {
            let v: f64 = cols[i].parse().map_err(|_| EvalError::MalformedRow {
                line: lineno,
                reason: format!("bad {what}"),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(EvalError::MalformedRow {
                    line: lineno,
                    reason: format!("{what} must be positive"),
                });
            }
            Ok(v)
        };
        let dir = |i: usize| -> Option<String> {
            cols.get(i)
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().to_string())
        };
        rows.push(StandardisationCsvRow {
            record: StandardisationRecord {
                enumerator_id: cols[0].to_string(),
                child_id: cols[1].to_string(),
                round1_cm: num(2, "round1_cm")?,
                round2_cm: num(3, "round2_cm")?,
                supervisor_cm: num(4, "supervisor_cm")?,
            },
            round1_dir: dir(5),
            round2_dir: dir(6),
        });
    }
    Ok(rows)
}

/// Replace each row's round values by the median model prediction over that
/// round's frames, keeping the supervisor ground truth.
///
/// `predict_round` receives the row and round index (1 or 2) and returns the
/// per-frame predictions for that round.
pub fn predicted_records<F>(
    rows: &[StandardisationCsvRow],
    mut predict_round: F,
) -> Result<Vec<StandardisationRecord>, EvalError>
where
    F: FnMut(&StandardisationCsvRow, u8) -> Result<Vec<f64>, EvalError>,
{
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let r1 = median(&predict_round(row, 1)?).ok_or_else(|| {
            EvalError::MissingRound(format!(
                "no round-1 frames for {}/{}",
                row.record.enumerator_id, row.record.child_id
            ))
        })?;
        let r2 = median(&predict_round(row, 2)?).ok_or_else(|| {
            EvalError::MissingRound(format!(
                "no round-2 frames for {}/{}",
                row.record.enumerator_id, row.record.child_id
            ))
        })?;
        out.push(StandardisationRecord {
            enumerator_id: row.record.enumerator_id.clone(),
            child_id: row.record.child_id.clone(),
            round1_cm: r1,
            round2_cm: r2,
            supervisor_cm: row.record.supervisor_cm,
        });
    }
    Ok(out)
}

/// Median of a non-empty slice; even lengths average the middle pair.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite predictions"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(e: &str, c: &str, r1: f64, r2: f64, sup: f64) -> StandardisationRecord {
        StandardisationRecord {
            enumerator_id: e.to_string(),
            child_id: c.to_string(),
            round1_cm: r1,
            round2_cm: r2,
            supervisor_cm: sup,
        }
    }

    #[test]
    fn perfect_predictions_score_perfectly() {
        let pairs = vec![
            (100.0, 100.0, VideoType::Front),
            (95.0, 95.0, VideoType::Back),
        ];
        let res = eval_predictions(&pairs, 1.4).unwrap();
        assert_eq!(res.overall_unweighted.mae_cm, 0.0);
        assert_eq!(res.overall_unweighted.mape_percent, 0.0);
        assert_eq!(res.overall_unweighted.in_range_fraction, 1.0);
    }

    #[test]
    fn empty_and_non_positive_inputs_error() {
        assert_eq!(eval_predictions(&[], 1.4), Err(EvalError::EmptyInput));
        let pairs = vec![(100.0, 0.0, VideoType::Front)];
        assert_eq!(
            eval_predictions(&pairs, 1.4),
            Err(EvalError::NonPositiveTruth(0.0))
        );
    }

    #[test]
    fn mape_is_truth_relative() {
        let pairs = vec![(102.0, 100.0, VideoType::Front)];
        let res = eval_predictions(&pairs, 1.4).unwrap();
        let t = &res.per_video_type[&VideoType::Front].metrics;
        assert!((t.mae_cm - 2.0).abs() < 1e-12);
        assert!((t.mape_percent - 2.0).abs() < 1e-12);
        assert_eq!(t.in_range_fraction, 0.0);
    }

    #[test]
    fn tem_of_identical_rounds_is_zero() {
        let recs = vec![rec("e", "c1", 100.0, 100.0, 99.0)];
        assert_eq!(intra_tem(&recs).unwrap(), 0.0);
    }

    #[test]
    fn tem_matches_hand_evaluation() {
        // sqrt((0.4^2 + 0.8^2) / 4) = sqrt(0.2)
        let recs = vec![
            rec("e", "c1", 100.0, 100.4, 100.0),
            rec("e", "c2", 101.0, 100.2, 100.0),
        ];
        let tem = intra_tem(&recs).unwrap();
        assert!((tem - 0.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn tem_is_homogeneous_in_the_differences() {
        let base = vec![
            rec("e", "c1", 100.0, 100.4, 100.0),
            rec("e", "c2", 101.0, 100.2, 100.0),
        ];
        let doubled: Vec<_> = base
            .iter()
            .map(|r| rec("e", &r.child_id, r.round1_cm, 2.0 * r.round2_cm - r.round1_cm, 100.0))
            .collect();
        assert!(
            (intra_tem(&doubled).unwrap() - 2.0 * intra_tem(&base).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn bias_matches_hand_evaluation() {
        let recs = vec![rec("e", "c1", 101.0, 102.0, 100.0)];
        assert!((bias_from_supervisor(&recs).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bias_of_exact_measurements_is_zero() {
        let recs = vec![rec("e", "c1", 100.0, 100.0, 100.0)];
        assert_eq!(bias_from_supervisor(&recs).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_becomes_absolute_bias() {
        let recs: Vec<_> = (0..5)
            .map(|i| rec("e", &format!("c{i}"), 99.5, 99.5, 100.0))
            .collect();
        assert!((bias_from_supervisor(&recs).unwrap() - 0.5).abs() < 1e-12);
        assert!((signed_bias_from_supervisor(&recs).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn smart_classes_follow_the_ranges() {
        use SmartClass::*;
        use SmartMetric::*;
        assert_eq!(classify_smart(0.3, Tem).unwrap(), Good);
        assert_eq!(classify_smart(0.5, Tem).unwrap(), Fair);
        assert_eq!(classify_smart(1.0, Tem).unwrap(), Poor);
        assert_eq!(classify_smart(1.3, Tem).unwrap(), Reject);
        assert_eq!(classify_smart(1.39, Bias).unwrap(), Poor);
        assert_eq!(classify_smart(1.41, Bias).unwrap(), Reject);
        // Boundary values take the better class.
        assert_eq!(classify_smart(1.2, Tem).unwrap(), Poor);
        assert_eq!(classify_smart(0.4, Bias).unwrap(), Good);
        assert!(classify_smart(-0.1, Tem).is_err());
    }

    #[test]
    fn zero_error_report_is_all_good() {
        let mut recs = Vec::new();
        for e in 0..6 {
            for c in 0..10 {
                recs.push(rec(&format!("e{e}"), &format!("c{c}"), 100.0, 100.0, 100.0));
            }
        }
        let report = standardisation_report(&recs).unwrap();
        assert_eq!(report.per_enumerator.len(), 6);
        for s in report.per_enumerator.values() {
            assert_eq!(s.n_children, 10);
            assert_eq!(s.tem_class, SmartClass::Good);
            assert_eq!(s.bias_class, SmartClass::Good);
        }
    }

    #[test]
    fn csv_round_trips_both_widths() {
        let five = "enumerator_id,child_id,round1_cm,round2_cm,supervisor_cm\n\
                    e1,c1,100.5,100.7,100.2\n";
        let rows = load_standardisation_csv(five.as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].round1_dir, None);

        let seven = "enumerator_id,child_id,round1_cm,round2_cm,supervisor_cm,round1_dir,round2_dir\n\
                     e1,c1,100.5,100.7,100.2,frames/e1c1r1,frames/e1c1r2\n";
        let rows = load_standardisation_csv(seven.as_bytes()).unwrap();
        assert_eq!(rows[0].round1_dir.as_deref(), Some("frames/e1c1r1"));
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
