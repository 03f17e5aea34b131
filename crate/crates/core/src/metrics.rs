//! Binary-classification evaluation: confusion counts, TPR/FPR/ACC, RMSE,
//! exact ROC construction and trapezoidal AUC.
//!
//! "Positive" means an IED was decided/present. Every threshold comparison
//! is `score >= threshold`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} scores vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("no {0} examples; the rate is undefined")]
    DegenerateClass(&'static str),
    #[error("invalid ROC curve: {0}")]
    InvalidCurve(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rates {
    pub tpr: f64,
    pub fpr: f64,
    pub acc: f64,
}

fn check_lengths<A, B>(a: &[A], b: &[B]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

pub fn confusion(scores: &[f64], truths: &[bool], threshold: f64) -> Result<ConfusionMatrix, MetricsError> {
    check_lengths(scores, truths)?;
    let mut cm = ConfusionMatrix::default();
    for (&s, &t) in scores.iter().zip(truths) {
        match (s >= threshold, t) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

pub fn rates(cm: &ConfusionMatrix) -> Result<Rates, MetricsError> {
    if cm.positives() == 0 {
        return Err(MetricsError::DegenerateClass("positive"));
    }
    if cm.negatives() == 0 {
        return Err(MetricsError::DegenerateClass("negative"));
    }
    Ok(Rates {
        tpr: cm.tp as f64 / cm.positives() as f64,
        fpr: cm.fp as f64 / cm.negatives() as f64,
        acc: (cm.tp + cm.tn) as f64 / cm.total() as f64,
    })
}

/// Fraction of correct decisions at `threshold`; defined for single-class data.
pub fn accuracy(scores: &[f64], truths: &[bool], threshold: f64) -> Result<f64, MetricsError> {
    let cm = confusion(scores, truths, threshold)?;
    Ok((cm.tp + cm.tn) as f64 / cm.total() as f64)
}

pub fn rmse(expected: &[f64], predicted: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(expected, predicted)?;
    let sum: f64 = expected.iter().zip(predicted).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum / expected.len() as f64).sqrt())
}

/// RMSE of scores against 0/1 labels.
pub fn rmse_labels(scores: &[f64], truths: &[bool]) -> Result<f64, MetricsError> {
    let expected: Vec<f64> = truths.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect();
    rmse(&expected, scores)
}

/// ROC points `(fpr, tpr)`, sorted, from (0,0) to (1,1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    points: Vec<(f64, f64)>,
}

impl RocCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        let bad = |m: String| Err(MetricsError::InvalidCurve(m));
        if points.first() != Some(&(0.0, 0.0)) {
            return bad("must start at (0,0)".into());
        }
        if points.last() != Some(&(1.0, 1.0)) {
            return bad("must end at (1,1)".into());
        }
        for &(f, t) in &points {
            if !((0.0..=1.0).contains(&f) && (0.0..=1.0).contains(&t)) {
                return bad(format!("point ({f}, {t}) outside the unit square"));
            }
        }
        for w in points.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return bad(format!("points ({}, {}) -> ({}, {}) are not monotone", w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
        Ok(RocCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fpr", "tpr"])?;
        for &(f, t) in &self.points {
            w.write_record([f.to_string(), t.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self, MetricsError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["fpr", "tpr"] {
            return Err(MetricsError::InvalidCurve("expected header `fpr,tpr`".into()));
        }
        let mut points = Vec::new();
        for rec in r.deserialize() {
            let (f, t): (f64, f64) = rec?;
            points.push((f, t));
        }
        RocCurve::new(points)
    }
}

/// Exact ROC: one point per distinct score used as a `>=` threshold, plus a
/// threshold above the maximum.
pub fn roc(scores: &[f64], truths: &[bool]) -> Result<RocCurve, MetricsError> {
    check_lengths(scores, truths)?;
    let p = truths.iter().filter(|t| **t).count();
    let n = truths.len() - p;
    if p == 0 {
        return Err(MetricsError::DegenerateClass("positive"));
    }
    if n == 0 {
        return Err(MetricsError::DegenerateClass("negative"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truths[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    RocCurve::new(points)
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

pub fn roc_auc(scores: &[f64], truths: &[bool]) -> Result<f64, MetricsError> {
    Ok(auc(&roc(scores, truths)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_pairs() {
        let cm = confusion(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 });
        let cm = confusion(&[0.1, 0.9], &[true, false], 0.5).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 0, tn: 0, fp: 1, fn_: 1 });
        assert!(matches!(confusion(&[0.1], &[true, false], 0.5), Err(MetricsError::LengthMismatch(1, 2))));
        assert!(matches!(confusion(&[], &[], 0.5), Err(MetricsError::Empty)));
    }

    #[test]
    fn rates_by_substitution() {
        let r = rates(&ConfusionMatrix { tp: 3, fn_: 1, fp: 0, tn: 4 }).unwrap();
        assert_eq!((r.tpr, r.fpr, r.acc), (0.75, 0.0, 0.875));
        let r = rates(&ConfusionMatrix { tp: 5, fn_: 0, fp: 0, tn: 2 }).unwrap();
        assert_eq!((r.tpr, r.fpr, r.acc), (1.0, 0.0, 1.0));
        let r = rates(&ConfusionMatrix { tp: 2, fn_: 2, fp: 3, tn: 3 }).unwrap();
        assert_eq!((r.tpr, r.fpr, r.acc), (0.5, 0.5, 0.5));
        assert!(matches!(
            rates(&ConfusionMatrix { tp: 0, fn_: 0, fp: 1, tn: 1 }),
            Err(MetricsError::DegenerateClass(_))
        ));
    }

    #[test]
    fn rmse_hand_cases() {
        assert!((rmse(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(rmse(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn roc_shapes() {
        let perfect = roc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert!(perfect.points().contains(&(0.0, 1.0)));
        assert_eq!(auc(&perfect), 1.0);

        let flat = roc(&[0.5; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(flat.points(), &[(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&flat), 0.5);

        assert!(matches!(roc(&[0.1, 0.2], &[true, true]), Err(MetricsError::DegenerateClass("negative"))));
    }

    #[test]
    fn canonical_curves() {
        assert_eq!(auc(&RocCurve::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap()), 0.5);
        assert_eq!(auc(&RocCurve::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]).unwrap()), 1.0);
        assert!(RocCurve::new(vec![(0.0, 0.0), (0.5, 0.6), (0.4, 0.7), (1.0, 1.0)]).is_err());
        assert!(RocCurve::new(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let curve = roc(&[0.9, 0.3, 0.7, 0.1, 0.7], &[true, false, true, false, false]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"fpr,tpr\n"));
        assert_eq!(RocCurve::read_csv(&buf[..]).unwrap(), curve);
    }
}
