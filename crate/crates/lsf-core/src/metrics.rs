//! Imbalance-aware binary classification metrics: average precision (the
//! threshold-weighted sum, no trapezoidal interpolation), ROC with
//! trapezoidal AUC, and confusion-matrix scalars at a fixed threshold.
//!
//! Equal scores are processed as one threshold group, so every metric is
//! invariant under permutations of tied items.

use std::fmt;

#[derive(Debug)]
pub enum MetricError {
    LengthMismatch { scores: usize, labels: usize },
    Empty,
    /// Metric needs both classes (or at least one positive) to be defined.
    Undefined(&'static str),
    NonFiniteScore,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LengthMismatch { scores, labels } => {
                write!(f, "{scores} scores vs {labels} labels")
            }
            Self::Empty => write!(f, "no predictions"),
            Self::Undefined(which) => write!(f, "{which} undefined for this label set"),
            Self::NonFiniteScore => write!(f, "non-finite score"),
        }
    }
}

impl std::error::Error for MetricError {}

/// Continuous scores (higher = more positive) paired with binary labels.
#[derive(Debug, Clone)]
pub struct ScoredPredictions {
    scores: Vec<f64>,
    labels: Vec<bool>,
    n_pos: usize,
    n_neg: usize,
}

impl ScoredPredictions {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, MetricError> {
        if scores.len() != labels.len() {
            return Err(MetricError::LengthMismatch {
                scores: scores.len(),
                labels: labels.len(),
            });
        }
        if scores.is_empty() {
            return Err(MetricError::Empty);
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(MetricError::NonFiniteScore);
        }
        let n_pos = labels.iter().filter(|&&l| l).count();
        let n_neg = labels.len() - n_pos;
        Ok(Self {
            scores,
            labels,
            n_pos,
            n_neg,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
    pub fn n_pos(&self) -> usize {
        self.n_pos
    }
    pub fn n_neg(&self) -> usize {
        self.n_neg
    }
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    /// Distinct score thresholds, descending, with cumulative (tp, fp) counts
    /// after each threshold group crosses.
    fn threshold_groups(&self) -> Vec<(f64, usize, usize)> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&i, &j| self.scores[j].partial_cmp(&self.scores[i]).unwrap());
        let mut groups = Vec::new();
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut idx = 0usize;
        while idx < order.len() {
            let threshold = self.scores[order[idx]];
            while idx < order.len() && self.scores[order[idx]] == threshold {
                if self.labels[order[idx]] {
                    tp += 1;
                } else {
                    fp += 1;
                }
                idx += 1;
            }
            groups.push((threshold, tp, fp));
        }
        groups
    }
}

/// One point of a precision-recall curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One point of an ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Average precision: precision at each threshold weighted by the recall
/// increment from the previous threshold.
pub fn ap_score(preds: &ScoredPredictions) -> Result<f64, MetricError> {
    Ok(pr_curve(preds)?.0)
}

/// AP plus the full precision-recall curve (one point per distinct score).
pub fn pr_curve(preds: &ScoredPredictions) -> Result<(f64, Vec<PrPoint>), MetricError> {
    if preds.n_pos == 0 {
        return Err(MetricError::Undefined("average precision"));
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    let mut points = Vec::new();
    for (threshold, tp, fp) in preds.threshold_groups() {
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / preds.n_pos as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            threshold,
            precision,
            recall,
        });
    }
    Ok((ap, points))
}

/// Trapezoidal area under the ROC curve plus the curve itself. Tied scores
/// form single segments, so an all-ties instance scores exactly 0.5.
pub fn roc_auc(preds: &ScoredPredictions) -> Result<(f64, Vec<RocPoint>), MetricError> {
    if preds.n_pos == 0 || preds.n_neg == 0 {
        return Err(MetricError::Undefined("roc auc"));
    }
    let mut auc = 0.0;
    let mut prev_fpr = 0.0;
    let mut prev_tpr = 0.0;
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    for (threshold, tp, fp) in preds.threshold_groups() {
        let tpr = tp as f64 / preds.n_pos as f64;
        let fpr = fp as f64 / preds.n_neg as f64;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
        points.push(RocPoint {
            threshold,
            fpr,
            tpr,
        });
    }
    Ok((auc, points))
}

/// Confusion-matrix scalars at a threshold (predicted positive iff
/// score > threshold). Ratios with a zero denominator come back `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMetrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
}

pub fn scalar_metrics(preds: &ScoredPredictions, threshold: f64) -> ScalarMetrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in preds.scores.iter().zip(&preds.labels) {
        match (s > threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    ScalarMetrics {
        tp,
        fp,
        tn,
        fn_,
        accuracy: ratio(tp + tn, tp + fp + tn + fn_),
        recall: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        precision: ratio(tp, tp + fp),
    }
}

/// Full evaluation bundle for one model on one test set.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub ap: f64,
    pub auc_roc: f64,
    pub scalars: ScalarMetrics,
    pub threshold: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub pr_points: Vec<PrPoint>,
    pub roc_points: Vec<RocPoint>,
}

/// Evaluate scores against labels at the given operating threshold.
pub fn evaluate(preds: &ScoredPredictions, threshold: f64) -> Result<EvalReport, MetricError> {
    let (ap, pr_points) = pr_curve(preds)?;
    let (auc_roc, roc_points) = roc_auc(preds)?;
    Ok(EvalReport {
        ap,
        auc_roc,
        scalars: scalar_metrics(preds, threshold),
        threshold,
        n_pos: preds.n_pos,
        n_neg: preds.n_neg,
        pr_points,
        roc_points,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.6}"),
        None => "undefined".to_string(),
    }
}

impl EvalReport {
    /// Structured text rendering (stable across runs for identical inputs).
    pub fn to_text(&self) -> String {
        let s = &self.scalars;
        format!(
            "lsf-eval 1\nthreshold {}\nn_pos {}\nn_neg {}\nap {:.6}\nauc_roc {:.6}\n\
             accuracy {}\nrecall {}\nspecificity {}\nprecision {}\ntp {}\nfp {}\ntn {}\nfn {}\n",
            self.threshold,
            self.n_pos,
            self.n_neg,
            self.ap,
            self.auc_roc,
            fmt_opt(s.accuracy),
            fmt_opt(s.recall),
            fmt_opt(s.specificity),
            fmt_opt(s.precision),
            s.tp,
            s.fp,
            s.tn,
            s.fn_,
        )
    }

    pub fn pr_csv(&self) -> String {
        let mut out = String::from("threshold,precision,recall\n");
        for p in &self.pr_points {
            out.push_str(&format!("{},{:.6},{:.6}\n", p.threshold, p.precision, p.recall));
        }
        out
    }

    pub fn roc_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.roc_points {
            out.push_str(&format!("{},{:.6},{:.6}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}
