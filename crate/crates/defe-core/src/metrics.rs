//! Weighted physics-style evaluation: approximate median significance,
//! ROC/AUC, the selected-signal estimator, and expected discovery
//! significance.

use ndarray::ArrayView1;

use crate::data::Label;
use crate::error::{Error, Result};

/// Approximate median significance:
/// `sqrt(2·((s + b + b_regular)·ln(1 + s/(b + b_regular)) − s))`.
pub fn ams(s: f64, b: f64, b_regular: f64) -> Result<f64> {
    if s < 0.0 || b < 0.0 || b_regular < 0.0 {
        return Err(Error::Config(format!(
            "AMS arguments must be nonnegative, got s={s}, b={b}, b_regular={b_regular}"
        )));
    }
    let denom = b + b_regular;
    if denom == 0.0 {
        return Err(Error::Numeric("AMS undefined for b + b_regular = 0".into()));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let radicand = 2.0 * ((s + denom) * (s / denom).ln_1p() - s);
    // Nonnegative analytically; guard the sqrt against roundoff.
    Ok(radicand.max(0.0).sqrt())
}

/// Sum of weights over events that are true signal and predicted signal;
/// the unbiased estimate of the expected selected signal count.
pub fn selected_signal_estimate(
    labels: &[Label],
    weights: ArrayView1<f64>,
    predicted_signal: &[bool],
) -> f64 {
    labels
        .iter()
        .zip(weights.iter())
        .zip(predicted_signal)
        .filter(|((l, _), &p)| l.is_signal() && p)
        .map(|((_, &w), _)| w)
        .sum()
}

/// One ROC operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Weighted ROC curve over all distinct score thresholds, descending.
/// The first point is the empty selection (threshold +inf, rates 0);
/// the last point selects everything (rates 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Trapezoid area under the curve.
    pub fn auc(&self) -> f64 {
        let mut area = 0.0;
        for w in self.points.windows(2) {
            area += (w[1].fpr - w[0].fpr) * 0.5 * (w[0].tpr + w[1].tpr);
        }
        area
    }

    /// TSV export: `threshold\ttpr\tfpr` with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("threshold\ttpr\tfpr\n");
        for p in &self.points {
            out.push_str(&format!("{}\t{}\t{}\n", p.threshold, p.tpr, p.fpr));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line != "threshold\ttpr\tfpr" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: format!("unexpected ROC header `{line}`"),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut cells = line.split('\t');
            let mut next = |name: &str| -> Result<f64> {
                cells
                    .next()
                    .ok_or_else(|| Error::Parse {
                        line: i as u64 + 1,
                        msg: format!("missing {name} cell"),
                    })?
                    .parse()
                    .map_err(|_| Error::Parse {
                        line: i as u64 + 1,
                        msg: format!("{name} is not numeric"),
                    })
            };
            points.push(RocPoint {
                threshold: next("threshold")?,
                tpr: next("tpr")?,
                fpr: next("fpr")?,
            });
        }
        if points.is_empty() {
            return Err(Error::Parse { line: 0, msg: "empty ROC file".into() });
        }
        Ok(RocCurve { points })
    }
}

/// Weighted ROC curve. Ties in score collapse into a single threshold
/// step. Requires at least one event of each class.
pub fn roc_curve(
    scores: ArrayView1<f64>,
    labels: &[Label],
    weights: ArrayView1<f64>,
) -> Result<RocCurve> {
    let n = scores.len();
    if labels.len() != n || weights.len() != n {
        return Err(Error::Numeric(format!(
            "scores/labels/weights lengths disagree: {n}/{}/{}",
            labels.len(),
            weights.len()
        )));
    }
    let mut w_signal = 0.0;
    let mut w_background = 0.0;
    for (l, &w) in labels.iter().zip(weights.iter()) {
        if l.is_signal() {
            w_signal += w;
        } else {
            w_background += w;
        }
    }
    if w_signal == 0.0 || w_background == 0.0 {
        return Err(Error::Data("ROC needs at least one event of each class".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    let mut points = vec![RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 }];
    let mut cum_s = 0.0;
    let mut cum_b = 0.0;
    let mut idx = 0;
    while idx < n {
        let threshold = scores[order[idx]];
        // Absorb the whole tie group at this threshold.
        while idx < n && scores[order[idx]] == threshold {
            let e = order[idx];
            if labels[e].is_signal() {
                cum_s += weights[e];
            } else {
                cum_b += weights[e];
            }
            idx += 1;
        }
        points.push(RocPoint {
            threshold,
            tpr: cum_s / w_signal,
            fpr: cum_b / w_background,
        });
    }
    Ok(RocCurve { points })
}

/// Convenience: weighted AUC straight from scores.
pub fn auc(scores: ArrayView1<f64>, labels: &[Label], weights: ArrayView1<f64>) -> Result<f64> {
    Ok(roc_curve(scores, labels, weights)?.auc())
}

/// Floor applied to the expected selected background inside the
/// significance scan, keeping the logarithm finite at zero FPR.
pub const SIGNIFICANCE_B_FLOOR: f64 = 1e-6;

/// Expected discovery significance: scans all curve thresholds with
/// `s = s_exp·TPR`, `b = max(b_exp·FPR, 1e-6)` and maximizes
/// `sqrt(2·((s+b)·ln(1+s/b) − s))`. Returns the maximum in sigmas and
/// the first threshold attaining it.
pub fn discovery_significance(
    scores: ArrayView1<f64>,
    labels: &[Label],
    weights: ArrayView1<f64>,
    s_exp: f64,
    b_exp: f64,
) -> Result<(f64, f64)> {
    let curve = roc_curve(scores, labels, weights)?;
    significance_from_curve(&curve, s_exp, b_exp)
}

pub fn significance_from_curve(curve: &RocCurve, s_exp: f64, b_exp: f64) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::INFINITY);
    for p in &curve.points {
        let s = s_exp * p.tpr;
        let b = (b_exp * p.fpr).max(SIGNIFICANCE_B_FLOOR);
        let z = ams(s, b, 0.0)?;
        if z > best.0 {
            best = (z, p.threshold);
        }
    }
    Ok(best)
}

/// Best AMS over curve thresholds, with `s`/`b` the expected selected
/// class totals implied by the weighted rates.
pub fn best_ams_from_curve(
    curve: &RocCurve,
    w_signal_total: f64,
    w_background_total: f64,
    b_regular: f64,
) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::INFINITY);
    for p in &curve.points {
        let s = w_signal_total * p.tpr;
        let b = w_background_total * p.fpr;
        if b + b_regular == 0.0 {
            continue;
        }
        let value = ams(s, b, b_regular)?;
        if value > best.0 {
            best = (value, p.threshold);
        }
    }
    Ok(best)
}

/// Evaluation summary for one scored dataset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub ams_threshold: f64,
    pub ams: f64,
    pub discovery_significance_z: f64,
    pub z_threshold: f64,
    /// Expected selected signal at the best-AMS threshold.
    pub n_hat_s: f64,
    pub b_regular: f64,
}

impl MetricsReport {
    /// Flat `key = value` rendering.
    pub fn to_text(&self) -> String {
        format!(
            "auc = {}\nams_threshold = {}\nams = {}\ndiscovery_significance_z = {}\nz_threshold = {}\nn_hat_s = {}\nb_regular = {}\n",
            self.auc,
            self.ams_threshold,
            self.ams,
            self.discovery_significance_z,
            self.z_threshold,
            self.n_hat_s,
            self.b_regular
        )
    }

    /// Versioned machine-readable rendering.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value
            .as_object_mut()
            .unwrap()
            .insert("format_version".into(), serde_json::json!(1));
        serde_json::to_string_pretty(&value).expect("report serializes")
    }
}

/// Computes the full report for scored, labelled, weighted events.
pub fn compute_report(
    scores: ArrayView1<f64>,
    labels: &[Label],
    weights: ArrayView1<f64>,
    s_exp: f64,
    b_exp: f64,
    b_regular: f64,
) -> Result<(MetricsReport, RocCurve)> {
    let curve = roc_curve(scores, labels, weights)?;
    let auc = curve.auc();
    let w_signal: f64 =
        labels.iter().zip(weights).filter(|(l, _)| l.is_signal()).map(|(_, &w)| w).sum();
    let w_background: f64 =
        labels.iter().zip(weights).filter(|(l, _)| !l.is_signal()).map(|(_, &w)| w).sum();
    let (ams_value, ams_threshold) =
        best_ams_from_curve(&curve, w_signal, w_background, b_regular)?;
    let (z, z_threshold) = significance_from_curve(&curve, s_exp, b_exp)?;
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= ams_threshold).collect();
    let n_hat_s = selected_signal_estimate(labels, weights, &predicted);
    Ok((
        MetricsReport {
            auc,
            ams_threshold,
            ams: ams_value,
            discovery_significance_z: z,
            z_threshold,
            n_hat_s,
            b_regular,
        },
        curve,
    ))
}
