//! Risk metrics: decision accuracy, composite sensitivity / specificity,
//! relative risk ratio with its 95% interval, significance against the
//! random baseline, and risk-coverage curves.
//!
//! All aggregates are plain ratios of integer counts computed in `f64`, and
//! every report carries its raw counts so the numbers can be recomputed
//! exactly from the report alone. Undefined metrics are reported as absent
//! with a reason — never coerced to 0 or 1.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Per-instance evaluation outcome: the instance's ambiguity flag, the
/// rule's binary decision and ranking score, and (for unambiguous instances)
/// whether the selection rule was correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord<S: Scalar> {
    pub instance_id: String,
    pub ambiguous: bool,
    pub dr: u8,
    pub rule_score: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sr_correct: Option<bool>,
}

impl<S: Scalar> EvalRecord<S> {
    pub fn validate(&self) -> Result<()> {
        if self.dr > 1 {
            return Err(Error::InvalidParams(format!(
                "record {}: dr must be 0 or 1",
                self.instance_id
            )));
        }
        if self.ambiguous == self.sr_correct.is_some() {
            return Err(Error::InvalidParams(format!(
                "record {}: sr_correct must be present exactly when unambiguous",
                self.instance_id
            )));
        }
        Ok(())
    }
}

fn non_empty<S: Scalar>(records: &[EvalRecord<S>], what: &'static str) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyInput { what });
    }
    Ok(())
}

fn require_unambiguous<S: Scalar>(records: &[EvalRecord<S>], op: &'static str) -> Result<()> {
    for r in records {
        if r.ambiguous {
            return Err(Error::AmbiguousRecord { id: r.instance_id.clone(), op });
        }
    }
    Ok(())
}

fn sr(record: &EvalRecord<impl Scalar>) -> bool {
    record.sr_correct.expect("checked unambiguous")
}

/// Fraction of records where the decision matched the ambiguity flag
/// (`dr = 1` on unambiguous instances, `dr = 0` on ambiguous ones).
pub fn decision_accuracy<S: Scalar>(records: &[EvalRecord<S>]) -> Result<f64> {
    non_empty(records, "decision_accuracy records")?;
    let matches = records
        .iter()
        .filter(|r| r.dr == if r.ambiguous { 0 } else { 1 })
        .count();
    Ok(matches as f64 / records.len() as f64)
}

/// Complement of [`decision_accuracy`]; the two sum to 1 exactly.
pub fn decision_risk_rate<S: Scalar>(records: &[EvalRecord<S>]) -> Result<f64> {
    Ok(1.0 - decision_accuracy(records)?)
}

/// Arithmetic mean of the partner-RIF accuracies (the out-of-domain report).
pub fn ood_accuracy(per_rif_accuracies: &[f64]) -> Result<f64> {
    if per_rif_accuracies.is_empty() {
        return Err(Error::EmptyInput { what: "per-RIF accuracies" });
    }
    Ok(per_rif_accuracies.iter().sum::<f64>() / per_rif_accuracies.len() as f64)
}

/// P(dr = 1 | selection correct).
pub fn sensitivity<S: Scalar>(records: &[EvalRecord<S>]) -> Result<f64> {
    non_empty(records, "sensitivity records")?;
    require_unambiguous(records, "sensitivity")?;
    let correct = records.iter().filter(|r| sr(r)).count();
    if correct == 0 {
        return Err(Error::UndefinedMetric {
            metric: "sensitivity",
            reason: "no correct predictions to condition on".into(),
        });
    }
    let answered = records.iter().filter(|r| sr(r) && r.dr == 1).count();
    Ok(answered as f64 / correct as f64)
}

/// P(dr = 0 | selection incorrect).
pub fn specificity<S: Scalar>(records: &[EvalRecord<S>]) -> Result<f64> {
    non_empty(records, "specificity records")?;
    require_unambiguous(records, "specificity")?;
    let incorrect = records.iter().filter(|r| !sr(r)).count();
    if incorrect == 0 {
        return Err(Error::UndefinedMetric {
            metric: "specificity",
            reason: "no incorrect predictions to condition on".into(),
        });
    }
    let abstained = records.iter().filter(|r| !sr(r) && r.dr == 0).count();
    Ok(abstained as f64 / incorrect as f64)
}

/// Fraction of records carrying composite risk: abstaining on a correct
/// selection, or answering on an incorrect one.
pub fn composite_risk_rate<S: Scalar>(records: &[EvalRecord<S>]) -> Result<f64> {
    non_empty(records, "composite records")?;
    require_unambiguous(records, "composite_risk_rate")?;
    let risky = records
        .iter()
        .filter(|r| (r.dr == 0 && sr(r)) || (r.dr == 1 && !sr(r)))
        .count();
    Ok(risky as f64 / records.len() as f64)
}

/// 2×2 table of decisions against selection correctness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub answered_correct: usize,
    pub answered_incorrect: usize,
    pub abstained_correct: usize,
    pub abstained_incorrect: usize,
}

impl Counts {
    pub fn from_records<S: Scalar>(records: &[EvalRecord<S>]) -> Result<Counts> {
        non_empty(records, "count records")?;
        require_unambiguous(records, "counts")?;
        let mut counts = Counts {
            answered_correct: 0,
            answered_incorrect: 0,
            abstained_correct: 0,
            abstained_incorrect: 0,
        };
        for r in records {
            match (r.dr, sr(r)) {
                (1, true) => counts.answered_correct += 1,
                (1, false) => counts.answered_incorrect += 1,
                (0, true) => counts.abstained_correct += 1,
                (0, false) => counts.abstained_incorrect += 1,
                _ => unreachable!("dr validated to 0/1"),
            }
        }
        Ok(counts)
    }

    pub fn n(&self) -> usize {
        self.answered_correct + self.answered_incorrect + self.abstained_correct + self.abstained_incorrect
    }

    pub fn answered(&self) -> usize {
        self.answered_correct + self.answered_incorrect
    }

    pub fn abstained(&self) -> usize {
        self.abstained_correct + self.abstained_incorrect
    }
}

/// Relative risk ratio and its 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRatio {
    pub rrr: f64,
    /// Absent when the log-method interval is undefined (zero numerator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci95: Option<(f64, f64)>,
}

impl RiskRatio {
    /// True when the ratio is significantly below 1 at the 95% level.
    pub fn significantly_below_one(&self) -> bool {
        matches!(self.ci95, Some((_, high)) if high < 1.0)
    }
}

/// P(incorrect | answered) / P(correct | abstained), with a log-method 95%
/// interval from the 2×2 counts:
/// `SE = sqrt(1/a - 1/n1 + 1/c - 1/n0)`, `CI = exp(ln RRR ± 1.96 SE)` where
/// `a` counts answered-incorrect and `c` abstained-correct.
pub fn relative_risk_ratio<S: Scalar>(records: &[EvalRecord<S>]) -> Result<RiskRatio> {
    relative_risk_ratio_from_counts(&Counts::from_records(records)?)
}

pub fn relative_risk_ratio_from_counts(counts: &Counts) -> Result<RiskRatio> {
    let a = counts.answered_incorrect;
    let n1 = counts.answered();
    let c = counts.abstained_correct;
    let n0 = counts.abstained();
    if n1 == 0 {
        return Err(Error::UndefinedMetric {
            metric: "relative_risk_ratio",
            reason: "no answered records (dr=1 count is 0)".into(),
        });
    }
    if n0 == 0 {
        return Err(Error::UndefinedMetric {
            metric: "relative_risk_ratio",
            reason: "no abstained records (dr=0 count is 0)".into(),
        });
    }
    if c == 0 {
        return Err(Error::UndefinedMetric {
            metric: "relative_risk_ratio",
            reason: "denominator P(correct | abstained) is 0 (abstained-correct count is 0)".into(),
        });
    }
    let rrr = (a as f64 / n1 as f64) / (c as f64 / n0 as f64);
    if a == 0 {
        return Ok(RiskRatio { rrr: 0.0, ci95: None });
    }
    let se = (1.0 / a as f64 - 1.0 / n1 as f64 + 1.0 / c as f64 - 1.0 / n0 as f64).sqrt();
    let half = 1.96 * se;
    let log_rrr = rrr.ln();
    Ok(RiskRatio { rrr, ci95: Some(((log_rrr - half).exp(), (log_rrr + half).exp())) })
}

/// The conventional epidemiological ratio
/// P(incorrect | answered) / P(incorrect | abstained), offered alongside the
/// primary definition for comparison.
pub fn relative_risk_ratio_conventional(counts: &Counts) -> Result<RiskRatio> {
    let a = counts.answered_incorrect;
    let n1 = counts.answered();
    let b = counts.abstained_incorrect;
    let n0 = counts.abstained();
    if n1 == 0 || n0 == 0 {
        return Err(Error::UndefinedMetric {
            metric: "relative_risk_ratio_conventional",
            reason: "one decision arm is empty".into(),
        });
    }
    if b == 0 {
        return Err(Error::UndefinedMetric {
            metric: "relative_risk_ratio_conventional",
            reason: "denominator P(incorrect | abstained) is 0".into(),
        });
    }
    let rrr = (a as f64 / n1 as f64) / (b as f64 / n0 as f64);
    if a == 0 {
        return Ok(RiskRatio { rrr: 0.0, ci95: None });
    }
    let se = (1.0 / a as f64 - 1.0 / n1 as f64 + 1.0 / b as f64 - 1.0 / n0 as f64).sqrt();
    let half = 1.96 * se;
    Ok(RiskRatio { rrr, ci95: Some(((rrr.ln() - half).exp(), (rrr.ln() + half).exp())) })
}

/// Confidence level at which an accuracy differs from the random baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Significance {
    None,
    P90,
    P95,
    P99,
}

impl Significance {
    /// The usual star notation: "", "*", "**", "***".
    pub fn stars(&self) -> &'static str {
        match self {
            Significance::None => "",
            Significance::P90 => "*",
            Significance::P95 => "**",
            Significance::P99 => "***",
        }
    }
}

/// Two-sided two-proportion z-test with pooled variance; returns the highest
/// of the 90/95/99 levels whose critical value is exceeded.
pub fn significance_vs_random(
    acc: f64,
    acc_random: f64,
    n: usize,
    n_random: usize,
) -> Result<Significance> {
    if n == 0 || n_random == 0 {
        return Err(Error::UndefinedMetric {
            metric: "significance_vs_random",
            reason: "zero sample size".into(),
        });
    }
    let pooled = (acc * n as f64 + acc_random * n_random as f64) / (n + n_random) as f64;
    let variance = pooled * (1.0 - pooled) * (1.0 / n as f64 + 1.0 / n_random as f64);
    if variance <= 0.0 {
        // Degenerate pooled proportion: both accuracies equal 0 or 1.
        return Ok(Significance::None);
    }
    let z = (acc - acc_random).abs() / variance.sqrt();
    Ok(if z > 2.576 {
        Significance::P99
    } else if z > 1.960 {
        Significance::P95
    } else if z > 1.645 {
        Significance::P90
    } else {
        Significance::None
    })
}

/// Exact-test alternative for small samples: a two-sided binomial test of
/// the observed match count against the random baseline's accuracy as the
/// null proportion (summing all outcomes no more probable than the observed
/// one).
pub fn significance_vs_random_exact(
    matches: usize,
    n: usize,
    acc_random: f64,
) -> Result<Significance> {
    if n == 0 || matches > n {
        return Err(Error::UndefinedMetric {
            metric: "significance_vs_random_exact",
            reason: "invalid counts".into(),
        });
    }
    if !(0.0..=1.0).contains(&acc_random) {
        return Err(Error::UndefinedMetric {
            metric: "significance_vs_random_exact",
            reason: "null proportion outside [0, 1]".into(),
        });
    }
    if acc_random == 0.0 || acc_random == 1.0 {
        let trivially_null = (acc_random == 0.0 && matches == 0) || (acc_random == 1.0 && matches == n);
        return Ok(if trivially_null { Significance::None } else { Significance::P99 });
    }

    // log PMF via a cumulative log-factorial table; n stays small by contract.
    let mut log_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        log_fact[i] = log_fact[i - 1] + (i as f64).ln();
    }
    let log_pmf = |k: usize| -> f64 {
        log_fact[n] - log_fact[k] - log_fact[n - k]
            + k as f64 * acc_random.ln()
            + (n - k) as f64 * (1.0 - acc_random).ln()
    };
    let observed = log_pmf(matches);
    let mut p = 0.0;
    for k in 0..=n {
        let lp = log_pmf(k);
        if lp <= observed + 1e-12 {
            p += lp.exp();
        }
    }
    let p = p.min(1.0);
    Ok(if p < 0.01 {
        Significance::P99
    } else if p < 0.05 {
        Significance::P95
    } else if p < 0.10 {
        Significance::P90
    } else {
        Significance::None
    })
}

/// One point on a risk-coverage curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub coverage: f64,
    pub risk: f64,
    pub threshold: f64,
}

/// Risk-coverage curve: records sorted by rule score descending (ties broken
/// by instance id so the curve is deterministic), one point per prefix. The
/// final point's risk is the overall error rate exactly.
pub fn risk_coverage<S: Scalar>(records: &[EvalRecord<S>]) -> Result<Vec<CurvePoint>> {
    non_empty(records, "risk-coverage records")?;
    require_unambiguous(records, "risk_coverage")?;
    for r in records {
        if !r.rule_score.is_finite() {
            return Err(Error::InvalidParams(format!(
                "record {}: non-finite rule score",
                r.instance_id
            )));
        }
    }
    let mut ordered: Vec<&EvalRecord<S>> = records.iter().collect();
    ordered.sort_by(|a, b| {
        b.rule_score
            .partial_cmp(&a.rule_score)
            .expect("scores checked finite")
            .then_with(|| a.instance_id.cmp(&b.instance_id))
    });
    let n = ordered.len();
    let mut errors = 0usize;
    let mut points = Vec::with_capacity(n);
    for (k, record) in ordered.iter().enumerate() {
        if !sr(record) {
            errors += 1;
        }
        points.push(CurvePoint {
            coverage: (k + 1) as f64 / n as f64,
            risk: errors as f64 / (k + 1) as f64,
            threshold: record.rule_score.to_f64().expect("finite score"),
        });
    }
    Ok(points)
}

/// How a possibly-undefined metric is reported: a value, or a reason why not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedMetric {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absent_reason: Option<String>,
}

impl ReportedMetric {
    pub fn from_result(result: Result<f64>) -> Result<Self> {
        match result {
            Ok(value) => Ok(ReportedMetric { value: Some(value), absent_reason: None }),
            Err(Error::UndefinedMetric { reason, .. }) => {
                Ok(ReportedMetric { value: None, absent_reason: Some(reason) })
            }
            Err(other) => Err(other),
        }
    }
}

/// Composite-risk report: sensitivity, specificity, the risk ratio, the
/// composite risk rate, and the raw 2×2 counts they all derive from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub n: usize,
    pub counts: Counts,
    pub sensitivity: ReportedMetric,
    pub specificity: ReportedMetric,
    pub rrr: ReportedMetric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrr_ci95: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrr_absent_reason: Option<String>,
    pub composite_risk_rate: ReportedMetric,
}

impl CompositeReport {
    pub fn from_records<S: Scalar>(records: &[EvalRecord<S>]) -> Result<CompositeReport> {
        let counts = Counts::from_records(records)?;
        Self::from_counts(&counts)
    }

    /// Builds the report from the 2×2 table alone; this is the same
    /// arithmetic the per-record functions use, which keeps reports exactly
    /// recomputable from their embedded counts.
    pub fn from_counts(counts: &Counts) -> Result<CompositeReport> {
        let n = counts.n();
        if n == 0 {
            return Err(Error::EmptyInput { what: "composite counts" });
        }
        let correct = counts.answered_correct + counts.abstained_correct;
        let incorrect = n - correct;
        let sensitivity = ReportedMetric::from_result(if correct == 0 {
            Err(Error::UndefinedMetric {
                metric: "sensitivity",
                reason: "no correct predictions to condition on".into(),
            })
        } else {
            Ok(counts.answered_correct as f64 / correct as f64)
        })?;
        let specificity = ReportedMetric::from_result(if incorrect == 0 {
            Err(Error::UndefinedMetric {
                metric: "specificity",
                reason: "no incorrect predictions to condition on".into(),
            })
        } else {
            Ok(counts.abstained_incorrect as f64 / incorrect as f64)
        })?;
        let (rrr, rrr_ci95, rrr_absent_reason) = match relative_risk_ratio_from_counts(counts) {
            Ok(ratio) => (
                ReportedMetric { value: Some(ratio.rrr), absent_reason: None },
                ratio.ci95,
                None,
            ),
            Err(Error::UndefinedMetric { reason, .. }) => (
                ReportedMetric { value: None, absent_reason: Some(reason.clone()) },
                None,
                Some(reason),
            ),
            Err(other) => return Err(other),
        };
        let composite = (counts.abstained_correct + counts.answered_incorrect) as f64 / n as f64;
        Ok(CompositeReport {
            n,
            counts: *counts,
            sensitivity,
            specificity,
            rrr,
            rrr_ci95,
            rrr_absent_reason,
            composite_risk_rate: ReportedMetric { value: Some(composite), absent_reason: None },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, ambiguous: bool, dr: u8, score: f64, sr_correct: Option<bool>) -> EvalRecord<f64> {
        EvalRecord { instance_id: id.into(), ambiguous, dr, rule_score: score, sr_correct }
    }

    /// The 2×2 example table: a=2, n1=10, c=4, n0=10.
    fn example_records() -> Vec<EvalRecord<f64>> {
        let mut records = Vec::new();
        for i in 0..8 {
            records.push(record(&format!("ac{i}"), false, 1, 0.9, Some(true)));
        }
        for i in 0..2 {
            records.push(record(&format!("ai{i}"), false, 1, 0.8, Some(false)));
        }
        for i in 0..4 {
            records.push(record(&format!("bc{i}"), false, 0, 0.2, Some(true)));
        }
        for i in 0..6 {
            records.push(record(&format!("bi{i}"), false, 0, 0.1, Some(false)));
        }
        records
    }

    #[test]
    fn decision_accuracy_hand_count() {
        let records = vec![
            record("a", false, 1, 0.9, Some(true)),
            record("b", false, 0, 0.1, Some(true)),
            record("c", true, 0, 0.1, None),
            record("d", true, 1, 0.9, None),
        ];
        assert_eq!(decision_accuracy(&records).unwrap(), 0.5);
        assert_eq!(decision_risk_rate(&records).unwrap() + decision_accuracy(&records).unwrap(), 1.0);

        let all_matched: Vec<_> = records
            .iter()
            .cloned()
            .map(|mut r| {
                r.dr = if r.ambiguous { 0 } else { 1 };
                r
            })
            .collect();
        assert_eq!(decision_accuracy(&all_matched).unwrap(), 1.0);
        assert!(decision_accuracy::<f64>(&[]).is_err());
    }

    #[test]
    fn ood_accuracy_is_mean() {
        assert_eq!(ood_accuracy(&[0.8, 0.6]).unwrap(), 0.7);
        assert_eq!(ood_accuracy(&[0.5, 0.5]).unwrap(), 0.5);
        assert!(ood_accuracy(&[]).is_err());
    }

    #[test]
    fn sensitivity_hand_counts() {
        // 10 correct, 8 of them answered.
        let mut records = Vec::new();
        for i in 0..10 {
            records.push(record(&format!("c{i}"), false, if i < 8 { 1 } else { 0 }, 0.5, Some(true)));
        }
        for i in 0..5 {
            records.push(record(&format!("w{i}"), false, 1, 0.5, Some(false)));
        }
        assert_eq!(sensitivity(&records).unwrap(), 0.8);

        let all_answered: Vec<_> = (0..4)
            .map(|i| record(&format!("x{i}"), false, 1, 0.5, Some(true)))
            .collect();
        assert_eq!(sensitivity(&all_answered).unwrap(), 1.0);

        let no_correct = vec![record("z", false, 1, 0.5, Some(false))];
        assert!(matches!(sensitivity(&no_correct), Err(Error::UndefinedMetric { .. })));
    }

    #[test]
    fn specificity_hand_counts() {
        // 5 incorrect, 2 abstained.
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(record(&format!("w{i}"), false, if i < 2 { 0 } else { 1 }, 0.5, Some(false)));
        }
        records.push(record("c", false, 1, 0.5, Some(true)));
        assert_eq!(specificity(&records).unwrap(), 0.4);

        let all_answered: Vec<_> = (0..3)
            .map(|i| record(&format!("x{i}"), false, 1, 0.5, Some(false)))
            .collect();
        assert_eq!(specificity(&all_answered).unwrap(), 0.0);

        let no_incorrect = vec![record("z", false, 1, 0.5, Some(true))];
        assert!(matches!(specificity(&no_incorrect), Err(Error::UndefinedMetric { .. })));
    }

    #[test]
    fn ambiguous_records_rejected_by_composite_metrics() {
        let records = vec![record("a", true, 0, 0.1, None)];
        assert!(matches!(sensitivity(&records), Err(Error::AmbiguousRecord { .. })));
        assert!(matches!(specificity(&records), Err(Error::AmbiguousRecord { .. })));
        assert!(matches!(composite_risk_rate(&records), Err(Error::AmbiguousRecord { .. })));
        assert!(matches!(risk_coverage(&records), Err(Error::AmbiguousRecord { .. })));
    }

    #[test]
    fn rrr_example_table() {
        let ratio = relative_risk_ratio(&example_records()).unwrap();
        assert_eq!(ratio.rrr, 0.5);
        // Hand-derived log-method interval:
        // SE = sqrt(1/2 - 1/10 + 1/4 - 1/10) = sqrt(0.55)
        // CI = exp(ln 0.5 ∓ 1.96*SE) = (0.116867, 2.139191)
        let (low, high) = ratio.ci95.unwrap();
        assert!((low - 0.116867).abs() < 1e-3);
        assert!((high - 2.139191).abs() < 1e-3);
        assert!(!ratio.significantly_below_one());
    }

    #[test]
    fn rrr_zero_numerator_and_undefined_cases() {
        let counts =
            Counts { answered_correct: 10, answered_incorrect: 0, abstained_correct: 4, abstained_incorrect: 6 };
        let ratio = relative_risk_ratio_from_counts(&counts).unwrap();
        assert_eq!(ratio.rrr, 0.0);
        assert!(ratio.ci95.is_none());

        let no_abstain =
            Counts { answered_correct: 5, answered_incorrect: 5, abstained_correct: 0, abstained_incorrect: 0 };
        assert!(matches!(
            relative_risk_ratio_from_counts(&no_abstain),
            Err(Error::UndefinedMetric { .. })
        ));
        let zero_denominator =
            Counts { answered_correct: 5, answered_incorrect: 5, abstained_correct: 0, abstained_incorrect: 3 };
        assert!(matches!(
            relative_risk_ratio_from_counts(&zero_denominator),
            Err(Error::UndefinedMetric { .. })
        ));
    }

    #[test]
    fn conventional_variant_differs() {
        let counts =
            Counts { answered_correct: 8, answered_incorrect: 2, abstained_correct: 4, abstained_incorrect: 6 };
        let literal = relative_risk_ratio_from_counts(&counts).unwrap();
        let conventional = relative_risk_ratio_conventional(&counts).unwrap();
        assert_eq!(literal.rrr, 0.5);
        assert!((conventional.rrr - 0.2 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn significance_examples() {
        assert_eq!(significance_vs_random(0.75, 0.50, 200, 200).unwrap(), Significance::P99);
        assert_eq!(significance_vs_random(0.50, 0.50, 100, 100).unwrap(), Significance::None);
        assert_eq!(significance_vs_random(0.53, 0.50, 100, 100).unwrap(), Significance::None);
        // Degenerate pooled proportion with equal accuracies.
        assert_eq!(significance_vs_random(1.0, 1.0, 50, 50).unwrap(), Significance::None);
        assert_eq!(Significance::P99.stars(), "***");
    }

    #[test]
    fn exact_binomial_gauge() {
        // 75 of 100 vs null 0.5: p ≈ 6e-7, clearly past 99%.
        assert_eq!(significance_vs_random_exact(75, 100, 0.5).unwrap(), Significance::P99);
        // 53 of 100 vs null 0.5: far from significant.
        assert_eq!(significance_vs_random_exact(53, 100, 0.5).unwrap(), Significance::None);
    }

    #[test]
    fn risk_coverage_hand_curve() {
        let records = vec![
            record("a", false, 1, 0.9, Some(true)),
            record("b", false, 1, 0.8, Some(true)),
            record("c", false, 1, 0.7, Some(false)),
            record("d", false, 1, 0.6, Some(true)),
        ];
        let curve = risk_coverage(&records).unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[1].coverage, 0.5);
        assert_eq!(curve[1].risk, 0.0);
        assert_eq!(curve[3].coverage, 1.0);
        assert_eq!(curve[3].risk, 0.25);

        let all_correct: Vec<_> = (0..5)
            .map(|i| record(&format!("x{i}"), false, 1, 0.5, Some(true)))
            .collect();
        assert!(risk_coverage(&all_correct).unwrap().iter().all(|p| p.risk == 0.0));
    }

    #[test]
    fn risk_coverage_deterministic_under_ties() {
        let records = vec![
            record("b", false, 1, 0.5, Some(false)),
            record("a", false, 1, 0.5, Some(true)),
        ];
        let curve = risk_coverage(&records).unwrap();
        // Tie broken by id: "a" (correct) first.
        assert_eq!(curve[0].risk, 0.0);
        assert_eq!(curve[1].risk, 0.5);
    }

    #[test]
    fn composite_rate_hand_counts() {
        assert_eq!(composite_risk_rate(&example_records()).unwrap(), 0.3);

        // Perfect rule: answer iff correct.
        let perfect = vec![
            record("a", false, 1, 0.9, Some(true)),
            record("b", false, 0, 0.1, Some(false)),
        ];
        assert_eq!(composite_risk_rate(&perfect).unwrap(), 0.0);

        // Always answer: composite rate equals the error rate.
        let always: Vec<_> = (0..10)
            .map(|i| record(&format!("x{i}"), false, 1, 0.9, Some(i % 4 != 0)))
            .collect();
        let expected_errors = (0..10).filter(|i| i % 4 == 0).count();
        assert_eq!(
            composite_risk_rate(&always).unwrap(),
            expected_errors as f64 / 10.0
        );
    }

    #[test]
    fn report_recomputable_from_counts() {
        let records = example_records();
        let report = CompositeReport::from_records(&records).unwrap();
        assert_eq!(report.n, 20);
        assert_eq!(report.counts.n(), report.n);
        assert_eq!(report.sensitivity.value, Some(sensitivity(&records).unwrap()));
        assert_eq!(report.specificity.value, Some(specificity(&records).unwrap()));
        assert_eq!(report.rrr.value, Some(relative_risk_ratio(&records).unwrap().rrr));
        assert_eq!(
            report.composite_risk_rate.value,
            Some(composite_risk_rate(&records).unwrap())
        );
        let recomputed = CompositeReport::from_counts(&report.counts).unwrap();
        assert_eq!(recomputed, report);
    }

    #[test]
    fn all_correct_model_reports_absent_specificity() {
        let records: Vec<_> = (0..6)
            .map(|i| record(&format!("x{i}"), false, 1, 0.9, Some(true)))
            .collect();
        let report = CompositeReport::from_records(&records).unwrap();
        assert!(report.specificity.value.is_none());
        assert!(report.specificity.absent_reason.is_some());
        assert!(report.rrr.value.is_none());
    }

    proptest! {
        /// Reordering and renaming ids leaves the aggregate metrics unchanged.
        #[test]
        fn reorder_and_rename_invariance(
            flags in proptest::collection::vec((0u8..2, proptest::bool::ANY), 4..40),
            rot in 1usize..7,
        ) {
            let records: Vec<EvalRecord<f64>> = flags
                .iter()
                .enumerate()
                .map(|(i, &(dr, correct))| record(&format!("r{i}"), false, dr, 0.5, Some(correct)))
                .collect();
            prop_assume!(records.iter().any(|r| r.sr_correct == Some(true)));
            prop_assume!(records.iter().any(|r| r.sr_correct == Some(false)));

            let mut shuffled = records.clone();
            shuffled.rotate_left(rot % shuffled.len());
            for (i, r) in shuffled.iter_mut().enumerate() {
                r.instance_id = format!("renamed{i}");
            }
            prop_assert_eq!(sensitivity(&records).unwrap(), sensitivity(&shuffled).unwrap());
            prop_assert_eq!(specificity(&records).unwrap(), specificity(&shuffled).unwrap());
            prop_assert_eq!(
                composite_risk_rate(&records).unwrap(),
                composite_risk_rate(&shuffled).unwrap()
            );
            prop_assert_eq!(
                decision_accuracy(&records).unwrap(),
                decision_accuracy(&shuffled).unwrap()
            );
        }

        /// Coverage values are exactly {1/n, ..., 1} and the endpoint matches
        /// the overall error rate.
        #[test]
        fn coverage_grid_and_endpoint(
            outcomes in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 1..60),
        ) {
            let records: Vec<EvalRecord<f64>> = outcomes
                .iter()
                .enumerate()
                .map(|(i, &(score, correct))| record(&format!("r{i}"), false, 1, score, Some(correct)))
                .collect();
            let curve = risk_coverage(&records).unwrap();
            let n = records.len();
            for (k, point) in curve.iter().enumerate() {
                prop_assert_eq!(point.coverage, (k + 1) as f64 / n as f64);
            }
            let errors = records.iter().filter(|r| r.sr_correct == Some(false)).count();
            prop_assert_eq!(curve.last().unwrap().risk, errors as f64 / n as f64);
        }
    }
}
