//! Core domain types: instances, benchmarks, confidence sets, and the
//! argmax selection rule.
//!
//! Everything here is immutable after construction and validated at the
//! boundary, so downstream code can rely on the invariants without
//! re-checking.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::scalar::{cast, Scalar};
use crate::Result;

/// Sum-to-one tolerance accepted on confidence ingestion. Anything further
/// off is rejected rather than silently renormalized, since a large drift
/// usually means an upstream elicitation bug.
pub const CONFIDENCE_SUM_TOLERANCE: f64 = 1e-6;

/// Where an instance came from, and which risk injection (if any) produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_benchmark: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied_rif: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub donor_id: Option<String>,
}

/// One multi-choice inference task.
///
/// `ambiguous == true` if and only if `answer_index` is absent: ambiguous
/// instances have no ground-truth answer (they are normally manufactured by
/// a risk injection function).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub prompt: String,
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_index: Option<usize>,
    pub ambiguous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Instance {
    /// Builds a risk-free (unambiguous) instance with a known answer.
    pub fn risk_free(
        id: impl Into<String>,
        prompt: impl Into<String>,
        choices: Vec<String>,
        answer_index: usize,
    ) -> Result<Self> {
        let instance = Instance {
            id: id.into(),
            prompt: prompt.into(),
            choices,
            answer_index: Some(answer_index),
            ambiguous: false,
            provenance: None,
        };
        instance.validate()?;
        Ok(instance)
    }

    /// Number of candidate choices.
    pub fn cardinality(&self) -> usize {
        self.choices.len()
    }

    /// Checks the structural invariants, returning the violation if any.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidInstance { id: self.id.clone(), reason };
        if self.choices.len() < 2 {
            return Err(fail(format!("needs at least 2 choices, has {}", self.choices.len())));
        }
        if self.ambiguous != self.answer_index.is_none() {
            return Err(fail("ambiguous flag must match an absent answer_index".into()));
        }
        if let Some(idx) = self.answer_index {
            if idx >= self.choices.len() {
                return Err(fail(format!(
                    "answer_index {idx} out of range for {} choices",
                    self.choices.len()
                )));
            }
        }
        if !self.ambiguous {
            if self.choices.iter().any(|c| c.is_empty()) {
                return Err(fail("risk-free instances may not have empty choices".into()));
            }
            for (i, a) in self.choices.iter().enumerate() {
                if self.choices[..i].contains(a) {
                    return Err(fail(format!("duplicate choice text {a:?}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Validation => write!(f, "validation"),
        }
    }
}

/// A multi-choice benchmark: instances with one fixed choice cardinality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub name: String,
    pub cardinality: usize,
    pub split: Split,
    pub instances: Vec<Instance>,
}

impl Benchmark {
    pub fn new(name: impl Into<String>, split: Split, instances: Vec<Instance>) -> Result<Self> {
        let name = name.into();
        let first = instances
            .first()
            .ok_or_else(|| Error::InvalidBenchmark { name: name.clone(), reason: "no instances".into() })?;
        let cardinality = first.cardinality();
        let mut seen = std::collections::HashSet::new();
        for instance in &instances {
            instance.validate()?;
            if instance.cardinality() != cardinality {
                return Err(Error::InvalidBenchmark {
                    name,
                    reason: format!(
                        "instance {} has {} choices; benchmark cardinality is {cardinality}",
                        instance.id,
                        instance.cardinality()
                    ),
                });
            }
            if !seen.insert(instance.id.as_str()) {
                return Err(Error::InvalidBenchmark {
                    name: name.clone(),
                    reason: format!("duplicate instance id {}", instance.id),
                });
            }
        }
        drop(seen);
        Ok(Benchmark { name, cardinality, split, instances })
    }
}

/// Per-choice confidence scores for one instance, normalized to sum to 1.
///
/// Construction is the validation point: a `ConfidenceSet` that exists is
/// finite, in `[0, 1]` elementwise, and normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet<S: Scalar> {
    instance_id: String,
    values: Vec<S>,
}

impl<S: Scalar> ConfidenceSet<S> {
    /// Ingests confidence values that are expected to already sum to 1.
    ///
    /// Values must lie in `[0, 1]` and sum to 1 within
    /// [`CONFIDENCE_SUM_TOLERANCE`]; the stored values are renormalized so the
    /// sum is exactly 1 up to float rounding. Renormalization is idempotent.
    pub fn new(instance_id: impl Into<String>, values: Vec<S>) -> Result<Self> {
        let instance_id = instance_id.into();
        if values.len() < 2 {
            return Err(Error::InvalidInstance {
                id: instance_id,
                reason: format!("confidence set needs at least 2 values, has {}", values.len()),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < S::zero() || v > S::one() {
                return Err(Error::ConfidenceValue {
                    id: instance_id,
                    index,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let sum: S = values.iter().fold(S::zero(), |acc, &v| acc + v);
        let tolerance = cast::<S, _>(CONFIDENCE_SUM_TOLERANCE);
        if (sum - S::one()).abs() > tolerance {
            return Err(Error::ConfidenceSum {
                id: instance_id,
                sum: sum.to_f64().unwrap_or(f64::NAN),
                tolerance: CONFIDENCE_SUM_TOLERANCE,
            });
        }
        Ok(Self::normalized(instance_id, values, sum))
    }

    /// Ingests raw non-negative scores and normalizes them proportionally,
    /// regardless of their sum. Used for elicited replies such as
    /// `"0.5, 0.4"`, which become `[5/9, 4/9]`.
    pub fn from_unnormalized(instance_id: impl Into<String>, values: Vec<S>) -> Result<Self> {
        let instance_id = instance_id.into();
        if values.len() < 2 {
            return Err(Error::InvalidInstance {
                id: instance_id,
                reason: format!("confidence set needs at least 2 values, has {}", values.len()),
            });
        }
        for (index, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < S::zero() {
                return Err(Error::ConfidenceValue {
                    id: instance_id,
                    index,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let sum: S = values.iter().fold(S::zero(), |acc, &v| acc + v);
        if sum <= S::zero() {
            return Err(Error::ConfidenceSum {
                id: instance_id,
                sum: sum.to_f64().unwrap_or(f64::NAN),
                tolerance: CONFIDENCE_SUM_TOLERANCE,
            });
        }
        Ok(Self::normalized(instance_id, values, sum))
    }

    /// A uniform set (the elicitation fallback).
    pub fn uniform(instance_id: impl Into<String>, cardinality: usize) -> Result<Self> {
        let v = S::one() / cast::<S, _>(cardinality);
        Self::new(instance_id, vec![v; cardinality])
    }

    fn normalized(instance_id: String, mut values: Vec<S>, sum: S) -> Self {
        for v in &mut values {
            *v = *v / sum;
        }
        ConfidenceSet { instance_id, values }
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }
}

/// The choice picked by the selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction<S: Scalar> {
    pub chosen_index: usize,
    pub chosen_confidence: S,
}

/// Argmax selection rule with a deterministic lowest-index tie-break.
///
/// Pure: same confidence set, same prediction, on every platform.
pub fn select<S: Scalar>(confidences: &ConfidenceSet<S>) -> Prediction<S> {
    let mut best_index = 0;
    let mut best = confidences.values[0];
    for (i, &v) in confidences.values.iter().enumerate().skip(1) {
        if v > best {
            best = v;
            best_index = i;
        }
    }
    Prediction { chosen_index: best_index, chosen_confidence: best }
}

/// Checks that an instance and a confidence set belong together: same id,
/// matching cardinality.
pub fn validate_pair<S: Scalar>(instance: &Instance, confidences: &ConfidenceSet<S>) -> Result<()> {
    if instance.id != confidences.instance_id {
        return Err(Error::IdMismatch {
            instance_id: instance.id.clone(),
            confidence_id: confidences.instance_id.clone(),
        });
    }
    if instance.cardinality() != confidences.cardinality() {
        return Err(Error::CardinalityMismatch {
            instance_id: instance.id.clone(),
            expected: instance.cardinality(),
            got: confidences.cardinality(),
        });
    }
    Ok(())
}

/// Whether the selection picked the ground-truth answer.
///
/// Only defined on unambiguous instances; asking about an ambiguous one is a
/// contract violation, not `false`.
pub fn is_correct<S: Scalar>(instance: &Instance, prediction: &Prediction<S>) -> Result<bool> {
    match instance.answer_index {
        Some(answer) if !instance.ambiguous => Ok(prediction.chosen_index == answer),
        _ => Err(Error::AmbiguousInstance { id: instance.id.clone(), op: "is_correct" }),
    }
}
