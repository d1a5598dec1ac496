//! Decision rules: whether to answer an instance at all.
//!
//! Five rules share one interface. `random` is the calibration reference,
//! `confstd` thresholds the confidence spread, `maxprob` scores the top
//! confidence directly, `calibrator` is a forest over length + confidence
//! features, and `dwd` (the risk-adjusted calibrator) adds embedding-
//! similarity features and trains on risk-injected data. Every rule yields a
//! score in [0, 1]; the binary decision is `score >= theta`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{is_correct, select, validate_pair, ConfidenceSet, Instance};
use crate::error::Error;
use crate::features::{conf_std, features_calibrator, features_dwd, Embedder, FeatureSchema};
use crate::forest::{fit, Forest, ForestParams};
use crate::metrics::EvalRecord;
use crate::rif::{DatasetRif, DecisionDataset};
use crate::scalar::{cast, Scalar};
use crate::util::{fnv1a64, splitmix64, unit_from_u64};
use crate::Result;

/// Default decision threshold θ.
pub fn default_theta<S: Scalar>() -> S {
    cast::<S, _>(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Random,
    ConfStd,
    Calibrator,
    Dwd,
    MaxProb,
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RuleKind::Random => "random",
            RuleKind::ConfStd => "confstd",
            RuleKind::Calibrator => "calibrator",
            RuleKind::Dwd => "dwd",
            RuleKind::MaxProb => "maxprob",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(RuleKind::Random),
            "confstd" => Ok(RuleKind::ConfStd),
            "calibrator" => Ok(RuleKind::Calibrator),
            "dwd" => Ok(RuleKind::Dwd),
            "maxprob" => Ok(RuleKind::MaxProb),
            other => Err(Error::InvalidParams(format!("unknown rule kind {other:?}"))),
        }
    }
}

/// Kind-specific trained state.
pub enum RuleState<S: Scalar> {
    Random { seed: u64 },
    ConfStd { tau: S },
    Calibrator { forest: Forest<S> },
    Dwd { forest: Forest<S>, embedder: Arc<dyn Embedder<S>> },
    MaxProb,
}

impl<S: Scalar> std::fmt::Debug for RuleState<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuleState::Random { seed } => f.debug_struct("Random").field("seed", seed).finish(),
            RuleState::ConfStd { tau } => f.debug_struct("ConfStd").field("tau", tau).finish(),
            RuleState::Calibrator { forest } => {
                f.debug_struct("Calibrator").field("trees", &forest.trees.len()).finish()
            }
            RuleState::Dwd { forest, embedder } => f
                .debug_struct("Dwd")
                .field("trees", &forest.trees.len())
                .field("embedder", &embedder.describe())
                .finish(),
            RuleState::MaxProb => f.write_str("MaxProb"),
        }
    }
}

/// A trained / tuned decision rule plus its operating threshold and the RIF
/// it was trained with (when learned).
#[derive(Debug)]
pub struct DecisionRule<S: Scalar> {
    pub state: RuleState<S>,
    pub theta: S,
    pub training_rif: Option<DatasetRif>,
}

/// Outcome of thresholding a rule score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision<S: Scalar> {
    pub dr: u8,
    pub score: S,
}

/// Deterministic pseudo-random score in [0, 1) from `(seed, instance_id)`;
/// with θ = 0.5 this is a reproducible fair coin per instance.
pub fn score_random<S: Scalar>(seed: u64, instance_id: &str) -> S {
    cast::<S, _>(unit_from_u64(splitmix64(seed ^ fnv1a64(instance_id.as_bytes()))))
}

/// Maximum confidence; equals `select(...).chosen_confidence`.
pub fn score_maxprob<S: Scalar>(confidences: &ConfidenceSet<S>) -> S {
    select(confidences).chosen_confidence
}

/// Hard threshold on the confidence spread: 1 when `conf_std >= tau`.
pub fn score_confstd<S: Scalar>(confidences: &ConfidenceSet<S>, tau: S) -> S {
    if conf_std(confidences) >= tau {
        S::one()
    } else {
        S::zero()
    }
}

/// Chooses the spread threshold that maximizes training decision accuracy of
/// `dr = 1 ⇔ conf_std >= τ`, searching the sorted distinct spread values'
/// midpoints plus both extremes; ties resolve toward the smaller τ.
pub fn tune_confstd_threshold<S: Scalar>(train: &[(ConfidenceSet<S>, u8)]) -> Result<S> {
    if train.is_empty() {
        return Err(Error::EmptyInput { what: "confstd tuning set" });
    }
    if train.iter().all(|(_, l)| *l == 1) || train.iter().all(|(_, l)| *l == 0) {
        return Err(Error::SingleClassLabels);
    }
    let mut spreads: Vec<(S, u8)> =
        train.iter().map(|(c, l)| (conf_std(c), *l)).collect();
    spreads.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite spreads"));

    let mut candidates: Vec<S> = Vec::new();
    candidates.push(spreads[0].0); // everything answered
    for pair in spreads.windows(2) {
        if pair[0].0 < pair[1].0 {
            candidates.push((pair[0].0 + pair[1].0) / cast::<S, _>(2));
        }
    }
    candidates.push(spreads[spreads.len() - 1].0 + S::one()); // everything abstained

    let mut best_tau = candidates[0];
    let mut best_hits = 0usize;
    for &tau in &candidates {
        let hits = spreads
            .iter()
            .filter(|(s, l)| {
                let dr = if *s >= tau { 1 } else { 0 };
                dr == *l
            })
            .count();
        if hits > best_hits {
            best_hits = hits;
            best_tau = tau;
        }
    }
    Ok(best_tau)
}

fn feature_labels<S: Scalar>(
    dataset: &DecisionDataset,
    confidences: &BTreeMap<String, ConfidenceSet<S>>,
) -> Result<Vec<u8>> {
    let missing: Vec<String> = dataset
        .items
        .iter()
        .filter(|item| !confidences.contains_key(&item.instance.id))
        .map(|item| item.instance.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingConfidences { ids: missing });
    }
    Ok(dataset.items.iter().map(|item| item.label).collect())
}

/// Trains the calibrator baseline: a forest over prompt length, selected
/// answer length, and the per-choice confidences.
pub fn train_calibrator<S: Scalar>(
    dataset: &DecisionDataset,
    confidences: &BTreeMap<String, ConfidenceSet<S>>,
    params: &ForestParams,
) -> Result<DecisionRule<S>> {
    let labels = feature_labels(dataset, confidences)?;
    let mut features = Vec::with_capacity(dataset.items.len());
    for item in &dataset.items {
        let conf = &confidences[&item.instance.id];
        features.push(features_calibrator(&item.instance, conf)?);
    }
    let forest = fit(&features, &labels, params)?;
    Ok(DecisionRule {
        state: RuleState::Calibrator { forest },
        theta: default_theta(),
        training_rif: Some(dataset.rif),
    })
}

/// Trains the risk-adjusted calibrator: a forest over the full feature set
/// including embedding similarities. The rule keeps a handle to the embedder
/// so it can featurize at decision time.
pub fn train_dwd<S: Scalar>(
    dataset: &DecisionDataset,
    confidences: &BTreeMap<String, ConfidenceSet<S>>,
    embedder: Arc<dyn Embedder<S>>,
    params: &ForestParams,
) -> Result<DecisionRule<S>> {
    let labels = feature_labels(dataset, confidences)?;
    let mut features = Vec::with_capacity(dataset.items.len());
    for item in &dataset.items {
        let conf = &confidences[&item.instance.id];
        features.push(features_dwd(&item.instance, conf, embedder.as_ref())?);
    }
    let forest = fit(&features, &labels, params)?;
    Ok(DecisionRule {
        state: RuleState::Dwd { forest, embedder },
        theta: default_theta(),
        training_rif: Some(dataset.rif),
    })
}

/// Tunes the confidence-spread baseline on a labeled dataset.
pub fn tune_confstd<S: Scalar>(
    dataset: &DecisionDataset,
    confidences: &BTreeMap<String, ConfidenceSet<S>>,
) -> Result<DecisionRule<S>> {
    feature_labels(dataset, confidences)?;
    let pairs: Vec<(ConfidenceSet<S>, u8)> = dataset
        .items
        .iter()
        .map(|item| (confidences[&item.instance.id].clone(), item.label))
        .collect();
    let tau = tune_confstd_threshold(&pairs)?;
    Ok(DecisionRule {
        state: RuleState::ConfStd { tau },
        theta: default_theta(),
        training_rif: Some(dataset.rif),
    })
}

impl<S: Scalar> DecisionRule<S> {
    pub fn random(seed: u64) -> Self {
        DecisionRule {
            state: RuleState::Random { seed },
            theta: default_theta(),
            training_rif: None,
        }
    }

    pub fn maxprob() -> Self {
        DecisionRule { state: RuleState::MaxProb, theta: default_theta(), training_rif: None }
    }

    pub fn kind(&self) -> RuleKind {
        match &self.state {
            RuleState::Random { .. } => RuleKind::Random,
            RuleState::ConfStd { .. } => RuleKind::ConfStd,
            RuleState::Calibrator { .. } => RuleKind::Calibrator,
            RuleState::Dwd { .. } => RuleKind::Dwd,
            RuleState::MaxProb => RuleKind::MaxProb,
        }
    }

    pub fn schema(&self) -> Option<FeatureSchema> {
        match &self.state {
            RuleState::Calibrator { .. } => Some(FeatureSchema::Calibrator),
            RuleState::Dwd { .. } => Some(FeatureSchema::Dwd),
            _ => None,
        }
    }

    pub fn with_theta(mut self, theta: S) -> Result<Self> {
        if !(S::zero()..=S::one()).contains(&theta) {
            return Err(Error::InvalidParams(format!("theta {theta} must be in [0, 1]")));
        }
        self.theta = theta;
        Ok(self)
    }

    /// The rule score in [0, 1]: the quantity thresholded at θ.
    pub fn score(&self, instance: &Instance, confidences: &ConfidenceSet<S>) -> Result<S> {
        match &self.state {
            RuleState::Random { seed } => Ok(score_random(*seed, &instance.id)),
            RuleState::MaxProb => {
                validate_pair(instance, confidences)?;
                Ok(score_maxprob(confidences))
            }
            RuleState::ConfStd { tau } => {
                validate_pair(instance, confidences)?;
                Ok(score_confstd(confidences, *tau))
            }
            RuleState::Calibrator { forest } => {
                let features = features_calibrator(instance, confidences)?;
                forest.predict_proba(&features)
            }
            RuleState::Dwd { forest, embedder } => {
                let features = features_dwd(instance, confidences, embedder.as_ref())?;
                forest.predict_proba(&features)
            }
        }
    }

    /// The score used to rank instances on risk-coverage curves. Identical
    /// to [`DecisionRule::score`] except for `confstd`, whose hard 0/1
    /// decision score would collapse the curve — it ranks by the raw spread.
    pub fn ranking_score(&self, instance: &Instance, confidences: &ConfidenceSet<S>) -> Result<S> {
        match &self.state {
            RuleState::ConfStd { .. } => {
                validate_pair(instance, confidences)?;
                Ok(conf_std(confidences))
            }
            _ => self.score(instance, confidences),
        }
    }

    /// Scores and thresholds: `dr = 1 ⇔ score >= θ`.
    pub fn decide(&self, instance: &Instance, confidences: &ConfidenceSet<S>) -> Result<Decision<S>> {
        let score = self.score(instance, confidences)?;
        Ok(Decision { dr: u8::from(score >= self.theta), score })
    }

    fn record(&self, instance: &Instance, confidences: &ConfidenceSet<S>) -> Result<EvalRecord<S>> {
        let decision = self.decide(instance, confidences)?;
        let ranking = self.ranking_score(instance, confidences)?;
        let sr_correct = if instance.ambiguous {
            None
        } else {
            Some(is_correct(instance, &select(confidences))?)
        };
        Ok(EvalRecord {
            instance_id: instance.id.clone(),
            ambiguous: instance.ambiguous,
            dr: decision.dr,
            rule_score: ranking,
            sr_correct,
        })
    }

    /// Evaluation records over a labeled decision dataset (mixed ambiguous /
    /// unambiguous items); the decision-risk inputs.
    pub fn evaluate_dataset(
        &self,
        dataset: &DecisionDataset,
        confidences: &BTreeMap<String, ConfidenceSet<S>>,
    ) -> Result<Vec<EvalRecord<S>>> {
        feature_labels(dataset, confidences)?;
        dataset
            .items
            .iter()
            .map(|item| self.record(&item.instance, &confidences[&item.instance.id]))
            .collect()
    }

    /// Evaluation records over risk-free instances; the composite-risk
    /// inputs.
    pub fn evaluate_instances(
        &self,
        instances: &[Instance],
        confidences: &BTreeMap<String, ConfidenceSet<S>>,
    ) -> Result<Vec<EvalRecord<S>>> {
        let missing: Vec<String> = instances
            .iter()
            .filter(|i| !confidences.contains_key(&i.id))
            .map(|i| i.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingConfidences { ids: missing });
        }
        instances.iter().map(|i| self.record(i, &confidences[&i.id])).collect()
    }
}
