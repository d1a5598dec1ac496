//! Feature extraction for the learned decision rules.
//!
//! Two fixed schemas:
//!
//! * calibrator — `[prompt chars, selected-choice chars, c_1 .. c_N]`
//!   (dimension `2 + N`)
//! * risk-adjusted (dwd) — `[prompt chars, selected-choice chars, conf std,
//!   cos(prompt, choice_1) .. cos(prompt, choice_N), std of those cosines]`
//!   (dimension `4 + N`)
//!
//! Lengths are counted in characters. The embedding source is pluggable
//! through [`Embedder`]; the bundled [`TrigramEmbedder`] is a hermetic,
//! non-semantic fallback so the pipeline runs without any model files.

use serde::{Deserialize, Serialize};

use crate::domain::{select, validate_pair, ConfidenceSet, Instance};
use crate::error::Error;
use crate::scalar::{cast, Scalar};
use crate::util::fnv1a64;
use crate::Result;

/// Source of fixed-dimension, unit-norm text embeddings.
///
/// Implementations must be deterministic (same text, same vector) and keep
/// one dimension for their whole lifetime. Empty text must be embeddable —
/// the NQ injection produces empty prompts.
pub trait Embedder<S: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<S>>;
    /// Short label recorded in rule artifacts, e.g. `"trigram-256"`.
    fn describe(&self) -> String;
}

/// Character-trigram hashing embedder: 3-grams hashed into `dimension`
/// buckets, counts L2-normalized. Non-semantic, but deterministic and
/// self-contained, which makes the full pipeline testable offline.
///
/// Empty text maps to the first basis vector. Texts shorter than three
/// characters are hashed whole.
#[derive(Debug, Clone)]
pub struct TrigramEmbedder {
    dimension: usize,
}

impl TrigramEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidParams(format!(
                "trigram embedder needs dimension >= 2, got {dimension}"
            )));
        }
        Ok(TrigramEmbedder { dimension })
    }
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        TrigramEmbedder { dimension: Self::DEFAULT_DIMENSION }
    }
}

impl<S: Scalar> Embedder<S> for TrigramEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<S>> {
        let mut counts = vec![0u32; self.dimension];
        if text.is_empty() {
            let mut v = vec![S::zero(); self.dimension];
            v[0] = S::one();
            return Ok(v);
        }
        let chars: Vec<char> = text.chars().collect();
        if chars.len() < 3 {
            counts[(fnv1a64(text.as_bytes()) % self.dimension as u64) as usize] += 1;
        } else {
            let mut gram = String::with_capacity(12);
            for window in chars.windows(3) {
                gram.clear();
                gram.extend(window);
                counts[(fnv1a64(gram.as_bytes()) % self.dimension as u64) as usize] += 1;
            }
        }
        let norm = counts
            .iter()
            .map(|&c| {
                let c = cast::<S, _>(c);
                c * c
            })
            .fold(S::zero(), |a, b| a + b)
            .sqrt();
        Ok(counts.iter().map(|&c| cast::<S, _>(c) / norm).collect())
    }

    fn describe(&self) -> String {
        format!("trigram-{}", self.dimension)
    }
}

/// Which rule a feature vector was extracted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSchema {
    Calibrator,
    Dwd,
}

impl FeatureSchema {
    /// Feature dimension for a given choice cardinality.
    pub fn dimension(&self, cardinality: usize) -> usize {
        match self {
            FeatureSchema::Calibrator => 2 + cardinality,
            FeatureSchema::Dwd => 4 + cardinality,
        }
    }
}

impl std::fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureSchema::Calibrator => f.write_str("calibrator"),
            FeatureSchema::Dwd => f.write_str("dwd"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<S: Scalar> {
    pub schema: FeatureSchema,
    pub values: Vec<S>,
}

impl<S: Scalar> FeatureVector<S> {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

/// Population standard deviation of the confidence values (divide by N).
pub fn conf_std<S: Scalar>(confidences: &ConfidenceSet<S>) -> S {
    population_std(confidences.values())
}

fn population_std<S: Scalar>(values: &[S]) -> S {
    let n = cast::<S, _>(values.len());
    let mean = values.iter().fold(S::zero(), |a, &b| a + b) / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .fold(S::zero(), |a, b| a + b)
        / n;
    var.sqrt()
}

/// Cosine similarity, clamped into [-1, 1] against float drift.
pub fn cosine<S: Scalar>(u: &[S], v: &[S]) -> Result<S> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    let mut dot = S::zero();
    let mut nu = S::zero();
    let mut nv = S::zero();
    for (&a, &b) in u.iter().zip(v) {
        dot = dot + a * b;
        nu = nu + a * a;
        nv = nv + b * b;
    }
    if nu == S::zero() || nv == S::zero() {
        return Err(Error::ZeroNormVector);
    }
    let c = dot / (nu.sqrt() * nv.sqrt());
    Ok(c.min(S::one()).max(-S::one()))
}

fn char_len<S: Scalar>(text: &str) -> S {
    cast::<S, _>(text.chars().count())
}

/// Calibrator features: prompt length, selected-choice length, then each
/// choice's confidence in natural choice order.
pub fn features_calibrator<S: Scalar>(
    instance: &Instance,
    confidences: &ConfidenceSet<S>,
) -> Result<FeatureVector<S>> {
    validate_pair(instance, confidences)?;
    let predicted = &instance.choices[select(confidences).chosen_index];
    let mut values = Vec::with_capacity(2 + confidences.cardinality());
    values.push(char_len::<S>(&instance.prompt));
    values.push(char_len::<S>(predicted));
    values.extend_from_slice(confidences.values());
    Ok(FeatureVector { schema: FeatureSchema::Calibrator, values })
}

/// Risk-adjusted features: prompt length, selected-choice length, confidence
/// spread, prompt-to-choice embedding similarities in choice order, and the
/// spread of those similarities.
pub fn features_dwd<S: Scalar>(
    instance: &Instance,
    confidences: &ConfidenceSet<S>,
    embedder: &dyn Embedder<S>,
) -> Result<FeatureVector<S>> {
    validate_pair(instance, confidences)?;
    let wrap = |source: Error| Error::FeatureExtraction {
        instance_id: instance.id.clone(),
        source: Box::new(source),
    };
    let prompt_vec = embedder.embed(&instance.prompt).map_err(wrap)?;
    let mut similarities = Vec::with_capacity(instance.cardinality());
    for choice in &instance.choices {
        let choice_vec = embedder.embed(choice).map_err(wrap)?;
        similarities.push(cosine(&prompt_vec, &choice_vec).map_err(wrap)?);
    }
    let predicted = &instance.choices[select(confidences).chosen_index];
    let mut values = Vec::with_capacity(4 + instance.cardinality());
    values.push(char_len::<S>(&instance.prompt));
    values.push(char_len::<S>(predicted));
    values.push(conf_std(confidences));
    let sim_std = population_std(&similarities);
    values.extend_from_slice(&similarities);
    values.push(sim_std);
    Ok(FeatureVector { schema: FeatureSchema::Dwd, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(values: &[f64]) -> ConfidenceSet<f64> {
        ConfidenceSet::new("t", values.to_vec()).unwrap()
    }

    #[test]
    fn conf_std_examples() {
        assert_eq!(conf_std(&set(&[0.5, 0.5])), 0.0);
        assert!((conf_std(&set(&[0.9, 0.1])) - 0.4).abs() < 1e-12);
        // variance (0.5625 + 3*0.0625)/4 = 0.1875
        assert!((conf_std(&set(&[1.0, 0.0, 0.0, 0.0])) - 0.4330127018922193).abs() < 1e-4);
    }

    #[test]
    fn cosine_examples() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        let neg = [-1.0, 0.0];
        assert_eq!(cosine(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine(&e1, &e2).unwrap(), 0.0);
        assert_eq!(cosine(&e1, &neg).unwrap(), -1.0);
        assert!(matches!(cosine(&e1, &[0.0, 0.0]), Err(Error::ZeroNormVector)));
        assert!(matches!(cosine(&e1, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn calibrator_features_example() {
        let instance =
            Instance::risk_free("t", "abcde", vec!["x".into(), "yz".into()], 0).unwrap();
        let fv = features_calibrator(&instance, &set(&[0.8, 0.2])).unwrap();
        assert_eq!(fv.schema, FeatureSchema::Calibrator);
        assert_eq!(fv.values, vec![5.0, 1.0, 0.8, 0.2]);
        assert_eq!(fv.dimension(), FeatureSchema::Calibrator.dimension(2));
    }

    #[test]
    fn calibrator_features_empty_prompt() {
        let mut instance =
            Instance::risk_free("t", "abcde", vec!["x".into(), "yz".into()], 0).unwrap();
        instance.prompt = String::new();
        let fv = features_calibrator(&instance, &set(&[0.8, 0.2])).unwrap();
        assert_eq!(fv.values[0], 0.0);
    }

    #[test]
    fn dwd_features_shape_and_known_values() {
        let embedder = TrigramEmbedder::default();
        let instance = Instance::risk_free(
            "t",
            "the cat sat on the mat",
            vec!["the cat sat on the mat".into(), "quantum entanglement".into()],
            0,
        )
        .unwrap();
        let fv = features_dwd(&instance, &set(&[0.5, 0.5]), &embedder).unwrap();
        assert_eq!(fv.schema, FeatureSchema::Dwd);
        assert_eq!(fv.dimension(), 6);
        // prompt == choice_0, so that similarity is exactly 1 (same embedding).
        assert!((fv.values[3] - 1.0).abs() < 1e-6);
        // uniform confidences -> zero spread
        assert_eq!(fv.values[2], 0.0);
        assert!(fv.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn trigram_embedder_contract() {
        let embedder = TrigramEmbedder::default();
        let a: Vec<f64> = embedder.embed("hello world").unwrap();
        let b: Vec<f64> = embedder.embed("hello world").unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);

        let empty: Vec<f64> = embedder.embed("").unwrap();
        assert_eq!(empty[0], 1.0);
        assert!(empty[1..].iter().all(|&v| v == 0.0));

        let short: Vec<f64> = embedder.embed("ab").unwrap();
        let norm: f64 = short.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
    }

    proptest! {
        /// Permuting choices permutes exactly the per-choice block.
        #[test]
        fn choice_permutation_moves_only_per_choice_block(rot in 1usize..4) {
            let texts = ["alpha beta", "gamma delta", "epsilon zeta", "eta theta"];
            let conf = [0.55, 0.25, 0.15, 0.05];
            let n = texts.len();
            let base_inst = Instance::risk_free(
                "t", "some prompt words", texts.iter().map(|s| s.to_string()).collect(), 0,
            ).unwrap();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let rot_inst = Instance::risk_free(
                "t",
                "some prompt words",
                perm.iter().map(|&i| texts[i].to_string()).collect(),
                perm.iter().position(|&i| i == 0).unwrap(),
            ).unwrap();
            let base_conf = ConfidenceSet::new("t", conf.to_vec()).unwrap();
            let rot_conf =
                ConfidenceSet::new("t", perm.iter().map(|&i| conf[i]).collect()).unwrap();

            let embedder = TrigramEmbedder::default();
            let base = features_dwd(&base_inst, &base_conf, &embedder).unwrap();
            let moved = features_dwd(&rot_inst, &rot_conf, &embedder).unwrap();

            // Scalar features (lengths, stds) unchanged.
            for idx in [0usize, 1, 2] {
                prop_assert!((base.values[idx] - moved.values[idx]).abs() < 1e-12);
            }
            prop_assert!((base.values[3 + n] - moved.values[3 + n]).abs() < 1e-12);
            // Per-choice block permuted accordingly.
            for (new_pos, &old_pos) in perm.iter().enumerate() {
                prop_assert!((moved.values[3 + new_pos] - base.values[3 + old_pos]).abs() < 1e-12);
            }
        }

        /// Finite outputs on arbitrary valid inputs.
        #[test]
        fn features_never_nan(
            raw in proptest::collection::vec(0.01f64..1.0, 3),
            prompt in "[ a-z]{0,40}",
        ) {
            let sum: f64 = raw.iter().sum();
            let values: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let conf = ConfidenceSet::new("t", values).unwrap();
            let mut instance = Instance::risk_free(
                "t",
                "placeholder",
                vec!["first choice".into(), "second choice".into(), "third choice".into()],
                0,
            ).unwrap();
            instance.prompt = prompt;
            let embedder = TrigramEmbedder::default();
            let cal = features_calibrator(&instance, &conf).unwrap();
            let dwd = features_dwd(&instance, &conf, &embedder).unwrap();
            prop_assert!(cal.values.iter().all(|v| v.is_finite()));
            prop_assert!(dwd.values.iter().all(|v| v.is_finite()));
        }
    }
}
