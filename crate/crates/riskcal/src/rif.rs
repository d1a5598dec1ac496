//! Risk injection functions and balanced decision datasets.
//!
//! A risk injection function (RIF) turns an answerable instance into an
//! ambiguous one while keeping it structurally valid: NQ erases the prompt,
//! WQ swaps in an unrelated prompt, NRA removes the correct choice and
//! splices in a donor's choice at the same position. Balanced datasets of
//! (original, 1) / (injected, 0) pairs are what the learned decision rules
//! train and evaluate on.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Benchmark, Instance, Provenance};
use crate::error::Error;
use crate::util::derive_seed;
use crate::Result;

/// How many fresh donors to try before giving up on a pathological benchmark.
const MAX_DONOR_ATTEMPTS: usize = 32;

/// The three risk injection functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RifKind {
    /// No-Question: replace the prompt with the empty string.
    Nq,
    /// Wrong-Question: replace the prompt with one from an unrelated instance.
    Wq,
    /// No-Right-Answer: remove the correct choice, insert a donor's choice.
    Nra,
}

/// Canonical ordering used wherever "the other RIFs" must be deterministic.
pub const ALL_RIFS: [RifKind; 3] = [RifKind::Nq, RifKind::Wq, RifKind::Nra];

impl RifKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RifKind::Nq => "NQ",
            RifKind::Wq => "WQ",
            RifKind::Nra => "NRA",
        }
    }
}

impl std::fmt::Display for RifKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RifKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NQ" => Ok(RifKind::Nq),
            "WQ" => Ok(RifKind::Wq),
            "NRA" => Ok(RifKind::Nra),
            other => Err(Error::InvalidParams(format!("unknown RIF {other:?} (expected NQ, WQ, or NRA)"))),
        }
    }
}

/// RIF tag carried by a decision dataset: one specific RIF, or the opt-in
/// mixture that draws a RIF per instance. Serialized as `"NQ"`, `"WQ"`,
/// `"NRA"`, or `"mixed"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetRif {
    Single(RifKind),
    Mixed,
}

impl std::fmt::Display for DatasetRif {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetRif::Single(k) => f.write_str(k.as_str()),
            DatasetRif::Mixed => f.write_str("mixed"),
        }
    }
}

impl std::str::FromStr for DatasetRif {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("mixed") {
            Ok(DatasetRif::Mixed)
        } else {
            Ok(DatasetRif::Single(s.parse()?))
        }
    }
}

impl Serialize for DatasetRif {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DatasetRif {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// One labeled item: label 1 for risk-free originals, 0 for risk-injected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionItem {
    pub instance: Instance,
    pub label: u8,
}

/// A balanced, shuffled dataset of originals and their risk-injected twins,
/// fully reproducible from `(source benchmark, rif, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionDataset {
    pub source_benchmark: String,
    pub rif: DatasetRif,
    pub seed: u64,
    pub items: Vec<DecisionItem>,
}

impl DecisionDataset {
    pub fn label_counts(&self) -> (usize, usize) {
        let ones = self.items.iter().filter(|i| i.label == 1).count();
        (self.items.len() - ones, ones)
    }
}

fn require_unambiguous(instance: &Instance, op: &'static str) -> Result<()> {
    if instance.ambiguous {
        return Err(Error::AmbiguousInstance { id: instance.id.clone(), op });
    }
    Ok(())
}

fn injected_provenance(input: &Instance, rif: RifKind, donor_id: Option<&str>) -> Provenance {
    Provenance {
        source_benchmark: input
            .provenance
            .as_ref()
            .map(|p| p.source_benchmark.clone())
            .unwrap_or_default(),
        applied_rif: Some(rif.as_str().to_string()),
        donor_id: donor_id.map(str::to_string),
    }
}

fn injected_id(input: &Instance, rif: RifKind) -> String {
    format!("{}#{}", input.id, rif.as_str())
}

/// No-Question: the prompt becomes the empty string, choices stay put.
pub fn rif_nq(instance: &Instance) -> Result<Instance> {
    require_unambiguous(instance, "rif_nq")?;
    Ok(Instance {
        id: injected_id(instance, RifKind::Nq),
        prompt: String::new(),
        choices: instance.choices.clone(),
        answer_index: None,
        ambiguous: true,
        provenance: Some(injected_provenance(instance, RifKind::Nq, None)),
    })
}

/// Wrong-Question: the prompt is replaced with the donor's, choices stay put.
///
/// The donor must be a different instance with a textually different prompt;
/// otherwise the caller is expected to resample a donor.
pub fn rif_wq(instance: &Instance, donor: &Instance) -> Result<Instance> {
    require_unambiguous(instance, "rif_wq")?;
    if donor.id == instance.id {
        return Err(Error::DonorRejected {
            id: instance.id.clone(),
            donor_id: donor.id.clone(),
            reason: "donor is the instance itself".into(),
        });
    }
    if donor.prompt == instance.prompt {
        return Err(Error::DonorRejected {
            id: instance.id.clone(),
            donor_id: donor.id.clone(),
            reason: "donor prompt is textually identical".into(),
        });
    }
    Ok(Instance {
        id: injected_id(instance, RifKind::Wq),
        prompt: donor.prompt.clone(),
        choices: instance.choices.clone(),
        answer_index: None,
        ambiguous: true,
        provenance: Some(injected_provenance(instance, RifKind::Wq, Some(&donor.id))),
    })
}

/// No-Right-Answer: the correct choice is removed and a donor choice takes
/// its index, so cardinality is preserved and the label cannot be read off
/// positional patterns. The replacement is sampled (seeded) uniformly from
/// the donor choices that are textually distinct from every retained choice
/// and from the removed answer.
pub fn rif_nra(instance: &Instance, donor: &Instance, rng_seed: u64) -> Result<Instance> {
    require_unambiguous(instance, "rif_nra")?;
    if donor.id == instance.id {
        return Err(Error::DonorRejected {
            id: instance.id.clone(),
            donor_id: donor.id.clone(),
            reason: "donor is the instance itself".into(),
        });
    }
    let answer = instance.answer_index.expect("unambiguous instance has an answer");
    let removed = &instance.choices[answer];
    let retained: Vec<&String> =
        instance.choices.iter().enumerate().filter(|(i, _)| *i != answer).map(|(_, c)| c).collect();
    let candidates: Vec<&String> = donor
        .choices
        .iter()
        .filter(|c| *c != removed && !retained.contains(c))
        .collect();
    if candidates.is_empty() {
        return Err(Error::DonorRejected {
            id: instance.id.clone(),
            donor_id: donor.id.clone(),
            reason: "donor has no choice textually distinct from the retained choices".into(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let replacement = candidates[rng.gen_range(0..candidates.len())].clone();
    let mut choices = instance.choices.clone();
    choices[answer] = replacement;
    Ok(Instance {
        id: injected_id(instance, RifKind::Nra),
        prompt: instance.prompt.clone(),
        choices,
        answer_index: None,
        ambiguous: true,
        provenance: Some(injected_provenance(instance, RifKind::Nra, Some(&donor.id))),
    })
}

/// Applies `rif` to `instance` with a donor drawn from `benchmark`
/// (uniformly, excluding the instance itself), retrying rejected donors up
/// to a fixed bound.
fn inject_with_donor(
    benchmark: &Benchmark,
    position: usize,
    rif: RifKind,
    rng: &mut ChaCha12Rng,
) -> Result<Instance> {
    let instance = &benchmark.instances[position];
    if rif == RifKind::Nq {
        return rif_nq(instance);
    }
    let n = benchmark.instances.len();
    let mut last_rejection = None;
    for _ in 0..MAX_DONOR_ATTEMPTS {
        let mut donor_pos = rng.gen_range(0..n - 1);
        if donor_pos >= position {
            donor_pos += 1;
        }
        let donor = &benchmark.instances[donor_pos];
        let attempt = match rif {
            RifKind::Nq => unreachable!("handled above"),
            RifKind::Wq => rif_wq(instance, donor),
            RifKind::Nra => rif_nra(instance, donor, rng.gen()),
        };
        match attempt {
            Ok(mut injected) => {
                if let Some(p) = injected.provenance.as_mut() {
                    p.source_benchmark = benchmark.name.clone();
                }
                return Ok(injected);
            }
            Err(e @ Error::DonorRejected { .. }) => last_rejection = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_rejection.expect("at least one donor attempt was made"))
}

fn build_dataset_inner(
    benchmark: &Benchmark,
    rif: DatasetRif,
    seed: u64,
) -> Result<DecisionDataset> {
    if benchmark.instances.len() < 2 {
        return Err(Error::BenchmarkTooSmall {
            name: benchmark.name.clone(),
            len: benchmark.instances.len(),
        });
    }
    for instance in &benchmark.instances {
        require_unambiguous(instance, "build_decision_set")?;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(benchmark.instances.len() * 2);
    for position in 0..benchmark.instances.len() {
        let item_rif = match rif {
            DatasetRif::Single(k) => k,
            DatasetRif::Mixed => *ALL_RIFS
                .get(rng.gen_range(0..ALL_RIFS.len()))
                .expect("index in range"),
        };
        let injected = inject_with_donor(benchmark, position, item_rif, &mut rng)?;
        items.push(DecisionItem { instance: benchmark.instances[position].clone(), label: 1 });
        items.push(DecisionItem { instance: injected, label: 0 });
    }
    items.shuffle(&mut rng);
    Ok(DecisionDataset { source_benchmark: benchmark.name.clone(), rif, seed, items })
}

/// Builds the balanced labeled dataset for one RIF: each original yields
/// `(original, 1)` and `(injected, 0)`, donors are sampled uniformly without
/// self, and the item order is shuffled — all from `seed`.
pub fn build_decision_set(benchmark: &Benchmark, rif: RifKind, seed: u64) -> Result<DecisionDataset> {
    build_dataset_inner(benchmark, DatasetRif::Single(rif), seed)
}

/// Opt-in variant that samples a RIF per instance instead of applying one
/// RIF to the whole benchmark. Off the default paths; ID/OOD evaluation is
/// only defined for single-RIF training.
pub fn build_mixed_decision_set(benchmark: &Benchmark, seed: u64) -> Result<DecisionDataset> {
    build_dataset_inner(benchmark, DatasetRif::Mixed, seed)
}

/// The two RIFs a rule trained on `training_rif` is evaluated against
/// out-of-domain, in the fixed (NQ, WQ, NRA) order.
pub fn ood_partner_rifs(training_rif: RifKind) -> [RifKind; 2] {
    let mut out = [RifKind::Nq; 2];
    let mut w = 0;
    for kind in ALL_RIFS {
        if kind != training_rif {
            out[w] = kind;
            w += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Split;

    fn instance(id: &str, prompt: &str, choices: &[&str], answer: usize) -> Instance {
        Instance::risk_free(id, prompt, choices.iter().map(|s| s.to_string()).collect(), answer)
            .unwrap()
    }

    fn small_benchmark() -> Benchmark {
        Benchmark::new(
            "toy",
            Split::Train,
            vec![
                instance("a", "It starts to rain on the walk home", &["open umbrella", "eat the map"], 0),
                instance("b", "The kettle is whistling", &["turn off stove", "paint the cat"], 0),
                instance("c", "The alarm rings at dawn", &["wake up", "plant a flag"], 0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn nq_erases_prompt_and_marks_ambiguous() {
        let src = instance("a", "It starts to rain...", &["x", "y"], 1);
        let out = rif_nq(&src).unwrap();
        assert_eq!(out.prompt, "");
        assert_eq!(out.choices, src.choices);
        assert_eq!(out.cardinality(), src.cardinality());
        assert!(out.ambiguous);
        assert!(out.answer_index.is_none());
        assert_eq!(out.provenance.as_ref().unwrap().applied_rif.as_deref(), Some("NQ"));
        // Already-ambiguous input violates the precondition.
        assert!(matches!(rif_nq(&out), Err(Error::AmbiguousInstance { .. })));
    }

    #[test]
    fn wq_takes_donor_prompt_and_keeps_choices() {
        let a = instance("a", "prompt a", &["x", "y"], 0);
        let b = instance("b", "prompt b", &["p", "q"], 1);
        let out = rif_wq(&a, &b).unwrap();
        assert_eq!(out.prompt, "prompt b");
        assert_eq!(out.choices, a.choices);
        assert!(out.ambiguous);
        assert_eq!(out.provenance.as_ref().unwrap().donor_id.as_deref(), Some("b"));

        assert!(matches!(rif_wq(&a, &a), Err(Error::DonorRejected { .. })));
        let same_prompt = instance("c", "prompt a", &["p", "q"], 0);
        assert!(matches!(rif_wq(&a, &same_prompt), Err(Error::DonorRejected { .. })));
    }

    #[test]
    fn nra_replaces_answer_at_its_index() {
        let src = instance("a", "q", &["a", "b", "c"], 1);
        let donor = instance("d", "q2", &["d", "dd", "ddd"], 0);
        let out = rif_nra(&src, &donor, 99).unwrap();
        assert_eq!(out.prompt, "q");
        assert_eq!(out.cardinality(), 3);
        assert_eq!(out.choices[0], "a");
        assert_eq!(out.choices[2], "c");
        assert!(donor.choices.contains(&out.choices[1]));
        assert!(!out.choices.contains(&"b".to_string()));

        // Same seed and donor reproduce the same output.
        let again = rif_nra(&src, &donor, 99).unwrap();
        assert_eq!(out, again);

        // A donor offering nothing new is rejected.
        let useless = instance("u", "q3", &["a", "b", "c"], 0);
        assert!(matches!(rif_nra(&src, &useless, 1), Err(Error::DonorRejected { .. })));
    }

    #[test]
    fn decision_set_is_balanced_and_deterministic() {
        let bench = small_benchmark();
        let ds = build_decision_set(&bench, RifKind::Wq, 42).unwrap();
        assert_eq!(ds.items.len(), 6);
        let (zeros, ones) = ds.label_counts();
        assert_eq!((zeros, ones), (3, 3));
        for item in &ds.items {
            if item.label == 0 {
                assert!(item.instance.ambiguous);
                let prov = item.instance.provenance.as_ref().unwrap();
                assert_eq!(prov.applied_rif.as_deref(), Some("WQ"));
                assert_eq!(prov.source_benchmark, "toy");
            } else {
                assert!(!item.instance.ambiguous);
            }
        }

        let ds2 = build_decision_set(&bench, RifKind::Wq, 42).unwrap();
        assert_eq!(
            serde_json::to_vec(&ds).unwrap(),
            serde_json::to_vec(&ds2).unwrap(),
            "same (benchmark, rif, seed) must produce byte-identical datasets"
        );
        let ds3 = build_decision_set(&bench, RifKind::Wq, 43).unwrap();
        assert_ne!(ds, ds3);
    }

    #[test]
    fn nq_dataset_has_empty_prompts_on_label_zero() {
        let ds = build_decision_set(&small_benchmark(), RifKind::Nq, 7).unwrap();
        let zero_prompts: Vec<&str> = ds
            .items
            .iter()
            .filter(|i| i.label == 0)
            .map(|i| i.instance.prompt.as_str())
            .collect();
        assert_eq!(zero_prompts, vec!["", "", ""]);
    }

    #[test]
    fn tiny_benchmark_is_rejected() {
        let bench = Benchmark::new(
            "solo",
            Split::Train,
            vec![instance("only", "q", &["x", "y"], 0)],
        )
        .unwrap();
        assert!(matches!(
            build_decision_set(&bench, RifKind::Nq, 1),
            Err(Error::BenchmarkTooSmall { .. })
        ));
    }

    #[test]
    fn mixed_dataset_draws_each_rif() {
        let mut instances = Vec::new();
        for i in 0..40 {
            instances.push(instance(
                &format!("i{i}"),
                &format!("prompt number {i}"),
                &[&format!("left {i}"), &format!("right {i}")],
                0,
            ));
        }
        let bench = Benchmark::new("mixy", Split::Train, instances).unwrap();
        let ds = build_mixed_decision_set(&bench, 5).unwrap();
        assert_eq!(ds.rif, DatasetRif::Mixed);
        let mut seen = std::collections::HashSet::new();
        for item in ds.items.iter().filter(|i| i.label == 0) {
            seen.insert(item.instance.provenance.as_ref().unwrap().applied_rif.clone().unwrap());
        }
        assert_eq!(seen.len(), 3, "40 draws should hit all three RIFs");
    }

    #[test]
    fn ood_partners_fixed_order() {
        assert_eq!(ood_partner_rifs(RifKind::Nq), [RifKind::Wq, RifKind::Nra]);
        assert_eq!(ood_partner_rifs(RifKind::Wq), [RifKind::Nq, RifKind::Nra]);
        assert_eq!(ood_partner_rifs(RifKind::Nra), [RifKind::Nq, RifKind::Wq]);
    }
}
