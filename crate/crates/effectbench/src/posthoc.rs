//! Bergmann-Hommel multiple-comparison procedure.
//!
//! After a significant Friedman test, every unordered model pair gets a
//! two-sided z-test on the difference of average ranks. An index set of
//! pair hypotheses is *exhaustive* when all of them can hold at once, which
//! happens exactly when the set collects the within-block pairs of some
//! partition of the models. The procedure retains the union of exhaustive
//! sets whose smallest p-value exceeds alpha / |I|, and the adjusted
//! p-value of hypothesis i is
//!
//! ```text
//! APV_i = min(1, max { |I| * min{p_j : j in I} : I exhaustive, i in I })
//! ```
//!
//! Both the acceptance set and the APV decisions compare the same product
//! `|I| * min p` against alpha, so the two views agree bit-for-bit.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::ranktest::RankSummary;
use crate::special::two_sided_normal_p;

/// Hard cap on the model count: the partition count (Bell number) grows
/// super-exponentially; Bell(9) = 21147 is the largest we enumerate.
pub const MAX_MODELS: usize = 9;

/// One pairwise hypothesis "models a and b perform alike".
#[derive(Debug, Clone, PartialEq)]
pub struct PairHypothesis {
    /// 1-based index in the lexicographic pair enumeration.
    pub index: usize,
    pub model_a: String,
    pub model_b: String,
    /// Rank-difference z statistic; `None` when p-values were supplied
    /// directly rather than derived from ranks.
    pub z: Option<f64>,
    /// Two-sided unadjusted p-value.
    pub p_raw: f64,
}

/// One exhaustive index set together with a partition that generates it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveSet {
    /// 1-based pair indices, sorted ascending.
    pub pairs: Vec<usize>,
    /// Blocks of 0-based model indices whose internal pairs are `pairs`.
    pub partition: Vec<Vec<usize>>,
}

/// All exhaustive sets for k models, including the empty set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveSetFamily {
    pub k: usize,
    /// Deterministic order (lexicographic by pair indices).
    pub sets: Vec<ExhaustiveSet>,
}

impl ExhaustiveSetFamily {
    /// Number of pairwise hypotheses, k(k-1)/2.
    pub fn n_pairs(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    pub fn nonempty_count(&self) -> usize {
        self.sets.iter().filter(|s| !s.pairs.is_empty()).count()
    }
}

/// Whether a hypothesis is rejected at the report's alpha.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Rejected,
    Retained,
}

impl Decision {
    /// Wording used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Decision::Rejected => "Rejected",
            Decision::Retained => "Failed to be rejected",
        }
    }
}

/// A pairwise hypothesis with its adjusted p-value and decision.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustedHypothesis {
    pub index: usize,
    pub model_a: String,
    pub model_b: String,
    pub z: Option<f64>,
    pub p_raw: f64,
    /// Bergmann-Hommel adjusted p-value; always >= p_raw.
    pub apv: f64,
    pub decision: Decision,
}

/// Full outcome of the procedure at one significance level.
#[derive(Debug, Clone, PartialEq)]
pub struct PosthocReport {
    pub alpha: f64,
    /// In pair-index order; report writers sort by ascending APV.
    pub hypotheses: Vec<AdjustedHypothesis>,
    /// 1-based indices of retained hypotheses.
    pub acceptance_set: BTreeSet<usize>,
}

impl PosthocReport {
    pub fn rejected_count(&self) -> usize {
        self.hypotheses
            .iter()
            .filter(|h| h.decision == Decision::Rejected)
            .count()
    }
}

/// Two-sided rank z-tests for every unordered model pair.
///
/// For pair (i, j): z = (R_i - R_j) / sqrt(k(k+1)/(6n)), p = 2 Phi(-|z|).
/// Pairs are ordered lexicographically by model declaration order.
pub fn pairwise_p_values(ranks: &RankSummary) -> Vec<PairHypothesis> {
    let k = ranks.models.len();
    let se = ((k * (k + 1)) as f64 / (6.0 * ranks.n_sims as f64)).sqrt();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    let mut index = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            index += 1;
            let z = (ranks.avg_ranks[i] - ranks.avg_ranks[j]) / se;
            out.push(PairHypothesis {
                index,
                model_a: ranks.models[i].clone(),
                model_b: ranks.models[j].clone(),
                z: Some(z),
                p_raw: two_sided_normal_p(z),
            });
        }
    }
    out
}

/// Build hypotheses from externally supplied raw p-values.
///
/// `pairs` lists `(model_a, model_b, p_raw)`; model order of first
/// appearance defines the declaration order, and all k(k-1)/2 pairs must be
/// present exactly once.
pub fn hypotheses_from_p_values(pairs: &[(String, String, f64)]) -> Result<Vec<PairHypothesis>> {
    let mut models: Vec<String> = Vec::new();
    for (a, b, p) in pairs {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::Validation(format!(
                "p-value {p} for pair ({a}, {b}) is outside [0, 1]"
            )));
        }
        for name in [a, b] {
            if !models.contains(name) {
                models.push(name.clone());
            }
        }
    }
    let k = models.len();
    let m = k * (k - 1) / 2;
    if pairs.len() != m {
        return Err(Error::Validation(format!(
            "{} pairs given but {k} models need {m}",
            pairs.len()
        )));
    }
    let idx_of = |name: &str| models.iter().position(|m| m == name).unwrap();
    let mut slots: Vec<Option<PairHypothesis>> = vec![None; m];
    for (a, b, p) in pairs {
        let (mut i, mut j) = (idx_of(a), idx_of(b));
        if i == j {
            return Err(Error::Validation(format!("pair ({a}, {b}) repeats a model")));
        }
        let (a, b) = if i < j { (a, b) } else { (b, a) };
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let index = pair_index(i, j, k);
        if slots[index - 1].is_some() {
            return Err(Error::Validation(format!("duplicate pair ({a}, {b})")));
        }
        slots[index - 1] = Some(PairHypothesis {
            index,
            model_a: a.clone(),
            model_b: b.clone(),
            z: None,
            p_raw: *p,
        });
    }
    Ok(slots.into_iter().map(|s| s.expect("all slots filled")).collect())
}

/// 1-based index of pair (i, j), i < j, in lexicographic order.
fn pair_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k);
    i * k - i * (i + 1) / 2 + (j - i - 1) + 1
}

/// Enumerate every exhaustive index set for k models.
///
/// Walks all partitions of the model set (restricted growth strings), maps
/// each partition to the pair indices internal to its blocks, and
/// deduplicates on the sorted index set. The all-singletons partition
/// contributes the empty set.
pub fn enumerate_exhaustive_sets(k: usize) -> Result<ExhaustiveSetFamily> {
    if k < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 models to form pair hypotheses, got {k}"
        )));
    }
    if k > MAX_MODELS {
        return Err(Error::Capacity(format!(
            "exhaustive sets are enumerated over all partitions of the models, \
             whose count (the Bell number) grows super-exponentially; \
             k = {k} exceeds the supported maximum of {MAX_MODELS}"
        )));
    }

    let mut dedup: BTreeMap<Vec<usize>, Vec<Vec<usize>>> = BTreeMap::new();
    // The first model is always in block 1; later positions choose any used
    // label or open the next one (restricted growth strings).
    let mut assignment = vec![1usize; k];
    visit_partitions(&mut assignment, 1, 1, &mut |assign| {
        let n_blocks = *assign.iter().max().unwrap();
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); n_blocks];
        for (model, &b) in assign.iter().enumerate() {
            blocks[b - 1].push(model);
        }
        let mut pairs = Vec::new();
        for block in &blocks {
            for (pos, &i) in block.iter().enumerate() {
                for &j in &block[pos + 1..] {
                    pairs.push(pair_index(i, j, k));
                }
            }
        }
        pairs.sort_unstable();
        dedup.entry(pairs).or_insert(blocks);
    });

    let sets = dedup
        .into_iter()
        .map(|(pairs, partition)| ExhaustiveSet { pairs, partition })
        .collect();
    Ok(ExhaustiveSetFamily { k, sets })
}

/// Recursively enumerate restricted growth strings: position `pos` may use
/// any block label in 1..=max_used+1.
fn visit_partitions(assign: &mut Vec<usize>, pos: usize, max_used: usize, visit: &mut impl FnMut(&[usize])) {
    if pos == assign.len() {
        visit(assign);
        return;
    }
    for label in 1..=(max_used + 1) {
        assign[pos] = label;
        visit_partitions(assign, pos + 1, max_used.max(label), visit);
    }
}

fn check_family(hypotheses: &[PairHypothesis], family: &ExhaustiveSetFamily) -> Result<()> {
    if hypotheses.len() != family.n_pairs() {
        return Err(Error::Validation(format!(
            "{} hypotheses do not match the family for k = {} models ({} pairs)",
            hypotheses.len(),
            family.k,
            family.n_pairs()
        )));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Smallest raw p-value inside a set, scaled by the set size.
fn scaled_min_p(set: &ExhaustiveSet, hypotheses: &[PairHypothesis]) -> f64 {
    let min_p = set
        .pairs
        .iter()
        .map(|&idx| hypotheses[idx - 1].p_raw)
        .fold(f64::INFINITY, f64::min);
    set.pairs.len() as f64 * min_p
}

/// Indices (1-based) of retained hypotheses: the union of exhaustive sets I
/// with min{p_i : i in I} > alpha / |I|.
pub fn acceptance_set(
    hypotheses: &[PairHypothesis],
    family: &ExhaustiveSetFamily,
    alpha: f64,
) -> Result<BTreeSet<usize>> {
    check_family(hypotheses, family)?;
    check_alpha(alpha)?;
    let mut retained = BTreeSet::new();
    for set in &family.sets {
        if set.pairs.is_empty() {
            continue;
        }
        // min p > alpha/|I|, evaluated in product form to match the APVs.
        if scaled_min_p(set, hypotheses) > alpha {
            retained.extend(set.pairs.iter().copied());
        }
    }
    Ok(retained)
}

/// Compute Bergmann-Hommel adjusted p-values and decisions at `alpha`.
pub fn bergmann_hommel_apv(
    hypotheses: &[PairHypothesis],
    family: &ExhaustiveSetFamily,
    alpha: f64,
) -> Result<PosthocReport> {
    check_family(hypotheses, family)?;
    check_alpha(alpha)?;

    let m = hypotheses.len();
    let mut max_scaled = vec![0.0f64; m];
    for set in &family.sets {
        if set.pairs.is_empty() {
            continue;
        }
        let t = scaled_min_p(set, hypotheses);
        for &idx in &set.pairs {
            if t > max_scaled[idx - 1] {
                max_scaled[idx - 1] = t;
            }
        }
    }

    let accepted = acceptance_set(hypotheses, family, alpha)?;
    let adjusted: Vec<AdjustedHypothesis> = hypotheses
        .iter()
        .map(|h| {
            let apv = max_scaled[h.index - 1].min(1.0);
            let decision = if apv <= alpha {
                Decision::Rejected
            } else {
                Decision::Retained
            };
            debug_assert_eq!(
                decision == Decision::Retained,
                accepted.contains(&h.index),
                "acceptance set and APV decision disagree for pair {}",
                h.index
            );
            AdjustedHypothesis {
                index: h.index,
                model_a: h.model_a.clone(),
                model_b: h.model_b.clone(),
                z: h.z,
                p_raw: h.p_raw,
                apv,
                decision,
            }
        })
        .collect();

    Ok(PosthocReport {
        alpha,
        hypotheses: adjusted,
        acceptance_set: accepted,
    })
}
