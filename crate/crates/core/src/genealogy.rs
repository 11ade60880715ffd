//! Ancestral partitions traced through simulated histories, and empirical
//! coalescence statistics: the pair-coalescence probability `c_N` and the
//! distribution of merger signatures.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fitnesswf::{fill_y, normalize_fitness, sample_parents_rng, FitnessSpec, CumulativeSampler};
use crate::frontprop::{
    sample_invariant_gumbel_rng, step_front_rng, NoiseSpec, PopulationState,
};
use crate::partition::{signature_from_assignment, MergerSignature, Partition, PartitionPath};
use crate::rng::{derive_seed, rng_from_seed, streams, SimRng};
use crate::stats::{ratio_estimate, Accumulator, Estimate};

/// Parent rows of a run: `rows[t][j]` is the generation-`t` parent of child
/// `j` of generation `t + 1`. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestryHistory {
    n_pop: usize,
    rows: Vec<Vec<u32>>,
}

impl AncestryHistory {
    pub fn new(n_pop: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        if n_pop == 0 {
            return Err(invalid("population size must be positive"));
        }
        if rows.is_empty() {
            return Err(invalid("history needs at least one generation"));
        }
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n_pop {
                return Err(invalid(format!("row {t} has {} entries, expected {n_pop}", row.len())));
            }
            if let Some(&p) = row.iter().find(|&&p| p as usize >= n_pop) {
                return Err(invalid(format!("row {t} names parent {p} outside 0..{n_pop}")));
            }
        }
        Ok(AncestryHistory { n_pop, rows })
    }

    pub fn n_pop(&self) -> usize {
        self.n_pop
    }

    pub fn generations(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n_pop {
            Ok(())
        } else {
            Err(invalid(format!("individual {i} outside 0..{}", self.n_pop)))
        }
    }
}

/// Ancestral partition of `sample` (distinct members of the last
/// generation), recorded at backward times `0, 1, ..., T`. Element `k + 1`
/// of each partition is `sample[k]`.
pub fn trace_partition_path(history: &AncestryHistory, sample: &[usize]) -> Result<PartitionPath> {
    if sample.is_empty() {
        return Err(invalid("sample must be nonempty"));
    }
    if sample.len() > history.n_pop {
        return Err(invalid(format!("sample of {} from N={}", sample.len(), history.n_pop)));
    }
    let mut seen = vec![false; history.n_pop];
    for &i in sample {
        history.check_index(i)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(invalid(format!("individual {i} sampled twice")));
        }
    }
    let mut ancestors: Vec<u32> = sample.iter().map(|&i| i as u32).collect();
    let mut path = PartitionPath::new(0.0, Partition::singletons(sample.len())?);
    for (step, row) in history.rows.iter().rev().enumerate() {
        for a in ancestors.iter_mut() {
            *a = row[*a as usize];
        }
        path.push((step + 1) as f64, Partition::from_labels(&ancestors)?)?;
    }
    Ok(path)
}

/// Backward time at which `i` and `j` first share an ancestor, or `None`
/// if they do not within the history.
pub fn pairwise_coalescence_time(history: &AncestryHistory, i: usize, j: usize) -> Result<Option<usize>> {
    history.check_index(i)?;
    history.check_index(j)?;
    if i == j {
        return Err(invalid("coalescence time needs two distinct individuals"));
    }
    let (mut a, mut b) = (i as u32, j as u32);
    for (step, row) in history.rows.iter().rev().enumerate() {
        a = row[a as usize];
        b = row[b as usize];
        if a == b {
            return Ok(Some(step + 1));
        }
    }
    Ok(None)
}

/// Microscopic model whose generations are sampled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum PopulationModel {
    /// Wright-Fisher with i.i.d. random fitness.
    Wf { fitness: FitnessSpec },
    /// Front propagation. Each chain starts from the invariant measure for
    /// Gumbel noise (from all zeros otherwise) and discards `burn_in` steps.
    Front { noise: NoiseSpec, beta: f64, burn_in: usize },
}

impl PopulationModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            PopulationModel::Wf { fitness } => fitness.validate(),
            PopulationModel::Front { noise, beta, .. } => {
                noise.validate()?;
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(invalid(format!("beta must be positive, got {beta}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            PopulationModel::Wf { fitness } => format!("wright-fisher/{}", fitness.name()),
            PopulationModel::Front { noise, beta, .. } => format!("front/{noise:?}/beta={beta}"),
        }
    }
}

/// A running chain of generations of one model.
enum Chain {
    Wf { spec: FitnessSpec, y: Vec<f64> },
    Front { noise: NoiseSpec, state: PopulationState },
}

impl Chain {
    fn start(model: &PopulationModel, n_pop: usize, rng: &mut SimRng) -> Result<Chain> {
        model.validate()?;
        Ok(match *model {
            PopulationModel::Wf { fitness } => Chain::Wf {
                spec: fitness,
                y: vec![0.0; n_pop],
            },
            PopulationModel::Front { noise, burn_in, .. } => {
                let mut state = match noise {
                    NoiseSpec::Gumbel { beta, .. } => sample_invariant_gumbel_rng(n_pop, beta, rng)?,
                    _ => PopulationState::zeros(n_pop)?,
                };
                for _ in 0..burn_in {
                    state = step_front_rng(&state, &noise, rng)?.0;
                }
                Chain::Front { noise, state }
            }
        })
    }

    /// Parents of all children of the next generation.
    fn next_row(&mut self, rng: &mut SimRng) -> Result<Vec<u32>> {
        match self {
            Chain::Wf { spec, y } => {
                fill_y(spec, rng, y);
                let eta = normalize_fitness(y)?;
                Ok(sample_parents_rng(&eta, rng)?.parent_of)
            }
            Chain::Front { noise, state } => {
                let (next, row) = step_front_rng(state, noise, rng)?;
                let m = next.max();
                *state = next.shifted(-m);
                Ok(row.parent_of)
            }
        }
    }
}

/// Empirical coalescence summary of single generations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescenceStats {
    /// Fraction of replicates in which a uniform pair of distinct children
    /// shares its parent.
    pub pair_coalescence_estimate: f64,
    /// Binomial standard error of the pair estimate.
    pub standard_error: f64,
    /// Mean of `Σ ν_i(ν_i - 1) / (N(N - 1))` over the same generations.
    pub accumulated_estimate: f64,
    pub accumulated_se: f64,
    /// Signatures of a uniform sample of `n` children, one per replicate.
    pub merger_counts: BTreeMap<MergerSignature, u64>,
    pub total_merger_opportunities: u64,
}

impl CoalescenceStats {
    /// Pair estimate minus/plus one standard error, clamped to `[0, 1]`.
    pub fn interval(&self) -> (f64, f64) {
        let p = self.pair_coalescence_estimate;
        let e = self.standard_error;
        ((p - e).clamp(0.0, 1.0), (p + e).clamp(0.0, 1.0))
    }
}

struct ReplicateOutcome {
    pair_hit: bool,
    accumulated: f64,
    signature: MergerSignature,
}

fn replicate_generation(
    model: &PopulationModel,
    n_pop: usize,
    sample_size: usize,
    seed: u64,
) -> Result<ReplicateOutcome> {
    let mut rng = rng_from_seed(seed);
    let mut chain = Chain::start(model, n_pop, &mut rng)?;
    let row = chain.next_row(&mut rng)?;
    let mut counts = vec![0u32; n_pop];
    for &p in &row {
        counts[p as usize] += 1;
    }
    let nf = n_pop as f64;
    let pair_sum: f64 = counts.iter().map(|&c| c as f64 * (c as f64 - 1.0)).sum();
    let picked = sample_indices(&mut rng, n_pop, sample_size);
    let parents: Vec<u32> = picked.iter().map(|i| row[i]).collect();
    Ok(ReplicateOutcome {
        pair_hit: parents[0] == parents[1],
        accumulated: pair_sum / (nf * (nf - 1.0)),
        signature: signature_from_assignment(&parents),
    })
}

/// Runs `replicates` independent generations of `model` with population
/// `n_pop`. Replicate `r` uses the seed `derive_seed(seed, REPLICATE, r)`.
/// In each, `sample_size` distinct children are drawn uniformly; the first
/// two give the pair estimate and all of them a merger signature.
pub fn estimate_cn(
    model: &PopulationModel,
    n_pop: usize,
    sample_size: usize,
    replicates: usize,
    seed: u64,
) -> Result<CoalescenceStats> {
    model.validate()?;
    if n_pop < 2 {
        return Err(invalid(format!("c_N needs N >= 2, got {n_pop}")));
    }
    if replicates == 0 {
        return Err(invalid("need at least one replicate"));
    }
    if sample_size < 2 || sample_size > n_pop {
        return Err(invalid(format!("sample size must lie in 2..={n_pop}, got {sample_size}")));
    }
    let outcomes: Vec<ReplicateOutcome> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            replicate_generation(
                model,
                n_pop,
                sample_size,
                derive_seed(seed, streams::REPLICATE, r as u64),
            )
        })
        .collect::<Result<_>>()?;
    let mut hits = 0u64;
    let mut acc = Accumulator::default();
    let mut merger_counts = BTreeMap::new();
    for o in &outcomes {
        hits += o.pair_hit as u64;
        acc.push(o.accumulated);
        *merger_counts.entry(o.signature.clone()).or_insert(0) += 1;
    }
    let r = replicates as f64;
    let p = hits as f64 / r;
    let accumulated = acc.estimate();
    Ok(CoalescenceStats {
        pair_coalescence_estimate: p,
        standard_error: (p * (1.0 - p) / r).sqrt(),
        accumulated_estimate: accumulated.mean,
        accumulated_se: accumulated.se,
        merger_counts,
        total_merger_opportunities: replicates as u64,
    })
}

/// `c_N` by conditioning on the other `N - 1` weights: with
/// `S' = Y_2 + ... + Y_N`, `c_N = N E[g(S')]` where
/// `g(s) = E[(Y / (Y + s))^2]` is computed by quadrature.
pub fn conditional_cn(spec: &FitnessSpec, n_pop: usize, generations: usize, seed: u64) -> Result<Estimate> {
    spec.validate()?;
    if n_pop < 2 {
        return Err(invalid(format!("c_N needs N >= 2, got {n_pop}")));
    }
    if generations == 0 {
        return Err(invalid("need at least one generation"));
    }
    const CHUNK: usize = 256;
    let nf = n_pop as f64;
    let chunks = generations.div_ceil(CHUNK);
    let parts: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(seed, streams::REPLICATE, c as u64));
            let mut y = vec![0.0; n_pop - 1];
            let mut acc = Accumulator::default();
            for _ in 0..CHUNK.min(generations - c * CHUNK) {
                fill_y(spec, &mut rng, &mut y);
                let s: f64 = y.iter().sum();
                let g = spec.expectation(|v| (v / (v + s)).powi(2), 1e-9);
                acc.push(nf * g);
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    parts.iter().for_each(|p| total.merge(p));
    Ok(total.estimate())
}

/// Aggregated signatures over the steps of a set of paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergerStatistics {
    pub counts: BTreeMap<MergerSignature, u64>,
    pub steps: u64,
    pub merge_steps: u64,
}

impl MergerStatistics {
    /// Frequency of each merging signature among steps with a merge, with
    /// its binomial standard error.
    pub fn conditional_distribution(&self) -> Vec<(MergerSignature, Estimate)> {
        let m = self.merge_steps as f64;
        self.counts
            .iter()
            .filter(|(sig, _)| sig.is_merge())
            .map(|(sig, &c)| {
                let p = c as f64 / m;
                (sig.clone(), Estimate { mean: p, se: (p * (1.0 - p) / m).sqrt() })
            })
            .collect()
    }
}

/// Signatures of every step of every path, including steps without a merge.
pub fn merger_statistics(paths: &[PartitionPath]) -> Result<MergerStatistics> {
    if paths.is_empty() {
        return Err(invalid("need at least one path"));
    }
    let mut counts = BTreeMap::new();
    let (mut steps, mut merge_steps) = (0u64, 0u64);
    for path in paths {
        for sig in path.signatures() {
            steps += 1;
            merge_steps += sig.is_merge() as u64;
            *counts.entry(sig).or_insert(0) += 1;
        }
    }
    Ok(MergerStatistics { counts, steps, merge_steps })
}

/// First-merger harness results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMergerStats {
    pub generations: u64,
    pub samples: u64,
    /// Signatures of the first merger of each sample that merged.
    pub first_mergers: BTreeMap<MergerSignature, u64>,
    pub merge_events: u64,
}

impl FirstMergerStats {
    /// Share of the target signature among first mergers, from the
    /// per-generation counts returned with the statistics, with a standard
    /// error clustered by generation.
    pub fn fraction(per_generation: &[(u64, u64)]) -> Estimate {
        let xs: Vec<f64> = per_generation.iter().map(|p| p.0 as f64).collect();
        let ys: Vec<f64> = per_generation.iter().map(|p| p.1 as f64).collect();
        ratio_estimate(&xs, &ys)
    }
}

/// First-merger statistics for samples of `n` lineages. Every generation
/// contributes `⌊N/n⌋` disjoint samples of children; each sample is traced
/// one step back, so a sample that merges reports its first merger and a
/// fresh sample is used afterwards. Generations are drawn until at least
/// `min_generations` have run and `min_events` merges are seen, or
/// `max_generations` is reached.
///
/// Returns the aggregate and, per generation, the pair (events of the
/// `target` signature, merge events) for clustered standard errors.
#[allow(clippy::too_many_arguments)]
pub fn first_merger_statistics(
    model: &PopulationModel,
    n_pop: usize,
    n: usize,
    target: &MergerSignature,
    min_events: u64,
    min_generations: usize,
    max_generations: usize,
    seed: u64,
) -> Result<(FirstMergerStats, Vec<(u64, u64)>)> {
    model.validate()?;
    if n < 2 || n > n_pop {
        return Err(invalid(format!("sample size must lie in 2..={n_pop}, got {n}")));
    }
    if max_generations == 0 {
        return Err(invalid("need at least one generation"));
    }
    const BATCH: usize = 64;
    let groups = n_pop / n;
    let mut stats = FirstMergerStats {
        generations: 0,
        samples: 0,
        first_mergers: BTreeMap::new(),
        merge_events: 0,
    };
    let mut per_generation = Vec::new();
    let mut batch = 0u64;
    let mut target_so_far = 0u64;
    while (stats.merge_events < min_events || (stats.generations as usize) < min_generations)
        && (stats.generations as usize) < max_generations
    {
        let todo = BATCH.min(max_generations - stats.generations as usize);
        let results: Vec<BTreeMap<MergerSignature, u64>> = (0..todo)
            .into_par_iter()
            .map(|g| {
                let idx = batch * BATCH as u64 + g as u64;
                let mut rng = rng_from_seed(derive_seed(seed, streams::SAMPLE, idx));
                first_mergers_one_generation(model, n_pop, n, groups, &mut rng)
            })
            .collect::<Result<_>>()?;
        for hist in results {
            let mut merges = 0;
            for (sig, c) in hist {
                if sig.is_merge() {
                    merges += c;
                    *stats.first_mergers.entry(sig.clone()).or_insert(0) += c;
                }
            }
            let hits = hist_target(&stats, target) - target_so_far;
            target_so_far += hits;
            per_generation.push((hits, merges));
            stats.merge_events += merges;
            stats.samples += groups as u64;
            stats.generations += 1;
        }
        batch += 1;
    }
    Ok((stats, per_generation))
}

fn hist_target(stats: &FirstMergerStats, target: &MergerSignature) -> u64 {
    stats.first_mergers.get(target).copied().unwrap_or(0)
}

fn first_mergers_one_generation(
    model: &PopulationModel,
    n_pop: usize,
    n: usize,
    groups: usize,
    rng: &mut SimRng,
) -> Result<BTreeMap<MergerSignature, u64>> {
    let mut hist = BTreeMap::new();
    let mut record = |parents: &[usize]| {
        *hist.entry(signature_from_assignment(parents)).or_insert(0) += 1;
    };
    match *model {
        // Given the weights the children choose parents independently, so
        // disjoint samples need only their own parents drawn.
        PopulationModel::Wf { fitness } => {
            let mut y = vec![0.0; n_pop];
            fill_y(&fitness, rng, &mut y);
            let eta = normalize_fitness(&y)?;
            let sampler = CumulativeSampler::new(eta.weights());
            let mut parents = vec![0usize; n];
            for _ in 0..groups {
                parents.iter_mut().for_each(|p| *p = sampler.sample(rng));
                record(&parents);
            }
        }
        PopulationModel::Front { .. } => {
            let mut chain = Chain::start(model, n_pop, rng)?;
            let row = chain.next_row(rng)?;
            for g in 0..groups {
                let parents: Vec<usize> = (0..n).map(|k| row[g * n + k] as usize).collect();
                record(&parents);
            }
        }
    }
    Ok(hist)
}

/// Merger signatures of `n` children over `replicates` independent
/// generations of the Wright-Fisher model (`CumulativeSampler` draws the
/// `n` parents).
pub fn one_generation_signatures(
    spec: &FitnessSpec,
    n_pop: usize,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<BTreeMap<MergerSignature, u64>> {
    spec.validate()?;
    if n < 2 || n > n_pop {
        return Err(invalid(format!("sample size must lie in 2..={n_pop}, got {n}")));
    }
    let sigs: Vec<MergerSignature> = (0..replicates)
        .into_par_iter()
        .map_init(
            || vec![0.0; n_pop],
            |y, r| {
                let mut rng = rng_from_seed(derive_seed(seed, streams::REPLICATE, r as u64));
                fill_y(spec, &mut rng, y);
                let eta = normalize_fitness(y)?;
                let sampler = CumulativeSampler::new(eta.weights());
                let parents: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
                Ok(signature_from_assignment(&parents))
            },
        )
        .collect::<Result<_>>()?;
    let mut hist = BTreeMap::new();
    for s in sigs {
        *hist.entry(s).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Machine-readable `c_N` report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CnReport {
    pub model: String,
    #[serde(rename = "N")]
    pub n_pop: usize,
    pub n: usize,
    pub replicates: usize,
    #[serde(rename = "c_N_estimate")]
    pub cn_estimate: f64,
    #[serde(rename = "c_N_se")]
    pub cn_se: f64,
    pub signature_histogram: BTreeMap<MergerSignature, u64>,
}

impl CnReport {
    pub fn new(model: &PopulationModel, n_pop: usize, n: usize, replicates: usize, stats: &CoalescenceStats) -> Self {
        CnReport {
            model: model.name(),
            n_pop,
            n,
            replicates,
            cn_estimate: stats.pair_coalescence_estimate,
            cn_se: stats.standard_error,
            signature_histogram: stats.merger_counts.clone(),
        }
    }
}
