//! Set partitions of `{1..n}` in canonical form, the refinement order, block
//! merges and merger signatures.
//!
//! A partition is stored with every block sorted ascending and the blocks
//! ordered by their least element, so structural equality is partition
//! equality. The text form is `{1,2}|{3}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// The finest partition `{{1},{2},...,{n}}`.
    pub fn singletons(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("partition ground set must be nonempty"));
        }
        Ok(Partition {
            n,
            blocks: (1..=n).map(|i| vec![i]).collect(),
        })
    }

    /// The coarsest partition `{{1,...,n}}`.
    pub fn single_block(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("partition ground set must be nonempty"));
        }
        Ok(Partition {
            n,
            blocks: vec![(1..=n).collect()],
        })
    }

    /// Builds a partition from arbitrary blocks, validating coverage and
    /// disjointness and canonicalizing the order.
    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("partition ground set must be nonempty"));
        }
        let mut seen = vec![false; n + 1];
        let mut blocks = blocks;
        for block in &mut blocks {
            if block.is_empty() {
                return Err(invalid("partition blocks must be nonempty"));
            }
            for &e in block.iter() {
                if e == 0 || e > n {
                    return Err(invalid(format!("element {e} outside 1..={n}")));
                }
                if seen[e] {
                    return Err(invalid(format!("element {e} appears twice")));
                }
                seen[e] = true;
            }
            block.sort_unstable();
        }
        if let Some(missing) = (1..=n).find(|&e| !seen[e]) {
            return Err(invalid(format!("element {missing} is not covered")));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { n, blocks })
    }

    /// Groups element `i + 1` with every element carrying the same label.
    pub fn from_labels<L: Ord + Copy>(labels: &[L]) -> Result<Self> {
        if labels.is_empty() {
            return Err(invalid("partition ground set must be nonempty"));
        }
        // Elements are visited in increasing order, so blocks come out
        // sorted and ordered by least element once sorted by first entry.
        let mut by_label: BTreeMap<L, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(i + 1);
        }
        let mut blocks: Vec<Vec<usize>> = by_label.into_values().collect();
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition {
            n: labels.len(),
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block holding element `e` (1-based element).
    pub fn block_of(&self, e: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.binary_search(&e).is_ok())
    }

    /// Label per element: `labels[e - 1]` is the block index of `e`.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (bi, block) in self.blocks.iter().enumerate() {
            for &e in block {
                labels[e - 1] = bi;
            }
        }
        labels
    }

    pub fn is_refinement_of(&self, coarse: &Partition) -> Result<bool> {
        is_refinement(self, coarse)
    }
}

/// True iff every block of `fine` lies inside a single block of `coarse`.
pub fn is_refinement(fine: &Partition, coarse: &Partition) -> Result<bool> {
    if fine.n != coarse.n {
        return Err(Error::SizeMismatch(fine.n, coarse.n));
    }
    let labels = coarse.labels();
    Ok(fine.blocks.iter().all(|block| {
        let l = labels[block[0] - 1];
        block.iter().all(|&e| labels[e - 1] == l)
    }))
}

/// Unions each group of blocks (0-based positions in canonical order).
/// Blocks not mentioned in any group are left untouched.
pub fn merge_blocks(p: &Partition, groups: &[Vec<usize>]) -> Result<Partition> {
    let nb = p.block_count();
    let mut owner: Vec<Option<usize>> = vec![None; nb];
    for (gi, group) in groups.iter().enumerate() {
        for &bi in group {
            if bi >= nb {
                return Err(Error::BlockIndexOutOfRange {
                    index: bi,
                    blocks: nb,
                });
            }
            if owner[bi].is_some() {
                return Err(Error::OverlappingGroups(bi));
            }
            owner[bi] = Some(gi);
        }
    }
    let mut merged: Vec<Vec<usize>> = vec![Vec::new(); groups.len()];
    let mut blocks = Vec::with_capacity(nb);
    for (bi, block) in p.blocks.iter().enumerate() {
        match owner[bi] {
            Some(gi) => merged[gi].extend_from_slice(block),
            None => blocks.push(block.clone()),
        }
    }
    blocks.extend(merged.into_iter().filter(|b| !b.is_empty()));
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_unstable_by_key(|b| b[0]);
    Ok(Partition { n: p.n, blocks })
}

/// Shape of one coalescence step: `b` blocks, of which groups of sizes
/// `group_sizes` (each at least 2, sorted descending) merge and `s` stay
/// untouched, leaving `group_sizes.len() + s` blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MergerSignature {
    pub b: usize,
    pub group_sizes: Vec<usize>,
    pub s: usize,
}

impl MergerSignature {
    pub fn new(mut group_sizes: Vec<usize>, s: usize) -> Result<Self> {
        if group_sizes.iter().any(|&g| g < 2) {
            return Err(invalid("merged group sizes must be at least 2"));
        }
        group_sizes.sort_unstable_by(|a, b| b.cmp(a));
        let b = s + group_sizes.iter().sum::<usize>();
        if b == 0 {
            return Err(invalid("signature must involve at least one block"));
        }
        Ok(MergerSignature { b, group_sizes, s })
    }

    /// Signature of a step in which nothing merges.
    pub fn no_merge(b: usize) -> Self {
        MergerSignature {
            b,
            group_sizes: Vec::new(),
            s: b,
        }
    }

    /// Number of merged groups.
    pub fn a(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn is_merge(&self) -> bool {
        !self.group_sizes.is_empty()
    }

    /// Blocks remaining after the step.
    pub fn blocks_after(&self) -> usize {
        self.a() + self.s
    }

    /// Number of distinct partitions of `b` labelled blocks with this shape.
    pub fn multiplicity(&self) -> f64 {
        let mut log = ln_factorial(self.b) - ln_factorial(self.s);
        for &g in &self.group_sizes {
            log -= ln_factorial(g);
        }
        let mut i = 0;
        while i < self.group_sizes.len() {
            let mut j = i;
            while j < self.group_sizes.len() && self.group_sizes[j] == self.group_sizes[i] {
                j += 1;
            }
            log -= ln_factorial(j - i);
            i = j;
        }
        log.exp().round()
    }
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

impl fmt::Display for MergerSignature {
    /// `b;b_1,...,b_a;s`, e.g. `4;2,2;0`, or `4;;4` for no merger.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Vec<String> = self.group_sizes.iter().map(|g| g.to_string()).collect();
        write!(f, "{};{};{}", self.b, sizes.join(","), self.s)
    }
}

impl FromStr for MergerSignature {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Parse(text.to_string());
        let parts: Vec<&str> = text.trim().split(';').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let b: usize = parts[0].trim().parse().map_err(|_| bad())?;
        let sizes = if parts[1].trim().is_empty() {
            Vec::new()
        } else {
            parts[1]
                .split(',')
                .map(|g| g.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        let s: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let sig = MergerSignature::new(sizes, s).map_err(|_| bad())?;
        if sig.b != b {
            return Err(bad());
        }
        Ok(sig)
    }
}

impl Serialize for MergerSignature {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MergerSignature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Reads off how the blocks of `before` were grouped to produce `after`.
pub fn merger_signature(before: &Partition, after: &Partition) -> Result<MergerSignature> {
    if !is_refinement(before, after)? {
        return Err(Error::NotRefinement {
            fine: before.to_string(),
            coarse: after.to_string(),
        });
    }
    let labels = after.labels();
    let mut counts = vec![0usize; after.block_count()];
    for block in &before.blocks {
        counts[labels[block[0] - 1]] += 1;
    }
    let s = counts.iter().filter(|&&c| c == 1).count();
    let sizes = counts.into_iter().filter(|&c| c >= 2).collect();
    let mut sig = MergerSignature::new(sizes, s)?;
    sig.b = before.block_count();
    Ok(sig)
}

/// Signature of the step from `before` when block `i` is sent to group
/// `assignment[i]` (an arbitrary label per block).
pub fn signature_from_assignment<L: Ord + Copy>(assignment: &[L]) -> MergerSignature {
    let mut counts: BTreeMap<L, usize> = BTreeMap::new();
    for &l in assignment {
        *counts.entry(l).or_default() += 1;
    }
    let s = counts.values().filter(|&&c| c == 1).count();
    let mut sizes: Vec<usize> = counts.values().copied().filter(|&c| c >= 2).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    MergerSignature {
        b: assignment.len(),
        group_sizes: sizes,
        s,
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str("{")?;
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(s.to_string());
        let mut blocks = Vec::new();
        for part in s.trim().split('|') {
            let inner = part
                .trim()
                .strip_prefix('{')
                .and_then(|p| p.strip_suffix('}'))
                .ok_or_else(bad)?;
            let block = inner
                .split(',')
                .map(|e| e.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
        }
        let n = blocks.iter().map(Vec::len).sum();
        Partition::from_blocks(n, blocks)
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A coalescing path: each state refines the next.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionPath {
    times: Vec<f64>,
    states: Vec<Partition>,
}

impl PartitionPath {
    pub fn new(time: f64, initial: Partition) -> Self {
        PartitionPath {
            times: vec![time],
            states: vec![initial],
        }
    }

    /// Appends a state; it must come later and be coarser than the last one.
    pub fn push(&mut self, time: f64, state: Partition) -> Result<()> {
        let last = self.states.last().expect("path is never empty");
        let last_time = *self.times.last().expect("path is never empty");
        if time <= last_time {
            return Err(invalid(format!(
                "path times must increase ({time} after {last_time})"
            )));
        }
        if !is_refinement(last, &state)? {
            return Err(Error::NotRefinement {
                fine: last.to_string(),
                coarse: state.to_string(),
            });
        }
        self.times.push(time);
        self.states.push(state);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Partition] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &Partition {
        self.states.last().expect("path is never empty")
    }

    pub fn block_counts(&self) -> Vec<usize> {
        self.states.iter().map(Partition::block_count).collect()
    }

    /// State in force at time `t` (right-continuous step function).
    pub fn state_at(&self, t: f64) -> &Partition {
        let idx = self.times.partition_point(|&s| s <= t);
        &self.states[idx.saturating_sub(1)]
    }

    /// Signatures of consecutive steps.
    pub fn signatures(&self) -> Vec<MergerSignature> {
        self.states
            .windows(2)
            .map(|w| merger_signature(&w[0], &w[1]).expect("path states are nested"))
            .collect()
    }
}

/// All partitions of `{1..n}`, enumerated by restricted growth strings.
pub fn enumerate_partitions(n: usize) -> Vec<Partition> {
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        out.push(Partition::from_labels(&rgs).expect("nonempty"));
        // Advance to the next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            if rgs[i] <= maxes[i - 1] {
                rgs[i] += 1;
                maxes[i] = maxes[i - 1].max(rgs[i]);
                for j in i + 1..n {
                    rgs[j] = 0;
                    maxes[j] = maxes[i];
                }
                break;
            }
            i -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    #[test]
    fn singleton_examples() {
        assert_eq!(Partition::singletons(3).unwrap(), p("{1}|{2}|{3}"));
        assert_eq!(Partition::singletons(1).unwrap(), p("{1}"));
        assert_eq!(Partition::singletons(5).unwrap().block_count(), 5);
        assert!(Partition::singletons(0).is_err());
    }

    #[test]
    fn refinement_examples() {
        assert!(is_refinement(&p("{1}|{2}|{3}"), &p("{1,2}|{3}")).unwrap());
        assert!(!is_refinement(&p("{1,2}|{3}"), &p("{1,3}|{2}")).unwrap());
        assert!(is_refinement(&p("{1,2,3}"), &p("{1,2,3}")).unwrap());
        assert!(matches!(
            is_refinement(&p("{1}|{2}"), &p("{1,2,3}")),
            Err(Error::SizeMismatch(2, 3))
        ));
    }

    #[test]
    fn merge_examples() {
        let s3 = Partition::singletons(3).unwrap();
        assert_eq!(merge_blocks(&s3, &[vec![0, 1]]).unwrap(), p("{1,2}|{3}"));
        assert_eq!(merge_blocks(&s3, &[vec![0, 1, 2]]).unwrap(), p("{1,2,3}"));
        assert_eq!(
            merge_blocks(&p("{1,4}|{2}|{3}"), &[vec![1, 2]]).unwrap(),
            p("{1,4}|{2,3}")
        );
    }

    #[test]
    fn merge_rejects_bad_indices() {
        let s3 = Partition::singletons(3).unwrap();
        assert!(matches!(
            merge_blocks(&s3, &[vec![0, 3]]),
            Err(Error::BlockIndexOutOfRange { index: 3, blocks: 3 })
        ));
        assert!(matches!(
            merge_blocks(&s3, &[vec![0, 1], vec![1, 2]]),
            Err(Error::OverlappingGroups(1))
        ));
    }

    #[test]
    fn signature_examples() {
        let sig = merger_signature(&p("{1}|{2}|{3}"), &p("{1,2}|{3}")).unwrap();
        assert_eq!((sig.b, sig.group_sizes.clone(), sig.s), (3, vec![2], 1));
        let sig = merger_signature(&p("{1}|{2}|{3}|{4}"), &p("{1,2}|{3,4}")).unwrap();
        assert_eq!((sig.b, sig.group_sizes.clone(), sig.s), (4, vec![2, 2], 0));
        let four = Partition::singletons(4).unwrap();
        let sig = merger_signature(&four, &four).unwrap();
        assert_eq!((sig.b, sig.group_sizes.clone(), sig.s), (4, vec![], 4));
        assert!(merger_signature(&p("{1,2}|{3}"), &p("{1}|{2}|{3}")).is_err());
    }

    #[test]
    fn text_form() {
        let q = p("{3}|{1,2}");
        assert_eq!(q.to_string(), "{1,2}|{3}");
        assert!("{1,2}|{2}".parse::<Partition>().is_err());
        assert!("1,2".parse::<Partition>().is_err());
    }

    #[test]
    fn signature_display_and_multiplicity() {
        let sig = MergerSignature::new(vec![2, 2], 0).unwrap();
        assert_eq!(sig.to_string(), "4;2,2;0");
        assert_eq!(MergerSignature::no_merge(4).to_string(), "4;;4");
        assert_eq!("4;2,2;0".parse::<MergerSignature>().unwrap(), sig);
        assert_eq!("4;;4".parse::<MergerSignature>().unwrap(), MergerSignature::no_merge(4));
        assert!("5;2,2;0".parse::<MergerSignature>().is_err());
        // {12}{34}, {13}{24}, {14}{23}
        assert_eq!(sig.multiplicity(), 3.0);
        assert_eq!(MergerSignature::new(vec![2], 2).unwrap().multiplicity(), 6.0);
        assert_eq!(MergerSignature::new(vec![3], 1).unwrap().multiplicity(), 4.0);
    }

    #[test]
    fn bell_numbers() {
        let bell = [1, 2, 5, 15, 52, 203, 877];
        for (n, &b) in (1..=7).zip(bell.iter()) {
            let all = enumerate_partitions(n);
            assert_eq!(all.len(), b);
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), b);
        }
    }

    #[test]
    fn refinement_is_a_partial_order_exhaustively() {
        for n in 1..=6 {
            let all = enumerate_partitions(n);
            let rel: Vec<Vec<bool>> = all
                .iter()
                .map(|x| all.iter().map(|y| is_refinement(x, y).unwrap()).collect())
                .collect();
            for i in 0..all.len() {
                assert!(rel[i][i]);
                for j in 0..all.len() {
                    if i != j && rel[i][j] {
                        assert!(!rel[j][i], "antisymmetry fails for n={n}");
                    }
                    if !rel[i][j] {
                        continue;
                    }
                    for k in 0..all.len() {
                        if rel[j][k] {
                            assert!(rel[i][k], "transitivity fails for n={n}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn signatures_exhaustively_consistent() {
        // For every nested pair, the signature accounts for all blocks and
        // its multiplicity matches a direct count of coarsenings.
        for n in 1..=6 {
            let all = enumerate_partitions(n);
            for before in &all {
                let mut tally: BTreeMap<MergerSignature, usize> = BTreeMap::new();
                for after in &all {
                    match merger_signature(before, after) {
                        Ok(sig) => {
                            assert_eq!(sig.b, before.block_count());
                            assert_eq!(sig.blocks_after(), after.block_count());
                            assert_eq!(sig.b, sig.s + sig.group_sizes.iter().sum::<usize>());
                            *tally.entry(sig).or_default() += 1;
                        }
                        Err(e) => {
                            assert!(!is_refinement(before, after).unwrap(), "{e}");
                        }
                    }
                }
                for (sig, count) in tally {
                    assert_eq!(sig.multiplicity(), count as f64, "{sig}");
                }
            }
        }
    }

    #[test]
    fn path_rejects_splits() {
        let mut path = PartitionPath::new(0.0, p("{1,2}|{3}"));
        assert!(path.push(1.0, p("{1}|{2}|{3}")).is_err());
        assert!(path.push(0.0, p("{1,2,3}")).is_err());
        path.push(1.0, p("{1,2,3}")).unwrap();
        assert_eq!(path.block_counts(), vec![2, 1]);
        assert_eq!(path.state_at(0.5), &p("{1,2}|{3}"));
        assert_eq!(path.state_at(1.0), &p("{1,2,3}"));
    }

    fn partition_and_groups() -> impl Strategy<Value = (Partition, Vec<Vec<usize>>)> {
        (1usize..12)
            .prop_flat_map(|n| proptest::collection::vec(0usize..n, n))
            .prop_flat_map(|labels| {
                let part = Partition::from_labels(&labels).unwrap();
                let nb = part.block_count();
                (
                    Just(part),
                    proptest::collection::vec(0usize..nb.max(1) + 2, nb),
                )
            })
            .prop_map(|(part, group_labels)| {
                // Group label per block; labels >= nb mean "left alone".
                let nb = part.block_count();
                let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
                for (bi, &g) in group_labels.iter().enumerate() {
                    if g < nb {
                        groups.entry(g).or_default().push(bi);
                    }
                }
                (part, groups.into_values().collect())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn merge_then_signature_round_trips((part, groups) in partition_and_groups()) {
            let merged = merge_blocks(&part, &groups).unwrap();
            let canonical = Partition::from_blocks(merged.n(), merged.blocks().to_vec()).unwrap();
            prop_assert_eq!(&canonical, &merged);
            prop_assert!(is_refinement(&part, &merged).unwrap());
            let sig = merger_signature(&part, &merged).unwrap();
            let mut expected: Vec<usize> =
                groups.iter().map(Vec::len).filter(|&l| l >= 2).collect();
            expected.sort_unstable_by(|a, b| b.cmp(a));
            prop_assert_eq!(sig.group_sizes, expected);
            prop_assert_eq!(sig.b, part.block_count());
        }

        #[test]
        fn text_round_trip(labels in proptest::collection::vec(0usize..5, 1..10)) {
            let part = Partition::from_labels(&labels).unwrap();
            let back: Partition = part.to_string().parse().unwrap();
            prop_assert_eq!(back, part);
        }
    }
}
