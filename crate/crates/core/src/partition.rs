//! Set partitions of the coordinate set `{0, .., d-1}`.
//!
//! A [`Partition`] indexes a fixed-point subspace: the vectors that are
//! constant on every block. The lattice of partitions is ordered by
//! refinement; the finest partition has `d` singleton blocks and the coarsest
//! has one block.
//!
//! Elements are 0-based in the API. The textual encoding (`Display` /
//! `FromStr`) is 1-based, e.g. `1,3|2|4`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Default guard on the number of partitions an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// A set partition in canonical form.
///
/// Blocks are sorted internally and ordered by their smallest element, so two
/// partitions are equal iff they have the same blocks. The derived ordering
/// compares the restricted-growth labelling lexicographically, which is the
/// canonical order used for tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Builds the canonical partition from raw blocks of 0-based elements.
    pub fn from_blocks(d: usize, raw_blocks: Vec<Vec<usize>>) -> Result<Self> {
        canonicalize(raw_blocks, d)
    }

    /// Builds a partition from any block labelling of the coordinates.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Argument("partition of an empty set".into()));
        }
        let mut relabel = std::collections::HashMap::new();
        let mut canonical = Vec::with_capacity(labels.len());
        for &l in labels {
            let next = relabel.len();
            canonical.push(*relabel.entry(l).or_insert(next));
        }
        Ok(Self::from_canonical_labels(canonical))
    }

    fn from_canonical_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (e, &l) in labels.iter().enumerate() {
            blocks[l].push(e);
        }
        Partition { labels, blocks }
    }

    pub fn finest(d: usize) -> Self {
        Self::from_canonical_labels((0..d).collect())
    }

    pub fn coarsest(d: usize) -> Self {
        Self::from_canonical_labels(vec![0; d])
    }

    pub fn d(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Block id of every coordinate (restricted growth string).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn block_of(&self, element: usize) -> usize {
        self.labels[element]
    }

    /// The partition obtained by merging blocks `a` and `b`.
    pub fn merge(&self, a: usize, b: usize) -> Partition {
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let labels: Vec<usize> = self
            .labels
            .iter()
            .map(|&l| {
                if l == gone {
                    keep
                } else if l > gone {
                    l - 1
                } else {
                    l
                }
            })
            .collect();
        Self::from_canonical_labels(labels)
    }
}

impl Partition {
    /// Merges every block listed in `group` into one.
    pub fn merge_group(&self, group: &[usize]) -> Partition {
        let mut sorted = group.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut out = self.clone();
        if let Some((&keep, rest)) = sorted.split_first() {
            for &b in rest.iter().rev() {
                out = out.merge(keep, b);
            }
        }
        out
    }
}

/// Validates an exact cover of `{0, .., d-1}` and returns it in canonical form.
pub fn canonicalize(raw_blocks: Vec<Vec<usize>>, d: usize) -> Result<Partition> {
    if d == 0 {
        return Err(Error::Argument("d must be positive".into()));
    }
    let mut owner = vec![usize::MAX; d];
    for (b, block) in raw_blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::Argument(format!("block {b} is empty")));
        }
        for &e in block {
            if e >= d {
                return Err(Error::Coverage {
                    d,
                    detail: format!("element {} is outside the ground set", e + 1),
                });
            }
            if owner[e] != usize::MAX {
                return Err(Error::Overlap { element: e + 1 });
            }
            owner[e] = b;
        }
    }
    if let Some(missing) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::Coverage {
            d,
            detail: format!("element {} is not covered", missing + 1),
        });
    }
    Partition::from_labels(&owner)
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, e) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", e + 1)?;
            }
        }
        Ok(())
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses `1,3|2|4`; whitespace is ignored and `d` is the largest element.
    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            input: s.to_string(),
            reason,
        };
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(parse_err("empty input".into()));
        }
        let mut raw = Vec::new();
        let mut d = 0;
        for part in compact.split('|') {
            let mut block = Vec::new();
            for tok in part.split(',') {
                let v: usize = tok.parse().map_err(|_| parse_err(format!("bad element {tok:?}")))?;
                if v == 0 {
                    return Err(parse_err("elements are 1-based".into()));
                }
                d = d.max(v);
                block.push(v - 1);
            }
            raw.push(block);
        }
        canonicalize(raw, d)
    }
}

/// The pattern-avoidance class a partition is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartitionClass {
    All,
    NonCrossing,
    NonNesting,
    Interval,
}

impl PartitionClass {
    pub const ALL_CLASSES: [PartitionClass; 4] = [
        PartitionClass::All,
        PartitionClass::NonCrossing,
        PartitionClass::NonNesting,
        PartitionClass::Interval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PartitionClass::All => "all",
            PartitionClass::NonCrossing => "noncrossing",
            PartitionClass::NonNesting => "nonnesting",
            PartitionClass::Interval => "interval",
        }
    }
}

impl fmt::Display for PartitionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartitionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "all" => Ok(PartitionClass::All),
            "nc" | "noncrossing" => Ok(PartitionClass::NonCrossing),
            "nn" | "nonnesting" => Ok(PartitionClass::NonNesting),
            "interval" | "int" | "sparse" | "sparsity" => Ok(PartitionClass::Interval),
            other => Err(Error::Argument(format!("unknown partition class {other:?}"))),
        }
    }
}

// Two sorted blocks cross iff their merged label sequence has at least four runs
// (the pattern a < b < c < e with a, c in one block and b, e in the other).
fn blocks_cross(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    let mut runs = 0;
    let mut last: Option<bool> = None;
    while i < a.len() || j < b.len() {
        let from_a = j >= b.len() || (i < a.len() && a[i] < b[j]);
        if from_a {
            i += 1;
        } else {
            j += 1;
        }
        if last != Some(from_a) {
            runs += 1;
            if runs >= 4 {
                return true;
            }
            last = Some(from_a);
        }
    }
    false
}

// Arcs join consecutive elements of a block. Two blocks nest iff an arc of
// one lies strictly inside an arc of the other, i.e. iff the merged label
// sequence has an interior run of length at least two.
fn blocks_nest(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    let mut runs: Vec<usize> = Vec::new();
    let mut last: Option<bool> = None;
    while i < a.len() || j < b.len() {
        let from_a = j >= b.len() || (i < a.len() && a[i] < b[j]);
        if from_a {
            i += 1;
        } else {
            j += 1;
        }
        if last == Some(from_a) {
            *runs.last_mut().expect("a run is open") += 1;
        } else {
            runs.push(1);
            last = Some(from_a);
        }
    }
    runs.len() > 2 && runs[1..runs.len() - 1].iter().any(|&r| r >= 2)
}

fn blocks_compatible(class: PartitionClass, a: &[usize], b: &[usize]) -> bool {
    match class {
        PartitionClass::All => true,
        PartitionClass::NonCrossing => !blocks_cross(a, b),
        PartitionClass::NonNesting => !blocks_nest(a, b),
        PartitionClass::Interval => a[a.len() - 1] < b[0] || b[b.len() - 1] < a[0],
    }
}

/// True iff no pair of blocks exhibits the pattern forbidden by `class`.
pub fn is_in_class(p: &Partition, class: PartitionClass) -> bool {
    if class == PartitionClass::All {
        return true;
    }
    let blocks = p.blocks();
    (0..blocks.len()).all(|i| ((i + 1)..blocks.len()).all(|j| blocks_compatible(class, &blocks[i], &blocks[j])))
}

fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul(u128::from(n - i))
            .ok_or_else(|| Error::Overflow(format!("C({n},{k})")))?
            / u128::from(i + 1);
    }
    Ok(acc)
}

fn stirling2(d: usize, k: usize) -> Result<u128> {
    // row[j] = S(n, j), built up for n = 1..=d
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for n in 1..=d {
        for j in (1..=k.min(n)).rev() {
            let grown = (j as u128)
                .checked_mul(row[j])
                .and_then(|v| v.checked_add(row[j - 1]))
                .ok_or_else(|| Error::Overflow(format!("S({d},{k})")))?;
            row[j] = grown;
        }
        row[0] = 0;
    }
    Ok(row[k])
}

/// Number of class-`c` partitions of a `d`-set with exactly `k` blocks.
///
/// Stirling numbers of the second kind for [`PartitionClass::All`], Narayana
/// numbers for the non-crossing and non-nesting classes (equinumerous), and
/// `C(d-1, k-1)` for interval partitions.
pub fn count_partitions(d: usize, k: usize, class: PartitionClass) -> Result<u128> {
    if d == 0 || k == 0 || k > d {
        return Err(Error::Argument(format!("k={k} out of range for d={d}")));
    }
    let (n, kk) = (d as u64, k as u64);
    match class {
        PartitionClass::All => stirling2(d, k),
        PartitionClass::NonCrossing | PartitionClass::NonNesting => {
            let prod = binomial(n, kk)?
                .checked_mul(binomial(n, kk - 1)?)
                .ok_or_else(|| Error::Overflow(format!("N({d},{k})")))?;
            Ok(prod / u128::from(n))
        }
        PartitionClass::Interval => binomial(n - 1, kk - 1),
    }
}

/// Number of class-`c` partitions with at most `max_blocks` blocks, saturating
/// at `u128::MAX` on overflow.
pub fn count_partitions_up_to(d: usize, max_blocks: usize, class: PartitionClass) -> u128 {
    (1..=max_blocks.min(d))
        .map(|k| count_partitions(d, k, class).unwrap_or(u128::MAX))
        .fold(0u128, |acc, c| acc.saturating_add(c))
}

/// All class-`c` partitions with at most `max_blocks` blocks, in canonical order.
pub fn enumerate_partitions(d: usize, class: PartitionClass, max_blocks: usize) -> Result<Vec<Partition>> {
    enumerate_partitions_capped(d, class, max_blocks, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_partitions_capped(
    d: usize,
    class: PartitionClass,
    max_blocks: usize,
    cap: u128,
) -> Result<Vec<Partition>> {
    if d == 0 || max_blocks == 0 || max_blocks > d {
        return Err(Error::Argument(format!(
            "max_blocks={max_blocks} out of range for d={d}"
        )));
    }
    let count = count_partitions_up_to(d, max_blocks, class);
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut labels = Vec::with_capacity(d);
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    extend_prefix(d, class, max_blocks, &mut labels, &mut blocks, &mut out);
    Ok(out)
}

// Depth-first over restricted growth strings. A forbidden pattern in a prefix
// persists in every extension, and the pattern created by appending the
// current maximum always involves that element's block, so checking the
// extended block against the others is an exact prune.
fn extend_prefix(
    d: usize,
    class: PartitionClass,
    max_blocks: usize,
    labels: &mut Vec<usize>,
    blocks: &mut Vec<Vec<usize>>,
    out: &mut Vec<Partition>,
) {
    let e = labels.len();
    if e == d {
        out.push(Partition {
            labels: labels.clone(),
            blocks: blocks.clone(),
        });
        return;
    }
    for b in 0..blocks.len() {
        blocks[b].push(e);
        let ok = (0..blocks.len()).all(|o| o == b || blocks_compatible(class, &blocks[b], &blocks[o]));
        if ok {
            labels.push(b);
            extend_prefix(d, class, max_blocks, labels, blocks, out);
            labels.pop();
        }
        blocks[b].pop();
    }
    if blocks.len() < max_blocks {
        blocks.push(vec![e]);
        labels.push(blocks.len() - 1);
        extend_prefix(d, class, max_blocks, labels, blocks, out);
        labels.pop();
        blocks.pop();
    }
}

fn merged_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut m = Vec::with_capacity(a.len() + b.len());
    m.extend_from_slice(a);
    m.extend_from_slice(b);
    m.sort_unstable();
    m
}

/// Block-index pairs `(a, b)`, `a < b`, whose merge keeps `p` in `class`.
pub fn coarsen_pairs(p: &Partition, class: PartitionClass) -> Vec<(usize, usize)> {
    let blocks = p.blocks();
    let k = blocks.len();
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if class == PartitionClass::All {
                pairs.push((a, b));
                continue;
            }
            let merged = merged_sorted(&blocks[a], &blocks[b]);
            let ok = (0..k)
                .filter(|&o| o != a && o != b)
                .all(|o| blocks_compatible(class, &merged, &blocks[o]));
            if ok {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Closure of each two-block merge: starting from `{a, b}`, keep absorbing
/// any block that conflicts with the merged block until the result lies in
/// `class`. Returns the distinct block groups, sorted. Every single merge in
/// [`coarsen_pairs`] appears as a group of two; the larger groups are the
/// only way out of a partition with no admissible single merge.
pub fn closure_merges(p: &Partition, class: PartitionClass) -> Vec<Vec<usize>> {
    let blocks = p.blocks();
    let k = blocks.len();
    let mut groups = BTreeSet::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let mut group = vec![a, b];
            let mut merged = merged_sorted(&blocks[a], &blocks[b]);
            while let Some(o) = (0..k).find(|o| !group.contains(o) && !blocks_compatible(class, &merged, &blocks[*o])) {
                group.push(o);
                merged = merged_sorted(&merged, &blocks[o]);
            }
            group.sort_unstable();
            groups.insert(group);
        }
    }
    groups.into_iter().collect()
}

/// Every partition obtained from `p` by merging exactly two blocks while
/// staying in `class`.
pub fn coarsen(p: &Partition, class: PartitionClass) -> Result<Vec<Partition>> {
    let pairs = coarsen_pairs(p, class);
    if pairs.is_empty() {
        return Err(Error::NoCoarsening {
            partition: p.to_string(),
            class: class.to_string(),
        });
    }
    Ok(pairs.into_iter().map(|(a, b)| p.merge(a, b)).collect())
}

// Keeps the sequence of arc openers and closers of `p` and rematches them:
// first-in-first-out yields no nested arcs, last-in-first-out no crossings.
fn rematch_arcs(p: &Partition, fifo: bool) -> Partition {
    let d = p.d();
    let mut opens = vec![false; d];
    let mut closes = vec![false; d];
    for block in p.blocks() {
        for w in block.windows(2) {
            opens[w[0]] = true;
            closes[w[1]] = true;
        }
    }
    let mut pending = std::collections::VecDeque::new();
    let mut labels = vec![0; d];
    let mut next_label = 0;
    for i in 0..d {
        if closes[i] {
            let j = if fifo { pending.pop_front() } else { pending.pop_back() };
            labels[i] = labels[j.expect("every closer follows an opener")];
        } else {
            labels[i] = next_label;
            next_label += 1;
        }
        if opens[i] {
            pending.push_back(i);
        }
    }
    Partition::from_labels(&labels).expect("labels cover 0..d")
}

/// Block-count preserving bijection from non-crossing onto non-nesting
/// partitions. Defined on every partition; the image is always non-nesting.
pub fn noncrossing_to_nonnesting(p: &Partition) -> Partition {
    rematch_arcs(p, true)
}

/// Inverse of [`noncrossing_to_nonnesting`].
pub fn nonnesting_to_noncrossing(p: &Partition) -> Partition {
    rematch_arcs(p, false)
}

/// True iff every block of `p` lies inside a block of `q`.
pub fn refines(p: &Partition, q: &Partition) -> Result<bool> {
    if p.d() != q.d() {
        return Err(Error::DimensionMismatch {
            expected: p.d(),
            found: q.d(),
        });
    }
    Ok(p.blocks()
        .iter()
        .all(|block| block.iter().all(|&e| q.block_of(e) == q.block_of(block[0]))))
}

pub fn is_interval(p: &Partition) -> bool {
    is_in_class(p, PartitionClass::Interval)
}

/// Boundary set of an interval partition: `i` is present iff coordinates `i`
/// and `i + 1` lie in different blocks. This is the support of the difference
/// vector `θ_i − θ_{i+1}` of any generic block-constant `θ`.
pub fn interval_support_map(p: &Partition) -> Result<BTreeSet<usize>> {
    if !is_interval(p) {
        return Err(Error::NotInterval(p.to_string()));
    }
    let labels = p.labels();
    Ok((0..p.d().saturating_sub(1))
        .filter(|&i| labels[i] != labels[i + 1])
        .collect())
}

/// Inverse of [`interval_support_map`].
pub fn support_to_interval(support: &BTreeSet<usize>, d: usize) -> Result<Partition> {
    if d == 0 {
        return Err(Error::Argument("d must be positive".into()));
    }
    if let Some(&bad) = support.iter().find(|&&i| i + 1 >= d) {
        return Err(Error::Argument(format!("boundary {bad} out of range for d={d}")));
    }
    let mut labels = Vec::with_capacity(d);
    let mut current = 0;
    for i in 0..d {
        labels.push(current);
        if support.contains(&i) {
            current += 1;
        }
    }
    Ok(Partition::from_canonical_labels(labels))
}

/// A permutation of `{0, .., d-1}` stored as its image array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let d = image.len();
        let mut seen = vec![false; d];
        for &v in &image {
            if v >= d || seen[v] {
                return Err(Error::Argument(format!("{image:?} is not a bijection")));
            }
            seen[v] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(d: usize) -> Self {
        Permutation {
            image: (0..d).collect(),
        }
    }

    pub fn d(&self) -> usize {
        self.image.len()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Coordinate action `(g·x)_i = x_{g(i)}`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.image.iter().map(|&g| x[g]).collect()
    }
}

/// Uniform element of the stabilizer of `p`: an independent uniform shuffle
/// inside every block.
pub fn sample_stabilizer_permutation<R: Rng + ?Sized>(p: &Partition, rng: &mut R) -> Permutation {
    let mut image: Vec<usize> = (0..p.d()).collect();
    for block in p.blocks() {
        let mut targets = block.clone();
        targets.shuffle(rng);
        for (&src, &dst) in block.iter().zip(&targets) {
            image[src] = dst;
        }
    }
    Permutation { image }
}
