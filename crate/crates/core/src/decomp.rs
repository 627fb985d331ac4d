//! Interval decompositions: aligned dyadic blocks, the mass-balanced
//! admissible tree over `[N]`, and the two-intervals-and-a-point cover.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::variation::{sup_variation, PartialSumPath};

/// `(k 2^i, (k+1) 2^i]` as a half-open integer interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicInterval {
    pub k: usize,
    pub i: u32,
}

impl DyadicInterval {
    /// Exclusive left end.
    pub fn start(&self) -> usize {
        self.k << self.i
    }

    /// Inclusive right end.
    pub fn end(&self) -> usize {
        (self.k + 1) << self.i
    }

    pub fn len(&self) -> usize {
        1 << self.i
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Splits `(lo, hi]` into disjoint aligned dyadic blocks by taking, from the
/// left, the largest aligned block that still fits. The result has at most
/// two blocks of each size.
pub fn binary_decompose(lo: usize, hi: usize, level: u32) -> Result<Vec<DyadicInterval>> {
    let top = 1usize
        .checked_shl(level)
        .filter(|_| level < usize::BITS)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} too large")))?;
    if lo >= hi || hi > top {
        return Err(Error::IntervalOutOfRange(format!("({lo}, {hi}] within (0, {top}]")));
    }
    let mut out = Vec::new();
    let mut at = lo;
    while at < hi {
        let mut i = if at == 0 { level } else { at.trailing_zeros().min(level) };
        while at + (1 << i) > hi {
            i -= 1;
        }
        out.push(DyadicInterval { k: at >> i, i });
        at += 1 << i;
    }
    Ok(out)
}

pub type NodeId = usize;

/// One admissible interval `I_{k,s}`. Intervals are 1-based and inclusive;
/// empty intervals are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MassNode {
    pub level: usize,
    pub lo: usize,
    pub hi: usize,
    /// Normalized mass.
    pub mass: f64,
    /// The admissible point separating the children; it sits on `level + 1`.
    pub splitter: usize,
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub parent: Option<NodeId>,
}

impl MassNode {
    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, lo: usize, hi: usize) -> bool {
        self.lo <= lo && hi <= self.hi
    }
}

/// Mass-balanced hierarchy of admissible intervals.
///
/// Each node splits into a maximal left piece holding strictly less than
/// half of its mass, one splitter point, and a maximal right piece holding at
/// most half. Inside zero-mass stretches the splitter is the leftmost point.
#[derive(Clone, Debug)]
pub struct MassTree {
    weights: Vec<f64>,
    prefix: Vec<f64>,
    normalization: f64,
    nodes: Vec<MassNode>,
    levels: Vec<Vec<NodeId>>,
    splitter_node: Vec<NodeId>,
}

impl MassTree {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Normalized weights `w_n`, index `n - 1`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Raw total mass that was divided out.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &MassNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[MassNode] {
        &self.nodes
    }

    /// Nonempty admissible intervals on level `k`, left to right.
    pub fn level(&self, k: usize) -> impl Iterator<Item = &MassNode> {
        self.levels.get(k).into_iter().flatten().map(move |&id| &self.nodes[id])
    }

    /// Deepest level holding a nonempty interval.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Normalized mass of `[lo, hi]` (1-based, inclusive; empty when `lo > hi`).
    pub fn mass(&self, lo: usize, hi: usize) -> f64 {
        if lo > hi {
            0.0
        } else {
            self.prefix[hi] - self.prefix[lo - 1]
        }
    }

    /// The node whose splitter is `n`, and the level of that admissible point.
    pub fn splitter_of(&self, n: usize) -> (NodeId, usize) {
        let id = self.splitter_node[n - 1];
        (id, self.nodes[id].level + 1)
    }
}

pub fn build_mass_tree(weights: &[f64]) -> Result<MassTree> {
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite(i + 1));
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { index: i + 1, value: w });
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        prefix.push(acc);
    }
    let n = weights.len();
    let mut tree = MassTree {
        weights,
        prefix,
        normalization: total,
        nodes: Vec::with_capacity(n),
        levels: Vec::new(),
        splitter_node: vec![usize::MAX; n],
    };
    // Explicit stack; skewed weights give depth up to N.
    let mut stack = vec![(1usize, n, 0usize, None::<NodeId>, false)];
    while let Some((lo, hi, level, parent, is_right)) = stack.pop() {
        let base = tree.prefix[lo - 1];
        let half = tree.prefix[hi] - base;
        // First p in [lo, hi] with 2 M([lo, p]) >= M([lo, hi]).
        let (mut a, mut b) = (lo, hi);
        while a < b {
            let mid = a + (b - a) / 2;
            if 2.0 * (tree.prefix[mid] - base) >= half {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        let splitter = a;
        let id = tree.nodes.len();
        tree.nodes.push(MassNode {
            level,
            lo,
            hi,
            mass: half,
            splitter,
            left: None,
            right: None,
            parent,
        });
        if tree.levels.len() <= level {
            tree.levels.push(Vec::new());
        }
        tree.levels[level].push(id);
        tree.splitter_node[splitter - 1] = id;
        if let Some(pid) = parent {
            if is_right {
                tree.nodes[pid].right = Some(id);
            } else {
                tree.nodes[pid].left = Some(id);
            }
        }
        // Push right first so the left subtree is numbered first.
        if splitter < hi {
            stack.push((splitter + 1, hi, level + 1, Some(id), true));
        }
        if splitter > lo {
            stack.push((lo, splitter - 1, level + 1, Some(id), false));
        }
    }
    for ids in &mut tree.levels {
        ids.sort_by_key(|&id| tree.nodes[id].lo);
    }
    Ok(tree)
}

/// `left ∪ {point} ∪ right` covering a query interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalCover {
    pub left: Option<NodeId>,
    pub point: usize,
    /// Level of `point` as an admissible point.
    pub point_level: usize,
    pub right: Option<NodeId>,
    /// Inclusive bounds of the union.
    pub lo: usize,
    pub hi: usize,
    /// Normalized mass of the union.
    pub mass: f64,
}

/// Covers `J = [lo, hi]` by at most two admissible intervals and the unique
/// admissible point of minimal level inside `J`. The cover carries at most
/// twice the mass of `J`.
pub fn cover_interval(tree: &MassTree, lo: usize, hi: usize) -> Result<IntervalCover> {
    if lo > hi {
        return Err(Error::EmptyInterval);
    }
    if lo == 0 || hi > tree.len() {
        return Err(Error::IntervalOutOfRange(format!("[{lo}, {hi}] in [1, {}]", tree.len())));
    }
    let mut id = tree.root();
    loop {
        let node = tree.node(id);
        if (lo..=hi).contains(&node.splitter) {
            break;
        }
        let child = if hi < node.splitter { node.left } else { node.right };
        id = child.expect("every index is a splitter, so a containing child exists");
    }
    let x = tree.node(id);
    let point = x.splitter;
    let left = (lo < point).then(|| {
        let mut at = x.left.expect("points left of the splitter belong to the left child");
        while let Some(r) = tree.node(at).right.filter(|&r| tree.node(r).lo <= lo) {
            at = r;
        }
        at
    });
    let right = (point < hi).then(|| {
        let mut at = x.right.expect("points right of the splitter belong to the right child");
        while let Some(l) = tree.node(at).left.filter(|&l| tree.node(l).hi >= hi) {
            at = l;
        }
        at
    });
    let cover_lo = left.map_or(point, |l| tree.node(l).lo);
    let cover_hi = right.map_or(point, |r| tree.node(r).hi);
    Ok(IntervalCover {
        left,
        point,
        point_level: x.level + 1,
        right,
        lo: cover_lo,
        hi: cover_hi,
        mass: tree.mass(cover_lo, cover_hi),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quality {
    Good,
    Bad,
}

/// Marks every admissible interval `I` as good when
/// `max_{I' ⊆ I} |S_{I'}|^2 <= B M(I) ln ln N`.
pub fn classify_good_bad(
    tree: &MassTree,
    path: &PartialSumPath,
    threshold: f64,
    n: usize,
) -> Result<BTreeMap<(usize, usize), Quality>> {
    if n < 16 {
        return Err(Error::SizeTooSmall { n, min: 16 });
    }
    if path.len() != tree.len() {
        return Err(Error::SizeMismatch { expected: tree.len(), got: path.len() });
    }
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold B = {threshold} must be positive")));
    }
    let lnln = (n as f64).ln().ln();
    let mut out = BTreeMap::new();
    for node in tree.nodes() {
        let local = path.window(node.lo, node.hi)?;
        let s = sup_variation(&local).value;
        let q = if s * s <= threshold * node.mass * lnln { Quality::Good } else { Quality::Bad };
        out.insert((node.lo, node.hi), q);
    }
    Ok(out)
}
