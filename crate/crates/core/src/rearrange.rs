//! Rearrangements of coefficient sequences: dyadic magnitude classes, block
//! permutations, random signs, the uniform baseline, moment estimates for
//! randomly permuted sums, and a sparse Haar rearrangement.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::onsys::{haar_indices, CoeffSeq};
use crate::seed;

/// Indices (1-based) grouped by `2^{-j-1} < |a_n|²/Σ|a|² <= 2^{-j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    /// Class `j` for every `j < cutoff` that is nonempty, indices ascending.
    pub classes: BTreeMap<u32, Vec<usize>>,
    /// Zero coefficients and classes `j >= cutoff`, ascending.
    pub tail: Vec<usize>,
    /// `⌈2 ln N⌉`.
    pub cutoff: u32,
}

impl BlockPartition {
    /// `N'`, the number of indices outside the tail.
    pub fn head_len(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }
}

/// Magnitude class of a normalized mass `q` in `(0, 1]`.
pub fn magnitude_class(q: f64) -> u32 {
    let mut j = (-q.log2()).floor().max(0.0) as i64;
    while j > 0 && q > (-(j as f64)).exp2() {
        j -= 1;
    }
    while q <= (-(j as f64) - 1.0).exp2() {
        j += 1;
    }
    j as u32
}

pub fn dyadic_blocks(coeffs: &CoeffSeq) -> Result<BlockPartition> {
    let total = coeffs.total_mass();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let n = coeffs.len();
    let cutoff = (2.0 * (n as f64).ln()).ceil() as u32;
    let mut classes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut tail = Vec::new();
    for (i, a) in coeffs.coeffs().iter().enumerate() {
        let q = a.norm_sqr() / total;
        if q == 0.0 {
            tail.push(i + 1);
            continue;
        }
        let j = magnitude_class(q);
        if j >= cutoff {
            tail.push(i + 1);
        } else {
            classes.entry(j).or_default().push(i + 1);
        }
    }
    Ok(BlockPartition { classes, tail, cutoff })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanMode {
    Identity,
    /// Uniformly random permutation.
    Uniform,
    /// Uniform class order, uniform order within each class, tail last.
    Block,
    /// Identity order with independent uniform signs.
    Signs,
}

impl PlanMode {
    pub fn name(self) -> &'static str {
        match self {
            PlanMode::Identity => "IDENTITY",
            PlanMode::Uniform => "UNIFORM",
            PlanMode::Block => "BLOCK",
            PlanMode::Signs => "SIGNS",
        }
    }

    /// Stable small id used in seed derivation.
    pub fn id(self) -> u64 {
        match self {
            PlanMode::Identity => 0,
            PlanMode::Uniform => 1,
            PlanMode::Block => 2,
            PlanMode::Signs => 3,
        }
    }
}

/// `ψ_n = ε_n φ_{π(n)}`: position `n` of the rearranged sequence carries
/// `ε_n a_{π(n)}`. `permutation[n - 1] = π(n)`, 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangementPlan {
    pub mode: PlanMode,
    pub seed: u64,
    pub permutation: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Vec<i8>>,
    #[serde(skip)]
    pub blocks: Option<BlockPartition>,
}

pub fn check_permutation(perm: &[usize]) -> Result<()> {
    let n = perm.len();
    let mut seen = vec![false; n + 1];
    for (i, &p) in perm.iter().enumerate() {
        if p == 0 || p > n {
            return Err(Error::NotAPermutation(format!("entry {} is {p}, outside 1..={n}", i + 1)));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotAPermutation(format!("value {p} repeats")));
        }
    }
    Ok(())
}

impl RearrangementPlan {
    pub fn identity(n: usize) -> Self {
        Self { mode: PlanMode::Identity, seed: 0, permutation: (1..=n).collect(), signs: None, blocks: None }
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        check_permutation(&self.permutation)?;
        if let Some(s) = &self.signs {
            if s.len() != self.len() {
                return Err(Error::SizeMismatch { expected: self.len(), got: s.len() });
            }
            if let Some(i) = s.iter().position(|&e| e != 1 && e != -1) {
                return Err(Error::InvalidArgument(format!("sign {} is {}, not ±1", i + 1, s[i])));
            }
        }
        Ok(())
    }

    /// The plan undoing this one under [`apply_plan`].
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (n, &p) in self.permutation.iter().enumerate() {
            inv[p - 1] = n + 1;
        }
        let signs = self
            .signs
            .as_ref()
            .map(|s| inv.iter().map(|&m| s[m - 1]).collect());
        Self { mode: self.mode, seed: self.seed, permutation: inv, signs, blocks: None }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: Self = serde_json::from_str(text)?;
        plan.validate()?;
        Ok(plan)
    }
}

/// Deterministic in `(coeffs, mode, seed)`.
pub fn sample_plan(coeffs: &CoeffSeq, mode: PlanMode, seed: u64) -> Result<RearrangementPlan> {
    let n = coeffs.len();
    let mut rng = seed::rng(seed);
    let mut plan = RearrangementPlan::identity(n);
    plan.mode = mode;
    plan.seed = seed;
    match mode {
        PlanMode::Identity => {}
        PlanMode::Uniform => plan.permutation.shuffle(&mut rng),
        PlanMode::Signs => {
            plan.signs = Some((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect());
        }
        PlanMode::Block => {
            let blocks = dyadic_blocks(coeffs)?;
            let mut order: Vec<u32> = blocks.classes.keys().copied().collect();
            order.shuffle(&mut rng);
            let mut within: BTreeMap<u32, Vec<usize>> = blocks.classes.clone();
            for members in within.values_mut() {
                members.shuffle(&mut rng);
            }
            plan.permutation = order
                .iter()
                .flat_map(|j| within[j].iter().copied())
                .chain(blocks.tail.iter().copied())
                .collect();
            plan.blocks = Some(blocks);
        }
    }
    Ok(plan)
}

/// Reorders coefficients together with their basis functions.
pub fn apply_plan(coeffs: &CoeffSeq, plan: &RearrangementPlan) -> Result<CoeffSeq> {
    if plan.len() != coeffs.len() {
        return Err(Error::SizeMismatch { expected: coeffs.len(), got: plan.len() });
    }
    plan.validate()?;
    let (a, b) = (coeffs.coeffs(), coeffs.basis());
    let mut out_a = Vec::with_capacity(a.len());
    let mut out_b = Vec::with_capacity(b.len());
    for (n, &p) in plan.permutation.iter().enumerate() {
        let eps = plan.signs.as_ref().map_or(1.0, |s| s[n] as f64);
        out_a.push(a[p - 1] * eps);
        out_b.push(b[p - 1]);
    }
    CoeffSeq::with_basis(out_a, out_b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    /// 0 when exact.
    pub stderr: f64,
    pub exact: bool,
    /// Permutations averaged over.
    pub trials: usize,
}

/// Largest `M` enumerated exhaustively.
pub const EXACT_MAX_M: usize = 8;

fn max_prefix_sq(xs: &[f64], order: &[usize]) -> f64 {
    let mut s = 0.0;
    let mut best = 0.0f64;
    for &i in order {
        s += xs[i];
        best = best.max(s * s);
    }
    best
}

/// `Σ_{I∈P} max_{I'⊆I} (Σ_{j∈I'} x_{ψ(j)})²` for blocks of length `l`.
fn block_interior_sq(xs: &[f64], order: &[usize], l: usize) -> f64 {
    order
        .chunks(l)
        .map(|chunk| {
            let (mut s, mut lo, mut hi) = (0.0f64, 0.0f64, 0.0f64);
            for &i in chunk {
                s += xs[i];
                lo = lo.min(s);
                hi = hi.max(s);
            }
            (hi - lo).powi(2)
        })
        .sum()
}

fn permutation_moment<F>(m: usize, trials: usize, seed: u64, force_sampling: bool, stat: F) -> Result<MomentEstimate>
where
    F: Fn(&[usize]) -> f64,
{
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one value".into()));
    }
    if m <= EXACT_MAX_M && !force_sampling {
        let mut total = 0.0;
        let mut count = 0usize;
        for perm in (0..m).permutations(m) {
            total += stat(&perm);
            count += 1;
        }
        return Ok(MomentEstimate { mean: total / count as f64, stderr: 0.0, exact: true, trials: count });
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..m).collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        order.shuffle(&mut rng);
        let v = stat(&order);
        sum += v;
        sum_sq += v * v;
    }
    let t = trials as f64;
    let mean = sum / t;
    let stderr = if trials > 1 {
        ((sum_sq - t * mean * mean).max(0.0) / (t - 1.0) / t).sqrt()
    } else {
        f64::NAN
    };
    Ok(MomentEstimate { mean, stderr, exact: false, trials })
}

/// `E[max_k (x_{ψ(1)} + ... + x_{ψ(k)})²]` over uniform `ψ`; exhaustive for
/// `M <= 8`, otherwise `trials` seeded draws.
pub fn garsia_maxsum_moment(xs: &[f64], trials: usize, seed: u64) -> Result<MomentEstimate> {
    permutation_moment(xs.len(), trials, seed, false, |o| max_prefix_sq(xs, o))
}

/// Monte Carlo estimate at any `M`.
pub fn garsia_maxsum_moment_sampled(xs: &[f64], trials: usize, seed: u64) -> Result<MomentEstimate> {
    permutation_moment(xs.len(), trials, seed, true, |o| max_prefix_sq(xs, o))
}

/// `(Σx)² + Σx²`.
pub fn garsia_bound(xs: &[f64]) -> f64 {
    let s: f64 = xs.iter().sum();
    s * s + xs.iter().map(|x| x * x).sum::<f64>()
}

/// `C(M-1, L-1)^{-1} Σ_{|S|=L} ((Σ_S x)² + Σ_S x²)` in closed form.
pub fn block_moment_bound(xs: &[f64], l: usize) -> f64 {
    let m = xs.len();
    let sq: f64 = xs.iter().map(|x| x * x).sum();
    if m <= 1 {
        return 2.0 * sq;
    }
    let s: f64 = xs.iter().sum();
    2.0 * sq + (l as f64 - 1.0) / (m as f64 - 1.0) * (s * s - sq)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockMomentCheck {
    pub moment: MomentEstimate,
    pub bound: f64,
    /// `moment / bound`; 0 when both vanish.
    pub ratio: f64,
}

/// Estimates `E[Σ_{I∈P} max_{I'⊆I} (Σ_{j∈I'} x_{ψ(j)})²]` for the partition
/// of `[M]` into runs of length `l` and compares it with the subset-average
/// bound.
pub fn block_moment_bound_check(xs: &[f64], l: usize, trials: usize, seed: u64) -> Result<BlockMomentCheck> {
    let m = xs.len();
    if l == 0 || l > m {
        return Err(Error::InvalidArgument(format!("block length {l} must lie in 1..={m}")));
    }
    let moment = permutation_moment(m, trials, seed, false, |o| block_interior_sq(xs, o, l))?;
    let bound = block_moment_bound(xs, l);
    let ratio = if bound == 0.0 { 0.0 } else { moment.mean / bound };
    Ok(BlockMomentCheck { moment, bound, ratio })
}

/// A Haar function, addressed by level so deep levels do not overflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HaarFn {
    Constant,
    /// `H_{k,j}`, `1 <= j <= 2^k`.
    Kj { k: u32, j: usize },
}

impl HaarFn {
    pub fn from_position(position: usize) -> Self {
        match haar_indices(position) {
            None => HaarFn::Constant,
            Some((k, j)) => HaarFn::Kj { k, j },
        }
    }

    /// Position in the natural Haar order, if it fits in `usize`.
    pub fn position(self) -> Option<usize> {
        match self {
            HaarFn::Constant => Some(1),
            HaarFn::Kj { k, j } => 1usize.checked_shl(k).filter(|_| k < usize::BITS)?.checked_add(j),
        }
    }

    /// Whether the open supports are disjoint.
    pub fn disjoint(self, other: HaarFn) -> bool {
        match (self, other) {
            (HaarFn::Kj { k: ka, j: ja }, HaarFn::Kj { k: kb, j: jb }) => {
                let (coarse, fine, shift) =
                    if ka <= kb { (ja, jb, kb - ka) } else { (jb, ja, ka - kb) };
                (fine - 1).checked_shr(shift).unwrap_or(0) != coarse - 1
            }
            _ => false,
        }
    }
}

fn is_psi_position(position: usize) -> bool {
    position >= 4 && (position - 2).is_power_of_two()
}

/// First `n` functions of a rearranged Haar system: the disjoint-support
/// subsequence `Ψ = (H_{k,2})_{k>=1}` with the remaining functions `ρ`
/// inserted, in natural order, whenever the count of `ρ`'s among the first
/// `m` outputs can grow without exceeding `w(m)`. `w[m - 1]` is `w(m)`.
pub fn haar_counterexample_system(n: usize, w: &[usize]) -> Result<Vec<HaarFn>> {
    if w.len() < n {
        return Err(Error::SizeMismatch { expected: n, got: w.len() });
    }
    if let Some(i) = w.windows(2).position(|p| p[1] < p[0]) {
        return Err(Error::NonMonotoneRate(i + 2));
    }
    let mut rho = (1usize..).filter(|&p| !is_psi_position(p));
    let mut next_psi = 1u32;
    let mut inserted = 0usize;
    let mut out = Vec::with_capacity(n);
    for m in 1..=n {
        if inserted < w[m - 1] {
            out.push(HaarFn::from_position(rho.next().expect("infinite")));
            inserted += 1;
        } else {
            out.push(HaarFn::Kj { k: next_psi, j: 2 });
            next_psi += 1;
        }
    }
    Ok(out)
}

/// Coefficients on a Haar ordering; fails when a position overflows.
pub fn haar_ordering_coeffs(coeffs: Vec<Complex64>, fns: &[HaarFn]) -> Result<CoeffSeq> {
    let basis = fns
        .iter()
        .map(|f| f.position().ok_or_else(|| Error::InvalidArgument(format!("{f:?} has no usize position"))))
        .collect::<Result<Vec<_>>>()?;
    CoeffSeq::with_basis(coeffs, basis)
}
