//! p-variation of finite complex paths.
//!
//! For increments `a_1..a_N` with partial sums `S_0 = 0, S_m = S_{m-1} + a_m`
//! the p-variation is the supremum of `(sum_I |sum_{n in I} a_n|^p)^{1/p}`
//! over families of disjoint subintervals of `[N]`.
//!
//! Two descriptions of the admissible families appear in the literature:
//! families of disjoint intervals, and increasing index sequences
//! `0 <= n_0 < ... < n_K <= N` with terms `|S_{n_l} - S_{n_{l-1}}|^p`. They
//! give the same supremum. A disjoint family sorted left to right is a
//! subsequence with some gaps, and every gap is itself an interval whose
//! term is nonnegative, so filling gaps (and extending to `0` and `N`) never
//! decreases the sum. Conversely every subsequence is a disjoint family. The
//! kernels here therefore optimize over covering partitions
//! `0 = n_0 < n_1 < ... < n_K = N`.
//!
//! Among partitions with the same value the kernels report the one with the
//! fewest breakpoints, then the lexicographically smallest.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest N accepted by [`variation_bruteforce`].
pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Relative tolerance used to decide that two partition values tie.
const TIE_RTOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementSeq {
    items: Vec<Complex64>,
}

impl IncrementSeq {
    pub fn new(items: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = items.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(i + 1));
        }
        Ok(Self { items })
    }

    pub fn from_real(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.items
    }
}

/// Partial sums `S_0 = 0, S_1, ..., S_N` together with the increments they
/// were accumulated from.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSumPath {
    increments: Vec<Complex64>,
    sums: Vec<Complex64>,
}

impl PartialSumPath {
    pub fn from_increments(increments: &[Complex64]) -> Result<Self> {
        Ok(prefix_path(&IncrementSeq::new(increments.to_vec())?))
    }

    pub fn from_real(xs: &[f64]) -> Result<Self> {
        Ok(prefix_path(&IncrementSeq::from_real(xs)?))
    }

    /// Number of increments N.
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// `S_0..S_N`; always has `len() + 1` entries.
    pub fn sums(&self) -> &[Complex64] {
        &self.sums
    }

    pub fn increments(&self) -> &[Complex64] {
        &self.increments
    }

    pub fn is_real(&self) -> bool {
        self.increments.iter().all(|z| z.im == 0.0)
    }

    /// Largest `|S_m|`.
    pub fn max_modulus(&self) -> f64 {
        self.sums.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// The path generated by increments `lo..=hi` (1-based), rebased at 0.
    pub fn window(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi + 1 || hi > self.len() {
            return Err(Error::IntervalOutOfRange(format!("[{lo}, {hi}] in [1, {}]", self.len())));
        }
        Ok(prefix_path(&IncrementSeq { items: self.increments[lo - 1..hi].to_vec() }))
    }
}

pub fn prefix_path(seq: &IncrementSeq) -> PartialSumPath {
    let mut sums = Vec::with_capacity(seq.len() + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    sums.push(acc);
    for &a in seq.as_slice() {
        acc += a;
        sums.push(acc);
    }
    PartialSumPath { increments: seq.as_slice().to_vec(), sums }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    /// The V^infinity functional handled by [`sup_variation`].
    Sup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ExactDp,
    BruteForce,
    DyadicUpper,
    ExtremaPruned,
    Lacunary,
    BlockL,
    BlockS,
    Sup,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationResult {
    pub value: f64,
    pub p: Exponent,
    /// Strictly increasing indices into `S_0..S_N`.
    pub breakpoints: Vec<usize>,
    pub method: Method,
}

impl VariationResult {
    /// Re-evaluates `(sum_l |S_{n_l} - S_{n_{l-1}}|^p)^{1/p}` from the breakpoints.
    pub fn recompute(&self, path: &PartialSumPath) -> f64 {
        let s = path.sums();
        let diffs = self.breakpoints.windows(2).map(|w| (s[w[1]] - s[w[0]]).norm());
        match self.p {
            Exponent::Finite(p) => diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p),
            Exponent::Sup => diffs.fold(0.0, f64::max),
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

#[inline]
fn pow_p(d: f64, p: f64) -> f64 {
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

#[inline]
fn tie_tol(best: f64) -> f64 {
    if best.is_finite() {
        TIE_RTOL * best.abs()
    } else {
        0.0
    }
}

/// Bounding radii of aligned dyadic blocks of a point sequence. The block
/// `k` on level `n` covers positions `k*2^n .. (k+1)*2^n` and is centred at
/// its first point.
struct BlockRadii {
    levels: Vec<Vec<f64>>,
}

impl BlockRadii {
    fn build(points: &[Complex64]) -> Self {
        let len = points.len();
        let mut levels = vec![Vec::new()];
        let mut n = 1;
        while (1usize << n) < len {
            let size = 1usize << n;
            let radii = points
                .chunks(size)
                .map(|block| {
                    let c = block[0];
                    block[1..].iter().map(|&q| (q - c).norm()).fold(0.0, f64::max)
                })
                .collect();
            levels.push(radii);
            n += 1;
        }
        Self { levels }
    }

    fn top(&self) -> usize {
        self.levels.len() - 1
    }

    #[inline]
    fn radius(&self, level: usize, start: usize) -> f64 {
        self.levels[level][start >> level]
    }
}

/// Exact DP over all covering partitions of `points[0..=m]`.
///
/// Backward recursion `W(i) = max_{j > i} |P_j - P_i|^p + W(j)`, `W(m) = 0`.
/// `W` is nonincreasing, so a dyadic block of candidates `j` starting at
/// `j0` is bounded by `W(j0) + (|P_{j0} - P_i| + r)^p` and skipped whenever
/// that bound cannot reach the incumbent. The pruning is exact.
///
/// Returns `(sum of p-th powers, breakpoint positions)`.
fn dp_kernel(points: &[Complex64], p: f64) -> (f64, Vec<usize>) {
    let m = points.len() - 1;
    if m == 0 {
        return (0.0, vec![0]);
    }
    let radii = BlockRadii::build(points);
    let top = radii.top();
    let mut w = vec![0.0f64; m + 1];
    let mut count = vec![0u32; m + 1];
    let mut next = vec![usize::MAX; m + 1];

    for i in (0..m).rev() {
        let origin = points[i];
        let mut best = f64::NEG_INFINITY;
        let mut best_count = u32::MAX;
        let mut best_j = usize::MAX;
        let mut j = i + 1;
        while j <= m {
            let d = (points[j] - origin).norm();
            let mut level = (j.trailing_zeros() as usize).min(top);
            loop {
                if level == 0 {
                    let val = w[j] + pow_p(d, p);
                    let c = count[j] + 1;
                    let tol = tie_tol(best);
                    if val > best + tol
                        || (val >= best - tol
                            && (c < best_count || (c == best_count && j < best_j)))
                    {
                        best = val;
                        best_count = c;
                        best_j = j;
                    }
                    j += 1;
                    break;
                }
                let bound = w[j] + pow_p(d + radii.radius(level, j), p);
                if bound < best - tie_tol(best) {
                    j += 1 << level;
                    break;
                }
                level -= 1;
            }
        }
        w[i] = best;
        count[i] = best_count;
        next[i] = best_j;
    }

    let mut breakpoints = vec![0];
    let mut at = 0;
    while at != m {
        at = next[at];
        breakpoints.push(at);
    }
    (w[0], breakpoints)
}

fn finite_result(sum_p: f64, p: f64, breakpoints: Vec<usize>, method: Method) -> VariationResult {
    VariationResult { value: sum_p.max(0.0).powf(1.0 / p), p: Exponent::Finite(p), breakpoints, method }
}

/// Exact p-variation by dynamic programming with exact block pruning.
pub fn variation_exact(path: &PartialSumPath, p: f64) -> Result<VariationResult> {
    check_exponent(p)?;
    let (sum_p, breakpoints) = dp_kernel(path.sums(), p);
    Ok(finite_result(sum_p, p, breakpoints, Method::ExactDp))
}

/// Literal enumeration of all `2^{N-1}` covering partitions.
pub fn variation_bruteforce(path: &PartialSumPath, p: f64) -> Result<VariationResult> {
    check_exponent(p)?;
    let n = path.len();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::BruteForceBudget { n, max: BRUTE_FORCE_MAX_N });
    }
    if n == 0 {
        return Ok(finite_result(0.0, p, vec![0], Method::BruteForce));
    }
    let s = path.sums();
    let mut best = f64::NEG_INFINITY;
    let mut best_bp: Vec<usize> = Vec::new();
    let mut bp = Vec::with_capacity(n + 1);
    for mask in 0u32..(1u32 << (n - 1)) {
        bp.clear();
        bp.push(0);
        bp.extend((1..n).filter(|&k| mask & (1 << (k - 1)) != 0));
        bp.push(n);
        let total: f64 = bp.windows(2).map(|w| pow_p((s[w[1]] - s[w[0]]).norm(), p)).sum();
        let tol = tie_tol(best);
        let better = total > best + tol
            || (total >= best - tol
                && (bp.len() < best_bp.len() || (bp.len() == best_bp.len() && bp < best_bp)));
        if better {
            best = total;
            best_bp.clone_from(&bp);
        }
    }
    Ok(finite_result(best, p, best_bp, Method::BruteForce))
}

/// `max_{0 <= a < b <= N} |S_b - S_a|`, the diameter of the point set
/// `{S_0, ..., S_N}`.
pub fn sup_variation(path: &PartialSumPath) -> VariationResult {
    let s = path.sums();
    let (value, a, b) = if path.is_empty() {
        (0.0, 0, 0)
    } else if path.is_real() {
        let (mut lo, mut hi) = (0, 0);
        for (k, z) in s.iter().enumerate() {
            if z.re < s[lo].re {
                lo = k;
            }
            if z.re > s[hi].re {
                hi = k;
            }
        }
        ((s[hi].re - s[lo].re).abs(), lo, hi)
    } else {
        diameter(s)
    };
    let breakpoints = if a == b { vec![a] } else { vec![a.min(b), a.max(b)] };
    VariationResult { value, p: Exponent::Sup, breakpoints, method: Method::Sup }
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Farthest pair by convex hull plus rotating calipers.
fn diameter(points: &[Complex64]) -> (f64, usize, usize) {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (points[i], points[j]);
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)).then(i.cmp(&j))
    });
    order.dedup_by(|a, b| points[*a] == points[*b]);
    if order.len() == 1 {
        return (0.0, order[0], order[0]);
    }
    // Andrew's monotone chain, counter-clockwise, collinear points dropped.
    let mut hull: Vec<usize> = Vec::with_capacity(2 * order.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(order.iter()) } else { Box::new(order.iter().rev()) };
        for &k in iter {
            while hull.len() >= start + 2
                && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[k]) <= 0.0
            {
                hull.pop();
            }
            hull.push(k);
        }
        hull.pop();
    }
    let h = hull.len();
    let dist = |i: usize, j: usize| (points[hull[i]] - points[hull[j]]).norm();
    if h <= 2 {
        let (i, j) = (0, h - 1);
        return (dist(i, j), hull[i], hull[j]);
    }
    let mut best = (0.0, hull[0], hull[0]);
    let mut j = 1;
    for i in 0..h {
        let ni = (i + 1) % h;
        let (pi, pn) = (points[hull[i]], points[hull[ni]]);
        while cross(pi, pn, points[hull[(j + 1) % h]]) > cross(pi, pn, points[hull[j]]) {
            j = (j + 1) % h;
        }
        for (a, b) in [(i, j), (ni, j)] {
            let d = dist(a, b);
            if d > best.0 {
                best = (d, hull[a], hull[b]);
            }
        }
    }
    best
}

/// Sum over dyadic levels of the l2 norm of the aligned block sums, after
/// zero-padding N to the next power of two. `variation_exact(path, 2)` is
/// at most `sqrt(2)` times this value.
pub fn dyadic_upper_bound(path: &PartialSumPath) -> f64 {
    let s = path.sums();
    let n = path.len();
    if n == 0 {
        return 0.0;
    }
    let padded = n.next_power_of_two();
    let at = |k: usize| s[k.min(n)];
    let mut total = 0.0;
    let mut size = 1;
    while size <= padded {
        let level: f64 = (0..padded / size)
            .map(|k| (at((k + 1) * size) - at(k * size)).norm_sqr())
            .sum();
        total += level.sqrt();
        size *= 2;
    }
    total
}

/// Exact square variation of the lacunary difference sequence
/// `S_1, S_2 - S_1, S_4 - S_2, ...`, closed with `S_N - S_{2^K}` when N is
/// not a power of two. Breakpoints are reported as indices into `S_0..S_N`.
pub fn lacunary_variation(path: &PartialSumPath) -> VariationResult {
    let n = path.len();
    let mut knots = vec![0usize];
    let mut k = 1;
    while k <= n {
        knots.push(k);
        k *= 2;
    }
    if *knots.last().unwrap() != n {
        knots.push(n);
    }
    let points: Vec<Complex64> = knots.iter().map(|&k| path.sums()[k]).collect();
    let (sum_p, bp) = dp_kernel(&points, 2.0);
    finite_result(sum_p, 2.0, bp.into_iter().map(|b| knots[b]).collect(), Method::Lacunary)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestrictMode {
    /// Only intervals that are unions of whole blocks.
    BlockLevel,
    /// Only intervals contained in a single block.
    WithinBlock,
}

fn check_blocks(n: usize, blocks: &[(usize, usize)]) -> Result<()> {
    let mut expect = 1;
    for &(lo, hi) in blocks {
        if lo != expect || hi < lo {
            return Err(Error::InvalidBlocks(format!(
                "block [{lo}, {hi}] does not continue a partition at {expect}"
            )));
        }
        expect = hi + 1;
    }
    if expect != n + 1 {
        return Err(Error::InvalidBlocks(format!("blocks cover [1, {}] but N = {n}", expect - 1)));
    }
    Ok(())
}

/// Square variation restricted to block-level or within-block intervals.
/// `blocks` are 1-based inclusive `(start, end)` pairs partitioning `[N]`.
pub fn restricted_variation(
    path: &PartialSumPath,
    blocks: &[(usize, usize)],
    mode: RestrictMode,
) -> Result<VariationResult> {
    check_blocks(path.len(), blocks)?;
    let s = path.sums();
    match mode {
        RestrictMode::BlockLevel => {
            let knots: Vec<usize> = std::iter::once(0).chain(blocks.iter().map(|b| b.1)).collect();
            let points: Vec<Complex64> = knots.iter().map(|&k| s[k]).collect();
            let (sum_p, bp) = dp_kernel(&points, 2.0);
            Ok(finite_result(sum_p, 2.0, bp.into_iter().map(|b| knots[b]).collect(), Method::BlockL))
        }
        RestrictMode::WithinBlock => {
            let mut total = 0.0;
            let mut breakpoints = vec![0];
            for &(lo, hi) in blocks {
                let (sum_p, bp) = dp_kernel(&s[lo - 1..=hi], 2.0);
                total += sum_p;
                breakpoints.extend(bp.into_iter().skip(1).map(|b| b + lo - 1));
            }
            Ok(finite_result(total, 2.0, breakpoints, Method::BlockS))
        }
    }
}

/// Indices where a real path turns (plus both endpoints). Inside a flat
/// stretch the first index is kept.
pub fn extrema_candidates(path: &PartialSumPath) -> Vec<usize> {
    let inc = path.increments();
    let n = inc.len();
    let mut out = vec![0];
    let mut last_sign = 0.0f64;
    let mut last_change = 0usize;
    for (k, a) in inc.iter().enumerate() {
        let sg = if a.re > 0.0 {
            1.0
        } else if a.re < 0.0 {
            -1.0
        } else {
            continue;
        };
        if last_sign != 0.0 && sg != last_sign {
            out.push(last_change);
        }
        last_sign = sg;
        // Index just after the last nonzero increment: first point of the plateau.
        last_change = k + 1;
    }
    if n > 0 && *out.last().unwrap() != n {
        out.push(n);
    }
    out
}

/// Exact p-variation of a real path with breakpoints restricted to local
/// extrema. For p >= 1 moving a breakpoint to the end of its monotone run
/// never decreases the sum, so the value matches [`variation_exact`].
pub fn extrema_pruned_variation(path: &PartialSumPath, p: f64) -> Result<VariationResult> {
    check_exponent(p)?;
    if let Some(k) = path.increments().iter().position(|z| z.im != 0.0) {
        return Err(Error::ComplexIncrement(k + 1));
    }
    let knots = extrema_candidates(path);
    let points: Vec<Complex64> = knots.iter().map(|&k| path.sums()[k]).collect();
    let (sum_p, bp) = dp_kernel(&points, p);
    Ok(finite_result(sum_p, p, bp.into_iter().map(|b| knots[b]).collect(), Method::ExtremaPruned))
}

/// Exact p-variation, taking the extrema shortcut when the path is real.
pub fn variation_auto(path: &PartialSumPath, p: f64) -> Result<VariationResult> {
    if path.is_real() {
        extrema_pruned_variation(path, p)
    } else {
        variation_exact(path, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(xs: &[f64]) -> PartialSumPath {
        PartialSumPath::from_real(xs).unwrap()
    }

    #[test]
    fn prefix_path_examples() {
        assert_eq!(real(&[]).sums(), &[c(0.0, 0.0)]);
        let p = real(&[1.0, 1.0, 1.0]);
        let re: Vec<f64> = p.sums().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.0, 1.0, 2.0, 3.0]);
        let re: Vec<f64> = real(&[1.0, -1.0]).sums().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(IncrementSeq::from_real(&[1.0, f64::NAN]), Err(Error::NonFinite(2))));
    }

    #[test]
    fn exact_examples() {
        let v = variation_exact(&PartialSumPath::from_increments(&[c(3.0, 0.0)]).unwrap(), 2.0).unwrap();
        assert_eq!(v.value, 3.0);
        let v = variation_exact(&real(&[1.0; 4]), 2.0).unwrap();
        assert_eq!(v.value, 4.0);
        assert_eq!(v.breakpoints, vec![0, 4]);
        let v = variation_exact(&real(&[1.0, -1.0, 1.0, -1.0]), 2.0).unwrap();
        assert!((v.value - 2.0).abs() < 1e-15);
        assert_eq!(v.breakpoints, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn exact_rejects_small_p() {
        assert!(matches!(variation_exact(&real(&[1.0]), 0.5), Err(Error::InvalidExponent(_))));
        assert!(variation_exact(&real(&[1.0]), f64::INFINITY).is_err());
    }

    #[test]
    fn tie_break_prefers_fewer_breakpoints() {
        // p = 1 on a monotone path: every partition gives 4.
        let v = variation_exact(&real(&[1.0; 4]), 1.0).unwrap();
        assert_eq!(v.breakpoints, vec![0, 4]);
        let b = variation_bruteforce(&real(&[1.0; 4]), 1.0).unwrap();
        assert_eq!(b.breakpoints, vec![0, 4]);
    }

    #[test]
    fn bruteforce_examples() {
        assert!((variation_bruteforce(&real(&[1.0, -1.0, 1.0, -1.0]), 2.0).unwrap().value - 2.0).abs() < 1e-15);
        assert_eq!(variation_bruteforce(&real(&[]), 1.7).unwrap().value, 0.0);
        assert_eq!(variation_bruteforce(&real(&[2.0]), 3.0).unwrap().value, 2.0);
        let big = real(&[1.0; 21]);
        assert!(matches!(variation_bruteforce(&big, 2.0), Err(Error::BruteForceBudget { n: 21, .. })));
    }

    #[test]
    fn empty_path_is_zero_everywhere() {
        let e = real(&[]);
        assert_eq!(variation_exact(&e, 2.0).unwrap().value, 0.0);
        assert_eq!(sup_variation(&e).value, 0.0);
        assert_eq!(dyadic_upper_bound(&e), 0.0);
        assert_eq!(lacunary_variation(&e).value, 0.0);
        assert_eq!(extrema_pruned_variation(&e, 2.0).unwrap().value, 0.0);
    }

    #[test]
    fn sup_examples() {
        assert_eq!(sup_variation(&real(&[1.0, 1.0, 1.0])).value, 3.0);
        let v = sup_variation(&real(&[1.0, -2.0, 1.0]));
        assert_eq!(v.value, 2.0);
        let v = sup_variation(&PartialSumPath::from_increments(&[c(0.0, 1.0), c(0.0, 1.0)]).unwrap());
        assert_eq!(v.value, 2.0);
        assert_eq!(v.breakpoints, vec![0, 2]);
    }

    #[test]
    fn diameter_matches_pairwise_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(1..40);
            let inc: Vec<Complex64> =
                (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let path = PartialSumPath::from_increments(&inc).unwrap();
            let s = path.sums();
            let mut brute = 0.0f64;
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    brute = brute.max((s[b] - s[a]).norm());
                }
            }
            let v = sup_variation(&path);
            assert!((v.value - brute).abs() <= 1e-12 * brute.max(1.0));
            assert!((v.recompute(&path) - v.value).abs() <= 1e-12 * brute.max(1.0));
        }
    }

    #[test]
    fn diameter_on_a_circle() {
        // Every point is a hull vertex.
        let n = 64;
        let inc: Vec<Complex64> = (1..=n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 0.37 * k as f64))
            .collect();
        let path = PartialSumPath::from_increments(&inc).unwrap();
        let s = path.sums();
        let mut brute = 0.0f64;
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                brute = brute.max((s[b] - s[a]).norm());
            }
        }
        assert!((sup_variation(&path).value - brute).abs() < 1e-12);
    }

    #[test]
    fn dyadic_upper_examples() {
        let v = dyadic_upper_bound(&real(&[1.0; 4]));
        assert!((v - (2.0 + 2.0 * 2f64.sqrt() + 4.0)).abs() < 1e-12);
        let z = c(0.6, -0.8);
        assert!((dyadic_upper_bound(&PartialSumPath::from_increments(&[z]).unwrap()) - 1.0).abs() < 1e-15);
        assert!((dyadic_upper_bound(&real(&[1.0, -1.0, 1.0, -1.0])) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn lacunary_examples() {
        let v = lacunary_variation(&real(&[1.0; 4]));
        assert_eq!(v.value, 4.0);
        let z = c(-0.3, 0.4);
        assert!((lacunary_variation(&PartialSumPath::from_increments(&[z]).unwrap()).value - 0.5).abs() < 1e-15);
        let v = lacunary_variation(&real(&[1.0, -1.0, 0.0, 0.0]));
        assert!((v.value - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lacunary_closes_non_power_of_two() {
        // knots 0,1,2,4,5: increments 1, 1, 2, -10
        let v = lacunary_variation(&real(&[1.0, 1.0, 1.0, 1.0, -10.0]));
        assert!((v.value - (16.0f64 + 100.0).sqrt()).abs() < 1e-12);
        assert_eq!(v.breakpoints, vec![0, 4, 5]);
    }

    #[test]
    fn restricted_examples() {
        let p = real(&[1.0, -1.0, 1.0, -1.0]);
        let blocks = [(1, 2), (3, 4)];
        assert_eq!(restricted_variation(&p, &blocks, RestrictMode::BlockLevel).unwrap().value, 0.0);
        let s = restricted_variation(&p, &blocks, RestrictMode::WithinBlock).unwrap();
        assert!((s.value - 2.0).abs() < 1e-15);
        assert_eq!(s.breakpoints, vec![0, 1, 2, 3, 4]);
        let q = real(&[0.5, 2.0, -0.25]);
        let one = restricted_variation(&q, &[(1, 3)], RestrictMode::BlockLevel).unwrap();
        assert!((one.value - 2.25).abs() < 1e-15);
    }

    #[test]
    fn restricted_rejects_non_partitions() {
        let p = real(&[1.0, 2.0, 3.0]);
        for bad in [&[(1, 2)][..], &[(1, 1), (3, 3)], &[(2, 3)], &[(1, 2), (2, 3)], &[(1, 4)]] {
            assert!(matches!(
                restricted_variation(&p, bad, RestrictMode::WithinBlock),
                Err(Error::InvalidBlocks(_))
            ));
        }
    }

    #[test]
    fn pruned_examples() {
        let v = extrema_pruned_variation(&real(&[1.0; 4]), 2.0).unwrap();
        assert_eq!(v.value, 4.0);
        assert_eq!(extrema_candidates(&real(&[1.0; 4])), vec![0, 4]);
        let v = extrema_pruned_variation(&real(&[1.0, -1.0, 1.0, -1.0]), 2.0).unwrap();
        assert!((v.value - 2.0).abs() < 1e-15);
        let path = real(&[2.0, -1.0, 3.0]);
        let a = extrema_pruned_variation(&path, 2.0).unwrap().value;
        let b = variation_exact(&path, 2.0).unwrap().value;
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn pruned_rejects_complex() {
        let p = PartialSumPath::from_increments(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(matches!(extrema_pruned_variation(&p, 2.0), Err(Error::ComplexIncrement(2))));
    }

    #[test]
    fn extrema_with_plateaus() {
        // path 0 1 1 1 0 0 2: turns at 1 (first of plateau) and 4
        let path = real(&[1.0, 0.0, 0.0, -1.0, 0.0, 2.0]);
        assert_eq!(extrema_candidates(&path), vec![0, 1, 4, 6]);
    }

    #[test]
    fn window_rebases() {
        let p = real(&[1.0, 2.0, 3.0, 4.0]);
        let w = p.window(2, 3).unwrap();
        assert_eq!(w.increments(), &[c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(w.sums()[2], c(5.0, 0.0));
        assert!(p.window(0, 2).is_err());
        assert!(p.window(2, 5).is_err());
    }
}
