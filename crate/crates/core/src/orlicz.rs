//! Orlicz gauges `Γ_K`, `γ_K` and Luxemburg norms of sampled functions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::onsys::{path_at, sample_points, CoeffSeq, SamplePlan, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrliczGauge {
    k: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeKind {
    /// `Γ_K`
    Big,
    /// `γ_K`
    Small,
}

impl OrliczGauge {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::InvalidGauge(k));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `Γ_K(t) = |t|^{5/2}` for `|t| <= K`, else `(5/4) K^{1/2} t² - (1/4) K^{5/2}`.
    ///
    /// Both branches are written as products of the same factors so they
    /// agree bit for bit at `|t| = K`.
    pub fn big(&self, t: f64) -> f64 {
        let a = t.abs();
        let t2 = a * a;
        if a <= self.k {
            t2 * a.sqrt()
        } else {
            self.k.sqrt() * (t2 + (t2 - self.k * self.k) / 4.0)
        }
    }

    /// `γ_K(t) = min(|t|, K)^{1/2}`.
    pub fn small(&self, t: f64) -> f64 {
        t.abs().min(self.k).sqrt()
    }

    pub fn eval(&self, t: f64, which: GaugeKind) -> f64 {
        match which {
            GaugeKind::Big => self.big(t),
            GaugeKind::Small => self.small(t),
        }
    }
}

/// Iteration cap of the bisection.
const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-13;

/// `min { λ : Σ_i w_i Γ_K(f_i / λ) <= 1 }` by bisection.
pub fn luxemburg_norm(samples: &[f64], weights: &[f64], gauge: &OrliczGauge) -> Result<f64> {
    if samples.len() != weights.len() {
        return Err(Error::SizeMismatch { expected: samples.len(), got: weights.len() });
    }
    if let Some(i) = samples.iter().position(|f| !f.is_finite()) {
        return Err(Error::NonFinite(i + 1));
    }
    for (i, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(Error::NonFinite(i + 1));
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { index: i + 1, value: w });
        }
    }
    let active: Vec<(f64, f64)> = samples
        .iter()
        .zip(weights)
        .filter(|(f, w)| **f != 0.0 && **w > 0.0)
        .map(|(f, w)| (f.abs(), *w))
        .collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let integral = |lambda: f64| active.iter().map(|&(f, w)| w * gauge.big(f / lambda)).sum::<f64>();
    let peak = active.iter().map(|p| p.0).fold(0.0, f64::max);
    let mut hi = peak;
    while integral(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while integral(lo) <= 1.0 {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..MAX_ITER {
        if hi - lo <= REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if integral(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Upper estimate of `|| V²(S_I) ||_{Γ_K}`, `K = N/|I|`, for the partial
/// sums over `I = [lo, hi]` (1-based, inclusive).
///
/// With `B(x)` the dyadic block bound of the path over `I`, the triangle
/// inequality across levels and 2-convexity within a level give
/// `√2 Σ_levels (Σ_blocks ||block sum||²_Γ)^{1/2}`. The factor `√2` comes
/// from `V² <= √2 B` and is dropped when `|I| = 1`, where `V² = B`.
pub fn dyadic_orlicz_aggregate(
    coeffs: &CoeffSeq,
    system: &SystemSpec,
    lo: usize,
    hi: usize,
    plan: &SamplePlan,
) -> Result<f64> {
    if lo > hi {
        return Err(Error::EmptyInterval);
    }
    let n = coeffs.len();
    if lo == 0 || hi > n {
        return Err(Error::IntervalOutOfRange(format!("[{lo}, {hi}] in [1, {n}]")));
    }
    system.validate()?;
    let len = hi + 1 - lo;
    let gauge = OrliczGauge::new(n as f64 / len as f64)?;
    let quad = sample_points(system.kind, plan)?;
    let padded = len.next_power_of_two();

    // blocks[level][k][sample] = |sum of increments in block k at that level|
    let per_sample = quad
        .points
        .par_iter()
        .map(|&pt| {
            let path = path_at(system, coeffs, pt)?;
            let s = path.sums();
            let at = |m: usize| s[lo - 1 + m.min(len)] - s[lo - 1];
            let mut levels = Vec::new();
            let mut size = 1;
            while size <= padded {
                levels.push(
                    (0..padded / size)
                        .map(|k| (at((k + 1) * size) - at(k * size)).norm())
                        .collect::<Vec<f64>>(),
                );
                size *= 2;
            }
            Ok(levels)
        })
        .collect::<Result<Vec<_>>>()?;

    let weights = &quad.weights;
    let mut total = 0.0;
    for level in 0..per_sample[0].len() {
        let mut sq = 0.0;
        for k in 0..per_sample[0][level].len() {
            let values: Vec<f64> = per_sample.iter().map(|l| l[level][k]).collect();
            sq += luxemburg_norm(&values, weights, &gauge)?.powi(2);
        }
        total += sq.sqrt();
    }
    Ok(if padded == 1 { total } else { std::f64::consts::SQRT_2 * total })
}
