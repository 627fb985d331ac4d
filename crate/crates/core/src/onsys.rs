//! Orthonormal systems, partial-sum paths at sample points, and quadrature
//! estimates of `L²(V^p)` norms.
//!
//! A [`CoeffSeq`] pairs each coefficient with the index of the basis function
//! it multiplies, so a rearranged system is just a permuted `basis` vector.
//!
//! Index conventions:
//! * trigonometric: basis index `n >= 1` is `e^{2πinx}`;
//! * Haar: position 1 is the constant `H_0`, and position `2^k + j` with
//!   `1 <= j <= 2^k` is `H_{k,j}`. The first `2^K` positions are therefore a
//!   complete basis at resolution `2^{-K}`;
//! * Rademacher: basis index `n >= 1` is `r_n(x) = sign sin(2^n π x)`.
//!
//! Sample points on a discontinuity of an active Haar or Rademacher function
//! are rejected rather than assigned a one-sided value.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::variation::{
    dyadic_upper_bound, lacunary_variation, sup_variation, variation_auto, PartialSumPath,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CoeffSeq {
    coeffs: Vec<Complex64>,
    basis: Vec<usize>,
    total_mass: f64,
}

impl CoeffSeq {
    /// Coefficients on the identity ordering `1..=N`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let basis = (1..=coeffs.len()).collect();
        Self::with_basis(coeffs, basis)
    }

    pub fn from_real(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Coefficient `i` multiplies basis function `basis[i]` (1-based).
    pub fn with_basis(coeffs: Vec<Complex64>, basis: Vec<usize>) -> Result<Self> {
        if basis.len() != coeffs.len() {
            return Err(Error::SizeMismatch { expected: coeffs.len(), got: basis.len() });
        }
        if let Some(i) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite(i + 1));
        }
        let mut seen = vec![false; basis.iter().copied().max().unwrap_or(0) + 1];
        for &b in &basis {
            if b == 0 || std::mem::replace(&mut seen[b], true) {
                return Err(Error::NotAPermutation(format!("basis index {b} is zero or repeated")));
            }
        }
        let total_mass = coeffs.iter().map(|c| c.norm_sqr()).sum();
        Ok(Self { coeffs, basis, total_mass })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `||f||_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        self.total_mass.sqrt()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn max_basis(&self) -> usize {
        self.basis.iter().copied().max().unwrap_or(0)
    }

    /// Reads `index,re,im` rows with contiguous 1-based indices.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |message: String| Error::CoeffFile { path: path.to_path_buf(), message };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|source| Error::Csv { context: path.to_path_buf(), source })?;
        let headers = reader
            .headers()
            .map_err(|source| Error::Csv { context: path.to_path_buf(), source })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["index", "re", "im"] {
            return Err(bad(format!("header must be `index,re,im`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut coeffs = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|source| Error::Csv { context: path.to_path_buf(), source })?;
            let line = row + 2;
            let field = |i: usize| record.get(i).unwrap_or("");
            let index: usize = field(0)
                .parse()
                .map_err(|_| bad(format!("line {line}: bad index `{}`", field(0))))?;
            if index != row + 1 {
                return Err(bad(format!("line {line}: expected index {}, found {index}", row + 1)));
            }
            let parse = |i: usize, name: &str| {
                field(i)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("line {line}: bad {name} value `{}`", field(i))))
            };
            let re = parse(1, "re")?;
            let im = parse(2, "im")?;
            coeffs.push(Complex64::new(re, im));
        }
        Self::new(coeffs)
    }

    /// Writes coefficients in their current order; the basis permutation is
    /// not part of the format.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Csv { context: path.to_path_buf(), source };
        let mut writer = csv::Writer::from_path(path).map_err(io)?;
        writer.write_record(["index", "re", "im"]).map_err(io)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            writer
                .write_record([(i + 1).to_string(), format!("{:e}", c.re), format!("{:e}", c.im)])
                .map_err(io)?;
        }
        writer
            .flush()
            .map_err(|source| Error::Io { context: path.to_path_buf(), source })
    }
}

/// `a_n = 1`, or `1/√N` when normalized.
pub fn dirichlet_coeffs(n: usize, normalize: bool) -> CoeffSeq {
    let a = if normalize { 1.0 / (n as f64).sqrt() } else { 1.0 };
    CoeffSeq::new(vec![Complex64::new(a, 0.0); n]).expect("finite constant coefficients")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SystemKind {
    Trig,
    Haar,
    Rademacher,
    /// Independent mean-zero, variance-one variables bounded by `C`.
    IndepBounded,
    /// Coordinates multiplied by independent standard normals.
    GaussianCoeff,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Trig => "TRIG",
            SystemKind::Haar => "HAAR",
            SystemKind::Rademacher => "RADEMACHER",
            SystemKind::IndepBounded => "INDEP_BOUNDED",
            SystemKind::GaussianCoeff => "GAUSSIAN_COEFF",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    #[serde(alias = "N")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, n: usize) -> Self {
        Self { kind, n, bound: None }
    }

    pub fn indep_bounded(n: usize, bound: f64) -> Self {
        Self { kind: SystemKind::IndepBounded, n, bound: Some(bound) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::SizeTooSmall { n: 0, min: 1 });
        }
        match (self.kind, self.bound) {
            (SystemKind::IndepBounded, Some(c)) if c >= 1.0 && c.is_finite() => Ok(()),
            (SystemKind::IndepBounded, c) => Err(Error::InvalidArgument(format!(
                "INDEP_BOUNDED needs a finite bound C >= 1, got {c:?}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SampleMode {
    /// `x_j = j / count`.
    UniformGrid,
    /// One uniform point per strip `[j/count, (j+1)/count)`; for
    /// `GAUSSIAN_COEFF` one independent draw of the normals per sample.
    RandomPoints,
    /// `x_j = (j + 1/2) / count`.
    DyadicMidpoints,
    /// One independent draw of the random variables per sample.
    CoinFlips,
}

impl SampleMode {
    pub fn name(self) -> &'static str {
        match self {
            SampleMode::UniformGrid => "UNIFORM_GRID",
            SampleMode::RandomPoints => "RANDOM_POINTS",
            SampleMode::DyadicMidpoints => "DYADIC_MIDPOINTS",
            SampleMode::CoinFlips => "COIN_FLIPS",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, SampleMode::RandomPoints | SampleMode::CoinFlips)
    }
}

fn default_count() -> usize {
    64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePlan {
    pub mode: SampleMode,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// `RANDOM_POINTS` only: split each of the two end strips into
    /// `end_levels + 1` dyadic sub-strata `(w 2^{-i-1}, w 2^{-i}]`, plus
    /// `[0, w 2^{-end_levels}]`, with one weighted draw each.
    #[serde(default)]
    pub end_levels: u32,
}

impl SamplePlan {
    pub fn new(mode: SampleMode, count: usize, seed: u64) -> Self {
        Self { mode, count, seed, end_levels: 0 }
    }

    pub fn with_end_levels(self, end_levels: u32) -> Self {
        Self { end_levels, ..self }
    }

    /// End refinement reaching strip width about `1/(4n)`.
    pub fn end_levels_for(count: usize, n: usize) -> u32 {
        let ratio = 4.0 * n as f64 / count as f64;
        if ratio <= 1.0 {
            0
        } else {
            ratio.log2().ceil() as u32
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplePoint {
    X(f64),
    /// Seed of one independent draw of the system's random variables.
    /// Variable `n` is the `n`-th draw of the stream, so draws are shared
    /// across orderings and nested across `N`.
    Omega(u64),
}

/// Quadrature nodes with weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    pub points: Vec<SamplePoint>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    fn equal(points: Vec<SamplePoint>) -> Self {
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_compatible(kind: SystemKind, mode: SampleMode) -> Result<()> {
    use SampleMode::*;
    let ok = match kind {
        SystemKind::Trig => mode != CoinFlips,
        SystemKind::Haar => mode == DyadicMidpoints,
        SystemKind::Rademacher => true,
        SystemKind::IndepBounded => mode == CoinFlips,
        SystemKind::GaussianCoeff => mode == RandomPoints,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatiblePlan { plan: mode.name().into(), system: kind.name().into() })
    }
}

/// Quadrature nodes of `plan` for a system of the given kind.
pub fn sample_points(kind: SystemKind, plan: &SamplePlan) -> Result<Quadrature> {
    check_compatible(kind, plan.mode)?;
    if plan.count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let stratified_x = plan.mode == SampleMode::RandomPoints && kind != SystemKind::GaussianCoeff;
    if plan.end_levels > 0 && (!stratified_x || plan.count < 2) {
        return Err(Error::InvalidArgument(
            "end refinement needs RANDOM_POINTS x-sampling with at least 2 strips".into(),
        ));
    }
    let count = plan.count as f64;
    let omega = |j: usize| SamplePoint::Omega(seed::mix(plan.seed, &[j as u64]));
    Ok(match plan.mode {
        SampleMode::UniformGrid => {
            Quadrature::equal((0..plan.count).map(|j| SamplePoint::X(j as f64 / count)).collect())
        }
        SampleMode::DyadicMidpoints => Quadrature::equal(
            (0..plan.count).map(|j| SamplePoint::X((j as f64 + 0.5) / count)).collect(),
        ),
        SampleMode::CoinFlips => Quadrature::equal((0..plan.count).map(omega).collect()),
        SampleMode::RandomPoints if !stratified_x => Quadrature::equal((0..plan.count).map(omega).collect()),
        SampleMode::RandomPoints => {
            let mut rng = seed::rng(plan.seed);
            let w = 1.0 / count;
            let levels = plan.end_levels;
            // Sub-strata of the left end strip, as (start, width).
            let left: Vec<(f64, f64)> = std::iter::once((0.0, w * (-(levels as f64)).exp2()))
                .chain((0..levels).rev().map(|i| {
                    let a = w * (-(i as f64) - 1.0).exp2();
                    (a, a)
                }))
                .collect();
            let mut points = Vec::with_capacity(plan.count + 2 * levels as usize);
            let mut weights = Vec::with_capacity(points.capacity());
            for j in 0..plan.count {
                let end = levels > 0 && (j == 0 || j + 1 == plan.count);
                if !end {
                    points.push(SamplePoint::X((j as f64 + rng.random::<f64>()) / count));
                    weights.push(w);
                    continue;
                }
                for &(a, width) in &left {
                    let x = a + width * rng.random::<f64>();
                    points.push(SamplePoint::X(if j == 0 { x } else { 1.0 - x }));
                    weights.push(width);
                }
            }
            Quadrature { points, weights }
        }
    })
}

/// `e^{2πimx}` for `m = 0..=max` by repeated multiplication, resynchronized
/// every 64 steps.
fn trig_table(x: f64, max: usize) -> Vec<Complex64> {
    let cis = |m: usize| {
        let t = (m as f64 * x).rem_euclid(1.0);
        Complex64::from_polar(1.0, std::f64::consts::TAU * t)
    };
    let z = cis(1);
    let mut out = Vec::with_capacity(max + 1);
    let mut w = Complex64::new(1.0, 0.0);
    for m in 0..=max {
        if m % 64 == 0 {
            w = cis(m);
        }
        out.push(w);
        w *= z;
    }
    out
}

/// `S_m(x) = Σ_{n<=m} a_n e^{2πi b_n x}` with `b_n` the basis indices.
pub fn trig_path(coeffs: &CoeffSeq, x: f64) -> Result<PartialSumPath> {
    if !x.is_finite() {
        return Err(Error::PointOutOfRange(x));
    }
    let table = trig_table(x, coeffs.max_basis());
    let inc: Vec<Complex64> =
        coeffs.coeffs.iter().zip(&coeffs.basis).map(|(a, &b)| a * table[b]).collect();
    PartialSumPath::from_increments(&inc)
}

/// `(k, j)` of the Haar function at `position`, or `None` for `H_0`.
pub fn haar_indices(position: usize) -> Option<(u32, usize)> {
    if position <= 1 {
        return None;
    }
    let k = (position - 1).ilog2();
    Some((k, position - (1 << k)))
}

/// Finest level `k` among the first `max_position` Haar positions.
pub fn finest_haar_level(max_position: usize) -> Option<u32> {
    (max_position >= 2).then(|| (max_position - 1).ilog2())
}

/// `H_{k,j}(x)`, assuming `x` is not a breakpoint.
pub fn haar_kj(k: u32, j: usize, x: f64) -> f64 {
    let scale = (k as f64).exp2();
    let t = x * scale - (j - 1) as f64;
    let h = scale.sqrt();
    if t > 0.0 && t < 0.5 {
        h
    } else if t > 0.5 && t < 1.0 {
        -h
    } else {
        0.0
    }
}

/// Value of the Haar function at `position` (1 is the constant).
pub fn haar_value(position: usize, x: f64) -> f64 {
    match haar_indices(position) {
        None => 1.0,
        Some((k, j)) => haar_kj(k, j, x),
    }
}

fn check_haar_point(x: f64, max_position: usize) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::PointOutOfRange(x));
    }
    if let Some(k) = finest_haar_level(max_position) {
        let level = k + 1;
        if (x * (level as f64).exp2()).fract() == 0.0 {
            return Err(Error::DyadicBreakpoint { x, level });
        }
    }
    Ok(())
}

pub fn haar_path(coeffs: &CoeffSeq, x: f64) -> Result<PartialSumPath> {
    check_haar_point(x, coeffs.max_basis())?;
    let inc: Vec<Complex64> =
        coeffs.coeffs.iter().zip(&coeffs.basis).map(|(a, &b)| a * haar_value(b, x)).collect();
    PartialSumPath::from_increments(&inc)
}

/// `r_1(x), ..., r_max(x)` from the binary digits of `x mod 1`.
///
/// Exact in binary floating point, which also means every `f64` is a
/// breakpoint for `n` past its last significant bit (about 52 for `x` near
/// 1/2); use sign vectors for long Rademacher sums.
pub fn rademacher_values(x: f64, max: usize) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::PointOutOfRange(x));
    }
    let mut y = x.rem_euclid(1.0);
    let mut out = Vec::with_capacity(max);
    for n in 1..=max {
        y *= 2.0;
        if y.fract() == 0.0 {
            return Err(Error::DyadicBreakpoint { x, level: n as u32 });
        }
        if y >= 1.0 {
            out.push(-1.0);
            y -= 1.0;
        } else {
            out.push(1.0);
        }
    }
    Ok(out)
}

pub fn rademacher_path_at(coeffs: &CoeffSeq, x: f64) -> Result<PartialSumPath> {
    let r = rademacher_values(x, coeffs.max_basis())?;
    signed_path(coeffs, &r)
}

/// Partial sums with `r_n = signs[n - 1]`; `signs` has one entry per index.
pub fn rademacher_path(coeffs: &CoeffSeq, signs: &[f64]) -> Result<PartialSumPath> {
    if signs.len() != coeffs.len() {
        return Err(Error::SizeMismatch { expected: coeffs.len(), got: signs.len() });
    }
    if let Some(i) = signs.iter().position(|s| s.abs() != 1.0) {
        return Err(Error::InvalidArgument(format!("sign {} is {}, not ±1", i + 1, signs[i])));
    }
    if coeffs.max_basis() > signs.len() {
        return Err(Error::SizeMismatch { expected: coeffs.max_basis(), got: signs.len() });
    }
    signed_path(coeffs, signs)
}

fn signed_path(coeffs: &CoeffSeq, values: &[f64]) -> Result<PartialSumPath> {
    let inc: Vec<Complex64> =
        coeffs.coeffs.iter().zip(&coeffs.basis).map(|(a, &b)| a * values[b - 1]).collect();
    PartialSumPath::from_increments(&inc)
}

/// Values `X_1, ..., X_max` of one draw of the system's random variables.
pub fn omega_values(system: &SystemSpec, omega: u64, max: usize) -> Result<Vec<f64>> {
    let mut rng = seed::rng(omega);
    match system.kind {
        SystemKind::Rademacher => {
            Ok((0..max).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
        }
        SystemKind::IndepBounded => {
            system.validate()?;
            let c = system.bound.expect("validated");
            let q = 0.5 / (c * c);
            Ok((0..max)
                .map(|_| {
                    let u: f64 = rng.random();
                    if u < q {
                        c
                    } else if u < 2.0 * q {
                        -c
                    } else {
                        0.0
                    }
                })
                .collect())
        }
        SystemKind::GaussianCoeff => Ok((0..max).map(|_| rng.sample(StandardNormal)).collect()),
        kind => Err(Error::IncompatiblePlan { plan: "random draw".into(), system: kind.name().into() }),
    }
}

/// Partial-sum path of `system` with coefficients `coeffs` at one sample.
pub fn path_at(system: &SystemSpec, coeffs: &CoeffSeq, point: SamplePoint) -> Result<PartialSumPath> {
    match (system.kind, point) {
        (SystemKind::Trig, SamplePoint::X(x)) => trig_path(coeffs, x),
        (SystemKind::Haar, SamplePoint::X(x)) => haar_path(coeffs, x),
        (SystemKind::Rademacher, SamplePoint::X(x)) => rademacher_path_at(coeffs, x),
        (_, SamplePoint::Omega(w)) => {
            let values = omega_values(system, w, coeffs.max_basis())?;
            signed_path(coeffs, &values)
        }
        (kind, SamplePoint::X(_)) => {
            Err(Error::IncompatiblePlan { plan: "point evaluation".into(), system: kind.name().into() })
        }
    }
}

/// Block averages over `(l 2^{-k}, (l+1) 2^{-k})` of values sampled on a
/// dyadic grid of `2^r >= 2^k` cells.
pub fn haar_conditional_expectation(values: &[f64], k: u32) -> Result<Vec<f64>> {
    let len = values.len();
    if !len.is_power_of_two() || len.ilog2() < k {
        return Err(Error::ResolutionMismatch { len, level: k });
    }
    let width = len >> k;
    let mut out = Vec::with_capacity(len);
    for block in values.chunks(width) {
        let mean = block.iter().sum::<f64>() / width as f64;
        out.extend(std::iter::repeat_n(mean, width));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NormVariant {
    /// `V^p` over all partitions.
    Full,
    /// `V²` of the lacunary partial sums.
    Lacunary,
    /// `V^∞`.
    Sup,
    /// The dyadic block bound `B(x)`.
    DyadicUpper,
}

/// Pointwise functional of one path.
pub fn path_functional(path: &PartialSumPath, p: f64, variant: NormVariant) -> Result<f64> {
    Ok(match variant {
        NormVariant::Full => variation_auto(path, p)?.value,
        NormVariant::Lacunary => lacunary_variation(path).value,
        NormVariant::Sup => sup_variation(path).value,
        NormVariant::DyadicUpper => dyadic_upper_bound(path),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    /// `sqrt(mean of v(x)²)`.
    pub value: f64,
    /// Delta-method Monte Carlo standard error; 0 for deterministic plans,
    /// NaN for a single random sample.
    pub stderr: f64,
    /// `v(x)` at each node, in node order.
    pub per_sample: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Estimate {
    /// Equal-weight estimate.
    pub fn from_samples(per_sample: Vec<f64>, random: bool) -> Self {
        let w = vec![1.0 / per_sample.len() as f64; per_sample.len()];
        Self::from_weighted(per_sample, w, random)
    }

    /// `weights` sum to 1. The standard error treats nodes as independent
    /// draws, which overstates it for stratified nodes.
    pub fn from_weighted(per_sample: Vec<f64>, weights: Vec<f64>, random: bool) -> Self {
        let n = per_sample.len() as f64;
        let sq: Vec<f64> = per_sample.iter().map(|v| v * v).collect();
        let mean: f64 = sq.iter().zip(&weights).map(|(s, w)| s * w).sum();
        let value = mean.sqrt();
        let stderr = if !random {
            0.0
        } else if per_sample.len() < 2 {
            f64::NAN
        } else if value == 0.0 {
            0.0
        } else {
            let var: f64 = sq.iter().zip(&weights).map(|(s, w)| (w * (s - mean)).powi(2)).sum();
            (var * n / (n - 1.0)).sqrt() / (2.0 * value)
        };
        Self { value, stderr, per_sample, weights }
    }

    /// Weighted mean of the pointwise values (first moment instead of the
    /// `L²` mean).
    pub fn mean(&self) -> f64 {
        self.per_sample.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Standard error of [`Estimate::mean`] under the same independence
    /// approximation.
    pub fn mean_stderr(&self) -> f64 {
        let n = self.per_sample.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        let m = self.mean();
        let var: f64 = self.per_sample.iter().zip(&self.weights).map(|(v, w)| (w * (v - m)).powi(2)).sum();
        (var * n / (n - 1.0)).sqrt()
    }
}

fn check_haar_plan(system: &SystemSpec, coeffs: &CoeffSeq, plan: &SamplePlan) -> Result<()> {
    if system.kind != SystemKind::Haar {
        return Ok(());
    }
    if let Some(k) = finest_haar_level(coeffs.max_basis()) {
        let level = k + 1;
        if !plan.count.is_power_of_two() || plan.count.ilog2() < level {
            return Err(Error::ResolutionMismatch { len: plan.count, level });
        }
    }
    Ok(())
}

/// Evaluates `f` on the path at every node of `plan` and aggregates with the
/// node weights.
pub fn quadrature_estimate<F>(system: &SystemSpec, coeffs: &CoeffSeq, plan: &SamplePlan, f: F) -> Result<Estimate>
where
    F: Fn(&PartialSumPath) -> Result<f64> + Sync,
{
    system.validate()?;
    if coeffs.len() != system.n {
        return Err(Error::SizeMismatch { expected: system.n, got: coeffs.len() });
    }
    let quad = sample_points(system.kind, plan)?;
    check_haar_plan(system, coeffs, plan)?;
    let per_sample = quad
        .points
        .par_iter()
        .map(|&pt| f(&path_at(system, coeffs, pt)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_weighted(per_sample, quad.weights, plan.mode.is_random()))
}

/// Quadrature estimate of `|| v(S[f]) ||_{L²}` where `v` is the chosen
/// pointwise functional. `p` only affects [`NormVariant::Full`].
pub fn l2_vp_norm(
    system: &SystemSpec,
    coeffs: &CoeffSeq,
    p: f64,
    plan: &SamplePlan,
    variant: NormVariant,
) -> Result<Estimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    quadrature_estimate(system, coeffs, plan, |path| path_functional(path, p, variant))
}
