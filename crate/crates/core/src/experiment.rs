//! Seeded experiment runner.
//!
//! Every random quantity is drawn from a stream named by [`seed::mix`]:
//!
//! | stream | seed |
//! |---|---|
//! | quadrature nodes of replicate `r` | `mix(seed, [SAMPLE, plan.seed, r])` |
//! | best-of selection nodes | `mix(sample seed, [SELECT])` |
//! | rearrangement of ordering `o` | `mix(seed, [N, o, r])`, draw `b` uses `mix(that, [b])` |
//! | random coefficients | `mix(seed, [COEFF, N, r])` |
//! | oracle / moment instances | `mix(seed, [ORACLE or GARSIA, N, r])` |
//!
//! Quadrature nodes do not depend on `N` or on the ordering, so orderings
//! are compared on identical nodes and coin-flip draws are nested in `N`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::onsys::{
    dirichlet_coeffs, l2_vp_norm, quadrature_estimate, CoeffSeq, Estimate, NormVariant,
    SampleMode, SamplePlan, SystemKind, SystemSpec,
};
use crate::rearrange::{
    apply_plan, garsia_bound, garsia_maxsum_moment, sample_plan, PlanMode, RearrangementPlan,
};
use crate::seed::{self, mix};
use crate::variation::{variation_bruteforce, variation_exact, PartialSumPath, BRUTE_FORCE_MAX_N};

const SAMPLE: u64 = 0x5341_4d50;
const SELECT: u64 = 0x5345_4c45;
const COEFF: u64 = 0x434f_4546;
const ORACLE: u64 = 0x4f52_4143;
const GARSIA: u64 = 0x4741_5253;

/// Largest estimated number of elementary DP steps run without `force`.
pub const DP_BUDGET: f64 = 1e10;

/// Relative discrepancy above which an oracle instance counts as a mismatch.
pub const ORACLE_TOL: f64 = 1e-12;

/// Exponents checked by the oracle suite.
pub const ORACLE_PS: [f64; 4] = [1.0, 1.5, 2.0, 3.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExperimentKind {
    OracleSuite,
    Growth,
    CompareOrderings,
    GaussianLower,
    GarsiaMoment,
    MaximalRatio,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::OracleSuite => "ORACLE_SUITE",
            ExperimentKind::Growth => "GROWTH",
            ExperimentKind::CompareOrderings => "COMPARE_ORDERINGS",
            ExperimentKind::GaussianLower => "GAUSSIAN_LOWER",
            ExperimentKind::GarsiaMoment => "GARSIA_MOMENT",
            ExperimentKind::MaximalRatio => "MAXIMAL_RATIO",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CoeffProfile {
    /// `a_n = 1` (or `1/√N` when normalized).
    Flat,
    /// Same values as `FLAT`; named for the trigonometric kernel.
    Dirichlet,
    /// First `N` rows of an `index,re,im` file.
    File(PathBuf),
    /// Independent complex normals with `E|a_n|² = 1`.
    GaussianRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemChoice {
    pub kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

impl SystemChoice {
    pub fn spec(&self, n: usize) -> SystemSpec {
        SystemSpec { kind: self.kind, n, bound: self.bound }
    }
}

fn default_profile() -> CoeffProfile {
    CoeffProfile::Dirichlet
}
fn default_true() -> bool {
    true
}
fn default_p() -> f64 {
    2.0
}
fn default_one() -> usize {
    1
}
fn default_plan() -> SamplePlan {
    SamplePlan::new(SampleMode::RandomPoints, 64, 0)
}
fn default_orderings() -> Vec<PlanMode> {
    vec![PlanMode::Identity]
}
fn default_best_of() -> usize {
    8
}
fn default_variant() -> NormVariant {
    NormVariant::Full
}
fn default_trials() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub system: SystemChoice,
    #[serde(default = "default_profile")]
    pub coeff_profile: CoeffProfile,
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(rename = "Ns")]
    pub ns: Vec<usize>,
    #[serde(default = "default_one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_plan")]
    pub plan: SamplePlan,
    #[serde(default = "default_orderings")]
    pub orderings: Vec<PlanMode>,
    /// Draws per replicate for `BLOCK` and `UNIFORM`; the draw with the
    /// smallest estimate on independent selection nodes is kept.
    #[serde(default = "default_best_of")]
    pub best_of: usize,
    #[serde(default = "default_variant")]
    pub variant: NormVariant,
    /// Refine the end strips of `RANDOM_POINTS` down to width about
    /// `1/(4N)` (see [`SamplePlan::end_levels_for`]).
    #[serde(default)]
    pub resolve_ends: bool,
    /// Monte Carlo permutations for `GARSIA_MOMENT` when `N > 8`.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Skip the DP budget guard.
    #[serde(default)]
    pub force: bool,
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of_key(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.find(&needle)
        .map(|at| text[..at].matches('\n').count() + 1)
        .unwrap_or(1)
}

impl ExperimentConfig {
    /// Checks cross-field constraints; the error names the offending key.
    pub fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.ns.is_empty() {
            return Err(("Ns", "Ns must not be empty".into()));
        }
        if self.ns[0] == 0 {
            return Err(("Ns", "sizes must be positive".into()));
        }
        if let Some(w) = self.ns.windows(2).find(|w| w[1] <= w[0]) {
            return Err(("Ns", format!("Ns must be strictly increasing ({} then {})", w[0], w[1])));
        }
        if self.replicates == 0 {
            return Err(("replicates", "replicates must be >= 1".into()));
        }
        if self.best_of == 0 {
            return Err(("best_of", "best_of must be >= 1".into()));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(("p", format!("p = {} must be finite and >= 1", self.p)));
        }
        if self.plan.count == 0 {
            return Err(("plan", "plan count must be positive".into()));
        }
        if self.orderings.is_empty() {
            return Err(("orderings", "orderings must not be empty".into()));
        }
        let mut seen = self.orderings.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.orderings.len() {
            return Err(("orderings", "orderings must not repeat".into()));
        }
        self.system.spec(1).validate().map_err(|e| ("system", e.to_string()))?;
        match self.experiment {
            ExperimentKind::CompareOrderings if !self.orderings.contains(&PlanMode::Identity) => {
                Err(("orderings", "COMPARE_ORDERINGS needs IDENTITY as the reference".into()))
            }
            ExperimentKind::GaussianLower if self.system.kind != SystemKind::GaussianCoeff => {
                Err(("system", "GAUSSIAN_LOWER needs the GAUSSIAN_COEFF system".into()))
            }
            ExperimentKind::OracleSuite if *self.ns.last().unwrap() > BRUTE_FORCE_MAX_N => Err((
                "Ns",
                format!("ORACLE_SUITE sizes are limited to {BRUTE_FORCE_MAX_N}"),
            )),
            ExperimentKind::GarsiaMoment if self.trials == 0 => Err(("trials", "trials must be >= 1".into())),
            _ => Ok(()),
        }
    }
}

/// Parses and validates a JSON config; errors carry the line of the problem.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| Error::Config { line: e.line().max(1), message: e.to_string() })?;
    config
        .check()
        .map_err(|(key, message)| Error::Config { line: line_of_key(text, key), message })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { context: path.to_path_buf(), source })?;
    parse_config(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueKind {
    #[serde(rename = "L2V2")]
    L2V2,
    #[serde(rename = "L2VP")]
    L2VP,
    SupRatio,
    #[serde(rename = "EV2")]
    EV2,
    Moment,
    MaximalRatio,
    /// Largest relative gap between the DP and brute force on one instance.
    OracleDiff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: ExperimentKind,
    pub system: SystemKind,
    pub ordering: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub replicate: usize,
    pub kind: ValueKind,
    pub value: f64,
    pub stderr: f64,
    pub seconds: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub summary: Value,
}

/// Header note of the ordering comparison summary.
pub const COMPARE_NOTE: &str = "Desk-scale sizes cannot separate sqrt(ln ln N) from a constant; \
the ratios below are monotone-trend statistics over the sampled N, not asymptotic fits.";

pub fn sample_seed(config: &ExperimentConfig, replicate: usize) -> u64 {
    mix(config.seed, &[SAMPLE, config.plan.seed, replicate as u64])
}

pub fn plan_seed(config: &ExperimentConfig, n: usize, mode: PlanMode, replicate: usize) -> u64 {
    mix(config.seed, &[n as u64, mode.id(), replicate as u64])
}

/// Quadrature plan of replicate `r` at size `n`.
pub fn replicate_plan(config: &ExperimentConfig, n: usize, replicate: usize) -> SamplePlan {
    let mut plan = config.plan;
    plan.seed = sample_seed(config, replicate);
    if config.resolve_ends && plan.mode == SampleMode::RandomPoints {
        plan.end_levels = SamplePlan::end_levels_for(plan.count, n);
    }
    plan
}

/// Coefficients of replicate `r` at size `n`.
pub fn coefficients(config: &ExperimentConfig, n: usize, replicate: usize) -> Result<CoeffSeq> {
    let raw = match &config.coeff_profile {
        CoeffProfile::Flat | CoeffProfile::Dirichlet => return Ok(dirichlet_coeffs(n, config.normalize)),
        CoeffProfile::GaussianRandom => {
            let mut rng = seed::rng(mix(config.seed, &[COEFF, n as u64, replicate as u64]));
            let h = std::f64::consts::FRAC_1_SQRT_2;
            (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(h * re, h * im)
                })
                .collect::<Vec<_>>()
        }
        CoeffProfile::File(path) => {
            let all = CoeffSeq::read_csv(path)?;
            if all.len() < n {
                return Err(Error::SizeMismatch { expected: n, got: all.len() });
            }
            all.coeffs()[..n].to_vec()
        }
    };
    let seq = CoeffSeq::new(raw)?;
    if config.normalize && seq.total_mass() > 0.0 {
        let s = 1.0 / seq.l2_norm();
        CoeffSeq::new(seq.coeffs().iter().map(|a| a * s).collect())
    } else {
        Ok(seq)
    }
}

fn is_real_system(kind: SystemKind) -> bool {
    kind != SystemKind::Trig
}

/// Worst-case elementary DP steps of a `GROWTH` or `COMPARE_ORDERINGS` run.
pub fn estimated_cost(config: &ExperimentConfig) -> f64 {
    let evals_per_rep: f64 = config
        .orderings
        .iter()
        .map(|m| match m {
            PlanMode::Block | PlanMode::Uniform if config.best_of > 1 => config.best_of as f64 + 1.0,
            _ => 1.0,
        })
        .sum();
    config
        .ns
        .iter()
        .map(|&n| {
            let n = n as f64;
            let per_path = match config.variant {
                NormVariant::Full if is_real_system(config.system.kind) => (n / 2.0) * (n / 2.0),
                NormVariant::Full => n * n,
                _ => n * n.log2().max(1.0),
            };
            let nodes = replicate_plan(config, n as usize, 0).count as f64
                + 2.0 * replicate_plan(config, n as usize, 0).end_levels as f64;
            per_path * nodes * evals_per_rep * config.replicates as f64
        })
        .sum()
}

fn check_budget(config: &ExperimentConfig) -> Result<()> {
    let runs_dp = matches!(
        config.experiment,
        ExperimentKind::Growth | ExperimentKind::CompareOrderings
    );
    if !runs_dp || config.force {
        return Ok(());
    }
    let estimate = estimated_cost(config);
    if estimate > DP_BUDGET {
        let hint = if is_real_system(config.system.kind) {
            "reduce the sample count or sizes, or pass --force"
        } else {
            "use a real-valued system so EXTREMA_PRUNED applies, reduce the sample count, or pass --force"
        };
        return Err(Error::Budget { estimate, budget: DP_BUDGET, hint: hint.into() });
    }
    Ok(())
}

/// Random complex instance of the oracle suite.
pub fn oracle_instance(n: usize, seed: u64) -> Result<PartialSumPath> {
    let mut rng = seed::rng(seed);
    let inc: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PartialSumPath::from_increments(&inc)
}

/// Largest relative gap between the DP and brute force over [`ORACLE_PS`].
pub fn oracle_discrepancy(path: &PartialSumPath) -> Result<f64> {
    let mut worst = 0.0f64;
    for p in ORACLE_PS {
        let a = variation_exact(path, p)?.value;
        let b = variation_bruteforce(path, p)?.value;
        let gap = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(if a == b { 0.0 } else { gap });
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub mismatches: usize,
    pub max_rel_diff: f64,
}

/// `instances` random complex paths with `N` uniform in `1..=n_max`.
pub fn oracle_suite(n_max: usize, instances: usize, seed: u64) -> Result<OracleReport> {
    if n_max == 0 || n_max > BRUTE_FORCE_MAX_N {
        return Err(Error::BruteForceBudget { n: n_max, max: BRUTE_FORCE_MAX_N });
    }
    let gaps = (0..instances)
        .into_par_iter()
        .map(|i| {
            let s = mix(seed, &[ORACLE, i as u64]);
            let n = 1 + (s % n_max as u64) as usize;
            oracle_discrepancy(&oracle_instance(n, mix(s, &[n as u64]))?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OracleReport {
        instances,
        mismatches: gaps.iter().filter(|&&g| g > ORACLE_TOL).count(),
        max_rel_diff: gaps.iter().copied().fold(0.0, f64::max),
    })
}

/// The rearrangement evaluated for `ordering` in replicate `r`: one draw
/// for `IDENTITY` and `SIGNS`, best of `best_of` draws otherwise.
pub fn ordering_plan(
    config: &ExperimentConfig,
    coeffs: &CoeffSeq,
    n: usize,
    mode: PlanMode,
    replicate: usize,
) -> Result<RearrangementPlan> {
    let base = plan_seed(config, n, mode, replicate);
    match mode {
        PlanMode::Identity | PlanMode::Signs => sample_plan(coeffs, mode, base),
        PlanMode::Block | PlanMode::Uniform => {
            if config.best_of == 1 {
                return sample_plan(coeffs, mode, mix(base, &[0]));
            }
            let system = config.system.spec(n);
            let mut select = replicate_plan(config, n, replicate);
            select.seed = mix(select.seed, &[SELECT]);
            let mut best: Option<(f64, RearrangementPlan)> = None;
            for b in 0..config.best_of {
                let plan = sample_plan(coeffs, mode, mix(base, &[b as u64]))?;
                let moved = apply_plan(coeffs, &plan)?;
                let v = l2_vp_norm(&system, &moved, config.p, &select, config.variant)?.value;
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, plan));
                }
            }
            Ok(best.expect("best_of >= 1").1)
        }
    }
}

fn norm_kind(config: &ExperimentConfig) -> ValueKind {
    match config.variant {
        NormVariant::Full if config.p == 2.0 => ValueKind::L2V2,
        NormVariant::Sup => ValueKind::SupRatio,
        _ => ValueKind::L2VP,
    }
}

struct Task {
    n: usize,
    ordering: Option<PlanMode>,
    replicate: usize,
}

fn run_task(config: &ExperimentConfig, task: &Task) -> Result<RunRecord> {
    let start = Instant::now();
    let Task { n, ordering, replicate } = *task;
    let system = config.system.spec(n);
    let mut record = RunRecord {
        experiment: config.experiment,
        system: config.system.kind,
        ordering: ordering.map_or("NONE", PlanMode::name).to_string(),
        n,
        replicate,
        kind: ValueKind::L2V2,
        value: 0.0,
        stderr: 0.0,
        seconds: 0.0,
        seed: 0,
    };
    match config.experiment {
        ExperimentKind::OracleSuite => {
            let s = mix(config.seed, &[ORACLE, n as u64, replicate as u64]);
            record.kind = ValueKind::OracleDiff;
            record.value = oracle_discrepancy(&oracle_instance(n, s)?)?;
            record.seed = s;
        }
        ExperimentKind::GarsiaMoment => {
            let s = mix(config.seed, &[GARSIA, n as u64, replicate as u64]);
            let mut rng = seed::rng(s);
            let xs: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let est = garsia_maxsum_moment(&xs, config.trials, mix(s, &[1]))?;
            let bound = garsia_bound(&xs);
            record.kind = ValueKind::Moment;
            record.value = est.mean / bound;
            record.stderr = est.stderr / bound;
            record.seed = s;
        }
        _ => {
            let mode = ordering.expect("ordering experiments carry an ordering");
            let coeffs = coefficients(config, n, replicate)?;
            let plan = ordering_plan(config, &coeffs, n, mode, replicate)?;
            let moved = apply_plan(&coeffs, &plan)?;
            let nodes = replicate_plan(config, n, replicate);
            record.seed = plan_seed(config, n, mode, replicate);
            match config.experiment {
                ExperimentKind::GaussianLower => {
                    let est = l2_vp_norm(&system, &moved, config.p, &nodes, NormVariant::Full)?;
                    record.kind = ValueKind::EV2;
                    record.value = est.mean();
                    record.stderr = est.mean_stderr();
                }
                ExperimentKind::MaximalRatio => {
                    let est = quadrature_estimate(&system, &moved, &nodes, |path| Ok(path.max_modulus()))?;
                    let l2 = moved.l2_norm();
                    record.kind = ValueKind::MaximalRatio;
                    record.value = est.value / l2;
                    record.stderr = est.stderr / l2;
                }
                _ => {
                    let est: Estimate = l2_vp_norm(&system, &moved, config.p, &nodes, config.variant)?;
                    record.kind = norm_kind(config);
                    let scale = if record.kind == ValueKind::SupRatio { 1.0 / moved.l2_norm() } else { 1.0 };
                    record.value = est.value * scale;
                    record.stderr = est.stderr * scale;
                }
            }
        }
    }
    record.seconds = start.elapsed().as_secs_f64();
    Ok(record)
}

fn sort_key(r: &RunRecord) -> (usize, String, usize) {
    (r.n, r.ordering.clone(), r.replicate)
}

/// Runs every `(N, ordering, replicate)` task and returns the records sorted
/// by that key together with a summary.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config
        .check()
        .map_err(|(key, message)| Error::Config { line: 0, message: format!("{key}: {message}") })?;
    check_budget(config)?;
    let uses_orderings = !matches!(
        config.experiment,
        ExperimentKind::OracleSuite | ExperimentKind::GarsiaMoment
    );
    let mut tasks = Vec::new();
    for &n in &config.ns {
        let orderings: Vec<Option<PlanMode>> = if uses_orderings {
            config.orderings.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for ordering in orderings {
            for replicate in 0..config.replicates {
                tasks.push(Task { n, ordering, replicate });
            }
        }
    }
    let mut records = tasks
        .par_iter()
        .map(|t| run_task(config, t))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(sort_key);
    let summary = summarize(config, &records);
    Ok(RunOutput { records, summary })
}

fn mean_and_stderr(values: &[f64], fallback_stderr: f64) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, fallback_stderr);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of a nonempty list.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Per-`(ordering, N)` statistics and experiment-specific aggregates.
pub fn summarize(config: &ExperimentConfig, records: &[RunRecord]) -> Value {
    let mut groups: BTreeMap<(String, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.ordering.clone(), r.n)).or_default().push(r);
    }
    let mut rows = Vec::new();
    let mut means: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for ((ordering, n), rs) in &groups {
        let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
        let (mean, stderr) = mean_and_stderr(&values, rs[0].stderr);
        let nf = *n as f64;
        let mut row = json!({
            "ordering": ordering,
            "N": n,
            "replicates": rs.len(),
            "mean": json_f64(mean),
            "stderr": json_f64(stderr),
            "median": json_f64(median(&values)),
            "max": json_f64(values.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        });
        if nf > 1.0 {
            row["sq_over_ln_n"] = json_f64(mean * mean / nf.ln());
        }
        if nf.ln() > 1.0 {
            row["sq_over_lnln_n"] = json_f64(mean * mean / nf.ln().ln());
            if config.experiment == ExperimentKind::GaussianLower {
                row["lower_ratio"] = json_f64(mean / (nf * nf.ln().ln()).sqrt());
            }
        }
        means.entry(ordering.clone()).or_default().push((*n, mean));
        rows.push(row);
    }
    let mut summary = json!({
        "experiment": config.experiment.name(),
        "system": config.system.kind.name(),
        "groups": rows,
    });

    let mut trends = serde_json::Map::new();
    for (ordering, series) in &means {
        let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
        trends.insert(
            ordering.clone(),
            json!({
                "nondecreasing": ys.windows(2).all(|w| w[1] >= w[0]),
                "strictly_increasing": ys.windows(2).all(|w| w[1] > w[0]),
            }),
        );
    }
    summary["trends"] = Value::Object(trends);

    if matches!(config.experiment, ExperimentKind::CompareOrderings | ExperimentKind::Growth)
        && config.orderings.contains(&PlanMode::Identity)
        && config.orderings.len() > 1
    {
        let mut identity: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for r in records.iter().filter(|r| r.ordering == PlanMode::Identity.name()) {
            identity.insert((r.n, r.replicate), r.value);
        }
        let mut ratio_rows = Vec::new();
        let mut per_ordering: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for ((ordering, n), rs) in &groups {
            if ordering == PlanMode::Identity.name() {
                continue;
            }
            let ratios: Vec<f64> = rs
                .iter()
                .filter_map(|r| identity.get(&(r.n, r.replicate)).map(|id| r.value / id))
                .collect();
            if ratios.is_empty() {
                continue;
            }
            let med = median(&ratios);
            per_ordering.entry(ordering.clone()).or_default().push(med);
            ratio_rows.push(json!({
                "ordering": ordering,
                "N": n,
                "median_ratio_vs_identity": json_f64(med),
                "mean_ratio_vs_identity": json_f64(ratios.iter().sum::<f64>() / ratios.len() as f64),
            }));
        }
        summary["note"] = json!(COMPARE_NOTE);
        summary["ratios"] = json!(ratio_rows);
        summary["ratio_trends"] = json!(per_ordering
            .iter()
            .map(|(o, m)| (o.clone(), json!({
                "all_below_one": m.iter().all(|&r| r < 1.0),
                "strictly_decreasing": m.windows(2).all(|w| w[1] < w[0]),
            })))
            .collect::<serde_json::Map<_, _>>());
    }
    match config.experiment {
        ExperimentKind::OracleSuite => {
            summary["instances"] = json!(records.len());
            summary["mismatches"] = json!(records.iter().filter(|r| r.value > ORACLE_TOL).count());
            summary["max_rel_diff"] = json_f64(records.iter().map(|r| r.value).fold(0.0, f64::max));
        }
        ExperimentKind::GarsiaMoment => {
            summary["max_ratio"] = json_f64(records.iter().map(|r| r.value).fold(0.0, f64::max));
        }
        _ => {}
    }
    summary
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(extra: &str) -> String {
        format!(
            r#"{{
  "experiment": "GROWTH",
  "system": {{"kind": "TRIG"}},
  "coeff_profile": "DIRICHLET",
  "Ns": [8, 16],
  "plan": {{"mode": "RANDOM_POINTS", "count": 8, "seed": 1}}{extra}
}}"#
        )
    }

    #[test]
    fn parses_defaults() {
        let c = parse_config(&base("")).unwrap();
        assert_eq!(c.p, 2.0);
        assert_eq!(c.best_of, 8);
        assert_eq!(c.orderings, vec![PlanMode::Identity]);
        assert!(c.normalize);
        let f = parse_config(&base(r#", "coeff_profile": {"FILE": "c.csv"}"#).replace(
            r#""coeff_profile": "DIRICHLET","#,
            "",
        ))
        .unwrap();
        assert_eq!(f.coeff_profile, CoeffProfile::File("c.csv".into()));
    }

    #[test]
    fn errors_name_the_line() {
        let text = base("").replace("[8, 16]", "[16, 8]");
        match parse_config(&text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("strictly increasing"));
            }
            other => panic!("{other:?}"),
        }
        let text = base(",\n  \"replicates\": 0");
        assert!(matches!(parse_config(&text), Err(Error::Config { line: 7, .. })));
        let text = base(",\n  \"bogus\": 1");
        assert!(matches!(parse_config(&text), Err(Error::Config { line: 7, .. })));
        let text = base("").replace("\"TRIG\"", "\"TRIGG\"");
        assert!(matches!(parse_config(&text), Err(Error::Config { line: 3, .. })));
    }

    #[test]
    fn compare_needs_identity() {
        let text = base(",\n  \"orderings\": [\"BLOCK\"]").replace("GROWTH", "COMPARE_ORDERINGS");
        assert!(matches!(parse_config(&text), Err(Error::Config { line: 7, .. })));
    }

    #[test]
    fn budget_guard() {
        let text = base("").replace("[8, 16]", "[65536]").replace("\"count\": 8", "\"count\": 64");
        let c = parse_config(&text).unwrap();
        assert!(estimated_cost(&c) > DP_BUDGET);
        assert!(matches!(run(&c), Err(Error::Budget { .. })));
    }

    #[test]
    fn growth_dirichlet_at_least_one() {
        let text = base("").replace("[8, 16]", "[256]");
        let out = run(&parse_config(&text).unwrap()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!(out.records[0].value >= 1.0 - 1e-12);
        assert_eq!(out.records[0].kind, ValueKind::L2V2);
    }

    #[test]
    fn compare_is_paired_and_sorted() {
        let text = base(",\n  \"orderings\": [\"BLOCK\", \"IDENTITY\"],\n  \"replicates\": 2,\n  \"best_of\": 2")
            .replace("GROWTH", "COMPARE_ORDERINGS");
        let c = parse_config(&text).unwrap();
        let out = run(&c).unwrap();
        assert_eq!(out.records.len(), 2 * 2 * 2);
        let keys: Vec<_> = out.records.iter().map(sort_key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(out.summary["note"].as_str().unwrap().contains("monotone-trend"));
        assert_eq!(out.summary["ratios"].as_array().unwrap().len(), 2);
        // Paired nodes: replicate plans ignore the ordering.
        assert_eq!(replicate_plan(&c, 8, 1), replicate_plan(&c, 8, 1));
        assert_ne!(replicate_plan(&c, 8, 0).seed, replicate_plan(&c, 8, 1).seed);
    }

    #[test]
    fn oracle_suite_small() {
        let r = oracle_suite(8, 40, 7).unwrap();
        assert_eq!((r.instances, r.mismatches), (40, 0));
        assert!(oracle_suite(30, 1, 0).is_err());
    }

    #[test]
    fn other_experiments_run() {
        let run_text = |text: &str| run(&parse_config(text).unwrap()).unwrap();
        let out = run_text(
            r#"{"experiment": "ORACLE_SUITE", "system": {"kind": "TRIG"}, "Ns": [6, 9], "replicates": 3, "seed": 1}"#,
        );
        assert_eq!(out.records.len(), 6);
        assert_eq!(out.summary["mismatches"], 0);

        let out = run_text(
            r#"{"experiment": "GARSIA_MOMENT", "system": {"kind": "TRIG"}, "Ns": [5, 20], "trials": 500}"#,
        );
        assert!(out.records.iter().all(|r| r.kind == ValueKind::Moment && r.value > 0.0 && r.value < 2.0));

        let out = run_text(
            r#"{"experiment": "MAXIMAL_RATIO", "system": {"kind": "RADEMACHER"}, "coeff_profile": "FLAT",
                "Ns": [16, 64], "plan": {"mode": "COIN_FLIPS", "count": 32, "seed": 4}}"#,
        );
        assert!(out.records.iter().all(|r| r.kind == ValueKind::MaximalRatio && r.value >= 0.5));

        let out = run_text(
            r#"{"experiment": "GAUSSIAN_LOWER", "system": {"kind": "GAUSSIAN_COEFF"}, "coeff_profile": "FLAT",
                "normalize": false, "Ns": [64, 256], "plan": {"mode": "RANDOM_POINTS", "count": 16, "seed": 4}}"#,
        );
        assert_eq!(out.records[0].kind, ValueKind::EV2);
        assert!(out.summary["groups"][1]["lower_ratio"].as_f64().unwrap() > 0.5);
    }

    #[test]
    fn gaussian_coefficients_are_reproducible() {
        let text = base("").replace("\"DIRICHLET\"", "\"GAUSSIAN_RANDOM\"");
        let c = parse_config(&text).unwrap();
        let a = coefficients(&c, 32, 0).unwrap();
        assert_eq!(a.coeffs(), coefficients(&c, 32, 0).unwrap().coeffs());
        assert_ne!(a.coeffs(), coefficients(&c, 32, 1).unwrap().coeffs());
        assert!((a.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
