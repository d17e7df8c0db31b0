use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::runner::{Runner, TrialTally};
use super::stats::{wilson_upper, Z_99};
use crate::error::{Error, Result};
use crate::hashcore::{
    balls_bins_max_linf, bernstein_interference_bound, max_eta_for_inner_bound,
    max_linf_for_concentration, min_buckets, personalize, variance_closed_form, HashConfig,
    PreparedVector, Projection, SparseVector,
};

/// Tail events whose expected count under the bound falls below this are
/// reported as low-power instead of pass/fail.
pub const MIN_EXPECTED_EVENTS: f64 = 10.0;

const UNIT_NORM_TOL: f64 = 1e-9;

/// Shared parameters of a tail-probability experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExperiment {
    bits: u32,
    eps: f64,
    delta: f64,
    trials: u64,
    base_seed: u64,
}

impl TailExperiment {
    pub fn new(bits: u32, eps: f64, delta: f64, trials: u64, base_seed: u64) -> Result<Self> {
        HashConfig::new(bits, 0)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::input(format!("eps must lie in (0, 1), got {eps}")));
        }
        Self::with_free_eps(bits, eps, delta, trials, base_seed)
    }

    /// Like [`new`](Self::new) but `eps` may exceed 1; the interference
    /// threshold is an absolute inner-product level, not a relative error.
    pub fn with_free_eps(bits: u32, eps: f64, delta: f64, trials: u64, base_seed: u64) -> Result<Self> {
        HashConfig::new(bits, 0)?;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::input(format!("eps must be positive, got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0, 1), got {delta}")));
        }
        let min_trials = (100.0 / delta).ceil() as u64;
        if trials < min_trials {
            return Err(Error::input(format!(
                "trials = {trials} < ceil(100 / delta) = {min_trials}"
            )));
        }
        Ok(TailExperiment {
            bits,
            eps,
            delta,
            trials,
            base_seed,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn m(&self) -> usize {
        1 << self.bits
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    fn cfg(&self, seed: u64) -> HashConfig {
        HashConfig::for_trial(self.bits, seed).expect("bits validated at construction")
    }
}

/// Spikiness and scale of a pair `(x, x')` as used by the inner-product
/// bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionParams {
    /// Largest `|v|_inf / |v|_2` over `v` in `{x, x', x - x'}` (zero vectors skipped).
    pub eta: f64,
    /// Largest standard deviation of `|v|^2_phi` over the same three vectors.
    pub sigma_max: f64,
    /// `|x|^2 + |x'|^2 + |x - x'|^2`.
    pub delta_cap: f64,
}

impl DistortionParams {
    pub fn of(x: &SparseVector, x2: &SparseVector, m: usize) -> Result<Self> {
        let diff = x.sub(x2);
        let mut eta: f64 = 0.0;
        let mut sigma_max: f64 = 0.0;
        for v in [x, x2, &diff] {
            eta = eta.max(v.spikiness());
            sigma_max = sigma_max.max(variance_closed_form(v, v, m)?.sqrt());
        }
        Ok(DistortionParams {
            eta,
            sigma_max,
            delta_cap: x.l2_squared() + x2.l2_squared() + diff.l2_squared(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    LowPower,
    PreconditionFailed,
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub name: String,
    pub kind: String,
    pub status: Status,
    /// `empirical_tail <= bound`.
    pub pass: bool,
    pub trials_used: u64,
    pub events: u64,
    /// Raw event frequency.
    pub frequency: f64,
    /// Upper end of the 99% Wilson interval of the event frequency.
    pub empirical_tail: f64,
    pub bound: f64,
    /// The closed-form bound is at least 1 and says nothing.
    pub vacuous: bool,
    pub config: TailExperimentEcho,
    pub details: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Experiment parameters echoed into the report so that a run can be replayed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TailExperimentEcho {
    pub bits: u32,
    pub eps: f64,
    pub delta: f64,
    pub trials: u64,
    pub base_seed: u64,
}

impl From<&TailExperiment> for TailExperimentEcho {
    fn from(e: &TailExperiment) -> Self {
        TailExperimentEcho {
            bits: e.bits,
            eps: e.eps,
            delta: e.delta,
            trials: e.trials,
            base_seed: e.base_seed,
        }
    }
}

impl TailReport {
    fn from_tally(
        kind: &str,
        exp: &TailExperiment,
        tally: TrialTally,
        bound: f64,
        details: BTreeMap<String, f64>,
    ) -> Self {
        let n = tally.trials;
        let frequency = if n == 0 { 0.0 } else { tally.events as f64 / n as f64 };
        let empirical_tail = wilson_upper(tally.events, n, Z_99);
        let pass = if bound == 0.0 {
            // The event is impossible under the bound; only a clean run agrees.
            tally.events == 0
        } else {
            empirical_tail <= bound
        };
        let status = if bound > 0.0 && bound * (n as f64) < MIN_EXPECTED_EVENTS {
            Status::LowPower
        } else if pass {
            Status::Pass
        } else {
            Status::Fail
        };
        TailReport {
            name: kind.to_string(),
            kind: kind.to_string(),
            status,
            pass,
            trials_used: n,
            events: tally.events,
            frequency,
            empirical_tail,
            bound,
            vacuous: bound >= 1.0,
            config: exp.into(),
            details,
            error: None,
        }
    }

    /// A report for an experiment that could not run.
    pub fn precondition_failed(name: &str, kind: &str, config: TailExperimentEcho, err: &Error) -> Self {
        TailReport {
            name: name.to_string(),
            kind: kind.to_string(),
            status: Status::PreconditionFailed,
            pass: false,
            trials_used: 0,
            events: 0,
            frequency: 0.0,
            empirical_tail: 0.0,
            bound: 0.0,
            vacuous: false,
            config,
            details: BTreeMap::new(),
            error: Some(err.to_string()),
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

fn require_unit(x: &SparseVector, what: &str) -> Result<()> {
    if (x.l2() - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::precondition(format!(
            "|{what}|_2 = 1 required (within {UNIT_NORM_TOL:e}), got {}",
            x.l2()
        )));
    }
    Ok(())
}

fn require_min_buckets(exp: &TailExperiment, k: f64) -> Result<f64> {
    let need = min_buckets(exp.eps, exp.delta, k);
    if (exp.m() as f64) < need {
        return Err(Error::precondition(format!(
            "m >= 72 ln({k}/delta) / eps^2 violated: m = {} < {need:.1}",
            exp.m()
        )));
    }
    Ok(need)
}

fn details<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Frequency of `| |x|^2_phi - 1 | >= eps` against `2 delta`, under the
/// hypotheses `m >= 72 ln(1/delta) / eps^2` and
/// `|x|_inf <= eps / (18 sqrt(ln(1/delta) ln(m/delta)))`.
pub fn check_norm_concentration(
    exp: &TailExperiment,
    x: &SparseVector,
    runner: &Runner,
) -> Result<TailReport> {
    require_unit(x, "x")?;
    require_min_buckets(exp, 1.0)?;
    let linf_cap = max_linf_for_concentration(exp.eps, exp.delta, exp.m());
    if x.linf() > linf_cap {
        return Err(Error::precondition(format!(
            "|x|_inf <= eps / (18 sqrt(ln(1/delta) ln(m/delta))) violated: {} > {linf_cap:.6}",
            x.linf()
        )));
    }
    let px = PreparedVector::new(x);
    let tally = runner.run(
        exp.base_seed,
        exp.trials,
        || Projection::new(exp.m()),
        |seed, proj| {
            let cfg = exp.cfg(seed);
            proj.clear();
            px.project_into(&cfg, 1.0, proj);
            let sq = proj.norm_squared();
            ((sq - 1.0).abs() >= exp.eps, sq)
        },
    );
    let mean = tally.aux_sum / tally.trials as f64;
    Ok(TailReport::from_tally(
        "norm_concentration",
        exp,
        tally,
        2.0 * exp.delta,
        details([
            ("linf", x.linf()),
            ("linf_cap", linf_cap),
            ("mean_hashed_norm_sq", mean),
            ("nnz", x.len() as f64),
        ]),
    ))
}

/// Frequency of `|<x, x'>_phi - <x, x'>| > eps Delta / 2` against `delta`.
pub fn check_inner_concentration(
    exp: &TailExperiment,
    x: &SparseVector,
    x2: &SparseVector,
    runner: &Runner,
) -> Result<TailReport> {
    let params = DistortionParams::of(x, x2, exp.m())?;
    require_min_buckets(exp, 1.0)?;
    let eta_cap = max_eta_for_inner_bound(exp.eps, exp.delta, exp.m());
    if params.eta > eta_cap {
        return Err(Error::precondition(format!(
            "eta <= eps / ln(m/delta) violated: {} > {eta_cap:.6}",
            params.eta
        )));
    }
    let exact = x.dot(x2);
    let threshold = exp.eps * params.delta_cap / 2.0;
    let (px, px2) = (PreparedVector::new(x), PreparedVector::new(x2));
    let tally = runner.run(
        exp.base_seed,
        exp.trials,
        || (Projection::new(exp.m()), Projection::new(exp.m())),
        |seed, (a, b)| {
            let cfg = exp.cfg(seed);
            a.clear();
            b.clear();
            px.project_into(&cfg, 1.0, a);
            px2.project_into(&cfg, 1.0, b);
            let err = a.dot(b) - exact;
            (err.abs() > threshold, err)
        },
    );
    let mean_err = tally.aux_sum / tally.trials as f64;
    Ok(TailReport::from_tally(
        "inner_concentration",
        exp,
        tally,
        exp.delta,
        details([
            ("eta", params.eta),
            ("eta_cap", eta_cap),
            ("sigma_max", params.sigma_max),
            ("delta_cap", params.delta_cap),
            ("threshold", threshold),
            ("exact_inner", exact),
            ("mean_error", mean_err),
        ]),
    ))
}

/// Frequency of draws where some pairwise squared distance among `xs` is
/// distorted by more than a factor `eps`, against `delta`.
pub fn check_union_bound(exp: &TailExperiment, xs: &[SparseVector], runner: &Runner) -> Result<TailReport> {
    let n = xs.len();
    let mut pairs = Vec::new();
    if n >= 2 {
        require_min_buckets(exp, n as f64)?;
        let eta_cap = max_eta_for_inner_bound(exp.eps, exp.delta, exp.m());
        for i in 0..n {
            for j in i + 1..n {
                let d = xs[i].sub(&xs[j]);
                if d.is_empty() {
                    continue;
                }
                if d.spikiness() > eta_cap {
                    return Err(Error::precondition(format!(
                        "pair ({i}, {j}): |x_i - x_j|_inf <= eta |x_i - x_j|_2 violated \
                         ({} > {eta_cap:.6})",
                        d.spikiness()
                    )));
                }
                pairs.push((i, j, d.l2_squared()));
            }
        }
    }
    let prepared: Vec<PreparedVector> = xs.iter().map(PreparedVector::new).collect();
    let tally = if pairs.is_empty() {
        TrialTally::default()
    } else {
        runner.run(
            exp.base_seed,
            exp.trials,
            || vec![Projection::new(exp.m()); n],
            |seed, projs| {
                let cfg = exp.cfg(seed);
                for (p, proj) in prepared.iter().zip(projs.iter_mut()) {
                    proj.clear();
                    p.project_into(&cfg, 1.0, proj);
                }
                let worst = pairs
                    .iter()
                    .map(|&(i, j, exact)| (projs[i].distance_squared(&projs[j]) - exact).abs() / exact)
                    .fold(0.0, f64::max);
                (worst > exp.eps, worst)
            },
        )
    };
    let mut report = TailReport::from_tally(
        "union_bound",
        exp,
        tally,
        exp.delta,
        details([("vectors", n as f64), ("pairs", pairs.len() as f64)]),
    );
    if pairs.is_empty() {
        report.pass = true;
        report.status = Status::Pass;
        report.empirical_tail = 0.0;
    } else {
        report
            .details
            .insert("mean_worst_distortion".into(), tally.aux_sum / tally.trials as f64);
    }
    Ok(report)
}

/// Weight vectors of tasks other than the one under test; hashed together
/// they form `w = sum_v phi_v(w_v)`.
#[derive(Debug, Clone, Default)]
pub struct InterferenceRecipe {
    pub tasks: Vec<(String, SparseVector)>,
}

impl InterferenceRecipe {
    /// The raw vector whose hashed image is `w`: every task's entries under
    /// task-prefixed tokens.
    pub fn personalized(&self) -> Result<SparseVector> {
        SparseVector::from_pairs(self.tasks.iter().flat_map(|(task, w)| {
            w.iter()
                .map(move |(t, v)| (personalize(task.as_bytes(), t), v))
        }))
    }
}

pub fn personalized_vector(x: &SparseVector, task: &str) -> SparseVector {
    SparseVector::from_pairs(x.iter().map(|(t, v)| (personalize(task.as_bytes(), t), v)))
        .expect("personalized tokens are nonempty")
}

/// Frequency of `|<w, phi_task(x)>| > eps` against the mean over trials of
/// the Bernstein bound at the realized norms of `w`.
pub fn check_interference(
    exp: &TailExperiment,
    recipe: &InterferenceRecipe,
    x: &SparseVector,
    task: &str,
    runner: &Runner,
) -> Result<TailReport> {
    if task.is_empty() {
        return Err(Error::precondition("task id must be nonempty"));
    }
    if recipe.tasks.iter().any(|(t, _)| t == task) {
        return Err(Error::precondition(format!(
            "task {task:?} appears among the tasks that build w"
        )));
    }
    let pw = PreparedVector::new(&recipe.personalized()?);
    let px = PreparedVector::new(&personalized_vector(x, task));
    let (x_l2, x_linf) = (x.l2(), x.linf());
    let m = exp.m();
    let eps = exp.eps;
    let tally = runner.run(
        exp.base_seed,
        exp.trials,
        || Projection::new(m),
        |seed, w| {
            let cfg = exp.cfg(seed);
            w.clear();
            pw.project_into(&cfg, 1.0, w);
            let mut inner = 0.0;
            for (k, &v) in px.values().iter().enumerate() {
                let (b, s) = px.slot(k, &cfg);
                inner += v * s * w.get(b);
            }
            let bound = bernstein_interference_bound(w.norm_squared().sqrt(), w.linf(), x_l2, x_linf, m, eps)
                .expect("norms are finite and non-negative")
                .probability;
            (inner.abs() > eps, bound)
        },
    );
    let bound = if tally.trials == 0 { 0.0 } else { tally.aux_sum / tally.trials as f64 };
    let (w0_l2, w0_linf) = realized_w_norms(&pw, exp);
    Ok(TailReport::from_tally(
        "interference",
        exp,
        tally,
        bound,
        details([
            ("x_l2", x_l2),
            ("x_linf", x_linf),
            ("w_l2_first_trial", w0_l2),
            ("w_linf_first_trial", w0_linf),
            ("tasks", recipe.tasks.len() as f64),
        ]),
    ))
}

/// `(|w|_2, |w|_inf)` of the hashed `w` in the first trial of `exp`.
pub(crate) fn realized_w_norms(pw: &PreparedVector, exp: &TailExperiment) -> (f64, f64) {
    let mut w = Projection::new(exp.m());
    pw.project_into(&exp.cfg(exp.base_seed), 1.0, &mut w);
    (w.norm_squared().sqrt(), w.linf())
}

/// `sigma_*^2 = max_i sum_{j: h(j) = i} x_j^2`.
pub fn max_bucket_mass(x: &SparseVector, cfg: &HashConfig) -> Result<f64> {
    require_unit(x, "x")?;
    let mut mass = vec![0.0; cfg.m()];
    for (t, v) in x.iter() {
        mass[crate::hashcore::hash_token(t, cfg)?.bucket] += v * v;
    }
    Ok(mass.into_iter().fold(0.0, f64::max))
}

/// Frequency of `sigma_*^2 > 2/m` against `delta`, under
/// `|x|_inf <= 1 / (2 sqrt(m ln(m/delta)))`.
pub fn check_balls_and_bins(exp: &TailExperiment, x: &SparseVector, runner: &Runner) -> Result<TailReport> {
    require_unit(x, "x")?;
    let cap = balls_bins_max_linf(exp.m(), exp.delta);
    if x.linf() > cap {
        return Err(Error::precondition(format!(
            "|x|_inf <= 1 / (2 sqrt(m ln(m/delta))) violated: {} > {cap:.6}",
            x.linf()
        )));
    }
    let px = PreparedVector::new(x);
    let limit = 2.0 / exp.m() as f64;
    let tally = runner.run(
        exp.base_seed,
        exp.trials,
        || vec![0.0f64; exp.m()],
        |seed, mass| {
            let cfg = exp.cfg(seed);
            mass.iter_mut().for_each(|v| *v = 0.0);
            for (k, &v) in px.values().iter().enumerate() {
                mass[px.bucket(k, &cfg)] += v * v;
            }
            let max = mass.iter().copied().fold(0.0, f64::max);
            (max > limit, max)
        },
    );
    let mean = tally.aux_sum / tally.trials as f64;
    Ok(TailReport::from_tally(
        "balls_and_bins",
        exp,
        tally,
        exp.delta,
        details([("linf", x.linf()), ("linf_cap", cap), ("limit", limit), ("mean_max_mass", mean)]),
    ))
}
