use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiments::{
    check_balls_and_bins, check_inner_concentration, check_interference, check_norm_concentration,
    check_union_bound, realized_w_norms, InterferenceRecipe, Status,
    TailExperiment, TailExperimentEcho, TailReport,
};
use super::runner::Runner;
use crate::error::{Error, Result};
use crate::hashcore::{
    interference_eps_for_bound, replicate, splitmix64, PreparedVector, ReplicationParams,
    SparseVector,
};

pub const SCHEMA_VERSION: u32 = 1;

/// How to build a test vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorRecipe {
    /// `n` tokens `{prefix}{i}` of equal weight, unit norm, then replicated.
    Uniform {
        prefix: String,
        n: usize,
        #[serde(default = "one")]
        replicate: usize,
    },
    OneHot {
        token: String,
        #[serde(default = "one")]
        replicate: usize,
    },
    Entries(BTreeMap<String, f64>),
    Negate(Box<VectorRecipe>),
    Zero,
}

fn one() -> usize {
    1
}

impl VectorRecipe {
    pub fn build(&self) -> Result<SparseVector> {
        Ok(match self {
            VectorRecipe::Uniform { prefix, n, replicate: c } => {
                replicated(SparseVector::uniform(prefix, *n), *c)?
            }
            VectorRecipe::OneHot { token, replicate: c } => {
                replicated(SparseVector::one_hot(token)?, *c)?
            }
            VectorRecipe::Entries(map) => SparseVector::from_pairs(map.iter().map(|(k, v)| (k, *v)))?,
            VectorRecipe::Negate(inner) => inner.build()?.scaled(-1.0),
            VectorRecipe::Zero => SparseVector::new(),
        })
    }
}

fn replicated(x: SparseVector, c: usize) -> Result<SparseVector> {
    Ok(if c == 1 { x } else { replicate(&x, ReplicationParams::new(c)?) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorSet {
    List(Vec<VectorRecipe>),
    /// `n` one-hot vectors on tokens `{prefix}{i}`, each replicated `replicate` times.
    OneHotSet { prefix: String, n: usize, replicate: usize },
}

impl VectorSet {
    pub fn build(&self) -> Result<Vec<SparseVector>> {
        match self {
            VectorSet::List(v) => v.iter().map(VectorRecipe::build).collect(),
            VectorSet::OneHotSet { prefix, n, replicate: c } => (0..*n)
                .map(|i| replicated(SparseVector::one_hot(&format!("{prefix}{i}"))?, *c))
                .collect(),
        }
    }
}

/// Other-task weight vectors for the interference experiment: `count` tasks
/// named `{task_prefix}{v}`, each a unit vector over `tokens_per_task`
/// tokens `{token_prefix}{i}` with pseudo-random signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtherTasks {
    pub count: usize,
    pub tokens_per_task: usize,
    pub task_prefix: String,
    pub token_prefix: String,
    #[serde(default)]
    pub sign_seed: u64,
}

impl OtherTasks {
    pub fn build(&self) -> Result<InterferenceRecipe> {
        let k = self.tokens_per_task;
        let magnitude = 1.0 / (k as f64).sqrt();
        let tasks = (0..self.count)
            .map(|v| {
                let w = SparseVector::from_pairs((0..k).map(|i| {
                    let bit = splitmix64(self.sign_seed ^ ((v as u64) << 32 | i as u64)) & 1;
                    let sign = if bit == 1 { 1.0 } else { -1.0 };
                    (format!("{}{i}", self.token_prefix), sign * magnitude)
                }))?;
                Ok((format!("{}{v}", self.task_prefix), w))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(InterferenceRecipe { tasks })
    }
}

/// Parameters common to every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Common {
    pub name: String,
    pub bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub delta: f64,
    pub trials: u64,
    /// Overrides the suite-level base seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    NormConcentration {
        #[serde(flatten)]
        common: Common,
        x: VectorRecipe,
    },
    InnerConcentration {
        #[serde(flatten)]
        common: Common,
        x: VectorRecipe,
        x2: VectorRecipe,
    },
    UnionBound {
        #[serde(flatten)]
        common: Common,
        vectors: VectorSet,
    },
    Interference {
        #[serde(flatten)]
        common: Common,
        task: String,
        x: VectorRecipe,
        others: OtherTasks,
        /// Chooses `eps` so that the bound at the first trial's norms equals
        /// this value; used when `eps` is absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_bound: Option<f64>,
    },
    BallsAndBins {
        #[serde(flatten)]
        common: Common,
        x: VectorRecipe,
    },
}

impl ExperimentSpec {
    pub fn common(&self) -> &Common {
        match self {
            ExperimentSpec::NormConcentration { common, .. }
            | ExperimentSpec::InnerConcentration { common, .. }
            | ExperimentSpec::UnionBound { common, .. }
            | ExperimentSpec::Interference { common, .. }
            | ExperimentSpec::BallsAndBins { common, .. } => common,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::NormConcentration { .. } => "norm_concentration",
            ExperimentSpec::InnerConcentration { .. } => "inner_concentration",
            ExperimentSpec::UnionBound { .. } => "union_bound",
            ExperimentSpec::Interference { .. } => "interference",
            ExperimentSpec::BallsAndBins { .. } => "balls_and_bins",
        }
    }

    fn eps(&self) -> Result<f64> {
        self.common()
            .eps
            .ok_or_else(|| Error::input(format!("experiment {:?} needs eps", self.common().name)))
    }

    fn echo(&self, suite_seed: u64) -> TailExperimentEcho {
        let c = self.common();
        TailExperimentEcho {
            bits: c.bits,
            eps: c.eps.unwrap_or(0.0),
            delta: c.delta,
            trials: c.trials,
            base_seed: c.base_seed.unwrap_or(suite_seed),
        }
    }

    pub fn run(&self, suite_seed: u64, runner: &Runner) -> Result<TailReport> {
        let c = self.common();
        let seed = c.base_seed.unwrap_or(suite_seed);
        let exp = |eps: f64| TailExperiment::new(c.bits, eps, c.delta, c.trials, seed);
        let report = match self {
            ExperimentSpec::NormConcentration { x, .. } => {
                check_norm_concentration(&exp(self.eps()?)?, &x.build()?, runner)?
            }
            ExperimentSpec::InnerConcentration { x, x2, .. } => {
                check_inner_concentration(&exp(self.eps()?)?, &x.build()?, &x2.build()?, runner)?
            }
            ExperimentSpec::UnionBound { vectors, .. } => {
                check_union_bound(&exp(self.eps()?)?, &vectors.build()?, runner)?
            }
            ExperimentSpec::BallsAndBins { x, .. } => {
                // eps plays no role in the balls-and-bins event.
                let e = TailExperiment::with_free_eps(c.bits, c.eps.unwrap_or(0.5), c.delta, c.trials, seed)?;
                check_balls_and_bins(&e, &x.build()?, runner)?
            }
            ExperimentSpec::Interference { task, x, others, target_bound, .. } => {
                let recipe = others.build()?;
                let x = x.build()?;
                let eps = match (c.eps, target_bound) {
                    (Some(eps), _) => eps,
                    (None, Some(target)) => {
                        let probe = TailExperiment::with_free_eps(c.bits, 1.0, c.delta, c.trials, seed)?;
                        let pw = PreparedVector::new(&recipe.personalized()?);
                        let (w_l2, w_linf) = realized_w_norms(&pw, &probe);
                        interference_eps_for_bound(*target, w_l2, w_linf, x.l2(), x.linf(), probe.m())?
                    }
                    (None, None) => {
                        return Err(Error::input(format!(
                            "experiment {:?} needs eps or target_bound",
                            c.name
                        )))
                    }
                };
                let e = TailExperiment::with_free_eps(c.bits, eps, c.delta, c.trials, seed)?;
                check_interference(&e, &recipe, &x, task, runner)?
            }
        };
        Ok(report.named(&c.name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub schema_version: u32,
    pub base_seed: u64,
    #[serde(default)]
    pub experiments: Vec<ExperimentSpec>,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SuiteConfig = serde_json::from_str(&text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::input(format!(
                "unsupported suite schema version {}",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub base_seed: u64,
    pub reports: Vec<TailReport>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.reports
            .iter()
            .all(|r| matches!(r.status, Status::Pass | Status::LowPower))
    }

    pub fn any_precondition_failure(&self) -> bool {
        self.reports
            .iter()
            .any(|r| r.status == Status::PreconditionFailed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Runs every experiment in order. A precondition failure is recorded in
/// that experiment's report and does not stop the suite.
pub fn run_suite(cfg: &SuiteConfig, runner: &Runner) -> SuiteReport {
    let reports = cfg
        .experiments
        .iter()
        .map(|spec| {
            spec.run(cfg.base_seed, runner).unwrap_or_else(|e| {
                TailReport::precondition_failed(&spec.common().name, spec.kind(), spec.echo(cfg.base_seed), &e)
            })
        })
        .collect();
    SuiteReport {
        schema_version: SCHEMA_VERSION,
        base_seed: cfg.base_seed,
        reports,
    }
}

/// Loads a suite config, runs it, and writes the JSON report.
pub fn run_report(config: &Path, out: &Path, jobs: usize) -> Result<SuiteReport> {
    let cfg = SuiteConfig::load(config)?;
    let report = run_suite(&cfg, &Runner::new(jobs)?);
    report.write(out)?;
    Ok(report)
}

fn common(name: &str, bits: u32, eps: Option<f64>, delta: f64, trials: u64) -> Common {
    Common {
        name: name.to_string(),
        bits,
        eps,
        delta,
        trials,
        base_seed: None,
    }
}

/// The suite exercised by the acceptance tests.
///
/// The concentration vectors are a uniform 4096-token vector; the norm
/// experiment replicates it ten times so that `|x|_inf = 40960^{-1/2}` meets
/// the norm bound's `|x|_inf` ceiling (about 0.00509 at these parameters).
pub fn default_suite() -> SuiteConfig {
    let uniform = |prefix: &str, n: usize, c: usize| VectorRecipe::Uniform {
        prefix: prefix.to_string(),
        n,
        replicate: c,
    };
    SuiteConfig {
        schema_version: SCHEMA_VERSION,
        base_seed: 20_090_101,
        experiments: vec![
            ExperimentSpec::NormConcentration {
                common: common("norm_uniform_4096x10", 10, Some(0.5), 0.05, 100_000),
                x: uniform("w", 4096, 10),
            },
            ExperimentSpec::InnerConcentration {
                common: common("inner_disjoint_4096", 10, Some(0.5), 0.05, 100_000),
                x: uniform("a", 4096, 1),
                x2: uniform("b", 4096, 1),
            },
            ExperimentSpec::InnerConcentration {
                common: common("inner_negated_4096", 10, Some(0.5), 0.05, 100_000),
                x: uniform("a", 4096, 1),
                x2: VectorRecipe::Negate(Box::new(uniform("a", 4096, 1))),
            },
            ExperimentSpec::UnionBound {
                common: common("union_one_hot_8x4096", 11, Some(0.5), 0.1, 10_000),
                vectors: VectorSet::OneHotSet {
                    prefix: "e".into(),
                    n: 8,
                    replicate: 4096,
                },
            },
            ExperimentSpec::Interference {
                common: common("interference_50_tasks", 16, None, 0.1, 100_000),
                task: "user".into(),
                x: uniform("w", 1024, 1),
                others: OtherTasks {
                    count: 50,
                    tokens_per_task: 100,
                    task_prefix: "task".into(),
                    token_prefix: "w".into(),
                    sign_seed: 7,
                },
                target_bound: Some(0.1),
            },
            ExperimentSpec::BallsAndBins {
                common: common("balls_bins_8192", 8, None, 0.1, 10_000),
                x: uniform("w", 8192, 1),
            },
        ],
    }
}
