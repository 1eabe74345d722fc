use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diversity::{ConcaveH, DiversityModel};
use crate::error::{Error, Result};
use crate::factor_graph::Labeling;
use crate::greedy::{combine_concat, combine_linear, greedy_diverse, random_baseline, GreedyOptions, SolutionList};

use super::metrics::{corpus_iou, oracle_best, Metric};
use super::synth::{synth_generate, SynthInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Divmbest,
    HammingSmooth,
    LabelCost,
    LabelTransition,
    Concat,
    Linear,
    Random,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Divmbest,
        Method::HammingSmooth,
        Method::LabelCost,
        Method::LabelTransition,
        Method::Concat,
        Method::Linear,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Divmbest => "divmbest",
            Method::HammingSmooth => "hamming_smooth",
            Method::LabelCost => "label_cost",
            Method::LabelTransition => "label_transition",
            Method::Concat => "concat",
            Method::Linear => "linear",
            Method::Random => "random",
        }
    }

    /// Everything except the random baseline.
    pub fn is_diverse(self) -> bool {
        self != Method::Random
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub height: usize,
    pub width: usize,
    /// Label counts, cycled over instances.
    pub labels: Vec<usize>,
    pub sigma: f64,
    pub validation: usize,
    pub test: usize,
    pub seed: u64,
    pub max_m: usize,
    pub lambda_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Per-model weights for the linear combination; the grid is its square.
    pub weight_grid: Vec<f64>,
    pub methods: Vec<Method>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            height: 8,
            width: 8,
            labels: vec![2, 3, 4, 5],
            sigma: 0.8,
            validation: 30,
            test: 30,
            seed: 0,
            max_m: 5,
            lambda_grid: vec![0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            gamma_grid: vec![0.05, 0.1, 0.2, 0.5, 1.0],
            weight_grid: vec![0.05, 0.1, 0.2, 0.5],
            methods: Method::ALL.to_vec(),
        }
    }
}

impl SuiteConfig {
    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.labels.is_empty() || self.labels.iter().any(|&l| l < 2) {
            return bad("labels must be nonempty and >= 2");
        }
        if self.validation == 0 || self.test == 0 || self.max_m == 0 {
            return bad("validation, test and max_m must be positive");
        }
        if self.lambda_grid.is_empty() || self.gamma_grid.is_empty() || self.weight_grid.is_empty() {
            return bad("parameter grids must be nonempty");
        }
        Ok(())
    }

    /// Odd seeds tune, even seeds test.
    pub fn instances(&self, validation: bool) -> Result<Vec<SynthInstance>> {
        let count = if validation { self.validation } else { self.test };
        (0..count)
            .into_par_iter()
            .map(|k| {
                let seed = self.seed + 2 * k as u64 + u64::from(validation);
                let labels = self.labels[k % self.labels.len()];
                synth_generate(self.height, self.width, labels, self.sigma, seed)
            })
            .collect()
    }
}

/// Hyperparameters of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Lambda { lambda: f64 },
    Smooth { lambda: f64, gamma: f64 },
    Weights { weights: Vec<f64>, gamma: f64 },
    Concat { parts: Vec<(Method, Params)> },
    None,
}

fn model_for(method: Method, params: &Params) -> Option<DiversityModel> {
    match (method, params) {
        (Method::Divmbest, Params::Lambda { lambda }) => Some(DiversityModel::divmbest(*lambda)),
        (Method::LabelCost, Params::Lambda { lambda }) => Some(DiversityModel::label_cost(ConcaveH::Count, *lambda)),
        (Method::LabelTransition, Params::Lambda { lambda }) => {
            Some(DiversityModel::label_transition(ConcaveH::Count, *lambda))
        }
        (Method::HammingSmooth, Params::Smooth { lambda, gamma }) => Some(DiversityModel::hamming_smooth(*gamma, *lambda)),
        _ => None,
    }
}

fn greedy_list(inst: &SynthInstance, method: Method, params: &Params, m: usize) -> Result<SolutionList> {
    let opts = GreedyOptions::default();
    match (method, params) {
        (Method::Linear, Params::Weights { weights, gamma }) => {
            let models = vec![
                (DiversityModel::divmbest(1.0), weights[0]),
                (DiversityModel::hamming_smooth(*gamma, 1.0), weights[1]),
            ];
            Ok(combine_linear(&inst.graph, &models, m, &opts)?.0)
        }
        (Method::Random, _) => Ok(random_baseline(&inst.graph, m, inst.seed ^ 0xD1CE)),
        _ => {
            let model = model_for(method, params)
                .ok_or_else(|| Error::InvalidConfig(format!("{method} cannot take {params:?}")))?;
            Ok(greedy_diverse(&inst.graph, &model, m, &opts)?.0)
        }
    }
}

/// The lists of sizes `1..=m` produced by `method` on `inst`.
pub fn method_lists(inst: &SynthInstance, method: Method, params: &Params, m: usize) -> Result<Vec<Vec<Labeling>>> {
    if let (Method::Concat, Params::Concat { parts }) = (method, params) {
        let lists = parts
            .iter()
            .map(|(meth, p)| greedy_list(inst, *meth, p, m))
            .collect::<Result<Vec<_>>>()?;
        let reference = model_for(parts[0].0, &parts[0].1)
            .ok_or_else(|| Error::InvalidConfig("concat reference must be a single model".into()))?;
        return (1..=m)
            .map(|k| Ok(combine_concat(&inst.graph, &lists, k, &reference)?.labels()))
            .collect();
    }
    let all = greedy_list(inst, method, params, m)?.labels();
    Ok((1..=m).map(|k| all[..k].to_vec()).collect())
}

/// Per-instance oracle pixel accuracy of the lists of sizes `1..=m`, plus the
/// picked items.
fn evaluate(inst: &SynthInstance, lists: &[Vec<Labeling>]) -> Result<Vec<(f64, Labeling)>> {
    lists
        .iter()
        .map(|list| {
            let (i, acc) = oracle_best(list, &inst.ground_truth, Metric::PixelAccuracy, inst.num_labels())?;
            Ok((acc, list[i].clone()))
        })
        .collect()
}

fn run_split(
    instances: &[SynthInstance],
    method: Method,
    params: &Params,
    m: usize,
) -> Result<Vec<Vec<(f64, Labeling)>>> {
    instances
        .par_iter()
        .map(|inst| evaluate(inst, &method_lists(inst, method, params, m)?))
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if c == 0 {
        0.0
    } else {
        s / c as f64
    }
}

/// Mean oracle accuracy at the largest list size.
fn validation_score(rows: &[Vec<(f64, Labeling)>]) -> f64 {
    mean(rows.iter().map(|r| r.last().expect("max_m >= 1").0))
}

fn tune(cfg: &SuiteConfig, val: &[SynthInstance], method: Method, cells: Vec<Params>) -> Result<(Params, f64)> {
    let mut best: Option<(Params, f64)> = None;
    for params in cells {
        let score = validation_score(&run_split(val, method, &params, cfg.max_m)?);
        if best.as_ref().is_none_or(|b| score > b.1) {
            best = Some((params, score));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty grid".into()))
}

fn grid(cfg: &SuiteConfig, method: Method, tuned: &[Selection]) -> Result<Vec<Params>> {
    let lambdas = || cfg.lambda_grid.iter().map(|&lambda| Params::Lambda { lambda }).collect();
    let find = |m: Method| {
        tuned
            .iter()
            .find(|s| s.method == m)
            .map(|s| s.params.clone())
            .ok_or_else(|| Error::InvalidConfig(format!("{method} needs {m} to be tuned first")))
    };
    Ok(match method {
        Method::Divmbest | Method::LabelCost | Method::LabelTransition => lambdas(),
        Method::HammingSmooth => cfg
            .gamma_grid
            .iter()
            .flat_map(|&gamma| cfg.lambda_grid.iter().map(move |&lambda| Params::Smooth { lambda, gamma }))
            .collect(),
        Method::Linear => {
            let gamma = match find(Method::HammingSmooth)? {
                Params::Smooth { gamma, .. } => gamma,
                _ => unreachable!("smooth params"),
            };
            cfg.weight_grid
                .iter()
                .flat_map(|&a| cfg.weight_grid.iter().map(move |&b| Params::Weights { weights: vec![a, b], gamma }))
                .collect()
        }
        Method::Concat => {
            let parts = [Method::Divmbest, Method::HammingSmooth, Method::LabelCost]
                .into_iter()
                .map(|m| Ok((m, find(m)?)))
                .collect::<Result<Vec<_>>>()?;
            vec![Params::Concat { parts }]
        }
        Method::Random => vec![Params::None],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: Method,
    pub params: Params,
    pub validation_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub method: Method,
    pub metric: String,
    /// Entry `i` is for lists of size `i + 1`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: SuiteConfig,
    pub selections: Vec<Selection>,
    pub curves: Vec<Curve>,
}

pub const ORACLE_ACCURACY: &str = "oracle_pixel_accuracy";
pub const ORACLE_CORPUS_IOU: &str = "oracle_corpus_iou";

impl EvalReport {
    pub fn curve(&self, method: Method, metric: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.method == method && c.metric == metric)
    }

    /// Rows `method,M,metric,value`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidConfig(format!("csv: {e}"));
        w.write_record(["method", "M", "metric", "value"]).map_err(io)?;
        for c in &self.curves {
            for (i, v) in c.values.iter().enumerate() {
                w.write_record([c.method.name(), &(i + 1).to_string(), &c.metric, &v.to_string()])
                    .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Tunes every method on the validation split by mean oracle accuracy at
/// `max_m`, then reports oracle curves on the test split.
pub fn run_benchmark(cfg: &SuiteConfig) -> Result<EvalReport> {
    cfg.check()?;
    let val = cfg.instances(true)?;
    let test = cfg.instances(false)?;
    let mut order: Vec<Method> = Method::ALL.into_iter().filter(|m| cfg.methods.contains(m)).collect();
    let needs = |m: Method| match m {
        Method::Concat => vec![Method::Divmbest, Method::HammingSmooth, Method::LabelCost],
        Method::Linear => vec![Method::HammingSmooth],
        _ => vec![],
    };
    for m in order.clone() {
        for dep in needs(m) {
            if !order.contains(&dep) {
                order.push(dep);
            }
        }
    }
    order.sort_by_key(|m| Method::ALL.iter().position(|x| x == m));

    let mut selections: Vec<Selection> = Vec::new();
    for &method in &order {
        let cells = grid(cfg, method, &selections)?;
        let (params, validation_score) = tune(cfg, &val, method, cells)?;
        selections.push(Selection { method, params, validation_score });
    }

    let max_labels = cfg.labels.iter().copied().max().expect("checked nonempty");
    let mut curves = Vec::new();
    for sel in selections.iter().filter(|s| cfg.methods.contains(&s.method)) {
        let rows = run_split(&test, sel.method, &sel.params, cfg.max_m)?;
        let acc = (0..cfg.max_m).map(|k| mean(rows.iter().map(|r| r[k].0))).collect();
        let iou = (0..cfg.max_m)
            .map(|k| {
                let pairs: Vec<(Labeling, Labeling)> = rows
                    .iter()
                    .zip(&test)
                    .map(|(r, inst)| (r[k].1.clone(), inst.ground_truth.clone()))
                    .collect();
                corpus_iou(&pairs, max_labels)
            })
            .collect::<Result<Vec<_>>>()?;
        curves.push(Curve { method: sel.method, metric: ORACLE_ACCURACY.into(), values: acc });
        curves.push(Curve { method: sel.method, metric: ORACLE_CORPUS_IOU.into(), values: iou });
    }
    selections.retain(|s| cfg.methods.contains(&s.method));
    Ok(EvalReport { config: cfg.clone(), selections, curves })
}

/// A JSON summary of an instance for command-line output.
pub fn instance_summary(inst: &SynthInstance) -> serde_json::Value {
    json!({
        "height": inst.height,
        "width": inst.width,
        "L": inst.num_labels(),
        "sigma": inst.sigma,
        "seed": inst.seed,
    })
}
