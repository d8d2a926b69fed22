//! Exhaustive predictor-subset search over collection splits.
//!
//! Models are fitted on the concatenated rows of the training
//! collections, the subset with the best Kendall's tau on the development
//! collection is kept, and that same model is scored on each test
//! collection. Ties on dev tau are broken by dev R², then by the sorted
//! predictor names (smallest first), so the outcome does not depend on the
//! order subsets are enumerated in.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{fit_columns, score_fit, FitScore, LinearModel};
use crate::datasets::{
    self, build_system_wise, build_topic_wise, clean, Measure, RowKey, ScoreTable,
    SystemWiseOptions, TableKind,
};
use crate::diagnostics::{Diagnosed, Warning};
use crate::error::{Error, Result};
use crate::metrics::{MetricSpec, FULL_DEPTH};
use crate::trec_io::{pool_judgments, truncate, JudgmentSet, RunSet};

/// Collections used for training, model selection and testing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionSplit {
    pub train: Vec<String>,
    pub dev: String,
    pub test: Vec<String>,
}

impl Default for CollectionSplit {
    fn default() -> Self {
        let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Self {
            train: ids(&["WT2000", "WT2001", "RT2004", "WT2010", "WT2011"]),
            dev: "WT2012".into(),
            test: ids(&["WT2013", "WT2014"]),
        }
    }
}

impl CollectionSplit {
    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() {
            return Err(Error::InvalidSplit("no training collection".into()));
        }
        let mut seen = HashSet::new();
        for id in self.collections() {
            if !seen.insert(id) {
                return Err(Error::InvalidSplit(format!("{id} appears twice")));
            }
        }
        Ok(())
    }

    /// Every collection in the split: train, then dev, then test.
    pub fn collections(&self) -> impl Iterator<Item = &str> {
        self.train
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(self.dev.as_str()))
            .chain(self.test.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub target: Measure,
    /// Evaluation depth of the predictors, for low-cost experiments.
    pub depth: Option<usize>,
    pub chosen_predictors: Vec<Measure>,
    pub model: LinearModel,
    pub dev_collection: String,
    pub dev_score: FitScore,
    pub test_scores: BTreeMap<String, FitScore>,
}

/// Options for turning runs and judgments into a cleaned system-wise table.
#[derive(Debug, Clone, Copy)]
pub struct TableOptions {
    pub drop_zero_rows: bool,
    pub strict_coverage: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            drop_zero_rows: true,
            strict_coverage: false,
        }
    }
}

/// Topic-wise scoring, per-system aggregation and cleaning in one step.
pub fn system_wise_table(
    rs: &RunSet,
    js: &JudgmentSet,
    measures: &[Measure],
    collection_id: &str,
    opts: TableOptions,
) -> Result<Diagnosed<ScoreTable>> {
    let (tw, mut warnings) =
        build_topic_wise(rs, js, &datasets::base_metrics(measures), collection_id)?.into_parts();
    let (sw, w) = build_system_wise(
        &tw,
        measures,
        SystemWiseOptions {
            strict_coverage: opts.strict_coverage,
        },
    )?
    .into_parts();
    warnings.extend(w);
    let (cleaned, _) = clean(&sw, opts.drop_zero_rows)?;
    Ok(Diagnosed::new(cleaned, warnings))
}

/// Dense columns of one collection: target first, then candidates.
struct Dense {
    target: Vec<f64>,
    candidates: Vec<Vec<f64>>,
}

impl Dense {
    fn from_table(table: &ScoreTable, target: &Measure, candidates: &[Measure]) -> Result<Self> {
        let mut wanted = vec![*target];
        wanted.extend_from_slice(candidates);
        let mut cols = table.complete_columns(&wanted).map_err(|e| match e {
            Error::MissingColumn(c) => {
                Error::MissingColumn(format!("{c} in collection {}", table.collection_id()))
            }
            e => e,
        })?;
        let target = cols.remove(0);
        Ok(Self {
            target,
            candidates: cols,
        })
    }

    fn concat(parts: &[Dense]) -> Self {
        let k = parts.first().map_or(0, |p| p.candidates.len());
        let mut out = Dense {
            target: Vec::new(),
            candidates: vec![Vec::new(); k],
        };
        for p in parts {
            out.target.extend_from_slice(&p.target);
            for (o, c) in out.candidates.iter_mut().zip(&p.candidates) {
                o.extend_from_slice(c);
            }
        }
        out
    }

    fn select(&self, subset: &[usize]) -> Vec<Vec<f64>> {
        subset.iter().map(|&i| self.candidates[i].clone()).collect()
    }
}

struct Scored {
    subset: Vec<usize>,
    names: Vec<String>,
    model: LinearModel,
    dev: FitScore,
}

fn better(a: &Scored, b: &Scored) -> Ordering {
    a.dev
        .tau
        .total_cmp(&b.dev.tau)
        .then(a.dev.r_squared.total_cmp(&b.dev.r_squared))
        .then_with(|| b.names.cmp(&a.names))
}

fn table_for<'a>(tables: &'a BTreeMap<String, ScoreTable>, id: &str) -> Result<&'a ScoreTable> {
    tables
        .get(id)
        .ok_or_else(|| Error::InvalidSplit(format!("no table for collection {id}")))
}

/// Fits every subset, keeps the best on dev and scores it on test.
fn search(
    tables: &BTreeMap<String, ScoreTable>,
    split: &CollectionSplit,
    target: &Measure,
    candidates: &[Measure],
    subsets: Vec<Vec<usize>>,
    depth: Option<usize>,
) -> Result<SearchResult> {
    split.validate()?;
    if candidates.contains(target) {
        return Err(Error::InvalidArgument(format!(
            "target {target} is also a candidate predictor"
        )));
    }
    let dense = |id: &str| Dense::from_table(table_for(tables, id)?, target, candidates);
    let train: Vec<Dense> = split.train.iter().map(|id| dense(id)).collect::<Result<_>>()?;
    let train = Dense::concat(&train);
    let dev = dense(&split.dev)?;
    let tests: Vec<(String, Dense)> = split
        .test
        .iter()
        .map(|id| Ok((id.clone(), dense(id)?)))
        .collect::<Result<_>>()?;
    if dev.target.len() < 2 || dev.target.iter().all(|&v| v == dev.target[0]) {
        return Err(Error::ConstantInput("development target"));
    }

    let fitted: Vec<Option<Scored>> = subsets
        .par_iter()
        .map(|subset| {
            let preds: Vec<Measure> = subset.iter().map(|&i| candidates[i]).collect();
            let model = fit_columns(*target, &preds, &train.select(subset), &train.target)?;
            let y_dev = model.predict_columns(&dev.select(subset))?;
            // A subset whose dev predictions are all tied has no defined tau.
            let Ok(dev_score) = score_fit(&dev.target, &y_dev) else {
                return Ok(None);
            };
            let mut names: Vec<String> = preds.iter().map(ToString::to_string).collect();
            names.sort();
            Ok(Some(Scored {
                subset: subset.clone(),
                names,
                model,
                dev: dev_score,
            }))
        })
        .collect::<Result<_>>()?;
    let best = fitted
        .into_iter()
        .flatten()
        .max_by(better)
        .ok_or_else(|| Error::InvalidArgument("no subset gave a defined dev score".into()))?;

    let mut test_scores = BTreeMap::new();
    for (id, data) in &tests {
        let y = best.model.predict_columns(&data.select(&best.subset))?;
        test_scores.insert(id.clone(), score_fit(&data.target, &y)?);
    }
    Ok(SearchResult {
        target: *target,
        depth,
        chosen_predictors: best.model.predictors.clone(),
        model: best.model,
        dev_collection: split.dev.clone(),
        dev_score: best.dev,
        test_scores,
    })
}

/// Tries every size-`n` subset of `candidates` as predictors of `target`.
pub fn best_subset_search(
    sw_tables: &BTreeMap<String, ScoreTable>,
    split: &CollectionSplit,
    target: &Measure,
    n: usize,
    candidates: &[Measure],
) -> Result<SearchResult> {
    if n == 0 || n > candidates.len() {
        return Err(Error::InvalidArgument(format!(
            "subset size {n} with {} candidates",
            candidates.len()
        )));
    }
    let subsets = (0..candidates.len()).combinations(n).collect();
    search(sw_tables, split, target, candidates, subsets, None)
}

/// All non-empty subsets of `0..k`, smallest first.
fn powerset(k: usize) -> Vec<Vec<usize>> {
    (1..=k).flat_map(|n| (0..k).combinations(n)).collect()
}

/// Settings of the low-cost to high-cost prediction experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthConfig {
    pub depths: Vec<usize>,
    pub high_cost: Vec<Measure>,
    /// Measure templates evaluated at each depth (their own cutoff is replaced).
    pub low_cost: Vec<MetricSpec>,
    /// Restrict judgments to the depth-D pool as well as truncating runs.
    pub pooled_qrels: bool,
    #[serde(default = "default_true")]
    pub drop_zero_rows: bool,
    #[serde(default)]
    pub strict_coverage: bool,
}

fn default_true() -> bool {
    true
}

impl Default for DepthConfig {
    fn default() -> Self {
        let m = |s: MetricSpec| Measure::mean(s);
        Self {
            depths: vec![10, 20, 30, 40, 50],
            high_cost: vec![
                m(MetricSpec::Precision(1000)),
                m(MetricSpec::Precision(100)),
                m(MetricSpec::AveragePrecision(1000)),
                m(MetricSpec::AveragePrecision(100)),
                m(MetricSpec::Ndcg(1000)),
                m(MetricSpec::Ndcg(100)),
                m(MetricSpec::rbp(0.95, 1000)),
                m(MetricSpec::rbp(0.95, 100)),
            ],
            low_cost: vec![
                MetricSpec::Precision(FULL_DEPTH),
                MetricSpec::Bpref(FULL_DEPTH),
                MetricSpec::Err(FULL_DEPTH),
                MetricSpec::inf_ap(FULL_DEPTH),
                MetricSpec::AveragePrecision(FULL_DEPTH),
                MetricSpec::Ndcg(FULL_DEPTH),
                MetricSpec::rbp(0.95, FULL_DEPTH),
            ],
            pooled_qrels: true,
            drop_zero_rows: true,
            strict_coverage: false,
        }
    }
}

impl DepthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depths.is_empty() || self.depths.contains(&0) {
            return Err(Error::InvalidArgument("depths must be positive".into()));
        }
        if !self.depths.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("depths must be strictly increasing".into()));
        }
        if self.high_cost.is_empty() {
            return Err(Error::InvalidArgument("no high-cost measure".into()));
        }
        if self.low_cost.is_empty() {
            return Err(Error::InvalidArgument("no low-cost measure".into()));
        }
        Ok(())
    }

    pub fn low_cost_at(&self, depth: usize) -> Vec<Measure> {
        self.low_cost
            .iter()
            .map(|s| Measure::mean(s.with_cutoff(depth)))
            .collect()
    }

    fn table_options(&self) -> TableOptions {
        TableOptions {
            drop_zero_rows: self.drop_zero_rows,
            strict_coverage: self.strict_coverage,
        }
    }
}

/// Joins two system-wise tables on system, keeping systems present in both.
fn join_systems(left: &ScoreTable, right: &ScoreTable) -> Result<ScoreTable> {
    let right_rows: BTreeMap<&RowKey, usize> =
        right.row_keys().iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut columns = left.columns().to_vec();
    let extra: Vec<usize> = (0..right.n_cols())
        .filter(|&j| !columns.contains(&right.columns()[j]))
        .collect();
    columns.extend(extra.iter().map(|&j| right.columns()[j]));
    let mut keys = Vec::new();
    let mut values = Vec::new();
    for (i, key) in left.row_keys().iter().enumerate() {
        if let Some(&r) = right_rows.get(key) {
            keys.push(key.clone());
            values.extend_from_slice(left.row(i));
            values.extend(extra.iter().map(|&j| right.get(r, j)));
        }
    }
    ScoreTable::new(TableKind::SystemWise, left.collection_id(), keys, columns, values)
}

/// Per-depth system-wise tables: low-cost measures at depth D (truncated
/// runs, and pooled judgments if configured) joined with high-cost
/// measures from the full runs and judgments. Outer key is the depth,
/// inner key the collection.
pub fn lowcost_tables(
    runs: &BTreeMap<String, RunSet>,
    qrels: &BTreeMap<String, JudgmentSet>,
    collections: &[&str],
    cfg: &DepthConfig,
) -> Result<Diagnosed<BTreeMap<usize, BTreeMap<String, ScoreTable>>>> {
    cfg.validate()?;
    let opts = cfg.table_options();
    let mut warnings: Vec<Warning> = Vec::new();
    let mut out: BTreeMap<usize, BTreeMap<String, ScoreTable>> = BTreeMap::new();
    for &id in collections {
        let rs = runs
            .get(id)
            .ok_or_else(|| Error::InvalidSplit(format!("no runs for collection {id}")))?;
        let js = qrels
            .get(id)
            .ok_or_else(|| Error::InvalidSplit(format!("no judgments for collection {id}")))?;
        let (high, w) = system_wise_table(
            rs,
            js,
            &cfg.high_cost,
            id,
            TableOptions {
                drop_zero_rows: false,
                ..opts
            },
        )?
        .into_parts();
        warnings.extend(w);
        for &depth in &cfg.depths {
            let cut = truncate(rs, depth)?;
            let judged = if cfg.pooled_qrels {
                pool_judgments(rs, js, depth)?
            } else {
                js.clone()
            };
            let (low, w) = system_wise_table(
                &cut,
                &judged,
                &cfg.low_cost_at(depth),
                id,
                TableOptions {
                    drop_zero_rows: false,
                    ..opts
                },
            )?
            .into_parts();
            warnings.extend(w);
            let (joined, _) = clean(&join_systems(&low, &high)?, opts.drop_zero_rows)?;
            out.entry(depth).or_default().insert(id.to_string(), joined);
        }
    }
    Ok(Diagnosed::new(out, warnings))
}

#[derive(Debug, Clone)]
pub struct LowCostRun {
    pub results: Vec<SearchResult>,
    pub tables: BTreeMap<usize, BTreeMap<String, ScoreTable>>,
}

/// For each depth and high-cost target, searches every non-empty subset of
/// the low-cost measures at that depth.
pub fn lowcost_experiment(
    runs: &BTreeMap<String, RunSet>,
    qrels: &BTreeMap<String, JudgmentSet>,
    split: &CollectionSplit,
    cfg: &DepthConfig,
) -> Result<Diagnosed<LowCostRun>> {
    split.validate()?;
    let collections: Vec<&str> = split.collections().collect();
    let (tables, warnings) = lowcost_tables(runs, qrels, &collections, cfg)?.into_parts();
    let mut results = Vec::new();
    for (&depth, by_collection) in &tables {
        let low = cfg.low_cost_at(depth);
        for target in &cfg.high_cost {
            // A low-cost measure can coincide with a target (e.g. P@100 at D=100).
            let candidates: Vec<Measure> = low.iter().filter(|m| *m != target).copied().collect();
            let subsets = powerset(candidates.len());
            results.push(search(
                by_collection,
                split,
                target,
                &candidates,
                subsets,
                Some(depth),
            )?);
        }
    }
    Ok(Diagnosed::new(LowCostRun { results, tables }, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidArgument(format!("unknown format `{s}`"))),
        }
    }
}

/// Kendall's tau at or above this value is emphasized in markdown reports.
pub const TAU_EMPHASIS: f64 = 0.9;

fn test_collections(results: &[SearchResult]) -> Vec<String> {
    let set: BTreeSet<&String> = results.iter().flat_map(|r| r.test_scores.keys()).collect();
    set.into_iter().cloned().collect()
}

pub fn report(results: &[SearchResult], format: ReportFormat) -> Result<String> {
    if results.is_empty() {
        return Err(Error::InvalidArgument("no results to report".into()));
    }
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(results)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => Ok(results_csv(results)),
        ReportFormat::Markdown => Ok(results_markdown(results)),
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).join(";")
}

// Full-precision floats so the CSV round-trips exactly.
fn results_csv(results: &[SearchResult]) -> String {
    let tests = test_collections(results);
    let mut out = String::from(
        "target,depth,n,predictors,coefficients,intercept,n_train,collinear,\
         dev_collection,dev_tau,dev_r2,dev_n",
    );
    for t in &tests {
        let _ = write!(out, ",{t}:tau,{t}:r2,{t}:n");
    }
    out.push('\n');
    for r in results {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.target,
            r.depth.map_or_else(String::new, |d| d.to_string()),
            r.chosen_predictors.len(),
            join(&r.chosen_predictors),
            join(&r.model.coefficients),
            r.model.intercept,
            r.model.n_train,
            r.model.collinear,
            r.dev_collection,
            r.dev_score.tau,
            r.dev_score.r_squared,
            r.dev_score.n,
        );
        for t in &tests {
            match r.test_scores.get(t) {
                Some(s) => {
                    let _ = write!(out, ",{},{},{}", s.tau, s.r_squared, s.n);
                }
                None => out.push_str(",,,"),
            }
        }
        out.push('\n');
    }
    out
}

/// Reads back the CSV produced by [`report`].
pub fn parse_results_csv(text: &str) -> Result<Vec<SearchResult>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("empty results file".into()))?
        .split(',')
        .collect();
    const FIXED: usize = 12;
    if header.len() < FIXED || !(header.len() - FIXED).is_multiple_of(3) || header[0] != "target" {
        return Err(Error::InvalidTable("unrecognized results header".into()));
    }
    let tests: Vec<&str> = header[FIXED..]
        .chunks(3)
        .map(|c| c[0].trim_end_matches(":tau"))
        .collect();
    let bad = |what: &str| Error::InvalidTable(format!("bad {what} in results file"));
    let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
    let count = |s: &str, what: &str| s.parse::<usize>().map_err(|_| bad(what));
    let mut out = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(bad("row length"));
        }
        let target: Measure = f[0].parse()?;
        let predictors: Vec<Measure> =
            split_list(f[3]).into_iter().map(str::parse).collect::<Result<_>>()?;
        let coefficients: Vec<f64> = split_list(f[4])
            .into_iter()
            .map(|c| num(c, "coefficient"))
            .collect::<Result<_>>()?;
        let mut test_scores = BTreeMap::new();
        for (i, t) in tests.iter().enumerate() {
            let c = &f[FIXED + 3 * i..FIXED + 3 * i + 3];
            if c[0].is_empty() {
                continue;
            }
            test_scores.insert(
                t.to_string(),
                FitScore {
                    tau: num(c[0], "tau")?,
                    r_squared: num(c[1], "r2")?,
                    n: count(c[2], "n")?,
                },
            );
        }
        out.push(SearchResult {
            target,
            depth: if f[1].is_empty() {
                None
            } else {
                Some(count(f[1], "depth")?)
            },
            model: LinearModel {
                target,
                predictors: predictors.clone(),
                coefficients,
                intercept: num(f[5], "intercept")?,
                n_train: count(f[6], "n_train")?,
                collinear: f[7].parse().map_err(|_| bad("collinear"))?,
            },
            chosen_predictors: predictors,
            dev_collection: f[8].to_string(),
            dev_score: FitScore {
                tau: num(f[9], "dev tau")?,
                r_squared: num(f[10], "dev r2")?,
                n: count(f[11], "dev n")?,
            },
            test_scores,
        });
    }
    Ok(out)
}

fn split_list(s: &str) -> Vec<&str> {
    if s.is_empty() {
        Vec::new()
    } else {
        s.split(';').collect()
    }
}

fn tau_cell(tau: f64) -> String {
    if tau >= TAU_EMPHASIS {
        format!("**{tau:.3}**")
    } else {
        format!("{tau:.3}")
    }
}

fn results_markdown(results: &[SearchResult]) -> String {
    let tests = test_collections(results);
    let dev: BTreeSet<&str> = results.iter().map(|r| r.dev_collection.as_str()).collect();
    let dev_label = dev.into_iter().join("/");
    let with_depth = results.iter().any(|r| r.depth.is_some());
    let mut out = String::from("| Target |");
    if with_depth {
        out.push_str(" Depth |");
    }
    let _ = write!(
        out,
        " N | Predictors | Coefficients | Intercept | {dev_label} τ | {dev_label} R² |"
    );
    for t in &tests {
        let _ = write!(out, " {t} τ | {t} R² |");
    }
    out.push('\n');
    let ncols = 6 + usize::from(with_depth) + 2 * tests.len();
    out.push('|');
    out.push_str(&"---|".repeat(ncols));
    out.push('\n');
    for r in results {
        let _ = write!(out, "| {} |", r.target);
        if with_depth {
            let _ = write!(out, " {} |", r.depth.map_or_else(String::new, |d| d.to_string()));
        }
        let coefs = r.model.coefficients.iter().map(|c| format!("{c:.3}")).join(", ");
        let _ = write!(
            out,
            " {} | {} | {} | {:.3} | {} | {:.3} |",
            r.chosen_predictors.len(),
            r.chosen_predictors.iter().join(", "),
            coefs,
            r.model.intercept,
            tau_cell(r.dev_score.tau),
            r.dev_score.r_squared
        );
        for t in &tests {
            match r.test_scores.get(t) {
                Some(s) => {
                    let _ = write!(out, " {} | {:.3} |", tau_cell(s.tau), s.r_squared);
                }
                None => out.push_str("  |  |"),
            }
        }
        out.push('\n');
    }
    out
}
