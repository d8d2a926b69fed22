//! Per-topic effectiveness measures.
//!
//! Every measure is computed from a [`TopicEval`], which resolves a ranked
//! list against one topic's judgments once. Grades of zero or below count
//! as nonrelevant and contribute no gain. Unjudged documents are treated
//! as nonrelevant, except by bpref (which skips them) and infAP (which
//! leaves them out of its judged-above counts while still counting their
//! rank positions). Sums always run in ascending rank order.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::trec_io::TopicJudgments;

/// Cutoff used when a measure name carries none ("full" evaluation).
pub const FULL_DEPTH: usize = 1000;
/// Default ERR cutoff.
pub const ERR_DEPTH: usize = 20;
/// Default smoothing constant for infAP.
pub const INFAP_EPSILON: f64 = 1e-5;
/// Floor applied to AP before taking logs for GMAP.
pub const GMAP_FLOOR: f64 = 1e-5;

/// A real-valued measure parameter with total equality, so specs can be
/// used as map keys.
#[derive(Debug, Clone, Copy)]
pub struct Param(pub f64);

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Param {}

impl Hash for Param {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl PartialOrd for Param {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Param {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    P,
    R,
    AP,
    #[serde(rename = "nDCG")]
    Ndcg,
    RR,
    RPrec,
    Bpref,
    ERR,
    RBP,
    InfAP,
}

/// How RBP turns a grade into gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum RbpGain {
    /// 1 for grade > 0, else 0.
    #[default]
    Binary,
    /// grade / max grade of the collection, clamped at 0.
    Graded,
}

/// One measure: a family, its cutoff and any family parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricSpec {
    Precision(usize),
    Recall(usize),
    AveragePrecision(usize),
    Ndcg(usize),
    ReciprocalRank(usize),
    RPrecision(usize),
    Bpref(usize),
    Err(usize),
    Rbp {
        p: Param,
        depth: usize,
        gain: RbpGain,
    },
    InfAp {
        depth: usize,
        epsilon: Param,
    },
}

impl MetricSpec {
    pub fn rbp(p: f64, depth: usize) -> Self {
        MetricSpec::Rbp {
            p: Param(p),
            depth,
            gain: RbpGain::Binary,
        }
    }

    pub fn inf_ap(depth: usize) -> Self {
        MetricSpec::InfAp {
            depth,
            epsilon: Param(INFAP_EPSILON),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            MetricSpec::Precision(_) => Family::P,
            MetricSpec::Recall(_) => Family::R,
            MetricSpec::AveragePrecision(_) => Family::AP,
            MetricSpec::Ndcg(_) => Family::Ndcg,
            MetricSpec::ReciprocalRank(_) => Family::RR,
            MetricSpec::RPrecision(_) => Family::RPrec,
            MetricSpec::Bpref(_) => Family::Bpref,
            MetricSpec::Err(_) => Family::ERR,
            MetricSpec::Rbp { .. } => Family::RBP,
            MetricSpec::InfAp { .. } => Family::InfAP,
        }
    }

    pub fn cutoff(&self) -> usize {
        match *self {
            MetricSpec::Precision(k)
            | MetricSpec::Recall(k)
            | MetricSpec::AveragePrecision(k)
            | MetricSpec::Ndcg(k)
            | MetricSpec::ReciprocalRank(k)
            | MetricSpec::RPrecision(k)
            | MetricSpec::Bpref(k)
            | MetricSpec::Err(k) => k,
            MetricSpec::Rbp { depth, .. } | MetricSpec::InfAp { depth, .. } => depth,
        }
    }

    /// The same measure at another cutoff.
    pub fn with_cutoff(&self, k: usize) -> Self {
        match *self {
            MetricSpec::Precision(_) => MetricSpec::Precision(k),
            MetricSpec::Recall(_) => MetricSpec::Recall(k),
            MetricSpec::AveragePrecision(_) => MetricSpec::AveragePrecision(k),
            MetricSpec::Ndcg(_) => MetricSpec::Ndcg(k),
            MetricSpec::ReciprocalRank(_) => MetricSpec::ReciprocalRank(k),
            MetricSpec::RPrecision(_) => MetricSpec::RPrecision(k),
            MetricSpec::Bpref(_) => MetricSpec::Bpref(k),
            MetricSpec::Err(_) => MetricSpec::Err(k),
            MetricSpec::Rbp { p, gain, .. } => MetricSpec::Rbp { p, depth: k, gain },
            MetricSpec::InfAp { epsilon, .. } => MetricSpec::InfAp { depth: k, epsilon },
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let optional_cut = |f: &mut fmt::Formatter<'_>, name: &str, k: usize| {
            if k == FULL_DEPTH {
                write!(f, "{name}")
            } else {
                write!(f, "{name}@{k}")
            }
        };
        match *self {
            MetricSpec::Precision(k) => write!(f, "P@{k}"),
            MetricSpec::Recall(k) => write!(f, "R@{k}"),
            MetricSpec::AveragePrecision(k) => write!(f, "AP@{k}"),
            MetricSpec::Ndcg(k) => write!(f, "nDCG@{k}"),
            MetricSpec::ReciprocalRank(k) => optional_cut(f, "RR", k),
            MetricSpec::RPrecision(k) => optional_cut(f, "R-Prec", k),
            MetricSpec::Bpref(k) => optional_cut(f, "bpref", k),
            MetricSpec::Err(k) => write!(f, "ERR@{k}"),
            MetricSpec::Rbp { p, depth, gain } => match gain {
                RbpGain::Binary => write!(f, "RBP({})@{depth}", p.0),
                RbpGain::Graded => write!(f, "RBP({},graded)@{depth}", p.0),
            },
            MetricSpec::InfAp { depth, epsilon } => {
                if epsilon.0 == INFAP_EPSILON {
                    write!(f, "infAP@{depth}")
                } else {
                    write!(f, "infAP({:e})@{depth}", epsilon.0)
                }
            }
        }
    }
}

fn parse_cutoff(raw: &str, s: &str) -> Result<usize> {
    if raw.eq_ignore_ascii_case("full") {
        return Ok(FULL_DEPTH);
    }
    match raw.parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(Error::InvalidMetric(s.to_string())),
    }
}

/// Splits `NAME(args)@k` into its name, optional argument text and cutoff text.
fn split_name(s: &str) -> Result<(&str, Option<&str>, Option<&str>)> {
    let bad = || Error::InvalidMetric(s.to_string());
    let (head, cut) = match s.rfind('@') {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    };
    let (name, args) = match head.find('(') {
        Some(i) => {
            let rest = head[i + 1..].strip_suffix(')').ok_or_else(bad)?;
            (&head[..i], Some(rest))
        }
        None => (head, None),
    };
    if name.is_empty() {
        return Err(bad());
    }
    Ok((name, args, cut))
}

impl FromStr for MetricSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidMetric(s.to_string());
        let (name, args, cut) = split_name(s)?;
        let lower = name.to_ascii_lowercase();
        let default_cut = if lower == "err" { ERR_DEPTH } else { FULL_DEPTH };
        let k = match cut {
            Some(c) => parse_cutoff(c, s)?,
            None => default_cut,
        };
        let no_args = |spec: MetricSpec| if args.is_some() { Err(bad()) } else { Ok(spec) };
        match lower.as_str() {
            "p" => no_args(MetricSpec::Precision(k)),
            "r" | "recall" => no_args(MetricSpec::Recall(k)),
            "ap" | "map" => no_args(MetricSpec::AveragePrecision(k)),
            "ndcg" => no_args(MetricSpec::Ndcg(k)),
            "rr" | "mrr" => no_args(MetricSpec::ReciprocalRank(k)),
            "r-prec" | "rprec" => no_args(MetricSpec::RPrecision(k)),
            "bpref" => no_args(MetricSpec::Bpref(k)),
            "err" => no_args(MetricSpec::Err(k)),
            "rbp" => {
                let args = args.ok_or_else(bad)?;
                let mut parts = args.split(',').map(str::trim);
                let p: f64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
                if !(p > 0.0 && p < 1.0) {
                    return Err(bad());
                }
                let gain = match parts.next() {
                    None | Some("binary") => RbpGain::Binary,
                    Some("graded") => RbpGain::Graded,
                    Some(_) => return Err(bad()),
                };
                if parts.next().is_some() {
                    return Err(bad());
                }
                Ok(MetricSpec::Rbp {
                    p: Param(p),
                    depth: k,
                    gain,
                })
            }
            "infap" => {
                let epsilon = match args {
                    None => INFAP_EPSILON,
                    Some(a) => a.trim().parse::<f64>().map_err(|_| bad())?,
                };
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(bad());
                }
                Ok(MetricSpec::InfAp {
                    depth: k,
                    epsilon: Param(epsilon),
                })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for MetricSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MetricSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The 23 per-topic measures of the topic-wise panel.
pub fn topic_wise_panel() -> Vec<MetricSpec> {
    let mut specs = Vec::with_capacity(23);
    for k in [10, 20, 100, 1000] {
        specs.push(MetricSpec::AveragePrecision(k));
    }
    for k in [10, 20, 100, 1000] {
        specs.push(MetricSpec::Ndcg(k));
    }
    for k in [10, 20, 100, 1000] {
        specs.push(MetricSpec::Precision(k));
    }
    for k in [10, 20, 100, 1000] {
        specs.push(MetricSpec::Recall(k));
    }
    specs.extend([
        MetricSpec::Bpref(FULL_DEPTH),
        MetricSpec::Err(ERR_DEPTH),
        MetricSpec::ReciprocalRank(FULL_DEPTH),
        MetricSpec::RPrecision(FULL_DEPTH),
        MetricSpec::rbp(0.5, FULL_DEPTH),
        MetricSpec::rbp(0.8, FULL_DEPTH),
        MetricSpec::rbp(0.95, FULL_DEPTH),
    ]);
    specs
}

/// A ranked list resolved against one topic's judgments.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicEval {
    /// Grade of the document at each rank, `None` when unjudged.
    grades: Vec<Option<i32>>,
    /// Positive judged grades in descending order.
    ideal: Vec<i32>,
    num_rel: usize,
    num_nonrel: usize,
    max_grade: Option<i32>,
}

impl TopicEval {
    pub fn new<'a, I>(ranked: I, judgments: &TopicJudgments, max_grade: Option<i32>) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let grades = ranked.into_iter().map(|d| judgments.grade(d)).collect();
        let mut ideal: Vec<i32> = judgments.grades().map(|(_, g)| g).filter(|&g| g > 0).collect();
        ideal.sort_unstable_by(|a, b| b.cmp(a));
        Self {
            grades,
            ideal,
            num_rel: judgments.num_rel(),
            num_nonrel: judgments.num_nonrel(),
            max_grade,
        }
    }

    pub fn num_rel(&self) -> usize {
        self.num_rel
    }

    pub fn num_nonrel(&self) -> usize {
        self.num_nonrel
    }

    pub fn max_grade(&self) -> Option<i32> {
        self.max_grade
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    fn top(&self, k: usize) -> &[Option<i32>] {
        &self.grades[..self.grades.len().min(k)]
    }

    fn is_rel(g: &Option<i32>) -> bool {
        g.is_some_and(|g| g > 0)
    }

    fn rel_in_top(&self, k: usize) -> usize {
        self.top(k).iter().filter(|g| Self::is_rel(g)).count()
    }
}

pub fn precision_at(te: &TopicEval, k: usize) -> f64 {
    te.rel_in_top(k) as f64 / k as f64
}

pub fn recall_at(te: &TopicEval, k: usize) -> f64 {
    if te.num_rel == 0 {
        return 0.0;
    }
    te.rel_in_top(k) as f64 / te.num_rel as f64
}

pub fn average_precision(te: &TopicEval, k: usize) -> f64 {
    if te.num_rel == 0 {
        return 0.0;
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, g) in te.top(k).iter().enumerate() {
        if TopicEval::is_rel(g) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    sum / te.num_rel as f64
}

/// Precision at rank R, considering only the first `k` retrieved documents.
pub fn r_precision(te: &TopicEval, k: usize) -> f64 {
    if te.num_rel == 0 {
        return 0.0;
    }
    let r = te.num_rel;
    te.top(k.min(r)).iter().filter(|g| TopicEval::is_rel(g)).count() as f64 / r as f64
}

pub fn reciprocal_rank(te: &TopicEval, k: usize) -> f64 {
    te.top(k)
        .iter()
        .position(TopicEval::is_rel)
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// bpref over the first `k` retrieved documents. Unjudged documents are
/// skipped entirely.
pub fn bpref(te: &TopicEval, k: usize) -> f64 {
    if te.num_rel == 0 {
        return 0.0;
    }
    let denom = te.num_rel.min(te.num_nonrel);
    let mut nonrel_above = 0usize;
    let mut sum = 0.0;
    for g in te.top(k).iter().flatten() {
        if *g > 0 {
            sum += if denom == 0 {
                1.0
            } else {
                1.0 - nonrel_above.min(denom) as f64 / denom as f64
            };
        } else {
            nonrel_above += 1;
        }
    }
    sum / te.num_rel as f64
}

fn discount(rank: usize) -> f64 {
    ((rank + 1) as f64).log2()
}

/// Linear-gain DCG of the first `k` documents.
pub fn dcg_at(te: &TopicEval, k: usize) -> f64 {
    te.top(k)
        .iter()
        .enumerate()
        .map(|(i, g)| g.unwrap_or(0).max(0) as f64 / discount(i + 1))
        .sum()
}

pub fn ndcg_at(te: &TopicEval, k: usize) -> f64 {
    let ideal: f64 = te
        .ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| g as f64 / discount(i + 1))
        .sum();
    if ideal == 0.0 {
        return 0.0;
    }
    dcg_at(te, k) / ideal
}

/// Expected reciprocal rank under the cascade model, with stopping
/// probability `(2^g - 1) / 2^g_max` at each rank.
pub fn err_at(te: &TopicEval, k: usize) -> Result<f64> {
    let g_max = te
        .max_grade
        .filter(|&g| g >= 1)
        .ok_or(Error::UngradedCollection)?;
    let scale = 2f64.powi(g_max);
    let mut continue_prob = 1.0;
    let mut score = 0.0;
    for (i, g) in te.top(k).iter().enumerate() {
        let stop = (2f64.powi(g.unwrap_or(0).max(0)) - 1.0) / scale;
        score += continue_prob * stop / (i + 1) as f64;
        continue_prob *= 1.0 - stop;
    }
    Ok(score)
}

pub fn rbp(te: &TopicEval, p: f64, depth: usize, gain: RbpGain) -> f64 {
    let g_max = te.max_grade.unwrap_or(0).max(1) as f64;
    let mut weight = 1.0;
    let mut sum = 0.0;
    for g in te.top(depth) {
        let g = g.unwrap_or(0).max(0);
        let gain = match gain {
            RbpGain::Binary => f64::from(u8::from(g > 0)),
            RbpGain::Graded => (g as f64 / g_max).min(1.0),
        };
        sum += gain * weight;
        weight *= p;
    }
    (1.0 - p) * sum
}

/// Inferred AP over the first `depth` documents.
pub fn inf_ap(te: &TopicEval, depth: usize, epsilon: f64) -> f64 {
    if te.num_rel == 0 {
        return 0.0;
    }
    let mut rel_above = 0usize;
    let mut nonrel_above = 0usize;
    let mut sum = 0.0;
    for (i, g) in te.top(depth).iter().enumerate() {
        let rank = i + 1;
        match g {
            Some(g) if *g > 0 => {
                let term = if rank == 1 {
                    1.0
                } else {
                    let k = rank as f64;
                    let judged = (rel_above + nonrel_above) as f64;
                    let r = rel_above as f64;
                    1.0 / k
                        + ((k - 1.0) / k)
                            * (judged / (k - 1.0))
                            * ((r + epsilon) / (judged + 2.0 * epsilon))
                };
                sum += term;
                rel_above += 1;
            }
            Some(_) => nonrel_above += 1,
            None => {}
        }
    }
    sum / te.num_rel as f64
}

/// Computes one measure on a topic.
pub fn evaluate(te: &TopicEval, spec: &MetricSpec) -> Result<f64> {
    Ok(match *spec {
        MetricSpec::Precision(k) => precision_at(te, k),
        MetricSpec::Recall(k) => recall_at(te, k),
        MetricSpec::AveragePrecision(k) => average_precision(te, k),
        MetricSpec::Ndcg(k) => ndcg_at(te, k),
        MetricSpec::ReciprocalRank(k) => reciprocal_rank(te, k),
        MetricSpec::RPrecision(k) => r_precision(te, k),
        MetricSpec::Bpref(k) => bpref(te, k),
        MetricSpec::Err(k) => err_at(te, k).map_err(|e| Error::Metric {
            spec: spec.to_string(),
            source: Box::new(e),
        })?,
        MetricSpec::Rbp { p, depth, gain } => rbp(te, p.0, depth, gain),
        MetricSpec::InfAp { depth, epsilon } => inf_ap(te, depth, epsilon.0),
    })
}

/// Computes every spec on a topic; values are aligned with `specs`.
pub fn evaluate_topic(te: &TopicEval, specs: &[MetricSpec]) -> Result<Vec<f64>> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no measures requested".into()));
    }
    specs.iter().map(|s| evaluate(te, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec_io::JudgmentSet;
    use crate::trec_io::Qrel;

    const EPS: f64 = 1e-12;

    /// Builds a topic from (doc, grade) judgments and a ranking.
    fn topic(judged: &[(&str, i32)], ranked: &[&str]) -> TopicEval {
        let js = JudgmentSet::from_qrels(judged.iter().map(|&(d, g)| Qrel {
            topic_id: "t".into(),
            doc_id: d.into(),
            grade: g,
        }));
        TopicEval::new(ranked.iter().copied(), js.topic("t").unwrap(), js.max_grade())
    }

    /// Ranking of length `n` with relevant documents at the given 1-based ranks,
    /// all other positions judged nonrelevant.
    fn binary(rel_ranks: &[usize], n: usize, extra_rel: usize) -> TopicEval {
        let names: Vec<String> = (1..=n).map(|i| format!("d{i}")).collect();
        let mut judged: Vec<(String, i32)> = names
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i32::from(rel_ranks.contains(&(i + 1)))))
            .collect();
        for i in 0..extra_rel {
            judged.push((format!("missing{i}"), 1));
        }
        let judged: Vec<(&str, i32)> = judged.iter().map(|(d, g)| (d.as_str(), *g)).collect();
        let ranked: Vec<&str> = names.iter().map(String::as_str).collect();
        topic(&judged, &ranked)
    }

    #[test]
    fn spec_names_round_trip() {
        for name in [
            "P@10", "R@100", "AP@1000", "nDCG@20", "RR", "RR@20", "R-Prec", "bpref", "bpref@30",
            "ERR@20", "RBP(0.95)@1000", "RBP(0.5,graded)@100", "infAP@30", "infAP(1e-6)@10",
        ] {
            let spec: MetricSpec = name.parse().unwrap();
            assert_eq!(spec.to_string(), name);
        }
    }

    #[test]
    fn spec_aliases() {
        let p = |s: &str| s.parse::<MetricSpec>().unwrap();
        assert_eq!(p("MAP"), MetricSpec::AveragePrecision(1000));
        assert_eq!(p("map@100"), MetricSpec::AveragePrecision(100));
        assert_eq!(p("nDCG"), MetricSpec::Ndcg(1000));
        assert_eq!(p("ERR"), MetricSpec::Err(20));
        assert_eq!(p("RBP(.8)"), MetricSpec::rbp(0.8, 1000));
        assert_eq!(p("P@full"), MetricSpec::Precision(1000));
    }

    #[test]
    fn spec_rejects_bad_names() {
        for name in ["P@0", "P@-1", "P@x", "RBP", "RBP(1.5)", "RBP(0)", "foo@10", "", "@10", "P(3)@10"]
        {
            assert!(name.parse::<MetricSpec>().is_err(), "{name}");
        }
    }

    #[test]
    fn panel_has_23_measures() {
        let panel = topic_wise_panel();
        assert_eq!(panel.len(), 23);
        let mut uniq = panel.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 23);
    }

    #[test]
    fn precision_examples() {
        assert!((precision_at(&binary(&[1, 4, 7], 10, 0), 10) - 0.3).abs() < EPS);
        assert_eq!(precision_at(&binary(&[], 0, 1), 10), 0.0);
        assert!((precision_at(&binary(&[1, 3], 5, 0), 10) - 0.2).abs() < EPS);
    }

    #[test]
    fn recall_examples() {
        assert!((recall_at(&binary(&[3, 50], 100, 2), 100) - 0.5).abs() < EPS);
        assert_eq!(recall_at(&binary(&[1, 2], 10, 0), 10), 1.0);
        assert!((recall_at(&binary(&[2, 150], 200, 1), 100) - 1.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn average_precision_examples() {
        let ap = average_precision(&binary(&[1, 3], 10, 0), 1000);
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < EPS);
        assert_eq!(average_precision(&binary(&[1, 2, 3], 10, 0), 1000), 1.0);
        assert_eq!(average_precision(&binary(&[15], 20, 0), 10), 0.0);
    }

    #[test]
    fn r_precision_examples() {
        assert!((r_precision(&binary(&[1, 3, 5, 8, 9], 10, 0), 1000) - 0.6).abs() < EPS);
        assert_eq!(r_precision(&binary(&[1, 2], 10, 0), 1000), 1.0);
        assert_eq!(r_precision(&binary(&[3, 4], 10, 0), 1000), 0.0);
    }

    #[test]
    fn reciprocal_rank_examples() {
        assert_eq!(reciprocal_rank(&binary(&[4, 6], 10, 0), 1000), 0.25);
        assert_eq!(reciprocal_rank(&binary(&[1], 10, 0), 1000), 1.0);
        assert_eq!(reciprocal_rank(&binary(&[25], 30, 0), 20), 0.0);
    }

    #[test]
    fn bpref_examples() {
        let te = topic(&[("a", 1), ("b", 0), ("c", 1)], &["a", "b", "c"]);
        assert!((bpref(&te, 1000) - 0.5).abs() < EPS);
        let te = topic(&[("a", 1), ("c", 1)], &["a", "c"]);
        assert_eq!(bpref(&te, 1000), 1.0);
        let te = topic(&[("a", 0), ("b", 0), ("c", 1)], &["a", "b", "c"]);
        assert_eq!(bpref(&te, 1000), 0.0);
    }

    #[test]
    fn bpref_ignores_unjudged() {
        let te = topic(&[("a", 1), ("b", 0), ("c", 1)], &["x", "a", "y", "b", "z", "c"]);
        assert!((bpref(&te, 1000) - 0.5).abs() < EPS);
    }

    #[test]
    fn ndcg_examples() {
        let te = topic(&[("dA", 2), ("dB", 1)], &["dB", "dA"]);
        let dcg = 1.0 + 2.0 / 3f64.log2();
        let idcg = 2.0 + 1.0 / 3f64.log2();
        assert!((dcg_at(&te, 2) - dcg).abs() < EPS);
        assert!((ndcg_at(&te, 2) - dcg / idcg).abs() < EPS);
        assert!((ndcg_at(&te, 2) - 0.85972).abs() < 1e-5);
        let te = topic(&[("dA", 2), ("dB", 1)], &["dA", "dB"]);
        assert_eq!(ndcg_at(&te, 2), 1.0);
        let te = topic(&[("dA", 2), ("x", 0), ("y", -2)], &["y", "x"]);
        assert_eq!(ndcg_at(&te, 10), 0.0);
    }

    #[test]
    fn err_examples() {
        let te = topic(&[("a", 0), ("b", 1)], &["a", "b"]);
        assert_eq!(err_at(&te, 20).unwrap(), 0.25);
        let te = topic(&[("a", 4)], &["a"]);
        assert_eq!(err_at(&te, 20).unwrap(), 0.9375);
        let te = topic(&[("a", 0), ("b", 1), ("c", 3)], &["a", "z"]);
        assert_eq!(err_at(&te, 20).unwrap(), 0.0);
        let te = topic(&[("a", 0)], &["a"]);
        assert!(matches!(err_at(&te, 20), Err(Error::UngradedCollection)));
        assert!(matches!(
            evaluate(&te, &MetricSpec::Err(20)),
            Err(Error::Metric { .. })
        ));
    }

    #[test]
    fn rbp_examples() {
        let te = binary(&[1, 2], 10, 0);
        assert_eq!(rbp(&te, 0.5, 1000, RbpGain::Binary), 0.75);
        assert_eq!(rbp(&binary(&[], 10, 1), 0.5, 1000, RbpGain::Binary), 0.0);
        let v = rbp(&binary(&[1], 10, 0), 0.8, 1000, RbpGain::Binary);
        assert!((v - 0.2).abs() < EPS);
    }

    #[test]
    fn rbp_graded_gain() {
        let te = topic(&[("a", 2), ("b", 4)], &["a", "b"]);
        let v = rbp(&te, 0.5, 10, RbpGain::Graded);
        assert!((v - 0.5 * (0.5 + 0.5)).abs() < EPS);
        assert_eq!(rbp(&te, 0.5, 10, RbpGain::Binary), 0.75);
    }

    #[test]
    fn inf_ap_examples() {
        assert_eq!(inf_ap(&binary(&[1], 5, 0), 1000, 1e-5), 1.0);
        let e = 1e-5;
        let expect = 0.5 * (1.0 + (0.5 + 0.5 * (1.0 + e) / (1.0 + 2.0 * e)));
        let v = inf_ap(&binary(&[1, 2], 2, 0), 1000, e);
        assert!((v - expect).abs() < EPS);
        assert!((v - 0.9999975).abs() < 1e-9);
        let te = topic(&[("c", 1)], &["x", "y", "c"]);
        assert!((inf_ap(&te, 1000, e) - 1.0 / 3.0).abs() < EPS);
    }

    #[test]
    fn evaluate_topic_dispatch() {
        let te = binary(&[1, 4, 7], 10, 0);
        assert_eq!(evaluate_topic(&te, &[MetricSpec::Precision(10)]).unwrap(), [0.3]);
        assert!(evaluate_topic(&te, &[]).is_err());
        let panel = topic_wise_panel();
        let a = evaluate_topic(&te, &panel).unwrap();
        let b = evaluate_topic(&te, &panel).unwrap();
        assert_eq!(a.len(), 23);
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
