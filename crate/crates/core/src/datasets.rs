//! Topic-wise and system-wise score tables.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diagnostics::{Diagnosed, Warning, WarningKind};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricSpec, TopicEval, ERR_DEPTH, FULL_DEPTH, GMAP_FLOOR};
use crate::trec_io::{JudgmentSet, RunSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aggregation {
    Mean,
    /// Geometric mean with values floored at [`GMAP_FLOOR`]; AP only.
    GeometricMean,
}

/// A table column: a per-topic measure and how it is aggregated over
/// topics. Topic-wise tables always use [`Aggregation::Mean`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Measure {
    pub metric: MetricSpec,
    pub aggregation: Aggregation,
}

impl Measure {
    pub fn mean(metric: MetricSpec) -> Self {
        Self {
            metric,
            aggregation: Aggregation::Mean,
        }
    }

    pub fn geometric(metric: MetricSpec) -> Result<Self> {
        if !matches!(metric, MetricSpec::AveragePrecision(_)) {
            return Err(Error::InvalidMetric(format!(
                "geometric mean of {metric} (only AP supports it)"
            )));
        }
        Ok(Self {
            metric,
            aggregation: Aggregation::GeometricMean,
        })
    }

    pub fn gmap(k: usize) -> Self {
        Self {
            metric: MetricSpec::AveragePrecision(k),
            aggregation: Aggregation::GeometricMean,
        }
    }
}

impl From<MetricSpec> for Measure {
    fn from(metric: MetricSpec) -> Self {
        Measure::mean(metric)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.aggregation {
            Aggregation::Mean => write!(f, "{}", self.metric),
            Aggregation::GeometricMean if self.metric.cutoff() == FULL_DEPTH => write!(f, "GMAP"),
            Aggregation::GeometricMean => write!(f, "GMAP@{}", self.metric.cutoff()),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, cut) = match s.split_once('@') {
            Some((h, c)) => (h, Some(c)),
            None => (s, None),
        };
        if head.eq_ignore_ascii_case("gmap") {
            let ap = match cut {
                Some(c) => format!("AP@{c}"),
                None => "AP".to_string(),
            };
            let metric: MetricSpec = ap.parse().map_err(|_| Error::InvalidMetric(s.into()))?;
            return Measure::geometric(metric);
        }
        s.parse().map(Measure::mean)
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated measure list. `tw-panel` and `sw-panel`
/// expand to the default panels.
pub fn parse_measure_list(s: &str) -> Result<Vec<Measure>> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        match item {
            "tw-panel" => out.extend(metrics::topic_wise_panel().into_iter().map(Measure::mean)),
            "sw-panel" => out.extend(system_wise_panel()),
            _ => out.push(item.parse()?),
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidMetric(s.to_string()));
    }
    Ok(out)
}

/// The 12 system-wise measures used as prediction targets.
pub fn system_wise_panel() -> Vec<Measure> {
    vec![
        Measure::mean(MetricSpec::RPrecision(FULL_DEPTH)),
        Measure::mean(MetricSpec::Bpref(FULL_DEPTH)),
        Measure::mean(MetricSpec::ReciprocalRank(FULL_DEPTH)),
        Measure::mean(MetricSpec::Err(ERR_DEPTH)),
        Measure::mean(MetricSpec::AveragePrecision(FULL_DEPTH)),
        Measure::gmap(FULL_DEPTH),
        Measure::mean(MetricSpec::Ndcg(FULL_DEPTH)),
        Measure::mean(MetricSpec::Precision(10)),
        Measure::mean(MetricSpec::Recall(100)),
        Measure::mean(MetricSpec::rbp(0.5, FULL_DEPTH)),
        Measure::mean(MetricSpec::rbp(0.8, FULL_DEPTH)),
        Measure::mean(MetricSpec::rbp(0.95, FULL_DEPTH)),
    ]
}

/// Per-topic measures needed to aggregate `measures`, without duplicates.
pub fn base_metrics(measures: &[Measure]) -> Vec<MetricSpec> {
    let mut seen = HashSet::new();
    measures
        .iter()
        .map(|m| m.metric)
        .filter(|m| seen.insert(*m))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableKind {
    TopicWise,
    SystemWise,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RowKey {
    pub system: String,
    pub topic: Option<String>,
}

impl RowKey {
    pub fn system(system: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            topic: None,
        }
    }

    pub fn topic(system: impl Into<String>, topic: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            topic: Some(topic.into()),
        }
    }
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.topic {
            Some(t) => write!(f, "{}/{}", self.system, t),
            None => write!(f, "{}", self.system),
        }
    }
}

/// Rectangular table of scores with explicit missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    kind: TableKind,
    collection_id: String,
    row_keys: Vec<RowKey>,
    columns: Vec<Measure>,
    values: Vec<Option<f64>>,
}

impl ScoreTable {
    /// Builds a table from row-major values, checking its invariants.
    pub fn new(
        kind: TableKind,
        collection_id: impl Into<String>,
        row_keys: Vec<RowKey>,
        columns: Vec<Measure>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if values.len() != row_keys.len() * columns.len() {
            return Err(Error::InvalidTable(format!(
                "{} values for {} rows x {} columns",
                values.len(),
                row_keys.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for key in &row_keys {
            if key.topic.is_some() != (kind == TableKind::TopicWise) {
                return Err(Error::InvalidTable(format!("row key {key} does not match table kind")));
            }
            if !seen.insert(key) {
                return Err(Error::InvalidTable(format!("duplicate row {key}")));
            }
        }
        let mut cols = HashSet::new();
        for c in &columns {
            if !cols.insert(c) {
                return Err(Error::InvalidTable(format!("duplicate column {c}")));
            }
            if kind == TableKind::TopicWise && c.aggregation != Aggregation::Mean {
                return Err(Error::InvalidTable(format!("{c} in a topic-wise table")));
            }
        }
        if let Some(v) = values.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidTable(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            kind,
            collection_id: collection_id.into(),
            row_keys,
            columns,
            values,
        })
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn collection_id(&self) -> &str {
        &self.collection_id
    }

    pub fn row_keys(&self) -> &[RowKey] {
        &self.row_keys
    }

    pub fn columns(&self) -> &[Measure] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.row_keys.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let n = self.columns.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.columns.len() + col]
    }

    pub fn column_index(&self, m: &Measure) -> Option<usize> {
        self.columns.iter().position(|c| c == m)
    }

    pub fn column(&self, m: &Measure) -> Result<Vec<Option<f64>>> {
        let j = self
            .column_index(m)
            .ok_or_else(|| Error::MissingColumn(m.to_string()))?;
        Ok((0..self.n_rows()).map(|i| self.get(i, j)).collect())
    }

    /// Rows that have a value in every one of `measures`, as dense
    /// columns (outer index = measure).
    pub fn complete_columns(&self, measures: &[Measure]) -> Result<Vec<Vec<f64>>> {
        let idx: Vec<usize> = measures
            .iter()
            .map(|m| {
                self.column_index(m)
                    .ok_or_else(|| Error::MissingColumn(m.to_string()))
            })
            .collect::<Result<_>>()?;
        let mut out = vec![Vec::with_capacity(self.n_rows()); measures.len()];
        for i in 0..self.n_rows() {
            let row: Option<Vec<f64>> = idx.iter().map(|&j| self.get(i, j)).collect();
            if let Some(row) = row {
                for (col, v) in out.iter_mut().zip(row) {
                    col.push(v);
                }
            }
        }
        Ok(out)
    }

    /// A table with only the given columns, in the given order.
    pub fn project(&self, measures: &[Measure]) -> Result<ScoreTable> {
        let idx: Vec<usize> = measures
            .iter()
            .map(|m| {
                self.column_index(m)
                    .ok_or_else(|| Error::MissingColumn(m.to_string()))
            })
            .collect::<Result<_>>()?;
        let values = (0..self.n_rows())
            .flat_map(|i| idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(ScoreTable {
            kind: self.kind,
            collection_id: self.collection_id.clone(),
            row_keys: self.row_keys.clone(),
            columns: measures.to_vec(),
            values,
        })
    }

    /// Stacks tables of the same kind and column set. System names are
    /// prefixed with `collection:` so rows stay distinct.
    pub fn concat(tables: &[&ScoreTable], collection_id: &str) -> Result<ScoreTable> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidArgument("no tables to combine".into()))?;
        let columns = first.columns.clone();
        let mut row_keys = Vec::new();
        let mut values = Vec::new();
        for t in tables {
            if t.kind != first.kind {
                return Err(Error::InvalidTable("cannot mix table kinds".into()));
            }
            if t.columns.len() != columns.len() {
                return Err(Error::InvalidTable(format!(
                    "{} has a different column set",
                    t.collection_id
                )));
            }
            let t = t.project(&columns)?;
            row_keys.extend(t.row_keys.iter().map(|k| RowKey {
                system: format!("{}:{}", t.collection_id, k.system),
                topic: k.topic.clone(),
            }));
            values.extend(t.values);
        }
        ScoreTable::new(first.kind, collection_id, row_keys, columns, values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["system".to_string()];
        if self.kind == TableKind::TopicWise {
            header.push("topic".to_string());
        }
        header.extend(self.columns.iter().map(ToString::to_string));
        w.write_record(&header)?;
        for (i, key) in self.row_keys.iter().enumerate() {
            let mut rec = vec![key.system.clone()];
            if let Some(t) = &key.topic {
                rec.push(t.clone());
            }
            rec.extend(
                self.row(i)
                    .iter()
                    .map(|v| v.map_or_else(String::new, |v| format!("{v:.6}"))),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`ScoreTable::write_csv`]. A second
    /// header column named `topic` marks a topic-wise table.
    pub fn read_csv<R: Read>(input: R, collection_id: &str) -> Result<ScoreTable> {
        let mut r = csv::ReaderBuilder::new().from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("system") {
            return Err(Error::InvalidTable("first column must be `system`".into()));
        }
        let topic_wise = header.get(1) == Some("topic");
        let skip = if topic_wise { 2 } else { 1 };
        let columns: Vec<Measure> = header
            .iter()
            .skip(skip)
            .map(str::parse)
            .collect::<Result<_>>()?;
        let mut row_keys = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != columns.len() + skip {
                return Err(Error::InvalidTable(format!(
                    "row has {} fields, expected {}",
                    rec.len(),
                    columns.len() + skip
                )));
            }
            let key = if topic_wise {
                RowKey::topic(&rec[0], &rec[1])
            } else {
                RowKey::system(&rec[0])
            };
            row_keys.push(key);
            for field in rec.iter().skip(skip) {
                let field = field.trim();
                if field.is_empty() {
                    values.push(None);
                } else {
                    let v: f64 = field
                        .parse()
                        .map_err(|_| Error::InvalidTable(format!("bad value `{field}`")))?;
                    if !v.is_finite() {
                        return Err(Error::NonFinite(field.to_string()));
                    }
                    values.push(Some(v));
                }
            }
        }
        let kind = if topic_wise {
            TableKind::TopicWise
        } else {
            TableKind::SystemWise
        };
        ScoreTable::new(kind, collection_id, row_keys, columns, values)
    }
}

/// Scores every (system, topic) pair where the topic has at least one
/// relevant judgment. A system without results for such a topic gets an
/// all-missing row and a warning.
pub fn build_topic_wise(
    rs: &RunSet,
    js: &JudgmentSet,
    specs: &[MetricSpec],
    collection_id: &str,
) -> Result<Diagnosed<ScoreTable>> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no measures requested".into()));
    }
    let retrieved: HashSet<&str> = rs.topic_ids().into_iter().collect();
    let topics: Vec<(&str, _)> = js.topics().filter(|(_, j)| j.num_rel() > 0).collect();
    if !topics.iter().any(|(t, _)| retrieved.contains(t)) {
        return Err(Error::NoSharedTopics);
    }
    let cells: Vec<(&str, &str, _)> = rs
        .runs()
        .flat_map(|(tag, run)| topics.iter().map(move |&(t, j)| (tag, t, (run.get(t), j))))
        .collect();
    let rows: Vec<(RowKey, Option<Vec<f64>>)> = cells
        .par_iter()
        .map(|&(tag, topic, (ranking, judgments))| {
            let key = RowKey::topic(tag, topic);
            let Some(ranking) = ranking else {
                return Ok((key, None));
            };
            let te = TopicEval::new(
                ranking.iter().map(|d| d.doc_id.as_str()),
                judgments,
                js.max_grade(),
            );
            Ok((key, Some(metrics::evaluate_topic(&te, specs)?)))
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let mut row_keys = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * specs.len());
    for (key, scores) in rows {
        match scores {
            Some(s) => values.extend(s.into_iter().map(Some)),
            None => {
                warnings.push(Warning {
                    file: collection_id.to_string(),
                    line: 0,
                    kind: WarningKind::MissingTopic {
                        system: key.system.clone(),
                        topic: key.topic.clone().unwrap_or_default(),
                    },
                });
                values.extend(std::iter::repeat_n(None, specs.len()));
            }
        }
        row_keys.push(key);
    }
    let columns = specs.iter().copied().map(Measure::mean).collect();
    let table = ScoreTable::new(
        TableKind::TopicWise,
        collection_id,
        row_keys,
        columns,
        values,
    )?;
    Ok(Diagnosed::new(table, warnings))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemWiseOptions {
    /// Drop systems that lack results for any scoreable topic instead of
    /// averaging over the topics they have.
    pub strict_coverage: bool,
}

fn aggregate(values: &[f64], aggregation: Aggregation) -> f64 {
    let n = values.len() as f64;
    let v = match aggregation {
        Aggregation::Mean => values.iter().sum::<f64>() / n,
        Aggregation::GeometricMean => {
            (values.iter().map(|v| v.max(GMAP_FLOOR).ln()).sum::<f64>() / n).exp()
        }
    };
    v.clamp(0.0, 1.0)
}

/// Averages a topic-wise table over each system's scoreable topics.
pub fn build_system_wise(
    tw: &ScoreTable,
    aggs: &[Measure],
    opts: SystemWiseOptions,
) -> Result<Diagnosed<ScoreTable>> {
    if tw.kind() != TableKind::TopicWise {
        return Err(Error::InvalidTable("expected a topic-wise table".into()));
    }
    if aggs.is_empty() {
        return Err(Error::InvalidArgument("no measures requested".into()));
    }
    let idx: Vec<usize> = aggs
        .iter()
        .map(|a| {
            tw.column_index(&Measure::mean(a.metric))
                .ok_or_else(|| Error::MissingColumn(a.metric.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut by_system: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, key) in tw.row_keys().iter().enumerate() {
        by_system.entry(key.system.as_str()).or_default().push(i);
    }
    let mut warnings = Vec::new();
    let mut row_keys = Vec::new();
    let mut values = Vec::new();
    for (system, rows) in by_system {
        let mut sorted = rows.clone();
        sorted.sort_by(|&a, &b| tw.row_keys()[a].cmp(&tw.row_keys()[b]));
        let complete: Vec<usize> = sorted
            .into_iter()
            .filter(|&i| idx.iter().all(|&j| tw.get(i, j).is_some()))
            .collect();
        let reason = if complete.is_empty() {
            Some("no scoreable topics".to_string())
        } else if opts.strict_coverage && complete.len() < rows.len() {
            Some(format!(
                "results for {} of {} topics under strict coverage",
                complete.len(),
                rows.len()
            ))
        } else {
            None
        };
        if let Some(reason) = reason {
            warnings.push(Warning {
                file: tw.collection_id().to_string(),
                line: 0,
                kind: WarningKind::DroppedSystem {
                    system: system.to_string(),
                    reason,
                },
            });
            continue;
        }
        row_keys.push(RowKey::system(system));
        for (agg, &j) in aggs.iter().zip(&idx) {
            let col: Vec<f64> = complete.iter().map(|&i| tw.get(i, j).unwrap()).collect();
            values.push(Some(aggregate(&col, agg.aggregation)));
        }
    }
    let table = ScoreTable::new(
        TableKind::SystemWise,
        tw.collection_id(),
        row_keys,
        aggs.to_vec(),
        values,
    )?;
    Ok(Diagnosed::new(table, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalReason {
    Missing,
    AllZero,
}

impl fmt::Display for RemovalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RemovalReason::Missing => "missing",
            RemovalReason::AllZero => "all-zero",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanReport {
    pub removed: Vec<(RowKey, RemovalReason)>,
}

impl CleanReport {
    pub fn is_empty(&self) -> bool {
        self.removed.is_empty()
    }
}

/// Removes rows with any missing cell and, if `drop_zero_rows`, rows
/// whose values are all exactly zero.
pub fn clean(table: &ScoreTable, drop_zero_rows: bool) -> Result<(ScoreTable, CleanReport)> {
    let mut report = CleanReport::default();
    let mut row_keys = Vec::new();
    let mut values = Vec::new();
    for (i, key) in table.row_keys().iter().enumerate() {
        let row = table.row(i);
        let reason = if row.iter().any(Option::is_none) {
            Some(RemovalReason::Missing)
        } else if drop_zero_rows && row.iter().all(|v| *v == Some(0.0)) {
            Some(RemovalReason::AllZero)
        } else {
            None
        };
        match reason {
            Some(r) => report.removed.push((key.clone(), r)),
            None => {
                row_keys.push(key.clone());
                values.extend_from_slice(row);
            }
        }
    }
    if row_keys.is_empty() {
        return Err(Error::EmptyTable);
    }
    let cleaned = ScoreTable::new(
        table.kind(),
        table.collection_id(),
        row_keys,
        table.columns().to_vec(),
        values,
    )?;
    Ok((cleaned, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trec_io::{parse_qrels, parse_runs};

    fn ap_table(aps: &[Option<f64>]) -> ScoreTable {
        let keys = (0..aps.len()).map(|i| RowKey::topic("s", format!("t{i}"))).collect();
        ScoreTable::new(
            TableKind::TopicWise,
            "c",
            keys,
            vec![Measure::mean(MetricSpec::AveragePrecision(1000))],
            aps.to_vec(),
        )
        .unwrap()
    }

    fn sw(tw: &ScoreTable) -> ScoreTable {
        build_system_wise(
            tw,
            &[Measure::mean(MetricSpec::AveragePrecision(1000)), Measure::gmap(1000)],
            SystemWiseOptions::default(),
        )
        .unwrap()
        .value
    }

    #[test]
    fn measure_names() {
        for name in ["GMAP", "GMAP@100", "AP@1000", "RBP(0.8)@1000", "ERR@20"] {
            assert_eq!(name.parse::<Measure>().unwrap().to_string(), name);
        }
        assert_eq!("MAP".parse::<Measure>().unwrap().to_string(), "AP@1000");
        assert!("GMAP@0".parse::<Measure>().is_err());
        assert!(Measure::geometric(MetricSpec::Precision(10)).is_err());
        assert_eq!(parse_measure_list("tw-panel").unwrap().len(), 23);
        assert_eq!(parse_measure_list("sw-panel,P@20").unwrap().len(), 13);
        assert!(parse_measure_list("P@0").is_err());
    }

    #[test]
    fn map_and_gmap() {
        let t = sw(&ap_table(&[Some(0.2), Some(0.4)]));
        assert!((t.get(0, 0).unwrap() - 0.3).abs() < 1e-12);
        assert!((t.get(0, 1).unwrap() - 0.08f64.sqrt()).abs() < 1e-12);
        let t = sw(&ap_table(&[Some(0.5), Some(0.0)]));
        assert!((t.get(0, 1).unwrap() - (0.5f64 * 1e-5).sqrt()).abs() < 1e-12);
        assert!((t.get(0, 1).unwrap() - 0.0022360).abs() < 1e-7);
        let t = sw(&ap_table(&[Some(0.7), Some(0.7), Some(0.7)]));
        assert!((t.get(0, 0).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn system_wise_skips_missing_topics() {
        let tw = ap_table(&[Some(0.2), None, Some(0.4)]);
        let t = sw(&tw);
        assert!((t.get(0, 0).unwrap() - 0.3).abs() < 1e-12);
        let strict = build_system_wise(
            &tw,
            &[Measure::mean(MetricSpec::AveragePrecision(1000))],
            SystemWiseOptions {
                strict_coverage: true,
            },
        )
        .unwrap();
        assert_eq!(strict.value.n_rows(), 0);
        assert_eq!(strict.warnings.len(), 1);
        let none = build_system_wise(
            &ap_table(&[None]),
            &[Measure::mean(MetricSpec::AveragePrecision(1000))],
            SystemWiseOptions::default(),
        )
        .unwrap();
        assert_eq!(none.value.n_rows(), 0);
        assert!(matches!(none.warnings[0].kind, WarningKind::DroppedSystem { .. }));
    }

    fn fixture() -> (RunSet, JudgmentSet) {
        let qrels = "1 0 a 1\n1 0 b 0\n2 0 c 2\n2 0 d 1\n3 0 e 1\n4 0 f 0\n";
        let runs = "1 Q0 a 1 2 s1\n1 Q0 b 2 1 s1\n2 Q0 d 1 2 s1\n3 Q0 e 1 1 s1\n4 Q0 f 1 1 s1\n\
                    1 Q0 b 1 2 s2\n2 Q0 c 1 2 s2\n2 Q0 x 2 1 s2\n3 Q0 z 1 1 s2\n";
        (
            parse_runs(runs.as_bytes(), "r").unwrap().value,
            parse_qrels(qrels.as_bytes(), "q").unwrap().value,
        )
    }

    #[test]
    fn topic_wise_shape() {
        let (rs, js) = fixture();
        let panel = metrics::topic_wise_panel();
        let d = build_topic_wise(&rs, &js, &panel, "c").unwrap();
        let t = d.value;
        // topic 4 has no relevant document
        assert_eq!((t.n_rows(), t.n_cols()), (6, 23));
        assert!(t.row_keys().iter().all(|k| k.topic.as_deref() != Some("4")));
        assert!(d.warnings.is_empty());
        assert!(t.row_keys().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn topic_wise_missing_topic_flagged() {
        let (_, js) = fixture();
        let rs = crate::trec_io::parse_runs(
            "1 Q0 a 1 2 s1\n2 Q0 c 1 1 s1\n3 Q0 e 1 1 s1\n1 Q0 a 1 2 s2\n".as_bytes(),
            "r",
        )
        .unwrap()
        .value;
        let d = build_topic_wise(&rs, &js, &[MetricSpec::Precision(10)], "c").unwrap();
        assert_eq!(d.value.n_rows(), 6);
        assert_eq!(d.warnings.len(), 2);
        let i = d
            .value
            .row_keys()
            .iter()
            .position(|k| *k == RowKey::topic("s2", "2"))
            .unwrap();
        assert_eq!(d.value.row(i), [None]);
    }

    #[test]
    fn topic_wise_requires_shared_topics() {
        let (_, js) = fixture();
        let rs = parse_runs("9 Q0 a 1 1 s\n".as_bytes(), "r").unwrap().value;
        assert!(matches!(
            build_topic_wise(&rs, &js, &[MetricSpec::Precision(10)], "c"),
            Err(Error::NoSharedTopics)
        ));
    }

    #[test]
    fn cleaning() {
        let keys = vec![RowKey::system("a"), RowKey::system("b"), RowKey::system("c")];
        let cols = vec![
            Measure::mean(MetricSpec::Precision(10)),
            Measure::mean(MetricSpec::Recall(10)),
        ];
        let t = ScoreTable::new(
            TableKind::SystemWise,
            "c",
            keys,
            cols,
            vec![Some(0.1), None, Some(0.0), Some(0.0), Some(0.2), Some(0.3)],
        )
        .unwrap();
        let (c, report) = clean(&t, true).unwrap();
        assert_eq!(c.row_keys(), [RowKey::system("c")]);
        assert_eq!(
            report.removed,
            [
                (RowKey::system("a"), RemovalReason::Missing),
                (RowKey::system("b"), RemovalReason::AllZero)
            ]
        );
        let (c2, r2) = clean(&c, true).unwrap();
        assert_eq!(c2, c);
        assert!(r2.is_empty());
        let (kept, _) = clean(&t, false).unwrap();
        assert_eq!(kept.n_rows(), 2);
        let only_missing = t.project(&[Measure::mean(MetricSpec::Recall(10))]).unwrap();
        let only_missing =
            ScoreTable::new(TableKind::SystemWise, "c", vec![RowKey::system("a")], only_missing.columns().to_vec(), vec![None]).unwrap();
        assert!(matches!(clean(&only_missing, false), Err(Error::EmptyTable)));
    }

    #[test]
    fn table_invariants() {
        let cols = vec![Measure::mean(MetricSpec::Precision(10))];
        let dup = vec![RowKey::system("a"), RowKey::system("a")];
        assert!(ScoreTable::new(TableKind::SystemWise, "c", dup, cols.clone(), vec![Some(0.1); 2]).is_err());
        let one = vec![RowKey::system("a")];
        assert!(ScoreTable::new(TableKind::SystemWise, "c", one.clone(), cols.clone(), vec![Some(1.5)]).is_err());
        assert!(ScoreTable::new(TableKind::TopicWise, "c", one, cols, vec![Some(0.5)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let (rs, js) = fixture();
        let t = build_topic_wise(&rs, &js, &metrics::topic_wise_panel(), "c").unwrap().value;
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("system,topic,AP@10,"));
        assert!(!text.contains('\r'));
        let back = ScoreTable::read_csv(buf.as_slice(), "c").unwrap();
        assert_eq!(back.row_keys(), t.row_keys());
        assert_eq!(back.columns(), t.columns());
        for i in 0..t.n_rows() {
            for (a, b) in t.row(i).iter().zip(back.row(i)) {
                assert!((a.unwrap() - b.unwrap()).abs() <= 5e-7);
            }
        }
    }

    #[test]
    fn csv_missing_cells_are_empty() {
        let t = ap_table(&[Some(0.25), None]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "system,topic,AP@1000\ns,t0,0.250000\ns,t1,\n"
        );
    }
}
