//! Reading, cleaning and truncating TREC runs and relevance judgments.
//!
//! Qrels lines are `topic iteration doc grade`; run lines are
//! `topic Q0 doc rank score tag`. Fields are split on any run of
//! whitespace. Within a topic, run documents are ordered by descending
//! score with ties broken by descending doc id, which is the ordering
//! trec_eval applies. The rank column is ignored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{Diagnosed, Warning, WarningKind};
use crate::error::{Error, Result};

/// One relevance judgment line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qrel {
    pub topic_id: String,
    pub doc_id: String,
    pub grade: i32,
}

/// Judgments for a single topic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopicJudgments {
    grades: HashMap<String, i32>,
    num_rel: usize,
    num_nonrel: usize,
}

impl TopicJudgments {
    fn from_grades(grades: HashMap<String, i32>) -> Self {
        let num_rel = grades.values().filter(|&&g| g > 0).count();
        let num_nonrel = grades.len() - num_rel;
        Self {
            grades,
            num_rel,
            num_nonrel,
        }
    }

    pub fn grade(&self, doc_id: &str) -> Option<i32> {
        self.grades.get(doc_id).copied()
    }

    /// Number of documents judged with a grade above zero.
    pub fn num_rel(&self) -> usize {
        self.num_rel
    }

    /// Number of documents judged with a grade of zero or below.
    pub fn num_nonrel(&self) -> usize {
        self.num_nonrel
    }

    pub fn num_judged(&self) -> usize {
        self.grades.len()
    }

    pub fn grades(&self) -> impl Iterator<Item = (&str, i32)> {
        self.grades.iter().map(|(d, &g)| (d.as_str(), g))
    }
}

/// Relevance judgments for a collection, keyed by topic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgmentSet {
    topics: BTreeMap<String, TopicJudgments>,
    max_grade: Option<i32>,
}

impl JudgmentSet {
    pub fn from_qrels<I: IntoIterator<Item = Qrel>>(qrels: I) -> Self {
        let mut topics: BTreeMap<String, HashMap<String, i32>> = BTreeMap::new();
        for q in qrels {
            topics.entry(q.topic_id).or_default().insert(q.doc_id, q.grade);
        }
        Self::assemble(topics, None)
    }

    fn assemble(topics: BTreeMap<String, HashMap<String, i32>>, max_grade: Option<i32>) -> Self {
        let topics: BTreeMap<_, _> = topics
            .into_iter()
            .map(|(t, g)| (t, TopicJudgments::from_grades(g)))
            .collect();
        let observed = topics
            .values()
            .flat_map(|t| t.grades.values().copied())
            .filter(|&g| g > 0)
            .max();
        Self {
            max_grade: max_grade.or(observed),
            topics,
        }
    }

    pub fn topic(&self, topic_id: &str) -> Option<&TopicJudgments> {
        self.topics.get(topic_id)
    }

    pub fn topics(&self) -> impl Iterator<Item = (&str, &TopicJudgments)> {
        self.topics.iter().map(|(t, j)| (t.as_str(), j))
    }

    pub fn num_topics(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Largest positive grade in the collection, used as the ERR grade
    /// ceiling. A pooled subset keeps the ceiling of the set it came from.
    pub fn max_grade(&self) -> Option<i32> {
        self.max_grade
    }

    /// Number of relevant documents for `topic_id` (0 if the topic is unknown).
    pub fn num_rel(&self, topic_id: &str) -> usize {
        self.topic(topic_id).map_or(0, TopicJudgments::num_rel)
    }
}

/// One run line as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLine {
    pub topic_id: String,
    pub doc_id: String,
    pub rank_field: i64,
    pub score: f64,
    pub run_tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Ranked lists of every run, keyed by run tag and then topic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSet {
    runs: BTreeMap<String, BTreeMap<String, Vec<ScoredDoc>>>,
    sources: Vec<String>,
}

impl RunSet {
    pub fn run(&self, tag: &str) -> Option<&BTreeMap<String, Vec<ScoredDoc>>> {
        self.runs.get(tag)
    }

    pub fn runs(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, Vec<ScoredDoc>>)> {
        self.runs.iter().map(|(t, r)| (t.as_str(), r))
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.runs.keys().map(String::as_str)
    }

    pub fn ranking(&self, tag: &str, topic_id: &str) -> Option<&[ScoredDoc]> {
        self.runs.get(tag)?.get(topic_id).map(Vec::as_slice)
    }

    pub fn num_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// File names the runs were read from.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// Topics retrieved by at least one run.
    pub fn topic_ids(&self) -> Vec<&str> {
        let mut topics: Vec<&str> = self
            .runs
            .values()
            .flat_map(|r| r.keys().map(String::as_str))
            .collect();
        topics.sort_unstable();
        topics.dedup();
        topics
    }

    /// Writes the runs in canonical order with ranks renumbered from 1.
    pub fn write_trec<W: Write>(&self, mut out: W) -> Result<()> {
        for (tag, topics) in &self.runs {
            for (topic, docs) in topics {
                for (i, d) in docs.iter().enumerate() {
                    writeln!(out, "{topic} Q0 {} {} {} {tag}", d.doc_id, i + 1, d.score)?;
                }
            }
        }
        Ok(())
    }
}

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

fn read_qrel_lines<R: BufRead>(reader: R, source: &str) -> Result<Vec<(usize, Qrel)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 4 {
            return Err(parse_error(
                source,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let grade = fields[3].parse::<i32>().map_err(|_| {
            parse_error(source, lineno, format!("grade `{}` is not an integer", fields[3]))
        })?;
        out.push((
            lineno,
            Qrel {
                topic_id: fields[0].to_string(),
                doc_id: fields[2].to_string(),
                grade,
            },
        ));
    }
    Ok(out)
}

/// Parses a qrels stream. Later duplicates of a (topic, doc) pair
/// overwrite earlier ones and produce a warning.
pub fn parse_qrels<R: BufRead>(reader: R, source: &str) -> Result<Diagnosed<JudgmentSet>> {
    let lines = read_qrel_lines(reader, source)?;
    if lines.is_empty() {
        return Err(Error::EmptyInput(format!("{source}: no judgments")));
    }
    let mut warnings = Vec::new();
    let mut topics: BTreeMap<String, HashMap<String, i32>> = BTreeMap::new();
    for (lineno, q) in lines {
        let slot = topics.entry(q.topic_id.clone()).or_default();
        if slot.insert(q.doc_id.clone(), q.grade).is_some() {
            warnings.push(Warning {
                file: source.to_string(),
                line: lineno,
                kind: WarningKind::DuplicateJudgment {
                    topic: q.topic_id,
                    doc: q.doc_id,
                },
            });
        }
    }
    Ok(Diagnosed::new(JudgmentSet::assemble(topics, None), warnings))
}

fn read_run_lines<R: BufRead>(reader: R, source: &str) -> Result<Vec<(usize, RunLine)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 6 {
            return Err(parse_error(
                source,
                lineno,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let score = fields[4].parse::<f64>().map_err(|_| {
            parse_error(source, lineno, format!("score `{}` is not a number", fields[4]))
        })?;
        if !score.is_finite() {
            return Err(parse_error(
                source,
                lineno,
                format!("score `{}` is not finite", fields[4]),
            ));
        }
        out.push((
            lineno,
            RunLine {
                topic_id: fields[0].to_string(),
                doc_id: fields[2].to_string(),
                rank_field: fields[3].parse().unwrap_or(0),
                score,
                run_tag: fields[5].to_string(),
            },
        ));
    }
    Ok(out)
}

/// Assembles run lines from one or more sources into a [`RunSet`].
#[derive(Debug, Default)]
pub struct RunSetBuilder {
    // tag -> topic -> doc -> best score
    groups: BTreeMap<String, BTreeMap<String, HashMap<String, f64>>>,
    sources: Vec<String>,
    warnings: Vec<Warning>,
    lines: usize,
}

impl RunSetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_lines(&mut self, source: &str, lines: Vec<(usize, RunLine)>) {
        self.sources.push(source.to_string());
        self.lines += lines.len();
        for (lineno, l) in lines {
            let docs = self
                .groups
                .entry(l.run_tag.clone())
                .or_default()
                .entry(l.topic_id.clone())
                .or_default();
            match docs.get_mut(&l.doc_id) {
                Some(existing) => {
                    if l.score > *existing {
                        *existing = l.score;
                    }
                    self.warnings.push(Warning {
                        file: source.to_string(),
                        line: lineno,
                        kind: WarningKind::DuplicateRunDoc {
                            run: l.run_tag,
                            topic: l.topic_id,
                            doc: l.doc_id,
                        },
                    });
                }
                None => {
                    docs.insert(l.doc_id, l.score);
                }
            }
        }
    }

    pub fn add_source<R: BufRead>(&mut self, reader: R, source: &str) -> Result<&mut Self> {
        let lines = read_run_lines(reader, source)?;
        self.add_lines(source, lines);
        Ok(self)
    }

    pub fn build(self) -> Result<Diagnosed<RunSet>> {
        if self.lines == 0 {
            return Err(Error::EmptyInput(format!(
                "{}: no run lines",
                self.sources.join(", ")
            )));
        }
        let runs = self
            .groups
            .into_iter()
            .map(|(tag, topics)| {
                let topics = topics
                    .into_iter()
                    .map(|(topic, docs)| {
                        let mut docs: Vec<ScoredDoc> = docs
                            .into_iter()
                            .map(|(doc_id, score)| ScoredDoc { doc_id, score })
                            .collect();
                        sort_ranking(&mut docs);
                        (topic, docs)
                    })
                    .collect();
                (tag, topics)
            })
            .collect();
        Ok(Diagnosed::new(
            RunSet {
                runs,
                sources: self.sources,
            },
            self.warnings,
        ))
    }
}

/// Descending score, ties by descending doc id.
pub fn sort_ranking(docs: &mut [ScoredDoc]) {
    docs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.doc_id.cmp(&a.doc_id))
    });
}

/// Parses a single run stream.
pub fn parse_runs<R: BufRead>(reader: R, source: &str) -> Result<Diagnosed<RunSet>> {
    let mut b = RunSetBuilder::new();
    b.add_source(reader, source)?;
    b.build()
}

pub fn read_qrels_file(path: &Path) -> Result<Diagnosed<JudgmentSet>> {
    let f = fs::File::open(path)?;
    parse_qrels(BufReader::new(f), &path.display().to_string())
}

/// Reads a run file, or every regular non-hidden file of a directory in
/// file-name order. Files are parsed in parallel and assembled in order.
pub fn read_runs_path(path: &Path) -> Result<Diagnosed<RunSet>> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path)? {
            let p = entry?.path();
            let hidden = p
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'));
            if p.is_file() && !hidden {
                files.push(p);
            }
        }
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let parsed: Vec<(String, Vec<(usize, RunLine)>)> = files
        .par_iter()
        .map(|p| {
            let name = p.display().to_string();
            let f = fs::File::open(p)?;
            let lines = read_run_lines(BufReader::new(f), &name)?;
            Ok((name, lines))
        })
        .collect::<Result<_>>()?;
    let mut b = RunSetBuilder::new();
    if parsed.is_empty() {
        b.sources.push(path.display().to_string());
    }
    for (name, lines) in parsed {
        b.add_lines(&name, lines);
    }
    b.build()
}

/// Removes runs whose ranked doc lists are identical on every topic to a
/// run with a lexicographically smaller tag. Returns the removed tags.
pub fn dedup_runs(rs: RunSet) -> (RunSet, Vec<String>) {
    type Signature<'a> = Vec<(&'a str, Vec<&'a str>)>;
    let mut kept: HashSet<Signature<'_>> = HashSet::new();
    let mut removed = Vec::new();
    // BTreeMap iteration visits tags in ascending order, so the first
    // member of each identical group is the one kept.
    for (tag, topics) in &rs.runs {
        let sig: Signature<'_> = topics
            .iter()
            .map(|(t, docs)| (t.as_str(), docs.iter().map(|d| d.doc_id.as_str()).collect()))
            .collect();
        if !kept.insert(sig) {
            removed.push(tag.clone());
        }
    }
    let mut rs = rs.clone();
    for tag in &removed {
        rs.runs.remove(tag);
    }
    (rs, removed)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    Ok(())
}

/// Cuts every ranked list to its first `depth` documents.
pub fn truncate(rs: &RunSet, depth: usize) -> Result<RunSet> {
    check_depth(depth)?;
    let runs = rs
        .runs
        .iter()
        .map(|(tag, topics)| {
            let topics = topics
                .iter()
                .map(|(t, docs)| (t.clone(), docs[..docs.len().min(depth)].to_vec()))
                .collect();
            (tag.clone(), topics)
        })
        .collect();
    Ok(RunSet {
        runs,
        sources: rs.sources.clone(),
    })
}

/// Restricts `js` to documents found in the top `depth` of at least one
/// run for the same topic, simulating a depth-`depth` judgment pool.
pub fn pool_judgments(rs: &RunSet, js: &JudgmentSet, depth: usize) -> Result<JudgmentSet> {
    check_depth(depth)?;
    let mut pool: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    for topics in rs.runs.values() {
        for (topic, docs) in topics {
            pool.entry(topic.as_str())
                .or_default()
                .extend(docs.iter().take(depth).map(|d| d.doc_id.as_str()));
        }
    }
    let mut topics: BTreeMap<String, HashMap<String, i32>> = BTreeMap::new();
    for (topic, judged) in &js.topics {
        let Some(pooled) = pool.get(topic.as_str()) else {
            continue;
        };
        let grades: HashMap<String, i32> = judged
            .grades
            .iter()
            .filter(|(d, _)| pooled.contains(d.as_str()))
            .map(|(d, &g)| (d.clone(), g))
            .collect();
        if !grades.is_empty() {
            topics.insert(topic.clone(), grades);
        }
    }
    Ok(JudgmentSet::assemble(topics, js.max_grade))
}
