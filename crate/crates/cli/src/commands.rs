use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use metriclab::analytics::{correlation_matrix, fit_ols, predict, CorrelationMatrix, LinearModel};
use metriclab::datasets::{
    build_topic_wise, system_wise_panel, Aggregation, Measure, ScoreTable,
};
use metriclab::experiments::{
    best_subset_search, lowcost_experiment, parse_results_csv, report, system_wise_table,
    DepthConfig, ReportFormat, SearchResult, TableOptions,
};
use metriclab::metrics::topic_wise_panel;
use metriclab::trec_io::{dedup_runs, read_qrels_file, read_runs_path};
use serde_json::json;

use crate::args::{
    default_targets, CorrelateArgs, EvalArgs, FitArgs, LowcostArgs, PredictArgs, ReportArgs,
    SearchArgs, MAX_SUBSET,
};
use crate::experiment::{load_collections, ExperimentManifest};
use crate::output::{
    emit_warnings, manifest_for, parent_dir, write_file, write_with, OutputLock, RunRecord,
};

/// A problem with how the tool was invoked rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "collection".into())
}

fn read_table(path: &Path) -> Result<ScoreTable> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    ScoreTable::read_csv(f, &stem(path)).with_context(|| format!("reading {}", path.display()))
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let measures = match &a.metrics {
        Some(m) => m.0.clone(),
        None if a.per_topic => topic_wise_panel().into_iter().map(Measure::mean).collect(),
        None => system_wise_panel(),
    };
    if a.per_topic {
        if let Some(m) = measures.iter().find(|m| m.aggregation != Aggregation::Mean) {
            return Err(usage(format!("{m} is only defined per system; drop --per-topic")));
        }
    }
    let _lock = OutputLock::acquire(&parent_dir(&a.output))?;
    let collection = a.collection.clone().unwrap_or_else(|| stem(&a.qrels));
    let (rs, mut warnings) = read_runs_path(&a.runs)?.into_parts();
    let (js, wq) = read_qrels_file(&a.qrels)
        .with_context(|| format!("reading {}", a.qrels.display()))?
        .into_parts();
    warnings.extend(wq);
    let inputs: Vec<PathBuf> = rs.sources().iter().map(PathBuf::from).collect();
    let (rs, removed) = if a.dedup { dedup_runs(rs) } else { (rs, Vec::new()) };

    let table = if a.per_topic {
        let specs: Vec<_> = measures.iter().map(|m| m.metric).collect();
        let (t, w) = build_topic_wise(&rs, &js, &specs, &collection)?.into_parts();
        warnings.extend(w);
        t
    } else {
        let opts = TableOptions {
            drop_zero_rows: !a.keep_zero_rows,
            strict_coverage: a.strict_coverage,
        };
        let (t, w) = system_wise_table(&rs, &js, &measures, &collection, opts)?.into_parts();
        warnings.extend(w);
        t
    };
    emit_warnings(&warnings);
    write_with(&a.output, |w| table.write_csv(w))?;

    let mut rec = RunRecord::new("eval", a);
    rec.inputs(inputs);
    rec.input(&a.qrels);
    rec.output(&a.output);
    rec.note("measures", measures.iter().map(ToString::to_string).collect::<Vec<_>>());
    rec.note("removed_runs", removed);
    rec.note("rows", table.n_rows());
    rec.note("warnings", warnings.len());
    rec.write(&manifest_for(&a.output))
}

fn write_matrix(dir: &Path, name: &str, cm: &CorrelationMatrix, rec: &mut RunRecord) -> Result<()> {
    let square = dir.join(format!("{name}.csv"));
    let long = dir.join(format!("{name}_long.csv"));
    write_with(&square, |w| cm.write_csv(w))?;
    write_with(&long, |w| cm.write_long_csv(w))?;
    rec.output(square);
    rec.output(long);
    Ok(())
}

pub fn correlate(a: &CorrelateArgs) -> Result<()> {
    let _lock = OutputLock::acquire(&a.output)?;
    let tables: Vec<ScoreTable> = a.tables.iter().map(|p| read_table(p)).collect::<Result<_>>()?;
    let mut ids = BTreeMap::new();
    for t in &tables {
        if ids.insert(t.collection_id().to_string(), ()).is_some() {
            return Err(usage(format!("two tables are named {}", t.collection_id())));
        }
    }
    let mut rec = RunRecord::new("correlate", a);
    rec.inputs(a.tables.iter().cloned());
    let mut warnings = Vec::new();
    let refs: Vec<&ScoreTable> = tables.iter().collect();
    let pooled = ScoreTable::concat(&refs, "pooled")?;
    let (cm, w) = correlation_matrix(&pooled)?.into_parts();
    warnings.extend(w);
    write_matrix(&a.output, "pooled", &cm, &mut rec)?;
    let mut samples = BTreeMap::from([("pooled".to_string(), cm.n_samples)]);
    if a.per_collection {
        for t in &tables {
            let (cm, w) = correlation_matrix(t)
                .with_context(|| format!("collection {}", t.collection_id()))?
                .into_parts();
            warnings.extend(w);
            write_matrix(&a.output, t.collection_id(), &cm, &mut rec)?;
            samples.insert(t.collection_id().to_string(), cm.n_samples);
        }
    }
    emit_warnings(&warnings);
    rec.note("n_samples", samples);
    rec.note("warnings", warnings.len());
    rec.write(&a.output.join("manifest.json"))
}

pub fn fit(a: &FitArgs) -> Result<()> {
    if a.predictors.0.contains(&a.target) {
        return Err(usage(format!("{} is both target and predictor", a.target)));
    }
    let _lock = OutputLock::acquire(&parent_dir(&a.output))?;
    let tables: Vec<ScoreTable> = a.tables.iter().map(|p| read_table(p)).collect::<Result<_>>()?;
    let mut wanted = vec![a.target];
    wanted.extend_from_slice(&a.predictors.0);
    let projected: Vec<ScoreTable> = tables
        .iter()
        .map(|t| t.project(&wanted).with_context(|| format!("table {}", t.collection_id())))
        .collect::<Result<_>>()?;
    let refs: Vec<&ScoreTable> = projected.iter().collect();
    let train = ScoreTable::concat(&refs, "train")?;
    let model = fit_ols(&train, &a.target, &a.predictors.0)?;
    let mut text = serde_json::to_string_pretty(&model)?;
    text.push('\n');
    write_file(&a.output, text.as_bytes())?;

    let mut rec = RunRecord::new("fit", a);
    rec.inputs(a.tables.iter().cloned());
    rec.output(&a.output);
    rec.write(&manifest_for(&a.output))
}

pub fn predict_cmd(a: &PredictArgs) -> Result<()> {
    let _lock = OutputLock::acquire(&parent_dir(&a.output))?;
    let text = std::fs::read_to_string(&a.model)
        .with_context(|| format!("reading {}", a.model.display()))?;
    let model: LinearModel = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", a.model.display()))?;
    let table = read_table(&a.table)?;
    let preds = predict(&model, &table)?;
    let actual = table.column(&model.target).ok();

    let mut out = String::from("system");
    if table.row_keys().iter().any(|k| k.topic.is_some()) {
        out.push_str(",topic");
    }
    out.push_str(",predicted");
    if actual.is_some() {
        out.push_str(",actual");
    }
    out.push('\n');
    for (i, key) in table.row_keys().iter().enumerate() {
        out.push_str(&csv_field(&key.system));
        if let Some(t) = &key.topic {
            out.push(',');
            out.push_str(&csv_field(t));
        }
        out.push_str(&format!(",{:.6}", preds[i]));
        if let Some(col) = &actual {
            out.push(',');
            if let Some(v) = col[i] {
                out.push_str(&format!("{v:.6}"));
            }
        }
        out.push('\n');
    }
    write_file(&a.output, out.as_bytes())?;

    let mut rec = RunRecord::new("predict", a);
    rec.input(&a.model);
    rec.input(&a.table);
    rec.output(&a.output);
    rec.write(&manifest_for(&a.output))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_results(dir: &Path, results: &[SearchResult], rec: &mut RunRecord) -> Result<()> {
    for (name, fmt) in [
        ("results.csv", ReportFormat::Csv),
        ("results.json", ReportFormat::Json),
        ("report.md", ReportFormat::Markdown),
    ] {
        let path = dir.join(name);
        write_file(&path, report(results, fmt)?.as_bytes())?;
        rec.output(path);
    }
    Ok(())
}

pub fn search(a: &SearchArgs) -> Result<()> {
    let m = ExperimentManifest::load(&a.manifest)?;
    let targets = match &a.target {
        Some(t) => t.resolve(default_targets),
        None => m.targets.clone().unwrap_or_else(default_targets),
    };
    let sizes = match (&a.n, &m.n) {
        (Some(n), _) => n.0.clone(),
        (None, Some(n)) => n.clone(),
        (None, None) => (1..=MAX_SUBSET).collect(),
    };
    let panel = system_wise_panel();
    for &n in &sizes {
        if n == 0 || n > MAX_SUBSET {
            return Err(usage(format!("subset size {n} out of range")));
        }
    }
    let dedup = a.tables.dedup().or(m.dedup).unwrap_or(true);
    let opts = TableOptions {
        drop_zero_rows: a.tables.drop_zero_rows().or(m.drop_zero_rows).unwrap_or(true),
        strict_coverage: a.tables.strict_coverage().or(m.strict_coverage).unwrap_or(false),
    };
    let _lock = OutputLock::acquire(&a.output)?;
    let loaded = load_collections(&m, dedup)?;
    let mut warnings = loaded.warnings;

    let mut measures = panel.clone();
    measures.extend(targets.iter().filter(|t| !panel.contains(t)));
    let mut rec = RunRecord::new("search", a);
    rec.input(&a.manifest);
    rec.inputs(loaded.inputs);
    let mut tables = BTreeMap::new();
    for (id, rs) in &loaded.runs {
        let (t, w) = system_wise_table(rs, &loaded.qrels[id], &measures, id, opts)
            .with_context(|| format!("collection {id}"))?
            .into_parts();
        warnings.extend(w);
        let path = a.output.join("tables").join(format!("{id}.csv"));
        write_with(&path, |w| t.write_csv(w))?;
        rec.output(path);
        tables.insert(id.clone(), t);
    }
    emit_warnings(&warnings);

    let mut results = Vec::new();
    for target in &targets {
        let candidates: Vec<Measure> = panel.iter().filter(|m| *m != target).copied().collect();
        for &n in &sizes {
            let r = best_subset_search(&tables, &m.split, target, n, &candidates)
                .with_context(|| format!("target {target}, n = {n}"))?;
            results.push(r);
        }
    }
    write_results(&a.output, &results, &mut rec)?;
    rec.note("split", &m.split);
    rec.note("targets", targets.iter().map(ToString::to_string).collect::<Vec<_>>());
    rec.note("n", &sizes);
    rec.note("table_options", json!({
        "dedup": dedup,
        "drop_zero_rows": opts.drop_zero_rows,
        "strict_coverage": opts.strict_coverage,
    }));
    rec.note("removed_runs", &loaded.removed_runs);
    rec.note("warnings", warnings.len());
    rec.write(&a.output.join("manifest.json"))
}

pub fn lowcost(a: &LowcostArgs) -> Result<()> {
    let m = ExperimentManifest::load(&a.manifest)?;
    let defaults = DepthConfig::default();
    let high_cost = match &a.target {
        Some(t) => t.resolve(|| defaults.high_cost.clone()),
        None => m.targets.clone().unwrap_or_else(|| defaults.high_cost.clone()),
    };
    let cfg = DepthConfig {
        depths: a.depths.clone().or_else(|| m.depths.clone()).unwrap_or(defaults.depths.clone()),
        high_cost,
        pooled_qrels: a.pooled().or(m.pooled_qrels).unwrap_or(defaults.pooled_qrels),
        drop_zero_rows: a.tables.drop_zero_rows().or(m.drop_zero_rows).unwrap_or(true),
        strict_coverage: a.tables.strict_coverage().or(m.strict_coverage).unwrap_or(false),
        ..defaults
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let dedup = a.tables.dedup().or(m.dedup).unwrap_or(true);
    let _lock = OutputLock::acquire(&a.output)?;
    let loaded = load_collections(&m, dedup)?;
    let mut warnings = loaded.warnings;
    let (run, w) = lowcost_experiment(&loaded.runs, &loaded.qrels, &m.split, &cfg)?.into_parts();
    warnings.extend(w);
    emit_warnings(&warnings);

    let mut rec = RunRecord::new("lowcost", a);
    rec.input(&a.manifest);
    rec.inputs(loaded.inputs);
    for (depth, by_collection) in &run.tables {
        for (id, t) in by_collection {
            let path = a.output.join("tables").join(format!("depth-{depth}")).join(format!("{id}.csv"));
            write_with(&path, |w| t.write_csv(w))?;
            rec.output(path);
        }
    }
    write_results(&a.output, &run.results, &mut rec)?;
    rec.note("split", &m.split);
    rec.note("config", &cfg);
    rec.note("dedup", dedup);
    rec.note("removed_runs", &loaded.removed_runs);
    rec.note("warnings", warnings.len());
    rec.write(&a.output.join("manifest.json"))
}

pub fn report_cmd(a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.results)
        .with_context(|| format!("reading {}", a.results.display()))?;
    let is_json = a.results.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('[');
    let results: Vec<SearchResult> = if is_json {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.results.display()))?
    } else {
        parse_results_csv(&text).with_context(|| format!("parsing {}", a.results.display()))?
    };
    let rendered = report(&results, a.format)?;
    match &a.output {
        None => {
            print!("{rendered}");
            Ok(())
        }
        Some(out) => {
            let _lock = OutputLock::acquire(&parent_dir(out))?;
            write_file(out, rendered.as_bytes())?;
            let mut rec = RunRecord::new("report", a);
            rec.input(&a.results);
            rec.output(out);
            rec.note("format", format!("{:?}", a.format).to_lowercase());
            rec.write(&manifest_for(out))
        }
    }
}
