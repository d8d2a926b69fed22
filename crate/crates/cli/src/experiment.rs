//! Experiment manifest: where each collection's runs and judgments live,
//! the split, and defaults for the experiment commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use metriclab::datasets::Measure;
use metriclab::experiments::CollectionSplit;
use metriclab::trec_io::{dedup_runs, read_qrels_file, read_runs_path, JudgmentSet, RunSet};
use metriclab::Warning;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionPaths {
    pub runs_dir: PathBuf,
    pub qrels_path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub collections: BTreeMap<String, CollectionPaths>,
    #[serde(default)]
    pub split: CollectionSplit,
    #[serde(default)]
    pub targets: Option<Vec<Measure>>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub depths: Option<Vec<usize>>,
    #[serde(default)]
    pub pooled_qrels: Option<bool>,
    #[serde(default)]
    pub dedup: Option<bool>,
    #[serde(default)]
    pub drop_zero_rows: Option<bool>,
    #[serde(default)]
    pub strict_coverage: Option<bool>,
}

impl ExperimentManifest {
    /// Reads a manifest and resolves its paths against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: Self = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for c in m.collections.values_mut() {
            c.runs_dir = base.join(&c.runs_dir);
            c.qrels_path = base.join(&c.qrels_path);
        }
        m.split.validate()?;
        if let Some(missing) = m.split.collections().find(|id| !m.collections.contains_key(*id)) {
            bail!("split collection {missing} is not listed in the manifest");
        }
        Ok(m)
    }
}

pub struct Loaded {
    pub runs: BTreeMap<String, RunSet>,
    pub qrels: BTreeMap<String, JudgmentSet>,
    pub removed_runs: BTreeMap<String, Vec<String>>,
    pub inputs: Vec<PathBuf>,
    pub warnings: Vec<Warning>,
}

/// Reads the runs and judgments of every collection in the split.
pub fn load_collections(m: &ExperimentManifest, dedup: bool) -> Result<Loaded> {
    let ids: Vec<&str> = m.split.collections().collect();
    let parts: Vec<_> = ids
        .par_iter()
        .map(|&id| -> Result<_> {
            let paths = &m.collections[id];
            let (rs, mut w) = read_runs_path(&paths.runs_dir)
                .with_context(|| format!("collection {id}"))?
                .into_parts();
            let (js, wq) = read_qrels_file(&paths.qrels_path)
                .with_context(|| format!("collection {id}"))?
                .into_parts();
            w.extend(wq);
            let (rs, removed) = if dedup { dedup_runs(rs) } else { (rs, Vec::new()) };
            Ok((id.to_string(), rs, js, removed, w))
        })
        .collect::<Result<_>>()?;
    let mut out = Loaded {
        runs: BTreeMap::new(),
        qrels: BTreeMap::new(),
        removed_runs: BTreeMap::new(),
        inputs: Vec::new(),
        warnings: Vec::new(),
    };
    for (id, rs, js, removed, w) in parts {
        out.inputs.extend(rs.sources().iter().map(PathBuf::from));
        out.inputs.push(m.collections[&id].qrels_path.clone());
        if !removed.is_empty() {
            out.removed_runs.insert(id.clone(), removed);
        }
        out.runs.insert(id.clone(), rs);
        out.qrels.insert(id, js);
        out.warnings.extend(w);
    }
    Ok(out)
}
