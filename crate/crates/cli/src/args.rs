use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use metriclab::datasets::{parse_measure_list, system_wise_panel, Measure};
use metriclab::experiments::ReportFormat;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "metriclab", version, about = "Evaluate TREC runs and predict one IR metric from others")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score runs against judgments and write a topic-wise or system-wise table.
    Eval(EvalArgs),
    /// Pearson correlation matrices between the columns of score tables.
    Correlate(CorrelateArgs),
    /// Fit a linear model on system-wise tables.
    Fit(FitArgs),
    /// Apply a fitted model to a score table.
    Predict(PredictArgs),
    /// Best-subset prediction over the system-wise measure panel.
    Search(SearchArgs),
    /// Predict high-cost measures from low-cost measures at shallow depths.
    Lowcost(LowcostArgs),
    /// Convert a results file to csv, json or markdown.
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Correlate(_) => "correlate",
            Command::Fit(_) => "fit",
            Command::Predict(_) => "predict",
            Command::Search(_) => "search",
            Command::Lowcost(_) => "lowcost",
            Command::Report(_) => "report",
        }
    }
}

/// Comma-separated measure names, with `tw-panel` and `sw-panel` aliases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureList(pub Vec<Measure>);

impl FromStr for MeasureList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_measure_list(s).map(MeasureList).map_err(|e| e.to_string())
    }
}

impl Serialize for MeasureList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(ToString::to_string))
    }
}

/// `all` or a measure list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Targets {
    All,
    List(Vec<Measure>),
}

impl Targets {
    pub fn resolve(&self, all: impl FnOnce() -> Vec<Measure>) -> Vec<Measure> {
        match self {
            Targets::All => all(),
            Targets::List(v) => v.clone(),
        }
    }
}

impl FromStr for Targets {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("all") {
            Ok(Targets::All)
        } else {
            Ok(Targets::List(s.parse::<MeasureList>()?.0))
        }
    }
}

impl Serialize for Targets {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Targets::All => s.serialize_str("all"),
            Targets::List(v) => MeasureList(v.clone()).serialize(s),
        }
    }
}

pub const MAX_SUBSET: usize = 3;

/// A subset size `k` or an inclusive range `a..b`, each within 1..=3.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SubsetSizes(pub Vec<usize>);

impl FromStr for SubsetSizes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{t}` is not a subset size"))
        };
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
            None => (num(s)?, num(s)?),
        };
        if lo == 0 || hi > MAX_SUBSET || lo > hi {
            return Err(format!("subset sizes must lie in 1..{MAX_SUBSET}, got `{s}`"));
        }
        Ok(SubsetSizes((lo..=hi).collect()))
    }
}

pub fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: metriclab::Error| e.to_string())
}

fn positive(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("`{s}` is not a positive depth")),
        Ok(d) => Ok(d),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Run file or directory of run files.
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Measures to compute. Defaults to tw-panel with --per-topic, sw-panel otherwise.
    #[arg(long)]
    pub metrics: Option<MeasureList>,
    /// Write one row per (system, topic) instead of per system.
    #[arg(long)]
    pub per_topic: bool,
    /// Output CSV file.
    #[arg(long)]
    pub output: PathBuf,
    /// Collection id recorded in the manifest. Defaults to the qrels file stem.
    #[arg(long)]
    pub collection: Option<String>,
    /// Drop runs whose rankings duplicate another run.
    #[arg(long)]
    pub dedup: bool,
    /// Keep systems scoring zero on every measure.
    #[arg(long)]
    pub keep_zero_rows: bool,
    /// Drop systems missing any scoreable topic.
    #[arg(long)]
    pub strict_coverage: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    /// Score table CSV files; each file is one collection.
    #[arg(long, num_args = 1.., required = true)]
    pub tables: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write one matrix per input table.
    #[arg(long)]
    pub per_collection: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// System-wise training tables, stacked before fitting.
    #[arg(long, num_args = 1.., required = true)]
    pub tables: Vec<PathBuf>,
    #[arg(long)]
    pub target: Measure,
    #[arg(long)]
    pub predictors: MeasureList,
    /// Output model JSON file.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub table: PathBuf,
    /// Output CSV file.
    #[arg(long)]
    pub output: PathBuf,
}

/// Table-building switches shared by the experiment commands. Each one
/// overrides the corresponding manifest field.
#[derive(Debug, Args, Serialize)]
pub struct TableFlags {
    #[arg(long, overrides_with = "no_dedup")]
    pub dedup: bool,
    #[arg(long)]
    pub no_dedup: bool,
    #[arg(long, overrides_with = "drop_zero_rows")]
    pub keep_zero_rows: bool,
    #[arg(long)]
    pub drop_zero_rows: bool,
    #[arg(long)]
    pub strict_coverage: bool,
}

impl TableFlags {
    fn tri(on: bool, off: bool) -> Option<bool> {
        match (on, off) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }

    pub fn dedup(&self) -> Option<bool> {
        Self::tri(self.dedup, self.no_dedup)
    }

    pub fn drop_zero_rows(&self) -> Option<bool> {
        Self::tri(self.drop_zero_rows, self.keep_zero_rows)
    }

    pub fn strict_coverage(&self) -> Option<bool> {
        self.strict_coverage.then_some(true)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Target measure(s), or `all` for the 12-measure system-wise panel.
    #[arg(long)]
    pub target: Option<Targets>,
    /// Subset size, or a range such as `1..3`.
    #[arg(long)]
    pub n: Option<SubsetSizes>,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tables: TableFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct LowcostArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// High-cost target measure(s), or `all` for the default eight.
    #[arg(long)]
    pub target: Option<Targets>,
    /// Comma-separated evaluation depths.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    pub depths: Option<Vec<usize>>,
    /// Judge only documents pooled at each depth (default).
    #[arg(long, overrides_with = "full_qrels")]
    pub pooled_qrels: bool,
    /// Keep the full judgments at every depth; only truncate runs.
    #[arg(long)]
    pub full_qrels: bool,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tables: TableFlags,
}

impl LowcostArgs {
    pub fn pooled(&self) -> Option<bool> {
        TableFlags::tri(self.pooled_qrels, self.full_qrels)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// results.csv or results.json from `search` or `lowcost`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, value_parser = parse_format, default_value = "markdown")]
    #[serde(skip)]
    pub format: ReportFormat,
    /// Output file. Prints to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn default_targets() -> Vec<Measure> {
    system_wise_panel()
}
