#![allow(dead_code)]

pub mod oracle;

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use oracle::{oracle_order, OracleTopic};

/// One synthetic topic: its judgments and one run's scored documents.
pub struct SynthTopic {
    pub id: String,
    pub qrels: HashMap<String, i32>,
    pub docs: Vec<(String, f64)>,
}

/// Random topic with a run of at most `max_len` docs, grades in
/// `-2..=top_grade` and a judged fraction in [0.3, 1.0]. Always has at
/// least one relevant document.
pub fn random_topic(rng: &mut StdRng, id: &str, max_len: usize, top_grade: i32) -> SynthTopic {
    loop {
        let len = rng.gen_range(0..=max_len);
        let pool = len + rng.gen_range(1..=50);
        let judged_frac = rng.gen_range(0.3..=1.0);
        let rel_rate = rng.gen_range(0.02..0.5);
        let mut qrels = HashMap::new();
        for d in 0..pool {
            if rng.gen_bool(judged_frac) {
                let g = if rng.gen_bool(rel_rate) {
                    rng.gen_range(1..=top_grade)
                } else {
                    rng.gen_range(-2..=0)
                };
                qrels.insert(format!("D{d:04}"), g);
            }
        }
        if !qrels.values().any(|&g| g > 0) {
            continue;
        }
        let mut ids: Vec<usize> = (0..pool).collect();
        ids.shuffle(rng);
        // coarse scores so ties occur
        let docs = ids[..len]
            .iter()
            .map(|&d| (format!("D{d:04}"), rng.gen_range(0..200) as f64 / 8.0))
            .collect();
        return SynthTopic {
            id: id.to_string(),
            qrels,
            docs,
        };
    }
}

pub fn qrels_text(topics: &[SynthTopic]) -> String {
    let mut s = String::new();
    for t in topics {
        let mut q: Vec<_> = t.qrels.iter().collect();
        q.sort();
        for (d, g) in q {
            let _ = writeln!(s, "{} 0 {} {}", t.id, d, g);
        }
    }
    s
}

pub fn run_text(topics: &[SynthTopic], tag: &str) -> String {
    let mut s = String::new();
    for t in topics {
        for (i, (d, score)) in t.docs.iter().enumerate() {
            let _ = writeln!(s, "{} Q0 {} {} {} {}", t.id, d, i + 1, score, tag);
        }
    }
    s
}

pub fn oracle_topic(t: &SynthTopic, g_max: i32) -> OracleTopic {
    OracleTopic {
        ranking: oracle_order(t.docs.clone()),
        qrels: t.qrels.clone(),
        g_max,
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Qrels and runs text for a synthetic collection. Each system has a
/// quality level; better systems push relevant documents up. Every topic
/// has between 1 and `max_rel` relevant documents and every run lists
/// `run_len` documents per topic.
pub fn random_collection(
    rng: &mut StdRng,
    n_systems: usize,
    n_topics: usize,
    run_len: usize,
    max_rel: usize,
) -> (String, String) {
    let pool = run_len * 3;
    let mut qrels = String::new();
    let mut grades: Vec<Vec<i32>> = Vec::new();
    for t in 0..n_topics {
        let n_rel = rng.gen_range(1..=max_rel);
        let mut g = vec![0; pool];
        let mut ids: Vec<usize> = (0..pool).collect();
        ids.shuffle(rng);
        for &d in &ids[..n_rel] {
            g[d] = rng.gen_range(1..=3);
        }
        for (d, &grade) in g.iter().enumerate() {
            if grade > 0 || rng.gen_bool(0.6) {
                let _ = writeln!(qrels, "T{t:03} 0 D{d:04} {grade}");
            }
        }
        grades.push(g);
    }
    let mut runs = String::new();
    for s in 0..n_systems {
        let quality = rng.gen_range(0.0..3.0);
        for (t, g) in grades.iter().enumerate() {
            let mut scored: Vec<(usize, f64)> = (0..pool)
                .map(|d| (d, quality * g[d] as f64 + rng.gen_range(0.0..2.0)))
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1));
            for (rank, (d, score)) in scored.into_iter().take(run_len).enumerate() {
                let _ = writeln!(runs, "T{t:03} Q0 D{d:04} {} {score} sys{s:02}", rank + 1);
            }
        }
    }
    (qrels, runs)
}

/// System-wise tables over the 12 system-wise measures where column
/// `target` equals `intercept + Σ w·column` exactly. Other columns are
/// uniform noise.
pub fn planted_tables(
    rng: &mut StdRng,
    ids: &[&str],
    n_systems: usize,
    target: usize,
    planted: &[(usize, f64)],
    intercept: f64,
) -> std::collections::BTreeMap<String, metriclab::datasets::ScoreTable> {
    use metriclab::datasets::{system_wise_panel, RowKey, ScoreTable, TableKind};
    let columns = system_wise_panel();
    ids.iter()
        .map(|&id| {
            let mut values = Vec::new();
            for _ in 0..n_systems {
                let mut row: Vec<f64> = (0..columns.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
                row[target] = intercept + planted.iter().map(|&(j, w)| w * row[j]).sum::<f64>();
                values.extend(row.into_iter().map(Some));
            }
            let keys = (0..n_systems).map(|s| RowKey::system(format!("sys{s:02}"))).collect();
            let table = ScoreTable::new(TableKind::SystemWise, id, keys, columns.clone(), values).unwrap();
            (id.to_string(), table)
        })
        .collect()
}
