//! Brute-force reference evaluator used to cross-check the library.
//!
//! Every measure is a direct transcription of its textbook definition,
//! written without any of the library's helpers: rankings are plain doc
//! id lists and judgments a plain map. Quadratic loops are intentional.
#![allow(dead_code)]

use std::collections::HashMap;

pub struct OracleTopic {
    pub ranking: Vec<String>,
    pub qrels: HashMap<String, i32>,
    pub g_max: i32,
}

impl OracleTopic {
    fn grade_at(&self, i: usize) -> Option<i32> {
        self.qrels.get(&self.ranking[i]).copied()
    }

    fn relevant_at(&self, i: usize) -> bool {
        matches!(self.grade_at(i), Some(g) if g > 0)
    }

    fn num_rel(&self) -> usize {
        self.qrels.values().filter(|g| **g > 0).count()
    }

    fn num_nonrel(&self) -> usize {
        self.qrels.values().filter(|g| **g <= 0).count()
    }

    fn depth(&self, k: usize) -> usize {
        if self.ranking.len() < k {
            self.ranking.len()
        } else {
            k
        }
    }

    fn rel_count_before(&self, end: usize) -> usize {
        let mut c = 0;
        for i in 0..end {
            if self.relevant_at(i) {
                c += 1;
            }
        }
        c
    }

    pub fn precision(&self, k: usize) -> f64 {
        self.rel_count_before(self.depth(k)) as f64 / k as f64
    }

    pub fn recall(&self, k: usize) -> f64 {
        self.rel_count_before(self.depth(k)) as f64 / self.num_rel() as f64
    }

    pub fn ap(&self, k: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..self.depth(k) {
            if self.relevant_at(i) {
                total += self.rel_count_before(i + 1) as f64 / (i + 1) as f64;
            }
        }
        total / self.num_rel() as f64
    }

    pub fn r_prec(&self, k: usize) -> f64 {
        let r = self.num_rel();
        let upto = self.depth(k).min(r);
        self.rel_count_before(upto) as f64 / r as f64
    }

    pub fn rr(&self, k: usize) -> f64 {
        for i in 0..self.depth(k) {
            if self.relevant_at(i) {
                return 1.0 / (i as f64 + 1.0);
            }
        }
        0.0
    }

    pub fn bpref(&self, k: usize) -> f64 {
        let r = self.num_rel();
        let bound = r.min(self.num_nonrel());
        let mut total = 0.0;
        for i in 0..self.depth(k) {
            if !self.relevant_at(i) {
                continue;
            }
            if bound == 0 {
                total += 1.0;
                continue;
            }
            let mut above = 0usize;
            for j in 0..i {
                if let Some(g) = self.grade_at(j) {
                    if g <= 0 {
                        above += 1;
                    }
                }
            }
            let capped = if above < bound { above } else { bound };
            total += 1.0 - capped as f64 / bound as f64;
        }
        total / r as f64
    }

    pub fn ndcg(&self, k: usize) -> f64 {
        let gain = |g: i32| if g > 0 { g as f64 } else { 0.0 };
        let mut dcg = 0.0;
        for i in 0..self.depth(k) {
            dcg += gain(self.grade_at(i).unwrap_or(0)) / ((i + 2) as f64).log2();
        }
        let mut ideal: Vec<f64> = self.qrels.values().map(|&g| gain(g)).collect();
        ideal.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut idcg = 0.0;
        for (i, g) in ideal.iter().enumerate().take(k) {
            idcg += g / ((i + 2) as f64).log2();
        }
        dcg / idcg
    }

    pub fn err(&self, k: usize) -> f64 {
        let prob = |i: usize| {
            let g = self.grade_at(i).unwrap_or(0).max(0);
            ((1u64 << g) as f64 - 1.0) / (1u64 << self.g_max) as f64
        };
        let mut total = 0.0;
        for r in 0..self.depth(k) {
            let mut reach = 1.0;
            for j in 0..r {
                reach *= 1.0 - prob(j);
            }
            total += reach * prob(r) / (r + 1) as f64;
        }
        total
    }

    pub fn rbp(&self, p: f64, d: usize) -> f64 {
        let mut total = 0.0;
        for i in 0..self.depth(d) {
            if self.relevant_at(i) {
                total += p.powi(i as i32);
            }
        }
        (1.0 - p) * total
    }

    pub fn inf_ap(&self, d: usize, eps: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.depth(d) {
            if !self.relevant_at(i) {
                continue;
            }
            let k = (i + 1) as f64;
            if i == 0 {
                total += 1.0;
                continue;
            }
            let mut rel = 0.0;
            let mut nonrel = 0.0;
            for j in 0..i {
                match self.grade_at(j) {
                    Some(g) if g > 0 => rel += 1.0,
                    Some(_) => nonrel += 1.0,
                    None => {}
                }
            }
            let judged = rel + nonrel;
            total += 1.0 / k
                + ((k - 1.0) / k) * (judged / (k - 1.0)) * ((rel + eps) / (rel + nonrel + 2.0 * eps));
        }
        total / self.num_rel() as f64
    }

    /// Value of a measure given by its canonical name.
    pub fn by_name(&self, name: &str) -> f64 {
        let (head, cut) = match name.split_once('@') {
            Some((h, c)) => (h, c.parse::<usize>().unwrap()),
            None => (name, 1000),
        };
        match head {
            "P" => self.precision(cut),
            "R" => self.recall(cut),
            "AP" => self.ap(cut),
            "nDCG" => self.ndcg(cut),
            "RR" => self.rr(cut),
            "R-Prec" => self.r_prec(cut),
            "bpref" => self.bpref(cut),
            "ERR" => self.err(cut),
            "infAP" => self.inf_ap(cut, 1e-5),
            _ if head.starts_with("RBP(") => {
                let p: f64 = head[4..head.len() - 1].parse().unwrap();
                self.rbp(p, cut)
            }
            _ => panic!("oracle has no measure {name}"),
        }
    }
}

/// Sorts (doc, score) pairs by descending score, then descending doc id.
pub fn oracle_order(mut docs: Vec<(String, f64)>) -> Vec<String> {
    let n = docs.len();
    // selection sort, independent of the library's comparator
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            let (a, b) = (&docs[j], &docs[best]);
            if a.1 > b.1 || (a.1 == b.1 && a.0 > b.0) {
                best = j;
            }
        }
        docs.swap(i, best);
    }
    docs.into_iter().map(|d| d.0).collect()
}

pub fn gmap(aps: &[f64]) -> f64 {
    let mut s = 0.0;
    for &a in aps {
        s += if a > 1e-5 { a } else { 1e-5 }.ln();
    }
    (s / aps.len() as f64).exp()
}

/// Kendall's tau-b by explicit enumeration of all pairs.
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                tx += 1;
                ty += 1;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    if n0 == tx || n0 == ty {
        return None;
    }
    Some((conc - disc) as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt())
}
