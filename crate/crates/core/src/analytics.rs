//! Correlation statistics, least-squares models and held-out scoring.

use std::cmp::Ordering;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Measure, ScoreTable};
use crate::diagnostics::{Diagnosed, Warning, WarningKind};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: x.len(),
        });
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v.to_string()));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson product-moment correlation. Errors on a constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if is_constant(x) {
        return Err(Error::ConstantInput("x"));
    }
    if is_constant(y) {
        return Err(Error::ConstantInput("y"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Number of tied pairs within runs of equal values of a sorted slice.
fn tied_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], eq: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` and returns the number of inversions (pairs i < j with
/// v[i] > v[j]).
fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau-b, `(nc - nd) / sqrt((n0 - n1) * (n0 - n2))`, with exact
/// integer pair counts obtained in O(n log n) time.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let n1 = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let n3 = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = count_inversions(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys, |a, b| a == b);
    if n1 == n0 {
        return Err(Error::ConstantInput("x"));
    }
    if n2 == n0 {
        return Err(Error::ConstantInput("y"));
    }
    // concordant = n0 - n1 - n2 + n3 - discordant
    let diff = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * discordant as i64;
    let denom = (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    Ok(diff as f64 / denom)
}

/// Symmetric matrix of pairwise Pearson correlations between table columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<Measure>,
    /// `None` where a column is constant and the correlation is undefined.
    pub values: Vec<Vec<Option<f64>>>,
    pub n_samples: usize,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &Measure, b: &Measure) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.values[i][j]
    }

    fn cell(v: Option<f64>) -> String {
        v.map_or_else(String::new, |v| format!("{v:.6}"))
    }

    /// Square CSV with measure names on the first row and column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "metric")?;
        for l in &self.labels {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for (l, row) in self.labels.iter().zip(&self.values) {
            write!(out, "{l}")?;
            for v in row {
                write!(out, ",{}", Self::cell(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Long-form `metric_a,metric_b,rho` rows for heatmap plotting.
    pub fn write_long_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric_a,metric_b,rho")?;
        for (a, row) in self.labels.iter().zip(&self.values) {
            for (b, v) in self.labels.iter().zip(row) {
                writeln!(out, "{a},{b},{}", Self::cell(*v))?;
            }
        }
        Ok(())
    }
}

/// Pearson correlation between every pair of columns, over the rows that
/// have no missing cell. Constant columns get undefined entries and a
/// warning.
pub fn correlation_matrix(table: &ScoreTable) -> Result<Diagnosed<CorrelationMatrix>> {
    let labels = table.columns().to_vec();
    let cols = table.complete_columns(&labels)?;
    let n_samples = cols.first().map_or(0, Vec::len);
    if n_samples < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: n_samples,
        });
    }
    let constant: Vec<bool> = cols.iter().map(|c| is_constant(c)).collect();
    let k = labels.len();
    let upper: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let rhos: Vec<Option<f64>> = upper
        .par_iter()
        .map(|&(i, j)| {
            if constant[i] || constant[j] {
                None
            } else {
                pearson(&cols[i], &cols[j]).ok()
            }
        })
        .collect();
    let mut values = vec![vec![None; k]; k];
    for (i, row) in values.iter_mut().enumerate() {
        if !constant[i] {
            row[i] = Some(1.0);
        }
    }
    for (&(i, j), rho) in upper.iter().zip(rhos) {
        values[i][j] = rho;
        values[j][i] = rho;
    }
    let warnings = labels
        .iter()
        .zip(&constant)
        .filter(|(_, &c)| c)
        .map(|(l, _)| Warning {
            file: table.collection_id().to_string(),
            line: 0,
            kind: WarningKind::UndefinedCorrelation {
                measure: l.to_string(),
            },
        })
        .collect();
    Ok(Diagnosed::new(
        CorrelationMatrix {
            labels,
            values,
            n_samples,
        },
        warnings,
    ))
}

/// `target ≈ intercept + Σ coefficient · predictor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub target: Measure,
    pub predictors: Vec<Measure>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub n_train: usize,
    /// Set when the design matrix (with its constant column) is rank
    /// deficient and the minimum-norm solution was returned.
    pub collinear: bool,
}

impl LinearModel {
    /// Predicts from dense predictor columns (outer index = predictor).
    pub fn predict_columns(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        if columns.len() != self.coefficients.len() {
            return Err(Error::LengthMismatch(columns.len(), self.coefficients.len()));
        }
        let n = columns.first().map_or(0, Vec::len);
        Ok((0..n)
            .map(|i| {
                self.coefficients
                    .iter()
                    .zip(columns)
                    .fold(self.intercept, |acc, (c, col)| acc + c * col[i])
            })
            .collect())
    }
}

/// Least-squares coefficients with intercept, via SVD. Returns
/// `(intercept, coefficients, collinear)`.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<(f64, Vec<f64>, bool)> {
    let n = y.len();
    let p = columns.len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::LengthMismatch(c.len(), n));
    }
    if n < p + 1 {
        return Err(Error::TooFewSamples {
            needed: p + 1,
            got: n,
        });
    }
    if let Some(v) = columns.iter().flatten().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v.to_string()));
    }
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let svd = design.svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = RANK_TOLERANCE * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let beta = svd
        .solve(&DVector::from_column_slice(y), tol)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    if let Some(v) = beta.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v.to_string()));
    }
    Ok((beta[0], beta.iter().skip(1).copied().collect(), rank < p + 1))
}

/// Fits `target` on `predictors` over the table rows that have all of them.
pub fn fit_ols(table: &ScoreTable, target: &Measure, predictors: &[Measure]) -> Result<LinearModel> {
    let mut wanted = vec![*target];
    wanted.extend_from_slice(predictors);
    let mut cols = table.complete_columns(&wanted)?;
    let y = cols.remove(0);
    fit_columns(*target, predictors, &cols, &y)
}

/// [`fit_ols`] on dense columns.
pub fn fit_columns(
    target: Measure,
    predictors: &[Measure],
    columns: &[Vec<f64>],
    y: &[f64],
) -> Result<LinearModel> {
    let (intercept, coefficients, collinear) = least_squares(columns, y)?;
    Ok(LinearModel {
        target,
        predictors: predictors.to_vec(),
        coefficients,
        intercept,
        n_train: y.len(),
        collinear,
    })
}

/// Applies a model to every row of `table`, in row order. Predictions are
/// not clipped.
pub fn predict(model: &LinearModel, table: &ScoreTable) -> Result<Vec<f64>> {
    let mut cols = Vec::with_capacity(model.predictors.len());
    for m in &model.predictors {
        let col = table
            .column(m)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::InvalidTable(format!("missing {m} for row {}", table.row_keys()[i]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        cols.push(col);
    }
    if cols.is_empty() {
        return Ok(vec![model.intercept; table.n_rows()]);
    }
    model.predict_columns(&cols)
}

/// Agreement between true and predicted values on an evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitScore {
    pub tau: f64,
    /// Held-out coefficient of determination; negative when the model is
    /// worse than the evaluation set's own mean.
    pub r_squared: f64,
    pub n: usize,
}

pub fn score_fit(y_true: &[f64], y_pred: &[f64]) -> Result<FitScore> {
    check_pair(y_true, y_pred)?;
    if is_constant(y_true) {
        return Err(Error::ConstantInput("y_true"));
    }
    let m = mean(y_true);
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y_true.iter().map(|a| (a - m).powi(2)).sum();
    let tau = kendall_tau(y_true, y_pred)?;
    Ok(FitScore {
        tau,
        r_squared: 1.0 - ss_res / ss_tot,
        n: y_true.len(),
    })
}
