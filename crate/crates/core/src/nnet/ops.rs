use super::Tensor;
use crate::error::{Error, Result};

fn check_linear(x: &[f64], w: &Tensor, b: &Tensor) -> Result<()> {
    if w.shape().len() != 2 || w.cols() != x.len() || b.len() != w.rows() {
        return Err(Error::Shape(format!(
            "linear: W {:?}, x [{}], b {:?}",
            w.shape(),
            x.len(),
            b.shape()
        )));
    }
    Ok(())
}

/// `W·x + b` for `W: [k × d_in]`.
pub fn linear(x: &[f64], w: &Tensor, b: &Tensor) -> Result<Vec<f64>> {
    check_linear(x, w, b)?;
    Ok((0..w.rows())
        .map(|k| dot(w.row(k), x) + b.data()[k])
        .collect())
}

/// Accumulates `dW += dy ⊗ x`, `db += dy` and returns `dx = Wᵀ·dy`.
pub fn linear_backward(
    x: &[f64],
    w: &Tensor,
    dy: &[f64],
    dw: &mut Tensor,
    db: &mut Tensor,
) -> Vec<f64> {
    debug_assert_eq!(dy.len(), w.rows());
    let mut dx = vec![0.0; x.len()];
    for (k, &g) in dy.iter().enumerate() {
        db.data_mut()[k] += g;
        for (dwk, &xi) in dw.row_mut(k).iter_mut().zip(x) {
            *dwk += g * xi;
        }
        for (dxi, &wki) in dx.iter_mut().zip(w.row(k)) {
            *dxi += g * wki;
        }
    }
    dx
}

pub(crate) fn add_into(acc: &mut [f64], values: &[f64]) {
    for (a, v) in acc.iter_mut().zip(values) {
        *a += v;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of `softmax(logits)` against `target`, with its gradient
/// `softmax(logits) − onehot(target)`.
pub fn softmax_xent(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if logits.len() < 2 {
        return Err(Error::Shape(format!("softmax over {} classes", logits.len())));
    }
    if target >= logits.len() {
        return Err(Error::IndexOutOfRange {
            index: target,
            len: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = log_total - (logits[target] - max);
    let mut grad = softmax(logits);
    grad[target] -= 1.0;
    Ok((loss, grad))
}

/// Elementwise max over rows.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxPool {
    pub values: Vec<f64>,
    /// Winning row per dimension; ties go to the lowest row index.
    pub argmax: Vec<usize>,
    /// Best losing row per dimension and its distance to the winner;
    /// `None` for a single row.
    pub runner_up: Vec<Option<(usize, f64)>>,
}

impl MaxPool {
    /// Routes `grad` to the winning rows: `out[r] += grad[j]` for
    /// `r = argmax[j]`.
    pub fn backward(&self, grad: &[f64], rows: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; grad.len()]; rows];
        for (j, (&g, &r)) in grad.iter().zip(&self.argmax).enumerate() {
            out[r][j] += g;
        }
        out
    }
}

fn check_rows(rows: &[&[f64]]) -> Result<usize> {
    let d = rows
        .first()
        .ok_or_else(|| Error::Shape("pooling over no rows".into()))?
        .len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Shape("pooling over ragged rows".into()));
    }
    Ok(d)
}

pub fn max_pool(rows: &[&[f64]]) -> Result<MaxPool> {
    let d = check_rows(rows)?;
    let mut pool = MaxPool {
        values: Vec::with_capacity(d),
        argmax: Vec::with_capacity(d),
        runner_up: Vec::with_capacity(d),
    };
    for j in 0..d {
        let mut best = 0;
        for (r, row) in rows.iter().enumerate().skip(1) {
            if row[j] > rows[best][j] {
                best = r;
            }
        }
        let runner_up = rows
            .iter()
            .enumerate()
            .filter(|(r, _)| *r != best)
            .map(|(r, row)| (r, rows[best][j] - row[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        pool.values.push(rows[best][j]);
        pool.argmax.push(best);
        pool.runner_up.push(runner_up);
    }
    Ok(pool)
}

pub fn mean_pool(rows: &[&[f64]]) -> Result<Vec<f64>> {
    let d = check_rows(rows)?;
    let mut out = vec![0.0; d];
    for row in rows {
        for (o, x) in out.iter_mut().zip(*row) {
            *o += x;
        }
    }
    let n = rows.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}

pub fn embed_lookup(table: &Tensor, index: usize) -> Result<&[f64]> {
    if index >= table.rows() {
        return Err(Error::IndexOutOfRange {
            index,
            len: table.rows(),
        });
    }
    Ok(table.row(index))
}

/// Sparse backward of [`embed_lookup`]: adds `grad` to row `index`.
pub fn embed_accumulate(grad_table: &mut Tensor, index: usize, grad: &[f64]) {
    for (g, x) in grad_table.row_mut(index).iter_mut().zip(grad) {
        *g += x;
    }
}
