//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Column `k` of the factorization is computed by a sparse triangular solve
//! with the columns of `L` found so far; the nonzero pattern of the result is
//! the set of rows reachable from the column's pattern in the graph of `L`.

use super::sparse::CscMatrix;
use crate::error::{Error, Result};

/// Pivot threshold: a diagonal candidate is accepted if it is at least this
/// fraction of the largest candidate in its column.
pub const PIVOT_THRESHOLD: f64 = 0.1;

/// Pivots smaller than this fraction of the column's largest entry count as zero.
pub const SINGULAR_TOLERANCE: f64 = 1e-14;

const NONE: usize = usize::MAX;

/// `P A Q = L U` with unit lower triangular `L`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    /// Elimination order of columns.
    col_order: Vec<usize>,
    /// Original row chosen as pivot at each step.
    pivot_row: Vec<usize>,
    /// Strict lower part per step: (original row, multiplier).
    l_ptr: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    /// Strict upper part per step: (earlier step, value).
    u_ptr: Vec<usize>,
    u_step: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
}

impl LuFactors {
    /// Factors `a` eliminating columns in `col_order`. When the diagonal
    /// entry of a column is an acceptable pivot it is preferred, which keeps
    /// the symmetric fill pattern of the chosen order.
    pub fn factor(a: &CscMatrix, col_order: &[usize]) -> Result<Self> {
        let n = a.n_cols();
        if a.n_rows() != n || col_order.len() != n {
            return Err(Error::InvalidParameter("LU needs a square matrix and a full column order".into()));
        }
        let mut f = Self {
            n,
            col_order: col_order.to_vec(),
            pivot_row: Vec::with_capacity(n),
            l_ptr: vec![0],
            l_row: Vec::new(),
            l_val: Vec::new(),
            u_ptr: vec![0],
            u_step: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(n),
        };
        // step at which each original row became pivotal
        let mut pinv = vec![NONE; n];
        let mut x = vec![0.0; n];
        let mut mark = vec![NONE; n];
        let mut reach: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut pattern: Vec<usize> = Vec::new();

        for (k, &col) in col_order.iter().enumerate() {
            let (rows, vals) = a.col(col);
            // pattern of the solve: topological order via depth-first search
            reach.clear();
            pattern.clear();
            for &r in rows {
                if mark[r] == k {
                    continue;
                }
                mark[r] = k;
                stack.push((r, 0));
                while let Some(top) = stack.last_mut() {
                    let (v, next) = *top;
                    let step = pinv[v];
                    let children: &[usize] = if step == NONE {
                        &[]
                    } else {
                        &f.l_row[f.l_ptr[step]..f.l_ptr[step + 1]]
                    };
                    if let Some(&u) = children.get(next) {
                        top.1 += 1;
                        if mark[u] != k {
                            mark[u] = k;
                            stack.push((u, 0));
                        }
                    } else {
                        stack.pop();
                        reach.push(v);
                    }
                }
            }
            for (&r, &v) in rows.iter().zip(vals) {
                x[r] = v;
            }
            let col_scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            // reverse postorder is a topological order of the dependencies
            for &v in reach.iter().rev() {
                let step = pinv[v];
                if step == NONE {
                    pattern.push(v);
                    continue;
                }
                let xv = x[v];
                if xv != 0.0 {
                    for t in f.l_ptr[step]..f.l_ptr[step + 1] {
                        x[f.l_row[t]] -= f.l_val[t] * xv;
                    }
                }
                f.u_step.push(step);
                f.u_val.push(xv);
                x[v] = 0.0;
            }
            f.u_ptr.push(f.u_step.len());

            let (mut best, mut best_abs) = (NONE, 0.0f64);
            for &r in &pattern {
                let v = x[r].abs();
                if v > best_abs || (v == best_abs && best != NONE && r < best) {
                    best = r;
                    best_abs = v;
                }
            }
            if best == NONE || !(best_abs > SINGULAR_TOLERANCE * col_scale) {
                return Err(Error::Singular { pivot: k });
            }
            if pinv[col] == NONE && mark[col] == k && x[col].abs() >= PIVOT_THRESHOLD * best_abs {
                best = col;
            }
            let piv = x[best];
            pinv[best] = k;
            f.pivot_row.push(best);
            f.u_diag.push(piv);
            for &r in &pattern {
                if r != best && x[r] != 0.0 {
                    f.l_row.push(r);
                    f.l_val.push(x[r] / piv);
                }
                x[r] = 0.0;
            }
            f.l_ptr.push(f.l_row.len());
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzeros stored in `L` and `U`, diagonal included.
    pub fn nnz(&self) -> usize {
        self.l_val.len() + self.u_val.len() + self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        let mut z = vec![0.0; self.n];
        for k in 0..self.n {
            let zk = y[self.pivot_row[k]];
            z[k] = zk;
            if zk != 0.0 {
                for t in self.l_ptr[k]..self.l_ptr[k + 1] {
                    y[self.l_row[t]] -= self.l_val[t] * zk;
                }
            }
        }
        for k in (0..self.n).rev() {
            let zk = z[k] / self.u_diag[k];
            z[k] = zk;
            if zk != 0.0 {
                for t in self.u_ptr[k]..self.u_ptr[k + 1] {
                    z[self.u_step[t]] -= self.u_val[t] * zk;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for (k, &c) in self.col_order.iter().enumerate() {
            x[c] = z[k];
        }
        x
    }
}
