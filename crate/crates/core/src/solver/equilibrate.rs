use super::sparse::CscMatrix;
use crate::error::{Error, Result};

/// Maximum number of row/column scaling sweeps.
pub const MAX_SWEEPS: usize = 10;

/// `R A S` and `R b` with the diagonal scalings that produced them.
#[derive(Debug, Clone)]
pub struct EquilibratedSystem {
    pub original: CscMatrix,
    pub original_rhs: Vec<f64>,
    pub matrix: CscMatrix,
    pub rhs: Vec<f64>,
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    /// Every row and column maximum landed in `[½, 1]`.
    pub converged: bool,
    /// Unknowns to eliminate before the rest (see [`super::ordering`]).
    pub eliminate_first: Vec<bool>,
}

impl EquilibratedSystem {
    /// Maps a solution `y` of the scaled system to `x = S y`.
    pub fn unscale(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.col_scale).map(|(v, s)| v * s).collect()
    }

    /// Inverse of [`EquilibratedSystem::unscale`].
    pub fn scale(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.col_scale).map(|(v, s)| v / s).collect()
    }

    /// `R r` for a residual of the original system.
    pub fn scale_rhs(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect()
    }
}

/// `equilibrate`: alternating row and column infinity-norm scaling.
pub fn equilibrate(matrix: &CscMatrix, rhs: &[f64]) -> Result<EquilibratedSystem> {
    equilibrate_with_hint(matrix, rhs, vec![false; matrix.n_cols()])
}

pub fn equilibrate_with_hint(matrix: &CscMatrix, rhs: &[f64], eliminate_first: Vec<bool>) -> Result<EquilibratedSystem> {
    let (nr, nc) = (matrix.n_rows(), matrix.n_cols());
    if nr != nc || rhs.len() != nr {
        return Err(Error::InvalidParameter(format!(
            "expected a square system, got {nr}×{nc} with {} right-hand side entries",
            rhs.len()
        )));
    }
    if let Some(i) = matrix.row_max().iter().position(|&m| m == 0.0) {
        return Err(Error::StructurallyZero { kind: "row", index: i });
    }
    if let Some(j) = matrix.col_max().iter().position(|&m| m == 0.0) {
        return Err(Error::StructurallyZero { kind: "column", index: j });
    }
    let mut scaled = matrix.clone();
    let mut r = vec![1.0; nr];
    let mut s = vec![1.0; nc];
    let in_range = |m: &[f64]| m.iter().all(|&v| (0.5..=1.0 + 1e-12).contains(&v));
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let rm = scaled.row_max();
        for (ri, m) in r.iter_mut().zip(&rm) {
            *ri /= m;
        }
        rescale(matrix, &mut scaled, &r, &s);
        let cm = scaled.col_max();
        for (sj, m) in s.iter_mut().zip(&cm) {
            *sj /= m;
        }
        rescale(matrix, &mut scaled, &r, &s);
        if in_range(&scaled.row_max()) && in_range(&scaled.col_max()) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!("equilibration did not settle within {MAX_SWEEPS} sweeps");
    }
    let scaled_rhs = rhs.iter().zip(&r).map(|(b, ri)| b * ri).collect();
    Ok(EquilibratedSystem {
        original: matrix.clone(),
        original_rhs: rhs.to_vec(),
        matrix: scaled,
        rhs: scaled_rhs,
        row_scale: r,
        col_scale: s,
        converged,
        eliminate_first,
    })
}

/// `scaled = R A S`, recomputed from the original entries each time.
fn rescale(original: &CscMatrix, scaled: &mut CscMatrix, r: &[f64], s: &[f64]) {
    let col_ptr = original.col_ptr().to_vec();
    let rows = original.row_idx().to_vec();
    let vals = original.values();
    let out = scaled.values_mut();
    for c in 0..col_ptr.len() - 1 {
        for k in col_ptr[c]..col_ptr[c + 1] {
            out[k] = r[rows[k]] * vals[k] * s[c];
        }
    }
}
