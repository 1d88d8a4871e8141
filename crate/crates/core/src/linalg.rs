//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Submatrices whose singular-value ratio exceeds this are treated as singular.
pub(crate) const MAX_CONDITION: f64 = 1e12;

pub(crate) fn matrix_from_rows(rows: &[&[f64]], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Solves a square system, returning `None` when the condition estimate
/// exceeds [`MAX_CONDITION`].
pub(crate) fn solve_square(a: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    debug_assert!(a.is_square());
    if a.nrows() == 0 {
        return Some(DVector::zeros(0));
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin * MAX_CONDITION < smax {
        return None;
    }
    svd.solve(rhs, 0.0).ok()
}

/// `true` when the rows are linearly independent (condition below [`MAX_CONDITION`]).
pub(crate) fn full_row_rank(a: &DMatrix<f64>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    if a.nrows() > a.ncols() {
        return false;
    }
    let s = a.clone().svd(false, false).singular_values;
    let smax = s.max();
    smax > 0.0 && s.min() * MAX_CONDITION >= smax
}

/// Orthonormal basis (as rows) of the null space of `a`, relative tolerance `rtol`.
pub(crate) fn null_space(a: &DMatrix<f64>, rtol: f64) -> Vec<Vec<f64>> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    // pad to at least n rows so V^T from the SVD is n x n
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.max();
    let cutoff = rtol * smax.max(1.0);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cutoff)
        .map(|(k, _)| v_t.row(k).iter().copied().collect())
        .collect()
}

/// Greedy maximal linearly independent subset of `rows`, in input order.
pub(crate) fn independent_subset(rows: &[&[f64]], ncols: usize) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..rows.len() {
        let mut trial: Vec<&[f64]> = kept.iter().map(|&k| rows[k]).collect();
        trial.push(rows[i]);
        if full_row_rank(&matrix_from_rows(&trial, ncols)) {
            kept.push(i);
        }
    }
    kept
}

/// Orthonormal basis of the orthogonal complement of a nonzero vector.
pub(crate) fn orthogonal_complement(x: &[f64]) -> Vec<Vec<f64>> {
    let a = DMatrix::from_row_slice(1, x.len(), x);
    null_space(&a, 1e-12)
}
