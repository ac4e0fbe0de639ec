//! Small dense helpers on top of nalgebra: ranks, kernels, orthogonal
//! complements and pseudo-inverses with relative singular-value cut-offs.

use nalgebra::{DMatrix, DVector};

/// Default relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Singular values and right singular vectors (as columns), sorted by
/// decreasing singular value. Rows are zero-padded so that every right
/// singular vector of the column space is returned.
fn sorted_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.ncols();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let m = a.nrows().max(n);
    let mut padded = DMatrix::zeros(m, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        v.set_column(col, &v_t.row(i).transpose());
    }
    (values, v)
}

fn cutoff(values: &[f64], rel_tol: f64, floor: f64) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    (rel_tol * max).max(floor)
}

/// Numerical rank with a relative threshold. The zero matrix has rank 0.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    rank_with_floor(a, rel_tol, 0.0)
}

/// Rank counting singular values above both `rel_tol * σ_max` and `floor`.
/// The floor keeps a matrix that is zero up to rounding at rank 0.
pub fn rank_with_floor(a: &DMatrix<f64>, rel_tol: f64, floor: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let (values, _) = sorted_svd(a);
    let max = values.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    let cut = cutoff(&values, rel_tol, floor);
    values.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis (columns) of the kernel of `a`.
pub fn kernel(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    kernel_with_floor(a, rel_tol, 0.0)
}

pub fn kernel_with_floor(a: &DMatrix<f64>, rel_tol: f64, floor: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 || a.iter().all(|x| *x == 0.0) {
        return DMatrix::identity(n, n);
    }
    let (values, v) = sorted_svd(a);
    let cut = cutoff(&values, rel_tol, floor);
    let r = values.iter().filter(|&&s| s > cut).count();
    v.columns(r, n - r).into_owned()
}

/// Orthonormal basis of the column space of `a`.
pub fn range(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let m = a.nrows();
    if a.ncols() == 0 || a.iter().all(|x| *x == 0.0) {
        return DMatrix::zeros(m, 0);
    }
    // Left singular vectors of `a` are right singular vectors of `a^T`.
    let (values, u) = sorted_svd(&a.transpose());
    let cut = cutoff(&values, rel_tol, 0.0);
    let r = values.iter().filter(|&&s| s > cut).count();
    u.columns(0, r).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the column space of `a`.
pub fn complement(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    kernel(&a.transpose(), rel_tol)
}

pub fn complement_with_floor(a: &DMatrix<f64>, rel_tol: f64, floor: f64) -> DMatrix<f64> {
    kernel_with_floor(&a.transpose(), rel_tol, floor)
}

/// Moore-Penrose pseudo-inverse with a relative cut-off.
pub fn pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let max = svd.singular_values.max();
    let eps = if max == 0.0 { 1.0 } else { rel_tol * max };
    svd.pseudo_inverse(eps).expect("non-negative eps")
}

/// Largest absolute deviation of the columns of `b` from orthonormality.
pub fn orthonormality_defect(b: &DMatrix<f64>) -> f64 {
    let gram = b.transpose() * b;
    let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    (gram - eye).amax()
}

/// Orthogonal projector onto the span of the orthonormal columns of `b`.
pub fn projector(b: &DMatrix<f64>) -> DMatrix<f64> {
    b * b.transpose()
}

pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_kernel_of_rank_one() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(rank(&a, RANK_TOL), 1);
        let k = kernel(&a, RANK_TOL);
        assert_eq!(k.ncols(), 2);
        assert!((&a * &k).amax() < 1e-12);
        assert!(orthonormality_defect(&k) < 1e-12);
    }

    #[test]
    fn zero_matrix_conventions() {
        let z = DMatrix::<f64>::zeros(3, 4);
        assert_eq!(rank(&z, RANK_TOL), 0);
        assert_eq!(kernel(&z, RANK_TOL).ncols(), 4);
        assert_eq!(range(&z, RANK_TOL).ncols(), 0);
        assert_eq!(complement(&z, RANK_TOL).ncols(), 3);
    }

    #[test]
    fn range_and_complement_split_space() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        let r = range(&a, RANK_TOL);
        let c = complement(&a, RANK_TOL);
        assert_eq!(r.ncols() + c.ncols(), 3);
        assert!((r.transpose() * &c).amax() < 1e-12);
    }
}
