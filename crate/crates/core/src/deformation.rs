//! Cheeger deformation tensors at a single point: P_t, C_t, the
//! reparametrised curvature κ_t, the correction term z_t, and the deformed
//! Ricci and scalar curvatures.
//!
//! Tangent vectors are written `X + U*` with `X` in horizontal coordinates and
//! `U` a Lie algebra vector supported on the complement of the isotropy. The
//! g_t metric is `g_t(v, w) = g(C_t v, w)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, CheegerError, Result};
use crate::group::{IsotropyRep, LieAlgebraData};
use crate::linalg::{self, RANK_TOL};

/// Symmetric operator P with `g(U*, V*) = Q(PU, V)`, zero on the isotropy.
#[derive(Debug, Clone)]
pub struct OrbitTensor {
    matrix: DMatrix<f64>,
    isotropy: Vec<usize>,
    /// Eigenvalues on the complement, ascending.
    eigenvalues: Vec<f64>,
    /// Matching Q-orthonormal eigenvectors in full Lie algebra coordinates.
    eigenvectors: DMatrix<f64>,
}

impl OrbitTensor {
    pub fn new(matrix: DMatrix<f64>, lie: &LieAlgebraData) -> Result<Self> {
        let n = lie.dim();
        check_dim("orbit tensor rows", n, matrix.nrows())?;
        check_dim("orbit tensor cols", n, matrix.ncols())?;
        let scale = matrix.amax().max(1.0);
        if (&matrix - matrix.transpose()).amax() > 1e-10 * scale {
            return Err(CheegerError::Input("orbit tensor is not symmetric".into()));
        }
        for &i in lie.isotropy_indices() {
            if matrix.row(i).amax() > 1e-10 * scale {
                return Err(CheegerError::Input(format!(
                    "orbit tensor does not vanish on isotropy index {i}"
                )));
            }
        }
        let m = lie.complement_indices();
        let block = matrix.select_rows(m).select_columns(m);
        let (eigenvalues, local) = if m.is_empty() {
            (Vec::new(), DMatrix::zeros(0, 0))
        } else {
            let eig = SymmetricEigen::new(block);
            let mut order: Vec<usize> = (0..m.len()).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
            let vecs = eig.eigenvectors.select_columns(&order);
            (vals, vecs)
        };
        if let Some(&lo) = eigenvalues.first() {
            if lo <= 1e-12 * scale {
                return Err(CheegerError::Input(
                    "orbit tensor is not positive definite on the orbit directions".into(),
                ));
            }
        }
        let mut eigenvectors = DMatrix::zeros(n, m.len());
        for (r, &i) in m.iter().enumerate() {
            for c in 0..m.len() {
                eigenvectors[(i, c)] = local[(r, c)];
            }
        }
        let mut matrix = matrix;
        matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(OrbitTensor {
            matrix,
            isotropy: lie.isotropy_indices().to_vec(),
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim_g(&self) -> usize {
        self.matrix.nrows()
    }

    /// Dimension of the orbit.
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn isotropy_indices(&self) -> &[usize] {
        &self.isotropy
    }

    /// `f(P)` on the orbit directions, `f0 * id` on the isotropy.
    fn spectral(&self, f: impl Fn(f64) -> f64, f0: f64) -> DMatrix<f64> {
        let n = self.dim_g();
        let mut out = DMatrix::zeros(n, n);
        for &i in &self.isotropy {
            out[(i, i)] = f0;
        }
        for (c, &lam) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvectors.column(c);
            out += v * v.transpose() * f(lam);
        }
        out
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(CheegerError::Input(format!(
            "deformation parameter must be a finite non-negative number, got {t}"
        )));
    }
    Ok(())
}

/// `P_t = P (1 + tP)^{-1}`.
pub fn p_t(p: &OrbitTensor, t: f64) -> Result<OrbitTensor> {
    check_t(t)?;
    let n = p.dim_g();
    let mut matrix = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(p.k());
    for (c, &lam) in p.eigenvalues.iter().enumerate() {
        let mu = lam / (1.0 + t * lam);
        let v = p.eigenvectors.column(c);
        matrix += v * v.transpose() * mu;
        eigenvalues.push(mu);
    }
    Ok(OrbitTensor {
        matrix,
        isotropy: p.isotropy.clone(),
        eigenvalues,
        eigenvectors: p.eigenvectors.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub horizontal: DVector<f64>,
    pub vertical: DVector<f64>,
}

impl TangentVector {
    pub fn new(horizontal: DVector<f64>, vertical: DVector<f64>) -> Self {
        TangentVector {
            horizontal,
            vertical,
        }
    }

    pub fn horizontal(x: DVector<f64>, dim_g: usize) -> Self {
        Self::new(x, DVector::zeros(dim_g))
    }

    pub fn vertical(u: DVector<f64>, dim_h: usize) -> Self {
        Self::new(DVector::zeros(dim_h), u)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(&self.horizontal * s, &self.vertical * s)
    }

    fn check(&self, p: &OrbitTensor, dim_h: usize) -> Result<()> {
        check_dim("horizontal part", dim_h, self.horizontal.len())?;
        check_dim("vertical generator", p.dim_g(), self.vertical.len())?;
        for &i in p.isotropy_indices() {
            if self.vertical[i].abs() > 1e-12 {
                return Err(CheegerError::Input(format!(
                    "vertical generator has a component on isotropy index {i}"
                )));
            }
        }
        Ok(())
    }
}

/// `C_t(X + U*) = X + ((1 + tP)^{-1} U)*`.
pub fn c_t_apply(p: &OrbitTensor, t: f64, v: &TangentVector) -> Result<TangentVector> {
    check_t(t)?;
    let m = p.spectral(|lam| 1.0 / (1.0 + t * lam), 0.0);
    Ok(TangentVector::new(v.horizontal.clone(), m * &v.vertical))
}

/// `C_t^{1/2}`.
pub fn c_t_sqrt_apply(p: &OrbitTensor, t: f64, v: &TangentVector) -> Result<TangentVector> {
    check_t(t)?;
    let m = p.spectral(|lam| (1.0 + t * lam).powf(-0.5), 0.0);
    Ok(TangentVector::new(v.horizontal.clone(), m * &v.vertical))
}

/// `C_t^{-1}`, the map sending a κ_t argument back to the g_t tangent vector.
pub fn c_t_inverse_apply(p: &OrbitTensor, t: f64, v: &TangentVector) -> Result<TangentVector> {
    check_t(t)?;
    Ok(TangentVector::new(
        v.horizontal.clone(),
        &v.vertical + p.matrix() * &v.vertical * t,
    ))
}

/// Data entering z_t for a pair of tangent vectors: the functional
/// `Z -> dw_Z(v, w)` and the bracket `[PU, PV]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZtInput {
    pub dw: DVector<f64>,
    pub bracket: DVector<f64>,
}

/// `z_t = 3t max_Z (dw_Z + (t/2) Q([PU,PV], Z))^2 / (t g(Z*,Z*) + |Z|^2)`,
/// evaluated as `3t c^T (tP + 1)^{-1} c`.
pub fn z_t(p: &OrbitTensor, input: &ZtInput, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let c = &input.dw + &input.bracket * (0.5 * t);
    let m = p.spectral(|lam| 1.0 / (1.0 + t * lam), 1.0);
    let q = c.dot(&(m * &c));
    3.0 * t * q.max(0.0)
}

/// The limit of `z_t` as `t -> inf` for a pair whose bracket vanishes:
/// `3 c^T P^{-1} c` on the orbit directions, infinite when `c` has an
/// isotropy component.
pub fn z_limit(p: &OrbitTensor, dw: &DVector<f64>) -> f64 {
    let iso: f64 = p.isotropy_indices().iter().map(|&i| dw[i] * dw[i]).sum();
    let scale = dw.amax().max(1.0);
    if iso.sqrt() > 1e-12 * scale {
        return f64::INFINITY;
    }
    let mut s = 0.0;
    for (c, &lam) in p.eigenvalues().iter().enumerate() {
        let proj = p.eigenvectors().column(c).dot(dw);
        s += proj * proj / lam;
    }
    3.0 * s
}

/// Pointwise data of a G-manifold at p, as consumed by the deformation
/// formulas.
pub trait CurvatureModel {
    fn lie(&self) -> &LieAlgebraData;
    fn orbit_tensor(&self) -> &OrbitTensor;
    fn dim_h(&self) -> usize;
    /// `R_g(a, b, c, d)`, with `R_g(v, w, w, v)` the unnormalised sectional
    /// curvature.
    fn riemann(&self, a: &TangentVector, b: &TangentVector, c: &TangentVector, d: &TangentVector)
        -> f64;
    /// The functional `Z -> dw_Z(v, w)` in Lie algebra coordinates.
    fn dw(&self, v: &TangentVector, w: &TangentVector) -> DVector<f64>;

    fn inner(&self, v: &TangentVector, w: &TangentVector) -> f64 {
        v.horizontal.dot(&w.horizontal)
            + (self.orbit_tensor().matrix() * &v.vertical).dot(&w.vertical)
    }
}

pub fn zt_input<M: CurvatureModel + ?Sized>(
    model: &M,
    v: &TangentVector,
    w: &TangentVector,
) -> ZtInput {
    let p = model.orbit_tensor().matrix();
    ZtInput {
        dw: model.dw(v, w),
        bracket: model.lie().bracket(&(p * &v.vertical), &(p * &w.vertical)),
    }
}

/// `κ_t(v, w) = R_g(v, w, w, v) + (t^3/4)|[PU, PV]|^2 + z_t(v, w)`.
pub fn kappa_t<M: CurvatureModel + ?Sized>(
    model: &M,
    v: &TangentVector,
    w: &TangentVector,
    t: f64,
) -> Result<f64> {
    check_t(t)?;
    let p = model.orbit_tensor();
    v.check(p, model.dim_h())?;
    w.check(p, model.dim_h())?;
    let input = zt_input(model, v, w);
    Ok(model.riemann(v, w, w, v)
        + 0.25 * t.powi(3) * input.bracket.norm_squared()
        + z_t(p, &input, t))
}

/// g-orthonormal basis whose first k vectors are `λ_i^{-1/2} v_i*` for the
/// eigenvectors `v_i` of P and whose remaining vectors are horizontal.
#[derive(Debug, Clone)]
pub struct AdaptedBasis {
    vectors: Vec<TangentVector>,
    /// Eigenvalue and unit eigenvector for each vertical element.
    vertical: Vec<(f64, DVector<f64>)>,
}

impl AdaptedBasis {
    /// Eigenvectors of P followed by the standard horizontal basis.
    pub fn standard<M: CurvatureModel + ?Sized>(model: &M) -> Self {
        let p = model.orbit_tensor();
        let (dim_h, dim_g) = (model.dim_h(), p.dim_g());
        let mut vectors = Vec::new();
        let mut vertical = Vec::new();
        for (c, &lam) in p.eigenvalues().iter().enumerate() {
            let v: DVector<f64> = p.eigenvectors().column(c).into();
            vectors.push(TangentVector::vertical(&v / lam.sqrt(), dim_h));
            vertical.push((lam, v));
        }
        for i in 0..dim_h {
            vectors.push(TangentVector::horizontal(linalg::unit(dim_h, i), dim_g));
        }
        AdaptedBasis { vectors, vertical }
    }

    /// Validates a caller-supplied basis: g-orthonormal to 1e-10, the first k
    /// vectors vertical with `P`-eigen generators, the rest horizontal.
    pub fn new<M: CurvatureModel + ?Sized>(model: &M, vectors: Vec<TangentVector>) -> Result<Self> {
        let p = model.orbit_tensor();
        let (k, dim_h) = (p.k(), model.dim_h());
        check_dim("adapted basis size", k + dim_h, vectors.len())?;
        for v in &vectors {
            v.check(p, dim_h)?;
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (model.inner(a, b) - expected).abs() > 1e-10 {
                    return Err(CheegerError::Input(format!(
                        "basis is not g-orthonormal at ({i}, {j})"
                    )));
                }
            }
        }
        let mut vertical = Vec::new();
        for (i, v) in vectors.iter().enumerate() {
            if i < k {
                if v.horizontal.amax() > 1e-10 {
                    return Err(CheegerError::Input(format!(
                        "basis vector {i} should be vertical"
                    )));
                }
                let u = &v.vertical;
                let pu = p.matrix() * u;
                let lam = pu.dot(u) / u.norm_squared();
                if (&pu - u * lam).amax() > 1e-10 * lam.max(1.0) {
                    return Err(CheegerError::Input(format!(
                        "basis vector {i} is not generated by an eigenvector of P"
                    )));
                }
                vertical.push((lam, u / u.norm()));
            } else if v.vertical.amax() > 1e-10 {
                return Err(CheegerError::Input(format!(
                    "basis vector {i} should be horizontal"
                )));
            }
        }
        Ok(AdaptedBasis { vectors, vertical })
    }

    pub fn vectors(&self) -> &[TangentVector] {
        &self.vectors
    }

    pub fn k(&self) -> usize {
        self.vertical.len()
    }
}

/// `Ric^H_g(v) = sum over horizontal basis vectors e of R(e, v, v, e)`.
pub fn ricci_horizontal<M: CurvatureModel + ?Sized>(model: &M, v: &TangentVector) -> f64 {
    let dim_g = model.orbit_tensor().dim_g();
    (0..model.dim_h())
        .map(|i| {
            let e = TangentVector::horizontal(linalg::unit(model.dim_h(), i), dim_g);
            model.riemann(&e, v, v, &e)
        })
        .sum()
}

/// `Ric_{g_t}(v, v)`, assembled term by term: horizontal Ricci of `C_t v`,
/// the z_t corrections, and the damped vertical curvature and bracket terms.
pub fn ricci_t<M: CurvatureModel + ?Sized>(
    model: &M,
    v: &TangentVector,
    t: f64,
    basis: &AdaptedBasis,
) -> Result<f64> {
    check_t(t)?;
    let p = model.orbit_tensor();
    v.check(p, model.dim_h())?;
    let cv = c_t_apply(p, t, v)?;
    let ptu = p.spectral(|lam| t * lam / (1.0 + t * lam), 0.0) * &v.vertical;
    let mut total = ricci_horizontal(model, &cv);
    for e in &basis.vectors {
        let half = c_t_sqrt_apply(p, t, e)?;
        total += z_t(p, &zt_input(model, &half, &cv), t);
    }
    for (i, (lam, vi)) in basis.vertical.iter().enumerate() {
        let e = &basis.vectors[i];
        let k0 = model.riemann(e, &cv, &cv, e);
        let br = model.lie().bracket(vi, &ptu).norm_squared();
        total += (k0 + 0.25 * lam * t * br) / (1.0 + t * lam);
    }
    Ok(total)
}

/// `Ric_{g_t}(v, v) = sum_i κ_t(C_t^{1/2} e_i, C_t v)`.
pub fn ricci_t_direct<M: CurvatureModel + ?Sized>(
    model: &M,
    v: &TangentVector,
    t: f64,
    basis: &AdaptedBasis,
) -> Result<f64> {
    let p = model.orbit_tensor();
    let cv = c_t_apply(p, t, v)?;
    let mut total = 0.0;
    for e in &basis.vectors {
        total += kappa_t(model, &c_t_sqrt_apply(p, t, e)?, &cv, t)?;
    }
    Ok(total)
}

/// `lim_{t -> inf} Ric_{g_t}(X + U*)`: horizontal Ricci of X, the limiting
/// z terms over the horizontal basis, and `(1/4) sum_j |[v_j, U]|^2` over a
/// Q-orthonormal basis of the orbit directions. Infinite when some limiting
/// z term diverges.
pub fn ricci_limit<M: CurvatureModel + ?Sized>(model: &M, v: &TangentVector) -> Result<f64> {
    let p = model.orbit_tensor();
    v.check(p, model.dim_h())?;
    let (dim_h, dim_g) = (model.dim_h(), p.dim_g());
    let x = TangentVector::horizontal(v.horizontal.clone(), dim_g);
    let mut total = ricci_horizontal(model, &x);
    for i in 0..dim_h {
        let e = TangentVector::horizontal(linalg::unit(dim_h, i), dim_g);
        total += z_limit(p, &model.dw(&e, &x));
    }
    for c in 0..p.k() {
        let vj: DVector<f64> = p.eigenvectors().column(c).into();
        total += 0.25 * model.lie().bracket(&vj, &v.vertical).norm_squared();
    }
    Ok(total)
}

/// `scal_{g_t} = sum_{i,j} κ_t(C_t^{1/2} e_i, C_t^{1/2} e_j)`.
pub fn scal_t<M: CurvatureModel + ?Sized>(model: &M, t: f64, basis: &AdaptedBasis) -> Result<f64> {
    let p = model.orbit_tensor();
    let half: Vec<TangentVector> = basis
        .vectors
        .iter()
        .map(|e| c_t_sqrt_apply(p, t, e))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..half.len() {
        for j in (i + 1)..half.len() {
            total += 2.0 * kappa_t(model, &half[i], &half[j], t)?;
        }
    }
    Ok(total)
}

/// Lower bound `3t |S̃_X Y_p|^4 / |Y_p|^2` for `z_t(X, Y)` at a singular
/// point, where `Y_p` is the fake horizontal preimage of the projection of Y
/// onto `S̃_X(g_p)`. Zero when that projection vanishes.
pub fn zt_lower_bound(rep: &IsotropyRep, x: &DVector<f64>, y: &DVector<f64>, t: f64) -> Result<f64> {
    check_t(t)?;
    check_dim("Y", rep.dim_h(), y.len())?;
    let s = rep.s_tilde(x)?;
    if s.ncols() == 0 || s.amax() == 0.0 {
        return Ok(0.0);
    }
    let y_p = linalg::pinv(&s, RANK_TOL) * y;
    let proj = &s * &y_p;
    let (num, den) = (proj.norm_squared(), y_p.norm_squared());
    if num <= 1e-24 * y.norm_squared().max(1e-300) || den == 0.0 {
        return Ok(0.0);
    }
    Ok(3.0 * t * num * num / den)
}
