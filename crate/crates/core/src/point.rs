//! Frame data of a G-manifold at a point: a (4,0) curvature tensor, the
//! action fields and their covariant derivatives, all in a g-orthonormal
//! frame of T_pM.

use nalgebra::{DMatrix, DVector};

use crate::deformation::{CurvatureModel, OrbitTensor, TangentVector};
use crate::error::{check_dim, CheegerError, Result};
use crate::group::{IsotropyRep, LieAlgebraData};
use crate::linalg::{self, RANK_TOL};

/// Dense (4,0) tensor `R(e_a, e_b, e_c, e_d)` in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor {
    n: usize,
    data: Vec<f64>,
}

impl RiemannTensor {
    pub fn zeros(n: usize) -> Self {
        RiemannTensor {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut r = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let i = r.idx(a, b, c, d);
                        r.data[i] = f(a, b, c, d);
                    }
                }
            }
        }
        r
    }

    /// Constant sectional curvature `k`.
    pub fn constant_curvature(n: usize, k: f64) -> Self {
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        Self::from_fn(n, |a, b, c, d| k * (delta(a, d) * delta(b, c) - delta(a, c) * delta(b, d)))
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &RiemannTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn evaluate(&self, a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>, d: &DVector<f64>) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                let ab = a[i] * b[j];
                for k in 0..n {
                    if c[k] == 0.0 {
                        continue;
                    }
                    let abc = ab * c[k];
                    let base = self.idx(i, j, k, 0);
                    for l in 0..n {
                        s += abc * self.data[base + l] * d[l];
                    }
                }
            }
        }
        s
    }

    /// Expresses the tensor in the frame given by the columns of `o`:
    /// `R'(i,j,k,l) = R(o e_i, o e_j, o e_k, o e_l)`.
    pub fn change_frame(&self, o: &DMatrix<f64>) -> Self {
        let n = self.n;
        let cols: Vec<DVector<f64>> = (0..o.ncols()).map(|i| o.column(i).into()).collect();
        let m = cols.len();
        let mut out = Self::zeros(m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let v = self.evaluate(&cols[a], &cols[b], &cols[c], &cols[d]);
                        out.set(a, b, c, d, v);
                    }
                }
            }
        }
        debug_assert_eq!(o.nrows(), n);
        out
    }

    /// Largest violation of the algebraic curvature identities.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        worst = worst
                            .max((r + self.get(b, a, c, d)).abs())
                            .max((r + self.get(a, b, d, c)).abs())
                            .max((r - self.get(c, d, a, b)).abs())
                            .max((r + self.get(b, c, a, d) + self.get(c, a, b, d)).abs());
                    }
                }
            }
        }
        worst
    }

    /// The operator `R_X = R(., X)X` as a symmetric matrix.
    pub fn jacobi_operator(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| {
            self.evaluate(&linalg::unit(n, i), x, x, &linalg::unit(n, j))
        })
    }
}

/// Point data in a g-orthonormal frame of T_pM of dimension n.
#[derive(Debug, Clone)]
pub struct PointData {
    lie: LieAlgebraData,
    /// Column i is `v_i*(p)`.
    action: DMatrix<f64>,
    /// Orthonormal basis of the horizontal space.
    horizontal: DMatrix<f64>,
    riemann: RiemannTensor,
    /// `nabla[i][(a, b)] = g(∇_{e_a} v_i*, e_b)`.
    nabla: Vec<DMatrix<f64>>,
    orbit: OrbitTensor,
}

impl PointData {
    /// The horizontal space is the orthogonal complement of the action
    /// fields; its basis defaults to the one from [`linalg::complement`] and
    /// can be replaced with [`PointData::with_horizontal_basis`].
    pub fn new(
        lie: LieAlgebraData,
        action: DMatrix<f64>,
        riemann: RiemannTensor,
        nabla: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = riemann.dim();
        check_dim("action field rows", n, action.nrows())?;
        check_dim("action field columns", lie.dim(), action.ncols())?;
        check_dim("covariant derivatives", lie.dim(), nabla.len())?;
        for d in &nabla {
            check_dim("covariant derivative rows", n, d.nrows())?;
            check_dim("covariant derivative cols", n, d.ncols())?;
        }
        for &i in lie.isotropy_indices() {
            if action.column(i).amax() > 1e-10 {
                return Err(CheegerError::Input(format!(
                    "isotropy generator {i} has a nonzero action field at the point"
                )));
            }
        }
        let scale = riemann.max_abs().max(1.0);
        if riemann.symmetry_defect() > 1e-8 * scale {
            return Err(CheegerError::Input(
                "curvature tensor violates the algebraic curvature identities".into(),
            ));
        }
        let orbit = OrbitTensor::new(action.transpose() * &action, &lie)?;
        let horizontal = linalg::complement(&action, RANK_TOL);
        Ok(PointData {
            lie,
            action,
            horizontal,
            riemann,
            nabla,
            orbit,
        })
    }

    pub fn with_horizontal_basis(mut self, basis: DMatrix<f64>) -> Result<Self> {
        check_dim("horizontal basis rows", self.riemann.dim(), basis.nrows())?;
        check_dim("horizontal basis cols", self.horizontal.ncols(), basis.ncols())?;
        if linalg::orthonormality_defect(&basis) > 1e-10 || (self.action.transpose() * &basis).amax() > 1e-10 {
            return Err(CheegerError::Input(
                "horizontal basis is not an orthonormal basis of the horizontal space".into(),
            ));
        }
        self.horizontal = basis;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.riemann.dim()
    }

    pub fn action(&self) -> &DMatrix<f64> {
        &self.action
    }

    pub fn horizontal_basis(&self) -> &DMatrix<f64> {
        &self.horizontal
    }

    pub fn riemann_tensor(&self) -> &RiemannTensor {
        &self.riemann
    }

    pub fn nabla(&self) -> &[DMatrix<f64>] {
        &self.nabla
    }

    pub fn to_frame(&self, v: &TangentVector) -> DVector<f64> {
        &self.horizontal * &v.horizontal + &self.action * &v.vertical
    }

    /// The linearised isotropy representation `dρ(u) X = ∇_X u*` restricted
    /// to the horizontal space, with the given blocks (in horizontal
    /// coordinates).
    pub fn isotropy_rep(&self, blocks: Vec<DMatrix<f64>>) -> Result<IsotropyRep> {
        let h = &self.horizontal;
        let gens = self
            .lie
            .isotropy_indices()
            .iter()
            .map(|&i| h.transpose() * self.nabla[i].transpose() * h)
            .collect();
        let rep = IsotropyRep::new(h.ncols(), gens, blocks)?;
        rep.check_commutation(&self.lie)?;
        Ok(rep)
    }

    /// The same point seen by the subgroup whose Lie algebra is spanned by
    /// the given basis elements.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let lie = self.lie.subalgebra(indices)?;
        let action = self.action.select_columns(indices);
        let nabla = indices.iter().map(|&i| self.nabla[i].clone()).collect();
        PointData::new(lie, action, self.riemann.clone(), nabla)
    }

    /// Largest `|g(∇_a Z*, e_b) + g(∇_b Z*, e_a)|` over the generators.
    pub fn killing_defect(&self) -> f64 {
        self.nabla
            .iter()
            .map(|d| (d + d.transpose()).amax())
            .fold(0.0, f64::max)
    }
}

impl CurvatureModel for PointData {
    fn lie(&self) -> &LieAlgebraData {
        &self.lie
    }

    fn orbit_tensor(&self) -> &OrbitTensor {
        &self.orbit
    }

    fn dim_h(&self) -> usize {
        self.horizontal.ncols()
    }

    fn riemann(&self, a: &TangentVector, b: &TangentVector, c: &TangentVector, d: &TangentVector) -> f64 {
        self.riemann.evaluate(
            &self.to_frame(a),
            &self.to_frame(b),
            &self.to_frame(c),
            &self.to_frame(d),
        )
    }

    fn dw(&self, v: &TangentVector, w: &TangentVector) -> DVector<f64> {
        let (fv, fw) = (self.to_frame(v), self.to_frame(w));
        DVector::from_iterator(
            self.nabla.len(),
            self.nabla.iter().map(|d| fv.dot(&(d * &fw))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{kappa_t, ricci_t, ricci_t_direct, scal_t, AdaptedBasis};

    /// Round unit sphere S^2 at the north pole with SO(2) rotating about it:
    /// a fixed point where the isotropy acts by rotation on T_pS^2.
    fn sphere_pole() -> PointData {
        let lie = LieAlgebraData::so(2).with_isotropy(vec![0]).unwrap();
        let action = DMatrix::zeros(2, 1);
        let nabla = vec![DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])];
        PointData::new(lie, action, RiemannTensor::constant_curvature(2, 1.0), nabla).unwrap()
    }

    #[test]
    fn constant_curvature_tensor_is_algebraic() {
        let r = RiemannTensor::constant_curvature(4, 2.5);
        assert!(r.symmetry_defect() < 1e-15);
        let e0 = linalg::unit(4, 0);
        let e1 = linalg::unit(4, 1);
        assert!((r.evaluate(&e0, &e1, &e1, &e0) - 2.5).abs() < 1e-15);
        let jac = r.jacobi_operator(&e0);
        assert!((jac[(1, 1)] - 2.5).abs() < 1e-15 && jac[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn rejects_non_algebraic_tensor() {
        let mut r = RiemannTensor::zeros(2);
        r.set(0, 1, 1, 0, 1.0);
        let lie = LieAlgebraData::so(2);
        let res = PointData::new(lie, DMatrix::from_row_slice(2, 1, &[0.0, 1.0]), r, vec![DMatrix::zeros(2, 2)]);
        assert!(res.is_err());
    }

    #[test]
    fn fixed_point_has_empty_orbit_and_rotation_isotropy() {
        let p = sphere_pole();
        assert_eq!(p.orbit_tensor().k(), 0);
        assert_eq!(p.dim_h(), 2);
        let rep = p.isotropy_rep(vec![]).unwrap();
        assert_eq!(rep.fixed_axes().ncols(), 0);
        assert_eq!(p.killing_defect(), 0.0);
    }

    #[test]
    fn ricci_routes_agree_at_a_fixed_point() {
        let p = sphere_pole();
        let basis = AdaptedBasis::standard(&p);
        let v = TangentVector::horizontal(DVector::from_vec(vec![0.6, 0.8]), 1);
        for t in [0.0, 1.0, 10.0] {
            let a = ricci_t(&p, &v, t, &basis).unwrap();
            let b = ricci_t_direct(&p, &v, t, &basis).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
        assert!((ricci_t(&p, &v, 0.0, &basis).unwrap() - 1.0).abs() < 1e-12);
        // dw_Z(e0, e1) = 1, so z_t(e0, e1) = 3t and κ_t = 1 + 3t
        let e0 = TangentVector::horizontal(linalg::unit(2, 0), 1);
        let e1 = TangentVector::horizontal(linalg::unit(2, 1), 1);
        assert!((kappa_t(&p, &e0, &e1, 2.0).unwrap() - 7.0).abs() < 1e-12);
        assert!((scal_t(&p, 2.0, &basis).unwrap() - 14.0).abs() < 1e-12);
    }
}
