//! Lie-algebraic data at a point of a G-manifold: structure constants in a
//! Q-orthonormal basis, the isotropy subalgebra, and the linearised isotropy
//! representation on the horizontal space.
//!
//! Everything is expressed in a Q-orthonormal basis of the Lie algebra, so the
//! bi-invariant form Q is the identity and never appears explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, CheegerError, Result};
use crate::linalg::{self, RANK_TOL};

/// Tolerance for the Jacobi identity and ad-skewness checks.
pub const JACOBI_TOL: f64 = 1e-12;
/// Tolerance for the commutation relations of isotropy generators.
pub const COMMUTATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraData {
    dim: usize,
    /// c[i][j][k] flattened as `(i * dim + j) * dim + k`.
    structure: Vec<f64>,
    isotropy: Vec<usize>,
    complement: Vec<usize>,
}

impl LieAlgebraData {
    /// Builds the algebra from nested structure constants `c[i][j][k]` with
    /// `[v_i, v_j] = sum_k c[i][j][k] v_k`. `isotropy` lists the basis
    /// indices spanning the isotropy subalgebra; the rest span its complement.
    pub fn new(structure: Vec<Vec<Vec<f64>>>, isotropy: Vec<usize>) -> Result<Self> {
        let dim = structure.len();
        let mut flat = Vec::with_capacity(dim * dim * dim);
        for row in &structure {
            check_dim("structure constants (j)", dim, row.len())?;
            for col in row {
                check_dim("structure constants (k)", dim, col.len())?;
                flat.extend_from_slice(col);
            }
        }
        Self::from_flat(dim, flat, isotropy)
    }

    pub fn from_flat(dim: usize, structure: Vec<f64>, isotropy: Vec<usize>) -> Result<Self> {
        check_dim("structure constants", dim * dim * dim, structure.len())?;
        let mut lie = LieAlgebraData {
            dim,
            structure,
            isotropy: Vec::new(),
            complement: (0..dim).collect(),
        };
        lie.validate(JACOBI_TOL)?;
        lie.set_isotropy(isotropy)?;
        Ok(lie)
    }

    /// Structure constants of a Lie algebra given by a basis of real
    /// matrices that is orthonormal for `Q(A, B) = tr(A^T B) / 2`, with the
    /// matrix commutator as bracket.
    pub fn from_matrix_basis(basis: &[DMatrix<f64>]) -> Result<Self> {
        let dim = basis.len();
        let q = |a: &DMatrix<f64>, b: &DMatrix<f64>| 0.5 * a.dot(b);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (q(a, b) - expected).abs() > 1e-12 {
                    return Err(CheegerError::Input(format!(
                        "matrix basis is not Q-orthonormal at ({i}, {j})"
                    )));
                }
            }
        }
        let mut flat = vec![0.0; dim * dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let comm = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                let mut recon = DMatrix::zeros(comm.nrows(), comm.ncols());
                for k in 0..dim {
                    let c = q(&comm, &basis[k]);
                    flat[(i * dim + j) * dim + k] = c;
                    recon += &basis[k] * c;
                }
                if (recon - comm).amax() > 1e-10 {
                    return Err(CheegerError::Input(
                        "matrix basis is not closed under the commutator".into(),
                    ));
                }
            }
        }
        Self::from_flat(dim, flat, Vec::new())
    }

    /// so(n) in the basis `E_ij = e_i e_j^T - e_j e_i^T`, `i < j`, ordered
    /// lexicographically. No isotropy is selected.
    pub fn so(n: usize) -> Self {
        Self::from_matrix_basis(&so_basis(n)).expect("so(n) basis is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn isotropy_indices(&self) -> &[usize] {
        &self.isotropy
    }

    pub fn complement_indices(&self) -> &[usize] {
        &self.complement
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn structure_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| (0..self.dim).map(|k| self.c(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    /// Selects the isotropy subalgebra by basis indices.
    pub fn with_isotropy(mut self, isotropy: Vec<usize>) -> Result<Self> {
        self.set_isotropy(isotropy)?;
        Ok(self)
    }

    fn set_isotropy(&mut self, mut isotropy: Vec<usize>) -> Result<()> {
        isotropy.sort_unstable();
        isotropy.dedup();
        if let Some(&bad) = isotropy.iter().find(|&&i| i >= self.dim) {
            return Err(CheegerError::Input(format!(
                "isotropy index {bad} out of range for an algebra of dimension {}",
                self.dim
            )));
        }
        for &a in &isotropy {
            for &b in &isotropy {
                for k in (0..self.dim).filter(|k| !isotropy.contains(k)) {
                    if self.c(a, b, k).abs() > JACOBI_TOL {
                        return Err(CheegerError::Input(
                            "isotropy indices do not span a subalgebra".into(),
                        ));
                    }
                }
            }
        }
        self.complement = (0..self.dim).filter(|i| !isotropy.contains(i)).collect();
        self.isotropy = isotropy;
        Ok(())
    }

    /// Checks antisymmetry, the Jacobi identity and ad-skewness (bi-invariance
    /// of Q) of the stored constants.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if (self.c(i, j, k) + self.c(j, i, k)).abs() > tol {
                        return Err(CheegerError::Input(format!(
                            "structure constants not antisymmetric at ({i}, {j}, {k})"
                        )));
                    }
                    // <[v_i, v_j], v_k> + <v_j, [v_i, v_k]> = 0
                    if (self.c(i, j, k) + self.c(i, k, j)).abs() > tol {
                        return Err(CheegerError::Input(format!(
                            "ad(v_{i}) is not Q-skew at ({j}, {k})"
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        // [[v_i,v_j],v_k] + [[v_j,v_k],v_i] + [[v_k,v_i],v_j]
                        let mut s = 0.0;
                        for l in 0..n {
                            s += self.c(i, j, l) * self.c(l, k, m)
                                + self.c(j, k, l) * self.c(l, i, m)
                                + self.c(k, i, l) * self.c(l, j, m);
                        }
                        if s.abs() > tol {
                            return Err(CheegerError::Input(format!(
                                "Jacobi identity fails for ({i}, {j}, {k})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Lie bracket of two coordinate vectors.
    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let mut out = DVector::zeros(n);
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
                    out[k] += ab * self.c(i, j, k);
                }
            }
        }
        out
    }

    /// Restriction to the span of the given basis vectors, which must be a
    /// subalgebra. The isotropy selection is intersected accordingly.
    pub fn subalgebra(&self, indices: &[usize]) -> Result<Self> {
        let m = indices.len();
        let mut flat = vec![0.0; m * m * m];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                for k in 0..self.dim {
                    let c = self.c(i, j, k);
                    match indices.iter().position(|&x| x == k) {
                        Some(pos) => flat[(a * m + b) * m + pos] = c,
                        None if c.abs() > JACOBI_TOL => {
                            return Err(CheegerError::Input(
                                "indices do not span a subalgebra".into(),
                            ))
                        }
                        None => {}
                    }
                }
            }
        }
        let iso = indices
            .iter()
            .enumerate()
            .filter(|(_, i)| self.isotropy.contains(i))
            .map(|(a, _)| a)
            .collect();
        Self::from_flat(m, flat, iso)
    }
}

/// Basis `E_ij`, `i < j`, of so(n) as matrices.
pub fn so_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = -1.0;
            out.push(e);
        }
    }
    out
}

/// Position of `E_ij` (`i < j`) in [`so_basis`].
pub fn so_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // rows 0..i contribute (n-1) + (n-2) + ... + (n-i)
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Linearised isotropy representation on the horizontal space together with
/// a declared invariant decomposition.
#[derive(Debug, Clone)]
pub struct IsotropyRep {
    dim_h: usize,
    generators: Vec<DMatrix<f64>>,
    blocks: Vec<DMatrix<f64>>,
}

impl IsotropyRep {
    /// `generators[i]` is dρ(u_i) for the i-th isotropy basis element;
    /// `blocks` are orthonormal bases (columns) of mutually orthogonal
    /// invariant subspaces. An empty `blocks` means "the whole space".
    pub fn new(
        dim_h: usize,
        generators: Vec<DMatrix<f64>>,
        blocks: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        for g in &generators {
            check_dim("generator rows", dim_h, g.nrows())?;
            check_dim("generator cols", dim_h, g.ncols())?;
            if (g + g.transpose()).amax() > 1e-10 {
                return Err(CheegerError::Input("generator is not skew-symmetric".into()));
            }
        }
        let blocks = if blocks.is_empty() {
            vec![DMatrix::identity(dim_h, dim_h)]
        } else {
            blocks
        };
        for (i, b) in blocks.iter().enumerate() {
            check_dim("decomposition block rows", dim_h, b.nrows())?;
            if linalg::orthonormality_defect(b) > 1e-10 {
                return Err(CheegerError::Input(format!(
                    "decomposition block {i} is not orthonormal"
                )));
            }
            for other in &blocks[..i] {
                if (b.transpose() * other).amax() > 1e-10 {
                    return Err(CheegerError::Input(format!(
                        "decomposition block {i} is not orthogonal to an earlier block"
                    )));
                }
            }
            let proj = linalg::projector(b);
            for g in &generators {
                let image = g * b;
                if (&image - &proj * &image).amax() > 1e-10 {
                    return Err(CheegerError::Input(format!(
                        "decomposition block {i} is not invariant"
                    )));
                }
            }
        }
        Ok(IsotropyRep {
            dim_h,
            generators,
            blocks,
        })
    }

    /// Verifies `[dρ(u_a), dρ(u_b)] = dρ([u_a, u_b])` against the isotropy
    /// part of `lie`.
    pub fn check_commutation(&self, lie: &LieAlgebraData) -> Result<()> {
        let iso = lie.isotropy_indices();
        check_dim("isotropy generators", iso.len(), self.generators.len())?;
        for (a, &ia) in iso.iter().enumerate() {
            for (b, &ib) in iso.iter().enumerate() {
                let lhs = &self.generators[a] * &self.generators[b]
                    - &self.generators[b] * &self.generators[a];
                let mut rhs = DMatrix::zeros(self.dim_h, self.dim_h);
                for (c, &ic) in iso.iter().enumerate() {
                    rhs += &self.generators[c] * lie.c(ia, ib, ic);
                }
                if (lhs - rhs).amax() > COMMUTATION_TOL {
                    return Err(CheegerError::Input(format!(
                        "generators {a}, {b} violate the commutation relations"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> Result<&DMatrix<f64>> {
        self.blocks
            .get(i)
            .ok_or_else(|| CheegerError::Input(format!("no decomposition block {i}")))
    }

    /// Same representation with a different declared decomposition.
    pub fn with_blocks(&self, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::new(self.dim_h, self.generators.clone(), blocks)
    }

    /// The map `U -> dρ(U) X` from the isotropy algebra to the horizontal
    /// space, one column per isotropy generator.
    pub fn s_tilde(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim("horizontal vector", self.dim_h, x.len())?;
        let mut m = DMatrix::zeros(self.dim_h, self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            m.set_column(i, &(g * x));
        }
        Ok(m)
    }

    /// Orthonormal basis of the vectors annihilated by every generator.
    pub fn fixed_axes(&self) -> DMatrix<f64> {
        if self.generators.is_empty() {
            return DMatrix::identity(self.dim_h, self.dim_h);
        }
        let mut stacked = DMatrix::zeros(self.dim_h * self.generators.len(), self.dim_h);
        for (i, g) in self.generators.iter().enumerate() {
            stacked
                .view_mut((i * self.dim_h, 0), (self.dim_h, self.dim_h))
                .copy_from(g);
        }
        linalg::kernel(&stacked, RANK_TOL)
    }

    /// Dimension of the isotropy orbit through `y`, i.e. the rank of
    /// `U -> dρ(U) y`. `rel_tol` defaults to [`RANK_TOL`].
    pub fn orbit_dimension(&self, y: &DVector<f64>, rel_tol: Option<f64>) -> Result<usize> {
        let s = self.s_tilde(y)?;
        let tol = rel_tol.unwrap_or(RANK_TOL);
        Ok(linalg::rank_with_floor(&s, tol, self.noise_floor(y, tol)))
    }

    /// Singular values of `s_tilde(y)` below this are rounding noise:
    /// `tol |y| max_i |ρ(e_i)|`.
    pub fn noise_floor(&self, y: &DVector<f64>, tol: f64) -> f64 {
        let scale = self.generators.iter().map(|g| g.norm()).fold(0.0, f64::max);
        tol * y.norm() * scale
    }

    /// Orthonormal basis of the isotropy algebra of `x` inside the isotropy
    /// algebra (the kernel of `s_tilde(x)`), in generator coordinates.
    pub fn stabilizer_algebra(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let s = self.s_tilde(x)?;
        if self.generators.is_empty() {
            return Ok(DMatrix::zeros(0, 0));
        }
        Ok(linalg::kernel_with_floor(&s, RANK_TOL, self.noise_floor(x, RANK_TOL)))
    }
}

/// Irreducible summand of a block representation of so(m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summand {
    Trivial,
    Standard,
}

impl Summand {
    fn dim(self, m: usize) -> usize {
        match self {
            Summand::Trivial => 1,
            Summand::Standard => m,
        }
    }
}

/// so(m), taken entirely as isotropy, acting on a direct sum of trivial and
/// standard summands. Each entry of `blocks` becomes one declared block of the
/// decomposition, in order, on consecutive coordinates.
pub fn so_block_rep(m: usize, blocks: &[Vec<Summand>]) -> (LieAlgebraData, IsotropyRep) {
    let basis = so_basis(m);
    let lie = LieAlgebraData::so(m)
        .with_isotropy((0..basis.len()).collect())
        .expect("full isotropy is a subalgebra");
    let dim_h: usize = blocks.iter().flatten().map(|s| s.dim(m)).sum();
    let mut generators = vec![DMatrix::zeros(dim_h, dim_h); basis.len()];
    let mut decomposition = Vec::new();
    let mut offset = 0;
    for block in blocks {
        let start = offset;
        for s in block {
            if *s == Summand::Standard {
                for (g, e) in generators.iter_mut().zip(&basis) {
                    g.view_mut((offset, offset), (m, m)).copy_from(e);
                }
            }
            offset += s.dim(m);
        }
        let mut b = DMatrix::zeros(dim_h, offset - start);
        for c in 0..(offset - start) {
            b[(start + c, c)] = 1.0;
        }
        decomposition.push(b);
    }
    let rep = IsotropyRep::new(dim_h, generators, decomposition).expect("block rep is valid");
    (lie, rep)
}

/// Conjugates a representation by an orthogonal change of basis `o` of the
/// horizontal space: generators become `o g o^T`, blocks become `o b`.
pub fn conjugate(rep: &IsotropyRep, o: &DMatrix<f64>) -> Result<IsotropyRep> {
    let gens = rep.generators.iter().map(|g| o * g * o.transpose()).collect();
    let blocks = rep.blocks.iter().map(|b| o * b).collect();
    IsotropyRep::new(rep.dim_h, gens, blocks)
}
