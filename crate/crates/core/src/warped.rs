//! Doubly warped products `dt^2 + φ(t)^2 ds^2_{S^n1} + ψ(t)^2 ds^2_{S^n2}`
//! over unit round spheres, with rotation actions on the second factor.
//!
//! Tangent frames are ordered `(e0, a_1..a_n1, b_1..b_n2)` with `e0 = ∂t`,
//! `a_i` tangent to the first sphere and `b_j` tangent to the second.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::chart::{fd_riemann_frame, orthonormal_frame, ActionChart, FdConfig, MetricChart};
use crate::deformation::{zt_input, TangentVector, ZtInput};
use crate::error::{CheegerError, Result};
use crate::group::{so_basis, LieAlgebraData};
use crate::linalg::{self, RANK_TOL};
use crate::point::{PointData, RiemannTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// `ψ = exp(√(-λ2) t - b) / √(-λ2)`.
    Exp,
    /// `ψ = sinh(√(-λ2) t) / √(-λ2)`, closed off near `π/√λ1` by a C²
    /// quintic bridge to `sin(√λ1 (T - t)) / √λ1`.
    Sinh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpedMetricSpec {
    pub n1: usize,
    pub n2: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub b: f64,
    pub t0: f64,
    pub profile: ProfileKind,
    pub domain: (f64, f64),
}

/// Values and first two derivatives of both warping functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profiles {
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
    pub psi: f64,
    pub dpsi: f64,
    pub ddpsi: f64,
}

/// Wedge sectional curvatures of the warped product at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionalCurvatures {
    /// K(e0, a)
    pub ta: f64,
    /// K(e0, b)
    pub tb: f64,
    /// K(a, a')
    pub aa: f64,
    /// K(b, b')
    pub bb: f64,
    /// K(a, b)
    pub ab: f64,
}

impl WarpedMetricSpec {
    /// Spec with the default domain of the profile and the given base point.
    pub fn new(n1: usize, n2: usize, lambda1: f64, lambda2: f64, t0: f64, profile: ProfileKind) -> Result<Self> {
        let big_t = PI / lambda1.sqrt();
        let (domain, b) = match profile {
            ProfileKind::Exp => ((0.0, big_t), (-lambda2).sqrt() * t0 + 1.0),
            ProfileKind::Sinh => ((PI / (2.0 * lambda1.sqrt()), big_t), 0.0),
        };
        let spec = WarpedMetricSpec {
            n1,
            n2,
            lambda1,
            lambda2,
            b,
            t0,
            profile,
            domain,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 > 0.0) {
            return Err(CheegerError::Input(format!("lambda1 must be positive, got {}", self.lambda1)));
        }
        if !(self.lambda2 < 0.0) {
            return Err(CheegerError::Input(format!("lambda2 must be negative, got {}", self.lambda2)));
        }
        let (lo, hi) = self.domain;
        if !(lo < hi) || lo < 0.0 || hi > PI / self.lambda1.sqrt() + 1e-12 {
            return Err(CheegerError::Input(format!("invalid domain ({lo}, {hi})")));
        }
        if !(self.t0 > lo && self.t0 < hi) {
            return Err(CheegerError::Input(format!(
                "t0 = {} is not inside the domain ({lo}, {hi})",
                self.t0
            )));
        }
        if self.profile == ProfileKind::Exp && !(self.b > (-self.lambda2).sqrt() * self.t0) {
            return Err(CheegerError::Input(format!(
                "exp profile needs b > sqrt(-lambda2) t0, got b = {}",
                self.b
            )));
        }
        Ok(())
    }

    /// Whether `t0` meets the lower bound on `-√(-λ1λ2) cot(√λ1 t0)` needed
    /// for positive Ricci curvature of the quotient construction.
    pub fn t0_condition(&self, dim_hp: usize, l: usize, dim_h1: usize) -> bool {
        let s = (-self.lambda1 * self.lambda2).sqrt();
        let lhs = -s / (self.lambda1.sqrt() * self.t0).tan();
        lhs >= t0_bound(self.lambda1, self.lambda2, dim_hp, l, dim_h1)
    }

    /// Largest interval on which ψ is given by a single analytic
    /// expression: the whole domain for exp, up to the start of the bridge
    /// for sinh.
    pub fn analytic_interval(&self) -> (f64, f64) {
        match self.profile {
            ProfileKind::Exp => self.domain,
            ProfileKind::Sinh => (self.domain.0, self.closing().0),
        }
    }

    fn closing(&self) -> (f64, f64, f64) {
        let big_t = PI / self.lambda1.sqrt();
        let start = self.t0 + (big_t - self.t0) / 3.0;
        let end = self.t0 + 2.0 * (big_t - self.t0) / 3.0;
        (start, end, big_t)
    }
}

fn t0_bound(lambda1: f64, lambda2: f64, dim_hp: usize, l: usize, dim_h1: usize) -> f64 {
    let second = (1.0 - lambda2) * (dim_hp as f64 - 1.0) / ((l as f64 - 1.0) * dim_h1 as f64);
    lambda1.max(second)
}

/// A base point strictly inside `(π/(2√λ1), π/√λ1)` meeting the `t0`
/// condition.
pub fn choose_t0(lambda1: f64, lambda2: f64, dim_hp: usize, l: usize, dim_h1: usize) -> f64 {
    let m = t0_bound(lambda1, lambda2, dim_hp, l, dim_h1);
    let s = (-lambda1 * lambda2).sqrt();
    // cot(θ) = -m/s at θ = π - atan(s/m); halve the gap to π for strictness
    (PI - 0.5 * (s / m).atan()) / lambda1.sqrt()
}

fn sine(rate: f64, t: f64) -> (f64, f64, f64) {
    let r = rate.sqrt();
    let s = (r * t).sin();
    (s / r, (r * t).cos(), -r * s)
}

/// Quintic with prescribed value, slope and second derivative at both ends of
/// `[t_s, t_e]`.
fn quintic_bridge(t: f64, t_s: f64, t_e: f64, left: (f64, f64, f64), right: (f64, f64, f64)) -> (f64, f64, f64) {
    let h = t_e - t_s;
    let (p0, v0, a0) = (left.0, left.1 * h, left.2 * h * h);
    let (p1, v1, a1) = (right.0, right.1 * h, right.2 * h * h);
    let c = [
        p0,
        v0,
        0.5 * a0,
        -10.0 * p0 - 6.0 * v0 - 1.5 * a0 + 10.0 * p1 - 4.0 * v1 + 0.5 * a1,
        15.0 * p0 + 8.0 * v0 + 1.5 * a0 - 15.0 * p1 + 7.0 * v1 - a1,
        -6.0 * p0 - 3.0 * v0 - 0.5 * a0 + 6.0 * p1 - 3.0 * v1 + 0.5 * a1,
    ];
    let s = (t - t_s) / h;
    let mut val = 0.0;
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for (k, ck) in c.iter().enumerate() {
        let k_f = k as f64;
        val += ck * s.powi(k as i32);
        if k >= 1 {
            d1 += k_f * ck * s.powi(k as i32 - 1);
        }
        if k >= 2 {
            d2 += k_f * (k_f - 1.0) * ck * s.powi(k as i32 - 2);
        }
    }
    (val, d1 / h, d2 / (h * h))
}

pub fn profiles(spec: &WarpedMetricSpec, t: f64) -> Result<Profiles> {
    let (lo, hi) = spec.domain;
    if !(t >= lo && t <= hi) {
        return Err(CheegerError::Domain(format!("t = {t} is outside the domain ({lo}, {hi})")));
    }
    let (phi, dphi, ddphi) = sine(spec.lambda1, t);
    let r2 = (-spec.lambda2).sqrt();
    let (psi, dpsi, ddpsi) = match spec.profile {
        ProfileKind::Exp => {
            let e = (r2 * t - spec.b).exp();
            (e / r2, e, r2 * e)
        }
        ProfileKind::Sinh => {
            let sinh = |t: f64| ((r2 * t).sinh() / r2, (r2 * t).cosh(), r2 * (r2 * t).sinh());
            let close = |t: f64| {
                let (v, d, dd) = sine(spec.lambda1, spec.closing().2 - t);
                (v, -d, dd)
            };
            let (t_s, t_e, _) = spec.closing();
            if t <= t_s {
                sinh(t)
            } else if t >= t_e {
                close(t)
            } else {
                quintic_bridge(t, t_s, t_e, sinh(t_s), close(t_e))
            }
        }
    };
    if !(phi > 0.0 && psi > 0.0) {
        return Err(CheegerError::Domain(format!("warping functions vanish at t = {t}")));
    }
    Ok(Profiles {
        phi,
        dphi,
        ddphi,
        psi,
        dpsi,
        ddpsi,
    })
}

pub fn sectional_curvatures(spec: &WarpedMetricSpec, t: f64) -> Result<SectionalCurvatures> {
    let p = profiles(spec, t)?;
    Ok(SectionalCurvatures {
        ta: -p.ddphi / p.phi,
        tb: -p.ddpsi / p.psi,
        aa: (1.0 - p.dphi * p.dphi) / (p.phi * p.phi),
        bb: (1.0 - p.dpsi * p.dpsi) / (p.psi * p.psi),
        ab: -p.dphi * p.dpsi / (p.phi * p.psi),
    })
}

/// Which factor-block a frame index belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    T,
    A,
    B,
}

fn slot(spec: &WarpedMetricSpec, i: usize) -> Slot {
    if i == 0 {
        Slot::T
    } else if i <= spec.n1 {
        Slot::A
    } else {
        Slot::B
    }
}

/// The curvature tensor in the frame `(e0, a, b)`, assembled from wedge
/// operators: `R = sum_{i<j} K_ij e_i∧e_j ⊗ e_i∧e_j`.
pub fn curvature_operator(spec: &WarpedMetricSpec, t: f64) -> Result<RiemannTensor> {
    let k = sectional_curvatures(spec, t)?;
    let n = 1 + spec.n1 + spec.n2;
    let pair = |i: usize, j: usize| -> f64 {
        match (slot(spec, i), slot(spec, j)) {
            (Slot::T, Slot::A) | (Slot::A, Slot::T) => k.ta,
            (Slot::T, Slot::B) | (Slot::B, Slot::T) => k.tb,
            (Slot::A, Slot::A) => k.aa,
            (Slot::B, Slot::B) => k.bb,
            (Slot::A, Slot::B) | (Slot::B, Slot::A) => k.ab,
            (Slot::T, Slot::T) => 0.0,
        }
    };
    // R(e_a, e_b, e_c, e_d) = K_ab (δ_ad δ_bc - δ_ac δ_bd) for a != b
    Ok(RiemannTensor::from_fn(n, |a, b, c, d| {
        if a == b {
            return 0.0;
        }
        let kab = pair(a, b);
        let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        kab * (delta(a, d) * delta(b, c) - delta(a, c) * delta(b, d))
    }))
}

/// `Ric^H(X)` for the fixed axis `X = ∂t` at a point whose orbit is a point:
/// the trace of `R_X`, which is `λ1 n1 + λ2 n2` for both profile kinds.
pub fn ricci_h_of_fixed_axis(spec: &WarpedMetricSpec) -> f64 {
    spec.lambda1 * spec.n1 as f64 + spec.lambda2 * spec.n2 as f64
}

/// Rotation actions on the second sphere factor `S^n2 ⊂ R^{n2+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionModel {
    /// SO(n2) rotating about the pole `N = e_0`.
    PoleFixing,
    /// SO(n2 + 1) acting transitively.
    Transitive,
}

#[derive(Debug, Clone)]
pub struct WarpedModel {
    pub spec: WarpedMetricSpec,
    pub action: ActionModel,
}

/// Stereographic coordinates on `S^n2` centred at `N`:
/// `y0 = (1 - s)/(1 + s)`, `y_j = 2 w_j/(1 + s)`, `s = |w|^2`.
pub fn stereo_to_sphere(w: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let m = w.len();
    let s: f64 = w.iter().map(|x| x * x).sum();
    let d = 1.0 + s;
    let mut y = DVector::zeros(m + 1);
    y[0] = (1.0 - s) / d;
    let mut jac = DMatrix::zeros(m + 1, m);
    for k in 0..m {
        y[k + 1] = 2.0 * w[k] / d;
        jac[(0, k)] = -4.0 * w[k] / (d * d);
        for j in 0..m {
            let kron = if j == k { 1.0 } else { 0.0 };
            jac[(j + 1, k)] = 2.0 * kron / d - 4.0 * w[j] * w[k] / (d * d);
        }
    }
    (y, jac)
}

impl WarpedModel {
    pub fn new(spec: WarpedMetricSpec, action: ActionModel) -> Result<Self> {
        spec.validate()?;
        Ok(WarpedModel { spec, action })
    }

    pub fn dim(&self) -> usize {
        1 + self.spec.n1 + self.spec.n2
    }

    /// Generators as `(n2+1) × (n2+1)` skew matrices, Q-orthonormal.
    pub fn generators(&self) -> Vec<DMatrix<f64>> {
        let m = self.spec.n2 + 1;
        match self.action {
            ActionModel::Transitive => so_basis(m),
            ActionModel::PoleFixing => so_basis(m - 1)
                .into_iter()
                .map(|e| {
                    let mut big = DMatrix::zeros(m, m);
                    big.view_mut((1, 1), (m - 1, m - 1)).copy_from(&e);
                    big
                })
                .collect(),
        }
    }

    pub fn lie(&self) -> LieAlgebraData {
        match self.action {
            ActionModel::Transitive => LieAlgebraData::so(self.spec.n2 + 1),
            ActionModel::PoleFixing => LieAlgebraData::so(self.spec.n2),
        }
    }

    /// The point `y(θ) = cos θ N + sin θ e_1` on the second sphere, in
    /// stereographic coordinates.
    pub fn stereo_point(&self, theta: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.spec.n2];
        w[0] = (theta / 2.0).tan();
        w
    }

    /// Chart coordinates `(t, u, w)` of the point `(t, pole, y(θ))`.
    pub fn chart_point(&self, t: f64, theta: f64) -> Vec<f64> {
        let mut x = vec![t];
        x.extend(std::iter::repeat_n(0.0, self.spec.n1));
        x.extend(self.stereo_point(theta));
        x
    }

    pub fn chart(&self) -> WarpedChart<'_> {
        WarpedChart { model: self }
    }

    /// Exact point data at `(t, pole, y(θ))` in the chart's orthonormal frame
    /// (`b_j` are the normalised stereographic coordinate vectors). The
    /// isotropy is the span of the generators annihilating `y(θ)`.
    pub fn point_data(&self, t: f64, theta: f64) -> Result<PointData> {
        let p = profiles(&self.spec, t)?;
        let (n1, n2) = (self.spec.n1, self.spec.n2);
        let n = self.dim();
        let (y, jac) = stereo_to_sphere(&self.stereo_point(theta));
        let sigma = jac.column(0).norm();
        let beta = jac / sigma;
        let gens = self.generators();
        let iso: Vec<usize> = gens
            .iter()
            .enumerate()
            .filter(|(_, z)| (*z * &y).norm() < 1e-12)
            .map(|(i, _)| i)
            .collect();
        let lie = self.lie().with_isotropy(iso)?;
        let b0 = 1 + n1;
        let mut action = DMatrix::zeros(n, gens.len());
        let mut nabla = Vec::with_capacity(gens.len());
        for (i, z) in gens.iter().enumerate() {
            let zy = z * &y;
            let mut d = DMatrix::zeros(n, n);
            for j in 0..n2 {
                let along = zy.dot(&beta.column(j));
                action[(b0 + j, i)] = p.psi * along;
                d[(0, b0 + j)] = p.dpsi * along;
                d[(b0 + j, 0)] = -p.dpsi * along;
                for k in 0..n2 {
                    d[(b0 + k, b0 + j)] = (z * beta.column(k)).dot(&beta.column(j));
                }
            }
            nabla.push(d);
        }
        let data = PointData::new(lie, action.clone(), curvature_operator(&self.spec, t)?, nabla)?;
        // horizontal basis: e0, the a-block, then the part of the b-block
        // orthogonal to the orbit
        let b_action = action.rows(b0, n2).into_owned();
        let b_horizontal = linalg::complement(&b_action, RANK_TOL);
        let mut h = DMatrix::zeros(n, b0 + b_horizontal.ncols());
        for i in 0..b0 {
            h[(i, i)] = 1.0;
        }
        h.view_mut((b0, b0), (n2, b_horizontal.ncols())).copy_from(&b_horizontal);
        data.with_horizontal_basis(h)
    }
}

/// Stereographic product chart of a [`WarpedModel`].
pub struct WarpedChart<'a> {
    model: &'a WarpedModel,
}

impl MetricChart for WarpedChart<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let spec = &self.model.spec;
        let p = profiles(spec, x[0]).expect("chart point inside the domain");
        let u = &x[1..1 + spec.n1];
        let w = &x[1 + spec.n1..];
        let conf = |v: &[f64]| 2.0 / (1.0 + v.iter().map(|a| a * a).sum::<f64>());
        let (su, sw) = (p.phi * conf(u), p.psi * conf(w));
        let mut diag = vec![1.0];
        diag.extend(std::iter::repeat_n(su * su, spec.n1));
        diag.extend(std::iter::repeat_n(sw * sw, spec.n2));
        DMatrix::from_diagonal(&DVector::from_vec(diag))
    }
}

impl ActionChart for WarpedChart<'_> {
    fn killing(&self, x: &[f64]) -> DMatrix<f64> {
        let spec = &self.model.spec;
        let w = &x[1 + spec.n1..];
        let (y, jac) = stereo_to_sphere(w);
        let s: f64 = w.iter().map(|a| a * a).sum();
        let pull = jac.transpose() * ((1.0 + s) * (1.0 + s) / 4.0);
        let gens = self.model.generators();
        let mut k = DMatrix::zeros(self.model.dim(), gens.len());
        for (i, z) in gens.iter().enumerate() {
            let comp = &pull * (z * &y);
            k.view_mut((1 + spec.n1, i), (spec.n2, 1)).copy_from(&comp);
        }
        k
    }
}

/// `ZtInput` for two tangent vectors of the warped model at `(t, y(θ))`.
pub fn killing_fields_and_dw(
    model: &WarpedModel,
    t: f64,
    theta: f64,
    x: &TangentVector,
    y: &TangentVector,
) -> Result<ZtInput> {
    let data = model.point_data(t, theta)?;
    Ok(zt_input(&data, x, y))
}

/// For each block (columns orthonormal in the frame), the scalar of `R_X`
/// on that block and the largest deviation of the restriction from that
/// scalar multiple of the identity.
pub fn jacobi_block_structure(r: &RiemannTensor, x: &DVector<f64>, blocks: &[DMatrix<f64>]) -> Vec<(f64, f64)> {
    let jac = r.jacobi_operator(x);
    blocks
        .iter()
        .map(|b| {
            let restricted = b.transpose() * &jac * b;
            let m = restricted.nrows();
            let scalar = restricted.trace() / m as f64;
            let residual = (restricted - DMatrix::identity(m, m) * scalar).amax();
            (scalar, residual)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CurvatureCheckRow {
    pub t: f64,
    pub theta: f64,
    /// `max |R_closed - R_fd|` over frame components.
    pub fd_error: f64,
    pub max_abs: f64,
}

impl CurvatureCheckRow {
    pub fn relative_error(&self) -> f64 {
        self.fd_error / self.max_abs
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureCheck {
    pub rows: Vec<CurvatureCheckRow>,
    /// `(scalar, off-scalar residual)` of `R_X` on the H_1 and H_2 blocks at
    /// the fixed point.
    pub blocks: Vec<(f64, f64)>,
}

impl CurvatureCheck {
    pub fn max_relative_error(&self) -> f64 {
        self.rows.iter().map(CurvatureCheckRow::relative_error).fold(0.0, f64::max)
    }

    pub fn max_block_residual(&self) -> f64 {
        self.blocks.iter().map(|b| b.1).fold(0.0, f64::max)
    }
}

/// Closed-form curvature against the finite-difference Riemann tensor of the
/// chart at `points` interior points of the analytic interval, plus the Schur block structure of the
/// Jacobi operator of the fixed axis at t0.
pub fn verify_curvature(spec: &WarpedMetricSpec, points: usize, cfg: &FdConfig) -> Result<CurvatureCheck> {
    let model = WarpedModel::new(spec.clone(), ActionModel::PoleFixing)?;
    let chart = model.chart();
    let (lo, hi) = spec.analytic_interval();
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let s = (k as f64 + 0.5) / points as f64;
        let t = lo + (hi - lo) * (0.05 + 0.9 * s);
        // the closed form is θ-independent; stay where the stereographic chart is well conditioned
        let theta = 0.2 + s;
        let x = model.chart_point(t, theta);
        let frame = orthonormal_frame(&chart.metric(&x));
        let fd = fd_riemann_frame(&chart, &x, &frame, cfg)?;
        let r = curvature_operator(spec, t)?;
        rows.push(CurvatureCheckRow {
            t,
            theta,
            fd_error: fd.max_abs_diff(&r),
            max_abs: r.max_abs(),
        });
    }
    let n = model.dim();
    let r = curvature_operator(spec, spec.t0)?;
    let a = DMatrix::from_fn(n, spec.n1, |i, j| if i == 1 + j { 1.0 } else { 0.0 });
    let b = DMatrix::from_fn(n, spec.n2, |i, j| if i == 1 + spec.n1 + j { 1.0 } else { 0.0 });
    let blocks = jacobi_block_structure(&r, &linalg::unit(n, 0), &[a, b]);
    Ok(CurvatureCheck { rows, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{fd_riemann_frame, killing_residual, orthonormal_frame, FdConfig};
    use crate::deformation::CurvatureModel;

    fn sinh_spec() -> WarpedMetricSpec {
        let t0 = choose_t0(4.0, -1.5, 5, 3, 1);
        WarpedMetricSpec::new(1, 3, 4.0, -1.5, t0, ProfileKind::Sinh).unwrap()
    }

    #[test]
    fn sine_profile_at_its_peak() {
        let l1: f64 = 6.0;
        let spec = WarpedMetricSpec::new(1, 3, l1, -2.4, 1.0, ProfileKind::Exp).unwrap();
        let t = PI / (2.0 * l1.sqrt());
        let p = profiles(&spec, t).unwrap();
        assert!((p.phi - 1.0 / l1.sqrt()).abs() < 1e-15);
        assert!(p.dphi.abs() < 1e-15);
        assert!((p.ddphi + l1.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn second_factor_curvature_is_minus_lambda2_along_t() {
        let exp = WarpedMetricSpec::new(1, 3, 6.0, -2.4, 1.0, ProfileKind::Exp).unwrap();
        let sinh = sinh_spec();
        for spec in [&exp, &sinh] {
            for i in 1..10 {
                let t = spec.domain.0 + (spec.t0 - spec.domain.0) * i as f64 / 10.0;
                let p = profiles(spec, t).unwrap();
                assert!((p.ddpsi / p.psi + spec.lambda2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_profile_matches_closed_forms() {
        let spec = WarpedMetricSpec::new(1, 3, 6.0, -2.4, 1.0, ProfileKind::Exp).unwrap();
        for t in [0.2, 0.5, 0.9, 1.2] {
            let k = sectional_curvatures(&spec, t).unwrap();
            assert!((k.ta - 6.0).abs() < 1e-12);
            assert!((k.tb + 2.4).abs() < 1e-12);
            let mixed = -(6.0f64 * 2.4).sqrt() / (6.0f64.sqrt() * t).tan();
            assert!((k.ab - mixed).abs() < 1e-12);
            let bb = 2.4 * ((spec.b - 2.4f64.sqrt() * t).exp().powi(2) - 1.0);
            assert!((k.bb - bb).abs() < 1e-9 * bb.abs().max(1.0));
        }
    }

    #[test]
    fn sinh_closing_is_c2_and_positive() {
        let spec = sinh_spec();
        let (t_s, t_e, big_t) = spec.closing();
        // the bridge reproduces both neighbouring segments to second order
        let left = profiles(&spec, t_s).unwrap();
        let right = profiles(&spec, t_e).unwrap();
        let seg = |p: Profiles| (p.psi, p.dpsi, p.ddpsi);
        for (knot, target) in [(t_s, seg(left)), (t_e, seg(right))] {
            let got = quintic_bridge(knot, t_s, t_e, seg(left), seg(right));
            assert!((got.0 - target.0).abs() < 1e-9);
            assert!((got.1 - target.1).abs() < 1e-8);
            assert!((got.2 - target.2).abs() < 1e-6);
        }
        for i in 1..1000 {
            let t = spec.domain.0 + (big_t - spec.domain.0) * i as f64 / 1000.0;
            assert!(profiles(&spec, t).unwrap().psi > 0.0);
        }
        assert!(profiles(&spec, big_t + 0.1).is_err());
    }

    #[test]
    fn chosen_t0_meets_the_condition() {
        let spec = sinh_spec();
        assert!(spec.t0_condition(5, 3, 1));
        assert!(spec.t0 > PI / 4.0 && spec.t0 < PI / 2.0);
    }

    #[test]
    fn curvature_operator_is_algebraic_and_matches_fd() {
        let spec = sinh_spec();
        let model = WarpedModel::new(spec.clone(), ActionModel::PoleFixing).unwrap();
        let r = curvature_operator(&spec, spec.t0).unwrap();
        assert!(r.symmetry_defect() < 1e-14);
        let x = model.chart_point(spec.t0, 0.7);
        let frame = orthonormal_frame(&model.chart().metric(&x));
        let fd = fd_riemann_frame(&model.chart(), &x, &frame, &FdConfig::default()).unwrap();
        assert!(fd.max_abs_diff(&r) <= 1e-5 * r.max_abs(), "{}", fd.max_abs_diff(&r));
    }

    #[test]
    fn fixed_axis_jacobi_operator_is_block_scalar() {
        let spec = sinh_spec();
        let r = curvature_operator(&spec, spec.t0).unwrap();
        let n = 5;
        let x = linalg::unit(n, 0);
        let a = DMatrix::from_fn(n, 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
        let b = DMatrix::from_fn(n, 3, |i, j| if i == 2 + j { 1.0 } else { 0.0 });
        let res = jacobi_block_structure(&r, &x, &[a, b]);
        assert!((res[0].0 - 4.0).abs() < 1e-12 && res[0].1 < 1e-12);
        assert!((res[1].0 + 1.5).abs() < 1e-12 && res[1].1 < 1e-12);
        assert!((ricci_h_of_fixed_axis(&spec) - (4.0 - 4.5)).abs() < 1e-15);
    }

    #[test]
    fn killing_fields_are_killing() {
        let spec = sinh_spec();
        for action in [ActionModel::PoleFixing, ActionModel::Transitive] {
            let model = WarpedModel::new(spec.clone(), action).unwrap();
            let x = model.chart_point(spec.t0 - 0.1, 0.9);
            assert!(killing_residual(&model.chart(), &x, 1e-5) < 1e-8);
        }
    }

    #[test]
    fn analytic_point_data_matches_chart_fields() {
        let spec = sinh_spec();
        let model = WarpedModel::new(spec.clone(), ActionModel::PoleFixing).unwrap();
        let theta = 0.6;
        let data = model.point_data(spec.t0, theta).unwrap();
        let x = model.chart_point(spec.t0, theta);
        let frame = orthonormal_frame(&model.chart().metric(&x));
        let coords = &frame * data.action();
        assert!((coords - model.chart().killing(&x)).amax() < 1e-12);
        assert_eq!(data.orbit_tensor().k(), 2);
        assert_eq!(data.dim_h(), 3);
        assert!(data.killing_defect() < 1e-15);
    }

    #[test]
    fn fixed_axis_has_zero_dw_at_the_pole() {
        let spec = sinh_spec();
        let model = WarpedModel::new(spec.clone(), ActionModel::PoleFixing).unwrap();
        let x = TangentVector::horizontal(linalg::unit(5, 0), 3);
        for j in 0..5 {
            let y = TangentVector::horizontal(linalg::unit(5, j), 3);
            let input = killing_fields_and_dw(&model, spec.t0, 0.0, &x, &y).unwrap();
            assert_eq!(input.dw.amax(), 0.0);
        }
    }

    #[test]
    fn verify_curvature_on_both_profiles() {
        for profile in [ProfileKind::Exp, ProfileKind::Sinh] {
            let t0 = choose_t0(2.0, -1.0, 5, 3, 1);
            let spec = WarpedMetricSpec::new(1, 3, 2.0, -1.0, t0, profile).unwrap();
            let check = verify_curvature(&spec, 20, &FdConfig::default()).unwrap();
            assert!(check.max_relative_error() <= 1e-5, "{profile:?} {}", check.max_relative_error());
            assert!(check.max_block_residual() <= 1e-9);
            assert!((check.blocks[0].0 - 2.0).abs() < 1e-12);
        }
    }
}
