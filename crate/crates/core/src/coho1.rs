//! Cohomogeneity-one metrics `ds^2 + Σ f_i(s)^2 Q|_{n_i}` on an interval
//! `[0, R]` and the second-derivative criterion on `tr P_s^{-1}`.

use nalgebra::{DMatrix, DVector};
use num_dual::{Dual2_64, DualNum};
use serde::{Deserialize, Serialize};

use crate::error::{CheegerError, Result};

/// Boundary layers of this relative width are left out of criterion grids.
pub const BOUNDARY_LAYER: f64 = 0.05;
/// Step of the 5-point stencil, relative to R.
pub const FD_STEP: f64 = 1e-3;
const TAG_TOL: f64 = 1e-9;

/// A value carrying its first two derivatives, `(re, v1, v2)`.
pub type Jet = Dual2_64;

fn constant(v: f64) -> Jet {
    Jet::from_re(v)
}

fn variable(v: f64) -> Jet {
    Jet::from_re(v).derivative()
}

/// Natural cubic spline through the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl Spline {
    pub fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 3 {
            return Err(CheegerError::Input("a spline needs at least 3 knots".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CheegerError::Input("spline knots must be strictly increasing".into()));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = knots.iter().copied().unzip();
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for the interior second derivatives
        let k = n - 2;
        let mut a = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for i in 0..k {
            a[(i, i)] = 2.0 * (h[i] + h[i + 1]);
            if i > 0 {
                a[(i, i - 1)] = h[i];
            }
            if i + 1 < k {
                a[(i, i + 1)] = h[i + 1];
            }
            rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
        }
        let inner = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| CheegerError::Input("singular spline system".into()))?;
        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(inner.as_slice());
        Ok(Spline { xs, ys, m })
    }

    pub fn knots(&self) -> Vec<(f64, f64)> {
        self.xs.iter().copied().zip(self.ys.iter().copied()).collect()
    }

    fn eval(&self, x: Jet) -> Jet {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x.re) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (constant(self.xs[i + 1]) - x) * (1.0 / h);
        let b = (x - constant(self.xs[i])) * (1.0 / h);
        let cube = |j: Jet| j.powi(3);
        a * self.ys[i]
            + b * self.ys[i + 1]
            + (cube(a) - a) * (self.m[i] * h * h / 6.0)
            + (cube(b) - b) * (self.m[i + 1] * h * h / 6.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    /// `sin(rate s)/rate`, or `sin(rate (R - s))/rate` when `from_end`.
    Sin {
        rate: f64,
        #[serde(default)]
        from_end: bool,
    },
    Const { value: f64 },
    /// `scale exp(rate s)`.
    Exp { rate: f64, scale: f64 },
    Spline { knots: Vec<(f64, f64)> },
}

impl Profile {
    pub fn closed_form(&self) -> bool {
        !matches!(self, Profile::Spline { .. })
    }

    /// `(f, f', f'')` by hand-written formulas; `None` for splines.
    pub fn derivatives(&self, r: f64, s: f64) -> Option<(f64, f64, f64)> {
        match *self {
            Profile::Sin { rate, from_end } => {
                let (u, sign) = if from_end { (r - s, -1.0) } else { (s, 1.0) };
                let (sn, cs) = (rate * u).sin_cos();
                Some((sn / rate, sign * cs, -rate * sn))
            }
            Profile::Const { value } => Some((value, 0.0, 0.0)),
            Profile::Exp { rate, scale } => {
                let e = scale * (rate * s).exp();
                Some((e, rate * e, rate * rate * e))
            }
            Profile::Spline { .. } => None,
        }
    }

    /// The profile evaluated on a jet.
    pub fn jet(&self, r: f64, s: Jet, spline: Option<&Spline>) -> Result<Jet> {
        Ok(match *self {
            Profile::Sin { rate, from_end } => {
                let u = if from_end { constant(r) - s } else { s };
                (u * rate).sin() * (1.0 / rate)
            }
            Profile::Const { value } => constant(value),
            Profile::Exp { rate, scale } => (s * rate).exp() * scale,
            Profile::Spline { .. } => spline
                .ok_or_else(|| CheegerError::Input("spline profile without fitted spline".into()))?
                .eval(s),
        })
    }
}

/// Which ends of `[0, R]` the profile vanishes at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Start,
    End,
    Both,
    Neither,
}

impl Boundary {
    fn at_start(self) -> bool {
        matches!(self, Boundary::Start | Boundary::Both)
    }

    fn at_end(self) -> bool {
        matches!(self, Boundary::End | Boundary::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub n: usize,
    pub profile: Profile,
    #[serde(default = "neither")]
    pub boundary: Boundary,
}

fn neither() -> Boundary {
    Boundary::Neither
}

#[derive(Debug, Clone)]
pub struct DiagonalMetricFamily {
    r: f64,
    blocks: Vec<BlockSpec>,
    splines: Vec<Option<Spline>>,
}

impl DiagonalMetricFamily {
    pub fn new(r: f64, blocks: Vec<BlockSpec>) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CheegerError::Input(format!("R must be positive, got {r}")));
        }
        if blocks.is_empty() {
            return Err(CheegerError::Input("at least one block is required".into()));
        }
        let mut splines = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if b.n == 0 {
                return Err(CheegerError::Input(format!("block {i} has multiplicity 0")));
            }
            splines.push(match &b.profile {
                Profile::Spline { knots } => Some(Spline::new(knots)?),
                Profile::Sin { rate, .. } if *rate == 0.0 => {
                    return Err(CheegerError::Input(format!("block {i}: sin profile needs a nonzero rate")));
                }
                _ => None,
            });
        }
        let family = DiagonalMetricFamily { r, blocks, splines };
        for i in 0..family.blocks.len() {
            family.check_block(i)?;
        }
        Ok(family)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.n).sum()
    }

    /// `f_i` with its first two derivatives at s.
    pub fn profile_jet(&self, i: usize, s: f64) -> Result<Jet> {
        self.blocks[i].profile.jet(self.r, variable(s), self.splines[i].as_ref())
    }

    fn check_block(&self, i: usize) -> Result<()> {
        let b = &self.blocks[i];
        let bad = |msg: String| Err(CheegerError::Input(format!("block {i}: {msg}")));
        for k in 1..1000 {
            let s = self.r * k as f64 / 1000.0;
            let f = self.profile_jet(i, s)?.re;
            if !(f > 0.0) {
                return bad(format!("profile is not positive at s = {s}"));
            }
        }
        let start = self.profile_jet(i, 0.0)?;
        let end = self.profile_jet(i, self.r)?;
        // first-order match with sin(A t)/A at a collapsing end
        if b.boundary.at_start() && (start.re.abs() > TAG_TOL || (start.v1 - 1.0).abs() > TAG_TOL) {
            return bad(format!("tagged to vanish at 0 but f(0) = {}, f'(0) = {}", start.re, start.v1));
        }
        if b.boundary.at_end() && (end.re.abs() > TAG_TOL || (end.v1 + 1.0).abs() > TAG_TOL) {
            return bad(format!("tagged to vanish at R but f(R) = {}, f'(R) = {}", end.re, end.v1));
        }
        if !b.boundary.at_start() && start.re <= TAG_TOL {
            return bad("vanishes at 0 without a boundary tag".into());
        }
        if !b.boundary.at_end() && end.re <= TAG_TOL {
            return bad("vanishes at R without a boundary tag".into());
        }
        Ok(())
    }

    fn check_interior(&self, s: f64) -> Result<()> {
        if !(s > 0.0 && s < self.r) {
            return Err(CheegerError::Domain(format!("s = {s} is outside (0, {})", self.r)));
        }
        Ok(())
    }

    /// `P_s` as a diagonal matrix in a Q-orthonormal basis adapted to the
    /// blocks.
    pub fn assemble_p(&self, s: f64) -> Result<DMatrix<f64>> {
        self.check_interior(s)?;
        let mut diag = Vec::with_capacity(self.dim());
        for i in 0..self.blocks.len() {
            let f = self.profile_jet(i, s)?.re;
            diag.extend(std::iter::repeat_n(f * f, self.blocks[i].n));
        }
        Ok(DMatrix::from_diagonal(&DVector::from_vec(diag)))
    }
}

/// `Σ n_i / f_i(s)^2`.
pub fn trace_p_inverse(family: &DiagonalMetricFamily, s: f64) -> Result<f64> {
    family.check_interior(s)?;
    let mut total = 0.0;
    for (i, b) in family.blocks.iter().enumerate() {
        let f = family.profile_jet(i, s)?.re;
        if f <= 0.0 {
            return Err(CheegerError::Domain(format!("f_{i} vanishes at s = {s}")));
        }
        total += b.n as f64 / (f * f);
    }
    Ok(total)
}

/// Second derivative of the trace from the hand-written profile derivatives.
pub fn trace_second_derivative_analytic(family: &DiagonalMetricFamily, s: f64) -> Result<Option<f64>> {
    family.check_interior(s)?;
    let mut total = 0.0;
    for b in &family.blocks {
        let Some((f, f1, f2)) = b.profile.derivatives(family.r, s) else {
            return Ok(None);
        };
        total += b.n as f64 * (6.0 * f1 * f1 - 2.0 * f * f2) / f.powi(4);
    }
    Ok(Some(total))
}

/// 5-point central second difference of the trace.
pub fn trace_second_derivative_fd(family: &DiagonalMetricFamily, s: f64, h: f64) -> Result<f64> {
    if s - 2.0 * h <= 0.0 || s + 2.0 * h >= family.r || s - 2.0 * h == s {
        return Err(CheegerError::Domain(format!("stencil of width {h} at s = {s} leaves (0, R)")));
    }
    let f = |x: f64| trace_p_inverse(family, x);
    Ok((-f(s + 2.0 * h)? + 16.0 * f(s + h)? - 30.0 * f(s)? + 16.0 * f(s - h)? - f(s - 2.0 * h)?) / (12.0 * h * h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct Coho1Report {
    /// `(s, tr P_s^{-1}, d^2/ds^2 tr P_s^{-1})`.
    pub samples: Vec<(f64, f64, f64)>,
    pub method: DerivativeMethod,
    pub infimum: f64,
    pub argmin: f64,
    pub c_min: f64,
    pub passed: bool,
}

/// `points` evenly spaced samples of `[0.05 R, 0.95 R]`.
pub fn interior_grid(r: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (BOUNDARY_LAYER * r, (1.0 - BOUNDARY_LAYER) * r);
    match points {
        0 => Vec::new(),
        1 => vec![0.5 * r],
        n => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Checks `d^2/ds^2 tr P_s^{-1} >= c_min` on the grid. A relative slack of
/// 1e-12 absorbs rounding at points where the bound is attained.
pub fn criterion(family: &DiagonalMetricFamily, grid: &[f64], c_min: f64) -> Result<Coho1Report> {
    if grid.is_empty() {
        return Err(CheegerError::Input("empty criterion grid".into()));
    }
    let method = if family.blocks.iter().all(|b| b.profile.closed_form()) {
        DerivativeMethod::Analytic
    } else {
        DerivativeMethod::FiniteDifference
    };
    let mut samples = Vec::with_capacity(grid.len());
    for &s in grid {
        let d2 = match method {
            DerivativeMethod::Analytic => trace_second_derivative_analytic(family, s)?.expect("closed form"),
            DerivativeMethod::FiniteDifference => trace_second_derivative_fd(family, s, FD_STEP * family.r)?,
        };
        samples.push((s, trace_p_inverse(family, s)?, d2));
    }
    let (argmin, infimum) = samples
        .iter()
        .map(|&(s, _, d2)| (s, d2))
        .fold((f64::NAN, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
    let passed = infimum >= c_min - 1e-12 * c_min.abs().max(1.0);
    Ok(Coho1Report {
        samples,
        method,
        infimum,
        argmin,
        c_min,
        passed,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityResidual {
    /// `κ_0(P^{-1} v_i*, X) + 3 |S_X(P^{-1} v_i*)|^2`.
    pub lhs: f64,
    /// `½ d^2/ds^2 Q(P^{-1} v_i, v_i)`.
    pub rhs: f64,
    pub residual: f64,
}

/// Compares the curvature side, built from the sectional curvature
/// `-f''/f` and the shape operator `-f'/f` of the orbit, with half the
/// second derivative of `1/f^2` obtained by jet arithmetic.
pub fn dual_holonomy_identity_check(family: &DiagonalMetricFamily, s: f64, i: usize) -> Result<IdentityResidual> {
    family.check_interior(s)?;
    let block = family
        .blocks
        .get(i)
        .ok_or_else(|| CheegerError::Input(format!("no block {i}")))?;
    let (f, f1, f2) = block
        .profile
        .derivatives(family.r, s)
        .ok_or_else(|| CheegerError::Unsupported(format!("block {i} has no closed-form profile")))?;
    // |P^{-1} v*| = 1/f for a Q-unit v
    let norm2 = 1.0 / (f * f);
    let sectional = -f2 / f;
    let shape = f1 / f;
    let lhs = sectional * norm2 + 3.0 * shape * shape * norm2;
    let jet = family.profile_jet(i, s)?;
    let rhs = 0.5 * (jet * jet).recip().v2;
    Ok(IdentityResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// The families used as fixtures: sin, constant and exp profiles, plus a
/// concave multi-block family with collapsing ends.
pub fn library_profiles() -> Vec<(&'static str, DiagonalMetricFamily)> {
    use std::f64::consts::PI;
    let block = |n, profile, boundary| BlockSpec { n, profile, boundary };
    vec![
        (
            "sin",
            DiagonalMetricFamily::new(PI, vec![block(1, Profile::Sin { rate: 1.0, from_end: false }, Boundary::Both)]).unwrap(),
        ),
        ("const", DiagonalMetricFamily::new(1.0, vec![block(3, Profile::Const { value: 1.5 }, Boundary::Neither)]).unwrap()),
        (
            "exp",
            DiagonalMetricFamily::new(2.0, vec![block(2, Profile::Exp { rate: 0.7, scale: 0.5 }, Boundary::Neither)]).unwrap(),
        ),
        (
            "concave",
            DiagonalMetricFamily::new(
                PI / 2.0,
                vec![
                    block(1, Profile::Sin { rate: 1.0, from_end: false }, Boundary::Start),
                    block(2, Profile::Sin { rate: 1.0, from_end: true }, Boundary::End),
                    block(1, Profile::Const { value: 2.0 }, Boundary::Neither),
                ],
            )
            .unwrap(),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_family() -> DiagonalMetricFamily {
        library_profiles().remove(0).1
    }

    #[test]
    fn trace_examples() {
        assert!((trace_p_inverse(&sin_family(), PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        let two = DiagonalMetricFamily::new(
            PI,
            vec![
                BlockSpec {
                    n: 1,
                    profile: Profile::Sin { rate: 1.0, from_end: false },
                    boundary: Boundary::Both,
                },
                BlockSpec {
                    n: 2,
                    profile: Profile::Const { value: 1.0 },
                    boundary: Boundary::Neither,
                },
            ],
        )
        .unwrap();
        for s in [0.3f64, 1.0, 2.5] {
            let want = 1.0 / s.sin().powi(2) + 2.0;
            assert!((trace_p_inverse(&two, s).unwrap() - want).abs() < 1e-12);
        }
        assert!(matches!(trace_p_inverse(&two, 0.0), Err(CheegerError::Domain(_))));
        assert!(matches!(trace_p_inverse(&two, PI), Err(CheegerError::Domain(_))));
    }

    #[test]
    fn sin_second_derivative_matches_symbolic() {
        let fam = sin_family();
        for k in 1..40 {
            let s = PI * k as f64 / 40.0;
            let want = (2.0 + 4.0 * s.cos().powi(2)) / s.sin().powi(4);
            let got = trace_second_derivative_analytic(&fam, s).unwrap().unwrap();
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn sin_passes_and_constants_fail() {
        let grid = interior_grid(PI, 201);
        let r = criterion(&sin_family(), &grid, 2.0).unwrap();
        assert!(r.passed, "{}", r.infimum);
        assert!((r.infimum - 2.0).abs() < 1e-12);
        let c = &library_profiles()[1].1;
        let r = criterion(c, &interior_grid(1.0, 51), 1e-6).unwrap();
        assert!(!r.passed);
        assert_eq!(r.infimum, 0.0);
    }

    #[test]
    fn concave_family_passes() {
        let fam = &library_profiles()[3].1;
        let r = criterion(fam, &interior_grid(fam.r(), 101), 1.0).unwrap();
        assert!(r.passed, "{}", r.infimum);
    }

    #[test]
    fn identity_on_library_profiles() {
        for (name, fam) in library_profiles() {
            for i in 0..fam.blocks().len() {
                for s in interior_grid(fam.r(), 17) {
                    let res = dual_holonomy_identity_check(&fam, s, i).unwrap();
                    let tol = if name == "exp" { 1e-10 } else { 1e-6 };
                    assert!(res.residual <= tol * res.rhs.abs().max(1.0), "{name} {s} {res:?}");
                }
            }
        }
        let c = &library_profiles()[1].1;
        let res = dual_holonomy_identity_check(c, 0.5, 0).unwrap();
        assert_eq!((res.lhs, res.rhs), (0.0, 0.0));
    }

    #[test]
    fn spline_is_unsupported_for_the_identity_and_uses_fd() {
        let knots: Vec<(f64, f64)> = (0..=10).map(|k| {
            let s = k as f64 * 0.3;
            (s, 1.0 + (s * 0.7).sin())
        }).collect();
        let fam = DiagonalMetricFamily::new(
            3.0,
            vec![BlockSpec {
                n: 1,
                profile: Profile::Spline { knots },
                boundary: Boundary::Neither,
            }],
        )
        .unwrap();
        assert!(matches!(dual_holonomy_identity_check(&fam, 1.0, 0), Err(CheegerError::Unsupported(_))));
        let r = criterion(&fam, &interior_grid(3.0, 11), 0.0).unwrap();
        assert_eq!(r.method, DerivativeMethod::FiniteDifference);
    }

    #[test]
    fn spline_interpolates_and_is_natural() {
        let sp = Spline::new(&[(0.0, 1.0), (1.0, 3.0), (2.0, 2.0), (4.0, 5.0)]).unwrap();
        for (x, y) in sp.knots() {
            assert!((sp.eval(variable(x)).re - y).abs() < 1e-12);
        }
        assert!(sp.eval(variable(0.0)).v2.abs() < 1e-12);
        assert!(sp.eval(variable(4.0)).v2.abs() < 1e-12);
    }

    #[test]
    fn analytic_and_fd_agree() {
        for (_, fam) in library_profiles() {
            for s in interior_grid(fam.r(), 9) {
                let a = trace_second_derivative_analytic(&fam, s).unwrap().unwrap();
                let f = trace_second_derivative_fd(&fam, s, FD_STEP * fam.r()).unwrap();
                assert!((a - f).abs() <= 1e-5 * a.abs().max(1.0), "{a} {f}");
            }
        }
    }

    #[test]
    fn boundary_tags_are_checked() {
        let bad = DiagonalMetricFamily::new(
            PI,
            vec![BlockSpec {
                n: 1,
                profile: Profile::Sin { rate: 1.0, from_end: false },
                boundary: Boundary::Neither,
            }],
        );
        assert!(bad.is_err());
        let bad = DiagonalMetricFamily::new(
            1.0,
            vec![BlockSpec {
                n: 1,
                profile: Profile::Const { value: 1.0 },
                boundary: Boundary::Start,
            }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn assembled_p_matches_trace() {
        let fam = &library_profiles()[3].1;
        for s in [0.2, 0.7, 1.3] {
            let p = fam.assemble_p(s).unwrap();
            let spectral: f64 = p.symmetric_eigen().eigenvalues.iter().map(|e| 1.0 / e).sum();
            assert!((spectral - trace_p_inverse(fam, s).unwrap()).abs() < 1e-10);
        }
    }
}
