//! The SO(n-2)-invariant metrics on S^n whose Cheeger deformations keep a
//! negative Ricci direction at a fixed point, together with the checks of
//! their regular-point and scalar curvature behaviour.
//!
//! The fixed point is modelled locally by the doubly warped product
//! `dt^2 + φ^2 ds^2_{S^1} + ψ^2 ds^2_{S^{n-2}}` with SO(n-2) rotating the
//! second sphere about its pole; the fixed axis is `∂t`, `H_1` the circle
//! direction and `H_2` the (n-2)-dimensional block.

use nalgebra::{DMatrix, DVector};

use crate::chart::{fd_riemann_frame, orthonormal_frame, FdConfig, MetricChart};
use crate::deformation::{
    kappa_t, ricci_limit, ricci_t, scal_t, z_t, zt_input, AdaptedBasis, CurvatureModel, TangentVector,
};
use crate::error::{CheegerError, Result};
use crate::feasibility::{to_f64, Rational};
use crate::group::{so_block_rep, IsotropyRep, Summand};
use crate::limiting::{effectiveness_criterion, EffectivenessReport, Verdict};
use crate::linalg;
use crate::warped::{choose_t0, profiles, ActionModel, ProfileKind, WarpedMetricSpec, WarpedModel};

pub const DEFAULT_T_GRID: [f64; 5] = [0.0, 1.0, 10.0, 1e3, 1e6];
pub const SEED: u64 = 0x5eed;

#[derive(Debug, Clone)]
pub struct CounterexampleSpec {
    pub n: usize,
    pub lambdas: (Rational, Rational),
    pub criterion: EffectivenessReport,
    pub rep: IsotropyRep,
    pub warped: WarpedMetricSpec,
    /// Factor c such that `c g` has quotient Ricci curvature exactly 1 on
    /// unit vectors (`Ric` of unit vectors scales by `1/c`).
    pub rescale: f64,
}

impl CounterexampleSpec {
    pub fn lambda1(&self) -> f64 {
        to_f64(&self.lambdas.0)
    }

    pub fn lambda2(&self) -> f64 {
        to_f64(&self.lambdas.1)
    }

    /// `Ric^H(X) = λ1 dim H_1 + λ2 dim H_2`.
    pub fn expected_ricci(&self) -> f64 {
        self.lambda1() + (self.n as f64 - 2.0) * self.lambda2()
    }

    pub fn model(&self) -> WarpedModel {
        WarpedModel::new(self.warped.clone(), ActionModel::PoleFixing).expect("validated at build")
    }

    /// The quotient-check model: SO(3) acting transitively on the S^2 factor
    /// of `dt^2 + φ^2 ds^2_{S^2} + ψ^2 ds^2_{S^2}` with the same profiles.
    pub fn quotient_model(&self) -> WarpedModel {
        let spec = WarpedMetricSpec {
            n1: 2,
            n2: 2,
            ..self.warped.clone()
        };
        WarpedModel::new(spec, ActionModel::Transitive).expect("validated at build")
    }
}

/// Runs the criterion on the isotropy data, solves for λ's and assembles the
/// warped metric.
pub fn build(n: usize) -> Result<CounterexampleSpec> {
    if n < 5 {
        return Err(CheegerError::Input(format!("the construction needs n >= 5, got {n}")));
    }
    let (_, rep) = so_block_rep(n - 2, &[vec![Summand::Trivial], vec![Summand::Trivial], vec![Summand::Standard]]);
    let criterion = effectiveness_criterion(&rep, Some(0), SEED)?;
    if !matches!(criterion.verdict, Verdict::NonEffectivePossible) {
        return Err(CheegerError::Verification(format!("criterion fails for n = {n}")));
    }
    let h1 = criterion
        .blocks
        .iter()
        .find(|b| b.block == 1)
        .ok_or_else(|| CheegerError::Verification("no report for H_1".into()))?;
    let (_, sol) = h1
        .solution
        .clone()
        .ok_or_else(|| CheegerError::Verification("no λ's for H_1".into()))?;
    let lambdas = (sol.lambdas[0].clone(), sol.lambdas[1].clone());
    let (l1, l2) = (to_f64(&lambdas.0), to_f64(&lambdas.1));
    let t0 = choose_t0(l1, l2, n, criterion.l, 1);
    let warped = WarpedMetricSpec::new(1, n - 2, l1, l2, t0, ProfileKind::Sinh)?;
    let spec = CounterexampleSpec {
        n,
        lambdas,
        criterion,
        rep,
        warped,
        rescale: 2.0 * l1,
    };
    // the geometric isotropy representation must be the one analysed above
    let data = spec.model().point_data(t0, 0.0)?;
    let geometric = data.isotropy_rep(spec.rep.blocks().to_vec())?;
    let worst = geometric
        .generators()
        .iter()
        .zip(spec.rep.generators())
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(CheegerError::Verification(format!(
            "isotropy of the warped model differs from the block representation by {worst}"
        )));
    }
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct NegativeRicciReport {
    pub expected: f64,
    /// `(t, Ric_{g_t}(X))`.
    pub rows: Vec<(f64, f64)>,
    pub max_deviation: f64,
    /// Largest `z_t(X, e_i)` over horizontal basis vectors and the grid.
    pub max_zt: f64,
}

impl NegativeRicciReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.expected < 0.0 && self.max_deviation <= tol && self.max_zt <= 1e-10
    }
}

/// Ricci curvature of `g_t` along the fixed axis at the fixed point.
pub fn verify_negative_ricci(spec: &CounterexampleSpec, t_grid: &[f64]) -> Result<NegativeRicciReport> {
    let data = spec.model().point_data(spec.warped.t0, 0.0)?;
    let dim_g = data.orbit_tensor().dim_g();
    let basis = AdaptedBasis::standard(&data);
    let x = TangentVector::horizontal(linalg::unit(data.dim_h(), 0), dim_g);
    let expected = spec.expected_ricci();
    let mut rows = Vec::new();
    let (mut max_deviation, mut max_zt) = (0.0f64, 0.0f64);
    for &t in t_grid {
        let r = ricci_t(&data, &x, t, &basis)?;
        max_deviation = max_deviation.max((r - expected).abs());
        rows.push((t, r));
        for i in 0..data.dim_h() {
            let e = TangentVector::horizontal(linalg::unit(data.dim_h(), i), dim_g);
            max_zt = max_zt.max(z_t(data.orbit_tensor(), &zt_input(&data, &x, &e), t));
        }
    }
    Ok(NegativeRicciReport {
        expected,
        rows,
        max_deviation,
        max_zt,
    })
}

/// `dt^2 + φ^2 ds^2_{S^2}` in stereographic coordinates.
pub struct QuotientChart<'a> {
    pub spec: &'a WarpedMetricSpec,
}

impl MetricChart for QuotientChart<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let phi = profiles(self.spec, x[0]).expect("inside the domain").phi;
        let s = 2.0 * phi / (1.0 + x[1] * x[1] + x[2] * x[2]);
        DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, s * s, s * s]))
    }
}

#[derive(Debug, Clone)]
pub struct QuotientReport {
    /// Quotient Ricci curvature before rescaling, `2 λ1`.
    pub target: f64,
    pub rescale: f64,
    /// Per sample point: `(t_point, [(t, |Ric_{g_t}(X) - 2λ1|)])`.
    pub gaps: Vec<(f64, Vec<(f64, f64)>)>,
    /// Per sample point: fitted log-log slope of the gap against t.
    pub slopes: Vec<f64>,
    /// Largest `|ricci_limit - 2λ1|`.
    pub limit_error: f64,
    /// Largest deviation of an FD sectional curvature of the quotient from λ1.
    pub curvature_error: f64,
}

impl QuotientReport {
    pub fn passed(&self) -> bool {
        self.slopes.iter().all(|s| (-1.2..=-0.8).contains(s))
            && self.limit_error <= 1e-9
            && self.curvature_error <= 1e-6
            && self.target / self.rescale >= 1.0 - 1e-15
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Regular points of the sinh segment, evenly spaced strictly between its
/// start and t0.
pub fn regular_points(spec: &WarpedMetricSpec, count: usize) -> Vec<f64> {
    let (lo, hi) = (spec.domain.0, spec.t0);
    (1..=count).map(|i| lo + (hi - lo) * i as f64 / (count + 1) as f64).collect()
}

pub fn verify_quotient_ricci(spec: &CounterexampleSpec, points: &[f64], t_grid: &[f64]) -> Result<QuotientReport> {
    let model = spec.quotient_model();
    let target = 2.0 * spec.lambda1();
    let mut gaps = Vec::new();
    let mut slopes = Vec::new();
    let mut limit_error = 0.0f64;
    let mut curvature_error = 0.0f64;
    let cfg = FdConfig {
        step: 1e-3,
        richardson: true,
    };
    let quotient = QuotientChart { spec: &model.spec };
    for &tp in points {
        let data = model.point_data(tp, 0.0)?;
        let basis = AdaptedBasis::standard(&data);
        let x = TangentVector::horizontal(linalg::unit(data.dim_h(), 0), data.orbit_tensor().dim_g());
        let row = t_grid
            .iter()
            .map(|&t| Ok((t, (ricci_t(&data, &x, t, &basis)? - target).abs())))
            .collect::<Result<Vec<_>>>()?;
        slopes.push(loglog_slope(&row));
        gaps.push((tp, row));
        limit_error = limit_error.max((ricci_limit(&data, &x)? - target).abs());

        let q = [tp, 0.2, -0.1];
        let frame = orthonormal_frame(&quotient.metric(&q));
        let r = fd_riemann_frame(&quotient, &q, &frame, &cfg)?;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            curvature_error = curvature_error.max((r.get(i, j, j, i) - spec.lambda1()).abs());
        }
    }
    Ok(QuotientReport {
        target,
        rescale: spec.rescale,
        gaps,
        slopes,
        limit_error,
        curvature_error,
    })
}

#[derive(Debug, Clone)]
pub struct ScalarScanReport {
    /// `(t, min scal_{g_t})` over the sample points.
    pub rows: Vec<(f64, f64)>,
    pub points: usize,
    /// First grid value with positive scalar curvature at every point.
    pub first_positive: Option<f64>,
    /// `(t, max_Y zt_lower_bound(X', Y, t))` for a non-fixed X' at the fixed
    /// point.
    pub fake_horizontal: Vec<(f64, f64)>,
    /// Sum of `|[PU, PV]|` over basis pairs for the SO(2) restriction.
    pub abelian_bracket: f64,
}

/// Sample points `(t, θ)`: t on the sinh segment up to t0, θ from the fixed
/// point θ = 0 towards the opposite pole.
pub fn scan_points(spec: &WarpedMetricSpec, nt: usize, ntheta: usize) -> Vec<(f64, f64)> {
    let ts = regular_points(spec, nt - 1).into_iter().chain(std::iter::once(spec.t0));
    ts.flat_map(|t| (0..ntheta).map(move |k| (t, 0.9 * std::f64::consts::PI * k as f64 / (ntheta - 1) as f64)))
        .collect()
}

pub fn scalar_blowup_scan(spec: &CounterexampleSpec, t_grid: &[f64], points: &[(f64, f64)]) -> Result<ScalarScanReport> {
    let model = spec.model();
    let data: Vec<_> = points
        .iter()
        .map(|&(t, th)| model.point_data(t, th))
        .collect::<Result<_>>()?;
    let bases: Vec<_> = data.iter().map(AdaptedBasis::standard).collect();
    let mut rows = Vec::new();
    for &t in t_grid {
        let mut lo = f64::INFINITY;
        for (d, b) in data.iter().zip(&bases) {
            lo = lo.min(scal_t(d, t, b)?);
        }
        rows.push((t, lo));
    }
    let first_positive = rows.iter().find(|r| r.1 > 0.0).map(|r| r.0);

    let fixed = model.point_data(spec.warped.t0, 0.0)?;
    let rep = fixed.isotropy_rep(spec.rep.blocks().to_vec())?;
    let b0 = 2;
    let x = linalg::unit(rep.dim_h(), b0);
    let fake_horizontal = t_grid
        .iter()
        .map(|&t| {
            let best = (0..rep.dim_h())
                .map(|j| crate::deformation::zt_lower_bound(&rep, &x, &linalg::unit(rep.dim_h(), j), t))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((t, best))
        })
        .collect::<Result<Vec<_>>>()?;

    // SO(2) rotating the first two directions of the second sphere, at a
    // regular point
    let regular = model.point_data(spec.warped.t0, 0.7)?;
    let circle = regular.restrict(&[0])?;
    let p = circle.orbit_tensor().matrix();
    let mut abelian_bracket = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.nrows() {
            let (u, v) = (linalg::unit(p.nrows(), i), linalg::unit(p.nrows(), j));
            abelian_bracket += circle.lie().bracket(&(p * &u), &(p * &v)).norm();
        }
    }
    Ok(ScalarScanReport {
        rows,
        points: points.len(),
        first_positive,
        fake_horizontal,
        abelian_bracket,
    })
}

/// κ_t of two basis directions at the fixed point, exposed for the
/// t-independence checks of the fixed axis.
pub fn fixed_point_kappa(spec: &CounterexampleSpec, i: usize, j: usize, t: f64) -> Result<f64> {
    let data = spec.model().point_data(spec.warped.t0, 0.0)?;
    let dim_g = data.orbit_tensor().dim_g();
    let e = |k: usize| TangentVector::horizontal(linalg::unit(data.dim_h(), k), dim_g);
    kappa_t(&data, &e(i), &e(j), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::int;

    #[test]
    fn n5_pipeline() {
        let spec = build(5).unwrap();
        assert_eq!(spec.lambdas, (int(2), int(-1)));
        assert!((spec.expected_ricci() + 1.0).abs() < 1e-15);
        assert_eq!(spec.criterion.l, 3);
        assert!(spec.warped.t0_condition(5, 3, 1));
    }

    #[test]
    fn small_n_is_rejected() {
        assert!(build(4).is_err());
    }

    #[test]
    fn ricci_along_the_axis_is_constant_and_negative() {
        for n in [5, 6, 7] {
            let spec = build(n).unwrap();
            let report = verify_negative_ricci(&spec, &DEFAULT_T_GRID).unwrap();
            assert!(report.passed(1e-8), "{report:?}");
        }
    }

    #[test]
    fn perturbed_lambdas_fail() {
        let mut spec = build(5).unwrap();
        spec.lambdas.1 = int(-1) / int(2);
        spec.warped.lambda2 = -0.5;
        let report = verify_negative_ricci(&spec, &DEFAULT_T_GRID).unwrap();
        assert!(report.expected > 0.0);
        assert!(!report.passed(1e-8));
    }

    #[test]
    fn fixed_axis_pairs_do_not_move() {
        let spec = build(5).unwrap();
        for j in 1..5 {
            let k0 = fixed_point_kappa(&spec, 0, j, 0.0).unwrap();
            let k = fixed_point_kappa(&spec, 0, j, 1e6).unwrap();
            assert!((k - k0).abs() < 1e-10);
        }
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1e3].iter().map(|&t: &f64| (t, 3.0 / t)).collect();
        assert!((loglog_slope(&pts) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quotient_ricci_converges_at_rate_one_over_t() {
        let spec = build(5).unwrap();
        let points = regular_points(&spec.quotient_model().spec, 4);
        let report = verify_quotient_ricci(&spec, &points, &[10.0, 100.0, 1e3, 1e4]).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn scalar_curvature_becomes_positive() {
        let spec = build(5).unwrap();
        let points = scan_points(&spec.warped, 10, 6);
        let report = scalar_blowup_scan(&spec, &[0.0, 1.0, 10.0, 100.0, 1e3], &points).unwrap();
        assert!(report.points >= 50);
        assert!(report.first_positive.is_some_and(|t| t <= 1e3));
        assert!(report.abelian_bracket < 1e-12);
        // linear growth in t
        let (t10, t1000) = (report.fake_horizontal[2], report.fake_horizontal[4]);
        assert!(((t1000.1 / t10.1) / (t1000.0 / t10.0) - 1.0).abs() < 1e-9);
    }
}
