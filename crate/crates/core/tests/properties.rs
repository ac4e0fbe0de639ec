mod common;

use cheeger::chart::{fd_riemann_frame, orthonormal_frame, FdConfig, MetricChart};
use cheeger::coho1::{self, interior_grid, trace_p_inverse, BlockSpec, Boundary, DiagonalMetricFamily, Profile};
use cheeger::counterexample::{build, regular_points, scalar_blowup_scan, verify_quotient_ricci};
use cheeger::deformation::{kappa_t, scal_t, z_t, AdaptedBasis, OrbitTensor, TangentVector, ZtInput};
use cheeger::group::{conjugate, so_block_rep, IsotropyRep, LieAlgebraData, Summand};
use cheeger::limiting::{inf_trace, limiting_space, regular_sample, trace_projection};
use cheeger::linalg;
use cheeger::point::{PointData, RiemannTensor};
use cheeger::warped::{jacobi_block_structure, ActionModel, WarpedModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rep(seed: u64) -> (Vec<Vec<Summand>>, IsotropyRep) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(3..=5);
    let blocks: Vec<Vec<Summand>> = (0..rng.gen_range(2..=3))
        .map(|_| {
            (0..rng.gen_range(1..=2))
                .map(|_| if rng.gen_bool(0.5) { Summand::Trivial } else { Summand::Standard })
                .collect()
        })
        .collect();
    let (_, rep) = so_block_rep(m, &blocks);
    let o = common::random_orthogonal(&mut rng, rep.dim_h());
    (blocks, conjugate(&rep, &o).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fixed_axes_are_fixed(seed in any::<u64>()) {
        let (_, rep) = random_rep(seed);
        let fixed = rep.fixed_axes();
        for z in fixed.column_iter() {
            for g in rep.generators() {
                prop_assert!((g * z).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn orbit_dimension_and_stabilizer(seed in any::<u64>(), c in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        let (_, rep) = random_rep(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let y = DVector::from_fn(rep.dim_h(), |_, _| rng.gen_range(-1.0..1.0));
        let d = rep.orbit_dimension(&y, None).unwrap();
        let dim_gp = rep.generators().len();
        prop_assert!(d <= dim_gp);
        prop_assert_eq!(rep.orbit_dimension(&(&y * c), None).unwrap(), d);
        prop_assert_eq!(rep.stabilizer_algebra(&y).unwrap().ncols() + d, dim_gp);
    }

    #[test]
    fn limiting_traces_resolve_the_identity(seed in any::<u64>()) {
        let (_, rep) = random_rep(seed);
        let y = regular_sample(&rep, seed);
        let w = limiting_space(&rep, &y).unwrap();
        let mut total = 0.0;
        for b in rep.blocks() {
            let tr = trace_projection(&w, b).unwrap();
            prop_assert!(tr >= -1e-12 && tr <= (b.ncols().min(w.dim()) as f64) + 1e-12);
            total += tr;
        }
        prop_assert!((total - w.dim() as f64).abs() < 1e-9);
    }

    #[test]
    fn inf_trace_does_not_depend_on_the_regular_sample(seed in any::<u64>(), other in any::<u64>()) {
        let (blocks, rep) = random_rep(seed);
        let (y1, y2) = (regular_sample(&rep, seed), regular_sample(&rep, other));
        for j in 0..blocks.len() {
            let a = inf_trace(&rep, j, &y1, seed).unwrap();
            let b = inf_trace(&rep, j, &y2, seed).unwrap();
            prop_assert_eq!(a.closed_form, b.closed_form);
            prop_assert!(a.sweep_infimum() >= a.closed_form as f64 - 1e-9);
        }
    }

    #[test]
    fn z_t_dominates_samples(seed in any::<u64>(), k in 1usize..=6, t in 0.01..100.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lie = LieAlgebraData::from_flat(k, vec![0.0; k * k * k], vec![]).unwrap();
        let b = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
        let p = OrbitTensor::new(b.transpose() * &b + DMatrix::identity(k, k) * 0.05, &lie).unwrap();
        let input = ZtInput {
            dw: DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0)),
            bracket: DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0)),
        };
        let c = &input.dw + &input.bracket * (0.5 * t);
        let exact = z_t(&p, &input, t);
        for _ in 0..1000 {
            let z = common::unit_sphere(&mut rng, k);
            let v = 3.0 * t * c.dot(&z).powi(2) / (t * (p.matrix() * &z).dot(&z) + 1.0);
            prop_assert!(v <= exact * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn kappa_t_increases_when_dw_vanishes(seed in any::<u64>()) {
        // parallel action fields: every ∇Z* vanishes, so dw = 0
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 5;
        let lie = LieAlgebraData::so(3);
        let action = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
        let data = PointData::new(lie, action, RiemannTensor::constant_curvature(n, 0.7), vec![DMatrix::zeros(n, n); 3]).unwrap();
        let v = TangentVector::new(DVector::from_fn(data.dim() - 3, |_, _| rng.gen_range(-1.0..1.0)), DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)));
        let w = TangentVector::new(DVector::from_fn(data.dim() - 3, |_, _| rng.gen_range(-1.0..1.0)), DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0)));
        let mut last = f64::NEG_INFINITY;
        for t in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let k = kappa_t(&data, &v, &w, t).unwrap();
            prop_assert!(k >= last - 1e-9 * k.abs().max(1.0));
            last = k;
        }
    }
}

#[test]
fn scalar_curvature_grows_where_brackets_do_not_vanish() {
    let spec = build(5).unwrap();
    let model = spec.model();
    for &(t, theta) in &[(spec.warped.t0, 0.8), (spec.warped.t0 - 0.3, 1.4)] {
        let data = model.point_data(t, theta).unwrap();
        let basis = AdaptedBasis::standard(&data);
        assert!(scal_t(&data, 1e3, &basis).unwrap() > scal_t(&data, 10.0, &basis).unwrap());
    }
    let scan = scalar_blowup_scan(&spec, &[10.0, 1e3], &[(spec.warped.t0, 0.8)]).unwrap();
    assert!(scan.rows[1].1 > scan.rows[0].1);
}

#[test]
fn quotient_limit_at_six_regular_points() {
    let spec = build(5).unwrap();
    let points = regular_points(&spec.quotient_model().spec, 6);
    let q = verify_quotient_ricci(&spec, &points, &[10.0, 1e2, 1e3, 1e4]).unwrap();
    assert_eq!(q.slopes.len(), 6);
    assert!(q.passed(), "{q:?}");
}

#[test]
fn fd_jacobi_operator_is_block_scalar() {
    let spec = build(5).unwrap();
    let model = WarpedModel::new(spec.warped.clone(), ActionModel::PoleFixing).unwrap();
    let x = model.chart_point(spec.warped.t0, 0.0);
    let chart = model.chart();
    let frame = orthonormal_frame(&chart.metric(&x));
    let r = fd_riemann_frame(&chart, &x, &frame, &FdConfig::default()).unwrap();
    let a = DMatrix::from_fn(5, 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
    let b = DMatrix::from_fn(5, 3, |i, j| if i == 2 + j { 1.0 } else { 0.0 });
    let res = jacobi_block_structure(&r, &linalg::unit(5, 0), &[a, b]);
    assert!((res[0].0 - spec.lambda1()).abs() < 1e-4 && res[0].1 <= 1e-4, "{res:?}");
    assert!((res[1].0 - spec.lambda2()).abs() < 1e-4 && res[1].1 <= 1e-4, "{res:?}");
}

fn concave_family(rates: &[f64], consts: &[f64]) -> DiagonalMetricFamily {
    let r = std::f64::consts::PI / rates.iter().cloned().fold(0.0, f64::max) * 0.999;
    let mut blocks: Vec<BlockSpec> = rates
        .iter()
        .enumerate()
        .map(|(i, &rate)| BlockSpec {
            n: 1 + i % 3,
            profile: Profile::Sin { rate, from_end: false },
            boundary: Boundary::Start,
        })
        .collect();
    blocks.extend(consts.iter().map(|&value| BlockSpec {
        n: 2,
        profile: Profile::Const { value },
        boundary: Boundary::Neither,
    }));
    DiagonalMetricFamily::new(r, blocks).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coho1_verdict_survives_grid_refinement(
        rates in prop::collection::vec(0.3..2.0f64, 1..3),
        consts in prop::collection::vec(0.5..3.0f64, 0..2),
        c_min in 0.0..20.0f64,
    ) {
        let fam = concave_family(&rates, &consts);
        let coarse = coho1::criterion(&fam, &interior_grid(fam.r(), 101), c_min).unwrap();
        let fine = coho1::criterion(&fam, &interior_grid(fam.r(), 201), c_min).unwrap();
        // the verdicts agree unless c_min falls between the two grid minima
        let (lo, hi) = (fine.infimum.min(coarse.infimum), fine.infimum.max(coarse.infimum));
        if !(lo..=hi).contains(&c_min) {
            prop_assert_eq!(coarse.passed, fine.passed);
        }
        prop_assert!(fine.infimum <= coarse.infimum + 1e-9 * coarse.infimum.abs().max(1.0));
    }

    #[test]
    fn trace_is_convex_for_concave_profiles(
        rates in prop::collection::vec(0.3..2.0f64, 1..3),
        consts in prop::collection::vec(0.5..3.0f64, 0..2),
    ) {
        let fam = concave_family(&rates, &consts);
        let grid = interior_grid(fam.r(), 200);
        let h = grid[1] - grid[0];
        for w in grid.windows(3) {
            let (a, b, c) = (trace_p_inverse(&fam, w[0]).unwrap(), trace_p_inverse(&fam, w[1]).unwrap(), trace_p_inverse(&fam, w[2]).unwrap());
            prop_assert!(a - 2.0 * b + c >= -1e-9 * b * h.max(1.0));
        }
    }
}
