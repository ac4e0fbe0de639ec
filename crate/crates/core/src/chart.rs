//! Finite-difference curvature of metrics given in a coordinate chart, used
//! as an independent check of the closed-form curvature and of the
//! deformation formulas.

use nalgebra::{DMatrix, DVector};

use crate::error::{CheegerError, Result};
use crate::group::LieAlgebraData;
use crate::point::{PointData, RiemannTensor};

/// A Riemannian metric in coordinates.
pub trait MetricChart {
    fn dim(&self) -> usize;
    fn metric(&self, x: &[f64]) -> DMatrix<f64>;
}

/// A chart carrying Killing fields for a basis of a Lie algebra.
pub trait ActionChart: MetricChart {
    /// Column i holds the coordinate components of `v_i*` at `x`.
    fn killing(&self, x: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    /// Combine steps h and h/2 to cancel the leading error term.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: 1e-4,
            richardson: false,
        }
    }
}

impl FdConfig {
    fn check(&self) -> Result<()> {
        if !(self.step > 1e-8) || !self.step.is_finite() {
            return Err(CheegerError::Domain(format!(
                "finite-difference step {} is too small",
                self.step
            )));
        }
        Ok(())
    }
}

fn shifted(x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += h;
    y
}

/// Central difference of a matrix-valued function along coordinate `i`.
fn d_matrix(f: &dyn Fn(&[f64]) -> DMatrix<f64>, x: &[f64], i: usize, h: f64) -> DMatrix<f64> {
    (f(&shifted(x, i, h)) - f(&shifted(x, i, -h))) / (2.0 * h)
}

/// Christoffel symbols `gamma[k][(i, j)] = Γ^k_{ij}`.
pub fn christoffel(chart: &dyn MetricChart, x: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    let n = chart.dim();
    let metric = |y: &[f64]| chart.metric(y);
    let dg: Vec<DMatrix<f64>> = (0..n).map(|a| d_matrix(&metric, x, a, h)).collect();
    let ginv = chart
        .metric(x)
        .try_inverse()
        .expect("metric is invertible inside the chart");
    (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                (0..n)
                    .map(|l| {
                        0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])
                    })
                    .sum()
            })
        })
        .collect()
}

fn riemann_coords_once(chart: &dyn MetricChart, x: &[f64], h: f64) -> RiemannTensor {
    let n = chart.dim();
    let gamma = christoffel(chart, x, h);
    // dgamma[a][k] = ∂_a Γ^k
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|a| {
            let plus = christoffel(chart, &shifted(x, a, h), h);
            let minus = christoffel(chart, &shifted(x, a, -h), h);
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect()
        })
        .collect();
    let g = chart.metric(x);
    // up[d](c, a, b) = R^d_{cab} = ∂_a Γ^d_{bc} - ∂_b Γ^d_{ac} + Γ^d_{ae} Γ^e_{bc} - Γ^d_{be} Γ^e_{ac}
    let up = |d: usize, c: usize, a: usize, b: usize| -> f64 {
        let mut r = dgamma[a][d][(b, c)] - dgamma[b][d][(a, c)];
        for e in 0..n {
            r += gamma[d][(a, e)] * gamma[e][(b, c)] - gamma[d][(b, e)] * gamma[e][(a, c)];
        }
        r
    };
    let mut cache = vec![0.0; n * n * n * n];
    for d in 0..n {
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    cache[((d * n + c) * n + a) * n + b] = up(d, c, a, b);
                }
            }
        }
    }
    // R(∂a, ∂b, ∂c, ∂e) = g_{ed} R^d_{cab}
    RiemannTensor::from_fn(n, |a, b, c, e| {
        (0..n)
            .map(|d| g[(e, d)] * cache[((d * n + c) * n + a) * n + b])
            .sum()
    })
}

/// Coordinate components `R(∂a, ∂b, ∂c, ∂d)` by central differences of
/// central-difference Christoffel symbols.
pub fn fd_riemann_coords(chart: &dyn MetricChart, x: &[f64], cfg: &FdConfig) -> Result<RiemannTensor> {
    cfg.check()?;
    let coarse = riemann_coords_once(chart, x, cfg.step);
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = riemann_coords_once(chart, x, cfg.step / 2.0);
    let n = chart.dim();
    Ok(RiemannTensor::from_fn(n, |a, b, c, d| {
        (4.0 * fine.get(a, b, c, d) - coarse.get(a, b, c, d)) / 3.0
    }))
}

/// A g-orthonormal frame at `x` (columns in coordinate components), obtained
/// by Gram-Schmidt on the coordinate basis.
pub fn orthonormal_frame(g: &DMatrix<f64>) -> DMatrix<f64> {
    let l = g
        .clone()
        .cholesky()
        .expect("metric is positive definite")
        .l();
    l.transpose()
        .try_inverse()
        .expect("Cholesky factor is invertible")
}

/// The curvature tensor in a g-orthonormal frame (columns of `frame`).
pub fn fd_riemann_frame(
    chart: &dyn MetricChart,
    x: &[f64],
    frame: &DMatrix<f64>,
    cfg: &FdConfig,
) -> Result<RiemannTensor> {
    Ok(fd_riemann_coords(chart, x, cfg)?.change_frame(frame))
}

/// Largest component of the Lie derivative of the metric along each Killing
/// field, `(L_Z g)_{ab} = Z^c ∂_c g_ab + g_cb ∂_a Z^c + g_ac ∂_b Z^c`.
pub fn killing_residual(chart: &dyn ActionChart, x: &[f64], h: f64) -> f64 {
    let n = chart.dim();
    let g = chart.metric(x);
    let z = chart.killing(x);
    let metric = |y: &[f64]| chart.metric(y);
    let fields = |y: &[f64]| chart.killing(y);
    let dg: Vec<DMatrix<f64>> = (0..n).map(|c| d_matrix(&metric, x, c, h)).collect();
    let dz: Vec<DMatrix<f64>> = (0..n).map(|a| d_matrix(&fields, x, a, h)).collect();
    let mut worst: f64 = 0.0;
    for f in 0..z.ncols() {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for c in 0..n {
                    s += z[(c, f)] * dg[c][(a, b)]
                        + g[(c, b)] * dz[a][(c, f)]
                        + g[(a, c)] * dz[b][(c, f)];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

/// Covariant derivatives of the Killing fields, `N[(a, b)] = g(∇_{∂a} Z*, ∂b)`.
pub fn fd_nabla_coords(chart: &dyn ActionChart, x: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    let n = chart.dim();
    let g = chart.metric(x);
    let z = chart.killing(x);
    let gamma = christoffel(chart, x, h);
    let fields = |y: &[f64]| chart.killing(y);
    let dz: Vec<DMatrix<f64>> = (0..n).map(|a| d_matrix(&fields, x, a, h)).collect();
    (0..z.ncols())
        .map(|f| {
            // cov[(a, d)] = ∇_a Z^d
            let cov = DMatrix::from_fn(n, n, |a, d| {
                dz[a][(d, f)] + (0..n).map(|c| gamma[d][(a, c)] * z[(c, f)]).sum::<f64>()
            });
            cov * &g
        })
        .collect()
}

/// Point data at `x` computed entirely by finite differences, in the frame
/// [`orthonormal_frame`] of the chart metric. Returns the frame as well so
/// callers can map coordinate vectors.
pub fn fd_point_data(
    chart: &dyn ActionChart,
    lie: LieAlgebraData,
    x: &[f64],
    cfg: &FdConfig,
) -> Result<(PointData, DMatrix<f64>)> {
    let frame = orthonormal_frame(&chart.metric(x));
    let inv = frame.clone().try_inverse().expect("frame is invertible");
    let mut action = &inv * chart.killing(x);
    action.iter_mut().for_each(|v| {
        if v.abs() < 1e-13 {
            *v = 0.0
        }
    });
    let riemann = fd_riemann_frame(chart, x, &frame, cfg)?;
    let nabla = fd_nabla_coords(chart, x, cfg.step)
        .into_iter()
        .map(|m| frame.transpose() * m * &frame)
        .collect();
    Ok((PointData::new(lie, action, symmetrize(&riemann), nabla)?, frame))
}

/// Projects a numerically computed tensor onto the algebraic curvature
/// identities (pair antisymmetry and pair exchange).
pub fn symmetrize(r: &RiemannTensor) -> RiemannTensor {
    let n = r.dim();
    RiemannTensor::from_fn(n, |a, b, c, d| {
        let s = r.get(a, b, c, d) - r.get(b, a, c, d) - r.get(a, b, d, c) + r.get(b, a, d, c);
        let t = r.get(c, d, a, b) - r.get(d, c, a, b) - r.get(c, d, b, a) + r.get(d, c, b, a);
        (s + t) / 8.0
    })
}

/// The Cheeger deformation of an action chart:
/// `g_t^{-1} = g^{-1} + t sum_i v_i* ⊗ v_i*`.
pub struct DeformedChart<'a> {
    pub base: &'a dyn ActionChart,
    pub t: f64,
}

impl MetricChart for DeformedChart<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        let k = self.base.killing(x);
        let ginv = self
            .base
            .metric(x)
            .try_inverse()
            .expect("metric is invertible inside the chart");
        (ginv + &k * k.transpose() * self.t)
            .try_inverse()
            .expect("deformed cometric is invertible")
    }
}

/// Coordinate components of a frame vector.
pub fn frame_to_coords(frame: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    frame * v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit round sphere S^2 in stereographic coordinates, with the
    /// rotation about the axis through the chart origin.
    struct Sphere2;

    impl MetricChart for Sphere2 {
        fn dim(&self) -> usize {
            2
        }
        fn metric(&self, x: &[f64]) -> DMatrix<f64> {
            let s = 2.0 / (1.0 + x[0] * x[0] + x[1] * x[1]);
            DMatrix::identity(2, 2) * (s * s)
        }
    }

    impl ActionChart for Sphere2 {
        fn killing(&self, x: &[f64]) -> DMatrix<f64> {
            DMatrix::from_column_slice(2, 1, &[-x[1], x[0]])
        }
    }

    struct Flat(usize);

    impl MetricChart for Flat {
        fn dim(&self) -> usize {
            self.0
        }
        fn metric(&self, _: &[f64]) -> DMatrix<f64> {
            DMatrix::identity(self.0, self.0)
        }
    }

    #[test]
    fn sphere_has_unit_curvature() {
        for x in [[0.0, 0.0], [0.3, -0.2], [1.1, 0.4]] {
            let frame = orthonormal_frame(&Sphere2.metric(&x));
            let r = fd_riemann_frame(&Sphere2, &x, &frame, &FdConfig::default()).unwrap();
            assert!((r.get(0, 1, 1, 0) - 1.0).abs() < 1e-5, "{}", r.get(0, 1, 1, 0));
        }
    }

    #[test]
    fn richardson_improves_accuracy() {
        let x = [0.7, 0.2];
        let frame = orthonormal_frame(&Sphere2.metric(&x));
        let plain = FdConfig {
            step: 1e-2,
            richardson: false,
        };
        let rich = FdConfig {
            richardson: true,
            ..plain
        };
        let e0 = (fd_riemann_frame(&Sphere2, &x, &frame, &plain).unwrap().get(0, 1, 1, 0) - 1.0).abs();
        let e1 = (fd_riemann_frame(&Sphere2, &x, &frame, &rich).unwrap().get(0, 1, 1, 0) - 1.0).abs();
        assert!(e1 < e0);
    }

    #[test]
    fn flat_metric_has_zero_curvature() {
        let r = fd_riemann_coords(&Flat(3), &[0.1, 0.2, 0.3], &FdConfig::default()).unwrap();
        assert!(r.max_abs() < 1e-8);
    }

    #[test]
    fn tiny_step_is_rejected() {
        let cfg = FdConfig {
            step: 1e-12,
            richardson: false,
        };
        assert!(fd_riemann_coords(&Flat(2), &[0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn rotation_is_killing_and_fixes_the_origin() {
        assert!(killing_residual(&Sphere2, &[0.4, -0.3], 1e-5) < 1e-8);
        let nabla = fd_nabla_coords(&Sphere2, &[0.0, 0.0], 1e-5);
        // g = 4 I at the origin, ∇Z = rotation generator
        assert!((nabla[0][(0, 1)] - 4.0).abs() < 1e-6);
        assert!((nabla[0][(1, 0)] + 4.0).abs() < 1e-6);
    }
}
