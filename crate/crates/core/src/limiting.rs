//! Limiting horizontal spaces `W = (dρ(g_p) Y)^⊥` at a singular point, the
//! traces `tr(p_i|W)`, their infimum over W, and the effectiveness criterion
//! built on it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, CheegerError, Result};
use crate::feasibility::{self, int, FeasibilityInstance, Outcome, Side, Solution};
use crate::group::IsotropyRep;
use crate::linalg::{self, RANK_TOL};

/// Number of random samples used to find the generic orbit dimension.
pub const REGULARITY_SAMPLES: usize = 50;
/// Exponents k of the sweep `α = 2^k`.
pub const ALPHA_EXPONENTS: std::ops::RangeInclusive<i32> = 0..=20;

#[derive(Debug, Clone)]
pub struct LimitingSpace {
    pub basis: DMatrix<f64>,
    pub source: DVector<f64>,
}

impl LimitingSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

pub fn limiting_space(rep: &IsotropyRep, y: &DVector<f64>) -> Result<LimitingSpace> {
    let s = rep.s_tilde(y)?;
    let basis = if s.ncols() == 0 {
        DMatrix::identity(rep.dim_h(), rep.dim_h())
    } else {
        linalg::complement_with_floor(&s, RANK_TOL, rep.noise_floor(y, RANK_TOL))
    };
    Ok(LimitingSpace {
        basis,
        source: y.clone(),
    })
}

/// `tr(p|W)` for the orthogonal projection p onto the span of `block`
/// (orthonormal columns).
pub fn trace_projection(space: &LimitingSpace, block: &DMatrix<f64>) -> Result<f64> {
    check_dim("block rows", space.basis.nrows(), block.nrows())?;
    Ok((block.transpose() * &space.basis).norm_squared())
}

/// Largest orbit dimension among seeded random samples.
pub fn generic_orbit_dimension(rep: &IsotropyRep, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..REGULARITY_SAMPLES)
        .map(|_| {
            let y = DVector::from_fn(rep.dim_h(), |_, _| rng.gen_range(-1.0..1.0));
            rep.orbit_dimension(&y, None).expect("dimensions match")
        })
        .max()
        .unwrap_or(0)
}

/// A seeded sample whose orbit dimension is generic.
pub fn regular_sample(rep: &IsotropyRep, seed: u64) -> DVector<f64> {
    let generic = generic_orbit_dimension(rep, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    loop {
        let y = DVector::from_fn(rep.dim_h(), |_, _| rng.gen_range(-1.0..1.0));
        if rep.orbit_dimension(&y, None).expect("dimensions match") == generic {
            return y;
        }
    }
}

#[derive(Debug, Clone)]
pub struct InfTrace {
    /// `dim H_1 - dim ρ(G_p) Y_1`.
    pub closed_form: usize,
    /// `(α, tr(p_1|W^α))` with `W^α = (dρ(g_p)(α Y_1 + Y_rest))^⊥`.
    pub sweep: Vec<(f64, f64)>,
    /// False when Y's orbit dimension is below the sampled generic value.
    pub regular: bool,
}

impl InfTrace {
    pub fn sweep_infimum(&self) -> f64 {
        self.sweep.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn gap(&self) -> f64 {
        self.sweep.last().map(|p| p.1).unwrap_or(f64::NAN) - self.closed_form as f64
    }

    /// Whether the sweep never increases by more than `tol`.
    pub fn monotone(&self, tol: f64) -> bool {
        self.sweep.windows(2).all(|w| w[1].1 <= w[0].1 + tol)
    }
}

pub fn inf_trace(rep: &IsotropyRep, block: usize, y: &DVector<f64>, seed: u64) -> Result<InfTrace> {
    check_dim("Y", rep.dim_h(), y.len())?;
    let b = rep.block(block)?;
    let y1 = b * (b.transpose() * y);
    let y_rest = y - &y1;
    let closed_form = b.ncols() - rep.orbit_dimension(&y1, None)?;
    let sweep = ALPHA_EXPONENTS
        .map(|k| {
            let alpha = 2f64.powi(k);
            let w = limiting_space(rep, &(&y1 * alpha + &y_rest))?;
            Ok((alpha, trace_projection(&w, b)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let regular = rep.orbit_dimension(y, None)? == generic_orbit_dimension(rep, seed);
    Ok(InfTrace {
        closed_form,
        sweep,
        regular,
    })
}

/// Per-block outcome of the effectiveness criterion.
#[derive(Debug, Clone)]
pub struct BlockReport {
    pub block: usize,
    pub dim: usize,
    /// Closed-form `inf tr(p_j|W)`.
    pub inf_trace: usize,
    /// `inf tr(p_j|W) - (l-1) dim H_j / (dim H_p - 1)`.
    pub margin: feasibility::Rational,
    pub instance: FeasibilityInstance,
    pub solution: Option<(Side, Solution)>,
}

impl BlockReport {
    pub fn satisfied(&self) -> bool {
        self.margin > int(0)
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    /// No fixed axis: every Cheeger deformation eventually has positive
    /// Ricci curvature at this point.
    Effective,
    /// Some block satisfies the criterion: a G-invariant metric exists near
    /// the point for which Ricci stays negative along the axis.
    NonEffectivePossible,
    /// The criterion holds for no block and no index pair.
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct EffectivenessReport {
    pub verdict: Verdict,
    pub fixed_axes: usize,
    pub axis_block: Option<usize>,
    /// Codimension of a principal orbit.
    pub l: usize,
    pub blocks: Vec<BlockReport>,
    /// `(j, i)` with `inf tr(p_j|W) > (l-1) Σ_{m≠i} dim H_m / (dim H_p - 1)`.
    pub pair: Option<(usize, usize)>,
}

/// Evaluates the criterion on the declared decomposition. `axis_block` names
/// the one-dimensional fixed block playing the role of X; when `None`, the
/// first one-dimensional block inside the fixed space is used.
pub fn effectiveness_criterion(
    rep: &IsotropyRep,
    axis_block: Option<usize>,
    seed: u64,
) -> Result<EffectivenessReport> {
    let fixed = rep.fixed_axes();
    let generic = generic_orbit_dimension(rep, seed);
    let l = rep.dim_h() - generic;
    if fixed.ncols() == 0 {
        return Ok(EffectivenessReport {
            verdict: Verdict::Effective,
            fixed_axes: 0,
            axis_block: None,
            l,
            blocks: Vec::new(),
            pair: None,
        });
    }
    let fixed_proj = linalg::projector(&fixed);
    let in_fixed = |b: &DMatrix<f64>| b.ncols() == 1 && (&fixed_proj * b - b).amax() < 1e-9;
    let axis = match axis_block {
        Some(i) => {
            if !in_fixed(rep.block(i)?) {
                return Err(CheegerError::Input(format!(
                    "block {i} is not a one-dimensional fixed axis"
                )));
            }
            i
        }
        None => rep
            .blocks()
            .iter()
            .position(in_fixed)
            .ok_or_else(|| CheegerError::Input("no declared block is a fixed axis".into()))?,
    };
    let y = regular_sample(rep, seed);
    let dim_hp = rep.dim_h();
    let lm1 = l as i64 - 1;
    let mut blocks = Vec::new();
    let others: Vec<usize> = (0..rep.blocks().len()).filter(|&i| i != axis).collect();
    let mut infs = Vec::new();
    for &j in &others {
        let b = rep.block(j)?;
        let inf_j = b.ncols() - rep.orbit_dimension(&(b * (b.transpose() * &y)), None)?;
        infs.push(inf_j);
        // the complementary merged block H_2 = H_p ⊖ (X ⊕ H_j)
        let rest: Vec<&DMatrix<f64>> = others.iter().filter(|&&i| i != j).map(|&i| &rep.blocks()[i]).collect();
        let rest_dim: usize = rest.iter().map(|m| m.ncols()).sum();
        let rest_orbit = {
            let mut yr = DVector::zeros(dim_hp);
            for m in &rest {
                yr += *m * (m.transpose() * &y);
            }
            rep.orbit_dimension(&yr, None)?
        };
        let inf_rest = rest_dim - rest_orbit;
        let margin = feasibility::rat(inf_j as i64 * (dim_hp as i64 - 1) - lm1 * b.ncols() as i64, dim_hp as i64 - 1);
        let instance = FeasibilityInstance::two(
            b.ncols() as u64,
            rest_dim.max(1) as u64,
            l as u64,
            &[
                (int(inf_j as i64), int(lm1 - inf_j as i64)),
                (int(lm1 - inf_rest as i64), int(inf_rest as i64)),
            ],
        )?;
        let solution = match feasibility::solve_lambdas_2(&instance)? {
            Outcome::Feasible(s) => Some(s),
            Outcome::Infeasible => None,
        };
        blocks.push(BlockReport {
            block: j,
            dim: b.ncols(),
            inf_trace: inf_j,
            margin,
            instance,
            solution,
        });
    }
    let total: usize = others.iter().map(|&i| rep.blocks()[i].ncols()).sum();
    let mut pair = None;
    'search: for (pj, &j) in others.iter().enumerate() {
        for &i in others.iter().filter(|&&i| i != j) {
            let rest = (total - rep.blocks()[i].ncols()) as i64;
            if infs[pj] as i64 * (dim_hp as i64 - 1) > lm1 * rest {
                pair = Some((j, i));
                break 'search;
            }
        }
    }
    let verdict = if blocks.iter().any(|b| b.satisfied()) || pair.is_some() {
        Verdict::NonEffectivePossible
    } else {
        Verdict::Undetermined
    };
    Ok(EffectivenessReport {
        verdict,
        fixed_axes: fixed.ncols(),
        axis_block: Some(axis),
        l,
        blocks,
        pair,
    })
}
