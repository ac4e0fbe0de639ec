//! Curvature-constant feasibility: find λ's with `Σ a_i λ_i ≥ 1` for every
//! constraint tuple and `Σ λ_i dim H_i < 0`.
//!
//! Decisions are made in exact rational arithmetic; λ's are also reported as
//! floats for downstream geometry.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{CheegerError, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| CheegerError::Input(format!("{x} is not a finite number")))
}

/// Parses `"p/q"`, an integer, or a decimal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || CheegerError::Input(format!("cannot parse {s:?} as a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.trim_start().starts_with('-');
        let digits: BigInt = format!("{}{}", whole.trim_start_matches('-'), frac)
            .parse()
            .map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let v = Rational::new(digits, scale);
        return Ok(if neg { -v } else { v });
    }
    Ok(Rational::from_integer(s.parse().map_err(|_| bad())?))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Block dimensions, the codimension `l` of a principal orbit, and the
/// constraint tuples (one entry per block).
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityInstance {
    dims: Vec<u64>,
    l: u64,
    constraints: Vec<Vec<Rational>>,
}

impl FeasibilityInstance {
    pub fn new(dims: Vec<u64>, l: u64, constraints: Vec<Vec<Rational>>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(CheegerError::Input("need at least two blocks".into()));
        }
        if dims.contains(&0) {
            return Err(CheegerError::Input("block dimensions must be positive".into()));
        }
        if l < 2 {
            return Err(CheegerError::Input(format!("l must be at least 2, got {l}")));
        }
        if constraints.is_empty() {
            return Err(CheegerError::Input(
                "constraint set is empty, its infimum is undefined".into(),
            ));
        }
        let total = int(l as i64 - 1);
        for (i, c) in constraints.iter().enumerate() {
            if c.len() != dims.len() {
                return Err(CheegerError::Dimension {
                    context: "constraint tuple",
                    expected: dims.len(),
                    got: c.len(),
                });
            }
            if c.iter().any(|a| a.is_negative()) {
                return Err(CheegerError::Input(format!("constraint {i} has a negative entry")));
            }
            let s: Rational = c.iter().sum();
            if s != total {
                return Err(CheegerError::Input(format!(
                    "constraint {i} sums to {s}, expected l - 1 = {total}"
                )));
            }
        }
        Ok(FeasibilityInstance { dims, l, constraints })
    }

    /// Two-block instance from `(a, b)` pairs.
    pub fn two(a_dim: u64, b_dim: u64, l: u64, pairs: &[(Rational, Rational)]) -> Result<Self> {
        Self::new(
            vec![a_dim, b_dim],
            l,
            pairs.iter().map(|(a, b)| vec![a.clone(), b.clone()]).collect(),
        )
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn constraints(&self) -> &[Vec<Rational>] {
        &self.constraints
    }

    fn inf(&self, block: usize) -> Rational {
        self.constraints
            .iter()
            .map(|c| c[block].clone())
            .min()
            .expect("constraint set is non-empty")
    }

    fn total_dim(&self) -> Rational {
        int(self.dims.iter().sum::<u64>() as i64)
    }

    fn swapped(&self) -> Self {
        FeasibilityInstance {
            dims: vec![self.dims[1], self.dims[0]],
            l: self.l,
            constraints: self
                .constraints
                .iter()
                .map(|c| vec![c[1].clone(), c[0].clone()])
                .collect(),
        }
    }

    /// Checks `Σ a_i λ_i ≥ 1` for all constraints and `Σ λ_i dim H_i < 0`.
    pub fn satisfied_by(&self, lambdas: &[Rational]) -> bool {
        lambdas.len() == self.dims.len()
            && self.constraints.iter().all(|c| {
                c.iter().zip(lambdas).map(|(a, l)| a * l).sum::<Rational>() >= Rational::one()
            })
            && self
                .dims
                .iter()
                .zip(lambdas)
                .map(|(&d, l)| int(d as i64) * l)
                .sum::<Rational>()
                .is_negative()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `inf a > A(l-1)/(A+B)`: λ1 > 0 > λ2.
    First,
    /// `inf b > B(l-1)/(A+B)`: λ1 < 0 < λ2.
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict2 {
    pub side: Option<Side>,
    /// `inf a - A(l-1)/(A+B)` and `inf b - B(l-1)/(A+B)`.
    pub margins: (Rational, Rational),
}

impl Verdict2 {
    pub fn feasible(&self) -> bool {
        self.side.is_some()
    }
}

fn require_two(inst: &FeasibilityInstance) -> Result<()> {
    if inst.dims.len() != 2 {
        return Err(CheegerError::Input(format!(
            "two-block routine called with {} blocks",
            inst.dims.len()
        )));
    }
    Ok(())
}

/// The two-subspace criterion. Equality on the threshold is infeasible.
pub fn is_feasible_2(inst: &FeasibilityInstance) -> Result<Verdict2> {
    require_two(inst)?;
    let lm1 = int(inst.l as i64 - 1);
    let total = inst.total_dim();
    let m1 = inst.inf(0) - int(inst.dims[0] as i64) * &lm1 / &total;
    let m2 = inst.inf(1) - int(inst.dims[1] as i64) * &lm1 / &total;
    let side = if m1.is_positive() {
        Some(Side::First)
    } else if m2.is_positive() {
        Some(Side::Second)
    } else {
        None
    };
    Ok(Verdict2 {
        side,
        margins: (m1, m2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub lambdas: Vec<Rational>,
    /// Slack certifying the strict inequalities of the construction.
    pub epsilon: Rational,
}

impl Solution {
    pub fn lambdas_f64(&self) -> Vec<f64> {
        self.lambdas.iter().map(to_f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<W> {
    Feasible(W),
    Infeasible,
}

impl<W> Outcome<W> {
    pub fn feasible(self) -> Option<W> {
        match self {
            Outcome::Feasible(w) => Some(w),
            Outcome::Infeasible => None,
        }
    }
}

/// Side-one construction: `ε` is half of the largest slack keeping
/// `(a - ε)/b > A/B`, the ratio `-λ2/λ1` is the midpoint of
/// `(A/B, min (a - ε)/b)`, and the pair is rescaled so that the tightest
/// constraint equals 1.
fn solve_side_one(inst: &FeasibilityInstance) -> Option<Solution> {
    let (a_dim, b_dim) = (int(inst.dims[0] as i64), int(inst.dims[1] as i64));
    let lo = &a_dim / &b_dim;
    let eps_max = inst
        .constraints
        .iter()
        .map(|c| &c[0] - &c[1] * &lo)
        .min()?;
    if !eps_max.is_positive() {
        return None;
    }
    let eps = &eps_max / int(2);
    let hi = inst
        .constraints
        .iter()
        .filter(|c| c[1].is_positive())
        .map(|c| (&c[0] - &eps) / &c[1])
        .min();
    let ratio = match hi {
        Some(hi) => (&lo + hi) / int(2),
        None => &lo + Rational::one(),
    };
    let (l1, l2) = (Rational::one(), -ratio);
    let tightest = inst
        .constraints
        .iter()
        .map(|c| &c[0] * &l1 + &c[1] * &l2)
        .min()?;
    debug_assert!(tightest.is_positive());
    Some(Solution {
        lambdas: vec![&l1 / &tightest, &l2 / &tightest],
        epsilon: eps,
    })
}

/// Constructive two-subspace solver. Every returned solution has been
/// verified by exact substitution.
pub fn solve_lambdas_2(inst: &FeasibilityInstance) -> Result<Outcome<(Side, Solution)>> {
    let verdict = is_feasible_2(inst)?;
    let found = match verdict.side {
        Some(Side::First) => solve_side_one(inst).map(|s| (Side::First, s)),
        Some(Side::Second) => solve_side_one(&inst.swapped()).map(|s| {
            let lambdas = vec![s.lambdas[1].clone(), s.lambdas[0].clone()];
            (Side::Second, Solution { lambdas, ..s })
        }),
        None => None,
    };
    match found {
        Some((side, sol)) => {
            if !inst.satisfied_by(&sol.lambdas) {
                return Err(CheegerError::Verification(format!(
                    "constructed λ's {:?} fail substitution",
                    sol.lambdas_f64()
                )));
            }
            Ok(Outcome::Feasible((side, sol)))
        }
        None => Ok(Outcome::Infeasible),
    }
}

/// Witness pair for the n-block criterion: `inf a_{j0} > (l-1) Σ_{j≠i0} A_j / Σ A_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairWitness {
    pub i0: usize,
    pub j0: usize,
}

/// Searches all ordered pairs `i0 ≠ j0` for the n-block criterion. The
/// criterion is sufficient for feasibility; it is not necessary once
/// `n ≥ 3` (see the tests).
pub fn is_feasible_n(inst: &FeasibilityInstance) -> Result<Option<PairWitness>> {
    let n = inst.dims.len();
    let lm1 = int(inst.l as i64 - 1);
    let total = inst.total_dim();
    let sum_dims = inst.dims.iter().sum::<u64>();
    for j0 in 0..n {
        let inf = inst.inf(j0);
        for i0 in (0..n).filter(|&i| i != j0) {
            let rest = int((sum_dims - inst.dims[i0]) as i64);
            if inf > &lm1 * rest / &total {
                return Ok(Some(PairWitness { i0, j0 }));
            }
        }
    }
    Ok(None)
}

/// n-block solver: block `j0` keeps its own λ, all other blocks share one
/// value; the collapsed two-block problem is solved and the result expanded
/// and verified by substitution.
pub fn solve_lambdas_n(inst: &FeasibilityInstance) -> Result<Outcome<(PairWitness, Solution)>> {
    let Some(w) = is_feasible_n(inst)? else {
        return Ok(Outcome::Infeasible);
    };
    let j0 = w.j0;
    let rest_dim: u64 = inst.dims.iter().enumerate().filter(|(i, _)| *i != j0).map(|(_, d)| d).sum();
    let collapsed = FeasibilityInstance::new(
        vec![inst.dims[j0], rest_dim],
        inst.l,
        inst.constraints
            .iter()
            .map(|c| {
                let a = c[j0].clone();
                let b = c.iter().sum::<Rational>() - &a;
                vec![a, b]
            })
            .collect(),
    )?;
    let Outcome::Feasible((side, sol)) = solve_lambdas_2(&collapsed)? else {
        return Err(CheegerError::Verification(
            "collapsed instance is infeasible although the pair criterion holds".into(),
        ));
    };
    debug_assert_eq!(side, Side::First);
    let lambdas: Vec<Rational> = (0..inst.dims.len())
        .map(|i| if i == j0 { sol.lambdas[0].clone() } else { sol.lambdas[1].clone() })
        .collect();
    if !inst.satisfied_by(&lambdas) {
        return Err(CheegerError::Verification("expanded λ's fail substitution".into()));
    }
    Ok(Outcome::Feasible((
        w,
        Solution {
            lambdas,
            epsilon: sol.epsilon,
        },
    )))
}
