#![allow(dead_code)]

use cheeger::feasibility::{rat, FeasibilityInstance, Rational};
use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rand::Rng;

/// Random two-block instance with entries in ¼ℤ, A, B ≤ 10, l ≤ 12 and at
/// most 8 constraints.
pub fn random_instance<R: Rng>(rng: &mut R) -> FeasibilityInstance {
    let a = rng.gen_range(1..=10u64);
    let b = rng.gen_range(1..=10u64);
    let l = rng.gen_range(2..=12u64);
    let quarters = 4 * (l as i64 - 1);
    let pairs: Vec<(Rational, Rational)> = (0..rng.gen_range(1..=8))
        .map(|_| {
            let q = rng.gen_range(0..=quarters);
            (rat(q, 4), rat(quarters - q, 4))
        })
        .collect();
    FeasibilityInstance::two(a, b, l, &pairs).unwrap()
}

fn quarter_int(x: &Rational) -> i64 {
    let y = x * rat(4, 1);
    assert!(y.is_integer(), "{x} is not in ¼ℤ");
    y.to_integer().to_i64().unwrap()
}

/// Exact search over λ ∈ 0.2ℤ² ∩ [-20, 20]², for instances with entries in
/// ¼ℤ. The feasible set is an open cone cut out by integer normals of size
/// at most 44 after scaling by 4, so when it is nonempty it contains the sum
/// of two boundary directions (or a normal, for a half-plane), whose entries
/// are at most 88 in absolute value. That point lies on the search lattice.
pub fn lattice_feasible(inst: &FeasibilityInstance) -> bool {
    let rows: Vec<(i64, i64)> = inst
        .constraints()
        .iter()
        .map(|c| (quarter_int(&c[0]), quarter_int(&c[1])))
        .collect();
    let (da, db) = (inst.dims()[0] as i64, inst.dims()[1] as i64);
    for p in -100..=100i64 {
        for q in -100..=100i64 {
            if da * p + db * q < 0 && rows.iter().all(|&(a, b)| a * p + b * q > 0) {
                return true;
            }
        }
    }
    false
}

/// Uniform point on the unit sphere by rejection from the cube.
pub fn unit_sphere<R: Rng>(rng: &mut R, k: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}
