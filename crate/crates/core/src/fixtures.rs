//! Built-in triples used by the tests, the examples and `emit-fixture`.
//!
//! * `two-point`: `C ⊕ C` on `C²` with the flip, where every twisted
//!   commutator vanishes.
//! * `fuzzy-*`: `M_n ⊕ M_n` acting on `C² ⊗ M_n` by left multiplication,
//!   one copy per chirality, with a Dirac operator built from left and right
//!   multiplications. The flip twist satisfies every axiom exactly, so these
//!   are the nontrivial twisted fixtures.
//! * `lattice-m1`, `lattice-m2`: the lattice minimal twist from
//!   [`crate::manifold`].
//! * `pA2-module`: a projective module `p𝒜²` over the fuzzy fixture.

use crate::algebra::{AlgebraElement, Automorphism, Representation, StarAlgebra};
use crate::error::{Error, Result};
use crate::manifold::{lattice_minimal_twist, MinimalTwistTriple};
use crate::morita::{Connection, HermitianModule, ModuleSide};
use crate::opcore::{AntilinearOp, LinearOp, C64, I, ONE};
use crate::sampling::{random_hermitian_op, rng};
use crate::triple::{KOSignature, RealTwistedTriple};

/// Names accepted by `emit-fixture`.
pub const CATALOG: &[&str] = &[
    "two-point",
    "lattice-m1",
    "lattice-m2",
    "pA2-module",
    "fuzzy-ko0",
    "fuzzy-ko6",
    "fuzzy-odd",
    "fuzzy-untwisted",
];

pub fn sigma(k: usize) -> LinearOp {
    let z = C64::new(0.0, 0.0);
    let rows = match k {
        0 => vec![vec![ONE, z], vec![z, ONE]],
        1 => vec![vec![z, ONE], vec![ONE, z]],
        2 => vec![vec![z, -I], vec![I, z]],
        3 => vec![vec![ONE, z], vec![z, -ONE]],
        _ => panic!("Pauli index {k}"),
    };
    LinearOp::from_rows(&rows).expect("2x2")
}

/// `𝒜 = C ⊕ C`, `ℋ = C²`, `D = σ₁`, `Γ = σ₃`, `J = σ₁∘conj`, `ρ` = flip,
/// signs `(+1, +1, −1)`.
pub fn two_point() -> RealTwistedTriple {
    let alg = StarAlgebra::new(vec![1, 1]).expect("blocks");
    let rep = Representation::standard(alg.clone(), vec![1, 1]).expect("rep");
    RealTwistedTriple::new(
        rep,
        sigma(1),
        AntilinearOp::new(sigma(1)),
        Some(sigma(3)),
        Automorphism::flip(&alg).expect("flip"),
        KOSignature::preset(6).expect("preset"),
    )
    .expect("two-point triple")
}

/// Sign and Dirac-operator pattern of a fuzzy fixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuzzyVariant {
    /// `D = σ₁⊗{H₁,·} + σ₂⊗[H₂,·]`, `J = 1⊗(X ↦ X*)`, signs `(1, 1, 1)`.
    Ko0,
    /// `D = σ₁⊗{H₁,·} + σ₂⊗{H₂,·}`, `J = σ₁⊗(X ↦ X*)`, signs `(1, 1, −1)`.
    Ko6,
    /// `D = σ₁⊗[H₁,·] + σ₂⊗{H₂,·}`, `J = 1⊗(X ↦ X*)`, signs `(1, −1, 1)`.
    Odd,
}

/// `X ↦ a X` on row-major `vec(X)`.
pub(crate) fn left_mult(a: &LinearOp) -> LinearOp {
    a.kron(&LinearOp::identity(a.dim()))
}

/// `X ↦ X a` on row-major `vec(X)`.
pub(crate) fn right_mult(a: &LinearOp) -> LinearOp {
    LinearOp::identity(a.dim()).kron(&a.transpose())
}

/// Permutation `vec(X) ↦ vec(Xᵀ)`.
fn transpose_perm(n: usize) -> LinearOp {
    LinearOp::from_fn(n * n, |i, j| {
        let (t, s) = (i / n, i % n);
        if j == s * n + t {
            ONE
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn fuzzy_parts(n: usize, seed: u64) -> (LinearOp, LinearOp) {
    let mut r = rng(seed);
    (random_hermitian_op(&mut r, n), random_hermitian_op(&mut r, n))
}

fn anti(h: &LinearOp) -> LinearOp {
    &left_mult(h) + &right_mult(h)
}

fn comm(h: &LinearOp) -> LinearOp {
    &left_mult(h) - &right_mult(h)
}

/// Fuzzy twisted fixture `M_n ⊕ M_n` on `C² ⊗ M_n` with the flip twist.
/// `seed` fixes the two Hermitian matrices entering `D`.
pub fn fuzzy(variant: FuzzyVariant, n: usize, seed: u64) -> Result<RealTwistedTriple> {
    if n == 0 {
        return Err(Error::Invalid("matrix size must be positive".into()));
    }
    let alg = StarAlgebra::new(vec![n, n])?;
    let n2 = n * n;
    let mut assignment = Vec::with_capacity(2 * n2);
    for b in 0..2 {
        for s in 0..n {
            for t in 0..n {
                assignment.push(b * n2 + t * n + s);
            }
        }
    }
    let rep = Representation::new(alg.clone(), 2 * n2, vec![n, n], assignment)?;
    let (h1, h2) = fuzzy_parts(n, seed);
    let (d, c, signs) = match variant {
        FuzzyVariant::Ko0 => (
            &sigma(1).kron(&anti(&h1)) + &sigma(2).kron(&comm(&h2)),
            sigma(0),
            KOSignature::preset(0)?,
        ),
        FuzzyVariant::Ko6 => (
            &sigma(1).kron(&anti(&h1)) + &sigma(2).kron(&anti(&h2)),
            sigma(1),
            KOSignature::preset(6)?,
        ),
        FuzzyVariant::Odd => (
            &sigma(1).kron(&comm(&h1)) + &sigma(2).kron(&anti(&h2)),
            sigma(0),
            KOSignature::new(1, -1, 1, None)?,
        ),
    };
    let j = AntilinearOp::new(c.kron(&transpose_perm(n)));
    let gamma = sigma(3).kron(&LinearOp::identity(n2));
    RealTwistedTriple::new(rep, d, j, Some(gamma), Automorphism::flip(&alg)?, signs)
}

/// Untwisted companion: `M_n` acting on both chiralities, `ρ = id`.
pub fn fuzzy_untwisted(n: usize, seed: u64) -> Result<RealTwistedTriple> {
    if n == 0 {
        return Err(Error::Invalid("matrix size must be positive".into()));
    }
    let alg = StarAlgebra::new(vec![n])?;
    let n2 = n * n;
    let mut assignment = Vec::with_capacity(2 * n2);
    for chir in 0..2 {
        for s in 0..n {
            for t in 0..n {
                assignment.push(chir * n2 + t * n + s);
            }
        }
    }
    let rep = Representation::new(alg.clone(), 2 * n2, vec![2 * n], assignment)?;
    let (h1, h2) = fuzzy_parts(n, seed);
    let d = &sigma(1).kron(&anti(&h1)) + &sigma(2).kron(&comm(&h2));
    let j = AntilinearOp::new(sigma(0).kron(&transpose_perm(n)));
    let gamma = sigma(3).kron(&LinearOp::identity(n2));
    RealTwistedTriple::new(
        rep,
        d,
        j,
        Some(gamma),
        Automorphism::identity(&alg),
        KOSignature::preset(0)?,
    )
}

/// Lattice minimal twist in two dimensions, `L = 9`.
pub fn lattice_m1() -> Result<MinimalTwistTriple> {
    lattice_minimal_twist(1, 9, KOSignature::preset(2)?)
}

/// Lattice minimal twist in four dimensions, `L = 3`.
pub fn lattice_m2() -> Result<MinimalTwistTriple> {
    lattice_minimal_twist(2, 3, KOSignature::preset(4)?)
}

/// `E = p𝒜²` over the `fuzzy-ko0` fixture (`n = 2`), with
/// `p = P ⊗ (1, 1)` for the rank-one projection `P = ½[[1,1],[1,1]]`.
/// `p` is flip-invariant, so the twist lifts. The connection is Grassmann.
pub fn pa2_module() -> Result<(RealTwistedTriple, HermitianModule, Connection)> {
    let t = fuzzy(FuzzyVariant::Ko0, 2, 7)?;
    let alg = t.algebra().clone();
    let half = alg.one().scale(C64::new(0.5, 0.0));
    let p = vec![vec![half.clone(), half.clone()], vec![half.clone(), half]];
    let m = HermitianModule::new(&alg, ModuleSide::Right, p, &Default::default())?;
    let c = Connection::grassmann(&t, &m)?;
    Ok((t, m, c))
}

/// A diagonal algebra element helper for `C ⊕ C`-type algebras made of
/// `1×1` blocks.
pub fn scalar_blocks(alg: &StarAlgebra, values: &[C64]) -> Result<AlgebraElement> {
    if alg.blocks().iter().any(|&n| n != 1) || values.len() != alg.num_blocks() {
        return Err(Error::AlgebraMismatch(
            "scalar_blocks needs one value per 1x1 block".into(),
        ));
    }
    alg.element(values.iter().map(|v| LinearOp::from_diagonal(&[*v])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::Tolerance;
    use crate::triple::validate_triple;

    #[test]
    fn fuzzy_variants_satisfy_every_axiom() {
        let tol = Tolerance::default();
        for v in [FuzzyVariant::Ko0, FuzzyVariant::Ko6, FuzzyVariant::Odd] {
            for n in [1, 2, 3] {
                let t = fuzzy(v, n, 5).unwrap();
                let rep = validate_triple(&t, &tol);
                assert!(rep.pass, "{v:?} n={n}: {:?}", rep.failing());
            }
        }
        let u = fuzzy_untwisted(3, 5).unwrap();
        assert!(validate_triple(&u, &tol).pass);
    }

    #[test]
    fn fuzzy_dirac_twist_is_not_trivial() {
        let t = fuzzy(FuzzyVariant::Ko0, 2, 5).unwrap();
        let mut r = rng(3);
        let a = t.algebra().random(&mut r);
        assert!(t.delta(&a).unwrap().norm_fro() > 1e-3);
    }

    #[test]
    fn left_and_right_multiplication_match_matrix_products() {
        let mut r = rng(4);
        let a = crate::sampling::random_op(&mut r, 3);
        let x = crate::sampling::random_op(&mut r, 3);
        let ax = left_mult(&a).apply(x.as_slice());
        let xa = right_mult(&a).apply(x.as_slice());
        let ax_ref = a.matmul(&x);
        let xa_ref = x.matmul(&a);
        for k in 0..9 {
            assert!((ax[k] - ax_ref.as_slice()[k]).norm() < 1e-12);
            assert!((xa[k] - xa_ref.as_slice()[k]).norm() < 1e-12);
        }
    }
}
