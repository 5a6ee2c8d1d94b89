//! Finite-dimensional *-algebras `M_{n₁}(C) ⊕ … ⊕ M_{n_k}(C)`, their
//! representations, automorphisms of the form (block permutation) ∘ (blockwise
//! inner), and the opposite-algebra action `a° = J a* J⁻¹`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opcore::{
    conjugate_by, unitarity_residual, AntilinearOp, Comparison, LinearOp, Sparse, Tolerance, C64,
    ONE, ZERO,
};
use crate::sampling::{bounded_hermitian, exp_i_hermitian, random_op, SeededRng};

/// Direct sum of full complex matrix blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarAlgebra {
    blocks: Vec<usize>,
}

impl StarAlgebra {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::Invalid(format!(
                "an algebra needs at least one block of positive size, got {blocks:?}"
            )));
        }
        Ok(StarAlgebra { blocks })
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Complex dimension `Σ nᵢ²`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Locates basis index `α` as `(block, row, col)`. Matrix units are
    /// ordered block by block, row-major inside a block.
    pub fn basis_position(&self, mut alpha: usize) -> (usize, usize, usize) {
        for (b, &n) in self.blocks.iter().enumerate() {
            if alpha < n * n {
                return (b, alpha / n, alpha % n);
            }
            alpha -= n * n;
        }
        panic!("basis index out of range");
    }

    pub fn basis_index(&self, block: usize, row: usize, col: usize) -> usize {
        let offset: usize = self.blocks[..block].iter().map(|n| n * n).sum();
        offset + row * self.blocks[block] + col
    }

    /// Matrix unit number `α`.
    pub fn basis_element(&self, alpha: usize) -> AlgebraElement {
        let (b, r, c) = self.basis_position(alpha);
        let mut e = self.zero();
        e.parts[b].set(r, c, ONE);
        e
    }

    pub fn basis(&self) -> Vec<AlgebraElement> {
        (0..self.dim()).map(|a| self.basis_element(a)).collect()
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            parts: self.blocks.iter().map(|&n| LinearOp::zeros(n)).collect(),
        }
    }

    pub fn one(&self) -> AlgebraElement {
        AlgebraElement {
            parts: self.blocks.iter().map(|&n| LinearOp::identity(n)).collect(),
        }
    }

    pub fn contains(&self, a: &AlgebraElement) -> bool {
        a.parts.len() == self.blocks.len()
            && a.parts.iter().zip(&self.blocks).all(|(p, &n)| p.dim() == n)
    }

    pub(crate) fn require(&self, a: &AlgebraElement) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch(format!(
                "element with blocks {:?} in algebra with blocks {:?}",
                a.block_sizes(),
                self.blocks
            )))
        }
    }

    pub fn element(&self, parts: Vec<LinearOp>) -> Result<AlgebraElement> {
        let a = AlgebraElement { parts };
        self.require(&a)?;
        Ok(a)
    }

    /// Element with the given matrix-unit coordinates.
    pub fn from_coords(&self, coords: &[C64]) -> Result<AlgebraElement> {
        if coords.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} coordinates for an algebra of dimension {}",
                coords.len(),
                self.dim()
            )));
        }
        let mut parts = Vec::with_capacity(self.blocks.len());
        let mut k = 0;
        for &n in &self.blocks {
            parts.push(LinearOp::from_row_major(n, coords[k..k + n * n].to_vec())?);
            k += n * n;
        }
        Ok(AlgebraElement { parts })
    }

    pub fn random(&self, r: &mut SeededRng) -> AlgebraElement {
        AlgebraElement {
            parts: self.blocks.iter().map(|&n| random_op(r, n)).collect(),
        }
    }

    /// Hermitian element with every block of operator norm at most `π`.
    pub fn random_hermitian(&self, r: &mut SeededRng) -> AlgebraElement {
        AlgebraElement {
            parts: self
                .blocks
                .iter()
                .map(|&n| bounded_hermitian(r, n))
                .collect(),
        }
    }

    /// `u = exp(iH)` with `H` from [`StarAlgebra::random_hermitian`].
    pub fn random_unitary(&self, r: &mut SeededRng) -> AlgebraElement {
        let h = self.random_hermitian(r);
        AlgebraElement {
            parts: h.parts.iter().map(exp_i_hermitian).collect(),
        }
    }
}

/// An element of a [`StarAlgebra`], stored block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    parts: Vec<LinearOp>,
}

impl AlgebraElement {
    pub fn parts(&self) -> &[LinearOp] {
        &self.parts
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.dim()).collect()
    }

    fn same_shape(&self, other: &AlgebraElement) -> Result<()> {
        if self.block_sizes() != other.block_sizes() {
            return Err(Error::AlgebraMismatch(format!(
                "blocks {:?} and {:?}",
                self.block_sizes(),
                other.block_sizes()
            )));
        }
        Ok(())
    }

    /// Blockwise conjugate transpose.
    pub fn star(&self) -> Self {
        AlgebraElement {
            parts: self.parts.iter().map(|p| p.adjoint()).collect(),
        }
    }

    pub fn try_mul(&self, other: &AlgebraElement) -> Result<Self> {
        self.same_shape(other)?;
        Ok(AlgebraElement {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a.matmul(b))
                .collect(),
        })
    }

    pub fn try_add(&self, other: &AlgebraElement) -> Result<Self> {
        self.same_shape(other)?;
        Ok(AlgebraElement {
            parts: self
                .parts
                .iter()
                .zip(&other.parts)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        AlgebraElement {
            parts: self.parts.iter().map(|p| p.scale(z)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.parts
            .iter()
            .map(|p| p.norm_fro().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinates in the matrix-unit basis.
    pub fn coords(&self) -> Vec<C64> {
        self.parts
            .iter()
            .flat_map(|p| p.as_slice().iter().copied())
            .collect()
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.parts.iter().map(unitarity_residual).sum()
    }

    pub fn is_unitary(&self, tol: &Tolerance) -> bool {
        let scale: f64 = self.parts.iter().map(|p| (p.dim() as f64).sqrt()).sum();
        tol.accepts(self.unitarity_residual(), scale)
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.try_mul(rhs).expect("algebra product")
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.try_add(rhs).expect("algebra sum")
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.try_add(&rhs.scale(C64::new(-1.0, 0.0)))
            .expect("algebra difference")
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// A *-representation where block `i` acts on `μᵢ` orthogonal copies of
/// `C^{nᵢ}` sitting inside `C^{hilbert_dim}` at prescribed basis vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    algebra: StarAlgebra,
    hilbert_dim: usize,
    multiplicities: Vec<usize>,
    /// Hilbert index of `(block, copy, row)`, enumerated block-major, then
    /// copy, then row.
    assignment: Vec<usize>,
}

impl Representation {
    pub fn new(
        algebra: StarAlgebra,
        hilbert_dim: usize,
        multiplicities: Vec<usize>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if multiplicities.len() != algebra.num_blocks() {
            return Err(Error::Invalid(format!(
                "{} multiplicities for {} blocks",
                multiplicities.len(),
                algebra.num_blocks()
            )));
        }
        let expected: usize = algebra
            .blocks()
            .iter()
            .zip(&multiplicities)
            .map(|(n, m)| n * m)
            .sum();
        if assignment.len() != expected {
            return Err(Error::Invalid(format!(
                "assignment has {} entries, expected {}",
                assignment.len(),
                expected
            )));
        }
        let mut seen = vec![false; hilbert_dim];
        for &h in &assignment {
            if h >= hilbert_dim || seen[h] {
                return Err(Error::Invalid(format!(
                    "assignment index {h} is out of range or repeated"
                )));
            }
            seen[h] = true;
        }
        Ok(Representation {
            algebra,
            hilbert_dim,
            multiplicities,
            assignment,
        })
    }

    /// Copies laid out consecutively, block after block.
    pub fn standard(algebra: StarAlgebra, multiplicities: Vec<usize>) -> Result<Self> {
        let total: usize = algebra
            .blocks()
            .iter()
            .zip(&multiplicities)
            .map(|(n, m)| n * m)
            .sum();
        Self::new(algebra, total, multiplicities, (0..total).collect())
    }

    pub fn algebra(&self) -> &StarAlgebra {
        &self.algebra
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn is_unital(&self) -> bool {
        self.assignment.len() == self.hilbert_dim
    }

    fn block_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.algebra.num_blocks());
        let mut k = 0;
        for (n, m) in self.algebra.blocks().iter().zip(&self.multiplicities) {
            offs.push(k);
            k += n * m;
        }
        offs
    }

    /// Nonzero entries `(row, col, value)` of `π(a)`.
    fn entries(&self, a: &AlgebraElement) -> Vec<(usize, usize, C64)> {
        let offs = self.block_offsets();
        let mut out = Vec::new();
        for (b, part) in a.parts.iter().enumerate() {
            let n = part.dim();
            for c in 0..self.multiplicities[b] {
                let base = offs[b] + c * n;
                for r in 0..n {
                    for s in 0..n {
                        let z = part.get(r, s);
                        if z != ZERO {
                            out.push((self.assignment[base + r], self.assignment[base + s], z));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn embed(&self, a: &AlgebraElement) -> Result<LinearOp> {
        self.algebra.require(a)?;
        let mut t = LinearOp::zeros(self.hilbert_dim);
        for (i, j, z) in self.entries(a) {
            t.set(i, j, z);
        }
        Ok(t)
    }

    pub(crate) fn embed_sparse(&self, a: &AlgebraElement) -> Sparse {
        Sparse {
            entries: self.entries(a),
        }
    }

    /// Checks `π(EF) = π(E)π(F)` and `π(E*) = π(E)*` on all pairs of matrix
    /// units, plus `π(1) = 1` when the representation is unital.
    pub fn check_homomorphism(&self, tol: &Tolerance) -> Comparison {
        let basis = self.algebra.basis();
        let sparse: Vec<BTreeMap<(usize, usize), C64>> = basis
            .iter()
            .map(|e| self.entries(e).into_iter().map(|(i, j, z)| ((i, j), z)).collect())
            .collect();
        let mut worst = Comparison::exact_zero(tol);
        let diff = |x: &BTreeMap<(usize, usize), C64>, y: &BTreeMap<(usize, usize), C64>| {
            let mut s = 0.0;
            for (k, v) in x {
                s += (v - y.get(k).copied().unwrap_or(ZERO)).norm_sqr();
            }
            for (k, v) in y {
                if !x.contains_key(k) {
                    s += v.norm_sqr();
                }
            }
            s.sqrt()
        };
        let norm = |x: &BTreeMap<(usize, usize), C64>| {
            x.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        };
        for (a, ea) in basis.iter().enumerate() {
            let star: BTreeMap<(usize, usize), C64> = self
                .entries(&ea.star())
                .into_iter()
                .map(|(i, j, z)| ((i, j), z))
                .collect();
            let adj: BTreeMap<(usize, usize), C64> =
                sparse[a].iter().map(|(&(i, j), z)| ((j, i), z.conj())).collect();
            worst = worst.worst(Comparison::new(diff(&star, &adj), norm(&adj), tol));
            for (b, eb) in basis.iter().enumerate() {
                let prod: BTreeMap<(usize, usize), C64> = self
                    .entries(&(ea * eb))
                    .into_iter()
                    .map(|(i, j, z)| ((i, j), z))
                    .collect();
                let mut composed: BTreeMap<(usize, usize), C64> = BTreeMap::new();
                for (&(i, k), x) in &sparse[a] {
                    for (&(k2, j), y) in &sparse[b] {
                        if k == k2 {
                            *composed.entry((i, j)).or_insert(ZERO) += x * y;
                        }
                    }
                }
                composed.retain(|_, z| *z != ZERO);
                let scale = norm(&prod).max(norm(&composed));
                worst = worst.worst(Comparison::new(diff(&prod, &composed), scale, tol));
            }
        }
        if self.is_unital() {
            let one = self.embed(&self.algebra.one()).expect("unit");
            let id = LinearOp::identity(self.hilbert_dim);
            worst = worst.worst(crate::opcore::compare(&one, &id, tol));
        }
        worst
    }
}

/// `ρ(a)ᵢ = Wᵢ · a_{perm(i)} · Wᵢ*`.
#[derive(Clone, Debug, PartialEq)]
pub struct Automorphism {
    algebra: StarAlgebra,
    perm: Vec<usize>,
    unitaries: Vec<LinearOp>,
}

/// Outcome of the regularity test `ρ(a*) = (ρ⁻¹(a))*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub residual: f64,
    pub threshold: f64,
    pub regular: bool,
}

impl Automorphism {
    pub fn new(
        algebra: StarAlgebra,
        perm: Vec<usize>,
        unitaries: Vec<LinearOp>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let k = algebra.num_blocks();
        if perm.len() != k || unitaries.len() != k {
            return Err(Error::Invalid(format!(
                "automorphism needs {k} permutation entries and unitaries"
            )));
        }
        let mut seen = vec![false; k];
        for &p in &perm {
            if p >= k || seen[p] {
                return Err(Error::Invalid(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        for (i, &p) in perm.iter().enumerate() {
            let n = algebra.blocks()[i];
            if algebra.blocks()[p] != n {
                return Err(Error::Invalid(format!(
                    "block {i} of size {n} cannot receive block {p}"
                )));
            }
            if unitaries[i].dim() != n {
                return Err(Error::Dimension(format!(
                    "unitary {i} has size {}, block has size {n}",
                    unitaries[i].dim()
                )));
            }
            if !unitaries[i].is_unitary(tol) {
                return Err(Error::NotUnitary {
                    residual: unitarity_residual(&unitaries[i]),
                });
            }
        }
        Ok(Automorphism {
            algebra,
            perm,
            unitaries,
        })
    }

    pub fn identity(algebra: &StarAlgebra) -> Self {
        Automorphism {
            perm: (0..algebra.num_blocks()).collect(),
            unitaries: algebra
                .blocks()
                .iter()
                .map(|&n| LinearOp::identity(n))
                .collect(),
            algebra: algebra.clone(),
        }
    }

    /// Pure block permutation.
    pub fn permutation(algebra: &StarAlgebra, perm: Vec<usize>) -> Result<Self> {
        let unitaries = algebra
            .blocks()
            .iter()
            .map(|&n| LinearOp::identity(n))
            .collect();
        Self::new(algebra.clone(), perm, unitaries, &Tolerance::default())
    }

    /// Exchanges the first half of the blocks with the second half, which is
    /// the flip `(f, g) ↦ (g, f)` on `B ⊕ B`.
    pub fn flip(algebra: &StarAlgebra) -> Result<Self> {
        let k = algebra.num_blocks();
        if k % 2 != 0 {
            return Err(Error::Invalid(
                "the flip needs an even number of blocks".into(),
            ));
        }
        let h = k / 2;
        Self::permutation(algebra, (0..k).map(|i| (i + h) % k).collect())
    }

    pub fn algebra(&self) -> &StarAlgebra {
        &self.algebra
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn unitaries(&self) -> &[LinearOp] {
        &self.unitaries
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
            && self
                .unitaries
                .iter()
                .all(|w| *w == LinearOp::identity(w.dim()))
    }

    pub fn apply(&self, a: &AlgebraElement) -> Result<AlgebraElement> {
        self.algebra.require(a)?;
        Ok(AlgebraElement {
            parts: self
                .perm
                .iter()
                .zip(&self.unitaries)
                .map(|(&p, w)| w.matmul(&a.parts[p]).matmul(&w.adjoint()))
                .collect(),
        })
    }

    pub fn inverse(&self) -> Self {
        let k = self.perm.len();
        let mut inv = vec![0; k];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        let unitaries = inv.iter().map(|&q| self.unitaries[q].adjoint()).collect();
        Automorphism {
            algebra: self.algebra.clone(),
            perm: inv,
            unitaries,
        }
    }

    pub fn compose(&self, other: &Automorphism) -> Result<Self> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch("composing automorphisms".into()));
        }
        // (ρσ)(a)ᵢ = Wᵢ V_{p(i)} a_{q(p(i))} V_{p(i)}* Wᵢ*
        let perm = self.perm.iter().map(|&p| other.perm[p]).collect();
        let unitaries = self
            .perm
            .iter()
            .zip(&self.unitaries)
            .map(|(&p, w)| w.matmul(&other.unitaries[p]))
            .collect();
        Ok(Automorphism {
            algebra: self.algebra.clone(),
            perm,
            unitaries,
        })
    }

    /// Largest `‖ρ(e*) − (ρ⁻¹(e))*‖` over the matrix-unit basis.
    pub fn check_regular(&self, tol: &Tolerance) -> RegularityReport {
        let inv = self.inverse();
        let mut worst = Comparison::exact_zero(tol);
        for e in self.algebra.basis() {
            let lhs = self.apply(&e.star()).expect("basis element");
            let rhs = inv.apply(&e).expect("basis element").star();
            let r = (&lhs - &rhs).norm();
            worst = worst.worst(Comparison::new(r, lhs.norm().max(rhs.norm()), tol));
        }
        RegularityReport {
            residual: worst.residual,
            threshold: worst.threshold,
            regular: worst.pass(),
        }
    }
}

/// `a° = J a* J⁻¹`.
pub fn opposite_element(j: &AntilinearOp, a: &LinearOp, tol: &Tolerance) -> Result<LinearOp> {
    conjugate_by(j, &a.adjoint(), tol)
}

/// `ρ°(b°)` computed as `(ρ⁻¹(b))°` and cross-checked against `J ρ(b*) J⁻¹`.
pub fn rho_opposite(
    rho: &Automorphism,
    rep: &Representation,
    j: &AntilinearOp,
    b: &AlgebraElement,
    tol: &Tolerance,
) -> Result<LinearOp> {
    let reg = rho.check_regular(tol);
    if !reg.regular {
        return Err(Error::IrregularTwist {
            residual: reg.residual,
        });
    }
    let via_inverse = opposite_element(j, &rep.embed(&rho.inverse().apply(b)?)?, tol)?;
    let via_j = conjugate_by(j, &rep.embed(&rho.apply(&b.star())?)?, tol)?;
    let c = crate::opcore::compare(&via_inverse, &via_j, tol);
    if !c.pass() {
        return Err(Error::IdentityViolation {
            name: "rho-opposite dual route".into(),
            residual: c.residual,
            threshold: c.threshold,
        });
    }
    Ok(via_inverse)
}
