//! Hermitian modules `p𝒜^N` and `𝒜^N p`, connections, the balanced tensor
//! products `ℋ_R = E ⊗_𝒜 ℋ` and `ℋ_L = ℋ ⊗_𝒜 E`, and the covariant
//! operators they carry.
//!
//! Both balanced spaces are built twice. The abstract quotient lives in the
//! ambient space `𝒜^N ⊗_C ℋ`, indexed by `(slot j, algebra basis α, Hilbert
//! basis k) ↦ (j·dim𝒜 + α)·dimℋ + k`, and is obtained by removing the span
//! of the balancing relations. The concrete model is `pℋ^N` for right
//! modules and the mirrored projection `(P_L)_{mj} = (p_jm)°` on `ℋ^N` for
//! left modules. The canonical map `Φ` between them pulls back the module
//! inner product, so the quotient is given the basis that makes `Φ` an
//! isometry.
//!
//! Relations only need to be generated by the `N` module generators
//! (`pe_j` or `e_j p`): `ξb a ⊗ ψ − ξb ⊗ aψ` is a difference of two
//! generator relations. This keeps the relation matrix square.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, Automorphism, StarAlgebra};
use crate::error::{Error, Result};
use crate::forms::{j_conjugate_form, Side, TwistedOneForm};
use crate::opcore::{compare, Comparison, LinearOp, Tolerance, C64, ONE};
use crate::sampling::{random_unitary_op, SeededRng};
use crate::triple::RealTwistedTriple;
use rand::Rng;

/// Eigenvalues of a Gram matrix below this fraction of the largest are
/// treated as zero when computing the rank of a relation span.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Minimal ratio between the smallest kept and the largest dropped Gram
/// eigenvalue for a rank decision to be accepted.
pub const MIN_SPECTRAL_GAP: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleSide {
    Right,
    Left,
}

impl ModuleSide {
    /// The bimodule of forms a connection on this side takes values in.
    pub fn form_side(self) -> Side {
        match self {
            ModuleSide::Right => Side::Plain,
            ModuleSide::Left => Side::Opposite,
        }
    }
}

/// `E = p𝒜^N` (columns) or `E = 𝒜^N p` (rows) for a projection
/// `p ∈ M_N(𝒜)`.
#[derive(Clone, Debug)]
pub struct HermitianModule {
    algebra: StarAlgebra,
    side: ModuleSide,
    p: Vec<Vec<AlgebraElement>>,
}

/// An element of a module, stored by its `N` components.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleElement {
    side: ModuleSide,
    comps: Vec<AlgebraElement>,
}

impl ModuleElement {
    pub fn side(&self) -> ModuleSide {
        self.side
    }

    pub fn comps(&self) -> &[AlgebraElement] {
        &self.comps
    }
}

fn sum_elements(alg: &StarAlgebra, terms: impl Iterator<Item = AlgebraElement>) -> AlgebraElement {
    terms.fold(alg.zero(), |acc, x| &acc + &x)
}

impl HermitianModule {
    pub fn new(
        algebra: &StarAlgebra,
        side: ModuleSide,
        p: Vec<Vec<AlgebraElement>>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = p.len();
        if n == 0 || p.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension("projection must be a nonempty square matrix".into()));
        }
        for x in p.iter().flatten() {
            algebra.require(x)?;
        }
        let m = HermitianModule {
            algebra: algebra.clone(),
            side,
            p,
        };
        let c = m.projection_residual(tol);
        if !c.pass() {
            return Err(Error::IdentityViolation {
                name: "projection p = p* = p²".into(),
                residual: c.residual,
                threshold: c.threshold,
            });
        }
        Ok(m)
    }

    /// The free module with `p = 1`.
    pub fn free(algebra: &StarAlgebra, side: ModuleSide, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("free module of rank zero".into()));
        }
        let p = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| if j == k { algebra.one() } else { algebra.zero() })
                    .collect()
            })
            .collect();
        Self::new(algebra, side, p, &Tolerance::default())
    }

    /// A random projection of random rank in each block. With `invariant_under`,
    /// the projection is copied along the block orbits of a twist whose
    /// unitary parts are trivial, so that `ρ(p) = p`.
    pub fn random(
        algebra: &StarAlgebra,
        side: ModuleSide,
        n: usize,
        r: &mut SeededRng,
        invariant_under: Option<&Automorphism>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("module of rank zero".into()));
        }
        let k = algebra.num_blocks();
        let mut big: Vec<Option<LinearOp>> = vec![None; k];
        let orbit_of = |b: usize| -> Result<Vec<usize>> {
            match invariant_under {
                None => Ok(vec![b]),
                Some(rho) => {
                    if rho.unitaries().iter().any(|w| w != &LinearOp::identity(w.dim())) {
                        return Err(Error::Invalid(
                            "random invariant projections need a pure block permutation".into(),
                        ));
                    }
                    let mut orbit = vec![b];
                    let mut c = rho.perm()[b];
                    while c != b {
                        orbit.push(c);
                        c = rho.perm()[c];
                    }
                    Ok(orbit)
                }
            }
        };
        for b in 0..k {
            if big[b].is_some() {
                continue;
            }
            let d = n * algebra.blocks()[b];
            let rank = r.random_range(1..=d);
            let u = random_unitary_op(r, d);
            let diag: Vec<C64> = (0..d)
                .map(|i| if i < rank { ONE } else { C64::new(0.0, 0.0) })
                .collect();
            let proj = u.matmul(&LinearOp::from_diagonal(&diag)).matmul(&u.adjoint());
            for c in orbit_of(b)? {
                big[c] = Some(proj.clone());
            }
        }
        let mut p = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::with_capacity(n);
            for l in 0..n {
                let parts = (0..k)
                    .map(|b| {
                        let nb = algebra.blocks()[b];
                        let pb = big[b].as_ref().expect("filled");
                        LinearOp::from_fn(nb, |x, y| pb.get(j * nb + x, l * nb + y))
                    })
                    .collect();
                row.push(algebra.element(parts)?);
            }
            p.push(row);
        }
        // Rebuilt from exact block slices of a unitary conjugation; use a
        // loose tolerance for the projection check.
        Self::new(algebra, side, p, &Tolerance::new(1e-8, 1e-10)?)
    }

    pub fn algebra(&self) -> &StarAlgebra {
        &self.algebra
    }

    pub fn side(&self) -> ModuleSide {
        self.side
    }

    /// Number of slots `N`.
    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[Vec<AlgebraElement>] {
        &self.p
    }

    pub fn projection_residual(&self, tol: &Tolerance) -> Comparison {
        let n = self.n();
        let (mut herm, mut idem, mut scale) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..n {
            for k in 0..n {
                let pjk = &self.p[j][k];
                scale += pjk.norm().powi(2);
                herm += (pjk - &self.p[k][j].star()).norm().powi(2);
                let sq = sum_elements(&self.algebra, (0..n).map(|l| &self.p[j][l] * &self.p[l][k]));
                idem += (&sq - pjk).norm().powi(2);
            }
        }
        Comparison::new(herm.sqrt() + idem.sqrt(), scale.sqrt(), tol)
    }

    /// `max ‖ρ(p_jk) − p_jk‖`.
    pub fn rho_invariance_residual(&self, rho: &Automorphism) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in self.p.iter().flatten() {
            worst = worst.max((&rho.apply(x)? - x).norm());
        }
        Ok(worst)
    }

    pub fn is_rho_invariant(&self, rho: &Automorphism, tol: &Tolerance) -> Result<bool> {
        let scale = self.p.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
        Ok(self.rho_invariance_residual(rho)? <= tol.threshold(scale))
    }

    /// `pη` for right modules, `ηp` for left modules.
    fn compress(&self, comps: &[AlgebraElement]) -> Vec<AlgebraElement> {
        let n = self.n();
        (0..n)
            .map(|i| match self.side {
                ModuleSide::Right => {
                    sum_elements(&self.algebra, (0..n).map(|k| &self.p[i][k] * &comps[k]))
                }
                ModuleSide::Left => {
                    sum_elements(&self.algebra, (0..n).map(|j| &comps[j] * &self.p[j][i]))
                }
            })
            .collect()
    }

    /// Projects arbitrary components into the module.
    pub fn element(&self, comps: Vec<AlgebraElement>) -> Result<ModuleElement> {
        if comps.len() != self.n() {
            return Err(Error::Dimension(format!(
                "module element needs {} components, got {}",
                self.n(),
                comps.len()
            )));
        }
        for x in &comps {
            self.algebra.require(x)?;
        }
        Ok(ModuleElement {
            side: self.side,
            comps: self.compress(&comps),
        })
    }

    pub fn random_element(&self, r: &mut SeededRng) -> ModuleElement {
        let comps: Vec<AlgebraElement> = (0..self.n()).map(|_| self.algebra.random(r)).collect();
        ModuleElement {
            side: self.side,
            comps: self.compress(&comps),
        }
    }

    /// `pe_j` for right modules, `e_j p` for left modules.
    pub fn generator(&self, j: usize) -> ModuleElement {
        let comps = (0..self.n())
            .map(|i| match self.side {
                ModuleSide::Right => self.p[i][j].clone(),
                ModuleSide::Left => self.p[j][i].clone(),
            })
            .collect();
        ModuleElement {
            side: self.side,
            comps,
        }
    }

    /// `ηa` on a right module, `aη` on a left module.
    pub fn act(&self, eta: &ModuleElement, a: &AlgebraElement) -> ModuleElement {
        let comps = eta
            .comps
            .iter()
            .map(|x| match self.side {
                ModuleSide::Right => x * a,
                ModuleSide::Left => a * x,
            })
            .collect();
        ModuleElement {
            side: self.side,
            comps,
        }
    }

    /// `⟨ξ,η⟩ = Σ ξ_i* η_i` (right) or `Σ ξ_i η_i*` (left).
    pub fn inner(&self, xi: &ModuleElement, eta: &ModuleElement) -> AlgebraElement {
        sum_elements(
            &self.algebra,
            xi.comps.iter().zip(&eta.comps).map(|(x, y)| match self.side {
                ModuleSide::Right => &x.star() * y,
                ModuleSide::Left => x * &y.star(),
            }),
        )
    }
}

/// `ρ̃(η) = p(ρ(η_1),…,ρ(η_N))ᵀ` on right modules and
/// `(ρ(η_1),…,ρ(η_N))p` on left modules.
pub fn lift_automorphism(
    m: &HermitianModule,
    rho: &Automorphism,
    eta: &ModuleElement,
    tol: &Tolerance,
) -> Result<ModuleElement> {
    if !m.is_rho_invariant(rho, tol)? {
        return Err(Error::NotInvariant {
            residual: m.rho_invariance_residual(rho)?,
        });
    }
    let twisted = eta
        .comps
        .iter()
        .map(|x| rho.apply(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModuleElement {
        side: m.side,
        comps: m.compress(&twisted),
    })
}

/// A connection stored as Grassmann part plus an `N×N` matrix of forms.
///
/// On a right module `∇η = Σ_j pe_j ⊗ (δ(η_j) + Σ_k A_jk η_k)`; on a left
/// module `∇°η = Σ_j (δ°(η_j) + Σ_k η_k·A_kj) ⊗ e_j p` with `η·ω° = ω°η°`.
#[derive(Clone, Debug)]
pub struct Connection {
    module: HermitianModule,
    potential: Vec<Vec<TwistedOneForm>>,
}

impl Connection {
    pub fn grassmann(t: &RealTwistedTriple, m: &HermitianModule) -> Result<Self> {
        let side = m.side.form_side();
        let n = m.n();
        let zero = TwistedOneForm::zero(t.dim(), side);
        Self::new(t, m, vec![vec![zero; n]; n])
    }

    pub fn new(
        t: &RealTwistedTriple,
        m: &HermitianModule,
        potential: Vec<Vec<TwistedOneForm>>,
    ) -> Result<Self> {
        if t.algebra() != m.algebra() {
            return Err(Error::AlgebraMismatch(
                "module and triple are over different algebras".into(),
            ));
        }
        let n = m.n();
        if potential.len() != n || potential.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!("potential must be {n}×{n}")));
        }
        let side = m.side.form_side();
        for w in potential.iter().flatten() {
            if w.side() != side {
                return Err(Error::Invalid(format!(
                    "a {:?} module connection takes {:?} forms",
                    m.side, side
                )));
            }
            if w.value().dim() != t.dim() {
                return Err(Error::Dimension("potential entry has the wrong size".into()));
            }
        }
        Ok(Connection {
            module: m.clone(),
            potential,
        })
    }

    /// A self-equivalence connection `∇₀ + ω` on `E = 𝒜`.
    pub fn self_equivalence(t: &RealTwistedTriple, side: ModuleSide, w: TwistedOneForm) -> Result<Self> {
        let m = HermitianModule::free(t.algebra(), side, 1)?;
        Self::new(t, &m, vec![vec![w]])
    }

    pub fn module(&self) -> &HermitianModule {
        &self.module
    }

    pub fn potential(&self) -> &[Vec<TwistedOneForm>] {
        &self.potential
    }

    pub fn target(&self) -> Side {
        self.module.side.form_side()
    }

    pub fn is_grassmann(&self) -> bool {
        self.potential.iter().flatten().all(|w| w.value().max_abs() == 0.0)
    }

    fn a(&self, i: usize, k: usize) -> &LinearOp {
        self.potential[i][k].value()
    }
}

/// Dense row-major accumulator for ambient operators.
struct Ambient {
    n_slots: usize,
    da: usize,
    dh: usize,
}

impl Ambient {
    fn dim(&self) -> usize {
        self.n_slots * self.da * self.dh
    }

    fn index(&self, slot: usize, alpha: usize, k: usize) -> usize {
        (slot * self.da + alpha) * self.dh + k
    }

    /// `out[(slot, ·, ·)] += coords ⊗ phi`.
    fn add_tensor(&self, out: &mut [C64], slot: usize, coords: &[C64], phi: &[C64]) {
        for (beta, c) in coords.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            let base = self.index(slot, beta, 0);
            for (k, f) in phi.iter().enumerate() {
                out[base + k] += c * f;
            }
        }
    }

    fn sub_tensor(&self, out: &mut [C64], slot: usize, coords: &[C64], phi: &[C64]) {
        let neg: Vec<C64> = coords.iter().map(|c| -c).collect();
        self.add_tensor(out, slot, &neg, phi);
    }
}

fn column(op: &LinearOp, k: usize) -> Vec<C64> {
    (0..op.dim()).map(|i| op.get(i, k)).collect()
}

fn unit(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[k] = ONE;
    v
}

/// Assembles a square operator from its columns.
fn from_columns(n: usize, mut col: impl FnMut(usize) -> Result<Vec<C64>>) -> Result<LinearOp> {
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for c in 0..n {
        let v = col(c)?;
        for (r, z) in v.into_iter().enumerate() {
            data[r * n + c] = z;
        }
    }
    LinearOp::from_row_major(n, data)
}

struct Spectrum {
    rank: usize,
    gap: f64,
    cutoff: f64,
    /// Eigenvectors as columns, sorted by decreasing eigenvalue.
    vectors: DMatrix<C64>,
}

/// Rank of a positive semidefinite Hermitian matrix from its spectrum.
fn spectral_rank(h: &DMatrix<C64>) -> Result<Spectrum> {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let ev: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let emax = ev.first().copied().unwrap_or(0.0);
    let cutoff = RANK_CUTOFF * emax;
    let rank = if emax == 0.0 { 0 } else { ev.iter().take_while(|&&e| e > cutoff).count() };
    let gap = if rank == 0 || rank == ev.len() {
        f64::MAX
    } else {
        ev[rank - 1] / ev[rank].max(f64::EPSILON * emax)
    };
    if gap < MIN_SPECTRAL_GAP {
        return Err(Error::RankDeficiency {
            gap,
            threshold: MIN_SPECTRAL_GAP,
        });
    }
    Ok(Spectrum {
        rank,
        gap,
        cutoff,
        vectors,
    })
}

fn hermitian_power(g: &DMatrix<C64>, power: f64) -> DMatrix<C64> {
    let eig = g.clone().symmetric_eigen();
    let d = DMatrix::from_fn(g.nrows(), g.ncols(), |r, c| {
        if r == c {
            C64::new(eig.eigenvalues[r].max(0.0).powf(power), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn dm(op: &LinearOp) -> DMatrix<C64> {
    op.to_dmatrix()
}

fn fro(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `E ⊗_𝒜 ℋ` (right) or `ℋ ⊗_𝒜 E` (left), as a quotient and as a model.
#[derive(Clone, Debug)]
pub struct BalancedSpace {
    module: HermitianModule,
    hilbert_dim: usize,
    /// `dim(E ⊗_C ℋ)`.
    pub source_dim: usize,
    pub relation_rank: usize,
    /// `dim(E ⊗_C ℋ) − rank(relations)`.
    pub abstract_dim: usize,
    /// Rank of the model projection on `ℋ^N`.
    pub model_dim: usize,
    /// Smallest kept over largest dropped eigenvalue of the relation Gram
    /// matrix, with the dropped side floored at machine precision.
    pub gap: f64,
    pub rank_cutoff: f64,
    /// `‖V*V − 1‖ + ‖VV* − P‖` for the intertwiner `V`.
    pub intertwiner_residual: f64,
    ambient_dim: usize,
    relations: LinearOp,
    quotient: DMatrix<C64>,
    phi: DMatrix<C64>,
    gram_sqrt: DMatrix<C64>,
    gram_inv_sqrt: DMatrix<C64>,
    intertwiner: DMatrix<C64>,
    model_projection: LinearOp,
}

impl BalancedSpace {
    pub fn module(&self) -> &HermitianModule {
        &self.module
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// The relation vectors as columns of a square ambient operator.
    pub fn relations(&self) -> &LinearOp {
        &self.relations
    }

    /// Isometry from the quotient (in its module-orthonormal basis) onto the
    /// model subspace of `ℋ^N`.
    pub fn intertwiner(&self) -> &DMatrix<C64> {
        &self.intertwiner
    }

    /// `P` (right) or `P_L` (left) on `ℋ^N`.
    pub fn model_projection(&self) -> &LinearOp {
        &self.model_projection
    }

    pub fn dims_agree(&self) -> bool {
        self.abstract_dim == self.model_dim
    }
}

/// `π(E_α)` (right) or `E_α°` (left) for every basis element.
fn slot_actions(t: &RealTwistedTriple, side: ModuleSide) -> Result<Vec<LinearOp>> {
    t.algebra()
        .basis()
        .iter()
        .map(|e| match side {
            ModuleSide::Right => t.pi(e),
            ModuleSide::Left => t.opposite(e),
        })
        .collect()
}

/// The model projection on `ℋ^N`.
fn model_projection(t: &RealTwistedTriple, m: &HermitianModule) -> Result<LinearOp> {
    let (n, dh) = (m.n(), t.dim());
    let mut big = LinearOp::zeros(n * dh);
    for i in 0..n {
        for j in 0..n {
            let block = match m.side {
                ModuleSide::Right => t.pi(&m.p[i][j])?,
                ModuleSide::Left => t.opposite(&m.p[j][i])?,
            };
            for r in 0..dh {
                for c in 0..dh {
                    big.set(i * dh + r, j * dh + c, block.get(r, c));
                }
            }
        }
    }
    Ok(big)
}

/// Builds both sides of the balanced tensor product over `t`'s algebra,
/// with the right action `ψa = a°ψ` for left modules.
pub fn balanced_tensor(
    t: &RealTwistedTriple,
    m: &HermitianModule,
    tol: &Tolerance,
) -> Result<BalancedSpace> {
    if t.algebra() != m.algebra() {
        return Err(Error::AlgebraMismatch(
            "module and triple are over different algebras".into(),
        ));
    }
    let alg = t.algebra();
    let (n, da, dh) = (m.n(), alg.dim(), t.dim());
    let amb = Ambient {
        n_slots: n,
        da,
        dh,
    };
    let basis = alg.basis();
    let acts = slot_actions(t, m.side)?;

    // E as a subspace of 𝒜^N: column (j, α) is the generator image of e_j E_α.
    let small = n * da;
    let p_hat = from_columns(small, |col| {
        let (j, alpha) = (col / da, col % da);
        let mut v = vec![C64::new(0.0, 0.0); small];
        for i in 0..n {
            let x = match m.side {
                ModuleSide::Right => &m.p[i][j] * &basis[alpha],
                ModuleSide::Left => &basis[alpha] * &m.p[j][i],
            };
            for (beta, c) in x.coords().into_iter().enumerate() {
                v[i * da + beta] += c;
            }
        }
        Ok(v)
    })?;
    let ph = dm(&p_hat);
    let e_spec = spectral_rank(&(&ph * ph.adjoint()))?;
    let e_basis = e_spec.vectors.columns(0, e_spec.rank).into_owned();
    let e_proj = LinearOp::from_dmatrix(&(&e_basis * e_basis.adjoint()))?;
    let source_proj = e_proj.kron(&LinearOp::identity(dh));

    // Relations from the generators: column (j, β, k).
    let p_coords: Vec<Vec<Vec<C64>>> = m
        .p
        .iter()
        .map(|row| row.iter().map(|x| x.coords()).collect())
        .collect();
    let relations = from_columns(amb.dim(), |col| {
        let (j, beta, k) = (col / (da * dh), (col / dh) % da, col % dh);
        let mut v = vec![C64::new(0.0, 0.0); amb.dim()];
        let ek = unit(dh, k);
        let moved = column(&acts[beta], k);
        for i in 0..n {
            match m.side {
                ModuleSide::Right => {
                    amb.add_tensor(&mut v, i, &(&m.p[i][j] * &basis[beta]).coords(), &ek);
                    amb.sub_tensor(&mut v, i, &p_coords[i][j], &moved);
                }
                ModuleSide::Left => {
                    amb.add_tensor(&mut v, i, &p_coords[j][i], &moved);
                    amb.sub_tensor(&mut v, i, &(&basis[beta] * &m.p[j][i]).coords(), &ek);
                }
            }
        }
        Ok(v)
    })?;
    let rel = dm(&relations);
    let r_spec = spectral_rank(&(&rel * rel.adjoint()))?;
    let r_basis = r_spec.vectors.columns(0, r_spec.rank).into_owned();

    let complement = &dm(&source_proj) - &r_basis * r_basis.adjoint();
    let c_spec = spectral_rank(&complement)?;
    let quotient = c_spec.vectors.columns(0, c_spec.rank).into_owned();
    let source_dim = e_spec.rank * dh;
    let abstract_dim = source_dim.saturating_sub(r_spec.rank);

    // Φ: ambient → ℋ^N.
    let phi = DMatrix::from_fn(n * dh, amb.dim(), |row, col| {
        let (slot, alpha, k) = (col / (da * dh), (col / dh) % da, col % dh);
        if row / dh == slot {
            acts[alpha].get(row % dh, k)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let model_proj = model_projection(t, m)?;
    let mp = dm(&model_proj);
    let model_dim = spectral_rank(&(&mp * mp.adjoint()))?.rank;

    let phi_q = &phi * &quotient;
    let gram = phi_q.adjoint() * &phi_q;
    let gram_sqrt = hermitian_power(&gram, 0.5);
    let gram_inv_sqrt = hermitian_power(&gram, -0.5);
    let intertwiner = &phi_q * &gram_inv_sqrt;
    let id_q = DMatrix::<C64>::identity(quotient.ncols(), quotient.ncols());
    let intertwiner_residual = fro(&(intertwiner.adjoint() * &intertwiner - id_q))
        + fro(&(&intertwiner * intertwiner.adjoint() - &mp));
    let _ = tol;

    Ok(BalancedSpace {
        module: m.clone(),
        hilbert_dim: dh,
        source_dim,
        relation_rank: r_spec.rank,
        abstract_dim,
        model_dim,
        gap: r_spec.gap.min(e_spec.gap),
        rank_cutoff: r_spec.cutoff,
        intertwiner_residual,
        ambient_dim: amb.dim(),
        relations,
        quotient,
        phi,
        gram_sqrt,
        gram_inv_sqrt,
        intertwiner,
        model_projection: model_proj,
    })
}

/// Which lift of the twist the left covariant operator uses. Only the
/// inverse is supported; the direct one is kept for a negative control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LeftLift {
    Inverse,
    #[cfg_attr(not(test), allow(dead_code))]
    Direct,
}

/// `D̃_R = (ρ̃⊗1)∘(D_R + ∇)` or `D̃_L = (1⊗ρ̃^{-1})∘(D_L + ∇°)` on the
/// ambient space, with the canonical Sweedler representatives
/// `η_(0) = pe_j` or `e_j p`.
fn covariant_ambient(
    t: &RealTwistedTriple,
    c: &Connection,
    lift: LeftLift,
) -> Result<LinearOp> {
    let m = &c.module;
    let alg = t.algebra();
    let (n, da, dh) = (m.n(), alg.dim(), t.dim());
    let amb = Ambient {
        n_slots: n,
        da,
        dh,
    };
    let basis = alg.basis();
    let d = t.dirac();
    let twist = match (m.side, lift) {
        (ModuleSide::Right, _) | (ModuleSide::Left, LeftLift::Direct) => t.twist().clone(),
        (ModuleSide::Left, LeftLift::Inverse) => t.twist_inverse().clone(),
    };
    let twisted_basis: Vec<AlgebraElement> =
        basis.iter().map(|e| twist.apply(e)).collect::<Result<_>>()?;
    let acts = slot_actions(t, m.side)?;
    let derivs: Vec<LinearOp> = basis
        .iter()
        .map(|e| match m.side {
            ModuleSide::Right => t.delta(e),
            ModuleSide::Left => t.delta_opposite(e),
        })
        .collect::<Result<_>>()?;
    let twisted_p: Vec<Vec<AlgebraElement>> = m
        .p
        .iter()
        .map(|row| row.iter().map(|x| twist.apply(x)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    // Coordinates of the twisted generators: slot l of ρ̃(pe_i) (right) or
    // slot l of ρ̃^{∓1}(e_i p) (left), indexed [i][l].
    let lifted_gen: Vec<Vec<Vec<C64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|l| {
                    let x = match m.side {
                        ModuleSide::Right => {
                            sum_elements(alg, (0..n).map(|q| &m.p[l][q] * &twisted_p[q][i]))
                        }
                        ModuleSide::Left => {
                            sum_elements(alg, (0..n).map(|q| &twisted_p[i][q] * &m.p[q][l]))
                        }
                    };
                    x.coords()
                })
                .collect()
        })
        .collect();

    from_columns(amb.dim(), |col| {
        let (j, alpha, k) = (col / (da * dh), (col / dh) % da, col % dh);
        let mut v = vec![C64::new(0.0, 0.0); amb.dim()];
        let dk = column(d, k);
        for i in 0..n {
            // Twisted η tensored with Dψ.
            let x = match m.side {
                ModuleSide::Right => &m.p[i][j] * &twisted_basis[alpha],
                ModuleSide::Left => &twisted_basis[alpha] * &m.p[j][i],
            };
            amb.add_tensor(&mut v, i, &x.coords(), &dk);
        }
        for i in 0..n {
            let pot = match m.side {
                ModuleSide::Right => c.a(i, j),
                ModuleSide::Left => c.a(j, i),
            };
            let mut y = pot.matmul(&acts[alpha]);
            if i == j {
                y += &derivs[alpha];
            }
            let yk = column(&y, k);
            if yk.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            for l in 0..n {
                amb.add_tensor(&mut v, l, &lifted_gen[i][l], &yk);
            }
        }
        Ok(v)
    })
}

/// The covariant operator with its consistency checks.
#[derive(Clone, Debug)]
pub struct CovariantOperator {
    /// The operator on `ℋ^N`, supported on the model subspace.
    pub model: LinearOp,
    /// The operator on `𝒜^N ⊗_C ℋ` before passing to the quotient.
    pub ambient: LinearOp,
    /// Quotient component of `D̃` applied to the relation vectors.
    pub well_definedness: Comparison,
    /// `Φ D̃ B` against `model Φ B` on the quotient basis `B`.
    pub intertwining: Comparison,
    /// `model` against the closed form `P(D⊗1 + A)P` (right) or
    /// `P_L(D⊗1 + Aᵀ)P_L` (left).
    pub explicit_form: Comparison,
}

fn covariant_on(
    t: &RealTwistedTriple,
    bs: &BalancedSpace,
    c: &Connection,
    lift: LeftLift,
    tol: &Tolerance,
) -> Result<CovariantOperator> {
    let m = &c.module;
    if m.side != bs.module.side || m.n() != bs.module.n() {
        return Err(Error::Invalid("connection and balanced space use different modules".into()));
    }
    if m.side == ModuleSide::Right || lift == LeftLift::Inverse {
        let rho = t.twist();
        if !m.is_rho_invariant(rho, tol)? {
            return Err(Error::NotInvariant {
                residual: m.rho_invariance_residual(rho)?,
            });
        }
    }
    let amb = covariant_ambient(t, c, lift)?;
    let a = dm(&amb);
    let q = &bs.quotient;

    // Quotient components of D̃ on each relation vector, relative to it.
    let image = q.adjoint() * &a * dm(&bs.relations);
    let mut worst = 0.0f64;
    for col in 0..bs.relations.dim() {
        let len: f64 = (0..bs.relations.dim())
            .map(|r| bs.relations.get(r, col).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if len == 0.0 {
            continue;
        }
        let res = image.column(col).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / len;
        worst = worst.max(res);
    }
    let well_definedness = Comparison::new(worst, amb.norm_fro(), tol);
    if !well_definedness.pass() {
        return Err(Error::NotWellDefined {
            residual: well_definedness.residual,
            threshold: well_definedness.threshold,
        });
    }

    let coords = &bs.gram_sqrt * q.adjoint() * &a * q * &bs.gram_inv_sqrt;
    let v = &bs.intertwiner;
    let model_dm = v * &coords * v.adjoint();
    let model = LinearOp::from_dmatrix(&model_dm)?;

    let b = q * &bs.gram_inv_sqrt;
    let lhs = &bs.phi * &a * &b;
    let rhs = &model_dm * &bs.phi * &b;
    let intertwining = Comparison::new(fro(&(&lhs - &rhs)), fro(&lhs).max(fro(&rhs)), tol);

    let explicit = explicit_model(t, c)?;
    let explicit_form = compare(&model, &explicit, tol);
    Ok(CovariantOperator {
        model,
        ambient: amb,
        well_definedness,
        intertwining,
        explicit_form,
    })
}

/// `P(1⊗D + A)P` with `A` the block matrix of potential values, transposed
/// for left modules.
pub fn explicit_model(t: &RealTwistedTriple, c: &Connection) -> Result<LinearOp> {
    let m = &c.module;
    let (n, dh) = (m.n(), t.dim());
    let mut inner = LinearOp::identity(n).kron(t.dirac());
    for i in 0..n {
        for j in 0..n {
            let blk = match m.side {
                ModuleSide::Right => c.a(i, j),
                ModuleSide::Left => c.a(j, i),
            };
            for r in 0..dh {
                for s in 0..dh {
                    let z = inner.get(i * dh + r, j * dh + s) + blk.get(r, s);
                    inner.set(i * dh + r, j * dh + s, z);
                }
            }
        }
    }
    let p = model_projection(t, m)?;
    Ok(p.matmul(&inner).matmul(&p))
}

/// `D̃_R` or `D̃_L` on the balanced space, refusing connections that do not
/// descend to the quotient.
pub fn covariant_operator_on(
    t: &RealTwistedTriple,
    bs: &BalancedSpace,
    c: &Connection,
    tol: &Tolerance,
) -> Result<CovariantOperator> {
    covariant_on(t, bs, c, LeftLift::Inverse, tol)
}

pub fn covariant_operator(
    t: &RealTwistedTriple,
    c: &Connection,
    tol: &Tolerance,
) -> Result<CovariantOperator> {
    let bs = balanced_tensor(t, &c.module, tol)?;
    covariant_operator_on(t, &bs, c, tol)
}

/// The self-equivalence `E = 𝒜` and the operator it should reduce to.
#[derive(Clone, Debug)]
pub struct SelfEquivalence {
    pub operator: CovariantOperator,
    /// `D̃_R` against `D + ω`, or `D̃_L` against `D + ε′JωJ⁻¹`.
    pub reduction: Comparison,
}

/// `E_R = 𝒜` with potential `ω`: `D̃_R = D + ω`.
pub fn self_equivalence_right(
    t: &RealTwistedTriple,
    w: &TwistedOneForm,
    tol: &Tolerance,
) -> Result<SelfEquivalence> {
    let c = Connection::self_equivalence(t, ModuleSide::Right, w.clone())?;
    let operator = covariant_operator(t, &c, tol)?;
    let reduction = compare(&operator.model, &(t.dirac() + w.value()), tol);
    Ok(SelfEquivalence {
        operator,
        reduction,
    })
}

/// `E_L = 𝒜` with the opposite potential built from the starred generators
/// of a plain `ω`: `D̃_L = D + ε′JωJ⁻¹`.
pub fn self_equivalence_left(
    t: &RealTwistedTriple,
    w: &TwistedOneForm,
    tol: &Tolerance,
) -> Result<SelfEquivalence> {
    let opp = j_conjugate_form(t, w, tol)?;
    let c = Connection::self_equivalence(t, ModuleSide::Left, opp)?;
    let operator = covariant_operator(t, &c, tol)?;
    let expected = t.dirac() + &t.j_conj(w.value()).scale_real(t.signs().eps_prime_f());
    let reduction = compare(&operator.model, &expected, tol);
    Ok(SelfEquivalence {
        operator,
        reduction,
    })
}

/// How the module law acts when `η ⊗ δ(a)` is carried from `E ⊗_𝒜 Ω` to
/// `E ⊗_C ℋ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModuleLaw {
    /// `a·ω = ρ(a)ω` (and `ω°·b = ρ°(b°)ω°`).
    Twisted,
    /// `a·ω = aω`, which breaks the compatibility of the actions.
    Untwisted,
}

fn tensor_vector(amb: &Ambient, m: &HermitianModule, gen_slot: usize, phi: &[C64]) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); amb.dim()];
    let g = m.generator(gen_slot);
    for (l, x) in g.comps.iter().enumerate() {
        amb.add_tensor(&mut v, l, &x.coords(), phi);
    }
    v
}

/// `∇(η⊗ψ) = Σ_i pe_i ⊗ (δ(η_i) + Σ_k A_ik η_k)ψ` or
/// `ψ∇°(η) = Σ_i (δ°(η_i) + Σ_k A_ki η_k°)ψ ⊗ e_i p`.
fn nabla_vector(
    t: &RealTwistedTriple,
    c: &Connection,
    amb: &Ambient,
    eta: &ModuleElement,
    psi: &[C64],
) -> Result<Vec<C64>> {
    let m = &c.module;
    let n = m.n();
    let mut out = vec![C64::new(0.0, 0.0); amb.dim()];
    for i in 0..n {
        let mut x = match m.side {
            ModuleSide::Right => t.delta(&eta.comps[i])?,
            ModuleSide::Left => t.delta_opposite(&eta.comps[i])?,
        };
        for k in 0..n {
            x += &match m.side {
                ModuleSide::Right => c.a(i, k).matmul(&t.pi(&eta.comps[k])?),
                ModuleSide::Left => c.a(k, i).matmul(&t.opposite(&eta.comps[k])?),
            };
        }
        let term = tensor_vector(amb, m, i, &x.apply(psi));
        for (o, z) in out.iter_mut().zip(term) {
            *o += z;
        }
    }
    Ok(out)
}

/// Residual of the Leibniz rule computed in `E ⊗_C ℋ`:
/// `∇(ηa)ψ − ∇(η)aψ − η⊗δ(a)ψ` (right) or
/// `ψ∇°(aη) − ψa∇°(η) − δ°(a)ψ⊗η` (left), where `η⊗δ(a)` is carried over
/// through the generators as `Σ_i pe_i ⊗ η_i·δ(a)`.
pub fn leibniz_residual(
    t: &RealTwistedTriple,
    c: &Connection,
    eta: &ModuleElement,
    a: &AlgebraElement,
    psi: &[C64],
    law: ModuleLaw,
) -> Result<f64> {
    let m = &c.module;
    if eta.side != m.side || eta.comps.len() != m.n() || psi.len() != t.dim() {
        return Err(Error::Dimension("Leibniz data does not match the module".into()));
    }
    let amb = Ambient {
        n_slots: m.n(),
        da: t.algebra().dim(),
        dh: t.dim(),
    };
    let moved = m.act(eta, a);
    let first = nabla_vector(t, c, &amb, &moved, psi)?;
    let a_psi = match m.side {
        ModuleSide::Right => t.pi(a)?.apply(psi),
        ModuleSide::Left => t.opposite(a)?.apply(psi),
    };
    let second = nabla_vector(t, c, &amb, eta, &a_psi)?;
    let da = match m.side {
        ModuleSide::Right => t.delta(a)?,
        ModuleSide::Left => t.delta_opposite(a)?,
    };
    let mut res: Vec<C64> = first.iter().zip(&second).map(|(x, y)| x - y).collect();
    for (i, x) in eta.comps.iter().enumerate() {
        let acted = match (m.side, law) {
            (ModuleSide::Right, ModuleLaw::Twisted) => t.pi_rho(x)?.matmul(&da),
            (ModuleSide::Right, ModuleLaw::Untwisted) => t.pi(x)?.matmul(&da),
            (ModuleSide::Left, ModuleLaw::Twisted) => t.rho_opposite(x)?.matmul(&da),
            (ModuleSide::Left, ModuleLaw::Untwisted) => t.opposite(x)?.matmul(&da),
        };
        let term = tensor_vector(&amb, m, i, &acted.apply(psi));
        for (o, z) in res.iter_mut().zip(term) {
            *o -= z;
        }
    }
    Ok(res.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

/// `fluct(D, ω) = D + ω + ε′JωJ⁻¹`.
pub fn fluctuate(t: &RealTwistedTriple, d: &LinearOp, w: &LinearOp) -> LinearOp {
    let mut out = d + w;
    out += &t.j_conj(w).scale_real(t.signs().eps_prime_f());
    out
}

/// Outcome of combining a right and a left self-equivalence.
#[derive(Clone, Debug)]
pub struct FluctuationAssembly {
    /// `D′ = D + w_L + ε′J w_R J⁻¹`.
    pub d_prime: LinearOp,
    /// `JD′J⁻¹` against `ε′D′`.
    pub j_compatibility: Comparison,
    /// `‖(w_R − w_L) − ε′J(w_R − w_L)J⁻¹‖`.
    pub violation_residual: f64,
    /// `½(w_R + w_L)` when `D′` is J-compatible.
    pub symmetrized: Option<TwistedOneForm>,
    /// `D′` against `fluct(D, ½(w_R + w_L))`.
    pub reproduction: Option<Comparison>,
}

pub fn assemble_fluctuation(
    t: &RealTwistedTriple,
    w_r: &TwistedOneForm,
    w_l: &TwistedOneForm,
    tol: &Tolerance,
) -> Result<FluctuationAssembly> {
    if w_r.side() != Side::Plain || w_l.side() != Side::Plain {
        return Err(Error::Invalid("assembly takes two plain forms".into()));
    }
    let eps_p = t.signs().eps_prime_f();
    let mut d_prime = t.dirac() + w_l.value();
    d_prime += &t.j_conj(w_r.value()).scale_real(eps_p);
    let j_compatibility = compare(&t.j_conj(&d_prime), &d_prime.scale_real(eps_p), tol);
    let diff = w_r.value() - w_l.value();
    let violation_residual = (&diff - &t.j_conj(&diff).scale_real(eps_p)).norm_fro();
    let (symmetrized, reproduction) = if j_compatibility.pass() {
        let w = w_r.try_add(w_l)?.scale(C64::new(0.5, 0.0));
        let c = compare(&d_prime, &fluctuate(t, t.dirac(), w.value()), tol);
        (Some(w), Some(c))
    } else {
        (None, None)
    };
    Ok(FluctuationAssembly {
        d_prime,
        j_compatibility,
        violation_residual,
        symmetrized,
        reproduction,
    })
}

/// `‖fluct(fluct(D, w₁), w₂) − fluct(D, w₁ + w₂)‖`.
pub fn fluctuation_monoid_check(
    t: &RealTwistedTriple,
    w1: &TwistedOneForm,
    w2: &TwistedOneForm,
) -> Result<f64> {
    if w1.side() != Side::Plain || w2.side() != Side::Plain {
        return Err(Error::Invalid("fluctuations take plain forms".into()));
    }
    let twice = fluctuate(t, &fluctuate(t, t.dirac(), w1.value()), w2.value());
    let once = fluctuate(t, t.dirac(), w1.try_add(w2)?.value());
    Ok((&twice - &once).norm_fro())
}

/// Descent of an endomorphism `b ∈ pM_N(𝒜)p` to the balanced space.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DescentReport {
    /// Quotient component of `b` applied to the relation vectors.
    pub relation_residual: Comparison,
    /// `Φ b = b_model Φ` on the ambient space.
    pub intertwining: Comparison,
}

/// `π_R(b)(η⊗ψ) = bη⊗ψ` (right) or `ψ⊗ηb` (left) for `b` compressed to
/// `pbp`.
pub fn endomorphism_descent(
    t: &RealTwistedTriple,
    bs: &BalancedSpace,
    b: &[Vec<AlgebraElement>],
    tol: &Tolerance,
) -> Result<DescentReport> {
    let m = &bs.module;
    let alg = t.algebra();
    let (n, da, dh) = (m.n(), alg.dim(), t.dim());
    if b.len() != n || b.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(format!("endomorphism must be {n}×{n}")));
    }
    let mul = |x: &[Vec<AlgebraElement>], y: &[Vec<AlgebraElement>]| -> Vec<Vec<AlgebraElement>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| sum_elements(alg, (0..n).map(|l| &x[i][l] * &y[l][k])))
                    .collect()
            })
            .collect()
    };
    let bc = mul(&mul(&m.p, b), &m.p);
    let amb = Ambient {
        n_slots: n,
        da,
        dh,
    };
    let basis = alg.basis();
    let op = from_columns(amb.dim(), |col| {
        let (j, alpha, k) = (col / (da * dh), (col / dh) % da, col % dh);
        let mut v = vec![C64::new(0.0, 0.0); amb.dim()];
        let ek = unit(dh, k);
        for i in 0..n {
            let x = match m.side {
                ModuleSide::Right => &bc[i][j] * &basis[alpha],
                ModuleSide::Left => &basis[alpha] * &bc[j][i],
            };
            amb.add_tensor(&mut v, i, &x.coords(), &ek);
        }
        Ok(v)
    })?;
    let a = dm(&op);
    let image = bs.quotient.adjoint() * &a * dm(&bs.relations);
    let relation_residual = Comparison::new(
        fro(&image),
        op.norm_fro() * bs.relations.norm_fro(),
        tol,
    );
    let mut model = LinearOp::zeros(n * dh);
    for i in 0..n {
        for j in 0..n {
            let blk = match m.side {
                ModuleSide::Right => t.pi(&bc[i][j])?,
                ModuleSide::Left => t.opposite(&bc[j][i])?,
            };
            for r in 0..dh {
                for s in 0..dh {
                    model.set(i * dh + r, j * dh + s, blk.get(r, s));
                }
            }
        }
    }
    let lhs = &bs.phi * &a;
    let rhs = dm(&model) * &bs.phi;
    let intertwining = Comparison::new(fro(&(&lhs - &rhs)), fro(&lhs).max(fro(&rhs)), tol);
    Ok(DescentReport {
        relation_residual,
        intertwining,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Representation;
    use crate::fixtures::{self, FuzzyVariant};
    use crate::forms::random_form;
    use crate::opcore::AntilinearOp;
    use crate::sampling::{random_hermitian_op, random_vector, rng};
    use crate::triple::KOSignature;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn free_rank_one_module_is_the_hilbert_space() {
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 1).unwrap();
        for side in [ModuleSide::Right, ModuleSide::Left] {
            let m = HermitianModule::free(t.algebra(), side, 1).unwrap();
            let bs = balanced_tensor(&t, &m, &tol()).unwrap();
            assert_eq!(bs.abstract_dim, t.dim());
            assert_eq!(bs.model_dim, t.dim());
            assert!(bs.intertwiner_residual < 1e-9, "{}", bs.intertwiner_residual);
            let c = Connection::grassmann(&t, &m).unwrap();
            let op = covariant_operator_on(&t, &bs, &c, &tol()).unwrap();
            assert!(compare(&op.model, t.dirac(), &tol()).pass(), "{side:?}");
        }
    }

    #[test]
    fn diagonal_projection_over_two_points() {
        let t = fixtures::two_point();
        let alg = t.algebra();
        let e1 = fixtures::scalar_blocks(alg, &[ONE, C64::new(0.0, 0.0)]).unwrap();
        let p = vec![vec![e1, alg.zero()], vec![alg.zero(), alg.zero()]];
        let m = HermitianModule::new(alg, ModuleSide::Right, p, &tol()).unwrap();
        let bs = balanced_tensor(&t, &m, &tol()).unwrap();
        assert_eq!(bs.abstract_dim, 1);
        assert_eq!(bs.model_dim, 1);
        assert!(!m.is_rho_invariant(t.twist(), &tol()).unwrap());
        let c = Connection::grassmann(&t, &m).unwrap();
        assert!(matches!(
            covariant_operator_on(&t, &bs, &c, &tol()),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn non_projection_is_rejected() {
        let t = fixtures::two_point();
        let alg = t.algebra();
        let two = alg.one().scale(C64::new(2.0, 0.0));
        assert!(HermitianModule::new(alg, ModuleSide::Right, vec![vec![two]], &tol()).is_err());
    }

    #[test]
    fn lift_is_twisted_module_map() {
        let t = fixtures::fuzzy(FuzzyVariant::Ko6, 2, 3).unwrap();
        let mut r = rng(60);
        let (_, m, _) = fixtures::pa2_module().unwrap();
        let rho = t.twist();
        for _ in 0..10 {
            let eta = m.random_element(&mut r);
            let a = t.algebra().random(&mut r);
            let lhs = lift_automorphism(&m, rho, &m.act(&eta, &a), &tol()).unwrap();
            let rhs = m.act(&lift_automorphism(&m, rho, &eta, &tol()).unwrap(), &rho.apply(&a).unwrap());
            for (x, y) in lhs.comps().iter().zip(rhs.comps()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pa2_fixture_quotient_and_model_agree() {
        let (t, m, c) = fixtures::pa2_module().unwrap();
        let bs = balanced_tensor(&t, &m, &tol()).unwrap();
        assert_eq!(bs.abstract_dim, bs.model_dim);
        assert_eq!(bs.model_dim, t.dim());
        let op = covariant_operator_on(&t, &bs, &c, &tol()).unwrap();
        assert!(op.well_definedness.pass());
        assert!(op.intertwining.pass());
        assert!(op.explicit_form.pass());
    }

    #[test]
    fn self_equivalences_reduce_to_fluctuations() {
        let mut r = rng(61);
        for v in [FuzzyVariant::Ko0, FuzzyVariant::Ko6, FuzzyVariant::Odd] {
            let t = fixtures::fuzzy(v, 2, 9).unwrap();
            let w = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
            let right = self_equivalence_right(&t, &w, &tol()).unwrap();
            assert!(right.reduction.pass(), "{v:?} {:?}", right.reduction);
            let left = self_equivalence_left(&t, &w, &tol()).unwrap();
            assert!(left.reduction.pass(), "{v:?} {:?}", left.reduction);
        }
    }

    #[test]
    fn leibniz_rule_needs_the_twisted_module_law() {
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 10).unwrap();
        let mut r = rng(62);
        for side in [ModuleSide::Right, ModuleSide::Left] {
            let m = HermitianModule::free(t.algebra(), side, 1).unwrap();
            let c = Connection::grassmann(&t, &m).unwrap();
            let eta = m.random_element(&mut r);
            let a = t.algebra().random(&mut r);
            let psi = random_vector(&mut r, t.dim());
            let good = leibniz_residual(&t, &c, &eta, &a, &psi, ModuleLaw::Twisted).unwrap();
            let bad = leibniz_residual(&t, &c, &eta, &a, &psi, ModuleLaw::Untwisted).unwrap();
            assert!(good < 1e-10, "{side:?} {good}");
            assert!(bad > 0.1, "{side:?} {bad}");
            let one = leibniz_residual(&t, &c, &eta, &t.algebra().one(), &psi, ModuleLaw::Untwisted).unwrap();
            assert!(one < 1e-12);
        }
    }

    #[test]
    fn monoid_and_assembly() {
        let t = fixtures::fuzzy(FuzzyVariant::Ko6, 2, 11).unwrap();
        let mut r = rng(63);
        let w1 = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
        let w2 = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
        assert!(fluctuation_monoid_check(&t, &w1, &w2).unwrap() < 1e-10);
        assert!(fluctuation_monoid_check(&t, &w1, &w1.neg()).unwrap() < 1e-10);

        let same = assemble_fluctuation(&t, &w1, &w1, &tol()).unwrap();
        assert!(same.j_compatibility.pass());
        assert!(same.reproduction.unwrap().pass());
        let diff = assemble_fluctuation(&t, &w1, &w2, &tol()).unwrap();
        assert!(!diff.j_compatibility.pass());
        assert!((diff.j_compatibility.residual - diff.violation_residual).abs() < 1e-9);
    }

    #[test]
    fn endomorphisms_descend() {
        let (t, m, _) = fixtures::pa2_module().unwrap();
        let bs = balanced_tensor(&t, &m, &tol()).unwrap();
        let mut r = rng(64);
        let b: Vec<Vec<AlgebraElement>> = (0..2)
            .map(|_| (0..2).map(|_| t.algebra().random(&mut r)).collect())
            .collect();
        let rep = endomorphism_descent(&t, &bs, &b, &tol()).unwrap();
        assert!(rep.relation_residual.pass(), "{:?}", rep.relation_residual);
        assert!(rep.intertwining.pass(), "{:?}", rep.intertwining);
    }

    #[test]
    fn random_projections_have_matching_dimensions() {
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 12).unwrap();
        let mut r = rng(65);
        for side in [ModuleSide::Right, ModuleSide::Left] {
            for n in [1, 2] {
                let m = HermitianModule::random(t.algebra(), side, n, &mut r, Some(t.twist())).unwrap();
                let bs = balanced_tensor(&t, &m, &tol()).unwrap();
                assert_eq!(bs.abstract_dim, bs.model_dim, "{side:?} N={n}");
                let c = Connection::grassmann(&t, &m).unwrap();
                let op = covariant_operator_on(&t, &bs, &c, &tol()).unwrap();
                assert!(op.explicit_form.pass(), "{:?}", op.explicit_form);
            }
        }
    }

    /// `C³` with a cyclic twist, which is not an involution. The left
    /// covariant operator built with `ρ̃` in place of `ρ̃⁻¹` does not
    /// descend to `ℋ ⊗_𝒜 E`.
    fn cyclic_triple() -> RealTwistedTriple {
        let alg = StarAlgebra::new(vec![1, 1, 1]).unwrap();
        let rep = Representation::standard(alg.clone(), vec![1, 1, 1]).unwrap();
        let mut r = rng(66);
        let h = random_hermitian_op(&mut r, 3);
        let d = LinearOp::from_fn(3, |i, j| C64::new(h.get(i, j).re, 0.0));
        let rho = Automorphism::permutation(&alg, vec![1, 2, 0]).unwrap();
        RealTwistedTriple::new(
            rep,
            d,
            AntilinearOp::conjugation(3),
            None,
            rho,
            KOSignature::new(1, 1, 1, None).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn left_modules_need_the_inverse_lift() {
        let t = cyclic_triple();
        let m = HermitianModule::free(t.algebra(), ModuleSide::Left, 1).unwrap();
        let bs = balanced_tensor(&t, &m, &tol()).unwrap();
        let c = Connection::grassmann(&t, &m).unwrap();
        assert!(covariant_on(&t, &bs, &c, LeftLift::Inverse, &tol()).is_ok());
        assert!(matches!(
            covariant_on(&t, &bs, &c, LeftLift::Direct, &tol()),
            Err(Error::NotWellDefined { .. })
        ));
    }
}
