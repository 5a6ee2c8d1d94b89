//! Lattice realization of the minimal twist of a flat `2m`-torus:
//! `𝒜 = F(sites) ⊕ F(sites)` on `ℋ = C^sites ⊗ C^{2^m}`, `D = −iγ^μ∇_μ`,
//! `ρ` = flip, `J = (1 ⊗ C)∘conj`.
//!
//! Hilbert index of `(site, spinor)` is `site·2^m + spinor`. The chirality is
//! normalized to `diag(+1,…,+1,−1,…,−1)`, so the first half of the spinor
//! components is `H₊` where `f` acts, the second half is `H₋` where `g` acts.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, Automorphism, Representation, StarAlgebra};
use crate::error::{Error, Result};
use crate::fixtures::sigma;
use crate::forms::{form_from_generators, Side};
use crate::gauge::{certificate_raw, GaugeUnitary, SelfAdjointnessCertificate};
use crate::opcore::{
    compare, sandwich_comparison, unitarity_residual, AntilinearOp, Comparison, LinearOp, Sparse,
    Tolerance, C64, I, ONE, ZERO,
};
use crate::sampling::SeededRng;
use crate::triple::{KOSignature, RealTwistedTriple};

/// Euclidean gamma matrices of size `2^m` and the chirality.
#[derive(Clone, Debug)]
pub struct CliffordData {
    pub m: usize,
    pub gammas: Vec<LinearOp>,
    pub chirality: LinearOp,
}

/// Gammas by the iterated construction `{σ₁⊗g} ∪ {σ₁⊗Γ, σ₂⊗1}`; the
/// chirality is the product of all gammas times the phase making it
/// `diag(+1,…,−1,…)`.
pub fn gamma_basis(m: usize) -> Result<CliffordData> {
    if m == 0 {
        return Err(Error::Invalid("Clifford data needs m ≥ 1".into()));
    }
    let mut gammas = vec![sigma(1), sigma(2)];
    let mut chirality = sigma(3);
    for _ in 1..m {
        let d = gammas[0].dim();
        let mut next: Vec<LinearOp> = gammas.iter().map(|g| sigma(1).kron(g)).collect();
        next.push(sigma(1).kron(&chirality));
        next.push(sigma(2).kron(&LinearOp::identity(d)));
        gammas = next;
        chirality = chirality_of(&gammas);
    }
    Ok(CliffordData {
        m,
        gammas,
        chirality,
    })
}

fn chirality_of(gammas: &[LinearOp]) -> LinearOp {
    let d = gammas[0].dim();
    let prod = gammas
        .iter()
        .fold(LinearOp::identity(d), |acc, g| acc.matmul(g));
    let phase = prod.get(0, 0);
    prod.scale(phase.conj() / phase.norm_sqr())
}

impl CliffordData {
    pub fn spinor_dim(&self) -> usize {
        1 << self.m
    }

    /// Worst residual among `{γ^μ,γ^ν} = 2δ^{μν}`, `Γ = Γ*`, `Γ² = 1`,
    /// `Γγ^μ = −γ^μΓ`, `γ^μ = γ^μ*`.
    pub fn check(&self, tol: &Tolerance) -> Comparison {
        let d = self.spinor_dim();
        let id = LinearOp::identity(d);
        let zero = LinearOp::zeros(d);
        let mut worst = Comparison::exact_zero(tol);
        for (mu, a) in self.gammas.iter().enumerate() {
            worst = worst.worst(compare(a, &a.adjoint(), tol));
            worst = worst.worst(compare(&self.chirality.anticommutator(a), &zero, tol));
            for (nu, b) in self.gammas.iter().enumerate() {
                let target = if mu == nu { id.scale_real(2.0) } else { zero.clone() };
                worst = worst.worst(compare(&a.anticommutator(b), &target, tol));
            }
        }
        let g = &self.chirality;
        worst = worst.worst(compare(g, &g.adjoint(), tol));
        worst.worst(compare(&g.matmul(g), &id, tol))
    }
}

/// Discretization of `∂_μ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeKind {
    /// Central difference, `(ψ(x+h) − ψ(x−h)) / 2h`.
    #[default]
    Central,
    /// Fourier differentiation on the odd periodic grid.
    Spectral,
}

/// Periodic grid `(Z/L)^{2m}` with spacing `h = 1/L`.
#[derive(Clone, Debug)]
pub struct LatticeGeometry {
    pub m: usize,
    pub l: usize,
    pub kind: DerivativeKind,
    /// `L×L` real antisymmetric derivative along one axis.
    pub derivative_1d: Vec<Vec<f64>>,
}

impl LatticeGeometry {
    pub fn new(m: usize, l: usize, kind: DerivativeKind) -> Result<Self> {
        if l < 3 || l % 2 == 0 {
            return Err(Error::UnsupportedDimension(format!(
                "lattice size must be odd and at least 3, got {l}"
            )));
        }
        if m == 0 {
            return Err(Error::UnsupportedDimension("m must be positive".into()));
        }
        let mut d = vec![vec![0.0; l]; l];
        let lf = l as f64;
        match kind {
            DerivativeKind::Central => {
                for (x, row) in d.iter_mut().enumerate() {
                    row[(x + 1) % l] = lf / 2.0;
                    row[(x + l - 1) % l] = -lf / 2.0;
                }
            }
            DerivativeKind::Spectral => {
                let kmax = (l as i64 - 1) / 2;
                for x in 0..l {
                    for y in 0..x {
                        let delta = (x as f64 - y as f64) / lf;
                        let v: f64 = (-kmax..=kmax)
                            .map(|k| {
                                let w = 2.0 * PI * k as f64;
                                -w * (w * delta).sin()
                            })
                            .sum::<f64>()
                            / lf;
                        d[x][y] = v;
                        d[y][x] = -v;
                    }
                }
            }
        }
        Ok(LatticeGeometry {
            m,
            l,
            kind,
            derivative_1d: d,
        })
    }

    pub fn dims(&self) -> usize {
        2 * self.m
    }

    pub fn sites(&self) -> usize {
        self.l.pow(self.dims() as u32)
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.l as f64
    }

    /// Integer coordinates of a site, most significant axis first.
    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = vec![0; self.dims()];
        let mut s = site;
        for mu in (0..self.dims()).rev() {
            c[mu] = s % self.l;
            s /= self.l;
        }
        c
    }

    /// Positions `x_μ ∈ [0, 1)`.
    pub fn positions(&self, site: usize) -> Vec<f64> {
        self.coords(site)
            .iter()
            .map(|&c| c as f64 / self.l as f64)
            .collect()
    }

    fn stride(&self, mu: usize) -> usize {
        self.l.pow((self.dims() - 1 - mu) as u32)
    }

    /// `∇_μ` as a dense `sites × sites` operator.
    pub fn derivative(&self, mu: usize) -> LinearOp {
        let n = self.sites();
        let mut out = LinearOp::zeros(n);
        let stride = self.stride(mu);
        for site in 0..n {
            let x = (site / stride) % self.l;
            let base = site - x * stride;
            for (y, v) in self.derivative_1d[x].iter().enumerate() {
                if *v != 0.0 {
                    out.set(site, base + y * stride, C64::new(*v, 0.0));
                }
            }
        }
        out
    }

    /// `∇_μ` applied to a field with `width` components per site.
    pub fn apply_derivative(&self, mu: usize, field: &[C64], width: usize) -> Vec<C64> {
        let n = self.sites();
        assert_eq!(field.len(), n * width, "field length");
        let stride = self.stride(mu);
        let mut out = vec![ZERO; field.len()];
        for site in 0..n {
            let x = (site / stride) % self.l;
            let base = site - x * stride;
            for (y, v) in self.derivative_1d[x].iter().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                let other = base + y * stride;
                for c in 0..width {
                    out[site * width + c] += field[other * width + c] * *v;
                }
            }
        }
        out
    }

    /// Smooth real function made of the lowest Fourier modes with random
    /// amplitudes and phases.
    pub fn smooth_random_function(&self, r: &mut SeededRng) -> Vec<f64> {
        let modes: Vec<(Vec<f64>, f64, f64)> = (0..3)
            .map(|_| {
                let k: Vec<f64> = (0..self.dims())
                    .map(|_| r.random_range(-1i32..=1) as f64)
                    .collect();
                (k, r.random_range(0.2..1.5), r.random_range(0.0..2.0 * PI))
            })
            .collect();
        let constant = r.random_range(-PI..PI);
        (0..self.sites())
            .map(|s| {
                let x = self.positions(s);
                constant
                    + modes
                        .iter()
                        .map(|(k, a, ph)| {
                            let kx: f64 = k.iter().zip(&x).map(|(k, x)| k * x).sum();
                            a * (2.0 * PI * kx + ph).cos()
                        })
                        .sum::<f64>()
            })
            .collect()
    }

    /// Frobenius norm of the lattice gradient of a real function.
    pub fn gradient_norm(&self, f: &[f64]) -> f64 {
        let field: Vec<C64> = f.iter().map(|&x| C64::new(x, 0.0)).collect();
        (0..self.dims())
            .map(|mu| {
                self.apply_derivative(mu, &field, 1)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Searches signed Pauli words (phases `1`, `i`) for a spinor matrix `C`
/// such that `J = C∘conj` realizes the requested signs:
/// `C C̄ = ε`, `C γ̄^μ C* = −ε′ γ^μ` (from `J(−iγ^μ∇_μ)J⁻¹ = ε′(−iγ^μ∇_μ)`
/// with `∇_μ` real), `C Γ̄ C* = ε″ Γ`.
pub fn charge_conjugation(m: usize, signs: KOSignature) -> Result<AntilinearOp> {
    if !(1..=2).contains(&m) {
        return Err(Error::UnsupportedDimension(format!(
            "charge conjugation search is limited to m ∈ {{1, 2}}, got {m}"
        )));
    }
    if let Some(d) = signs.dim_mod8 {
        if d as usize != (2 * m) % 8 {
            return Err(Error::NoSuchConjugation(format!(
                "requested KO-dimension {d} differs from 2m mod 8 = {}",
                (2 * m) % 8
            )));
        }
    }
    if signs.eps_prime != 1 {
        return Err(Error::NoSuchConjugation(
            "even-dimensional lattice Dirac operators need eps_prime = +1".into(),
        ));
    }
    let cl = gamma_basis(m)?;
    let d = cl.spinor_dim();
    let tol = Tolerance::new(1e-12, 1e-14)?;
    let words = 4usize.pow(m as u32);
    for w in 0..words {
        let mut c = LinearOp::identity(1);
        let mut k = w;
        for _ in 0..m {
            c = c.kron(&sigma(k % 4));
            k /= 4;
        }
        for phase in [ONE, I] {
            let c = c.scale(phase);
            let j = AntilinearOp::new(c.clone());
            let sq = compare(&j.square(), &LinearOp::scalar(d, C64::new(signs.eps_f(), 0.0)), &tol);
            let gam = cl.gammas.iter().all(|g| {
                compare(&j.conj_unchecked(g), &g.scale_real(-signs.eps_prime_f()), &tol).pass()
            });
            let chi = compare(
                &j.conj_unchecked(&cl.chirality),
                &cl.chirality.scale_real(signs.eps_second_f()),
                &tol,
            );
            if sq.pass() && gam && chi.pass() {
                return Ok(j);
            }
        }
    }
    Err(Error::NoSuchConjugation(format!(
        "no Pauli word in dimension 2^{m} realizes signs ({}, {}, {})",
        signs.eps, signs.eps_prime, signs.eps_second
    )))
}

/// The lattice minimal-twist triple with its geometric data.
#[derive(Clone, Debug)]
pub struct MinimalTwistTriple {
    pub triple: RealTwistedTriple,
    pub geometry: LatticeGeometry,
    pub clifford: CliffordData,
    pub charge: AntilinearOp,
}

pub fn lattice_minimal_twist(m: usize, l: usize, signs: KOSignature) -> Result<MinimalTwistTriple> {
    lattice_minimal_twist_with(m, l, signs, DerivativeKind::Central)
}

pub fn lattice_minimal_twist_with(
    m: usize,
    l: usize,
    signs: KOSignature,
    kind: DerivativeKind,
) -> Result<MinimalTwistTriple> {
    if !(1..=2).contains(&m) {
        return Err(Error::UnsupportedDimension(format!(
            "lattice minimal twist supports m ∈ {{1, 2}}, got {m}"
        )));
    }
    let geometry = LatticeGeometry::new(m, l, kind)?;
    let clifford = gamma_basis(m)?;
    let charge = charge_conjugation(m, signs)?;
    let sites = geometry.sites();
    let sd = clifford.spinor_dim();
    let half = sd / 2;
    let n = sites * sd;

    let alg = StarAlgebra::new(vec![1; 2 * sites])?;
    let mut assignment = Vec::with_capacity(n);
    for chir in 0..2 {
        for x in 0..sites {
            for c in 0..half {
                assignment.push(x * sd + chir * half + c);
            }
        }
    }
    let rep = Representation::new(alg.clone(), n, vec![half; 2 * sites], assignment)?;

    let mut dirac = LinearOp::zeros(n);
    for (mu, g) in clifford.gammas.iter().enumerate() {
        dirac += &geometry.derivative(mu).kron(&g.scale(-I));
    }
    let id_sites = LinearOp::identity(sites);
    let j = AntilinearOp::new(id_sites.kron(charge.unitary_part()));
    let grading = id_sites.kron(&clifford.chirality);
    let signs = KOSignature {
        dim_mod8: Some(((2 * m) % 8) as u8),
        ..signs
    };
    let triple = RealTwistedTriple::new(
        rep,
        dirac,
        j,
        Some(grading),
        Automorphism::flip(&alg)?,
        signs,
    )?;
    Ok(MinimalTwistTriple {
        triple,
        geometry,
        clifford,
        charge,
    })
}

impl MinimalTwistTriple {
    pub fn m(&self) -> usize {
        self.geometry.m
    }

    pub fn l(&self) -> usize {
        self.geometry.l
    }

    pub fn sites(&self) -> usize {
        self.geometry.sites()
    }

    /// `(f, g) ∈ F(sites) ⊕ F(sites)`.
    pub fn element(&self, f: &[C64], g: &[C64]) -> Result<AlgebraElement> {
        let s = self.sites();
        if f.len() != s || g.len() != s {
            return Err(Error::Dimension(format!(
                "lattice functions need {s} values, got {} and {}",
                f.len(),
                g.len()
            )));
        }
        self.triple.algebra().element(
            f.iter()
                .chain(g)
                .map(|z| LinearOp::from_diagonal(&[*z]))
                .collect(),
        )
    }

    /// The two component functions of an element.
    pub fn components(&self, a: &AlgebraElement) -> (Vec<C64>, Vec<C64>) {
        let s = self.sites();
        let vals: Vec<C64> = a.parts().iter().map(|p| p.get(0, 0)).collect();
        (vals[..s].to_vec(), vals[s..].to_vec())
    }

    /// `u = (e^{iθ₁}, e^{iθ₂})`.
    pub fn unitary_from_theta(&self, theta1: &[f64], theta2: &[f64]) -> Result<AlgebraElement> {
        let f: Vec<C64> = theta1.iter().map(|t| C64::from_polar(1.0, *t)).collect();
        let g: Vec<C64> = theta2.iter().map(|t| C64::from_polar(1.0, *t)).collect();
        self.element(&f, &g)
    }

    pub fn random_element(&self, r: &mut SeededRng) -> AlgebraElement {
        self.triple.algebra().random(r)
    }

    /// `1_sites ⊗ s`.
    pub fn spinor_op(&self, s: &LinearOp) -> LinearOp {
        LinearOp::identity(self.sites()).kron(s)
    }

    /// Projector onto `H₊` or `H₋` in spinor space.
    pub fn chiral_projector(&self, plus: bool) -> LinearOp {
        let d = self.clifford.spinor_dim();
        let sign = if plus { 1.0 } else { -1.0 };
        (&LinearOp::identity(d) + &self.clifford.chirality.scale_real(sign)).scale_real(0.5)
    }

    /// `γ^μ π(a) = π(ρ(a)) γ^μ` over the function basis.
    pub fn gamma_twist_residual(&self, tol: &Tolerance) -> Comparison {
        let t = &self.triple;
        let gs: Vec<LinearOp> = self.clifford.gammas.iter().map(|g| self.spinor_op(g)).collect();
        let mut worst = Comparison::exact_zero(tol);
        for e in t.algebra().basis() {
            let pa = t.rep().embed_sparse(&e);
            let pra = Sparse::from_op(&t.pi_rho(&e).expect("basis"));
            for g in &gs {
                // ‖γ π(a) − π(ρa) γ‖ is the sandwich residual of X = γ.
                worst = worst.worst(sandwich_comparison(g, &pa, &pra, tol));
            }
        }
        worst
    }

    /// `[D̸, a]_ρ = −iγ^μ [∇_μ, π(a)]`.
    pub fn commutator_structure_residual(&self, a: &AlgebraElement, tol: &Tolerance) -> Result<Comparison> {
        let t = &self.triple;
        let pa = t.pi(a)?;
        let d = self.clifford.spinor_dim();
        let mut rhs = LinearOp::zeros(t.dim());
        for (mu, g) in self.clifford.gammas.iter().enumerate() {
            let nabla = self.geometry.derivative(mu).kron(&LinearOp::identity(d));
            let c = nabla.commutator(&pa);
            rhs += &self.spinor_op(&g.scale(-I)).matmul(&c);
        }
        Ok(compare(&t.delta(a)?, &rhs, tol))
    }

    /// Which conjugation branch `J` realizes on the algebra: KO-dimension
    /// 0, 4 gives `Jπ(a)J⁻¹ = π(a*)`, KO-dimension 2, 6 gives
    /// `Jπ(a)J⁻¹ = π(ρ(a*))`.
    pub fn algebra_branch_residual(&self, a: &AlgebraElement, tol: &Tolerance) -> Result<Comparison> {
        let t = &self.triple;
        let lhs = t.j_conj(&t.pi(a)?);
        let target = if t.signs().eps_second == 1 {
            t.pi(&a.star())?
        } else {
            t.pi_rho(&a.star())?
        };
        Ok(compare(&lhs, &target, tol))
    }
}

/// Certificate for a lattice unitary plus the data that identifies the
/// trivial (constant `φ`) case.
#[derive(Clone, Debug, Serialize)]
pub struct UnitaryBranchReport {
    pub ko_dim: Option<u8>,
    pub phi_gradient_norm: f64,
    /// `ρ(u)*u` against `diag(e^{iφ}, e^{−iφ})`.
    pub frak_u_residual: f64,
    pub certificate: SelfAdjointnessCertificate,
}

pub fn unitary_branch_experiment(
    mt: &MinimalTwistTriple,
    theta1: &[f64],
    theta2: &[f64],
    tol: &Tolerance,
) -> Result<UnitaryBranchReport> {
    let t = &mt.triple;
    let u = mt.unitary_from_theta(theta1, theta2)?;
    let g = GaugeUnitary::new(t, u, tol)?;
    let certificate = certificate_raw(t, &g, None, tol)?;
    let phi: Vec<f64> = theta1.iter().zip(theta2).map(|(a, b)| a - b).collect();
    let expected = {
        let f: Vec<C64> = phi.iter().map(|p| C64::from_polar(1.0, *p)).collect();
        let gm: Vec<C64> = phi.iter().map(|p| C64::from_polar(1.0, -*p)).collect();
        mt.element(&f, &gm)?
    };
    let frak_u_residual = (&certificate.frak_u - &expected).norm();
    Ok(UnitaryBranchReport {
        ko_dim: t.signs().dim_mod8,
        phi_gradient_norm: mt.geometry.gradient_norm(&phi),
        frak_u_residual,
        certificate,
    })
}

/// Block data of `ω + ε′JωJ⁻¹` for `ω = ρ(a)[D̸, a′]_ρ`.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetricFluctuationReport {
    pub ko_dim: Option<u8>,
    pub omega_norm: f64,
    pub sum_norm: f64,
    /// `‖S − S*‖` for the symmetrized fluctuation `S`.
    pub selfadjoint: Comparison,
    /// `S` against `−iγ^μ(F_μ⊗P₊ + G_μ⊗P₋)` with the blocks from the
    /// closed-form expressions.
    pub block_identity: Comparison,
    /// `max_μ ‖F_μ + G_μ*‖`, the lattice form of `f_μ = −g_μ`.
    pub reality_residual: f64,
    pub f_norms: Vec<f64>,
    pub g_norms: Vec<f64>,
    /// `D̸ + S` against `D̸ − iγ^μ (F_μ ⊗ Γ)`.
    pub decomposition: Comparison,
    #[serde(skip)]
    pub fluctuated_dirac: LinearOp,
}

impl SymmetricFluctuationReport {
    pub fn max_block_norm(&self) -> f64 {
        self.f_norms
            .iter()
            .chain(&self.g_norms)
            .fold(0.0, |m, x| m.max(*x))
    }
}

/// `h [∇_μ, h′]` as a site operator.
fn k_block(geom: &LinearOp, h: &[C64], hp: &[C64]) -> LinearOp {
    let n = h.len();
    LinearOp::from_fn(n, |x, y| h[x] * geom.get(x, y) * (hp[y] - hp[x]))
}

pub fn symmetric_fluctuation(
    mt: &MinimalTwistTriple,
    a: &AlgebraElement,
    a_prime: &AlgebraElement,
    tol: &Tolerance,
) -> Result<SymmetricFluctuationReport> {
    let t = &mt.triple;
    let signs = t.signs();
    let eps_p = signs.eps_prime_f();
    let w = form_from_generators(
        t,
        vec![(t.twist().apply(a)?, a_prime.clone())],
        Side::Plain,
        tol,
    )?;
    let omega = w.value().clone();
    let sum = &omega + &t.j_conj(&omega).scale_real(eps_p);

    let (f, g) = mt.components(a);
    let (fp, gp) = mt.components(a_prime);
    let conj = |v: &[C64]| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
    let (fc, gc, fpc, gpc) = (conj(&f), conj(&g), conj(&fp), conj(&gp));
    let pp = mt.chiral_projector(true);
    let pm = mt.chiral_projector(false);
    let mut rebuilt = LinearOp::zeros(t.dim());
    let mut chiral = LinearOp::zeros(t.dim());
    let mut f_norms = Vec::new();
    let mut g_norms = Vec::new();
    let mut reality: f64 = 0.0;
    for (mu, gamma) in mt.clifford.gammas.iter().enumerate() {
        let nabla = mt.geometry.derivative(mu);
        let (fb, gb) = if signs.eps_second == 1 {
            (
                &k_block(&nabla, &f, &fp) + &k_block(&nabla, &fc, &fpc).scale_real(eps_p),
                &k_block(&nabla, &g, &gp) + &k_block(&nabla, &gc, &gpc).scale_real(eps_p),
            )
        } else {
            (
                &k_block(&nabla, &f, &fp) + &k_block(&nabla, &gc, &gpc).scale_real(eps_p),
                &k_block(&nabla, &g, &gp) + &k_block(&nabla, &fc, &fpc).scale_real(eps_p),
            )
        };
        let mg = mt.spinor_op(&gamma.scale(-I));
        rebuilt += &mg.matmul(&(&fb.kron(&pp) + &gb.kron(&pm)));
        chiral += &mg.matmul(&fb.kron(&mt.clifford.chirality));
        f_norms.push(fb.norm_fro());
        g_norms.push(gb.norm_fro());
        reality = reality.max((&fb + &gb.adjoint()).norm_fro());
    }
    let fluctuated = t.dirac() + &sum;
    let decomposition = compare(&fluctuated, &(t.dirac() + &chiral), tol);
    Ok(SymmetricFluctuationReport {
        ko_dim: signs.dim_mod8,
        omega_norm: omega.norm_fro(),
        sum_norm: sum.norm_fro(),
        selfadjoint: compare(&sum, &sum.adjoint(), tol),
        block_identity: compare(&sum, &rebuilt, tol),
        reality_residual: reality,
        f_norms,
        g_norms,
        decomposition,
        fluctuated_dirac: fluctuated,
    })
}

/// A pair `(a, a′)` with `f` constant, `g = f`, `g′ = −f′`. In KO-dimension
/// 0, 4 this gives Hermitian `F_μ = −G_μ`, a nonzero self-adjoint
/// fluctuation.
pub fn selfadjoint_fluctuation_pair(
    mt: &MinimalTwistTriple,
    r: &mut SeededRng,
) -> Result<(AlgebraElement, AlgebraElement)> {
    let s = mt.sites();
    let c = crate::sampling::random_c64(r);
    let f = vec![c; s];
    let fp: Vec<C64> = (0..s).map(|_| crate::sampling::random_c64(r)).collect();
    let gp: Vec<C64> = fp.iter().map(|z| -z).collect();
    Ok((mt.element(&f, &f)?, mt.element(&fp, &gp)?))
}

/// `max ‖Ad(u) − 1‖` over sampled unitaries.
pub fn ad_trivial_residual(
    mt: &MinimalTwistTriple,
    r: &mut SeededRng,
    samples: usize,
    tol: &Tolerance,
) -> Result<Comparison> {
    let t = &mt.triple;
    let id = LinearOp::identity(t.dim());
    let mut worst = Comparison::exact_zero(tol);
    for _ in 0..samples {
        let th1 = mt.geometry.smooth_random_function(r);
        let th2 = mt.geometry.smooth_random_function(r);
        let g = GaugeUnitary::new(t, mt.unitary_from_theta(&th1, &th2)?, tol)?;
        worst = worst.worst(compare(g.ad(), &id, tol));
        debug_assert!(unitarity_residual(g.ad()) < 1e-10);
    }
    Ok(worst)
}

/// Errors of `[D̸, a]_ρ ψ` against `−iγ^μ π(∂_μ a) ψ` on a sequence of
/// lattices, with the fitted exponent of `error ∝ h^p`.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub m: usize,
    pub sizes: Vec<usize>,
    pub spacings: Vec<f64>,
    pub rms_errors: Vec<f64>,
    pub exponent: f64,
}

pub fn convergence_study(m: usize, sizes: &[usize], kind: DerivativeKind) -> Result<ConvergenceReport> {
    if sizes.len() < 2 {
        return Err(Error::Invalid("a convergence fit needs at least two lattices".into()));
    }
    let cl = gamma_basis(m)?;
    let sd = cl.spinor_dim();
    let half = sd / 2;
    let tau = 2.0 * PI;
    // a = (f, g) with
    //   f = sin(2πx₀) + ½cos(2πx₁),   g = cos(2π(x₀ + x₁)),
    // and a test spinor with components e^{2πi(x₀ + s·x₁)}(1 + s/3).
    let fval = |x: &[f64]| (tau * x[0]).sin() + 0.5 * (tau * x[1]).cos();
    let gval = |x: &[f64]| (tau * (x[0] + x[1])).cos();
    let fgrad = |x: &[f64], mu: usize| match mu {
        0 => tau * (tau * x[0]).cos(),
        1 => -0.5 * tau * (tau * x[1]).sin(),
        _ => 0.0,
    };
    let ggrad = |x: &[f64], mu: usize| match mu {
        0 | 1 => -tau * (tau * (x[0] + x[1])).sin(),
        _ => 0.0,
    };
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &l in sizes {
        let geom = LatticeGeometry::new(m, l, kind)?;
        let n = geom.sites();
        let pos: Vec<Vec<f64>> = (0..n).map(|s| geom.positions(s)).collect();
        let psi: Vec<C64> = (0..n * sd)
            .map(|k| {
                let (x, s) = (&pos[k / sd], (k % sd) as f64);
                C64::from_polar(1.0 + s / 3.0, tau * (x[0] + s * x[1]))
            })
            .collect();
        let mult = |v: &[C64], flip: bool, grad: Option<usize>| -> Vec<C64> {
            (0..n * sd)
                .map(|k| {
                    let (x, s) = (&pos[k / sd], k % sd);
                    let upper = (s < half) != flip;
                    let w = match (grad, upper) {
                        (None, true) => fval(x),
                        (None, false) => gval(x),
                        (Some(mu), true) => fgrad(x, mu),
                        (Some(mu), false) => ggrad(x, mu),
                    };
                    v[k] * w
                })
                .collect()
        };
        let dirac = |v: &[C64]| -> Vec<C64> {
            let mut out = vec![ZERO; v.len()];
            for (mu, g) in cl.gammas.iter().enumerate() {
                let dv = geom.apply_derivative(mu, v, sd);
                for site in 0..n {
                    let gv = g.apply(&dv[site * sd..(site + 1) * sd]);
                    for c in 0..sd {
                        out[site * sd + c] += -I * gv[c];
                    }
                }
            }
            out
        };
        let lattice: Vec<C64> = {
            let a = dirac(&mult(&psi, false, None));
            let b = mult(&dirac(&psi), true, None);
            a.iter().zip(&b).map(|(x, y)| x - y).collect()
        };
        let mut continuum = vec![ZERO; n * sd];
        for (mu, g) in cl.gammas.iter().enumerate() {
            let da = mult(&psi, false, Some(mu));
            for site in 0..n {
                let gv = g.apply(&da[site * sd..(site + 1) * sd]);
                for c in 0..sd {
                    continuum[site * sd + c] += -I * gv[c];
                }
            }
        }
        let err: f64 = lattice
            .iter()
            .zip(&continuum)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / (n * sd) as f64;
        spacings.push(geom.spacing());
        errors.push(err.sqrt());
    }
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ConvergenceReport {
        m,
        sizes: sizes.to_vec(),
        spacings,
        rms_errors: errors,
        exponent: sxy / sxx,
    })
}
