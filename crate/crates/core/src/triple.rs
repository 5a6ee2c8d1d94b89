//! Real twisted spectral triples and their axiom verifier.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{rho_opposite, AlgebraElement, Automorphism, Representation, StarAlgebra};
use crate::error::{Error, Result};
use crate::opcore::{
    compare, sandwich_comparison, twisted_commutator, AntilinearOp, Comparison, LinearOp, Sparse,
    Tolerance, C64,
};

const KO_TABLE: &str = include_str!("../data/ko_signs.json");

/// The sign triple `(ε, ε′, ε″)` of `J² = ε`, `JD = ε′DJ`, `JΓ = ε″ΓJ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSignature")]
pub struct KOSignature {
    pub eps: i8,
    pub eps_prime: i8,
    pub eps_second: i8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_mod8: Option<u8>,
}

#[derive(Deserialize)]
struct RawSignature {
    eps: i8,
    eps_prime: i8,
    eps_second: i8,
    #[serde(default)]
    dim_mod8: Option<u8>,
}

impl TryFrom<RawSignature> for KOSignature {
    type Error = Error;
    fn try_from(r: RawSignature) -> Result<Self> {
        KOSignature::new(r.eps, r.eps_prime, r.eps_second, r.dim_mod8)
    }
}

#[derive(Deserialize)]
struct PresetTable {
    presets: Vec<Preset>,
}

#[derive(Deserialize)]
struct Preset {
    name: String,
    dim_mod8: u8,
    eps: i8,
    eps_prime: i8,
    eps_second: i8,
}

impl KOSignature {
    pub fn new(eps: i8, eps_prime: i8, eps_second: i8, dim_mod8: Option<u8>) -> Result<Self> {
        for (name, s) in [("eps", eps), ("eps_prime", eps_prime), ("eps_second", eps_second)] {
            if s != 1 && s != -1 {
                return Err(Error::Invalid(format!("{name} must be +1 or -1, got {s}")));
            }
        }
        if let Some(d) = dim_mod8 {
            if d > 7 {
                return Err(Error::Invalid(format!("dim_mod8 must be in 0..7, got {d}")));
            }
        }
        Ok(KOSignature {
            eps,
            eps_prime,
            eps_second,
            dim_mod8,
        })
    }

    /// Looks up an even KO-dimension in the bundled sign table.
    pub fn preset(dim_mod8: u8) -> Result<Self> {
        let table: PresetTable = serde_json::from_str(KO_TABLE).expect("bundled sign table");
        table
            .presets
            .iter()
            .find(|p| p.dim_mod8 == dim_mod8)
            .map(|p| KOSignature::new(p.eps, p.eps_prime, p.eps_second, Some(p.dim_mod8)))
            .unwrap_or_else(|| {
                Err(Error::Invalid(format!(
                    "no preset for KO-dimension {dim_mod8}; presets cover 0, 2, 4, 6"
                )))
            })
    }

    /// Looks up a preset by name (`ko0`, `ko2`, `ko4`, `ko6`).
    pub fn preset_named(name: &str) -> Result<Self> {
        let table: PresetTable = serde_json::from_str(KO_TABLE).expect("bundled sign table");
        table
            .presets
            .iter()
            .find(|p| p.name == name)
            .map(|p| KOSignature::new(p.eps, p.eps_prime, p.eps_second, Some(p.dim_mod8)))
            .unwrap_or_else(|| Err(Error::Invalid(format!("unknown sign preset {name:?}"))))
    }

    pub fn eps_f(&self) -> f64 {
        self.eps as f64
    }

    pub fn eps_prime_f(&self) -> f64 {
        self.eps_prime as f64
    }

    pub fn eps_second_f(&self) -> f64 {
        self.eps_second as f64
    }
}

/// `(𝒜, ℋ, D; ρ)` with real structure `J`, optional grading `Γ` and signs.
#[derive(Clone, Debug)]
pub struct RealTwistedTriple {
    rep: Representation,
    dirac: LinearOp,
    real: AntilinearOp,
    real_adj_unitary: LinearOp,
    grading: Option<LinearOp>,
    twist: Automorphism,
    twist_inverse: Automorphism,
    signs: KOSignature,
}

impl RealTwistedTriple {
    pub fn new(
        rep: Representation,
        dirac: LinearOp,
        real: AntilinearOp,
        grading: Option<LinearOp>,
        twist: Automorphism,
        signs: KOSignature,
    ) -> Result<Self> {
        let n = rep.hilbert_dim();
        if dirac.dim() != n || real.dim() != n || grading.as_ref().is_some_and(|g| g.dim() != n) {
            return Err(Error::Dimension(format!(
                "Hilbert space has dimension {n} but D, J, Γ have sizes {}, {}, {}",
                dirac.dim(),
                real.dim(),
                grading.as_ref().map_or(n, |g| g.dim())
            )));
        }
        if twist.algebra() != rep.algebra() {
            return Err(Error::AlgebraMismatch(
                "twist and representation act on different algebras".into(),
            ));
        }
        Ok(RealTwistedTriple {
            real_adj_unitary: real.unitary_part().adjoint(),
            twist_inverse: twist.inverse(),
            rep,
            dirac,
            real,
            grading,
            twist,
            signs,
        })
    }

    /// Same `(𝒜, ℋ, J, Γ, ρ)` with a different Dirac operator.
    pub fn with_dirac(&self, dirac: LinearOp) -> Result<Self> {
        Self::new(
            self.rep.clone(),
            dirac,
            self.real.clone(),
            self.grading.clone(),
            self.twist.clone(),
            self.signs,
        )
    }

    /// Same data with the twist replaced, e.g. by the identity.
    pub fn with_twist(&self, twist: Automorphism) -> Result<Self> {
        Self::new(
            self.rep.clone(),
            self.dirac.clone(),
            self.real.clone(),
            self.grading.clone(),
            twist,
            self.signs,
        )
    }

    pub fn algebra(&self) -> &StarAlgebra {
        self.rep.algebra()
    }

    pub fn rep(&self) -> &Representation {
        &self.rep
    }

    pub fn dirac(&self) -> &LinearOp {
        &self.dirac
    }

    pub fn real_structure(&self) -> &AntilinearOp {
        &self.real
    }

    pub fn grading(&self) -> Option<&LinearOp> {
        self.grading.as_ref()
    }

    pub fn twist(&self) -> &Automorphism {
        &self.twist
    }

    pub fn twist_inverse(&self) -> &Automorphism {
        &self.twist_inverse
    }

    pub fn signs(&self) -> KOSignature {
        self.signs
    }

    pub fn dim(&self) -> usize {
        self.rep.hilbert_dim()
    }

    pub fn pi(&self, a: &AlgebraElement) -> Result<LinearOp> {
        self.rep.embed(a)
    }

    /// `π(ρ(a))`.
    pub fn pi_rho(&self, a: &AlgebraElement) -> Result<LinearOp> {
        self.rep.embed(&self.twist.apply(a)?)
    }

    /// `J T J⁻¹`, trusting that `J` is antiunitary (checked by validation).
    pub fn j_conj(&self, t: &LinearOp) -> LinearOp {
        self.real
            .unitary_part()
            .matmul(&t.conj())
            .matmul(&self.real_adj_unitary)
    }

    /// `a° = J π(a)* J⁻¹`.
    pub fn opposite(&self, a: &AlgebraElement) -> Result<LinearOp> {
        Ok(self.j_conj(&self.pi(a)?.adjoint()))
    }

    /// `ρ°(b°) = (ρ⁻¹(b))°`, the definition that needs no regularity.
    pub fn rho_opposite(&self, b: &AlgebraElement) -> Result<LinearOp> {
        self.opposite(&self.twist_inverse.apply(b)?)
    }

    /// `ρ°(b°)` through both routes, refusing irregular twists.
    pub fn rho_opposite_checked(&self, b: &AlgebraElement, tol: &Tolerance) -> Result<LinearOp> {
        rho_opposite(&self.twist, &self.rep, &self.real, b, tol)
    }

    /// `δ(a) = [D, π(a)]_ρ`.
    pub fn delta(&self, a: &AlgebraElement) -> Result<LinearOp> {
        twisted_commutator(&self.dirac, &self.pi(a)?, &self.pi_rho(a)?)
    }

    /// `δ°(b) = [D, b°]_{ρ°} = D b° − ρ°(b°) D`.
    pub fn delta_opposite(&self, b: &AlgebraElement) -> Result<LinearOp> {
        twisted_commutator(&self.dirac, &self.opposite(b)?, &self.rho_opposite(b)?)
    }
}

/// Residual of one axiom with its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomResult {
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// True for axioms that hold automatically in finite dimension.
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub vacuous: bool,
}

impl From<Comparison> for AxiomResult {
    fn from(c: Comparison) -> Self {
        AxiomResult {
            residual: c.residual,
            threshold: c.threshold,
            pass: c.pass(),
            vacuous: false,
        }
    }
}

impl AxiomResult {
    fn vacuous() -> Self {
        AxiomResult {
            residual: 0.0,
            threshold: 0.0,
            pass: true,
            vacuous: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tool_version: String,
    pub seed: u64,
    pub axioms: BTreeMap<String, AxiomResult>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn failing(&self) -> Vec<&str> {
        self.axioms
            .iter()
            .filter(|(_, r)| !r.pass)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Checks every testable axiom of a real twisted spectral triple. Algebraic
/// axioms run over the full matrix-unit basis; nothing is sampled.
pub fn validate_triple(t: &RealTwistedTriple, tol: &Tolerance) -> ValidationReport {
    let n = t.dim();
    let s = t.signs();
    let d = t.dirac();
    let mut axioms = BTreeMap::new();

    axioms.insert("dirac_selfadjoint".into(), compare(d, &d.adjoint(), tol).into());
    let j = t.real_structure();
    axioms.insert(
        "j_antiunitary".into(),
        Comparison::new(j.antiunitarity_residual(), (n as f64).sqrt(), tol).into(),
    );
    axioms.insert(
        "j_squared".into(),
        compare(&j.square(), &LinearOp::scalar(n, C64::new(s.eps_f(), 0.0)), tol).into(),
    );
    axioms.insert(
        "j_dirac".into(),
        compare(&t.j_conj(d), &d.scale_real(s.eps_prime_f()), tol).into(),
    );

    let basis = t.algebra().basis();
    if let Some(g) = t.grading() {
        axioms.insert(
            "j_grading".into(),
            compare(&t.j_conj(g), &g.scale_real(s.eps_second_f()), tol).into(),
        );
        axioms.insert("grading_selfadjoint".into(), compare(g, &g.adjoint(), tol).into());
        axioms.insert(
            "grading_involution".into(),
            compare(&g.matmul(g), &LinearOp::identity(n), tol).into(),
        );
        axioms.insert(
            "grading_anticommutes_dirac".into(),
            compare(&g.matmul(d), &(-&d.matmul(g)), tol).into(),
        );
        let gs = Sparse::from_op(g);
        let mut worst = Comparison::exact_zero(tol);
        for e in &basis {
            let pe = t.pi(e).expect("basis element");
            worst = worst.worst(sandwich_comparison(&pe, &gs, &gs, tol));
        }
        axioms.insert("grading_commutes_algebra".into(), worst.into());
    }

    axioms.insert(
        "representation_homomorphism".into(),
        t.rep().check_homomorphism(tol).into(),
    );

    let opp: Vec<Sparse> = basis
        .par_iter()
        .map(|b| Sparse::from_op(&t.opposite(b).expect("basis element")))
        .collect();
    let rho_opp: Vec<Sparse> = basis
        .par_iter()
        .map(|b| Sparse::from_op(&t.rho_opposite(b).expect("basis element")))
        .collect();

    let order_zero = basis
        .par_iter()
        .map(|a| {
            let pa = t.pi(a).expect("basis element");
            opp.iter()
                .fold(Comparison::exact_zero(tol), |w, bo| {
                    w.worst(sandwich_comparison(&pa, bo, bo, tol))
                })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Comparison::exact_zero(tol), Comparison::worst);
    axioms.insert("order_zero".into(), order_zero.into());

    let first_order = basis
        .par_iter()
        .map(|a| {
            let da = t.delta(a).expect("basis element");
            opp.iter()
                .zip(&rho_opp)
                .fold(Comparison::exact_zero(tol), |w, (bo, rbo)| {
                    w.worst(sandwich_comparison(&da, bo, rbo, tol))
                })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Comparison::exact_zero(tol), Comparison::worst);
    axioms.insert("twisted_first_order".into(), first_order.into());

    let reg = t.twist().check_regular(tol);
    axioms.insert(
        "twist_regular".into(),
        AxiomResult {
            residual: reg.residual,
            threshold: reg.threshold,
            pass: reg.regular,
            vacuous: false,
        },
    );
    axioms.insert("bounded_commutators".into(), AxiomResult::vacuous());
    axioms.insert("compact_resolvent".into(), AxiomResult::vacuous());

    let pass = axioms.values().all(|r| r.pass);
    ValidationReport {
        tool_version: crate::TOOL_VERSION.into(),
        seed: 0,
        axioms,
        pass,
    }
}

/// `‖[[D,π(a)]_ρ, Jπ(b)*J⁻¹]_{ρ°}‖`.
pub fn twisted_first_order_residual(
    t: &RealTwistedTriple,
    a: &AlgebraElement,
    b: &AlgebraElement,
    tol: &Tolerance,
) -> Result<f64> {
    let da = t.delta(a)?;
    let bo = t.opposite(b)?;
    let rbo = t.rho_opposite_checked(b, tol)?;
    Ok(twisted_commutator(&da, &bo, &rbo)?.norm_fro())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sampling::rng;

    #[test]
    fn presets_follow_the_standard_table() {
        let k2 = KOSignature::preset(2).unwrap();
        assert_eq!((k2.eps, k2.eps_prime, k2.eps_second), (-1, 1, -1));
        let k4 = KOSignature::preset_named("ko4").unwrap();
        assert_eq!((k4.eps, k4.eps_prime, k4.eps_second), (-1, 1, 1));
        assert!(KOSignature::preset(3).is_err());
        assert!(KOSignature::new(2, 1, 1, None).is_err());
    }

    #[test]
    fn signature_json_rejects_bad_signs() {
        let ok: KOSignature =
            serde_json::from_str(r#"{"eps":1,"eps_prime":1,"eps_second":-1,"dim_mod8":6}"#)
                .unwrap();
        assert_eq!(ok.dim_mod8, Some(6));
        assert!(serde_json::from_str::<KOSignature>(r#"{"eps":0,"eps_prime":1,"eps_second":1}"#)
            .is_err());
    }

    #[test]
    fn two_point_passes_with_zero_residuals() {
        let t = fixtures::two_point();
        let rep = validate_triple(&t, &Tolerance::default());
        assert!(rep.pass, "{:?}", rep.failing());
        for (name, r) in &rep.axioms {
            assert_eq!(r.residual, 0.0, "{name}");
        }
    }

    #[test]
    fn first_order_residual_vanishes_on_two_point_and_for_unit() {
        let t = fixtures::two_point();
        let tol = Tolerance::default();
        let mut r = rng(20);
        let a = t.algebra().random(&mut r);
        let b = t.algebra().random(&mut r);
        assert_eq!(twisted_first_order_residual(&t, &a, &b, &tol).unwrap(), 0.0);
        let f = fixtures::fuzzy(fixtures::FuzzyVariant::Ko0, 3, 1).unwrap();
        let a = f.algebra().random(&mut r);
        let one = f.algebra().one();
        assert!(twisted_first_order_residual(&f, &a, &one, &tol).unwrap() < 1e-12);
    }

    #[test]
    fn untwisted_first_order_matches_classical_commutator() {
        let t = fixtures::fuzzy_untwisted(3, 2).unwrap();
        let tol = Tolerance::default();
        let mut r = rng(21);
        let a = t.algebra().random(&mut r);
        let b = t.algebra().random(&mut r);
        let classical = t
            .dirac()
            .commutator(&t.pi(&a).unwrap())
            .commutator(&t.opposite(&b).unwrap())
            .norm_fro();
        assert_eq!(twisted_first_order_residual(&t, &a, &b, &tol).unwrap(), classical);
    }

    #[test]
    fn validation_is_monotone_in_tolerance() {
        let t = fixtures::fuzzy(fixtures::FuzzyVariant::Ko6, 2, 3).unwrap();
        let tight = Tolerance::new(1e-15, 1e-16).unwrap();
        let loose = Tolerance::new(1e-8, 1e-10).unwrap();
        let a = validate_triple(&t, &tight);
        let b = validate_triple(&t, &loose);
        for (k, r) in &a.axioms {
            if r.pass {
                assert!(b.axioms[k].pass, "{k}");
            }
        }
    }

    #[test]
    fn wrong_signature_is_caught() {
        let t = fixtures::two_point();
        let bad = RealTwistedTriple::new(
            t.rep().clone(),
            t.dirac().clone(),
            t.real_structure().clone(),
            t.grading().cloned(),
            t.twist().clone(),
            KOSignature::preset(0).unwrap(),
        )
        .unwrap();
        let rep = validate_triple(&bad, &Tolerance::default());
        assert!(!rep.pass);
        assert_eq!(rep.failing(), vec!["j_grading"]);
    }
}
