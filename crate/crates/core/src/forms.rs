//! Twisted 1-forms `Σ a_j [D, b_j]_ρ` and their opposite counterparts
//! `Σ a_j° [D, b_j°]_{ρ°}`. A form always keeps its generators, so both sides
//! of every identity can be rebuilt independently.

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::opcore::{compare, Comparison, LinearOp, Tolerance, C64};
use crate::sampling::SeededRng;
use crate::triple::RealTwistedTriple;

/// Which bimodule a form lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `Ω¹_D(𝒜, ρ)`.
    Plain,
    /// `Ω¹_D(𝒜°, ρ°)`.
    Opposite,
}

/// Residuals recorded by [`j_conjugate_form`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JConjugationResiduals {
    /// `JωJ⁻¹` against `ε′ Σ (a_j*)° [D, (b_j*)°]_{ρ°}`.
    pub conjugated_plain: Comparison,
    /// The opposite form against `ε′ J ω J⁻¹` with `ω` rebuilt from the
    /// starred generators.
    pub opposite_from_starred: Comparison,
}

#[derive(Clone, Debug)]
pub struct TwistedOneForm {
    value: LinearOp,
    pairs: Vec<(AlgebraElement, AlgebraElement)>,
    side: Side,
    j_residuals: Option<JConjugationResiduals>,
}

impl TwistedOneForm {
    /// The canonical zero form: no generators, zero value.
    pub fn zero(dim: usize, side: Side) -> Self {
        TwistedOneForm {
            value: LinearOp::zeros(dim),
            pairs: Vec::new(),
            side,
            j_residuals: None,
        }
    }

    pub fn value(&self) -> &LinearOp {
        &self.value
    }

    pub fn pairs(&self) -> &[(AlgebraElement, AlgebraElement)] {
        &self.pairs
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn j_residuals(&self) -> Option<&JConjugationResiduals> {
        self.j_residuals.as_ref()
    }

    pub fn try_add(&self, other: &TwistedOneForm) -> Result<Self> {
        if self.side != other.side {
            return Err(Error::Invalid("adding forms from different bimodules".into()));
        }
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        Ok(TwistedOneForm {
            value: self.value.try_add(&other.value)?,
            pairs,
            side: self.side,
            j_residuals: None,
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        TwistedOneForm {
            value: self.value.scale(z),
            pairs: self
                .pairs
                .iter()
                .map(|(a, b)| (a.scale(z), b.clone()))
                .collect(),
            side: self.side,
            j_residuals: None,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Operator value of a generator list.
pub fn form_value(
    t: &RealTwistedTriple,
    pairs: &[(AlgebraElement, AlgebraElement)],
    side: Side,
) -> Result<LinearOp> {
    let mut v = LinearOp::zeros(t.dim());
    for (a, b) in pairs {
        let term = match side {
            Side::Plain => t.pi(a)?.matmul(&t.delta(b)?),
            Side::Opposite => t.opposite(a)?.matmul(&t.delta_opposite(b)?),
        };
        v += &term;
    }
    Ok(v)
}

pub fn form_from_generators(
    t: &RealTwistedTriple,
    pairs: Vec<(AlgebraElement, AlgebraElement)>,
    side: Side,
    tol: &Tolerance,
) -> Result<TwistedOneForm> {
    if side == Side::Opposite {
        let reg = t.twist().check_regular(tol);
        if !reg.regular {
            return Err(Error::IrregularTwist {
                residual: reg.residual,
            });
        }
    }
    if pairs.is_empty() {
        return Ok(TwistedOneForm::zero(t.dim(), side));
    }
    let value = form_value(t, &pairs, side)?;
    Ok(TwistedOneForm {
        value,
        pairs,
        side,
        j_residuals: None,
    })
}

/// Random form with `terms` generator pairs.
pub fn random_form(
    t: &RealTwistedTriple,
    r: &mut SeededRng,
    terms: usize,
    side: Side,
    tol: &Tolerance,
) -> Result<TwistedOneForm> {
    let pairs = (0..terms)
        .map(|_| (t.algebra().random(r), t.algebra().random(r)))
        .collect();
    form_from_generators(t, pairs, side, tol)
}

/// Rebuilds the value from the stored generators.
pub fn recompute(t: &RealTwistedTriple, w: &TwistedOneForm) -> Result<LinearOp> {
    form_value(t, &w.pairs, w.side)
}

/// `a·ω·b`: `ρ(a) ω b` on the plain side, `ρ°(b°) ω a°` on the opposite side.
/// Generators are rewritten with the Leibniz rule so they stay consistent
/// with the value.
pub fn bimodule_act(
    t: &RealTwistedTriple,
    a: &AlgebraElement,
    w: &TwistedOneForm,
    b: &AlgebraElement,
) -> Result<TwistedOneForm> {
    let alg = t.algebra();
    if !alg.contains(a) || !alg.contains(b) {
        return Err(Error::AlgebraMismatch(
            "bimodule action by elements of another algebra".into(),
        ));
    }
    let rho = t.twist();
    let rho_inv = t.twist_inverse();
    let mut pairs = Vec::with_capacity(2 * w.pairs.len());
    let value = match w.side {
        Side::Plain => {
            let ra = rho.apply(a)?;
            for (x, y) in &w.pairs {
                let x = &ra * x;
                // x δ(y) b = x δ(y b) − x ρ(y) δ(b)
                pairs.push((x.clone(), y * b));
                pairs.push((-&(&x * &rho.apply(y)?), b.clone()));
            }
            t.pi_rho(a)?.matmul(&w.value).matmul(&t.pi(b)?)
        }
        Side::Opposite => {
            let rib = rho_inv.apply(b)?;
            for (x, y) in &w.pairs {
                let x = x * &rib;
                // x° δ°(y) a° = x° δ°(a y) − (ρ⁻¹(y) x)° δ°(a)
                pairs.push((x.clone(), a * y));
                pairs.push((-&(&rho_inv.apply(y)? * &x), a.clone()));
            }
            t.rho_opposite(b)?
                .matmul(&w.value)
                .matmul(&t.opposite(a)?)
        }
    };
    Ok(TwistedOneForm {
        value,
        pairs,
        side: w.side,
        j_residuals: None,
    })
}

/// `‖δ(ab) − ρ(a)δ(b) − δ(a)b‖` with `δ = [D, ·]_ρ`.
pub fn derivation_residual(
    t: &RealTwistedTriple,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<f64> {
    let lhs = t.delta(&a.try_mul(b)?)?;
    let rhs = &t.pi_rho(a)?.matmul(&t.delta(b)?) + &t.delta(a)?.matmul(&t.pi(b)?);
    Ok((&lhs - &rhs).norm_fro())
}

/// Stability of the opposite forms under the left action:
/// `a·δ°(b) = δ°(ab) − δ°(a)·b`, i.e. `δ°(b) a° = δ°(ab) − ρ°(b°) δ°(a)`.
pub fn opposite_stability_residual(
    t: &RealTwistedTriple,
    a: &AlgebraElement,
    b: &AlgebraElement,
) -> Result<f64> {
    let lhs = t.delta_opposite(b)?.matmul(&t.opposite(a)?);
    let rhs = &t.delta_opposite(&a.try_mul(b)?)? - &t.rho_opposite(b)?.matmul(&t.delta_opposite(a)?);
    Ok((&lhs - &rhs).norm_fro())
}

/// Maps a plain form to the opposite form with generators `(a_j*, b_j*)`,
/// checking `JωJ⁻¹ = ε′ Σ (a_j*)°[D,(b_j*)°]_{ρ°}` and its converse.
pub fn j_conjugate_form(
    t: &RealTwistedTriple,
    w: &TwistedOneForm,
    tol: &Tolerance,
) -> Result<TwistedOneForm> {
    if w.side != Side::Plain {
        return Err(Error::Invalid(
            "J-conjugation takes a form of the plain bimodule".into(),
        ));
    }
    let eps_p = t.signs().eps_prime_f();
    let starred: Vec<(AlgebraElement, AlgebraElement)> =
        w.pairs.iter().map(|(a, b)| (a.star(), b.star())).collect();
    let opp = form_from_generators(t, starred.clone(), Side::Opposite, tol)?;

    let conjugated = t.j_conj(&w.value);
    let c1 = compare(&conjugated, &opp.value.scale_real(eps_p), tol);

    let back: Vec<(AlgebraElement, AlgebraElement)> =
        starred.iter().map(|(a, b)| (a.star(), b.star())).collect();
    let rebuilt = form_value(t, &back, Side::Plain)?;
    let c2 = compare(&opp.value, &t.j_conj(&rebuilt).scale_real(eps_p), tol);

    for (name, c) in [("J-conjugation of a plain form", c1), ("opposite form from starred generators", c2)] {
        if !c.pass() {
            return Err(Error::IdentityViolation {
                name: name.into(),
                residual: c.residual,
                threshold: c.threshold,
            });
        }
    }
    Ok(TwistedOneForm {
        j_residuals: Some(JConjugationResiduals {
            conjugated_plain: c1,
            opposite_from_starred: c2,
        }),
        ..opp
    })
}

/// `‖ω − ω*‖`.
pub fn self_adjoint_check(w: &TwistedOneForm) -> f64 {
    (&w.value - &w.value.adjoint()).norm_fro()
}

/// The adjoint of a plain form, again as a plain form.
///
/// With `ρ` regular, `[D,b]_ρ* = −[D, ρ⁻¹(b*)]_ρ`, so
/// `(a[D,b]_ρ)* = b*[D,a*]_ρ − [D, ρ⁻¹(b*)a*]_ρ`.
pub fn adjoint_form(t: &RealTwistedTriple, w: &TwistedOneForm, tol: &Tolerance) -> Result<TwistedOneForm> {
    if w.side != Side::Plain {
        return Err(Error::Invalid("adjoint_form takes a plain form".into()));
    }
    let reg = t.twist().check_regular(tol);
    if !reg.regular {
        return Err(Error::IrregularTwist {
            residual: reg.residual,
        });
    }
    let one = t.algebra().one();
    let mut pairs = Vec::with_capacity(2 * w.pairs.len());
    for (a, b) in &w.pairs {
        let (a_s, b_s) = (a.star(), b.star());
        let c = t.twist_inverse().apply(&b_s)?.try_mul(&a_s)?;
        pairs.push((b_s, a_s));
        pairs.push((one.scale(C64::new(-1.0, 0.0)), c));
    }
    form_from_generators(t, pairs, Side::Plain, tol)
}

/// `½(ω + ω*)`, a self-adjoint plain form.
pub fn hermitian_part(t: &RealTwistedTriple, w: &TwistedOneForm, tol: &Tolerance) -> Result<TwistedOneForm> {
    Ok(w.try_add(&adjoint_form(t, w, tol)?)?.scale(C64::new(0.5, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Automorphism;
    use crate::fixtures::{self, FuzzyVariant};
    use crate::opcore::compare;
    use crate::sampling::rng;

    fn fuzzy() -> RealTwistedTriple {
        fixtures::fuzzy(FuzzyVariant::Ko0, 2, 11).unwrap()
    }

    #[test]
    fn untwisted_unit_generator_is_classical_commutator() {
        let t = fixtures::fuzzy_untwisted(2, 1).unwrap();
        let tol = Tolerance::default();
        let mut r = rng(30);
        let b = t.algebra().random(&mut r);
        let w = form_from_generators(&t, vec![(t.algebra().one(), b.clone())], Side::Plain, &tol)
            .unwrap();
        let classical = t.dirac().commutator(&t.pi(&b).unwrap());
        assert!(compare(w.value(), &classical, &tol).pass());
    }

    #[test]
    fn two_point_forms_vanish() {
        let t = fixtures::two_point();
        let tol = Tolerance::default();
        let mut r = rng(31);
        let w = random_form(&t, &mut r, 3, Side::Plain, &tol).unwrap();
        assert_eq!(w.value().norm_fro(), 0.0);
        let z = TwistedOneForm::zero(2, Side::Plain);
        assert!(z.pairs().is_empty());
        assert_eq!(self_adjoint_check(&z), 0.0);
    }

    #[test]
    fn unit_action_is_identity() {
        let t = fuzzy();
        let tol = Tolerance::default();
        let mut r = rng(32);
        let one = t.algebra().one();
        for side in [Side::Plain, Side::Opposite] {
            let w = random_form(&t, &mut r, 2, side, &tol).unwrap();
            let v = bimodule_act(&t, &one, &w, &one).unwrap();
            assert!(compare(v.value(), w.value(), &tol).pass());
        }
    }

    #[test]
    fn bimodule_associativity_and_generator_coherence() {
        let t = fuzzy();
        let tol = Tolerance::default();
        let mut r = rng(33);
        for side in [Side::Plain, Side::Opposite] {
            for _ in 0..10 {
                let w = random_form(&t, &mut r, 2, side, &tol).unwrap();
                let a = t.algebra().random(&mut r);
                let b = t.algebra().random(&mut r);
                let one = t.algebra().one();
                let left_first =
                    bimodule_act(&t, &one, &bimodule_act(&t, &a, &w, &one).unwrap(), &b).unwrap();
                let right_first =
                    bimodule_act(&t, &a, &bimodule_act(&t, &one, &w, &b).unwrap(), &one).unwrap();
                assert!(compare(left_first.value(), right_first.value(), &tol).pass());
                let rebuilt = recompute(&t, &left_first).unwrap();
                assert!(compare(&rebuilt, left_first.value(), &tol).pass(), "{side:?}");
            }
        }
    }

    #[test]
    fn module_laws_compose() {
        let t = fuzzy();
        let tol = Tolerance::default();
        let mut r = rng(34);
        let one = t.algebra().one();
        for side in [Side::Plain, Side::Opposite] {
            let w = random_form(&t, &mut r, 1, side, &tol).unwrap();
            let a = t.algebra().random(&mut r);
            let b = t.algebra().random(&mut r);
            // ω·(ab) = (ω·a)·b
            let lhs = bimodule_act(&t, &one, &w, &(&a * &b)).unwrap();
            let rhs =
                bimodule_act(&t, &one, &bimodule_act(&t, &one, &w, &a).unwrap(), &b).unwrap();
            assert!(compare(lhs.value(), rhs.value(), &tol).pass());
            // (ab)·ω = a·(b·ω)
            let lhs = bimodule_act(&t, &(&a * &b), &w, &one).unwrap();
            let rhs =
                bimodule_act(&t, &a, &bimodule_act(&t, &b, &w, &one).unwrap(), &one).unwrap();
            assert!(compare(lhs.value(), rhs.value(), &tol).pass());
        }
    }

    #[test]
    fn actions_on_vectors() {
        let t = fuzzy();
        let tol = Tolerance::default();
        let mut r = rng(35);
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let a = t.algebra().random(&mut r);
        let one = t.algebra().one();
        let psi = crate::sampling::random_vector(&mut r, t.dim());
        let wa = bimodule_act(&t, &one, &w, &a).unwrap();
        let lhs = wa.value().apply(&psi);
        let rhs = w.value().apply(&t.pi(&a).unwrap().apply(&psi));
        let aw = bimodule_act(&t, &a, &w, &one).unwrap();
        let lhs2 = aw.value().apply(&psi);
        let rhs2 = t.pi_rho(&a).unwrap().apply(&w.value().apply(&psi));
        for k in 0..psi.len() {
            assert!((lhs[k] - rhs[k]).norm() < 1e-10);
            assert!((lhs2[k] - rhs2[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn derivation_and_stability() {
        let t = fuzzy();
        let mut r = rng(36);
        let one = t.algebra().one();
        for _ in 0..10 {
            let a = t.algebra().random(&mut r);
            let b = t.algebra().random(&mut r);
            let scale = t.dirac().norm_fro() * a.norm() * b.norm();
            assert!(derivation_residual(&t, &a, &b).unwrap() < 1e-12 * scale);
            assert!(opposite_stability_residual(&t, &a, &b).unwrap() < 1e-12 * scale);
        }
        let a = t.algebra().random(&mut r);
        assert!(derivation_residual(&t, &one, &a).unwrap() < 1e-12 * t.dirac().norm_fro());
        assert!(derivation_residual(&t, &a, &one).unwrap() < 1e-12 * t.dirac().norm_fro());
    }

    #[test]
    fn j_conjugation_identities_in_every_signature() {
        let tol = Tolerance::default();
        let mut r = rng(37);
        for v in [FuzzyVariant::Ko0, FuzzyVariant::Ko6, FuzzyVariant::Odd] {
            let t = fixtures::fuzzy(v, 2, 2).unwrap();
            let w = random_form(&t, &mut r, 3, Side::Plain, &tol).unwrap();
            let o = j_conjugate_form(&t, &w, &tol).unwrap();
            assert_eq!(o.side(), Side::Opposite);
            let res = o.j_residuals().unwrap();
            assert!(res.conjugated_plain.pass() && res.opposite_from_starred.pass());
        }
        let t = fuzzy();
        let z = j_conjugate_form(&t, &TwistedOneForm::zero(t.dim(), Side::Plain), &tol).unwrap();
        assert_eq!(z.value().norm_fro(), 0.0);
    }

    #[test]
    fn opposite_forms_need_a_regular_twist() {
        let t = fuzzy();
        let tol = Tolerance::default();
        let w = LinearOp::from_diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let alg = t.algebra().clone();
        let twist =
            Automorphism::new(alg, vec![0, 1], vec![w.clone(), w], &tol).unwrap();
        let bad = t.with_twist(twist).unwrap();
        let one = bad.algebra().one();
        let e = form_from_generators(&bad, vec![(one.clone(), one)], Side::Opposite, &tol);
        assert!(matches!(e, Err(Error::IrregularTwist { .. })));
    }

    #[test]
    fn adjoint_form_is_the_operator_adjoint() {
        let tol = Tolerance::default();
        let mut r = rng(33);
        for t in [fuzzy(), fixtures::fuzzy(FuzzyVariant::Ko6, 2, 4).unwrap()] {
            let w = random_form(&t, &mut r, 3, Side::Plain, &tol).unwrap();
            let ws = adjoint_form(&t, &w, &tol).unwrap();
            assert!(compare(ws.value(), &w.value().adjoint(), &tol).pass());
            let h = hermitian_part(&t, &w, &tol).unwrap();
            assert!(self_adjoint_check(&h) <= 1e-12 * (1.0 + h.value().norm_fro()));
        }
    }
}
