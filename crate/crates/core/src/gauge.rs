//! Unitaries, `Ad(u) = uJuJ⁻¹`, twisted gauge transformations of potentials
//! and the self-adjointness certificate for gauge-transformed Dirac
//! operators.

use serde::Serialize;

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::forms::{bimodule_act, form_value, Side, TwistedOneForm};
use crate::morita::fluctuate;
use crate::opcore::{compare, unitarity_residual, Comparison, LinearOp, Tolerance};
use crate::sampling::SeededRng;
use crate::triple::RealTwistedTriple;

/// A certificate whose two verdicts disagree is only declared inconsistent
/// when the side that fails does so by more than this factor over its
/// threshold. Residuals between one and this many thresholds are treated
/// as indeterminate rather than contradictory.
pub const CERTIFICATE_MARGIN: f64 = 1e3;

#[derive(Clone, Debug)]
pub struct GaugeUnitary {
    u: AlgebraElement,
    as_op: LinearOp,
    ad: LinearOp,
}

impl GaugeUnitary {
    pub fn new(t: &RealTwistedTriple, u: AlgebraElement, tol: &Tolerance) -> Result<Self> {
        if !t.algebra().contains(&u) {
            return Err(Error::AlgebraMismatch("gauge unitary from another algebra".into()));
        }
        if !u.is_unitary(tol) {
            return Err(Error::NotUnitary {
                residual: u.unitarity_residual(),
            });
        }
        let as_op = t.pi(&u)?;
        let ad = as_op.matmul(&t.j_conj(&as_op));
        Ok(GaugeUnitary { u, as_op, ad })
    }

    pub fn random(t: &RealTwistedTriple, r: &mut SeededRng, tol: &Tolerance) -> Result<Self> {
        Self::new(t, t.algebra().random_unitary(r), tol)
    }

    pub fn u(&self) -> &AlgebraElement {
        &self.u
    }

    pub fn as_op(&self) -> &LinearOp {
        &self.as_op
    }

    /// `Ad(u) = u J u J⁻¹`.
    pub fn ad(&self) -> &LinearOp {
        &self.ad
    }

    /// `‖Ad(u)*Ad(u) − 1‖ + ‖Ad(u)Ad(u)* − 1‖`.
    pub fn ad_unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.ad)
    }
}

/// `ρ(Ad u) = ρ(u)·Jρ(u)J⁻¹` with the order-zero cross-check.
#[derive(Clone, Debug)]
pub struct TwistedAdjoint {
    pub op: LinearOp,
    /// Worst disagreement with `ρ(u)ρ°(v)` and `ρ°(v)ρ(u)`, `v = JuJ⁻¹`.
    pub order_residual: Comparison,
}

pub fn twist_of_adjoint(
    t: &RealTwistedTriple,
    g: &GaugeUnitary,
    tol: &Tolerance,
) -> Result<TwistedAdjoint> {
    let ru = t.pi_rho(&g.u)?;
    let op = ru.matmul(&t.j_conj(&ru));
    // v = JuJ⁻¹ = (u*)°, so ρ°(v) = (ρ⁻¹(u*))°.
    let rv = t.rho_opposite(&g.u.star())?;
    let c1 = compare(&op, &ru.matmul(&rv), tol);
    let c2 = compare(&op, &rv.matmul(&ru), tol);
    Ok(TwistedAdjoint {
        op,
        order_residual: c1.worst(c2),
    })
}

/// `ρ(Ad u)* = ρ⁻¹(Ad(u)*)` as operators.
pub fn adjoint_twist_residual(
    t: &RealTwistedTriple,
    g: &GaugeUnitary,
    tol: &Tolerance,
) -> Result<Comparison> {
    let lhs = twist_of_adjoint(t, g, tol)?.op.adjoint();
    // Ad(u)* = Ad(u*) by order zero, and ρ⁻¹ acts factorwise.
    let x = t.rep().embed(&t.twist_inverse().apply(&g.u.star())?)?;
    let rhs = x.matmul(&t.j_conj(&x));
    Ok(compare(&lhs, &rhs, tol))
}

/// Gauge transformation of a potential.
///
/// Plain side: `ω^u = ρ(u)[D,u*]_ρ + ρ(u) ω u*`.
/// Opposite side: `(ω°)^u = ρ°(u*°)[D,u°]_{ρ°} + ρ°(u*°) ω° u°`.
pub fn gauge_transform_potential(
    t: &RealTwistedTriple,
    w: &TwistedOneForm,
    g: &GaugeUnitary,
    tol: &Tolerance,
) -> Result<TwistedOneForm> {
    let u = &g.u;
    let us = u.star();
    let pure = match w.side() {
        Side::Plain => vec![(t.twist().apply(u)?, us.clone())],
        Side::Opposite => vec![(t.twist_inverse().apply(&us)?, u.clone())],
    };
    let pure = crate::forms::form_from_generators(t, pure, w.side(), tol)?;
    let conjugated = bimodule_act(t, u, w, &us)?;
    pure.try_add(&conjugated)
}

/// `(ω°)^u = ε′J(ω)^uJ⁻¹` with `ω° = ε′JωJ⁻¹`: the opposite-side gauge law
/// is the J-conjugate of the plain one.
pub fn opposite_gauge_bridge(
    t: &RealTwistedTriple,
    w: &TwistedOneForm,
    g: &GaugeUnitary,
    tol: &Tolerance,
) -> Result<Comparison> {
    let opp = crate::forms::j_conjugate_form(t, w, tol)?;
    let lhs = gauge_transform_potential(t, &opp, g, tol)?;
    let plain = gauge_transform_potential(t, w, g, tol)?;
    let rhs = t.j_conj(plain.value()).scale_real(t.signs().eps_prime_f());
    Ok(compare(lhs.value(), &rhs, tol))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugationReport {
    /// `ρ(Ad u) D_ω Ad(u)⁻¹` against `D + ω^u + ε′Jω^uJ⁻¹`.
    pub identity: Comparison,
    /// The same with `ω = 0`.
    pub zero_form: Comparison,
}

/// Checks `ρ(Ad u)·D_ω·Ad(u)⁻¹ = D_{ω^u}` after verifying that `d_gauged`
/// is the fluctuation of `D` by `w`.
pub fn twisted_conjugate_dirac(
    t: &RealTwistedTriple,
    d_gauged: &LinearOp,
    w: &TwistedOneForm,
    g: &GaugeUnitary,
    tol: &Tolerance,
) -> Result<ConjugationReport> {
    if w.side() != Side::Plain {
        return Err(Error::Invalid("gauge conjugation takes a plain form".into()));
    }
    let declared = fluctuate(t, t.dirac(), w.value());
    let pre = compare(d_gauged, &declared, tol);
    if !pre.pass() {
        return Err(Error::Precheck(format!(
            "operator is not D + ω + ε′JωJ⁻¹ (residual {:.3e}, threshold {:.3e})",
            pre.residual, pre.threshold
        )));
    }
    let rad = twist_of_adjoint(t, g, tol)?.op;
    let ad_inv = g.ad.adjoint();
    let conj = |d: &LinearOp| rad.matmul(d).matmul(&ad_inv);

    let wu = gauge_transform_potential(t, w, g, tol)?;
    let identity = compare(&conj(d_gauged), &fluctuate(t, t.dirac(), wu.value()), tol);

    let pure = form_value(t, &[(t.twist().apply(&g.u)?, g.u.star())], Side::Plain)?;
    let zero_form = compare(&conj(t.dirac()), &fluctuate(t, t.dirac(), &pure), tol);
    Ok(ConjugationReport {
        identity,
        zero_form,
    })
}

/// Both forms of the self-adjointness criterion for `ρ(Ad u) D_ω Ad(u)*`
/// and the direct check.
#[derive(Clone, Debug, Serialize)]
pub struct SelfAdjointnessCertificate {
    /// `‖Jω(u)J⁻¹ + ε′ω(u)‖` with `ω(u) = u°[D,𝔲]_ρ u*°`.
    pub variant_a_residual: f64,
    /// Same with `ω(u) = u[D,𝔲]_ρ u*`.
    pub variant_b_residual: f64,
    pub omega_norm: f64,
    pub threshold: f64,
    pub verdict: bool,
    /// `‖X − X*‖` for `X = ρ(Ad u) D_ω Ad(u)*`.
    pub direct_residual: f64,
    pub direct_threshold: f64,
    pub direct_verdict: bool,
    pub variants_agree: bool,
    pub consistent: bool,
    /// `𝔲 = ρ(u)*u`.
    #[serde(skip)]
    pub frak_u: AlgebraElement,
}

fn contradicts(pass_a: bool, pass_b: bool, fail_res: f64, fail_thr: f64) -> bool {
    pass_a != pass_b && fail_res > CERTIFICATE_MARGIN * fail_thr
}

/// Computes the certificate without judging its consistency.
pub fn certificate_raw(
    t: &RealTwistedTriple,
    g: &GaugeUnitary,
    d_omega: Option<&LinearOp>,
    tol: &Tolerance,
) -> Result<SelfAdjointnessCertificate> {
    let eps_p = t.signs().eps_prime_f();
    let u = &g.u;
    let frak_u = &t.twist().apply(u)?.star() * u;
    let comm = t.delta(&frak_u)?;

    let omega_a = t.opposite(u)?.matmul(&comm).matmul(&t.opposite(&u.star())?);
    let omega_b = g.as_op.matmul(&comm).matmul(&g.as_op.adjoint());
    let res = |w: &LinearOp| (&t.j_conj(w) + &w.scale_real(eps_p)).norm_fro();
    let (ra, rb) = (res(&omega_a), res(&omega_b));
    let omega_norm = omega_a.norm_fro().max(omega_b.norm_fro());
    let threshold = tol.threshold(omega_norm);
    let verdict = ra <= threshold;
    let verdict_b = rb <= threshold;

    let d = d_omega.unwrap_or(t.dirac());
    let x = twist_of_adjoint(t, g, tol)?
        .op
        .matmul(d)
        .matmul(&g.ad.adjoint());
    let direct = compare(&x, &x.adjoint(), tol);

    let variants_agree = (ra - rb).abs() <= threshold;
    let consistent = !contradicts(verdict, verdict_b, ra.max(rb), threshold)
        && !(contradicts(verdict, direct.pass(), ra, threshold)
            && !direct.pass()
            && direct.residual > CERTIFICATE_MARGIN * direct.threshold)
        && !(verdict != direct.pass()
            && if verdict {
                direct.residual > CERTIFICATE_MARGIN * direct.threshold
            } else {
                ra > CERTIFICATE_MARGIN * threshold
            });
    Ok(SelfAdjointnessCertificate {
        variant_a_residual: ra,
        variant_b_residual: rb,
        omega_norm,
        threshold,
        verdict,
        direct_residual: direct.residual,
        direct_threshold: direct.threshold,
        direct_verdict: direct.pass(),
        variants_agree,
        consistent,
        frak_u,
    })
}

/// The certificate, refusing to return one whose parts contradict each
/// other.
pub fn selfadjointness_certificate(
    t: &RealTwistedTriple,
    g: &GaugeUnitary,
    d_omega: Option<&LinearOp>,
    tol: &Tolerance,
) -> Result<SelfAdjointnessCertificate> {
    let c = certificate_raw(t, g, d_omega, tol)?;
    if !c.consistent {
        return Err(Error::InconsistentCertificate(format!(
            "criterion residual {:.3e} (threshold {:.3e}), direct residual {:.3e} (threshold {:.3e})",
            c.variant_a_residual, c.threshold, c.direct_residual, c.direct_threshold
        )));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, FuzzyVariant};
    use crate::forms::random_form;
    use crate::sampling::rng;

    #[test]
    fn identity_unitary_changes_nothing() {
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 1).unwrap();
        let tol = Tolerance::default();
        let mut r = rng(50);
        let g = GaugeUnitary::new(&t, t.algebra().one(), &tol).unwrap();
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let wu = gauge_transform_potential(&t, &w, &g, &tol).unwrap();
        assert!(compare(wu.value(), w.value(), &tol).pass());
        let d = fluctuate(&t, t.dirac(), w.value());
        let rep = twisted_conjugate_dirac(&t, &d, &w, &g, &tol).unwrap();
        assert!(rep.identity.residual < 1e-12 * d.norm_fro());
    }

    #[test]
    fn non_unitary_is_rejected() {
        let t = fixtures::two_point();
        let two = t.algebra().one().scale(crate::opcore::C64::new(2.0, 0.0));
        assert!(matches!(
            GaugeUnitary::new(&t, two, &Tolerance::default()),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn adjoint_action_is_unitary_and_twist_orders_agree() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy(FuzzyVariant::Ko6, 3, 2).unwrap();
        let mut r = rng(51);
        for _ in 0..20 {
            let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
            assert!(g.ad_unitarity_residual() < 1e-10);
            assert!(twist_of_adjoint(&t, &g, &tol).unwrap().order_residual.pass());
            assert!(adjoint_twist_residual(&t, &g, &tol).unwrap().pass());
        }
    }

    #[test]
    fn untwisted_pure_gauge_is_u_d_ustar() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy_untwisted(2, 3).unwrap();
        let mut r = rng(52);
        let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let z = TwistedOneForm::zero(t.dim(), Side::Plain);
        let wu = gauge_transform_potential(&t, &z, &g, &tol).unwrap();
        let u = g.as_op();
        let expected = u.matmul(&t.dirac().commutator(&u.adjoint()));
        assert!(compare(wu.value(), &expected, &tol).pass());
        assert!(twist_of_adjoint(&t, &g, &tol).unwrap().op == *g.ad());
    }

    #[test]
    fn gauge_law_is_a_cocycle() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 4).unwrap();
        let mut r = rng(53);
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let g1 = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let g2 = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let twice = gauge_transform_potential(
            &t,
            &gauge_transform_potential(&t, &w, &g1, &tol).unwrap(),
            &g2,
            &tol,
        )
        .unwrap();
        let g21 = GaugeUnitary::new(&t, g2.u() * g1.u(), &tol).unwrap();
        let once = gauge_transform_potential(&t, &w, &g21, &tol).unwrap();
        assert!(compare(twice.value(), once.value(), &tol).pass());
    }

    #[test]
    fn opposite_gauge_law_is_the_conjugate_of_the_plain_one() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy(FuzzyVariant::Odd, 2, 5).unwrap();
        let mut r = rng(54);
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol).unwrap();
        let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        assert!(opposite_gauge_bridge(&t, &w, &g, &tol).unwrap().pass());
    }

    #[test]
    fn precheck_rejects_undeclared_operator() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 6).unwrap();
        let mut r = rng(55);
        let w = random_form(&t, &mut r, 1, Side::Plain, &tol).unwrap();
        let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
        let e = twisted_conjugate_dirac(&t, t.dirac(), &w, &g, &tol);
        assert!(matches!(e, Err(Error::Precheck(_))));
    }

    #[test]
    fn twist_invariant_unitary_has_trivial_certificate() {
        let tol = Tolerance::default();
        let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 7).unwrap();
        let mut r = rng(56);
        let v = crate::sampling::random_unitary_op(&mut r, 2);
        let u = t.algebra().element(vec![v.clone(), v]).unwrap();
        let g = GaugeUnitary::new(&t, u, &tol).unwrap();
        let c = selfadjointness_certificate(&t, &g, None, &tol).unwrap();
        assert!(c.verdict && c.direct_verdict);
        assert!(c.omega_norm < 1e-12);
    }

    #[test]
    fn generic_unitary_certificate_is_consistent() {
        let tol = Tolerance::default();
        let mut r = rng(57);
        for v in [FuzzyVariant::Ko0, FuzzyVariant::Ko6, FuzzyVariant::Odd] {
            let t = fixtures::fuzzy(v, 2, 8).unwrap();
            for _ in 0..5 {
                let g = GaugeUnitary::random(&t, &mut r, &tol).unwrap();
                let c = selfadjointness_certificate(&t, &g, None, &tol).unwrap();
                assert!(c.variants_agree);
                assert_eq!(c.verdict, c.direct_verdict, "{v:?}");
            }
        }
    }
}
