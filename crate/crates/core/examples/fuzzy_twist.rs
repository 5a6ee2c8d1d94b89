//! Twisted 1-forms on the fuzzy fixture `M_n ⊕ M_n`: the derivation rule of
//! `[D, ·]_ρ`, the bimodule action (whose generator list must rebuild its value) and J-conjugation into the opposite
//! bimodule.

use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::{bimodule_act, derivation_residual, j_conjugate_form, random_form, recompute};
use ncg_twist::sampling::rng;
use ncg_twist::{validate_triple, Side, Tolerance};

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(2024);
    for variant in [FuzzyVariant::Ko0, FuzzyVariant::Ko6, FuzzyVariant::Odd] {
        let t = fixtures::fuzzy(variant, 3, 1)?;
        let report = validate_triple(&t, &tol);
        let alg = t.algebra();
        let (a, b) = (alg.random(&mut r), alg.random(&mut r));

        let w = random_form(&t, &mut r, 3, Side::Plain, &tol)?;
        let acted = bimodule_act(&t, &a, &w, &b)?;
        let opp = j_conjugate_form(&t, &w, &tol)?;

        println!("{variant:?}: dim H = {}, axioms pass = {}", t.dim(), report.pass);
        println!("  ‖δ(ab) − ρ(a)δ(b) − δ(a)b‖      = {:.2e}", derivation_residual(&t, &a, &b)?);
        println!("  generators rebuild a·ω·b         : {:.2e}", (&recompute(&t, &acted)? - acted.value()).norm_fro());
        let jr = opp.j_residuals().unwrap();
        println!(
            "  JωJ⁻¹ vs ε′·opposite form        : {:.2e} (‖ω‖ = {:.2})",
            jr.conjugated_plain.residual,
            w.value().norm_fro()
        );
    }
    Ok(())
}
