//! Fluctuations compose additively, and combining a right and a left
//! self-equivalence gives a J-compatible operator exactly when the two
//! potentials differ by something J-odd.

use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::{hermitian_part, random_form};
use ncg_twist::morita::{assemble_fluctuation, fluctuate, fluctuation_monoid_check};
use ncg_twist::sampling::rng;
use ncg_twist::{validate_triple, Side, Tolerance};

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(12);
    let t = fixtures::fuzzy(FuzzyVariant::Ko0, 2, 9)?;
    let w1 = random_form(&t, &mut r, 2, Side::Plain, &tol)?;
    let w2 = random_form(&t, &mut r, 2, Side::Plain, &tol)?;
    println!("monoid residual: {:.2e}", fluctuation_monoid_check(&t, &w1, &w2)?);

    let same = assemble_fluctuation(&t, &w1, &w1, &tol)?;
    let mixed = assemble_fluctuation(&t, &w1, &w2, &tol)?;
    println!(
        "w_R = w_L: J-compatibility {:.2e}, reproduces fluct(D, ½(w_R + w_L)) to {:.2e}",
        same.j_compatibility.residual,
        same.reproduction.unwrap().residual
    );
    println!(
        "w_R ≠ w_L: J-compatibility {:.3e}, violation {:.3e}, symmetrized form offered: {}",
        mixed.j_compatibility.residual,
        mixed.violation_residual,
        mixed.symmetrized.is_some()
    );

    let h = hermitian_part(&t, &w1, &tol)?;
    let fluctuated = t.with_dirac(fluctuate(&t, t.dirac(), h.value()))?;
    let report = validate_triple(&fluctuated, &tol);
    println!("fluctuated by a self-adjoint form, same J and signs: axioms pass = {}", report.pass);
    Ok(())
}
