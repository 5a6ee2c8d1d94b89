//! Validates the two-point triple `C ⊕ C` on `C²` with the flip twist and
//! prints the per-axiom residuals.

use ncg_twist::fixtures;
use ncg_twist::{validate_triple, Tolerance};

fn main() {
    let t = fixtures::two_point();
    let report = validate_triple(&t, &Tolerance::default());
    for (axiom, r) in &report.axioms {
        let tag = if r.vacuous { " (vacuous)" } else { "" };
        println!("{axiom:<32} {:>10.3e}  <= {:>9.3e}  {}{tag}", r.residual, r.threshold, r.pass);
    }
    println!("signs: {:?}", t.signs());
    println!("all axioms hold: {}", report.pass);
}
