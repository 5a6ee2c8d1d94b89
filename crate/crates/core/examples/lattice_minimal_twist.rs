//! The minimal twist of a flat torus on an `L^{2m}` lattice.
//!
//! `D̸` is built from central differences, the algebra is
//! `C(T) ⊗ C²` acting on the two chiral halves, and the twist is the flip.
//! The first-order condition only holds in the continuum: a difference
//! operator does not commute with multiplications up to a multiplication
//! operator, and the validator says so.

use ncg_twist::fixtures;
use ncg_twist::{validate_triple, Tolerance};

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    for mt in [fixtures::lattice_m1()?, fixtures::lattice_m2()?] {
        let start = std::time::Instant::now();
        let report = validate_triple(&mt.triple, &tol);
        println!(
            "m = {}, L = {}: dim H = {}, KO-dim {:?}, validated in {:.2?}",
            mt.m(),
            mt.l(),
            mt.triple.dim(),
            mt.triple.signs().dim_mod8,
            start.elapsed()
        );
        println!("  Γ-twist relation residual: {:.2e}", mt.gamma_twist_residual(&tol).residual);
        for (axiom, r) in &report.axioms {
            if !r.pass {
                println!("  fails {axiom}: {:.3e} > {:.3e}", r.residual, r.threshold);
            }
        }
    }
    Ok(())
}
