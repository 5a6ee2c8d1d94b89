//! `ω + ε′JωJ⁻¹` for `ω = ρ(a)[D̸, a′]_ρ` on the lattice, split into chiral
//! blocks `F_μ`, `G_μ`.

use ncg_twist::fixtures;
use ncg_twist::manifold::{selfadjoint_fluctuation_pair, symmetric_fluctuation};
use ncg_twist::sampling::rng;
use ncg_twist::Tolerance;

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(5);
    for mt in [fixtures::lattice_m1()?, fixtures::lattice_m2()?] {
        let (a, ap) = (mt.random_element(&mut r), mt.random_element(&mut r));
        let random = symmetric_fluctuation(&mt, &a, &ap, &tol)?;
        let (a, ap) = selfadjoint_fluctuation_pair(&mt, &mut r)?;
        let built = symmetric_fluctuation(&mt, &a, &ap, &tol)?;
        println!("m = {} (KO-dim {:?})", mt.m(), random.ko_dim);
        for (label, rep) in [("random (a, a′)", &random), ("f const, g′ = −f′", &built)] {
            println!(
                "  {label:<18} block identity {:.1e}  ‖S − S*‖ {:9.3e}  max ‖F+G*‖ {:9.3e}  D̸ − iγF⊗Γ {:9.3e}",
                rep.block_identity.residual,
                rep.selfadjoint.residual,
                rep.reality_residual,
                rep.decomposition.residual
            );
        }
    }
    Ok(())
}
