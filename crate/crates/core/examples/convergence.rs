//! `[D̸, a]_ρ ψ` against the continuum `−iγ^μ π(∂_μ a) ψ` on refining
//! lattices. Central differences converge at second order.

use ncg_twist::manifold::{convergence_study, DerivativeKind};

fn main() -> ncg_twist::Result<()> {
    for kind in [DerivativeKind::Central, DerivativeKind::Spectral] {
        let rep = convergence_study(1, &[9, 17, 33], kind)?;
        println!("{kind:?}");
        for (h, e) in rep.spacings.iter().zip(&rep.rms_errors) {
            println!("  h = {h:.4}  rms error = {e:.3e}");
        }
        if rep.rms_errors.iter().all(|e| *e < 1e-10) {
            println!("  at round-off level on every lattice");
        } else {
            println!("  fitted order p = {:.3}", rep.exponent);
        }
    }
    Ok(())
}
