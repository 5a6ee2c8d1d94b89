//! Self-adjointness of the gauge-transformed lattice Dirac operator for
//! `u = (e^{iθ₁}, e^{iθ₂})`. With `φ = θ₁ − θ₂` constant, `ω(u)` vanishes
//! and the certificate passes; for smooth non-constant `φ` it is reported
//! as is.

use ncg_twist::fixtures;
use ncg_twist::manifold::unitary_branch_experiment;
use ncg_twist::sampling::rng;
use ncg_twist::Tolerance;

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(7);
    let mt = fixtures::lattice_m1()?;
    let th1 = mt.geometry.smooth_random_function(&mut r);
    let th2 = mt.geometry.smooth_random_function(&mut r);
    let shifted: Vec<f64> = th1.iter().map(|x| x - 0.4).collect();

    for (label, a, b) in [("constant φ", &th1, &shifted), ("smooth φ", &th1, &th2)] {
        let rep = unitary_branch_experiment(&mt, a, b, &tol)?;
        let c = &rep.certificate;
        println!(
            "{label:<11} ‖∇φ‖ = {:7.3}  residual {:.3e} / ‖ω(u)‖ {:.3e}  verdict {}  direct {}  consistent {}",
            rep.phi_gradient_norm, c.variant_a_residual, c.omega_norm, c.verdict, c.direct_verdict, c.consistent
        );
    }
    Ok(())
}
