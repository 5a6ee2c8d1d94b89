//! A unitary `u` acts on a fluctuated operator by `ρ(Ad u)·D_ω·Ad(u)⁻¹`, and
//! the result is the fluctuation by the gauge-transformed potential
//! `ω^u = ρ(u)[D,u*]_ρ + ρ(u)ωu*`.

use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::random_form;
use ncg_twist::gauge::{gauge_transform_potential, opposite_gauge_bridge, twisted_conjugate_dirac};
use ncg_twist::morita::fluctuate;
use ncg_twist::sampling::rng;
use ncg_twist::{GaugeUnitary, Side, Tolerance};

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(99);
    for t in [
        fixtures::fuzzy(FuzzyVariant::Ko0, 2, 5)?,
        fixtures::fuzzy_untwisted(2, 5)?,
    ] {
        let g = GaugeUnitary::random(&t, &mut r, &tol)?;
        let w = random_form(&t, &mut r, 2, Side::Plain, &tol)?;
        let d_w = fluctuate(&t, t.dirac(), w.value());
        let rep = twisted_conjugate_dirac(&t, &d_w, &w, &g, &tol)?;
        let wu = gauge_transform_potential(&t, &w, &g, &tol)?;
        println!(
            "twist is identity: {:5}  ‖Ad(u)‖-unitarity {:.1e}  covariance {:.2e}  ω = 0 case {:.2e}  opposite law {:.2e}  ‖ω^u‖ = {:.3}",
            t.twist().is_identity(),
            g.ad_unitarity_residual(),
            rep.identity.residual,
            rep.zero_form.residual,
            opposite_gauge_bridge(&t, &w, &g, &tol)?.residual,
            wu.value().norm_fro()
        );
    }
    Ok(())
}
