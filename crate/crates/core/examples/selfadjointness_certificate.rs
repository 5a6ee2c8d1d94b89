use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::gauge::selfadjointness_certificate;
use ncg_twist::sampling::rng;
use ncg_twist::{GaugeUnitary, Tolerance};

// The twisted gauge transform ρ(Ad u)·D·Ad(u)* need not be self-adjoint.
// The certificate decides it from ω(u) = u[D, ρ(u)*u]_ρ u* alone and
// cross-checks against the operator itself.
fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(4);
    let triples = [
        ("two-point", fixtures::two_point()),
        ("fuzzy-ko0", fixtures::fuzzy(FuzzyVariant::Ko0, 2, 1)?),
        ("fuzzy-ko6", fixtures::fuzzy(FuzzyVariant::Ko6, 2, 1)?),
        ("fuzzy-untwisted", fixtures::fuzzy_untwisted(2, 1)?),
    ];
    for (name, t) in &triples {
        let mut yes = 0;
        let n = 20;
        for _ in 0..n {
            let g = GaugeUnitary::random(t, &mut r, &tol)?;
            let c = selfadjointness_certificate(t, &g, None, &tol)?;
            assert_eq!(c.verdict, c.direct_verdict);
            yes += c.verdict as usize;
        }
        println!("{name:<16} self-adjoint after gauge transform: {yes}/{n}");
    }
    Ok(())
}
