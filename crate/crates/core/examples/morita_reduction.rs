//! Self-Morita equivalence. On `E = 𝒜` the covariant operator built on the
//! balanced tensor product reduces to `D + ω` (right module) or
//! `D + ε′JωJ⁻¹` (left module). On `E = p𝒜²` the quotient and the concrete
//! model `p(ℋ²)` have the same dimension.

use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::random_form;
use ncg_twist::morita::{
    balanced_tensor, covariant_operator_on, leibniz_residual, self_equivalence_left, self_equivalence_right,
    ModuleLaw,
};
use ncg_twist::sampling::{random_vector, rng};
use ncg_twist::{Side, Tolerance};

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(31);
    let t = fixtures::fuzzy(FuzzyVariant::Ko6, 2, 3)?;
    let w = random_form(&t, &mut r, 2, Side::Plain, &tol)?;
    let right = self_equivalence_right(&t, &w, &tol)?;
    let left = self_equivalence_left(&t, &w, &tol)?;
    println!("E = 𝒜, ‖ω‖ = {:.3}", w.value().norm_fro());
    println!("  right: ‖D̃_R − (D + ω)‖        = {:.2e}", right.reduction.residual);
    println!("  left:  ‖D̃_L − (D + ε′JωJ⁻¹)‖  = {:.2e}", left.reduction.residual);

    let (t, m, c) = fixtures::pa2_module()?;
    let bs = balanced_tensor(&t, &m, &tol)?;
    println!("E = p𝒜²:");
    println!(
        "  dim E⊗ℋ = {}, relation rank = {}, quotient = {}, model = {}, gap = {:.1e}",
        bs.source_dim, bs.relation_rank, bs.abstract_dim, bs.model_dim, bs.gap
    );
    let op = covariant_operator_on(&t, &bs, &c, &tol)?;
    println!(
        "  relation span annihilated to {:.1e}; model vs p(1⊗D + A)p: {:.1e}",
        op.well_definedness.residual, op.explicit_form.residual
    );
    let (eta, a, psi) = (m.random_element(&mut r), t.algebra().random(&mut r), random_vector(&mut r, t.dim()));
    for law in [ModuleLaw::Twisted, ModuleLaw::Untwisted] {
        println!("  Leibniz residual, {law:?} law: {:.3e}", leibniz_residual(&t, &c, &eta, &a, &psi, law)?);
    }
    Ok(())
}
