//! Antilinear operators `J = U∘conj`: composition, inverse and conjugation
//! `T ↦ JTJ⁻¹` without ever forming a real `2n×2n` matrix.

use ncg_twist::opcore::{compose_antilinear, conjugate_by, Operator};
use ncg_twist::sampling::{random_op, rng};
use ncg_twist::{AntilinearOp, Tolerance};

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let mut r = rng(1);
    let j = AntilinearOp::new(ncg_twist::fixtures::sigma(2));
    println!("J = σ₂∘conj is antiunitary: {}", j.is_antiunitary(&tol));
    println!("J² = {:?}", j.square().get(0, 0));

    let t = random_op(&mut r, 2);
    let conj = conjugate_by(&j, &t, &tol)?;
    let v = ncg_twist::sampling::random_vector(&mut r, 2);
    let lhs = conj.apply(&v);
    let jinv = j.inverse(&tol)?;
    let rhs = j.apply(&t.apply(&jinv.apply(&v)));
    let err: f64 = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    println!("JTJ⁻¹v computed two ways differ by {err:.1e}");

    let jj = compose_antilinear(&Operator::from(j.clone()), &Operator::from(j))?;
    println!("J∘J is antilinear: {}", jj.is_antilinear());
    Ok(())
}
