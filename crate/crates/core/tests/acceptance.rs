//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

use ncg_twist::fixtures::{self, FuzzyVariant};
use ncg_twist::forms::{form_value, hermitian_part, random_form};
use ncg_twist::gauge::{certificate_raw, twisted_conjugate_dirac};
use ncg_twist::manifold::{
    convergence_study, selfadjoint_fluctuation_pair, symmetric_fluctuation, unitary_branch_experiment,
    DerivativeKind, MinimalTwistTriple,
};
use ncg_twist::morita::{
    assemble_fluctuation, balanced_tensor, covariant_operator_on, fluctuate, fluctuation_monoid_check,
    self_equivalence_left, self_equivalence_right, Connection, HermitianModule, ModuleSide,
};
use ncg_twist::sampling::{random_c64, rng};
use ncg_twist::{Comparison, GaugeUnitary, LinearOp, RealTwistedTriple, Side, Tolerance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

/// `‖x − y‖ / max(‖x‖, ‖y‖)`, zero when both vanish.
fn rel(x: &LinearOp, y: &LinearOp) -> f64 {
    let scale = x.norm_fro().max(y.norm_fro());
    let d = (x - y).norm_fro();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Relative residual of a comparison made with the default tolerance.
fn relative(c: Comparison) -> f64 {
    let t = tol();
    let scale = (c.threshold - t.abs_tol) / t.rel_tol;
    if scale > 0.0 {
        c.residual / scale
    } else {
        c.residual
    }
}

fn small_fixtures() -> Vec<(&'static str, RealTwistedTriple)> {
    vec![
        ("two-point", fixtures::two_point()),
        ("fuzzy-ko0", fixtures::fuzzy(FuzzyVariant::Ko0, 2, 7).unwrap()),
        ("fuzzy-ko6", fixtures::fuzzy(FuzzyVariant::Ko6, 2, 7).unwrap()),
        ("fuzzy-odd", fixtures::fuzzy(FuzzyVariant::Odd, 2, 7).unwrap()),
        ("fuzzy-untwisted", fixtures::fuzzy_untwisted(2, 7).unwrap()),
    ]
}

fn all_fixtures() -> Vec<(&'static str, RealTwistedTriple)> {
    let mut v = small_fixtures();
    v.push(("lattice-m1", fixtures::lattice_m1().unwrap().triple));
    v.push(("lattice-m2", fixtures::lattice_m2().unwrap().triple));
    v
}

fn worst(acc: &mut (f64, &'static str), x: f64, name: &'static str) {
    if x >= acc.0 || x.is_nan() {
        *acc = (x, name);
    }
}

fn axiom_suite() -> Outcome {
    let mut failing = Vec::new();
    let mut slow = Vec::new();
    let mut run = |name: &str, t: &RealTwistedTriple| {
        let start = Instant::now();
        let rep = ncg_twist::validate_triple(t, &tol());
        let el = start.elapsed();
        if el > Duration::from_secs(10) {
            slow.push(format!("{name} {:.1}s", el.as_secs_f64()));
        }
        for k in rep.failing() {
            let r = &rep.axioms[k];
            failing.push(format!("{name}:{k} {:.2e}/{:.2e}", r.residual, r.threshold));
        }
    };
    run("two-point", &fixtures::two_point());
    run("lattice-m1-L9", &fixtures::lattice_m1().unwrap().triple);
    run("lattice-m2-L3", &fixtures::lattice_m2().unwrap().triple);
    let pass = failing.is_empty() && slow.is_empty();
    let detail = if pass {
        "every residual within threshold".into()
    } else {
        format!("failing [{}] slow [{}]", failing.join(", "), slow.join(", "))
    };
    outcome(pass, detail)
}

fn morita_reduction() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2);
    let mut acc = (0.0, "");
    let fx = small_fixtures();
    for k in 0..20 {
        let (name, t) = &fx[k % fx.len()];
        let w = random_form(t, &mut r, 2, Side::Plain, &tol()).unwrap();
        let right = self_equivalence_right(t, &w, &tol()).unwrap();
        let left = self_equivalence_left(t, &w, &tol()).unwrap();
        let expected_r = t.dirac() + w.value();
        let expected_l = t.dirac() + &t.j_conj(w.value()).scale_real(t.signs().eps_prime_f());
        worst(&mut acc, rel(&right.operator.model, &expected_r), name);
        worst(&mut acc, rel(&left.operator.model, &expected_l), name);
    }
    let el = start.elapsed().as_secs_f64();
    outcome(
        acc.0 <= 1e-10 && el < 30.0,
        format!("worst relative residual {:.2e} ({}), {el:.1}s", acc.0, acc.1),
    )
}

fn assembly_equivalence() -> Outcome {
    let mut r = rng(3);
    let mut mismatched = 0;
    let mut weakest_violation = f64::INFINITY;
    let mut worst_positive = 0.0f64;
    for (_, t) in small_fixtures() {
        let eps_p = t.signs().eps_prime_f();
        // The two-point fixture has no nonzero one-forms, so it cannot
        // host a negative control.
        let trivial = random_form(&t, &mut rng(0), 2, Side::Plain, &tol()).unwrap().value().norm_fro() == 0.0;
        for k in 0..20 {
            let w_r = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
            let w_l = if k % 2 == 0 {
                w_r.clone()
            } else {
                random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap()
            };
            let asm = assemble_fluctuation(&t, &w_r, &w_l, &tol()).unwrap();
            let compatible = rel(&t.j_conj(&asm.d_prime), &asm.d_prime.scale_real(eps_p)) <= 1e-10;
            let sym = w_r.try_add(&w_l).unwrap().scale(ncg_twist::C64::new(0.5, 0.0));
            let reproduces = rel(&asm.d_prime, &fluctuate(&t, t.dirac(), sym.value())) <= 1e-10;
            if compatible != reproduces {
                mismatched += 1;
            }
            if k % 2 == 0 {
                worst_positive = worst_positive.max(rel(&asm.d_prime, &fluctuate(&t, t.dirac(), sym.value())));
            } else if !trivial {
                weakest_violation = weakest_violation.min(asm.violation_residual);
            }
        }
    }
    outcome(
        mismatched == 0 && worst_positive <= 1e-10 && weakest_violation > 1e-3,
        format!(
            "{mismatched} iff mismatches, reproduction {worst_positive:.2e}, smallest negative-control residual {weakest_violation:.2e}"
        ),
    )
}

fn j_conjugation_of_forms() -> Outcome {
    let mut r = rng(4);
    let mut acc = (0.0, "");
    for (name, t) in all_fixtures() {
        let eps_p = t.signs().eps_prime_f();
        for _ in 0..50 {
            let w = random_form(&t, &mut r, 3, Side::Plain, &tol()).unwrap();
            let starred: Vec<_> = w.pairs().iter().map(|(a, b)| (a.star(), b.star())).collect();
            let opposite = form_value(&t, &starred, Side::Opposite).unwrap();
            let conjugated = t.j_conj(w.value());
            // J a δ(b) J⁻¹ = ε′ (a*)°δ°(b*)
            worst(&mut acc, rel(&conjugated, &opposite.scale_real(eps_p)), name);
            // Σ a_j° δ°(b_j°) = ε′ J (Σ a_j* δ(b_j*)) J⁻¹ with a_j = a*, b_j = b*
            let back: Vec<_> = starred.iter().map(|(a, b)| (a.star(), b.star())).collect();
            let rebuilt = form_value(&t, &back, Side::Plain).unwrap();
            worst(&mut acc, rel(&opposite, &t.j_conj(&rebuilt).scale_real(eps_p)), name);
        }
    }
    outcome(acc.0 <= 1e-12, format!("worst relative residual {:.2e} ({})", acc.0, acc.1))
}

fn gauge_covariance() -> Outcome {
    let mut r = rng(5);
    let mut acc = (0.0, "");
    let mut failing = Vec::new();
    let mut untwisted = 0.0f64;
    for (name, t) in all_fixtures() {
        let mut here = 0.0f64;
        for _ in 0..50 {
            let g = GaugeUnitary::random(&t, &mut r, &tol()).unwrap();
            let w = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
            let d = fluctuate(&t, t.dirac(), w.value());
            let rep = twisted_conjugate_dirac(&t, &d, &w, &g, &tol()).unwrap();
            here = here.max(relative(rep.identity));
            worst(&mut acc, relative(rep.identity), name);
            if name == "fuzzy-untwisted" {
                // ρ = id: u D_ω u* with U = uJuJ⁻¹ and ω^u = u[D,u*] + uωu*.
                let ad = g.ad();
                let lhs = ad.matmul(&d).matmul(&ad.adjoint());
                let us = g.u().star();
                let wu = &form_value(&t, &[(g.u().clone(), us.clone())], Side::Plain).unwrap()
                    + &t.pi(g.u()).unwrap().matmul(w.value()).matmul(&t.pi(&us).unwrap());
                untwisted = untwisted.max(rel(&lhs, &fluctuate(&t, t.dirac(), &wu)));
            }
        }
        if here > 1e-10 {
            failing.push(format!("{name} {here:.2e}"));
        }
    }
    outcome(
        acc.0 <= 1e-10 && untwisted <= 1e-10,
        format!(
            "worst relative residual {:.2e} ({}), failing [{}], untwisted regression {untwisted:.2e}",
            acc.0,
            acc.1,
            failing.join(", ")
        ),
    )
}

fn certificate_consistency() -> Outcome {
    let mut r = rng(6);
    let mut spread = (0.0, "");
    let mut disagreements = Vec::new();
    for (name, t) in all_fixtures() {
        for _ in 0..100 {
            let g = GaugeUnitary::random(&t, &mut r, &tol()).unwrap();
            let w = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
            let d = fluctuate(&t, t.dirac(), hermitian_part(&t, &w, &tol()).unwrap().value());
            let c = certificate_raw(&t, &g, Some(&d), &tol()).unwrap();
            let scale = c.omega_norm.max(1.0);
            worst(&mut spread, (c.variant_a_residual - c.variant_b_residual).abs() / scale, name);
            if c.verdict != c.direct_verdict {
                disagreements.push(name);
            }
        }
    }
    let mut counted: Vec<String> = Vec::new();
    for name in disagreements.iter().copied().collect::<std::collections::BTreeSet<_>>() {
        let n = disagreements.iter().filter(|d| **d == name).count();
        counted.push(format!("{name} {n}/100"));
    }
    outcome(
        spread.0 <= 1e-10 && disagreements.is_empty(),
        format!(
            "variant spread {:.2e} ({}), verdict/direct disagreements on [{}]",
            spread.0,
            spread.1,
            counted.join(", ")
        ),
    )
}

fn branch_pair(mt: &MinimalTwistTriple, r: &mut ncg_twist::sampling::SeededRng) -> (Vec<f64>, Vec<f64>) {
    (mt.geometry.smooth_random_function(r), mt.geometry.smooth_random_function(r))
}

fn unitary_branches() -> Outcome {
    let start = Instant::now();
    let mut r = rng(7);
    let m2 = fixtures::lattice_m2().unwrap();
    let mut m2_worst = 0.0f64;
    for _ in 0..50 {
        let (a, b) = branch_pair(&m2, &mut r);
        let rep = unitary_branch_experiment(&m2, &a, &b, &tol()).unwrap();
        let c = rep.certificate;
        m2_worst = m2_worst.max(c.variant_a_residual / c.omega_norm.max(1e-300));
    }
    let m1 = fixtures::lattice_m1().unwrap();
    let mut m1_min = f64::INFINITY;
    let mut constant_worst = 0.0f64;
    for k in 0..50 {
        let (a, b) = branch_pair(&m1, &mut r);
        let rep = unitary_branch_experiment(&m1, &a, &b, &tol()).unwrap();
        let c = rep.certificate;
        m1_min = m1_min.min(c.variant_a_residual / c.omega_norm);
        let shift = 0.1 + 0.05 * k as f64;
        let b: Vec<f64> = a.iter().map(|x| x - shift).collect();
        let rep = unitary_branch_experiment(&m1, &a, &b, &tol()).unwrap();
        constant_worst = constant_worst.max(rep.certificate.variant_a_residual);
    }
    let el = start.elapsed().as_secs_f64();
    outcome(
        m2_worst <= 1e-8 && m1_min > 0.1 && constant_worst <= 1e-12 && el < 60.0,
        format!(
            "m=2 worst relative residual {m2_worst:.2e}, m=1 smallest relative residual {m1_min:.2e}, m=1 constant phase {constant_worst:.2e}, {el:.1}s"
        ),
    )
}

fn symmetric_fluctuations() -> Outcome {
    let mut r = rng(8);
    let m2 = fixtures::lattice_m2().unwrap();
    let (a, ap) = selfadjoint_fluctuation_pair(&m2, &mut r).unwrap();
    let rep = symmetric_fluctuation(&m2, &a, &ap, &tol()).unwrap();
    let decomposition = relative(rep.decomposition);
    let revalidated = ncg_twist::validate_triple(&m2.triple.with_dirac(rep.fluctuated_dirac.clone()).unwrap(), &tol());
    let failing = revalidated.failing();

    let m1 = fixtures::lattice_m1().unwrap();
    let mut violations = 0;
    let mut selfadjoint_seen = 0;
    for k in 0..50 {
        let a = m1.random_element(&mut r);
        let ap = if k % 5 == 0 {
            let c = random_c64(&mut r);
            let d = random_c64(&mut r);
            m1.element(&vec![c; m1.sites()], &vec![d; m1.sites()]).unwrap()
        } else {
            m1.random_element(&mut r)
        };
        let s = symmetric_fluctuation(&m1, &a, &ap, &tol()).unwrap();
        if s.selfadjoint.pass() {
            selfadjoint_seen += 1;
            if s.max_block_norm() > 1e-10 {
                violations += 1;
            }
        }
    }
    outcome(
        decomposition <= 1e-10 && failing.is_empty() && violations == 0,
        format!(
            "m=2 decomposition {decomposition:.2e}, re-validation failing [{}]; m=1 {selfadjoint_seen}/50 self-adjoint, {violations} with nonzero blocks",
            failing.join(", ")
        ),
    )
}

fn monoid() -> Outcome {
    let mut r = rng(9);
    let mut acc = (0.0, "");
    for (name, t) in all_fixtures() {
        for _ in 0..50 {
            let w1 = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
            let w2 = random_form(&t, &mut r, 2, Side::Plain, &tol()).unwrap();
            let scale = t.dirac().norm_fro() + 2.0 * (w1.value().norm_fro() + w2.value().norm_fro());
            worst(&mut acc, fluctuation_monoid_check(&t, &w1, &w2).unwrap() / scale, name);
        }
    }
    outcome(acc.0 <= 1e-10, format!("worst relative residual {:.2e} ({})", acc.0, acc.1))
}

fn quotient_soundness() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut check = |name: &str, t: &RealTwistedTriple, m: &HermitianModule, c: &Connection| {
        let bs = balanced_tensor(t, m, &tol()).unwrap();
        let op = covariant_operator_on(t, &bs, c, &tol()).unwrap();
        let ok = bs.abstract_dim == bs.model_dim && op.well_definedness.pass();
        pass &= ok;
        lines.push(format!(
            "{name} {}={} relations {:.2e}",
            bs.abstract_dim, bs.model_dim, op.well_definedness.residual
        ));
    };
    let (t, m, c) = fixtures::pa2_module().unwrap();
    check("pA2", &t, &m, &c);
    let t = fixtures::two_point();
    for side in [ModuleSide::Right, ModuleSide::Left] {
        let m = HermitianModule::free(t.algebra(), side, 1).unwrap();
        let c = Connection::grassmann(&t, &m).unwrap();
        check(if side == ModuleSide::Right { "two-point E_R" } else { "two-point E_L" }, &t, &m, &c);
    }
    outcome(pass, lines.join("; "))
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let rep = convergence_study(1, &[9, 17, 33], DerivativeKind::Central).unwrap();
    let el = start.elapsed().as_secs_f64();
    outcome(
        (rep.exponent - 2.0).abs() <= 0.3 && el < 60.0,
        format!("p = {:.3}, errors {:?}, {el:.1}s", rep.exponent, rep.rms_errors),
    )
}

fn cli_report(args: &[&str]) -> serde_json::Value {
    let out = Command::new(env!("CARGO_BIN_EXE_ncg-twist"))
        .args(args)
        .output()
        .expect("binary runs");
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("report is JSON");
    let o = v.as_object_mut().expect("report object");
    o.remove("wall_time_ms");
    o.remove("timestamp");
    v
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("fuzzy-ko0.json");
    std::fs::write(&fixture, ncg_twist::cli::emit_fixture("fuzzy-ko0").unwrap()).unwrap();
    let f = fixture.to_str().unwrap();
    let runs: [&[&str]; 3] = [
        &["--seed", "11", "gauge", f],
        &["--seed", "11", "fluctuate", f],
        &["--seed", "5", "lattice", "--m", "1", "--experiment", "unitary-branch"],
    ];
    let mut differing = Vec::new();
    for args in runs {
        if cli_report(args) != cli_report(args) {
            differing.push(args[2]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} repeated runs, differing [{}]", runs.len(), differing.join(", ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("axiom suite", axiom_suite),
        ("self-equivalence reduction", morita_reduction),
        ("J-compatibility iff reproduction", assembly_equivalence),
        ("J-conjugation of forms", j_conjugation_of_forms),
        ("twisted gauge covariance", gauge_covariance),
        ("certificate consistency", certificate_consistency),
        ("lattice unitary branches", unitary_branches),
        ("lattice symmetric fluctuations", symmetric_fluctuations),
        ("fluctuation monoid", monoid),
        ("Morita quotient soundness", quotient_soundness),
        ("lattice convergence", convergence),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        writeln!(out, "criterion {:>2} {verdict} {name}: {}", i + 1, o.detail).unwrap();
        out.flush().unwrap();
    }
    writeln!(out, "acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len()).unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
