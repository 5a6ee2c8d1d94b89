//! Builds a triple from a hand-written JSON descriptor: `C ⊕ C` on `C⁴`
//! with two copies of each block, `D` mixing the copies and the flip twist.

use ncg_twist::io::{parse_json, TripleJson};
use ncg_twist::{validate_triple, Tolerance};

const DESCRIPTOR: &str = r#"{
  "name": "doubled two-point",
  "algebra": {
    "blocks": [1, 1],
    "rep": { "hilbert_dim": 4, "multiplicities": [2, 2], "assignment": [0, 2, 1, 3] },
    "auto": { "perm": [1, 0] }
  },
  "dirac": [
    [[0, 0], [2, 0], [0, 0], [0, 0]],
    [[2, 0], [0, 0], [0, 0], [0, 0]],
    [[0, 0], [0, 0], [0, 0], [3, 0]],
    [[0, 0], [0, 0], [3, 0], [0, 0]]
  ],
  "real_structure": { "unitary": [
    [[0, 0], [1, 0], [0, 0], [0, 0]],
    [[1, 0], [0, 0], [0, 0], [0, 0]],
    [[0, 0], [0, 0], [0, 0], [1, 0]],
    [[0, 0], [0, 0], [1, 0], [0, 0]]
  ] },
  "grading": [
    [[1, 0], [0, 0], [0, 0], [0, 0]],
    [[0, 0], [-1, 0], [0, 0], [0, 0]],
    [[0, 0], [0, 0], [1, 0], [0, 0]],
    [[0, 0], [0, 0], [0, 0], [-1, 0]]
  ],
  "signs": { "eps": 1, "eps_prime": 1, "eps_second": -1, "dim_mod8": 6 }
}"#;

fn main() -> ncg_twist::Result<()> {
    let tol = Tolerance::default();
    let t = parse_json::<TripleJson>(DESCRIPTOR)?.build(&tol)?;
    let report = validate_triple(&t, &tol);
    println!("{}", serde_json::to_string_pretty(&report).unwrap());

    let broken = DESCRIPTOR.replace(r#""blocks": [1, 1]"#, r#""blocks": [1, "one"]"#);
    match parse_json::<TripleJson>(&broken) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
