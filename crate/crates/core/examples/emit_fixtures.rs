//! Writes every built-in fixture as a JSON descriptor into a directory
//! (default `fixtures/`), then reads each triple back and validates it.

use std::path::PathBuf;

use ncg_twist::cli::emit_fixture;
use ncg_twist::fixtures::CATALOG;
use ncg_twist::io::{parse_json, ModuleJson, TripleJson};
use ncg_twist::{validate_triple, Tolerance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let tol = Tolerance::default();
    for name in CATALOG {
        let text = emit_fixture(name)?;
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, &text)?;
        let triple = if name.ends_with("module") {
            parse_json::<ModuleJson>(&text)?.triple.expect("module fixtures embed their triple")
        } else {
            parse_json::<TripleJson>(&text)?
        }
        .build(&tol)?;
        let report = validate_triple(&triple, &tol);
        println!("{:<40} {:>9} bytes  axioms pass: {:5}  {:?}", path.display(), text.len(), report.pass, report.failing());
    }
    Ok(())
}
