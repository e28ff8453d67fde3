//! Golden reports and DSL round trips over the corpus.
//!
//! Set `PLAB_UPDATE_GOLDEN=1` to rewrite the expected reports.

mod common;

use common::corpus_dir;
use plab_core::commands::{run, Args};
use plab_core::dsl::{self, print_file};

fn corpus_inputs(names: &[&str]) -> Vec<(String, String)> {
    names
        .iter()
        .map(|n| (n.to_string(), std::fs::read_to_string(corpus_dir().join(n)).expect("corpus file")))
        .collect()
}

fn golden(name: &str, args: Args) {
    let names: Vec<&str> = args.files.iter().map(String::as_str).collect();
    let out = run(&args, &corpus_inputs(&names));
    assert_eq!(out.exit, 0, "{}", out.output);
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("PLAB_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &out.output).expect("write golden");
    }
    let expected = std::fs::read_to_string(&path).expect("golden file");
    assert_eq!(out.output, expected, "report for {name} changed");
}

#[test]
fn gate_laplace_wave() {
    let mut a = Args::new("equiv-gate", &["laplace.pde", "wave.pde"]);
    a.orders = Some(2);
    a.seed = 7;
    golden("gate_laplace_wave.txt", a);
}

#[test]
fn gate_finite_ux() {
    golden("gate_finite_ux.txt", Args::new("equiv-gate", &["finite.pde", "ux.pde"]));
}

#[test]
fn derived_flag_goursat3() {
    golden("derived_flag_goursat3.txt", Args::new("derived-flag", &["goursat3.pfs"]));
}

#[test]
fn symbol_laplace() {
    let mut a = Args::new("symbol", &["laplace.pde"]);
    a.order = Some(3);
    golden("symbol_laplace.txt", a);
}

#[test]
fn spencer_laplace() {
    golden("spencer_laplace.txt", Args::new("spencer", &["laplace.pde"]));
}

#[test]
fn verify_identity() {
    golden("verify_identity.txt", Args::new("equiv-verify", &["riccati.pde", "riccati_half.pde", "identity.map"]));
}

#[test]
fn prolong_riccati_json() {
    let mut a = Args::new("prolong", &["riccati.pde"]);
    a.levels = Some(2);
    a.json = true;
    golden("prolong_riccati.json", a);
}

#[test]
fn corpus_round_trips() {
    for entry in std::fs::read_dir(corpus_dir()).expect("corpus") {
        let path = entry.expect("entry").path();
        let text = std::fs::read_to_string(&path).expect("read");
        let parsed = dsl::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let printed = print_file(&parsed);
        let again = dsl::parse(&printed).unwrap_or_else(|e| panic!("{}: reprint fails: {e}", path.display()));
        assert_eq!(parsed.decls, again.decls, "{}", path.display());
        assert_eq!(print_file(&again), printed);
    }
}

#[test]
fn every_verdict_names_operation_and_condition() {
    for (cmd, files) in [
        ("equiv-gate", vec!["laplace.pde", "wave.pde"]),
        ("classify-pfaff", vec!["darboux.pfs"]),
        ("pfaff-equiv", vec!["darboux.pfs", "du3.pfs"]),
        ("cartan", vec!["laplace.pde"]),
    ] {
        let out = run(&Args::new(cmd, &files), &corpus_inputs(&files));
        assert!(!out.report.verdicts.is_empty());
        for v in &out.report.verdicts {
            assert_eq!(v.operation, cmd);
            assert!(!v.condition.is_empty());
        }
    }
}
