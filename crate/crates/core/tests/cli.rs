mod support;

use std::path::Path;
use std::process::{Command, Output};

use rmod::lang::{parse_facts, parse_rules, render_fact, Predicate};
use support::oracle;

fn rmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmod"))
        .args(args)
        .env_remove("RMOD_DERIVATION_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn loans() -> String {
    support::loans_dir().display().to_string()
}

fn data_dir() -> String {
    support::loans_dir().join("data").display().to_string()
}

#[test]
fn version() {
    let o = rmod(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("rmod "));
}

#[test]
fn resolve_private_loan_apps() {
    let o = rmod(&["resolve", &loans(), "--module", "PrivateLoanApps"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text
        .starts_with("% resolved from PrivateLoanApps extends LoanApps\nmodule PrivateLoanApps {"));
    assert!(text.contains("R9_2: security(S) :- incomes(_, S)."));
}

#[test]
fn resolve_root_echoes_its_declarations() {
    let o = rmod(&["resolve", &loans(), "--module", "LoanApps"]);
    let text = stdout(&o);
    assert!(text.contains("% abstract: cwBad/1, cwGood/1, sValue/2, securities/2, security/1"));
    assert!(text.contains("R0: lowLValue(X, V) :- lValue(X, V), V < 10000."));
}

#[test]
fn unknown_module_exits_2() {
    let o = rmod(&["resolve", &loans(), "--module", "CarLoanApps"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CarLoanApps"));
}

#[test]
fn info_reports_abstractness() {
    let o = rmod(&["info", &loans(), "--module", "LoanApps"]);
    let text = stdout(&o);
    assert!(text.contains("abstract: yes\n"));
    assert!(text
        .contains("abstract predicates: cwBad/1, cwGood/1, sValue/2, securities/2, security/1\n"));
    let o = rmod(&["info", &loans(), "--module", "MortgageApps"]);
    assert!(stdout(&o).contains("abstract: no\n"));
}

#[test]
fn info_on_output_only_module() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("Lonely.rmod"),
        "module Lonely { output { add out/1; } }",
    )
    .unwrap();
    let o = rmod(&["info", dir.path().to_str().unwrap(), "--module", "Lonely"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("abstract: yes\nabstract predicates: out/1\n"));
}

/// Expected MortgageApps outputs on `small`, from the oracle over the rule text.
fn mortgage_oracle() -> Vec<String> {
    let rules = parse_rules(
        "R0: lowLValue(X, V) :- lValue(X, V), V < 10000.
         R1.1: cwGood(X) :- loan(X), lValue(X, V), securities(X, S), sValue(S, SV), T = V * 0.8, SV > T.
         R2: cwBad(X) :- loan(X), not cwGood(X).
         R3: priorityOver(X, Y) :- lValue(X, V), lValue(Y, W), V > W.
         R4: property(P), properties(X, P) :- mProperty(X, P).
         R4.1: property(Q), properties(X, Q) :- properties(X, P), hasPart(P, Q).
         R4.2: sValue(P, V) :- property(P), pValue(P, V).
         R5: securities(X, P), security(P) :- properties(X, P).
         R6: lowPropValue(X, P) :- securities(X, P), sValue(P, V), V < 30000.",
    )
    .unwrap();
    let text = std::fs::read_to_string(Path::new(&data_dir()).join("small.facts")).unwrap();
    let data = parse_facts("small", &text).unwrap();
    let db = oracle::evaluate(&rules, data.extensions()).unwrap();
    let outputs = [
        ("cwBad", 1),
        ("cwGood", 1),
        ("lowLValue", 2),
        ("lowPropValue", 2),
        ("priorityOver", 2),
        ("properties", 2),
        ("property", 1),
        ("sValue", 2),
        ("securities", 2),
        ("security", 1),
    ];
    let mut lines = Vec::new();
    for (n, a) in outputs {
        let p = Predicate::new(n, a);
        for t in db.get(&p).into_iter().flatten() {
            lines.push(format!("{}.", render_fact(&p, t)));
        }
    }
    lines
}

#[test]
fn run_mortgage_apps_matches_oracle() {
    let o = rmod(&[
        "run",
        &loans(),
        "--module",
        "MortgageApps",
        "--data",
        "small",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let got: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('%'))
        .map(String::from)
        .collect();
    assert_eq!(got, mortgage_oracle());
    assert!(got.contains(&"cwGood(l3).".to_string()));
    assert!(got.contains(&"lowPropValue(l3, garage1).".to_string()));
}

#[test]
fn run_json() {
    let o = rmod(&[
        "run",
        &loans(),
        "--module",
        "PrivateLoanApps",
        "--data",
        "small",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outputs"]["lowIncome/2"][0], "lowIncome(l1, 500)");
}

#[test]
fn run_on_non_applicable_data() {
    let dir = tempfile::tempdir().unwrap();
    let partial = dir.path().join("partial.facts");
    std::fs::write(&partial, "loan(l1). lValue(l1, 5).").unwrap();
    let o = rmod(&[
        "run",
        &loans(),
        "--module",
        "PrivateLoanApps",
        "--data",
        partial.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("missing inputs customer/2, duration/2, income/2"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn run_abstract_module() {
    let o = rmod(&["run", &loans(), "--module", "LoanApps", "--data", "small"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("abstract"));
    let o = rmod(&[
        "run",
        &loans(),
        "--module",
        "LoanApps",
        "--data",
        "small",
        "--allow-abstract",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("lowLValue(l1, 9000)."));
}

#[test]
fn run_conform_on_mutant() {
    let ws = support::loans_with(&["LoanAppsStrict"]);
    let path = ws.path().to_str().unwrap();
    let o = rmod(&[
        "run",
        path,
        "--module",
        "LoanAppsStrict",
        "--data",
        "small",
        "--conform",
        "--allow-abstract",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o)
        .contains("violation: LoanAppsStrict violates non_shrinkable(lowLValue/2) of LoanApps"));
    let o = rmod(&[
        "run",
        &loans(),
        "--module",
        "PrivateLoanApps",
        "--data",
        "small",
        "--conform",
    ]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn derivation_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_rmod"))
        .args([
            "run",
            &loans(),
            "--module",
            "MortgageApps",
            "--data",
            "small",
        ])
        .env("RMOD_DERIVATION_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("derivation cap of 3"));
}

#[test]
fn check_exit_codes() {
    assert_eq!(rmod(&["check", &loans()]).status.code(), Some(0));
    assert_eq!(
        rmod(&["check", &loans(), "--data", &data_dir()])
            .status
            .code(),
        Some(0)
    );
    let ws = support::loans_with(&["PrivateLoanAppsNoLoan"]);
    let o = rmod(&["check", ws.path().to_str().unwrap(), "--structural"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(
        "PrivateLoanAppsNoLoan violates non_omitable_input(loan/1) of PrivateLoanApps: loan/1"
    ));
    let ws = support::loans_with(&["LoanAppsStrict"]);
    let data = ws.path().join("data");
    let o = rmod(&[
        "check",
        ws.path().to_str().unwrap(),
        "--behavioral",
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_behavioral_needs_data() {
    let o = rmod(&["check", &loans(), "--behavioral"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--data"));
}

#[test]
fn check_scoped_to_a_subtree() {
    let o = rmod(&[
        "check",
        &loans(),
        "--module",
        "MortgageApps",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["checked_modules"], serde_json::json!(["MortgageApps"]));
    let o = rmod(&["check", &loans(), "--module", "Nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_non_applicable_data_per_pair() {
    let ws = support::loans_with(&["PrivateLoanAppsCollateral"]);
    let data = ws.path().join("data");
    let o = rmod(&[
        "check",
        ws.path().to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let err = &v["errors"][0];
    assert_eq!(err["file"], "PrivateLoanAppsCollateral.rmod");
    assert!(err["message"]
        .as_str()
        .unwrap()
        .contains("missing inputs collateral/2"));
    assert_eq!(v["structural_violations"].as_array().unwrap().len(), 1);
}

#[test]
fn check_json_matches_golden_sample() {
    let o = rmod(&["check", &loans(), "--data", &data_dir(), "--format", "json"]);
    let golden = include_str!("golden/check_loans.json");
    assert_eq!(stdout(&o), golden);
}

#[test]
fn timing_is_opt_in_for_json() {
    let o = rmod(&["check", &loans(), "--format", "json", "--timing"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["timing"]["total_ms"].as_f64().unwrap() >= 0.0);
    let o = rmod(&["check", &loans(), "--format", "json"]);
    assert!(!stdout(&o).contains("timing"));
}

#[test]
fn clap_usage_errors_exit_2() {
    assert_eq!(rmod(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        rmod(&["run", &loans(), "--module", "LoanApps"])
            .status
            .code(),
        Some(2)
    );
}
