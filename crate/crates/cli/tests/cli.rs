use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coalloc_cli::commands::{self, PriceChoice};
use coalloc_cli::instance::Instance;
use coalloc_cli::results::Results;
use coalloc_core::{ClearingConfig, ClearingMode, Product};

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances/four-zone.toml")
}

fn coalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coalloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn clear_to(dir: &Path, mode: &str) -> PathBuf {
    let path = dir.join(format!("{mode}.csv"));
    let out = coalloc(&[
        "clear",
        example().to_str().unwrap(),
        "--mode",
        mode,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    path
}

fn lines_of(text: &str) -> Vec<&str> {
    text.lines().collect()
}

#[test]
fn ptdf_prints_the_example_matrix() {
    let out = coalloc(&["ptdf", example().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        lines_of(&stdout(&out)),
        [
            "## ptdf",
            "zone,1,2,3,4",
            "B,0.75,0.25,-0.25,0.25",
            "C,0.25,0.75,0.25,-0.25",
            "D,0.5,0.5,0.5,0.5",
        ]
    );
}

#[test]
fn two_zone_ptdf_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.toml");
    std::fs::write(
        &path,
        r#"
format = "coalloc-instance"
version = 1
zones = ["A", "B"]
slack = "A"

[[lines]]
id = 7
from = "A"
to = "B"
capacity = 1
"#,
    )
    .unwrap();
    let out = coalloc(&["ptdf", path.to_str().unwrap()]);
    assert_eq!(lines_of(&stdout(&out)), ["## ptdf", "zone,7", "B,1"]);
}

#[test]
fn unknown_zone_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(example())
        .unwrap()
        .replacen("to = \"D\"", "to = \"E\"", 1);
    std::fs::write(&path, text).unwrap();
    let out = coalloc(&["ptdf", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`E`"));
}

#[test]
fn invalid_vertex_cap_is_an_input_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_coalloc"))
        .args(["clear", example().to_str().unwrap()])
        .env(commands::VERTEX_CAP_VAR, "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn vertex_cap_overflow_exits_with_capacity_status() {
    let out = Command::new(env!("CARGO_BIN_EXE_coalloc"))
        .args(["clear", example().to_str().unwrap(), "--mode", "balanced"])
        .env(commands::VERTEX_CAP_VAR, "1")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn clear_reports_welfare_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, tsw) in [
        ("decoupled", 24.0),
        ("balanced", 76.0),
        ("overprocure", 80.0),
    ] {
        let path = clear_to(dir.path(), mode);
        let results = Results::parse(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert!((results.tsw - tsw).abs() < 1e-6, "{mode}: {}", results.tsw);
        assert!(results.deliverable);
    }
}

#[test]
fn clear_without_out_prints_the_results_file() {
    let out = coalloc(&["clear", example().to_str().unwrap(), "--mode", "balanced"]);
    let results = Results::parse(&stdout(&out)).unwrap();
    assert_eq!(results.mode, ClearingMode::Balanced);
    let x: Vec<f64> = results.acceptances.iter().map(|a| a.1).collect();
    assert_eq!(x, [1.0, 0.0, 1.0, 0.5, 1.0, 1.0, 0.0, 1.0, 1.0]);
}

fn cash_flow_rows(text: &str) -> Vec<String> {
    text.lines()
        .skip_while(|l| *l != "## cash_flows")
        .skip(2)
        .take_while(|l| !l.starts_with("##"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{} {} {}", f[0], f[1], f[5])
        })
        .collect()
}

fn totals(text: &str) -> Vec<String> {
    text.lines()
        .skip_while(|l| *l != "## totals")
        .skip(2)
        .map(String::from)
        .collect()
}

#[test]
fn settle_reproduces_the_balanced_cash_flows() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "balanced");
    let out = coalloc(&[
        "settle",
        example().to_str().unwrap(),
        res.to_str().unwrap(),
        "--prices",
        "external",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(
        cash_flow_rows(&text),
        ["E A -48", "E B 72", "R+ A -4", "R+ B 32", "R- B 24", "R- C -16"]
    );
    assert_eq!(
        totals(&text),
        ["tsw,76", "total_surplus,16", "total_rent,60"]
    );
}

#[test]
fn settle_reproduces_the_overprocurement_cash_flows() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "overprocure");
    let out = coalloc(&[
        "settle",
        example().to_str().unwrap(),
        res.to_str().unwrap(),
        "--prices",
        "external",
    ]);
    let text = stdout(&out);
    assert_eq!(
        cash_flow_rows(&text),
        ["E A -112", "E B 144", "R+ A -4", "R+ B 12", "R- B 24", "R- C -16"]
    );
    assert_eq!(
        totals(&text),
        ["tsw,80", "total_surplus,32", "total_rent,48"]
    );
}

#[test]
fn settle_without_external_prices_names_the_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "decoupled");
    let out = coalloc(&[
        "settle",
        example().to_str().unwrap(),
        res.to_str().unwrap(),
        "--prices",
        "external",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("(B, E)") && err.contains("(B, R+)"), "{err}");
}

#[test]
fn settle_at_recorded_prices_decomposes_welfare() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["decoupled", "balanced", "overprocure"] {
        let res = clear_to(dir.path(), mode);
        let inst = Instance::load(&example()).unwrap();
        let results = Results::parse(&std::fs::read_to_string(res).unwrap()).unwrap();
        let report = commands::settlement(&inst, &results, PriceChoice::Dual).unwrap();
        assert!(
            (report.total_surplus + report.total_rent - report.tsw).abs() < 1e-9,
            "{mode}"
        );
        assert!((report.tsw - results.tsw).abs() < 1e-9);
    }
}

#[test]
fn zero_trade_settles_to_zero() {
    let inst = Instance::parse(
        r#"
format = "coalloc-instance"
version = 1
zones = ["A", "B"]
slack = "A"

[[lines]]
id = 1
from = "A"
to = "B"
capacity = 5

[[bids]]
product = "E"
zone = "A"
quantity = 2
price = 5

[[bids]]
product = "E"
zone = "B"
quantity = -2
price = 9
"#,
    )
    .unwrap();
    let results =
        commands::run_clearing(&inst, ClearingMode::Balanced, &ClearingConfig::default()).unwrap();
    assert_eq!(results.tsw, 0.0);
    let report = commands::settlement(&inst, &results, PriceChoice::External).unwrap();
    assert!(report.cash_flows.iter().all(|c| c.cash_flow == 0.0));
    assert_eq!(
        (report.tsw, report.total_rent, report.total_surplus),
        (0.0, 0.0, 0.0)
    );
}

fn verify_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(2)
        .map(|l| l.splitn(4, ',').map(String::from).collect())
        .collect()
}

fn codes(rows: &[Vec<String>], verdict: &str) -> Vec<String> {
    rows.iter()
        .filter(|r| r[1] == verdict)
        .map(|r| r[2].clone())
        .collect()
}

#[test]
fn verify_balanced_passes_with_one_price_warning() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "balanced");
    let out = coalloc(&["verify", example().to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = verify_rows(&stdout(&out));
    assert!(codes(&rows, "fail").is_empty());
    assert_eq!(codes(&rows, "warn"), ["W-PRICE"]);
    let warning = rows.iter().find(|r| r[2] == "W-PRICE").unwrap();
    assert!(
        warning[3].contains("R+.B.6") && warning[3].contains("price 8"),
        "{}",
        warning[3]
    );
    let oracle = rows.iter().find(|r| r[0] == "oracle").unwrap();
    assert_eq!(
        (oracle[1].as_str(), oracle[3].as_str()),
        ("pass", "oracle match 76")
    );
}

#[test]
fn verify_overprocure_passes_and_flags_the_surplus_rows() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "overprocure");
    let out = coalloc(&["verify", example().to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = verify_rows(&stdout(&out));
    assert!(codes(&rows, "fail").is_empty());
    assert_eq!(codes(&rows, "warn"), ["W-SURPLUS", "W-SURPLUS"]);
    let oracle = rows.iter().find(|r| r[0] == "oracle").unwrap();
    assert_eq!(oracle[3], "oracle match 80");
}

#[test]
fn verify_rejects_the_tampered_overprocurement() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "overprocure");
    let inst = Instance::load(&example()).unwrap();
    let mut results = Results::parse(&std::fs::read_to_string(&res).unwrap()).unwrap();
    results.acceptances[6].1 = 0.0;
    results.tsw = inst
        .book
        .welfare(&results.acceptance_vector(&inst.book).unwrap());
    let tampered = dir.path().join("tampered.csv");
    std::fs::write(&tampered, results.write()).unwrap();

    let out = coalloc(&[
        "verify",
        example().to_str().unwrap(),
        tampered.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let rows = verify_rows(&stdout(&out));
    let line4: Vec<_> = rows.iter().filter(|r| r[2] == "D-LINE").collect();
    assert_eq!(line4.len(), 1);
    assert!(line4[0][3].contains("line 4 load 3"), "{}", line4[0][3]);
}

#[test]
fn verify_catches_a_misstated_welfare() {
    let dir = tempfile::tempdir().unwrap();
    let res = clear_to(dir.path(), "balanced");
    let text = std::fs::read_to_string(&res)
        .unwrap()
        .replace("tsw,76", "tsw,70");
    std::fs::write(&res, text).unwrap();
    let out = coalloc(&["verify", example().to_str().unwrap(), res.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(codes(&verify_rows(&stdout(&out)), "fail"), ["R-TSW"]);
}

#[test]
fn round_trip_settlement_is_bit_identical() {
    let inst = Instance::load(&example()).unwrap();
    let config = ClearingConfig::default();
    for mode in [
        ClearingMode::Decoupled,
        ClearingMode::Balanced,
        ClearingMode::Overprocure,
    ] {
        let fresh = commands::run_clearing(&inst, mode, &config).unwrap();
        let reread = Results::parse(&fresh.write()).unwrap();
        assert_eq!(reread, fresh);
        let a = commands::settlement(&inst, &fresh, PriceChoice::Dual).unwrap();
        let b = commands::settlement(&inst, &reread, PriceChoice::Dual).unwrap();
        assert_eq!(
            commands::format_settlement(&a),
            commands::format_settlement(&b)
        );
        for (x, y) in a.bids.iter().zip(&b.bids) {
            assert_eq!(x.surplus.to_bits(), y.surplus.to_bits());
        }
        assert_eq!(a.total_rent.to_bits(), b.total_rent.to_bits());
        assert_eq!(
            a.rent(Product::Energy).to_bits(),
            b.rent(Product::Energy).to_bits()
        );
    }
}

#[test]
fn commands_are_deterministic() {
    let first = coalloc(&[
        "clear",
        example().to_str().unwrap(),
        "--mode",
        "overprocure",
    ]);
    let second = coalloc(&[
        "clear",
        example().to_str().unwrap(),
        "--mode",
        "overprocure",
    ]);
    assert_eq!(first.stdout, second.stdout);
}
