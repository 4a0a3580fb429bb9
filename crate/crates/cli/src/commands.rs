use std::fmt::Write as _;
use std::path::Path;

use coalloc_core::clearing::{
    clear_coallocated, clear_decoupled, deliverability_check, worst_case_report, Deliverability,
    ZonalVolumes,
};
use coalloc_core::network::build_ptdf;
use coalloc_core::oracle::{brute_force_clear, GridSpec};
use coalloc_core::pricing::{
    decoupled_price_intervals, dual_price_intervals, verify_consistency, PriceSheet,
};
use coalloc_core::settlement::{settle, surplus_discrepancies, SettlementReport};
use coalloc_core::{ClearingConfig, ClearingMode, Error, Product};

use crate::error::{CliError, CliResult, Status};
use crate::instance::Instance;
use crate::results::{format_f64, load_rows, price_rows, section, Results};

/// Environment variable overriding the activation vertex cap.
pub const VERTEX_CAP_VAR: &str = "COALLOC_VERTEX_CAP";

const TSW_TOL: f64 = 1e-6;
const BALANCE_TOL: f64 = 1e-7;

/// Text written to standard output and the exit status of a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub status: Status,
}

impl Report {
    fn ok(text: String) -> Self {
        Self {
            text,
            status: Status::Ok,
        }
    }
}

pub fn config_from_env() -> CliResult<ClearingConfig> {
    let mut config = ClearingConfig::default();
    if let Ok(value) = std::env::var(VERTEX_CAP_VAR) {
        config.vertex_cap = value.trim().parse().map_err(|_| {
            CliError::input(format!(
                "{VERTEX_CAP_VAR} must be a positive integer, got `{value}`"
            ))
        })?;
    }
    Ok(config)
}

/// PTDF table: one row per non-slack zone, one column per line.
pub fn ptdf(instance: &Path) -> CliResult<Report> {
    let inst = Instance::load(instance)?;
    let topo = &inst.topology;
    let ptdf = build_ptdf(topo)?;
    let mut header = vec!["zone".to_string()];
    header.extend(topo.lines().iter().map(|l| l.id.to_string()));
    let rows = ptdf
        .rows()
        .map(|(z, row)| {
            let mut cells = vec![topo.zone_id(z).to_string()];
            cells.extend(row.iter().map(|&v| format_f64(exact_decimal(v))));
            cells
        })
        .collect();
    let mut out = String::new();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    section(&mut out, "ptdf", &header, rows);
    Ok(Report::ok(out))
}

/// Removes floating-point noise below 1e-12.
fn exact_decimal(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Clears an instance. Writes the full results to `out` when given, and
/// otherwise to standard output; the summary always goes to standard output.
pub fn clear(
    instance: &Path,
    mode: ClearingMode,
    out: Option<&Path>,
    config: &ClearingConfig,
) -> CliResult<Report> {
    let inst = Instance::load(instance)?;
    let results = run_clearing(&inst, mode, config)?;
    let text = results.write();
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let mut summary = String::new();
            let _ = writeln!(summary, "mode,{mode}");
            let _ = writeln!(summary, "tsw,{}", format_f64(results.tsw));
            let _ = writeln!(summary, "deliverable,{}", results.deliverable);
            let _ = writeln!(summary, "results,{}", path.display());
            Ok(Report::ok(summary))
        }
        None => Ok(Report::ok(text)),
    }
}

pub fn run_clearing(
    inst: &Instance,
    mode: ClearingMode,
    config: &ClearingConfig,
) -> CliResult<Results> {
    let (topo, book) = (&inst.topology, &inst.book);
    let (outcome, prices, worst_case, recourse) = match mode {
        ClearingMode::Decoupled => {
            let outcome = clear_decoupled(book, topo)?;
            let prices = decoupled_price_intervals(book, &outcome)?;
            (outcome, prices, Vec::new(), Vec::new())
        }
        _ => {
            let c = clear_coallocated(book, topo, mode, config)?;
            let prices = dual_price_intervals(&c.program, topo)?;
            let plain = worst_case_report(&c.outcome, topo, false, config)?;
            let relieved = worst_case_report(&c.outcome, topo, true, config)?;
            (
                c.outcome,
                prices,
                load_rows(&plain, topo),
                load_rows(&relieved, topo),
            )
        }
    };
    let deliverable = deliverability_check(&outcome.acceptances, book, topo, config)?.feasible;
    Ok(Results {
        mode,
        tsw: outcome.tsw,
        deliverable,
        acceptances: book
            .bids()
            .iter()
            .zip(&outcome.acceptances)
            .map(|(b, &x)| (b.id.clone(), x))
            .collect(),
        prices: price_rows(&prices),
        worst_case,
        recourse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceChoice {
    /// The instance's price overrides for the results' mode.
    External,
    /// The settled prices recorded in the results.
    Dual,
}

pub fn settle_results(instance: &Path, results: &Path, prices: PriceChoice) -> CliResult<Report> {
    let inst = Instance::load(instance)?;
    let res = load_results(results)?;
    let report = settlement(&inst, &res, prices)?;
    Ok(Report::ok(format_settlement(&report)))
}

pub fn settlement(
    inst: &Instance,
    res: &Results,
    prices: PriceChoice,
) -> CliResult<SettlementReport> {
    let x = res.acceptance_vector(&inst.book)?;
    let sheet = match prices {
        PriceChoice::External => inst.external_prices(res.mode),
        PriceChoice::Dual => res.price_sheet(),
    };
    settle(&inst.book, &x, &sheet).map_err(|e| match e {
        Error::MissingPrices(missing) => CliError::input(format!(
            "no settled price for traded {}",
            missing
                .iter()
                .map(|(z, p)| format!("({z}, {p})"))
                .collect::<Vec<_>>()
                .join(", ")
        )),
        other => other.into(),
    })
}

pub fn format_settlement(report: &SettlementReport) -> String {
    let mut out = String::new();
    section(
        &mut out,
        "cash_flows",
        &[
            "product",
            "zone",
            "position",
            "price",
            "source",
            "cash_flow",
        ],
        report
            .cash_flows
            .iter()
            .map(|c| {
                vec![
                    c.product.to_string(),
                    c.zone.clone(),
                    format_f64(c.position),
                    c.price.map(format_f64).unwrap_or_default(),
                    c.source.map(|s| s.to_string()).unwrap_or_default(),
                    format_f64(c.cash_flow),
                ]
            })
            .collect(),
    );
    let surplus = report.product_surplus();
    section(
        &mut out,
        "products",
        &["product", "rent", "surplus"],
        Product::ALL
            .iter()
            .map(|&p| {
                vec![
                    p.to_string(),
                    format_f64(report.rent(p)),
                    format_f64(surplus[p.index()]),
                ]
            })
            .collect(),
    );
    section(
        &mut out,
        "surpluses",
        &["bid", "zone", "product", "x", "surplus"],
        report
            .bids
            .iter()
            .map(|b| {
                vec![
                    b.bid_id.clone(),
                    b.zone.clone(),
                    b.product.to_string(),
                    format_f64(b.acceptance),
                    format_f64(b.surplus),
                ]
            })
            .collect(),
    );
    section(
        &mut out,
        "totals",
        &["key", "value"],
        vec![
            vec!["tsw".into(), format_f64(report.tsw)],
            vec!["total_surplus".into(), format_f64(report.total_surplus)],
            vec!["total_rent".into(), format_f64(report.total_rent)],
        ],
    );
    out
}

fn load_results(path: &Path) -> CliResult<Results> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Results::parse(&text).map_err(|e| CliError {
        message: format!("{}: {}", path.display(), e.message),
        ..e
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// A finding against published reference values; never fails the run.
    Warn,
    Fail,
    Skip,
}

impl Verdict {
    fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
            Verdict::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub check: &'static str,
    pub verdict: Verdict,
    pub code: &'static str,
    pub detail: String,
}

fn finding(
    check: &'static str,
    verdict: Verdict,
    code: &'static str,
    detail: impl Into<String>,
) -> Finding {
    Finding {
        check,
        verdict,
        code,
        detail: detail.into(),
    }
}

pub fn verify_results(
    instance: &Path,
    results: &Path,
    config: &ClearingConfig,
) -> CliResult<Report> {
    let inst = Instance::load(instance)?;
    let res = load_results(results)?;
    let findings = verify(&inst, &res, config)?;
    let failed = findings.iter().any(|f| f.verdict == Verdict::Fail);
    let mut out = String::new();
    section(
        &mut out,
        "verify",
        &["check", "verdict", "code", "detail"],
        findings
            .iter()
            .map(|f| {
                vec![
                    f.check.to_string(),
                    f.verdict.as_str().to_string(),
                    f.code.to_string(),
                    f.detail.clone(),
                ]
            })
            .collect(),
    );
    Ok(Report {
        text: out,
        status: if failed {
            Status::CheckFailed
        } else {
            Status::Ok
        },
    })
}

/// Runs every check on a results file. Findings against the instance's
/// published prices and surpluses are warnings; everything else that does
/// not hold is a failure.
pub fn verify(inst: &Instance, res: &Results, config: &ClearingConfig) -> CliResult<Vec<Finding>> {
    let (topo, book) = (&inst.topology, &inst.book);
    let x = res.acceptance_vector(book)?;
    let mut findings = Vec::new();

    let tsw = book.welfare(&x);
    findings.push(if (tsw - res.tsw).abs() <= TSW_TOL {
        finding(
            "welfare",
            Verdict::Pass,
            "",
            format!("tsw {}", format_f64(tsw)),
        )
    } else {
        finding(
            "welfare",
            Verdict::Fail,
            "R-TSW",
            format!(
                "acceptances give tsw {} but the summary states {}",
                format_f64(tsw),
                format_f64(res.tsw)
            ),
        )
    });

    let volumes = ZonalVolumes::from_acceptances(book, topo, &x)?;
    let imbalances = balance_violations(&volumes, res.mode, topo);
    if imbalances.is_empty() {
        findings.push(finding(
            "balance",
            Verdict::Pass,
            "",
            format!("{} balance holds", res.mode),
        ));
    }
    for detail in imbalances {
        findings.push(finding("balance", Verdict::Fail, "B-BALANCE", detail));
    }

    consistency(&mut findings, book, &x, &res.price_sheet(), false);
    if inst.has_overrides(res.mode) {
        let external = inst.external_prices(res.mode);
        consistency(&mut findings, book, &x, &external, true);
        let reported = inst.reported_surpluses(res.mode);
        if !reported.is_empty() {
            match settle(book, &x, &external) {
                Ok(report) => {
                    let gaps = surplus_discrepancies(&report, &reported);
                    if gaps.is_empty() {
                        findings.push(finding(
                            "reported-surplus",
                            Verdict::Pass,
                            "",
                            "published surpluses reproduced",
                        ));
                    }
                    for d in gaps {
                        findings.push(finding(
                            "reported-surplus",
                            Verdict::Warn,
                            "W-SURPLUS",
                            format!(
                                "bid {}: published surplus {} but settlement gives {}",
                                d.bid_id,
                                format_f64(d.reported),
                                format_f64(d.computed)
                            ),
                        ));
                    }
                }
                Err(e) => findings.push(finding(
                    "reported-surplus",
                    Verdict::Skip,
                    "",
                    e.to_string(),
                )),
            }
        }
    }

    let check = deliverability_check(&x, book, topo, config)?;
    for l in &check.base_violations {
        findings.push(finding(
            "deliverability",
            Verdict::Fail,
            "D-BASE",
            format!(
                "energy schedule loads line {} with {} > {}",
                l.line_id,
                format_f64(l.load),
                format_f64(l.capacity)
            ),
        ));
    }
    for v in &check.vertices {
        let Deliverability::Violated { plan, lines } = &v.verdict else {
            continue;
        };
        let label = v.vertex.label(topo);
        if plan.is_none() {
            findings.push(finding(
                "deliverability",
                Verdict::Fail,
                "D-SUPPLY",
                format!("vertex {label}: accepted reserve supply cannot balance the activation"),
            ));
        }
        for l in lines {
            findings.push(finding(
                "deliverability",
                Verdict::Fail,
                "D-LINE",
                format!(
                    "vertex {label}: line {} load {} exceeds {}",
                    l.line_id,
                    format_f64(l.load.abs()),
                    format_f64(l.capacity)
                ),
            ));
        }
    }
    if check.feasible {
        findings.push(finding(
            "deliverability",
            Verdict::Pass,
            "",
            format!("{} vertices with feasible recourse", check.vertices.len()),
        ));
    }

    findings.push(
        match brute_force_clear(book, topo, res.mode, &GridSpec::default()) {
            Ok(oracle) if oracle.tsw > tsw + TSW_TOL => finding(
                "oracle",
                Verdict::Fail,
                "O-TSW",
                format!(
                    "grid search reaches tsw {} above {}",
                    format_f64(oracle.tsw),
                    format_f64(tsw)
                ),
            ),
            Ok(oracle) if oracle.tsw < tsw - TSW_TOL => finding(
                "oracle",
                Verdict::Pass,
                "",
                format!(
                    "tsw {} exceeds the grid optimum {}",
                    format_f64(tsw),
                    format_f64(oracle.tsw)
                ),
            ),
            Ok(oracle) => finding(
                "oracle",
                Verdict::Pass,
                "",
                format!("oracle match {}", format_f64(oracle.tsw)),
            ),
            Err(e @ (Error::EnumerationCap { .. } | Error::InvalidGrid(_))) => {
                finding("oracle", Verdict::Skip, "", e.to_string())
            }
            Err(e) => return Err(e.into()),
        },
    );
    Ok(findings)
}

fn consistency(
    findings: &mut Vec<Finding>,
    book: &coalloc_core::BidBook,
    x: &[f64],
    prices: &PriceSheet,
    external: bool,
) {
    let (check, verdict, code) = if external {
        ("published-prices", Verdict::Warn, "W-PRICE")
    } else {
        ("consistency", Verdict::Fail, "C-PRICE")
    };
    match verify_consistency(book, x, prices) {
        Ok(violations) if violations.is_empty() => {
            findings.push(finding(
                check,
                Verdict::Pass,
                "",
                "acceptances consistent with prices",
            ));
        }
        Ok(violations) => {
            for v in violations {
                findings.push(finding(
                    check,
                    verdict,
                    code,
                    format!(
                        "bid {} ({} {} at {}, x = {}): {} at price {}",
                        v.bid_id,
                        v.zone,
                        v.product,
                        format_f64(v.bid_price),
                        format_f64(v.acceptance),
                        v.rule,
                        format_f64(v.price)
                    ),
                ));
            }
        }
        Err(e) => findings.push(finding(check, Verdict::Warn, "W-NOPRICE", e.to_string())),
    }
}

fn balance_violations(
    volumes: &ZonalVolumes,
    mode: ClearingMode,
    topo: &coalloc_core::Topology,
) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            out.push(what);
        }
    };
    if mode == ClearingMode::Decoupled {
        for z in 0..volumes.num_zones() {
            for p in Product::ALL {
                let pos = volumes.position(z, p);
                check(
                    pos.abs() <= BALANCE_TOL,
                    format!("zone {} {p} position {}", topo.zone_id(z), format_f64(pos)),
                );
            }
        }
        return out;
    }
    let energy = volumes.system_position(Product::Energy);
    check(
        energy.abs() <= BALANCE_TOL,
        format!("energy position {}", format_f64(energy)),
    );
    for p in [Product::ReservePos, Product::ReserveNeg] {
        let pos = volumes.system_position(p);
        let ok = match mode {
            ClearingMode::Balanced => pos.abs() <= BALANCE_TOL,
            _ => pos <= BALANCE_TOL,
        };
        check(
            ok,
            format!("{p} demand exceeds supply by {}", format_f64(pos)),
        );
    }
    out
}
