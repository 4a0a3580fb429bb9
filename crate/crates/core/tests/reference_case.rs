use coalloc_core::clearing::{
    clear, clear_coallocated, deliverability_check, worst_case_report, Deliverability, Direction,
};
use coalloc_core::fixture;
use coalloc_core::network::{build_ptdf, flows_from_injections};
use coalloc_core::oracle::{sample_realizations, GridSpec};
use coalloc_core::pricing::{dual_price_intervals, verify_consistency};
use coalloc_core::settlement::settle;
use coalloc_core::{ClearingConfig, ClearingMode, Product};

const BALANCED_X: [f64; 9] = [1.0, 0.0, 1.0, 0.5, 1.0, 1.0, 0.0, 1.0, 1.0];
const OVERPROCURE_X: [f64; 9] = [1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.5, 1.0, 1.0];

fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} != {b:?}");
    }
}

#[test]
fn balanced_clearing_matches_reference_tables() {
    let (topo, book) = fixture::reference_case();
    let out = clear(
        &book,
        &topo,
        ClearingMode::Balanced,
        &ClearingConfig::default(),
    )
    .unwrap();
    assert!((out.tsw - 76.0).abs() < 1e-6);
    assert_vec_close(&out.acceptances, &BALANCED_X, 1e-7);
    assert_eq!(out.recourse.len(), 3);
}

#[test]
fn overprocure_clearing_matches_reference_tables() {
    let (topo, book) = fixture::reference_case();
    let out = clear(
        &book,
        &topo,
        ClearingMode::Overprocure,
        &ClearingConfig::default(),
    )
    .unwrap();
    assert!((out.tsw - 80.0).abs() < 1e-6);
    assert_vec_close(&out.acceptances, &OVERPROCURE_X, 1e-7);
    let supply =
        out.volumes.supply(1, Product::ReservePos) + out.volumes.supply(0, Product::ReservePos);
    assert!((supply - 6.0).abs() < 1e-7);
}

#[test]
fn wide_lines_reach_the_unconstrained_optimum() {
    let topo = fixture::topology_with_capacities([100.0; 4]);
    let book = fixture::bid_book();
    let out = clear(
        &book,
        &topo,
        ClearingMode::Balanced,
        &ClearingConfig::default(),
    )
    .unwrap();
    assert!((out.tsw - 92.0).abs() < 1e-6);
}

#[test]
fn closed_lines_reduce_to_decoupled() {
    let topo = fixture::topology_with_capacities([0.0; 4]);
    let book = fixture::bid_book();
    for mode in [ClearingMode::Balanced, ClearingMode::Overprocure] {
        let out = clear(&book, &topo, mode, &ClearingConfig::default()).unwrap();
        assert!((out.tsw - 24.0).abs() < 1e-6, "{mode}: {}", out.tsw);
    }
}

#[test]
fn balanced_worst_case_on_line_four() {
    let (topo, book) = fixture::reference_case();
    let config = ClearingConfig::default();
    let out = clear(&book, &topo, ClearingMode::Balanced, &config).unwrap();
    for with_recourse in [false, true] {
        let report = worst_case_report(&out, &topo, with_recourse, &config).unwrap();
        let entry = report.entry(4, Direction::Positive).unwrap();
        assert!((entry.load - 2.0).abs() < 1e-7);
        let vertex = &report.vertices[entry.vertex.unwrap()];
        assert_eq!(vertex.label(&topo), "B+");
    }
}

#[test]
fn overprocure_worst_case_needs_counter_activation() {
    let (topo, book) = fixture::reference_case();
    let config = ClearingConfig::default();
    let out = clear(&book, &topo, ClearingMode::Overprocure, &config).unwrap();

    let plain = worst_case_report(&out, &topo, false, &config).unwrap();
    let entry = plain.entry(4, Direction::Positive).unwrap();
    assert!((entry.load - 3.0).abs() < 1e-7, "{}", entry.load);

    let relieved = worst_case_report(&out, &topo, true, &config).unwrap();
    let entry = relieved.entry(4, Direction::Positive).unwrap();
    assert!((entry.load - 2.0).abs() < 1e-7);
    let vertex = &relieved.vertices[entry.vertex.unwrap()];
    assert_eq!(vertex.label(&topo), "B+");
    let plan = entry.plan.as_ref().unwrap();
    assert_vec_close(&plan.up, &[4.0, 2.0, 0.0, 0.0], 1e-7);
    assert_vec_close(&plan.down, &[0.0, 0.0, 2.0, 0.0], 1e-7);
}

#[test]
fn balanced_negative_direction_load_reaches_the_limit() {
    let (topo, book) = fixture::reference_case();
    let config = ClearingConfig::default();
    let out = clear(&book, &topo, ClearingMode::Balanced, &config).unwrap();
    let report = worst_case_report(&out, &topo, false, &config).unwrap();
    let entry = report.entry(4, Direction::Negative).unwrap();
    assert!(entry.load <= 2.0 + 1e-7);
}

#[test]
fn deliverability_of_reference_dispatches() {
    let (topo, book) = fixture::reference_case();
    let config = ClearingConfig::default();
    for x in [BALANCED_X, OVERPROCURE_X] {
        let report = deliverability_check(&x, &book, &topo, &config).unwrap();
        assert!(report.feasible);
        assert!(report
            .vertices
            .iter()
            .all(|v| matches!(v.verdict, Deliverability::Witness(_))));
    }
    let report = deliverability_check(&[0.0; 9], &book, &topo, &config).unwrap();
    assert!(report.feasible);
}

#[test]
fn overprocure_dispatch_without_surplus_reserve_is_undeliverable() {
    let (topo, book) = fixture::reference_case();
    let mut x = OVERPROCURE_X;
    x[6] = 0.0;
    let report = deliverability_check(&x, &book, &topo, &ClearingConfig::default()).unwrap();
    assert!(!report.feasible);
    let violations: Vec<_> = report.violations().collect();
    assert_eq!(violations.len(), 1);
    let (vertex, line) = violations[0];
    assert_eq!(vertex.label(&topo), "B+");
    assert_eq!(line.line_id, 4);
    assert!((line.load - 3.0).abs() < 1e-7);

    let out = coalloc_core::ClearingOutcome {
        volumes: coalloc_core::clearing::ZonalVolumes::from_acceptances(&book, &topo, &x).unwrap(),
        acceptances: x.to_vec(),
        ..clear(
            &book,
            &topo,
            ClearingMode::Overprocure,
            &ClearingConfig::default(),
        )
        .unwrap()
    };
    let samples = sample_realizations(&out, &topo, &GridSpec::default()).unwrap();
    assert!(samples.violations >= 1);
}

#[test]
fn committed_recourse_is_feasible() {
    let (topo, book) = fixture::reference_case();
    let ptdf = build_ptdf(&topo).unwrap();
    for mode in [ClearingMode::Balanced, ClearingMode::Overprocure] {
        let out = clear(&book, &topo, mode, &ClearingConfig::default()).unwrap();
        let energy = out.volumes.energy_injections();
        for committed in &out.recourse {
            let reserve = coalloc_core::clearing::reserve_injections(
                &committed.vertex.up,
                &committed.vertex.down,
                &committed.plan,
            );
            let total: Vec<f64> = energy.iter().zip(&reserve).map(|(e, r)| e + r).collect();
            let flows = flows_from_injections(&ptdf, &total).unwrap();
            for (line, f) in topo.lines().iter().zip(flows) {
                assert!(f.abs() <= line.capacity + 1e-7);
            }
        }
    }
}

#[test]
fn interior_realizations_are_deliverable() {
    let (topo, book) = fixture::reference_case();
    for mode in [ClearingMode::Balanced, ClearingMode::Overprocure] {
        let out = clear(&book, &topo, mode, &ClearingConfig::default()).unwrap();
        let report = sample_realizations(&out, &topo, &GridSpec::default()).unwrap();
        assert_eq!(report.samples, 100);
        assert_eq!(report.violations, 0);
    }
}

#[test]
fn dual_prices_settle_to_the_clearing_welfare() {
    let (topo, book) = fixture::reference_case();
    for mode in [ClearingMode::Balanced, ClearingMode::Overprocure] {
        let c = clear_coallocated(&book, &topo, mode, &ClearingConfig::default()).unwrap();
        let prices = dual_price_intervals(&c.program, &topo).unwrap();
        let report = settle(&book, &c.outcome.acceptances, &prices).unwrap();
        assert!((report.tsw - report.total_surplus - report.total_rent).abs() < 1e-9);
        // midpoint prices are consistent with the acceptances
        let violations = verify_consistency(&book, &c.outcome.acceptances, &prices).unwrap();
        assert!(violations.is_empty(), "{mode}: {violations:?}");
    }
}
