use std::collections::BTreeMap;

use sidewall::fem::{AdaptiveOptions, SolverOptions};
use sidewall::geometry::GeometryParams;
use sidewall::study::*;

fn small() -> GeometryParams {
    GeometryParams { gap: 3.0, pad_extent: 3.0, ..GeometryParams::default() }
}

fn one_pass() -> AdaptiveOptions {
    AdaptiveOptions { iterations: 1, ..AdaptiveOptions::default() }
}

#[test]
fn sweep_order_does_not_matter() {
    let a = run_sweep(&small(), "trench_depth", &[40.0, 0.0, 20.0], &one_pass()).unwrap();
    let b = run_sweep(&small(), "trench_depth", &[0.0, 20.0, 40.0], &one_pass()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values, vec![0.0, 20.0, 40.0]);
    assert_eq!(a.provenance.config_hash.len(), 64);

    let csv = a.to_csv();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,"));
    assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
}

#[test]
fn sweep_rejects_bad_axes_and_values() {
    let o = one_pass();
    for (axis, values) in [("colour", vec![1.0]), ("dh", vec![]), ("dh", vec![2.0, 2.0]), ("dh", vec![f64::NAN])] {
        assert!(matches!(run_sweep(&small(), axis, &values, &o), Err(StudyError::Invalid(_))), "{axis} {values:?}");
    }
    // an invalid geometry point is caught before any solve
    let e = run_sweep(&small(), "dh", &[5.0, -1.0], &o).unwrap_err();
    assert!(e.is_validation());
}

#[test]
fn failing_point_aborts_with_partial_result() {
    let starved = AdaptiveOptions { solver: SolverOptions { direct_limit: 0, max_iterations: 2, ..SolverOptions::default() }, ..one_pass() };
    match run_sweep(&small(), "dh", &[5.0, 3.0], &starved) {
        Err(StudyError::SweepAborted { axis, value, partial, .. }) => {
            assert_eq!((axis.as_str(), value), ("dh", 3.0));
            assert!(partial.values.is_empty() && partial.reports.is_empty());
        }
        other => panic!("expected an aborted sweep, got {other:?}"),
    }
}

#[test]
fn zero_undercut_ignores_its_angle() {
    let base = GeometryParams { trench_depth: 60.0, ..small() };
    let (x, beta) = run_undercut_sweep(&base, &[0.0, 30.0], &[20.0, 70.0], &one_pass()).unwrap();
    assert_eq!(x.values, vec![0.0, 30.0]);
    assert_eq!(beta.reports[0].epr_sum, beta.reports[1].epr_sum);
    assert_eq!(beta.reports[0].region_energies, beta.reports[1].region_energies);

    assert!(matches!(run_undercut_sweep(&small(), &[0.0], &[45.0], &one_pass()), Err(StudyError::Invalid(_))));
}

#[test]
fn convergence_needs_two_generations() {
    assert!(matches!(convergence_study(&small(), &[1], 1, &one_pass()), Err(StudyError::Invalid(_))));
    assert!(matches!(convergence_study(&small(), &[], 3, &one_pass()), Err(StudyError::Invalid(_))));
}

#[test]
fn convergence_rows_cover_every_generation() {
    let r = convergence_study(&small(), &[1], 2, &one_pass()).unwrap();
    assert_eq!(r.rows.len(), 3);
    assert!(r.rows.windows(2).all(|w| w[1].elements > w[0].elements));
    assert_eq!(r.extrapolated.len(), 1);
    assert_eq!(r.cross_order, 0.0);
}

#[test]
fn pinned_bounds_evaluate_once() {
    let bounds = BTreeMap::from([("trench_depth".to_string(), (30.0, 30.0))]);
    let opts = OptimizeOptions { adaptive: one_pass(), ..OptimizeOptions::default() };
    let r = optimize_geometry(&bounds, &small(), &opts).unwrap();
    assert_eq!(r.termination, Termination::NoFreeParameters);
    assert_eq!(r.log.len(), 1);
    assert_eq!(r.best, GeometryParams { trench_depth: 30.0, ..small() });

    let none = optimize_geometry(&BTreeMap::new(), &small(), &opts).unwrap();
    assert_eq!((none.log.len(), &none.best), (1, &small()));
}

#[test]
fn optimizer_rejects_bad_bounds() {
    let opts = OptimizeOptions { adaptive: one_pass(), ..OptimizeOptions::default() };
    for b in [("colour", (0.0, 1.0)), ("dh", (5.0, 1.0)), ("dh", (f64::NEG_INFINITY, 1.0))] {
        let bounds = BTreeMap::from([(b.0.to_string(), b.1)]);
        assert!(matches!(optimize_geometry(&bounds, &small(), &opts), Err(StudyError::Invalid(_))));
    }
}

#[test]
fn optimizer_is_seeded_and_never_worse_than_base() {
    let bounds = BTreeMap::from([("trench_depth".to_string(), (0.0, 120.0))]);
    let opts = OptimizeOptions { n_starts: 2, max_evals: 8, seed: 7, adaptive: one_pass(), ..OptimizeOptions::default() };
    let a = optimize_geometry(&bounds, &small(), &opts).unwrap();
    let b = optimize_geometry(&bounds, &small(), &opts).unwrap();
    assert_eq!(a, b);
    let base = a.log.iter().find(|e| e.start == 0).unwrap().objective;
    assert!(a.best_objective <= base);
    assert!(a.log.windows(2).all(|w| w[0].start <= w[1].start));
    // the trench response saturates, so the optimum sits deep
    assert!(a.best.trench_depth >= 70.0, "{}", a.best.trench_depth);
}

#[test]
fn figures_are_reproducible() {
    let grids = FigureGrids {
        trench_depth: vec![0.0, 40.0],
        alpha: vec![0.0, 20.0],
        dh: vec![3.0, 5.0],
        r1: vec![0.0, 20.0],
        r2: vec![0.0, 20.0],
        undercut_x: vec![0.0, 20.0],
        undercut_beta: vec![30.0, 60.0],
        undercut_trench: 60.0,
        undercut_beta_at_x: 20.0,
        ..FigureGrids::default()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let f1 = reproduce_figures(d1.path(), &small(), &grids, &one_pass()).unwrap();
    let f2 = reproduce_figures(d2.path(), &small(), &grids, &one_pass()).unwrap();
    let names: Vec<_> = f1.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, ["fig2b.csv", "fig4b.csv", "fig4c.csv", "fig_s4.csv", "fig_s11.csv"]);
    for (a, b) in f1.iter().zip(&f2) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }
    let s11 = std::fs::read_to_string(&f1[4]).unwrap();
    assert!(s11.starts_with("axis,axis_value,"));
    assert_eq!(s11.lines().filter(|l| l.starts_with("undercut_beta,")).count(), 2);
}
