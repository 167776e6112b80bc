//! Acceptance run: one line per criterion, `PASS` or `FAIL`, with the
//! measured numbers and wall time.
//!
//! The run itself succeeds whenever every criterion could be evaluated, so a
//! criterion that the 2D model does not meet is reported rather than hidden
//! behind a red test suite. Pass `--strict` (`cargo test --test acceptance --
//! --strict`) to exit non-zero on any `FAIL`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use sidewall::fem::*;
use sidewall::fixtures::*;
use sidewall::geometry::{build_cross_section, GeometryParams, Point};
use sidewall::mesh::{generate_mesh, SizeField};
use sidewall::qanalysis::*;
use sidewall::study::{convergence_study, run_sweep, run_undercut_sweep};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn opts() -> AdaptiveOptions {
    AdaptiveOptions::default()
}

fn baseline() -> GeometryParams {
    GeometryParams::default()
}

fn c1_table() -> Verdict {
    let recs = load_qubit_table(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/table1.csv")).unwrap();
    let worst = recs.iter().map(|r| rel(r.q, r.q_printed.unwrap())).fold(0.0, f64::max);
    let q11 = quality_factor(116.0, 4.726).unwrap();
    verdict(recs.len() == 22 && worst <= 0.005 && rel(q11, 3.44e6) <= 0.005, format!("22 rows = {}, worst |ΔQ|/Q = {:.3}%, Q(116 µs, 4.726 GHz) = {q11:.4e}", recs.len(), 100.0 * worst))
}

fn c2_oracles() -> Verdict {
    let (w, d) = (200.0, 10.0);
    let m = parallel_plate(w, d, 10, 5);
    let s = solve_potential(&m, 1.0, 1).unwrap();
    let plate = rel(s.total_energy(), 0.5 * EPS0 * w / d);

    let (a, b) = (1.0, 3.0);
    let mut errs = Vec::new();
    for k in [1, 2, 4, 8] {
        let m = annulus(a, b, 4 * k, 16 * k);
        let s = solve_potential(&m, 1.0, 1).unwrap();
        errs.push(m.nodes.iter().zip(s.nodal_potentials()).map(|(p, &v)| (v - annulus_potential(a, b, 1.0, p.norm())).abs()).fold(0.0, f64::max));
    }
    let slopes: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let ok = plate < 1e-8 && slopes.iter().all(|s| (1.9..=2.1).contains(s));
    verdict(ok, format!("plate energy error {plate:.1e}; annulus max-error slopes {slopes:.3?}"))
}

fn c3_corners() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for theta in [180.0, 270.0, 360.0] {
        let m = wedge(theta, 1.0, 96, 1.1, 1e-6);
        let s = solve_potential(&m, 1.0, 1).unwrap();
        match fit_corner_exponent(&s, Point::new(0.0, 0.0), 1e-4, 1e-2) {
            Ok(f) => {
                ok &= (f.eta - wedge_exponent(theta)).abs() <= 0.05 && f.r2 >= 0.98;
                parts.push(format!("{theta}°: η = {:.4} (want {:.4}), R² = {:.4}", f.eta, wedge_exponent(theta), f.r2));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{theta}°: {e}"));
            }
        }
    }
    verdict(ok, parts.join("; "))
}

fn c4_trench() -> Verdict {
    let values: Vec<f64> = (0..=12).map(|k| 10.0 * k as f64).collect();
    let r = run_sweep(&baseline(), "trench_depth", &values, &opts()).unwrap();
    let e = r.epr_sum();
    let decreasing = e.windows(2).all(|w| w[1] < w[0]);
    let drop = e[0] - e[7];
    let tail = (e[7] - e[12]).abs();
    let ok = decreasing && drop > 0.0 && tail < 0.05 * drop;
    verdict(ok, format!("strictly decreasing: {decreasing}; EPR_sum(0, 70, 120) = {:.3e}, {:.3e}, {:.3e}; 70→120 change = {:.1}% of the 0→70 drop", e[0], e[7], e[12], 100.0 * tail / drop))
}

fn c5_alpha() -> Verdict {
    let r = run_sweep(&GeometryParams { dh: 5.0, ..baseline() }, "alpha", &[0.0, 30.0], &opts()).unwrap();
    let (s0, s30) = (r.reports[0].epr_side, r.reports[1].epr_side);
    let gain = s30 / s0 - 1.0;
    verdict((0.10..=0.30).contains(&gain), format!("side EPR {s0:.3e} → {s30:.3e}: {:+.1}% (want +10…+30%)", 100.0 * gain))
}

fn c6_dh() -> Verdict {
    let r = run_sweep(&baseline(), "dh", &[5.0, 10.0], &opts()).unwrap();
    let e = r.epr_sum();
    let ratio = e[1] / e[0];
    verdict((1.6..=2.5).contains(&ratio), format!("EPR_sum(10 nm)/EPR_sum(5 nm) = {ratio:.3} ({:.3e} / {:.3e})", e[1], e[0]))
}

fn c7_radii() -> Verdict {
    let grid = [0.0, 10.0, 20.0, 40.0, 60.0, 80.0];
    let r1 = run_sweep(&baseline(), "r1", &grid, &opts()).unwrap();
    let r2 = run_sweep(&GeometryParams { footer_fraction: 0.5, ..baseline() }, "r2", &grid, &opts()).unwrap();
    let dev = |s: &sidewall::study::SweepResult| {
        let e = s.epr_sum();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        e.iter().map(|x| (x - mean).abs() / mean).fold(0.0, f64::max)
    };
    let (d1, d2) = (dev(&r1), dev(&r2));
    let fmt = |s: &sidewall::study::SweepResult| s.epr_sum().iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ");
    verdict(d1 < 0.10 && d2 < 0.10, format!("max deviation r1 {:.1}%, r2 {:.1}%; r1: {}; r2: {}", 100.0 * d1, 100.0 * d2, fmt(&r1), fmt(&r2)))
}

fn c8_undercut() -> Verdict {
    let base = GeometryParams { trench_depth: 100.0, ..baseline() };
    let (x, _) = run_undercut_sweep(&base, &[0.0, 60.0], &[90.0], &opts()).unwrap();
    let e = x.epr_sum();
    let reduction = 1.0 - e[1] / e[0];
    let beta = run_sweep(&GeometryParams { undercut_x: 60.0, ..base }, "undercut_beta", &[15.0, 75.0], &opts()).unwrap();
    let b = beta.epr_sum();
    let ok = (0.40..=0.80).contains(&reduction) && b[0] > b[1];
    verdict(
        ok,
        format!("x = 60 nm changes EPR_sum by {:+.1}% ({:.3e} → {:.3e}; want −40…−80%); β 15° vs 75°: {:.3e} vs {:.3e} (want shallow higher)", -100.0 * reduction, e[0], e[1], b[0], b[1]),
    )
}

fn c9_convergence() -> Verdict {
    let run = AdaptiveOptions { iterations: 3, rel_tol: 0.0, ..opts() };
    let (r, _) = adaptive_epr_with(&baseline(), &run).unwrap();
    let steps: Vec<f64> = r.trace.windows(2).map(|w| (w[1].epr_sum - w[0].epr_sum).abs()).collect();
    let settling = steps.windows(2).all(|w| w[1] <= w[0]);
    let c = convergence_study(&baseline(), &[1, 2], 2, &opts()).unwrap();
    let ok = r.trace.len() == 3 && settling && c.cross_order <= 0.05;
    let steps: Vec<String> = steps.iter().map(|s| format!("{s:.2e}")).collect();
    let extrapolated: Vec<String> = c.extrapolated.iter().map(|(o, v)| format!("P{o} {v:.4e}")).collect();
    verdict(ok, format!("|ΔEPR_sum| over 3 solves [{}]; extrapolated {}, P1/P2 spread {:.2}%", steps.join(", "), extrapolated.join(", "), 100.0 * c.cross_order))
}

fn c10_thin_layer() -> Verdict {
    let p = baseline();
    let (meshed, _) = adaptive_epr_with(&p, &opts()).unwrap();
    let bare = GeometryParams { dh: 0.0, dh_top: None, dh_side: None, ..p.clone() };
    let cs = build_cross_section(&bare).unwrap();
    // the oxide geometry's size field, so both meshes resolve the same corners
    let sf = SizeField::for_params(&p, &build_cross_section(&p).unwrap());
    let m = generate_mesh(&cs, &sf).unwrap();
    let s = solve_potential(&m, 1.0, 1).unwrap();
    let thin = thin_layer_epr(&s, &cs.surfaces, &ThinLayer::from_params(&p), ThinLayer::curvature_floor(&p)).unwrap();
    let dev = rel(thin.epr_sum, meshed.epr_sum);
    verdict(
        dev <= 0.15,
        format!(
            "thin-layer EPR_sum {:.3e} (top {:.3e}, side {:.3e}) vs meshed {:.3e} (top {:.3e}, side {:.3e}): {:.1}% apart",
            thin.epr_sum,
            thin.epr_top,
            thin.epr_side,
            meshed.epr_sum,
            meshed.epr_top,
            meshed.epr_side,
            100.0 * dev
        ),
    )
}

fn c11_band() -> Verdict {
    let report = |p: f64| EprReport::from_energies(BTreeMap::from([("oxide_top".to_string(), p), ("vacuum".to_string(), 1.0 - p)]), 1, 0, 0);
    let curve = EprCurve::new("trench_depth", [0.0, 20.0, 70.0, 120.0].iter().map(|&v| (v, report(2e-6 / (1.0 + v / 20.0)))).collect()).unwrap();
    let rec = |id: &str, q: f64, v: f64| {
        let mut r = parse_qubit_table(&format!("chip_id,qubit_id,substrate,capping,t1_avg_us,t1_sigma_us,freq_ghz\nX,{id},si,,{},,1\n", q / (2e3 * std::f64::consts::PI))).unwrap().remove(0);
        r.features.insert("trench_depth".into(), Feature { value: v, unit: "nm".into(), uncertainty: None });
        r
    };
    let model = LossModel::oxide(0.1);
    let anchor = rec("1", 3e6, 20.0);
    let band = predict_q_band(&curve, &model, "trench_depth", &anchor, 20.0, 0.1).unwrap();
    let (lo, _, hi) = band.q_at(20.0).unwrap();
    let inside = lo <= anchor.q && anchor.q <= hi;
    let flat = predict_q_band(&curve, &model, "trench_depth", &anchor, 20.0, 0.0).unwrap();
    let collapsed = flat.q_low == flat.q_mid && flat.q_high == flat.q_mid;
    let monotone = band.q_mid.windows(2).all(|w| w[1] > w[0]);
    let mid = |v: f64| band.q_at(v).unwrap().1;
    let fixture = [anchor.clone(), rec("2", mid(70.0), 70.0), rec("3", mid(100.0), 100.0), rec("4", band.q_at(50.0).unwrap().0 * 0.8, 50.0)];
    let (_, summary) = band_membership(&fixture, &band).unwrap();
    let flags = summary.inside == 3 && summary.below == 1;
    verdict(inside && collapsed && monotone && flags, format!("anchor inside {inside}, rel_err 0 collapses {collapsed}, q_mid monotone {monotone}, constructed fixture {}/{} inside with {} below", summary.inside, summary.total, summary.below))
}

fn c12_invariants() -> Verdict {
    let family = [
        baseline(),
        GeometryParams { trench_depth: 70.0, ..baseline() },
        GeometryParams { alpha: 30.0, ..baseline() },
        GeometryParams { r1: 40.0, ..baseline() },
        GeometryParams { r2: 40.0, footer_fraction: 0.5, ..baseline() },
        GeometryParams { trench_depth: 100.0, undercut_x: 60.0, undercut_beta: 45.0, ..baseline() },
        GeometryParams { dh: 10.0, ..baseline() },
    ];
    let mut partition: f64 = 0.0;
    let mut voltage: f64 = 0.0;
    let mut mirror: f64 = 0.0;
    let mut deterministic = true;
    for p in &family {
        let cs = build_cross_section(p).unwrap();
        let sf = SizeField::for_params(p, &cs);
        let m = generate_mesh(&cs, &sf).unwrap();
        deterministic &= generate_mesh(&build_cross_section(p).unwrap(), &sf).unwrap().to_ascii() == m.to_ascii();
        let a = compute_epr(&solve_potential(&m, 1.0, 1).unwrap());
        partition = partition.max((a.ratios().map(|(_, x)| x).sum::<f64>() - 1.0).abs());
        let b = compute_epr(&solve_potential(&m, -7.5, 1).unwrap());
        voltage = voltage.max(rel(b.epr_sum, a.epr_sum));
        let c = compute_epr(&solve_potential(&m.mirrored(), 1.0, 1).unwrap());
        mirror = mirror.max(rel(c.epr_sum, a.epr_sum)).max(rel(c.w0, a.w0));
    }
    let (r1, _) = adaptive_epr_with(&family[1], &opts()).unwrap();
    let (r2, _) = adaptive_epr_with(&family[1], &opts()).unwrap();
    deterministic &= serde_json::to_string(&r1).unwrap() == serde_json::to_string(&r2).unwrap();
    let ok = partition <= 1e-9 && voltage <= 1e-9 && mirror <= 1e-9 && deterministic;
    verdict(
        ok,
        format!("{} geometries: partition error {partition:.1e}, voltage-scaling error {voltage:.1e}, mirror error {mirror:.1e}, byte-identical reruns {deterministic}", family.len()),
    )
}

type Check = fn() -> Verdict;

fn main() {
    let strict = std::env::args().any(|a| a == "--strict");
    let criteria: [(&str, u64, Check); 12] = [
        ("qubit table arithmetic", 1, c1_table),
        ("analytic field oracles", 60, c2_oracles),
        ("corner singularity exponents", 120, c3_corners),
        ("trench-depth trend", 600, c4_trench),
        ("sidewall-angle trend", 300, c5_alpha),
        ("oxide-thickness scaling", 300, c6_dh),
        ("R1/R2 insensitivity", 600, c7_radii),
        ("undercut trend", 600, c8_undercut),
        ("convergence protocol", 600, c9_convergence),
        ("thin-layer cross-check", 300, c10_thin_layer),
        ("prediction band construction", 1, c11_band),
        ("invariant suite", 900, c12_invariants),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let t0 = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let elapsed = t0.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        let timing = if in_time { format!("{:.1} s", elapsed.as_secs_f64()) } else { format!("{:.1} s, over the {budget} s budget", elapsed.as_secs_f64()) };
        println!("{} criterion {:>2} {name}: {} ({timing})", if pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
