//! Full primary suite, judged criterion by criterion.

mod oracles;

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rvmb::report::{Cell, Check};
use rvmb::Vec3;
use rvmb_cli::commands::wave_data;
use rvmb_cli::{resolve_config, run_command, write_outputs, Command, Outcome};

fn check<'a>(out: &'a Outcome, name: &str) -> &'a Check {
    out.report.checks.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("missing check {name}"))
}

fn checks_of<'a>(out: &'a Outcome, prefix: &str) -> Vec<&'a Check> {
    out.report.checks.iter().filter(|c| c.name.starts_with(prefix)).collect()
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(x) => *x,
        Cell::Int(i) => *i as f64,
        other => panic!("not numeric: {other:?}"),
    }
}

fn csv_bytes(out: &Outcome) -> BTreeMap<String, String> {
    out.tables.iter().map(|(name, t)| (name.clone(), t.to_csv())).collect()
}

struct Criterion {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn all_pass(checks: &[&Check]) -> (bool, String) {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}={:e}", c.name, c.value)).collect();
    let worst = checks.iter().map(|c| format!("{}={:.3e}", c.name.rsplit('/').next().unwrap(), c.value)).collect::<Vec<_>>();
    if failed.is_empty() {
        (!checks.is_empty(), worst.join(" "))
    } else {
        (false, format!("failed: {}", failed.join(" ")))
    }
}

#[test]
fn primary_suite() {
    let cfg = resolve_config(Command::Report, None, &[]).expect("default config");
    let start = Instant::now();
    let (first, wall) = run_command(Command::Report, &cfg, Some(1)).expect("suite runs");
    let suite_wall = start.elapsed();
    let (second, _) = run_command(Command::Report, &cfg, Some(2)).expect("suite reruns");

    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), Command::Report, &cfg, &first, wall, Some(1)).expect("outputs written");

    let time = |name: &str| first.timings.iter().find(|(n, _)| n == name).map(|(_, d)| d.as_secs_f64()).unwrap();
    let mut out = Vec::new();

    let c = check(&first, "collision-verify/collision_conservation");
    let t = time("collision-verify");
    out.push(Criterion { id: 1, title: "collision conservation", passed: c.passed && t <= 60.0, detail: format!("max relative {:.3e}, {t:.1} s", c.value) });

    let c = check(&first, "collision-verify/juttner_annihilation");
    out.push(Criterion { id: 2, title: "equilibrium annihilation", passed: c.passed, detail: format!("max |Q|/max(gain,loss) {:.3e}", c.value) });

    let (p, d) = all_pass(&checks_of(&first, "chain-rule/"));
    let t = time("chain-rule");
    out.push(Criterion { id: 3, title: "chain rule and rotation convergence", passed: p && t <= 120.0, detail: format!("{d}, {t:.1} s") });

    let names = ["momentum_conservation", "energy_conservation", "g_invariance", "s_invariance", "half_angle", "newtonian_limit"];
    let ks: Vec<&Check> = names.iter().map(|n| check(&first, &format!("kinematics-check/{n}"))).collect();
    let (p, d) = all_pass(&ks);
    out.push(Criterion { id: 4, title: "kinematics invariants", passed: p, detail: d });

    let c = check(&first, "kinematics-check/transport_jacobian");
    out.push(Criterion { id: 5, title: "transport Jacobian", passed: c.passed, detail: format!("max relative {:.3e}", c.value) });

    let (f0, f1) = wave_data();
    let kirchhoff = &first.tables.iter().find(|(n, _)| n == "fields-solve/kirchhoff").expect("kirchhoff table").1;
    let mut worst_k: f64 = 0.0;
    for row in &kirchhoff.rows {
        let v: Vec<f64> = row.iter().map(num).collect();
        let fd = oracles::wave_fd(&f0, &f1, v[0], &Vec3::new(v[1], v[2], v[3]), v[4]);
        worst_k = worst_k.max((v[5] - fd).abs());
    }
    let mut gs = checks_of(&first, "kernel-means/");
    gs.extend(checks_of(&first, "fields-solve/"));
    let (p, d) = all_pass(&gs);
    out.push(Criterion {
        id: 6,
        title: "field kernels, wave residual and Kirchhoff",
        passed: p && kirchhoff.rows.len() == 20 && worst_k <= 1e-3,
        detail: format!("{d} kirchhoff_vs_fd={worst_k:.3e} at {} probes", kirchhoff.rows.len()),
    });

    let (p, d) = all_pass(&checks_of(&first, "vectorfield-table/"));
    out.push(Criterion { id: 7, title: "vector-field commutators", passed: p, detail: d });

    let ineq = checks_of(&first, "inequality-scan/");
    let (p, _) = all_pass(&ineq);
    out.push(Criterion { id: 8, title: "inequality catalog", passed: p, detail: format!("{} checks, worst change {:.3e}", ineq.len(), ineq.iter().filter(|c| c.name.contains("inequality_")).map(|c| c.value).fold(0.0, f64::max)) });

    let (p, d) = all_pass(&checks_of(&first, "decay-fit/"));
    out.push(Criterion { id: 9, title: "dispersion decay", passed: p, detail: d });

    let (a, b) = (csv_bytes(&first), csv_bytes(&second));
    let same = a == b && first.report.table().to_csv() == second.report.table().to_csv();
    out.push(Criterion { id: 10, title: "determinism across thread counts", passed: same, detail: format!("{} CSV tables, 1 vs 2 threads", a.len()) });

    let t = suite_wall.as_secs_f64();
    out.push(Criterion { id: 11, title: "suite wall time", passed: t <= 600.0, detail: format!("{t:.1} s on one thread") });

    let mut err = std::io::stderr().lock();
    for c in &out {
        let _ = writeln!(err, "criterion {:2} {:<44} {} ({})", c.id, c.title, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let failed: Vec<usize> = out.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
