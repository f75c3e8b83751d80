//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fjmm::dynamics::{control_matrix, hull_envelope};
use fjmm::experiments::{
    example1, example2, example2_default_grid, example3, fig2_instance, heterogeneous_default_grid,
    heterogeneous_sweep, homogeneous_graphs, homogeneous_sweep, sweep_default_grid, DEFAULT_SEED,
    EXAMPLE3_TOL,
};
use fjmm::influence::{BlendCoefficients, UseCase};
use fjmm::netgen::GraphSpec;
use fjmm::spectral::{graph_criterion, homogeneous_radius, memory_slowdown_check, radius, MARGINAL_BAND};
use fjmm::{
    augmented, equilibrium, row_stochastic, simulate, simulate_comparison, stability_report,
    InitialCondition, SimulationOptions,
};
use nalgebra::DVector;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn check(id: &'static str, budget: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (mut pass, mut detail) = f();
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str(&format!("; over time budget {b:?}"));
        }
    }
    Outcome {
        id,
        pass,
        detail,
        elapsed,
    }
}

fn max_diff(a: &DVector<f64>, b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn a1() -> (bool, String) {
    let e = example1().unwrap();
    let fj_err = max_diff(&e.fj_equilibrium, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let exact = [4.0 / 13.0, 4.0 / 13.0, 0.0, 1.0, 9.0 / 13.0, 9.0 / 13.0];
    let rounded = [0.31, 0.31, 0.0, 1.0, 0.69, 0.69];
    let fjmm_err = max_diff(&e.fjmm_equilibrium, &exact);
    let rounded_err = max_diff(&e.fjmm_equilibrium, &rounded);
    (
        fj_err <= 1e-9 && fjmm_err <= 1e-9 && rounded_err <= 5e-3,
        format!("fj err {fj_err:.1e}, fjmm err {fjmm_err:.1e}, vs rounded {rounded_err:.1e}"),
    )
}

fn numeric_verdict(rho: f64) -> Option<bool> {
    ((rho - 1.0).abs() > MARGINAL_BAND).then_some(rho < 1.0)
}

fn a2() -> (bool, String) {
    let mut rng = common::rng(0xA2);
    let (mut checked, mut marginal, mut stable, mut bad) = (0, 0, 0, Vec::new());
    // instances in the marginal band must still be graph-unstable
    let mut marginal_but_reachable = 0;
    let mut tags = BTreeSet::new();
    for k in 0..400 {
        let m = common::random_model(&mut rng, 12);
        tags.insert(m.use_case.tag());
        let reach = graph_criterion(&m.model).unwrap();
        let rho = radius(&m.model.comparison_matrix(), 1e-12).unwrap();
        let rho_d = radius(augmented(&m.model).matrix(), 1e-12).unwrap();
        match (numeric_verdict(rho), numeric_verdict(rho_d)) {
            (Some(a), Some(b)) => {
                checked += 1;
                stable += usize::from(reach);
                if a != reach || b != reach {
                    bad.push(k);
                }
            }
            _ => {
                marginal += 1;
                marginal_but_reachable += usize::from(reach);
            }
        }
    }
    (
        bad.is_empty() && checked >= 200 && tags.len() == UseCase::ALL.len() && marginal_but_reachable == 0,
        format!(
            "{checked} decided ({stable} stable), {marginal} marginal ({marginal_but_reachable} graph-stable), {} disagreements {bad:?}",
            bad.len()
        ),
    )
}

fn a3() -> (bool, String) {
    let mut rng = common::rng(0xA3);
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..600 {
        let m = common::random_model(&mut rng, 12);
        let r = memory_slowdown_check(&m.model).unwrap();
        worst = worst.min(r.rho_augmented - r.rho_comparison);
        failures += usize::from(!r.holds);
    }
    (
        failures == 0,
        format!("600 models, min rho_d - rho = {worst:.3e}, {failures} violations"),
    )
}

fn a4() -> (bool, String) {
    let sigma = 0.6;
    let grid = sweep_default_grid();
    let configs: Vec<(UseCase, Option<BlendCoefficients>)> = vec![
        (UseCase::TwoHop, None),
        (UseCase::Blend, Some(BlendCoefficients::from_alpha1(0.0).unwrap())),
        (UseCase::Blend, Some(BlendCoefficients::from_alpha1(0.3).unwrap())),
        (UseCase::Blend, Some(BlendCoefficients::from_alpha1(1.0).unwrap())),
    ];
    let (mut worst_cf, mut worst_spread, mut min_excess) = (0.0f64, 0.0f64, f64::INFINITY);
    for (uc, blend) in configs {
        let sweep = homogeneous_sweep(sigma, &grid, uc, blend, DEFAULT_SEED).unwrap();
        for &b in &grid {
            let at: Vec<f64> = sweep
                .points
                .iter()
                .filter(|p| p.beta0 == b)
                .map(|p| p.rho_augmented)
                .collect();
            assert_eq!(at.len(), homogeneous_graphs().len());
            let hi = at.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = at.iter().copied().fold(f64::INFINITY, f64::min);
            worst_spread = worst_spread.max(hi - lo);
        }
        for p in &sweep.points {
            worst_cf = worst_cf.max((p.rho_augmented - p.closed_form).abs());
            min_excess = min_excess.min(p.rho_augmented - sigma);
        }
    }
    (
        worst_cf <= 1e-8 && worst_spread <= 1e-8 && min_excess > 0.0,
        format!(
            "max |numeric - closed form| {worst_cf:.1e}, max spread {worst_spread:.1e}, min rho_d - sigma {min_excess:.3e}"
        ),
    )
}

fn a5() -> (bool, String) {
    let specs = [
        GraphSpec::Barbell { k: 5 },
        GraphSpec::Cycle { n: 20 },
        GraphSpec::Complete { n: 50 },
        GraphSpec::ErdosRenyi { n: 150, p: 0.4 },
        GraphSpec::WattsStrogatz {
            n: 200,
            k: 120,
            p_rewire: 0.7,
        },
    ];
    let mut worst = 0.0f64;
    for spec in &specs {
        let w = row_stochastic(&spec.build(DEFAULT_SEED).unwrap()).unwrap();
        for sigma in [0.3, 0.6, 0.999] {
            worst = worst.max((homogeneous_radius(sigma, &w).unwrap() - sigma).abs());
        }
    }
    (worst <= 1e-12, format!("{} families, max |rho - sigma| {worst:.1e}", specs.len()))
}

fn a6() -> (bool, String) {
    let mut rng = common::rng(0xA6);
    let (mut failures, mut worst_escape) = (Vec::new(), 0.0f64);
    for k in 0..100 {
        let m = common::random_model(&mut rng, 12);
        let model = &m.model;
        let history = common::random_history(&mut rng, model.n(), model.depth());
        let traj = simulate(model, &InitialCondition::History(history), SimulationOptions::horizon(200)).unwrap();
        match hull_envelope(&traj, model.innate()) {
            Ok(env) => {
                let (lo, hi) = (env.lower[0], env.upper[0]);
                for x in traj.states() {
                    let escape = (lo - x.min()).max(x.max() - hi).max(0.0);
                    worst_escape = worst_escape.max(escape);
                }
            }
            Err(e) => failures.push(format!("model {k}: {e}")),
        }
    }
    (
        failures.is_empty() && worst_escape <= 1e-12,
        format!(
            "100 models x 200 steps, {} monotonicity failures, max escape {worst_escape:.1e}{}",
            failures.len(),
            failures.first().map(|f| format!(" ({f})")).unwrap_or_default()
        ),
    )
}

fn steps_for(rho: f64) -> usize {
    if rho <= 0.0 {
        return 1;
    }
    ((1e-8f64).ln() / rho.ln()).ceil().clamp(1.0, 1e5) as usize
}

fn stable_models(count: usize) -> Vec<common::RandomModel> {
    let mut rng = common::rng(0xA7);
    let mut out = Vec::new();
    while out.len() < count {
        let m = common::random_model(&mut rng, 12);
        let r = stability_report(&m.model).unwrap();
        if r.stable && numeric_verdict(r.rho_augmented) == Some(true) {
            out.push(m);
        }
    }
    out
}

fn a7() -> (bool, String) {
    let (mut worst, mut worst_common, mut max_t) = (0.0f64, 0.0f64, 0);
    for m in stable_models(50) {
        let model = &m.model;
        let x_bar = equilibrium(model).unwrap();
        let rho_d = radius(augmented(model).matrix(), 1e-12).unwrap();
        let rho = radius(&model.comparison_matrix(), 1e-12).unwrap();
        let t = steps_for(rho_d);
        max_t = max_t.max(t);
        let fjmm = simulate(model, &InitialCondition::Innate, SimulationOptions::horizon(t)).unwrap();
        let cmp = simulate_comparison(model, &InitialCondition::Innate, SimulationOptions::horizon(steps_for(rho))).unwrap();
        let e = (fjmm.last() - &x_bar).amax();
        worst = worst.max(e);
        worst_common = worst_common.max((fjmm.last() - cmp.last()).amax());
    }
    (
        worst <= 1e-6 && worst_common <= 1e-6,
        format!("50 stable models, max |x(T) - xbar| {worst:.1e}, max |fjmm - comparison| {worst_common:.1e}, largest T {max_t}"),
    )
}

fn a8() -> (bool, String) {
    let (mut worst_row, mut min_entry) = (0.0f64, f64::INFINITY);
    for m in stable_models(50) {
        let c = control_matrix(&m.model).unwrap();
        for row in c.row_iter() {
            worst_row = worst_row.max((row.sum() - 1.0).abs());
        }
        min_entry = min_entry.min(c.min());
    }
    (
        worst_row <= 1e-9 && min_entry >= -1e-12,
        format!("max |row sum - 1| {worst_row:.1e}, min entry {min_entry:.1e}"),
    )
}

fn a9() -> (bool, String) {
    let e = example2(&example2_default_grid()).unwrap();
    let decreasing = e.points.windows(2).all(|p| p[1].polarization < p[0].polarization);
    let all_stable = e.points.iter().all(|p| p.stable);
    let first = e.points.first().unwrap().polarization;
    let last = e.points.last().unwrap().polarization;
    (
        decreasing && all_stable && e.points.len() == 10,
        format!("P from {first:.4} (beta0=0) to {last:.4} (beta0=0.9), strictly decreasing: {decreasing}"),
    )
}

fn a10() -> (bool, String) {
    match fig2_instance() {
        Ok(f) => {
            let unit = (f.rho_w - 1.0).abs() <= 1e-9 && (f.rho_w_tilde - 1.0).abs() <= 1e-9;
            let interior: Vec<_> = f
                .reports
                .iter()
                .filter(|(b, _)| [0.25, 0.5, 0.75].contains(b))
                .collect();
            let ok = interior.len() == 3
                && interior
                    .iter()
                    .all(|(_, r)| r.globally_reachable && r.rho_augmented < 1.0 && r.stable);
            let radii: Vec<String> = interior.iter().map(|(_, r)| format!("{:.4}", r.rho_augmented)).collect();
            (
                unit && ok,
                format!(
                    "rho(LW) {:.12}, rho(LW~) {:.12}, blended rho_d {}",
                    f.rho_w,
                    f.rho_w_tilde,
                    radii.join("/")
                ),
            )
        }
        Err(e) => (false, e.to_string()),
    }
}

fn a11() -> (bool, String) {
    let e = example3(DEFAULT_SEED).unwrap();
    let (t_mm, t_cmp) = (e.fjmm_time.steps(), e.comparison_time.steps());
    let slower = matches!((t_mm, t_cmp), (Some(a), Some(b)) if a >= b);
    let gap = (&e.fjmm_equilibrium - &e.fj_equilibrium).amax();
    (
        slower && gap > 1e-3,
        format!(
            "seed {DEFAULT_SEED}, times at tol {EXAMPLE3_TOL:.0e}: fjmm {t_mm:?}, comparison {t_cmp:?}; |fjmm - fj limit| {gap:.3}"
        ),
    )
}

fn a12() -> Vec<Outcome> {
    let graph = GraphSpec::WattsStrogatz {
        n: 200,
        k: 120,
        p_rewire: 0.7,
    };
    let grid = heterogeneous_default_grid();
    let sweep = |f: f64| heterogeneous_sweep(&graph, f, &grid, UseCase::TwoHop, None, DEFAULT_SEED).unwrap();
    let mut out = Vec::new();
    let mut few = None;
    out.push(check("A12a", None, || {
        let s = sweep(0.15);
        let increasing = s.points.windows(2).all(|p| p[1].rho_augmented > p[0].rho_augmented);
        let end = s.points.last().unwrap();
        let limit = (end.rho_augmented - 1.0).abs() <= MARGINAL_BAND;
        let detail = format!(
            "15% stubborn: rho_d strictly increasing: {increasing}; rho_d at beta0=1 is {:.6} (needs 1 within {MARGINAL_BAND:.0e})",
            end.rho_augmented
        );
        few = Some(s);
        (increasing && limit, detail)
    }));
    out.push(check("A12b", None, || {
        let few = few.take().unwrap();
        let many = sweep(0.5);
        let (g15, g50) = (few.gap_at(0.5).unwrap(), many.gap_at(0.5).unwrap());
        (g50 > g15, format!("gap at beta0=0.5: 15% {g15:.4}, 50% {g50:.4}"))
    }));
    out
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut outcomes = vec![
        check("A1", Some(secs(1)), a1),
        check("A2", Some(secs(30)), a2),
        check("A3", Some(secs(60)), a3),
        check("A4", Some(secs(120)), a4),
        check("A5", None, a5),
        check("A6", None, a6),
        check("A7", None, a7),
        check("A8", None, a8),
        check("A9", None, a9),
        check("A10", None, a10),
        check("A11", None, a11),
    ];
    outcomes.extend(a12());
    let mut failed = 0;
    for o in &outcomes {
        failed += usize::from(!o.pass);
        println!(
            "{:<5} {}  {} [{:.2?}]",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            o.elapsed
        );
    }
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
