use std::fs;

use fjmm::experiments::{
    example3, heterogeneous_sweep, run_named, RunParameters, DEFAULT_SEED, EXPERIMENT_NAMES,
};
use fjmm::influence::UseCase;
use fjmm::netgen::GraphSpec;

fn read_all(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_named_run_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    for name in EXPERIMENT_NAMES {
        let r = run_named(name, &RunParameters::default()).unwrap();
        r.write(dir.path()).unwrap();
        assert!(dir.path().join(format!("{name}.csv")).exists());
        let meta = fs::read_to_string(dir.path().join(format!("{name}.meta.json"))).unwrap();
        let meta: serde_json::Value = serde_json::from_str(&meta).unwrap();
        assert_eq!(meta["name"], name);
        assert!(meta["parameters"].is_object());
        assert_eq!(meta["rng"], fjmm::netgen::RNG_ALGORITHM);
    }
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        for name in ["example3", "heterogeneous-sweep"] {
            let p = RunParameters {
                seed: Some(7),
                ..Default::default()
            };
            run_named(name, &p).unwrap().write(dir).unwrap();
        }
    }
    assert_eq!(read_all(a.path()), read_all(b.path()));
}

#[test]
fn different_seeds_pick_different_stubborn_sets() {
    let g = GraphSpec::ErdosRenyi { n: 40, p: 0.3 };
    let s1 = heterogeneous_sweep(&g, 0.2, &[0.5], UseCase::Inertia, None, 1).unwrap();
    let s2 = heterogeneous_sweep(&g, 0.2, &[0.5], UseCase::Inertia, None, 2).unwrap();
    assert_eq!(s1.stubborn.len(), 8);
    assert_ne!(s1.stubborn, s2.stubborn);
}

#[test]
fn example3_memory_and_comparison_share_a_limit() {
    let e = example3(DEFAULT_SEED).unwrap();
    assert!((e.fjmm.last() - e.comparison.last()).amax() < 1e-6);
    assert!(e.fjmm_rho > e.comparison_rho);
    let r = e.result();
    let means = &r.tables[0].1;
    assert_eq!(means.rows.len(), e.fj.horizon() + 1);
    assert_eq!(r.file_names(), vec!["example3.csv", "example3_final.csv", "example3_summary.csv"]);
    let final_table = r.table("final").unwrap();
    assert_eq!(final_table.column("stubborn").unwrap().iter().filter(|s| **s == "true").count(), 4);
}

#[test]
fn inertia_sweep_loses_stability_at_full_memory() {
    let g = GraphSpec::WattsStrogatz {
        n: 60,
        k: 36,
        p_rewire: 0.7,
    };
    let s = heterogeneous_sweep(&g, 0.2, &[0.0, 0.5, 1.0], UseCase::Inertia, None, DEFAULT_SEED).unwrap();
    let end = s.points.last().unwrap();
    assert!(!end.stable);
    assert!((end.rho_augmented - 1.0).abs() < 1e-9 && (end.rho_comparison - 1.0).abs() < 1e-9);
    assert!(s.points[1].stable && s.points[1].rho_augmented < 1.0);
    assert!((s.points[0].rho_augmented - s.rho_fj).abs() < 1e-9);
}
