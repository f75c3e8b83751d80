use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fjmm::experiments::{run_named, RunParameters, EXPERIMENT_NAMES};
use fjmm::io::{write_edge_list, write_matrix_csv};
use fjmm::metrics::ConvergenceTime;
use fjmm::netgen::{row_stochastic, GraphSpec};
use fjmm::{
    convergence_time, equilibrium, polarization_index, simulate as run_simulation, stability_report,
    InitialCondition, SimulationOptions,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, EXIT_OK, EXIT_UNSTABLE};

pub const DEFAULT_HORIZON: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-6;

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn gen_graph(cfg: &RunConfig, matrix: bool) -> Result<u8, CliError> {
    let g = cfg.build_graph()?;
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    if matrix {
        write_matrix_csv(row_stochastic(&g)?.matrix(), &mut out)?;
    } else {
        write_edge_list(&g, &mut out)?;
    }
    out.flush()?;
    if let Some(path) = &cfg.out {
        println!(
            "{} nodes, {} edges -> {}",
            g.n(),
            g.edge_count(),
            path.display()
        );
    }
    Ok(EXIT_OK)
}

pub fn simulate(cfg: &RunConfig, want_equilibrium: bool) -> Result<u8, CliError> {
    let model = cfg.build_model()?;
    let report = stability_report(&model)?;
    if want_equilibrium && !report.stable {
        return Err(CliError::Unstable(Box::new(report)));
    }
    let horizon = cfg.horizon.unwrap_or(DEFAULT_HORIZON);
    let opts = match cfg.tol {
        Some(tol) => SimulationOptions::until(tol, horizon),
        None => SimulationOptions::horizon(horizon),
    };
    let traj = run_simulation(&model, &InitialCondition::Innate, opts)?;

    let dir = out_dir(cfg);
    fs::create_dir_all(&dir)?;
    let mut w = create(&dir.join("trajectory.csv"))?;
    traj.write_csv(&mut w)?;
    w.flush()?;

    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let mut summary = json!({
        "n": model.n(),
        "depth": model.depth(),
        "horizon": traj.horizon(),
        "stop": traj.stop_reason(),
        "final_state": traj.last().as_slice(),
        "stability": report,
    });
    let mut line = format!(
        "n={} L={} steps={} stable={} rho_augmented={:.6}",
        model.n(),
        model.depth(),
        traj.horizon(),
        report.stable,
        report.rho_augmented
    );
    if want_equilibrium {
        let x = equilibrium(&model)?;
        let p = polarization_index(&x);
        let t = convergence_time(&traj, &x, tol);
        summary["equilibrium"] = json!(x.as_slice());
        summary["polarization"] = json!(p.index);
        summary["convergence_tol"] = json!(tol);
        summary["convergence_time"] = json!(t);
        line.push_str(&format!(" P={:.6}", p.index));
        match t {
            ConvergenceTime::Converged { steps } => line.push_str(&format!(" converged_in={steps}")),
            ConvergenceTime::NotConverged { final_error } => {
                line.push_str(&format!(" not_converged(error={final_error:.3e})"))
            }
        }
    }
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    println!("{line}");
    println!("wrote {}", dir.display());
    Ok(EXIT_OK)
}

pub fn stability(cfg: &RunConfig) -> Result<u8, CliError> {
    let model = cfg.build_model()?;
    let report = stability_report(&model)?;
    println!("{}", report.to_json());
    Ok(if report.stable { EXIT_OK } else { EXIT_UNSTABLE })
}

pub fn experiment(name: &str, cfg: &RunConfig) -> Result<u8, CliError> {
    let names: Vec<&str> = if name == "all" {
        EXPERIMENT_NAMES.to_vec()
    } else if EXPERIMENT_NAMES.contains(&name) {
        vec![name]
    } else {
        return Err(CliError::Input(format!(
            "unknown experiment `{name}`; valid names: {}, all",
            EXPERIMENT_NAMES.join(", ")
        )));
    };
    let graph = cfg
        .graph
        .as_deref()
        .map(|g| g.parse::<GraphSpec>())
        .transpose()?;
    let params = RunParameters {
        seed: cfg.seed,
        grid: cfg.grid.clone(),
        sigma: cfg.sigma,
        use_case: cfg.use_case()?,
        blend: cfg.blend()?,
        graph,
        stubborn_fraction: cfg.stubborn_fraction,
    };
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    for n in names {
        let result = run_named(n, &params)?;
        let written = result.write(&dir)?;
        println!("{n}: {} files in {}", written.len(), dir.display());
    }
    Ok(EXIT_OK)
}
