//! Execute a configuration: one solve per β, each writing to its own
//! `beta_<value>` directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{ProfileKind, RunConfig};
use crate::error::{Error, Result};
use crate::fespace::{FeSpace, NodalField};
use crate::postproc::{
    cell_averages, displacement_profile, field_extrema, line_profile, sif_profile, CellField,
    LineProfile, Quantity,
};
use crate::solver::{newton_solve_logged, Problem, SolveReport};
use crate::vtk::write_vtk;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub beta: f64,
    pub dir: PathBuf,
    pub iterations: usize,
    pub final_residual: f64,
    /// `(quantity, max, min)` over cells.
    pub extrema: Vec<(Quantity, f64, f64)>,
}

/// Everything derived from one converged solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub space: FeSpace,
    pub report: SolveReport,
    pub fields: Vec<CellField>,
    pub profiles: Vec<(ProfileKind, LineProfile)>,
}

pub fn beta_dir_name(beta: f64) -> String {
    format!("beta_{beta}")
}

/// Solve and post-process the configuration for one β without writing
/// files. `log` receives `(iteration, residual, alpha)`.
pub fn solve_beta(config: &RunConfig, beta: f64, log: impl FnMut(usize, f64, f64)) -> Result<Solution> {
    let space = FeSpace::new(config.mesh()?);
    let params = config.material(beta)?;
    let bcs = config.boundary_conditions();
    bcs.validate(space.mesh())?;
    let report = newton_solve_logged(&Problem::new(&space, &params, &bcs), &config.solver, log)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.final_residual(),
        });
    }
    let mut wanted = config.fields.clone();
    for p in &config.profiles {
        match p {
            ProfileKind::Sif(mode) => wanted.push(mode.stress()),
            ProfileKind::Cell(q) => wanted.push(*q),
            ProfileKind::Displacement(_) => {}
        }
    }
    wanted.sort();
    wanted.dedup();
    let all = cell_averages(&space, &report.solution, &params, &wanted)?;
    let field = |q: Quantity| all.iter().find(|f| f.quantity == q).expect("requested above");

    let mut profiles = Vec::new();
    for &kind in &config.profiles {
        let profile = match kind {
            ProfileKind::Sif(mode) => {
                let tip = space.mesh().crack().expect("validated: crack present").tip_x;
                sif_profile(&line_profile(space.mesh(), field(mode.stress()), config.line)?, tip)
            }
            ProfileKind::Cell(q) => line_profile(space.mesh(), field(q), config.line)?,
            ProfileKind::Displacement(c) => displacement_profile(&space, &report.solution, config.line, c)?,
        };
        profiles.push((kind, profile));
    }
    let fields = config.fields.iter().map(|&q| field(q).clone()).collect();
    Ok(Solution {
        space,
        report,
        fields,
        profiles,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_outputs(dir: &Path, solution: &Solution) -> Result<()> {
    write_vtk(
        solution.space.mesh(),
        &solution.fields,
        Some(&solution.report.solution),
        create(&dir.join("fields.vtk"))?,
    )?;
    let mut ext = create(&dir.join("extrema.csv"))?;
    writeln!(ext, "quantity,max,min")?;
    for f in &solution.fields {
        let (hi, lo) = field_extrema(f);
        writeln!(ext, "{},{hi:.16e},{lo:.16e}", f.quantity)?;
    }
    ext.flush()?;
    for (kind, profile) in &solution.profiles {
        let mut w = create(&dir.join(format!("{}.csv", kind.name())))?;
        profile.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut log = create(&dir.join("newton.log"))?;
    solution.report.write_log(&mut log)?;
    log.flush()?;
    Ok(())
}

/// Solve for one β and write its outputs under `config.out_dir`. The
/// directory is removed again if anything fails.
pub fn run_beta(config: &RunConfig, beta: f64, log: impl FnMut(usize, f64, f64)) -> Result<RunOutcome> {
    let dir = config.out_dir.join(beta_dir_name(beta));
    fs::create_dir_all(&dir)?;
    let result = solve_beta(config, beta, log).and_then(|s| write_outputs(&dir, &s).map(|_| s));
    match result {
        Ok(solution) => Ok(RunOutcome {
            beta,
            iterations: solution.report.iterations,
            final_residual: solution.report.final_residual(),
            extrema: solution
                .fields
                .iter()
                .map(|f| {
                    let (hi, lo) = field_extrema(f);
                    (f.quantity, hi, lo)
                })
                .collect(),
            dir,
        }),
        Err(e) => {
            let _ = fs::remove_dir_all(&dir);
            Err(e)
        }
    }
}

/// Run every β of the configuration, sequentially or on one thread each.
/// Results come back in the configured β order.
pub fn run_all(config: &RunConfig, concurrent: bool) -> Vec<(f64, Result<RunOutcome>)> {
    let logger = |beta: f64| {
        move |k: usize, r: f64, a: f64| eprintln!("beta {beta}: iteration {k} residual {r:.6e} alpha {a}")
    };
    if concurrent {
        std::thread::scope(|s| {
            let handles: Vec<_> = config
                .betas
                .iter()
                .map(|&beta| s.spawn(move || (beta, run_beta(config, beta, logger(beta)))))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect()
        })
    } else {
        config
            .betas
            .iter()
            .map(|&beta| (beta, run_beta(config, beta, logger(beta))))
            .collect()
    }
}

/// Solve with the given β and return only the nodal solution.
pub fn solve_field(config: &RunConfig, beta: f64) -> Result<NodalField> {
    solve_beta(config, beta, |_, _, _| {}).map(|s| s.report.solution)
}
