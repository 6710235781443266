//! Manufactured-solution convergence study and consistency checks of the
//! material tangent.

use std::f64::consts::PI;
use std::io::Write;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::assembly::BoundaryConditions;
use crate::constitutive::{strain, Grad2, MaterialParams, SymTensor2};
use crate::error::{Error, Result};
use crate::fespace::{FeSpace, NodalField, QuadratureRule};
use crate::mesh::{BoundaryTag, Mesh};
use crate::solver::{newton_solve_strict, Problem, SolverConfig};

/// `u = (sin(πx/2), −cos(πy/2))`.
pub fn exact_displacement(p: [f64; 2]) -> [f64; 2] {
    [(PI * p[0] / 2.0).sin(), -(PI * p[1] / 2.0).cos()]
}

/// Strain of the exact displacement; it is diagonal.
pub fn exact_strain(p: [f64; 2]) -> SymTensor2 {
    let a = 0.5 * PI * (0.5 * PI * p[0]).cos();
    let b = 0.5 * PI * (0.5 * PI * p[1]).sin();
    SymTensor2::new(a, b, 0.0)
}

/// Body force `f = −∇·T(ε(u_exact))` balancing the exact displacement.
pub fn manufactured_body_force(params: &MaterialParams) -> impl Fn([f64; 2]) -> [f64; 2] + Send + Sync {
    let (c1, c2, beta) = (params.c1(), params.c2(), params.beta());
    move |p| {
        let eps = exact_strain(p);
        let (a, b) = (eps.xx, eps.yy);
        // a depends on x only, b on y only
        let da = -0.25 * PI * PI * (0.5 * PI * p[0]).sin();
        let db = 0.25 * PI * PI * (0.5 * PI * p[1]).cos();
        let d = 1.0 + beta * (a + b);
        let dtxx_dx = ((c1 + c2) * da * d - (c1 * a + c2 * (a + b)) * beta * da) / (d * d);
        let dtyy_dy = ((c1 + c2) * db * d - (c1 * b + c2 * (a + b)) * beta * db) / (d * d);
        [-dtxx_dx, -dtyy_dy]
    }
}

/// `‖u_h − u‖_{L²}` with 3×3 Gauss per cell.
pub fn l2_error(space: &FeSpace, u_h: &NodalField, exact: impl Fn([f64; 2]) -> [f64; 2]) -> Result<f64> {
    let rule = QuadratureRule::gauss(3);
    let mut sum = 0.0;
    for cell in 0..space.mesh().n_cells() {
        for qp in space.quad_points(cell, &rule)? {
            let uh = u_h.value(space, cell, &qp);
            let ue = exact(qp.x);
            sum += qp.jxw * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
        }
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub cycle: usize,
    pub h: f64,
    pub l2_error: f64,
    /// `log₂(e_{k−1}/e_k)`; absent for the first cycle.
    pub rate: Option<f64>,
}

/// Material of the convergence study: `E = 100`, `ν = 0.1`, `β = 1`.
pub fn convergence_material() -> MaterialParams {
    MaterialParams::new(100.0, 0.1, 1.0).expect("valid constants")
}

/// Error of one manufactured-solution solve on the mesh with `level`
/// refinements.
pub fn manufactured_error(level: u32, params: &MaterialParams, config: &SolverConfig) -> Result<f64> {
    let space = FeSpace::new(Mesh::unit_square(level)?);
    let mut bcs = BoundaryConditions::new();
    for tag in [BoundaryTag::Bottom, BoundaryTag::Right, BoundaryTag::Top, BoundaryTag::Left] {
        bcs = bcs.prescribed(tag, exact_displacement);
    }
    let body = manufactured_body_force(params);
    let problem = Problem::new(&space, params, &bcs).with_body_force(&body);
    let report = newton_solve_strict(&problem, config)?;
    l2_error(&space, &report.solution, exact_displacement)
}

/// Cycles `1..=cycles` on meshes with `h = 2^{-cycle}`, solved concurrently.
pub fn convergence_study(cycles: usize, params: &MaterialParams, config: &SolverConfig) -> Result<Vec<ConvergenceRow>> {
    let errors: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=cycles)
            .map(|k| s.spawn(move || manufactured_error(k as u32, params, config)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("cycle thread panicked")).collect()
    });
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cycles);
    for (k, e) in errors.into_iter().enumerate() {
        let e = e?;
        let rate = rows.last().map(|prev| (prev.l2_error / e).log2());
        rows.push(ConvergenceRow {
            cycle: k + 1,
            h: 0.5f64.powi(k as i32 + 1),
            l2_error: e,
            rate,
        });
    }
    Ok(rows)
}

/// CSV `cycle,h,l2_error,rate`; the first rate is empty.
pub fn write_convergence_csv(rows: &[ConvergenceRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "cycle,h,l2_error,rate")?;
    for r in rows {
        let rate = r.rate.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(out, "{},{:.16e},{:.16e},{rate}", r.cycle, r.h, r.l2_error)?;
    }
    Ok(())
}

/// Step sizes of the finite-difference check.
pub const FD_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub trials: usize,
    /// Largest relative deviation per step size over all trials.
    pub max_deviation: [f64; 3],
    /// Smallest least-squares slope of log deviation against log h.
    pub min_order: f64,
}

/// Compare `tangent_apply` with central differences of `cauchy_stress`
/// at random strain states with components in ±1e−3 along random unit
/// directions. States violating `|β tr ε| ≤ 0.5` are redrawn.
pub fn tangent_fd_check(params: &MaterialParams, trials: usize, seed: u64) -> Result<FdReport> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut max_deviation = [0.0f64; 3];
    let mut min_order = f64::INFINITY;
    let mut done = 0;
    while done < trials {
        let eps = SymTensor2::new(
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-3..1e-3),
            rng.random_range(-1e-3..1e-3),
        );
        if (params.beta() * eps.trace()).abs() > 0.5 {
            continue;
        }
        let mut g: Grad2 = [[0.0; 2]; 2];
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let scale = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let g = g.map(|row| row.map(|v| v / scale));
        let dir = strain(&g);

        let exact = params.tangent_apply(&eps, &g)?;
        let mut dev = [0.0; 3];
        for (k, h) in FD_STEPS.iter().enumerate() {
            let plus = params.cauchy_stress(&(eps + *h * dir))?;
            let minus = params.cauchy_stress(&(eps - *h * dir))?;
            let fd = (0.5 / h) * (plus - minus);
            dev[k] = (fd - exact).norm() / exact.norm();
            max_deviation[k] = max_deviation[k].max(dev[k]);
        }
        if params.beta() != 0.0 {
            let xs = FD_STEPS.map(f64::log10);
            let ys = dev.map(|d| d.max(f64::MIN_POSITIVE).log10());
            let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
            let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            min_order = min_order.min(num / den);
        }
        done += 1;
    }
    if trials == 0 {
        return Err(Error::Validation {
            field: "trials".into(),
            message: "at least one trial required".into(),
        });
    }
    Ok(FdReport {
        trials,
        max_deviation,
        min_order,
    })
}
