//! Damped Newton iteration with backtracking line search and a direct
//! sparse LU solve.

use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use faer::prelude::Solve;

use crate::assembly::{
    apply_dirichlet, assemble_residual, assemble_tangent, zero_constrained, BoundaryConditions,
    Constraints, SparseMatrix,
};
use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::fespace::{FeSpace, NodalField};

/// Optional body force `f(x)`.
pub type BodyForce<'a> = Option<&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Absolute tolerance on the constrained residual norm.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub alpha_bar: f64,
    pub line_search_factor: f64,
    pub max_line_search: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-8,
            max_newton: 50,
            alpha_bar: 1.0,
            line_search_factor: 0.5,
            max_line_search: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| {
            Err(Error::Validation {
                field: field.into(),
                message: message.into(),
            })
        };
        if !(self.newton_tol >= 0.0) || !self.newton_tol.is_finite() {
            return bad("newton_tol", "must be a finite non-negative number");
        }
        if self.max_newton == 0 {
            return bad("max_newton", "must be positive");
        }
        if !(self.alpha_bar > 0.0 && self.alpha_bar <= 1.0) {
            return bad("alpha_bar", "must lie in (0, 1]");
        }
        if !(self.line_search_factor > 0.0 && self.line_search_factor < 1.0) {
            return bad("line_search_factor", "must lie in (0, 1)");
        }
        if self.max_line_search == 0 {
            return bad("max_line_search", "must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    /// Number of Newton updates performed.
    pub iterations: usize,
    /// Residual norm of the initial guess and after every update.
    pub residual_history: Vec<f64>,
    pub alpha_history: Vec<f64>,
    /// Factor applied to the linear guess to keep the density factor
    /// positive; 1 unless the linear solution itself is inadmissible.
    pub initial_scale: f64,
    pub solution: NodalField,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history is never empty")
    }

    /// One `iteration residual alpha` line per update, preceded by the
    /// initial residual.
    pub fn write_log(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "# iteration residual alpha")?;
        writeln!(out, "0 {:.16e} -", self.residual_history[0])?;
        for (k, alpha) in self.alpha_history.iter().enumerate() {
            writeln!(out, "{} {:.16e} {alpha}", k + 1, self.residual_history[k + 1])?;
        }
        Ok(())
    }
}

/// Everything defining one boundary-value problem.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub space: &'a FeSpace,
    pub params: &'a MaterialParams,
    pub bcs: &'a BoundaryConditions,
    pub body: BodyForce<'a>,
}

impl<'a> Problem<'a> {
    pub fn new(space: &'a FeSpace, params: &'a MaterialParams, bcs: &'a BoundaryConditions) -> Self {
        Problem {
            space,
            params,
            bcs,
            body: None,
        }
    }

    pub fn with_body_force(mut self, body: &'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)) -> Self {
        self.body = Some(body);
        self
    }

    fn residual(&self, u: &NodalField, params: &MaterialParams) -> Result<Vec<f64>> {
        let body = self.body.map(|b| b as &dyn Fn([f64; 2]) -> [f64; 2]);
        assemble_residual(self.space, u, params, self.bcs, body)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct sparse LU solve of `A x = b`.
///
/// A rank-deficient matrix is reported as [`Error::SingularMatrix`], detected
/// by a non-finite or inaccurate solution or by failing to recover a known
/// vector from its image.
pub fn solve_linear_system(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n_rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let triplets: Vec<Triplet<usize, usize, f64>> =
        a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|_| Error::SingularMatrix)?;
    let lu = mat.sp_lu().map_err(|_| Error::SingularMatrix)?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let x = lu.solve(Col::<f64>::from_fn(n, |i| rhs[i]));
        (0..n).map(|i| x[i]).collect()
    };

    let x = solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    let ax = a.matvec(&x);
    let res = norm(&ax.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>());
    if res > 1e-10 * (a.norm() * norm(&x) + norm(b)) {
        return Err(Error::SingularMatrix);
    }
    // a nearly singular factorization cannot reproduce a generic vector
    let z: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let y = solve(&a.matvec(&z));
    let diff = norm(&y.iter().zip(&z).map(|(p, q)| p - q).collect::<Vec<_>>());
    if !(diff <= 1e-6 * norm(&z)) {
        return Err(Error::SingularMatrix);
    }
    Ok(x)
}

/// Solution of the `β = 0` problem with the full Dirichlet data imposed.
pub fn initial_guess(problem: &Problem) -> Result<NodalField> {
    let space = problem.space;
    let linear = problem.params.with_beta(0.0)?;
    let zero = NodalField::zeros(space);
    let mut a = assemble_tangent(space, &zero, &linear)?;
    let mut r = problem.residual(&zero, &linear)?;
    let constraints = problem.bcs.constraints(space)?;
    apply_dirichlet(&mut a, &mut r, &constraints);
    let mut x = solve_linear_system(&a, &r)?;
    for (&dof, &v) in &constraints {
        x[dof] = v;
    }
    NodalField::from_dofs(space, x)
}

/// The linear guess, pulled back toward the Dirichlet lift by factors
/// `1, ρ, ρ², …` while the nonlinear stress is undefined there. Returns
/// the guess and the factor used.
pub fn admissible_guess(problem: &Problem, config: &SolverConfig) -> Result<(NodalField, f64)> {
    let linear = initial_guess(problem)?;
    let mut lift = NodalField::zeros(problem.space);
    for (&dof, &v) in &problem.bcs.constraints(problem.space)? {
        lift.as_mut_slice()[dof] = v;
    }
    let mut scale = 1.0;
    let mut last_err = None;
    for _ in 0..=config.max_line_search {
        let v: Vec<f64> = lift
            .as_slice()
            .iter()
            .zip(linear.as_slice())
            .map(|(l, u)| l + scale * (u - l))
            .collect();
        let u = NodalField::from_dofs(problem.space, v)?;
        match problem.residual(&u, problem.params) {
            Ok(_) => return Ok((u, scale)),
            Err(e @ Error::SingularDensityFactor { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        scale *= config.line_search_factor;
    }
    Err(last_err.expect("at least one trial"))
}

/// Norm of the residual with constrained entries removed.
pub fn residual_norm(problem: &Problem, u: &NodalField, constraints: &Constraints) -> Result<f64> {
    let mut r = problem.residual(u, problem.params)?;
    zero_constrained(&mut r, constraints);
    Ok(norm(&r))
}

/// Backtracking over `α = ᾱ, ᾱρ, ᾱρ², …`. Returns the first step whose merit
/// is below `merit0`, else the trial with the smallest merit, together with
/// that merit. Trials where `merit` fails with a singular density factor
/// count as infinitely bad.
pub fn line_search(
    merit0: f64,
    mut merit: impl FnMut(f64) -> Result<f64>,
    config: &SolverConfig,
) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    let mut alpha = config.alpha_bar;
    for _ in 0..config.max_line_search {
        match merit(alpha) {
            Ok(m) => {
                if m < merit0 {
                    return Ok((alpha, m));
                }
                if best.is_none_or(|(_, b)| m < b) {
                    best = Some((alpha, m));
                }
            }
            Err(e @ Error::SingularDensityFactor { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
        alpha *= config.line_search_factor;
    }
    match (best, last_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => unreachable!("at least one line-search trial"),
    }
}

/// Newton iteration from the linear initial guess. At least one update is
/// always taken. Non-convergence is reported in the returned report rather
/// than as an error; see [`SolveReport::converged`].
pub fn newton_solve(problem: &Problem, config: &SolverConfig) -> Result<SolveReport> {
    newton_solve_logged(problem, config, |_, _, _| {})
}

/// [`newton_solve`] with a callback `(iteration, residual, alpha)` after each
/// update.
pub fn newton_solve_logged(
    problem: &Problem,
    config: &SolverConfig,
    mut log: impl FnMut(usize, f64, f64),
) -> Result<SolveReport> {
    config.validate()?;
    let space = problem.space;
    let params = problem.params;
    let homogeneous = problem.bcs.homogeneous_constraints(space)?;

    let (mut u, initial_scale) = admissible_guess(problem, config)?;
    let mut residual = problem.residual(&u, params)?;
    zero_constrained(&mut residual, &homogeneous);
    let mut r_norm = norm(&residual);
    let mut residual_history = vec![r_norm];
    let mut alpha_history = Vec::new();

    while alpha_history.is_empty() || (r_norm > config.newton_tol && alpha_history.len() < config.max_newton) {
        let mut a = assemble_tangent(space, &u, params)?;
        let mut rhs = residual.clone();
        apply_dirichlet(&mut a, &mut rhs, &homogeneous);
        let mut delta = solve_linear_system(&a, &rhs)?;
        for &dof in homogeneous.keys() {
            delta[dof] = 0.0;
        }

        let trial = |alpha: f64| -> Result<NodalField> {
            let v: Vec<f64> = u.as_slice().iter().zip(&delta).map(|(x, d)| x + alpha * d).collect();
            NodalField::from_dofs(space, v)
        };
        let (alpha, merit) = line_search(
            r_norm,
            |alpha| residual_norm(problem, &trial(alpha)?, &homogeneous),
            config,
        )?;
        u = trial(alpha)?;
        residual = problem.residual(&u, params)?;
        zero_constrained(&mut residual, &homogeneous);
        r_norm = norm(&residual);
        debug_assert_eq!(r_norm, merit);
        residual_history.push(r_norm);
        alpha_history.push(alpha);
        log(alpha_history.len(), r_norm, alpha);
    }

    Ok(SolveReport {
        converged: r_norm <= config.newton_tol,
        iterations: alpha_history.len(),
        residual_history,
        alpha_history,
        initial_scale,
        solution: u,
    })
}

/// Like [`newton_solve`], but non-convergence is an error.
pub fn newton_solve_strict(problem: &Problem, config: &SolverConfig) -> Result<SolveReport> {
    let report = newton_solve(problem, config)?;
    if report.converged {
        Ok(report)
    } else {
        Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.final_residual(),
        })
    }
}
