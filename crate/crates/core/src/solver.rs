//! Conjugate-gradient solver written purely against the abstract
//! row-matrix surface.
//!
//! The solver touches only suffix-64 queries, the apply operation and the
//! dense vector kernels, so one body serves both index widths and every
//! compilation mode. The reported residual is recomputed from scratch after
//! the iteration, never taken from the recurrence.

use crate::error::{Error, Result};
use crate::multivector::MultiVector;
use crate::row_matrix::RowMatrix;

/// Preconditioner applied inside [`cg_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    /// Diagonal scaling; requires a nonzero diagonal.
    Jacobi,
}

/// Outcome of a solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: i32,
    /// `||b - A x||_2 / ||b||_2`, recomputed after the loop.
    pub final_relative_residual: f64,
}

/// Preconditioned conjugate gradients for symmetric positive definite
/// systems. `x` carries the initial guess in and the solution out.
/// Collective.
pub fn cg_solve(
    a: &dyn RowMatrix,
    b: &MultiVector,
    x: &mut MultiVector,
    tol: f64,
    max_iters: i32,
    preconditioner: Preconditioner,
) -> Result<SolveReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Contract(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if max_iters < 0 {
        return Err(Error::Contract(format!(
            "iteration limit must be nonnegative, got {max_iters}"
        )));
    }
    if !a.filled() {
        return Err(Error::Lifecycle("solving requires a fill-completed matrix".into()));
    }
    if !a.width_state().matches(b.map().width_state())
        || !a.width_state().matches(x.map().width_state())
    {
        return Err(Error::WidthMix(format!(
            "matrix is {}, b is {}, x is {}",
            a.width_state(),
            b.map().width_state(),
            x.map().width_state()
        )));
    }
    if b.num_vectors() != 1 || x.num_vectors() != 1 {
        return Err(Error::Contract(
            "the solver operates on single-column vectors".into(),
        ));
    }

    let diagonal = match preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let mut d = MultiVector::new(b.map(), 1)?;
            a.extract_diagonal_copy(&mut d)?;
            if d.column(0).contains(&0.0) {
                return Err(Error::Contract(
                    "the Jacobi preconditioner requires a nonzero diagonal".into(),
                ));
            }
            Some(d)
        }
    };
    let apply_precond = |z: &mut MultiVector, r: &MultiVector| {
        match &diagonal {
            Some(d) => {
                let rs = r.column(0);
                let ds = d.column(0);
                for (i, slot) in z.column_mut(0).iter_mut().enumerate() {
                    *slot = rs[i] / ds[i];
                }
            }
            None => z.column_mut(0).copy_from_slice(r.column(0)),
        }
    };

    let norm_b = b.norm2()?[0];
    let scale = if norm_b > 0.0 { norm_b } else { 1.0 };

    // r = b - A x
    let mut r = MultiVector::new(b.map(), 1)?;
    a.multiply(x, &mut r)?;
    r.update(1.0, b, -1.0)?;

    let mut iterations = 0;
    let mut recurrence_norm = r.norm2()?[0];
    if recurrence_norm / scale > tol {
        let mut z = MultiVector::new(b.map(), 1)?;
        apply_precond(&mut z, &r);
        let mut p = z.clone();
        let mut q = MultiVector::new(b.map(), 1)?;
        let mut rho = r.dot(&z)?[0];

        while iterations < max_iters {
            a.multiply(&p, &mut q)?;
            let pq = p.dot(&q)?[0];
            if pq == 0.0 {
                break;
            }
            let alpha = rho / pq;
            x.update(alpha, &p, 1.0)?;
            r.update(-alpha, &q, 1.0)?;
            iterations += 1;

            recurrence_norm = r.norm2()?[0];
            if recurrence_norm / scale <= tol {
                break;
            }

            apply_precond(&mut z, &r);
            let rho_next = r.dot(&z)?[0];
            let beta = rho_next / rho;
            rho = rho_next;
            p.update(1.0, &z, beta)?;
        }
    }

    // Recompute the residual honestly before reporting.
    let mut residual = MultiVector::new(b.map(), 1)?;
    a.multiply(x, &mut residual)?;
    residual.update(1.0, b, -1.0)?;
    let final_relative_residual = residual.norm2()?[0] / scale;

    Ok(SolveReport {
        converged: final_relative_residual <= tol * (1.0 + 1e-12),
        iterations,
        final_relative_residual,
    })
}
