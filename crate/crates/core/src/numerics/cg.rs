use nalgebra::DVector;

/// Result of a conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: DVector<f64>,
    pub iterations: usize,
    /// Relative residual `‖A x − b‖ / ‖b‖` of the returned iterate.
    pub residual: f64,
    pub converged: bool,
}

/// Conjugate gradient for a symmetric positive definite operator given only
/// as a matrix-vector product `apply(v, out)` writing `A v` into `out`.
///
/// Starts from zero and stops once the relative residual drops to `tol` or
/// after `maxiter` iterations. Non-convergence is reported, not raised; the
/// iterate with the smallest residual seen is returned.
pub fn solve_cg<F>(apply: F, b: &DVector<f64>, tol: f64, maxiter: usize) -> CgOutcome
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
{
    let n = b.len();
    let b_norm = b.norm();
    let mut x = DVector::zeros(n);
    if b_norm == 0.0 {
        return CgOutcome {
            solution: x,
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }

    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = DVector::zeros(n);
    let mut rr = r.norm_squared();
    let mut best = (x.clone(), 1.0);
    let mut iterations = 0;

    while iterations < maxiter {
        apply(&p, &mut ap);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            // operator not positive definite along p (or breakdown)
            break;
        }
        let step = rr / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        iterations += 1;

        let rr_next = r.norm_squared();
        let rel = rr_next.sqrt() / b_norm;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel <= tol {
            return CgOutcome {
                solution: x,
                iterations,
                residual: rel,
                converged: true,
            };
        }
        p *= rr_next / rr;
        p += &r;
        rr = rr_next;
    }

    CgOutcome {
        solution: best.0,
        iterations,
        residual: best.1,
        converged: false,
    }
}
