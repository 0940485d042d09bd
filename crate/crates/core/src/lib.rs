//! Convergent iterative solution of the one-dimensional quartic double-well
//! problem `H = -d²/dx²/2 + (g²/2)(x²-1)²`.
//!
//! The library computes the two lowest eigenstates by iterating integral
//! equations built from explicit trial functions and their Green's
//! operators, evaluates the closed-form analytic bounds that control the
//! iteration, generates the exact asymptotic-series coefficients of the
//! ground energy, and cross-checks everything against an independent
//! finite-difference eigensolver.
//!
//! Entry points:
//! * [`iterate_even::solve_even`] — lowest even state,
//! * [`plus_odd::solve_plus`] / [`plus_odd::solve_odd`] — the intermediate
//!   Robin-boundary state and the lowest odd state,
//! * [`bounds::analytic_bounds`] / [`bounds::verify`] — bound evaluation and
//!   numeric verification,
//! * [`series::build_pyramid`] — exact series coefficients,
//! * [`oracle::fd_eigen`] / [`oracle::fd_robin`] — the reference solver.
//!
//! All solves are deterministic and free of shared mutable state; distinct
//! solves may run concurrently.

pub mod bounds;
pub mod error;
pub mod iterate_even;
pub mod logval;
pub mod model;
pub mod oracle;
pub mod plus_odd;
pub mod quadrature;
pub mod series;

pub use error::{Error, Result};
pub use model::ModelParams;

/// Adaptive Simpson quadrature used as an independent reference in tests.
#[cfg(test)]
pub(crate) fn support_adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + rec(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    rec(f, a, fa, b, fb, fm, whole, tol, 48)
}
