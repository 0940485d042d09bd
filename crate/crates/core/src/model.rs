//! Closed-form pieces of the double-well problem: the potential, the actions
//! entering the trial wavefunctions, the trial functions themselves, and the
//! potential-difference terms `u`, `g_hat`, `w`.
//!
//! Everything here is an analytic function of `(g, x)` on the half line
//! `x >= 0`; parity extends all of it to `x < 0`. Trial functions are kept in
//! log form because `phi(x)^-2` reaches `exp(4g/3)` near the origin and
//! products like `phi^-2(y) phi^2(z)` must be formed as exponentials of log
//! differences to stay finite at large coupling.

use crate::error::{Error, Result};
use serde::Serialize;

/// Coupling plus the full numerical policy for a solve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModelParams {
    /// Dimensionless coupling of the quartic well `V = (g^2/2)(x^2-1)^2`.
    pub g: f64,
    /// Half-line cutoff: integrals over `[0, inf)` are truncated here.
    pub x_max: f64,
    /// Grid density knob; the default 2000 gives ~256*g cells per unit
    /// length on the fine segment. Doubling it halves every spacing.
    pub n_cells: usize,
    /// Convergence tolerance on the iterated energy shift.
    pub tol_energy: f64,
    /// Sup-norm tolerance on successive iterates.
    pub tol_fn: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl ModelParams {
    /// Default cutoff: past `1 + sqrt(350/g)` the weight `exp(-2g*s0)` is
    /// below ~1e-304, so truncating the improper integrals there costs
    /// nothing at double precision. Clipped to `[4, 12]`.
    pub fn default_x_max(g: f64) -> f64 {
        (1.0 + (350.0 / g).sqrt()).clamp(4.0, 12.0)
    }

    pub fn new(g: f64) -> Result<Self> {
        let p = ModelParams {
            g,
            x_max: Self::default_x_max(g),
            n_cells: 2000,
            tol_energy: 1e-12 * g,
            tol_fn: 1e-10,
            max_iter: 200,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_n_cells(mut self, n_cells: usize) -> Result<Self> {
        self.n_cells = n_cells;
        self.validate()?;
        Ok(self)
    }

    pub fn with_x_max(mut self, x_max: f64) -> Result<Self> {
        self.x_max = x_max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.g <= 1.0 || !self.g.is_finite() {
            return Err(Error::InvalidParams(format!(
                "coupling g must be finite and > 1, got {}",
                self.g
            )));
        }
        if self.x_max <= 1.0 || !self.x_max.is_finite() {
            return Err(Error::InvalidParams(format!(
                "x_max must be > 1, got {}",
                self.x_max
            )));
        }
        if self.n_cells < 100 {
            return Err(Error::InvalidParams(format!(
                "n_cells must be >= 100, got {}",
                self.n_cells
            )));
        }
        if self.tol_energy <= 0.0
            || self.tol_energy.is_nan()
            || self.tol_fn <= 0.0
            || self.tol_fn.is_nan()
        {
            return Err(Error::InvalidParams(
                "tolerances must be positive".to_string(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be >= 1".to_string()));
        }
        Ok(())
    }

    /// Tunneling scale `exp(-4g/3)`; the even-odd splitting lives here.
    pub fn epsilon(&self) -> f64 {
        (-4.0 * self.g / 3.0).exp()
    }

    /// Below this coupling the convergence hypotheses are not proven; solves
    /// still run but carry a regime flag.
    pub const REGIME_G_MIN: f64 = 2.0;
}

/// Values of the actions and the potential at one point.
#[derive(Debug, Clone, Copy)]
pub struct Actions {
    pub s0: f64,
    pub s1: f64,
    pub potential: f64,
}

/// Values of the trial-function bundle at one point (log magnitudes).
#[derive(Debug, Clone, Copy)]
pub struct TrialValues {
    pub ln_phi_plus: f64,
    pub ln_phi_minus: f64,
    pub ln_phi: f64,
    pub u: f64,
    pub g_hat: f64,
    pub w: f64,
}

/// The trial-function bundle for a fixed coupling.
///
/// `phi_plus = exp(-g*s0 - s1)` solves the modified problem with shift `u`;
/// the even combination `phi` adds `((g-1)/(g+1)) * phi_minus` below `x = 1`
/// so that `phi'(0) = 0`, and is proportional to `phi_plus` above. Both the
/// function and its first derivative are continuous at `x = 1`.
#[derive(Debug, Clone, Copy)]
pub struct Trial {
    g: f64,
    /// mixing coefficient (g-1)/(g+1)
    c: f64,
}

/// `s0(x) = (1/3)(x-1)^2(x+2)`, the leading action per unit coupling.
pub fn s0(x: f64) -> f64 {
    (x - 1.0) * (x - 1.0) * (x + 2.0) / 3.0
}

/// `s0'(x) = x^2 - 1`.
pub fn s0_prime(x: f64) -> f64 {
    x * x - 1.0
}

/// `s1(x) = ln((x+1)/2)`, the subleading log factor.
pub fn s1(x: f64) -> f64 {
    ((x + 1.0) / 2.0).ln()
}

impl Trial {
    pub fn new(params: &ModelParams) -> Self {
        Trial {
            g: params.g,
            c: (params.g - 1.0) / (params.g + 1.0),
        }
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// Quartic double-well potential `(g^2/2)(x^2-1)^2`.
    pub fn potential(&self, x: f64) -> f64 {
        let d = x * x - 1.0;
        0.5 * self.g * self.g * d * d
    }

    pub fn ln_phi_plus(&self, x: f64) -> f64 {
        -self.g * s0(x) - s1(x)
    }

    pub fn ln_phi_minus(&self, x: f64) -> f64 {
        -4.0 * self.g / 3.0 + self.g * s0(x) - s1(x)
    }

    /// `2g*s0(x) - 4g/3`, the exponent of `phi_minus/phi_plus`; it is <= 0 on
    /// `[0, 1]` with equality at `x = 0`.
    fn ratio_exponent(&self, x: f64) -> f64 {
        2.0 * self.g * (s0(x) - 2.0 / 3.0)
    }

    /// Log of the even trial function. Assembled in log space: the inner
    /// branch is `ln_phi_plus + ln(1 + c*exp(2g*s0 - 4g/3))`, whose argument
    /// stays in `(1, 2)`, so no overflow can occur.
    pub fn ln_phi(&self, x: f64) -> f64 {
        if x < 1.0 {
            self.ln_phi_plus(x) + (self.c * self.ratio_exponent(x).exp()).ln_1p()
        } else {
            let eps = (-4.0 * self.g / 3.0).exp();
            (self.c * eps).ln_1p() + self.ln_phi_plus(x)
        }
    }

    /// `u(x) = (1+x)^-2`, the shift that makes `phi_plus` an exact eigenstate
    /// of the modified problem.
    pub fn u(&self, x: f64) -> f64 {
        1.0 / ((1.0 + x) * (1.0 + x))
    }

    /// Step-like part of the even shift; zero for `x >= 1`. The jump at
    /// `x = 1` has measure zero in every quadrature; using the outer branch
    /// at the node keeps `w(1) = 1/4` consistent with the tail inequalities.
    pub fn g_hat(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        let t = self.ratio_exponent(x).exp();
        2.0 * self.g * (self.g - 1.0) * t / ((self.g + 1.0) + (self.g - 1.0) * t)
    }

    /// `w = u + g_hat`, the full even shift.
    pub fn w(&self, x: f64) -> f64 {
        self.u(x) + self.g_hat(x)
    }

    /// Inner-branch limit of the step-like shift as `x` approaches 1.
    pub fn g_hat_inner_limit(&self) -> f64 {
        let t = (-4.0 * self.g / 3.0).exp();
        2.0 * self.g * (self.g - 1.0) * t / ((self.g + 1.0) + (self.g - 1.0) * t)
    }

    /// Sampling rule for `w` on a grid with a node at the jump: the node at
    /// `x = 1` carries the half-sum of the one-sided limits, which keeps the
    /// composite trapezoid second-order accurate across the discontinuity.
    pub fn w_for_grid(&self, x: f64) -> f64 {
        if x == 1.0 {
            self.u(x) + 0.5 * self.g_hat_inner_limit()
        } else {
            self.w(x)
        }
    }
}

/// Actions and potential at `x >= 0`.
pub fn eval_actions(params: &ModelParams, x: f64) -> Result<Actions> {
    check_half_line(x)?;
    let t = Trial::new(params);
    Ok(Actions {
        s0: s0(x),
        s1: s1(x),
        potential: t.potential(x),
    })
}

/// Trial-bundle values at `x >= 0`.
pub fn eval_trial(params: &ModelParams, x: f64) -> Result<TrialValues> {
    check_half_line(x)?;
    let t = Trial::new(params);
    Ok(TrialValues {
        ln_phi_plus: t.ln_phi_plus(x),
        ln_phi_minus: t.ln_phi_minus(x),
        ln_phi: t.ln_phi(x),
        u: t.u(x),
        g_hat: t.g_hat(x),
        w: t.w(x),
    })
}

/// `(u, g_hat, w)` at `x >= 0`.
pub fn eval_w(params: &ModelParams, x: f64) -> Result<(f64, f64, f64)> {
    check_half_line(x)?;
    let t = Trial::new(params);
    Ok((t.u(x), t.g_hat(x), t.w(x)))
}

fn check_half_line(x: f64) -> Result<()> {
    if x < 0.0 || !x.is_finite() {
        Err(Error::Domain(format!(
            "half-line formulas require x >= 0, got {x}; use parity for x < 0"
        )))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params(g: f64) -> ModelParams {
        ModelParams::new(g).unwrap()
    }

    #[test]
    fn actions_at_special_points() {
        let p = params(5.0);
        let a = eval_actions(&p, 1.0).unwrap();
        assert_eq!(a.s0, 0.0);
        assert_eq!(a.s1, 0.0);
        assert_eq!(a.potential, 0.0);

        let a0 = eval_actions(&p, 0.0).unwrap();
        assert_relative_eq!(a0.s0, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(a0.s1, 0.5f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(a0.potential, p.g * p.g / 2.0, max_relative = 1e-15);

        let a2 = eval_actions(&p, 2.0).unwrap();
        assert_relative_eq!(a2.s0, 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(a2.potential, 4.5 * p.g * p.g, max_relative = 1e-15);
    }

    #[test]
    fn negative_x_rejected() {
        let p = params(5.0);
        assert!(eval_actions(&p, -0.1).is_err());
        assert!(eval_trial(&p, -1e-9).is_err());
        assert!(eval_w(&p, -2.0).is_err());
    }

    #[test]
    fn trial_values_at_origin_and_one() {
        let p = params(7.0);
        let t0 = eval_trial(&p, 0.0).unwrap();
        // both pieces coincide at the origin, at the scale exp(-2g/3)
        assert_relative_eq!(t0.ln_phi_plus, t0.ln_phi_minus, max_relative = 1e-14);
        assert_relative_eq!(
            t0.ln_phi_plus,
            -2.0 * p.g / 3.0 + 2f64.ln(),
            max_relative = 1e-14
        );

        let t1 = eval_trial(&p, 1.0).unwrap();
        assert_abs_diff_eq!(t1.ln_phi_plus, 0.0, epsilon = 1e-15);
        assert_relative_eq!(t1.ln_phi_minus, -4.0 * p.g / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn phi_and_derivative_continuous_at_one() {
        let p = params(9.0);
        let t = Trial::new(&p);
        let h = 1e-6;
        let below = t.ln_phi(1.0 - h);
        let above = t.ln_phi(1.0 + h);
        let at = t.ln_phi(1.0);
        assert_abs_diff_eq!(below, at, epsilon = 1e-4);
        assert_abs_diff_eq!(above, at, epsilon = 1e-4);
        // one-sided log derivatives agree
        let d_below = (at - t.ln_phi(1.0 - 2.0 * h)) / (2.0 * h);
        let d_above = (t.ln_phi(1.0 + 2.0 * h) - at) / (2.0 * h);
        assert_abs_diff_eq!(d_below, d_above, epsilon = 1e-3);
    }

    #[test]
    fn phi_derivative_vanishes_at_origin() {
        let p = params(6.0);
        let t = Trial::new(&p);
        let h = 1e-5;
        // central difference of ln phi around 0 using parity: phi(-h) = phi(h)
        let d = (t.ln_phi(h) - t.ln_phi(h)) / (2.0 * h);
        assert_eq!(d, 0.0);
        // also the one-sided slope must vanish like O(h)
        let slope = (t.ln_phi(h) - t.ln_phi(0.0)) / h;
        assert!(slope.abs() < 1e-3 * p.g, "slope at origin = {slope}");
    }

    #[test]
    fn w_values() {
        let p = params(4.0);
        let (u1, gh1, w1) = eval_w(&p, 1.0).unwrap();
        assert_eq!(gh1, 0.0);
        assert_relative_eq!(u1, 0.25, max_relative = 1e-15);
        assert_relative_eq!(w1, 0.25, max_relative = 1e-15);

        let (u0, gh0, w0) = eval_w(&p, 0.0).unwrap();
        assert_relative_eq!(u0, 1.0, max_relative = 1e-15);
        assert_relative_eq!(gh0, p.g - 1.0, max_relative = 1e-13);
        assert_relative_eq!(w0, p.g, max_relative = 1e-13);

        let (_, gh3, w3) = eval_w(&p, 3.0).unwrap();
        assert_eq!(gh3, 0.0);
        assert_relative_eq!(w3, 1.0 / 16.0, max_relative = 1e-15);
    }

    #[test]
    fn w_decreasing_inside_well() {
        let p = params(5.0);
        let t = Trial::new(&p);
        let n = 400;
        for i in 1..n {
            let x = i as f64 / n as f64;
            let h = 1e-6;
            let d = (t.w(x + h) - t.w(x - h)) / (2.0 * h);
            assert!(d < 0.0, "w'({x}) = {d} not negative");
        }
    }

    #[test]
    fn g_hat_positive_and_bounded() {
        for g in [2.0, 5.0, 20.0] {
            let p = params(g);
            let t = Trial::new(&p);
            let cap = 2.0 * g * (g - 1.0) / (g + 1.0);
            let mut prev = f64::INFINITY;
            for i in 0..100 {
                let x = i as f64 / 100.0;
                let gh = t.g_hat(x);
                assert!(gh > 0.0, "g_hat({x}) not positive at g={g}");
                assert!(gh <= cap + 1e-12, "g_hat({x}) above cap at g={g}");
                assert!(gh <= prev + 1e-12, "g_hat not maximal at origin");
                prev = gh;
            }
            // the maximum sits at the origin, where the value is g-1
            assert_relative_eq!(t.g_hat(0.0), g - 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn w_grid_sampling_straddles_the_jump() {
        let p = params(6.0);
        let t = Trial::new(&p);
        let mid = t.w_for_grid(1.0);
        assert!(mid > t.w(1.0) && mid < t.w(1.0 - 1e-9));
        assert_relative_eq!(
            mid,
            0.25 + 0.5 * t.g_hat_inner_limit(),
            max_relative = 1e-15
        );
        assert_eq!(t.w_for_grid(0.5), t.w(0.5));
    }

    #[test]
    fn log_form_matches_direct_evaluation() {
        // wherever the direct product representation does not underflow
        for g in [2.0, 5.0, 10.0] {
            let p = params(g);
            let t = Trial::new(&p);
            let c = (g - 1.0) / (g + 1.0);
            for i in 0..=300 {
                let x = 3.0 * i as f64 / 300.0;
                let direct = if x < 1.0 {
                    (-g * s0(x) - s1(x)).exp() + c * (-4.0 * g / 3.0 + g * s0(x) - s1(x)).exp()
                } else {
                    (1.0 + c * (-4.0 * g / 3.0).exp()) * (-g * s0(x) - s1(x)).exp()
                };
                if direct > f64::MIN_POSITIVE * 1e4 {
                    assert_relative_eq!(t.ln_phi(x).exp(), direct, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0).is_err());
        assert!(ModelParams::new(0.5).is_err());
        assert!(ModelParams::new(5.0).unwrap().with_n_cells(10).is_err());
        assert!(ModelParams::new(5.0).unwrap().with_x_max(0.5).is_err());
        let p = ModelParams::new(5.0).unwrap();
        assert!(p.x_max >= 4.0 && p.x_max <= 12.0);
    }
}
