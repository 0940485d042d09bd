//! The intermediate Robin-boundary state `psi_plus` and the odd-state
//! construction built on it.
//!
//! `psi_plus` solves the bare Hamiltonian on the half line with logarithmic
//! slope `g - 1` at the origin; it is obtained by the same shift iteration
//! as the even state, with `phi_plus` as the trial and `u` as the shift
//! potential. From it the odd trial `chi = psi_plus - psi_minus` is formed,
//! where `psi_minus` is the complementary solution scaled by the constant
//! `gamma` that makes `chi(0) = 0`. The odd iteration then corrects `chi`
//! toward the true odd state; each step shrinks the error by a factor of
//! order `exp(-4g/3)`, so it settles in a handful of iterations.

use crate::error::{Error, Result};
use crate::iterate_even::{run_shift_iteration, IterateTrace};
use crate::logval::LogVal;
use crate::model::{ModelParams, Trial};
use crate::quadrature::{
    bracket, build_grid, greens_suffix_orthogonal, nested_double_log, nested_double_profile,
    nested_double_suffix_profile, GridFn, InnerAnchor,
};

/// Converged Robin-boundary solution.
#[derive(Debug, Clone)]
pub struct PlusSolution {
    pub params: ModelParams,
    pub f_plus: GridFn,
    pub energy_shift: f64,
    /// `E_plus = g - shift`; lies strictly between the even and odd levels.
    pub energy: f64,
    /// `psi_plus = phi_plus * f_plus` in log form.
    pub psi_plus: GridFn,
    pub trace: IterateTrace,
    /// Inner and tail doubles of the plus system, computed on this grid.
    pub i_plus: f64,
    pub j_plus: f64,
    /// `1 - (1 - I₊)(1 - J₊·shift)`; `f_plus(0) < 1/(1-L)` is enforced.
    pub l_val: f64,
}

/// Odd-state solution assembled on top of a [`PlusSolution`].
#[derive(Debug, Clone)]
pub struct OddSolution {
    pub plus: PlusSolution,
    /// Normalization constant of the complementary solution; `O(exp(-4g/3))`.
    pub gamma: f64,
    /// `ln gamma`, exact even when `gamma` would underflow.
    pub ln_gamma: f64,
    pub psi_minus: GridFn,
    /// Odd trial `chi = psi_plus - psi_minus` (log form; zero at the origin).
    pub chi: GridFn,
    /// Limit of the odd iterates.
    pub k: GridFn,
    /// Converged odd energy shift above the plus level.
    pub delta_od: f64,
    /// `E_od = E_plus + delta_od`.
    pub energy: f64,
    /// `psi_od = chi * k`.
    pub psi_od: GridFn,
    pub trace: IterateTrace,
}

/// Solve the Robin-boundary state (`psi'/psi = g-1` at the origin).
pub fn solve_plus(params: &ModelParams) -> Result<PlusSolution> {
    params.validate()?;
    let grid = build_grid(params)?;
    let trial = Trial::new(params);
    let phi_plus = GridFn::from_ln_fn(grid.clone(), |x| trial.ln_phi_plus(x));
    let u = GridFn::from_fn(grid.clone(), |x| trial.u(x));

    let (f_plus, shift, trace) = run_shift_iteration(params, &phi_plus, &u, None)?;

    let one = GridFn::from_fn(grid.clone(), |_| 1.0);
    let ones_log: Vec<LogVal> = (0..grid.len()).map(|i| one.log_at(i)).collect();
    let u_log: Vec<LogVal> = (0..grid.len()).map(|i| u.log_at(i)).collect();
    let i_plus = nested_double_log(
        &phi_plus,
        &u_log,
        0,
        grid.idx_one(),
        InnerAnchor::FromZero,
        None,
    )
    .to_f64();
    let j_plus = nested_double_log(
        &phi_plus,
        &ones_log,
        grid.idx_one(),
        grid.len() - 1,
        InnerAnchor::ToCutoff,
        None,
    )
    .to_f64();
    let l_val = 1.0 - (1.0 - i_plus) * (1.0 - j_plus * shift);

    if l_val < 1.0 {
        let cap = 1.0 / (1.0 - l_val);
        if f_plus.value_at(0) >= cap {
            return Err(Error::ShapeViolation(format!(
                "f_plus(0) = {} exceeds the boundary cap {}",
                f_plus.value_at(0),
                cap
            )));
        }
    }

    let psi_logs: Vec<LogVal> = (0..grid.len())
        .map(|i| LogVal::from_ln_pos(phi_plus.log_at(i).ln_abs() + f_plus.value_at(i).ln()))
        .collect();
    let psi_plus = GridFn::from_log_values(grid, psi_logs)?;

    Ok(PlusSolution {
        params: *params,
        f_plus,
        energy_shift: shift,
        energy: params.g - shift,
        psi_plus,
        trace,
        i_plus,
        j_plus,
        l_val,
    })
}

/// `gamma` from the full nested double of `psi_plus`; returned both directly
/// and as a log so extreme couplings cannot underflow it silently.
pub fn compute_gamma(plus: &PlusSolution) -> Result<(f64, f64)> {
    let grid = plus.psi_plus.grid().clone();
    let ones: Vec<LogVal> = vec![LogVal::from_f64(1.0); grid.len()];
    let inv = nested_double_log(
        &plus.psi_plus,
        &ones,
        0,
        grid.len() - 1,
        InnerAnchor::ToCutoff,
        None,
    );
    if inv.sign() <= 0 {
        return Err(Error::ShapeViolation(
            "nested double defining gamma is not positive".to_string(),
        ));
    }
    let ln_gamma = -inv.ln_abs();
    Ok((ln_gamma.exp(), ln_gamma))
}

/// Build the odd trial `chi` and the complementary solution `psi_minus`.
///
/// `chi/psi_plus` is accumulated directly as the origin-anchored profile of
/// the `gamma` integrand, so `chi(0) = 0` holds exactly and `psi_minus/psi_plus`
/// (the complementary suffix profile) is monotone by construction.
pub fn build_chi(plus: &PlusSolution, gamma: f64) -> Result<(GridFn, GridFn)> {
    let grid = plus.psi_plus.grid().clone();
    if gamma <= 0.0 || gamma.is_nan() {
        return Err(Error::Domain("gamma must be positive".to_string()));
    }
    let ln_two_gamma = gamma.ln() + std::f64::consts::LN_2;
    let ones: Vec<LogVal> = vec![LogVal::from_f64(1.0); grid.len()];

    // sigma = chi/psi_plus: prefix profile; rho = psi_minus/psi_plus: suffix.
    let sigma = nested_double_profile(&plus.psi_plus, &ones, InnerAnchor::ToCutoff);
    let rho = nested_double_suffix_profile(&plus.psi_plus, &ones, InnerAnchor::ToCutoff);

    // the profiles already carry the factor 2, so only gamma multiplies them
    let ln_gamma = ln_two_gamma - std::f64::consts::LN_2;
    let n = grid.len();
    let mut chi_logs = Vec::with_capacity(n);
    let mut minus_logs = Vec::with_capacity(n);
    for i in 0..n {
        let ln_psi = plus.psi_plus.log_at(i).ln_abs();
        chi_logs.push(LogVal::from_ln(
            ln_psi + ln_gamma + sigma[i].ln_abs(),
            sigma[i].sign(),
        ));
        minus_logs.push(LogVal::from_ln(
            ln_psi + ln_gamma + rho[i].ln_abs(),
            rho[i].sign(),
        ));
    }
    let chi = GridFn::from_log_values(grid.clone(), chi_logs)?;
    let psi_minus = GridFn::from_log_values(grid.clone(), minus_logs)?;

    // chi must be nonnegative with its only zero at the origin
    if chi.value_at(0) != 0.0 {
        return Err(Error::ShapeViolation(format!(
            "chi(0) = {} but must vanish",
            chi.value_at(0)
        )));
    }
    for i in 1..n {
        if chi.value_at(i) < -1e-12 * plus.psi_plus.value_at(i) {
            return Err(Error::ShapeViolation(format!(
                "chi negative at x = {}",
                grid.nodes()[i]
            )));
        }
    }
    Ok((chi, psi_minus))
}

/// One odd-iteration step: the shift `delta` is recomputed from the previous
/// iterate, then the chi-weighted Green's operator is applied. The singular
/// factor in the source never appears alone: with `nu·chi = -gamma·psi_plus`
/// the source is `(delta·chi - gamma·psi_plus)·chi·k_prev`, finite
/// everywhere, and the outer integrand at the origin is replaced by its
/// analytic limit `gamma·psi_plus(0)·k_prev(0) / (2·chi'(0))`.
pub fn step_odd(
    chi: &GridFn,
    psi_plus: &GridFn,
    gamma: f64,
    k_prev: &GridFn,
) -> Result<(GridFn, f64)> {
    let grid = chi.grid().clone();
    let n = grid.len();
    // numerator ∫ chi psi_plus k: a single power of each weight, formed as
    // the exponential of the log sum per node
    let num = {
        let mut acc = 0.0;
        for i in 0..n {
            let prod = (chi.log_at(i).ln_abs() + psi_plus.log_at(i).ln_abs()).exp();
            acc += grid.weights()[i] * prod * k_prev.value_at(i);
        }
        acc
    };
    let den = bracket(chi, k_prev)?;
    if den <= 0.0 || den.is_nan() {
        return Err(Error::ShapeViolation(
            "odd bracket of the iterate is not positive".to_string(),
        ));
    }
    let delta = gamma * num / den;

    let ln_gamma = gamma.ln();
    let ln_delta = delta.ln();
    // source per node: (delta·chi - gamma·psi_plus) · k_prev, as the factor
    // multiplying chi in the weighted cells (the remaining chi is part of
    // the weight-squared kernel)
    let source: Vec<LogVal> = (0..n)
        .map(|i| {
            let k = LogVal::from_f64(k_prev.value_at(i));
            let d_chi = LogVal::from_ln(ln_delta + chi.log_at(i).ln_abs(), chi.log_at(i).sign());
            let g_psi = LogVal::from_ln_pos(ln_gamma + psi_plus.log_at(i).ln_abs());
            // divide by chi: the weighted cells multiply by chi², so pass
            // (delta - gamma psi_plus/chi)·k = (delta·chi - gamma·psi_plus)/chi · k
            let combined = d_chi.sub(&g_psi);
            let ratio =
                LogVal::from_ln(combined.ln_abs() - chi.log_at(i).ln_abs(), combined.sign());
            ratio.mul(&k)
        })
        .collect();
    // node 0 of the source is 0/0; the cell weight chi²(0) = 0 kills it,
    // so any finite stand-in works. Use the neighbor value.
    let mut source = source;
    source[0] = source[1];

    // analytic limit of the outer integrand at the origin
    let h1 = grid.nodes()[1];
    let chi_prime0 = (4.0 * chi.value_at(1) - chi.value_at(2)) / (2.0 * h1);
    if chi_prime0 <= 0.0 || chi_prime0.is_nan() {
        return Err(Error::ShapeViolation(
            "chi slope at the origin is not positive".to_string(),
        ));
    }
    let outer0 = gamma * psi_plus.value_at(0) * k_prev.value_at(0) / (2.0 * chi_prime0);

    let h = greens_suffix_orthogonal(chi, &source, None, Some(outer0))?;
    let k_next: Vec<f64> = h.iter().map(|v| 1.0 + v).collect();
    for (i, v) in k_next.iter().enumerate() {
        if *v <= 0.0 || v.is_nan() || *v > 1.0 + 1e-9 {
            return Err(Error::ShapeViolation(format!(
                "odd iterate leaves (0, 1] at x = {} (value {v})",
                grid.nodes()[i]
            )));
        }
    }
    for i in 0..n - 1 {
        if k_next[i] > k_next[i + 1] + 1e-9 {
            return Err(Error::ShapeViolation(format!(
                "odd iterate not nondecreasing at x = {}",
                grid.nodes()[i]
            )));
        }
    }
    Ok((GridFn::from_values(grid, k_next)?, delta))
}

/// Solve the lowest odd state.
pub fn solve_odd(params: &ModelParams) -> Result<OddSolution> {
    let plus = solve_plus(params)?;
    let (gamma, ln_gamma) = compute_gamma(&plus)?;
    let (chi, psi_minus) = build_chi(&plus, gamma)?;
    let grid = chi.grid().clone();

    let mut trace = IterateTrace {
        shifts: Vec::new(),
        sup_diffs: Vec::new(),
        f_at_zero: Vec::new(),
        f_at_one: Vec::new(),
        n_iters: 0,
        converged: false,
        regime_warning: params.g < ModelParams::REGIME_G_MIN,
    };
    let mut k = GridFn::from_fn(grid.clone(), |_| 1.0);
    let mut prev_delta = f64::NAN;
    for n in 1..=params.max_iter {
        let (k_next, delta) = step_odd(&chi, &plus.psi_plus, gamma, &k)?;
        let sup = k_next.sup_diff(&k);
        trace.shifts.push(delta);
        trace.sup_diffs.push(sup);
        trace.f_at_zero.push(k_next.value_at(0));
        trace.f_at_one.push(k_next.value_at(grid.idx_one()));
        trace.n_iters = n;
        if n > 1 {
            let first = trace.shifts[0];
            let in_range = delta > 0.0 && delta < first + 1e-12 * first.abs().max(1e-300);
            if !in_range && !trace.regime_warning {
                return Err(Error::ShapeViolation(format!(
                    "odd shift at iteration {n} ({delta:.6e}) outside (0, delta_1 = {first:.6e})"
                )));
            }
            // require one extra step so contraction ratios are observable
            if n > 2 && (delta - prev_delta).abs() < params.tol_energy && sup < params.tol_fn {
                trace.converged = true;
                k = k_next;
                break;
            }
        }
        prev_delta = delta;
        k = k_next;
    }
    if !trace.converged {
        return Err(Error::NonConvergence {
            max_iter: params.max_iter,
            last_shift_change: f64::NAN,
            last_sup_diff: *trace.sup_diffs.last().unwrap_or(&f64::NAN),
        });
    }

    let delta_od = *trace.shifts.last().unwrap();
    let n = grid.len();
    let psi_od_vals: Vec<f64> = (0..n).map(|i| chi.value_at(i) * k.value_at(i)).collect();
    let psi_od = GridFn::from_values(grid, psi_od_vals)?;

    Ok(OddSolution {
        energy: plus.energy + delta_od,
        plus,
        gamma,
        ln_gamma,
        psi_minus,
        chi,
        k,
        delta_od,
        psi_od,
        trace,
    })
}

/// The product of the singular odd-shift factor with `chi`: always
/// `-gamma * psi_plus(x)`. The factor itself is never exposed standalone
/// (it diverges at the origin; only the product enters any formula).
pub fn nu_chi_product(gamma: f64, psi_plus: &GridFn, node: usize) -> f64 {
    -gamma * psi_plus.value_at(node)
}
