//! Cross-module consistency: the iteration, the exact series coefficients,
//! and the verifier have to agree with each other, not just pass their own
//! unit tests.

use doublewell::bounds::verify;
use doublewell::iterate_even::solve_even;
use doublewell::model::ModelParams;
use doublewell::plus_odd::solve_odd;
use doublewell::series::build_pyramid;

#[test]
fn converged_shift_matches_series_through_second_order() {
    // at g = 40 the converged shift minus the first three series terms must
    // be of the size of the third-order term
    let g = 40.0;
    let params = ModelParams::new(g).unwrap();
    let sol = solve_even(&params).unwrap();
    let table = build_pyramid(4).unwrap();
    let series: f64 = (1..=3)
        .map(|m| table.e_f64(m).unwrap() / g.powi(m as i32 - 1))
        .sum();
    let remainder = (sol.energy_shift - series).abs();
    let cap = 10.0 * table.e_f64(4).unwrap() / (g * g * g);
    assert!(
        remainder < cap,
        "series remainder {remainder:.3e} above {cap:.3e}"
    );
}

#[test]
fn odd_floor_sits_at_tunneling_depth() {
    // the floor 1 - gamma(...) must differ from 1 by a few gamma at most
    let params = ModelParams::new(10.0).unwrap();
    let even = solve_even(&params).unwrap();
    let odd = solve_odd(&params).unwrap();
    let (_, q) = verify(&even, &odd.plus, &odd).unwrap();
    assert!(q.cal_k > 0.0 && q.cal_k < 1.0);
    assert!(
        1.0 - q.cal_k < 10.0 * q.gamma,
        "floor depth {} not at the tunneling scale {}",
        1.0 - q.cal_k,
        q.gamma
    );
}

#[test]
fn concurrent_solves_agree_with_serial() {
    // solves are pure; running two couplings on threads must reproduce the
    // serial results bit for bit
    let (a, b) = std::thread::scope(|s| {
        let ja = s.spawn(|| solve_even(&ModelParams::new(4.0).unwrap()).unwrap().energy);
        let jb = s.spawn(|| solve_even(&ModelParams::new(7.0).unwrap()).unwrap().energy);
        (ja.join().unwrap(), jb.join().unwrap())
    });
    let sa = solve_even(&ModelParams::new(4.0).unwrap()).unwrap().energy;
    let sb = solve_even(&ModelParams::new(7.0).unwrap()).unwrap().energy;
    assert_eq!(a, sa);
    assert_eq!(b, sb);
}
