use hom_cascade::cascade::{derive_rates, exciton_purity, CascadeParams, DEFAULT_DELTA_X, TAU_CB_PS, TAU_CX_PS};
use hom_cascade::dynamics::{evolve, hermiticity_deviation, min_eigenvalue, trace};
use hom_cascade::sensor::{
    build_sensed_system, calibrate_sensor_linewidth, simulate_hom, visibility_sweep, HomPair,
    SensorParams, SimulationGrid, CALIBRATED_GAMMA_S, DEFAULT_COUPLING,
};

fn baseline() -> (CascadeParams, SensorParams) {
    let c = CascadeParams::measured();
    (c, SensorParams::for_cascade(&c, CALIBRATED_GAMMA_S))
}

fn p0s(pair: &HomPair) -> [f64; 2] {
    [pair.biexciton.p0, pair.exciton.p0]
}

#[test]
fn calibrated_baseline_matches_both_photons() {
    let (c, s) = baseline();
    let pair = simulate_hom(&c, &s, None).unwrap();
    for h in [&pair.biexciton, &pair.exciton] {
        assert!((h.p0 - 0.15).abs() <= 0.015, "p0 = {}", h.p0);
        assert!((h.visibility - 0.54).abs() <= 0.03, "nu = {}", h.visibility);
    }
    assert!((pair.biexciton.p0 - pair.exciton.p0).abs() < 2e-3);
}

#[test]
fn hom_curves_obey_their_bounds() {
    let (c, s) = baseline();
    let dephased = c.with_coherence(Some(TAU_CB_PS), Some(TAU_CX_PS));
    for params in [c, dephased] {
        let pair = simulate_hom(&params, &s, None).unwrap();
        for (h, em) in [(&pair.biexciton, &pair.emission[0]), (&pair.exciton, &pair.emission[1])] {
            let n = h.tau.len();
            for k in 0..n {
                assert!(h.g2_hom[k] >= -1e-10);
                assert!(h.g2_hom[k] <= h.g2_baseline[k] + 1e-10);
                assert!((h.g2_hom[k] - h.g2_hom[n - 1 - k]).abs() <= 1e-8);
            }
            assert!((0.0..=0.5).contains(&h.p0));
            assert!(em.n.iter().all(|&v| v >= -1e-12));
            assert!(em.cauchy_schwarz_excess() <= 1e-6, "{}", em.cauchy_schwarz_excess());
        }
    }
}

#[test]
fn sensed_state_stays_physical() {
    let (c, s) = baseline();
    let params = c.with_coherence(Some(TAU_CB_PS), Some(TAU_CX_PS));
    let sensed = build_sensed_system(&params, &s).unwrap();
    let grid = SimulationGrid::default_for(c.tau_b, c.tau_x, s.gamma_s).t_grid();
    let states = evolve(sensed.system(), &sensed.initial_state(), &grid).unwrap();
    for rho in states.iter().step_by(25) {
        assert!((trace(rho).re - 1.0).abs() <= 1e-8);
        assert!(min_eigenvalue(rho) >= -1e-8);
        assert!(hermiticity_deviation(rho) <= 1e-10);
    }
}

#[test]
fn coupling_and_detuning_do_not_matter() {
    let (c, s) = baseline();
    let reference = p0s(&simulate_hom(&c, &s, None).unwrap());
    let weak = p0s(&simulate_hom(&c, &s.with_coupling(0.5 * DEFAULT_COUPLING), None).unwrap());
    let wide = c.with_delta_x(2.0 * DEFAULT_DELTA_X);
    let far = p0s(&simulate_hom(&wide, &SensorParams::for_cascade(&wide, CALIBRATED_GAMMA_S), None).unwrap());
    for i in 0..2 {
        assert!((weak[i] - reference[i]).abs() < 1e-3, "g halving: {weak:?} vs {reference:?}");
        assert!((far[i] - reference[i]).abs() < 1e-3, "detuning doubling: {far:?} vs {reference:?}");
    }
}

#[test]
fn broadband_sensor_recovers_purity_limit() {
    let c = CascadeParams::measured();
    let rates = derive_rates(&c).unwrap();
    let gamma_s = 50.0 * rates.gamma_b;
    let s = SensorParams::for_cascade(&c, gamma_s);
    // The RK4 step is substepped against the generator norm, so a step
    // coarser than the sensor response only thins the output samples.
    let grid = SimulationGrid::with_spans(0.4, 12.0 * c.tau_x, 8.0 * c.tau_x, 400);
    let pair = simulate_hom(&c, &s, Some(&grid)).unwrap();
    let expected = 0.5 * (1.0 - exciton_purity(&rates));
    for p in p0s(&pair) {
        assert!((p - expected).abs() <= 0.01, "p0 = {p}, expected {expected}");
    }
}

#[test]
fn sweep_is_monotone_with_a_fourier_column() {
    let (c, s) = baseline();
    let cb = [0.5 * 2.0 * c.tau_b, 0.75 * 2.0 * c.tau_b, 2.0 * c.tau_b];
    let cx = [0.5 * 2.0 * c.tau_x, 0.75 * 2.0 * c.tau_x, 2.0 * c.tau_x];
    let rows = visibility_sweep(&c, &s, None, &cb, &cx).unwrap();
    let at = |i: usize, j: usize| &rows[i * cx.len() + j];
    for i in 0..cb.len() {
        for j in 0..cx.len() {
            if i + 1 < cb.len() {
                assert!(at(i + 1, j).visibility_b >= at(i, j).visibility_b - 1e-9);
            }
            if j + 1 < cx.len() {
                assert!(at(i, j + 1).visibility_x >= at(i, j).visibility_x - 1e-9);
            }
        }
    }
    let plain = p0s(&simulate_hom(&c, &s, None).unwrap());
    let corner = at(2, 2);
    assert!((corner.p0_b - plain[0]).abs() <= 1e-6);
    assert!((corner.p0_x - plain[1]).abs() <= 1e-6);
}

#[test]
fn calibration_scan_is_monotone_and_hits_target() {
    let c = CascadeParams::measured();
    let report = calibrate_sensor_linewidth(&c, DEFAULT_COUPLING, &[0.02, 0.025, 0.03]).unwrap();
    for w in report.points.windows(2) {
        assert!(w[1].p0_b > w[0].p0_b && w[1].p0_x > w[0].p0_x);
    }
    let sel = report.selected_point();
    assert_eq!(sel.gamma_s, CALIBRATED_GAMMA_S);
    assert!((sel.mean_p0() - 0.15).abs() <= 0.015);
}
