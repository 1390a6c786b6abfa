mod common;

use common::{ks_critical_1pct, ks_exponential, two_level};
use hom_cascade::cascade::{build_emitter_system, derive_rates, CascadeParams, BIEXCITON, TAU_B_PS};
use hom_cascade::dynamics::{evolve, ket_bra, TimeGrid};
use hom_cascade::trajectory::{
    conditional_overlap_oracle, default_step, ensemble_populations, postselect_records, run_ensemble,
    simulate_cascade_records, visibility_from_overlap, visibility_vs_cutoff, CoherencePreset, CutoffMode,
};
use hom_cascade::{CVector, ChannelLabel, C64};
use proptest::prelude::*;

fn excited(dim: usize, level: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[level] = C64::from(1.0);
    v
}

#[test]
fn two_level_jump_times_are_exponential() {
    let gamma = 1.0 / TAU_B_PS;
    let system = two_level(gamma);
    let dt = default_step(&system);
    let grid = TimeGrid::with_steps(0.0, dt, (25.0 * TAU_B_PS / dt).ceil() as usize).unwrap();
    let n = 100_000;
    let records = run_ensemble(&system, &excited(2, 1), n, 42, &grid).unwrap();
    let times: Vec<f64> = records
        .iter()
        .map(|r| r.first_jump(ChannelLabel::BiexcitonDecay).expect("decays within 25 lifetimes"))
        .collect();
    let d = ks_exponential(&times, gamma);
    assert!(d < ks_critical_1pct(n), "D = {d}");
}

#[test]
fn ensemble_tracks_master_equation() {
    let params = CascadeParams::measured();
    let system = build_emitter_system(&params).unwrap();
    let dt = default_step(&system);
    let grid = TimeGrid::with_steps(0.0, dt, (3000.0 / dt).ceil() as usize).unwrap();
    let n = 2000;
    let ens = ensemble_populations(&system, &excited(3, BIEXCITON), n, 5, &grid).unwrap();
    let me = evolve(&system, &ket_bra(3, BIEXCITON, BIEXCITON), &grid).unwrap();
    let bound = 5.0 / (n as f64).sqrt();
    for (k, rho) in me.iter().enumerate() {
        for l in 0..3 {
            assert!((ens.mean[k][l] - rho[(l, l)].re).abs() <= bound, "t = {}, level {l}", ens.times[k]);
        }
    }
    for w in ens.mean.windows(2) {
        assert!(w[1][BIEXCITON] <= w[0][BIEXCITON]);
    }
}

#[test]
fn seeds_fix_records_for_any_worker_count() {
    let params = CascadeParams::measured();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_cascade_records(&params, 500, 9, 6000.0).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.jumps, y.jumps);
    }
}

#[test]
fn postselection_statistics_match_closed_forms() {
    let params = CascadeParams::measured();
    let rates = derive_rates(&params).unwrap();
    let n = 10_000;
    let records = simulate_cascade_records(&params, n, 3, 20.0 * params.tau_x).unwrap();
    let tol = 5.0 / (n as f64).sqrt();

    let r180 = postselect_records(&records, 180.0, &params, 8.0).unwrap();
    assert!((r180.kept_fraction - 0.5319).abs() <= tol, "{}", r180.kept_fraction);

    let cuts = [32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];
    let mc = visibility_vs_cutoff(&params, &cuts, &CutoffMode::Trajectory { records: &records, bin_width: 8.0 })
        .unwrap();
    for r in &mc {
        let expected = -(-rates.gamma_b * r.t_cut).exp_m1();
        assert!((r.kept_fraction - expected).abs() <= tol);
        let v = conditional_overlap_oracle(&params, r.t_cut).unwrap();
        assert!((r.overlap - v).abs() <= 5.0 * r.overlap_stderr, "t_cut {}: {} vs {v}", r.t_cut, r.overlap);
    }
    let mean_x = |t: f64| {
        mc.iter()
            .find(|r| r.t_cut == t)
            .and_then(|r| r.intensity.as_ref())
            .map(|i| i.mean_time)
            .unwrap()
    };
    assert!(mean_x(64.0) < mean_x(512.0));
}

#[test]
fn dephased_trajectory_overlap_matches_oracle() {
    let params = CoherencePreset::Experimental.apply(&CascadeParams::measured()).unwrap();
    let records = simulate_cascade_records(&params, 5000, 11, 20.0 * params.tau_x).unwrap();
    for t in [64.0, 512.0, f64::INFINITY] {
        let r = postselect_records(&records, t, &params, 8.0).unwrap();
        let v = conditional_overlap_oracle(&params, t).unwrap();
        assert!((r.overlap - v).abs() <= 5.0 * r.overlap_stderr);
    }
}

#[test]
fn presets_are_ordered_on_a_cut_grid() {
    let base = CascadeParams::measured();
    let cuts: Vec<f64> = (0..20).map(|i| 10.0 * 1.35f64.powi(i)).collect();
    let curve = |p: CoherencePreset| {
        let params = p.apply(&base).unwrap();
        visibility_vs_cutoff(&params, &cuts, &CutoffMode::Oracle)
            .unwrap()
            .into_iter()
            .map(|r| r.visibility)
            .collect::<Vec<_>>()
    };
    let free = curve(CoherencePreset::NoDephasing);
    let f80 = curve(CoherencePreset::FourierFraction(0.8));
    let exp = curve(CoherencePreset::Experimental);
    for i in 0..cuts.len() {
        assert!(free[i] >= f80[i] && f80[i] >= exp[i], "cut {}", cuts[i]);
        if i > 0 {
            assert!(free[i] <= free[i - 1] + 1e-12);
        }
    }
    let short = visibility_vs_cutoff(&CoherencePreset::Experimental.apply(&base).unwrap(), &[0.01], &CutoffMode::Oracle)
        .unwrap();
    assert!(short[0].visibility < 1.0 - 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn overlap_is_a_probability(t_cut in 1.0f64..5000.0, frac in 0.3f64..1.0) {
        let params = CoherencePreset::FourierFraction(frac).apply(&CascadeParams::measured()).unwrap();
        let v = conditional_overlap_oracle(&params, t_cut).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        let p0 = 0.5 * (1.0 - v);
        let nu = hom_cascade::cascade::visibility_from_p0(p0).unwrap();
        prop_assert!((nu - visibility_from_overlap(v)).abs() <= 1e-12);
    }
}
