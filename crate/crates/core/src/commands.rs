//! Command layer behind the `hom-cascade` binary.
//!
//! Each command reads a validated [`RunConfig`], runs inside a rayon pool
//! of `threads` workers, writes CSV files (and SVG plots on request) to the
//! output directory and returns a one-line summary.

use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    conditional_hom, default_half_window, fit_lifetime, g2_zero, hom_metrics, hom_peak_centers,
    integrate_peaks, integrate_peaks_with_background, load_events, load_histogram, unconditioned_hom,
    EventBinning,
};
use crate::analysis::synthetic::{
    expected_hom_histogram, synthetic_conditioned_events, synthetic_decay, synthetic_hom_histogram,
    synthetic_pulsed_g2,
};
use crate::cascade::{build_emitter_system, CascadeParams, BIEXCITON, EXCITON, GROUND};
use crate::config::RunConfig;
use crate::dynamics::{evolve, ket_bra, TimeGrid};
use crate::output::{with_provenance, Cell, CsvTable, OutputDir, Provenance};
use crate::plot::{line_plot, Series};
use crate::sensor::{calibrate_sensor_linewidth, convolve_detector, simulate_hom, visibility_sweep};
use crate::trajectory::{
    default_step, ensemble_populations, run_ensemble, simulate_cascade_records, trajectory_seed,
    visibility_vs_cutoff, CutoffMode,
};
use crate::{ChannelLabel, CVector, Error, Result, C64};

/// Sensor linewidths (ps⁻¹) scanned by `calibrate-sensor`.
pub const CALIBRATION_CANDIDATES: [f64; 9] =
    [0.015, 0.0175, 0.02, 0.0225, 0.025, 0.0275, 0.03, 0.035, 0.04];

/// Most rows written for a population time series.
const MAX_POPULATION_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SimulateHom,
    SweepVisibility,
    Trajectories,
    Postselect,
    AnalyzeHistogram,
    AnalyzeConditional,
    FitLifetime,
    CalibrateSensor,
    Synthesize,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::SimulateHom,
        Command::SweepVisibility,
        Command::Trajectories,
        Command::Postselect,
        Command::AnalyzeHistogram,
        Command::AnalyzeConditional,
        Command::FitLifetime,
        Command::CalibrateSensor,
        Command::Synthesize,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateHom => "simulate-hom",
            Command::SweepVisibility => "sweep-visibility",
            Command::Trajectories => "trajectories",
            Command::Postselect => "postselect",
            Command::AnalyzeHistogram => "analyze-histogram",
            Command::AnalyzeConditional => "analyze-conditional",
            Command::FitLifetime => "fit-lifetime",
            Command::CalibrateSensor => "calibrate-sensor",
            Command::Synthesize => "synthesize",
        }
    }

    fn needs_input(&self) -> bool {
        matches!(
            self,
            Command::AnalyzeHistogram | Command::AnalyzeConditional | Command::FitLifetime
        )
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
                Error::Usage(format!("unknown command '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Command-line values that take precedence over the configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub plots: bool,
    pub fwhm: Option<f64>,
    pub cuts: Option<Vec<f64>>,
    pub windows: Option<Vec<f64>>,
    pub input: Option<PathBuf>,
    pub n_traj: Option<usize>,
    /// `analyze-histogram` reports `g²(0)` instead of the HOM metrics.
    pub g2: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.trajectories.seed = seed;
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::Usage("--threads must be >= 1".into()));
            }
            config.threads = t;
        }
        if let Some(n) = self.n_traj {
            if n == 0 {
                return Err(Error::Usage("--n-traj must be >= 1".into()));
            }
            config.trajectories.n_traj = n;
        }
        if let Some(f) = self.fwhm {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::Usage(format!("--fwhm-ps {f} must be >= 0")));
            }
            config.fwhm = Some(f);
        }
        let check_list = |flag: &str, v: &[f64]| -> Result<()> {
            if v.is_empty() || v.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::Usage(format!("{flag} needs positive values")));
            }
            Ok(())
        };
        if let Some(c) = &self.cuts {
            check_list("--cut-ps", c)?;
            config.postselection.cuts = c.clone();
        }
        if let Some(w) = &self.windows {
            check_list("--window-ps", w)?;
            config.analysis.windows = w.clone();
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Applies `overrides`, then runs `command` on a pool of `config.threads`
/// workers.
pub fn run_command(command: Command, mut config: RunConfig, overrides: &Overrides) -> Result<RunOutcome> {
    overrides.apply(&mut config)?;
    if command.needs_input() && overrides.input.is_none() {
        return Err(Error::Usage(format!("{} requires --input <file>", command.name())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    let mut out = OutputDir::create(&config.out_dir, Provenance::for_config(&config))?;
    let summary = pool.install(|| {
        let ctx = Ctx {
            config: &config,
            overrides,
        };
        match command {
            Command::SimulateHom => ctx.simulate_hom(&mut out),
            Command::SweepVisibility => ctx.sweep(&mut out),
            Command::Trajectories => ctx.trajectories(&mut out),
            Command::Postselect => ctx.postselect(&mut out),
            Command::AnalyzeHistogram => ctx.analyze_histogram(&mut out),
            Command::AnalyzeConditional => ctx.analyze_conditional(&mut out),
            Command::FitLifetime => ctx.fit_lifetime(&mut out),
            Command::CalibrateSensor => ctx.calibrate(&mut out),
            Command::Synthesize => ctx.synthesize(&mut out),
        }
    })?;
    Ok(RunOutcome {
        summary,
        files: out.into_written(),
    })
}

struct Ctx<'a> {
    config: &'a RunConfig,
    overrides: &'a Overrides,
}

impl Ctx<'_> {
    fn input(&self) -> &PathBuf {
        self.overrides.input.as_ref().expect("checked by run_command")
    }

    fn plot(&self, out: &mut OutputDir, name: &str, svg: impl FnOnce() -> String) -> Result<()> {
        if self.overrides.plots {
            out.write_text(name, &svg())?;
        }
        Ok(())
    }

    /// Cascade with the postselection preset applied, if any.
    fn postselection_params(&self) -> Result<CascadeParams> {
        match self.config.postselection.preset {
            Some(p) => p.apply(&self.config.cascade),
            None => Ok(self.config.cascade),
        }
    }

    fn simulate_hom(&self, out: &mut OutputDir) -> Result<String> {
        let c = self.config;
        let pair = simulate_hom(&c.cascade, &c.sensors, Some(&c.grid))?;
        let (b, x) = (&pair.biexciton, &pair.exciton);
        let mut columns = vec!["tau_ps", "g2_hom_b", "g2_baseline_b", "g2_hom_x", "g2_baseline_x"];
        let mut curves = vec![b.g2_hom.clone(), b.g2_baseline.clone(), x.g2_hom.clone(), x.g2_baseline.clone()];
        if let Some(fwhm) = c.fwhm {
            columns.extend(["g2_hom_b_detected", "g2_hom_x_detected"]);
            curves.push(convolve_detector(&b.g2_hom, b.dtau(), fwhm)?);
            curves.push(convolve_detector(&x.g2_hom, x.dtau(), fwhm)?);
        }
        let mut table = CsvTable::new("hom-curves/1", &columns);
        for (k, &tau) in b.tau.iter().enumerate() {
            let mut row: Vec<Cell> = vec![tau.into()];
            row.extend(curves.iter().map(|curve| Cell::from(curve[k])));
            table.push(row);
        }
        out.write_table("hom_curves.csv", &table)?;

        let mut summary = CsvTable::new("hom-summary/1", &["photon", "p0", "visibility"]);
        summary.push(vec!["biexciton".into(), b.p0.into(), b.visibility.into()]);
        summary.push(vec!["exciton".into(), x.p0.into(), x.visibility.into()]);
        out.write_table("hom_summary.csv", &summary)?;

        self.plot(out, "hom_curves.svg", || {
            line_plot(
                "HOM coincidences",
                "tau (ps)",
                "G2 (unit baseline area)",
                &[
                    Series { name: "biexciton", x: &b.tau, y: &b.g2_hom },
                    Series { name: "exciton", x: &x.tau, y: &x.g2_hom },
                    Series { name: "baseline b", x: &b.tau, y: &b.g2_baseline },
                ],
            )
        })?;
        Ok(format!(
            "p0_b={:.4} visibility_b={:.4} p0_x={:.4} visibility_x={:.4}",
            b.p0, b.visibility, x.p0, x.visibility
        ))
    }

    fn sweep(&self, out: &mut OutputDir) -> Result<String> {
        let c = self.config;
        let rows = visibility_sweep(
            &c.cascade,
            &c.sensors,
            Some(&c.grid),
            &c.sweep.tau_cb,
            &c.sweep.tau_cx,
        )?;
        let mut table = CsvTable::new(
            "visibility-sweep/1",
            &["tau_cb_ps", "tau_cx_ps", "p0_b", "visibility_b", "p0_x", "visibility_x"],
        );
        for r in &rows {
            table.push(vec![
                r.tau_cb.into(),
                r.tau_cx.into(),
                r.p0_b.into(),
                r.visibility_b.into(),
                r.p0_x.into(),
                r.visibility_x.into(),
            ]);
        }
        out.write_table("visibility_sweep.csv", &table)?;
        let n_cx = c.sweep.tau_cx.len();
        // Biexciton visibility along tau_cb at the first tau_cx.
        let nu_b: Vec<f64> = rows.iter().step_by(n_cx).map(|r| r.visibility_b).collect();
        let nu_x: Vec<f64> = rows[..n_cx].iter().map(|r| r.visibility_x).collect();
        self.plot(out, "visibility_sweep.svg", || {
            line_plot(
                "Visibility vs coherence time",
                "coherence time (ps)",
                "visibility",
                &[
                    Series { name: "biexciton", x: &c.sweep.tau_cb, y: &nu_b },
                    Series { name: "exciton", x: &c.sweep.tau_cx, y: &nu_x },
                ],
            )
        })?;
        let best = rows.last().expect("non-empty sweep");
        Ok(format!(
            "points={} visibility_b={:.4} visibility_x={:.4} at tau_cb={} tau_cx={}",
            rows.len(),
            best.visibility_b,
            best.visibility_x,
            best.tau_cb,
            best.tau_cx
        ))
    }

    fn trajectories(&self, out: &mut OutputDir) -> Result<String> {
        let c = self.config;
        let system = build_emitter_system(&c.cascade)?;
        let dt = default_step(&system);
        let grid = TimeGrid::with_steps(0.0, dt, (c.trajectories.t_max / dt).ceil() as usize)?;
        let mut psi0 = CVector::zeros(system.dim());
        psi0[BIEXCITON] = C64::from(1.0);
        let n = c.trajectories.n_traj;
        let seed = c.trajectories.seed;
        let ens = ensemble_populations(&system, &psi0, n, seed, &grid)?;
        let me = evolve(&system, &ket_bra(system.dim(), BIEXCITON, BIEXCITON), &grid)?;

        let levels = [GROUND, EXCITON, BIEXCITON];
        let mut table = CsvTable::new(
            "trajectory-populations/1",
            &["t_ps", "mc_g", "mc_x", "mc_b", "se_g", "se_x", "se_b", "me_g", "me_x", "me_b"],
        );
        let stride = ens.times.len().div_ceil(MAX_POPULATION_ROWS).max(1);
        let mut max_dev: f64 = 0.0;
        for (k, &t) in ens.times.iter().enumerate() {
            let me_pop: Vec<f64> = levels.iter().map(|&l| me[k][(l, l)].re).collect();
            for (i, &l) in levels.iter().enumerate() {
                max_dev = max_dev.max((ens.mean[k][l] - me_pop[i]).abs());
            }
            if k % stride != 0 && k + 1 != ens.times.len() {
                continue;
            }
            let mut row: Vec<Cell> = vec![t.into()];
            row.extend(levels.iter().map(|&l| Cell::from(ens.mean[k][l])));
            row.extend(levels.iter().map(|&l| Cell::from(ens.stderr[k][l])));
            row.extend(me_pop.iter().map(|&p| Cell::from(p)));
            table.push(row);
        }
        out.write_table("trajectory_populations.csv", &table)?;

        let records = run_ensemble(&system, &psi0, n, seed, &grid)?;
        let mut jumps = CsvTable::new("trajectory-jumps/1", &["index", "seed", "t_b_ps", "t_x_ps"]);
        let mut t_b_sum = 0.0;
        let mut t_b_n = 0usize;
        let time_cell = |t: Option<f64>| t.map(Cell::from).unwrap_or_else(|| Cell::from(""));
        for (i, r) in records.iter().enumerate() {
            let tb = r.first_jump(ChannelLabel::BiexcitonDecay);
            if let Some(t) = tb {
                t_b_sum += t;
                t_b_n += 1;
            }
            jumps.push(vec![
                i.into(),
                r.seed.into(),
                time_cell(tb),
                time_cell(r.first_jump(ChannelLabel::ExcitonDecay)),
            ]);
        }
        out.write_table("trajectory_jumps.csv", &jumps)?;

        self.plot(out, "trajectory_populations.svg", || {
            let col = |l: usize| ens.mean.iter().map(|m| m[l]).collect::<Vec<_>>();
            let me_col = |l: usize| me.iter().map(|r| r[(l, l)].re).collect::<Vec<_>>();
            let (b, x, bme, xme) = (col(BIEXCITON), col(EXCITON), me_col(BIEXCITON), me_col(EXCITON));
            line_plot(
                "Level populations",
                "t (ps)",
                "population",
                &[
                    Series { name: "b (trajectories)", x: &ens.times, y: &b },
                    Series { name: "x (trajectories)", x: &ens.times, y: &x },
                    Series { name: "b (master eq.)", x: &ens.times, y: &bme },
                    Series { name: "x (master eq.)", x: &ens.times, y: &xme },
                ],
            )
        })?;
        let mean_tb = if t_b_n > 0 { t_b_sum / t_b_n as f64 } else { f64::NAN };
        Ok(format!(
            "n_traj={n} max_population_deviation={max_dev:.4} mean_t_b_ps={mean_tb:.2}"
        ))
    }

    fn postselect(&self, out: &mut OutputDir) -> Result<String> {
        let c = self.config;
        let params = self.postselection_params()?;
        let cuts = &c.postselection.cuts;
        let oracle = visibility_vs_cutoff(&params, cuts, &CutoffMode::Oracle)?;
        let records = simulate_cascade_records(
            &params,
            c.trajectories.n_traj,
            c.trajectories.seed,
            c.trajectories.t_max,
        )?;
        let mc = visibility_vs_cutoff(
            &params,
            cuts,
            &CutoffMode::Trajectory {
                records: &records,
                bin_width: c.trajectories.bin_width,
            },
        )?;
        let mut table = CsvTable::new(
            "postselection/1",
            &[
                "t_cut_ps",
                "kept_fraction_oracle",
                "overlap_oracle",
                "visibility_oracle",
                "kept",
                "kept_fraction",
                "overlap",
                "overlap_se",
                "visibility",
                "visibility_se",
            ],
        );
        for (o, m) in oracle.iter().zip(&mc) {
            table.push(vec![
                o.t_cut.into(),
                o.kept_fraction.into(),
                o.overlap.into(),
                o.visibility.into(),
                m.kept.into(),
                m.kept_fraction.into(),
                m.overlap.into(),
                m.overlap_stderr.into(),
                m.visibility.into(),
                m.visibility_stderr.into(),
            ]);
        }
        out.write_table("postselection.csv", &table)?;

        let mut dens = CsvTable::new("conditional-intensity/1", &["t_cut_ps", "t_x_ps", "density_per_ps"]);
        for m in &mc {
            if let Some(ci) = &m.intensity {
                for (t, d) in ci.centers.iter().zip(&ci.density) {
                    dens.push(vec![m.t_cut.into(), (*t).into(), (*d).into()]);
                }
            }
        }
        out.write_table("conditional_intensity.csv", &dens)?;

        let nu_o: Vec<f64> = oracle.iter().map(|r| r.visibility).collect();
        let nu_m: Vec<f64> = mc.iter().map(|r| r.visibility).collect();
        self.plot(out, "postselection.svg", || {
            line_plot(
                "Visibility vs biexciton cutoff",
                "t_cut (ps)",
                "visibility",
                &[
                    Series { name: "quadrature", x: cuts, y: &nu_o },
                    Series { name: "trajectories", x: cuts, y: &nu_m },
                ],
            )
        })?;
        let parts: Vec<String> = if oracle.len() <= 4 {
            (0..oracle.len()).collect::<Vec<_>>()
        } else {
            vec![0, oracle.len() - 1]
        }
        .into_iter()
        .map(|i| format!("visibility({})={:.4}", oracle[i].t_cut, mc[i].visibility))
        .collect();
        Ok(format!("{} n_traj={}", parts.join(" "), records.len()))
    }

    fn analyze_histogram(&self, out: &mut OutputDir) -> Result<String> {
        let a = &self.config.analysis;
        let hist = load_histogram(self.input())?;
        let half = a.half_window.unwrap_or_else(|| default_half_window(&hist));
        let summary = if self.overrides.g2 {
            let g = g2_zero(&hist, a.n_side, half)?;
            let mut t = CsvTable::new(
                "g2-zero/1",
                &["g2", "error", "central_area", "mean_side_area", "n_side", "half_window_ps"],
            );
            t.push(vec![
                g.g2.into(),
                g.error.into(),
                g.central_area.into(),
                g.mean_side_area.into(),
                a.n_side.into(),
                half.into(),
            ]);
            out.write_table("g2_zero.csv", &t)?;
            format!("g2={:.4} g2_err={:.4}", g.g2, g.error)
        } else {
            let centers = hom_peak_centers(&hist);
            let report = if a.background {
                integrate_peaks_with_background(&hist, &centers, half)?
            } else {
                integrate_peaks(&hist, &centers, half)?
            };
            let m = hom_metrics(&report)?;
            let mut peaks = CsvTable::new("peak-areas/1", &["center_ps", "area", "error"]);
            for p in &report.peaks {
                peaks.push(vec![p.center.into(), p.area.into(), p.error.into()]);
            }
            out.write_table("peak_areas.csv", &peaks)?;
            let mut metrics = CsvTable::new(
                "hom-metrics/1",
                &["p0", "p0_err", "visibility", "visibility_err", "half_window_ps", "background_per_bin"],
            );
            metrics.push(vec![
                m.p0.into(),
                m.p0_err.into(),
                m.visibility.into(),
                m.visibility_err.into(),
                half.into(),
                report.background_per_bin.into(),
            ]);
            out.write_table("hom_metrics.csv", &metrics)?;
            format!("p0={:.4} visibility={:.4}", m.p0, m.visibility)
        };
        self.plot(out, "histogram.svg", || {
            let counts: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
            line_plot(
                "Coincidence histogram",
                "tau (ps)",
                "counts",
                &[Series { name: "counts", x: hist.centers(), y: &counts }],
            )
        })?;
        Ok(summary)
    }

    fn analyze_conditional(&self, out: &mut OutputDir) -> Result<String> {
        let a = &self.config.analysis;
        let events = load_events(self.input())?;
        let mut binning = EventBinning::new(a.delay, a.event_bin_width);
        if let Some(h) = a.half_window {
            binning.half_window = h;
        }
        let all = unconditioned_hom(&events, &binning)?;
        let mut table = CsvTable::new(
            "conditional-hom/1",
            &["window_ps", "kept", "kept_fraction", "p0", "p0_err", "visibility", "visibility_err"],
        );
        let mut nus = Vec::new();
        for &w in &a.windows {
            let r = conditional_hom(&events, w, &binning)?;
            let m = r.metrics;
            nus.push(m.visibility);
            table.push(vec![
                w.into(),
                r.kept.into(),
                r.kept_fraction.into(),
                m.p0.into(),
                m.p0_err.into(),
                m.visibility.into(),
                m.visibility_err.into(),
            ]);
        }
        table.push(vec![
            f64::INFINITY.into(),
            events.len().into(),
            1.0.into(),
            all.p0.into(),
            all.p0_err.into(),
            all.visibility.into(),
            all.visibility_err.into(),
        ]);
        out.write_table("conditional_hom.csv", &table)?;
        self.plot(out, "conditional_hom.svg", || {
            line_plot(
                "Conditioned visibility",
                "window (ps)",
                "visibility",
                &[Series { name: "data", x: &a.windows, y: &nus }],
            )
        })?;
        Ok(format!(
            "events={} windows={} p0={:.4} visibility={:.4}",
            events.len(),
            a.windows.len(),
            all.p0,
            all.visibility
        ))
    }

    fn fit_lifetime(&self, out: &mut OutputDir) -> Result<String> {
        let a = &self.config.analysis;
        let hist = load_histogram(self.input())?;
        let t_hi = a.fit_t_hi.unwrap_or(*hist.centers().last().expect("non-empty histogram"));
        let f = fit_lifetime(&hist, a.fit_t_lo, t_hi)?;
        let mut table = CsvTable::new(
            "lifetime-fit/1",
            &[
                "tau_ps",
                "tau_err_ps",
                "amplitude",
                "amplitude_err",
                "background",
                "background_err",
                "iterations",
                "t_lo_ps",
                "t_hi_ps",
            ],
        );
        table.push(vec![
            f.tau.into(),
            f.tau_err.into(),
            f.amplitude.into(),
            f.amplitude_err.into(),
            f.background.into(),
            f.background_err.into(),
            f.iterations.into(),
            f.t_lo.into(),
            f.t_hi.into(),
        ]);
        out.write_table("lifetime_fit.csv", &table)?;
        self.plot(out, "lifetime_fit.svg", || {
            let counts: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
            let model: Vec<f64> = hist
                .centers()
                .iter()
                .map(|&t| f.amplitude * (-(t - f.t_lo) / f.tau).exp() + f.background)
                .collect();
            line_plot(
                "Lifetime fit",
                "t (ps)",
                "counts",
                &[
                    Series { name: "data", x: hist.centers(), y: &counts },
                    Series { name: "fit", x: hist.centers(), y: &model },
                ],
            )
        })?;
        Ok(format!("tau_ps={:.2} tau_err_ps={:.2}", f.tau, f.tau_err))
    }

    fn calibrate(&self, out: &mut OutputDir) -> Result<String> {
        let c = self.config;
        let report = calibrate_sensor_linewidth(&c.cascade, c.sensors.g, &CALIBRATION_CANDIDATES)?;
        let mut table = CsvTable::new(
            "sensor-calibration/1",
            &["gamma_s_per_ps", "p0_b", "p0_x", "visibility_b", "visibility_x", "selected"],
        );
        for (i, p) in report.points.iter().enumerate() {
            table.push(vec![
                p.gamma_s.into(),
                p.p0_b.into(),
                p.p0_x.into(),
                p.visibility_b.into(),
                p.visibility_x.into(),
                (i == report.selected).into(),
            ]);
        }
        out.write_table("sensor_calibration.csv", &table)?;
        let s = report.selected_point();
        Ok(format!(
            "gamma_s={} p0_b={:.4} p0_x={:.4}",
            s.gamma_s, s.p0_b, s.p0_x
        ))
    }

    /// Synthetic inputs for the analysis commands, one RNG stream per file.
    fn synthesize(&self, out: &mut OutputDir) -> Result<String> {
        let c = self.config;
        let seed = c.trajectories.seed;
        let rng = |k: u64| ChaCha8Rng::seed_from_u64(trajectory_seed(seed, k));
        let delay = c.analysis.delay;
        let (sigma, bin_width) = (150.0, 10.0);
        let prov = out.provenance().clone();
        let write_hist = |out: &mut OutputDir, name: &str, h: &crate::analysis::CorrelationHistogram| {
            out.write_text(name, &with_provenance(&h.to_csv(), &prov))
        };

        write_hist(out, "hom_equal_peaks.csv", &expected_hom_histogram(0.5, 1e4, delay, sigma, bin_width)?)?;
        for (k, p0) in [(1u64, 0.1), (2, 0.3), (3, 0.5)] {
            let h = synthetic_hom_histogram(&mut rng(k), p0, 1e4, delay, sigma, bin_width)?;
            write_hist(out, &format!("hom_p0_{:03}.csv", (p0 * 100.0).round() as u32), &h)?;
        }
        let g2 = synthetic_pulsed_g2(&mut rng(4), 0.02, 1e4, 4, 12_500.0, 300.0, 20.0)?;
        write_hist(out, "g2_pulsed.csv", &g2)?;
        for (k, name, tau) in [(5u64, "decay_b.csv", c.cascade.tau_b), (6, "decay_x.csv", c.cascade.tau_x)] {
            let h = synthetic_decay(&mut rng(k), tau, 1e6, 0.0, 4.0, 12.0 * tau)?;
            write_hist(out, name, &h)?;
        }
        let params = self.postselection_params()?;
        let records = simulate_cascade_records(
            &params,
            2 * c.trajectories.n_traj,
            trajectory_seed(seed, 7),
            c.trajectories.t_max,
        )?;
        let events = synthetic_conditioned_events(&mut rng(8), &records, &params, delay, 50.0)?;
        out.write_text("events.csv", &with_provenance(&events.to_csv(), &prov))?;
        Ok(format!("histograms=7 events={}", events.len()))
    }
}
