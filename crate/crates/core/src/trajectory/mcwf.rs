//! Monte Carlo wavefunction unraveling of the Lindblad model.
//!
//! Between jumps the unnormalised state evolves under
//! `H' = H − (i/2) Σ_k C_k†C_k` with the exact step `exp(−iH'dt)`. A jump
//! happens when `‖ψ‖²` falls below a uniform draw `r`; its time is located
//! inside the step by bisection, the channel is picked from the weights
//! `‖C_k ψ‖²` with a second draw, and a fresh `r` is drawn.
//!
//! The squared norm is compared with `r`. For uniform `r` this is the
//! standard unraveling and reproduces the master equation on average.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{ChannelLabel, QuantumSystem, TimeGrid};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Largest tolerated fractional norm loss in one step.
pub const MAX_STEP_NORM_LOSS: f64 = 0.05;
/// Norm loss per step targeted by [`default_step`].
pub const TARGET_STEP_NORM_LOSS: f64 = 0.01;
/// Bisection iterations used to place a jump inside a step.
const BISECTION_ITERS: usize = 40;
/// Trajectories per reduction chunk; fixed so sums do not depend on the
/// number of workers.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub channel: ChannelLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jumps: Vec<Jump>,
    /// `populations[k][level]` at grid point `k`, when requested.
    pub populations: Option<Vec<Vec<f64>>>,
}

impl TrajectoryRecord {
    /// Time of the first jump through `channel`.
    pub fn first_jump(&self, channel: ChannelLabel) -> Option<f64> {
        self.jumps.iter().find(|j| j.channel == channel).map(|j| j.time)
    }

    pub fn count(&self, channel: ChannelLabel) -> usize {
        self.jumps.iter().filter(|j| j.channel == channel).count()
    }
}

/// Seed of trajectory `index` in an ensemble: the `index`-th output of a
/// SplitMix64 stream started at `master`.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Step for which the fastest decaying state loses at most 1 % of its
/// squared norm.
pub fn default_step(system: &QuantumSystem) -> f64 {
    let loss_rate = decay_operator(system)
        .symmetric_eigenvalues()
        .max();
    if loss_rate > 0.0 {
        -(1.0 - TARGET_STEP_NORM_LOSS).ln() / loss_rate
    } else {
        f64::INFINITY
    }
}

fn decay_operator(system: &QuantumSystem) -> CMatrix {
    let d = system.dim();
    system
        .channels()
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, c| acc + c.operator.adjoint() * &c.operator)
}

/// Precomputed non-Hermitian generator and step for one system and `dt`.
#[derive(Debug, Clone)]
pub struct TrajectoryEngine<'a> {
    system: &'a QuantumSystem,
    /// `−iH'`.
    generator: CMatrix,
    step: CMatrix,
    dt: f64,
    /// `‖exp(−iH'dt) v‖²` minimum over unit vectors.
    worst_retained: f64,
}

impl<'a> TrajectoryEngine<'a> {
    pub fn new(system: &'a QuantumSystem, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt = {dt} must be > 0")));
        }
        let h_eff = system.hamiltonian() - decay_operator(system) * C64::new(0.0, 0.5);
        let generator = h_eff * C64::new(0.0, -1.0);
        let step = (&generator * C64::from(dt)).exp();
        let retained = step.adjoint() * &step;
        let worst_retained = retained.symmetric_eigenvalues().min();
        let loss = 1.0 - worst_retained;
        if loss > MAX_STEP_NORM_LOSS {
            return Err(Error::StepTooLarge {
                dt,
                detail: format!("norm loss per step {loss:.3} exceeds {MAX_STEP_NORM_LOSS}"),
            });
        }
        Ok(Self {
            system,
            generator,
            step,
            dt,
            worst_retained,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Largest fractional norm loss of any state over one step.
    pub fn max_step_loss(&self) -> f64 {
        1.0 - self.worst_retained
    }

    fn partial(&self, s: f64) -> CMatrix {
        (&self.generator * C64::from(s)).exp()
    }

    /// One trajectory from `psi0` over `grid` (the grid step is the
    /// integration step). Deterministic given `seed`.
    pub fn run(
        &self,
        psi0: &CVector,
        seed: u64,
        grid: &TimeGrid,
        record_populations: bool,
    ) -> Result<TrajectoryRecord> {
        if (grid.dt() - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::InvalidGrid(format!(
                "grid step {} differs from engine step {}",
                grid.dt(),
                self.dt
            )));
        }
        let d = self.system.dim();
        if psi0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: psi0.len(),
            });
        }
        let norm0 = psi0.norm_squared();
        if (norm0 - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("initial norm² {norm0} != 1")));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = psi0.clone();
        let mut r: f64 = rng.random();
        let mut jumps = Vec::new();
        let mut pops = record_populations.then(|| Vec::with_capacity(grid.len()));
        let mut settled = false;

        if let Some(p) = pops.as_mut() {
            p.push(populations(&psi));
        }
        for k in 0..grid.steps() {
            if !settled {
                let t_start = grid.time(k);
                self.advance(&mut psi, &mut r, t_start, &mut rng, &mut jumps)?;
                settled = self.is_settled(&psi);
            }
            if let Some(p) = pops.as_mut() {
                p.push(populations(&psi));
            }
        }
        Ok(TrajectoryRecord {
            seed,
            jumps,
            populations: pops,
        })
    }

    /// Advances `psi` by one step starting at `t_start`, handling any jumps
    /// that occur inside it.
    fn advance(
        &self,
        psi: &mut CVector,
        r: &mut f64,
        t_start: f64,
        rng: &mut ChaCha8Rng,
        jumps: &mut Vec<Jump>,
    ) -> Result<()> {
        let mut elapsed = 0.0;
        let mut full = true;
        loop {
            let remaining = self.dt - elapsed;
            let next = if full {
                &self.step * &*psi
            } else {
                self.partial(remaining) * &*psi
            };
            if next.norm_squared() >= *r {
                *psi = next;
                return Ok(());
            }
            // Jump inside (elapsed, dt]: bisect on ‖exp(−iH's)ψ‖² = r.
            let (mut lo, mut hi) = (0.0, remaining);
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                if (self.partial(mid) * &*psi).norm_squared() >= *r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = hi;
            let at_jump = self.partial(s) * &*psi;
            let label = self.choose_channel(&at_jump, rng)?;
            let op = &self
                .system
                .channel(label)
                .expect("channel chosen from system")
                .operator;
            let jumped = op * at_jump;
            let n = jumped.norm();
            *psi = jumped / C64::from(n);
            elapsed += s;
            jumps.push(Jump {
                time: t_start + elapsed,
                channel: label,
            });
            *r = rng.random();
            full = false;
            if elapsed >= self.dt {
                return Ok(());
            }
        }
    }

    fn choose_channel(&self, psi: &CVector, rng: &mut ChaCha8Rng) -> Result<ChannelLabel> {
        let weights: Vec<f64> = self
            .system
            .channels()
            .iter()
            .map(|c| (&c.operator * psi).norm_squared())
            .collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidState(
                "norm fell below the jump threshold with no open channel".into(),
            ));
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (c, w) in self.system.channels().iter().zip(&weights) {
            acc += w;
            if u < acc {
                return Ok(c.label);
            }
        }
        let last = weights.iter().rposition(|&w| w > 0.0).expect("positive total");
        Ok(self.system.channels()[last].label)
    }

    /// No open channel and an energy eigenstate: nothing can change any more.
    fn is_settled(&self, psi: &CVector) -> bool {
        let open = self
            .system
            .channels()
            .iter()
            .any(|c| (&c.operator * psi).norm_squared() > 0.0);
        if open {
            return false;
        }
        let h = self.system.hamiltonian();
        let hp = h * psi;
        let n2 = psi.norm_squared();
        let energy = psi.dotc(&hp) / C64::from(n2);
        (hp - psi * energy).norm() <= 1e-14 * psi.norm() * (1.0 + energy.norm())
    }
}

fn populations(psi: &CVector) -> Vec<f64> {
    let n2 = psi.norm_squared();
    psi.iter().map(|z| z.norm_sqr() / n2).collect()
}

/// Single trajectory with a freshly built engine.
pub fn run_trajectory(
    system: &QuantumSystem,
    psi0: &CVector,
    seed: u64,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    TrajectoryEngine::new(system, grid.dt())?.run(psi0, seed, grid, true)
}

/// `n_traj` records with seeds from [`trajectory_seed`], in index order.
pub fn run_ensemble(
    system: &QuantumSystem,
    psi0: &CVector,
    n_traj: usize,
    master_seed: u64,
    grid: &TimeGrid,
) -> Result<Vec<TrajectoryRecord>> {
    let engine = TrajectoryEngine::new(system, grid.dt())?;
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| engine.run(psi0, trajectory_seed(master_seed, i), grid, false))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsemblePopulations {
    pub times: Vec<f64>,
    /// `mean[k][level]`.
    pub mean: Vec<Vec<f64>>,
    /// Standard error of the mean, same layout.
    pub stderr: Vec<Vec<f64>>,
    pub n_traj: usize,
}

/// Mean level populations over `n_traj` trajectories.
///
/// Trajectories are summed in fixed chunks of 256 and the chunk sums are
/// combined in index order, so the result does not depend on the number
/// of workers.
pub fn ensemble_populations(
    system: &QuantumSystem,
    psi0: &CVector,
    n_traj: usize,
    master_seed: u64,
    grid: &TimeGrid,
) -> Result<EnsemblePopulations> {
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be >= 1"));
    }
    let engine = TrajectoryEngine::new(system, grid.dt())?;
    let d = system.dim();
    let n_t = grid.len();
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = (0..n_traj.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0.0; n_t * d];
            let mut sq = vec![0.0; n_t * d];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_traj) {
                let rec = engine.run(psi0, trajectory_seed(master_seed, i as u64), grid, true)?;
                let pops = rec.populations.expect("requested");
                for (k, row) in pops.iter().enumerate() {
                    for (l, &p) in row.iter().enumerate() {
                        sum[k * d + l] += p;
                        sq[k * d + l] += p * p;
                    }
                }
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; n_t * d];
    let mut sq = vec![0.0; n_t * d];
    for (s, q) in &chunks {
        for j in 0..n_t * d {
            sum[j] += s[j];
            sq[j] += q[j];
        }
    }
    let n = n_traj as f64;
    let mut mean = Vec::with_capacity(n_t);
    let mut stderr = Vec::with_capacity(n_t);
    for k in 0..n_t {
        let m: Vec<f64> = (0..d).map(|l| sum[k * d + l] / n).collect();
        let e: Vec<f64> = (0..d)
            .map(|l| {
                if n_traj < 2 {
                    return 0.0;
                }
                let var = (sq[k * d + l] / n - m[l] * m[l]).max(0.0) * n / (n - 1.0);
                (var / n).sqrt()
            })
            .collect();
        mean.push(m);
        stderr.push(e);
    }
    Ok(EnsemblePopulations {
        times: grid.times(),
        mean,
        stderr,
        n_traj,
    })
}
