//! Two-time correlations through the quantum regression theorem.
//!
//! `C(t, τ) = Tr[A · Λ_τ(L ρ(t) R)]` with `Λ_τ` the Lindblad propagation by
//! `τ`. Two routes are provided:
//!
//! * [`two_time_correlation`] propagates `A` backwards once in the
//!   Heisenberg picture (`Tr[A Λ_τ(X)] = Tr[Λ†_τ(A) X]`) and contracts the
//!   result with every modified state. Cost is `O(N_τ d⁴ + N_t N_τ d²)`.
//! * [`two_time_correlation_forward`] re-propagates `L ρ(t) R` forwards for
//!   every `t` slice, `O(N_t N_τ d⁴)`. It is kept as an independent route
//!   for checking the first one.
//!
//! Both use the same fixed-step [`Propagator`], so they agree to rounding.

use rayon::prelude::*;

use super::lindblad::{vectorize, Propagator};
use super::{check_square, QuantumSystem, TimeGrid};
use crate::{CMatrix, CVector, Error, Result, C64};

fn validate(
    system: &QuantumSystem,
    rho_t: &[CMatrix],
    ops: [&CMatrix; 3],
    tau_grid: &TimeGrid,
) -> Result<()> {
    if tau_grid.t0() < 0.0 {
        return Err(Error::NegativeDelay(tau_grid.t0()));
    }
    if tau_grid.t0() != 0.0 {
        return Err(Error::InvalidGrid(format!(
            "delay grid must start at 0, got {}",
            tau_grid.t0()
        )));
    }
    let d = system.dim();
    for op in ops {
        check_square(op, d)?;
    }
    for rho in rho_t {
        check_square(rho, d)?;
    }
    Ok(())
}

/// Row `i` holds `C(t_i, τ_k)` for `k = 0..tau_grid.len()`.
pub fn two_time_correlation(
    system: &QuantumSystem,
    rho_t: &[CMatrix],
    late_op: &CMatrix,
    early_left: &CMatrix,
    early_right: &CMatrix,
    tau_grid: &TimeGrid,
) -> Result<CMatrix> {
    validate(system, rho_t, [late_op, early_left, early_right], tau_grid)?;
    let propagator = Propagator::new(system, tau_grid.dt())?;
    Ok(correlate_adjoint(
        &propagator,
        rho_t,
        late_op,
        early_left,
        early_right,
        tau_grid.len(),
    ))
}

/// Heisenberg-picture regression with a prebuilt propagator.
pub(crate) fn correlate_adjoint(
    propagator: &Propagator,
    rho_t: &[CMatrix],
    late_op: &CMatrix,
    early_left: &CMatrix,
    early_right: &CMatrix,
    n_tau: usize,
) -> CMatrix {
    // Tr[A X] = vec(Aᵀ) · vec(X), and Tr[A P^k x] = ((Pᵀ)^k vec(Aᵀ)) · x.
    let p_t = propagator.matrix().transpose();
    let d2 = p_t.nrows();
    let mut adjoint = CMatrix::zeros(d2, n_tau);
    let mut u = vectorize(&late_op.transpose());
    for k in 0..n_tau {
        adjoint.set_column(k, &u);
        if k + 1 < n_tau {
            u = &p_t * &u;
        }
    }
    let rows: Vec<CVector> = rho_t
        .par_iter()
        .map(|rho| {
            let y = vectorize(&(early_left * rho * early_right));
            adjoint.tr_mul(&y)
        })
        .collect();
    let mut out = CMatrix::zeros(rho_t.len(), n_tau);
    for (i, row) in rows.iter().enumerate() {
        for k in 0..n_tau {
            out[(i, k)] = row[k];
        }
    }
    out
}

/// Schrödinger-picture regression: each slice is propagated on its own.
pub fn two_time_correlation_forward(
    system: &QuantumSystem,
    rho_t: &[CMatrix],
    late_op: &CMatrix,
    early_left: &CMatrix,
    early_right: &CMatrix,
    tau_grid: &TimeGrid,
) -> Result<CMatrix> {
    validate(system, rho_t, [late_op, early_left, early_right], tau_grid)?;
    let propagator = Propagator::new(system, tau_grid.dt())?;
    let n_tau = tau_grid.len();
    let a = vectorize(&late_op.transpose());
    let rows: Vec<Vec<C64>> = rho_t
        .par_iter()
        .map(|rho| {
            let mut x = vectorize(&(early_left * rho * early_right));
            let mut row = Vec::with_capacity(n_tau);
            for k in 0..n_tau {
                row.push(a.dot(&x));
                if k + 1 < n_tau {
                    x = propagator.apply(&x);
                }
            }
            row
        })
        .collect();
    let mut out = CMatrix::zeros(rho_t.len(), n_tau);
    for (i, row) in rows.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            out[(i, k)] = *v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, ket_bra, trace, ChannelLabel, CollapseChannel};

    fn two_level(gamma: f64, gamma_phi: f64) -> QuantumSystem {
        let mut channels = vec![];
        channels.extend(
            CollapseChannel::scaled(ChannelLabel::ExcitonDecay, gamma, &ket_bra(2, 0, 1)).unwrap(),
        );
        channels.extend(
            CollapseChannel::scaled(
                ChannelLabel::ExcitonDephasing,
                2.0 * gamma_phi,
                &ket_bra(2, 1, 1),
            )
            .unwrap(),
        );
        QuantumSystem::new(CMatrix::zeros(2, 2), channels).unwrap()
    }

    #[test]
    fn field_correlation_matches_bloch_solution() {
        let (gamma, gamma_phi) = (1.0 / 200.0, 1.0 / 500.0);
        let sys = two_level(gamma, gamma_phi);
        let t_grid = TimeGrid::new(0.0, 400.0, 2.0).unwrap();
        let tau_grid = TimeGrid::new(0.0, 300.0, 2.0).unwrap();
        let rho = evolve(&sys, &ket_bra(2, 1, 1), &t_grid).unwrap();
        let sigma = ket_bra(2, 0, 1);
        let sigma_dag = sigma.adjoint();
        let id = CMatrix::identity(2, 2);
        // <σ⁺(t) σ⁻(t+τ)> = Tr[σ⁻ Λ_τ(ρ(t) σ⁺)]
        let c = two_time_correlation(&sys, &rho, &sigma, &id, &sigma_dag, &tau_grid).unwrap();
        for (i, t) in t_grid.times().into_iter().enumerate().step_by(17) {
            for (k, tau) in tau_grid.times().into_iter().enumerate().step_by(13) {
                let expected = (-gamma * t).exp() * (-(gamma / 2.0 + gamma_phi) * tau).exp();
                assert!((c[(i, k)] - C64::from(expected)).norm() < 1e-9, "t={t} tau={tau}");
            }
        }
    }

    #[test]
    fn adjoint_and_forward_routes_agree() {
        let sys = two_level(0.01, 0.003);
        let t_grid = TimeGrid::new(0.0, 100.0, 5.0).unwrap();
        let tau_grid = TimeGrid::new(0.0, 80.0, 5.0).unwrap();
        let mut rho0 = CMatrix::from_element(2, 2, C64::new(0.3, 0.1));
        rho0[(0, 0)] = C64::from(0.4);
        rho0[(1, 1)] = C64::from(0.6);
        rho0[(1, 0)] = C64::new(0.3, -0.1);
        let rho = evolve(&sys, &rho0, &t_grid).unwrap();
        let a = ket_bra(2, 0, 1);
        let b = CMatrix::identity(2, 2);
        let c = a.adjoint();
        let adj = two_time_correlation(&sys, &rho, &a, &b, &c, &tau_grid).unwrap();
        let fwd = two_time_correlation_forward(&sys, &rho, &a, &b, &c, &tau_grid).unwrap();
        assert!((adj - fwd).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn zero_delay_column_is_plain_expectation() {
        let sys = two_level(0.02, 0.01);
        let t_grid = TimeGrid::new(0.0, 50.0, 1.0).unwrap();
        let tau_grid = TimeGrid::new(0.0, 10.0, 1.0).unwrap();
        let rho = evolve(&sys, &ket_bra(2, 1, 1), &t_grid).unwrap();
        let n = ket_bra(2, 1, 1);
        let id = CMatrix::identity(2, 2);
        let c = two_time_correlation(&sys, &rho, &n, &id, &id, &tau_grid).unwrap();
        for (i, r) in rho.iter().enumerate() {
            assert_eq!(c[(i, 0)], trace(&(&n * r)));
        }
        // Identity insertion turns the regression into n(t + τ).
        for i in 0..20 {
            for k in 0..tau_grid.len() {
                assert!((c[(i, k)] - rho[i + k][(1, 1)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_symmetry_of_field_correlation() {
        let (gamma, gamma_phi) = (0.01, 0.004);
        let sys = two_level(gamma, gamma_phi);
        let grid = TimeGrid::new(0.0, 200.0, 2.0).unwrap();
        let rho = evolve(&sys, &ket_bra(2, 1, 1), &grid).unwrap();
        let sigma = ket_bra(2, 0, 1);
        let sd = sigma.adjoint();
        let id = CMatrix::identity(2, 2);
        // <σ⁺(t)σ⁻(t+τ)> and <σ⁺(t+τ)σ⁻(t)> = Tr[σ⁺ Λ_τ(σ⁻ ρ(t))].
        let direct = two_time_correlation(&sys, &rho, &sigma, &id, &sd, &grid).unwrap();
        let reversed = two_time_correlation(&sys, &rho, &sd, &sigma, &id, &grid).unwrap();
        for i in 0..40 {
            for k in 0..40 {
                assert!((direct[(i, k)] - reversed[(i, k)].conj()).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn negative_delay_is_rejected() {
        let sys = two_level(0.01, 0.0);
        let rho = vec![ket_bra(2, 1, 1)];
        let id = CMatrix::identity(2, 2);
        let tau = TimeGrid::new(-10.0, 10.0, 1.0).unwrap();
        assert!(matches!(
            two_time_correlation(&sys, &rho, &id, &id, &id, &tau),
            Err(Error::NegativeDelay(_))
        ));
    }
}
