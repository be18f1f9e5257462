//! Extended Kalman Filter over the 8-state viscoelastic contact model:
//! penetration `d`, lumped stiffness `k`, lumped damping `lambda`, and their
//! first (and for the parameters, second) derivatives. The filter takes the
//! measured contact force as input and corrects on the probe displacement
//! past first contact.
//!
//! Mean propagation uses an RK4 step; the discrete-time Jacobian is the
//! matching variational (tangent) propagation, so it agrees with finite
//! differences of the step to machine-level accuracy.

use core::fmt;

use nalgebra::{SMatrix, SVector};

use crate::contact::{self, IndentationTrace, LumpedParams, MaterialParams};

pub const STATE_DIM: usize = 8;

pub type StateVec = SVector<f64, STATE_DIM>;
pub type StateMat = SMatrix<f64, STATE_DIM, STATE_DIM>;

// State indices.
const D: usize = 0;
const K: usize = 1;
const LAM: usize = 2;
const DDOT: usize = 3;
const KDOT: usize = 4;
const LAMDOT: usize = 5;
const KDDOT: usize = 6;
const LAMDDOT: usize = 7;

/// Penetration floor for the one-sided derivative convention at d = 0.
const D_DERIV_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EkfError {
    /// State or covariance became non-finite; the caller resets the filter.
    Diverged,
    /// Innovation covariance is not positive.
    NumericalFailure,
    /// Configuration out of range.
    InvalidConfig,
    /// Trace violates the indentation-speed envelope or is too short.
    InvalidTrace,
}

impl fmt::Display for EkfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EkfError::Diverged => write!(f, "filter state diverged"),
            EkfError::NumericalFailure => write!(f, "innovation covariance not positive"),
            EkfError::InvalidConfig => write!(f, "invalid filter configuration"),
            EkfError::InvalidTrace => write!(f, "trace outside the supported envelope"),
        }
    }
}

impl core::error::Error for EkfError {}

/// Filter configuration: effective interaction mass, process noise spectral
/// densities per chain, measurement noise, and the step period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EkfConfig {
    /// Effective interaction mass (kg): tool plus reflected robot inertia.
    pub effective_mass: f64,
    /// White-acceleration density on the penetration chain (m^2/s^3).
    pub q_penetration: f64,
    /// White-jerk density on the stiffness chain ((N/m^1.5)^2/s^5).
    pub q_stiffness: f64,
    /// White-jerk density on the damping chain ((N s/m^1.5)^2/s^5).
    pub q_damping: f64,
    /// Displacement measurement variance (m^2).
    pub measurement_variance: f64,
    /// Nominal step period (s); at most 10 ms.
    pub dt: f64,
}

impl EkfConfig {
    pub fn validate(&self) -> Result<(), EkfError> {
        let ok = self.effective_mass > 0.0
            && self.q_penetration > 0.0
            && self.q_stiffness > 0.0
            && self.q_damping > 0.0
            && self.measurement_variance > 0.0
            && self.dt > 0.0
            && self.dt <= 10e-3 + 1e-12;
        if ok {
            Ok(())
        } else {
            Err(EkfError::InvalidConfig)
        }
    }
}

impl Default for EkfConfig {
    fn default() -> Self {
        EkfConfig {
            effective_mass: 0.5,
            q_penetration: 1e-4,
            q_stiffness: 5e11,
            q_damping: 5e7,
            measurement_variance: 1e-12,
            dt: 1e-3,
        }
    }
}

/// Filter state: mean vector and covariance.
#[derive(Clone, Debug)]
pub struct EkfState {
    pub x: StateVec,
    pub p: StateMat,
}

impl EkfState {
    /// Initial state for a probing cycle: zero penetration, stiffness from a
    /// prior Young's modulus, zero damping, wide diagonal covariance on the
    /// parameter entries (ten times the prior scale).
    pub fn initial(prior: &MaterialParams) -> Self {
        let lumped = contact::to_lumped(prior);
        let mut x = StateVec::zeros();
        x[K] = lumped.stiffness;
        // Damping scale for the covariance prior: one unit of viscosity.
        let unit_eta = MaterialParams {
            viscosity: 1.0,
            ..*prior
        };
        let lam_scale = contact::to_lumped(&unit_eta).damping;
        let mut p = StateMat::zeros();
        p[(D, D)] = 1e-8;
        p[(K, K)] = (10.0 * lumped.stiffness).powi(2);
        p[(LAM, LAM)] = (10.0 * lam_scale).powi(2);
        p[(DDOT, DDOT)] = 1e-6;
        p[(KDOT, KDOT)] = (lumped.stiffness * 10.0).powi(2);
        p[(LAMDOT, LAMDOT)] = (lam_scale * 10.0).powi(2);
        p[(KDDOT, KDDOT)] = (lumped.stiffness * 100.0).powi(2);
        p[(LAMDDOT, LAMDDOT)] = (lam_scale * 100.0).powi(2);
        EkfState { x, p }
    }

    pub fn lumped(&self) -> LumpedParams {
        LumpedParams { stiffness: self.x[K], damping: self.x[LAM] }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite()) && self.p.iter().all(|v| v.is_finite())
    }
}

/// Continuous-time dynamics with force input `u` (N).
fn dynamics(x: &StateVec, u: f64, cfg: &EkfConfig) -> StateVec {
    let d = x[D].max(0.0);
    let sqrt_d = d.sqrt();
    let force_balance = u - x[K] * sqrt_d * d - x[LAM] * sqrt_d * x[DDOT];
    let mut dx = StateVec::zeros();
    dx[D] = x[DDOT];
    dx[K] = x[KDOT];
    dx[LAM] = x[LAMDOT];
    dx[DDOT] = force_balance / cfg.effective_mass;
    dx[KDOT] = x[KDDOT];
    dx[LAMDOT] = x[LAMDDOT];
    dx
}

/// Continuous-time Jacobian of `dynamics` with the one-sided convention at
/// d = 0 (square roots floored for the singular partial).
fn dynamics_jacobian(x: &StateVec, cfg: &EkfConfig) -> StateMat {
    let d = x[D].max(0.0);
    let sqrt_d = d.sqrt();
    let sqrt_d_floor = d.max(D_DERIV_FLOOR).sqrt();
    let m = cfg.effective_mass;
    let mut a = StateMat::zeros();
    a[(D, DDOT)] = 1.0;
    a[(K, KDOT)] = 1.0;
    a[(LAM, LAMDOT)] = 1.0;
    a[(KDOT, KDDOT)] = 1.0;
    a[(LAMDOT, LAMDDOT)] = 1.0;
    a[(DDOT, D)] = (-1.5 * x[K] * sqrt_d - 0.5 * x[LAM] * x[DDOT] / sqrt_d_floor) / m;
    a[(DDOT, K)] = -sqrt_d * d / m;
    a[(DDOT, LAM)] = -sqrt_d * x[DDOT] / m;
    a[(DDOT, DDOT)] = -x[LAM] * sqrt_d / m;
    a
}

/// One RK4 step of the mean dynamics over `dt` with zero-order-hold input.
pub fn propagate_mean(x: &StateVec, u: f64, cfg: &EkfConfig, dt: f64) -> StateVec {
    let k1 = dynamics(x, u, cfg);
    let k2 = dynamics(&(x + k1 * (dt / 2.0)), u, cfg);
    let k3 = dynamics(&(x + k2 * (dt / 2.0)), u, cfg);
    let k4 = dynamics(&(x + k3 * dt), u, cfg);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Analytic Jacobian of the discrete-time propagation (the RK4 step),
/// computed by chaining the tangent dynamics through the four stages.
pub fn jacobian(x: &StateVec, u: f64, cfg: &EkfConfig, dt: f64) -> StateMat {
    let eye = StateMat::identity();
    let k1 = dynamics(x, u, cfg);
    let a1 = dynamics_jacobian(x, cfg);
    let x2 = x + k1 * (dt / 2.0);
    let k2 = dynamics(&x2, u, cfg);
    let a2 = dynamics_jacobian(&x2, cfg) * (eye + a1 * (dt / 2.0));
    let x3 = x + k2 * (dt / 2.0);
    let k3 = dynamics(&x3, u, cfg);
    let a3 = dynamics_jacobian(&x3, cfg) * (eye + a2 * (dt / 2.0));
    let x4 = x + k3 * dt;
    let a4 = dynamics_jacobian(&x4, cfg) * (eye + a3 * dt);
    eye + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0)
}

/// Discrete process noise for one step: white acceleration on the
/// penetration chain, white jerk on each parameter chain.
fn process_noise(cfg: &EkfConfig, dt: f64) -> StateMat {
    let mut q = StateMat::zeros();
    let (dt2, dt3, dt4, dt5) = (dt * dt, dt * dt * dt, dt * dt * dt * dt, dt * dt * dt * dt * dt);
    // Penetration chain (d, d_dot), white acceleration density q_penetration.
    let qd = cfg.q_penetration;
    q[(D, D)] = qd * dt3 / 3.0;
    q[(D, DDOT)] = qd * dt2 / 2.0;
    q[(DDOT, D)] = qd * dt2 / 2.0;
    q[(DDOT, DDOT)] = qd * dt;
    // Parameter chains (p, p_dot, p_ddot), white jerk density.
    for (qc, (i0, i1, i2)) in [
        (cfg.q_stiffness, (K, KDOT, KDDOT)),
        (cfg.q_damping, (LAM, LAMDOT, LAMDDOT)),
    ] {
        q[(i0, i0)] = qc * dt5 / 20.0;
        q[(i0, i1)] = qc * dt4 / 8.0;
        q[(i1, i0)] = qc * dt4 / 8.0;
        q[(i0, i2)] = qc * dt3 / 6.0;
        q[(i2, i0)] = qc * dt3 / 6.0;
        q[(i1, i1)] = qc * dt3 / 3.0;
        q[(i1, i2)] = qc * dt2 / 2.0;
        q[(i2, i1)] = qc * dt2 / 2.0;
        q[(i2, i2)] = qc * dt;
    }
    q
}

#[inline]
fn symmetrize(p: &mut StateMat) {
    let pt = p.transpose();
    *p = (*p + pt) * 0.5;
}

/// Prediction step over `dt` with force input `u`.
pub fn predict(state: &EkfState, u: f64, cfg: &EkfConfig, dt: f64) -> Result<EkfState, EkfError> {
    let f = jacobian(&state.x, u, cfg, dt);
    let x = propagate_mean(&state.x, u, cfg, dt);
    let mut p = f * state.p * f.transpose() + process_noise(cfg, dt);
    symmetrize(&mut p);
    let next = EkfState { x, p };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(EkfError::Diverged)
    }
}

/// Measurement update with the displacement measurement z = d (m), using the
/// Joseph-form covariance update; the penetration estimate is clamped at 0.
pub fn update(state: &EkfState, z: f64, cfg: &EkfConfig) -> Result<EkfState, EkfError> {
    let r = cfg.measurement_variance;
    let s = state.p[(D, D)] + r;
    if !(s > 0.0) || !s.is_finite() {
        return Err(EkfError::NumericalFailure);
    }
    let innovation = z - state.x[D];
    let gain = state.p.column(D) / s;
    let mut x = state.x + gain * innovation;
    // Joseph form: (I - K H) P (I - K H)^T + K R K^T with H = e_d^T.
    let mut ikh = StateMat::identity();
    for i in 0..STATE_DIM {
        ikh[(i, D)] -= gain[i];
    }
    let mut p = ikh * state.p * ikh.transpose() + gain * r * gain.transpose();
    symmetrize(&mut p);
    x[D] = x[D].max(0.0);
    let next = EkfState { x, p };
    if next.is_finite() {
        Ok(next)
    } else {
        Err(EkfError::Diverged)
    }
}

/// Result of running the filter over one indentation trace.
#[derive(Clone, Debug)]
pub struct EstimationResult {
    /// Estimated Young's modulus (Pa).
    pub young_modulus: f64,
    /// Estimated viscosity (Pa s); may be slightly negative when the true
    /// damping is zero.
    pub viscosity: f64,
    /// Stiffness innovations settled over the final fifth of the trace.
    pub converged: bool,
    pub final_state: EkfState,
}

/// Run predict/update over a recorded or synthetic indentation trace and
/// convert the final lumped estimates back to material parameters.
pub fn estimate_elasticity(
    trace: &IndentationTrace,
    cfg: &EkfConfig,
    prior: &MaterialParams,
) -> Result<EstimationResult, EkfError> {
    cfg.validate()?;
    if trace.len() < 2 {
        return Err(EkfError::InvalidTrace);
    }
    if trace.rate.iter().any(|r| r.abs() > contact::MAX_INDENTATION_SPEED * (1.0 + 1e-9)) {
        return Err(EkfError::InvalidTrace);
    }
    let mut state = EkfState::initial(prior);
    let settle_from = trace.len() - trace.len() / 5;
    let mut max_rel_step = 0.0f64;
    let mut prev_k = state.x[K];
    for i in 1..trace.len() {
        let dt = trace.time[i] - trace.time[i - 1];
        if !(dt > 0.0) {
            return Err(EkfError::InvalidTrace);
        }
        state = predict(&state, trace.force[i - 1], cfg, dt)?;
        state = update(&state, trace.depth[i], cfg)?;
        if i >= settle_from {
            let denom = state.x[K].abs().max(1e-12);
            max_rel_step = max_rel_step.max((state.x[K] - prev_k).abs() / denom);
        }
        prev_k = state.x[K];
    }
    let lumped = state.lumped();
    let mat = contact::from_lumped(&lumped, prior.poisson_ratio, prior.indenter_radius);
    Ok(EstimationResult {
        young_modulus: mat.young_modulus,
        viscosity: mat.viscosity,
        converged: max_rel_step < 5e-3 && state.is_finite(),
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::IndentationSchedule;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn material(e_kpa: f64, eta: f64) -> MaterialParams {
        MaterialParams::new(e_kpa * 1e3, eta, 0.45, 5e-3).unwrap()
    }

    fn prior() -> MaterialParams {
        material(20.0, 0.0)
    }

    #[test]
    fn equilibrium_at_rest_is_fixed_point() {
        let cfg = EkfConfig::default();
        let state = EkfState::initial(&prior());
        let next = predict(&state, 0.0, &cfg, cfg.dt).unwrap();
        // d = 0, all derivatives zero except the parameter priors: mean moves
        // only through the (zero) derivative chain entries.
        assert_relative_eq!(next.x[D], 0.0, epsilon = 1e-15);
        assert_relative_eq!(next.x[DDOT], 0.0, epsilon = 1e-15);
        assert_relative_eq!(next.x[K], state.x[K], epsilon = 1e-12);
    }

    #[test]
    fn covariance_stays_symmetric_psd() {
        let cfg = EkfConfig::default();
        let mat = material(50.0, 2.0);
        let sched = IndentationSchedule::dwell(2e-3, 2e-3, 0.25, 1e-3);
        let trace = contact::synth_trace(&mat, &sched, 0.0, 3).unwrap();
        let mut state = EkfState::initial(&prior());
        for i in 1..trace.len() {
            state = predict(&state, trace.force[i - 1], &cfg, 1e-3).unwrap();
            state = update(&state, trace.depth[i], &cfg).unwrap();
            let asym = (state.p - state.p.transpose()).abs().max();
            assert!(asym <= 1e-12 * state.p.abs().max().max(1.0));
            let eig = state.p.symmetric_eigenvalues();
            let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-10 * state.p.trace().abs());
        }
    }

    #[test]
    fn propagation_matches_fine_step_ode_oracle() {
        // Constant parameters, zero process noise influence on the mean:
        // RK4 at dt must match a much finer integration of the same dynamics.
        let cfg = EkfConfig::default();
        let mut x = StateVec::zeros();
        x[D] = 1e-3;
        x[K] = 6000.0;
        x[LAM] = 2.0;
        x[DDOT] = 1.5e-3;
        let u = 0.35;
        let dt = 1e-3;
        // 50-step trajectory at the filter step size.
        let mut coarse = x;
        for _ in 0..50 {
            coarse = propagate_mean(&coarse, u, &cfg, dt);
        }
        // Step-halving oracle: same dynamics at 64x finer steps.
        let n = 64 * 50;
        let mut fine = x;
        for _ in 0..n {
            fine = propagate_mean(&fine, u, &cfg, dt * 50.0 / n as f64);
        }
        for i in 0..STATE_DIM {
            let scale = fine[i].abs().max(1e-9);
            assert!(
                (coarse[i] - fine[i]).abs() / scale < 1e-6,
                "state {i}: {} vs {}",
                coarse[i],
                fine[i]
            );
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let cfg = EkfConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let mut x = StateVec::zeros();
            x[D] = rng.gen_range(1e-5..4e-3);
            x[K] = rng.gen_range(500.0..30000.0);
            x[LAM] = rng.gen_range(-5.0..20.0);
            x[DDOT] = rng.gen_range(-5e-3..5e-3);
            x[KDOT] = rng.gen_range(-1e3..1e3);
            x[LAMDOT] = rng.gen_range(-2.0..2.0);
            x[KDDOT] = rng.gen_range(-1e4..1e4);
            x[LAMDDOT] = rng.gen_range(-20.0..20.0);
            let u = rng.gen_range(-0.5..2.0);
            let dt = 1e-3;
            let jac = jacobian(&x, u, &cfg, dt);
            for col in 0..STATE_DIM {
                let h = (x[col].abs() * 1e-7).max(1e-10);
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let fp = propagate_mean(&xp, u, &cfg, dt);
                let fm = propagate_mean(&xm, u, &cfg, dt);
                for row in 0..STATE_DIM {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    // Tolerance: 1e-5 relative plus the FD roundoff floor
                    // eps * |f| / h for cancellation in the difference.
                    let roundoff = 1e-13 * fp[row].abs().max(fm[row].abs()) / h;
                    let tol = 1e-5 * jac[(row, col)].abs().max(fd.abs()) + roundoff + 1e-14;
                    assert!(
                        (jac[(row, col)] - fd).abs() <= tol,
                        "J[{row},{col}] = {} vs fd {}",
                        jac[(row, col)],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn jacobian_has_exact_integrator_chain_rows() {
        let cfg = EkfConfig::default();
        let mut x = StateVec::zeros();
        x[D] = 2e-3;
        x[K] = 6000.0;
        let dt = 1e-3;
        let jac = jacobian(&x, 0.5, &cfg, dt);
        // k_dot and lambda_dot rows are exact single integrators.
        assert_relative_eq!(jac[(KDOT, KDOT)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(jac[(KDOT, KDDOT)], dt, epsilon = 1e-15);
        assert_relative_eq!(jac[(LAMDOT, LAMDOT)], 1.0, epsilon = 1e-15);
        assert_relative_eq!(jac[(LAMDOT, LAMDDOT)], dt, epsilon = 1e-15);
        for col in 0..STATE_DIM {
            if col != KDOT && col != KDDOT {
                assert_eq!(jac[(KDOT, col)], if col == KDOT { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn jacobian_finite_at_zero_penetration() {
        let cfg = EkfConfig::default();
        let mut x = StateVec::zeros();
        x[K] = 5000.0;
        x[LAM] = 3.0;
        x[DDOT] = 2e-3;
        let jac = jacobian(&x, 0.1, &cfg, 1e-3);
        assert!(jac.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_innovation_update_keeps_mean_reduces_variance() {
        let cfg = EkfConfig::default();
        let mut state = EkfState::initial(&prior());
        state.x[D] = 1.5e-3;
        state.p[(D, D)] = 1e-8;
        let before = state.p[(D, D)];
        let next = update(&state, 1.5e-3, &cfg).unwrap();
        assert_relative_eq!(next.x[D], 1.5e-3, epsilon = 1e-15);
        assert!(next.p[(D, D)] < before);
    }

    #[test]
    fn infinite_measurement_noise_is_a_no_op() {
        let mut cfg = EkfConfig::default();
        cfg.measurement_variance = 1e30;
        let mut state = EkfState::initial(&prior());
        state.x[D] = 1e-3;
        let next = update(&state, 2e-3, &cfg).unwrap();
        for i in 0..STATE_DIM {
            assert_relative_eq!(next.x[i], state.x[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn linear_small_signal_matches_linear_kalman_oracle() {
        // Freeze the Jacobian at a reference point and feed both filters the
        // same innovation sequence: in the linear regime the EKF update must
        // coincide with the textbook KF equations.
        let cfg = EkfConfig::default();
        let mut state = EkfState::initial(&prior());
        state.x[D] = 2e-3;
        state.x[DDOT] = 1e-3;
        let z = 2.000004e-3;
        let next = update(&state, z, &cfg).unwrap();
        // Oracle: K = P H^T / (H P H^T + R), x+ = x + K (z - H x),
        // P+ = (I - K H) P (I - K H)^T + K R K^T.
        let h = {
            let mut h = SMatrix::<f64, 1, STATE_DIM>::zeros();
            h[(0, D)] = 1.0;
            h
        };
        let s = (h * state.p * h.transpose())[(0, 0)] + cfg.measurement_variance;
        let k = state.p * h.transpose() / s;
        let x_oracle = state.x + k * (z - state.x[D]);
        let ikh = StateMat::identity() - k * h;
        let p_oracle =
            ikh * state.p * ikh.transpose() + k * cfg.measurement_variance * k.transpose();
        for i in 0..STATE_DIM {
            assert_relative_eq!(next.x[i], x_oracle[i], epsilon = 1e-12, max_relative = 1e-8);
            for j in 0..STATE_DIM {
                assert_relative_eq!(
                    next.p[(i, j)],
                    p_oracle[(i, j)],
                    epsilon = 1e-12,
                    max_relative = 1e-8
                );
            }
        }
    }

    #[test]
    fn recovers_elasticity_from_noiseless_traces() {
        let cfg = EkfConfig::default();
        let sched = IndentationSchedule::dwell(2e-3, 2e-3, 0.25, 1e-3);
        for e_kpa in [10.0, 30.0, 50.0, 100.0, 150.0] {
            for eta in [0.0, 2.0] {
                let mat = material(e_kpa, eta);
                let trace = contact::synth_trace(&mat, &sched, 0.0, 42).unwrap();
                let est = estimate_elasticity(&trace, &cfg, &prior()).unwrap();
                let rel = (est.young_modulus - mat.young_modulus).abs() / mat.young_modulus;
                assert!(
                    rel < 0.05,
                    "E = {e_kpa} kPa, eta = {eta}: estimated {} kPa (rel err {rel:.4})",
                    est.young_modulus / 1e3
                );
            }
        }
    }

    #[test]
    fn zero_damping_estimate_is_statistically_zero() {
        let cfg = EkfConfig::default();
        let sched = IndentationSchedule::dwell(2e-3, 2e-3, 0.25, 1e-3);
        let mat = material(50.0, 0.0);
        let trace = contact::synth_trace(&mat, &sched, 0.0, 5).unwrap();
        let est = estimate_elasticity(&trace, &cfg, &prior()).unwrap();
        let lam = est.final_state.x[LAM];
        let lam_std = est.final_state.p[(LAM, LAM)].sqrt();
        assert!(
            lam.abs() <= 3.0 * lam_std,
            "lambda = {lam} not within 3 sigma ({lam_std})"
        );
    }

    #[test]
    fn tracks_material_step_across_cycles() {
        let cfg = EkfConfig::default();
        let sched = IndentationSchedule::dwell(2e-3, 2e-3, 0.25, 1e-3);
        let soft = material(50.0, 1.0);
        let stiff = material(100.0, 1.0);
        // First cycle on the soft material.
        let t1 = contact::synth_trace(&soft, &sched, 0.0, 7).unwrap();
        let e1 = estimate_elasticity(&t1, &cfg, &prior()).unwrap();
        assert_relative_eq!(e1.young_modulus, 50e3, max_relative = 0.05);
        // Two further cycles on the stiff material, each starting fresh from
        // the shared prior (one filter instance per probing cycle).
        let t2 = contact::synth_trace(&stiff, &sched, 0.0, 8).unwrap();
        let e2 = estimate_elasticity(&t2, &cfg, &prior()).unwrap();
        let t3 = contact::synth_trace(&stiff, &sched, 0.0, 9).unwrap();
        let e3 = estimate_elasticity(&t3, &cfg, &prior()).unwrap();
        assert_relative_eq!(e3.young_modulus, 100e3, max_relative = 0.05);
        assert!((e2.young_modulus - 100e3).abs() < (e1.young_modulus - 100e3).abs());
    }

    #[test]
    fn nis_statistic_within_chi_square_band() {
        // Long run with measurement noise matching the configuration: the
        // time-averaged normalized innovation squared must lie in the 95%
        // chi-square band. Bounds frozen from the chi2(N) quantiles.
        let mut cfg = EkfConfig::default();
        cfg.measurement_variance = (5e-5f64).powi(2);
        let mat = material(60.0, 3.0);
        // 16 s of slow oscillation between 1 mm and 3 mm depth.
        let mut segments = alloc::vec::Vec::new();
        segments.push((1.0, 2e-3));
        for _ in 0..8 {
            segments.push((1.0, 1e-3));
            segments.push((1.0, -1e-3));
        }
        let sched = IndentationSchedule { dt: 1e-3, segments };
        let trace = contact::synth_trace(&mat, &sched, 0.0, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1001);
        let normal = rand_distr::Normal::new(0.0, cfg.measurement_variance.sqrt()).unwrap();
        let mut state = EkfState::initial(&prior());
        let burn_in = 2000;
        let mut nis_sum = 0.0;
        let mut count = 0usize;
        for i in 1..trace.len() {
            state = predict(&state, trace.force[i - 1], &cfg, 1e-3).unwrap();
            let z = trace.depth[i] + rand_distr::Distribution::sample(&normal, &mut rng);
            let s = state.p[(D, D)] + cfg.measurement_variance;
            let innovation = z - state.x[D];
            if i > burn_in {
                nis_sum += innovation * innovation / s;
                count += 1;
            }
            state = update(&state, z, &cfg).unwrap();
        }
        let mean_nis = nis_sum / count as f64;
        // 95% band for the mean of N unit chi-square variables.
        let lo = 1.0 - 1.96 * (2.0 / count as f64).sqrt();
        let hi = 1.0 + 1.96 * (2.0 / count as f64).sqrt();
        assert!(
            mean_nis > lo && mean_nis < hi,
            "mean NIS {mean_nis:.4} outside [{lo:.4}, {hi:.4}] over {count} samples"
        );
    }
}
