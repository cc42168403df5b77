//! Brute-force integration of the resonant atom-cavity dynamics, used to
//! validate the closed-form pulse rules and the splitting-phase convention.
//!
//! The Schrödinger equation is integrated with a fixed-step classical
//! Runge-Kutta scheme in the frame co-rotating with mode `C1`, taking each
//! atom's ground level as its energy zero. In that frame the Hamiltonian
//! while one atom is tuned to a mode reads (hbar = 1)
//!
//! ```text
//! tuned to C1:  H = -delta n2 - i (omega/2) (s+ a1 - a1+ s-)
//! tuned to C2:  H = -delta (|e><e| + n2) - (omega/2) (s+ a2 + a2+ s-)
//! ```
//!
//! with the `C2` coupling carrying the polarization factor that turns the
//! rotation real axis by 90 degrees. Between pulses the free Hamiltonian is
//! `-delta n2`. Constant energy offsets are dropped as global phase.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::hilbert::{AtomLevel, ModeId, QuantumState, SystemConfig};

struct HamiltonianSpec {
    c2_stride: usize,
    c2_dim: usize,
    coupling: Option<Coupling>,
    delta: f64,
    omega: f64,
}

struct Coupling {
    atom_stride: usize,
    mode_stride: usize,
    mode_dim: usize,
    mode: ModeId,
}

impl HamiltonianSpec {
    /// Writes H|psi> into `out`.
    fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let e_idx = AtomLevel::E.index();
        for (idx, slot) in out.iter_mut().enumerate() {
            let n2 = (idx / self.c2_stride) % self.c2_dim;
            let mut diag = -self.delta * n2 as f64;
            if let Some(c) = &self.coupling {
                if c.mode == ModeId::C2 && (idx / c.atom_stride) % 3 == e_idx {
                    diag -= self.delta;
                }
            }
            *slot = Complex64::new(diag, 0.0) * psi[idx];
        }
        if let Some(c) = &self.coupling {
            let half = self.omega / 2.0;
            for idx in 0..psi.len() {
                if (idx / c.atom_stride) % 3 != e_idx {
                    continue;
                }
                let n = (idx / c.mode_stride) % c.mode_dim;
                if n + 1 >= c.mode_dim {
                    continue;
                }
                let partner = idx + c.atom_stride + c.mode_stride;
                let g = half * (n as f64 + 1.0).sqrt();
                match c.mode {
                    // -i g (s+ a1 - a1+ s-)
                    ModeId::C1 => {
                        out[idx] += Complex64::new(0.0, -g) * psi[partner];
                        out[partner] += Complex64::new(0.0, g) * psi[idx];
                    }
                    // -g (s+ a2 + a2+ s-)
                    ModeId::C2 => {
                        out[idx] -= Complex64::new(g, 0.0) * psi[partner];
                        out[partner] -= Complex64::new(g, 0.0) * psi[idx];
                    }
                }
            }
        }
    }
}

fn build_spec(
    state: &QuantumState,
    config: &SystemConfig,
    tuned: Option<(&str, ModeId)>,
) -> Result<HamiltonianSpec> {
    let layout = state.layout();
    let c2 = layout
        .mode_position(ModeId::C2)
        .ok_or_else(|| SimError::UnknownMode("C2".into()))?;
    let coupling = match tuned {
        None => None,
        Some((atom, mode)) => {
            let atom_pos = layout
                .atom_position(atom)
                .ok_or_else(|| SimError::UnknownAtom(atom.to_string()))?;
            let mode_pos = layout
                .mode_position(mode)
                .ok_or_else(|| SimError::UnknownMode(mode.name().to_string()))?;
            Some(Coupling {
                atom_stride: layout.stride(atom_pos),
                mode_stride: layout.stride(mode_pos),
                mode_dim: layout.subsystem_dim(mode_pos),
                mode,
            })
        }
    };
    Ok(HamiltonianSpec {
        c2_stride: layout.stride(c2),
        c2_dim: layout.subsystem_dim(c2),
        coupling,
        delta: config.delta,
        omega: config.omega_rabi,
    })
}

fn check_steps(config: &SystemConfig, duration: f64, steps: usize) -> Result<()> {
    if duration < 0.0 || !duration.is_finite() {
        return Err(SimError::NegativeDuration(duration));
    }
    let required = (1000.0 * duration / config.rabi_period() - 1e-9).ceil().max(1.0) as usize;
    if steps < required {
        return Err(SimError::InvalidArgument(format!(
            "step count {steps} below the {required} required for this duration"
        )));
    }
    Ok(())
}

fn rk4(spec: &HamiltonianSpec, state: &QuantumState, duration: f64, steps: usize) -> QuantumState {
    let dim = state.dim();
    let h = duration / steps as f64;
    let mut psi: Vec<Complex64> = state.amplitudes().to_vec();
    let mut hpsi = vec![Complex64::ZERO; dim];
    let mut k1 = vec![Complex64::ZERO; dim];
    let mut k2 = vec![Complex64::ZERO; dim];
    let mut k3 = vec![Complex64::ZERO; dim];
    let mut k4 = vec![Complex64::ZERO; dim];
    let mut scratch = vec![Complex64::ZERO; dim];
    let minus_i = Complex64::new(0.0, -1.0);

    for _ in 0..steps {
        spec.apply(&psi, &mut hpsi);
        for i in 0..dim {
            k1[i] = minus_i * hpsi[i];
            scratch[i] = psi[i] + 0.5 * h * k1[i];
        }
        spec.apply(&scratch, &mut hpsi);
        for i in 0..dim {
            k2[i] = minus_i * hpsi[i];
            scratch[i] = psi[i] + 0.5 * h * k2[i];
        }
        spec.apply(&scratch, &mut hpsi);
        for i in 0..dim {
            k3[i] = minus_i * hpsi[i];
            scratch[i] = psi[i] + h * k3[i];
        }
        spec.apply(&scratch, &mut hpsi);
        for i in 0..dim {
            k4[i] = minus_i * hpsi[i];
            psi[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    let mut out = state.clone();
    out.amplitudes_mut().copy_from_slice(&psi);
    out.advance_time(duration);
    out
}

/// Integrate the resonant interaction of `atom` with the tuned `mode` for
/// `duration` seconds. `steps` must provide at least 1000 steps per Rabi
/// period.
pub fn integrate(
    state: &QuantumState,
    config: &SystemConfig,
    atom: &str,
    mode: ModeId,
    duration: f64,
    steps: usize,
) -> Result<QuantumState> {
    check_steps(config, duration, steps)?;
    let spec = build_spec(state, config, Some((atom, mode)))?;
    Ok(rk4(&spec, state, duration, steps))
}

/// Integrate the free (between-pulse) evolution for `duration` seconds.
pub fn integrate_free(
    state: &QuantumState,
    config: &SystemConfig,
    duration: f64,
    steps: usize,
) -> Result<QuantumState> {
    check_steps(config, duration, steps)?;
    let spec = build_spec(state, config, None)?;
    Ok(rk4(&spec, state, duration, steps))
}
