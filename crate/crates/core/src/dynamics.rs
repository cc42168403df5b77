//! Closed-form pulse unitaries with exact mode-splitting phase bookkeeping.
//!
//! Everything is expressed in the frame co-rotating with mode `C1`. During a
//! timed instruction of duration `t` (a Rabi pulse or a free delay) each
//! basis state picks up the phase
//!
//! ```text
//! exp(i * delta * t * (n2 + [tuned atom is in e, during a C2 pulse]))
//! ```
//!
//! where `n2` counts photons in `C2`. Atoms that are not currently tuned to a
//! mode accrue no tracked phase. Ramsey pulses are instantaneous: their
//! physical duration is absorbed into the supplied phase parameter.
//!
//! Resonant Rabi rotations couple the doublets `(e, n) <-> (g, n+1)` of the
//! tuned mode with the generalized photon-number scaling `sqrt(n+1)` on the
//! rotation angle. A `C1` rotation is real; a `C2` rotation carries the extra
//! `i` from the orthogonal mode polarization. The `i` level never couples to
//! the cavity.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::hilbert::{AtomLevel, ModeId, QuantumState, SystemConfig};

/// Atomic transition addressed by a Ramsey pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transition {
    /// e <-> g, the cavity-coupled pair.
    EG,
    /// g <-> i, driven only by the classical source.
    GI,
}

impl Transition {
    pub fn name(self) -> &'static str {
        match self {
            Transition::EG => "e-g",
            Transition::GI => "g-i",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "e-g" | "E-G" => Some(Transition::EG),
            "g-i" | "G-I" => Some(Transition::GI),
            _ => None,
        }
    }

    /// Ordered level pair (upper, lower) in the rotation convention.
    pub fn pair(self) -> (AtomLevel, AtomLevel) {
        match self {
            Transition::EG => (AtomLevel::E, AtomLevel::G),
            Transition::GI => (AtomLevel::G, AtomLevel::I),
        }
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn atom_position(state: &QuantumState, atom: &str) -> Result<usize> {
    state
        .layout()
        .atom_position(atom)
        .ok_or_else(|| SimError::UnknownAtom(atom.to_string()))
}

fn mode_position(state: &QuantumState, mode: ModeId) -> Result<usize> {
    state
        .layout()
        .mode_position(mode)
        .ok_or_else(|| SimError::UnknownMode(mode.name().to_string()))
}

/// Multiply every basis state by the splitting phase accrued over `t`
/// seconds: one unit of `delta * t` per `C2` photon plus one for the tuned
/// atom's `e` population during a `C2` pulse.
fn apply_splitting_phase(
    state: &mut QuantumState,
    config: &SystemConfig,
    t: f64,
    tuned_e_atom: Option<usize>,
) {
    let layout = state.layout().clone();
    let c2 = match layout.mode_position(ModeId::C2) {
        Some(p) => p,
        None => return,
    };
    let c2_stride = layout.stride(c2);
    let c2_dim = layout.subsystem_dim(c2);
    let atom_info = tuned_e_atom.map(|pos| (layout.stride(pos), layout.subsystem_dim(pos)));
    let unit = Complex64::from_polar(1.0, config.delta * t);
    let phases: Vec<Complex64> = (0..=c2_dim)
        .map(|k| Complex64::from_polar(1.0, config.delta * t * k as f64))
        .collect();
    for (idx, amp) in state.amplitudes_mut().iter_mut().enumerate() {
        let n2 = (idx / c2_stride) % c2_dim;
        let mut phase = phases[n2];
        if let Some((stride, dim)) = atom_info {
            if (idx / stride) % dim == AtomLevel::E.index() {
                phase *= unit;
            }
        }
        *amp *= phase;
    }
}

/// Resonant Rabi rotation of `atom` with the chosen cavity mode.
///
/// `angle` is the rotation angle `omega_rabi * t`; the pulse advances the
/// state's elapsed interaction time by `angle / omega_rabi` and applies the
/// splitting phase for that duration. States outside the coupled doublets
/// (the `i` level, `g` with the mode empty, `e` at the truncation edge) see
/// only the phase.
pub fn apply_rabi(
    state: &QuantumState,
    config: &SystemConfig,
    atom: &str,
    mode: ModeId,
    angle: f64,
) -> Result<QuantumState> {
    if angle < 0.0 || !angle.is_finite() {
        return Err(SimError::NegativeAngle(angle));
    }
    let atom_pos = atom_position(state, atom)?;
    let mode_pos = mode_position(state, mode)?;
    let layout = state.layout().clone();
    let atom_stride = layout.stride(atom_pos);
    let mode_stride = layout.stride(mode_pos);
    let mode_dim = layout.subsystem_dim(mode_pos);

    let mut next = state.clone();
    let amps = next.amplitudes_mut();
    for idx in 0..amps.len() {
        let atom_level = (idx / atom_stride) % 3;
        if atom_level != AtomLevel::E.index() {
            continue;
        }
        let n = (idx / mode_stride) % mode_dim;
        if n + 1 >= mode_dim {
            continue; // no partner above the truncation
        }
        // Doublet (e, n) <-> (g, n+1); e = 0, g = 1 in level order.
        let partner = idx + atom_stride + mode_stride;
        let half = (n as f64 + 1.0).sqrt() * angle / 2.0;
        let (s, c) = half.sin_cos();
        let a_e = amps[idx];
        let a_g = amps[partner];
        match mode {
            ModeId::C1 => {
                amps[idx] = c * a_e - s * a_g;
                amps[partner] = s * a_e + c * a_g;
            }
            ModeId::C2 => {
                let is = Complex64::new(0.0, s);
                amps[idx] = c * a_e + is * a_g;
                amps[partner] = is * a_e + c * a_g;
            }
        }
    }

    let duration = angle / config.omega_rabi;
    let tuned_e = (mode == ModeId::C2).then_some(atom_pos);
    apply_splitting_phase(&mut next, config, duration, tuned_e);
    next.advance_time(duration);
    Ok(next)
}

/// Classical microwave rotation between two atomic levels.
///
/// With ordered pair `(a, b)` = `(e, g)` or `(g, i)`:
///
/// ```text
/// |a> -> cos(angle/2) |a> + e^{i phase} sin(angle/2) |b>
/// |b> -> -e^{-i phase} sin(angle/2) |a> + cos(angle/2) |b>
/// ```
///
/// The pulse is instantaneous; no splitting phase accrues and the elapsed
/// interaction time is unchanged.
pub fn apply_ramsey(
    state: &QuantumState,
    atom: &str,
    transition: Transition,
    angle: f64,
    phase: f64,
) -> Result<QuantumState> {
    if angle < 0.0 || !angle.is_finite() {
        return Err(SimError::NegativeAngle(angle));
    }
    let atom_pos = atom_position(state, atom)?;
    let layout = state.layout().clone();
    let atom_stride = layout.stride(atom_pos);
    let (upper, lower) = transition.pair();

    let (s, c) = (angle / 2.0).sin_cos();
    let ephase = Complex64::from_polar(1.0, phase);
    let mut next = state.clone();
    let amps = next.amplitudes_mut();
    for idx in 0..amps.len() {
        if (idx / atom_stride) % 3 != upper.index() {
            continue;
        }
        // Lower level sits one or two strides above the upper one.
        let partner = idx + (lower.index() - upper.index()) * atom_stride;
        let a_u = amps[idx];
        let a_l = amps[partner];
        amps[idx] = c * a_u - ephase.conj() * s * a_l;
        amps[partner] = ephase * s * a_u + c * a_l;
    }
    Ok(next)
}

/// Free evolution for `duration` seconds: every `C2` photon accrues the
/// splitting phase `e^{i delta duration}`.
pub fn apply_delay(
    state: &QuantumState,
    config: &SystemConfig,
    duration: f64,
) -> Result<QuantumState> {
    if duration < 0.0 || !duration.is_finite() {
        return Err(SimError::NegativeDuration(duration));
    }
    let mut next = state.clone();
    apply_splitting_phase(&mut next, config, duration, None);
    next.advance_time(duration);
    Ok(next)
}
