//! Closed-form reference signals, target states, and fidelity utilities.
//!
//! Every constant here is computed from the supplied [`SystemConfig`] rather
//! than hard-coded, so the reference values track whatever coupling and mode
//! splitting the simulation runs with.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::hilbert::{AtomLevel, QuantumState, SubsystemLayout, SystemConfig};

/// Collapse-branch label for two-valued detection signals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn chain_labels(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("A{k}")).collect()
}

fn chain_layout(n: usize) -> Result<Arc<SubsystemLayout>> {
    let labels = chain_labels(n);
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    SubsystemLayout::atoms_only(&refs)
}

/// Relative phase the GHZ chain sequence imprints between its two branches:
/// one splitting period per timed pulse that runs while the `C2` photon
/// branch is alive.
pub fn ghz_target_phase(n: usize, config: &SystemConfig) -> f64 {
    (2 * n - 1) as f64 * PI * config.delta / config.omega_rabi
}

/// Relative phase on the last-atom branch of the W chain sequence.
pub fn w_target_phase(n: usize, config: &SystemConfig) -> f64 {
    let omega = config.omega_rabi;
    let mut interaction = 3.0 * PI / omega;
    for k in 2..n {
        interaction += w_rotation_angle(n, k) / omega;
    }
    config.delta * interaction
}

/// Rabi angle of the k-th chain pulse in W-state generation
/// (`2 acos sqrt((N-k)/(N-k+1))` for k = 2..N-1; k = 1 addresses the source).
pub fn w_rotation_angle(n: usize, k: usize) -> f64 {
    assert!((2..n).contains(&k), "chain pulses are k = 2..N-1");
    let frac = (n - k) as f64 / (n - k + 1) as f64;
    2.0 * frac.sqrt().acos()
}

/// The N-atom GHZ state in the physical levels the generation sequence maps
/// onto: branches `|i..i g e>` and `|g..g e g>`, with the branch phase the
/// sequence accumulates. The pulse signs leave an extra relative factor
/// `(-1)^N` between the branches (the per-atom phase-gate blocks and the two
/// mapping pulses each flip one sign), so odd chains carry it too.
pub fn target_ghz(n: usize, config: &SystemConfig) -> Result<QuantumState> {
    if n < 2 {
        return Err(SimError::InvalidArgument(
            "GHZ targets need at least 2 atoms".into(),
        ));
    }
    let layout = chain_layout(n)?;
    let mut upper = vec![AtomLevel::I; n];
    upper[n - 2] = AtomLevel::G;
    upper[n - 1] = AtomLevel::E;
    let mut lower = vec![AtomLevel::G; n];
    lower[n - 2] = AtomLevel::E;
    lower[n - 1] = AtomLevel::G;

    let inv = 1.0 / 2f64.sqrt();
    let parity = if n.is_multiple_of(2) { 0.0 } else { PI };
    let phase = Complex64::from_polar(inv, ghz_target_phase(n, config) + parity);
    let mut amps = vec![Complex64::ZERO; layout.dim()];
    amps[layout.flat_index(&label_of(&upper))?] = phase;
    amps[layout.flat_index(&label_of(&lower))?] = Complex64::new(inv, 0.0);
    QuantumState::from_amplitudes(layout, amps)
}

/// The N-atom W state in physical levels: one shared `e` excitation, with
/// the sequence's phase on the last-atom branch.
pub fn target_w(n: usize, config: &SystemConfig) -> Result<QuantumState> {
    if n < 2 {
        return Err(SimError::InvalidArgument(
            "W targets need at least 2 atoms".into(),
        ));
    }
    let layout = chain_layout(n)?;
    let inv = 1.0 / (n as f64).sqrt();
    let mut amps = vec![Complex64::ZERO; layout.dim()];
    for excited in 0..n {
        let mut levels = vec![AtomLevel::G; n];
        levels[excited] = AtomLevel::E;
        let amp = if excited == n - 1 {
            Complex64::from_polar(inv, w_target_phase(n, config))
        } else {
            Complex64::new(inv, 0.0)
        };
        amps[layout.flat_index(&label_of(&levels))?] = amp;
    }
    QuantumState::from_amplitudes(layout, amps)
}

fn label_of(levels: &[AtomLevel]) -> crate::hilbert::BasisLabel {
    crate::hilbert::BasisLabel(levels.iter().map(|l| l.index()).collect())
}

/// `|<a|b>|^2`; invariant under global phases of either state.
pub fn fidelity_up_to_global_phase(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.inner_product(b)?.norm_sqr())
}

/// Fidelity of a full simulation state against an atoms-only chain target:
/// the chain atoms are compared with every other atom pinned to `g` and the
/// cavity pinned to vacuum, which is where the canned sequences leave them.
pub fn chain_fidelity(state: &QuantumState, target: &QuantumState, chain: &[&str]) -> Result<f64> {
    let layout = state.layout();
    let keep: Vec<usize> = chain
        .iter()
        .map(|atom| {
            layout
                .atom_position(atom)
                .ok_or_else(|| SimError::UnknownAtom(atom.to_string()))
        })
        .collect::<Result<_>>()?;
    let fixed: Vec<(usize, usize)> = (0..layout.len())
        .filter(|pos| !keep.contains(pos))
        .map(|pos| {
            let level = match layout.subsystems()[pos] {
                crate::hilbert::Subsystem::Atom { .. } => AtomLevel::G.index(),
                crate::hilbert::Subsystem::Mode { .. } => 0,
            };
            (pos, level)
        })
        .collect();
    let restricted = state.restrict(&keep, &fixed)?;
    fidelity_up_to_global_phase(target, &restricted)
}

/// Phase offset `eta` of the mapped Bell pair's transversal signal.
pub fn bell_phase_offset(config: &SystemConfig) -> f64 {
    5.0 * PI * config.delta / config.omega_rabi
}

/// Idealized Bell signal `+-cos(phi + eta)`.
pub fn ideal_bell_signal(phi: f64, branch: Branch, eta: f64) -> f64 {
    branch.sign() * (phi + eta).cos()
}

/// Probability for the probe atom to absorb the mapped excitation after a
/// delay `t`: `(1 +- cos(delta t + 4 pi delta / omega)) / 2`.
pub fn ideal_probe_probability(t: f64, branch: Branch, config: &SystemConfig) -> f64 {
    let arg = config.delta * t + 4.0 * PI * config.delta / config.omega_rabi;
    (1.0 + branch.sign() * arg.cos()) / 2.0
}

/// Phase offset `theta` of the GHZ-detection correlation signal.
pub fn ghz_correlation_offset(config: &SystemConfig) -> f64 {
    6.0 * PI * config.delta / config.omega_rabi
}

/// Idealized GHZ-detection signal `-+cos(T delta - phi + theta)`; note the
/// inverted sign pairing between branch and cosine.
pub fn ideal_ghz_correlation(phi: f64, t: f64, branch: Branch, config: &SystemConfig) -> f64 {
    -branch.sign() * (t * config.delta - phi + ghz_correlation_offset(config)).cos()
}

/// Delay offset `theta` (seconds) of the W-detection probe probability, with
/// the chain pulse set to the angle that balances the four W branches:
/// `theta = (5 pi / 2 + 2 acos sqrt(2/3)) / omega`.
pub fn w_probe_delay_offset(config: &SystemConfig) -> f64 {
    (2.5 * PI + 2.0 * (2f64 / 3.0).sqrt().acos()) / config.omega_rabi
}

/// Probability to find the W-detection probe excited after delays `t1`, `t2`:
/// `(1 + cos(delta (t1 + t2 + theta))) / 2`; depends on the delays only
/// through their sum.
pub fn ideal_w_probe_probability(t1: f64, t2: f64, config: &SystemConfig) -> f64 {
    (1.0 + (config.delta * (t1 + t2 + w_probe_delay_offset(config))).cos()) / 2.0
}

/// Rough upper bound on the chain length a cavity lifetime supports:
/// `(lifetime * epsilon) / (pi-pulse time) / 6`.
pub fn estimate_max_chain(t_lifetime: f64, t_pi: f64, epsilon: f64) -> Result<f64> {
    if !t_lifetime.is_finite() || t_lifetime <= 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "lifetime must be positive, got {t_lifetime}"
        )));
    }
    if !t_pi.is_finite() || t_pi <= 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "pi-pulse time must be positive, got {t_pi}"
        )));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(SimError::InvalidArgument(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )));
    }
    Ok(t_lifetime * epsilon / t_pi / 6.0)
}
