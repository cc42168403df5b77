//! Joint Hilbert space of N three-level atoms and two truncated cavity modes.
//!
//! Basis ordering convention: subsystems appear in layout order and the last
//! subsystem varies fastest when amplitudes are stored flat. Atom levels are
//! ordered `(e, g, i) = (0, 1, 2)`, matching the descending principal quantum
//! numbers of the circular states. Cavity modes hold `0..=n_max` photons.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, SimError};

/// Tolerance below which a squared amplitude is treated as an empty branch.
pub const PROB_FLOOR: f64 = 1e-14;

/// Physical constants of one simulation run plus the RNG seed.
///
/// `omega_rabi` is the vacuum atom-field coupling (angular frequency) and
/// `delta` the splitting `omega_1 - omega_2 > 0` between the two cavity
/// modes. The defaults are the coupling and splitting realized in the
/// microwave cavity experiments this simulator models.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// Atom-field coupling Ω, rad/s.
    pub omega_rabi: f64,
    /// Mode splitting δ = ω1 − ω2, rad/s.
    pub delta: f64,
    /// Fock truncation per mode; each mode holds 0..=n_max photons.
    pub n_max: u32,
    /// Seed for sampled measurement trajectories.
    pub rng_seed: u64,
}

impl SystemConfig {
    pub fn new(omega_rabi: f64, delta: f64, n_max: u32, rng_seed: u64) -> Result<Self> {
        if !omega_rabi.is_finite() || omega_rabi <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "omega_rabi must be positive, got {omega_rabi}"
            )));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if n_max < 1 {
            return Err(SimError::InvalidConfig("n_max must be at least 1".into()));
        }
        Ok(Self {
            omega_rabi,
            delta,
            n_max,
            rng_seed,
        })
    }

    /// Duration of a full 2π Rabi rotation.
    pub fn rabi_period(&self) -> f64 {
        2.0 * PI / self.omega_rabi
    }

    pub fn with_n_max(&self, n_max: u32) -> Self {
        Self { n_max, ..*self }
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        // Ω/2π = 47 kHz, δ/2π = 128.3 kHz.
        Self {
            omega_rabi: 2.0 * PI * 47.0e3,
            delta: 2.0 * PI * 128.3e3,
            n_max: 1,
            rng_seed: 0,
        }
    }
}

/// Circular Rydberg levels, ordered by descending principal quantum number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomLevel {
    E,
    G,
    I,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::E, AtomLevel::G, AtomLevel::I];

    pub fn index(self) -> usize {
        match self {
            AtomLevel::E => 0,
            AtomLevel::G => 1,
            AtomLevel::I => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(AtomLevel::E),
            1 => Some(AtomLevel::G),
            2 => Some(AtomLevel::I),
            _ => None,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            AtomLevel::E => 'e',
            AtomLevel::G => 'g',
            AtomLevel::I => 'i',
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "e" | "E" => Some(AtomLevel::E),
            "g" | "G" => Some(AtomLevel::G),
            "i" | "I" => Some(AtomLevel::I),
            _ => None,
        }
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// The two orthogonally polarized cavity modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeId {
    C1,
    C2,
}

impl ModeId {
    pub fn name(self) -> &'static str {
        match self {
            ModeId::C1 => "C1",
            ModeId::C2 => "C2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "C1" | "c1" => Some(ModeId::C1),
            "C2" | "c2" => Some(ModeId::C2),
            _ => None,
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One factor of the tensor product: a labeled atom or a cavity mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Subsystem {
    Atom { label: String },
    Mode { id: ModeId },
}

impl Subsystem {
    pub fn atom(label: impl Into<String>) -> Self {
        Subsystem::Atom {
            label: label.into(),
        }
    }

    pub fn mode(id: ModeId) -> Self {
        Subsystem::Mode { id }
    }

    pub fn name(&self) -> String {
        match self {
            Subsystem::Atom { label } => label.clone(),
            Subsystem::Mode { id } => id.name().to_string(),
        }
    }
}

/// Ordered list of subsystems together with the Fock truncation.
///
/// A layout carries either both cavity modes (`C1` and `C2`, for dynamical
/// states) or none (bare atomic registers used as comparison targets).
#[derive(Debug, PartialEq)]
pub struct SubsystemLayout {
    subsystems: Vec<Subsystem>,
    n_max: u32,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl SubsystemLayout {
    pub fn new(subsystems: Vec<Subsystem>, n_max: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(SimError::InvalidLayout("n_max must be at least 1".into()));
        }
        let mut c1 = 0usize;
        let mut c2 = 0usize;
        let mut labels: Vec<&str> = Vec::new();
        for s in &subsystems {
            match s {
                Subsystem::Mode { id: ModeId::C1 } => c1 += 1,
                Subsystem::Mode { id: ModeId::C2 } => c2 += 1,
                Subsystem::Atom { label } => {
                    if labels.contains(&label.as_str()) {
                        return Err(SimError::InvalidLayout(format!(
                            "duplicate atom label `{label}`"
                        )));
                    }
                    labels.push(label);
                }
            }
        }
        let mode_count_ok = (c1 == 1 && c2 == 1) || (c1 == 0 && c2 == 0);
        if !mode_count_ok {
            return Err(SimError::InvalidLayout(
                "layout must contain both modes C1 and C2 exactly once, or neither".into(),
            ));
        }
        if subsystems.is_empty() {
            return Err(SimError::InvalidLayout("layout has no subsystems".into()));
        }
        let dims: Vec<usize> = subsystems
            .iter()
            .map(|s| match s {
                Subsystem::Atom { .. } => 3,
                Subsystem::Mode { .. } => n_max as usize + 1,
            })
            .collect();
        // Last subsystem varies fastest.
        let mut strides = vec![0usize; dims.len()];
        let mut acc = 1usize;
        for (i, d) in dims.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc.checked_mul(*d).ok_or_else(|| {
                SimError::InvalidLayout("state dimension overflows usize".into())
            })?;
        }
        Ok(Self {
            subsystems,
            n_max,
            dims,
            strides,
            dim: acc,
        })
    }

    /// Atoms in the given order followed by the modes `C1`, `C2`.
    pub fn atoms_then_modes(atom_labels: &[&str], n_max: u32) -> Result<Arc<Self>> {
        let mut subs: Vec<Subsystem> = atom_labels.iter().map(|l| Subsystem::atom(*l)).collect();
        subs.push(Subsystem::mode(ModeId::C1));
        subs.push(Subsystem::mode(ModeId::C2));
        Ok(Arc::new(Self::new(subs, n_max)?))
    }

    /// An atomic register without cavity modes.
    pub fn atoms_only(atom_labels: &[&str]) -> Result<Arc<Self>> {
        let subs: Vec<Subsystem> = atom_labels.iter().map(|l| Subsystem::atom(*l)).collect();
        Ok(Arc::new(Self::new(subs, 1)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystem_dim(&self, position: usize) -> usize {
        self.dims[position]
    }

    pub fn stride(&self, position: usize) -> usize {
        self.strides[position]
    }

    pub fn atom_position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(
            |s| matches!(s, Subsystem::Atom { label: l } if l == label),
        )
    }

    pub fn mode_position(&self, id: ModeId) -> Option<usize> {
        self.subsystems
            .iter()
            .position(|s| matches!(s, Subsystem::Mode { id: m } if *m == id))
    }

    pub fn atom_labels(&self) -> Vec<&str> {
        self.subsystems
            .iter()
            .filter_map(|s| match s {
                Subsystem::Atom { label } => Some(label.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Flat amplitude index of a basis label.
    pub fn flat_index(&self, label: &BasisLabel) -> Result<usize> {
        if label.0.len() != self.subsystems.len() {
            return Err(SimError::LabelOutOfRange(format!(
                "label has {} entries, layout has {} subsystems",
                label.0.len(),
                self.subsystems.len()
            )));
        }
        let mut idx = 0usize;
        for (pos, &level) in label.0.iter().enumerate() {
            if level >= self.dims[pos] {
                return Err(SimError::LabelOutOfRange(format!(
                    "entry {level} exceeds dimension {} of subsystem {}",
                    self.dims[pos],
                    self.subsystems[pos].name()
                )));
            }
            idx += level * self.strides[pos];
        }
        Ok(idx)
    }

    /// Basis label of a flat amplitude index.
    pub fn label_of(&self, mut flat: usize) -> BasisLabel {
        debug_assert!(flat < self.dim);
        let entries = self
            .strides
            .iter()
            .map(|stride| {
                let level = flat / stride;
                flat %= stride;
                level
            })
            .collect();
        BasisLabel(entries)
    }

    /// Parse a comma-separated label such as `i,i,g,e,0,0`, one entry per
    /// subsystem (level letters for atoms, photon numbers for modes).
    pub fn parse_label(&self, text: &str) -> Result<BasisLabel> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != self.subsystems.len() {
            return Err(SimError::LabelOutOfRange(format!(
                "label `{text}` has {} entries, layout has {}",
                parts.len(),
                self.subsystems.len()
            )));
        }
        let mut entries = Vec::with_capacity(parts.len());
        for (part, sub) in parts.iter().zip(&self.subsystems) {
            let level = match sub {
                Subsystem::Atom { label } => AtomLevel::parse(part)
                    .ok_or_else(|| {
                        SimError::LabelOutOfRange(format!(
                            "`{part}` is not a level of atom {label}"
                        ))
                    })?
                    .index(),
                Subsystem::Mode { id } => part.parse::<usize>().map_err(|_| {
                    SimError::LabelOutOfRange(format!("`{part}` is not a photon number for {id}"))
                })?,
            };
            entries.push(level);
        }
        let label = BasisLabel(entries);
        self.flat_index(&label)?;
        Ok(label)
    }

    /// Render a label with level letters for atoms and photon counts for modes.
    pub fn format_label(&self, label: &BasisLabel) -> String {
        label
            .0
            .iter()
            .zip(&self.subsystems)
            .map(|(&level, sub)| match sub {
                Subsystem::Atom { .. } => AtomLevel::from_index(level)
                    .map(|l| l.symbol().to_string())
                    .unwrap_or_else(|| level.to_string()),
                Subsystem::Mode { .. } => level.to_string(),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Per-subsystem level assignment (raw level indices in layout order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisLabel(pub Vec<usize>);

impl BasisLabel {
    /// Label for the common atoms-then-modes layout.
    pub fn atoms_modes(levels: &[AtomLevel], photons: &[u32]) -> Self {
        let mut entries: Vec<usize> = levels.iter().map(|l| l.index()).collect();
        entries.extend(photons.iter().map(|&n| n as usize));
        BasisLabel(entries)
    }
}

/// Normalized pure state over a [`SubsystemLayout`].
///
/// States are plain values: cloning is cheap relative to the evolution cost
/// and every pulse operation returns a fresh state. `elapsed_interaction_time`
/// accumulates the duration of timed instructions (Rabi pulses and delays)
/// so phase bookkeeping can be audited.
#[derive(Clone, Debug)]
pub struct QuantumState {
    layout: Arc<SubsystemLayout>,
    amplitudes: Vec<Complex64>,
    elapsed_interaction_time: f64,
}

impl QuantumState {
    /// State with unit amplitude on a single basis vector.
    pub fn basis_state(layout: Arc<SubsystemLayout>, label: &BasisLabel) -> Result<Self> {
        let idx = layout.flat_index(label)?;
        let mut amplitudes = vec![Complex64::ZERO; layout.dim()];
        amplitudes[idx] = Complex64::ONE;
        Ok(Self {
            layout,
            amplitudes,
            elapsed_interaction_time: 0.0,
        })
    }

    /// Build a state from raw amplitudes; the vector is renormalized.
    pub fn from_amplitudes(layout: Arc<SubsystemLayout>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(SimError::InvalidLayout(format!(
                "amplitude vector has length {}, layout dimension is {}",
                amplitudes.len(),
                layout.dim()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < PROB_FLOOR {
            return Err(SimError::InvalidLayout(
                "cannot normalize a zero amplitude vector".into(),
            ));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            layout,
            amplitudes,
            elapsed_interaction_time: 0.0,
        })
    }

    pub fn layout(&self) -> &Arc<SubsystemLayout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn elapsed_interaction_time(&self) -> f64 {
        self.elapsed_interaction_time
    }

    /// Coefficient of a basis vector.
    pub fn amplitude(&self, label: &BasisLabel) -> Result<Complex64> {
        let idx = self.layout.flat_index(label)?;
        Ok(self.amplitudes[idx])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(SimError::LayoutMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Partial trace onto the subsystems at `keep` (layout-order positions).
    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(SimError::EmptySubset);
        }
        let n = self.layout.len();
        let mut seen = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(SimError::UnknownSubsystem(k));
            }
            if seen[k] {
                return Err(SimError::InvalidArgument(format!(
                    "subsystem {k} listed twice in keep set"
                )));
            }
            seen[k] = true;
        }
        let traced: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&k| self.layout.subsystem_dim(k)).collect();
        let keep_dim: usize = keep_dims.iter().product();
        let traced_dims: Vec<usize> = traced
            .iter()
            .map(|&k| self.layout.subsystem_dim(k))
            .collect();
        let traced_dim: usize = traced_dims.iter().product::<usize>().max(1);

        // Flat index decomposed as keep-part + traced-part.
        let flat_of = |keep_idx: usize, traced_idx: usize| -> usize {
            let mut rest = keep_idx;
            let mut flat = 0usize;
            for (pos, dim) in keep.iter().zip(&keep_dims).rev() {
                flat += (rest % dim) * self.layout.stride(*pos);
                rest /= dim;
            }
            let mut rest = traced_idx;
            for (pos, dim) in traced.iter().zip(&traced_dims).rev() {
                flat += (rest % dim) * self.layout.stride(*pos);
                rest /= dim;
            }
            flat
        };

        let mut data = vec![Complex64::ZERO; keep_dim * keep_dim];
        for row in 0..keep_dim {
            for col in 0..keep_dim {
                let mut acc = Complex64::ZERO;
                for t in 0..traced_dim {
                    let a = self.amplitudes[flat_of(row, t)];
                    let b = self.amplitudes[flat_of(col, t)];
                    acc += a * b.conj();
                }
                data[row * keep_dim + col] = acc;
            }
        }
        Ok(DensityMatrix {
            dim: keep_dim,
            data,
        })
    }

    /// Restrict the amplitude vector to the subsystems at `keep`, pinning
    /// every other subsystem to the level given in `fixed`.
    ///
    /// The result is *not* renormalized: its squared norm is the probability
    /// weight carried by the fixed assignment, so overlaps against it yield
    /// honest fidelities.
    pub fn restrict(&self, keep: &[usize], fixed: &[(usize, usize)]) -> Result<QuantumState> {
        let n = self.layout.len();
        let mut covered = vec![false; n];
        for &k in keep {
            if k >= n {
                return Err(SimError::UnknownSubsystem(k));
            }
            covered[k] = true;
        }
        let mut base = 0usize;
        for &(pos, level) in fixed {
            if pos >= n {
                return Err(SimError::UnknownSubsystem(pos));
            }
            if covered[pos] {
                return Err(SimError::InvalidArgument(format!(
                    "subsystem {pos} both kept and fixed"
                )));
            }
            if level >= self.layout.subsystem_dim(pos) {
                return Err(SimError::LabelOutOfRange(format!(
                    "fixed level {level} exceeds dimension of subsystem {pos}"
                )));
            }
            covered[pos] = true;
            base += level * self.layout.stride(pos);
        }
        if covered.iter().any(|c| !c) {
            return Err(SimError::InvalidArgument(
                "keep and fixed sets must cover every subsystem".into(),
            ));
        }

        let sub_layout = Arc::new(SubsystemLayout::new(
            keep.iter()
                .map(|&k| self.layout.subsystems()[k].clone())
                .collect(),
            self.layout.n_max(),
        )?);
        let keep_dims: Vec<usize> = keep.iter().map(|&k| self.layout.subsystem_dim(k)).collect();
        let mut amplitudes = vec![Complex64::ZERO; sub_layout.dim()];
        for (sub_idx, amp) in amplitudes.iter_mut().enumerate() {
            let mut rest = sub_idx;
            let mut flat = base;
            for (pos, dim) in keep.iter().zip(&keep_dims).rev() {
                flat += (rest % dim) * self.layout.stride(*pos);
                rest /= dim;
            }
            *amp = self.amplitudes[flat];
        }
        Ok(QuantumState {
            layout: sub_layout,
            amplitudes,
            elapsed_interaction_time: self.elapsed_interaction_time,
        })
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.elapsed_interaction_time += dt;
    }

    pub(crate) fn renormalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            for a in &mut self.amplitudes {
                *a /= norm;
            }
        }
    }
}

/// Dense Hermitian matrix produced by partial traces.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Tr ρ², real for Hermitian input.
    pub fn purity(&self) -> f64 {
        let mut acc = Complex64::ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += self.get(i, j) * self.get(j, i);
            }
        }
        acc.re
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for j in i..self.dim {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// v† ρ v, used to spot-check positive semidefiniteness.
    pub fn quadratic_form(&self, v: &[Complex64]) -> Complex64 {
        assert_eq!(v.len(), self.dim);
        let mut acc = Complex64::ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i].conj() * self.get(i, j) * v[j];
            }
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn basis_state_puts_unit_amplitude_on_the_label() {
        let layout = SubsystemLayout::atoms_then_modes(&["As"], 1).unwrap();
        let label = BasisLabel::atoms_modes(&[AtomLevel::E], &[0, 0]);
        let state = QuantumState::basis_state(layout, &label).unwrap();
        assert_eq!(state.amplitude(&label).unwrap(), Complex64::ONE);
        assert!(close(state.norm(), 1.0, 1e-15));
        assert_eq!(state.elapsed_interaction_time(), 0.0);

        let other = BasisLabel::atoms_modes(&[AtomLevel::G], &[0, 0]);
        assert_eq!(state.amplitude(&other).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn basis_state_on_two_atom_layout() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1", "A2"], 1).unwrap();
        let label = BasisLabel::atoms_modes(&[AtomLevel::G, AtomLevel::G], &[1, 0]);
        let state = QuantumState::basis_state(layout, &label).unwrap();
        let nonzero = state
            .amplitudes()
            .iter()
            .filter(|a| a.norm() > 0.0)
            .count();
        assert_eq!(nonzero, 1);
        assert!(close(state.norm(), 1.0, 1e-15));
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap();
        let bad = BasisLabel(vec![0, 2, 0]);
        assert!(matches!(
            QuantumState::basis_state(layout, &bad),
            Err(SimError::LabelOutOfRange(_))
        ));
    }

    #[test]
    fn index_label_round_trip_is_identity() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1", "A2"], 2).unwrap();
        for flat in 0..layout.dim() {
            let label = layout.label_of(flat);
            assert_eq!(layout.flat_index(&label).unwrap(), flat);
        }
    }

    #[test]
    fn last_subsystem_varies_fastest() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap();
        // Entries are (atom, n1, n2); n2 is the fastest index.
        assert_eq!(layout.flat_index(&BasisLabel(vec![0, 0, 1])).unwrap(), 1);
        assert_eq!(layout.flat_index(&BasisLabel(vec![0, 1, 0])).unwrap(), 2);
        assert_eq!(layout.flat_index(&BasisLabel(vec![1, 0, 0])).unwrap(), 4);
    }

    #[test]
    fn inner_product_normalization_and_orthogonality() {
        let layout = SubsystemLayout::atoms_then_modes(&["As"], 1).unwrap();
        let e00 = QuantumState::basis_state(
            layout.clone(),
            &BasisLabel::atoms_modes(&[AtomLevel::E], &[0, 0]),
        )
        .unwrap();
        let g10 = QuantumState::basis_state(
            layout,
            &BasisLabel::atoms_modes(&[AtomLevel::G], &[1, 0]),
        )
        .unwrap();
        assert_eq!(e00.inner_product(&e00).unwrap(), Complex64::ONE);
        assert_eq!(e00.inner_product(&g10).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap();
        let dim = layout.dim();
        let mut amps_a = vec![Complex64::ZERO; dim];
        amps_a[0] = Complex64::new(0.0, 1.0);
        let mut amps_b = vec![Complex64::ZERO; dim];
        amps_b[0] = Complex64::ONE;
        let a = QuantumState::from_amplitudes(layout.clone(), amps_a).unwrap();
        let b = QuantumState::from_amplitudes(layout, amps_b).unwrap();
        let ip = a.inner_product(&b).unwrap();
        assert!(close(ip.im, -1.0, 1e-15));
        assert!(close(ip.re, 0.0, 1e-15));
    }

    #[test]
    fn inner_product_rejects_mismatched_layouts() {
        let a = QuantumState::basis_state(
            SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap(),
            &BasisLabel::atoms_modes(&[AtomLevel::G], &[0, 0]),
        )
        .unwrap();
        let b = QuantumState::basis_state(
            SubsystemLayout::atoms_then_modes(&["A2"], 1).unwrap(),
            &BasisLabel::atoms_modes(&[AtomLevel::G], &[0, 0]),
        )
        .unwrap();
        assert!(matches!(
            a.inner_product(&b),
            Err(SimError::LayoutMismatch)
        ));
    }

    #[test]
    fn product_state_reduces_to_rank_one_projector_on_cavity() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap();
        let state = QuantumState::basis_state(
            layout.clone(),
            &BasisLabel::atoms_modes(&[AtomLevel::G], &[0, 0]),
        )
        .unwrap();
        let c1 = layout.mode_position(ModeId::C1).unwrap();
        let c2 = layout.mode_position(ModeId::C2).unwrap();
        let rho = state.reduced_density_matrix(&[c1, c2]).unwrap();
        assert_eq!(rho.dim(), 4);
        assert!(close(rho.trace().re, 1.0, 1e-12));
        assert!(close(rho.purity(), 1.0, 1e-12));
        assert!(close(rho.get(0, 0).re, 1.0, 1e-12));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn cavity_bell_state_reduces_to_maximally_mixed_single_mode() {
        // (|0,1> + i|1,0>)/sqrt(2) on a modes-only pair, traced to C1:
        // expected diag(1/2, 1/2) and purity 1/2, checked against an
        // explicit 4x4 partial trace.
        let layout = Arc::new(
            SubsystemLayout::new(
                vec![Subsystem::mode(ModeId::C1), Subsystem::mode(ModeId::C2)],
                1,
            )
            .unwrap(),
        );
        let inv = 1.0 / 2f64.sqrt();
        let mut amps = vec![Complex64::ZERO; 4];
        amps[1] = Complex64::new(inv, 0.0); // |0,1>
        amps[2] = Complex64::new(0.0, inv); // |1,0>
        let state = QuantumState::from_amplitudes(layout, amps.clone()).unwrap();

        let rho = state.reduced_density_matrix(&[0]).unwrap();

        // Independent partial trace: rho[m][m'] = sum_n psi[m,n] conj(psi[m',n]).
        let mut by_hand = [[Complex64::ZERO; 2]; 2];
        for m in 0..2 {
            for mp in 0..2 {
                for n in 0..2 {
                    by_hand[m][mp] += amps[2 * m + n] * amps[2 * mp + n].conj();
                }
            }
        }
        for m in 0..2 {
            for mp in 0..2 {
                assert!((rho.get(m, mp) - by_hand[m][mp]).norm() < 1e-15);
            }
        }
        assert!(close(rho.get(0, 0).re, 0.5, 1e-12));
        assert!(close(rho.get(1, 1).re, 0.5, 1e-12));
        assert!(rho.get(0, 1).norm() < 1e-12);
        assert!(close(rho.purity(), 0.5, 1e-12));
        assert!(rho.is_hermitian(1e-14));
    }

    #[test]
    fn full_set_reduction_equals_outer_product() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap();
        let dim = layout.dim();
        let amps: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::new(1.0 + k as f64, 0.3 * k as f64))
            .collect();
        let state = QuantumState::from_amplitudes(layout.clone(), amps).unwrap();
        let all: Vec<usize> = (0..layout.len()).collect();
        let rho = state.reduced_density_matrix(&all).unwrap();
        for i in 0..dim {
            for j in 0..dim {
                let expect = state.amplitudes()[i] * state.amplitudes()[j].conj();
                assert!((rho.get(i, j) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn reduced_density_matrix_rejects_empty_subset() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1"], 1).unwrap();
        let state = QuantumState::basis_state(
            layout,
            &BasisLabel::atoms_modes(&[AtomLevel::G], &[0, 0]),
        )
        .unwrap();
        assert!(matches!(
            state.reduced_density_matrix(&[]),
            Err(SimError::EmptySubset)
        ));
    }

    #[test]
    fn quadratic_forms_of_pure_state_reduction_are_nonnegative() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1", "A2"], 1).unwrap();
        let dim = layout.dim();
        let amps: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos()))
            .collect();
        let state = QuantumState::from_amplitudes(layout, amps).unwrap();
        let rho = state.reduced_density_matrix(&[0, 2]).unwrap();
        assert!(rho.is_hermitian(1e-12));
        for probe in 0..8 {
            let v: Vec<Complex64> = (0..rho.dim())
                .map(|k| {
                    let x = (probe * 31 + k * 7) as f64;
                    Complex64::new(x.sin(), (x * 0.37).cos())
                })
                .collect();
            let q = rho.quadratic_form(&v);
            assert!(q.re > -1e-12, "quadratic form {q} negative");
            assert!(q.im.abs() < 1e-12);
        }
    }

    #[test]
    fn restrict_pins_the_remaining_subsystems() {
        let layout = SubsystemLayout::atoms_then_modes(&["As", "A1"], 1).unwrap();
        let label = BasisLabel::atoms_modes(&[AtomLevel::G, AtomLevel::I], &[0, 0]);
        let state = QuantumState::basis_state(layout.clone(), &label).unwrap();
        // Keep A1 plus the modes, pin the source to g.
        let restricted = state.restrict(&[1, 2, 3], &[(0, AtomLevel::G.index())]).unwrap();
        assert!(close(restricted.norm(), 1.0, 1e-14));
        let sub_label = BasisLabel::atoms_modes(&[AtomLevel::I], &[0, 0]);
        assert_eq!(restricted.amplitude(&sub_label).unwrap(), Complex64::ONE);

        // Pinning the source to e instead selects an empty branch.
        let empty = state.restrict(&[1, 2, 3], &[(0, AtomLevel::E.index())]).unwrap();
        assert!(close(empty.norm(), 0.0, 1e-14));
    }

    #[test]
    fn label_parse_and_format_round_trip() {
        let layout = SubsystemLayout::atoms_then_modes(&["A1", "A2"], 1).unwrap();
        let label = layout.parse_label("i,g,1,0").unwrap();
        assert_eq!(
            label,
            BasisLabel::atoms_modes(&[AtomLevel::I, AtomLevel::G], &[1, 0])
        );
        assert_eq!(layout.format_label(&label), "i,g,1,0");
        assert!(layout.parse_label("i,g,2,0").is_err());
        assert!(layout.parse_label("x,g,0,0").is_err());
    }

    #[test]
    fn layout_requires_both_modes_or_none() {
        let bad = SubsystemLayout::new(
            vec![Subsystem::atom("A1"), Subsystem::mode(ModeId::C1)],
            1,
        );
        assert!(bad.is_err());
        let atoms_only = SubsystemLayout::atoms_only(&["A1", "A2"]).unwrap();
        assert_eq!(atoms_only.dim(), 9);
    }

    #[test]
    fn layout_rejects_duplicate_atom_labels() {
        assert!(SubsystemLayout::atoms_then_modes(&["A1", "A1"], 1).is_err());
    }
}
