//! Projective longitudinal measurement, post-selection, exhaustive branch
//! enumeration, Monte Carlo trajectories, and correlation-signal sweeps.
//!
//! A correlation sweep derives its combination rule from the program itself:
//! the first measured (non-post-selected) atom labels the collapse branch and
//! the remaining analyzed atoms contribute +1 when detected in the lower
//! level of their analysis transition and -1 in the upper one. With three
//! analyzed atoms this reproduces the standard Bell-signal combination
//! `P(upper,upper) + P(lower,lower) - P(mixed)` expressed per branch; with
//! two it yields branch-conditioned excitation probabilities; with one, a
//! plain excitation probability among post-selected runs.

use std::io::Write;

use rand::{Rng, SeedableRng};

use crate::error::{Result, SimError};
use crate::hilbert::{AtomLevel, QuantumState, SystemConfig, PROB_FLOOR};
use crate::programs::{apply_unitary, Bindings, BoundStep, Instruction, PulseProgram};

/// Outcomes of one program run: which atoms were detected in which levels,
/// and the probability each outcome carried when it was drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub outcomes: Vec<RecordedOutcome>,
    pub postselect_pass: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordedOutcome {
    pub atom: String,
    pub level: AtomLevel,
    pub probability: f64,
}

impl MeasurementRecord {
    /// Product of the recorded outcome probabilities.
    pub fn trajectory_weight(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).product()
    }
}

/// Probability of finding `atom` in each level, summed over the rest of the
/// register.
pub fn outcome_distribution(state: &QuantumState, atom: &str) -> Result<[f64; 3]> {
    let layout = state.layout();
    let pos = layout
        .atom_position(atom)
        .ok_or_else(|| SimError::UnknownAtom(atom.to_string()))?;
    let stride = layout.stride(pos);
    let mut probs = [0.0f64; 3];
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        probs[(idx / stride) % 3] += amp.norm_sqr();
    }
    Ok(probs)
}

/// Project `atom` onto `level`, returning the outcome probability and the
/// renormalized collapsed state. Branches below [`PROB_FLOOR`] are refused.
pub fn project(state: &QuantumState, atom: &str, level: AtomLevel) -> Result<(f64, QuantumState)> {
    let layout = state.layout();
    let pos = layout
        .atom_position(atom)
        .ok_or_else(|| SimError::UnknownAtom(atom.to_string()))?;
    let stride = layout.stride(pos);
    let probs = outcome_distribution(state, atom)?;
    let p = probs[level.index()];
    if p < PROB_FLOOR {
        return Err(SimError::ZeroProbabilityBranch {
            atom: atom.to_string(),
            level,
            probability: p,
        });
    }
    let mut collapsed = state.clone();
    for (idx, amp) in collapsed.amplitudes_mut().iter_mut().enumerate() {
        if (idx / stride) % 3 != level.index() {
            *amp = num_complex::Complex64::ZERO;
        }
    }
    collapsed.renormalize();
    Ok((p, collapsed))
}

/// Draw one outcome for `atom` from its distribution and collapse onto it.
pub fn sample_measure(
    state: &QuantumState,
    atom: &str,
    rng: &mut impl Rng,
) -> Result<(AtomLevel, f64, QuantumState)> {
    let probs = outcome_distribution(state, atom)?;
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = None;
    for level in AtomLevel::ALL {
        acc += probs[level.index()];
        if draw < acc {
            chosen = Some(level);
            break;
        }
    }
    // Guard against the accumulated probabilities rounding just below 1.
    let level = chosen.unwrap_or_else(|| {
        AtomLevel::ALL
            .into_iter()
            .rev()
            .find(|l| probs[l.index()] >= PROB_FLOOR)
            .unwrap_or(AtomLevel::I)
    });
    let (p, collapsed) = project(state, atom, level)?;
    Ok((level, p, collapsed))
}

/// Bell-signal combination of joint two-atom detection probabilities.
pub fn bell_signal(p_ee: f64, p_gg: f64, p_eg: f64, p_ge: f64) -> f64 {
    p_ee + p_gg - p_eg - p_ge
}

/// One leaf of the exhaustive measurement tree.
#[derive(Clone, Debug)]
pub struct RunBranch {
    pub outcomes: Vec<RecordedOutcome>,
    pub weight: f64,
    pub postselect_pass: bool,
    pub state: QuantumState,
}

impl RunBranch {
    pub fn outcome_of(&self, atom: &str) -> Option<AtomLevel> {
        self.outcomes.iter().find(|o| o.atom == atom).map(|o| o.level)
    }
}

/// Enumerate every measurement history with its exact weight.
///
/// Weights are joint probabilities, so they sum to one over all leaves (up
/// to branches pruned below [`PROB_FLOOR`]). Post-selection failures stop a
/// branch early and flag it, mirroring the sampled executor.
pub fn enumerate_runs(
    program: &PulseProgram,
    bindings: &Bindings,
    config: &SystemConfig,
) -> Result<Vec<RunBranch>> {
    let bound = program.bind(bindings, config)?;
    let mut leaves = Vec::new();
    let mut stack = vec![(0usize, bound.initial.clone(), Vec::new(), 1.0f64)];
    'branches: while let Some((ip, mut state, mut outcomes, mut weight)) = stack.pop() {
        let mut cursor = ip;
        while cursor < bound.steps.len() {
            match &bound.steps[cursor] {
                BoundStep::Measure { atom } => {
                    let probs = outcome_distribution(&state, atom)?;
                    let mut live: Vec<(AtomLevel, f64)> = AtomLevel::ALL
                        .into_iter()
                        .filter_map(|l| {
                            let p = probs[l.index()];
                            (p >= PROB_FLOOR).then_some((l, p))
                        })
                        .collect();
                    // Continue in place with the first branch, queue the rest.
                    let first = live.remove(0);
                    for (level, p) in live {
                        let (_, collapsed) = project(&state, atom, level)?;
                        let mut sub = outcomes.clone();
                        sub.push(RecordedOutcome {
                            atom: atom.clone(),
                            level,
                            probability: p,
                        });
                        stack.push((cursor + 1, collapsed, sub, weight * p));
                    }
                    let (level, p) = first;
                    let (_, collapsed) = project(&state, atom, level)?;
                    state = collapsed;
                    outcomes.push(RecordedOutcome {
                        atom: atom.clone(),
                        level,
                        probability: p,
                    });
                    weight *= p;
                    cursor += 1;
                }
                BoundStep::Postselect { atom, level } => {
                    let seen = outcomes.iter().rev().find(|o| &o.atom == atom).ok_or_else(
                        || {
                            SimError::InvalidProgram(format!(
                                "postselect on `{atom}` before it is measured"
                            ))
                        },
                    )?;
                    if seen.level != *level {
                        leaves.push(RunBranch {
                            outcomes,
                            weight,
                            postselect_pass: false,
                            state,
                        });
                        continue 'branches;
                    }
                    cursor += 1;
                }
                unitary => {
                    state = apply_unitary(unitary, &state, &bound.config)?;
                    cursor += 1;
                }
            }
        }
        leaves.push(RunBranch {
            outcomes,
            weight,
            postselect_pass: true,
            state,
        });
    }
    Ok(leaves)
}

/// Tabulated signal over a parameter grid.
#[derive(Clone, Debug)]
pub struct SignalSweep {
    /// Swept parameter names, outer axis first.
    pub parameters: Vec<String>,
    /// Parameter values per grid point, row-major in the axes.
    pub grid: Vec<Vec<f64>>,
    /// Signal column names.
    pub columns: Vec<String>,
    /// Signal values per grid point, aligned with `grid`.
    pub values: Vec<Vec<f64>>,
    /// Trajectories per point; 0 means exact enumeration.
    pub samples_per_point: u64,
}

impl SignalSweep {
    /// CSV with a header row; numbers carry 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<&str> = self
            .parameters
            .iter()
            .map(String::as_str)
            .chain(self.columns.iter().map(String::as_str))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (point, row) in self.grid.iter().zip(&self.values) {
            let cells: Vec<String> = point
                .iter()
                .chain(row.iter())
                .map(|v| format!("{v:.11e}"))
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.values.iter().map(|row| row[idx]).collect())
    }
}

/// One swept parameter axis.
#[derive(Clone, Debug)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// `steps` evenly spaced values covering [start, stop].
    pub fn linspace(name: impl Into<String>, start: f64, stop: f64, steps: usize) -> Self {
        let values = if steps <= 1 {
            vec![start]
        } else {
            (0..steps)
                .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
                .collect()
        };
        Self {
            name: name.into(),
            values,
        }
    }

    /// Parse an axis spec of the form `name=start:stop:steps`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || {
            SimError::InvalidArgument(format!(
                "sweep axis must be NAME=START:STOP:STEPS, got `{spec}`"
            ))
        };
        let (name, range) = spec.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 || name.is_empty() {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].parse().map_err(|_| bad())?;
        let steps: usize = parts[2].parse().map_err(|_| bad())?;
        if steps == 0 {
            return Err(SimError::InvalidArgument(format!(
                "step count must be positive in `{spec}`"
            )));
        }
        Ok(Self::linspace(name, start, stop, steps))
    }
}

/// Exact enumeration or `k` sampled trajectories per grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    Exact,
    Sampled(u64),
}

#[derive(Clone, Copy, Debug)]
struct SignMap {
    plus: AtomLevel,
    minus: AtomLevel,
}

impl SignMap {
    fn for_transition(t: crate::dynamics::Transition) -> Self {
        let (minus, plus) = t.pair();
        SignMap { plus, minus }
    }

    fn sign(&self, level: AtomLevel, atom: &str) -> Result<f64> {
        if level == self.plus {
            Ok(1.0)
        } else if level == self.minus {
            Ok(-1.0)
        } else {
            Err(SimError::InvalidProgram(format!(
                "atom `{atom}` measured in {level}, outside its analysis pair {}/{}",
                self.minus, self.plus
            )))
        }
    }
}

#[derive(Clone, Debug)]
enum SignalShape {
    /// Branch label from `condition`, product-sign correlation of the pair.
    Correlation {
        condition: String,
        pair: [(String, SignMap); 2],
    },
    /// Branch label from `condition`, detection probabilities of `probe`.
    ConditionalExcitation { condition: String, probe: String },
    /// Detection probabilities of `probe` among post-selected runs.
    Excitation { probe: String },
}

/// Read the signal combination off the program structure: measured atoms
/// that are not post-selected are analyzed in measurement order, and each
/// analyzed atom's sign pair comes from the last Ramsey transition applied
/// to it (defaulting to e-g for bare probes).
fn derive_shape(program: &PulseProgram) -> Result<SignalShape> {
    let postselected: Vec<String> = program
        .postselections()
        .into_iter()
        .map(|(atom, _)| atom)
        .collect();
    let analyzed: Vec<String> = program
        .measured_atoms()
        .into_iter()
        .filter(|a| !postselected.contains(a))
        .collect();

    let sign_map = |atom: &str| -> SignMap {
        let mut map = SignMap {
            plus: AtomLevel::G,
            minus: AtomLevel::E,
        };
        for instr in program.instructions() {
            match instr {
                Instruction::Ramsey {
                    atom: a,
                    transition,
                    ..
                } if a == atom => map = SignMap::for_transition(*transition),
                Instruction::Measure { atom: a } if a == atom => break,
                _ => {}
            }
        }
        map
    };

    match analyzed.len() {
        0 => Err(SimError::InvalidProgram(
            "program measures no atoms outside its post-selection".into(),
        )),
        1 => Ok(SignalShape::Excitation {
            probe: analyzed[0].clone(),
        }),
        2 => Ok(SignalShape::ConditionalExcitation {
            condition: analyzed[0].clone(),
            probe: analyzed[1].clone(),
        }),
        3 => Ok(SignalShape::Correlation {
            condition: analyzed[0].clone(),
            pair: [
                (analyzed[1].clone(), sign_map(&analyzed[1])),
                (analyzed[2].clone(), sign_map(&analyzed[2])),
            ],
        }),
        n => Err(SimError::InvalidProgram(format!(
            "cannot derive a signal from {n} analyzed atoms (at most 3 supported)"
        ))),
    }
}

/// Accumulated statistics for one conditioning group at one grid point.
#[derive(Clone, Copy, Debug, Default)]
struct GroupStats {
    weight: f64,
    signed: f64,
    probe_e: f64,
    probe_g: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Evaluate the program's signal over a parameter grid.
///
/// Exact mode enumerates every measurement branch and combines exact
/// probabilities; sampled mode runs `k` trajectories per point with an RNG
/// stream derived from `(config.rng_seed, point index)`. The first analyzed
/// atom's outcome labels the collapse branch, one signal column per observed
/// label.
pub fn sweep_signal(
    program: &PulseProgram,
    axes: &[SweepAxis],
    fixed: &Bindings,
    config: &SystemConfig,
    mode: SweepMode,
) -> Result<SignalSweep> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(SimError::InvalidArgument(
            "sweeps take one or two parameter axes".into(),
        ));
    }
    let params = program.parameters();
    for axis in axes {
        if !params.contains(&axis.name) {
            return Err(SimError::UnknownParameter(axis.name.clone()));
        }
        if axis.values.is_empty() {
            return Err(SimError::InvalidArgument(format!(
                "axis `{}` has no grid values",
                axis.name
            )));
        }
        if fixed.contains_key(&axis.name) {
            return Err(SimError::InvalidArgument(format!(
                "parameter `{}` is both swept and fixed",
                axis.name
            )));
        }
    }
    let shape = derive_shape(program)?;

    let mut grid: Vec<Vec<f64>> = Vec::new();
    match axes {
        [a] => {
            for &x in &a.values {
                grid.push(vec![x]);
            }
        }
        [a, b] => {
            for &x in &a.values {
                for &y in &b.values {
                    grid.push(vec![x, y]);
                }
            }
        }
        _ => unreachable!(),
    }

    // One GroupStats per conditioning level per point.
    let mut per_point: Vec<[GroupStats; 3]> = Vec::with_capacity(grid.len());
    for (pt_idx, point) in grid.iter().enumerate() {
        let mut bindings = fixed.clone();
        for (axis, &value) in axes.iter().zip(point.iter()) {
            bindings.insert(axis.name.clone(), value);
        }
        let mut groups = [GroupStats::default(); 3];
        match mode {
            SweepMode::Exact => {
                for branch in enumerate_runs(program, &bindings, config)? {
                    if !branch.postselect_pass {
                        continue;
                    }
                    accumulate(&shape, &mut groups, &branch, branch.weight)?;
                }
            }
            SweepMode::Sampled(k) => {
                let stream = splitmix64(config.rng_seed ^ splitmix64(pt_idx as u64));
                let mut rng = rand::rngs::StdRng::seed_from_u64(stream);
                let bound = program.bind(&bindings, config)?;
                for _ in 0..k {
                    if let Some(run) = sample_run(&bound, &mut rng)? {
                        accumulate(&shape, &mut groups, &run, 1.0)?;
                    }
                }
            }
        }
        per_point.push(groups);
    }

    // Conditioning levels observed anywhere on the grid, in level order.
    let live_levels: Vec<AtomLevel> = AtomLevel::ALL
        .into_iter()
        .filter(|l| per_point.iter().any(|g| g[l.index()].weight > 0.0))
        .collect();

    let (columns, values) = match &shape {
        SignalShape::Correlation { condition, .. } => {
            let columns: Vec<String> = live_levels
                .iter()
                .map(|l| format!("I[{condition}={l}]"))
                .collect();
            let values = per_point
                .iter()
                .map(|groups| {
                    live_levels
                        .iter()
                        .map(|l| {
                            let g = groups[l.index()];
                            g.signed / g.weight
                        })
                        .collect()
                })
                .collect();
            (columns, values)
        }
        SignalShape::ConditionalExcitation { condition, probe } => {
            let mut columns = Vec::new();
            for level in [AtomLevel::E, AtomLevel::G] {
                for cond in &live_levels {
                    columns.push(format!("P[{probe}={level}|{condition}={cond}]"));
                }
            }
            let values = per_point
                .iter()
                .map(|groups| {
                    let mut row = Vec::new();
                    for pick in [true, false] {
                        for cond in &live_levels {
                            let g = groups[cond.index()];
                            row.push(if pick { g.probe_e } else { g.probe_g } / g.weight);
                        }
                    }
                    row
                })
                .collect();
            (columns, values)
        }
        SignalShape::Excitation { probe } => {
            let columns = vec![format!("P[{probe}=e]"), format!("P[{probe}=g]")];
            let values = per_point
                .iter()
                .map(|groups| {
                    let total: f64 = groups.iter().map(|g| g.weight).sum();
                    let e: f64 = groups.iter().map(|g| g.probe_e).sum();
                    let g: f64 = groups.iter().map(|g| g.probe_g).sum();
                    vec![e / total, g / total]
                })
                .collect();
            (columns, values)
        }
    };

    Ok(SignalSweep {
        parameters: axes.iter().map(|a| a.name.clone()).collect(),
        grid,
        columns,
        values,
        samples_per_point: match mode {
            SweepMode::Exact => 0,
            SweepMode::Sampled(k) => k,
        },
    })
}

fn accumulate(
    shape: &SignalShape,
    groups: &mut [GroupStats; 3],
    branch: &RunBranch,
    weight: f64,
) -> Result<()> {
    let outcome = |atom: &str| -> Result<AtomLevel> {
        branch.outcome_of(atom).ok_or_else(|| {
            SimError::InvalidProgram(format!("atom `{atom}` was not measured in this branch"))
        })
    };
    match shape {
        SignalShape::Correlation { condition, pair } => {
            let cond = outcome(condition)?;
            let mut sign = 1.0;
            for (atom, map) in pair {
                sign *= map.sign(outcome(atom)?, atom)?;
            }
            let g = &mut groups[cond.index()];
            g.weight += weight;
            g.signed += sign * weight;
        }
        SignalShape::ConditionalExcitation { condition, probe } => {
            let cond = outcome(condition)?;
            let level = outcome(probe)?;
            let g = &mut groups[cond.index()];
            g.weight += weight;
            match level {
                AtomLevel::E => g.probe_e += weight,
                AtomLevel::G => g.probe_g += weight,
                AtomLevel::I => {}
            }
        }
        SignalShape::Excitation { probe } => {
            let level = outcome(probe)?;
            let g = &mut groups[0];
            g.weight += weight;
            match level {
                AtomLevel::E => g.probe_e += weight,
                AtomLevel::G => g.probe_g += weight,
                AtomLevel::I => {}
            }
        }
    }
    Ok(())
}

/// One sampled trajectory over an already-bound program; `None` when a
/// post-selection filter rejects the run.
fn sample_run(
    bound: &crate::programs::BoundProgram,
    rng: &mut impl Rng,
) -> Result<Option<RunBranch>> {
    let mut state = bound.initial.clone();
    let mut outcomes = Vec::new();
    let mut weight = 1.0;
    for step in &bound.steps {
        match step {
            BoundStep::Measure { atom } => {
                let (level, p, collapsed) = sample_measure(&state, atom, rng)?;
                state = collapsed;
                weight *= p;
                outcomes.push(RecordedOutcome {
                    atom: atom.clone(),
                    level,
                    probability: p,
                });
            }
            BoundStep::Postselect { atom, level } => {
                let seen = outcomes.iter().rev().find(|o| &o.atom == atom).ok_or_else(
                    || {
                        SimError::InvalidProgram(format!(
                            "postselect on `{atom}` before it is measured"
                        ))
                    },
                )?;
                if seen.level != *level {
                    return Ok(None);
                }
            }
            unitary => state = apply_unitary(unitary, &state, &bound.config)?,
        }
    }
    Ok(Some(RunBranch {
        outcomes,
        weight,
        postselect_pass: true,
        state,
    }))
}
