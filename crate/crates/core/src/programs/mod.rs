//! Pulse programs: a parsed, parameterizable temporal sequence of Rabi and
//! Ramsey pulses, delays, measurements, and post-selection filters.
//!
//! Programs are immutable after construction. Binding resolves every
//! expression against a parameter map (plus declared defaults) and yields an
//! executable form; running draws measurement outcomes from a seeded RNG so
//! identical `(program, bindings, config, seed)` quadruples replay exactly.

mod expr;
mod parse;

pub use expr::{Bindings, Expr};
pub use parse::{Diagnostic, ParseError};

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;

use crate::dynamics::{self, Transition};
use crate::error::{Result, SimError};
use crate::hilbert::{AtomLevel, BasisLabel, ModeId, QuantumState, SubsystemLayout, SystemConfig};
use crate::measurement::{self, MeasurementRecord, RecordedOutcome};

/// Ramsey-zone tag. The zone is an annotation only (both zones apply the
/// same unitary); it is kept because serialized sequences read better with
/// the pulse position spelled out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Zone {
    R1,
    R2,
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Zone::R1 => "R1",
            Zone::R2 => "R2",
        })
    }
}

/// One line of a pulse program.
#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    DeclareAtom {
        id: String,
        init: AtomLevel,
    },
    DeclareModes {
        n_max: Option<u32>,
    },
    Rabi {
        atom: String,
        mode: ModeId,
        angle: Expr,
    },
    Ramsey {
        atom: String,
        zone: Zone,
        transition: Transition,
        angle: Expr,
        phase: Expr,
    },
    Delay {
        duration: Expr,
    },
    Measure {
        atom: String,
    },
    Postselect {
        atom: String,
        level: AtomLevel,
    },
    Param {
        name: String,
        default: Option<Expr>,
    },
}

/// A validated pulse program.
#[derive(Clone, Debug)]
pub struct PulseProgram {
    instructions: Vec<Instruction>,
    source_lines: Vec<usize>,
}

/// Structural equality: source line bookkeeping is ignored.
impl PartialEq for PulseProgram {
    fn eq(&self, other: &Self) -> bool {
        self.instructions == other.instructions
    }
}

impl PulseProgram {
    /// Validate and wrap a hand-built instruction list.
    pub fn new(instructions: Vec<Instruction>) -> Result<Self> {
        let lines = vec![0; instructions.len()];
        let diags = parse::validate_instructions(&instructions, &lines);
        if diags.is_empty() {
            Ok(Self {
                instructions,
                source_lines: lines,
            })
        } else {
            Err(ParseError { diagnostics: diags }.into())
        }
    }

    /// Parse and validate program text.
    pub fn parse(source: &str) -> std::result::Result<Self, ParseError> {
        let (instructions, source_lines) = parse::parse_instructions(source)?;
        let diags = parse::validate_instructions(&instructions, &source_lines);
        if diags.is_empty() {
            Ok(Self {
                instructions,
                source_lines,
            })
        } else {
            Err(ParseError { diagnostics: diags })
        }
    }

    /// Render back to the text format; `parse` of the output reproduces the
    /// program structurally.
    pub fn serialize(&self) -> String {
        parse::serialize_instructions(&self.instructions)
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    /// Declared atoms in order, with their initial levels.
    pub fn atoms(&self) -> Vec<(String, AtomLevel)> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::DeclareAtom { id, init } => Some((id.clone(), *init)),
                _ => None,
            })
            .collect()
    }

    /// Fock truncation requested by a `modes` line, if any.
    pub fn n_max_override(&self) -> Option<u32> {
        self.instructions.iter().find_map(|i| match i {
            Instruction::DeclareModes { n_max } => *n_max,
            _ => None,
        })
    }

    /// Copy of the program with its truncation forced to `n_max`, shadowing
    /// any `modes` line (command-line overrides take precedence over the
    /// program file).
    pub fn with_n_max(&self, n_max: u32) -> PulseProgram {
        let mut instructions = vec![Instruction::DeclareModes { n_max: Some(n_max) }];
        let mut source_lines = vec![0];
        for (instr, line) in self.instructions.iter().zip(&self.source_lines) {
            if !matches!(instr, Instruction::DeclareModes { .. }) {
                instructions.push(instr.clone());
                source_lines.push(*line);
            }
        }
        PulseProgram {
            instructions,
            source_lines,
        }
    }

    /// Every parameter referenced or declared in the program.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for instr in &self.instructions {
            match instr {
                Instruction::Rabi { angle, .. } => angle.collect_params(&mut out),
                Instruction::Ramsey { angle, phase, .. } => {
                    angle.collect_params(&mut out);
                    phase.collect_params(&mut out);
                }
                Instruction::Delay { duration } => duration.collect_params(&mut out),
                Instruction::Param { name, default } => {
                    out.insert(name.clone());
                    if let Some(d) = default {
                        d.collect_params(&mut out);
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Parameters that must be supplied at run time (no declared default).
    pub fn free_parameters(&self) -> BTreeSet<String> {
        let mut params = self.parameters();
        for instr in &self.instructions {
            if let Instruction::Param {
                name,
                default: Some(_),
            } = instr
            {
                params.remove(name);
            }
        }
        params
    }

    /// Atoms measured by the program, in first-measurement order.
    pub fn measured_atoms(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for instr in &self.instructions {
            if let Instruction::Measure { atom } = instr {
                if !out.contains(atom) {
                    out.push(atom.clone());
                }
            }
        }
        out
    }

    /// Post-selection filters in program order.
    pub fn postselections(&self) -> Vec<(String, AtomLevel)> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Postselect { atom, level } => Some((atom.clone(), *level)),
                _ => None,
            })
            .collect()
    }

    /// Copy of the program with measurements and post-selections removed.
    ///
    /// Because a measured atom is never pulsed again, deferring every
    /// measurement to the end leaves the pre-detection wave function intact;
    /// this is the state that branch tables and fidelity checks inspect.
    pub fn without_measurements(&self) -> PulseProgram {
        let mut instructions = Vec::new();
        let mut source_lines = Vec::new();
        for (instr, line) in self.instructions.iter().zip(&self.source_lines) {
            match instr {
                Instruction::Measure { .. } | Instruction::Postselect { .. } => {}
                other => {
                    instructions.push(other.clone());
                    source_lines.push(*line);
                }
            }
        }
        PulseProgram {
            instructions,
            source_lines,
        }
    }

    /// Subsystem layout the program runs on: declared atoms in order, then
    /// the two cavity modes.
    pub fn layout(&self, config: &SystemConfig) -> Result<Arc<SubsystemLayout>> {
        let atoms = self.atoms();
        let labels: Vec<&str> = atoms.iter().map(|(id, _)| id.as_str()).collect();
        let n_max = self.n_max_override().unwrap_or(config.n_max);
        SubsystemLayout::atoms_then_modes(&labels, n_max)
    }

    /// Resolve parameters and evaluate every expression.
    pub fn bind(&self, bindings: &Bindings, config: &SystemConfig) -> Result<BoundProgram> {
        let known = self.parameters();
        for name in bindings.keys() {
            if !known.contains(name) {
                return Err(SimError::UnknownParameter(name.clone()));
            }
        }
        let mut resolved = bindings.clone();
        for instr in &self.instructions {
            if let Instruction::Param {
                name,
                default: Some(default),
            } = instr
            {
                if !resolved.contains_key(name) {
                    let value = default.eval(&resolved)?;
                    resolved.insert(name.clone(), value);
                }
            }
        }

        let layout = self.layout(config)?;
        let config = config.with_n_max(layout.n_max());
        let atoms = self.atoms();
        let levels: Vec<AtomLevel> = atoms.iter().map(|(_, init)| *init).collect();
        let photons = vec![0u32; 2];
        let initial =
            QuantumState::basis_state(layout.clone(), &BasisLabel::atoms_modes(&levels, &photons))?;

        let mut steps = Vec::new();
        for (instr, line) in self.instructions.iter().zip(&self.source_lines) {
            let step = match instr {
                Instruction::Rabi { atom, mode, angle } => Some(BoundStep::Rabi {
                    atom: atom.clone(),
                    mode: *mode,
                    angle: eval_at(angle, &resolved, *line)?,
                }),
                Instruction::Ramsey {
                    atom,
                    transition,
                    angle,
                    phase,
                    ..
                } => Some(BoundStep::Ramsey {
                    atom: atom.clone(),
                    transition: *transition,
                    angle: eval_at(angle, &resolved, *line)?,
                    phase: eval_at(phase, &resolved, *line)?,
                }),
                Instruction::Delay { duration } => Some(BoundStep::Delay {
                    duration: eval_at(duration, &resolved, *line)?,
                }),
                Instruction::Measure { atom } => Some(BoundStep::Measure { atom: atom.clone() }),
                Instruction::Postselect { atom, level } => Some(BoundStep::Postselect {
                    atom: atom.clone(),
                    level: *level,
                }),
                Instruction::DeclareAtom { .. }
                | Instruction::DeclareModes { .. }
                | Instruction::Param { .. } => None,
            };
            if let Some(step) = step {
                steps.push(step);
            }
        }

        Ok(BoundProgram {
            config,
            initial,
            steps,
        })
    }

    /// Execute with sampled measurement outcomes.
    ///
    /// A post-selection mismatch aborts the run and flags the record; the
    /// state returned is the one reached at the abort point. The record's
    /// outcome probabilities multiply to the trajectory weight.
    pub fn run(
        &self,
        bindings: &Bindings,
        config: &SystemConfig,
        seed: u64,
    ) -> Result<(QuantumState, MeasurementRecord)> {
        let bound = self.bind(bindings, config)?;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut state = bound.initial.clone();
        let mut record = MeasurementRecord {
            outcomes: Vec::new(),
            postselect_pass: true,
            seed,
        };
        for step in &bound.steps {
            match step {
                BoundStep::Measure { atom } => {
                    let (level, probability, collapsed) =
                        measurement::sample_measure(&state, atom, &mut rng)?;
                    state = collapsed;
                    record.outcomes.push(RecordedOutcome {
                        atom: atom.clone(),
                        level,
                        probability,
                    });
                }
                BoundStep::Postselect { atom, level } => {
                    let seen = record
                        .outcomes
                        .iter()
                        .rev()
                        .find(|o| &o.atom == atom)
                        .ok_or_else(|| {
                            SimError::InvalidProgram(format!(
                                "postselect on `{atom}` before it is measured"
                            ))
                        })?;
                    if seen.level != *level {
                        record.postselect_pass = false;
                        return Ok((state, record));
                    }
                }
                unitary => state = apply_unitary(unitary, &state, &bound.config)?,
            }
        }
        Ok((state, record))
    }

    /// States after each pulse or delay, with measurements deferred.
    ///
    /// Declarations contribute no entry; the first entry is the state after
    /// the first Rabi, Ramsey, or delay instruction.
    pub fn intermediate_states(
        &self,
        bindings: &Bindings,
        config: &SystemConfig,
    ) -> Result<Vec<QuantumState>> {
        let bound = self.bind(bindings, config)?;
        let mut state = bound.initial.clone();
        let mut out = Vec::new();
        for step in &bound.steps {
            match step {
                BoundStep::Measure { .. } | BoundStep::Postselect { .. } => {}
                unitary => {
                    state = apply_unitary(unitary, &state, &bound.config)?;
                    out.push(state.clone());
                }
            }
        }
        Ok(out)
    }
}

fn eval_at(expr: &Expr, bindings: &Bindings, line: usize) -> Result<f64> {
    expr.eval(bindings).map_err(|e| match e {
        SimError::Expr(msg) if line > 0 => SimError::Expr(format!("line {line}: {msg}")),
        other => other,
    })
}

/// A program with every expression evaluated, ready to execute.
#[derive(Clone, Debug)]
pub struct BoundProgram {
    pub(crate) config: SystemConfig,
    pub(crate) initial: QuantumState,
    pub(crate) steps: Vec<BoundStep>,
}

#[derive(Clone, Debug)]
pub(crate) enum BoundStep {
    Rabi {
        atom: String,
        mode: ModeId,
        angle: f64,
    },
    Ramsey {
        atom: String,
        transition: Transition,
        angle: f64,
        phase: f64,
    },
    Delay {
        duration: f64,
    },
    Measure {
        atom: String,
    },
    Postselect {
        atom: String,
        level: AtomLevel,
    },
}

pub(crate) fn apply_unitary(
    step: &BoundStep,
    state: &QuantumState,
    config: &SystemConfig,
) -> Result<QuantumState> {
    match step {
        BoundStep::Rabi { atom, mode, angle } => {
            dynamics::apply_rabi(state, config, atom, *mode, *angle)
        }
        BoundStep::Ramsey {
            atom,
            transition,
            angle,
            phase,
        } => dynamics::apply_ramsey(state, atom, *transition, *angle, *phase),
        BoundStep::Delay { duration } => dynamics::apply_delay(state, config, *duration),
        _ => unreachable!("apply_unitary called on a measurement step"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_a_plain_rabi_line() {
        let program = PulseProgram::parse("atom A1 init=g\nrabi A1 C1 angle=2*pi\n").unwrap();
        match &program.instructions()[1] {
            Instruction::Rabi { atom, mode, angle } => {
                assert_eq!(atom, "A1");
                assert_eq!(*mode, ModeId::C1);
                assert!((angle.eval(&Bindings::new()).unwrap() - 2.0 * PI).abs() < 1e-15);
            }
            other => panic!("unexpected instruction {other:?}"),
        }
    }

    #[test]
    fn parses_arccos_angles() {
        let program =
            PulseProgram::parse("atom A1 init=g\nrabi A1 C1 angle=2*acos(sqrt(2/3))\n").unwrap();
        match &program.instructions()[1] {
            Instruction::Rabi { angle, .. } => {
                let v = angle.eval(&Bindings::new()).unwrap();
                assert!((v - 1.2310).abs() < 1e-4);
                assert!((v - 2.0 * (2f64 / 3.0).sqrt().acos()).abs() < 1e-15);
            }
            other => panic!("unexpected instruction {other:?}"),
        }
    }

    #[test]
    fn unbound_ramsey_phase_becomes_a_free_parameter() {
        let program = PulseProgram::parse(
            "atom A2 init=g\nramsey A2 R2 transition=g-i angle=pi/2 phase=$phi\n",
        )
        .unwrap();
        let free = program.free_parameters();
        assert!(free.contains("phi"));
        assert_eq!(free.len(), 1);
    }

    #[test]
    fn serialize_round_trips_structurally() {
        let text = "\
atom As init=e
atom A1 init=g
param phi
param tb=2*acos(sqrt(2/3))
modes n_max=2
rabi As C1 angle=pi/2
rabi As C2 angle=pi
ramsey A1 R1 transition=g-i angle=pi/2 phase=0-$phi
delay 2.5e-6
measure A1
postselect A1 g
";
        let program = PulseProgram::parse(text).unwrap();
        let round = PulseProgram::parse(&program.serialize()).unwrap();
        assert_eq!(program, round);
    }

    #[test]
    fn round_trip_preserves_evaluated_values() {
        let text = "atom A1 init=g\nrabi A1 C1 angle=2*acos(sqrt(7/9))-pi/128+0.125\n";
        let program = PulseProgram::parse(text).unwrap();
        let round = PulseProgram::parse(&program.serialize()).unwrap();
        let eval = |p: &PulseProgram| match &p.instructions()[1] {
            Instruction::Rabi { angle, .. } => angle.eval(&Bindings::new()).unwrap(),
            _ => unreachable!(),
        };
        assert!((eval(&program) - eval(&round)).abs() < 1e-15);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let text = "atom A1 init=g\nrabi A1 C9 angle=pi\nwiggle A1\nrabi A1 C1 angle=pi+\n";
        let err = PulseProgram::parse(text).unwrap_err();
        assert_eq!(err.diagnostics.len(), 3);
        assert_eq!(err.diagnostics[0].line, 2);
        assert!(err.diagnostics[0].message.contains("C9"));
        assert_eq!(err.diagnostics[1].line, 3);
        assert!(err.diagnostics[1].message.contains("wiggle"));
        assert_eq!(err.diagnostics[2].line, 4);
    }

    #[test]
    fn parser_never_panics_on_garbage() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(1234);
        let alphabet: Vec<char> =
            "abcdefgz0123456789 =$()*/+-.:#_\tACR".chars().collect();
        for _ in 0..500 {
            let n_lines = rng.random_range(1..6usize);
            let mut text = String::new();
            for _ in 0..n_lines {
                let len = rng.random_range(0..40usize);
                for _ in 0..len {
                    text.push(alphabet[rng.random_range(0..alphabet.len())]);
                }
                text.push('\n');
            }
            // Every outcome is acceptable except a panic; errors must carry
            // at least one diagnostic.
            if let Err(e) = PulseProgram::parse(&text) {
                assert!(!e.diagnostics.is_empty(), "no diagnostics for {text:?}");
            }
        }
    }

    #[test]
    fn undeclared_atom_is_a_validation_error() {
        let err = PulseProgram::parse("atom A1 init=g\nrabi A2 C1 angle=pi\n").unwrap_err();
        assert!(err.diagnostics[0].message.contains("undeclared atom `A2`"));
        assert_eq!(err.diagnostics[0].line, 2);
    }

    #[test]
    fn pulsing_a_measured_atom_is_rejected() {
        let err = PulseProgram::parse(
            "atom A1 init=g\nmeasure A1\nrabi A1 C1 angle=pi\n",
        )
        .unwrap_err();
        assert!(err.diagnostics[0].message.contains("pulsed after being measured"));
    }

    #[test]
    fn postselect_requires_a_prior_measurement() {
        let err = PulseProgram::parse("atom A1 init=g\npostselect A1 g\n").unwrap_err();
        assert!(err.diagnostics[0].message.contains("before it is measured"));
    }

    #[test]
    fn empty_program_leaves_the_product_state_unchanged() {
        let program = PulseProgram::parse("atom A1 init=g\natom A2 init=g\n").unwrap();
        let config = SystemConfig::default();
        let (state, record) = program.run(&Bindings::new(), &config, 1).unwrap();
        assert!(record.outcomes.is_empty());
        assert!(record.postselect_pass);
        let label = BasisLabel::atoms_modes(&[AtomLevel::G, AtomLevel::G], &[0, 0]);
        assert!((state.amplitude(&label).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_requires_all_parameters_bound() {
        let program = PulseProgram::parse(
            "atom A1 init=g\nramsey A1 R1 transition=g-i angle=pi/2 phase=$phi\n",
        )
        .unwrap();
        let config = SystemConfig::default();
        match program.run(&Bindings::new(), &config, 0) {
            Err(SimError::UnboundParameter(name)) => assert_eq!(name, "phi"),
            other => panic!("expected unbound parameter, got {other:?}"),
        }
    }

    #[test]
    fn binding_an_unknown_parameter_is_rejected() {
        let program = PulseProgram::parse("atom A1 init=g\nrabi A1 C1 angle=pi\n").unwrap();
        let mut b = Bindings::new();
        b.insert("nope".into(), 1.0);
        assert!(matches!(
            program.bind(&b, &SystemConfig::default()),
            Err(SimError::UnknownParameter(_))
        ));
    }

    #[test]
    fn param_defaults_resolve_in_declaration_order() {
        let program = PulseProgram::parse(
            "atom A1 init=g\nparam a=0.25\nparam b=2*$a\nrabi A1 C1 angle=$b*pi\n",
        )
        .unwrap();
        let bound = program.bind(&Bindings::new(), &SystemConfig::default()).unwrap();
        match &bound.steps[0] {
            BoundStep::Rabi { angle, .. } => assert!((angle - 0.5 * PI).abs() < 1e-15),
            other => panic!("unexpected step {other:?}"),
        }
        // Explicit bindings override the default.
        let mut b = Bindings::new();
        b.insert("a".into(), 0.5);
        let bound = program.bind(&b, &SystemConfig::default()).unwrap();
        match &bound.steps[0] {
            BoundStep::Rabi { angle, .. } => assert!((angle - PI).abs() < 1e-15),
            other => panic!("unexpected step {other:?}"),
        }
    }

    #[test]
    fn acos_domain_violation_surfaces_at_bind_time() {
        let program = PulseProgram::parse(
            "atom A1 init=g\nparam x\nrabi A1 C1 angle=acos($x)\n",
        )
        .unwrap();
        let mut b = Bindings::new();
        b.insert("x".into(), 1.5);
        match program.bind(&b, &SystemConfig::default()) {
            Err(SimError::Expr(msg)) => {
                assert!(msg.contains("acos"), "message: {msg}");
                assert!(msg.contains("line 3"), "message: {msg}");
            }
            other => panic!("expected expression error, got {other:?}"),
        }
    }

    #[test]
    fn modes_line_overrides_the_truncation() {
        let program = PulseProgram::parse("atom A1 init=g\nmodes n_max=3\n").unwrap();
        let config = SystemConfig::default();
        let layout = program.layout(&config).unwrap();
        assert_eq!(layout.n_max(), 3);
        assert_eq!(layout.dim(), 3 * 16);
    }

    #[test]
    fn explicit_n_max_shadows_the_modes_line() {
        let program = PulseProgram::parse("atom A1 init=g\nmodes n_max=3\n").unwrap();
        let forced = program.with_n_max(1);
        let layout = forced.layout(&SystemConfig::default()).unwrap();
        assert_eq!(layout.n_max(), 1);
        // Still a valid, serializable program with a single modes line.
        let round = PulseProgram::parse(&forced.serialize()).unwrap();
        assert_eq!(round.n_max_override(), Some(1));
    }

    #[test]
    fn fixed_seed_replays_identically() {
        let text = "\
atom A1 init=g
ramsey A1 R1 transition=g-i angle=pi/2 phase=0
measure A1
";
        let program = PulseProgram::parse(text).unwrap();
        let config = SystemConfig::default();
        let (_, r1) = program.run(&Bindings::new(), &config, 7).unwrap();
        let (_, r2) = program.run(&Bindings::new(), &config, 7).unwrap();
        assert_eq!(r1.outcomes.len(), r2.outcomes.len());
        for (a, b) in r1.outcomes.iter().zip(&r2.outcomes) {
            assert_eq!(a.atom, b.atom);
            assert_eq!(a.level, b.level);
            assert_eq!(a.probability.to_bits(), b.probability.to_bits());
        }
    }

    #[test]
    fn postselect_mismatch_aborts_with_a_flagged_record() {
        // The atom is deterministically in g; postselecting on i must fail.
        let text = "atom A1 init=g\nmeasure A1\npostselect A1 i\nmeasure A1\n";
        let program = PulseProgram::parse(text).unwrap();
        let (_, record) = program
            .run(&Bindings::new(), &SystemConfig::default(), 3)
            .unwrap();
        assert!(!record.postselect_pass);
        assert_eq!(record.outcomes.len(), 1);
    }
}
