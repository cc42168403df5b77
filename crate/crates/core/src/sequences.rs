//! Canned pulse programs: GHZ and W chain generation for any N >= 3, and the
//! transversal-detection sequences that reveal their coherences.
//!
//! Atom naming: `As` is the auxiliary source atom that seeds the cavity,
//! `A1..An` the chain, `Ap` the probe. All builders leave the cavity modes
//! factorized in vacuum at the end of generation, and every canned sequence
//! stays inside the one-photon-per-mode manifold.

use crate::dynamics::Transition;
use crate::error::{Result, SimError};
use crate::hilbert::{AtomLevel, ModeId};
use crate::programs::{Expr, Instruction, PulseProgram, Zone};

fn atom(id: &str, init: AtomLevel) -> Instruction {
    Instruction::DeclareAtom {
        id: id.into(),
        init,
    }
}

fn rabi(atom: &str, mode: ModeId, angle: Expr) -> Instruction {
    Instruction::Rabi {
        atom: atom.into(),
        mode,
        angle,
    }
}

fn ramsey(atom: &str, zone: Zone, transition: Transition, angle: Expr, phase: Expr) -> Instruction {
    Instruction::Ramsey {
        atom: atom.into(),
        zone,
        transition,
        angle,
        phase,
    }
}

fn measure(atom: &str) -> Instruction {
    Instruction::Measure { atom: atom.into() }
}

fn postselect(atom: &str, level: AtomLevel) -> Instruction {
    Instruction::Postselect {
        atom: atom.into(),
        level,
    }
}

fn param(name: &str) -> Instruction {
    Instruction::Param {
        name: name.into(),
        default: None,
    }
}

fn pi() -> Expr {
    Expr::Pi
}

fn half_pi() -> Expr {
    Expr::div(Expr::Pi, Expr::number(2.0))
}

fn two_pi() -> Expr {
    Expr::mul(Expr::number(2.0), Expr::Pi)
}

/// `2*acos(sqrt(num/den))`.
fn acos_sqrt_angle(num: u32, den: u32) -> Expr {
    Expr::mul(
        Expr::number(2.0),
        Expr::acos(Expr::sqrt(Expr::div(
            Expr::number(num as f64),
            Expr::number(den as f64),
        ))),
    )
}

fn check_chain(n: usize) -> Result<()> {
    if n < 3 {
        Err(SimError::InvalidArgument(format!(
            "chain programs need at least 3 atoms, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// GHZ generation for an N-atom chain.
///
/// The source atom splits one excitation across the two modes; each of the
/// first N-2 chain atoms runs a Ramsey / 2 pi Rabi / Ramsey phase-gate block
/// on the g-i pair; the last two atoms absorb the photons, mapping the mode
/// entanglement onto the chain.
pub fn ghz_program(n: usize) -> Result<PulseProgram> {
    check_chain(n)?;
    let mut instr = vec![atom("As", AtomLevel::E)];
    let chain: Vec<String> = (1..=n).map(|k| format!("A{k}")).collect();
    for id in &chain {
        instr.push(atom(id, AtomLevel::G));
    }
    instr.push(rabi("As", ModeId::C1, half_pi()));
    instr.push(rabi("As", ModeId::C2, pi()));
    for id in &chain[..n - 2] {
        instr.push(ramsey(id, Zone::R1, Transition::GI, half_pi(), Expr::number(0.0)));
        instr.push(rabi(id, ModeId::C1, two_pi()));
        instr.push(ramsey(id, Zone::R2, Transition::GI, half_pi(), Expr::number(0.0)));
    }
    instr.push(rabi(&chain[n - 2], ModeId::C1, pi()));
    instr.push(rabi(&chain[n - 1], ModeId::C2, pi()));
    for id in &chain {
        instr.push(measure(id));
    }
    PulseProgram::new(instr)
}

/// W generation for an N-atom chain.
///
/// The source pulse angle `2 acos(1/sqrt(N))` loads `C1` with the right
/// weight; chain atom k-1 peels off amplitude with `2 acos sqrt((N-k)/(N-k+1))`
/// for k = 2..N-1; the final two pi pulses map the leftover photons.
pub fn w_program(n: usize) -> Result<PulseProgram> {
    check_chain(n)?;
    let mut instr = vec![atom("As", AtomLevel::E)];
    let chain: Vec<String> = (1..=n).map(|k| format!("A{k}")).collect();
    for id in &chain {
        instr.push(atom(id, AtomLevel::G));
    }
    let source_angle = Expr::mul(
        Expr::number(2.0),
        Expr::acos(Expr::div(
            Expr::number(1.0),
            Expr::sqrt(Expr::number(n as f64)),
        )),
    );
    instr.push(rabi("As", ModeId::C1, source_angle));
    instr.push(rabi("As", ModeId::C2, pi()));
    for k in 2..n {
        instr.push(rabi(
            &chain[k - 2],
            ModeId::C1,
            acos_sqrt_angle((n - k) as u32, (n - k + 1) as u32),
        ));
    }
    instr.push(rabi(&chain[n - 2], ModeId::C1, pi()));
    instr.push(rabi(&chain[n - 1], ModeId::C2, pi()));
    for id in &chain {
        instr.push(measure(id));
    }
    PulseProgram::new(instr)
}

/// Transversal detection of the four-partite GHZ coherence, free parameters
/// `phi` (analysis-axis angle) and `T` (cavity delay before the probe).
///
/// A1 is analyzed along x by direct detection after its phase-gate block;
/// A2 gets the resonant recombination pulse followed by a second pulse whose
/// phase plays the near-resonant detuning angle; the probe then reads the
/// surviving two-mode coherence through a pi / half-pi absorption pair.
pub fn ghz_detection_program() -> PulseProgram {
    let zero = || Expr::number(0.0);
    let instr = vec![
        atom("As", AtomLevel::E),
        atom("A1", AtomLevel::G),
        atom("A2", AtomLevel::G),
        atom("Ap", AtomLevel::G),
        param("phi"),
        param("T"),
        rabi("As", ModeId::C1, half_pi()),
        rabi("As", ModeId::C2, pi()),
        ramsey("A1", Zone::R1, Transition::GI, half_pi(), zero()),
        rabi("A1", ModeId::C1, two_pi()),
        measure("A1"),
        ramsey("A2", Zone::R1, Transition::GI, half_pi(), zero()),
        rabi("A2", ModeId::C1, two_pi()),
        ramsey("A2", Zone::R2, Transition::GI, half_pi(), zero()),
        ramsey("A2", Zone::R2, Transition::GI, half_pi(), Expr::param("phi")),
        measure("A2"),
        Instruction::Delay {
            duration: Expr::param("T"),
        },
        rabi("Ap", ModeId::C1, pi()),
        rabi("Ap", ModeId::C2, half_pi()),
        measure("Ap"),
    ];
    PulseProgram::new(instr).expect("canned program is well-formed")
}

/// W-detection sequence with post-selection, free parameters `T1`, `T2`.
///
/// The chain pulse angle is exposed as the defaulted parameter `tb`; its
/// default `2 acos sqrt(2/3)` is the value that balances the four branches
/// of the intermediate W state (bind `tb` explicitly to study alternatives).
/// Runs are kept only when `A1` and `A2` are both detected in `g`, leaving
/// the two modes in a Bell state whose phase stores `T1`; the probe then
/// converts the surviving coherence into an excitation probability.
pub fn w_detection_program() -> PulseProgram {
    let instr = vec![
        atom("As", AtomLevel::E),
        atom("A1", AtomLevel::G),
        atom("A2", AtomLevel::G),
        atom("Ap", AtomLevel::G),
        param("T1"),
        param("T2"),
        Instruction::Param {
            name: "tb".into(),
            default: Some(acos_sqrt_angle(2, 3)),
        },
        rabi("As", ModeId::C2, acos_sqrt_angle(3, 4)),
        rabi("As", ModeId::C1, pi()),
        Instruction::Delay {
            duration: Expr::param("T1"),
        },
        rabi("A1", ModeId::C1, Expr::param("tb")),
        rabi("A2", ModeId::C1, half_pi()),
        measure("A1"),
        postselect("A1", AtomLevel::G),
        measure("A2"),
        postselect("A2", AtomLevel::G),
        Instruction::Delay {
            duration: Expr::param("T2"),
        },
        rabi("Ap", ModeId::C1, pi()),
        rabi("Ap", ModeId::C2, half_pi()),
        measure("Ap"),
    ];
    PulseProgram::new(instr).expect("canned program is well-formed")
}

/// Map the collapsed two-mode Bell pair onto atoms A2/A3 and analyze them
/// transversally; free parameter `phi` sets the second analysis axis.
///
/// A1's detection outcome labels the Bell branch: `i` collapses the modes
/// onto the + pair, `g` onto the - pair.
pub fn bell_pair_map_program() -> PulseProgram {
    let zero = || Expr::number(0.0);
    let instr = vec![
        atom("As", AtomLevel::E),
        atom("A1", AtomLevel::G),
        atom("A2", AtomLevel::G),
        atom("A3", AtomLevel::G),
        param("phi"),
        rabi("As", ModeId::C1, half_pi()),
        rabi("As", ModeId::C2, pi()),
        ramsey("A1", Zone::R1, Transition::GI, half_pi(), zero()),
        rabi("A1", ModeId::C1, two_pi()),
        measure("A1"),
        rabi("A2", ModeId::C1, pi()),
        rabi("A3", ModeId::C2, pi()),
        ramsey("A2", Zone::R2, Transition::EG, half_pi(), zero()),
        measure("A2"),
        ramsey("A3", Zone::R2, Transition::EG, half_pi(), Expr::param("phi")),
        measure("A3"),
    ];
    PulseProgram::new(instr).expect("canned program is well-formed")
}

/// Probe the collapsed two-mode Bell pair directly after a tunable delay
/// `T`, without mapping it onto atoms first.
pub fn bell_pair_probe_program() -> PulseProgram {
    let zero = || Expr::number(0.0);
    let instr = vec![
        atom("As", AtomLevel::E),
        atom("A1", AtomLevel::G),
        atom("Ap", AtomLevel::G),
        param("T"),
        rabi("As", ModeId::C1, half_pi()),
        rabi("As", ModeId::C2, pi()),
        ramsey("A1", Zone::R1, Transition::GI, half_pi(), zero()),
        rabi("A1", ModeId::C1, two_pi()),
        measure("A1"),
        Instruction::Delay {
            duration: Expr::param("T"),
        },
        rabi("Ap", ModeId::C1, pi()),
        rabi("Ap", ModeId::C2, half_pi()),
        measure("Ap"),
    ];
    PulseProgram::new(instr).expect("canned program is well-formed")
}
