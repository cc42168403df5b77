//! Cross-module checks of the canned protocols: collapse identities, joint
//! detection probabilities, and the states the sequences pass through.

use std::f64::consts::PI;

use num_complex::Complex64;

use bicavity::analysis;
use bicavity::hilbert::{AtomLevel, BasisLabel, ModeId};
use bicavity::measurement::{self, enumerate_runs, sweep_signal, SweepAxis, SweepMode};
use bicavity::sequences;
use bicavity::{Bindings, PulseProgram, QuantumState, SystemConfig};

fn config() -> SystemConfig {
    SystemConfig::default()
}

fn bind(entries: &[(&str, f64)]) -> Bindings {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn final_state(program: &PulseProgram, bindings: &Bindings, cfg: &SystemConfig) -> QuantumState {
    program
        .without_measurements()
        .run(bindings, cfg, 0)
        .unwrap()
        .0
}

/// Keep the serialized program only up to (and including) the first line
/// that starts with `stop_after`.
fn prefix_program(program: &PulseProgram, stop_after: &str) -> PulseProgram {
    let text = program.serialize();
    let mut kept = Vec::new();
    for line in text.lines() {
        kept.push(line);
        if line.starts_with(stop_after) {
            break;
        }
    }
    PulseProgram::parse(&kept.join("\n")).unwrap()
}

#[test]
fn ghz4_branch_amplitude_modulus() {
    let cfg = config();
    let state = final_state(&sequences::ghz_program(4).unwrap(), &Bindings::new(), &cfg);
    use AtomLevel::{E, G};
    let amp = state
        .amplitude(&BasisLabel::atoms_modes(&[G, G, G, E, G], &[0, 0]))
        .unwrap();
    assert!((amp.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn source_prep_overlaps_the_single_photon_ket() {
    // After the source pulses the state overlaps |1, 0> (source in g) with
    // modulus 1/sqrt(2).
    let cfg = config();
    let program = PulseProgram::parse(
        "atom As init=e\nrabi As C1 angle=pi/2\nrabi As C2 angle=pi\n",
    )
    .unwrap();
    let state = final_state(&program, &Bindings::new(), &cfg);
    let single_photon = QuantumState::basis_state(
        state.layout().clone(),
        &BasisLabel::atoms_modes(&[AtomLevel::G], &[1, 0]),
    )
    .unwrap();
    let overlap = state.inner_product(&single_photon).unwrap();
    assert!((overlap.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ghz4_cavity_reduces_to_the_vacuum_projector() {
    let cfg = config();
    let state = final_state(&sequences::ghz_program(4).unwrap(), &Bindings::new(), &cfg);
    let layout = state.layout().clone();
    let keep = [
        layout.mode_position(ModeId::C1).unwrap(),
        layout.mode_position(ModeId::C2).unwrap(),
    ];
    let rho = state.reduced_density_matrix(&keep).unwrap();
    assert!((rho.get(0, 0).re - 1.0).abs() < 1e-12);
    assert!((rho.purity() - 1.0).abs() < 1e-12);
}

#[test]
fn ghz4_longitudinal_distribution_is_an_even_split() {
    let cfg = config();
    let state = final_state(&sequences::ghz_program(4).unwrap(), &Bindings::new(), &cfg);
    let probs = measurement::outcome_distribution(&state, "A1").unwrap();
    assert!((probs[AtomLevel::I.index()] - 0.5).abs() < 1e-12);
    assert!((probs[AtomLevel::G.index()] - 0.5).abs() < 1e-12);
    assert!(probs[AtomLevel::E.index()].abs() < 1e-12);
}

#[test]
fn w4_longitudinal_distribution_is_one_quarter_excited() {
    let cfg = config();
    let state = final_state(&sequences::w_program(4).unwrap(), &Bindings::new(), &cfg);
    for atom in ["A1", "A2", "A3", "A4"] {
        let probs = measurement::outcome_distribution(&state, atom).unwrap();
        assert!((probs[AtomLevel::E.index()] - 0.25).abs() < 1e-12, "{atom}");
        assert!((probs[AtomLevel::G.index()] - 0.75).abs() < 1e-12, "{atom}");
        assert!(probs[AtomLevel::I.index()].abs() < 1e-12, "{atom}");
    }
}

#[test]
fn projecting_the_triplet_collapses_the_modes_to_bell_pairs() {
    // Run the Bell-pair sequence up to A1's phase gate, then project A1.
    let cfg = config();
    let program = prefix_program(&sequences::bell_pair_map_program(), "rabi A1");
    let state = final_state(&program, &Bindings::new(), &cfg);
    let beat = cfg.delta / cfg.omega_rabi;

    // Outcome i picks the + pair: (i e^{3 pi beat} |0,1> + |1,0>)/sqrt(2).
    let (p_i, plus) = measurement::project(&state, "A1", AtomLevel::I).unwrap();
    assert!((p_i - 0.5).abs() < 1e-12);
    use AtomLevel::{G, I};
    let upper = plus
        .amplitude(&BasisLabel::atoms_modes(&[G, I, G, G], &[0, 1]))
        .unwrap();
    let lower = plus
        .amplitude(&BasisLabel::atoms_modes(&[G, I, G, G], &[1, 0]))
        .unwrap();
    let expect_ratio = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, 3.0 * PI * beat);
    assert!(((upper / lower) - expect_ratio).norm() < 1e-12);

    // Outcome g flips the relative sign.
    let (p_g, minus) = measurement::project(&state, "A1", AtomLevel::G).unwrap();
    assert!((p_g - 0.5).abs() < 1e-12);
    let upper = minus
        .amplitude(&BasisLabel::atoms_modes(&[G, G, G, G], &[0, 1]))
        .unwrap();
    let lower = minus
        .amplitude(&BasisLabel::atoms_modes(&[G, G, G, G], &[1, 0]))
        .unwrap();
    assert!(((upper / lower) + expect_ratio).norm() < 1e-12);
}

#[test]
fn bell_signal_peaks_at_the_compensating_analysis_angle() {
    let cfg = config();
    let eta = analysis::bell_phase_offset(&cfg);
    let phi = (-eta).rem_euclid(2.0 * PI);
    let branches = enumerate_runs(
        &sequences::bell_pair_map_program(),
        &bind(&[("phi", phi)]),
        &cfg,
    )
    .unwrap();
    // Joint conditional probabilities for the + pair (A1 = i).
    let mut joint = std::collections::BTreeMap::new();
    let mut weight_plus = 0.0;
    for b in &branches {
        if b.outcome_of("A1") == Some(AtomLevel::I) {
            weight_plus += b.weight;
            let key = (
                b.outcome_of("A2").unwrap().symbol(),
                b.outcome_of("A3").unwrap().symbol(),
            );
            *joint.entry(key).or_insert(0.0) += b.weight;
        }
    }
    let p = |k: (char, char)| joint.get(&k).copied().unwrap_or(0.0) / weight_plus;
    let signal = measurement::bell_signal(
        p(('e', 'e')),
        p(('g', 'g')),
        p(('e', 'g')),
        p(('g', 'e')),
    );
    assert!((signal - 1.0).abs() < 1e-9, "signal {signal}");
}

#[test]
fn eight_outcome_probabilities_split_evenly_between_branches() {
    // For any analysis angle the Bell-pair program has eight outcome
    // histories with nonzero weight, four per collapse branch, and the
    // conditional probabilities in each branch sum to one.
    let cfg = config();
    for phi in [0.2, 1.1, 4.4] {
        let branches = enumerate_runs(
            &sequences::bell_pair_map_program(),
            &bind(&[("phi", phi)]),
            &cfg,
        )
        .unwrap();
        assert_eq!(branches.len(), 8, "phi {phi}");
        for label in [AtomLevel::I, AtomLevel::G] {
            let group: Vec<_> = branches
                .iter()
                .filter(|b| b.outcome_of("A1") == Some(label))
                .collect();
            assert_eq!(group.len(), 4);
            let total: f64 = group.iter().map(|b| b.weight).sum();
            assert!((total - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn w_detection_postselection_leaves_a_photonic_bell_state() {
    let cfg = config();
    let t1 = 2.35e-6;
    let program = prefix_program(&sequences::w_detection_program(), "postselect A2");
    let branches = enumerate_runs(&program, &bind(&[("T1", t1)]), &cfg).unwrap();

    let passing: Vec<_> = branches.iter().filter(|b| b.postselect_pass).collect();
    assert_eq!(passing.len(), 1);
    let survivor = passing[0];
    assert!((survivor.weight - 0.5).abs() < 1e-12, "weight {}", survivor.weight);

    // The surviving cavity state carries T1 in its branch phase.
    use AtomLevel::G;
    let state = &survivor.state;
    let upper = state
        .amplitude(&BasisLabel::atoms_modes(&[G, G, G, G], &[0, 1]))
        .unwrap();
    let lower = state
        .amplitude(&BasisLabel::atoms_modes(&[G, G, G, G], &[1, 0]))
        .unwrap();
    assert!((upper.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    assert!((lower.norm() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    let tb = 2.0 * (2f64 / 3.0).sqrt().acos();
    let expect = cfg.delta * (t1 + 1.5 * PI / cfg.omega_rabi + tb / cfg.omega_rabi) + PI / 2.0;
    let got = (upper / lower).arg().rem_euclid(2.0 * PI);
    assert!(
        (got - expect.rem_euclid(2.0 * PI)).abs() < 1e-9,
        "phase {got} vs {expect}"
    );
}

#[test]
fn canned_sequences_never_leave_the_single_photon_manifold() {
    // Rerun every canned program with room for two photons per mode and
    // check that no amplitude ever leaks above one photon.
    let cfg = config().with_n_max(2);
    let programs: Vec<(PulseProgram, Bindings)> = vec![
        (sequences::ghz_program(4).unwrap(), Bindings::new()),
        (sequences::ghz_program(6).unwrap(), Bindings::new()),
        (sequences::w_program(4).unwrap(), Bindings::new()),
        (sequences::w_program(6).unwrap(), Bindings::new()),
        (
            sequences::ghz_detection_program(),
            bind(&[("phi", 0.8), ("T", 2.0e-6)]),
        ),
        (
            sequences::w_detection_program(),
            bind(&[("T1", 1.0e-6), ("T2", 3.0e-6)]),
        ),
        (sequences::bell_pair_map_program(), bind(&[("phi", 1.7)])),
        (sequences::bell_pair_probe_program(), bind(&[("T", 2.0e-6)])),
    ];
    for (program, bindings) in &programs {
        let states = program.intermediate_states(bindings, &cfg).unwrap();
        for (step, state) in states.iter().enumerate() {
            let layout = state.layout().clone();
            let c1 = layout.mode_position(ModeId::C1).unwrap();
            let c2 = layout.mode_position(ModeId::C2).unwrap();
            for (idx, amp) in state.amplitudes().iter().enumerate() {
                let label = layout.label_of(idx);
                if label.0[c1] > 1 || label.0[c2] > 1 {
                    assert!(
                        amp.norm() < 1e-12,
                        "step {step}: leakage {} at {}",
                        amp.norm(),
                        layout.format_label(&label)
                    );
                }
            }
        }
    }
}

#[test]
fn source_atom_factorizes_in_ground_state_after_prep() {
    let cfg = config();
    for program in [
        sequences::ghz_program(5).unwrap(),
        sequences::w_program(5).unwrap(),
    ] {
        let state = final_state(&program, &Bindings::new(), &cfg);
        let probs = measurement::outcome_distribution(&state, "As").unwrap();
        assert!((probs[AtomLevel::G.index()] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn detection_signals_match_closed_forms_on_a_coarse_grid() {
    // A smaller-grid replica of the acceptance sweeps, exercising the
    // two-parameter path and the ideal-signal helpers together.
    let cfg = config();
    let sweep = sweep_signal(
        &sequences::ghz_detection_program(),
        &[
            SweepAxis::linspace("phi", 0.0, 2.0 * PI * 0.9, 5),
            SweepAxis::linspace("T", 0.0, 3.0e-6, 3),
        ],
        &Bindings::new(),
        &cfg,
        SweepMode::Exact,
    )
    .unwrap();
    let plus = sweep.column("I[A1=g]").unwrap();
    for (k, value) in plus.iter().enumerate() {
        let (phi, t) = (sweep.grid[k][0], sweep.grid[k][1]);
        let ideal = analysis::ideal_ghz_correlation(phi, t, analysis::Branch::Plus, &cfg);
        assert!((value - ideal).abs() < 1e-10);
    }
}
