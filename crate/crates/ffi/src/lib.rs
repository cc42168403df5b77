//! C ABI for the bicavity simulator.
//!
//! All functions use opaque handles and status codes. Objects returned
//! through out-pointers are owned by the caller and must be released with
//! the matching `_free` function; strings returned as `char*` are released
//! with [`bc_string_free`]. On any non-`Ok` status, [`bc_last_error`]
//! returns a message describing the failure; the pointer stays valid until
//! the next call on the same thread.
//!
//! Safety contract, shared by every function here: pointer arguments must be
//! either null or valid for the access implied by their type, strings must
//! be NUL-terminated, and handles must not be used after their `_free` call.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use bicavity::measurement::{sweep_signal, SweepAxis, SweepMode};
use bicavity::{sequences, Bindings, MeasurementRecord, PulseProgram, QuantumState, SystemConfig};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl std::fmt::Display) {
    let text = CString::new(message.to_string().replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The program text failed to parse or validate.
    ParseError = 3,
    /// An argument was out of range or malformed.
    InvalidArgument = 4,
    /// The simulation itself failed.
    RuntimeError = 5,
}

/// Canned protocol selector for [`bc_program_builtin`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcProtocol {
    Ghz = 0,
    W = 1,
    DetectGhz = 2,
    DetectW = 3,
    BellPair = 4,
    BellPairProbe = 5,
}

/// Opaque simulation constants (coupling, splitting, truncation, seed).
pub struct BcConfig(SystemConfig);

/// Opaque validated pulse program.
pub struct BcProgram(PulseProgram);

/// Opaque result of one sampled run: final state plus measurement record.
pub struct BcRun {
    state: QuantumState,
    record: MeasurementRecord,
    atom_names: Vec<CString>,
}

fn status_of(err: &bicavity::SimError) -> BcStatus {
    use bicavity::SimError::*;
    match err {
        Parse(_) => BcStatus::ParseError,
        InvalidConfig(_) | InvalidArgument(_) | UnknownParameter(_) | UnboundParameter(_)
        | InvalidProgram(_) => BcStatus::InvalidArgument,
        _ => BcStatus::RuntimeError,
    }
}

fn fail(err: bicavity::SimError) -> BcStatus {
    let status = status_of(&err);
    set_error(err);
    status
}

fn null_arg(what: &str) -> BcStatus {
    set_error(format!("null argument: {what}"));
    BcStatus::NullArgument
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, BcStatus> {
    if ptr.is_null() {
        return Err(null_arg(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        BcStatus::InvalidUtf8
    })
}

unsafe fn read_bindings(
    names: *const *const c_char,
    values: *const f64,
    count: usize,
) -> Result<Bindings, BcStatus> {
    let mut bindings = Bindings::new();
    if count == 0 {
        return Ok(bindings);
    }
    if names.is_null() || values.is_null() {
        return Err(null_arg("binding arrays"));
    }
    for k in 0..count {
        let name = read_str(*names.add(k), "binding name")?;
        bindings.insert(name.to_string(), *values.add(k));
    }
    Ok(bindings)
}

/// Version string of the underlying simulator crate.
#[no_mangle]
pub extern "C" fn bc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn bc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn bc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Default constants: coupling 2 pi x 47 kHz, splitting 2 pi x 128.3 kHz,
/// one photon per mode, seed 0.
#[no_mangle]
pub extern "C" fn bc_config_default() -> *mut BcConfig {
    Box::into_raw(Box::new(BcConfig(SystemConfig::default())))
}

/// Build a config from explicit constants (angular frequencies in rad/s).
#[no_mangle]
pub unsafe extern "C" fn bc_config_new(
    omega_rabi: f64,
    delta: f64,
    n_max: u32,
    rng_seed: u64,
    out: *mut *mut BcConfig,
) -> BcStatus {
    if out.is_null() {
        return null_arg("out");
    }
    match SystemConfig::new(omega_rabi, delta, n_max, rng_seed) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(BcConfig(config)));
            BcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn bc_config_free(config: *mut BcConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Parse program text. On success `*out` owns the program.
#[no_mangle]
pub unsafe extern "C" fn bc_program_parse(
    source: *const c_char,
    out: *mut *mut BcProgram,
) -> BcStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let source = match read_str(source, "source") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match PulseProgram::parse(source) {
        Ok(program) => {
            *out = Box::into_raw(Box::new(BcProgram(program)));
            BcStatus::Ok
        }
        Err(e) => {
            set_error(e);
            BcStatus::ParseError
        }
    }
}

/// Build one of the canned protocols; `n` is the chain length for `Ghz` and
/// `W` and is ignored by the fixed detection protocols.
#[no_mangle]
pub unsafe extern "C" fn bc_program_builtin(
    protocol: BcProtocol,
    n: u32,
    out: *mut *mut BcProgram,
) -> BcStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let built = match protocol {
        BcProtocol::Ghz => sequences::ghz_program(n as usize),
        BcProtocol::W => sequences::w_program(n as usize),
        BcProtocol::DetectGhz => Ok(sequences::ghz_detection_program()),
        BcProtocol::DetectW => Ok(sequences::w_detection_program()),
        BcProtocol::BellPair => Ok(sequences::bell_pair_map_program()),
        BcProtocol::BellPairProbe => Ok(sequences::bell_pair_probe_program()),
    };
    match built {
        Ok(program) => {
            *out = Box::into_raw(Box::new(BcProgram(program)));
            BcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Serialize a program back to its text form. Free with [`bc_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bc_program_serialize(program: *const BcProgram) -> *mut c_char {
    if program.is_null() {
        null_arg("program");
        return ptr::null_mut();
    }
    let text = (*program).0.serialize();
    CString::new(text)
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

#[no_mangle]
pub unsafe extern "C" fn bc_program_free(program: *mut BcProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Run a program with sampled measurement outcomes. Bindings are parallel
/// arrays of `count` parameter names and values.
#[no_mangle]
pub unsafe extern "C" fn bc_program_run(
    program: *const BcProgram,
    config: *const BcConfig,
    binding_names: *const *const c_char,
    binding_values: *const f64,
    binding_count: usize,
    seed: u64,
    out: *mut *mut BcRun,
) -> BcStatus {
    if program.is_null() || config.is_null() {
        return null_arg("program/config");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let bindings = match read_bindings(binding_names, binding_values, binding_count) {
        Ok(b) => b,
        Err(status) => return status,
    };
    match (*program).0.run(&bindings, &(*config).0, seed) {
        Ok((state, record)) => {
            let atom_names = record
                .outcomes
                .iter()
                .map(|o| CString::new(o.atom.clone()).unwrap_or_default())
                .collect();
            *out = Box::into_raw(Box::new(BcRun {
                state,
                record,
                atom_names,
            }));
            BcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// 1 when every post-selection filter passed, 0 when the run was rejected,
/// -1 on a null handle.
#[no_mangle]
pub unsafe extern "C" fn bc_run_postselect_pass(run: *const BcRun) -> i32 {
    if run.is_null() {
        return -1;
    }
    (*run).record.postselect_pass as i32
}

#[no_mangle]
pub unsafe extern "C" fn bc_run_outcome_count(run: *const BcRun) -> usize {
    if run.is_null() {
        return 0;
    }
    (*run).record.outcomes.len()
}

/// Name of the atom measured at `index`; borrowed from the run handle.
#[no_mangle]
pub unsafe extern "C" fn bc_run_outcome_atom(run: *const BcRun, index: usize) -> *const c_char {
    if run.is_null() {
        return ptr::null();
    }
    let run = &*run;
    match run.atom_names.get(index) {
        Some(name) => name.as_ptr(),
        None => ptr::null(),
    }
}

/// Detected level at `index` as the character `e`, `g`, or `i` (0 on error).
#[no_mangle]
pub unsafe extern "C" fn bc_run_outcome_level(run: *const BcRun, index: usize) -> c_char {
    if run.is_null() {
        return 0;
    }
    let run = &*run;
    match run.record.outcomes.get(index) {
        Some(outcome) => outcome.level.symbol() as c_char,
        None => 0,
    }
}

/// Probability the recorded outcome carried when it was drawn (NaN on error).
#[no_mangle]
pub unsafe extern "C" fn bc_run_outcome_probability(run: *const BcRun, index: usize) -> f64 {
    if run.is_null() {
        return f64::NAN;
    }
    let run = &*run;
    match run.record.outcomes.get(index) {
        Some(outcome) => outcome.probability,
        None => f64::NAN,
    }
}

/// Amplitude of a basis state of the final wave function. The label lists
/// one entry per subsystem, comma separated, e.g. `g,i,i,g,e,0,0`.
#[no_mangle]
pub unsafe extern "C" fn bc_run_state_amplitude(
    run: *const BcRun,
    label: *const c_char,
    re: *mut f64,
    im: *mut f64,
) -> BcStatus {
    if run.is_null() {
        return null_arg("run");
    }
    if re.is_null() || im.is_null() {
        return null_arg("re/im");
    }
    let label = match read_str(label, "label") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let state = &(*run).state;
    let parsed = match state.layout().parse_label(label) {
        Ok(l) => l,
        Err(e) => return fail(e),
    };
    match state.amplitude(&parsed) {
        Ok(amp) => {
            *re = amp.re;
            *im = amp.im;
            BcStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn bc_run_free(run: *mut BcRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Sweep the program's signal over one or two axes and return the CSV table
/// as a string (free with [`bc_string_free`]).
///
/// Axes are specs of the form `name=start:stop:steps`; `samples_per_point`
/// of 0 selects exact branch enumeration, anything larger runs that many
/// sampled trajectories per grid point seeded from the config.
#[no_mangle]
pub unsafe extern "C" fn bc_sweep_csv(
    program: *const BcProgram,
    config: *const BcConfig,
    axis_specs: *const *const c_char,
    axis_count: usize,
    binding_names: *const *const c_char,
    binding_values: *const f64,
    binding_count: usize,
    samples_per_point: u64,
    out_csv: *mut *mut c_char,
) -> BcStatus {
    if program.is_null() || config.is_null() {
        return null_arg("program/config");
    }
    if out_csv.is_null() {
        return null_arg("out_csv");
    }
    if axis_specs.is_null() || axis_count == 0 {
        return null_arg("axis_specs");
    }
    let mut axes = Vec::with_capacity(axis_count);
    for k in 0..axis_count {
        let spec = match read_str(*axis_specs.add(k), "axis spec") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match SweepAxis::parse(spec) {
            Ok(axis) => axes.push(axis),
            Err(e) => return fail(e),
        }
    }
    let fixed = match read_bindings(binding_names, binding_values, binding_count) {
        Ok(b) => b,
        Err(status) => return status,
    };
    let mode = if samples_per_point == 0 {
        SweepMode::Exact
    } else {
        SweepMode::Sampled(samples_per_point)
    };
    match sweep_signal(&(*program).0, &axes, &fixed, &(*config).0, mode) {
        Ok(sweep) => match CString::new(sweep.to_csv_string()) {
            Ok(csv) => {
                *out_csv = csv.into_raw();
                BcStatus::Ok
            }
            Err(_) => {
                set_error("CSV contained an interior NUL");
                BcStatus::RuntimeError
            }
        },
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn last_error_text() -> String {
        CStr::from_ptr(bc_last_error()).to_string_lossy().into_owned()
    }

    #[test]
    fn builtin_program_round_trips_through_the_abi() {
        unsafe {
            let mut program: *mut BcProgram = ptr::null_mut();
            assert_eq!(
                bc_program_builtin(BcProtocol::Ghz, 4, &mut program),
                BcStatus::Ok
            );
            let serialized = bc_program_serialize(program);
            let text = CStr::from_ptr(serialized).to_str().unwrap().to_string();
            assert_eq!(text, sequences::ghz_program(4).unwrap().serialize());

            let mut reparsed: *mut BcProgram = ptr::null_mut();
            let source = cstr(&text);
            assert_eq!(bc_program_parse(source.as_ptr(), &mut reparsed), BcStatus::Ok);

            bc_string_free(serialized);
            bc_program_free(program);
            bc_program_free(reparsed);
        }
    }

    #[test]
    fn parse_errors_set_the_thread_message() {
        unsafe {
            let mut program: *mut BcProgram = ptr::null_mut();
            let source = cstr("atom A1 init=g\nrabi A1 C7 angle=pi\n");
            assert_eq!(
                bc_program_parse(source.as_ptr(), &mut program),
                BcStatus::ParseError
            );
            let message = last_error_text();
            assert!(message.contains("line 2"), "message: {message}");
        }
    }

    #[test]
    fn null_arguments_are_reported() {
        unsafe {
            let mut program: *mut BcProgram = ptr::null_mut();
            assert_eq!(
                bc_program_parse(ptr::null(), &mut program),
                BcStatus::NullArgument
            );
            assert_eq!(bc_run_postselect_pass(ptr::null()), -1);
            assert!(bc_run_outcome_atom(ptr::null(), 0).is_null());
        }
    }

    #[test]
    fn invalid_config_is_rejected_with_a_message() {
        unsafe {
            let mut config: *mut BcConfig = ptr::null_mut();
            assert_eq!(
                bc_config_new(-1.0, 1.0, 1, 0, &mut config),
                BcStatus::InvalidArgument
            );
            assert!(last_error_text().contains("omega"));
        }
    }

    #[test]
    fn running_a_chain_yields_a_consistent_record_and_state() {
        unsafe {
            let config = bc_config_default();
            let mut program: *mut BcProgram = ptr::null_mut();
            assert_eq!(
                bc_program_builtin(BcProtocol::Ghz, 4, &mut program),
                BcStatus::Ok
            );
            let mut run: *mut BcRun = ptr::null_mut();
            assert_eq!(
                bc_program_run(program, config, ptr::null(), ptr::null(), 0, 11, &mut run),
                BcStatus::Ok
            );
            assert_eq!(bc_run_postselect_pass(run), 1);
            assert_eq!(bc_run_outcome_count(run), 4);
            let first = CStr::from_ptr(bc_run_outcome_atom(run, 0))
                .to_str()
                .unwrap();
            assert_eq!(first, "A1");
            let level = bc_run_outcome_level(run, 0) as u8 as char;
            assert!(level == 'g' || level == 'i');
            let p = bc_run_outcome_probability(run, 0);
            assert!((p - 0.5).abs() < 1e-12);

            // The collapsed chain sits in one of the two GHZ branches.
            let (mut re, mut im) = (0.0f64, 0.0f64);
            let branch = if level == 'i' { "g,i,i,g,e,0,0" } else { "g,g,g,e,g,0,0" };
            let label = cstr(branch);
            assert_eq!(
                bc_run_state_amplitude(run, label.as_ptr(), &mut re, &mut im),
                BcStatus::Ok
            );
            assert!(((re * re + im * im).sqrt() - 1.0).abs() < 1e-10);

            bc_run_free(run);
            bc_program_free(program);
            bc_config_free(config);
        }
    }

    #[test]
    fn missing_bindings_surface_as_invalid_arguments() {
        unsafe {
            let config = bc_config_default();
            let mut program: *mut BcProgram = ptr::null_mut();
            assert_eq!(
                bc_program_builtin(BcProtocol::DetectGhz, 0, &mut program),
                BcStatus::Ok
            );
            let mut run: *mut BcRun = ptr::null_mut();
            let status =
                bc_program_run(program, config, ptr::null(), ptr::null(), 0, 0, &mut run);
            assert_eq!(status, BcStatus::InvalidArgument);
            assert!(last_error_text().contains("unbound parameter"));
            bc_program_free(program);
            bc_config_free(config);
        }
    }

    #[test]
    fn sweep_returns_a_csv_table() {
        unsafe {
            let config = bc_config_default();
            let mut program: *mut BcProgram = ptr::null_mut();
            assert_eq!(
                bc_program_builtin(BcProtocol::DetectGhz, 0, &mut program),
                BcStatus::Ok
            );
            let axis = cstr("phi=0:6.2832:16");
            let axes = [axis.as_ptr()];
            let t_name = cstr("T");
            let names = [t_name.as_ptr()];
            let values = [0.0f64];
            let mut csv: *mut c_char = ptr::null_mut();
            assert_eq!(
                bc_sweep_csv(
                    program,
                    config,
                    axes.as_ptr(),
                    1,
                    names.as_ptr(),
                    values.as_ptr(),
                    1,
                    0,
                    &mut csv
                ),
                BcStatus::Ok
            );
            let text = CStr::from_ptr(csv).to_str().unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next().unwrap(), "phi,I[A1=g],I[A1=i]");
            assert_eq!(lines.count(), 16);
            bc_string_free(csv);
            bc_program_free(program);
            bc_config_free(config);
        }
    }
}
