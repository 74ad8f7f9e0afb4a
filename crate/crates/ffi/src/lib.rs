//! C ABI over the qforge engines.
//!
//! Objects are opaque handles created by `qf_*_new` (or `qf_circuit_run`)
//! and released with the matching `qf_*_free`. Every fallible call returns a
//! `QfStatus`; on failure `qf_last_error_message` holds a description for
//! the calling thread. Outputs are written only on success. Panics never
//! cross the boundary and are reported as `QF_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qforge::circuit::{CircuitError, GateInstruction, GateName, MeasureMode, StateVector};
use qforge::contraction::{capture_expectation_network, contract, find_path, PathOptions};
use qforge::hamiltonian::{parse_label, PauliSum};
use qforge::numerics::{RngStream, C64};
use qforge::stabilizer::{StabilizerError, StabilizerTableau};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A numerical contract failed, e.g. a zero-probability outcome.
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// A gate list on qubits.
pub struct QfCircuit(qforge::circuit::Circuit);

/// A dense state vector of qubits.
pub struct QfState(StateVector);

/// A stabilizer state with its own random stream for measurements.
pub struct QfTableau {
    tableau: StabilizerTableau,
    rng: RngStream,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(QfStatus, String);

impl From<CircuitError> for Failure {
    fn from(e: CircuitError) -> Self {
        let status = match e {
            CircuitError::ZeroProbability { .. } => QfStatus::Numerical,
            _ => QfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<StabilizerError> for Failure {
    fn from(e: StabilizerError) -> Self {
        let status = match e {
            StabilizerError::ZeroProbability { .. } => QfStatus::Numerical,
            _ => QfStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl std::fmt::Display) -> Failure {
    Failure(QfStatus::InvalidArgument, msg.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> QfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QfStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(QfStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Bytes needed (including the NUL) to hold the last error message.
#[no_mangle]
pub extern "C" fn qf_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len() + 1)
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qf_last_error_message(buf: *mut c_char, len: usize) -> QfStatus {
    if buf.is_null() {
        return QfStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if len < msg.len() + 1 {
            return QfStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, msg.len());
        buf.add(msg.len()).write(0);
        QfStatus::Ok
    })
}

/// Creates an empty circuit on `n` qubits.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_new(n: usize, out: *mut *mut QfCircuit) -> QfStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("circuit needs at least one qubit"));
        }
        let c = Box::into_raw(Box::new(QfCircuit(qforge::circuit::Circuit::new(n))));
        write(out, c, "out").inspect_err(|_| drop(Box::from_raw(c)))
    })
}

/// # Safety
/// `c` must come from `qf_circuit_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_free(c: *mut QfCircuit) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Appends a gate by name (`h`, `rx`, `cx`, `rzz`, `su4`, ...).
///
/// # Safety
/// `name` must be NUL-terminated; `wires` and `params` must hold the given counts.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_add_gate(
    c: *mut QfCircuit,
    name: *const c_char,
    wires: *const usize,
    n_wires: usize,
    params: *const f64,
    n_params: usize,
) -> QfStatus {
    guard(|| {
        let c = borrow_mut(c, "circuit")?;
        let name = text(name, "name")?;
        let gate =
            GateName::parse(name).ok_or_else(|| invalid(format!("unknown gate '{name}'")))?;
        let instr = GateInstruction::new(
            gate,
            slice(wires, n_wires, "wires")?.to_vec(),
            slice(params, n_params, "params")?.to_vec(),
        );
        c.0.push(instr)?;
        Ok(())
    })
}

/// Number of gates in the circuit.
///
/// # Safety
/// `c` must be a live circuit handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_len(c: *const QfCircuit, out: *mut usize) -> QfStatus {
    guard(|| write(out, borrow(c, "circuit")?.0.ops().len(), "out"))
}

/// Runs the circuit from |0…0⟩ into a new state handle.
///
/// # Safety
/// `c` must be a live circuit handle and `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_run(c: *const QfCircuit, out: *mut *mut QfState) -> QfStatus {
    guard(|| {
        let psi = borrow(c, "circuit")?.0.run()?;
        let s = Box::into_raw(Box::new(QfState(psi)));
        write(out, s, "out").inspect_err(|_| drop(Box::from_raw(s)))
    })
}

/// ⟨ψ|P|ψ⟩ for a Pauli label such as `"XZI"` by tensor-network contraction
/// with intermediates capped at `target_size` elements.
///
/// # Safety
/// `c` must be a live circuit handle, `label` NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qf_circuit_contract_expectation(
    c: *const QfCircuit,
    label: *const c_char,
    target_size: usize,
    workers: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QfStatus {
    guard(|| {
        let c = borrow(c, "circuit")?;
        let codes = parse_label(text(label, "label")?).map_err(invalid)?;
        let net = capture_expectation_network(&c.0, &codes).map_err(invalid)?;
        let opts = PathOptions {
            target_size,
            ..PathOptions::default()
        };
        let tree = find_path(&net, &opts).map_err(invalid)?;
        let v = contract(&net, &tree, workers.max(1))
            .map_err(|e| Failure(QfStatus::Numerical, e.to_string()))?
            .value()
            .ok_or_else(|| invalid("network has open legs"))?;
        write(out_re, v.re, "out_re")?;
        write(out_im, v.im, "out_im")
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qf_state_free(s: *mut QfState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qf_state_num_qubits(s: *const QfState, out: *mut usize) -> QfStatus {
    guard(|| write(out, borrow(s, "state")?.0.n(), "out"))
}

/// Copies the 2^n amplitudes (site 0 most significant) into `re` and `im`.
///
/// # Safety
/// `re` and `im` must each hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qf_state_amplitudes(
    s: *const QfState,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QfStatus {
    guard(|| {
        let amps = borrow(s, "state")?.0.amplitudes();
        if len < amps.len() {
            return Err(Failure(
                QfStatus::BufferTooSmall,
                format!("need {} amplitudes, got room for {len}", amps.len()),
            ));
        }
        if re.is_null() || im.is_null() {
            return Err(null("amplitude buffer"));
        }
        for (i, a) in amps.iter().enumerate() {
            re.add(i).write(a.re);
            im.add(i).write(a.im);
        }
        Ok(())
    })
}

/// Expectation of a Pauli label on the state.
///
/// # Safety
/// `s` must be a live state handle, `label` NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qf_state_expectation(
    s: *const QfState,
    label: *const c_char,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QfStatus {
    guard(|| {
        let s = borrow(s, "state")?;
        let codes = parse_label(text(label, "label")?).map_err(invalid)?;
        let mut obs = PauliSum::new(codes.len());
        obs.add_term(C64::new(1.0, 0.0), codes).map_err(invalid)?;
        let v = s.0.expectation_pauli(&obs)?;
        write(out_re, v.re, "out_re")?;
        write(out_im, v.im, "out_im")
    })
}

/// Von Neumann entropy in bits of the listed qubits.
///
/// # Safety
/// `keep` must hold `n_keep` indices and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_state_entropy(
    s: *const QfState,
    keep: *const usize,
    n_keep: usize,
    out: *mut f64,
) -> QfStatus {
    guard(|| {
        let s = borrow(s, "state")?;
        let v = s.0.subsystem_entropy(slice(keep, n_keep, "keep")?)?;
        write(out, v, "out")
    })
}

/// Measures one qubit in place. A negative `forced` draws the outcome from
/// a stream seeded with `seed`; 0 or 1 forces it.
///
/// # Safety
/// `s` must be a live state handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_state_measure(
    s: *mut QfState,
    qubit: usize,
    forced: i32,
    seed: u64,
    out_outcome: *mut u32,
    out_prob: *mut f64,
) -> QfStatus {
    guard(|| {
        let s = borrow_mut(s, "state")?;
        if out_outcome.is_null() || out_prob.is_null() {
            return Err(null("output"));
        }
        let mut rng = RngStream::new(seed);
        let mode = match forced {
            f if f < 0 => MeasureMode::Random(&mut rng),
            f => MeasureMode::Forced(f as usize),
        };
        let (k, p) = s.0.measure_in_place(qubit, mode)?;
        write(out_outcome, k as u32, "out_outcome")?;
        write(out_prob, p, "out_prob")
    })
}

/// Stabilizer state |0…0⟩ on `n` qubits; random outcomes draw from `seed`.
///
/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn qf_tableau_new(n: usize, seed: u64, out: *mut *mut QfTableau) -> QfStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("tableau needs at least one qubit"));
        }
        let t = Box::into_raw(Box::new(QfTableau {
            tableau: StabilizerTableau::new(n),
            rng: RngStream::new(seed),
        }));
        write(out, t, "out").inspect_err(|_| drop(Box::from_raw(t)))
    })
}

/// # Safety
/// `t` must come from `qf_tableau_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn qf_tableau_free(t: *mut QfTableau) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Applies a Clifford gate by name (`h`, `s`, `sdg`, `x`, `y`, `z`, `cx`, `cz`, `swap`).
///
/// # Safety
/// `name` must be NUL-terminated and `wires` hold `n_wires` indices.
#[no_mangle]
pub unsafe extern "C" fn qf_tableau_apply(
    t: *mut QfTableau,
    name: *const c_char,
    wires: *const usize,
    n_wires: usize,
) -> QfStatus {
    guard(|| {
        let t = borrow_mut(t, "tableau")?;
        t.tableau
            .apply_clifford(text(name, "name")?, slice(wires, n_wires, "wires")?)?;
        Ok(())
    })
}

/// Z measurement; `out_deterministic` is 1 when the outcome was fixed.
///
/// # Safety
/// `t` must be a live tableau handle and outputs writable.
#[no_mangle]
pub unsafe extern "C" fn qf_tableau_measure(
    t: *mut QfTableau,
    qubit: usize,
    out_outcome: *mut u32,
    out_deterministic: *mut u8,
) -> QfStatus {
    guard(|| {
        let t = borrow_mut(t, "tableau")?;
        if out_outcome.is_null() || out_deterministic.is_null() {
            return Err(null("output"));
        }
        let m = t
            .tableau
            .measure_with(qubit, MeasureMode::Random(&mut t.rng))?;
        write(out_outcome, m.outcome as u32, "out_outcome")?;
        write(
            out_deterministic,
            u8::from(m.deterministic),
            "out_deterministic",
        )
    })
}

/// Entanglement entropy in bits of the listed qubits.
///
/// # Safety
/// `keep` must hold `n_keep` indices and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qf_tableau_entropy(
    t: *const QfTableau,
    keep: *const usize,
    n_keep: usize,
    out: *mut f64,
) -> QfStatus {
    guard(|| {
        let t = borrow(t, "tableau")?;
        let v = t
            .tableau
            .entanglement_entropy(slice(keep, n_keep, "keep")?)?;
        write(out, v, "out")
    })
}
