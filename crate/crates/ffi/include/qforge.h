#ifndef QFORGE_H
#define QFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QfStatus {
  QF_STATUS_OK = 0,
  QF_STATUS_NULL_POINTER = 1,
  QF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A numerical contract failed, e.g. a zero-probability outcome.
   */
  QF_STATUS_NUMERICAL = 3,
  QF_STATUS_BUFFER_TOO_SMALL = 4,
  QF_STATUS_PANIC = 5,
} QfStatus;

/**
 * A gate list on qubits.
 */
typedef struct QfCircuit QfCircuit;

/**
 * A dense state vector of qubits.
 */
typedef struct QfState QfState;

/**
 * A stabilizer state with its own random stream for measurements.
 */
typedef struct QfTableau QfTableau;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qf_version(void);

/**
 * Bytes needed (including the NUL) to hold the last error message.
 */
size_t qf_last_error_length(void);

/**
 * Copies the last error message of this thread into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum QfStatus qf_last_error_message(char *buf, size_t len);

/**
 * Creates an empty circuit on `n` qubits.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum QfStatus qf_circuit_new(size_t n, struct QfCircuit **out);

/**
 * # Safety
 * `c` must come from `qf_circuit_new` and not be used afterwards. Null is ignored.
 */
void qf_circuit_free(struct QfCircuit *c);

/**
 * Appends a gate by name (`h`, `rx`, `cx`, `rzz`, `su4`, ...).
 *
 * # Safety
 * `name` must be NUL-terminated; `wires` and `params` must hold the given counts.
 */
enum QfStatus qf_circuit_add_gate(struct QfCircuit *c,
                                  const char *name,
                                  const size_t *wires,
                                  size_t n_wires,
                                  const double *params,
                                  size_t n_params);

/**
 * Number of gates in the circuit.
 *
 * # Safety
 * `c` must be a live circuit handle and `out` writable.
 */
enum QfStatus qf_circuit_len(const struct QfCircuit *c, size_t *out);

/**
 * Runs the circuit from |0…0⟩ into a new state handle.
 *
 * # Safety
 * `c` must be a live circuit handle and `out` a valid handle slot.
 */
enum QfStatus qf_circuit_run(const struct QfCircuit *c, struct QfState **out);

/**
 * ⟨ψ|P|ψ⟩ for a Pauli label such as `"XZI"` by tensor-network contraction
 * with intermediates capped at `target_size` elements.
 *
 * # Safety
 * `c` must be a live circuit handle, `label` NUL-terminated, outputs writable.
 */
enum QfStatus qf_circuit_contract_expectation(const struct QfCircuit *c,
                                              const char *label,
                                              size_t target_size,
                                              size_t workers,
                                              double *out_re,
                                              double *out_im);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is ignored.
 */
void qf_state_free(struct QfState *s);

/**
 * # Safety
 * `s` must be a live state handle and `out` writable.
 */
enum QfStatus qf_state_num_qubits(const struct QfState *s, size_t *out);

/**
 * Copies the 2^n amplitudes (site 0 most significant) into `re` and `im`.
 *
 * # Safety
 * `re` and `im` must each hold `len` writable doubles.
 */
enum QfStatus qf_state_amplitudes(const struct QfState *s, double *re, double *im, size_t len);

/**
 * Expectation of a Pauli label on the state.
 *
 * # Safety
 * `s` must be a live state handle, `label` NUL-terminated, outputs writable.
 */
enum QfStatus qf_state_expectation(const struct QfState *s,
                                   const char *label,
                                   double *out_re,
                                   double *out_im);

/**
 * Von Neumann entropy in bits of the listed qubits.
 *
 * # Safety
 * `keep` must hold `n_keep` indices and `out` be writable.
 */
enum QfStatus qf_state_entropy(const struct QfState *s,
                               const size_t *keep,
                               size_t n_keep,
                               double *out);

/**
 * Measures one qubit in place. A negative `forced` draws the outcome from
 * a stream seeded with `seed`; 0 or 1 forces it.
 *
 * # Safety
 * `s` must be a live state handle; outputs must be writable.
 */
enum QfStatus qf_state_measure(struct QfState *s,
                               size_t qubit,
                               int32_t forced,
                               uint64_t seed,
                               uint32_t *out_outcome,
                               double *out_prob);

/**
 * Stabilizer state |0…0⟩ on `n` qubits; random outcomes draw from `seed`.
 *
 * # Safety
 * `out` must be a valid handle slot.
 */
enum QfStatus qf_tableau_new(size_t n, uint64_t seed, struct QfTableau **out);

/**
 * # Safety
 * `t` must come from `qf_tableau_new` and not be used afterwards. Null is ignored.
 */
void qf_tableau_free(struct QfTableau *t);

/**
 * Applies a Clifford gate by name (`h`, `s`, `sdg`, `x`, `y`, `z`, `cx`, `cz`, `swap`).
 *
 * # Safety
 * `name` must be NUL-terminated and `wires` hold `n_wires` indices.
 */
enum QfStatus qf_tableau_apply(struct QfTableau *t,
                               const char *name,
                               const size_t *wires,
                               size_t n_wires);

/**
 * Z measurement; `out_deterministic` is 1 when the outcome was fixed.
 *
 * # Safety
 * `t` must be a live tableau handle and outputs writable.
 */
enum QfStatus qf_tableau_measure(struct QfTableau *t,
                                 size_t qubit,
                                 uint32_t *out_outcome,
                                 uint8_t *out_deterministic);

/**
 * Entanglement entropy in bits of the listed qubits.
 *
 * # Safety
 * `keep` must hold `n_keep` indices and `out` be writable.
 */
enum QfStatus qf_tableau_entropy(const struct QfTableau *t,
                                 const size_t *keep,
                                 size_t n_keep,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFORGE_H */
