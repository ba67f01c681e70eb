#ifndef G2MIN_H
#define G2MIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum G2Status {
  G2_STATUS_OK = 0,
  // A precondition failed, e.g. the model is invalid or `p` is not prime.
  G2_STATUS_INVALID_ARGUMENT = 1,
  // A string could not be parsed.
  G2_STATUS_PARSE_ERROR = 2,
  // A required pointer was null.
  G2_STATUS_NULL_POINTER = 3,
  // Internal failure; the library state is unaffected.
  G2_STATUS_PANIC = 4,
} G2Status;

// A model `(λ, H)` together with its sextic.
typedef struct G2Model G2Model;

// A pair `(c, P)` acting on models.
typedef struct G2Transform G2Transform;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread; empty after a success. The
// pointer stays valid until the next call into this library on the thread.
const char *g2_last_error_message(void);

const char *g2_version(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void g2_string_free(char *s);

// Builds a model from `curve[0..7]` (`f0` first), `lambda` and `h[0..21]`
// (upper-triangular order over `z12, z13, z23, z14, z24, z34`), checking the
// determinant identity.
//
// # Safety
// `curve` must point to 7 strings, `h` to 21, all NUL-terminated; `out` must be writable.
enum G2Status g2_model_new(const char *const *curve,
                           const char *lambda,
                           const char *const *h,
                           struct G2Model **out);

// Parses a model file line (the CLI format) and checks it.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum G2Status g2_model_from_json(const char *json, struct G2Model **out);

// # Safety
// `m` must be a live model handle; `out` must be writable.
enum G2Status g2_model_to_json(const struct G2Model *m, char **out);

// `λ` as a string.
//
// # Safety
// `m` must be a live model handle; `out` must be writable.
enum G2Status g2_model_lambda(const struct G2Model *m, char **out);

// Coefficient `index` (0 to 20) of `H` as a string.
//
// # Safety
// `m` must be a live model handle; `out` must be writable.
enum G2Status g2_model_coefficient(const struct G2Model *m, size_t index, char **out);

// # Safety
// `m` must be a live model handle; `out` must be writable.
enum G2Status g2_model_is_valid(const struct G2Model *m, bool *out);

// # Safety
// `m` must be null or a live model handle; it is invalid afterwards.
void g2_model_free(struct G2Model *m);

// `(c, P)` from a scalar and 16 matrix entries in row-major order.
//
// # Safety
// `c` must be a NUL-terminated string, `p` must point to 16; `out` must be writable.
enum G2Status g2_transform_new(const char *c, const char *const *p, struct G2Transform **out);

// `c` followed by the 16 entries of `P`, as a JSON array of strings.
//
// # Safety
// `t` must be a live transform handle; `out` must be writable.
enum G2Status g2_transform_to_json(const struct G2Transform *t, char **out);

// # Safety
// `t` must be null or a live transform handle; it is invalid afterwards.
void g2_transform_free(struct G2Transform *t);

// The model `(cλ, (c/det P) H ∘ ∧²P)`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum G2Status g2_model_act(const struct G2Model *m,
                           const struct G2Transform *t,
                           struct G2Model **out);

// Minimises at `p`, returning the new model and the transform producing it.
//
// # Safety
// `m` must be live; outputs must be writable.
enum G2Status g2_minimise_local(const struct G2Model *m,
                                uint64_t p,
                                struct G2Model **out_model,
                                struct G2Transform **out_transform);

// Minimises at the given primes, or at the primes found by trial division
// when `nprimes` is 0.
//
// # Safety
// `primes` must point to `nprimes` values (or be null when 0); outputs must be writable.
enum G2Status g2_minimise_global(const struct G2Model *m,
                                 const uint64_t *primes,
                                 size_t nprimes,
                                 struct G2Model **out_model,
                                 struct G2Transform **out_transform);

// Whether one run of the algorithm finds `P` with `v((1/det P) H ∘ ∧²P) > 0`.
//
// # Safety
// `m` must be live; `out` must be writable.
enum G2Status g2_is_reducible(const struct G2Model *m, uint64_t p, bool *out);

// Exhaustive answer to the same question, for `p` = 2 or 3.
//
// # Safety
// `m` must be live; `out` must be writable.
enum G2Status g2_oracle_reducible(const struct G2Model *m, uint64_t p, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* G2MIN_H */
