#ifndef DOLFREE_H
#define DOLFREE_H

/* Generated from the dolfree-ffi Rust sources; edit those instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum DolfreeStatus {
  DOLFREE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DOLFREE_STATUS_NULL_POINTER = -1,
  /**
   * Arguments were structurally valid but rejected (bad shape, bad range).
   */
  DOLFREE_STATUS_INVALID_ARGUMENT = -2,
  /**
   * A numerical routine failed or flagged its result as unreliable.
   */
  DOLFREE_STATUS_NUMERICAL = -3,
  /**
   * The operating system refused a file operation.
   */
  DOLFREE_STATUS_IO = -4,
  /**
   * A string argument was not valid UTF-8.
   */
  DOLFREE_STATUS_UTF8 = -5,
} DolfreeStatus;

/**
 * Gossip graph shape for [`dolfree_mixing_build`].
 */
typedef enum DolfreeTopology {
  DOLFREE_TOPOLOGY_COMPLETE = 0,
  DOLFREE_TOPOLOGY_CYCLE = 1,
  DOLFREE_TOPOLOGY_GRID = 2,
} DolfreeTopology;

/**
 * Parameter preset, or `None` for learners tuned by hand (D-OCG).
 */
typedef enum DolfreePresetChoice {
  DOLFREE_PRESET_CHOICE_CONVEX_FULL = 0,
  DOLFREE_PRESET_CHOICE_STRONGLY_CONVEX_FULL = 1,
  DOLFREE_PRESET_CHOICE_CONVEX_BANDIT = 2,
  DOLFREE_PRESET_CHOICE_STRONGLY_CONVEX_BANDIT = 3,
  DOLFREE_PRESET_CHOICE_HIGH_PROB_BANDIT = 4,
  DOLFREE_PRESET_CHOICE_NONE = 5,
} DolfreePresetChoice;

/**
 * Synthetic loss stream family.
 */
typedef enum DolfreeStream {
  DOLFREE_STREAM_CONVEX = 0,
  DOLFREE_STREAM_STRONGLY_CONVEX = 1,
} DolfreeStream;

/**
 * Learner driven by [`dolfree_run_synthetic_csv`].
 */
typedef enum DolfreeLearner {
  /**
   * Block learner with exact gradients.
   */
  DOLFREE_LEARNER_D_BOCG = 0,
  /**
   * Block learner with one-point bandit estimates.
   */
  DOLFREE_LEARNER_D_BBCG = 1,
  /**
   * Per-round baseline that gossips every step.
   */
  DOLFREE_LEARNER_D_OCG = 2,
} DolfreeLearner;

/**
 * Opaque gossip-matrix handle.
 */
typedef struct DolfreeMixing DolfreeMixing;

/**
 * Opaque feasible-set handle.
 */
typedef struct DolfreeSet DolfreeSet;

/**
 * Problem constants consumed by [`dolfree_preset_fill`].
 */
typedef struct DolfreePresetInputs {
  uint64_t horizon;
  uint64_t nodes;
  uint64_t dim;
  /**
   * Second-largest singular value of the gossip matrix.
   */
  double sigma2;
  double lipschitz;
  double value_bound;
  double circumradius;
  double inradius;
  /**
   * Strong convexity modulus; zero for merely convex losses.
   */
  double alpha;
  /**
   * Failure probability budget for the high-probability preset.
   */
  double gamma;
  /**
   * Multiplier on the regularization weight.
   */
  double c_tune;
  /**
   * Multiplier on the exploration radius.
   */
  double delta_c;
} DolfreePresetInputs;

/**
 * Block-learner parameters produced by [`dolfree_preset_fill`].
 */
typedef struct DolfreeBlockParams {
  /**
   * Rounds per block.
   */
  uint64_t k_block;
  /**
   * Inner solver iterations per block.
   */
  uint64_t l_iters;
  /**
   * Regularization weight.
   */
  double h;
  /**
   * Strong convexity modulus baked into the surrogate.
   */
  double alpha;
} DolfreeBlockParams;

/**
 * Everything needed to reproduce one synthetic run.
 */
typedef struct DolfreeRunConfig {
  enum DolfreeStream stream;
  enum DolfreeTopology topology;
  enum DolfreeLearner learner;
  /**
   * Must be a bandit preset for `DBBCG`, a full-information preset for
   * `DBOCG`, and `None` for `DOCG`.
   */
  enum DolfreePresetChoice preset;
  uint64_t nodes;
  uint64_t horizon;
  uint64_t dim;
  uint64_t seed;
  double c_tune;
  double delta_c;
  double gamma;
  /**
   * Gradient scale of the synthetic losses.
   */
  double g;
  /**
   * Strong convexity modulus of the strongly convex stream.
   */
  double alpha;
} DolfreeRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library as a static NUL-terminated string.
 */
const char *dolfree_version(void);

/**
 * Message describing this thread's most recent failure, or null if every
 * call so far succeeded. The pointer stays valid until the next failing
 * call on the same thread.
 */
const char *dolfree_last_error_message(void);

/**
 * Create an origin-centered box with the given half-width per coordinate.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DolfreeStatus dolfree_set_hypercube(double halfwidth, uint64_t dim, struct DolfreeSet **out);

/**
 * Create an L1 ball of radius `tau`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DolfreeStatus dolfree_set_l1_ball(double tau, uint64_t dim, struct DolfreeSet **out);

/**
 * Create a Euclidean ball of the given radius.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DolfreeStatus dolfree_set_euclidean_ball(double radius, uint64_t dim, struct DolfreeSet **out);

/**
 * Create a trace-norm ball over row-major `rows x cols` matrices.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DolfreeStatus dolfree_set_trace_norm_ball(double tau,
                                               uint64_t rows,
                                               uint64_t cols,
                                               struct DolfreeSet **out);

/**
 * Ambient dimension of the set, or 0 when the handle is null.
 *
 * # Safety
 * `set` must be null or a live handle from one of the constructors.
 */
uint64_t dolfree_set_dim(const struct DolfreeSet *set);

/**
 * Radius of the largest origin-centered Euclidean ball inside the set, or
 * NaN when the handle is null.
 *
 * # Safety
 * `set` must be null or a live handle from one of the constructors.
 */
double dolfree_set_inradius(const struct DolfreeSet *set);

/**
 * Smallest R such that every member has Euclidean norm at most R, or NaN
 * when the handle is null.
 *
 * # Safety
 * `set` must be null or a live handle from one of the constructors.
 */
double dolfree_set_circumradius(const struct DolfreeSet *set);

/**
 * Write the set member minimizing the inner product with `direction` into
 * `out`. `len` must equal the set's dimension; `out` receives `len` values.
 *
 * # Safety
 * `direction` and `out` must point to `len` readable (respectively
 * writable) doubles, and `set` must be a live handle.
 */
enum DolfreeStatus dolfree_set_lmo(const struct DolfreeSet *set,
                                   const double *direction,
                                   uint64_t len,
                                   double *out);

/**
 * Set `*inside` to 1 when `x` belongs to the set within the relative
 * tolerance `tol`, else 0.
 *
 * # Safety
 * `x` must point to `len` readable doubles, `inside` must be writable, and
 * `set` must be a live handle.
 */
enum DolfreeStatus dolfree_set_contains(const struct DolfreeSet *set,
                                        const double *x,
                                        uint64_t len,
                                        double tol,
                                        int *inside);

/**
 * Destroy a set handle. Null is a no-op.
 *
 * # Safety
 * `set` must be null or a live handle, and must not be used afterwards.
 */
void dolfree_set_free(struct DolfreeSet *set);

/**
 * Build the symmetric doubly stochastic gossip matrix for a topology.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum DolfreeStatus dolfree_mixing_build(enum DolfreeTopology topology,
                                        uint64_t nodes,
                                        struct DolfreeMixing **out);

/**
 * Number of nodes, or 0 when the handle is null.
 *
 * # Safety
 * `mixing` must be null or a live handle from [`dolfree_mixing_build`].
 */
uint64_t dolfree_mixing_nodes(const struct DolfreeMixing *mixing);

/**
 * Second-largest singular value, or NaN when the handle is null.
 *
 * # Safety
 * `mixing` must be null or a live handle from [`dolfree_mixing_build`].
 */
double dolfree_mixing_sigma2(const struct DolfreeMixing *mixing);

/**
 * 1 when the lazy `(P + I) / 2` correction was applied, 0 when it was not,
 * -1 when the handle is null.
 *
 * # Safety
 * `mixing` must be null or a live handle from [`dolfree_mixing_build`].
 */
int dolfree_mixing_lazy_applied(const struct DolfreeMixing *mixing);

/**
 * Entry (i, j) of the gossip matrix, or NaN when the handle is null or the
 * indices are out of range.
 *
 * # Safety
 * `mixing` must be null or a live handle from [`dolfree_mixing_build`].
 */
double dolfree_mixing_weight(const struct DolfreeMixing *mixing, uint64_t i, uint64_t j);

/**
 * Destroy a mixing handle. Null is a no-op.
 *
 * # Safety
 * `mixing` must be null or a live handle, and must not be used afterwards.
 */
void dolfree_mixing_free(struct DolfreeMixing *mixing);

/**
 * Derive block parameters (and, for bandit presets, the exploration radius
 * written to `out_delta`; full-information presets write 0).
 *
 * # Safety
 * `inputs`, `out_params`, and `out_delta` must be valid for one read or
 * write of their respective types.
 */
enum DolfreeStatus dolfree_preset_fill(enum DolfreePresetChoice preset,
                                       const struct DolfreePresetInputs *inputs,
                                       struct DolfreeBlockParams *out_params,
                                       double *out_delta);

/**
 * Run one synthetic simulation and write its per-round trace CSV (the same
 * format the `dolfree` CLI emits) to `out_path`. Identical configs produce
 * byte-identical files.
 *
 * # Safety
 * `config` must be valid for one read and `out_path` must be a
 * NUL-terminated string.
 */
enum DolfreeStatus dolfree_run_synthetic_csv(const struct DolfreeRunConfig *config,
                                             const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOLFREE_H */
