#ifndef FAULTMEM_H
#define FAULTMEM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FmFormula {
  // Uses `m`.
  FM_FORMULA_PROP21 = 0,
  FM_FORMULA_COR23_ODD = 1,
  FM_FORMULA_COR23_EVEN = 2,
  FM_FORMULA_COR24_ODD = 3,
  FM_FORMULA_COR24_EVEN = 4,
  FM_FORMULA_THM42_LOWER = 5,
} FmFormula;

typedef enum FmModel {
  FM_MODEL_ADVERSARIAL = 0,
  FM_MODEL_PURE_PROBABILISTIC = 1,
} FmModel;

typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_ARGUMENT = 2,
  FM_STATUS_LATTICE = 3,
  FM_STATUS_TREEIFY = 4,
  FM_STATUS_TRANSITION = 5,
  FM_STATUS_FAULTS = 6,
  FM_STATUS_ENGINE = 7,
  FM_STATUS_ANALYSIS = 8,
  FM_STATUS_INFO_BOUND = 9,
  FM_STATUS_CONFIG = 10,
  FM_STATUS_BUFFER_TOO_SMALL = 11,
  FM_STATUS_PANIC = 12,
} FmStatus;

// Opaque lattice handle.
typedef struct FmLattice FmLattice;

// Opaque tree reduction handle.
typedef struct FmTreeRules FmTreeRules;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to fit) and returns the full message length.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t fm_last_error(char *buf, size_t cap);

// `q`-regular tree to the given depth.
//
// # Safety
// `out` must be a valid pointer.
enum FmStatus fm_lattice_tree(uint32_t q, uint32_t depth, struct FmLattice **out);

// Ball of `shells` shells in the hyperbolic `{p,q}` tessellation.
//
// # Safety
// `out` must be a valid pointer.
enum FmStatus fm_lattice_hyperbolic(uint32_t p,
                                    uint32_t q,
                                    uint32_t shells,
                                    struct FmLattice **out);

// Periodic `{p,q}` Euclidean tiling: `{4,4}`, `{3,6}` or `{6,3}`.
//
// # Safety
// `out` must be a valid pointer.
enum FmStatus fm_lattice_euclidean(uint32_t p,
                                   uint32_t q,
                                   uint32_t width,
                                   uint32_t height,
                                   struct FmLattice **out);

// Toom's north-east-center torus.
//
// # Safety
// `out` must be a valid pointer.
enum FmStatus fm_lattice_toom(uint32_t width, uint32_t height, struct FmLattice **out);

// Parses the text lattice format.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum FmStatus fm_lattice_from_text(const char *text, struct FmLattice **out);

// # Safety
// `lattice` must be null or a live handle.
size_t fm_lattice_vertex_count(const struct FmLattice *lattice);

// Writes the text form into `buf` (NUL terminated). `needed` receives the
// size including the terminator; `FM_STATUS_BUFFER_TOO_SMALL` if it does
// not fit.
//
// # Safety
// `lattice` must be a live handle, `buf` null or `cap` writable bytes,
// `needed` null or valid.
enum FmStatus fm_lattice_to_text(const struct FmLattice *lattice,
                                 char *buf,
                                 size_t cap,
                                 size_t *needed);

// # Safety
// `lattice` must be null or a handle not yet freed.
void fm_lattice_free(struct FmLattice *lattice);

// Tree reduction rooted at `root`.
//
// # Safety
// `lattice` must be a live handle and `out` a valid pointer.
enum FmStatus fm_treeify(const struct FmLattice *lattice, size_t root, struct FmTreeRules **out);

// Largest per-vertex deletion count over interior vertices, and whether
// the retained edges form a tree.
//
// # Safety
// `rules` must be a live handle; outputs must be valid pointers.
enum FmStatus fm_tree_rules_summary(const struct FmTreeRules *rules,
                                    uint32_t *max_deletions,
                                    bool *is_tree);

// Retained out-degree and threshold of vertex `v`.
//
// # Safety
// `rules` must be a live handle; outputs must be valid pointers.
enum FmStatus fm_tree_rules_vertex(const struct FmTreeRules *rules,
                                   size_t v,
                                   uint32_t *out_degree,
                                   uint32_t *threshold,
                                   uint32_t *deletions);

// # Safety
// `rules` must be null or a handle not yet freed.
void fm_tree_rules_free(struct FmTreeRules *rules);

// Least degree required by `formula` at margin `xi` (`m` for `Prop21`).
//
// # Safety
// `out` must be a valid pointer.
enum FmStatus fm_bound(enum FmFormula formula, double xi, uint32_t m, uint64_t *out);

// Exact per-cell error probabilities `P_0..P_{len-1}` on a tree with `d`
// children per cell and threshold `h`, transient faults at rate `alpha`.
//
// # Safety
// `out` must point to `len` writable doubles.
enum FmStatus fm_exact_tree_marginal(uint32_t d,
                                     uint32_t h,
                                     double alpha,
                                     enum FmModel fault_model,
                                     double *out,
                                     size_t len);

// Information bound for fan-in `d` over horizon `t`. `excluded_at`
// receives the horizon from which remembering with error `delta` is
// impossible, or 0 if it is never excluded.
//
// # Safety
// Outputs must be valid pointers.
enum FmStatus fm_info_bound(uint32_t d,
                            double xi,
                            double delta,
                            uint32_t t,
                            double *es_bound,
                            double *fano_floor,
                            uint32_t *excluded_at);

// Monte Carlo error frequency of the root at times `0..len`, remembering 0
// with boundary cells held at 1. With `use_tree` the lattice is first
// reduced to a tree rooted at vertex 0.
//
// # Safety
// `lattice` must be a live handle and `out` point to `len` writable doubles.
enum FmStatus fm_estimate_root_error(const struct FmLattice *lattice,
                                     bool use_tree,
                                     double alpha,
                                     double beta,
                                     enum FmModel fault_model,
                                     uint64_t replicates,
                                     uint64_t seed,
                                     double *out,
                                     size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAULTMEM_H */
