#ifndef FRACLAP_H
#define FRACLAP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FlBoundary {
  FL_BOUNDARY_DIRICHLET = 0,
  FL_BOUNDARY_NEUMANN = 1,
  FL_BOUNDARY_ROBIN = 2,
} FlBoundary;

typedef enum FlNtMode {
  /**
   * `nt_param` is the smallest eigenvalue used by the step-count rule.
   */
  FL_NT_MODE_FORMULA = 0,
  /**
   * `nt_param` is the relative stopping tolerance.
   */
  FL_NT_MODE_ADAPTIVE = 1,
  /**
   * `nt_param` is the step count.
   */
  FL_NT_MODE_FIXED = 2,
} FlNtMode;

typedef enum FlScheme {
  FL_SCHEME_LOW = 0,
  FL_SCHEME_HIGH = 1,
} FlScheme;

typedef enum FlStatus {
  FL_STATUS_OK = 0,
  FL_STATUS_NULL_POINTER = 1,
  FL_STATUS_INVALID_ARGUMENT = 2,
  FL_STATUS_INVALID_MESH = 3,
  FL_STATUS_DIMENSION_MISMATCH = 4,
  FL_STATUS_NO_CONVERGENCE = 5,
  FL_STATUS_NOT_POSITIVE_DEFINITE = 6,
  FL_STATUS_CFL_VIOLATION = 7,
  FL_STATUS_STEP_CAP_EXCEEDED = 8,
  FL_STATUS_OUTSIDE_DOMAIN = 9,
  FL_STATUS_NO_BRACKET = 10,
  FL_STATUS_TRACE_MISMATCH = 11,
  FL_STATUS_OVERFLOW = 12,
  FL_STATUS_PARSE = 13,
  FL_STATUS_IO = 14,
  FL_STATUS_PANIC = 15,
} FlStatus;

typedef struct FlMesh FlMesh;

typedef struct FlOperator FlOperator;

/**
 * Operator parameters. Start from [`fl_config_default`].
 */
typedef struct FlConfig {
  double s;
  enum FlBoundary boundary;
  /**
   * Robin coefficient, ignored for the other conditions.
   */
  double kappa;
  enum FlScheme scheme;
  double theta;
  double eta;
  double p;
  enum FlNtMode nt_mode;
  double nt_param;
  size_t max_nt;
  /**
   * Nonzero selects conjugate gradients instead of the direct solver.
   */
  int32_t use_cg;
  double cg_tol;
} FlConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t fl_last_error_message(char *buf, size_t len);

/**
 * Defaults: Dirichlet, θ = 1 (low) or ½ (high), η = 10⁻³, p = 1,
 * adaptive stopping at 10⁻⁸, direct solver.
 */
struct FlConfig fl_config_default(double s, enum FlScheme scheme);

/**
 * Uniform mesh of `[a, b]` with `cells` cells.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FlStatus fl_mesh_interval(double a, double b, size_t cells, struct FlMesh **out);

/**
 * Fan triangulation of a convex polygon refined `refinements` times.
 * `xy` holds `n_vertices` counter-clockwise vertex pairs.
 *
 * # Safety
 * `xy` must point to `2 n_vertices` doubles and `out` must be valid.
 */
enum FlStatus fl_mesh_polygon(const double *xy,
                              size_t n_vertices,
                              size_t refinements,
                              struct FlMesh **out);

/**
 * Reads a mesh in the `.flm` text format.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` must be valid.
 */
enum FlStatus fl_mesh_read(const char *path, struct FlMesh **out);

/**
 * # Safety
 * `mesh` must be null or a handle from this library not yet freed.
 */
void fl_mesh_free(struct FlMesh *mesh);

/**
 * Writes dimension, node count, element count and `h_max`; any output
 * pointer may be null.
 *
 * # Safety
 * `mesh` must be a valid handle.
 */
enum FlStatus fl_mesh_info(const struct FlMesh *mesh,
                           size_t *dim,
                           size_t *n_nodes,
                           size_t *n_elements,
                           double *h_max);

/**
 * Node coordinates, `dim` values per node, into `coords` of length `len`.
 *
 * # Safety
 * `coords` must point to `len` writable doubles.
 */
enum FlStatus fl_mesh_coordinates(const struct FlMesh *mesh, double *coords, size_t len);

/**
 * Builds the discrete fractional Laplacian on `mesh`; the mesh handle may
 * be freed afterwards.
 *
 * # Safety
 * `mesh`, `config` and `out` must be valid pointers.
 */
enum FlStatus fl_operator_new(const struct FlMesh *mesh,
                              const struct FlConfig *config,
                              struct FlOperator **out);

/**
 * # Safety
 * `op` must be null or a handle from this library not yet freed.
 */
void fl_operator_free(struct FlOperator *op);

/**
 * Applies the operator to the P1 interpolant of `nodal_in` (one value per
 * mesh node) and writes nodal values to `nodal_out`. Dirichlet boundary
 * values of the input are ignored and zero on output. `n_t` (nullable)
 * receives the number of time steps taken.
 *
 * # Safety
 * Both arrays must hold `n_nodes` doubles.
 */
enum FlStatus fl_operator_apply(struct FlOperator *op,
                                const double *nodal_in,
                                double *nodal_out,
                                size_t n_nodes,
                                size_t *n_t);

/**
 * Time step `Δt = η h^p` used by the operator.
 *
 * # Safety
 * `op` and `dt` must be valid pointers.
 */
enum FlStatus fl_operator_dt(const struct FlOperator *op, double *dt);

/**
 * Γ(x).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FlStatus fl_gamma(double x, double *out);

/**
 * Quadrature weights `β_1..β_{n_t}` into `betas` and the tail weight into
 * `beta_inf` (nullable).
 *
 * # Safety
 * `betas` must point to `n_t` writable doubles.
 */
enum FlStatus fl_weights(enum FlScheme scheme,
                         double s,
                         double dt,
                         size_t n_t,
                         double *betas,
                         double *beta_inf);

/**
 * Step count `⌈c(s)/(λ_min Δt) ln(1/Δt)⌉`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FlStatus fl_choose_nt(enum FlScheme scheme,
                           double s,
                           double dt,
                           double lambda_min,
                           size_t *out);

/**
 * `m`-th positive root of the Robin characteristic equation on an interval
 * of length `len`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum FlStatus fl_robin_root(double kappa, double len, size_t m, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRACLAP_H */
