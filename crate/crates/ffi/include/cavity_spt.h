#ifndef CAVITY_SPT_H
#define CAVITY_SPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CSPT_OK 0

#define CSPT_ERR_INVALID_ARGUMENT 1

#define CSPT_ERR_RESOURCE_LIMIT 2

#define CSPT_ERR_CONFIG 3

#define CSPT_ERR_OUTPUT_EXISTS 4

#define CSPT_ERR_IO 5

#define CSPT_ERR_SERIALIZATION 6

#define CSPT_ERR_NULL_POINTER 7

#define CSPT_ERR_PANIC 8

#define CSPT_GEOMETRY_NEAREST_NEIGHBOR_PBC 0

#define CSPT_GEOMETRY_ALL_TO_ALL 1

/**
 * Opaque traced phase boundary.
 */
typedef struct CsptBoundary CsptBoundary;

/**
 * Opaque mean-field solution.
 */
typedef struct CsptMeanField CsptMeanField;

typedef struct {
  /**
   * ⟨S_x⟩ averaged over sublattices.
   */
  double m_uniform;
  double m_staggered;
  double sz;
  double free_energy_per_spin;
  double alpha_per_sqrt_n;
  double photons_per_spin;
  double residual;
  uint64_t iterations;
  uint32_t sublattices;
  bool converged;
} CsptMeanFieldSummary;

typedef struct {
  double slice;
  /**
   * NaN when the slice has no detector flip.
   */
  double critical;
  double width;
  bool has_critical;
  /**
   * Ordered phase lies above `critical` on the scan axis.
   */
  bool ordered_above;
  bool flagged;
  bool failed;
} CsptBoundaryPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cspt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cspt_version(void);

/**
 * Free-spin critical coupling λ̄_c(ω_z, Ω, S, T).
 */
int32_t cspt_dicke_critical_coupling(double omega_z,
                                     double omega,
                                     double spin,
                                     double kt,
                                     double *lambda_c);

/**
 * Collective coupling λ̄ from spin density (per m³), filling factor and Ω.
 */
int32_t cspt_lambda_bar_from_material(double rho_per_m3,
                                      double nu,
                                      double omega,
                                      double *lambda_bar);

/**
 * Complex transmission t(ω) for given equilibrium Pauli expectations.
 */
int32_t cspt_transmission_point(double omega,
                                double omega_z,
                                double cavity_omega,
                                double lambda_bar,
                                double kappa,
                                double gamma,
                                double sz0,
                                double sx0,
                                double *re,
                                double *im);

/**
 * Self-consistent mean field of the cavity-dressed transverse Ising model.
 */
int32_t cspt_meanfield_solve_ising(double omega_z,
                                   double j,
                                   int32_t geometry_code,
                                   uint32_t n_sublattices,
                                   double cavity_omega,
                                   double lambda_bar,
                                   double kt,
                                   CsptMeanField **handle);

/**
 * Self-consistent mean field of a giant spin (easy axis x, field in the
 * y–z plane at angle `phi` in radians, `b_tesla` in tesla).
 */
int32_t cspt_meanfield_solve_giant_spin(double spin,
                                        double d,
                                        double e,
                                        double j,
                                        double b_tesla,
                                        double phi,
                                        double cavity_omega,
                                        double lambda_bar,
                                        double kt,
                                        CsptMeanField **handle);

int32_t cspt_meanfield_summary(const CsptMeanField *handle, CsptMeanFieldSummary *summary);

/**
 * ⟨S_x⟩ on sublattice `index`.
 */
int32_t cspt_meanfield_sublattice_m(const CsptMeanField *handle, uint32_t index, double *m);

/**
 * Releases a mean-field handle; null is ignored.
 */
void cspt_meanfield_free(CsptMeanField *handle);

/**
 * Mean-field λ̄_c(J) of the transverse Ising model: one boundary search per
 * J on the grid, each bisected on the λ̄ grid.
 */
int32_t cspt_boundary_ising_mean_field(double omega_z,
                                       int32_t geometry_code,
                                       uint32_t n_sublattices,
                                       bool staggered,
                                       double cavity_omega,
                                       double kt,
                                       double j_min,
                                       double j_max,
                                       size_t j_points,
                                       double lambda_min,
                                       double lambda_max,
                                       size_t lambda_points,
                                       double threshold,
                                       double bisection_tol,
                                       CsptBoundary **handle);

/**
 * Response-criterion λ̄_c(J) from exact diagonalization of an
 * `n_sites` nearest-neighbour chain.
 */
int32_t cspt_boundary_ising_response(size_t n_sites,
                                     size_t krylov_dim,
                                     uint64_t seed,
                                     double omega_z,
                                     double cavity_omega,
                                     double kt,
                                     double j_min,
                                     double j_max,
                                     size_t j_points,
                                     double lambda_min,
                                     double lambda_max,
                                     size_t lambda_points,
                                     double bisection_tol,
                                     CsptBoundary **handle);

int32_t cspt_boundary_len(const CsptBoundary *handle, size_t *len);

int32_t cspt_boundary_point(const CsptBoundary *handle, size_t index, CsptBoundaryPoint *point);

/**
 * Releases a boundary handle; null is ignored.
 */
void cspt_boundary_free(CsptBoundary *handle);

/**
 * Runs a config file like the `cavity-spt run` command. `out_prefix` may be
 * null to use the config's `output`. On success `manifest_path` receives a
 * string to release with `cspt_string_free`.
 */
int32_t cspt_run_config(const char *config_path,
                        const char *out_prefix,
                        bool overwrite,
                        char **manifest_path);

/**
 * Releases a string returned by this library; null is ignored.
 */
void cspt_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVITY_SPT_H */
