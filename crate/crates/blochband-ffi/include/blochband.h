#ifndef BLOCHBAND_H
#define BLOCHBAND_H

/* Generated by cbindgen from the blochband-ffi crate; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Example deformation families.
 */
typedef enum {
  BB_DEFORMATION_KIND_DILATION = 0,
  BB_DEFORMATION_KIND_TILT = 1,
  BB_DEFORMATION_KIND_UNIAXIAL = 2,
} BbDeformationKind;

/**
 * Builtin symmetry-breaking perturbations.
 */
typedef enum {
  /**
   * odd potential `2 w (sin(k1.x) + sin(k2.x))` scaled by `delta`
   * (parity breaking)
   */
  BB_PERTURBATION_KIND_ODD_SINE = 0,
  /**
   * odd potential `2 w sin(k1.x)` scaled by `delta` (parity and
   * diagonal-reflection breaking)
   */
  BB_PERTURBATION_KIND_ODD_SINE_AXIS = 1,
  /**
   * magneto-optic term with `a = 2 w (cos(k1.x) + cos(k2.x))` scaled by
   * `delta` (conjugation breaking)
   */
  BB_PERTURBATION_KIND_EVEN_COSINE = 2,
} BbPerturbationKind;

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  BB_STATUS_OK = 0,
  BB_STATUS_INVALID_ARGUMENT = 1,
  BB_STATUS_SYMMETRY_ERROR = 2,
  BB_STATUS_HYPOTHESIS_ERROR = 3,
  BB_STATUS_SOLVER_ERROR = 4,
  BB_STATUS_IO_ERROR = 5,
} BbStatus;

/**
 * Opaque deformation handle.
 */
typedef struct BbDeformation BbDeformation;

/**
 * Opaque potential handle.
 */
typedef struct BbPotential BbPotential;

/**
 * Quadratic degeneracy analysis output.
 */
typedef struct {
  double e_s;
  double alphas[3];
  double betas[3];
  /**
   * bit i set = hypothesis flag Q(i+1) holds, bits 0..6
   */
  uint32_t flags;
  bool generic_coefficients;
  double guard_gap;
} BbDegeneracyReport;

/**
 * Located Dirac pair output.
 */
typedef struct {
  double e_d;
  double d_plus[2];
  double d_minus[2];
  double gamma0[2];
  double gamma1[2];
  double gamma2[2];
  double gap_residual;
  /**
   * bit i set = hypothesis flag D(i+1) holds, bits 0..4
   */
  uint32_t flags;
} BbDiracReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bb_last_error_message(void);

/**
 * The two-orbit cosine potential.
 */
BbStatus bb_potential_example(double v01, double v11, BbPotential **out);

/**
 * Potential from representative coefficients (arrays of length `count`),
 * expanded over their symmetry orbits.
 */
BbStatus bb_potential_from_representatives(double v0,
                                           const int32_t *m1,
                                           const int32_t *m2,
                                           const double *values,
                                           uintptr_t count,
                                           uint32_t cutoff,
                                           BbPotential **out);

void bb_potential_free(BbPotential *p);

BbStatus bb_deformation_identity(BbDeformation **out);

BbStatus bb_deformation_family(BbDeformationKind kind, double parameter, BbDeformation **out);

/**
 * Deformation from a row-major 2x2 matrix `t = [t11, t12, t21, t22]`.
 */
BbStatus bb_deformation_matrix(const double *t, BbDeformation **out);

/**
 * Pauli coefficients of the deformation: `(tau0, tau1, tau3)`.
 */
BbStatus bb_deformation_taus(const BbDeformation *d, double *tau0, double *tau1, double *tau3);

void bb_deformation_free(BbDeformation *d);

/**
 * Band energies at `nk` quasimomenta (`ks` holds `2*nk` doubles, pairs
 * `(k1, k2)`); writes `nk * band_count` ascending energies row-major into
 * `out_energies`.
 */
BbStatus bb_band_structure(const BbPotential *potential,
                           const BbDeformation *deformation,
                           uint32_t cutoff,
                           const double *ks,
                           uintptr_t nk,
                           uintptr_t band_count,
                           double *out_energies);

BbStatus bb_find_degeneracy(const BbPotential *potential,
                            uint32_t cutoff,
                            double window_lo,
                            double window_hi,
                            BbDegeneracyReport *out);

BbStatus bb_locate_dirac(const BbPotential *potential,
                         const BbDeformation *deformation,
                         uint32_t cutoff,
                         double window_lo,
                         double window_hi,
                         BbDiracReport *out);

/**
 * Chern number of `band` (0-based) under a builtin perturbation of
 * amplitude `w` and coupling `delta`, on a `grid x grid` Brillouin-zone
 * mesh.
 */
BbStatus bb_chern_number(const BbPotential *potential,
                         const BbDeformation *deformation,
                         uint32_t cutoff,
                         BbPerturbationKind kind,
                         double w,
                         double delta,
                         uintptr_t band,
                         uintptr_t grid,
                         int32_t *out_chern,
                         double *out_residual,
                         double *out_min_gap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOCHBAND_H */
