#ifndef NEARFIELD_H
#define NEARFIELD_H

#include <stdbool.h>
#include <stddef.h>

typedef enum NfStatus {
  NF_STATUS_OK = 0,
  NF_STATUS_NULL_POINTER = 1,
  NF_STATUS_INVALID_ARGUMENT = 2,
  NF_STATUS_NOT_FOUND = 3,
  /*
   A Sommerfeld integral missed its tolerance within the evaluation budget.
   */
  NF_STATUS_NO_CONVERGENCE = 4,
  NF_STATUS_IO = 5,
  /*
   Transport peak not reached inside the time window.
   */
  NF_STATUS_WINDOW_TOO_SHORT = 6,
  NF_STATUS_PANIC = 7,
} NfStatus;

/*
 Material database handle.
 */
typedef struct NfMaterialDb NfMaterialDb;

/*
 Layered environment handle.
 */
typedef struct NfStack NfStack;

/*
 Single-excitation trajectory handle.
 */
typedef struct NfTrajectory NfTrajectory;

typedef struct NfTransportMetrics {
  /*
   Peak time of the last site, in 1/γ.
   */
  double t_peak;
  double peak_population;
  /*
   Total population left at `t_peak`.
   */
  double remaining;
} NfTransportMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, empty after success.
 The pointer stays valid until the next call on the same thread.
 */
const char *nf_last_error(void);

/*
 Opens the bundled database.

 # Safety
 `out` must be writable.
 */
enum NfStatus nf_material_db_bundled(struct NfMaterialDb **out);

/*
 Opens the bundled database extended by the TOML file at `path`; entries
 in the file replace bundled ones with the same name.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum NfStatus nf_material_db_load(const char *path, struct NfMaterialDb **out);

/*
 # Safety
 `db` must be null or a handle not yet freed.
 */
void nf_material_db_free(struct NfMaterialDb *db);

/*
 Relative permittivity of `name` at `omega_ev`. For a perfect conductor
 `*is_perfect_conductor` is set and the real and imaginary parts are NaN.

 # Safety
 Pointers must be valid; `name` NUL-terminated.
 */
enum NfStatus nf_permittivity(const struct NfMaterialDb *db,
                              const char *name,
                              double omega_ev,
                              double *re,
                              double *im,
                              bool *is_perfect_conductor);

/*
 # Safety
 `out` must be writable.
 */
enum NfStatus nf_stack_vacuum(struct NfStack **out);

/*
 Half-space of `lower` below `z = 0`.

 # Safety
 Pointers must be valid; `lower` NUL-terminated.
 */
enum NfStatus nf_stack_one_surface(const struct NfMaterialDb *db,
                                   const char *lower,
                                   struct NfStack **out);

/*
 Vacuum gap `0 < z < gap_nm` between `lower` and `upper`.

 # Safety
 Pointers must be valid; names NUL-terminated.
 */
enum NfStatus nf_stack_two_surfaces(const struct NfMaterialDb *db,
                                    const char *lower,
                                    const char *upper,
                                    double gap_nm,
                                    struct NfStack **out);

/*
 # Safety
 `stack` must be null or a handle not yet freed.
 */
void nf_stack_free(struct NfStack *stack);

/*
 Fills the row-major `n × n` matrices `v` and `gamma` (units of γ) for
 atoms at `positions` (`n` xyz triples in nm) with common dipole
 direction `dipole`. `max_error` may be null.

 # Safety
 `positions` holds `3 n` values, `dipole` 3, `v` and `gamma` `n²` each.
 */
enum NfStatus nf_coupling_matrices(const struct NfStack *stack,
                                   const double *positions,
                                   size_t n,
                                   const double *dipole,
                                   double omega_ev,
                                   double *v,
                                   double *gamma,
                                   double *max_error);

/*
 Propagates an excitation starting on atom `initial_site` up to `t_max`
 (1/γ), sampled every `dt`.

 # Safety
 `positions` holds `3 n` values, `dipole` 3; `out` must be writable.
 */
enum NfStatus nf_transport(const struct NfStack *stack,
                           const double *positions,
                           size_t n,
                           const double *dipole,
                           double omega_ev,
                           size_t initial_site,
                           double t_max,
                           double dt,
                           struct NfTrajectory **out);

/*
 Number of time samples.

 # Safety
 `traj` must be a live handle.
 */
size_t nf_trajectory_len(const struct NfTrajectory *traj);

/*
 Time of sample `k` and the `n` site populations at that time.

 # Safety
 `traj` must be a live handle, `populations` writable for the chain
 length, `time` writable.
 */
enum NfStatus nf_trajectory_sample(const struct NfTrajectory *traj,
                                   size_t k,
                                   double *time,
                                   double *populations);

/*
 Peak time of the last site and the populations there.

 # Safety
 `traj` must be a live handle and `out` writable.
 */
enum NfStatus nf_trajectory_metrics(const struct NfTrajectory *traj,
                                    struct NfTransportMetrics *out);

/*
 # Safety
 `traj` must be null or a handle not yet freed.
 */
void nf_trajectory_free(struct NfTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEARFIELD_H */
