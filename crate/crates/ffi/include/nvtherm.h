#ifndef NVTHERM_H
#define NVTHERM_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum NvStatus {
  NV_STATUS_OK = 0,
  NV_STATUS_NULL_POINTER = 1,
  NV_STATUS_INVALID_ARGUMENT = 2,
  NV_STATUS_INVALID_PARAMETER = 3,
  NV_STATUS_TAYLOR_REGIME = 4,
  NV_STATUS_DEGENERATE_STEADY_STATE = 5,
  NV_STATUS_NOT_POSITIVE = 6,
  NV_STATUS_PEAK_DETECTION = 7,
  NV_STATUS_SINGULAR_FIT = 8,
  NV_STATUS_NO_SENSITIVITY = 9,
  NV_STATUS_MODEL_MISMATCH = 10,
  NV_STATUS_CONFIG = 11,
  NV_STATUS_FORMAT = 12,
  NV_STATUS_IO = 13,
  NV_STATUS_PANIC = 14,
} NvStatus;

/**
 * Opaque fit result handle.
 */
typedef struct NvFitResult NvFitResult;

/**
 * Opaque spectrum handle.
 */
typedef struct NvSpectrum NvSpectrum;

/**
 * Frequencies in MHz, temperatures in K.
 */
typedef struct NvEnvironment {
  double d0;
  double t0;
  double dd_dt;
  double ex;
  double ey;
  double b_transverse;
  double b_parallel;
  double temperature;
} NvEnvironment;

typedef struct NvDrive {
  double omega_mw;
  double rabi_mw;
  double rabi_mw_y;
  double omega_rf;
  double rabi_rf;
} NvDrive;

typedef struct NvDamping {
  double gamma_b;
  double gamma_d;
} NvDamping;

typedef struct NvBudget {
  /**
   * Detected photons per second.
   */
  double photon_rate;
  double alpha;
} NvBudget;

/**
 * Absent quantities are NaN.
 */
typedef struct NvSensitivity {
  double eta_slope;
  double eta_linewidth;
  double best_frequency;
  double max_slope;
  double fwhm;
  double contrast;
} NvSensitivity;

typedef struct NvTemperature {
  double temperature;
  double delta_t;
  double uncertainty;
} NvTemperature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nv_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *nv_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void nv_string_free(char *s);

struct NvEnvironment nv_environment_default(void);

struct NvDrive nv_drive_default(void);

struct NvDamping nv_damping_default(void);

/**
 * The four dressed resonance frequencies (MHz), ascending.
 *
 * # Safety
 * `out` must point to four writable doubles.
 */
enum NvStatus nv_dressed_resonances(double d,
                                    double ex,
                                    double omega_rf,
                                    double rabi_rf,
                                    double *out);

/**
 * Single-crystal population depletion at microwave frequency `nu`.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_depletion(const struct NvEnvironment *env,
                           const struct NvDrive *drive,
                           const struct NvDamping *damping,
                           double nu,
                           double *out_value);

/**
 * Strain-averaged closed-form spectrum on a linear grid. `sigma_ex = 0`
 * gives the single-crystal spectrum.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_spectrum_simulate(const struct NvEnvironment *env,
                                   const struct NvDrive *drive,
                                   const struct NvDamping *damping,
                                   double alpha,
                                   double sigma_ex,
                                   size_t strain_nodes,
                                   double start,
                                   double stop,
                                   size_t points,
                                   struct NvSpectrum **out_spectrum);

/**
 * Lindblad steady-state spectrum with radiative rates matching `damping`.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_spectrum_oracle(const struct NvEnvironment *env,
                                 const struct NvDrive *drive,
                                 const struct NvDamping *damping,
                                 double alpha,
                                 double start,
                                 double stop,
                                 size_t points,
                                 struct NvSpectrum **out_spectrum);

/**
 * Builds a spectrum from arrays; `sigma` may be NULL for unit weights.
 *
 * # Safety
 * Non-NULL arrays must hold `len` doubles.
 */
enum NvStatus nv_spectrum_new(const double *frequencies,
                              const double *signal,
                              const double *sigma,
                              size_t len,
                              struct NvSpectrum **out_spectrum);

/**
 * Shot-noise realisation of a clean spectrum.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_spectrum_add_noise(const struct NvSpectrum *clean,
                                    double photon_rate,
                                    double dwell_s,
                                    uint64_t seed,
                                    struct NvSpectrum **out_spectrum);

/**
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum NvStatus nv_spectrum_load_csv(const char *path, struct NvSpectrum **out_spectrum);

/**
 * # Safety
 * `spectrum` must be a live handle and `path` a NUL-terminated string.
 */
enum NvStatus nv_spectrum_save_csv(const struct NvSpectrum *spectrum, const char *path);

/**
 * Number of points; 0 for NULL.
 *
 * # Safety
 * `spectrum` must be NULL or a live handle.
 */
size_t nv_spectrum_len(const struct NvSpectrum *spectrum);

/**
 * Copies the columns into caller buffers of `len` doubles each; any buffer
 * may be NULL to skip it.
 *
 * # Safety
 * Non-NULL buffers must hold `len` doubles.
 */
enum NvStatus nv_spectrum_copy(const struct NvSpectrum *spectrum,
                               double *frequencies,
                               double *signal,
                               double *sigma,
                               size_t len);

/**
 * # Safety
 * `spectrum` must be NULL or a handle not yet freed.
 */
void nv_spectrum_free(struct NvSpectrum *spectrum);

/**
 * Fits a sum of `peaks` Lorentzian dips.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_fit_lorentzian(const struct NvSpectrum *spectrum,
                                size_t peaks,
                                size_t starts,
                                struct NvFitResult **out_result);

/**
 * Fits with a model given as JSON, e.g.
 * `{"kind":"dressed_dip","omega_rf":10.5}` or
 * `{"kind":"multi_lorentzian","peaks":2}`.
 *
 * # Safety
 * Pointers must be valid; `model_json` NUL-terminated.
 */
enum NvStatus nv_fit_json_model(const struct NvSpectrum *spectrum,
                                const char *model_json,
                                size_t starts,
                                struct NvFitResult **out_result);

/**
 * # Safety
 * `result` must be NULL or a live handle.
 */
bool nv_fit_result_converged(const struct NvFitResult *result);

/**
 * # Safety
 * `result` must be NULL or a live handle.
 */
size_t nv_fit_result_param_count(const struct NvFitResult *result);

/**
 * Value and one-sigma uncertainty of a named parameter.
 *
 * # Safety
 * Pointers must be valid; `out_sigma` may be NULL.
 */
enum NvStatus nv_fit_result_param(const struct NvFitResult *result,
                                  const char *name,
                                  double *out_value,
                                  double *out_sigma);

/**
 * Parameter vector and uncertainties into buffers of `len` doubles; either
 * may be NULL.
 *
 * # Safety
 * Non-NULL buffers must hold `len` doubles.
 */
enum NvStatus nv_fit_result_params(const struct NvFitResult *result,
                                   double *values,
                                   double *sigmas,
                                   size_t len);

/**
 * Serialised result; release with [`nv_string_free`]. NULL on failure.
 *
 * # Safety
 * `result` must be NULL or a live handle.
 */
char *nv_fit_result_to_json(const struct NvFitResult *result);

/**
 * # Safety
 * `json` must be NUL-terminated.
 */
enum NvStatus nv_fit_result_from_json(const char *json, struct NvFitResult **out_result);

/**
 * # Safety
 * `result` must be NULL or a handle not yet freed.
 */
void nv_fit_result_free(struct NvFitResult *result);

/**
 * Slope sensitivity (K/√Hz) of a fitted spectrum.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_slope_sensitivity(const struct NvFitResult *result,
                                   const struct NvBudget *noise,
                                   double dd_dt,
                                   struct NvSensitivity *out_report);

/**
 * Linewidth-formula sensitivity (K/√Hz).
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_linewidth_sensitivity(double fwhm,
                                       double contrast,
                                       const struct NvBudget *noise,
                                       double dd_dt,
                                       double *out_eta);

/**
 * Temperature from the splitting shift against a calibration fit taken at `t0`.
 *
 * # Safety
 * Pointers must be valid for their types.
 */
enum NvStatus nv_estimate_temperature(const struct NvFitResult *fit,
                                      const struct NvFitResult *calibration,
                                      double t0,
                                      double dd_dt,
                                      struct NvTemperature *out_estimate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NVTHERM_H */
