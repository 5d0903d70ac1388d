#ifndef IFLOW_H
#define IFLOW_H

/*
 * C interface to the inverse-flow toolkit. Every function returns a status
 * code: 0 on success, 2 for configuration errors, 3 for data errors, 4 for
 * numeric failures. On a nonzero status iflow_last_error() describes the
 * problem; the message is thread local and valid until the next failing call
 * on the same thread.
 *
 * Objects are opaque handles. Anything created by an iflow_*_create /
 * iflow_*_load call must be released with the matching free function.
 * Configuration is passed as flat key=value text, one pair per line, the
 * same dialect the CLI reads.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct iflow_tensor iflow_tensor;
typedef struct iflow_model iflow_model;
typedef struct iflow_process iflow_process;
typedef struct iflow_rng iflow_rng;

const char* iflow_version(void);
const char* iflow_last_error(void);

/* Frees strings returned through char** out parameters. */
void iflow_string_free(char* s);

/* ---- tensors ------------------------------------------------------------ */

/* data may be NULL for a zero-filled tensor; it is copied otherwise. */
int iflow_tensor_create(const size_t* shape, size_t ndim, const float* data, iflow_tensor** out);
void iflow_tensor_free(iflow_tensor* t);

int iflow_tensor_ndim(const iflow_tensor* t, size_t* out);
int iflow_tensor_extent(const iflow_tensor* t, size_t dim, size_t* out);
/* Borrowed pointer into the tensor; valid while the handle lives. */
int iflow_tensor_data(const iflow_tensor* t, const float** data, size_t* count);

int iflow_tensor_save(const iflow_tensor* t, const char* path);
int iflow_tensor_load(const char* path, iflow_tensor** out);
int iflow_csv_save(const iflow_tensor* t, const char* path);
int iflow_csv_load(const char* path, iflow_tensor** out);
int iflow_labels_save(const int* labels, size_t count, const char* path);

/* ---- randomness --------------------------------------------------------- */

int iflow_rng_create(uint64_t seed, iflow_rng** out);
void iflow_rng_free(iflow_rng* r);

/* ---- observation processes ---------------------------------------------- */

/* kv_text uses the noise.* keys; unknown keys are rejected. */
int iflow_process_create(const char* kv_text, iflow_process** out);
void iflow_process_free(iflow_process* p);
int iflow_process_kind(const iflow_process* p, const char** out);
int iflow_sample_noise(const iflow_process* p, const iflow_tensor* x0, iflow_rng* rng,
                       iflow_tensor** out);

/* ---- models and training ------------------------------------------------ */

/*
 * kv_text holds train.* keys; train.method decides whether the model carries
 * a vector field (ifm) or a consistency map (icm, gct), and the architecture
 * keys size the network. in_dim is the state width.
 */
int iflow_model_create(const char* kv_text, int in_dim, uint64_t seed, iflow_model** out);
void iflow_model_free(iflow_model* m);
int iflow_model_save(const iflow_model* m, const char* path);
int iflow_model_load(const char* path, iflow_model** out);
int iflow_model_forward(const iflow_model* m, const iflow_tensor* x, double t,
                        iflow_tensor** out);

/*
 * Runs the method named by train.method in kv_text. data is the observation
 * set for ifm / icm and the clean set for gct. report_csv receives a
 * malloc'd "epoch,loss" table (free with iflow_string_free); wall_seconds
 * receives the training wall time. Either out pointer may be NULL.
 */
int iflow_train(iflow_model* m, const iflow_tensor* data, const iflow_process* p,
                const char* kv_text, char** report_csv, double* wall_seconds);

/* Recovers clean states using the discretization recorded at training time. */
int iflow_denoise(const iflow_model* m, const iflow_tensor* x1, iflow_tensor** out);

/* ---- evaluation --------------------------------------------------------- */

int iflow_psnr(const iflow_tensor* a, const iflow_tensor* b, double peak, double* out);
int iflow_energy_distance(const iflow_tensor* x, const iflow_tensor* y, double* out);
int iflow_nn_accuracy(const iflow_tensor* x, const iflow_tensor* y, double* out);
int iflow_nn_accuracy_resampled(const iflow_tensor* x, const iflow_tensor* y, uint64_t seed,
                                int rounds, double* value, double* se);

/* ---- noise model fitting ------------------------------------------------ */

/* Fits g = f + f^gamma u + w to one noisy image from patch statistics. */
int iflow_fit_poisson_gaussian(const iflow_tensor* img, int patch, double* gamma,
                               double* sigma_u, double* sigma_w);

/* ---- fluid states ------------------------------------------------------- */

/*
 * Velocity fields travel as 1-D tensors [vx | vy] of length 2 m^2 (row-major
 * m x m components on the unit torus).
 */
int iflow_ns_simulate(const iflow_tensor* field, int m, double nu, double dt, double t_end,
                      iflow_tensor** out);
int iflow_random_stream_field(uint64_t seed, int n_modes, int m, iflow_tensor** out);
int iflow_single_mode_field(int m, double a1, double a2, double phase1, double phase2,
                            iflow_tensor** out);
int iflow_field_save(const iflow_tensor* field, int m, double t, double nu, const char* path);
int iflow_field_load(const char* path, iflow_tensor** out, int* m, double* t, double* nu);

/* ---- reference data ----------------------------------------------------- */

int iflow_make_eight_gaussians(size_t n, double sigma_obs, uint64_t seed, iflow_tensor** noisy,
                               iflow_tensor** clean, iflow_tensor** centers, int** labels,
                               size_t* label_count);
void iflow_labels_free(int* labels);
int iflow_make_gaussian1d(size_t n, double tau, double sigma, uint64_t seed, iflow_tensor** x0,
                          iflow_tensor** x1);

/* PCA embedding for expression matrices: fit, project, normalize, truncate. */
int iflow_sc_embed(const iflow_tensor* counts, int k, uint64_t seed, iflow_tensor** out);

/* ---- discretization ----------------------------------------------------- */

/* Writes up to cap nodes of the time grid; *written gets the node count. */
int iflow_time_grid(double eps, double t_end, double rho, int n, double* out, size_t cap,
                    size_t* written);

#ifdef __cplusplus
}
#endif

#endif /* IFLOW_H */
