#ifndef QVERIF_H
#define QVERIF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome; `QV_OK` means the out-parameters were written.
 */
typedef enum QvStatus {
  QvOk = 0,
  /**
   * A parameter was outside its documented range.
   */
  QvInvalidArgument = 1,
  /**
   * θ is outside the regime of the requested strategy family.
   */
  QvRegimeError = 2,
  /**
   * The ε(N) equation has no root in the admissible bracket.
   */
  QvNoRoot = 3,
  /**
   * A required pointer was null.
   */
  QvNullPointer = 4,
  /**
   * Any other failure (fit, simulation, internal).
   */
  QvRuntimeError = 5,
} QvStatus;

/**
 * Strategy family selector.
 */
typedef enum QvFamily {
  QvFamilyNonadaptive = 0,
  QvFamilyAdaptive = 1,
  QvFamilyBell = 2,
  QvFamilyProduct = 3,
} QvFamily;

/**
 * Target-state frame selector.
 */
typedef enum QvFrame {
  QvFrameTheoretical = 0,
  QvFrameExperimental = 1,
} QvFrame;

/**
 * Which side of the expected pass rate an analysis sits on.
 */
typedef enum QvSide {
  QvSideSmall = 0,
  QvSideLarge = 1,
} QvSide;

/**
 * Opaque strategy handle.
 */
typedef struct QvStrategy QvStrategy;

/**
 * Analytic spectral data of a strategy.
 */
typedef struct QvSpectrum {
  double lambda2;
  double lambda4;
  /**
   * α(θ), β(θ), 1/3, or 1 depending on the family.
   */
  double weight;
  /**
   * 1 − λ₂.
   */
  double delta_eps_coefficient;
} QvSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Build a strategy. On success writes a heap handle to `out`; free it with
 * `qv_strategy_free`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QvStatus qv_strategy_new(enum QvFamily family,
                              double theta,
                              double phi,
                              enum QvFrame frame,
                              struct QvStrategy **out);

/**
 * Release a strategy handle. A null pointer is a no-op.
 *
 * # Safety
 * `strategy` must have come from `qv_strategy_new` and not be freed twice.
 */
void qv_strategy_free(struct QvStrategy *strategy);

/**
 * Number of binary tests in the strategy.
 *
 * # Safety
 * `strategy` must be a live handle.
 */
uintptr_t qv_strategy_test_count(const struct QvStrategy *strategy);

/**
 * Analytic spectrum of the strategy operator.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum QvStatus qv_strategy_spectrum(const struct QvStrategy *strategy, struct QvSpectrum *out);

/**
 * Copies needed for confidence 1−δ against ε-far states,
 * ceil(ln δ / ln(1 − (1−λ₂)ε)).
 *
 * # Safety
 * Both pointers must be valid.
 */
enum QvStatus qv_required_copies(const struct QvStrategy *strategy,
                                 double epsilon,
                                 double delta,
                                 uint64_t *out);

/**
 * Worst-case single-test failure probability Δ_ε = (1−λ₂)·ε.
 *
 * # Safety
 * `strategy` must be a live handle.
 */
double qv_failure_probability(const struct QvStrategy *strategy, double epsilon);

/**
 * Closed-form pass probability from a fidelity and (adaptive only) the
 * weight p₄ on the fourth verifier-basis vector.
 *
 * # Safety
 * `strategy` must be a live handle.
 */
double qv_pass_probability(const struct QvStrategy *strategy, double fidelity, double p4);

/**
 * Binary KL divergence in nats (0·ln 0 ≡ 0; ±∞ conventions as documented).
 */
double qv_kl_divergence(double x, double y);

/**
 * δ_A = 1 − (1−Δ_ε)^n.
 */
double qv_cumulative_confidence(double delta_eps, uint64_t n);

/**
 * Chernoff bound δ = e^{−n·D(m/n‖μ)}; `side_out` reports which case the
 * bound applies to.
 *
 * # Safety
 * Out pointers must be valid.
 */
enum QvStatus qv_chernoff_delta(uint64_t m_pass,
                                uint64_t n,
                                double mu,
                                double *delta_out,
                                enum QvSide *side_out);

/**
 * Solve ε from e^{−n·D(pass_rate‖1−(1−λ)ε)} = δ; the side picks λ₂ or λ₄.
 *
 * # Safety
 * Pointers must be valid.
 */
enum QvStatus qv_epsilon_at(const struct QvStrategy *strategy,
                            uint64_t n,
                            double pass_rate,
                            double delta_target,
                            enum QvSide side,
                            double *out);

/**
 * Task B on a diagonal-mixture device of the given fidelity: returns the
 * pass count over `n_copies` copies. Deterministic in `seed`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum QvStatus qv_simulate_task_b(const struct QvStrategy *strategy,
                                 double fidelity,
                                 double eom_flip,
                                 uint64_t seed,
                                 uint64_t n_copies,
                                 uint64_t *m_pass_out);

/**
 * Task A on a diagonal-mixture device: writes the 1-based index of the
 * first failed copy, or 0 when censored at `max_copies`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum QvStatus qv_simulate_task_a(const struct QvStrategy *strategy,
                                 double fidelity,
                                 double eom_flip,
                                 uint64_t seed,
                                 uint64_t max_copies,
                                 uint64_t *n_first_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QVERIF_H */
