/* C interface for the robust-ik library.
 *
 * Robots are opaque handles created from the TOML spec format and freed
 * with rik_chain_free. All angles are radians, all lengths meters, and
 * quaternions are scalar-first arrays [eta, ex, ey, ez]. Functions return
 * rik_status; on any failure rik_last_error_message() describes the cause
 * for the calling thread.
 *
 * This header is maintained by hand and checked against the exported
 * symbols in the crate's test suite. It can be regenerated with cbindgen
 * if preferred; the shapes below are stable.
 */

#ifndef ROBUST_IK_H
#define ROBUST_IK_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct rik_chain rik_chain;

typedef enum rik_status {
  RIK_OK = 0,
  /* Bad pointer, bad dimension, or invalid numeric argument. */
  RIK_INVALID_ARGUMENT = 1,
  /* Robot spec text failed to parse or validate. */
  RIK_PARSE_ERROR = 2,
  /* IK produced no solutions for the target pose. */
  RIK_UNREACHABLE = 3,
  /* Solutions exist but none satisfies the epsilon filter. */
  RIK_NO_ROBUST_SOLUTION = 4,
  /* Unexpected internal failure. */
  RIK_INTERNAL_ERROR = 5
} rik_status;

typedef enum rik_metric_mode {
  /* Worst-case position error anywhere in R^3. aux is ignored. */
  RIK_METRIC_FULL = 0,
  /* Worst-case position error along a unit direction. aux points to
   * double[3]. */
  RIK_METRIC_DIRECTION = 1,
  /* Worst-case shadow area on a plane. aux points to double[6], two
   * orthonormal columns [x1,y1,z1, x2,y2,z2]. */
  RIK_METRIC_PLANE = 2
} rik_metric_mode;

/* Message describing the most recent failure on this thread, or an empty
 * string. The pointer is valid until the next failing call on the same
 * thread. */
const char *rik_last_error_message(void);

/* Parses a robot spec document (TOML text). On RIK_OK the handle must be
 * released with rik_chain_free. */
rik_status rik_chain_from_str(const char *toml_text, rik_chain **out_chain);

/* Reads and parses a robot spec file. */
rik_status rik_chain_from_file(const char *path, rik_chain **out_chain);

void rik_chain_free(rik_chain *chain);

/* Number of joints, or 0 if chain is NULL. */
size_t rik_chain_dof(const rik_chain *chain);

/* Forward kinematics: tool position and orientation at a configuration.
 * theta must have length n = rik_chain_dof(chain). */
rik_status rik_fk(const rik_chain *chain, const double *theta, size_t n,
                  double out_position[3], double out_quaternion[4]);

/* Worst-case error bounds for one configuration under the joint error
 * ball (sigma, k): out_bounds receives {P, O, M} where M = P + lambda*O.
 * target_quat anchors the rotation bound's tangent space. */
rik_status rik_score(const rik_chain *chain, const double *theta, size_t n,
                     const double target_quat[4], double sigma, double k,
                     rik_metric_mode mode, const double *aux, double lambda,
                     double out_bounds[3]);

/* Full pipeline: sample ik_count IK solutions for the target pose, score
 * each, and select the robust one. out_theta (length n) receives the
 * minimizing solution and out_combined_bound its M. When the minimum M
 * exceeds epsilon the best infeasible candidate is still written and the
 * call returns RIK_NO_ROBUST_SOLUTION. position_only nonzero leaves the
 * orientation unconstrained. Deterministic for a fixed seed. */
rik_status rik_robust_ik(const rik_chain *chain, const double target_pos[3],
                         const double target_quat[4], double sigma, double k,
                         rik_metric_mode mode, const double *aux,
                         double lambda, double epsilon, size_t ik_count,
                         unsigned long long seed, int position_only,
                         double *out_theta, double *out_combined_bound);

#ifdef __cplusplus
}
#endif

#endif /* ROBUST_IK_H */
