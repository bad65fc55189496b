#pragma once

#include <Eigen/Dense>

#include "netalloc/graph.hpp"

namespace netalloc {

// Dominant eigenpair of a nonnegative matrix. right_vec is normalized to
// sup-norm one; left_vec, when requested, is scaled so that
// left_vec.dot(right_vec) == 1 (the normalization that makes the
// first-order perturbation formula exact).
struct DominantPair {
    double lambda1 = 0.0;
    Eigen::VectorXd right_vec;
    Eigen::VectorXd left_vec;  // size 0 unless requested
    int iterations = 0;
    double residual = 0.0;
};

inline constexpr double kSpectralTol = 1e-10;

inline int default_power_iterations(int n) { return 100 * n + 1000; }

// Power iteration on M + I. The +I shift makes the dominant eigenvalue of
// the shifted matrix equal to rho(M) + 1 (real, strictly dominant in
// modulus for any nonnegative M), so the iteration converges even when M
// itself has complex eigenvalues of maximal modulus (e.g. permutation
// matrices). Start vector is all-ones; on stagnation the iterate is
// restarted from a component-wise Aitken extrapolation.
// Throws ConvergenceError (carrying the best residual) if the residual
// ||M v - lambda v||_inf / ||v||_inf does not reach tol.
DominantPair dominant_pair(const Eigen::MatrixXd& m, double tol = kSpectralTol,
                           int max_iter = -1, bool with_left = false);

// lambda_1(diag(beta) * A_G - diag(delta)), evaluated through the shift
// identity lambda_1(B A_G + D_hat) = lambda_1(B A_G - D) + Delta_bar + 1
// with D_hat = (Delta_bar + 1) I - D, Delta_bar = max delta_i. The shifted
// matrix is nonnegative, so dominant_pair applies directly.
double effective_eigenvalue(const WeightedDigraph& g,
                            const Eigen::VectorXd& beta,
                            const Eigen::VectorXd& delta,
                            double tol = kSpectralTol, int max_iter = -1);

// First-order change of the spectral radius under the increment dm:
//   rho(M + dM) - rho(M) = w^T dM v + o(||dM||),
// with left/right eigenvectors normalized w^T v = 1. M must be
// irreducible (both eigenvectors strictly positive); throws InputError
// otherwise.
double sensitivity(const Eigen::MatrixXd& m, const Eigen::MatrixXd& dm,
                   double tol = kSpectralTol, int max_iter = -1);

// True iff the directed graph of the nonzero pattern of m is strongly
// connected.
bool is_irreducible(const Eigen::MatrixXd& m);

}  // namespace netalloc
