#include "netalloc/spectral.hpp"

#include <cmath>

#include "netalloc/errors.hpp"

namespace netalloc {

namespace {

// Rayleigh quotient and sup-norm residual for the current iterate.
double rayleigh(const Eigen::MatrixXd& m, const Eigen::VectorXd& v,
                Eigen::VectorXd& mv) {
    mv.noalias() = m * v;
    return v.dot(mv) / v.squaredNorm();
}

// True iff the nonzero pattern of m has no directed cycle (then m is
// nilpotent and rho = 0; power iteration would only converge
// algebraically there).
bool is_nilpotent_pattern(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    std::vector<int> indeg(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m(i, j) != 0.0) ++indeg[i];
    std::vector<int> queue;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) queue.push_back(i);
    int removed = 0;
    for (size_t qi = 0; qi < queue.size(); ++qi) {
        int j = queue[qi];
        ++removed;
        for (int i = 0; i < n; ++i)
            if (m(i, j) != 0.0 && --indeg[i] == 0) queue.push_back(i);
    }
    return removed == n;
}

}  // namespace

DominantPair dominant_pair(const Eigen::MatrixXd& m, double tol, int max_iter,
                           bool with_left) {
    const int n = static_cast<int>(m.rows());
    if (n == 0 || m.cols() != n)
        throw InputError("dominant_pair: matrix must be square and nonempty");
    if ((m.array() < 0.0).any())
        throw InputError("dominant_pair: matrix must be entrywise nonnegative");
    if (!(tol > 0.0)) throw InputError("dominant_pair: tol must be positive");
    if (max_iter < 0) max_iter = default_power_iterations(n);

    // Nilpotent case, exact: rho = 0 and any node without outgoing
    // influence (zero column) spans an exact kernel eigenvector.
    if (is_nilpotent_pattern(m)) {
        DominantPair out;
        out.lambda1 = 0.0;
        out.right_vec = Eigen::VectorXd::Zero(n);
        for (int j = 0; j < n; ++j)
            if (m.col(j).isZero(0.0)) out.right_vec(j) = 1.0;
        out.iterations = 0;
        out.residual = 0.0;
        if (with_left) {
            out.left_vec = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < n; ++i)
                if (m.row(i).isZero(0.0)) out.left_vec(i) = 1.0;
            double scale = out.left_vec.dot(out.right_vec);
            if (scale > 0.0) out.left_vec /= scale;
        }
        return out;
    }

    // Iterate on the shifted matrix; all estimates below refer back to M.
    Eigen::MatrixXd ms = m;
    ms.diagonal().array() += 1.0;

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd prev1, prev2, mv(n);
    double residual = std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    double last_residual = residual;
    int it = 0;
    for (; it < max_iter; ++it) {
        prev2 = prev1;
        prev1 = v;
        mv.noalias() = ms * v;
        double norm = mv.lpNorm<Eigen::Infinity>();
        if (!(norm > 0.0)) {
            // Can only happen for the zero matrix after shift removal; the
            // shift keeps the diagonal at >= 1 so norm >= ||v||_inf.
            break;
        }
        v = mv / norm;

        lambda = rayleigh(m, v, mv);
        residual = (mv - lambda * v).lpNorm<Eigen::Infinity>() /
                   v.lpNorm<Eigen::Infinity>();
        if (residual <= tol) break;

        // Aitken restart when convergence stalls (complex or clustered
        // subdominant spectrum). Applied component-wise, safeguarded, and
        // clamped back into the nonnegative cone.
        if (it >= 2 && it % 40 == 0 && residual > 0.5 * last_residual) {
            Eigen::VectorXd accel = v;
            for (int i = 0; i < n; ++i) {
                double d1 = v(i) - prev1(i);
                double d2 = v(i) - 2.0 * prev1(i) + prev2(i);
                if (std::abs(d2) > 1e-14 * (std::abs(v(i)) + 1e-300)) {
                    double cand = v(i) - d1 * d1 / d2;
                    if (std::isfinite(cand) && cand >= 0.0) accel(i) = cand;
                }
            }
            double an = accel.lpNorm<Eigen::Infinity>();
            if (an > 0.0) v = accel / an;
        }
        if (it % 40 == 0) last_residual = residual;
    }

    if (residual > tol)
        throw ConvergenceError(
            "dominant_pair: power iteration did not reach tolerance", residual);

    DominantPair out;
    out.lambda1 = lambda;
    out.right_vec = v / v.lpNorm<Eigen::Infinity>();
    out.iterations = it + 1;
    out.residual = residual;

    if (with_left) {
        DominantPair lt = dominant_pair(m.transpose(), tol, max_iter, false);
        double scale = lt.right_vec.dot(out.right_vec);
        if (!(std::abs(scale) > 0.0))
            throw ConvergenceError(
                "dominant_pair: left/right eigenvectors are orthogonal "
                "(defective dominant eigenvalue)",
                residual);
        out.left_vec = lt.right_vec / scale;
    }
    return out;
}

double effective_eigenvalue(const WeightedDigraph& g,
                            const Eigen::VectorXd& beta,
                            const Eigen::VectorXd& delta, double tol,
                            int max_iter) {
    const int n = g.node_count();
    if (beta.size() != n || delta.size() != n)
        throw InputError("effective_eigenvalue: rate vectors must have length n");
    if ((beta.array() <= 0.0).any() || (delta.array() <= 0.0).any())
        throw InputError("effective_eigenvalue: rates must be strictly positive");

    const double shift = delta.maxCoeff() + 1.0;
    Eigen::MatrixXd m = beta.asDiagonal() * g.adjacency_matrix();
    m.diagonal() += (shift - delta.array()).matrix();
    return dominant_pair(m, tol, max_iter).lambda1 - shift;
}

bool is_irreducible(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 0) return false;
    if (n == 1) return true;
    // Strong connectivity of the nonzero pattern: forward and backward BFS
    // from node 0 must both reach everything.
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<char> seen(n, 0);
        std::vector<int> queue = {0};
        seen[0] = 1;
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            int v = queue[qi];
            for (int w = 0; w < n; ++w) {
                double entry = pass == 0 ? m(w, v) : m(v, w);
                if (entry != 0.0 && !seen[w]) {
                    seen[w] = 1;
                    queue.push_back(w);
                }
            }
        }
        if (static_cast<int>(queue.size()) != n) return false;
    }
    return true;
}

double sensitivity(const Eigen::MatrixXd& m, const Eigen::MatrixXd& dm,
                   double tol, int max_iter) {
    if (m.rows() != dm.rows() || m.cols() != dm.cols())
        throw InputError("sensitivity: increment shape mismatch");
    if (!is_irreducible(m))
        throw InputError("sensitivity: matrix must be irreducible");
    DominantPair p = dominant_pair(m, tol, max_iter, /*with_left=*/true);
    return p.left_vec.dot(dm * p.right_vec);
}

}  // namespace netalloc
