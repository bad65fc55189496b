#include <algorithm>
#include <cmath>
#include <numeric>

#include "netalloc/errors.hpp"
#include "netalloc/gp.hpp"

namespace netalloc {

namespace {

// Weighted affine regression in log space: fit target ~ c + a . l over rows
// of L with weights w. Returns (c, a).
std::pair<double, Eigen::VectorXd> affine_fit(const Eigen::MatrixXd& l,
                                              const Eigen::VectorXd& target,
                                              const Eigen::VectorXd& w) {
    const int s = static_cast<int>(l.rows());
    const int d = static_cast<int>(l.cols());
    Eigen::MatrixXd x(s, d + 1);
    x.col(0).setOnes();
    x.rightCols(d) = l;
    Eigen::MatrixXd xw = w.asDiagonal() * x;
    Eigen::MatrixXd ata = x.transpose() * xw;
    ata.diagonal().array() += 1e-12;
    Eigen::VectorXd sol = ata.ldlt().solve(x.transpose() * (w.asDiagonal() * target));
    return {sol(0), sol.tail(d)};
}

struct TermParams {
    double logc;
    Eigen::VectorXd a;
};

double max_rel_err(const std::vector<TermParams>& terms, const Eigen::MatrixXd& l,
                   const Eigen::VectorXd& v) {
    double worst = 0.0;
    for (int s = 0; s < l.rows(); ++s) {
        double q = 0.0;
        for (const TermParams& t : terms)
            q += std::exp(t.logc + t.a.dot(l.row(s)));
        worst = std::max(worst, std::abs(q - v(s)) / v(s));
    }
    return worst;
}

// Gauss-Newton on sum((log q(x_s) - log v_s)^2) with Levenberg damping.
void polish(std::vector<TermParams>& terms, const Eigen::MatrixXd& l,
            const Eigen::VectorXd& logv) {
    const int k = static_cast<int>(terms.size());
    const int d = static_cast<int>(l.cols());
    const int s = static_cast<int>(l.rows());
    const int np = k * (d + 1);

    auto pack = [&](const std::vector<TermParams>& t) {
        Eigen::VectorXd th(np);
        for (int i = 0; i < k; ++i) {
            th(i * (d + 1)) = t[i].logc;
            th.segment(i * (d + 1) + 1, d) = t[i].a;
        }
        return th;
    };
    auto unpack = [&](const Eigen::VectorXd& th) {
        std::vector<TermParams> t(k);
        for (int i = 0; i < k; ++i) {
            t[i].logc = th(i * (d + 1));
            t[i].a = th.segment(i * (d + 1) + 1, d);
        }
        return t;
    };
    auto residuals = [&](const std::vector<TermParams>& t, Eigen::VectorXd& r,
                         Eigen::MatrixXd* jac) {
        r.resize(s);
        if (jac) jac->setZero(s, np);
        for (int si = 0; si < s; ++si) {
            Eigen::VectorXd z(k);
            for (int i = 0; i < k; ++i) z(i) = t[i].logc + t[i].a.dot(l.row(si));
            double zmax = z.maxCoeff();
            Eigen::VectorXd w = (z.array() - zmax).exp();
            double sum = w.sum();
            r(si) = zmax + std::log(sum) - logv(si);
            if (jac) {
                w /= sum;
                for (int i = 0; i < k; ++i) {
                    (*jac)(si, i * (d + 1)) = w(i);
                    jac->block(si, i * (d + 1) + 1, 1, d) = w(i) * l.row(si);
                }
            }
        }
    };

    Eigen::VectorXd theta = pack(terms);
    Eigen::VectorXd r;
    Eigen::MatrixXd j;
    residuals(terms, r, &j);
    double cost = r.squaredNorm();
    double damp = 1e-6;
    for (int it = 0; it < 400; ++it) {
        Eigen::MatrixXd jtj = j.transpose() * j;
        jtj.diagonal().array() += damp;
        Eigen::VectorXd step = jtj.ldlt().solve(-j.transpose() * r);
        std::vector<TermParams> cand = unpack(theta + step);
        Eigen::VectorXd rc;
        residuals(cand, rc, nullptr);
        double cost_c = rc.squaredNorm();
        if (cost_c < cost) {
            theta += step;
            terms = std::move(cand);
            cost = cost_c;
            damp = std::max(damp * 0.3, 1e-13);
            residuals(terms, r, &j);
            if (step.lpNorm<Eigen::Infinity>() < 1e-15) break;
        } else {
            damp *= 10.0;
            if (damp > 1e10) break;
        }
    }
}

}  // namespace

Posynomial fit_posynomial(const std::vector<std::pair<Eigen::VectorXd, double>>& samples,
                          int n_terms, double* max_rel_error) {
    if (n_terms < 1) throw InputError("fit_posynomial: n_terms must be >= 1");
    if (samples.empty()) throw InputError("fit_posynomial: no samples");
    const int d = static_cast<int>(samples[0].first.size());
    const int s = static_cast<int>(samples.size());
    if (s < n_terms * (d + 1))
        throw InputError("fit_posynomial: need at least n_terms*(dim+1) samples");

    Eigen::MatrixXd l(s, d);
    Eigen::VectorXd v(s), logv(s);
    for (int i = 0; i < s; ++i) {
        const auto& [x, val] = samples[i];
        if (static_cast<int>(x.size()) != d)
            throw InputError("fit_posynomial: inconsistent sample dimension");
        if ((x.array() <= 0.0).any() || !(val > 0.0))
            throw InputError("fit_posynomial: samples must be strictly positive");
        l.row(i) = x.array().log().matrix();
        v(i) = val;
        logv(i) = std::log(val);
    }

    // Degenerate inputs: every x identical leaves the exponents unidentifiable.
    if ((l.rowwise() - l.row(0)).lpNorm<Eigen::Infinity>() < 1e-14)
        throw InputError("fit_posynomial: all sample points are identical");

    // Initialization A: partition samples into contiguous groups along the
    // most-spread log coordinate and fit one monomial per group.
    int spread_col = 0;
    double best_spread = -1.0;
    for (int c = 0; c < d; ++c) {
        double sp = l.col(c).maxCoeff() - l.col(c).minCoeff();
        if (sp > best_spread) {
            best_spread = sp;
            spread_col = c;
        }
    }
    std::vector<int> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return l(a, spread_col) < l(b, spread_col); });

    std::vector<TermParams> init_groups(n_terms);
    for (int k = 0; k < n_terms; ++k) {
        int lo = k * s / n_terms;
        int hi = std::max((k + 1) * s / n_terms, lo + 1);
        Eigen::VectorXd w = Eigen::VectorXd::Constant(s, 1e-9);
        for (int i = lo; i < hi && i < s; ++i) w(order[i]) = 1.0;
        // Each group's target is an equal share of the sample value.
        Eigen::VectorXd target = logv.array() - std::log(double(n_terms));
        auto [c0, a0] = affine_fit(l, target, w);
        init_groups[k] = {c0, a0};
    }

    // Initialization B: exponent ladder 0..K-1 on the spread coordinate
    // (suits series-like curves), equal coefficient split.
    std::vector<TermParams> init_ladder(n_terms);
    for (int k = 0; k < n_terms; ++k) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
        a(spread_col) = k;
        init_ladder[k] = {-std::log(double(n_terms)), a};
    }

    auto refine = [&](std::vector<TermParams> terms, int em_rounds) {
        // Proportional-split rounds: split each sample value across terms
        // by their current share, refit each term by weighted regression.
        for (int round = 0; round < em_rounds; ++round) {
            Eigen::MatrixXd share(s, n_terms);
            for (int i = 0; i < s; ++i) {
                Eigen::VectorXd z(n_terms);
                for (int k = 0; k < n_terms; ++k)
                    z(k) = terms[k].logc + terms[k].a.dot(l.row(i));
                double zmax = z.maxCoeff();
                Eigen::VectorXd e = (z.array() - zmax).exp();
                share.row(i) = (e / e.sum()).transpose();
            }
            for (int k = 0; k < n_terms; ++k) {
                Eigen::VectorXd w = share.col(k).cwiseMax(1e-12);
                Eigen::VectorXd target =
                    logv.array() + share.col(k).array().max(1e-300).log();
                auto [c0, a0] = affine_fit(l, target, w);
                terms[k] = {c0, a0};
            }
        }
        polish(terms, l, logv);
        return terms;
    };

    std::vector<TermParams> best = refine(init_groups, 60);
    double best_err = max_rel_err(best, l, v);
    if (n_terms > 1) {
        // The proportional split tends to merge series-like terms, so the
        // ladder start goes straight to the local polish.
        std::vector<TermParams> alt = refine(init_ladder, 0);
        double alt_err = max_rel_err(alt, l, v);
        if (alt_err < best_err) {
            best = std::move(alt);
            best_err = alt_err;
        }
    }

    Posynomial p;
    for (const TermParams& t : best) {
        Monomial m(std::exp(t.logc));
        for (int c = 0; c < d; ++c)
            if (t.a(c) != 0.0) m.mul(c, t.a(c));
        p += m;
    }
    if (max_rel_error) *max_rel_error = best_err;
    return p;
}

}  // namespace netalloc
