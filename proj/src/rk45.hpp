#pragma once

#include <algorithm>
#include <cmath>

#include "netalloc/dynamics.hpp"
#include "netalloc/errors.hpp"

namespace netalloc::detail {

// Dormand-Prince 5(4) with FSAL, adaptive steps, uniform save grid.
template <typename Rhs>
Trajectory integrate_rk45(Rhs&& rhs, const Eigen::VectorXd& y0, double t_end,
                          double tol, int save_points) {
    if (!(t_end > 0.0)) throw InputError("t_end must be positive");
    if (!(tol > 0.0)) throw InputError("tol must be positive");
    if (save_points < 1) throw InputError("save_points must be >= 1");

    constexpr double c_a21 = 1.0 / 5;
    constexpr double c_a31 = 3.0 / 40, c_a32 = 9.0 / 40;
    constexpr double c_a41 = 44.0 / 45, c_a42 = -56.0 / 15, c_a43 = 32.0 / 9;
    constexpr double c_a51 = 19372.0 / 6561, c_a52 = -25360.0 / 2187,
                     c_a53 = 64448.0 / 6561, c_a54 = -212.0 / 729;
    constexpr double c_a61 = 9017.0 / 3168, c_a62 = -355.0 / 33,
                     c_a63 = 46732.0 / 5247, c_a64 = 49.0 / 176,
                     c_a65 = -5103.0 / 18656;
    constexpr double c_b1 = 35.0 / 384, c_b3 = 500.0 / 1113, c_b4 = 125.0 / 192,
                     c_b5 = -2187.0 / 6784, c_b6 = 11.0 / 84;
    constexpr double c_e1 = 5179.0 / 57600, c_e3 = 7571.0 / 16695,
                     c_e4 = 393.0 / 640, c_e5 = -92097.0 / 339200,
                     c_e6 = 187.0 / 2100, c_e7 = 1.0 / 40;

    Trajectory traj;
    traj.times.reserve(save_points + 1);
    traj.states.reserve(save_points + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(y0);

    Eigen::VectorXd y = y0;
    double t = 0.0;
    double h = t_end / (100.0 * save_points);
    const double t_eps = 1e-14 * t_end;
    Eigen::VectorXd k1 = rhs(y), k2, k3, k4, k5, k6, k7;

    for (int s = 1; s <= save_points; ++s) {
        const double t_save = t_end * s / save_points;
        while (t_save - t > t_eps) {
            double h_try = std::min(h, t_save - t);
            k2 = rhs(y + h_try * (c_a21 * k1));
            k3 = rhs(y + h_try * (c_a31 * k1 + c_a32 * k2));
            k4 = rhs(y + h_try * (c_a41 * k1 + c_a42 * k2 + c_a43 * k3));
            k5 = rhs(y + h_try * (c_a51 * k1 + c_a52 * k2 + c_a53 * k3 + c_a54 * k4));
            k6 = rhs(y + h_try * (c_a61 * k1 + c_a62 * k2 + c_a63 * k3 +
                                  c_a64 * k4 + c_a65 * k5));
            Eigen::VectorXd y5 = y + h_try * (c_b1 * k1 + c_b3 * k3 + c_b4 * k4 +
                                              c_b5 * k5 + c_b6 * k6);
            k7 = rhs(y5);
            Eigen::VectorXd y4 = y + h_try * (c_e1 * k1 + c_e3 * k3 + c_e4 * k4 +
                                              c_e5 * k5 + c_e6 * k6 + c_e7 * k7);

            // Mixed error control, atol = rtol = tol.
            double err = 0.0;
            for (int i = 0; i < y.size(); ++i) {
                double sc = 1.0 + std::max(std::abs(y(i)), std::abs(y5(i)));
                err = std::max(err, std::abs(y5(i) - y4(i)) / sc);
            }
            if (err <= tol) {
                t += h_try;
                y = y5;
                k1 = k7;  // FSAL
            }
            double factor = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            h = h_try * std::clamp(factor, 0.2, 5.0);
            if (h < t_eps)
                throw ConvergenceError("rk45: step size underflow", err);
        }
        t = t_save;
        traj.times.push_back(t_save);
        traj.states.push_back(y);
    }
    return traj;
}

}  // namespace netalloc::detail
