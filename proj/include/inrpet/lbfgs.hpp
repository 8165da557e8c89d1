#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "inrpet/core.hpp"
#include "inrpet/objective.hpp"

namespace inrpet {

struct LbfgsConfig {
    int memory = 10;
    int max_iterations = 50;
    double initial_step = 1.0;  // the "learning rate": first trial step of each line search
    double armijo_c1 = 1e-4;
    double backtrack_factor = 0.5;
    int max_line_search_trials = 25;
    double grad_tolerance = 1e-7;        // scaled by max(1, |loss|)
    double loss_change_tolerance = 1e-10;  // relative

    void validate() const {
        require(memory >= 1, "LbfgsConfig: memory must be >= 1");
        require(max_iterations >= 0, "LbfgsConfig: max_iterations must be >= 0");
        require(initial_step > 0.0, "LbfgsConfig: initial_step must be positive");
        require(armijo_c1 > 0.0 && armijo_c1 < 1.0, "LbfgsConfig: armijo_c1 must be in (0,1)");
        require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
                "LbfgsConfig: backtrack_factor must be in (0,1)");
        require(max_line_search_trials >= 1, "LbfgsConfig: need at least one line search trial");
        require(grad_tolerance > 0.0 && loss_change_tolerance > 0.0,
                "LbfgsConfig: tolerances must be positive");
    }
};

enum class LbfgsStatus {
    converged_gradient,
    converged_loss,
    max_iterations,
    line_search_failed,
};

inline const char* to_string(LbfgsStatus s) {
    switch (s) {
        case LbfgsStatus::converged_gradient: return "converged (gradient)";
        case LbfgsStatus::converged_loss: return "converged (loss change)";
        case LbfgsStatus::max_iterations: return "max iterations";
        case LbfgsStatus::line_search_failed: return "line search failed";
    }
    return "unknown";
}

struct LbfgsResult {
    Eigen::VectorXd x;  // best-loss parameters seen
    double loss = 0.0;
    LbfgsStatus status = LbfgsStatus::max_iterations;
    int iterations = 0;
    std::vector<EvalRecord> trajectory;  // one record per accepted iteration
};

/// Objective callback: writes the gradient at x into grad and returns the loss.
using LbfgsObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Called after each accepted iteration; may decorate the record (e.g. with
/// image metrics) before it is stored in the trajectory.
using LbfgsCallback = std::function<void(EvalRecord& record, const Eigen::VectorXd& x)>;

/// Limited-memory BFGS with two-loop recursion and backtracking Armijo line
/// search. Curvature pairs with s.y <= 1e-10 |s||y| are skipped to preserve a
/// positive-definite inverse Hessian model. If a line search fails, one
/// steepest-descent retry at half the initial step is attempted; two
/// consecutive fallback iterations terminate the run.
inline LbfgsResult run_lbfgs(const LbfgsObjective& objective, const Eigen::VectorXd& x0,
                             const LbfgsConfig& config, const LbfgsCallback& callback = {}) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    Eigen::VectorXd x = x0;
    Eigen::VectorXd g(x.size());
    double f = objective(x, g);

    LbfgsResult result;
    result.x = x;
    result.loss = f;

    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;  // (s, y)
    Eigen::VectorXd d(x.size()), x_new(x.size()), g_new(x.size());
    int consecutive_fallbacks = 0;

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        if (g.norm() <= config.grad_tolerance * std::max(1.0, std::abs(f))) {
            result.status = LbfgsStatus::converged_gradient;
            break;
        }

        // Two-loop recursion for d = -H g.
        d = -g;
        std::vector<double> alpha(pairs.size());
        for (std::size_t i = pairs.size(); i-- > 0;) {
            const auto& [s, y] = pairs[i];
            const double rho = 1.0 / y.dot(s);
            alpha[i] = rho * s.dot(d);
            d -= alpha[i] * y;
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            d *= s.dot(y) / y.dot(y);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [s, y] = pairs[i];
            const double rho = 1.0 / y.dot(s);
            const double beta = rho * y.dot(d);
            d += (alpha[i] - beta) * s;
        }
        d = -d;

        double dg = d.dot(g);
        if (!(dg < 0.0)) {  // not a descent direction; reset to steepest descent
            d = -g;
            dg = -g.squaredNorm();
            pairs.clear();
        }

        auto line_search = [&](double step0) -> double {
            double step = step0;
            for (int trial = 0; trial < config.max_line_search_trials; ++trial) {
                x_new = x + step * d;
                const double f_new = objective(x_new, g_new);
                if (std::isfinite(f_new) && f_new <= f + config.armijo_c1 * step * dg)
                    return f_new;
                step *= config.backtrack_factor;
            }
            return std::numeric_limits<double>::quiet_NaN();
        };

        double f_new = line_search(config.initial_step);
        bool used_fallback = false;
        if (!std::isfinite(f_new)) {
            used_fallback = true;
            ++consecutive_fallbacks;
            if (consecutive_fallbacks >= 2) {
                result.status = LbfgsStatus::line_search_failed;
                break;
            }
            d = -g;
            dg = -g.squaredNorm();
            f_new = line_search(0.5 * config.initial_step);
            if (!std::isfinite(f_new)) {
                result.status = LbfgsStatus::line_search_failed;
                break;
            }
        }
        if (!used_fallback) consecutive_fallbacks = 0;

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-10 * s.norm() * yv.norm()) {
            pairs.emplace_back(std::move(s), std::move(yv));
            if (static_cast<int>(pairs.size()) > config.memory) pairs.pop_front();
        }

        const double f_prev = f;
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        result.iterations = iter;

        if (f < result.loss) {
            result.loss = f;
            result.x = x;
        }

        EvalRecord record;
        record.iter = iter;
        record.loss = f;
        record.grad_norm = g.norm();
        record.time_s = elapsed();
        if (callback) callback(record, x);
        result.trajectory.push_back(std::move(record));

        if (std::abs(f_prev - f) < config.loss_change_tolerance * std::max(1.0, std::abs(f))) {
            result.status = LbfgsStatus::converged_loss;
            break;
        }
    }
    if (result.status == LbfgsStatus::max_iterations && result.iterations == 0 &&
        g.norm() <= config.grad_tolerance * std::max(1.0, std::abs(f)))
        result.status = LbfgsStatus::converged_gradient;
    return result;
}

}  // namespace inrpet
