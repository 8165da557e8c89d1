#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "inrpet/metrics_types.hpp"
#include "inrpet/projector.hpp"
#include "inrpet/siren.hpp"

namespace inrpet {

/// Poisson negative log-likelihood sum_i (yhat_i - y_i log yhat_i), with an
/// eps floor inside the log so models with zero background cannot produce
/// -inf. Bins with y_i = 0 contribute yhat_i only.
inline double poisson_loss(const std::vector<double>& y_hat, const std::vector<double>& y,
                           double eps = 1e-9) {
    require(y_hat.size() == y.size(), "poisson_loss: length mismatch");
    require(eps > 0.0, "poisson_loss: eps must be positive");
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        require(y[i] >= 0.0, "poisson_loss: measured counts must be non-negative");
        if (y_hat[i] < -eps)
            throw std::domain_error("poisson_loss: negative model sinogram value");
        loss += y_hat[i];
        if (y[i] > 0.0) loss -= y[i] * std::log(std::max(y_hat[i], eps));
    }
    return loss;
}

/// Elementwise derivative 1 - y_i / max(yhat_i, eps).
inline std::vector<double> poisson_loss_grad(const std::vector<double>& y_hat,
                                             const std::vector<double>& y, double eps = 1e-9) {
    require(y_hat.size() == y.size(), "poisson_loss_grad: length mismatch");
    require(eps > 0.0, "poisson_loss_grad: eps must be positive");
    std::vector<double> g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        require(y[i] >= 0.0, "poisson_loss_grad: measured counts must be non-negative");
        if (y_hat[i] < -eps)
            throw std::domain_error("poisson_loss_grad: negative model sinogram value");
        g[i] = 1.0 - y[i] / std::max(y_hat[i], eps);
    }
    return g;
}

/// One optimizer-trajectory row.
struct EvalRecord {
    int iter = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double time_s = 0.0;
    std::optional<MetricsReport> metrics;
};

/// Differentiable reconstruction objective over network parameters:
/// loss(theta) = PoissonNLL(forward_project(model, render(theta)), y).
/// eval() runs the exact adjoint chain: the back-projected loss gradient is
/// handed to the network as per-pixel output weights.
class SirenObjective {
  public:
    SirenObjective(const SystemModel& model, Sinogram measured, double eps = 1e-9,
                   int n_threads = 1)
        : model_(model), measured_(std::move(measured)), eps_(eps), n_threads_(n_threads),
          coords_(make_coord_grid(model.width, model.height)) {
        model_.validate();
        require(measured_.geometry == model_.geometry,
                "SirenObjective: measured sinogram geometry mismatch");
        for (double v : measured_.values)
            require(v >= 0.0, "SirenObjective: measured counts must be non-negative");
        require(eps_ > 0.0, "SirenObjective: eps must be positive");
    }

    double eval(const SirenParams& params, SirenGradient& grad_out, EvalRecord* record = nullptr,
                ImageGrid* rendered_out = nullptr) const {
        const auto t0 = std::chrono::steady_clock::now();

        ForwardCache cache;
        const Eigen::VectorXd values = siren_forward(params, coords_, &cache, n_threads_);
        ImageGrid lambda(model_.width, model_.height, model_.pixel_size);
        for (std::size_t i = 0; i < lambda.npix(); ++i)
            lambda.values[i] = values[static_cast<Eigen::Index>(i)];

        const Sinogram y_hat = forward_project(model_, lambda, n_threads_);
        const double loss = poisson_loss(y_hat.values, measured_.values, eps_);
        const std::vector<double> sino_grad =
            poisson_loss_grad(y_hat.values, measured_.values, eps_);
        const ImageGrid pixel_grad = back_project(model_, sino_grad, n_threads_);

        Eigen::VectorXd output_grad(static_cast<Eigen::Index>(pixel_grad.npix()));
        for (std::size_t i = 0; i < pixel_grad.npix(); ++i)
            output_grad[static_cast<Eigen::Index>(i)] = pixel_grad.values[i];
        grad_out = siren_backward(params, cache, output_grad, n_threads_);

        if (record) {
            record->loss = loss;
            record->grad_norm = pack_gradient(grad_out).norm();
            record->time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        if (rendered_out) *rendered_out = std::move(lambda);
        return loss;
    }

    const SystemModel& model() const { return model_; }
    const Sinogram& measured() const { return measured_; }
    const CoordGrid& coords() const { return coords_; }
    double eps() const { return eps_; }
    int n_threads() const { return n_threads_; }

  private:
    const SystemModel& model_;
    Sinogram measured_;
    double eps_;
    int n_threads_;
    CoordGrid coords_;
};

}  // namespace inrpet
