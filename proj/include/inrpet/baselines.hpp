#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include "inrpet/core.hpp"
#include "inrpet/objective.hpp"
#include "inrpet/projector.hpp"

namespace inrpet {

struct ReconResult {
    ImageGrid image;
    std::vector<EvalRecord> trajectory;  // loss column is the Poisson NLL of each iterate
};

/// Per-iteration hook for metric logging; may decorate the record.
using IterationCallback = std::function<void(EvalRecord&, const ImageGrid&)>;

namespace detail {

inline std::vector<double> sensitivity_image(const SystemModel& model, int n_threads) {
    const std::vector<double> ones(static_cast<std::size_t>(model.geometry.n_rays()), 1.0);
    std::vector<double> scaled(ones.size());
    for (std::size_t b = 0; b < ones.size(); ++b) scaled[b] = model.atten[b] * model.sens[b];
    std::vector<double> img;
    model.geom_matrix.apply_adjoint(scaled, img, n_threads);
    return img;
}

}  // namespace detail

/// MLEM for the model y ~ Poisson(A lambda + r):
///   lambda <- (lambda / A^T 1) * A^T (y / (A lambda + r)).
/// Pixels with zero total sensitivity (outside the field of view) stay 0.
/// The trajectory records the Poisson NLL of each updated iterate.
inline ReconResult mlem(const Sinogram& measured, const SystemModel& model, int iterations,
                        const ImageGrid& init, int n_threads = 1,
                        const IterationCallback& callback = {}) {
    model.validate();
    require(measured.geometry == model.geometry, "mlem: sinogram geometry mismatch");
    require(init.width == model.width && init.height == model.height, "mlem: init shape mismatch");
    require(iterations >= 0, "mlem: iterations must be >= 0");
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<double> sens_img = detail::sensitivity_image(model, n_threads);
    ImageGrid lambda(model.width, model.height, model.pixel_size);
    for (std::size_t j = 0; j < lambda.npix(); ++j) {
        if (sens_img[j] > 0.0) {
            require(init.values[j] > 0.0, "mlem: init must be positive inside the field of view");
            lambda.values[j] = init.values[j];
        }
    }

    ReconResult result;
    Sinogram y_hat = forward_project(model, lambda, n_threads);
    std::vector<double> ratio(y_hat.values.size());
    for (int k = 1; k <= iterations; ++k) {
        for (std::size_t b = 0; b < ratio.size(); ++b)
            ratio[b] = y_hat.values[b] > 0.0 ? measured.values[b] / y_hat.values[b] : 0.0;
        const ImageGrid corr = back_project(model, ratio, n_threads);
        for (std::size_t j = 0; j < lambda.npix(); ++j)
            lambda.values[j] = sens_img[j] > 0.0
                                   ? lambda.values[j] * corr.values[j] / sens_img[j]
                                   : 0.0;
        y_hat = forward_project(model, lambda, n_threads);

        EvalRecord record;
        record.iter = k;
        record.loss = poisson_loss(y_hat.values, measured.values);
        record.time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (callback) callback(record, lambda);
        result.trajectory.push_back(std::move(record));
    }
    result.image = std::move(lambda);
    return result;
}

/// Gradient of the quadratic 8-neighborhood penalty
///   R(lambda) = 1/2 sum over unordered neighbor pairs of w_jl (lambda_j - lambda_l)^2,
/// i.e. (grad R)_j = sum over neighbors of w_jl (lambda_j - lambda_l). Edge
/// neighbors weigh 1, diagonal neighbors 1/sqrt(2); border pixels use their
/// existing neighbors only.
inline ImageGrid penalty_grad(const ImageGrid& image, double w_edge = 1.0,
                              double w_diag = 1.0 / std::sqrt(2.0)) {
    ImageGrid out(image.width, image.height, image.pixel_size);
    const int w = image.width, h = image.height;
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            const double c = image.at(ix, iy);
            double acc = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = ix + dx, ny = iy + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const double wgt = (dx != 0 && dy != 0) ? w_diag : w_edge;
                    acc += wgt * (c - image.at(nx, ny));
                }
            }
            out.at(ix, iy) = acc;
        }
    }
    return out;
}

/// Penalty value matching penalty_grad (unordered pairs counted once).
inline double penalty_value(const ImageGrid& image, double w_edge = 1.0,
                            double w_diag = 1.0 / std::sqrt(2.0)) {
    const int w = image.width, h = image.height;
    static constexpr int kOff[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
    double acc = 0.0;
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            for (const auto& off : kOff) {
                const int nx = ix + off[0], ny = iy + off[1];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                const double wgt = (off[0] != 0 && off[1] != 0) ? w_diag : w_edge;
                const double d = image.at(ix, iy) - image.at(nx, ny);
                acc += 0.5 * wgt * d * d;
            }
        }
    }
    return acc;
}

struct BsremConfig {
    double beta = 0.355;
    int n_subsets = 10;
    int iterations = 30;
    double alpha0 = 1.0;       // relaxation alpha_k = alpha0 / (1 + gamma k)
    double relax_gamma = 0.1;
    double floor = 1e-12;

    void validate(int n_angles) const {
        require(beta >= 0.0, "BsremConfig: beta must be >= 0");
        require(n_subsets >= 1, "BsremConfig: n_subsets must be >= 1");
        require(n_angles % n_subsets == 0, "BsremConfig: n_subsets must divide n_angles");
        require(iterations >= 0, "BsremConfig: iterations must be >= 0");
        require(alpha0 > 0.0 && relax_gamma >= 0.0, "BsremConfig: invalid relaxation");
        require(floor > 0.0, "BsremConfig: floor must be positive");
    }
};

namespace detail {

/// Back-projection restricted to the rows of one angle subset.
inline std::vector<double> subset_back(const SystemModel& model, const std::vector<double>& vals,
                                       int subset, int n_subsets) {
    const auto& A = model.geom_matrix;
    std::vector<double> img(static_cast<std::size_t>(A.cols), 0.0);
    const int n_bins = model.geometry.n_bins;
    for (int a = subset; a < model.geometry.n_angles; a += n_subsets) {
        const std::int64_t row0 = static_cast<std::int64_t>(a) * n_bins;
        for (int b = 0; b < n_bins; ++b) {
            const std::int64_t r = row0 + b;
            const double s = model.atten[r] * model.sens[r] * vals[r];
            if (s == 0.0) continue;
            for (std::int64_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
                img[A.col_idx[k]] += A.weight[k] * s;
        }
    }
    return img;
}

}  // namespace detail

/// BSREM-style relaxed preconditioned ascent on the penalized Poisson
/// likelihood. Subset b holds every n_subsets-th angle; one iteration sweeps
/// all subsets with
///   lambda <- max(lambda + alpha_k D(lambda) (A_b^T(y_b/yhat_b) - A_b^T 1
///                  - beta/n_subsets grad R(lambda)), floor),
/// D(lambda) = lambda / (A^T 1 / n_subsets). The trajectory records the
/// Poisson NLL after each full iteration.
inline ReconResult bsrem(const Sinogram& measured, const SystemModel& model,
                         const BsremConfig& config, const ImageGrid& init, int n_threads = 1,
                         const IterationCallback& callback = {}) {
    model.validate();
    config.validate(model.geometry.n_angles);
    require(measured.geometry == model.geometry, "bsrem: sinogram geometry mismatch");
    require(init.width == model.width && init.height == model.height, "bsrem: init shape mismatch");
    const auto t0 = std::chrono::steady_clock::now();

    const std::vector<double> sens_img = detail::sensitivity_image(model, n_threads);
    ImageGrid lambda(model.width, model.height, model.pixel_size);
    for (std::size_t j = 0; j < lambda.npix(); ++j) {
        if (sens_img[j] > 0.0) {
            require(init.values[j] > 0.0, "bsrem: init must be positive inside the field of view");
            lambda.values[j] = std::max(init.values[j], config.floor);
        }
    }

    const int n_bins = model.geometry.n_bins;
    const auto n_rays = static_cast<std::size_t>(model.geometry.n_rays());

    // Per-subset sensitivity images A_b^T 1.
    std::vector<std::vector<double>> subset_sens(config.n_subsets);
    {
        const std::vector<double> ones(n_rays, 1.0);
        for (int s = 0; s < config.n_subsets; ++s)
            subset_sens[s] = detail::subset_back(model, ones, s, config.n_subsets);
    }

    ReconResult result;
    std::vector<double> proj(n_rays, 0.0), ratio(n_rays, 0.0);
    for (int k = 0; k < config.iterations; ++k) {
        const double alpha = config.alpha0 / (1.0 + config.relax_gamma * k);
        for (int s = 0; s < config.n_subsets; ++s) {
            // Subset forward projection ratio y / (A lambda + r).
            const auto& A = model.geom_matrix;
            for (int a = s; a < model.geometry.n_angles; a += config.n_subsets) {
                const std::int64_t row0 = static_cast<std::int64_t>(a) * n_bins;
                for (int b = 0; b < n_bins; ++b) {
                    const std::int64_t r = row0 + b;
                    double acc = 0.0;
                    for (std::int64_t kk = A.row_ptr[r]; kk < A.row_ptr[r + 1]; ++kk)
                        acc += A.weight[kk] * lambda.values[A.col_idx[kk]];
                    const double y_hat =
                        model.atten[r] * model.sens[r] * acc + model.background[r];
                    ratio[r] = y_hat > 0.0 ? measured.values[r] / y_hat : 0.0;
                }
            }
            const std::vector<double> likelihood_term =
                detail::subset_back(model, ratio, s, config.n_subsets);
            const ImageGrid pgrad = config.beta > 0.0 ? penalty_grad(lambda)
                                                      : ImageGrid(model.width, model.height,
                                                                  model.pixel_size);
            for (std::size_t j = 0; j < lambda.npix(); ++j) {
                if (sens_img[j] <= 0.0) continue;
                const double precond = lambda.values[j] / (sens_img[j] / config.n_subsets);
                const double ascent = likelihood_term[j] - subset_sens[s][j] -
                                      (config.beta / config.n_subsets) * pgrad.values[j];
                lambda.values[j] = std::max(lambda.values[j] + alpha * precond * ascent,
                                            config.floor);
            }
        }

        const Sinogram y_hat = forward_project(model, lambda, n_threads);
        EvalRecord record;
        record.iter = k + 1;
        record.loss = poisson_loss(y_hat.values, measured.values);
        record.time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (callback) callback(record, lambda);
        result.trajectory.push_back(std::move(record));
    }
    result.image = std::move(lambda);
    return result;
}

}  // namespace inrpet
