#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "inrpet/core.hpp"
#include "inrpet/parallel.hpp"

namespace inrpet {

struct SirenConfig {
    int hidden_layers = 4;  // sine layers; one softplus output layer is added
    int features = 256;
    double omega0 = 25.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(hidden_layers >= 1, "SirenConfig: hidden_layers must be >= 1");
        require(features >= 1, "SirenConfig: features must be >= 1");
        require(omega0 > 0.0, "SirenConfig: omega0 must be positive");
    }
};

/// Layered affine parameters for the coordinate network
/// (x,y) -> softplus(W_L sin(omega0 (...)) + b_L). Dimension chain is
/// 2 -> features -> ... -> features -> 1.
struct SirenParams {
    std::vector<Eigen::MatrixXd> weights;  // weights[l] maps layer l-1 outputs to layer l
    std::vector<Eigen::VectorXd> biases;
    double omega0 = 25.0;

    int n_layers() const { return static_cast<int>(weights.size()); }
    int hidden_layers() const { return n_layers() - 1; }

    std::int64_t n_parameters() const {
        std::int64_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l)
            n += weights[l].size() + biases[l].size();
        return n;
    }

    void validate() const {
        require(!weights.empty() && weights.size() == biases.size(),
                "SirenParams: empty or inconsistent layer lists");
        require(weights.front().cols() == 2, "SirenParams: input dimension must be 2");
        require(weights.back().rows() == 1, "SirenParams: output dimension must be 1");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            require(biases[l].size() == weights[l].rows(), "SirenParams: bias length mismatch");
            if (l > 0)
                require(weights[l].cols() == weights[l - 1].rows(),
                        "SirenParams: layer dimension chain broken");
        }
        require(omega0 > 0.0, "SirenParams: omega0 must be positive");
    }

    void require_finite() const {
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw std::domain_error("SirenParams: non-finite parameter value");
    }
};

/// Gradient with respect to SirenParams, same layer layout.
struct SirenGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// Pixel-center coordinates in [-1,1]^2, row-major pixel order. The outermost
/// pixel centers land exactly on +-1; a single-pixel axis maps to 0.
struct CoordGrid {
    int width = 0;
    int height = 0;
    Eigen::Matrix2Xd points;
};

inline CoordGrid make_coord_grid(int width, int height) {
    require(width > 0 && height > 0, "make_coord_grid: dimensions must be positive");
    CoordGrid grid;
    grid.width = width;
    grid.height = height;
    grid.points.resize(2, static_cast<Eigen::Index>(width) * height);
    for (int iy = 0; iy < height; ++iy) {
        const double y = height == 1 ? 0.0 : -1.0 + 2.0 * iy / (height - 1);
        for (int ix = 0; ix < width; ++ix) {
            const double x = width == 1 ? 0.0 : -1.0 + 2.0 * ix / (width - 1);
            const Eigen::Index p = static_cast<Eigen::Index>(iy) * width + ix;
            grid.points(0, p) = x;
            grid.points(1, p) = y;
        }
    }
    return grid;
}

/// SIREN initialization: the first layer is Uniform(-1/fan_in, 1/fan_in) with
/// fan_in = 2; deeper layers are Uniform(-sqrt(6/fan_in)/omega0, +...). Biases
/// start at zero. Weight draws are row-major per layer from one seeded stream.
inline SirenParams init_siren(const SirenConfig& config) {
    config.validate();
    SirenParams params;
    params.omega0 = config.omega0;
    std::vector<int> dims;
    dims.push_back(2);
    for (int l = 0; l < config.hidden_layers; ++l) dims.push_back(config.features);
    dims.push_back(1);

    std::mt19937_64 eng(config.seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double bound =
            l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / config.omega0;
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = uniform_in(eng, -bound, bound);
        params.weights.push_back(std::move(w));
        params.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    return params;
}

inline double siren_init_bound(int fan_in, double omega0, bool first_layer) {
    return first_layer ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / omega0;
}

namespace detail {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr std::int64_t kSirenBlock = 2048;

}  // namespace detail

/// Per-block pre-activations kept for the backward pass. Activations are
/// recomputed from them, which halves the cache footprint.
struct ForwardCache {
    struct Block {
        std::int64_t start = 0;
        std::int64_t count = 0;
        Eigen::Matrix2Xd input;
        std::vector<Eigen::MatrixXd> z_hidden;  // pre-activations W h + b
        Eigen::RowVectorXd z_out;
    };
    std::int64_t batch = 0;
    std::vector<Block> blocks;
};

/// Evaluates the network on every coordinate. Hidden layers compute
/// sin(omega0 * (W h + b)); the output layer applies a numerically safe
/// softplus, so every value is strictly positive.
inline Eigen::VectorXd siren_forward(const SirenParams& params, const CoordGrid& coords,
                                     ForwardCache* cache = nullptr, int n_threads = 1) {
    params.validate();
    params.require_finite();
    const std::int64_t n = coords.points.cols();
    require(n > 0, "siren_forward: empty coordinate grid");

    const std::int64_t n_blocks = (n + detail::kSirenBlock - 1) / detail::kSirenBlock;
    if (cache) {
        cache->batch = n;
        cache->blocks.assign(static_cast<std::size_t>(n_blocks), {});
    }
    Eigen::VectorXd out(n);
    const int hidden = params.hidden_layers();
    const double w0 = params.omega0;

    parallel_blocks(n, detail::kSirenBlock, n_threads,
                    [&](std::int64_t blk, std::int64_t lo, std::int64_t hi) {
                        const auto nb = static_cast<Eigen::Index>(hi - lo);
                        Eigen::MatrixXd h = coords.points.middleCols(lo, nb);
                        ForwardCache::Block* cb = cache ? &cache->blocks[blk] : nullptr;
                        if (cb) {
                            cb->start = lo;
                            cb->count = nb;
                            cb->input = coords.points.middleCols(lo, nb);
                            cb->z_hidden.resize(hidden);
                        }
                        for (int l = 0; l < hidden; ++l) {
                            Eigen::MatrixXd z =
                                (params.weights[l] * h).colwise() + params.biases[l];
                            h = (w0 * z.array()).sin();
                            if (cb) cb->z_hidden[l] = std::move(z);
                        }
                        Eigen::RowVectorXd z_out =
                            (params.weights[hidden] * h).colwise() + params.biases[hidden];
                        for (Eigen::Index i = 0; i < nb; ++i)
                            out[lo + i] = detail::softplus(z_out[i]);
                        if (cb) cb->z_out = std::move(z_out);
                    });
    return out;
}

/// Exact gradient of sum_p output_grad[p] * f(theta | coord_p) with respect to
/// theta. The cache must come from the matching forward call. Per-block
/// contributions are merged in block order, so the result does not depend on
/// the thread count.
inline SirenGradient siren_backward(const SirenParams& params, const ForwardCache& cache,
                                    const Eigen::VectorXd& output_grad, int n_threads = 1) {
    params.validate();
    require(output_grad.size() == cache.batch,
            "siren_backward: output gradient length does not match cache batch");
    const int hidden = params.hidden_layers();
    for (const auto& blk : cache.blocks)
        require(static_cast<int>(blk.z_hidden.size()) == hidden,
                "siren_backward: cache does not match parameter layout");
    const double w0 = params.omega0;

    const auto n_blocks = static_cast<std::int64_t>(cache.blocks.size());
    std::vector<SirenGradient> partial(static_cast<std::size_t>(n_blocks));

    parallel_for(n_blocks, n_threads, [&](std::int64_t bb, std::int64_t be) {
        for (std::int64_t bi = bb; bi < be; ++bi) {
            const auto& blk = cache.blocks[bi];
            SirenGradient& g = partial[bi];
            g.weights.resize(hidden + 1);
            g.biases.resize(hidden + 1);

            const Eigen::RowVectorXd og =
                output_grad.segment(blk.start, blk.count).transpose();
            Eigen::RowVectorXd delta_out(blk.count);
            for (Eigen::Index i = 0; i < blk.count; ++i)
                delta_out[i] = og[i] * detail::sigmoid(blk.z_out[i]);

            Eigen::MatrixXd h_prev = hidden > 0
                                         ? (w0 * blk.z_hidden[hidden - 1].array()).sin().matrix()
                                         : Eigen::MatrixXd(blk.input);
            g.weights[hidden] = delta_out * h_prev.transpose();
            g.biases[hidden] = Eigen::VectorXd::Constant(1, delta_out.sum());

            Eigen::MatrixXd up = params.weights[hidden].transpose() * delta_out;
            for (int l = hidden - 1; l >= 0; --l) {
                Eigen::MatrixXd delta =
                    up.array() * (w0 * (w0 * blk.z_hidden[l].array()).cos());
                if (l == 0) {
                    g.weights[0] = delta * blk.input.transpose();
                } else {
                    Eigen::MatrixXd h_below = (w0 * blk.z_hidden[l - 1].array()).sin();
                    g.weights[l] = delta * h_below.transpose();
                }
                g.biases[l] = delta.rowwise().sum();
                if (l > 0) up = params.weights[l].transpose() * delta;
            }
        }
    });

    SirenGradient grad;
    grad.weights.resize(hidden + 1);
    grad.biases.resize(hidden + 1);
    for (int l = 0; l <= hidden; ++l) {
        grad.weights[l] = Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols());
        grad.biases[l] = Eigen::VectorXd::Zero(params.biases[l].size());
    }
    for (const auto& g : partial)
        for (int l = 0; l <= hidden; ++l) {
            grad.weights[l] += g.weights[l];
            grad.biases[l] += g.biases[l];
        }
    return grad;
}

/// Renders the network onto an image grid; values are strictly positive.
inline ImageGrid render_image(const SirenParams& params, int width, int height, double pixel_size,
                              int n_threads = 1) {
    const CoordGrid coords = make_coord_grid(width, height);
    const Eigen::VectorXd values = siren_forward(params, coords, nullptr, n_threads);
    ImageGrid img(width, height, pixel_size);
    for (std::size_t i = 0; i < img.npix(); ++i) img.values[i] = values[static_cast<Eigen::Index>(i)];
    return img;
}

/// Flat parameter order: per layer, weights row-major, then biases.
inline Eigen::VectorXd pack_parameters(const SirenParams& params) {
    Eigen::VectorXd x(params.n_parameters());
    std::int64_t at = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const auto& w = params.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) x[at++] = w(r, c);
        const auto& b = params.biases[l];
        for (Eigen::Index r = 0; r < b.size(); ++r) x[at++] = b[r];
    }
    return x;
}

inline void unpack_parameters(const Eigen::VectorXd& x, SirenParams& params) {
    require(x.size() == params.n_parameters(), "unpack_parameters: length mismatch");
    std::int64_t at = 0;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        auto& w = params.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = x[at++];
        auto& b = params.biases[l];
        for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = x[at++];
    }
}

inline Eigen::VectorXd pack_gradient(const SirenGradient& grad) {
    std::int64_t n = 0;
    for (std::size_t l = 0; l < grad.weights.size(); ++l)
        n += grad.weights[l].size() + grad.biases[l].size();
    Eigen::VectorXd x(n);
    std::int64_t at = 0;
    for (std::size_t l = 0; l < grad.weights.size(); ++l) {
        const auto& w = grad.weights[l];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) x[at++] = w(r, c);
        const auto& b = grad.biases[l];
        for (Eigen::Index r = 0; r < b.size(); ++r) x[at++] = b[r];
    }
    return x;
}

}  // namespace inrpet
