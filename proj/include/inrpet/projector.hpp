#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "inrpet/core.hpp"
#include "inrpet/geometry.hpp"
#include "inrpet/parallel.hpp"

namespace inrpet {

/// Row-compressed sparse matrix of ray/pixel intersection lengths (mm).
/// Rows are rays (angle-major), columns are pixels (row-major). The adjoint
/// reads the same stored entries column-wise, so transpose pairs are exact.
struct SparseOperator {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int64_t> row_ptr;  // rows + 1
    std::vector<std::int32_t> col_idx;
    std::vector<double> weight;

    std::int64_t nnz() const { return static_cast<std::int64_t>(weight.size()); }

    /// y = G x
    void apply(const std::vector<double>& x, std::vector<double>& y, int n_threads = 1) const {
        require(static_cast<std::int64_t>(x.size()) == cols, "SparseOperator::apply: size mismatch");
        y.assign(static_cast<std::size_t>(rows), 0.0);
        parallel_for(rows, n_threads, [&](std::int64_t rb, std::int64_t re) {
            for (std::int64_t r = rb; r < re; ++r) {
                double acc = 0.0;
                for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                    acc += weight[k] * x[col_idx[k]];
                y[r] = acc;
            }
        });
    }

    /// x = G^T y, accumulated over fixed row blocks merged in block order so
    /// the result is bit-identical for any thread count.
    void apply_adjoint(const std::vector<double>& y, std::vector<double>& x,
                       int n_threads = 1) const {
        require(static_cast<std::int64_t>(y.size()) == rows,
                "SparseOperator::apply_adjoint: size mismatch");
        constexpr std::int64_t kBlock = 1024;
        const std::int64_t n_blocks = (rows + kBlock - 1) / kBlock;
        std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_blocks));
        parallel_blocks(rows, kBlock, n_threads,
                        [&](std::int64_t blk, std::int64_t rb, std::int64_t re) {
                            auto& p = partial[blk];
                            p.assign(static_cast<std::size_t>(cols), 0.0);
                            for (std::int64_t r = rb; r < re; ++r) {
                                const double s = y[r];
                                if (s == 0.0) continue;
                                for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
                                    p[col_idx[k]] += weight[k] * s;
                            }
                        });
        x.assign(static_cast<std::size_t>(cols), 0.0);
        for (auto& p : partial)
            for (std::int64_t j = 0; j < cols; ++j) x[j] += p[j];
    }
};

namespace detail {

/// Traces one ray through the grid and appends (pixel, length) entries.
/// Incremental parametric traversal; each segment is classified by its
/// midpoint, which keeps corner crossings and boundary-riding rays
/// deterministic. Segments whose midpoint falls outside the grid (rays
/// exactly on the outer boundary) are dropped.
inline void trace_ray(double p0x, double p0y, double dx, double dy, int width, int height,
                      double px, std::vector<std::int32_t>& cols_out,
                      std::vector<double>& weights_out) {
    const double x0 = -0.5 * width * px;
    const double y0 = -0.5 * height * px;
    const double x1 = -x0;
    const double y1 = -y0;

    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    const double tiny = 1e-12;
    if (std::abs(dx) < tiny) {
        if (p0x < x0 || p0x > x1) return;
    } else {
        double ta = (x0 - p0x) / dx, tb = (x1 - p0x) / dx;
        if (ta > tb) std::swap(ta, tb);
        tmin = std::max(tmin, ta);
        tmax = std::min(tmax, tb);
    }
    if (std::abs(dy) < tiny) {
        if (p0y < y0 || p0y > y1) return;
    } else {
        double ta = (y0 - p0y) / dy, tb = (y1 - p0y) / dy;
        if (ta > tb) std::swap(ta, tb);
        tmin = std::max(tmin, ta);
        tmax = std::min(tmax, tb);
    }
    if (!(tmin < tmax)) return;

    const double inf = std::numeric_limits<double>::infinity();
    double tx = inf, ty = inf, tx_step = inf, ty_step = inf;
    if (std::abs(dx) >= tiny) {
        tx_step = px / std::abs(dx);
        const double fx = (p0x + tmin * dx - x0) / px;
        const double plane = dx > 0.0 ? std::floor(fx) + 1.0 : std::ceil(fx) - 1.0;
        tx = (x0 + plane * px - p0x) / dx;
        if (tx <= tmin) tx += tx_step;
    }
    if (std::abs(dy) >= tiny) {
        ty_step = px / std::abs(dy);
        const double fy = (p0y + tmin * dy - y0) / px;
        const double plane = dy > 0.0 ? std::floor(fy) + 1.0 : std::ceil(fy) - 1.0;
        ty = (y0 + plane * px - p0y) / dy;
        if (ty <= tmin) ty += ty_step;
    }

    double t = tmin;
    while (t < tmax - 1e-12) {
        double tn = std::min(std::min(tx, ty), tmax);
        const double seg = tn - t;
        if (seg > 0.0) {
            const double mx = p0x + 0.5 * (t + tn) * dx;
            const double my = p0y + 0.5 * (t + tn) * dy;
            const int ix = static_cast<int>(std::floor((mx - x0) / px));
            const int iy = static_cast<int>(std::floor((my - y0) / px));
            if (ix >= 0 && ix < width && iy >= 0 && iy < height) {
                cols_out.push_back(static_cast<std::int32_t>(iy) * width + ix);
                weights_out.push_back(seg);
            }
        }
        if (tn == tx) tx += tx_step;
        if (tn == ty) ty += ty_step;
        t = tn;
    }
}

}  // namespace detail

/// Geometric system matrix: entry (ray, pixel) is the exact intersection
/// length in mm. Rows of rays that miss the grid are empty. Assembly is
/// parallel over fixed row blocks concatenated in order, so the matrix is
/// identical for any thread count.
inline SparseOperator build_system_matrix(const ImageGrid& image, const SinogramGeometry& geom,
                                          int n_threads = 1) {
    geom.validate();
    require(image.width > 0 && image.height > 0 && image.pixel_size > 0.0,
            "build_system_matrix: invalid image grid");

    struct Block {
        std::vector<std::int64_t> row_len;
        std::vector<std::int32_t> cols;
        std::vector<double> weights;
    };
    const std::int64_t rows = geom.n_rays();
    constexpr std::int64_t kBlock = 512;
    const std::int64_t n_blocks = (rows + kBlock - 1) / kBlock;
    std::vector<Block> blocks(static_cast<std::size_t>(n_blocks));

    parallel_blocks(rows, kBlock, n_threads, [&](std::int64_t blk, std::int64_t rb, std::int64_t re) {
        Block& out = blocks[blk];
        out.row_len.reserve(re - rb);
        for (std::int64_t r = rb; r < re; ++r) {
            const int a = static_cast<int>(r / geom.n_bins);
            const int b = static_cast<int>(r % geom.n_bins);
            const double theta = geom.angle(a);
            const double nx = std::cos(theta), ny = std::sin(theta);
            const double s = geom.bin_offset(b);
            const std::size_t before = out.cols.size();
            detail::trace_ray(geom.center_x + s * nx, geom.center_y + s * ny, -ny, nx,
                              image.width, image.height, image.pixel_size, out.cols, out.weights);
            out.row_len.push_back(static_cast<std::int64_t>(out.cols.size() - before));
        }
    });

    SparseOperator op;
    op.rows = rows;
    op.cols = static_cast<std::int64_t>(image.npix());
    op.row_ptr.resize(static_cast<std::size_t>(rows) + 1);
    op.row_ptr[0] = 0;
    std::int64_t nnz = 0, r = 0;
    for (const auto& blk : blocks)
        for (std::int64_t len : blk.row_len) {
            nnz += len;
            op.row_ptr[++r] = nnz;
        }
    op.col_idx.reserve(nnz);
    op.weight.reserve(nnz);
    for (auto& blk : blocks) {
        op.col_idx.insert(op.col_idx.end(), blk.cols.begin(), blk.cols.end());
        op.weight.insert(op.weight.end(), blk.weights.begin(), blk.weights.end());
        blk = Block{};
    }
    return op;
}

/// Affine forward model P(lambda) = A lambda + r with
/// A = diag(atten * sens) * geom_matrix.
struct SystemModel {
    SinogramGeometry geometry;
    int width = 0;
    int height = 0;
    double pixel_size = 1.0;
    SparseOperator geom_matrix;
    std::vector<double> atten;       // per-bin, in (0, 1]
    std::vector<double> sens;        // per-bin, >= 0
    std::vector<double> background;  // per-bin expected scatter + randoms, >= 0

    void validate() const {
        geometry.validate();
        const auto n = static_cast<std::size_t>(geometry.n_rays());
        require(geom_matrix.rows == geometry.n_rays(), "SystemModel: matrix rows != rays");
        require(geom_matrix.cols == static_cast<std::int64_t>(width) * height,
                "SystemModel: matrix cols != pixels");
        require(atten.size() == n && sens.size() == n && background.size() == n,
                "SystemModel: per-bin array length mismatch");
    }
};

inline SystemModel make_system_model(const ImageGrid& image, const SinogramGeometry& geom,
                                     SparseOperator matrix, std::vector<double> atten,
                                     std::vector<double> sens, std::vector<double> background) {
    SystemModel m;
    m.geometry = geom;
    m.width = image.width;
    m.height = image.height;
    m.pixel_size = image.pixel_size;
    m.geom_matrix = std::move(matrix);
    m.atten = std::move(atten);
    m.sens = std::move(sens);
    m.background = std::move(background);
    m.validate();
    return m;
}

/// Per-bin attenuation survival factors exp(-(G mu)_b).
inline std::vector<double> compute_attenuation_factors(const ImageGrid& mu_map,
                                                       const SparseOperator& geom_matrix,
                                                       int n_threads = 1) {
    require(static_cast<std::int64_t>(mu_map.npix()) == geom_matrix.cols,
            "compute_attenuation_factors: mu map shape mismatch");
    for (double m : mu_map.values)
        require(m >= 0.0, "compute_attenuation_factors: negative attenuation coefficient");
    std::vector<double> line_integrals;
    geom_matrix.apply(mu_map.values, line_integrals, n_threads);
    for (double& v : line_integrals) v = std::exp(-v);
    return line_integrals;
}

inline Sinogram forward_project(const SystemModel& model, const ImageGrid& image,
                                int n_threads = 1) {
    model.validate();
    require(image.width == model.width && image.height == model.height,
            "forward_project: image shape mismatch");
    Sinogram out(model.geometry);
    model.geom_matrix.apply(image.values, out.values, n_threads);
    for (std::size_t b = 0; b < out.values.size(); ++b)
        out.values[b] = model.atten[b] * model.sens[b] * out.values[b] + model.background[b];
    return out;
}

/// Adjoint of the linear part: A^T s with A = diag(atten*sens) * geom_matrix.
inline ImageGrid back_project(const SystemModel& model, const std::vector<double>& sino_like,
                              int n_threads = 1) {
    model.validate();
    require(sino_like.size() == static_cast<std::size_t>(model.geometry.n_rays()),
            "back_project: sinogram array length mismatch");
    std::vector<double> scaled(sino_like.size());
    for (std::size_t b = 0; b < scaled.size(); ++b)
        scaled[b] = model.atten[b] * model.sens[b] * sino_like[b];
    ImageGrid out(model.width, model.height, model.pixel_size);
    model.geom_matrix.apply_adjoint(scaled, out.values, n_threads);
    return out;
}

}  // namespace inrpet
