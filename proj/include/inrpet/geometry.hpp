#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "inrpet/core.hpp"

namespace inrpet {

/// Parallel-beam sinogram geometry. Angles are k*pi/n_angles for
/// k = 0..n_angles-1; radial bin centers are (b - (n_bins-1)/2) * bin_spacing
/// relative to the field-of-view center, which sits at the image center by
/// default (physical origin (0,0) mm).
struct SinogramGeometry {
    int n_angles = 0;
    int n_bins = 0;
    double bin_spacing = 1.0;  // mm
    double center_x = 0.0;     // mm
    double center_y = 0.0;     // mm

    std::int64_t n_rays() const {
        return static_cast<std::int64_t>(n_angles) * n_bins;
    }
    double angle(int a) const {
        return static_cast<double>(a) * M_PI / n_angles;
    }
    double bin_offset(int b) const {
        return (b - 0.5 * (n_bins - 1)) * bin_spacing;
    }

    void validate() const {
        require(n_angles >= 1, "SinogramGeometry: n_angles must be >= 1");
        require(n_bins >= 1, "SinogramGeometry: n_bins must be >= 1");
        require(bin_spacing > 0.0, "SinogramGeometry: bin_spacing must be positive");
    }

    bool operator==(const SinogramGeometry&) const = default;
};

/// (angle x radial-bin) array of counts or expected counts, angle-major.
struct Sinogram {
    SinogramGeometry geometry;
    std::vector<double> values;

    Sinogram() = default;
    explicit Sinogram(const SinogramGeometry& g, double fill = 0.0)
        : geometry(g), values(static_cast<std::size_t>(g.n_rays()), fill) {}

    double& at(int a, int b) { return values[static_cast<std::size_t>(a) * geometry.n_bins + b]; }
    double at(int a, int b) const { return values[static_cast<std::size_t>(a) * geometry.n_bins + b]; }
};

/// Geometry whose radial extent covers the image diagonal: bin spacing equals
/// the pixel size and the bin count is the smallest odd integer reaching the
/// diagonal, so the central bin passes through the image center.
inline SinogramGeometry build_geometry(const ImageGrid& image, int n_angles) {
    require(n_angles >= 1, "build_geometry: n_angles must be >= 1");
    require(image.width > 0 && image.height > 0 && image.pixel_size > 0.0,
            "build_geometry: invalid image grid");
    const double diag_bins = std::hypot(static_cast<double>(image.width),
                                        static_cast<double>(image.height));
    auto n = static_cast<int>(std::ceil(diag_bins));
    if (n % 2 == 0) ++n;
    SinogramGeometry g;
    g.n_angles = n_angles;
    g.n_bins = n;
    g.bin_spacing = image.pixel_size;
    return g;
}

}  // namespace inrpet
