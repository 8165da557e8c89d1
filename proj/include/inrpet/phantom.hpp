#pragma once

#include <array>
#include <cmath>
#include <random>
#include <utility>

#include "inrpet/core.hpp"

namespace inrpet {

/// Axis-aligned ellipse in normalized coordinates (grid spans [-1,1] in each axis).
struct Ellipse {
    double cx = 0.0, cy = 0.0;  // center
    double ax = 1.0, ay = 1.0;  // semi-axes
    bool contains(double u, double v) const {
        const double du = (u - cx) / ax;
        const double dv = (v - cy) / ay;
        return du * du + dv * dv <= 1.0;
    }
};

/// Procedural brain-like phantom: nested ellipses (scalp, skull, cortex,
/// white matter), two ventricles and a circular tumor inserted into the
/// white matter. Region intensities are piecewise constant.
struct PhantomSpec {
    int width = 160;
    int height = 160;
    double pixel_size = 2.0;  // mm

    // Activity per region, SUV-like units.
    std::array<double, kRegionCount> suv = {
        0.0,   // background
        1.0,   // other_tissue
        0.2,   // bone
        2.0,   // white_matter
        6.0,   // gray_matter
        0.5,   // csf
        10.0,  // tumor
    };

    // Linear attenuation per region at 511 keV, 1/mm.
    std::array<double, kRegionCount> mu = {
        0.0,     // background
        0.0096,  // other_tissue
        0.0151,  // bone
        0.0096,  // white_matter
        0.0096,  // gray_matter
        0.0096,  // csf
        0.0096,  // tumor
    };

    // Anatomy, normalized to the grid half-extent.
    Ellipse head = {0.0, 0.0, 0.92, 0.95};
    Ellipse skull = {0.0, 0.0, 0.82, 0.86};
    Ellipse cortex = {0.0, 0.0, 0.75, 0.79};
    Ellipse white = {0.0, 0.0, 0.58, 0.64};
    Ellipse ventricle_left = {-0.16, -0.08, 0.09, 0.27};
    Ellipse ventricle_right = {0.16, -0.08, 0.09, 0.27};

    // Tumor circle in pixel units. Negative values mean "derive the default":
    // center at normalized (-0.30, +0.30), radius 3.75% of min(width, height),
    // which is 6.0 px on the default 160x160 grid.
    double tumor_cx_px = -1.0;
    double tumor_cy_px = -1.0;
    double tumor_radius_px = -1.0;

    // Optional random perturbation of the anatomy ellipses (relative amplitude).
    double jitter = 0.0;
    std::uint64_t seed = 0;

    double tumor_center_x() const {
        return tumor_cx_px >= 0.0 ? tumor_cx_px : (1.0 + (-0.30)) * 0.5 * width;
    }
    double tumor_center_y() const {
        return tumor_cy_px >= 0.0 ? tumor_cy_px : (1.0 + (+0.30)) * 0.5 * height;
    }
    double tumor_radius() const {
        return tumor_radius_px >= 0.0 ? tumor_radius_px : 0.0375 * std::min(width, height);
    }

    void validate() const {
        require(width > 0 && height > 0 && pixel_size > 0.0,
                "PhantomSpec: grid dimensions and pixel size must be positive");
        for (double s : suv) require(s >= 0.0, "PhantomSpec: SUV values must be non-negative");
        for (double m : mu) require(m >= 0.0, "PhantomSpec: attenuation values must be non-negative");
        require(jitter >= 0.0, "PhantomSpec: jitter must be non-negative");
    }
};

namespace detail {

inline Ellipse jittered(const Ellipse& e, double amp, std::mt19937_64& eng) {
    Ellipse out = e;
    out.cx += uniform_in(eng, -amp, amp) * e.ax;
    out.cy += uniform_in(eng, -amp, amp) * e.ay;
    out.ax *= 1.0 + uniform_in(eng, -amp, amp);
    out.ay *= 1.0 + uniform_in(eng, -amp, amp);
    return out;
}

}  // namespace detail

/// Builds the piecewise-constant activity image and its label map.
/// Pixel membership is decided by the pixel center, so every labeled
/// region takes exactly one activity value.
/// Throws std::invalid_argument if the tumor circle is empty or covers
/// any pixel that is not white matter.
inline std::pair<ImageGrid, LabelMap> build_phantom(const PhantomSpec& spec) {
    spec.validate();

    Ellipse head = spec.head, skull = spec.skull, cortex = spec.cortex, white = spec.white;
    Ellipse vl = spec.ventricle_left, vr = spec.ventricle_right;
    if (spec.jitter > 0.0) {
        std::mt19937_64 eng(spec.seed);
        head = detail::jittered(head, spec.jitter, eng);
        skull = detail::jittered(skull, spec.jitter, eng);
        cortex = detail::jittered(cortex, spec.jitter, eng);
        white = detail::jittered(white, spec.jitter, eng);
        vl = detail::jittered(vl, spec.jitter, eng);
        vr = detail::jittered(vr, spec.jitter, eng);
    }

    LabelMap labels(spec.width, spec.height);
    const double hw = 0.5 * spec.width;
    const double hh = 0.5 * spec.height;
    for (int iy = 0; iy < spec.height; ++iy) {
        const double v = (iy + 0.5 - hh) / hh;
        for (int ix = 0; ix < spec.width; ++ix) {
            const double u = (ix + 0.5 - hw) / hw;
            Region r = Region::background;
            if (head.contains(u, v)) r = Region::other_tissue;
            if (skull.contains(u, v)) r = Region::bone;
            if (cortex.contains(u, v)) r = Region::gray_matter;
            if (white.contains(u, v)) r = Region::white_matter;
            if (vl.contains(u, v) || vr.contains(u, v)) r = Region::csf;
            labels.at(ix, iy) = r;
        }
    }

    // Tumor insertion; every covered pixel must currently be white matter.
    const double tcx = spec.tumor_center_x();
    const double tcy = spec.tumor_center_y();
    const double tr = spec.tumor_radius();
    const double tr2 = tr * tr;
    std::size_t tumor_pixels = 0;
    for (int iy = 0; iy < spec.height; ++iy) {
        for (int ix = 0; ix < spec.width; ++ix) {
            const double dx = ix + 0.5 - tcx;
            const double dy = iy + 0.5 - tcy;
            if (dx * dx + dy * dy <= tr2) {
                if (labels.at(ix, iy) != Region::white_matter)
                    throw std::invalid_argument(
                        "build_phantom: tumor placement outside white matter");
                labels.at(ix, iy) = Region::tumor;
                ++tumor_pixels;
            }
        }
    }
    if (tumor_pixels == 0)
        throw std::invalid_argument("build_phantom: tumor circle covers no pixel center");

    ImageGrid activity(spec.width, spec.height, spec.pixel_size);
    for (std::size_t i = 0; i < labels.npix(); ++i)
        activity.values[i] = spec.suv[static_cast<std::size_t>(labels.labels[i])];
    return {std::move(activity), std::move(labels)};
}

/// Piecewise-constant attenuation map (1/mm) from a label map.
inline ImageGrid build_attenuation_map(const PhantomSpec& spec, const LabelMap& labels) {
    spec.validate();
    require(labels.width == spec.width && labels.height == spec.height,
            "build_attenuation_map: label map shape does not match spec");
    ImageGrid mu(spec.width, spec.height, spec.pixel_size);
    for (std::size_t i = 0; i < labels.npix(); ++i)
        mu.values[i] = spec.mu[static_cast<std::size_t>(labels.labels[i])];
    return mu;
}

}  // namespace inrpet
