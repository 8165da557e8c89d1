#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace inrpet {

/// 2D scalar field on a regular grid with square pixels.
/// Used for activity maps (SUV-like units) and attenuation maps (1/mm).
/// Values are stored row-major: index = iy * width + ix.
struct ImageGrid {
    int width = 0;
    int height = 0;
    double pixel_size = 1.0;  // mm
    std::vector<double> values;

    ImageGrid() = default;
    ImageGrid(int w, int h, double px, double fill = 0.0)
        : width(w), height(h), pixel_size(px),
          values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        if (w <= 0 || h <= 0 || px <= 0.0)
            throw std::invalid_argument("ImageGrid: width, height and pixel_size must be positive");
    }

    std::size_t npix() const { return values.size(); }
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * width + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * width + ix]; }

    bool same_shape(const ImageGrid& other) const {
        return width == other.width && height == other.height;
    }
};

/// Tissue regions of the phantom. The numeric values are the on-disk label codes.
enum class Region : std::uint8_t {
    background = 0,
    other_tissue = 1,
    bone = 2,
    white_matter = 3,
    gray_matter = 4,
    csf = 5,
    tumor = 6,
};

inline constexpr int kRegionCount = 7;

inline const char* region_name(Region r) {
    switch (r) {
        case Region::background:   return "background";
        case Region::other_tissue: return "other_tissue";
        case Region::bone:         return "bone";
        case Region::white_matter: return "white_matter";
        case Region::gray_matter:  return "gray_matter";
        case Region::csf:          return "csf";
        case Region::tumor:        return "tumor";
    }
    return "unknown";
}

/// Per-pixel region labels, same layout as the ImageGrid it describes.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<Region> labels;

    LabelMap() = default;
    LabelMap(int w, int h, Region fill = Region::background)
        : width(w), height(h),
          labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("LabelMap: width and height must be positive");
    }

    std::size_t npix() const { return labels.size(); }
    Region& at(int ix, int iy) { return labels[static_cast<std::size_t>(iy) * width + ix]; }
    Region at(int ix, int iy) const { return labels[static_cast<std::size_t>(iy) * width + ix]; }

    std::vector<std::uint8_t> mask_of(Region r) const {
        std::vector<std::uint8_t> m(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) m[i] = (labels[i] == r) ? 1 : 0;
        return m;
    }

    /// All non-background pixels; the evaluation mask for PSNR/MSSIM.
    std::vector<std::uint8_t> brain_mask() const {
        std::vector<std::uint8_t> m(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i)
            m[i] = (labels[i] != Region::background) ? 1 : 0;
        return m;
    }
};

/// Uniform draw in [0,1) from the top 53 bits of the engine output.
/// Kept explicit so streams are reproducible independent of the standard
/// library's distribution implementations.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace inrpet
