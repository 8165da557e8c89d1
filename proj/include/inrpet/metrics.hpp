#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "inrpet/core.hpp"
#include "inrpet/metrics_types.hpp"

namespace inrpet {

namespace detail {

inline double masked_max(const ImageGrid& img, const std::vector<std::uint8_t>& mask) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < img.npix(); ++i)
        if (mask[i] && img.values[i] > peak) peak = img.values[i];
    return peak;
}

inline double masked_mean(const ImageGrid& img, const std::vector<std::uint8_t>& mask,
                          std::size_t* count_out = nullptr) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.npix(); ++i)
        if (mask[i]) {
            sum += img.values[i];
            ++n;
        }
    if (count_out) *count_out = n;
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace detail

/// Peak signal-to-noise ratio over the mask, with peak = max(gt over mask).
/// Identical images return +infinity.
inline double psnr(const ImageGrid& recon, const ImageGrid& gt,
                   const std::vector<std::uint8_t>& mask) {
    require(recon.same_shape(gt), "psnr: shape mismatch");
    require(mask.size() == gt.npix(), "psnr: mask size mismatch");
    double mse = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gt.npix(); ++i)
        if (mask[i]) {
            const double d = recon.values[i] - gt.values[i];
            mse += d * d;
            ++n;
        }
    require(n > 0, "psnr: empty mask");
    mse /= static_cast<double>(n);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    const double peak = detail::masked_max(gt, mask);
    return 10.0 * std::log10(peak * peak / mse);
}

/// Mean SSIM over all 11x11 Gaussian windows (sigma 1.5) whose center pixel is
/// in the mask and whose window lies fully inside the image. Constants are
/// C1 = (0.01 L)^2, C2 = (0.03 L)^2 with L = max(gt over mask).
inline double mssim(const ImageGrid& recon, const ImageGrid& gt,
                    const std::vector<std::uint8_t>& mask) {
    require(recon.same_shape(gt), "mssim: shape mismatch");
    require(mask.size() == gt.npix(), "mssim: mask size mismatch");
    constexpr int kRadius = 5;
    require(gt.width >= 2 * kRadius + 1 && gt.height >= 2 * kRadius + 1,
            "mssim: image smaller than the 11x11 window");

    std::array<double, 2 * kRadius + 1> g{};
    constexpr double sigma = 1.5;
    for (int k = -kRadius; k <= kRadius; ++k)
        g[k + kRadius] = std::exp(-0.5 * (k / sigma) * (k / sigma));
    double norm = 0.0;
    for (int ky = -kRadius; ky <= kRadius; ++ky)
        for (int kx = -kRadius; kx <= kRadius; ++kx) norm += g[ky + kRadius] * g[kx + kRadius];

    const double peak = detail::masked_max(gt, mask);
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);

    double ssim_sum = 0.0;
    std::size_t n_windows = 0;
    for (int cy = kRadius; cy < gt.height - kRadius; ++cy) {
        for (int cx = kRadius; cx < gt.width - kRadius; ++cx) {
            if (!mask[static_cast<std::size_t>(cy) * gt.width + cx]) continue;
            double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
            for (int ky = -kRadius; ky <= kRadius; ++ky) {
                for (int kx = -kRadius; kx <= kRadius; ++kx) {
                    const double w = g[ky + kRadius] * g[kx + kRadius] / norm;
                    const double x = recon.at(cx + kx, cy + ky);
                    const double y = gt.at(cx + kx, cy + ky);
                    mx += w * x;
                    my += w * y;
                    mxx += w * x * x;
                    myy += w * y * y;
                    mxy += w * x * y;
                }
            }
            const double vx = mxx - mx * mx;
            const double vy = myy - my * my;
            const double cov = mxy - mx * my;
            const double ssim = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                                ((mx * mx + my * my + c1) * (vx + vy + c2));
            ssim_sum += ssim;
            ++n_windows;
        }
    }
    require(n_windows > 0, "mssim: empty mask");
    return ssim_sum / static_cast<double>(n_windows);
}

/// Hot-region activity recovery: mean(recon) / mean(gt) over the ROI.
inline double activity_recovery(const ImageGrid& recon, const ImageGrid& gt,
                                const std::vector<std::uint8_t>& hot_roi) {
    require(recon.same_shape(gt), "activity_recovery: shape mismatch");
    require(hot_roi.size() == gt.npix(), "activity_recovery: mask size mismatch");
    std::size_t n = 0;
    const double gt_mean = detail::masked_mean(gt, hot_roi, &n);
    require(n > 0, "activity_recovery: empty ROI");
    require(gt_mean != 0.0, "activity_recovery: ground-truth ROI mean is zero");
    return detail::masked_mean(recon, hot_roi) / gt_mean;
}

/// Cold-region relative bias: (mean(recon) - mean(gt)) / mean(gt) over the ROI.
inline double relative_bias(const ImageGrid& recon, const ImageGrid& gt,
                            const std::vector<std::uint8_t>& cold_roi) {
    require(recon.same_shape(gt), "relative_bias: shape mismatch");
    require(cold_roi.size() == gt.npix(), "relative_bias: mask size mismatch");
    std::size_t n = 0;
    const double gt_mean = detail::masked_mean(gt, cold_roi, &n);
    require(n > 0, "relative_bias: empty ROI");
    require(gt_mean > 0.0, "relative_bias: ground-truth ROI mean must be positive");
    return (detail::masked_mean(recon, cold_roi) - gt_mean) / gt_mean;
}

/// Image roughness: sample standard deviation (L-1 denominator) of the ROI
/// divided by the ROI mean.
inline double image_roughness(const ImageGrid& recon, const std::vector<std::uint8_t>& roi) {
    require(roi.size() == recon.npix(), "image_roughness: mask size mismatch");
    std::size_t n = 0;
    const double mean = detail::masked_mean(recon, roi, &n);
    require(n >= 2, "image_roughness: ROI needs at least two pixels");
    require(mean != 0.0, "image_roughness: ROI mean is zero");
    double ss = 0.0;
    for (std::size_t i = 0; i < recon.npix(); ++i)
        if (roi[i]) {
            const double d = recon.values[i] - mean;
            ss += d * d;
        }
    return std::sqrt(ss / static_cast<double>(n - 1)) / mean;
}

/// All report metrics against the label map's ROIs: tumor is the hot ROI,
/// csf the cold ROI, white matter the roughness ROI, and all non-background
/// labels form the PSNR/MSSIM mask.
inline MetricsReport compute_metrics(const ImageGrid& recon, const ImageGrid& gt,
                                     const LabelMap& labels) {
    require(labels.width == gt.width && labels.height == gt.height,
            "compute_metrics: label map shape mismatch");
    const auto brain = labels.brain_mask();
    MetricsReport r;
    r.psnr = psnr(recon, gt, brain);
    r.mssim = mssim(recon, gt, brain);
    r.ar_hot = activity_recovery(recon, gt, labels.mask_of(Region::tumor));
    r.rb_cold = relative_bias(recon, gt, labels.mask_of(Region::csf));
    r.ir_white = image_roughness(recon, labels.mask_of(Region::white_matter));
    return r;
}

}  // namespace inrpet
