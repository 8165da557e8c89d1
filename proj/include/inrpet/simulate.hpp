#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "inrpet/core.hpp"
#include "inrpet/projector.hpp"

namespace inrpet {

struct AcquisitionSpec {
    double total_prompts = 3.5e6;
    double randoms_fraction = 0.35;
    double scatter_fraction = 0.30;
    double scatter_sigma_bins = 10.0;  // radial Gaussian width of the scatter model
    std::vector<double> sensitivity;   // optional per-bin profile; empty = uniform 1
    std::uint64_t seed = 0;

    void validate() const {
        require(total_prompts >= 0.0, "AcquisitionSpec: total_prompts must be >= 0");
        require(randoms_fraction >= 0.0 && scatter_fraction >= 0.0,
                "AcquisitionSpec: fractions must be >= 0");
        require(randoms_fraction + scatter_fraction < 1.0,
                "AcquisitionSpec: randoms + scatter fraction must be < 1");
        require(scatter_sigma_bins > 0.0, "AcquisitionSpec: scatter sigma must be positive");
    }
};

struct SimulationResult {
    Sinogram measured;  // Poisson counts
    SystemModel model;  // carries the calibrated sensitivity and background means
    std::vector<double> expected_trues;
    std::vector<double> expected_scatter;
    std::vector<double> expected_randoms;
};

namespace detail {

/// Gaussian smoothing along the radial axis of each angle row. The kernel is
/// truncated at 4 sigma and renormalized over its in-range support.
inline std::vector<double> smooth_radial(const std::vector<double>& in, int n_angles, int n_bins,
                                         double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k)
        kernel[k + radius] = std::exp(-0.5 * (k / sigma) * (k / sigma));
    std::vector<double> out(in.size(), 0.0);
    for (int a = 0; a < n_angles; ++a) {
        const std::size_t base = static_cast<std::size_t>(a) * n_bins;
        for (int b = 0; b < n_bins; ++b) {
            double acc = 0.0, wsum = 0.0;
            const int lo = std::max(-radius, -b);
            const int hi = std::min(radius, n_bins - 1 - b);
            for (int k = lo; k <= hi; ++k) {
                const double w = kernel[k + radius];
                acc += w * in[base + b + k];
                wsum += w;
            }
            out[base + b] = acc / wsum;
        }
    }
    return out;
}

}  // namespace detail

/// Simulates a noisy acquisition of the ground-truth activity.
///
/// Expected trues are the attenuated, sensitivity-weighted projection of the
/// ground truth, rescaled so the trues/scatter/randoms totals split
/// total_prompts as (1-rf-sf) : sf : rf. The count calibration is folded into
/// the returned model's sensitivity, so reconstructions recover activity in
/// the ground truth's own units. Scatter means are radially smoothed trues;
/// randoms means are uniform. The returned model's background is the exact
/// scatter+randoms means (idealized corrections).
inline SimulationResult simulate_acquisition(const ImageGrid& gt, const ImageGrid& mu_map,
                                             const SinogramGeometry& geom,
                                             const AcquisitionSpec& spec, int n_threads = 1) {
    spec.validate();
    require(gt.same_shape(mu_map), "simulate_acquisition: activity / mu map shape mismatch");
    for (double v : gt.values)
        require(v >= 0.0, "simulate_acquisition: activity must be non-negative");

    SparseOperator matrix = build_system_matrix(gt, geom, n_threads);
    std::vector<double> atten = compute_attenuation_factors(mu_map, matrix, n_threads);
    const auto n = static_cast<std::size_t>(geom.n_rays());
    std::vector<double> sens = spec.sensitivity;
    if (sens.empty()) sens.assign(n, 1.0);
    require(sens.size() == n, "simulate_acquisition: sensitivity profile length mismatch");
    for (double s : sens) require(s >= 0.0, "simulate_acquisition: sensitivity must be >= 0");

    std::vector<double> raw;
    matrix.apply(gt.values, raw, n_threads);
    double raw_sum = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        raw[b] *= atten[b] * sens[b];
        raw_sum += raw[b];
    }

    const double trues_target =
        (1.0 - spec.randoms_fraction - spec.scatter_fraction) * spec.total_prompts;
    if (trues_target > 0.0 && raw_sum <= 0.0)
        throw std::invalid_argument(
            "simulate_acquisition: projection of the activity is identically zero; "
            "cannot scale to the requested prompts");
    const double scale = trues_target > 0.0 ? trues_target / raw_sum : 0.0;

    std::vector<double> trues(n);
    for (std::size_t b = 0; b < n; ++b) trues[b] = scale * raw[b];
    for (std::size_t b = 0; b < n; ++b) sens[b] *= scale;

    std::vector<double> scatter =
        detail::smooth_radial(trues, geom.n_angles, geom.n_bins, spec.scatter_sigma_bins);
    const double scatter_target = spec.scatter_fraction * spec.total_prompts;
    double ssum = 0.0;
    for (double v : scatter) ssum += v;
    const double sscale = ssum > 0.0 ? scatter_target / ssum : 0.0;
    for (double& v : scatter) v *= sscale;

    const double randoms_mean = spec.randoms_fraction * spec.total_prompts / static_cast<double>(n);
    std::vector<double> randoms(n, randoms_mean);

    std::vector<double> background(n);
    for (std::size_t b = 0; b < n; ++b) background[b] = scatter[b] + randoms[b];

    Sinogram measured(geom);
    std::mt19937_64 eng(spec.seed);
    std::poisson_distribution<long long> poisson;
    for (std::size_t b = 0; b < n; ++b) {
        const double mean = trues[b] + background[b];
        measured.values[b] =
            mean > 0.0
                ? static_cast<double>(poisson(
                      eng, std::poisson_distribution<long long>::param_type(mean)))
                : 0.0;
    }

    SimulationResult result;
    result.model = make_system_model(gt, geom, std::move(matrix), std::move(atten),
                                     std::move(sens), std::move(background));
    result.measured = std::move(measured);
    result.expected_trues = std::move(trues);
    result.expected_scatter = std::move(scatter);
    result.expected_randoms = std::move(randoms);
    return result;
}

}  // namespace inrpet
