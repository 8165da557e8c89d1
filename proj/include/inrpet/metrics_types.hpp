#pragma once

namespace inrpet {

/// Image-quality summary for one reconstruction.
struct MetricsReport {
    double psnr = 0.0;     // dB; +inf when the images are identical on the mask
    double mssim = 0.0;    // in [-1, 1]
    double ar_hot = 0.0;   // activity recovery of the hot ROI
    double rb_cold = 0.0;  // signed relative bias of the cold ROI
    double ir_white = 0.0; // image roughness (std/mean) of the white-matter ROI
};

}  // namespace inrpet
