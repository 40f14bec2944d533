#pragma once

#include <optional>

namespace proprio {

/// Position of the tracked point, millimetres in the inertial frame whose
/// origin sits above the camera lens (x, y lateral; z elongation).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Pose&) const = default;
};

/// Per-axis prediction result; an axis disabled by the mask stays empty.
struct PosePrediction {
    std::optional<double> x;
    std::optional<double> y;
    std::optional<double> z;
};

/// Which axes a pose predictor should evaluate.
struct AxesMask {
    bool x = true;
    bool y = true;
    bool z = true;
};

}  // namespace proprio
