#pragma once

// Feature pipeline: run the six-filter array over a grayscale frame, pool
// each output on an SxS grid, and concatenate into one vector. Block order
// is a frozen part of the model format.

#include <string>
#include <vector>

#include "proprio/image.hpp"

namespace proprio {

// Concatenation order of the pooled blocks.
inline constexpr const char* kBlockOrder = "canny,binary,gray,adaptive,eroded,dilated";

struct FeatureVector {
    int s = 0;  // pooling grid side
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std;
};

FeatureVector extract_features(const GrayImage& g, const FilterConfig& cfg, int s);

// Per-coordinate mean and population standard deviation; coordinates with
// std below 1e-12 get std 1 so constant features normalize to zero.
Normalizer fit_normalizer(const std::vector<FeatureVector>& features);

FeatureVector normalize(const FeatureVector& mu, const Normalizer& n);

}  // namespace proprio
