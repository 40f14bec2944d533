#pragma once

// Straight-line serial reference implementations of the image pipeline.
// Each function computes its result with plain nested loops over the full
// 2D window, with no separable passes and no threading, so the optimized
// versions in proprio:: can be checked against them byte for byte.

#include "proprio/image.hpp"

namespace proprio::ref {

GrayImage to_grayscale(const RgbImage& rgb);
GrayImage adaptive_threshold(const GrayImage& g, const FilterConfig& cfg);
GrayImage binary_threshold(const GrayImage& g, int offset);
GrayImage canny(const GrayImage& g, const FilterConfig& cfg);
GrayImage dilate(const GrayImage& a, const FilterConfig& cfg);
GrayImage erode(const GrayImage& a, const FilterConfig& cfg);
PooledGrid average_pool(const GrayImage& img, int s);

}  // namespace proprio::ref
