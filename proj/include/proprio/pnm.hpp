#pragma once

// Binary PGM (P5) and PPM (P6) with maxval 255.

#include <string>

#include "proprio/image.hpp"

namespace proprio {

void write_pgm(const GrayImage& img, const std::string& path);
GrayImage read_pgm(const std::string& path);

void write_ppm(const RgbImage& img, const std::string& path);
RgbImage read_ppm(const std::string& path);

}  // namespace proprio
