#pragma once

// Image corpus with ground-truth poses: directory of numbered PGM frames,
// an index.csv (filename, timestamp_s, x_mm, y_mm, z_mm) and a key=value
// meta file. Poses are stored with 6 decimal places.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "proprio/image.hpp"
#include "proprio/pose.hpp"

namespace proprio {

struct Sample {
    GrayImage image;
    Pose pose;
    double timestamp = 0.0;  // seconds, strictly increasing within a dataset
};

struct DatasetMeta {
    int width = 0;
    int height = 0;
    double rate_hz = 10.0;
    std::uint64_t seed = 0;
    std::string config_hash;  // hash of the generator configuration

    bool operator==(const DatasetMeta&) const = default;
};

struct Dataset {
    std::vector<Sample> samples;
    DatasetMeta meta;
};

void save_dataset(const Dataset& ds, const std::string& dir);

/// Loads and validates: consistent dimensions, strictly increasing
/// timestamps, finite poses with z >= 0. Errors name the offending file.
Dataset load_dataset(const std::string& dir);

/// Streams samples in index order without holding more than one image in
/// memory; same validation as load_dataset. The callback gets each sample
/// (movable), its position, and the total count. Returns the dataset meta.
DatasetMeta for_each_sample(const std::string& dir,
                            const std::function<void(Sample&&, std::size_t, std::size_t)>& fn);

/// Seeded shuffle split; each half keeps its samples in timestamp order so
/// both halves remain valid datasets.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Content hash over the canonical serialized form (meta, poses at 6
/// decimals, raw pixels); independent of where the dataset is stored.
std::uint64_t dataset_hash(const Dataset& ds);

}  // namespace proprio
