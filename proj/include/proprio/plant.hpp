#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "proprio/dataset.hpp"
#include "proprio/image.hpp"
#include "proprio/pose.hpp"

namespace proprio {

// ---------------------------------------------------------------------------
// Synthetic actuator: interior-pattern renderer, pressure->elongation plant,
// and a distance-only depth sensor used as the accuracy baseline.
// ---------------------------------------------------------------------------

/// Geometry and appearance of the pattern printed on the actuator interior.
/// The camera sits at the origin looking along +z; `num_bellows` fabric rings
/// are stacked above it, each carrying one dashed ring plus scattered dots.
struct PatternSpec {
    int num_bellows = 4;
    /// Physical ring radius per bellow, innermost first; strictly increasing.
    std::vector<double> ring_radii_mm{28.0, 38.0, 48.0, 58.0};
    /// Dashes per ring, innermost first.
    std::vector<int> dash_count{24, 28, 32, 36};
    int dot_count = 30;
    double dot_diameter_mm = 2.0;
    double collapsed_diameter_mm = 140.0;
    double ring_thickness_mm = 2.5;
    /// Fraction of each dash period that is painted white.
    double dash_fill = 0.7;
    /// Radial scatter of the dots around their bellow's ring.
    double dot_scatter_mm = 4.0;
    /// Camera-to-bellow distance at zero elongation.
    double base_depth_mm = 40.0;
    /// Focal length expressed as a fraction of the image width, so a scene
    /// renders with identical framing at any resolution.
    double focal_ratio = 0.47;
    /// Below this elongation the interior is barely lit; brightness scales
    /// with min(1, z/knee).
    double lighting_knee_mm = 20.0;
    /// Per-pixel Gaussian intensity noise.
    double noise_sigma = 2.0;

    void validate() const;
};

/// Axis-aligned box of reachable poses.
struct Workspace {
    double x_min = -15.0, x_max = 15.0;
    double y_min = -15.0, y_max = 15.0;
    double z_min = 20.0, z_max = 100.0;

    bool contains(const Pose& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max && p.z >= z_min &&
               p.z <= z_max;
    }
    void validate() const;
};

/// Lateral (x, y) injection as a function of simulation time: a circular sweep
/// of `amplitude_mm` active inside [start_s, end_s).
struct DisturbanceSpec {
    double amplitude_mm = 0.0;
    double freq_hz = 0.25;
    double phase_y = 1.5707963267948966;  // y lags x by a quarter turn
    double start_s = 0.0;
    double end_s = std::numeric_limits<double>::infinity();
};

std::pair<double, double> disturbance_xy(const DisturbanceSpec& d, double t);

struct PlantState {
    double pressure_bar = 0.0;
    double x_mm = 0.0;
    double y_mm = 0.0;
    double z_mm = 0.0;
    double time_s = 0.0;
};

struct PlantConfig {
    double pressure_time_constant_s = 0.05;
    double elongation_time_constant_s = 0.4;
    /// Steady-state elongation as a monotone (pressure, z) table, linearly
    /// interpolated and clamped at the ends.
    std::vector<std::pair<double, double>> elongation_map{
        {0.0, 0.0},    {0.0005, 15.0}, {0.001, 30.0}, {0.002, 50.0},  {0.003, 65.0},
        {0.004, 75.0}, {0.006, 88.0},  {0.008, 95.0}, {0.012, 105.0}, {0.016, 110.0},
        {0.022, 116.0}, {0.03, 120.0}};
    double z_max_mm = 120.0;
    double p_max_bar = 0.05;
    DisturbanceSpec disturbance{};

    void validate() const;
};

/// Steady-state elongation for a given pressure (interpolated table lookup).
double map_elongation(const PlantConfig& cfg, double pressure_bar);

/// Deterministic render of the interior pattern for a pose. `seed` fixes the
/// pattern itself (dot placement, dash phases); `frame_index` only decorrelates
/// the per-pixel noise between frames of one sequence.
GrayImage render_frame(const Pose& pose, const PatternSpec& spec, int width, int height,
                       std::uint64_t seed, std::uint64_t frame_index = 0);

/// Projected rings in pixel units at the given pose: (center offset is common
/// to all rings; returned values are the ring image radii, innermost bellow
/// first). Exposed so geometric properties can be checked analytically.
std::vector<double> projected_ring_radii_px(const Pose& pose, const PatternSpec& spec, int width);

/// Advance the plant by one explicit first-order step: pressure lags the
/// (clamped) command, elongation lags the steady-state map, and (x, y) follow
/// the disturbance profile.
PlantState step_plant(const PlantState& s, double p_command, double dt, const PlantConfig& cfg);

/// Raw distance reading: affine in the Euclidean distance to the tracked
/// point, with seeded Gaussian noise. The affine constants are internal; they
/// are what `calibrate_linear` has to recover.
double simulate_tof(const PlantState& s, double noise_sigma, std::uint64_t seed);

struct TofCalibration {
    double gain = 1.0;
    double offset = 0.0;
    double apply(double raw) const { return gain * raw + offset; }
};

/// Ordinary least squares fit z ~ gain*raw + offset.
TofCalibration calibrate_linear(const std::vector<double>& raw, const std::vector<double>& z_gt);

/// Bounded band-limited signal in [-1, 1]: a fixed-weight sum of sinusoids
/// whose phases and frequency jitter derive from `key`, making signals from
/// different keys mutually incommensurate (a long excitation fills its range
/// instead of retracing one loop). The amplitude bound is exact (weights are
/// normalized), so scaled trajectories provably stay inside their range.
double band_limited(double t, std::uint64_t key, int components = 5);

/// Dataset generation parameters (image size, capture rate, excitation shape).
struct GenConfig {
    int width = 640;
    int height = 480;
    double rate_hz = 10.0;
    int excitation_components = 5;
    /// Fraction of each axis half-range used by the excitation.
    double margin = 0.95;

    void validate() const;
};

/// Pose of the smooth excitation trajectory at time t (not quantized).
Pose trajectory_pose(double t, const Workspace& ws, const GenConfig& gen, std::uint64_t seed);

/// Render a reproducible dataset: the excitation trajectory sampled at
/// `gen.rate_hz`, one frame per sample. Poses and timestamps are quantized to
/// 1e-6 so a save/load cycle through the CSV index is lossless.
Dataset generate_dataset(int n, const Workspace& ws, const PatternSpec& spec,
                         const GenConfig& gen, std::uint64_t seed);

/// Sample `i` of the dataset generate_dataset would produce with the same
/// arguments; lets large runs stream frames without materializing everything.
Sample generate_sample(int i, const Workspace& ws, const PatternSpec& spec, const GenConfig& gen,
                       std::uint64_t seed);

/// Canonical key=value description of a generation setup (hashed into
/// DatasetMeta::config_hash).
std::string describe_generation(const Workspace& ws, const PatternSpec& spec,
                                const GenConfig& gen);

}  // namespace proprio
