#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "proprio/plant.hpp"
#include "proprio/pose.hpp"
#include "proprio/svr.hpp"

namespace proprio {

// ---------------------------------------------------------------------------
// Cascaded elongation control: an outer PI position loop with quadratic
// feedforward commands an inner pressure-tracking loop running at a higher
// rate against the simulated plant.
// ---------------------------------------------------------------------------

struct PiConfig {
    double kp = 2e-4;                // bar per mm
    double ki = 5e-4;                // bar per (mm*s)
    double integrator_limit = 0.01;  // bar
    /// Setpoint feedforward: c0 + c1*z + c2*z^2 (z in mm, result in bar).
    std::array<double, 3> feedforward{0.0, 0.0, 0.0};
    double output_min = 0.0;
    double output_max = 0.03;

    double ff(double z_sp) const {
        return feedforward[0] + z_sp * (feedforward[1] + z_sp * feedforward[2]);
    }
    void validate() const;
};

struct LoopRates {
    int position_hz = 50;
    int pressure_hz = 100;
    /// Which axes the camera estimates during the run; z is what the loop
    /// feeds back, so it must stay enabled for camera-in-the-loop runs.
    AxesMask sensing{false, false, true};

    void validate() const;
};

struct PiState {
    double integrator = 0.0;  // bar
};

/// One outer-loop update. Conditional integration: the integrator freezes
/// whenever adding the new increment would push the output deeper into
/// saturation. Returns the pressure setpoint in bar.
double pi_step(PiState& st, double z_sp, double z_meas, double dt, const PiConfig& cfg);

/// Inner-loop proportional tracker: command = p_meas + kp_inner*(p_sp -
/// p_meas), clamped to be non-negative. With the default gain the closed
/// inner loop settles several times faster than one outer period.
double pressure_step(double p_sp, double p_meas, double dt, double kp_inner = 4.0);

/// Least-squares quadratic fit of pressure against steady-state elongation,
/// taken over the plant map's points with z <= z_fit_max (the extreme top of
/// the map is deliberately excluded — it is far outside the control range and
/// would dominate the fit).
std::array<double, 3> fit_feedforward(const PlantConfig& cfg, double z_fit_max = 110.0);

/// PiConfig with the feedforward fitted to the given plant and the output
/// ceiling matched to the plant map's pressure range.
PiConfig default_pi_config(const PlantConfig& plant);

struct Setpoint {
    double t_s;
    double z_sp_mm;
};

/// Step-hold schedule: one entry per level plus a final end-marker row whose
/// time bounds the run (its value repeats the last level).
std::vector<Setpoint> staircase_schedule(const std::vector<double>& levels_mm, double step_s);

struct TrajectoryLog {
    std::vector<double> t_s, z_sp_mm, z_cm_mm, z_gt_mm, p_sp_bar, p_bar;
    /// Total inner-loop ticks executed (exactly rows * pressure_hz/position_hz).
    std::size_t inner_steps = 0;

    std::size_t size() const { return t_s.size(); }
};

std::string trajectory_to_csv(const TrajectoryLog& log);
void write_trajectory_csv(const TrajectoryLog& log, const std::string& path);

/// Parse a setpoint schedule CSV (t_s,z_sp_mm) with strictly increasing times.
std::vector<Setpoint> read_setpoints_csv(const std::string& path);

struct SimOptions {
    PlantConfig plant{};
    PatternSpec pattern{};
    int width = 320;
    int height = 240;
    std::uint64_t seed = 1;
    /// Feed the true plant elongation back instead of the camera estimate.
    bool perfect_sensing = false;
    double kp_inner = 4.0;
    PlantState initial{};
};

/// Multirate closed-loop simulation over [0, schedule.back().t_s): at every
/// position tick a frame is rendered from the plant state and regressed to
/// z_CM (unless perfect_sensing), the PI produces a pressure setpoint, and the
/// inner loop plus plant integrate pressure_hz/position_hz sub-steps. Fully
/// deterministic for fixed seeds.
TrajectoryLog run_closed_loop(const std::vector<Setpoint>& schedule, const PoseModel* model,
                              const SimOptions& sim, const LoopRates& rates, const PiConfig& pi);

}  // namespace proprio
