#include "proprio/control.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "proprio/util.hpp"

namespace proprio {

void PiConfig::validate() const {
    if (kp < 0.0 || ki < 0.0) throw std::invalid_argument("pi: gains must be >= 0");
    if (output_max <= output_min) throw std::invalid_argument("pi: empty output range");
    if (integrator_limit <= 0.0 || integrator_limit > output_max - output_min)
        throw std::invalid_argument("pi: integrator limit must be in (0, output range]");
}

void LoopRates::validate() const {
    if (position_hz <= 0 || pressure_hz <= 0) throw std::invalid_argument("rates must be > 0");
    if (pressure_hz < position_hz)
        throw std::invalid_argument("pressure rate must be >= position rate");
    if (pressure_hz % position_hz != 0)
        throw std::invalid_argument("pressure rate must be an integer multiple of position rate");
}

double pi_step(PiState& st, double z_sp, double z_meas, double dt, const PiConfig& cfg) {
    if (dt <= 0.0) throw std::invalid_argument("pi_step: dt must be > 0");
    const double e = z_sp - z_meas;
    const double base = cfg.ff(z_sp) + cfg.kp * e;
    const double cand =
        std::clamp(st.integrator + cfg.ki * e * dt, -cfg.integrator_limit, cfg.integrator_limit);
    const bool deeper_high = base + cand > cfg.output_max && e > 0.0;
    const bool deeper_low = base + cand < cfg.output_min && e < 0.0;
    if (!deeper_high && !deeper_low) st.integrator = cand;
    return std::clamp(base + st.integrator, cfg.output_min, cfg.output_max);
}

double pressure_step(double p_sp, double p_meas, double dt, double kp_inner) {
    if (dt <= 0.0) throw std::invalid_argument("pressure_step: dt must be > 0");
    return std::max(0.0, p_meas + kp_inner * (p_sp - p_meas));
}

std::array<double, 3> fit_feedforward(const PlantConfig& cfg, double z_fit_max) {
    cfg.validate();
    // Normal equations for p ~ c0 + c1 z + c2 z^2 over the map's points.
    double a[3][3] = {};
    double b[3] = {};
    int used = 0;
    for (const auto& [p, z] : cfg.elongation_map) {
        if (z > z_fit_max) continue;
        const double row[3] = {1.0, z, z * z};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a[i][j] += row[i] * row[j];
            b[i] += row[i] * p;
        }
        ++used;
    }
    if (used < 3) throw std::invalid_argument("feedforward fit needs >= 3 map points");
    // Gaussian elimination with partial pivoting on the 3x3 system.
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-30)
            throw std::runtime_error("feedforward fit is degenerate");
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    return {b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]};
}

PiConfig default_pi_config(const PlantConfig& plant) {
    PiConfig cfg;
    cfg.feedforward = fit_feedforward(plant);
    cfg.output_min = 0.0;
    cfg.output_max = plant.elongation_map.back().first;
    return cfg;
}

std::vector<Setpoint> staircase_schedule(const std::vector<double>& levels_mm, double step_s) {
    if (levels_mm.empty()) throw std::invalid_argument("staircase: no levels");
    if (step_s <= 0.0) throw std::invalid_argument("staircase: step duration must be > 0");
    std::vector<Setpoint> sched;
    for (std::size_t i = 0; i < levels_mm.size(); ++i)
        sched.push_back({static_cast<double>(i) * step_s, levels_mm[i]});
    sched.push_back({static_cast<double>(levels_mm.size()) * step_s, levels_mm.back()});
    return sched;
}

std::string trajectory_to_csv(const TrajectoryLog& log) {
    const std::size_t n = log.size();
    if (log.z_sp_mm.size() != n || log.z_cm_mm.size() != n || log.z_gt_mm.size() != n ||
        log.p_sp_bar.size() != n || log.p_bar.size() != n)
        throw std::invalid_argument("trajectory log: ragged columns");
    std::ostringstream os;
    os << "t_s,z_sp_mm,z_cm_mm,z_gt_mm,p_sp_bar,p_bar\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double cols[6] = {log.t_s[i],    log.z_sp_mm[i],  log.z_cm_mm[i],
                                log.z_gt_mm[i], log.p_sp_bar[i], log.p_bar[i]};
        for (int c = 0; c < 6; ++c) {
            if (!std::isfinite(cols[c]))
                throw std::runtime_error("trajectory log contains a non-finite value");
            os << (c ? "," : "") << format_double(cols[c]);
        }
        os << '\n';
    }
    return os.str();
}

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
    write_text_file(path, trajectory_to_csv(log));
}

std::vector<Setpoint> read_setpoints_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || trim(line) != "t_s,z_sp_mm")
        throw std::runtime_error(path + ": expected header t_s,z_sp_mm");
    std::vector<Setpoint> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 2 columns");
        Setpoint sp;
        sp.t_s = parse_double(cols[0], path + " t_s");
        sp.z_sp_mm = parse_double(cols[1], path + " z_sp_mm");
        if (!out.empty() && sp.t_s <= out.back().t_s)
            throw std::runtime_error(path + ": setpoint times must be strictly increasing");
        out.push_back(sp);
    }
    if (out.empty()) throw std::runtime_error(path + ": no setpoints");
    return out;
}

TrajectoryLog run_closed_loop(const std::vector<Setpoint>& schedule, const PoseModel* model,
                              const SimOptions& sim, const LoopRates& rates, const PiConfig& pi) {
    rates.validate();
    pi.validate();
    sim.plant.validate();
    if (schedule.empty()) throw std::invalid_argument("closed loop: empty setpoint schedule");
    if (schedule.front().t_s != 0.0)
        throw std::invalid_argument("closed loop: schedule must start at t=0");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i].t_s <= schedule[i - 1].t_s)
            throw std::invalid_argument("closed loop: setpoint times must be strictly increasing");
    if (schedule.back().t_s <= 0.0) throw std::invalid_argument("closed loop: empty time range");
    if (!sim.perfect_sensing) {
        if (model == nullptr)
            throw std::invalid_argument("closed loop: camera feedback requires a trained model");
        if (model->image_width != sim.width || model->image_height != sim.height)
            throw std::invalid_argument("closed loop: model/image dimension mismatch");
        if (!rates.sensing.z)
            throw std::invalid_argument("closed loop: sensing mask must include z");
    }

    const int ratio = rates.pressure_hz / rates.position_hz;
    const double dt_outer = 1.0 / rates.position_hz;
    const double dt_inner = 1.0 / rates.pressure_hz;
    const auto n_outer = static_cast<long>(std::llround(schedule.back().t_s * rates.position_hz));

    PlantState plant = sim.initial;
    PiState pist;
    TrajectoryLog log;
    log.t_s.reserve(static_cast<std::size_t>(n_outer));

    std::size_t sched_i = 0;
    for (long k = 0; k < n_outer; ++k) {
        const double t = static_cast<double>(k) * dt_outer;
        while (sched_i + 1 < schedule.size() && schedule[sched_i + 1].t_s <= t + 1e-12) ++sched_i;
        const double z_sp = schedule[sched_i].z_sp_mm;

        double z_cm;
        if (sim.perfect_sensing) {
            z_cm = plant.z_mm;
        } else {
            const GrayImage frame =
                render_frame({plant.x_mm, plant.y_mm, plant.z_mm}, sim.pattern, sim.width,
                             sim.height, sim.seed, static_cast<std::uint64_t>(k));
            z_cm = *predict_pose(*model, frame, rates.sensing).z;
        }

        const double p_sp = pi_step(pist, z_sp, z_cm, dt_outer, pi);
        log.t_s.push_back(t);
        log.z_sp_mm.push_back(z_sp);
        log.z_cm_mm.push_back(z_cm);
        log.z_gt_mm.push_back(plant.z_mm);
        log.p_sp_bar.push_back(p_sp);
        log.p_bar.push_back(plant.pressure_bar);

        for (int j = 0; j < ratio; ++j) {
            const double cmd = pressure_step(p_sp, plant.pressure_bar, dt_inner, sim.kp_inner);
            plant = step_plant(plant, cmd, dt_inner, sim.plant);
            ++log.inner_steps;
        }
    }
    return log;
}

}  // namespace proprio
