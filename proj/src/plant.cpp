#include <thrustid/plant.hpp>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace thrustid {
namespace plant {

void PlantConfig::validate() const
{
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(fmt::format("PlantConfig: {}", msg));
    };
    require(e_min > 0.0 && e_min < e_max, "need 0 < e_min < e_max");
    require(p_reg > 0.0 && p_bottle0 > 0.0, "pressures must be positive");
    require(v_bottle > 0.0, "v_bottle must be positive");
    require(droop_coeff >= 0.0, "droop_coeff must be non-negative");
    require(tau_rise > 0.0 && tau_fall > 0.0, "time constants must be positive");
    require(tau_fall >= tau_rise, "tau_fall must be >= tau_rise");
    require(slew_limit > 0.0, "slew_limit must be positive");
    require(isp > 0.0 && g0 > 0.0, "isp and g0 must be positive");
    require(mixture_ratio > 0.0, "mixture_ratio must be positive");
    require(dt > 0.0, "dt must be positive");
    require(dt <= tau_rise, "dt must not exceed tau_rise (explicit Euler)");
    require(valve_delay >= 0.0, "valve_delay must be non-negative");
    require(rho_prop > 0.0, "rho_prop must be positive");
    require(m_dry >= 0.0 && m_dry < m_module0, "need 0 <= m_dry < m_module0");
}

std::size_t PlantConfig::delay_steps() const
{
    return static_cast<std::size_t>(std::llround(valve_delay / dt));
}

PlantState initial_state(const PlantConfig& cfg)
{
    PlantState s;
    s.p_bottle = cfg.p_bottle0;
    s.p_tank = std::min(cfg.p_reg, cfg.p_bottle0);
    s.pending.assign(cfg.delay_steps(), Vec4{});
    return s;
}

void CommandTrace::validate() const
{
    if (commands.size() != status.size())
        throw std::invalid_argument("CommandTrace: commands and status differ in length");
    if (!(dt > 0.0)) throw std::invalid_argument("CommandTrace: dt must be positive");
}

void PlantTrajectory::reserve(std::size_t n)
{
    commands.reserve(n);
    status.reserve(n);
    thrusts.reserve(n);
    pressures.reserve(n);
    m_fuel.reserve(n);
    m_ox.reserve(n);
}

void PlantTrajectory::push_back(const Vec4& cmd, const Vec4& st, const Vec4& thrust, double p,
                                double mf, double mo)
{
    commands.push_back(cmd);
    status.push_back(st);
    thrusts.push_back(thrust);
    pressures.push_back(p);
    m_fuel.push_back(mf);
    m_ox.push_back(mo);
}

void PlantTrajectory::validate() const
{
    const auto n = thrusts.size();
    if (commands.size() != n || status.size() != n || pressures.size() != n ||
        m_fuel.size() != n || m_ox.size() != n)
        throw std::invalid_argument("PlantTrajectory: sequences differ in length");
    if (!(dt > 0.0)) throw std::invalid_argument("PlantTrajectory: dt must be positive");
}

PlantState step(const PlantState& state, const Vec4& command, const Vec4& status,
                const PlantConfig& cfg)
{
    for (std::size_t j = 0; j < kEngines; ++j) {
        if (!std::isfinite(command[j]))
            throw PlantError(PlantErrorKind::NonFiniteCommand,
                             fmt::format("non-finite command on engine {}", j + 1));
        if (status[j] != 0.0 && status[j] != 1.0)
            throw PlantError(PlantErrorKind::InvalidStatus,
                             fmt::format("status of engine {} is not 0 or 1", j + 1));
    }

    PlantState next = state;
    next.t = state.t + cfg.dt;

    Vec4 target{};
    for (std::size_t j = 0; j < kEngines; ++j)
        target[j] = status[j] * std::clamp(command[j], cfg.e_min, cfg.e_max) / cfg.e_max;

    Vec4 seen = target;
    if (!next.pending.empty()) {
        seen = next.pending.front();
        next.pending.pop_front();
        next.pending.push_back(target);
    }

    const double coupling = std::sqrt(std::max(state.p_tank, 0.0) / cfg.p_reg);
    const double max_delta = cfg.slew_limit * cfg.dt;
    double flow_before = 0.0;
    double flow_after = 0.0;
    for (std::size_t j = 0; j < kEngines; ++j) {
        const double v = state.valve_pos[j];
        const double tau = seen[j] > v ? cfg.tau_rise : cfg.tau_fall;
        next.valve_pos[j] = std::clamp(v + cfg.dt / tau * (seen[j] - v), 0.0, 1.0);

        const double candidate = cfg.e_max * next.valve_pos[j] * coupling;
        const double prev = state.thrust[j];
        next.thrust[j] = std::max(std::clamp(candidate, prev - max_delta, prev + max_delta), 0.0);

        flow_before += cfg.mass_flow(prev);
        flow_after += cfg.mass_flow(next.thrust[j]);
    }

    // trapezoidal quadrature of the propellant flow over the step
    const double dm = 0.5 * (flow_before + flow_after) * cfg.dt;
    const double mr = cfg.mixture_ratio;
    next.m_fuel_ejected = state.m_fuel_ejected + dm / (1.0 + mr);
    next.m_ox_ejected = state.m_ox_ejected + dm * mr / (1.0 + mr);

    // isothermal blowdown: gas at tank pressure refills the ullage left by the propellant
    const double dv = dm / cfg.rho_prop;
    next.p_bottle = std::max(state.p_bottle - state.p_tank * dv / cfg.v_bottle, 0.0);
    next.p_tank =
        std::max(std::min(cfg.p_reg, next.p_bottle) - cfg.droop_coeff * flow_after, 0.0);

    if (cfg.m_module0 - (next.m_fuel_ejected + next.m_ox_ejected) <= cfg.m_dry)
        throw PlantError(PlantErrorKind::Depleted,
                         fmt::format("propellant depleted at t={:.3f}s", next.t));
    return next;
}

PlantTrajectory simulate(const CommandTrace& trace, const PlantConfig& cfg)
{
    cfg.validate();
    trace.validate();
    if (std::abs(trace.dt - cfg.dt) > 1e-12 * cfg.dt)
        throw std::invalid_argument(
            fmt::format("trace dt {} does not match plant dt {}", trace.dt, cfg.dt));

    PlantTrajectory out;
    out.dt = cfg.dt;
    out.reserve(trace.size() + 1);

    PlantState s = initial_state(cfg);
    out.push_back(Vec4{}, Vec4{}, s.thrust, s.p_tank, s.m_fuel_ejected, s.m_ox_ejected);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        try {
            s = step(s, trace.commands[i], trace.status[i], cfg);
        } catch (const PlantError& e) {
            throw PlantError(e.kind(), fmt::format("sample {}: {}", i, e.what()), i);
        }
        out.push_back(trace.commands[i], trace.status[i], s.thrust, s.p_tank, s.m_fuel_ejected,
                      s.m_ox_ejected);
    }
    return out;
}

std::vector<double> module_mass(const PlantTrajectory& traj, const PlantConfig& cfg)
{
    std::vector<double> m(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i)
        m[i] = cfg.m_module0 - (traj.m_fuel[i] + traj.m_ox[i]);
    return m;
}

} // namespace plant
} // namespace thrustid
