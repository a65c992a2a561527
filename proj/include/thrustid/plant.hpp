#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

namespace thrustid {

using Vec4 = std::array<double, 4>;
inline constexpr std::size_t kEngines = 4;

namespace plant {

/**
 * Constants of the surrogate four-engine pressure-fed propulsion plant.
 *
 * Thrust limits are per engine. Pressures are absolute (Pa), masses kg,
 * times s. The valve dead time models actuator and feed-line transport
 * delay between a command and the valve reacting to it.
 */
struct PlantConfig
{
    double e_min = 240.0;
    double e_max = 800.0;
    double p_reg = 1.8e6;
    double p_bottle0 = 2.4e7;
    double v_bottle = 0.03;
    double droop_coeff = 2.0e5;
    double tau_rise = 0.08;
    double tau_fall = 0.10;
    double slew_limit = 10000.0;
    double isp = 285.0;
    double g0 = 9.80665;
    double mixture_ratio = 1.65;
    double m_module0 = 600.0;
    double dt = 0.01;
    double valve_delay = 0.04;
    double rho_prop = 1200.0;
    double m_dry = 100.0;

    /// Throws std::invalid_argument when an invariant is violated.
    void validate() const;

    /// Dead time expressed in whole integration steps.
    std::size_t delay_steps() const;

    /// Total propellant mass flow (kg/s) of one engine at the given thrust.
    double mass_flow(double thrust) const { return thrust / (isp * g0); }
};

struct PlantState
{
    double t = 0.0;
    double p_bottle = 0.0;
    double p_tank = 0.0;
    Vec4 thrust{};
    double m_fuel_ejected = 0.0;
    double m_ox_ejected = 0.0;
    Vec4 valve_pos{};
    // valve targets issued but not yet seen by the valves, oldest first
    std::deque<Vec4> pending;
};

/// Full bottle, engines cold, nothing ejected.
PlantState initial_state(const PlantConfig& cfg);

struct CommandTrace
{
    double dt = 0.01;
    std::vector<Vec4> commands;
    std::vector<Vec4> status;

    std::size_t size() const { return commands.size(); }
    void validate() const;
};

/**
 * Sampled plant record. Row 0 is the initial state with no command
 * applied; row i >= 1 holds command i-1 of the driving trace together with
 * the state reached after applying it for one step.
 */
struct PlantTrajectory
{
    double dt = 0.01;
    std::vector<Vec4> commands;
    std::vector<Vec4> status;
    std::vector<Vec4> thrusts;
    std::vector<double> pressures;
    std::vector<double> m_fuel;
    std::vector<double> m_ox;

    std::size_t size() const { return thrusts.size(); }
    double time(std::size_t i) const { return static_cast<double>(i) * dt; }
    void reserve(std::size_t n);
    void push_back(const Vec4& cmd, const Vec4& st, const Vec4& thrust, double p, double mf,
                   double mo);
    void validate() const;
};

enum class PlantErrorKind { NonFiniteCommand, InvalidStatus, Depleted };

class PlantError : public std::runtime_error
{
public:
    PlantError(PlantErrorKind kind, const std::string& what, std::size_t sample = 0)
        : std::runtime_error(what), kind_(kind), sample_(sample)
    {}
    PlantErrorKind kind() const { return kind_; }
    /// Index of the failing trace sample (meaningful for simulate()).
    std::size_t sample() const { return sample_; }

private:
    PlantErrorKind kind_;
    std::size_t sample_;
};

/// Advance the plant by one dt. Throws PlantError.
PlantState step(const PlantState& state, const Vec4& command, const Vec4& status,
                const PlantConfig& cfg);

/// Fold step() over a trace from initial_state(). Result has trace.size()+1 rows.
PlantTrajectory simulate(const CommandTrace& trace, const PlantConfig& cfg);

/// m_module0 - (m_fuel + m_ox) per sample.
std::vector<double> module_mass(const PlantTrajectory& traj, const PlantConfig& cfg);

} // namespace plant
} // namespace thrustid
