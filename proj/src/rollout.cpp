#include <thrustid/rollout.hpp>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace thrustid {
namespace rollout {

RolloutState::RolloutState(int n)
    : n_(n),
      commanded_(static_cast<std::size_t>(std::max(n, 1))),
      thrust_(static_cast<std::size_t>(std::max(n, 1))),
      pressure_(static_cast<std::size_t>(std::max(n, 1))),
      m_fuel_(static_cast<std::size_t>(std::max(n, 1))),
      m_ox_(static_cast<std::size_t>(std::max(n, 1)))
{
    if (n < 1) throw std::invalid_argument("RolloutState: n must be >= 1");
}

void RolloutState::push(const Vec4& commanded, const Vec4& thrust, double pressure, double m_fuel,
                        double m_ox)
{
    // slot t mod n holds sample t
    const auto slot = t_ % static_cast<std::size_t>(n_);
    commanded_[slot] = commanded;
    thrust_[slot] = thrust;
    pressure_[slot] = pressure;
    m_fuel_[slot] = m_fuel;
    m_ox_[slot] = m_ox;
    ++t_;
    filled_ = std::min(filled_ + 1, n_);
}

Eigen::VectorXd RolloutState::features(const Vec4& command, const Vec4& status,
                                       const features::LambdaParams& lambda) const
{
    if (!warmed()) throw std::logic_error("RolloutState: buffers not warmed up");
    const features::Layout lay(n_);
    const auto nn = static_cast<std::size_t>(n_);
    auto at = [&](int lag) { return (t_ - static_cast<std::size_t>(lag)) % nn; };

    Eigen::VectorXd x(lay.width());
    for (int j = 0; j < 4; ++j) x(lay.command() + j) = command[j] * status[j];
    for (int l = 1; l <= n_; ++l) {
        const auto s = at(l);
        for (int j = 0; j < 4; ++j) {
            x(lay.command_history(l, j)) = commanded_[s][j];
            x(lay.thrust_history(l, j)) = thrust_[s][j];
        }
        x(lay.pressure_history(l)) = pressure_[s];
        x(lay.fuel_history(l)) = m_fuel_[s];
        x(lay.ox_history(l)) = m_ox_[s];
    }
    const auto last = at(1);
    x(lay.pressure()) = pressure_[last];
    for (int j = 0; j < 4; ++j) x(lay.status(j)) = status[j];
    x(lay.lambda()) = features::lambda_feature(std::max(m_fuel_[last], 0.0),
                                               std::max(m_ox_[last], 0.0), lambda);
    return x;
}

namespace {

Vec4 effective(const Vec4& cmd, const Vec4& st)
{
    return {cmd[0] * st[0], cmd[1] * st[1], cmd[2] * st[2], cmd[3] * st[3]};
}

void copy_row(const plant::PlantTrajectory& src, std::size_t i, plant::PlantTrajectory& dst)
{
    dst.push_back(src.commands[i], src.status[i], src.thrusts[i], src.pressures[i], src.m_fuel[i],
                  src.m_ox[i]);
}

void set_raw(RowMatrix& raw, std::size_t row, const plant::PlantTrajectory& traj, std::size_t i)
{
    const auto r = static_cast<Eigen::Index>(row);
    for (int j = 0; j < 4; ++j) raw(r, j) = traj.thrusts[i][static_cast<std::size_t>(j)];
    raw(r, 4) = traj.pressures[i];
    raw(r, 5) = traj.m_fuel[i];
    raw(r, 6) = traj.m_ox[i];
}

// Thrusts clamped at zero, masses not allowed to fall below the previous sample.
void clamp_output(const Eigen::VectorXd& y, double prev_fuel, double prev_ox, Vec4& thrust,
                  double& pressure, double& m_fuel, double& m_ox)
{
    for (std::size_t j = 0; j < kEngines; ++j) thrust[j] = std::max(y(static_cast<Eigen::Index>(j)), 0.0);
    pressure = y(4);
    m_fuel = std::max(y(5), prev_fuel);
    m_ox = std::max(y(6), prev_ox);
}

} // namespace

RolloutResult rollout(const regression::CoefficientModel& model, const plant::CommandTrace& trace,
                      const plant::PlantTrajectory& warmup)
{
    const int n = model.n;
    const auto nn = static_cast<std::size_t>(n);
    trace.validate();
    if (trace.size() + 1 <= nn)
        throw std::invalid_argument(
            fmt::format("rollout: trace of {} samples is too short for n={}", trace.size(), n));
    if (warmup.size() < nn)
        throw std::invalid_argument(
            fmt::format("rollout: warm-up has {} samples, model needs {}", warmup.size(), n));
    if (std::abs(warmup.dt - trace.dt) > 1e-12)
        throw std::invalid_argument("rollout: warm-up and trace time steps differ");
    for (std::size_t i = 1; i < nn; ++i) {
        if (warmup.commands[i] != trace.commands[i - 1] || warmup.status[i] != trace.status[i - 1])
            throw std::invalid_argument(
                fmt::format("rollout: warm-up sample {} does not match the trace", i));
    }

    const std::size_t rows = trace.size() + 1;
    RolloutResult res;
    res.predicted.dt = trace.dt;
    res.predicted.reserve(rows);
    res.raw.resize(static_cast<Eigen::Index>(rows), features::kTargets);

    RolloutState state(n);
    for (std::size_t i = 0; i < nn; ++i) {
        copy_row(warmup, i, res.predicted);
        set_raw(res.raw, i, warmup, i);
        state.push(effective(warmup.commands[i], warmup.status[i]), warmup.thrusts[i],
                   warmup.pressures[i], warmup.m_fuel[i], warmup.m_ox[i]);
    }

    for (std::size_t t = nn; t < rows; ++t) {
        const auto& cmd = trace.commands[t - 1];
        const auto& st = trace.status[t - 1];
        const Eigen::VectorXd y = regression::predict(model, state.features(cmd, st, model.lambda));
        if (!y.allFinite())
            throw Diverged(fmt::format("rollout diverged at step {} (t = {} s)", t, trace.dt * t), t,
                           trace.dt * static_cast<double>(t));
        res.raw.row(static_cast<Eigen::Index>(t)) = y.transpose();

        Vec4 thrust{};
        double p = 0.0, mf = 0.0, mo = 0.0;
        clamp_output(y, res.predicted.m_fuel.back(), res.predicted.m_ox.back(), thrust, p, mf, mo);
        res.predicted.push_back(cmd, st, thrust, p, mf, mo);
        state.push(effective(cmd, st), thrust, p, mf, mo);
    }
    return res;
}

RolloutResult teacher_forced(const regression::CoefficientModel& model,
                             const plant::PlantTrajectory& truth)
{
    const int n = model.n;
    const auto nn = static_cast<std::size_t>(n);
    truth.validate();
    if (truth.size() <= nn)
        throw std::invalid_argument(
            fmt::format("teacher_forced: trajectory of {} samples is too short for n={}", truth.size(), n));

    RolloutResult res;
    res.predicted.dt = truth.dt;
    res.predicted.reserve(truth.size());
    res.raw.resize(static_cast<Eigen::Index>(truth.size()), features::kTargets);
    for (std::size_t i = 0; i < nn; ++i) {
        copy_row(truth, i, res.predicted);
        set_raw(res.raw, i, truth, i);
    }
    for (std::size_t t = nn; t < truth.size(); ++t) {
        const Eigen::VectorXd y = regression::predict(model, features::feature_row(truth, t, n, model.lambda));
        res.raw.row(static_cast<Eigen::Index>(t)) = y.transpose();
        Vec4 thrust{};
        double p = 0.0, mf = 0.0, mo = 0.0;
        clamp_output(y, truth.m_fuel[t - 1], truth.m_ox[t - 1], thrust, p, mf, mo);
        res.predicted.push_back(truth.commands[t], truth.status[t], thrust, p, mf, mo);
    }
    return res;
}

// ---------------------------------------------------------------------------

double ValidationReport::thrust_max() const { return max_error.size() ? max_error.head<4>().maxCoeff() : 0.0; }

double ValidationReport::thrust_transient_max() const
{
    return transient_max.size() ? transient_max.head<4>().maxCoeff() : 0.0;
}

double ValidationReport::thrust_steady_max() const
{
    return steady_max.size() ? steady_max.head<4>().maxCoeff() : 0.0;
}

std::vector<bool> transient_mask(const plant::PlantTrajectory& traj, const WindowOptions& opts)
{
    if (!(opts.settle_window >= 0.0)) throw std::invalid_argument("settle window must be >= 0");
    const std::size_t len = traj.size();
    const auto w = static_cast<std::size_t>(std::llround(opts.settle_window / traj.dt));
    std::vector<bool> mask(len, false);
    Vec4 prev{};
    if (len > 0) prev = effective(traj.commands[0], traj.status[0]);
    std::size_t open_until = 0;
    bool open = false;
    for (std::size_t i = 1; i < len; ++i) {
        const Vec4 cur = effective(traj.commands[i], traj.status[i]);
        for (std::size_t j = 0; j < kEngines; ++j) {
            if (std::abs(cur[j] - prev[j]) > opts.change_threshold) {
                open = true;
                open_until = i + w;
                break;
            }
        }
        if (open && i <= open_until) mask[i] = true;
        prev = cur;
    }
    return mask;
}

ValidationReport error_windows(const plant::PlantTrajectory& truth, const plant::PlantTrajectory& pred,
                               const plant::PlantConfig& cfg, const WindowOptions& opts,
                               const RowMatrix& raw)
{
    if (truth.size() != pred.size())
        throw std::invalid_argument(fmt::format("error_windows: trajectory lengths differ ({} vs {})",
                                                truth.size(), pred.size()));
    if (raw.size() != 0 && (static_cast<std::size_t>(raw.rows()) != truth.size() || raw.cols() != 7))
        throw std::invalid_argument("error_windows: raw prediction shape mismatch");
    if (opts.skip >= truth.size()) throw std::invalid_argument("error_windows: nothing left after skip");

    const auto mask = transient_mask(truth, opts);
    const auto w = static_cast<std::size_t>(std::llround(opts.settle_window / truth.dt));
    const auto mass_true = plant::module_mass(truth, cfg);
    const auto mass_pred = plant::module_mass(pred, cfg);

    ValidationReport rep;
    rep.rmse = Eigen::VectorXd::Zero(7);
    rep.max_error = Eigen::VectorXd::Zero(7);
    rep.transient_max = Eigen::VectorXd::Zero(7);
    rep.steady_max = Eigen::VectorXd::Zero(7);
    rep.raw_max_error = Eigen::VectorXd::Zero(7);

    auto value = [](const plant::PlantTrajectory& tr, std::size_t i, int o) {
        if (o < 4) return tr.thrusts[i][static_cast<std::size_t>(o)];
        if (o == 4) return tr.pressures[i];
        return o == 5 ? tr.m_fuel[i] : tr.m_ox[i];
    };

    for (std::size_t i = opts.skip; i < truth.size(); ++i) {
        ++rep.samples;
        if (mask[i])
            ++rep.transient_samples;
        else
            ++rep.steady_samples;
        for (int o = 0; o < 7; ++o) {
            const double tv = value(truth, i, o);
            const double e = std::abs(value(pred, i, o) - tv);
            rep.rmse(o) += e * e;
            rep.max_error(o) = std::max(rep.max_error(o), e);
            auto& cls = mask[i] ? rep.transient_max : rep.steady_max;
            cls(o) = std::max(cls(o), e);
            const double er = raw.size() != 0 ? std::abs(raw(static_cast<Eigen::Index>(i), o) - tv) : e;
            rep.raw_max_error(o) = std::max(rep.raw_max_error(o), er);
            if (o < 4 && i > w) rep.settled_max_thrust = std::max(rep.settled_max_thrust, e);
        }
        rep.mass_max_error = std::max(rep.mass_max_error, std::abs(mass_pred[i] - mass_true[i]));
    }
    rep.rmse = (rep.rmse / static_cast<double>(rep.samples)).cwiseSqrt();
    return rep;
}

ValidationReport teacher_forced_eval(const regression::CoefficientModel& model,
                                     const plant::PlantTrajectory& truth, const plant::PlantConfig& cfg,
                                     const WindowOptions& opts)
{
    const auto res = teacher_forced(model, truth);
    auto rep = error_windows(truth, res.predicted, cfg, opts, res.raw);
    rep.mode = "teacher-forced";
    rep.sparsity = model.sparsity;
    return rep;
}

ValidationReport rollout_eval(const std::string& id, const regression::CoefficientModel& model,
                              const plant::CommandTrace& trace, const plant::PlantConfig& cfg,
                              const WindowOptions& opts, plant::PlantTrajectory* truth_out,
                              RolloutResult* result_out)
{
    const auto truth = plant::simulate(trace, cfg);
    if (truth_out != nullptr) *truth_out = truth;
    ValidationReport rep;
    try {
        auto res = rollout(model, trace, truth);
        rep = error_windows(truth, res.predicted, cfg, opts, res.raw);
        if (result_out != nullptr) *result_out = std::move(res);
    } catch (const Diverged& e) {
        rep.diverged = true;
        rep.divergence_time = e.time();
        rep.error = e.what();
    }
    rep.id = id;
    rep.mode = "rollout";
    rep.sparsity = model.sparsity;
    return rep;
}

ValidationReport descent_profile_eval(const regression::CoefficientModel& model,
                                      const plant::CommandTrace& profile, const plant::PlantConfig& cfg,
                                      const WindowOptions& opts)
{
    if (profile.size() == 0) throw std::invalid_argument("descent_profile_eval: empty profile");
    return rollout_eval("descent", model, profile, cfg, opts);
}

// ---------------------------------------------------------------------------

namespace {

class ProfileBuilder
{
public:
    explicit ProfileBuilder(double dt) { trace_.dt = dt; }

    // Engines at 0 are off. Engines changing between two non-zero levels
    // follow a linear ramp of ramp_s seconds; switching on or off is a step.
    void move(const Vec4& target, double ramp_s, double hold_s)
    {
        const auto nr = samples(ramp_s);
        for (std::size_t i = 1; i <= nr; ++i) {
            const double a = static_cast<double>(i) / static_cast<double>(nr);
            Vec4 c{};
            for (std::size_t j = 0; j < kEngines; ++j) {
                const bool both_on = level_[j] > 0.0 && target[j] > 0.0;
                c[j] = both_on ? level_[j] + a * (target[j] - level_[j]) : target[j];
            }
            emit(c);
        }
        level_ = target;
        for (std::size_t i = 0; i < samples(hold_s); ++i) emit(level_);
    }

    void hold_until(double t_end)
    {
        while (static_cast<double>(trace_.size()) * trace_.dt < t_end - 0.5 * trace_.dt) emit(level_);
    }

    plant::CommandTrace take() { return std::move(trace_); }

private:
    std::size_t samples(double s) const { return static_cast<std::size_t>(std::llround(s / trace_.dt)); }

    void emit(const Vec4& c)
    {
        Vec4 st{};
        for (std::size_t j = 0; j < kEngines; ++j) st[j] = c[j] > 0.0 ? 1.0 : 0.0;
        trace_.commands.push_back(c);
        trace_.status.push_back(st);
    }

    plant::CommandTrace trace_;
    Vec4 level_{};
};

} // namespace

plant::CommandTrace descent_profile(const plant::PlantConfig& cfg)
{
    const double lo = cfg.e_min;
    const double span = cfg.e_max - cfg.e_min;
    auto lvl = [&](double f) { return lo + f * span; };

    ProfileBuilder b(cfg.dt);
    b.move({0, 0, 0, 0}, 0.0, 2.0);
    // ignition at low throttle, then braking
    b.move({lo, lo, lo, lo}, 0.0, 3.0);
    b.move({lvl(0.8), lvl(0.8), lvl(0.8), lvl(0.8)}, 6.0, 40.0);
    b.move({lvl(0.75), lvl(0.85), lvl(0.75), lvl(0.85)}, 3.0, 30.0);
    b.move({lvl(0.85), lvl(0.75), lvl(0.85), lvl(0.75)}, 3.0, 30.0);
    b.move({lvl(0.7), lvl(0.7), lvl(0.7), lvl(0.7)}, 4.0, 20.0);
    // throttle down and continue on one diagonal pair
    b.move({lo, lo, lo, lo}, 8.0, 3.0);
    b.move({lo, 0, lo, 0}, 0.0, 3.0);
    b.move({lvl(0.4), 0, lvl(0.4), 0}, 5.0, 90.0);
    b.move({lo, 0, lo, 0}, 5.0, 3.0);
    // coast
    b.move({0, 0, 0, 0}, 0.0, 330.0);
    // re-ignition and attitude-style differential throttling
    b.move({lo, 0, lo, 0}, 0.0, 2.0);
    b.move({lo, lo, lo, lo}, 0.0, 3.0);
    b.move({lvl(0.3), lvl(0.3), lvl(0.15), lvl(0.15)}, 3.0, 25.0);
    b.move({lvl(0.15), lvl(0.3), lvl(0.3), lvl(0.15)}, 3.0, 25.0);
    // approach and hover-like terminal phase
    b.move({lvl(0.45), lvl(0.45), lvl(0.45), lvl(0.45)}, 5.0, 40.0);
    b.move({lvl(0.3), lvl(0.3), lvl(0.3), lvl(0.3)}, 5.0, 80.0);
    b.move({lvl(0.35), lvl(0.25), lvl(0.35), lvl(0.25)}, 3.0, 20.0);
    b.move({lo, lo, lo, lo}, 8.0, 10.0);
    // shutdown and settle on the surface
    b.move({0, 0, 0, 0}, 0.0, 0.0);
    b.hold_until(1000.0);
    return b.take();
}

} // namespace rollout
} // namespace thrustid
