#include <thrustid/excitation.hpp>
#include <thrustid/random.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace thrustid {
namespace excitation {

namespace {

std::size_t sample_count(double duration, double dt)
{
    return static_cast<std::size_t>(std::llround(duration / dt));
}

void require_level(double level, const ExcitationConfig& cfg, bool allow_off)
{
    if (allow_off && level == 0.0) return;
    if (!(level >= cfg.e_min && level <= cfg.e_max))
        throw std::invalid_argument(
            fmt::format("thrust level {} outside [{}, {}]", level, cfg.e_min, cfg.e_max));
}

plant::CommandTrace empty_trace(const ExcitationConfig& cfg)
{
    plant::CommandTrace tr;
    tr.dt = cfg.dt;
    return tr;
}

void append_hold(plant::CommandTrace& tr, const Vec4& level, std::size_t samples)
{
    Vec4 st{};
    for (std::size_t j = 0; j < kEngines; ++j) st[j] = level[j] > 0.0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        tr.commands.push_back(level);
        tr.status.push_back(st);
    }
}

// Per-engine levels from a golden-ratio sequence, each engine phase-shifted,
// held for a few seconds and joined by short ramps. Long enough to eject a
// large fraction of the propellant load.
plant::CommandTrace endurance_trace(const ExcitationConfig& cfg)
{
    constexpr double kGolden = 0.6180339887498949;
    constexpr int kHolds = 110;
    constexpr double kHold = 3.0;
    constexpr double kRamp = 1.0;

    auto tr = empty_trace(cfg);
    const double span = cfg.e_max - cfg.e_min;
    Vec4 prev{};
    for (std::size_t j = 0; j < kEngines; ++j) prev[j] = cfg.e_min + 0.5 * span;
    append_hold(tr, prev, sample_count(kHold, cfg.dt));
    for (int k = 1; k < kHolds; ++k) {
        Vec4 next{};
        for (std::size_t j = 0; j < kEngines; ++j) {
            double frac = std::fmod(k * kGolden + 0.25 * static_cast<double>(j) * kGolden, 1.0);
            next[j] = cfg.e_min + frac * span;
        }
        // every fourth transition is a hard step, the rest are ramps
        if (k % 4 != 0) {
            const auto nr = sample_count(kRamp, cfg.dt);
            for (std::size_t i = 1; i <= nr; ++i) {
                const double a = static_cast<double>(i) / static_cast<double>(nr);
                Vec4 c{};
                for (std::size_t j = 0; j < kEngines; ++j) c[j] = prev[j] + a * (next[j] - prev[j]);
                append_hold(tr, c, 1);
            }
        }
        append_hold(tr, next, sample_count(kHold, cfg.dt));
        prev = next;
    }
    return tr;
}

} // namespace

void ExcitationConfig::validate() const
{
    if (!(e_min > 0.0 && e_min < e_max))
        throw std::invalid_argument("ExcitationConfig: need 0 < e_min < e_max");
    if (m_levels < 1) throw std::invalid_argument("ExcitationConfig: m_levels must be >= 1");
    if (a_amp < 0.0) throw std::invalid_argument("ExcitationConfig: a_amp must be >= 0");
    if (!(duration > 0.0 && dt > 0.0))
        throw std::invalid_argument("ExcitationConfig: duration and dt must be positive");
}

std::vector<double> thrust_levels(const ExcitationConfig& cfg)
{
    if (cfg.m_levels < 1) throw std::invalid_argument("thrust_levels: M must be >= 1");
    std::vector<double> levels(static_cast<std::size_t>(cfg.m_levels));
    const double m = cfg.m_levels;
    for (int k = 0; k < cfg.m_levels; ++k)
        levels[static_cast<std::size_t>(k)] = cfg.e_min + (k * (cfg.e_max - cfg.e_min)) / m; // one rounding
    return levels;
}

Vec4 excitation_basis(double t)
{
    constexpr double pi = std::numbers::pi;
    const double r = pi * t;
    const double theta = pi * std::sin(2.0 * std::sin(2.0 * t));
    const double phi = pi * std::sin(2.0 * t);
    const double cr = std::cos(r);
    const double ct = std::cos(theta);
    return {cr * ct * std::cos(phi), cr * ct * std::sin(phi), cr * std::sin(theta), std::sin(r)};
}

plant::CommandTrace excitation_segment(double e_bias, const ExcitationConfig& cfg)
{
    require_level(e_bias, cfg, false);
    auto tr = empty_trace(cfg);
    const auto n = sample_count(cfg.duration, cfg.dt);
    tr.commands.reserve(n);
    tr.status.assign(n, Vec4{1.0, 1.0, 1.0, 1.0});
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = excitation_basis(static_cast<double>(i) * cfg.dt);
        Vec4 c{};
        for (std::size_t j = 0; j < kEngines; ++j)
            c[j] = std::clamp(e_bias + cfg.a_amp * s[j], cfg.e_min, cfg.e_max);
        tr.commands.push_back(c);
    }
    return tr;
}

plant::CommandTrace step_stair_trace(const std::vector<double>& levels, double hold,
                                     const ExcitationConfig& cfg)
{
    if (levels.empty()) throw std::invalid_argument("step_stair_trace: empty level list");
    if (!(hold > 0.0)) throw std::invalid_argument("step_stair_trace: hold must be positive");
    for (double l : levels) require_level(l, cfg, true);

    auto tr = empty_trace(cfg);
    const auto n = sample_count(hold, cfg.dt);
    for (double l : levels) append_hold(tr, Vec4{l, l, l, l}, n);
    return tr;
}

plant::CommandTrace ramp_trace(double start, double end, double rate,
                               const ExcitationConfig& cfg, double hold)
{
    if (!(rate > 0.0)) throw std::invalid_argument("ramp_trace: rate must be positive");
    require_level(start, cfg, false);
    require_level(end, cfg, false);

    auto tr = empty_trace(cfg);
    const double ramp_time = std::abs(end - start) / rate;
    const auto nr = sample_count(ramp_time, cfg.dt);
    const double dir = end >= start ? 1.0 : -1.0;
    for (std::size_t i = 0; i < nr; ++i) {
        const double c = start + dir * rate * static_cast<double>(i) * cfg.dt;
        append_hold(tr, Vec4{c, c, c, c}, 1);
    }
    append_hold(tr, Vec4{end, end, end, end}, sample_count(hold, cfg.dt));
    return tr;
}

std::string to_string(SegmentKind kind)
{
    switch (kind) {
    case SegmentKind::Excitation: return "excitation";
    case SegmentKind::StepStair: return "step_stair";
    case SegmentKind::Ramp: return "ramp";
    case SegmentKind::Endurance: return "endurance";
    }
    return "unknown";
}

SegmentKind segment_kind_from_string(const std::string& s)
{
    if (s == "excitation") return SegmentKind::Excitation;
    if (s == "step_stair") return SegmentKind::StepStair;
    if (s == "ramp") return SegmentKind::Ramp;
    if (s == "endurance") return SegmentKind::Endurance;
    throw std::invalid_argument("unknown segment kind: " + s);
}

std::vector<CorpusEntry> build_corpus(const ExcitationConfig& cfg)
{
    cfg.validate();
    std::vector<CorpusEntry> corpus;

    const auto levels = thrust_levels(cfg);
    for (auto k : seeded_permutation(levels.size(), cfg.seed)) {
        corpus.push_back({fmt::format("exc_{:02d}", k), SegmentKind::Excitation, levels[k],
                          excitation_segment(levels[k], cfg)});
    }

    const double lo = cfg.e_min;
    const double hi = cfg.e_max;
    const double mid = 0.5 * (lo + hi);
    const double q1 = lo + 0.25 * (hi - lo);
    const double q3 = lo + 0.75 * (hi - lo);
    if (cfg.include_steps) {
        corpus.push_back({"stair_updown", SegmentKind::StepStair, 0.0,
                          step_stair_trace({lo, q1, mid, q3, hi, q3, mid, q1, lo}, 5.0, cfg)});
        corpus.push_back({"stair_fall", SegmentKind::StepStair, 0.0,
                          step_stair_trace({hi, lo, hi, mid, 0.0, mid}, 5.0, cfg)});
        corpus.push_back({"stair_onoff", SegmentKind::StepStair, 0.0,
                          step_stair_trace({0.0, q1, 0.0, hi, 0.0, lo, 0.0, q3}, 4.0, cfg)});
    }
    if (cfg.include_ramps) {
        const double span = hi - lo;
        corpus.push_back({"ramp_up_slow", SegmentKind::Ramp, 0.0,
                          ramp_trace(lo, hi, span / 10.0, cfg)});
        corpus.push_back({"ramp_down_fast", SegmentKind::Ramp, 0.0,
                          ramp_trace(hi, lo, span / 5.0, cfg)});
        corpus.push_back({"ramp_mid", SegmentKind::Ramp, 0.0, ramp_trace(q1, q3, 200.0, cfg)});
    }
    if (cfg.include_endurance) {
        corpus.push_back({"endurance", SegmentKind::Endurance, 0.0, endurance_trace(cfg)});
    }
    return corpus;
}

} // namespace excitation
} // namespace thrustid
