#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <thrustid/plant.hpp>

namespace thrustid {
namespace excitation {

struct ExcitationConfig
{
    double e_min = 240.0;
    double e_max = 800.0;
    int m_levels = 8;
    double a_amp = 100.0;
    double duration = 30.0;
    double dt = 0.01;
    std::uint64_t seed = 0;
    // the fixed step/ramp family appended by build_corpus()
    bool include_steps = true;
    bool include_ramps = true;
    bool include_endurance = true;

    void validate() const;
};

/// E_k = E_min + (k/M)(E_max - E_min), k = 0..M-1. E_max itself is never emitted.
std::vector<double> thrust_levels(const ExcitationConfig& cfg);

/// Unit-norm direction on the 4-sphere swept by the frequency-modulated angles.
Vec4 excitation_basis(double t);

/// clamp(e_bias + a_amp * S(t)) on all engines for cfg.duration, status all-on.
plant::CommandTrace excitation_segment(double e_bias, const ExcitationConfig& cfg);

/// Holds each level for `hold` seconds on all engines; a level of 0 switches the engines off.
plant::CommandTrace step_stair_trace(const std::vector<double>& levels, double hold,
                                     const ExcitationConfig& cfg);

/// Linear ramp from start to end at `rate` N/s, then holds `end` for `hold` seconds.
plant::CommandTrace ramp_trace(double start, double end, double rate,
                               const ExcitationConfig& cfg, double hold = 5.0);

enum class SegmentKind { Excitation, StepStair, Ramp, Endurance };

std::string to_string(SegmentKind kind);
SegmentKind segment_kind_from_string(const std::string& s);

struct CorpusEntry
{
    std::string id;
    SegmentKind kind = SegmentKind::Excitation;
    double e_bias = 0.0; // excitation bias, 0 for the fixed family
    plant::CommandTrace trace;

    double duration() const { return static_cast<double>(trace.size()) * trace.dt; }
};

/**
 * One excitation segment per thrust level, followed by the fixed step/ramp
 * family. The seed permutes the order of the excitation segments only, so
 * the set of traces is the same for every seed.
 */
std::vector<CorpusEntry> build_corpus(const ExcitationConfig& cfg);

} // namespace excitation
} // namespace thrustid
