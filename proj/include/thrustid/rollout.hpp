#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <thrustid/plant.hpp>
#include <thrustid/regression.hpp>

namespace thrustid {
namespace rollout {

using features::RowMatrix;

/**
 * History buffers of the autoregressive loop. Index 0 of each buffer is the
 * most recent sample (lag 1).
 */
class RolloutState
{
public:
    explicit RolloutState(int n);

    int n() const { return n_; }
    bool warmed() const { return filled_ >= n_; }
    std::size_t time_index() const { return t_; }

    /// Append one sample (outputs plus the effective command T_r = cmd * status).
    void push(const Vec4& commanded, const Vec4& thrust, double pressure, double m_fuel, double m_ox);

    /// Input vector for the next step given its command and status.
    Eigen::VectorXd features(const Vec4& command, const Vec4& status,
                             const features::LambdaParams& lambda) const;

private:
    int n_;
    std::size_t t_ = 0;
    int filled_ = 0;
    std::vector<Vec4> commanded_, thrust_;
    std::vector<double> pressure_, m_fuel_, m_ox_;
};

/// Non-finite model output; the rollout stops at that step.
class Diverged : public std::runtime_error
{
public:
    Diverged(const std::string& what, std::size_t step, double time)
        : std::runtime_error(what), step_(step), time_(time)
    {}
    std::size_t step() const { return step_; }
    double time() const { return time_; }

private:
    std::size_t step_;
    double time_;
};

struct RolloutResult
{
    plant::PlantTrajectory predicted; // clamped values, the ones fed back
    RowMatrix raw;                    // (N+1) x 7 model outputs before clamping
};

/**
 * Free-running prediction over trace. Rows 0..n-1 are copied from the
 * warm-up prefix; every later row comes from the model fed with its own
 * previous outputs. Thrusts are clamped at 0 and masses kept non-decreasing
 * after each step. Throws Diverged on a non-finite prediction.
 */
RolloutResult rollout(const regression::CoefficientModel& model, const plant::CommandTrace& trace,
                      const plant::PlantTrajectory& warmup);

/// One-step-ahead predictions from true histories. Rows 0..n-1 copy the truth.
RolloutResult teacher_forced(const regression::CoefficientModel& model,
                             const plant::PlantTrajectory& truth);

struct WindowOptions
{
    double settle_window = 1.0; // s after a command change
    double change_threshold = 1.0; // N, per-sample command change that opens a window
    std::size_t skip = 0;           // leading samples excluded from every statistic
};

/**
 * Per-experiment error summary. Thrust errors are in N, pressure in Pa,
 * masses in kg. Arrays are indexed by output (To1..To4, P, mf, mo).
 */
struct ValidationReport
{
    std::string id;
    std::string mode; // "rollout", "teacher-forced" or "passthrough"
    double sparsity = 0.0;
    std::size_t samples = 0;
    std::size_t transient_samples = 0;
    std::size_t steady_samples = 0;
    Eigen::VectorXd rmse;
    Eigen::VectorXd max_error;
    Eigen::VectorXd transient_max;
    Eigen::VectorXd steady_max;
    Eigen::VectorXd raw_max_error; // before clamping
    double settled_max_thrust = 0.0; // thrust max after the initial settle window
    double mass_max_error = 0.0;     // module mass, kg
    bool diverged = false;
    double divergence_time = 0.0;
    std::string error;

    double thrust_max() const;
    double thrust_transient_max() const;
    double thrust_steady_max() const;
};

/// Transient flags per sample: within settle_window after a command change.
std::vector<bool> transient_mask(const plant::PlantTrajectory& traj, const WindowOptions& opts);

/**
 * Compare aligned trajectories. raw may be empty, in which case raw errors
 * equal the clamped ones.
 */
ValidationReport error_windows(const plant::PlantTrajectory& truth, const plant::PlantTrajectory& pred,
                               const plant::PlantConfig& cfg, const WindowOptions& opts = {},
                               const RowMatrix& raw = {});

/// Teacher-forced report on a true trajectory.
ValidationReport teacher_forced_eval(const regression::CoefficientModel& model,
                                     const plant::PlantTrajectory& truth, const plant::PlantConfig& cfg,
                                     const WindowOptions& opts = {});

/// Simulate the plant on trace, roll the model out from a truth warm-up and compare.
/// Divergence is captured in the report rather than thrown.
ValidationReport rollout_eval(const std::string& id, const regression::CoefficientModel& model,
                              const plant::CommandTrace& trace, const plant::PlantConfig& cfg,
                              const WindowOptions& opts = {},
                              plant::PlantTrajectory* truth_out = nullptr,
                              RolloutResult* result_out = nullptr);

/// Full-profile rollout evaluation; rejects an empty profile.
ValidationReport descent_profile_eval(const regression::CoefficientModel& model,
                                      const plant::CommandTrace& profile, const plant::PlantConfig& cfg,
                                      const WindowOptions& opts = {});

/**
 * Synthetic powered-descent command profile of about 1000 s: ignition and
 * high-thrust braking, a long coast, a throttled two-engine phase, pitch-over
 * style differential throttling and a low-thrust terminal phase ending in
 * shutdown.
 */
plant::CommandTrace descent_profile(const plant::PlantConfig& cfg);

} // namespace rollout
} // namespace thrustid
