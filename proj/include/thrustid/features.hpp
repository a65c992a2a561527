#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <thrustid/plant.hpp>

namespace thrustid {
namespace features {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct HistorySpec
{
    int n = 6;
};

inline constexpr int kTargets = 7;

/**
 * Column offsets of the history-extended input vector for history length n:
 *
 *   T_r (4) | T_r history (4n, lag-major) | T_o history (4n, lag-major) |
 *   P (1) | P history (n) | m_f history (n) | m_o history (n) | S_e (4) | lambda (1)
 *
 * Lag-major means the block holds lag 1 for all four engines, then lag 2, ...
 * Width is 11n + 10.
 */
struct Layout
{
    int n = 6;

    explicit Layout(int history) : n(history) {}

    int width() const { return 11 * n + 10; }
    int command() const { return 0; }
    int command_history(int lag, int engine) const { return 4 + 4 * (lag - 1) + engine; }
    int thrust_history(int lag, int engine) const { return 4 + 4 * n + 4 * (lag - 1) + engine; }
    int pressure() const { return 4 + 8 * n; }
    int pressure_history(int lag) const { return 5 + 8 * n + (lag - 1); }
    int fuel_history(int lag) const { return 5 + 9 * n + (lag - 1); }
    int ox_history(int lag) const { return 5 + 10 * n + (lag - 1); }
    int status(int engine) const { return 5 + 11 * n + engine; }
    int lambda() const { return 9 + 11 * n; }

    /// Input column carrying the lag-1 value of each target (T_o1..4, P, m_f, m_o).
    std::array<int, kTargets> lag_one_columns() const;

    std::vector<std::string> column_names() const;
};

std::vector<std::string> target_names();

struct LambdaParams
{
    double scale = 1.0; // kg
    double eps = 1.0;   // kg
};

/// [x_{t-1}, x_{t-2}, ..., x_{t-n}]. Throws std::out_of_range when t < n.
std::vector<double> extend_state(const std::vector<double>& series, std::size_t t, int n);

/// scale / (m_f + m_o + eps).
double lambda_feature(double m_f, double m_o, const LambdaParams& p = {});

struct Dataset
{
    RowMatrix inputs;  // |D| x (11n+10)
    RowMatrix targets; // |D| x 7
    HistorySpec history;
    LambdaParams lambda;
    // source identifier and sample index per row
    std::vector<std::pair<std::string, std::int64_t>> provenance;

    Eigen::Index rows() const { return inputs.rows(); }
};

/**
 * Build one row per sample t in [n, len). The "current" pressure and lambda
 * entries hold the latest values available before step t is taken, i.e.
 * those of sample t-1; the sample-t values are the regression targets.
 */
Dataset assemble(const plant::PlantTrajectory& traj, const HistorySpec& history,
                 const std::string& source = "trajectory", const LambdaParams& lambda = {});

/// Single input row for sample t of a trajectory (same rules as assemble()).
Eigen::VectorXd feature_row(const plant::PlantTrajectory& traj, std::size_t t, int n,
                            const LambdaParams& lambda = {});

Dataset merge(const std::vector<Dataset>& datasets);

/// Select rows (in the given order).
Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows);

struct Fold
{
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

enum class SplitMode { Shuffled, Contiguous };

/**
 * k near-equal folds. Shuffled mode permutes rows with the seed first;
 * Contiguous mode cuts the row order into k blocks.
 */
std::vector<Fold> split_kfold(Eigen::Index rows, int k, std::uint64_t seed,
                              SplitMode mode = SplitMode::Shuffled);

inline std::vector<Fold> split_kfold(const Dataset& ds, int k, std::uint64_t seed,
                                     SplitMode mode = SplitMode::Shuffled)
{
    return split_kfold(ds.rows(), k, seed, mode);
}

} // namespace features
} // namespace thrustid
