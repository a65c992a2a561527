#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <thrustid/features.hpp>
#include <thrustid/regression.hpp>

namespace thrustid {
namespace tuning {

/// 1e-5 .. 1e0 in half-decade steps.
std::vector<double> default_mu_grid();

/// How close two grid points must be to count as tied. Exact compares the mean
/// test RMSE only; OneStandardError treats anything within one standard error
/// (fold sd / sqrt(k)) of the best mean as tied with it.
enum class TieRule { Exact, OneStandardError };

struct SweepConfig
{
    std::vector<int> n_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> mu_grid = default_mu_grid();
    int k = 5;
    std::uint64_t seed = 0;
    double mu_fixed = 1e-3; // weight used while sweeping n
    TieRule tie_rule = TieRule::OneStandardError;

    void validate() const;
};

/// One fit of one fold at one grid point. RMSE values are normalized per
/// output by the spread of its regression target and then aggregated.
struct FoldResult
{
    int fold = 0;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    double sparsity = 0.0;
    int sweeps = 0;
};

struct GridPoint
{
    int n = 0;
    double mu = 0.0;
    std::vector<FoldResult> folds;
    double train_rmse = 0.0; // mean over folds
    double test_rmse = 0.0;
    double test_rmse_sd = 0.0;
    double sparsity = 0.0;
    Eigen::VectorXd test_rmse_per_output; // physical units, mean over folds
};

enum class SweepKind { History, Mu };

struct SweepReport
{
    SweepKind kind = SweepKind::History;
    std::vector<GridPoint> points; // grid order
    int k = 0;
    TieRule tie_rule = TieRule::OneStandardError;
    int selected_n = 0;
    double selected_mu = 0.0;
    // selection by the bare minimum, for comparison
    int exact_n = 0;
    double exact_mu = 0.0;
};

class SweepError : public std::runtime_error
{
public:
    SweepError(const std::string& what, int n, double mu, int fold)
        : std::runtime_error(what), n_(n), mu_(mu), fold_(fold)
    {}
    int n() const { return n_; }
    double mu() const { return mu_; }
    int fold() const { return fold_; }

private:
    int n_;
    double mu_;
    int fold_;
};

/**
 * Cross-validation of one dataset at a list of weights. Folds are drawn from
 * the row count with the seed; fits along the list warm-start from the
 * previous weight, so pass the weights from largest to smallest for speed.
 */
std::vector<GridPoint> cross_validate(const features::Dataset& ds, const regression::BasisSpec& basis,
                                      const std::vector<double>& mus, int k, std::uint64_t seed,
                                      const regression::FitOptions& opts = {});

/**
 * k-fold CV at every n of the grid with mu fixed at cfg.mu_fixed. Picks the n
 * with the lowest mean test RMSE, smaller n on ties (see TieRule).
 */
SweepReport sweep_history(const std::map<int, features::Dataset>& datasets,
                          const regression::BasisSpec& basis, const SweepConfig& cfg,
                          const regression::FitOptions& opts = {});

/// Same, assembling each dataset on demand so only one is held at a time.
SweepReport sweep_history(const std::function<features::Dataset(int)>& dataset_at,
                          const regression::BasisSpec& basis, const SweepConfig& cfg,
                          const regression::FitOptions& opts = {});

/// k-fold CV along the mu grid. Lowest mean test RMSE wins, larger mu on ties.
SweepReport sweep_mu(const features::Dataset& ds, const regression::BasisSpec& basis,
                     const SweepConfig& cfg, const regression::FitOptions& opts = {});

struct ParetoRow
{
    double mu = 0.0;
    double sparsity = 0.0;
    double test_rmse = 0.0;
    bool pareto = false;
};

/// Full path in grid order with the non-dominated points flagged.
std::vector<ParetoRow> pareto_table(const SweepReport& report);

/// Index of the path point where the Pareto front bends most (largest distance
/// from the chord between its end points, on normalized axes).
std::size_t pareto_knee(const std::vector<ParetoRow>& table);

/**
 * Index of the selected point: among points tied with the minimum under the
 * rule, the one that is best by `prefer` (a strict "a is preferred to b").
 */
std::size_t select_point(const std::vector<GridPoint>& points, TieRule rule,
                         const std::function<bool(const GridPoint&, const GridPoint&)>& prefer);

std::string to_string(SweepKind kind);
std::string to_string(TieRule rule);
TieRule tie_rule_from_string(const std::string& s);

} // namespace tuning
} // namespace thrustid
