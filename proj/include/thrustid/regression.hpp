#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <thrustid/features.hpp>

namespace thrustid {
namespace regression {

using features::RowMatrix;

enum class BasisKind { Linear, ElementwisePoly, FullQuadratic };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

/**
 * Polynomial feature map. Column order:
 *   linear          1, x_1..x_p
 *   elementwise     1, x_1..x_p, x_1^2..x_p^2, ..., x_1^d..x_p^d
 *   full-quadratic  1, x_1..x_p, x_i*x_j for i <= j (row-major upper triangle)
 * The leading 1 is present only when include_bias is set.
 */
struct BasisSpec
{
    BasisKind kind = BasisKind::ElementwisePoly;
    int degree = 2;
    bool include_bias = true;

    void validate() const;
    Eigen::Index width(Eigen::Index p) const;
    /// Column of phi holding the linear term of input i.
    Eigen::Index linear_column(Eigen::Index i) const { return (include_bias ? 1 : 0) + i; }
};

Eigen::VectorXd expand(const Eigen::Ref<const Eigen::VectorXd>& x, const BasisSpec& basis);
RowMatrix expand_rows(const Eigen::Ref<const RowMatrix>& x, const BasisSpec& basis);

/// sign(z) * max(|z| - a, 0)
double soft_threshold(double z, double a);

struct LassoOptions
{
    int max_sweeps = 10000;
    double tolerance = 1e-8; // max absolute coefficient change over a full sweep
    bool record_objective = false;
    // periodically solve the active set exactly with its signs fixed
    bool polish = true;
};

/**
 * 0.5 * beta' G beta - c' beta + 0.5 * yty, i.e. 0.5 * ||y - X beta||^2
 * expressed through G = X'X, c = X'y, yty = y'y.
 */
struct QuadraticProblem
{
    Eigen::MatrixXd gram;
    Eigen::VectorXd xty;
    double yty = 0.0;
};

QuadraticProblem make_problem(const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y);

struct LassoSolution
{
    Eigen::VectorXd beta;
    int sweeps = 0;
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::vector<double> objective_trace; // after each sweep, when recorded
};

class NotConverged : public std::runtime_error
{
public:
    NotConverged(const std::string& what, double kkt, int sweeps)
        : std::runtime_error(what), kkt_residual_(kkt), sweeps_(sweeps)
    {}
    double kkt_residual() const { return kkt_residual_; }
    int sweeps() const { return sweeps_; }

private:
    double kkt_residual_;
    int sweeps_;
};

double lasso_objective(const QuadraticProblem& prob, const Eigen::VectorXd& beta, double penalty);

/**
 * Largest violation of the lasso optimality conditions:
 *   beta_j == 0:  |grad_j| <= penalty
 *   beta_j != 0:  grad_j + penalty * sign(beta_j) == 0
 * where grad is the gradient of the smooth term. Columns with a zero Gram
 * diagonal carry no information and are skipped.
 */
double kkt_residual(const QuadraticProblem& prob, const Eigen::VectorXd& beta, double penalty);

/**
 * Cyclic coordinate descent with covariance updates on
 *   0.5 * ||y - X beta||^2 + penalty * ||beta||_1.
 * Alternates full sweeps with sweeps over the active set, with an optional
 * sign-preserving least-squares solve on the active set. Throws
 * NotConverged after opts.max_sweeps passes.
 */
LassoSolution solve_lasso(const QuadraticProblem& prob, double penalty, const LassoOptions& opts = {},
                          const Eigen::VectorXd* warm_start = nullptr);

LassoSolution solve_lasso(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y, double penalty,
                          const LassoOptions& opts = {});

// ---------------------------------------------------------------------------
// Multi-output fitting on standardized features

enum class LossScale {
    Sum,  // 0.5 * sum of squared residuals + mu * ||K||_1
    Mean, // same with the squared-error term divided by the row count
};

struct FitOptions
{
    LassoOptions solver;
    LossScale loss = LossScale::Mean;
    bool standardize_targets = true;
    // phi column holding each target's previous value, or -1. The fit then
    // learns the increment over that column and K carries a unit entry there.
    std::vector<Eigen::Index> persistence;
};

/**
 * Per-column centering and scaling of phi and of the (possibly
 * increment-transformed) targets. Zero-variance columns have scale 1; columns
 * that are numerically linear combinations of earlier columns are excluded
 * from the fit.
 */
struct Standardization
{
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    Eigen::VectorXd target_mean;
    Eigen::VectorXd target_scale;

    RowMatrix apply(const Eigen::Ref<const RowMatrix>& phi) const;
    RowMatrix invert(const Eigen::Ref<const RowMatrix>& z) const;
};

/**
 * Accumulated cross-products of phi and the regression targets over a row
 * set. Values are stored relative to a reference shift/scale to avoid
 * cancellation, and row sets can be added or subtracted, which gives
 * training-fold moments as (all rows) - (test fold).
 */
class Moments
{
public:
    Moments() = default;
    Moments(Eigen::VectorXd shift, Eigen::VectorXd scale, Eigen::VectorXd target_shift,
            Eigen::VectorXd target_scale);

    /// Reference shift/scale taken from (a sample of) the given rows.
    static Moments with_reference(const Eigen::Ref<const RowMatrix>& phi,
                                  const Eigen::Ref<const RowMatrix>& targets);

    /// targets must already be the regression targets (increments where persistence applies).
    void add(const Eigen::Ref<const RowMatrix>& phi, const Eigen::Ref<const RowMatrix>& targets);

    /// Same reference, no rows.
    Moments empty_copy() const { return Moments(shift_, scale_, target_shift_, target_scale_); }

    Moments& operator+=(const Moments& other);
    Moments& operator-=(const Moments& other);

    Eigen::Index count() const { return count_; }
    Eigen::Index features() const { return shift_.size(); }
    Eigen::Index outputs() const { return target_shift_.size(); }

    friend struct NormalSystem;

private:
    Eigen::VectorXd shift_, scale_, target_shift_, target_scale_;
    Eigen::MatrixXd uu_; // sum u u'
    Eigen::VectorXd u_;  // sum u
    Eigen::MatrixXd uv_; // sum u v'
    Eigen::VectorXd v_;  // sum v
    Eigen::VectorXd vv_; // sum v .* v
    Eigen::Index count_ = 0;
};

/// Standardized least-squares system, one right-hand side per output.
struct NormalSystem
{
    Eigen::MatrixXd gram; // F x F
    Eigen::MatrixXd xty;  // F x T
    Eigen::VectorXd yty;  // T
    Standardization standardization;
    Eigen::Index rows = 0;
    bool centered = true;

    static NormalSystem from_moments(const Moments& m, const FitOptions& opts, bool has_bias);

    QuadraticProblem problem(Eigen::Index output) const;
};

/// Regression targets: y minus the persistence column, where one is set.
RowMatrix increment_targets(const Eigen::Ref<const RowMatrix>& phi,
                            const Eigen::Ref<const RowMatrix>& targets,
                            const std::vector<Eigen::Index>& persistence);

struct LassoFit
{
    Eigen::MatrixXd K;    // T x F, acts on raw phi
    Eigen::MatrixXd beta; // F x T, standardized coordinates
    Standardization standardization;
    double sparsity = 0.0;
    double kkt_residual = 0.0;
    int sweeps = 0;
};

/// Solve every output of the system at weight mu. warm_beta is F x T.
LassoFit solve_system(const NormalSystem& sys, double mu, const FitOptions& opts,
                      const Eigen::MatrixXd* warm_beta = nullptr);

/**
 * Fit K in Y ~ K phi by lasso on standardized columns. Column 0 of phi is
 * treated as the unpenalized bias when has_bias is set.
 */
LassoFit fit_lasso(const Eigen::Ref<const RowMatrix>& phi, const Eigen::Ref<const RowMatrix>& targets,
                   double mu, const FitOptions& opts = {}, bool has_bias = true);

// ---------------------------------------------------------------------------

struct CoefficientModel
{
    Eigen::MatrixXd K; // 7 x F
    BasisSpec basis;
    Standardization standardization;
    double mu = 0.0;
    int n = 6;
    double sparsity = 0.0;
    features::LambdaParams lambda;
    std::vector<Eigen::Index> persistence;
    double kkt_residual = 0.0;
    int sweeps = 0;

    Eigen::Index input_width() const { return features::Layout(n).width(); }
};

/// Persistence columns of the history layout (lag-1 value of each target) in phi.
std::vector<Eigen::Index> persistence_columns(int n, const BasisSpec& basis);

/// Fit a model on a dataset: expand, fit_lasso with persistence on every target.
CoefficientModel train_model(const features::Dataset& ds, const BasisSpec& basis, double mu,
                             FitOptions opts = {});

Eigen::VectorXd predict(const CoefficientModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);
RowMatrix predict_rows(const CoefficientModel& model, const Eigen::Ref<const RowMatrix>& x);

struct RmseResult
{
    Eigen::VectorXd per_output;
    double aggregate = 0.0; // root mean square of per_output
};

RmseResult rmse(const Eigen::Ref<const RowMatrix>& pred, const Eigen::Ref<const RowMatrix>& truth);

} // namespace regression
} // namespace thrustid
