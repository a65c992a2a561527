#include <thrustid/regression.hpp>

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace thrustid {
namespace regression {

std::string to_string(BasisKind kind)
{
    switch (kind) {
    case BasisKind::Linear: return "linear";
    case BasisKind::ElementwisePoly: return "elementwise-poly";
    case BasisKind::FullQuadratic: return "full-quadratic";
    }
    return "unknown";
}

BasisKind basis_kind_from_string(const std::string& s)
{
    if (s == "linear") return BasisKind::Linear;
    if (s == "elementwise-poly" || s == "elementwise") return BasisKind::ElementwisePoly;
    if (s == "full-quadratic" || s == "quadratic") return BasisKind::FullQuadratic;
    throw std::invalid_argument("unknown basis kind: " + s);
}

void BasisSpec::validate() const
{
    if (degree < 1) throw std::invalid_argument("BasisSpec: degree must be >= 1");
    if (kind == BasisKind::FullQuadratic && degree != 2)
        throw std::invalid_argument("BasisSpec: full-quadratic basis has degree 2");
}

Eigen::Index BasisSpec::width(Eigen::Index p) const
{
    const Eigen::Index bias = include_bias ? 1 : 0;
    switch (kind) {
    case BasisKind::Linear: return bias + p;
    case BasisKind::ElementwisePoly: return bias + degree * p;
    case BasisKind::FullQuadratic: return bias + p + p * (p + 1) / 2;
    }
    return 0;
}

namespace {

template <class In, class Out>
void expand_into(const In& x, Out&& out, const BasisSpec& basis)
{
    const Eigen::Index p = x.size();
    Eigen::Index at = 0;
    if (basis.include_bias) out(at++) = 1.0;
    for (Eigen::Index i = 0; i < p; ++i) out(at++) = x(i);
    if (basis.kind == BasisKind::ElementwisePoly) {
        for (int d = 2; d <= basis.degree; ++d) {
            for (Eigen::Index i = 0; i < p; ++i) {
                // reuse the previous power block
                out(at) = out(at - p) * x(i);
                ++at;
            }
        }
    } else if (basis.kind == BasisKind::FullQuadratic) {
        for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = i; j < p; ++j) out(at++) = x(i) * x(j);
    }
}

} // namespace

Eigen::VectorXd expand(const Eigen::Ref<const Eigen::VectorXd>& x, const BasisSpec& basis)
{
    basis.validate();
    Eigen::VectorXd out(basis.width(x.size()));
    expand_into(x, out, basis);
    return out;
}

RowMatrix expand_rows(const Eigen::Ref<const RowMatrix>& x, const BasisSpec& basis)
{
    basis.validate();
    RowMatrix out(x.rows(), basis.width(x.cols()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) expand_into(x.row(r), out.row(r), basis);
    return out;
}

double soft_threshold(double z, double a)
{
    if (z > a) return z - a;
    if (z < -a) return z + a;
    return 0.0;
}

QuadraticProblem make_problem(const Eigen::Ref<const Eigen::MatrixXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y)
{
    if (x.rows() != y.size()) throw std::invalid_argument("make_problem: row count mismatch");
    QuadraticProblem prob;
    prob.gram = x.transpose() * x;
    prob.xty = x.transpose() * y;
    prob.yty = y.squaredNorm();
    return prob;
}

namespace {

double objective_of(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double yty,
                    const Eigen::VectorXd& beta, double penalty)
{
    return 0.5 * beta.dot(gram * beta) - xty.dot(beta) + 0.5 * yty + penalty * beta.lpNorm<1>();
}

double kkt_of(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, const Eigen::VectorXd& beta,
              double penalty)
{
    const Eigen::VectorXd grad = gram * beta - xty;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (!(gram(j, j) > 0.0)) continue;
        const double v = beta(j) == 0.0 ? std::max(std::abs(grad(j)) - penalty, 0.0)
                                        : std::abs(grad(j) + penalty * (beta(j) > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

LassoSolution coordinate_descent(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double yty,
                                 double penalty, const LassoOptions& opts,
                                 const Eigen::VectorXd* warm_start)
{
    const Eigen::Index f = xty.size();
    if (gram.rows() != f || gram.cols() != f)
        throw std::invalid_argument("solve_lasso: Gram matrix shape mismatch");
    if (!(penalty >= 0.0) || !std::isfinite(penalty))
        throw std::invalid_argument("solve_lasso: penalty must be finite and >= 0");
    if (!gram.allFinite() || !xty.allFinite() || !std::isfinite(yty))
        throw std::invalid_argument("solve_lasso: non-finite data");

    LassoSolution sol;
    sol.beta = Eigen::VectorXd::Zero(f);
    if (warm_start != nullptr) {
        if (warm_start->size() != f) throw std::invalid_argument("solve_lasso: warm start size");
        sol.beta = *warm_start;
        for (Eigen::Index j = 0; j < f; ++j)
            if (!(gram(j, j) > 0.0)) sol.beta(j) = 0.0;
    }
    // negative gradient of the smooth term
    Eigen::VectorXd g = xty - gram * sol.beta;

    auto pass = [&](bool full) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < f; ++j) {
            const double bj = sol.beta(j);
            if (!full && bj == 0.0) continue;
            const double gjj = gram(j, j);
            if (!(gjj > 0.0)) continue;
            const double nb = soft_threshold(g(j) + gjj * bj, penalty) / gjj;
            const double d = nb - bj;
            if (d != 0.0) {
                g.noalias() -= d * gram.col(j);
                sol.beta(j) = nb;
                max_change = std::max(max_change, std::abs(d));
            }
        }
        ++sol.sweeps;
        if (opts.record_objective)
            sol.objective_trace.push_back(objective_of(gram, xty, yty, sol.beta, penalty));
        return max_change;
    };
    auto give_up = [&] {
        const double kkt = kkt_of(gram, xty, sol.beta, penalty);
        throw NotConverged(fmt::format("lasso did not converge in {} sweeps (KKT residual {:.3e})",
                                       sol.sweeps, kkt),
                           kkt, sol.sweeps);
    };

    // Active-set step: minimize the smooth part plus penalty * s'beta over the
    // current support with the signs s held fixed. Moving from beta toward
    // that minimizer decreases the objective until some coordinate reaches
    // zero; stop there, drop it and repeat on the smaller support.
    auto polish = [&] {
        std::vector<Eigen::Index> act;
        for (Eigen::Index j = 0; j < f; ++j)
            if (sol.beta(j) != 0.0) act.push_back(j);
        bool moved = false;
        while (!act.empty()) {
            const auto na = static_cast<Eigen::Index>(act.size());
            Eigen::MatrixXd gaa(na, na);
            Eigen::VectorXd rhs(na), cur(na);
            for (Eigen::Index a = 0; a < na; ++a) {
                const auto ja = act[static_cast<std::size_t>(a)];
                cur(a) = sol.beta(ja);
                rhs(a) = xty(ja) - penalty * (cur(a) > 0.0 ? 1.0 : -1.0);
                for (Eigen::Index b = 0; b < na; ++b) gaa(a, b) = gram(ja, act[static_cast<std::size_t>(b)]);
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(gaa);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
            const Eigen::VectorXd x = ldlt.solve(rhs);
            if (!x.allFinite() || (gaa * x - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) break;

            double step = 1.0;
            Eigen::Index blocking = -1;
            for (Eigen::Index a = 0; a < na; ++a) {
                if (x(a) * cur(a) <= 0.0) {
                    const double t = cur(a) / (cur(a) - x(a));
                    if (t < step) {
                        step = t;
                        blocking = a;
                    }
                }
            }
            for (Eigen::Index a = 0; a < na; ++a)
                sol.beta(act[static_cast<std::size_t>(a)]) = cur(a) + step * (x(a) - cur(a));
            moved = true;
            if (blocking < 0) break;
            sol.beta(act[static_cast<std::size_t>(blocking)]) = 0.0;
            act.erase(act.begin() + blocking);
        }
        if (moved) g = xty - gram * sol.beta;
        return moved;
    };

    for (;;) {
        if (sol.sweeps >= opts.max_sweeps) give_up();
        if (pass(true) < opts.tolerance) break;
        for (int inner = 1;; ++inner) {
            if (sol.sweeps >= opts.max_sweeps) give_up();
            if (pass(false) < opts.tolerance) break;
            if (opts.polish && inner % 16 == 0 && polish()) break;
        }
    }
    sol.objective = objective_of(gram, xty, yty, sol.beta, penalty);
    sol.kkt_residual = kkt_of(gram, xty, sol.beta, penalty);
    return sol;
}

} // namespace

double lasso_objective(const QuadraticProblem& prob, const Eigen::VectorXd& beta, double penalty)
{
    return objective_of(prob.gram, prob.xty, prob.yty, beta, penalty);
}

double kkt_residual(const QuadraticProblem& prob, const Eigen::VectorXd& beta, double penalty)
{
    return kkt_of(prob.gram, prob.xty, beta, penalty);
}

LassoSolution solve_lasso(const QuadraticProblem& prob, double penalty, const LassoOptions& opts,
                          const Eigen::VectorXd* warm_start)
{
    return coordinate_descent(prob.gram, prob.xty, prob.yty, penalty, opts, warm_start);
}

LassoSolution solve_lasso(const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y, double penalty,
                          const LassoOptions& opts)
{
    return solve_lasso(make_problem(x, y), penalty, opts);
}

// ---------------------------------------------------------------------------

RowMatrix Standardization::apply(const Eigen::Ref<const RowMatrix>& phi) const
{
    RowMatrix z = phi;
    z.rowwise() -= mean.transpose();
    z.array().rowwise() /= scale.transpose().array();
    return z;
}

RowMatrix Standardization::invert(const Eigen::Ref<const RowMatrix>& z) const
{
    RowMatrix phi = z;
    phi.array().rowwise() *= scale.transpose().array();
    phi.rowwise() += mean.transpose();
    return phi;
}

Moments::Moments(Eigen::VectorXd shift, Eigen::VectorXd scale, Eigen::VectorXd target_shift,
                 Eigen::VectorXd target_scale)
    : shift_(std::move(shift)),
      scale_(std::move(scale)),
      target_shift_(std::move(target_shift)),
      target_scale_(std::move(target_scale))
{
    const auto f = shift_.size();
    const auto t = target_shift_.size();
    uu_ = Eigen::MatrixXd::Zero(f, f);
    u_ = Eigen::VectorXd::Zero(f);
    uv_ = Eigen::MatrixXd::Zero(f, t);
    v_ = Eigen::VectorXd::Zero(t);
    vv_ = Eigen::VectorXd::Zero(t);
}

namespace {

void column_reference(const Eigen::Ref<const RowMatrix>& m, Eigen::VectorXd& shift,
                      Eigen::VectorXd& scale)
{
    constexpr Eigen::Index kSample = 8192;
    const Eigen::Index rows = m.rows();
    const Eigen::Index stride = std::max<Eigen::Index>(1, rows / kSample);
    shift = Eigen::VectorXd::Zero(m.cols());
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(m.cols());
    Eigen::Index count = 0;
    for (Eigen::Index r = 0; r < rows; r += stride, ++count) shift += m.row(r).transpose();
    if (count > 0) shift /= static_cast<double>(count);
    for (Eigen::Index r = 0; r < rows; r += stride)
        sq += (m.row(r).transpose() - shift).array().square().matrix();
    scale = Eigen::VectorXd::Ones(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double s = count > 0 ? std::sqrt(sq(j) / static_cast<double>(count)) : 0.0;
        if (s > 0.0 && std::isfinite(s)) scale(j) = s;
    }
}

} // namespace

Moments Moments::with_reference(const Eigen::Ref<const RowMatrix>& phi,
                                const Eigen::Ref<const RowMatrix>& targets)
{
    Eigen::VectorXd s, c, ts, tc;
    column_reference(phi, s, c);
    column_reference(targets, ts, tc);
    return Moments(s, c, ts, tc);
}

void Moments::add(const Eigen::Ref<const RowMatrix>& phi, const Eigen::Ref<const RowMatrix>& targets)
{
    if (phi.cols() != shift_.size() || targets.cols() != target_shift_.size() ||
        phi.rows() != targets.rows())
        throw std::invalid_argument("Moments::add: shape mismatch");
    Eigen::MatrixXd u = phi;
    u.rowwise() -= shift_.transpose();
    u.array().rowwise() /= scale_.transpose().array();
    Eigen::MatrixXd v = targets;
    v.rowwise() -= target_shift_.transpose();
    v.array().rowwise() /= target_scale_.transpose().array();

    uu_.selfadjointView<Eigen::Lower>().rankUpdate(u.transpose());
    u_ += u.colwise().sum().transpose();
    uv_.noalias() += u.transpose() * v;
    v_ += v.colwise().sum().transpose();
    vv_ += v.colwise().squaredNorm().transpose();
    count_ += phi.rows();
}

Moments& Moments::operator+=(const Moments& o)
{
    uu_ += o.uu_;
    u_ += o.u_;
    uv_ += o.uv_;
    v_ += o.v_;
    vv_ += o.vv_;
    count_ += o.count_;
    return *this;
}

Moments& Moments::operator-=(const Moments& o)
{
    uu_ -= o.uu_;
    u_ -= o.u_;
    uv_ -= o.uv_;
    v_ -= o.v_;
    vv_ -= o.vv_;
    count_ -= o.count_;
    return *this;
}

namespace {
// residual variance (as a fraction of the column's own) below which a column
// counts as dependent on the columns before it
constexpr double kRankTolerance = 1e-10;
} // namespace

NormalSystem NormalSystem::from_moments(const Moments& m, const FitOptions& opts, bool has_bias)
{
    if (m.count_ <= 0) throw std::invalid_argument("NormalSystem: no rows");
    const double n = static_cast<double>(m.count_);
    const Eigen::Index f = m.features();
    const Eigen::Index t = m.outputs();

    // second moments in reference units; only the lower triangle of uu_ is filled
    Eigen::MatrixXd uu = m.uu_.selfadjointView<Eigen::Lower>();
    uu /= n;
    Eigen::MatrixXd uv = m.uv_ / n;
    Eigen::VectorXd vv = m.vv_ / n;
    Eigen::VectorXd mu_u = m.u_ / n;
    Eigen::VectorXd mu_v = m.v_ / n;

    NormalSystem sys;
    sys.rows = m.count_;
    sys.centered = has_bias;
    auto& st = sys.standardization;
    st.mean.resize(f);
    st.scale.resize(f);
    st.target_mean.resize(t);
    st.target_scale.resize(t);

    Eigen::MatrixXd cov_uu, cov_uv;
    Eigen::VectorXd var_v;
    if (has_bias) {
        cov_uu = uu - mu_u * mu_u.transpose();
        cov_uv = uv - mu_u * mu_v.transpose();
        var_v = vv - mu_v.cwiseProduct(mu_v);
        st.mean = m.shift_ + m.scale_.cwiseProduct(mu_u);
        st.target_mean = m.target_shift_ + m.target_scale_.cwiseProduct(mu_v);
    } else {
        // uncentered moments of phi itself, expressed in reference scale units
        Eigen::VectorXd a = m.shift_.cwiseQuotient(m.scale_);
        cov_uu = uu + a * mu_u.transpose() + mu_u * a.transpose() + a * a.transpose();
        Eigen::VectorXd b = m.target_shift_.cwiseQuotient(m.target_scale_);
        cov_uv = uv + a * mu_v.transpose() + mu_u * b.transpose() + a * b.transpose();
        var_v = vv + 2.0 * b.cwiseProduct(mu_v) + b.cwiseProduct(b);
        st.mean.setZero();
        st.target_mean.setZero();
    }

    Eigen::VectorXd sd_u(f);
    for (Eigen::Index j = 0; j < f; ++j) {
        const double var = cov_uu(j, j);
        const double ref = std::max(uu(j, j), 1e-300);
        const bool constant = !(var > 1e-12 * ref);
        sd_u(j) = constant ? 0.0 : std::sqrt(var);
        st.scale(j) = constant ? 1.0 : m.scale_(j) * sd_u(j);
    }
    // Columns that are (numerically) linear combinations of earlier columns
    // add nothing and stall the solver; they are left out like constant
    // columns. Screened in column order with an incremental Cholesky factor
    // of the correlation matrix.
    {
        std::vector<Eigen::Index> kept;
        Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(f, f);
        for (Eigen::Index j = 0; j < f; ++j) {
            if (sd_u(j) == 0.0) continue;
            const auto nk = static_cast<Eigen::Index>(kept.size());
            Eigen::VectorXd l(nk);
            for (Eigen::Index a = 0; a < nk; ++a) {
                const auto i = kept[static_cast<std::size_t>(a)];
                double v = cov_uu(i, j) / (sd_u(i) * sd_u(j));
                for (Eigen::Index b = 0; b < a; ++b) v -= chol(a, b) * l(b);
                l(a) = v / chol(a, a);
            }
            const double resid = 1.0 - l.squaredNorm();
            if (!(resid > kRankTolerance)) {
                sd_u(j) = 0.0;
                continue;
            }
            chol.row(nk).head(nk) = l.transpose();
            chol(nk, nk) = std::sqrt(resid);
            kept.push_back(j);
        }
    }
    Eigen::VectorXd sd_v(t);
    for (Eigen::Index o = 0; o < t; ++o) {
        const double var = var_v(o);
        sd_v(o) = var > 0.0 ? std::sqrt(var) : 0.0;
        st.target_scale(o) =
            opts.standardize_targets && sd_v(o) > 0.0 ? m.target_scale_(o) * sd_v(o) : 1.0;
    }

    const double loss_factor = opts.loss == LossScale::Sum ? n : 1.0;
    sys.gram = Eigen::MatrixXd::Zero(f, f);
    sys.xty = Eigen::MatrixXd::Zero(f, t);
    sys.yty.resize(t);
    for (Eigen::Index o = 0; o < t; ++o) {
        // v in units of the final target scale
        const double vs = m.target_scale_(o) / st.target_scale(o);
        sys.yty(o) = loss_factor * var_v(o) * vs * vs;
    }
    for (Eigen::Index k = 0; k < f; ++k) {
        if (sd_u(k) == 0.0) continue;
        for (Eigen::Index j = 0; j < f; ++j) {
            if (sd_u(j) == 0.0) continue;
            sys.gram(j, k) = loss_factor * cov_uu(j, k) / (sd_u(j) * sd_u(k));
        }
        for (Eigen::Index o = 0; o < t; ++o) {
            const double vs = m.target_scale_(o) / st.target_scale(o);
            sys.xty(k, o) = loss_factor * cov_uv(k, o) * vs / sd_u(k);
        }
    }
    return sys;
}

QuadraticProblem NormalSystem::problem(Eigen::Index output) const
{
    return QuadraticProblem{gram, xty.col(output), yty(output)};
}

RowMatrix increment_targets(const Eigen::Ref<const RowMatrix>& phi,
                            const Eigen::Ref<const RowMatrix>& targets,
                            const std::vector<Eigen::Index>& persistence)
{
    RowMatrix r = targets;
    if (persistence.empty()) return r;
    if (static_cast<Eigen::Index>(persistence.size()) != targets.cols())
        throw std::invalid_argument("persistence list must have one entry per target");
    for (Eigen::Index o = 0; o < targets.cols(); ++o) {
        const auto c = persistence[static_cast<std::size_t>(o)];
        if (c < 0) continue;
        if (c >= phi.cols()) throw std::invalid_argument("persistence column out of range");
        r.col(o) -= phi.col(c);
    }
    return r;
}

LassoFit solve_system(const NormalSystem& sys, double mu, const FitOptions& opts,
                      const Eigen::MatrixXd* warm_beta)
{
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("fit: mu must be >= 0");
    const Eigen::Index f = sys.gram.rows();
    const Eigen::Index t = sys.xty.cols();
    if (warm_beta != nullptr && (warm_beta->rows() != f || warm_beta->cols() != t))
        throw std::invalid_argument("fit: warm start shape mismatch");

    LassoFit fit;
    fit.standardization = sys.standardization;
    fit.beta = Eigen::MatrixXd::Zero(f, t);
    for (Eigen::Index o = 0; o < t; ++o) {
        Eigen::VectorXd warm;
        if (warm_beta != nullptr) warm = warm_beta->col(o);
        Eigen::VectorXd rhs = sys.xty.col(o);
        auto sol = coordinate_descent(sys.gram, rhs, sys.yty(o), mu, opts.solver,
                                      warm_beta != nullptr ? &warm : nullptr);
        fit.beta.col(o) = sol.beta;
        fit.kkt_residual = std::max(fit.kkt_residual, sol.kkt_residual);
        fit.sweeps = std::max(fit.sweeps, sol.sweeps);
    }

    const auto& st = fit.standardization;
    fit.K = Eigen::MatrixXd::Zero(t, f);
    Eigen::Index zeros = 0;
    Eigen::Index penalized = 0;
    const Eigen::Index first = sys.centered ? 1 : 0;
    for (Eigen::Index o = 0; o < t; ++o) {
        double intercept = st.target_mean(o);
        for (Eigen::Index j = 0; j < f; ++j) {
            const double k = st.target_scale(o) * fit.beta(j, o) / st.scale(j);
            fit.K(o, j) = k;
            intercept -= k * st.mean(j);
            if (j >= first) {
                ++penalized;
                if (fit.beta(j, o) == 0.0) ++zeros;
            }
        }
        if (sys.centered) fit.K(o, 0) += intercept;
        if (!opts.persistence.empty() && opts.persistence[static_cast<std::size_t>(o)] >= 0)
            fit.K(o, opts.persistence[static_cast<std::size_t>(o)]) += 1.0;
    }
    fit.sparsity = penalized > 0 ? static_cast<double>(zeros) / static_cast<double>(penalized) : 0.0;
    return fit;
}

LassoFit fit_lasso(const Eigen::Ref<const RowMatrix>& phi, const Eigen::Ref<const RowMatrix>& targets,
                   double mu, const FitOptions& opts, bool has_bias)
{
    if (phi.rows() != targets.rows()) throw std::invalid_argument("fit_lasso: row count mismatch");
    if (phi.rows() == 0) throw std::invalid_argument("fit_lasso: no rows");
    if (!phi.allFinite() || !targets.allFinite())
        throw std::invalid_argument("fit_lasso: non-finite data");
    if (has_bias && (phi.col(0).array() != 1.0).any())
        throw std::invalid_argument("fit_lasso: column 0 is not a bias column");

    const RowMatrix r = increment_targets(phi, targets, opts.persistence);
    Moments m = Moments::with_reference(phi, r);
    m.add(phi, r);
    return solve_system(NormalSystem::from_moments(m, opts, has_bias), mu, opts);
}

// ---------------------------------------------------------------------------

std::vector<Eigen::Index> persistence_columns(int n, const BasisSpec& basis)
{
    std::vector<Eigen::Index> cols;
    for (int c : features::Layout(n).lag_one_columns()) cols.push_back(basis.linear_column(c));
    return cols;
}

CoefficientModel train_model(const features::Dataset& ds, const BasisSpec& basis, double mu,
                             FitOptions opts)
{
    basis.validate();
    opts.persistence = persistence_columns(ds.history.n, basis);
    const RowMatrix phi = expand_rows(ds.inputs, basis);
    auto fit = fit_lasso(phi, ds.targets, mu, opts, basis.include_bias);

    CoefficientModel model;
    model.K = std::move(fit.K);
    model.basis = basis;
    model.standardization = std::move(fit.standardization);
    model.mu = mu;
    model.n = ds.history.n;
    model.sparsity = fit.sparsity;
    model.lambda = ds.lambda;
    model.persistence = opts.persistence;
    model.kkt_residual = fit.kkt_residual;
    model.sweeps = fit.sweeps;
    return model;
}

Eigen::VectorXd predict(const CoefficientModel& model, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (x.size() != model.input_width())
        throw std::invalid_argument(fmt::format("predict: input width {} does not match model width {}",
                                                x.size(), model.input_width()));
    return model.K * expand(x, model.basis);
}

RowMatrix predict_rows(const CoefficientModel& model, const Eigen::Ref<const RowMatrix>& x)
{
    if (x.cols() != model.input_width())
        throw std::invalid_argument("predict_rows: input width does not match model");
    const RowMatrix phi = expand_rows(x, model.basis);
    return phi * model.K.transpose();
}

RmseResult rmse(const Eigen::Ref<const RowMatrix>& pred, const Eigen::Ref<const RowMatrix>& truth)
{
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("rmse: shape mismatch");
    if (pred.rows() == 0 || pred.cols() == 0) throw std::invalid_argument("rmse: empty input");
    RmseResult out;
    out.per_output = ((pred - truth).colwise().squaredNorm() / static_cast<double>(pred.rows()))
                         .cwiseSqrt()
                         .transpose();
    out.aggregate = std::sqrt(out.per_output.squaredNorm() / static_cast<double>(out.per_output.size()));
    return out;
}

} // namespace regression
} // namespace thrustid
