#include <thrustid/tuning.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace thrustid {
namespace tuning {

using features::RowMatrix;

std::vector<double> default_mu_grid()
{
    std::vector<double> g;
    for (int i = 0; i <= 10; ++i) g.push_back(std::pow(10.0, -5.0 + 0.5 * i));
    return g;
}

void SweepConfig::validate() const
{
    if (n_grid.empty()) throw std::invalid_argument("SweepConfig: empty n grid");
    if (mu_grid.empty()) throw std::invalid_argument("SweepConfig: empty mu grid");
    for (int n : n_grid)
        if (n < 1) throw std::invalid_argument("SweepConfig: history lengths must be >= 1");
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (!(mu_grid[i] > 0.0)) throw std::invalid_argument("SweepConfig: mu grid must be positive");
        if (i > 0 && !(mu_grid[i] > mu_grid[i - 1]))
            throw std::invalid_argument("SweepConfig: mu grid must be strictly increasing");
    }
    if (k < 2) throw std::invalid_argument("SweepConfig: need at least 2 folds");
    if (!(mu_fixed >= 0.0)) throw std::invalid_argument("SweepConfig: mu_fixed must be >= 0");
}

std::string to_string(SweepKind kind)
{
    return kind == SweepKind::History ? "history" : "mu";
}

std::string to_string(TieRule rule)
{
    return rule == TieRule::Exact ? "exact" : "one-se";
}

TieRule tie_rule_from_string(const std::string& s)
{
    if (s == "exact") return TieRule::Exact;
    if (s == "one-se") return TieRule::OneStandardError;
    throw std::invalid_argument("unknown tie rule '" + s + "'");
}

std::size_t select_point(const std::vector<GridPoint>& points, TieRule rule,
                         const std::function<bool(const GridPoint&, const GridPoint&)>& prefer)
{
    if (points.empty()) throw std::invalid_argument("select_point: no points");
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].test_rmse < points[best].test_rmse) best = i;
    double bound = points[best].test_rmse;
    if (rule == TieRule::OneStandardError && !points[best].folds.empty())
        bound += points[best].test_rmse_sd / std::sqrt(static_cast<double>(points[best].folds.size()));
    std::size_t pick = best;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].test_rmse <= bound && prefer(points[i], points[pick])) pick = i;
    return pick;
}

namespace {

Eigen::VectorXd output_rmse(const RowMatrix& phi, const RowMatrix& y, const Eigen::MatrixXd& K)
{
    const RowMatrix pred = phi * K.transpose();
    return ((pred - y).colwise().squaredNorm() / static_cast<double>(y.rows())).cwiseSqrt().transpose();
}

double normalized(const Eigen::VectorXd& per_output, const Eigen::VectorXd& spread)
{
    return std::sqrt(per_output.cwiseQuotient(spread).squaredNorm() /
                     static_cast<double>(per_output.size()));
}

void summarize(GridPoint& gp)
{
    const double k = static_cast<double>(gp.folds.size());
    gp.train_rmse = gp.test_rmse = gp.sparsity = 0.0;
    for (const auto& f : gp.folds) {
        gp.train_rmse += f.train_rmse / k;
        gp.test_rmse += f.test_rmse / k;
        gp.sparsity += f.sparsity / k;
    }
    double ss = 0.0;
    for (const auto& f : gp.folds) ss += (f.test_rmse - gp.test_rmse) * (f.test_rmse - gp.test_rmse);
    gp.test_rmse_sd = gp.folds.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
}

} // namespace

std::vector<GridPoint> cross_validate(const features::Dataset& ds, const regression::BasisSpec& basis,
                                      const std::vector<double>& mus, int k, std::uint64_t seed,
                                      const regression::FitOptions& base_opts)
{
    using namespace regression;
    if (mus.empty()) throw std::invalid_argument("cross_validate: no weights");
    const int n = ds.history.n;
    FitOptions opts = base_opts;
    opts.persistence = persistence_columns(n, basis);

    const RowMatrix phi = expand_rows(ds.inputs, basis);
    const RowMatrix r = increment_targets(phi, ds.targets, opts.persistence);

    Eigen::VectorXd spread(r.cols());
    for (Eigen::Index o = 0; o < r.cols(); ++o) {
        const double m = r.col(o).mean();
        const double sd = std::sqrt((r.col(o).array() - m).square().mean());
        spread(o) = sd > 0.0 ? sd : 1.0;
    }

    const auto folds = features::split_kfold(ds.rows(), k, seed);
    Moments total = Moments::with_reference(phi, r);
    total.add(phi, r);

    std::vector<GridPoint> points(mus.size());
    for (std::size_t i = 0; i < mus.size(); ++i) {
        points[i].n = n;
        points[i].mu = mus[i];
        points[i].test_rmse_per_output = Eigen::VectorXd::Zero(r.cols());
    }

    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto& fold = folds[f];
        const RowMatrix phi_test = phi(fold.test, Eigen::all);
        const RowMatrix r_test = r(fold.test, Eigen::all);
        const RowMatrix phi_train = phi(fold.train, Eigen::all);
        const RowMatrix r_train = r(fold.train, Eigen::all);

        Moments held = total.empty_copy();
        held.add(phi_test, r_test);
        Moments train = total;
        train -= held;
        const auto sys = NormalSystem::from_moments(train, opts, basis.include_bias);

        Eigen::MatrixXd warm;
        for (std::size_t i = 0; i < mus.size(); ++i) {
            LassoFit fit;
            try {
                fit = solve_system(sys, mus[i], opts, i > 0 ? &warm : nullptr);
            } catch (const NotConverged& e) {
                throw SweepError(fmt::format("fit failed at n={}, mu={}, fold={}: {}", n, mus[i], f,
                                             e.what()),
                                 n, mus[i], static_cast<int>(f));
            }
            warm = fit.beta;

            // residuals on increments equal residuals on the targets; the
            // persistence unit entries are removed for the comparison
            Eigen::MatrixXd K = fit.K;
            for (std::size_t o = 0; o < opts.persistence.size(); ++o)
                K(static_cast<Eigen::Index>(o), opts.persistence[o]) -= 1.0;
            const Eigen::VectorXd tr = output_rmse(phi_train, r_train, K);
            const Eigen::VectorXd te = output_rmse(phi_test, r_test, K);

            FoldResult res;
            res.fold = static_cast<int>(f);
            res.train_rmse = normalized(tr, spread);
            res.test_rmse = normalized(te, spread);
            res.sparsity = fit.sparsity;
            res.sweeps = fit.sweeps;
            points[i].folds.push_back(res);
            points[i].test_rmse_per_output += te / static_cast<double>(folds.size());
        }
    }
    for (auto& gp : points) summarize(gp);
    return points;
}

SweepReport sweep_history(const std::function<features::Dataset(int)>& dataset_at,
                          const regression::BasisSpec& basis, const SweepConfig& cfg,
                          const regression::FitOptions& opts)
{
    cfg.validate();
    SweepReport rep;
    rep.kind = SweepKind::History;
    rep.k = cfg.k;
    rep.selected_mu = cfg.mu_fixed;
    for (int n : cfg.n_grid) {
        const auto ds = dataset_at(n);
        if (ds.history.n != n)
            throw SweepError(fmt::format("dataset for n={} has history {}", n, ds.history.n), n,
                             cfg.mu_fixed, -1);
        auto pts = cross_validate(ds, basis, {cfg.mu_fixed}, cfg.k, cfg.seed, opts);
        rep.points.push_back(std::move(pts.front()));
    }
    const auto smaller_n = [](const GridPoint& a, const GridPoint& b) { return a.n < b.n; };
    rep.tie_rule = cfg.tie_rule;
    rep.selected_n = rep.points[select_point(rep.points, cfg.tie_rule, smaller_n)].n;
    rep.exact_n = rep.points[select_point(rep.points, TieRule::Exact, smaller_n)].n;
    rep.exact_mu = rep.selected_mu;
    return rep;
}

SweepReport sweep_history(const std::map<int, features::Dataset>& datasets,
                          const regression::BasisSpec& basis, const SweepConfig& cfg,
                          const regression::FitOptions& opts)
{
    return sweep_history(
        [&](int n) {
            auto it = datasets.find(n);
            if (it == datasets.end())
                throw SweepError(fmt::format("no dataset assembled at n={}", n), n, cfg.mu_fixed, -1);
            return it->second;
        },
        basis, cfg, opts);
}

SweepReport sweep_mu(const features::Dataset& ds, const regression::BasisSpec& basis,
                     const SweepConfig& cfg, const regression::FitOptions& opts)
{
    cfg.validate();
    std::vector<double> descending(cfg.mu_grid.rbegin(), cfg.mu_grid.rend());
    auto pts = cross_validate(ds, basis, descending, cfg.k, cfg.seed, opts);
    std::reverse(pts.begin(), pts.end());

    SweepReport rep;
    rep.kind = SweepKind::Mu;
    rep.k = cfg.k;
    rep.selected_n = ds.history.n;
    rep.points = std::move(pts);
    const auto larger_mu = [](const GridPoint& a, const GridPoint& b) { return a.mu > b.mu; };
    rep.tie_rule = cfg.tie_rule;
    rep.selected_mu = rep.points[select_point(rep.points, cfg.tie_rule, larger_mu)].mu;
    rep.exact_mu = rep.points[select_point(rep.points, TieRule::Exact, larger_mu)].mu;
    rep.exact_n = rep.selected_n;
    return rep;
}

std::vector<ParetoRow> pareto_table(const SweepReport& report)
{
    std::vector<ParetoRow> rows;
    for (const auto& gp : report.points) rows.push_back({gp.mu, gp.sparsity, gp.test_rmse, false});
    for (auto& a : rows) {
        a.pareto = std::none_of(rows.begin(), rows.end(), [&](const ParetoRow& b) {
            return b.sparsity >= a.sparsity && b.test_rmse <= a.test_rmse &&
                   (b.sparsity > a.sparsity || b.test_rmse < a.test_rmse);
        });
    }
    return rows;
}

std::size_t pareto_knee(const std::vector<ParetoRow>& table)
{
    if (table.empty()) throw std::invalid_argument("pareto_knee: empty table");
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table[i].pareto) front.push_back(i);
    if (front.size() < 3) {
        // with two or fewer points the most accurate one is the knee
        return *std::min_element(front.begin(), front.end(), [&](std::size_t a, std::size_t b) {
            return table[a].test_rmse < table[b].test_rmse;
        });
    }
    std::sort(front.begin(), front.end(),
              [&](std::size_t a, std::size_t b) { return table[a].sparsity < table[b].sparsity; });
    double s_lo = table[front.front()].sparsity, s_hi = table[front.back()].sparsity;
    double r_lo = table[front.front()].test_rmse, r_hi = table[front.back()].test_rmse;
    const double ds = s_hi > s_lo ? s_hi - s_lo : 1.0;
    const double dr = std::abs(r_hi - r_lo) > 0.0 ? std::abs(r_hi - r_lo) : 1.0;
    // chord in normalized coordinates from the first to the last front point
    const double x1 = 0.0, y1 = 0.0, x2 = (s_hi - s_lo) / ds, y2 = (r_hi - r_lo) / dr;
    const double len = std::hypot(x2 - x1, y2 - y1);
    std::size_t best = front.front();
    double best_d = -1.0;
    for (auto i : front) {
        const double x = (table[i].sparsity - s_lo) / ds;
        const double y = (table[i].test_rmse - r_lo) / dr;
        const double d = len > 0.0 ? std::abs((y2 - y1) * x - (x2 - x1) * y) / len : 0.0;
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

} // namespace tuning
} // namespace thrustid
