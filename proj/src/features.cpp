#include <thrustid/features.hpp>
#include <thrustid/random.hpp>

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace thrustid {
namespace features {

std::array<int, kTargets> Layout::lag_one_columns() const
{
    return {thrust_history(1, 0), thrust_history(1, 1), thrust_history(1, 2),
            thrust_history(1, 3), pressure_history(1),  fuel_history(1),
            ox_history(1)};
}

std::vector<std::string> Layout::column_names() const
{
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(width()));
    for (int j = 0; j < 4; ++j) names.push_back(fmt::format("Tr{}", j + 1));
    for (int l = 1; l <= n; ++l)
        for (int j = 0; j < 4; ++j) names.push_back(fmt::format("Tr{}_h{}", j + 1, l));
    for (int l = 1; l <= n; ++l)
        for (int j = 0; j < 4; ++j) names.push_back(fmt::format("To{}_h{}", j + 1, l));
    names.push_back("P");
    for (int l = 1; l <= n; ++l) names.push_back(fmt::format("P_h{}", l));
    for (int l = 1; l <= n; ++l) names.push_back(fmt::format("mf_h{}", l));
    for (int l = 1; l <= n; ++l) names.push_back(fmt::format("mo_h{}", l));
    for (int j = 0; j < 4; ++j) names.push_back(fmt::format("Se{}", j + 1));
    names.push_back("lambda");
    return names;
}

std::vector<std::string> target_names()
{
    return {"To1", "To2", "To3", "To4", "P", "mf", "mo"};
}

std::vector<double> extend_state(const std::vector<double>& series, std::size_t t, int n)
{
    if (n < 1) throw std::invalid_argument("extend_state: n must be >= 1");
    const auto nn = static_cast<std::size_t>(n);
    if (t < nn) throw std::out_of_range("extend_state: insufficient history");
    if (t > series.size()) throw std::out_of_range("extend_state: index beyond series");
    std::vector<double> h(nn);
    for (std::size_t k = 1; k <= nn; ++k) h[k - 1] = series[t - k];
    return h;
}

double lambda_feature(double m_f, double m_o, const LambdaParams& p)
{
    if (m_f < 0.0 || m_o < 0.0) throw std::invalid_argument("lambda_feature: negative mass");
    if (!(p.eps > 0.0)) throw std::invalid_argument("lambda_feature: eps must be positive");
    return p.scale / (m_f + m_o + p.eps);
}

namespace {

template <class Row>
void fill_row(Row&& row, const plant::PlantTrajectory& traj, std::size_t t, int n,
              const LambdaParams& lambda)
{
    const Layout lay(n);
    const auto& cmd = traj.commands;
    const auto& st = traj.status;
    for (int j = 0; j < 4; ++j) row(lay.command() + j) = cmd[t][j] * st[t][j];
    for (int l = 1; l <= n; ++l) {
        const auto s = t - static_cast<std::size_t>(l);
        for (int j = 0; j < 4; ++j) {
            row(lay.command_history(l, j)) = cmd[s][j] * st[s][j];
            row(lay.thrust_history(l, j)) = traj.thrusts[s][j];
        }
        row(lay.pressure_history(l)) = traj.pressures[s];
        row(lay.fuel_history(l)) = traj.m_fuel[s];
        row(lay.ox_history(l)) = traj.m_ox[s];
    }
    row(lay.pressure()) = traj.pressures[t - 1];
    for (int j = 0; j < 4; ++j) row(lay.status(j)) = st[t][j];
    row(lay.lambda()) =
        lambda_feature(std::max(traj.m_fuel[t - 1], 0.0), std::max(traj.m_ox[t - 1], 0.0), lambda);
}

} // namespace

Eigen::VectorXd feature_row(const plant::PlantTrajectory& traj, std::size_t t, int n,
                            const LambdaParams& lambda)
{
    if (n < 1) throw std::invalid_argument("feature_row: n must be >= 1");
    if (t < static_cast<std::size_t>(n) || t >= traj.size())
        throw std::out_of_range("feature_row: sample index outside [n, len)");
    Eigen::VectorXd x(Layout(n).width());
    fill_row(x, traj, t, n, lambda);
    return x;
}

Dataset assemble(const plant::PlantTrajectory& traj, const HistorySpec& history,
                 const std::string& source, const LambdaParams& lambda)
{
    traj.validate();
    const int n = history.n;
    if (n < 1) throw std::invalid_argument("assemble: history length must be >= 1");
    const auto nn = static_cast<std::size_t>(n);
    if (traj.size() < nn + 1)
        throw std::invalid_argument(
            fmt::format("assemble: trajectory of {} samples is too short for n={}", traj.size(), n));

    const Layout lay(n);
    const auto rows = static_cast<Eigen::Index>(traj.size() - nn);
    Dataset ds;
    ds.history = history;
    ds.lambda = lambda;
    ds.inputs.resize(rows, lay.width());
    ds.targets.resize(rows, kTargets);
    ds.provenance.reserve(static_cast<std::size_t>(rows));
    for (std::size_t t = nn; t < traj.size(); ++t) {
        const auto r = static_cast<Eigen::Index>(t - nn);
        fill_row(ds.inputs.row(r), traj, t, n, lambda);
        for (int j = 0; j < 4; ++j) ds.targets(r, j) = traj.thrusts[t][j];
        ds.targets(r, 4) = traj.pressures[t];
        ds.targets(r, 5) = traj.m_fuel[t];
        ds.targets(r, 6) = traj.m_ox[t];
        ds.provenance.emplace_back(source, static_cast<std::int64_t>(t));
    }
    if (!ds.inputs.allFinite() || !ds.targets.allFinite())
        throw std::invalid_argument("assemble: non-finite values in trajectory " + source);
    return ds;
}

Dataset merge(const std::vector<Dataset>& datasets)
{
    if (datasets.empty()) throw std::invalid_argument("merge: no datasets");
    const int n = datasets.front().history.n;
    Eigen::Index rows = 0;
    for (const auto& d : datasets) {
        if (d.history.n != n) throw std::invalid_argument("merge: history lengths differ");
        rows += d.rows();
    }
    Dataset out;
    out.history = datasets.front().history;
    out.lambda = datasets.front().lambda;
    out.inputs.resize(rows, Layout(n).width());
    out.targets.resize(rows, kTargets);
    out.provenance.reserve(static_cast<std::size_t>(rows));
    Eigen::Index at = 0;
    for (const auto& d : datasets) {
        out.inputs.middleRows(at, d.rows()) = d.inputs;
        out.targets.middleRows(at, d.rows()) = d.targets;
        out.provenance.insert(out.provenance.end(), d.provenance.begin(), d.provenance.end());
        at += d.rows();
    }
    return out;
}

Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows)
{
    Dataset out;
    out.history = ds.history;
    out.lambda = ds.lambda;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), ds.inputs.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), ds.targets.cols());
    out.provenance.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = rows[i];
        out.inputs.row(static_cast<Eigen::Index>(i)) = ds.inputs.row(r);
        out.targets.row(static_cast<Eigen::Index>(i)) = ds.targets.row(r);
        if (!ds.provenance.empty()) out.provenance.push_back(ds.provenance[static_cast<std::size_t>(r)]);
    }
    return out;
}

std::vector<Fold> split_kfold(Eigen::Index rows, int k, std::uint64_t seed, SplitMode mode)
{
    if (k < 2) throw std::invalid_argument("split_kfold: k must be >= 2");
    if (rows < k) throw std::invalid_argument("split_kfold: more folds than rows");

    const auto n = static_cast<std::size_t>(rows);
    std::vector<std::size_t> order;
    if (mode == SplitMode::Shuffled) {
        order = seeded_permutation(n, seed);
    } else {
        order.resize(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
    }

    // fold f takes positions [f*n/k, (f+1)*n/k) of the order
    std::vector<int> fold_of(n);
    const auto kk = static_cast<std::size_t>(k);
    for (std::size_t f = 0; f < kk; ++f)
        for (std::size_t p = f * n / kk; p < (f + 1) * n / kk; ++p) fold_of[order[p]] = static_cast<int>(f);

    std::vector<Fold> folds(kk);
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        for (std::size_t f = 0; f < kk; ++f) {
            if (fold_of[i] == static_cast<int>(f))
                folds[f].test.push_back(idx);
            else
                folds[f].train.push_back(idx);
        }
    }
    return folds;
}

} // namespace features
} // namespace thrustid
