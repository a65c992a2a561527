#include <doctest.h>

#include <algorithm>
#include <set>

#include <thrustid/excitation.hpp>
#include <thrustid/features.hpp>
#include <thrustid/plant.hpp>

using namespace thrustid;
using features::Layout;

namespace {

plant::PlantTrajectory sine_trajectory(double seconds)
{
    excitation::ExcitationConfig c;
    c.duration = seconds;
    return plant::simulate(excitation::excitation_segment(520, c), plant::PlantConfig{});
}

} // namespace

TEST_CASE("extend_state")
{
    CHECK(features::extend_state({1, 2, 3, 4, 5}, 4, 3) == std::vector<double>{4, 3, 2});
    CHECK(features::extend_state({7, 9}, 1, 1) == std::vector<double>{7});
    CHECK(features::extend_state({2, 2, 2, 2, 2}, 5, 4) == std::vector<double>{2, 2, 2, 2});
    CHECK_THROWS_AS(features::extend_state({1, 2, 3}, 1, 2), std::out_of_range);
}

TEST_CASE("lambda feature")
{
    CHECK(features::lambda_feature(0, 0) == 1.0);
    CHECK(features::lambda_feature(4, 5) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(features::lambda_feature(0, 0, {2.0, 4.0}) == 0.5);
    CHECK_THROWS(features::lambda_feature(-1, 0));
}

TEST_CASE("layout")
{
    for (int n = 1; n <= 10; ++n) {
        const Layout lay(n);
        CHECK(lay.width() == 11 * n + 10);
        const auto names = lay.column_names();
        CHECK(names.size() == static_cast<std::size_t>(lay.width()));
        CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
        CHECK(names[lay.command()] == "Tr1");
        CHECK(names[lay.command_history(n, 3)] == "Tr4_h" + std::to_string(n));
        CHECK(names[lay.thrust_history(1, 0)] == "To1_h1");
        CHECK(names[lay.pressure()] == "P");
        CHECK(names[lay.pressure_history(1)] == "P_h1");
        CHECK(names[lay.fuel_history(n)] == "mf_h" + std::to_string(n));
        CHECK(names[lay.ox_history(1)] == "mo_h1");
        CHECK(names[lay.status(2)] == "Se3");
        CHECK(names[lay.lambda()] == "lambda");
        CHECK(lay.lambda() == lay.width() - 1);
    }
    CHECK(Layout(6).width() == 76);
}

TEST_CASE("assemble shape and row contents")
{
    auto traj = sine_trajectory(30.0);
    // trim to 3000 samples
    const auto trim = [&](auto& v) { v.resize(3000); };
    trim(traj.commands), trim(traj.status), trim(traj.thrusts), trim(traj.pressures), trim(traj.m_fuel),
        trim(traj.m_ox);
    const auto ds = features::assemble(traj, {6});
    CHECK(ds.rows() == 2994);
    CHECK(ds.inputs.cols() == 76);
    CHECK(ds.targets.cols() == features::kTargets);

    // rebuild one row by hand
    const int n = 6;
    const std::size_t t = 1234;
    const Layout lay(n);
    const auto r = static_cast<Eigen::Index>(t - n);
    for (int j = 0; j < 4; ++j) {
        CHECK(ds.inputs(r, j) == traj.commands[t][j] * traj.status[t][j]);
        CHECK(ds.inputs(r, lay.status(j)) == traj.status[t][j]);
        CHECK(ds.targets(r, j) == traj.thrusts[t][j]);
    }
    for (int l = 1; l <= n; ++l) {
        for (int j = 0; j < 4; ++j) {
            CHECK(ds.inputs(r, lay.command_history(l, j)) == traj.commands[t - l][j]);
            CHECK(ds.inputs(r, lay.thrust_history(l, j)) == traj.thrusts[t - l][j]);
        }
        CHECK(ds.inputs(r, lay.pressure_history(l)) == traj.pressures[t - l]);
        CHECK(ds.inputs(r, lay.fuel_history(l)) == traj.m_fuel[t - l]);
        CHECK(ds.inputs(r, lay.ox_history(l)) == traj.m_ox[t - l]);
    }
    // latest pressure and lambda available before the step
    CHECK(ds.inputs(r, lay.pressure()) == traj.pressures[t - 1]);
    CHECK(ds.inputs(r, lay.lambda()) == doctest::Approx(1.0 / (traj.m_fuel[t - 1] + traj.m_ox[t - 1] + 1.0)));
    CHECK(ds.targets(r, 4) == traj.pressures[t]);
    CHECK(ds.targets(r, 5) == traj.m_fuel[t]);
    CHECK(ds.targets(r, 6) == traj.m_ox[t]);
    CHECK(ds.provenance[static_cast<std::size_t>(r)].second == static_cast<std::int64_t>(t));

    const auto row = features::feature_row(traj, t, n);
    CHECK(row.transpose() == ds.inputs.row(r));

    // lag-one columns point at each target's previous value
    const auto lag1 = lay.lag_one_columns();
    for (int o = 0; o < features::kTargets; ++o) {
        const auto next = static_cast<Eigen::Index>(r + 1);
        CHECK(ds.inputs(next, lag1[o]) == ds.targets(r, o));
    }
}

TEST_CASE("assemble edge cases")
{
    const auto traj = sine_trajectory(1.0);
    auto short_traj = traj;
    for (auto* v : {&short_traj.pressures, &short_traj.m_fuel, &short_traj.m_ox}) v->resize(4);
    short_traj.commands.resize(4), short_traj.status.resize(4), short_traj.thrusts.resize(4);
    CHECK(features::assemble(short_traj, {3}).rows() == 1);
    CHECK_THROWS_AS(features::assemble(short_traj, {4}), std::invalid_argument);
    CHECK_THROWS_AS(features::feature_row(traj, 2, 3), std::out_of_range);

    // all engines off: zero thrust targets, constant lambda
    plant::CommandTrace off;
    off.commands.assign(300, Vec4{500, 500, 500, 500});
    off.status.assign(300, Vec4{});
    const auto ds = features::assemble(plant::simulate(off, plant::PlantConfig{}), {2});
    CHECK(ds.targets.leftCols(4).isZero(0.0));
    const auto lam = ds.inputs.col(Layout(2).lambda());
    CHECK((lam.array() == lam(0)).all());
    CHECK(ds.inputs.leftCols(4).isZero(0.0));
}

TEST_CASE("merge and take_rows")
{
    const auto a = features::assemble(sine_trajectory(1.0), {3}, "a");
    const auto b = features::assemble(sine_trajectory(2.0), {3}, "b");
    const auto one = features::merge({a});
    CHECK(one.inputs == a.inputs);
    CHECK(one.targets == a.targets);

    const auto ab = features::merge({a, b});
    CHECK(ab.rows() == a.rows() + b.rows());
    CHECK(ab.inputs.bottomRows(b.rows()) == b.inputs);
    CHECK(ab.provenance.front().first == "a");
    CHECK(ab.provenance.back().first == "b");

    CHECK_THROWS_AS(features::merge({}), std::invalid_argument);
    CHECK_THROWS_AS(features::merge({a, features::assemble(sine_trajectory(1.0), {4})}), std::invalid_argument);

    const auto sub = features::take_rows(ab, {5, 0, 200});
    CHECK(sub.rows() == 3);
    CHECK(sub.inputs.row(0) == ab.inputs.row(5));
    CHECK(sub.targets.row(2) == ab.targets.row(200));
    CHECK(sub.provenance[2] == ab.provenance[200]);
}

TEST_CASE("k-fold split")
{
    const auto folds = features::split_kfold(10, 5, 1);
    REQUIRE(folds.size() == 5);
    std::multiset<Eigen::Index> seen;
    for (const auto& f : folds) {
        CHECK(f.test.size() == 2);
        CHECK(f.train.size() == 8);
        seen.insert(f.test.begin(), f.test.end());
        std::set<Eigen::Index> tr(f.train.begin(), f.train.end());
        for (auto i : f.test) CHECK(tr.count(i) == 0);
    }
    CHECK(seen.size() == 10);
    CHECK(std::set<Eigen::Index>(seen.begin(), seen.end()).size() == 10);

    const auto uneven = features::split_kfold(103, 5, 4);
    for (const auto& f : uneven) CHECK((f.test.size() == 20 || f.test.size() == 21));

    const auto again = features::split_kfold(10, 5, 1);
    for (std::size_t i = 0; i < folds.size(); ++i) CHECK(again[i].test == folds[i].test);
    const auto other = features::split_kfold(10, 5, 2);
    bool differs = false;
    for (std::size_t i = 0; i < folds.size(); ++i) differs |= other[i].test != folds[i].test;
    CHECK(differs);

    const auto blocks = features::split_kfold(10, 5, 1, features::SplitMode::Contiguous);
    CHECK(blocks[0].test == std::vector<Eigen::Index>{0, 1});
    CHECK(blocks[4].test == std::vector<Eigen::Index>{8, 9});

    CHECK_THROWS(features::split_kfold(10, 1, 0));
    CHECK_THROWS(features::split_kfold(3, 5, 0));
}
