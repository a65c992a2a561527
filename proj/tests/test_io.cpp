#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <thrustid/excitation.hpp>
#include <thrustid/io.hpp>

using namespace thrustid;
using features::RowMatrix;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / "thrustid_test_io" / name;
    fs::create_directories(p.parent_path());
    return p;
}

plant::PlantTrajectory sample_trajectory()
{
    excitation::ExcitationConfig c;
    c.duration = 2.0;
    auto tr = excitation::excitation_segment(520, c);
    tr.status[50] = {1, 0, 1, 0};
    return plant::simulate(tr, plant::PlantConfig{});
}

} // namespace

TEST_CASE("number formatting round trips")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e7, 1e7);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<double>(i % 30) - 15.0);
        CHECK(std::stod(io::num(v)) == v);
    }
    CHECK(io::num(0.1) == "0.1");
    CHECK(io::num(600.0) == "600");
}

TEST_CASE("trajectory CSV round trip")
{
    const auto traj = sample_trajectory();
    const auto text = io::trajectory_csv(traj);
    CHECK(text.rfind("t,Tr1,Tr2,Tr3,Tr4,Se1,Se2,Se3,Se4,To1,To2,To3,To4,P,mf,mo\n", 0) == 0);
    const auto back = io::parse_trajectory_csv(text);
    CHECK(back.dt == traj.dt);
    CHECK(back.commands == traj.commands);
    CHECK(back.status == traj.status);
    CHECK(back.thrusts == traj.thrusts);
    CHECK(back.pressures == traj.pressures);
    CHECK(back.m_fuel == traj.m_fuel);
    CHECK(back.m_ox == traj.m_ox);

    const auto path = scratch("traj.csv");
    io::write_trajectory(path, traj);
    CHECK(io::read_text(path) == text);
    CHECK(io::read_trajectory(path).thrusts == traj.thrusts);

    CHECK_THROWS(io::parse_trajectory_csv("a,b\n1,2\n"));
    CHECK_THROWS(io::read_trajectory(scratch("missing.csv")));
}

TEST_CASE("trace CSV round trip")
{
    excitation::ExcitationConfig c;
    const auto tr = excitation::step_stair_trace({0.0, 400, 800}, 0.5, c);
    const auto back = io::parse_trace_csv(io::trace_csv(tr));
    CHECK(back.commands == tr.commands);
    CHECK(back.status == tr.status);
    CHECK(back.dt == doctest::Approx(tr.dt).epsilon(1e-12));
}

TEST_CASE("config JSON")
{
    plant::PlantConfig p;
    p.tau_fall = 0.2;
    plant::PlantConfig q;
    io::from_json(io::to_json(p), q);
    CHECK(q.tau_fall == 0.2);
    CHECK(io::to_json(q) == io::to_json(p));

    io::Json partial{{"e_max", 900.0}};
    plant::PlantConfig r;
    io::from_json(partial, r);
    CHECK(r.e_max == 900.0);
    CHECK(r.e_min == 240.0);
    CHECK_THROWS(io::from_json(io::Json{{"e_maximum", 900.0}}, r));

    excitation::ExcitationConfig e;
    e.m_levels = 5;
    e.include_endurance = false;
    excitation::ExcitationConfig e2;
    io::from_json(io::to_json(e), e2);
    CHECK(e2.m_levels == 5);
    CHECK(!e2.include_endurance);

    tuning::SweepConfig s;
    s.n_grid = {2, 4};
    s.tie_rule = tuning::TieRule::Exact;
    tuning::SweepConfig s2;
    io::from_json(io::to_json(s), s2);
    CHECK(s2.n_grid == s.n_grid);
    CHECK(s2.tie_rule == tuning::TieRule::Exact);
    CHECK(s2.mu_grid == s.mu_grid);

    regression::BasisSpec b{regression::BasisKind::FullQuadratic, 2, false};
    regression::BasisSpec b2;
    io::from_json(io::to_json(b), b2);
    CHECK(b2.kind == b.kind);
    CHECK(!b2.include_bias);
}

TEST_CASE("model JSON reproduces predictions exactly")
{
    const auto traj = sample_trajectory();
    const auto ds = features::assemble(traj, {2});
    const auto model = regression::train_model(ds, {}, 1e-3);
    const auto path = scratch("model.json");
    io::write_model(path, model);
    const auto back = io::read_model(path);

    CHECK(back.n == model.n);
    CHECK(back.mu == model.mu);
    CHECK(back.K == model.K);
    CHECK(back.persistence == model.persistence);
    CHECK(back.standardization.scale == model.standardization.scale);
    const RowMatrix a = regression::predict_rows(model, ds.inputs);
    const RowMatrix b = regression::predict_rows(back, ds.inputs);
    CHECK(a == b);

    // rewriting gives the same bytes
    const auto again = scratch("model2.json");
    io::write_model(again, back);
    CHECK(io::read_text(again) == io::read_text(path));

    auto j = io::read_json(path);
    j["format"] = "something-else";
    CHECK_THROWS(io::model_from_json(j));
    j = io::read_json(path);
    j["cols"] = 3;
    CHECK_THROWS(io::model_from_json(j));
}

TEST_CASE("comparison CSV")
{
    plant::PlantConfig cfg;
    const auto traj = sample_trajectory();
    const auto text = io::comparison_csv(traj, traj, cfg);
    const auto header = text.substr(0, text.find('\n'));
    CHECK(header.find("To1_pred") != std::string::npos);
    CHECK(header.find("To1_err") != std::string::npos);
    CHECK(header.find("mass_pred") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(traj.size() + 1));
}

TEST_CASE("report JSON")
{
    tuning::SweepReport rep;
    rep.kind = tuning::SweepKind::Mu;
    rep.k = 5;
    rep.selected_mu = 1e-4;
    rep.exact_mu = 1e-5;
    tuning::GridPoint gp;
    gp.mu = 1e-4;
    gp.test_rmse_per_output = Eigen::VectorXd::Ones(7);
    rep.points.push_back(gp);
    const auto j = io::to_json(rep);
    CHECK(j.at("kind") == "mu");
    CHECK(j.at("selected_mu") == 1e-4);
    CHECK(j.at("exact_mu") == 1e-5);
    CHECK(j.at("points").size() == 1);

    rollout::ValidationReport v;
    v.id = "x";
    v.max_error = Eigen::VectorXd::Zero(7);
    const auto jv = io::to_json(v);
    CHECK(jv.at("id") == "x");
}
