#include <doctest.h>

#include <cmath>

#include <thrustid/excitation.hpp>
#include <thrustid/rollout.hpp>

using namespace thrustid;
using namespace thrustid::rollout;
using regression::BasisKind;
using regression::CoefficientModel;

namespace {

// Linear n=1 model with an explicit coefficient per (output, input column).
CoefficientModel linear_model()
{
    CoefficientModel m;
    m.n = 1;
    m.basis = {BasisKind::Linear};
    m.K = Eigen::MatrixXd::Zero(7, m.basis.width(m.input_width()));
    return m;
}

// To = 0.6 To_h1 + 0.4 Tr, P held, masses integrate the previous thrust.
CoefficientModel lag_model()
{
    auto m = linear_model();
    const features::Layout lay(1);
    const auto& b = m.basis;
    for (int j = 0; j < 4; ++j) {
        m.K(j, b.linear_column(lay.thrust_history(1, j))) = 0.6;
        m.K(j, b.linear_column(lay.command() + j)) = 0.4;
    }
    m.K(4, b.linear_column(lay.pressure_history(1))) = 1.0;
    m.K(5, b.linear_column(lay.fuel_history(1))) = 1.0;
    m.K(6, b.linear_column(lay.ox_history(1))) = 1.0;
    for (int j = 0; j < 4; ++j) {
        m.K(5, b.linear_column(lay.thrust_history(1, j))) = 1e-5;
        m.K(6, b.linear_column(lay.thrust_history(1, j))) = 2e-5;
    }
    return m;
}

// The same law iterated directly.
plant::PlantTrajectory lag_truth(const plant::CommandTrace& tr)
{
    plant::PlantTrajectory out;
    out.dt = tr.dt;
    out.push_back(Vec4{}, Vec4{}, Vec4{}, 1.5e6, 0.0, 0.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const Vec4 prev = out.thrusts.back();
        Vec4 next{};
        double sum = 0.0;
        for (std::size_t j = 0; j < kEngines; ++j) {
            next[j] = 0.6 * prev[j] + 0.4 * tr.commands[i][j] * tr.status[i][j];
            sum += prev[j];
        }
        out.push_back(tr.commands[i], tr.status[i], next, 1.5e6, out.m_fuel.back() + 1e-5 * sum,
                      out.m_ox.back() + 2e-5 * sum);
    }
    return out;
}

plant::CommandTrace stair()
{
    excitation::ExcitationConfig c;
    return excitation::step_stair_trace({300, 700, 0.0, 500}, 2.0, c);
}

} // namespace

TEST_CASE("exact model reproduces its own system")
{
    const auto tr = stair();
    const auto truth = lag_truth(tr);
    const auto res = rollout::rollout(lag_model(), tr, truth);
    REQUIRE(res.predicted.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        for (std::size_t j = 0; j < kEngines; ++j)
            CHECK(std::abs(res.predicted.thrusts[i][j] - truth.thrusts[i][j]) <= 1e-9);
        CHECK(std::abs(res.predicted.m_fuel[i] - truth.m_fuel[i]) <= 1e-12);
    }
}

TEST_CASE("warm-up rows are copied from the truth")
{
    excitation::ExcitationConfig c;
    c.duration = 3.0;
    const auto tr = excitation::excitation_segment(600, c);
    const auto truth = plant::simulate(tr, plant::PlantConfig{});
    auto m = lag_model();
    m.n = 1;
    const auto res = rollout::rollout(m, tr, truth);
    CHECK(res.predicted.thrusts[0] == truth.thrusts[0]);

    // a longer history model with zero coefficients
    CoefficientModel z;
    z.n = 4;
    z.basis = {BasisKind::Linear};
    z.K = Eigen::MatrixXd::Zero(7, z.basis.width(z.input_width()));
    const auto r4 = rollout::rollout(z, tr, truth);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r4.predicted.thrusts[i] == truth.thrusts[i]);
        CHECK(r4.predicted.m_fuel[i] == truth.m_fuel[i]);
        CHECK(r4.predicted.pressures[i] == truth.pressures[i]);
    }
    CHECK(r4.predicted.thrusts[4] == Vec4{});

    auto bad = truth;
    bad.commands[2][0] += 1.0;
    CHECK_THROWS_AS(rollout::rollout(z, tr, bad), std::invalid_argument);
}

TEST_CASE("outputs are clamped, raw values kept")
{
    const auto tr = stair();
    const auto truth = lag_truth(tr);
    auto m = linear_model();
    const features::Layout lay(1);
    for (int j = 0; j < 4; ++j) m.K(j, 0) = -5.0;                    // negative thrust
    m.K(5, m.basis.linear_column(lay.fuel_history(1))) = 1.0;
    m.K(5, 0) = -0.1;                                                  // shrinking fuel mass
    m.K(6, m.basis.linear_column(lay.ox_history(1))) = 1.0;
    const auto res = rollout::rollout(m, tr, truth);
    for (std::size_t i = 1; i < res.predicted.size(); ++i) {
        for (double t : res.predicted.thrusts[i]) CHECK(t == 0.0);
        CHECK(res.predicted.m_fuel[i] >= res.predicted.m_fuel[i - 1]);
        CHECK(res.raw(static_cast<Eigen::Index>(i), 0) == -5.0);
    }
}

TEST_CASE("non-finite predictions stop the rollout")
{
    const auto tr = stair();
    const auto truth = lag_truth(tr);
    auto m = linear_model();
    const features::Layout lay(1);
    for (int j = 0; j < 4; ++j) m.K(j, m.basis.linear_column(lay.thrust_history(1, j))) = 1e6;
    m.K(0, 0) = 1.0;
    try {
        rollout::rollout(m, tr, truth);
        FAIL("expected Diverged");
    } catch (const Diverged& e) {
        CHECK(e.step() > 1);
        CHECK(e.time() == doctest::Approx(0.01 * static_cast<double>(e.step())));
    }
    const auto rep = rollout_eval("boom", m, tr, plant::PlantConfig{});
    CHECK(rep.diverged);
    CHECK(rep.divergence_time > 0.0);
    CHECK(!rep.error.empty());
}

TEST_CASE("ring buffer features match the trajectory rows")
{
    excitation::ExcitationConfig c;
    c.duration = 2.0;
    const auto truth = plant::simulate(excitation::excitation_segment(450, c), plant::PlantConfig{});
    for (int n : {1, 3, 7}) {
        RolloutState s(n);
        for (std::size_t t = 0; t + 1 < truth.size(); ++t) {
            const Vec4 eff{truth.commands[t][0] * truth.status[t][0], truth.commands[t][1] * truth.status[t][1],
                           truth.commands[t][2] * truth.status[t][2], truth.commands[t][3] * truth.status[t][3]};
            s.push(eff, truth.thrusts[t], truth.pressures[t], truth.m_fuel[t], truth.m_ox[t]);
            if (t + 1 >= static_cast<std::size_t>(n)) {
                const auto a = s.features(truth.commands[t + 1], truth.status[t + 1], {});
                const auto b = features::feature_row(truth, t + 1, n);
                CHECK(a == b);
            } else {
                CHECK(!s.warmed());
            }
        }
    }
    CHECK_THROWS(RolloutState(0));
}

TEST_CASE("windows and reports")
{
    plant::PlantConfig cfg;
    const auto truth = plant::simulate(stair(), cfg);
    const auto same = error_windows(truth, truth, cfg);
    CHECK(same.max_error.isZero(0.0));
    CHECK(same.rmse.isZero(0.0));
    CHECK(same.mass_max_error == 0.0);
    CHECK(same.samples == truth.size());

    // constant command including the initial row
    plant::PlantTrajectory flat;
    for (int i = 0; i < 300; ++i) flat.push_back({500, 500, 500, 500}, {1, 1, 1, 1}, {480, 480, 480, 480}, 1e6, 0, 0);
    const auto mask = transient_mask(flat, {});
    CHECK(std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }));

    // one step at row 100: one second of transient after it
    for (int i = 100; i < 300; ++i) flat.commands[static_cast<std::size_t>(i)] = {600, 600, 600, 600};
    const auto m2 = transient_mask(flat, {});
    CHECK(!m2[99]);
    CHECK(m2[100]);
    CHECK(m2[200]);
    CHECK(!m2[201]);

    auto off = truth;
    for (auto& t : off.thrusts) t[2] += 3.0;
    const auto rep = error_windows(truth, off, cfg);
    CHECK(rep.thrust_max() == doctest::Approx(3.0));
    CHECK(rep.rmse(2) == doctest::Approx(3.0));
    CHECK(rep.rmse(0) == 0.0);
    CHECK(rep.thrust_steady_max() == doctest::Approx(3.0));
    CHECK(rep.transient_samples + rep.steady_samples == rep.samples);

    CHECK_THROWS(error_windows(truth, lag_truth(stair()), cfg, {}, RowMatrix::Zero(3, 7)));
}

TEST_CASE("teacher forcing reproduces the one-step fit")
{
    plant::PlantConfig cfg;
    excitation::ExcitationConfig ex;
    ex.duration = 8.0;
    const auto truth = plant::simulate(excitation::excitation_segment(520, ex), cfg);
    const auto ds = features::assemble(truth, {3});
    const auto model = regression::train_model(ds, {}, 1e-4);
    const auto tf = teacher_forced(model, truth);
    const RowMatrix direct = regression::predict_rows(model, ds.inputs);
    // same numbers up to summation order (pressure is ~1e6 Pa)
    const RowMatrix diff = tf.raw.bottomRows(ds.rows()) - direct;
    CHECK((diff.array().abs() <= 1e-13 * (1.0 + direct.array().abs()) + 1e-12).all());

    const auto rep = teacher_forced_eval(model, truth, cfg);
    CHECK(rep.mode == "teacher-forced");
    const auto res = regression::rmse(direct, ds.targets);
    // teacher-forced RMSE over the rows after warm-up matches the training residual
    const double n_all = static_cast<double>(truth.size());
    const double n_fit = static_cast<double>(ds.rows());
    // pressure is the one output the report never clamps
    CHECK(rep.rmse(4) == doctest::Approx(res.per_output(4) * std::sqrt(n_fit / n_all)).epsilon(1e-8));
}

TEST_CASE("descent profile")
{
    plant::PlantConfig cfg;
    const auto p = descent_profile(cfg);
    CHECK(static_cast<double>(p.size()) * p.dt == doctest::Approx(1000.0).epsilon(1e-3));
    std::size_t powered = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < kEngines; ++j) {
            if (p.status[i][j] > 0.0) {
                CHECK(p.commands[i][j] >= cfg.e_min);
                CHECK(p.commands[i][j] <= cfg.e_max);
                ++powered;
            } else {
                CHECK(p.commands[i][j] == 0.0);
            }
        }
    CHECK(powered > 0);
    const auto truth = plant::simulate(p, cfg);
    const auto mass = plant::module_mass(truth, cfg);
    CHECK(mass.back() > cfg.m_dry);
    CHECK(mass.front() - mass.back() > 100.0);

    // the plant replayed against itself
    const auto rep = error_windows(truth, truth, cfg);
    CHECK(rep.thrust_max() == 0.0);
    CHECK(rep.mass_max_error == 0.0);

    CHECK_THROWS_AS(descent_profile_eval(lag_model(), plant::CommandTrace{}, cfg), std::invalid_argument);
}
