#include <doctest.h>

#include <thrustid/pipeline.hpp>

using namespace thrustid;
using namespace thrustid::pipeline;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / "thrustid_test_pipeline" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// A reduced corpus and grid that runs in a few seconds.
PipelineConfig small_config()
{
    PipelineConfig c;
    c.excitation.m_levels = 3;
    c.excitation.duration = 8.0;
    c.excitation.include_endurance = false;
    c.history.n = 2;
    c.sweep.n_grid = {1, 2, 3};
    c.sweep.mu_grid = {1e-4, 1e-3, 1e-2, 1e-1};
    c.sweep.k = 3;
    c.mu = 1e-3;
    c.seed = 5;
    c.resolve();
    return c;
}

std::vector<std::string> listing(const fs::path& dir)
{
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).string());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("config round trip and validation")
{
    auto c = small_config();
    const auto j = to_json(c);
    const auto back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.sweep.n_grid == c.sweep.n_grid);

    io::Json bad = j;
    bad["colour"] = "red";
    CHECK_THROWS(config_from_json(bad));

    c.mu = -1.0;
    CHECK_THROWS(c.resolve());
    c = small_config();
    c.plant.e_max = 100.0;
    CHECK_THROWS(c.resolve());

    // the plant range propagates to the excitation
    PipelineConfig d;
    d.plant.e_max = 900.0;
    d.resolve();
    CHECK(d.excitation.e_max == 900.0);
}

TEST_CASE("full pipeline is deterministic")
{
    const auto cfg = small_config();
    const auto a = scratch("a"), b = scratch("b");
    const auto ra = pipeline::run_all(cfg, a);
    pipeline::run_all(cfg, b);

    const auto files = listing(a);
    CHECK(files == listing(b));
    for (const auto* must : {"data/manifest.json", "model/model.json", "sweep/sweep.json", "sweep/pareto.csv",
                             "validate/validation.json", "validate/sine_600.csv", "validate/descent_report.json"})
        CHECK(std::find(files.begin(), files.end(), must) != files.end());
    for (const auto& f : files) {
        INFO(f);
        CHECK(io::read_text(a / f) == io::read_text(b / f));
    }

    const auto snap = io::read_json(a / "model" / "config.json");
    CHECK(snap.at("output_dir") == ".");
    const auto model = io::read_model(a / "model" / "model.json");
    CHECK(model.n == ra.sweep.history.selected_n);
    CHECK(model.mu == ra.sweep.mu.selected_mu);
    CHECK(io::read_json(a / "model" / "config.json").at("mu") == ra.sweep.mu.selected_mu);
}

TEST_CASE("sweep selections come from the grids")
{
    const auto cfg = small_config();
    const auto root = scratch("sweep");
    gen_data(cfg, root / "data");
    const auto s = sweep(cfg, root / "data", root / "out");
    CHECK(std::find(cfg.sweep.n_grid.begin(), cfg.sweep.n_grid.end(), s.history.selected_n) != cfg.sweep.n_grid.end());
    CHECK(std::find(cfg.sweep.mu_grid.begin(), cfg.sweep.mu_grid.end(), s.mu.selected_mu) != cfg.sweep.mu_grid.end());
    CHECK(s.mu.points.back().sparsity >= s.mu.points.front().sparsity);
    const auto j = io::read_json(root / "out" / "sweep.json");
    CHECK(j.at("selected_n") == s.history.selected_n);
}

TEST_CASE("plant passthrough has zero error")
{
    const auto cfg = small_config();
    const auto out = scratch("passthrough");
    const auto results = validate(cfg, nullptr, out);
    REQUIRE(results.size() == 4);
    for (const auto& r : results) {
        CHECK(r.rollout.thrust_max() == 0.0);
        CHECK(r.rollout.mass_max_error == 0.0);
        CHECK(r.rollout.mode == "passthrough");
    }
}

TEST_CASE("validation suite")
{
    const auto cfg = small_config();
    const auto suite = validation_suite(cfg);
    REQUIRE(suite.size() == 4);
    CHECK(suite[0].id == "sine_600");
    CHECK(suite[0].trace.commands[0] == Vec4{700, 600, 600, 600});
    CHECK(suite[2].trace.commands.front()[0] == cfg.plant.e_max);
    CHECK(suite[2].trace.commands.back()[0] == cfg.plant.e_min);
    CHECK(suite[3].id == "descent");
}

TEST_CASE("missing inputs are reported")
{
    const auto cfg = small_config();
    const auto out = scratch("missing");
    CHECK_THROWS(load_corpus(out / "nowhere"));
    CHECK_THROWS(train(cfg, out / "nowhere", out));
    CHECK_THROWS(load_config(out / "nowhere.json"));
}
