// Command-line driver: gen-data, train, sweep, validate.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <thrustid/pipeline.hpp>

namespace fs = std::filesystem;
using namespace thrustid;

namespace {

struct Options
{
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> mu;
    std::optional<int> history;
    std::optional<std::string> basis;
    std::optional<int> folds;
    std::string data;
    std::string model;
    bool passthrough = false;
};

void add_common(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output directory (defaults to the configured output_dir)");
    cmd->add_option("--seed", o.seed, "Seed for corpus order and fold assignment");
}

pipeline::PipelineConfig make_config(const Options& o)
{
    auto cfg = o.config.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(o.config);
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.mu) cfg.mu = *o.mu;
    if (o.history) cfg.history.n = *o.history;
    if (o.basis) cfg.basis.kind = regression::basis_kind_from_string(*o.basis);
    if (o.folds) cfg.sweep.k = *o.folds;
    cfg.resolve();
    return cfg;
}

void report_error(const std::string& command, const std::string& out, const std::string& kind,
                  const std::string& message)
{
    const io::Json err{{"status", "error"}, {"command", command}, {"type", kind}, {"message", message}};
    fmt::print(stderr, "{}\n", err.dump());
    if (out.empty()) return;
    try {
        io::write_json(fs::path(out) / "error.json", err);
    } catch (const std::exception&) {
        // the directory itself may be the problem
    }
}

int run_gen_data(const Options& o)
{
    const auto cfg = make_config(o);
    const auto sum = pipeline::gen_data(cfg, cfg.output_dir);
    fmt::print("corpus: {} traces, {} samples, delivered thrust {:.1f} .. {:.1f} N -> {}\n", sum.traces,
               sum.samples, sum.thrust_min, sum.thrust_max, cfg.output_dir);
    for (const auto& id : sum.failed) fmt::print(stderr, "trace {} failed, see manifest\n", id);
    return sum.failed.empty() ? 0 : 1;
}

int run_train(const Options& o)
{
    const auto cfg = make_config(o);
    const auto sum = pipeline::train(cfg, o.data, cfg.output_dir);
    fmt::print("trained n={} mu={} on {} rows: sparsity {:.3f}, training RMSE {:.4g} -> {}\n",
               cfg.history.n, cfg.mu, sum.rows, sum.model.sparsity, sum.train_rmse.aggregate,
               (fs::path(cfg.output_dir) / "model.json").string());
    return 0;
}

int run_sweep(const Options& o)
{
    auto cfg = make_config(o);
    // explicit overrides collapse the corresponding grid
    if (o.history) cfg.sweep.n_grid = {*o.history};
    if (o.mu) cfg.sweep.mu_grid = {*o.mu};
    cfg.resolve();
    const auto sum = pipeline::sweep(cfg, o.data, cfg.output_dir);
    for (const auto& gp : sum.history.points)
        fmt::print("n={:2d}  train {:.5f}  test {:.5f}\n", gp.n, gp.train_rmse, gp.test_rmse);
    for (const auto& gp : sum.mu.points)
        fmt::print("mu={:<8.2g} train {:.5f}  test {:.5f}  sparsity {:.3f}\n", gp.mu, gp.train_rmse,
                   gp.test_rmse, gp.sparsity);
    fmt::print("selected n={} mu={} ({} ties; bare minimum n={} mu={}; Pareto knee at mu={})\n",
               sum.history.selected_n, sum.mu.selected_mu, tuning::to_string(sum.history.tie_rule),
               sum.history.exact_n, sum.mu.exact_mu, sum.knee_mu);
    return 0;
}

void print_validation(const std::vector<pipeline::ExperimentResult>& results, bool& ok)
{
    for (const auto& r : results) {
        const auto& v = r.rollout;
        if (v.diverged) {
            ok = false;
            fmt::print("{:<11} diverged: {}\n", v.id, v.error);
            continue;
        }
        fmt::print("{:<11} thrust max {:7.3f} N (transient {:7.3f}, steady {:7.3f}, settled {:7.3f})  "
                   "mass {:.4f} kg  teacher-forced max {:.3f} N\n",
                   v.id, v.thrust_max(), v.thrust_transient_max(), v.thrust_steady_max(),
                   v.settled_max_thrust, v.mass_max_error, r.teacher_forced.thrust_max());
    }
}

int run_all(const Options& o)
{
    const auto cfg = make_config(o);
    const auto run = pipeline::run_all(cfg, cfg.output_dir);
    fmt::print("corpus: {} traces, {} samples\n", run.data.traces, run.data.samples);
    fmt::print("selected n={} mu={}; model sparsity {:.3f}\n", run.trained_config.history.n,
               run.trained_config.mu, run.train.model.sparsity);
    bool ok = run.data.failed.empty();
    print_validation(run.validation, ok);
    return ok ? 0 : 1;
}

int run_validate(const Options& o)
{
    const auto cfg = make_config(o);
    std::optional<regression::CoefficientModel> model;
    if (!o.passthrough) {
        if (o.model.empty()) throw std::runtime_error("validate: --model or --plant-passthrough required");
        if (!fs::exists(o.model)) throw std::runtime_error("model file not found: " + o.model);
        model = io::read_model(o.model);
    }
    const auto results = pipeline::validate(cfg, model ? &*model : nullptr, cfg.output_dir);
    bool ok = true;
    print_validation(results, ok);
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse identification of a four-engine throttleable propulsion plant"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-data", "Generate and simulate the excitation corpus");
    add_common(gen, o);

    auto* train = app.add_subcommand("train", "Fit the coefficient model on a corpus");
    add_common(train, o);
    train->add_option("--data", o.data, "Corpus directory from gen-data")->required();
    train->add_option("--mu", o.mu, "Regularization weight");
    train->add_option("--history", o.history, "History length n");
    train->add_option("--basis", o.basis, "linear | elementwise-poly | full-quadratic");

    auto* sweep = app.add_subcommand("sweep", "Cross-validated sweeps over n and mu");
    add_common(sweep, o);
    sweep->add_option("--data", o.data, "Corpus directory from gen-data")->required();
    sweep->add_option("--folds", o.folds, "Number of folds");
    sweep->add_option("--basis", o.basis, "linear | elementwise-poly | full-quadratic");
    sweep->add_option("--history", o.history, "Restrict the n grid to one value");
    sweep->add_option("--mu", o.mu, "Restrict the mu grid to one value");

    auto* val = app.add_subcommand("validate", "Run the validation experiments against the plant");
    add_common(val, o);
    val->add_option("--model", o.model, "Model file from train");
    val->add_flag("--plant-passthrough", o.passthrough, "Use the plant itself as the model");

    auto* run = app.add_subcommand("run", "gen-data, sweep, train at the selection, validate");
    add_common(run, o);

    CLI11_PARSE(app, argc, argv);

    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    try {
        if (name == "gen-data") return run_gen_data(o);
        if (name == "train") return run_train(o);
        if (name == "sweep") return run_sweep(o);
        if (name == "run") return run_all(o);
        return run_validate(o);
    } catch (const regression::NotConverged& e) {
        report_error(name, o.out, "not_converged",
                     fmt::format("{} (KKT residual {})", e.what(), e.kkt_residual()));
    } catch (const tuning::SweepError& e) {
        report_error(name, o.out, "sweep", e.what());
    } catch (const plant::PlantError& e) {
        report_error(name, o.out, "plant", e.what());
    } catch (const std::exception& e) {
        report_error(name, o.out, "error", e.what());
    }
    return 1;
}
