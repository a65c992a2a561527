#include <thrustid/pipeline.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace thrustid {
namespace pipeline {

using io::Json;

void PipelineConfig::resolve()
{
    plant.validate();
    excitation.e_min = plant.e_min;
    excitation.e_max = plant.e_max;
    excitation.dt = plant.dt;
    excitation.seed = seed;
    sweep.seed = seed;
    excitation.validate();
    if (history.n < 1) throw std::invalid_argument("history length must be >= 1");
    if (!(lambda.eps > 0.0)) throw std::invalid_argument("lambda eps must be positive");
    basis.validate();
    sweep.validate();
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be finite and >= 0");
    if (!(settle_window >= 0.0)) throw std::invalid_argument("settle window must be >= 0");
    if (solver.max_sweeps < 1 || !(solver.tolerance > 0.0))
        throw std::invalid_argument("solver: need max_sweeps >= 1 and tolerance > 0");
}

Json to_json(const PipelineConfig& c)
{
    return Json{{"plant", io::to_json(c.plant)},
                {"excitation", io::to_json(c.excitation)},
                {"history", {{"n", c.history.n}}},
                {"lambda", io::to_json(c.lambda)},
                {"basis", io::to_json(c.basis)},
                {"solver", io::to_json(c.solver)},
                {"sweep", io::to_json(c.sweep)},
                {"mu", c.mu},
                {"settle_window", c.settle_window},
                {"output_dir", c.output_dir},
                {"seed", c.seed}};
}

PipelineConfig config_from_json(const Json& j)
{
    if (!j.is_object()) throw std::runtime_error("config: expected a JSON object");
    PipelineConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        if (key == "plant") io::from_json(v, c.plant);
        else if (key == "excitation") io::from_json(v, c.excitation);
        else if (key == "history") c.history.n = v.at("n").get<int>();
        else if (key == "lambda") io::from_json(v, c.lambda);
        else if (key == "basis") io::from_json(v, c.basis);
        else if (key == "solver") io::from_json(v, c.solver);
        else if (key == "sweep") io::from_json(v, c.sweep);
        else if (key == "mu") c.mu = v.get<double>();
        else if (key == "settle_window") c.settle_window = v.get<double>();
        else if (key == "output_dir") c.output_dir = v.get<std::string>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else throw std::runtime_error("config: unknown key '" + key + "'");
    }
    return c;
}

PipelineConfig load_config(const fs::path& path)
{
    return config_from_json(io::read_json(path));
}

namespace {

// The snapshot describes the directory it sits in.
void write_snapshot(const PipelineConfig& cfg, const fs::path& out)
{
    auto c = cfg;
    c.output_dir = ".";
    io::write_json(out / "config.json", to_json(c));
}

regression::FitOptions fit_options(const PipelineConfig& cfg)
{
    regression::FitOptions o;
    o.solver = cfg.solver;
    return o;
}

} // namespace

// ---------------------------------------------------------------------------

GenDataSummary gen_data(const PipelineConfig& cfg, const fs::path& out)
{
    fs::create_directories(out / "traces");
    fs::create_directories(out / "trajectories");
    write_snapshot(cfg, out);

    GenDataSummary sum;
    sum.thrust_min = std::numeric_limits<double>::infinity();
    sum.thrust_max = -std::numeric_limits<double>::infinity();
    Json entries = Json::array();
    for (const auto& e : excitation::build_corpus(cfg.excitation)) {
        const auto trace_file = fmt::format("traces/{}.csv", e.id);
        io::write_trace(out / trace_file, e.trace);
        Json entry{{"id", e.id},
                   {"kind", excitation::to_string(e.kind)},
                   {"e_bias", e.e_bias},
                   {"duration", e.duration()},
                   {"trace", trace_file}};
        try {
            const auto traj = plant::simulate(e.trace, cfg.plant);
            const auto traj_file = fmt::format("trajectories/{}.csv", e.id);
            io::write_trajectory(out / traj_file, traj);
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (std::size_t i = 1; i < traj.size(); ++i)
                for (std::size_t j = 0; j < kEngines; ++j) {
                    if (traj.status[i][j] > 0.0) lo = std::min(lo, traj.thrusts[i][j]);
                    hi = std::max(hi, traj.thrusts[i][j]);
                }
            entry["trajectory"] = traj_file;
            entry["samples"] = traj.size();
            entry["ejected_mass"] = traj.m_fuel.back() + traj.m_ox.back();
            sum.samples += traj.size();
            ++sum.traces;
            if (std::isfinite(lo)) sum.thrust_min = std::min(sum.thrust_min, lo);
            sum.thrust_max = std::max(sum.thrust_max, hi);
        } catch (const plant::PlantError& err) {
            entry["error"] = err.what();
            entry["failed_sample"] = err.sample();
            sum.failed.push_back(e.id);
        }
        entries.push_back(entry);
    }
    io::write_json(out / "manifest.json", Json{{"dt", cfg.plant.dt}, {"traces", entries}});
    if (sum.traces == 0) sum.thrust_min = sum.thrust_max = 0.0;
    return sum;
}

std::vector<CorpusTrajectory> load_corpus(const fs::path& data_dir)
{
    const auto manifest_path = data_dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw std::runtime_error("no corpus manifest at " + manifest_path.string());
    const auto manifest = io::read_json(manifest_path);
    std::vector<CorpusTrajectory> corpus;
    for (const auto& e : manifest.at("traces")) {
        if (!e.contains("trajectory")) continue;
        corpus.push_back({e.at("id").get<std::string>(),
                          io::read_trajectory(data_dir / e.at("trajectory").get<std::string>())});
    }
    if (corpus.empty()) throw std::runtime_error("corpus at " + data_dir.string() + " has no trajectories");
    return corpus;
}

features::Dataset corpus_dataset(const std::vector<CorpusTrajectory>& corpus, int n,
                                 const features::LambdaParams& lambda)
{
    std::vector<features::Dataset> parts;
    parts.reserve(corpus.size());
    for (const auto& c : corpus) parts.push_back(features::assemble(c.trajectory, {n}, c.id, lambda));
    return features::merge(parts);
}

// ---------------------------------------------------------------------------

TrainSummary train(const PipelineConfig& cfg, const fs::path& data_dir, const fs::path& out)
{
    const auto corpus = load_corpus(data_dir);
    const auto ds = corpus_dataset(corpus, cfg.history.n, cfg.lambda);

    TrainSummary sum;
    sum.model = regression::train_model(ds, cfg.basis, cfg.mu, fit_options(cfg));
    sum.rows = static_cast<std::size_t>(ds.rows());
    sum.train_rmse = regression::rmse(regression::predict_rows(sum.model, ds.inputs), ds.targets);

    fs::create_directories(out);
    write_snapshot(cfg, out);
    io::write_model(out / "model.json", sum.model);
    Json rmse = Json::object();
    const auto names = features::target_names();
    for (std::size_t o = 0; o < names.size(); ++o)
        rmse[names[o]] = sum.train_rmse.per_output(static_cast<Eigen::Index>(o));
    io::write_json(out / "train_report.json",
                   Json{{"rows", sum.rows},
                        {"n", cfg.history.n},
                        {"mu", cfg.mu},
                        {"basis", io::to_json(cfg.basis)},
                        {"features", sum.model.K.cols()},
                        {"sparsity", sum.model.sparsity},
                        {"kkt_residual", sum.model.kkt_residual},
                        {"sweeps", sum.model.sweeps},
                        {"train_rmse", rmse},
                        {"train_rmse_aggregate", sum.train_rmse.aggregate}});
    return sum;
}

SweepSummary sweep(const PipelineConfig& cfg, const fs::path& data_dir, const fs::path& out)
{
    const auto corpus = load_corpus(data_dir);
    const auto opts = fit_options(cfg);

    SweepSummary sum;
    sum.history = tuning::sweep_history(
        [&](int n) { return corpus_dataset(corpus, n, cfg.lambda); }, cfg.basis, cfg.sweep, opts);
    sum.mu = tuning::sweep_mu(corpus_dataset(corpus, sum.history.selected_n, cfg.lambda), cfg.basis,
                              cfg.sweep, opts);
    sum.pareto = tuning::pareto_table(sum.mu);
    sum.knee_mu = sum.pareto[tuning::pareto_knee(sum.pareto)].mu;

    fs::create_directories(out);
    write_snapshot(cfg, out);
    io::write_text(out / "history_sweep.csv", io::sweep_csv(sum.history));
    io::write_text(out / "mu_sweep.csv", io::sweep_csv(sum.mu));
    io::write_text(out / "pareto.csv", io::pareto_csv(sum.pareto));
    io::write_json(out / "sweep.json", Json{{"selected_n", sum.history.selected_n},
                                            {"selected_mu", sum.mu.selected_mu},
                                            {"pareto_knee_mu", sum.knee_mu},
                                            {"history", io::to_json(sum.history)},
                                            {"mu", io::to_json(sum.mu)}});
    return sum;
}

// ---------------------------------------------------------------------------

std::vector<Experiment> validation_suite(const PipelineConfig& cfg)
{
    const auto& ex = cfg.excitation;
    const double lo = cfg.plant.e_min, hi = cfg.plant.e_max;
    const double span = hi - lo;
    const double sine_bias = (600.0 >= lo && 600.0 <= hi) ? 600.0 : 0.5 * (lo + hi);

    std::vector<double> stair;
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9, 0.7, 0.5, 0.3, 0.1}) stair.push_back(lo + f * span);

    std::vector<Experiment> suite;
    suite.push_back({"sine_600", excitation::excitation_segment(sine_bias, ex)});
    suite.push_back({"step_stair", excitation::step_stair_trace(stair, 5.0, ex)});
    suite.push_back({"fall", excitation::step_stair_trace({hi, lo}, 5.0, ex)});
    suite.push_back({"descent", rollout::descent_profile(cfg.plant)});
    return suite;
}

std::vector<ExperimentResult> validate(const PipelineConfig& cfg, const regression::CoefficientModel* model,
                                       const fs::path& out)
{
    fs::create_directories(out);
    write_snapshot(cfg, out);
    rollout::WindowOptions wopt;
    wopt.settle_window = cfg.settle_window;

    std::vector<ExperimentResult> results;
    Json all = Json::array();
    for (const auto& exp : validation_suite(cfg)) {
        ExperimentResult r;
        plant::PlantTrajectory truth;
        if (model == nullptr) {
            truth = plant::simulate(exp.trace, cfg.plant);
            r.rollout = rollout::error_windows(truth, truth, cfg.plant, wopt);
            r.rollout.id = exp.id;
            r.rollout.mode = "passthrough";
            r.teacher_forced = r.rollout;
            io::write_text(out / (exp.id + ".csv"), io::comparison_csv(truth, truth, cfg.plant));
        } else {
            rollout::RolloutResult res;
            r.rollout = rollout::rollout_eval(exp.id, *model, exp.trace, cfg.plant, wopt, &truth, &res);
            r.teacher_forced = rollout::teacher_forced_eval(*model, truth, cfg.plant, wopt);
            r.teacher_forced.id = exp.id;
            if (!r.rollout.diverged)
                io::write_text(out / (exp.id + ".csv"), io::comparison_csv(truth, res.predicted, cfg.plant));
        }
        Json j{{"id", exp.id}, {"rollout", io::to_json(r.rollout)}, {"teacher_forced", io::to_json(r.teacher_forced)}};
        io::write_json(out / (exp.id + "_report.json"), j);
        all.push_back(j);
        results.push_back(std::move(r));
    }
    io::write_json(out / "validation.json", Json{{"experiments", all}});
    return results;
}

RunSummary run_all(const PipelineConfig& cfg, const fs::path& out)
{
    RunSummary run;
    run.data = gen_data(cfg, out / "data");
    run.sweep = sweep(cfg, out / "data", out / "sweep");
    run.trained_config = cfg;
    run.trained_config.history.n = run.sweep.history.selected_n;
    run.trained_config.mu = run.sweep.mu.selected_mu;
    run.trained_config.resolve();
    run.train = train(run.trained_config, out / "data", out / "model");
    run.validation = validate(run.trained_config, &run.train.model, out / "validate");
    return run;
}

} // namespace pipeline
} // namespace thrustid
