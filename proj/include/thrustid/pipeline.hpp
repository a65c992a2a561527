#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <thrustid/excitation.hpp>
#include <thrustid/features.hpp>
#include <thrustid/io.hpp>
#include <thrustid/plant.hpp>
#include <thrustid/regression.hpp>
#include <thrustid/rollout.hpp>
#include <thrustid/tuning.hpp>

namespace thrustid {
namespace pipeline {

namespace fs = std::filesystem;

/**
 * Everything a run depends on. The single seed drives both the corpus order
 * and the fold assignment; the excitation thrust range and time step are
 * taken from the plant.
 */
struct PipelineConfig
{
    plant::PlantConfig plant;
    excitation::ExcitationConfig excitation;
    features::HistorySpec history;
    features::LambdaParams lambda;
    regression::BasisSpec basis;
    regression::LassoOptions solver;
    tuning::SweepConfig sweep;
    double mu = 1e-2;            // training weight
    double settle_window = 1.0;  // s
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    /// Copy shared values into the nested configs and validate them.
    void resolve();
};

io::Json to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const io::Json& j);
PipelineConfig load_config(const fs::path& path);

struct CorpusTrajectory
{
    std::string id;
    plant::PlantTrajectory trajectory;
};

struct GenDataSummary
{
    std::size_t traces = 0;
    std::size_t samples = 0;
    double thrust_min = 0.0;
    double thrust_max = 0.0;
    std::vector<std::string> failed; // depleted or rejected traces
};

/// Build and simulate the corpus into out/{traces,trajectories}, write manifest.json.
GenDataSummary gen_data(const PipelineConfig& cfg, const fs::path& out);

/// Load the simulated trajectories listed in a corpus manifest.
std::vector<CorpusTrajectory> load_corpus(const fs::path& data_dir);

/// Assemble every trajectory at history n and stack the rows.
features::Dataset corpus_dataset(const std::vector<CorpusTrajectory>& corpus, int n,
                                 const features::LambdaParams& lambda);

struct TrainSummary
{
    regression::CoefficientModel model;
    regression::RmseResult train_rmse;
    std::size_t rows = 0;
};

TrainSummary train(const PipelineConfig& cfg, const fs::path& data_dir, const fs::path& out);

struct SweepSummary
{
    tuning::SweepReport history;
    tuning::SweepReport mu;
    std::vector<tuning::ParetoRow> pareto;
    double knee_mu = 0.0;
};

SweepSummary sweep(const PipelineConfig& cfg, const fs::path& data_dir, const fs::path& out);

struct Experiment
{
    std::string id;
    plant::CommandTrace trace;
};

/// 600 N sine segment, step stair up/down, 800 -> 240 N fall step, descent profile.
std::vector<Experiment> validation_suite(const PipelineConfig& cfg);

struct ExperimentResult
{
    rollout::ValidationReport rollout;
    rollout::ValidationReport teacher_forced;
};

/**
 * Run the validation suite and write per-experiment reports and plot CSVs.
 * A null model replays the plant against itself.
 */
std::vector<ExperimentResult> validate(const PipelineConfig& cfg, const regression::CoefficientModel* model,
                                       const fs::path& out);

struct RunSummary
{
    GenDataSummary data;
    SweepSummary sweep;
    TrainSummary train;
    std::vector<ExperimentResult> validation;
    PipelineConfig trained_config; // cfg with the selected n and mu
};

/**
 * gen-data, sweep, train at the selected (n, mu), validate. Writes
 * out/{data,sweep,model,validate}.
 */
RunSummary run_all(const PipelineConfig& cfg, const fs::path& out);

} // namespace pipeline
} // namespace thrustid
