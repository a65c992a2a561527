#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include <thrustid/excitation.hpp>
#include <thrustid/features.hpp>
#include <thrustid/plant.hpp>
#include <thrustid/regression.hpp>
#include <thrustid/rollout.hpp>
#include <thrustid/tuning.hpp>

namespace thrustid {
namespace io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Shortest representation that reads back to the same double.
std::string num(double v);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

// --- plant ------------------------------------------------------------------

/// t,Tr1..Tr4,Se1..Se4,To1..To4,P,mf,mo
std::string trajectory_csv(const plant::PlantTrajectory& traj);
plant::PlantTrajectory parse_trajectory_csv(const std::string& text);
void write_trajectory(const fs::path& path, const plant::PlantTrajectory& traj);
plant::PlantTrajectory read_trajectory(const fs::path& path);

/// Command columns only: t,Tr1..Tr4,Se1..Se4.
std::string trace_csv(const plant::CommandTrace& trace);
plant::CommandTrace parse_trace_csv(const std::string& text);
void write_trace(const fs::path& path, const plant::CommandTrace& trace);
plant::CommandTrace read_trace(const fs::path& path);

Json to_json(const plant::PlantConfig& cfg);
void from_json(const Json& j, plant::PlantConfig& cfg);

// --- excitation / features --------------------------------------------------

Json to_json(const excitation::ExcitationConfig& cfg);
void from_json(const Json& j, excitation::ExcitationConfig& cfg);

Json to_json(const features::LambdaParams& p);
void from_json(const Json& j, features::LambdaParams& p);

/// Dataset CSV (inputs then targets, named columns) plus its JSON sidecar.
void write_dataset(const fs::path& csv_path, const features::Dataset& ds);

// --- regression -------------------------------------------------------------

Json to_json(const regression::BasisSpec& b);
void from_json(const Json& j, regression::BasisSpec& b);

Json to_json(const regression::LassoOptions& o);
void from_json(const Json& j, regression::LassoOptions& o);

/// K is stored as (row, col, value) triplets of its non-zero entries.
Json to_json(const regression::CoefficientModel& m);
regression::CoefficientModel model_from_json(const Json& j);
void write_model(const fs::path& path, const regression::CoefficientModel& m);
regression::CoefficientModel read_model(const fs::path& path);

// --- tuning -----------------------------------------------------------------

Json to_json(const tuning::SweepConfig& cfg);
void from_json(const Json& j, tuning::SweepConfig& cfg);

/// One row per grid point per fold followed by one aggregate row per grid point.
std::string sweep_csv(const tuning::SweepReport& rep);
Json to_json(const tuning::SweepReport& rep);
std::string pareto_csv(const std::vector<tuning::ParetoRow>& rows);

// --- rollout ----------------------------------------------------------------

Json to_json(const rollout::ValidationReport& rep);

/// t, commands, then truth, prediction and error for every output, plus module mass.
std::string comparison_csv(const plant::PlantTrajectory& truth, const plant::PlantTrajectory& pred,
                           const plant::PlantConfig& cfg);

} // namespace io
} // namespace thrustid
