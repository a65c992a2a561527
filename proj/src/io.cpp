#include <thrustid/io.hpp>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace thrustid {
namespace io {

std::string num(double v)
{
    return fmt::format("{}", v);
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const fs::path& path, const Json& j)
{
    write_text(path, j.dump(2) + "\n");
}

Json read_json(const fs::path& path)
{
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(fmt::format("{}: {}", path.string(), e.what()));
    }
}

namespace {

const char* kTrajectoryHeader = "t,Tr1,Tr2,Tr3,Tr4,Se1,Se2,Se3,Se4,To1,To2,To3,To4,P,mf,mo";
const char* kTraceHeader = "t,Tr1,Tr2,Tr3,Tr4,Se1,Se2,Se3,Se4";

std::vector<std::vector<double>> parse_csv(const std::string& text, const std::string& header)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw std::runtime_error("CSV: unexpected header '" + line + "'");
    const auto cols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(cols);
        const char* p = line.c_str();
        for (;;) {
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(p, &end);
            if (end == p || errno == ERANGE)
                throw std::runtime_error(fmt::format("CSV line {}: bad number", lineno));
            row.push_back(v);
            if (*end == ',') {
                p = end + 1;
            } else if (*end == '\0') {
                break;
            } else {
                throw std::runtime_error(fmt::format("CSV line {}: unexpected character", lineno));
            }
        }
        if (row.size() != cols)
            throw std::runtime_error(
                fmt::format("CSV line {}: {} fields, expected {}", lineno, row.size(), cols));
        rows.push_back(std::move(row));
    }
    return rows;
}

double infer_dt(const std::vector<std::vector<double>>& rows)
{
    if (rows.size() < 2) return 0.01;
    return rows[1][0] - rows[0][0];
}

// Known-key check so typos in config files do not pass silently.
void check_keys(const Json& j, std::initializer_list<const char*> keys, const char* what)
{
    if (!j.is_object()) throw std::runtime_error(fmt::format("{}: expected a JSON object", what));
    std::set<std::string> known(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::runtime_error(fmt::format("{}: unknown key '{}'", what, it.key()));
}

template <class T>
void get_if(const Json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

Json vec_json(const Eigen::VectorXd& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vec_from(const Json& a)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a.at(i).get<double>();
    return v;
}

} // namespace

std::string trajectory_csv(const plant::PlantTrajectory& traj)
{
    std::string out = kTrajectoryHeader;
    out += '\n';
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& c = traj.commands[i];
        const auto& s = traj.status[i];
        const auto& th = traj.thrusts[i];
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", traj.time(i), c[0], c[1],
                           c[2], c[3], s[0], s[1], s[2], s[3], th[0], th[1], th[2], th[3],
                           traj.pressures[i], traj.m_fuel[i], traj.m_ox[i]);
    }
    return out;
}

plant::PlantTrajectory parse_trajectory_csv(const std::string& text)
{
    const auto rows = parse_csv(text, kTrajectoryHeader);
    plant::PlantTrajectory traj;
    traj.dt = infer_dt(rows);
    traj.reserve(rows.size());
    for (const auto& r : rows) {
        traj.push_back({r[1], r[2], r[3], r[4]}, {r[5], r[6], r[7], r[8]}, {r[9], r[10], r[11], r[12]},
                       r[13], r[14], r[15]);
    }
    return traj;
}

void write_trajectory(const fs::path& path, const plant::PlantTrajectory& traj)
{
    write_text(path, trajectory_csv(traj));
}

plant::PlantTrajectory read_trajectory(const fs::path& path)
{
    try {
        return parse_trajectory_csv(read_text(path));
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::string trace_csv(const plant::CommandTrace& trace)
{
    std::string out = kTraceHeader;
    out += '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& c = trace.commands[i];
        const auto& s = trace.status[i];
        out += fmt::format("{},{},{},{},{},{},{},{},{}\n", static_cast<double>(i) * trace.dt, c[0], c[1],
                           c[2], c[3], s[0], s[1], s[2], s[3]);
    }
    return out;
}

plant::CommandTrace parse_trace_csv(const std::string& text)
{
    const auto rows = parse_csv(text, kTraceHeader);
    plant::CommandTrace trace;
    trace.dt = infer_dt(rows);
    for (const auto& r : rows) {
        trace.commands.push_back({r[1], r[2], r[3], r[4]});
        trace.status.push_back({r[5], r[6], r[7], r[8]});
    }
    return trace;
}

void write_trace(const fs::path& path, const plant::CommandTrace& trace)
{
    write_text(path, trace_csv(trace));
}

plant::CommandTrace read_trace(const fs::path& path)
{
    return parse_trace_csv(read_text(path));
}

Json to_json(const plant::PlantConfig& c)
{
    return Json{{"e_min", c.e_min},
                {"e_max", c.e_max},
                {"p_reg", c.p_reg},
                {"p_bottle0", c.p_bottle0},
                {"v_bottle", c.v_bottle},
                {"droop_coeff", c.droop_coeff},
                {"tau_rise", c.tau_rise},
                {"tau_fall", c.tau_fall},
                {"slew_limit", c.slew_limit},
                {"isp", c.isp},
                {"g0", c.g0},
                {"mixture_ratio", c.mixture_ratio},
                {"m_module0", c.m_module0},
                {"dt", c.dt},
                {"valve_delay", c.valve_delay},
                {"rho_prop", c.rho_prop},
                {"m_dry", c.m_dry}};
}

void from_json(const Json& j, plant::PlantConfig& c)
{
    check_keys(j,
               {"e_min", "e_max", "p_reg", "p_bottle0", "v_bottle", "droop_coeff", "tau_rise",
                "tau_fall", "slew_limit", "isp", "g0", "mixture_ratio", "m_module0", "dt",
                "valve_delay", "rho_prop", "m_dry"},
               "plant");
    get_if(j, "e_min", c.e_min);
    get_if(j, "e_max", c.e_max);
    get_if(j, "p_reg", c.p_reg);
    get_if(j, "p_bottle0", c.p_bottle0);
    get_if(j, "v_bottle", c.v_bottle);
    get_if(j, "droop_coeff", c.droop_coeff);
    get_if(j, "tau_rise", c.tau_rise);
    get_if(j, "tau_fall", c.tau_fall);
    get_if(j, "slew_limit", c.slew_limit);
    get_if(j, "isp", c.isp);
    get_if(j, "g0", c.g0);
    get_if(j, "mixture_ratio", c.mixture_ratio);
    get_if(j, "m_module0", c.m_module0);
    get_if(j, "dt", c.dt);
    get_if(j, "valve_delay", c.valve_delay);
    get_if(j, "rho_prop", c.rho_prop);
    get_if(j, "m_dry", c.m_dry);
}

Json to_json(const excitation::ExcitationConfig& c)
{
    return Json{{"m_levels", c.m_levels},
                {"a_amp", c.a_amp},
                {"duration", c.duration},
                {"include_steps", c.include_steps},
                {"include_ramps", c.include_ramps},
                {"include_endurance", c.include_endurance}};
}

void from_json(const Json& j, excitation::ExcitationConfig& c)
{
    check_keys(j, {"m_levels", "a_amp", "duration", "include_steps", "include_ramps", "include_endurance"},
               "excitation");
    get_if(j, "m_levels", c.m_levels);
    get_if(j, "a_amp", c.a_amp);
    get_if(j, "duration", c.duration);
    get_if(j, "include_steps", c.include_steps);
    get_if(j, "include_ramps", c.include_ramps);
    get_if(j, "include_endurance", c.include_endurance);
}

Json to_json(const features::LambdaParams& p)
{
    return Json{{"scale", p.scale}, {"eps", p.eps}};
}

void from_json(const Json& j, features::LambdaParams& p)
{
    check_keys(j, {"scale", "eps"}, "lambda");
    get_if(j, "scale", p.scale);
    get_if(j, "eps", p.eps);
}

void write_dataset(const fs::path& csv_path, const features::Dataset& ds)
{
    const auto names = features::Layout(ds.history.n).column_names();
    const auto targets = features::target_names();
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
    for (const auto& t : targets) out += ",y_" + t;
    out += '\n';
    for (Eigen::Index r = 0; r < ds.rows(); ++r) {
        for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) {
            if (c) out += ',';
            out += num(ds.inputs(r, c));
        }
        for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) {
            out += ',';
            out += num(ds.targets(r, c));
        }
        out += '\n';
    }
    write_text(csv_path, out);

    Json prov = Json::array();
    for (const auto& [src, idx] : ds.provenance) prov.push_back(Json::array({src, idx}));
    Json side{{"n", ds.history.n},
              {"width", features::Layout(ds.history.n).width()},
              {"rows", ds.rows()},
              {"lambda", to_json(ds.lambda)},
              {"provenance", prov}};
    auto side_path = csv_path;
    side_path.replace_extension(".json");
    write_json(side_path, side);
}

Json to_json(const regression::BasisSpec& b)
{
    return Json{{"kind", regression::to_string(b.kind)}, {"degree", b.degree}, {"include_bias", b.include_bias}};
}

void from_json(const Json& j, regression::BasisSpec& b)
{
    check_keys(j, {"kind", "degree", "include_bias"}, "basis");
    if (j.contains("kind")) b.kind = regression::basis_kind_from_string(j.at("kind").get<std::string>());
    get_if(j, "degree", b.degree);
    get_if(j, "include_bias", b.include_bias);
    b.validate();
}

Json to_json(const regression::LassoOptions& o)
{
    return Json{{"max_sweeps", o.max_sweeps}, {"tolerance", o.tolerance}};
}

void from_json(const Json& j, regression::LassoOptions& o)
{
    check_keys(j, {"max_sweeps", "tolerance"}, "solver");
    get_if(j, "max_sweeps", o.max_sweeps);
    get_if(j, "tolerance", o.tolerance);
}

Json to_json(const regression::CoefficientModel& m)
{
    Json triplets = Json::array();
    for (Eigen::Index r = 0; r < m.K.rows(); ++r)
        for (Eigen::Index c = 0; c < m.K.cols(); ++c)
            if (m.K(r, c) != 0.0) triplets.push_back(Json::array({r, c, m.K(r, c)}));
    Json pers = Json::array();
    for (auto c : m.persistence) pers.push_back(c);
    return Json{{"format", "thrustid-model"},
                {"version", 1},
                {"basis", to_json(m.basis)},
                {"mu", m.mu},
                {"n", m.n},
                {"lambda", to_json(m.lambda)},
                {"sparsity", m.sparsity},
                {"kkt_residual", m.kkt_residual},
                {"sweeps", m.sweeps},
                {"persistence", pers},
                {"standardization",
                 {{"mean", vec_json(m.standardization.mean)},
                  {"scale", vec_json(m.standardization.scale)},
                  {"target_mean", vec_json(m.standardization.target_mean)},
                  {"target_scale", vec_json(m.standardization.target_scale)}}},
                {"rows", m.K.rows()},
                {"cols", m.K.cols()},
                {"K", triplets}};
}

regression::CoefficientModel model_from_json(const Json& j)
{
    if (j.value("format", "") != "thrustid-model") throw std::runtime_error("not a model file");
    regression::CoefficientModel m;
    from_json(j.at("basis"), m.basis);
    m.mu = j.at("mu").get<double>();
    m.n = j.at("n").get<int>();
    from_json(j.at("lambda"), m.lambda);
    m.sparsity = j.at("sparsity").get<double>();
    get_if(j, "kkt_residual", m.kkt_residual);
    get_if(j, "sweeps", m.sweeps);
    for (const auto& c : j.at("persistence")) m.persistence.push_back(c.get<Eigen::Index>());
    const auto& st = j.at("standardization");
    m.standardization.mean = vec_from(st.at("mean"));
    m.standardization.scale = vec_from(st.at("scale"));
    m.standardization.target_mean = vec_from(st.at("target_mean"));
    m.standardization.target_scale = vec_from(st.at("target_scale"));
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (rows != features::kTargets || cols != m.basis.width(m.input_width()))
        throw std::runtime_error("model file: K shape does not match basis and history length");
    m.K = Eigen::MatrixXd::Zero(rows, cols);
    for (const auto& t : j.at("K")) {
        const auto r = t.at(0).get<Eigen::Index>();
        const auto c = t.at(1).get<Eigen::Index>();
        if (r < 0 || r >= rows || c < 0 || c >= cols) throw std::runtime_error("model file: index out of range");
        m.K(r, c) = t.at(2).get<double>();
    }
    return m;
}

void write_model(const fs::path& path, const regression::CoefficientModel& m)
{
    write_json(path, to_json(m));
}

regression::CoefficientModel read_model(const fs::path& path)
{
    return model_from_json(read_json(path));
}

Json to_json(const tuning::SweepConfig& c)
{
    return Json{{"n_grid", c.n_grid}, {"mu_grid", c.mu_grid}, {"k", c.k}, {"mu_fixed", c.mu_fixed},
                {"tie_rule", tuning::to_string(c.tie_rule)}};
}

void from_json(const Json& j, tuning::SweepConfig& c)
{
    check_keys(j, {"n_grid", "mu_grid", "k", "mu_fixed", "tie_rule"}, "sweep");
    get_if(j, "n_grid", c.n_grid);
    get_if(j, "mu_grid", c.mu_grid);
    get_if(j, "k", c.k);
    get_if(j, "mu_fixed", c.mu_fixed);
    if (j.contains("tie_rule")) c.tie_rule = tuning::tie_rule_from_string(j.at("tie_rule").get<std::string>());
}

std::string sweep_csv(const tuning::SweepReport& rep)
{
    std::string out = "kind,n,mu,fold,train_rmse,test_rmse,sparsity,sweeps\n";
    const auto kind = tuning::to_string(rep.kind);
    for (const auto& gp : rep.points)
        for (const auto& f : gp.folds)
            out += fmt::format("{},{},{},{},{},{},{},{}\n", kind, gp.n, gp.mu, f.fold, f.train_rmse,
                               f.test_rmse, f.sparsity, f.sweeps);
    for (const auto& gp : rep.points)
        out += fmt::format("{},{},{},mean,{},{},{},\n", kind, gp.n, gp.mu, gp.train_rmse, gp.test_rmse,
                           gp.sparsity);
    return out;
}

Json to_json(const tuning::SweepReport& rep)
{
    Json pts = Json::array();
    for (const auto& gp : rep.points) {
        pts.push_back({{"n", gp.n},
                       {"mu", gp.mu},
                       {"train_rmse", gp.train_rmse},
                       {"test_rmse", gp.test_rmse},
                       {"test_rmse_sd", gp.test_rmse_sd},
                       {"sparsity", gp.sparsity},
                       {"test_rmse_per_output", vec_json(gp.test_rmse_per_output)}});
    }
    return Json{{"kind", tuning::to_string(rep.kind)},
                {"k", rep.k},
                {"tie_rule", tuning::to_string(rep.tie_rule)},
                {"selected_n", rep.selected_n},
                {"selected_mu", rep.selected_mu},
                {"exact_n", rep.exact_n},
                {"exact_mu", rep.exact_mu},
                {"points", pts}};
}

std::string pareto_csv(const std::vector<tuning::ParetoRow>& rows)
{
    std::string out = "mu,sparsity,test_rmse,pareto\n";
    for (const auto& r : rows)
        out += fmt::format("{},{},{},{}\n", r.mu, r.sparsity, r.test_rmse, r.pareto ? 1 : 0);
    return out;
}

Json to_json(const rollout::ValidationReport& r)
{
    Json j{{"id", r.id},
           {"mode", r.mode},
           {"diverged", r.diverged}};
    if (r.diverged) {
        j["divergence_time"] = r.divergence_time;
        j["error"] = r.error;
        return j;
    }
    j["sparsity"] = r.sparsity;
    j["samples"] = r.samples;
    j["transient_samples"] = r.transient_samples;
    j["steady_samples"] = r.steady_samples;
    j["outputs"] = features::target_names();
    j["rmse"] = vec_json(r.rmse);
    j["max_error"] = vec_json(r.max_error);
    j["transient_max"] = vec_json(r.transient_max);
    j["steady_max"] = vec_json(r.steady_max);
    j["raw_max_error"] = vec_json(r.raw_max_error);
    j["thrust_max"] = r.thrust_max();
    j["thrust_transient_max"] = r.thrust_transient_max();
    j["thrust_steady_max"] = r.thrust_steady_max();
    j["thrust_settled_max"] = r.settled_max_thrust;
    j["module_mass_max_error"] = r.mass_max_error;
    return j;
}

std::string comparison_csv(const plant::PlantTrajectory& truth, const plant::PlantTrajectory& pred,
                           const plant::PlantConfig& cfg)
{
    if (truth.size() != pred.size()) throw std::invalid_argument("comparison_csv: length mismatch");
    const auto names = features::target_names();
    std::string out = "t,Tr1,Tr2,Tr3,Tr4,Se1,Se2,Se3,Se4";
    for (const auto& n : names) out += "," + n;
    for (const auto& n : names) out += "," + n + "_pred";
    for (const auto& n : names) out += "," + n + "_err";
    out += ",mass,mass_pred\n";
    const auto mt = plant::module_mass(truth, cfg);
    const auto mp = plant::module_mass(pred, cfg);
    auto values = [](const plant::PlantTrajectory& tr, std::size_t i) {
        return std::array<double, 7>{tr.thrusts[i][0], tr.thrusts[i][1], tr.thrusts[i][2], tr.thrusts[i][3],
                                     tr.pressures[i], tr.m_fuel[i],    tr.m_ox[i]};
    };
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto& c = truth.commands[i];
        const auto& s = truth.status[i];
        out += fmt::format("{},{},{},{},{},{},{},{},{}", truth.time(i), c[0], c[1], c[2], c[3], s[0], s[1],
                           s[2], s[3]);
        const auto a = values(truth, i);
        const auto b = values(pred, i);
        for (double v : a) out += "," + num(v);
        for (double v : b) out += "," + num(v);
        for (std::size_t o = 0; o < 7; ++o) out += "," + num(b[o] - a[o]);
        out += fmt::format(",{},{}\n", mt[i], mp[i]);
    }
    return out;
}

} // namespace io
} // namespace thrustid
