#pragma once

// Versioned JSON for records, configs and fit reports; CSV for tabular
// exports; the observed-data reader; config digests and run manifests.
// Formats are described in docs/formats.md.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>

#include "json.hpp"
#include "trust/inference.hpp"
#include "trust/simulator.hpp"

namespace trust::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

inline constexpr const char* kRecordSchema = "trust.game_record";
inline constexpr const char* kConfigSchema = "trust.experiment_config";
inline constexpr const char* kFitSchema = "trust.fit_result";
inline constexpr const char* kManifestSchema = "trust.manifest";

/// Malformed input: bad JSON, missing or unknown fields, values off the grid.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file written for another schema or another version of it.
class SchemaError : public FormatError {
public:
    SchemaError(const std::string& what, std::string schema, int version)
        : FormatError(what), schema_(std::move(schema)), version_(version)
    {
    }
    const std::string& schema() const { return schema_; }
    int version() const { return version_; }

private:
    std::string schema_;
    int version_;
};

// Helpers ---------------------------------------------------------------------

namespace detail {

inline void require_keys(const json& j, std::string_view what, std::initializer_list<std::string_view> required,
                         std::initializer_list<std::string_view> optional = {})
{
    if (!j.is_object())
        throw FormatError(std::string(what) + ": expected an object");
    for (auto key : required)
        if (!j.contains(key))
            throw FormatError(std::string(what) + ": missing field '" + std::string(key) + "'");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        const auto known = [&](std::initializer_list<std::string_view> keys) {
            return std::find(keys.begin(), keys.end(), key) != keys.end();
        };
        if (!known(required) && !known(optional))
            throw FormatError(std::string(what) + ": unknown field '" + key + "'");
    }
}

template <class T>
T get(const json& j, std::string_view key, std::string_view what)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string(what) + "." + std::string(key) + ": " + e.what());
    }
}

inline void check_schema(const json& j, const char* schema)
{
    if (!j.is_object() || !j.contains("schema") || !j.contains("version"))
        throw SchemaError(std::string("not a ") + schema + " document (no schema/version header)", "", 0);
    const auto name = get<std::string>(j, "schema", "header");
    const auto version = get<int>(j, "version", "header");
    if (name != schema)
        throw SchemaError("expected schema " + std::string(schema) + ", found " + name, name, version);
    if (version != kSchemaVersion) {
        const std::string hint = version < kSchemaVersion
                                     ? "re-export it with this version, or add a migration step from v" +
                                           std::to_string(version)
                                     : "it was written by a newer release; upgrade to read it";
        throw SchemaError(std::string(schema) + " v" + std::to_string(version) + " is not supported (this build reads v" +
                              std::to_string(kSchemaVersion) + "); " + hint,
                          name, version);
    }
}

inline json parse(const std::string& text, const std::string& source)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(source + ": " + e.what());
    }
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

/// Writes through a temporary file so readers never see a partial file.
inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + path.string());
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shortest round-tripping decimal for CSV cells.
inline std::string format_number(double v)
{
    char buf[32];
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

// Agent specs and planner settings ----------------------------------------------

inline json to_json(const AgentSpec& s)
{
    return {{"role", std::string(to_string(s.role))},
            {"tom", s.tom},
            {"guilt", s.guilt.value()},
            {"planning", s.planning},
            {"beta", s.beta}};
}

inline AgentSpec spec_from_json(const json& j, PlanningRange range = PlanningRange::extended)
{
    detail::require_keys(j, "agent", {"role", "tom", "guilt", "planning"}, {"beta"});
    AgentSpec s;
    try {
        s.role = role_from_string(detail::get<std::string>(j, "role", "agent"));
        s.guilt = GuiltType::from_value(detail::get<double>(j, "guilt", "agent"));
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("agent: ") + e.what());
    } catch (const std::domain_error& e) {
        throw FormatError(std::string("agent: ") + e.what());
    }
    s.tom = detail::get<int>(j, "tom", "agent");
    s.planning = detail::get<int>(j, "planning", "agent");
    if (j.contains("beta"))
        s.beta = detail::get<double>(j, "beta", "agent");
    try {
        s.validate(range);
    } catch (const ConfigError& e) {
        throw FormatError(std::string("agent: ") + e.what());
    }
    return s;
}

inline json to_json(const PlannerConfig& c)
{
    return {{"simulations", c.simulations},
            {"exploration", c.exploration},
            {"rollout_epsilon", c.rollout_epsilon},
            {"nested_budget_fraction", c.nested_budget_fraction},
            {"presearch_fraction", c.presearch_fraction},
            {"seed", c.seed}};
}

inline PlannerConfig planner_from_json(const json& j)
{
    detail::require_keys(j, "planner", {},
                         {"simulations", "exploration", "rollout_epsilon", "nested_budget_fraction",
                          "presearch_fraction", "seed"});
    PlannerConfig c;
    if (j.contains("simulations"))
        c.simulations = detail::get<int>(j, "simulations", "planner");
    if (j.contains("exploration"))
        c.exploration = detail::get<double>(j, "exploration", "planner");
    if (j.contains("rollout_epsilon"))
        c.rollout_epsilon = detail::get<double>(j, "rollout_epsilon", "planner");
    if (j.contains("nested_budget_fraction"))
        c.nested_budget_fraction = detail::get<double>(j, "nested_budget_fraction", "planner");
    if (j.contains("presearch_fraction"))
        c.presearch_fraction = detail::get<double>(j, "presearch_fraction", "planner");
    if (j.contains("seed"))
        c.seed = detail::get<std::uint64_t>(j, "seed", "planner");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("planner: ") + e.what());
    }
    return c;
}

/// Stable digest of everything that determines a run's outputs.
inline std::string config_digest(const PlannerConfig& c) { return hex64(fnv1a(to_json(c).dump())); }

// Game records ------------------------------------------------------------------

inline json to_json(const GameRecord& r)
{
    json j = {{"schema", kRecordSchema}, {"version", kSchemaVersion}, {"id", r.id}, {"observed", r.observed}};
    if (r.investor)
        j["investor"] = to_json(*r.investor);
    if (r.trustee)
        j["trustee"] = to_json(*r.trustee);
    if (r.seed)
        j["seed"] = *r.seed;
    if (!r.config_digest.empty())
        j["config_digest"] = r.config_digest;
    json rounds = json::array();
    for (const Exchange& e : r.rounds)
        rounds.push_back({{"investment", e.investment.category()}, {"repayment", e.repayment.category()}});
    j["rounds"] = std::move(rounds);
    const auto trace = [](const std::vector<DirMultBelief>& beliefs) {
        json t = json::array();
        for (const auto& b : beliefs)
            t.push_back(b.params());
        return t;
    };
    j["investor_beliefs"] = trace(r.investor_beliefs);
    j["trustee_beliefs"] = trace(r.trustee_beliefs);
    return j;
}

inline GameRecord record_from_json(const json& j)
{
    detail::check_schema(j, kRecordSchema);
    detail::require_keys(j, "record", {"schema", "version", "rounds"},
                         {"id", "observed", "investor", "trustee", "seed", "config_digest", "investor_beliefs",
                          "trustee_beliefs"});
    GameRecord r;
    if (j.contains("id"))
        r.id = detail::get<std::string>(j, "id", "record");
    if (j.contains("observed"))
        r.observed = detail::get<bool>(j, "observed", "record");
    if (j.contains("investor"))
        r.investor = spec_from_json(j["investor"]);
    if (j.contains("trustee"))
        r.trustee = spec_from_json(j["trustee"]);
    if (r.investor && r.investor->role != Role::investor)
        throw FormatError("record: the investor spec has role trustee");
    if (r.trustee && r.trustee->role != Role::trustee)
        throw FormatError("record: the trustee spec has role investor");
    if (j.contains("seed"))
        r.seed = detail::get<std::uint64_t>(j, "seed", "record");
    if (j.contains("config_digest"))
        r.config_digest = detail::get<std::string>(j, "config_digest", "record");
    const json& rounds = j["rounds"];
    if (!rounds.is_array())
        throw FormatError("record.rounds: expected an array");
    try {
        for (const json& e : rounds) {
            detail::require_keys(e, "round", {"investment", "repayment"});
            const InvestorAction a(detail::get<int>(e, "investment", "round"));
            const TrusteeAction t(detail::get<int>(e, "repayment", "round"));
            check_legal(a, t);
            r.rounds.push_back({a, t});
        }
    } catch (const std::domain_error& e) {
        throw FormatError(std::string("record.rounds: ") + e.what());
    }
    for (auto [key, trace] : {std::pair{"investor_beliefs", &r.investor_beliefs},
                              std::pair{"trustee_beliefs", &r.trustee_beliefs}}) {
        if (!j.contains(key))
            continue;
        const auto params = detail::get<std::vector<GuiltVector>>(j, key, "record");
        try {
            for (const auto& p : params)
                trace->emplace_back(p);
        } catch (const std::domain_error& e) {
            throw FormatError(std::string("record.") + key + ": " + e.what());
        }
    }
    try {
        r.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("record: ") + e.what());
    }
    return r;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline GameRecord parse_record(const std::string& text, const std::string& source = "record")
{
    return record_from_json(detail::parse(text, source));
}

inline void save_record(const GameRecord& r, const std::filesystem::path& path)
{
    r.validate();
    write_file(path, dump(to_json(r)));
}

inline GameRecord load_record(const std::filesystem::path& path)
{
    return parse_record(detail::read_file(path), path.string());
}

/// Records travel in bulk as a JSON array of record objects.
inline void save_records(const std::vector<GameRecord>& records, const std::filesystem::path& path)
{
    json arr = json::array();
    for (const auto& r : records) {
        r.validate();
        arr.push_back(to_json(r));
    }
    write_file(path, dump(arr));
}

inline std::vector<GameRecord> load_records(const std::filesystem::path& path)
{
    const json j = detail::parse(detail::read_file(path), path.string());
    std::vector<GameRecord> out;
    if (j.is_array()) {
        for (const json& r : j)
            out.push_back(record_from_json(r));
    } else {
        out.push_back(record_from_json(j));
    }
    return out;
}

// Experiment configuration --------------------------------------------------------

struct ExperimentConfig {
    std::vector<Pairing> pairings;
    int repetitions = 20;
    PlannerConfig planner;
    int workers = 0; ///< 0: available parallelism
    std::string records;
    std::string trajectories;
    std::string posteriors;
    std::string gains;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline json to_json(const ExperimentConfig& c)
{
    json pairs = json::array();
    for (const auto& [i, t] : c.pairings)
        pairs.push_back({{"investor", to_json(i)}, {"trustee", to_json(t)}});
    json outputs = json::object();
    for (auto [key, value] : {std::pair{"records", &c.records}, std::pair{"trajectories", &c.trajectories},
                              std::pair{"posteriors", &c.posteriors}, std::pair{"gains", &c.gains}})
        if (!value->empty())
            outputs[key] = *value;
    return {{"schema", kConfigSchema}, {"version", kSchemaVersion}, {"pairings", pairs},
            {"repetitions", c.repetitions}, {"planner", to_json(c.planner)}, {"workers", c.workers},
            {"outputs", outputs}};
}

inline ExperimentConfig experiment_from_json(const json& j)
{
    detail::check_schema(j, kConfigSchema);
    detail::require_keys(j, "config", {"schema", "version", "pairings"}, {"repetitions", "planner", "workers", "outputs"});
    ExperimentConfig c;
    if (!j["pairings"].is_array() || j["pairings"].empty())
        throw FormatError("config.pairings: expected a nonempty array");
    for (const json& p : j["pairings"]) {
        detail::require_keys(p, "pairing", {"investor", "trustee"});
        Pairing pair{spec_from_json(p["investor"]), spec_from_json(p["trustee"])};
        if (pair.first.role != Role::investor || pair.second.role != Role::trustee)
            throw FormatError("pairing: roles must be investor then trustee");
        c.pairings.push_back(pair);
    }
    if (j.contains("repetitions"))
        c.repetitions = detail::get<int>(j, "repetitions", "config");
    if (c.repetitions < 1)
        throw FormatError("config.repetitions must be at least 1");
    if (j.contains("planner"))
        c.planner = planner_from_json(j["planner"]);
    if (j.contains("workers"))
        c.workers = detail::get<int>(j, "workers", "config");
    if (c.workers < 0)
        throw FormatError("config.workers must be nonnegative");
    if (j.contains("outputs")) {
        const json& o = j["outputs"];
        detail::require_keys(o, "outputs", {}, {"records", "trajectories", "posteriors", "gains"});
        for (auto [key, value] : {std::pair{"records", &c.records}, std::pair{"trajectories", &c.trajectories},
                                  std::pair{"posteriors", &c.posteriors}, std::pair{"gains", &c.gains}})
            if (o.contains(key))
                *value = detail::get<std::string>(o, key, "outputs");
    }
    return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    return experiment_from_json(detail::parse(detail::read_file(path), path.string()));
}

// Fit reports ---------------------------------------------------------------------

inline json to_json(const RoleFit& f)
{
    json cells = json::array();
    const auto rank = f.ranking();
    std::vector<int> position(f.cells.size());
    for (std::size_t k = 0; k < rank.size(); ++k)
        position[static_cast<std::size_t>(rank[k])] = static_cast<int>(k) + 1;
    for (std::size_t k = 0; k < f.cells.size(); ++k)
        cells.push_back({{"cell", to_json(f.cells[k].cell)},
                         {"nll", f.cells[k].nll},
                         {"rank", position[k]},
                         {"clamped", f.cells[k].clamped}});
    return {{"best", to_json(f.best_cell())}, {"ties", f.ties}, {"likelihoods", f.likelihoods}, {"cells", cells}};
}

inline json to_json(const FitResult& f, const std::string& record_id = "")
{
    return {{"schema", kFitSchema}, {"version", kSchemaVersion}, {"record", record_id},
            {"budget", f.budget},   {"seed", f.seed},            {"investor", to_json(f.investor)},
            {"trustee", to_json(f.trustee)}};
}

inline std::string fit_csv(const FitResult& f, const std::string& record_id = "")
{
    std::string out = "record,role,cell,tom,guilt,planning,nll,rank,clamped\n";
    for (const RoleFit* rf : {&f.investor, &f.trustee}) {
        const auto rank = rf->ranking();
        for (std::size_t k = 0; k < rank.size(); ++k) {
            const CellScore& c = rf->cells[static_cast<std::size_t>(rank[k])];
            out += csv_field(record_id) + "," + std::string(to_string(c.cell.role)) + "," + csv_field(c.cell.label()) +
                   "," + std::to_string(c.cell.tom) + "," + format_number(c.cell.guilt.value()) + "," +
                   std::to_string(c.cell.planning) + "," + format_number(c.nll) + "," + std::to_string(k + 1) + "," +
                   std::to_string(c.clamped) + "\n";
        }
    }
    return out;
}

// Tabular exports -----------------------------------------------------------------

inline std::string pairing_label(const Pairing& p) { return p.first.label() + " x " + p.second.label(); }

inline std::string trajectories_csv(const std::vector<PairingResult>& results)
{
    std::string out = "pairing,round,role,mean,std,n\n";
    for (const auto& r : results)
        for (int t = 0; t < kRounds; ++t)
            for (auto [role, series] : {std::pair{"investor", &r.stats.investor}, std::pair{"trustee", &r.stats.trustee}})
                out += csv_field(pairing_label(r.pairing)) + "," + std::to_string(t + 1) + "," + role + "," +
                       format_number(series->mean[t]) + "," + format_number(series->std[t]) + "," +
                       std::to_string(series->n[t]) + "\n";
    return out;
}

/// Mean predictive beliefs; round 0 is the prior, round t follows t completed exchanges.
inline std::string posteriors_csv(const std::vector<PairingResult>& results)
{
    std::string out = "pairing,round,role,greedy,pragmatic,guilty\n";
    for (const auto& r : results)
        for (int t = 0; t <= kRounds; ++t)
            for (auto [role, post] :
                 {std::pair{"investor", &r.stats.investor_posterior}, std::pair{"trustee", &r.stats.trustee_posterior}}) {
                out += csv_field(pairing_label(r.pairing)) + "," + std::to_string(t) + "," + role;
                for (int g = 0; g < kGuiltTypes; ++g)
                    out += "," + format_number((*post)[t][g]);
                out += "\n";
            }
    return out;
}

inline std::string gains_csv(const std::vector<PairingResult>& results)
{
    std::string out = "pairing,repetition,investor,trustee,combined\n";
    for (const auto& r : results)
        for (std::size_t k = 0; k < r.records.size(); ++k) {
            const Gains g = total_gains(r.records[k]);
            out += csv_field(pairing_label(r.pairing)) + "," + std::to_string(k) + "," + format_number(g.investor) +
                   "," + format_number(g.trustee) + "," + format_number(g.combined) + "\n";
        }
    return out;
}

/// One row per (role, parameter, true level, estimated level): P(estimated | true).
inline std::string confusion_csv(const ConfusionReport& report)
{
    std::string out = "role,parameter,true,estimated,probability,n\n";
    for (const auto& m : report.matrices)
        for (std::size_t i = 0; i < m.levels.size(); ++i)
            for (std::size_t j = 0; j < m.levels.size(); ++j)
                out += std::string(to_string(m.role)) + "," + std::string(to_string(m.parameter)) + "," +
                       format_number(m.levels[i]) + "," + format_number(m.levels[j]) + "," +
                       format_number(m.rows[i][j]) + "," + std::to_string(m.counts[i]) + "\n";
    return out;
}

inline std::string convergence_csv(const ConvergenceReport& report)
{
    std::string out = "budget,reference_budget,sum_of_squares,trace,max_deviation,mean_seconds";
    for (int i = 0; i < kCategories; ++i)
        for (int j = 0; j < kCategories; ++j)
            out += ",c" + std::to_string(i) + std::to_string(j);
    out += "\n";
    for (const auto& b : report.budgets) {
        out += std::to_string(b.budget) + "," + std::to_string(report.reference_budget) + "," +
               format_number(b.sum_of_squares) + "," + format_number(b.trace) + "," + format_number(b.max_deviation) + "," +
               format_number(b.mean_seconds);
        for (const auto& row : b.covariance)
            for (double v : row)
                out += "," + format_number(v);
        out += "\n";
    }
    return out;
}

// Observed data -------------------------------------------------------------------

struct ObservedCsv {
    std::vector<RawExchange> rows;
    std::vector<std::string> errors;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                out.back() += '"';
                ++k;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
    }
    return out;
}

inline bool parse_int(const std::string& s, int& v)
{
    if (s.empty())
        return false;
    std::size_t used = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size();
}

} // namespace detail

/// Columns dyadId, round, investedAmount, returnedAmount in any order; extra columns are ignored.
inline ObservedCsv parse_observed_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    int number = 0;
    ObservedCsv out;
    std::array<int, 4> col{-1, -1, -1, -1};
    const std::array<std::string, 4> names{"dyadId", "round", "investedAmount", "returnedAmount"};
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto fields = detail::split_csv_line(line);
        if (col[0] < 0) {
            for (std::size_t k = 0; k < fields.size(); ++k)
                for (int c = 0; c < 4; ++c)
                    if (fields[k] == names[c])
                        col[c] = static_cast<int>(k);
            for (int c = 0; c < 4; ++c)
                if (col[c] < 0)
                    throw FormatError("observed CSV: header lacks column '" + names[c] + "'");
            continue;
        }
        RawExchange r;
        r.line = number;
        const int needed = *std::max_element(col.begin(), col.end());
        if (static_cast<int>(fields.size()) <= needed) {
            out.errors.push_back("line " + std::to_string(number) + ": expected at least " +
                                 std::to_string(needed + 1) + " fields");
            continue;
        }
        r.dyad = fields[col[0]];
        if (r.dyad.empty() || !detail::parse_int(fields[col[1]], r.round) ||
            !detail::parse_int(fields[col[2]], r.invested) || !detail::parse_int(fields[col[3]], r.returned)) {
            out.errors.push_back("line " + std::to_string(number) + ": dyad id and integer amounts required");
            continue;
        }
        out.rows.push_back(r);
    }
    if (col[0] < 0)
        throw FormatError("observed CSV: empty file");
    return out;
}

// Manifests -----------------------------------------------------------------------

inline json versions()
{
    return {{"trust", kLibraryVersion},
            {"schema", kSchemaVersion},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000)},
            {"compiler", __VERSION__}};
}

/**
 * Everything needed to repeat a run: the command, its arguments, the planner
 * settings with their digest, and a checksum of every output written. No
 * timestamps or host names, so a repeated run yields the same manifest.
 */
struct Manifest {
    std::string command;
    json arguments = json::object();
    PlannerConfig planner;
    std::vector<std::pair<std::string, std::string>> outputs; ///< path, FNV-1a of contents

    void add_output(const std::filesystem::path& path, const std::string& content)
    {
        outputs.emplace_back(path.filename().string(), hex64(fnv1a(content)));
    }

    json to_json() const
    {
        json files = json::array();
        for (const auto& [path, sum] : outputs)
            files.push_back({{"path", path}, {"fnv1a", sum}});
        return {{"schema", kManifestSchema},
                {"version", kSchemaVersion},
                {"command", command},
                {"arguments", arguments},
                {"planner", io::to_json(planner)},
                {"config_digest", config_digest(planner)},
                {"seed", planner.seed},
                {"versions", versions()},
                {"outputs", files}};
    }
};

} // namespace trust::io
