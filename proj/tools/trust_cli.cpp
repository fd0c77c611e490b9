// trust: command-line entry point. Every command writes its outputs plus a
// manifest.json that pins down the settings needed to reproduce them.

#include <cstdlib>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "trust/data_io.hpp"
#include "trust/service.hpp"

namespace fs = std::filesystem;
using namespace trust;
using io::json;

namespace {

struct Common {
    PlannerConfig planner;
    double beta = kDefaultBeta;
    int workers = 0;
    std::string out_dir = ".";
    bool extended = false;

    void attach(CLI::App* app, bool with_output = true)
    {
        app->add_option("-n,--simulations", planner.simulations, "simulations for the first round (n)")
            ->capture_default_str();
        app->add_option("-c,--exploration", planner.exploration, "SoftUCT exploration constant (c)")
            ->capture_default_str();
        app->add_option("--beta", beta, "softmax inverse temperature")->capture_default_str();
        app->add_option("--epsilon", planner.rollout_epsilon, "rollout exploration rate")->capture_default_str();
        app->add_option("--nested-fraction", planner.nested_budget_fraction, "budget share of nested searches")
            ->capture_default_str();
        app->add_option("--presearch-fraction", planner.presearch_fraction, "budget share of constant strategies")
            ->capture_default_str();
        app->add_option("--seed", planner.seed, "master seed")->capture_default_str();
        app->add_option("-j,--workers", workers, "worker threads (0: available cores)")->capture_default_str();
        app->add_flag("--extended-horizons", extended, "accept any planning horizon 0..9 instead of {0,2,7}");
        if (with_output)
            app->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    }

    int threads() const { return workers > 0 ? workers : default_workers(); }

    AgentSpec spec(const std::string& text, Role role) const
    {
        AgentSpec s = parse_agent_spec(text, role);
        if (s.role != role)
            throw ConfigError("expected a " + std::string(to_string(role)) + " spec, got '" + text + "'");
        s.beta = beta;
        s.validate(extended ? PlanningRange::extended : PlanningRange::grid);
        return s;
    }

    json settings() const
    {
        return {{"planner", io::to_json(planner)}, {"beta", beta}};
    }
};

struct Writer {
    fs::path dir;
    io::Manifest manifest;

    void write(const std::string& name, const std::string& content)
    {
        io::write_file(dir / name, content);
        manifest.add_output(dir / name, content);
        std::cout << (dir / name).string() << "\n";
    }

    void finish() { io::write_file(dir / "manifest.json", io::dump(manifest.to_json())); }
};

Writer writer_for(const Common& c, const std::string& command, json arguments)
{
    Writer w;
    w.dir = c.out_dir;
    w.manifest.command = command;
    arguments["beta"] = c.beta;
    arguments["extended_horizons"] = c.extended;
    w.manifest.arguments = std::move(arguments);
    w.manifest.planner = c.planner;
    return w;
}

/// Groups records by their (investor, trustee) specs in order of first appearance.
std::vector<PairingResult> group_records(const std::vector<GameRecord>& records)
{
    std::vector<PairingResult> out;
    for (const auto& r : records) {
        if (!r.investor || !r.trustee)
            throw ConfigError("record '" + r.id + "' has no agent specs to group by");
        const Pairing p{*r.investor, *r.trustee};
        auto it = std::find_if(out.begin(), out.end(), [&](const PairingResult& x) { return x.pairing == p; });
        if (it == out.end()) {
            out.push_back({p, {}, {}});
            it = out.end() - 1;
        }
        it->records.push_back(r);
    }
    for (auto& r : out)
        r.stats = trajectory_stats(r.records);
    return out;
}

ParameterGrid grid_named(const std::string& name, double beta)
{
    ParameterGrid full = ParameterGrid::full(beta);
    if (name == "full")
        return full;
    if (name == "level0") {
        ParameterGrid g;
        for (const auto& c : full.investor)
            if (c.tom == 0)
                g.investor.push_back(c);
        for (const auto& c : full.trustee)
            if (c.tom == 0)
                g.trustee.push_back(c);
        return g;
    }
    throw ConfigError("unknown grid '" + name + "' (full or level0)");
}

struct BatchNames {
    std::string records = "records.json", trajectories = "trajectories.csv", posteriors = "posteriors.csv",
                gains = "gains.csv";
};

void write_batch_outputs(Writer& w, const std::vector<PairingResult>& results, const BatchNames& names = {})
{
    std::vector<GameRecord> all;
    for (const auto& r : results)
        all.insert(all.end(), r.records.begin(), r.records.end());
    json arr = json::array();
    for (const auto& r : all)
        arr.push_back(io::to_json(r));
    w.write(names.records, io::dump(arr));
    w.write(names.trajectories, io::trajectories_csv(results));
    w.write(names.posteriors, io::posteriors_csv(results));
    w.write(names.gains, io::gains_csv(results));
}

std::vector<int> parse_int_list(const std::string& text)
{
    std::vector<int> out;
    std::istringstream is(text);
    std::string field;
    while (std::getline(is, field, ','))
        out.push_back(std::stoi(field));
    if (out.empty())
        throw ConfigError("empty list '" + text + "'");
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Planning, simulation and model inversion for the multi-round trust task"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(io::kLibraryVersion));

    // simulate
    Common sim;
    std::string sim_investor, sim_trustee;
    std::uint64_t sim_dyad_seed = 0;
    auto* simulate = app.add_subcommand("simulate", "play one dyad and write its record");
    sim.attach(simulate);
    simulate->add_option("--investor", sim_investor, "investor spec k,alpha,P")->required();
    simulate->add_option("--trustee", sim_trustee, "trustee spec k,alpha,P")->required();
    simulate->add_option("--dyad-seed", sim_dyad_seed, "seed of this dyad (default: derived from --seed)");

    // batch
    Common bat;
    std::string bat_config;
    std::vector<std::string> bat_pairs;
    int bat_reps = 20;
    auto* batch_cmd = app.add_subcommand("batch", "play repeated dyads and export trajectories");
    bat.attach(batch_cmd);
    batch_cmd->add_option("--config", bat_config, "experiment config JSON (overrides pairing flags)");
    batch_cmd->add_option("--pair", bat_pairs, "pairing 'k,alpha,P/k,alpha,P' (investor/trustee), repeatable");
    batch_cmd->add_option("-r,--repetitions", bat_reps, "dyads per pairing")->capture_default_str();

    // fit
    Common fitc;
    std::string fit_records, fit_observed, fit_grid = "full";
    auto* fit_cmd = app.add_subcommand("fit", "fit records on the parameter grid");
    fitc.attach(fit_cmd);
    auto* fit_src = fit_cmd->add_option("--records", fit_records, "record JSON (single record or array)");
    fit_cmd->add_option("--observed", fit_observed, "CSV with dyadId,round,investedAmount,returnedAmount")
        ->excludes(fit_src);
    fit_cmd->add_option("--grid", fit_grid, "full or level0")->capture_default_str();

    // confusion
    Common conf;
    std::string conf_design = "balanced", conf_grid = "full";
    int conf_per_cell = 5, conf_reps = 1;
    auto* conf_cmd = app.add_subcommand("confusion", "generate, refit and tabulate parameter recovery");
    conf.attach(conf_cmd);
    conf_cmd->add_option("--design", conf_design, "balanced or full")->capture_default_str();
    conf_cmd->add_option("--per-cell", conf_per_cell, "records per cell in the balanced design")->capture_default_str();
    conf_cmd->add_option("-r,--repetitions", conf_reps, "repetitions per pairing")->capture_default_str();
    conf_cmd->add_option("--grid", conf_grid, "full or level0")->capture_default_str();

    // bench
    Common ben;
    std::string ben_agent = "investor:2,1,7", ben_budgets = "1000,5000,25000";
    int ben_reference = 200000, ben_subjects = 20;
    auto* bench = app.add_subcommand("bench", "first-action runtime and discrepancy against a reference budget");
    ben.attach(bench);
    bench->add_option("--agent", ben_agent, "agent spec role:k,alpha,P")->capture_default_str();
    bench->add_option("--budgets", ben_budgets, "comma-separated budgets")->capture_default_str();
    bench->add_option("--reference", ben_reference, "reference budget")->capture_default_str();
    bench->add_option("--subjects", ben_subjects, "simulated subjects")->capture_default_str();

    // serve
    std::string host = std::getenv("TRUST_HOST") ? std::getenv("TRUST_HOST") : "127.0.0.1";
    int port = std::getenv("TRUST_PORT") ? std::atoi(std::getenv("TRUST_PORT")) : 8080;
    int serve_budget = service::kDefaultSessionBudget;
    auto* serve = app.add_subcommand("serve", "run the live-play HTTP API");
    serve->add_option("--host", host, "bind address (env TRUST_HOST)")->capture_default_str();
    serve->add_option("--port", port, "port (env TRUST_PORT)")->capture_default_str();
    serve->add_option("-n,--simulations", serve_budget, "default agent budget")->capture_default_str();

    // export
    Common exp;
    std::string exp_records, exp_observed;
    auto* export_cmd = app.add_subcommand("export", "records to CSV tables, or observed CSV to records");
    exp.attach(export_cmd);
    auto* exp_src = export_cmd->add_option("--records", exp_records, "record JSON to tabulate");
    export_cmd->add_option("--observed", exp_observed, "observed CSV to convert into records")->excludes(exp_src);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            const AgentSpec I = sim.spec(sim_investor, Role::investor), T = sim.spec(sim_trustee, Role::trustee);
            const std::uint64_t seed =
                simulate->count("--dyad-seed") ? sim_dyad_seed : dyad_seed(sim.planner.seed, {I, T}, 0);
            PolicyEngine engine(sim.planner);
            GameRecord rec = play_dyad(engine, I, T, seed);
            rec.id = "dyad-" + io::hex64(seed);
            rec.config_digest = io::config_digest(sim.planner);
            Writer w = writer_for(sim, "simulate",
                                  {{"investor", io::to_json(I)}, {"trustee", io::to_json(T)}, {"dyad_seed", seed}});
            w.write("record.json", io::dump(io::to_json(rec)));
            w.finish();
            const Gains g = total_gains(rec);
            std::cerr << "gains: investor " << g.investor << ", trustee " << g.trustee << "\n";
        } else if (batch_cmd->parsed()) {
            std::vector<Pairing> pairings;
            int reps = bat_reps;
            BatchNames names;
            if (!bat_config.empty()) {
                const io::ExperimentConfig cfg = io::load_experiment(bat_config);
                pairings = cfg.pairings;
                reps = cfg.repetitions;
                bat.planner = cfg.planner;
                if (cfg.workers > 0 && !batch_cmd->count("--workers"))
                    bat.workers = cfg.workers;
                for (auto [name, target] : {std::pair{&cfg.records, &names.records},
                                            std::pair{&cfg.trajectories, &names.trajectories},
                                            std::pair{&cfg.posteriors, &names.posteriors},
                                            std::pair{&cfg.gains, &names.gains}})
                    if (!name->empty())
                        *target = *name;
            } else {
                for (const std::string& p : bat_pairs) {
                    const auto slash = p.find('/');
                    if (slash == std::string::npos)
                        throw ConfigError("pairing '" + p + "' must be investor/trustee");
                    pairings.emplace_back(bat.spec(p.substr(0, slash), Role::investor),
                                          bat.spec(p.substr(slash + 1), Role::trustee));
                }
            }
            if (pairings.empty())
                throw ConfigError("no pairings given (use --pair or --config)");
            json plist = json::array();
            for (const auto& [i, t] : pairings)
                plist.push_back({{"investor", io::to_json(i)}, {"trustee", io::to_json(t)}});
            Writer w = writer_for(bat, "batch", {{"pairings", plist}, {"repetitions", reps}});
            bat.planner.validate();
            const auto results = batch(pairings, reps, bat.planner, bat.threads());
            write_batch_outputs(w, results, names);
            w.finish();
        } else if (fit_cmd->parsed()) {
            std::vector<GameRecord> records;
            std::vector<std::string> rejections;
            if (!fit_records.empty()) {
                records = io::load_records(fit_records);
            } else if (!fit_observed.empty()) {
                const io::ObservedCsv csv = io::parse_observed_csv(io::detail::read_file(fit_observed));
                IngestReport ingest = ingest_observed(csv.rows);
                records = std::move(ingest.records);
                rejections = csv.errors;
                rejections.insert(rejections.end(), ingest.rejections.begin(), ingest.rejections.end());
            } else {
                throw ConfigError("fit needs --records or --observed");
            }
            const ParameterGrid grid = grid_named(fit_grid, fitc.beta);
            Writer w = writer_for(fitc, "fit", {{"grid", fit_grid}, {"records", records.size()}});
            struct Fitted {
                FitResult fit;
            };
            fitc.planner.validate();
            auto fits = run_parallel<Fitted>(fitc.planner, static_cast<int>(records.size()), fitc.threads(),
                                             [&](PolicyEngine& engine, int i) {
                                                 return Fitted{fit(engine, records[static_cast<std::size_t>(i)], grid)};
                                             });
            json reports = json::array();
            std::string csv;
            for (std::size_t k = 0; k < records.size(); ++k) {
                const std::string id = records[k].id.empty() ? "record-" + std::to_string(k) : records[k].id;
                reports.push_back(io::to_json(fits[k].fit, id));
                const std::string part = io::fit_csv(fits[k].fit, id);
                csv += k == 0 ? part : part.substr(part.find('\n') + 1);
            }
            w.write("fit.json", io::dump(records.size() == 1 ? reports[0] : reports));
            w.write("fit.csv", csv.empty() ? io::fit_csv(FitResult{}) : csv);
            if (!rejections.empty()) {
                std::string rej;
                for (const auto& r : rejections)
                    rej += r + "\n";
                w.write("rejections.txt", rej);
            }
            w.finish();
        } else if (conf_cmd->parsed()) {
            const ParameterGrid grid = grid_named(conf_grid, conf.beta);
            std::vector<Pairing> pairings;
            if (conf_design == "balanced")
                pairings = balanced_pairings(grid, conf_per_cell);
            else if (conf_design == "full")
                pairings = full_factorial(grid);
            else
                throw ConfigError("unknown design '" + conf_design + "' (balanced or full)");
            Writer w = writer_for(conf, "confusion",
                                  {{"design", conf_design}, {"per_cell", conf_per_cell}, {"repetitions", conf_reps},
                                   {"grid", conf_grid}});
            const ConfusionReport rep = confusion(pairings, conf_reps, grid, conf.planner, conf.threads());
            w.write("confusion.csv", io::confusion_csv(rep));
            json samples = json::array();
            for (const auto& s : rep.samples)
                samples.push_back({{"investor", io::to_json(s.truth.first)},
                                   {"trustee", io::to_json(s.truth.second)},
                                   {"investor_estimate", io::to_json(s.investor_estimate)},
                                   {"trustee_estimate", io::to_json(s.trustee_estimate)}});
            w.write("confusion_samples.json", io::dump(samples));
            w.finish();
        } else if (bench->parsed()) {
            const AgentSpec agent = [&] {
                AgentSpec s = parse_agent_spec(ben_agent);
                s.beta = ben.beta;
                s.validate(ben.extended ? PlanningRange::extended : PlanningRange::grid);
                return s;
            }();
            const std::vector<int> budgets = parse_int_list(ben_budgets);
            Writer w = writer_for(ben, "bench",
                                  {{"agent", io::to_json(agent)}, {"budgets", budgets}, {"reference", ben_reference},
                                   {"subjects", ben_subjects}});
            const ConvergenceReport rep =
                convergence_diagnostic(ben.planner, agent, budgets, ben_reference, ben_subjects, ben.threads());
            // wall-clock columns differ between runs; the manifest covers the deterministic table only
            ConvergenceReport stable = rep;
            for (auto& b : stable.budgets)
                b.mean_seconds = 0.0;
            w.write("convergence.csv", io::convergence_csv(stable));
            io::write_file(w.dir / "timings.csv", io::convergence_csv(rep));
            for (const auto& b : rep.budgets)
                std::cerr << "n=" << b.budget << "  max|dP|=" << b.max_deviation << "  tr C=" << b.trace
                          << "  " << b.mean_seconds << " s/first action\n";
            w.finish();
        } else if (serve->parsed()) {
            service::ServiceOptions opt;
            opt.default_budget = serve_budget;
            service::SessionStore store(opt);
            httplib::Server server;
            service::mount(server, store);
            std::cerr << "listening on http://" << host << ":" << port << "\n";
            if (!server.listen(host, port)) {
                std::cerr << "error: cannot bind " << host << ":" << port << "\n";
                return 1;
            }
        } else if (export_cmd->parsed()) {
            if (!exp_records.empty()) {
                const auto records = io::load_records(exp_records);
                Writer w = writer_for(exp, "export", {{"records", records.size()}});
                const auto results = group_records(records);
                w.write("trajectories.csv", io::trajectories_csv(results));
                w.write("posteriors.csv", io::posteriors_csv(results));
                w.write("gains.csv", io::gains_csv(results));
                w.finish();
            } else if (!exp_observed.empty()) {
                const io::ObservedCsv csv = io::parse_observed_csv(io::detail::read_file(exp_observed));
                const IngestReport ingest = ingest_observed(csv.rows);
                Writer w = writer_for(exp, "export", {{"observed_rows", csv.rows.size()}});
                json arr = json::array();
                for (const auto& r : ingest.records)
                    arr.push_back(io::to_json(r));
                w.write("records.json", io::dump(arr));
                std::string rej;
                for (const auto& r : csv.errors)
                    rej += r + "\n";
                for (const auto& r : ingest.rejections)
                    rej += r + "\n";
                w.write("rejections.txt", rej);
                w.finish();
            } else {
                throw ConfigError("export needs --records or --observed");
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
