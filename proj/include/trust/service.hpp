#pragma once

// Live play over HTTP: an in-memory session store and the JSON routes on top
// of it. One human plays one role, a configured agent the other.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "httplib.h"
#include "trust/data_io.hpp"

namespace trust::service {

using json = nlohmann::json;

/// Request failures with the HTTP status they map onto.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

inline constexpr int kDefaultSessionBudget = 2000;

struct ServiceOptions {
    std::chrono::seconds idle_expiry{3600};
    int default_budget = kDefaultSessionBudget;
    std::function<std::chrono::steady_clock::time_point()> clock = [] { return std::chrono::steady_clock::now(); };
};

class SessionStore {
public:
    explicit SessionStore(ServiceOptions options = {})
        : options_(std::move(options)), solvers_(std::make_shared<SolverBank>())
    {
    }

    /**
     * Body: {human_role, agent: {tom, guilt, planning[, beta][, role]}[, planner: {...}]}.
     * If the agent invests first its opening move is made before returning.
     */
    json create(const json& body)
    {
        Role human;
        AgentSpec agent;
        PlannerConfig planner;
        planner.simulations = options_.default_budget;
        try {
            io::detail::require_keys(body, "session", {"human_role", "agent"}, {"planner"});
            human = role_from_string(io::detail::get<std::string>(body, "human_role", "session"));
            json a = body.at("agent");
            if (a.is_object() && !a.contains("role"))
                a["role"] = std::string(to_string(partner_of(human)));
            agent = io::spec_from_json(a, PlanningRange::grid);
            if (body.contains("planner")) {
                json p = body.at("planner");
                if (p.is_object() && !p.contains("simulations"))
                    p["simulations"] = options_.default_budget;
                planner = io::planner_from_json(p);
            }
        } catch (const io::FormatError& e) {
            throw ServiceError(422, e.what());
        } catch (const std::invalid_argument& e) {
            throw ServiceError(422, e.what());
        }
        if (agent.role == human)
            throw ServiceError(422, "the agent must play the other role");

        auto s = std::make_shared<Session>(planner, solvers_);
        s->human = human;
        s->agent = agent;
        std::unique_lock lock(mutex_);
        sweep();
        s->id = next_id();
        s->touched = options_.clock();
        sessions_.emplace(s->id, s);
        lock.unlock();

        std::lock_guard session_lock(s->mutex);
        s->trace.push_back(belief_of(*s));
        if (agent.role == Role::investor)
            agent_invests(*s);
        return view(*s);
    }

    json get(const std::string& id)
    {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        return view(*s);
    }

    /// The human's move; the agent replies before the call returns.
    json act(const std::string& id, const json& body)
    {
        int category = -1;
        try {
            io::detail::require_keys(body, "action", {"category"});
            category = io::detail::get<int>(body, "category", "action");
        } catch (const io::FormatError& e) {
            throw ServiceError(422, e.what());
        }
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        if (s->history.complete())
            throw ServiceError(409, "the session is closed");
        if (s->history.to_move() != s->human)
            throw ServiceError(409, "it is not the human's turn");
        const std::vector<int> legal = legal_actions(*s);
        if (std::find(legal.begin(), legal.end(), category) == legal.end())
            throw ServiceError(422, "action " + std::to_string(category) + " is not legal now");

        if (s->human == Role::investor) {
            s->history.invest(InvestorAction(category));
            agent_repays(*s);
        } else {
            s->history.repay(TrusteeAction(category));
            s->trace.push_back(belief_of(*s));
            if (!s->history.complete())
                agent_invests(*s);
        }
        return view(*s);
    }

    /// Grid fit of the human's ten choices.
    json fit(const std::string& id)
    {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        if (!s->history.complete())
            throw ServiceError(409, "fit needs a completed game");
        const GameRecord rec = record(*s);
        const ParameterGrid grid = ParameterGrid::full(s->agent.beta);
        std::lock_guard planner_lock(planner_mutex_);
        FitResult f;
        f.investor = s->human == Role::investor ? fit_role(s->engine, rec, grid.investor) : RoleFit{};
        f.trustee = s->human == Role::trustee ? fit_role(s->engine, rec, grid.trustee) : RoleFit{};
        f.budget = s->engine.config().simulations;
        f.seed = s->engine.config().seed;
        const RoleFit& rf = s->human == Role::investor ? f.investor : f.trustee;
        json out = view(*s);
        out["fit"] = {{"role", std::string(to_string(s->human))},
                      {"best", io::to_json(rf.best_cell())},
                      {"result", io::to_json(rf)},
                      {"budget", f.budget},
                      {"seed", f.seed}};
        return out;
    }

    void remove(const std::string& id)
    {
        std::lock_guard lock(mutex_);
        if (sessions_.erase(id) == 0)
            throw ServiceError(404, "no session " + id);
    }

    std::size_t size()
    {
        std::lock_guard lock(mutex_);
        sweep();
        return sessions_.size();
    }

    /// Completed or partial record of a session, as exported to the CLI.
    GameRecord export_record(const std::string& id)
    {
        auto s = find(id);
        std::lock_guard lock(s->mutex);
        return record(*s);
    }

private:
    struct Session {
        Session(const PlannerConfig& planner, std::shared_ptr<SolverBank> solvers) : engine(planner, std::move(solvers)) {}
        std::string id;
        Role human = Role::investor;
        AgentSpec agent;
        PolicyEngine engine;
        History history;
        std::vector<DirMultBelief> trace; ///< agent belief at each round boundary
        std::chrono::steady_clock::time_point touched;
        std::mutex mutex;
    };

    std::shared_ptr<Session> find(const std::string& id)
    {
        std::lock_guard lock(mutex_);
        sweep();
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw ServiceError(404, "no session " + id);
        it->second->touched = options_.clock();
        return it->second;
    }

    void sweep()
    {
        const auto now = options_.clock();
        std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->touched > options_.idle_expiry; });
    }

    std::string next_id()
    {
        ++counter_;
        return io::hex64(splitmix64(counter_ ^ 0x7472757374ull)).substr(0, 12);
    }

    // Planner calls share the solver bank, so they run one at a time.
    DirMultBelief belief_of(Session& s)
    {
        std::lock_guard lock(planner_mutex_);
        return s.engine.belief(s.agent, s.history.prefix(s.history.rounds()));
    }

    std::uint64_t move_seed(const Session& s, Role role) const
    {
        return derive_seed(s.engine.config().seed,
                           {static_cast<std::uint64_t>(role == Role::investor ? 0 : 1),
                            static_cast<std::uint64_t>(s.history.rounds())});
    }

    int agent_choice(Session& s)
    {
        std::lock_guard lock(planner_mutex_);
        const Decision d = s.engine.decide(s.agent, s.history, std::nullopt, move_seed(s, s.agent.role));
        Rng rng(derive_seed(move_seed(s, s.agent.role), {detail::kTagPlay}));
        return d.policy.sample(rng);
    }

    void agent_invests(Session& s) { s.history.invest(InvestorAction(agent_choice(s))); }

    void agent_repays(Session& s)
    {
        s.history.repay(TrusteeAction(agent_choice(s)));
        s.trace.push_back(belief_of(s));
    }

    static std::vector<int> legal_actions(const Session& s)
    {
        std::vector<int> out;
        if (s.history.complete() || s.history.to_move() != s.human)
            return out;
        const int n = s.human == Role::investor ? kCategories : legal_trustee_count(s.history.pending());
        for (int a = 0; a < n; ++a)
            out.push_back(a);
        return out;
    }

    static GameRecord record(const Session& s)
    {
        GameRecord r;
        r.id = s.id;
        (s.agent.role == Role::investor ? r.investor : r.trustee) = s.agent;
        for (int t = 0; t < s.history.rounds(); ++t)
            r.rounds.push_back(s.history[t]);
        (s.agent.role == Role::investor ? r.investor_beliefs : r.trustee_beliefs) = s.trace;
        r.seed = s.engine.config().seed;
        r.config_digest = io::config_digest(s.engine.config());
        return r;
    }

    static json view(const Session& s)
    {
        const History& h = s.history;
        json rounds = json::array();
        Money inv, tru;
        for (int t = 0; t < h.rounds(); ++t) {
            const Exchange e = h[t];
            const Money pi = investor_payoff(e.investment, e.repayment), pt = trustee_payoff(e.investment, e.repayment);
            inv += pi;
            tru += pt;
            rounds.push_back({{"round", t + 1},
                              {"investment", e.investment.category()},
                              {"repayment", e.repayment.category()},
                              {"invested_amount", e.investment.amount()},
                              {"investor_payoff", pi.value()},
                              {"trustee_payoff", pt.value()}});
        }
        json trace = json::array();
        for (const auto& b : s.trace)
            trace.push_back(b.predictive());
        const bool closed = h.complete();
        json out = {{"id", s.id},
                    {"human_role", std::string(to_string(s.human))},
                    {"agent", io::to_json(s.agent)},
                    {"planner", io::to_json(s.engine.config())},
                    {"round", closed ? kRounds : h.rounds() + 1},
                    {"completed_rounds", h.rounds()},
                    {"closed", closed},
                    {"awaiting", closed ? json(nullptr) : json(std::string(to_string(h.to_move())))},
                    {"legal_actions", legal_actions(s)},
                    {"rounds", rounds},
                    {"payoffs", {{"investor", inv.value()}, {"trustee", tru.value()}, {"combined", (inv + tru).value()}}},
                    {"belief", s.trace.back().predictive()},
                    {"belief_trace", trace}};
        out["pending_investment"] = h.has_pending() ? json(h.pending().category()) : json(nullptr);
        if (closed)
            out["record"] = io::to_json(record(s));
        return out;
    }

    ServiceOptions options_;
    std::shared_ptr<SolverBank> solvers_;
    std::mutex mutex_;
    std::mutex planner_mutex_;
    std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t counter_ = 0;
};

/// Registers the JSON routes. Every error response is {error, status}.
inline void mount(httplib::Server& server, SessionStore& store)
{
    const auto reply = [](httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };
    const auto guarded = [reply](auto&& fn) {
        return [reply, fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const ServiceError& e) {
                reply(res, e.status(), {{"error", e.what()}, {"status", e.status()}});
            } catch (const json::exception& e) {
                reply(res, 400, {{"error", std::string("bad JSON: ") + e.what()}, {"status", 400}});
            } catch (const std::exception& e) {
                reply(res, 500, {{"error", e.what()}, {"status", 500}});
            }
        };
    };
    const auto body_of = [](const httplib::Request& req) { return req.body.empty() ? json::object() : json::parse(req.body); };

    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/health", [reply](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); });
    server.Post("/sessions", guarded([&store, reply, body_of](const httplib::Request& req, httplib::Response& res) {
                    reply(res, 201, store.create(body_of(req)));
                }));
    server.Get(R"(/sessions/([0-9a-f]+))", guarded([&store, reply](const httplib::Request& req, httplib::Response& res) {
                   reply(res, 200, store.get(req.matches[1]));
               }));
    server.Post(R"(/sessions/([0-9a-f]+)/actions)",
                guarded([&store, reply, body_of](const httplib::Request& req, httplib::Response& res) {
                    reply(res, 200, store.act(req.matches[1], body_of(req)));
                }));
    server.Post(R"(/sessions/([0-9a-f]+)/fit)",
                guarded([&store, reply](const httplib::Request& req, httplib::Response& res) {
                    reply(res, 200, store.fit(req.matches[1]));
                }));
    server.Delete(R"(/sessions/([0-9a-f]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
                      store.remove(req.matches[1]);
                      res.status = 204;
                  }));
}

} // namespace trust::service
