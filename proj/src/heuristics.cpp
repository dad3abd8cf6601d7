#include "aivshop/heuristics.hpp"

#include <stdexcept>

namespace aivshop {

std::size_t argmin_lowest_index(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("argmin of empty candidate set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] < scores[best]) best = i;
    return best;
}

std::size_t argmax_lowest_index(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("argmax of empty candidate set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

int HeuristicPolicy::select_workstation(WsRule rule, const Simulation& sim, const SimJob& job) {
    const auto& op = sim.scenario().job_op(job.id, job.next_op);
    std::vector<double> scores(op.eligible.size());
    for (std::size_t i = 0; i < op.eligible.size(); ++i) {
        const int ws = op.eligible[i];
        switch (rule) {
            case WsRule::SPT: scores[i] = op.proc_time[i]; break;
            case WsRule::SQL: scores[i] = static_cast<double>(sim.workstation(ws).queue.size()); break;
            case WsRule::SWL_W: scores[i] = sim.ws_busy_fraction(ws); break;
        }
    }
    return op.eligible[argmin_lowest_index(scores)];
}

int HeuristicPolicy::select_aiv(AivRule rule, const Simulation& sim, const SimJob& job) {
    std::vector<double> scores(sim.n_aivs());
    for (int a = 0; a < sim.n_aivs(); ++a) {
        switch (rule) {
            case AivRule::MC: scores[a] = sim.battery_at_now(a); break;
            case AivRule::STT:
                scores[a] = sim.transfer_time(sim.aiv_reference_node(a), job.location);
                break;
            case AivRule::SWL_A: scores[a] = sim.aiv_busy_fraction(a); break;
        }
    }
    if (rule == AivRule::MC) return static_cast<int>(argmax_lowest_index(scores));
    return static_cast<int>(argmin_lowest_index(scores));
}

int HeuristicPolicy::select_workstation(const Simulation& sim, const SimJob& job) {
    return select_workstation(ws_rule_, sim, job);
}

int HeuristicPolicy::select_aiv(const Simulation& sim, const SimJob& job) {
    return select_aiv(aiv_rule_, sim, job);
}

const std::vector<std::string>& heuristic_names() {
    static const std::vector<std::string> names = {
        "STT.SPT", "STT.SQL", "STT.SWL_W",
        "SWL_A.SPT", "SWL_A.SQL", "SWL_A.SWL_W",
        "MC.SPT", "MC.SQL", "MC.SWL_W",
    };
    return names;
}

bool is_heuristic_name(const std::string& name) {
    for (const auto& n : heuristic_names())
        if (n == name) return true;
    return false;
}

HeuristicPolicy make_heuristic(const std::string& name) {
    const auto dot = name.find('.');
    if (dot == std::string::npos) throw std::invalid_argument("bad policy name: " + name);
    const std::string aiv = name.substr(0, dot);
    const std::string ws = name.substr(dot + 1);
    AivRule ar;
    if (aiv == "MC") ar = AivRule::MC;
    else if (aiv == "STT") ar = AivRule::STT;
    else if (aiv == "SWL_A") ar = AivRule::SWL_A;
    else throw std::invalid_argument("unknown AIV rule in policy name: " + name);
    WsRule wr;
    if (ws == "SPT") wr = WsRule::SPT;
    else if (ws == "SQL") wr = WsRule::SQL;
    else if (ws == "SWL_W") wr = WsRule::SWL_W;
    else throw std::invalid_argument("unknown workstation rule in policy name: " + name);
    return HeuristicPolicy(ar, wr);
}

} // namespace aivshop
