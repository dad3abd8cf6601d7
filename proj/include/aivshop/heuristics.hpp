#pragma once

#include "aivshop/sim.hpp"

#include <span>
#include <string>
#include <vector>

namespace aivshop {

enum class WsRule { SPT, SQL, SWL_W };
enum class AivRule { MC, STT, SWL_A };

// Index of the smallest score; equal scores resolve to the lowest index.
std::size_t argmin_lowest_index(std::span<const double> scores);
std::size_t argmax_lowest_index(std::span<const double> scores);

// One of the nine baseline dispatching combinations. Stateless between
// decisions; pure function of the observable simulation state.
class HeuristicPolicy : public DecisionPolicy {
public:
    HeuristicPolicy(AivRule aiv_rule, WsRule ws_rule) : aiv_rule_(aiv_rule), ws_rule_(ws_rule) {}

    int select_workstation(const Simulation& sim, const SimJob& job) override;
    int select_aiv(const Simulation& sim, const SimJob& job) override;

    static int select_workstation(WsRule rule, const Simulation& sim, const SimJob& job);
    static int select_aiv(AivRule rule, const Simulation& sim, const SimJob& job);

private:
    AivRule aiv_rule_;
    WsRule ws_rule_;
};

// CLI names follow the benchmark column headers: <AIV rule>.<workstation rule>.
const std::vector<std::string>& heuristic_names();
bool is_heuristic_name(const std::string& name);
HeuristicPolicy make_heuristic(const std::string& name);

} // namespace aivshop
