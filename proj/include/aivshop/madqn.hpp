#pragma once

#include "aivshop/neural.hpp"
#include "aivshop/sim.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace aivshop {

// Fixed normalization divisors. Chosen once at training time and stored in
// checkpoints so the observation mapping stays stationary across runs.
struct ObservationScales {
    double jobs_div = 1;  // queue lengths
    double dist_div = 1;  // node distances
    double time_div = 1;  // processing times, tardiness, clock
    double k_tardiness = 1.5;
    bool operator==(const ObservationScales&) const = default;
};

ObservationScales default_scales(const Scenario& s, double k_tardiness);

double current_tardiness(double due, double clock, double remaining_processing, double k);
double remaining_mean_processing(const Scenario& s, const SimJob& job);
double final_reward(const SimJob& job);

std::vector<double> build_ws_observation(const Simulation& sim, const SimJob& job,
                                         const ObservationScales& scales);
std::vector<double> build_aiv_observation(const Simulation& sim, const SimJob& job,
                                          const ObservationScales& scales);

// Infeasible entries forced to -inf so any argmax lands in the feasible set.
std::vector<double> mask_q_values(std::span<const double> q, const std::vector<std::uint8_t>& feasible);
int select_action(std::span<const double> masked_q, double epsilon, Rng& rng);
double td_target(double reward, std::span<const double> masked_next_q, double gamma, bool terminal);

struct Experience {
    std::vector<double> s;
    CommBundle comm;
    std::vector<std::uint8_t> mask;
    int action = -1;
    double reward = 0; // raw reward units
    std::vector<double> s2;
    CommBundle comm2;
    std::vector<std::uint8_t> mask2;
    bool terminal = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Experience e);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Experience& at(std::size_t i) const { return data_[i]; }
    std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Experience> data_;
};

struct TrainConfig {
    int episodes = 320;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_frac = 0.8; // fraction of episodes over which epsilon decays
    int batch_size = 32;
    int target_sync = 100; // SGD steps between target-network copies
    int replay_capacity = 10000;
    double gamma = 0.9;
    double lr = 0.01;
    int comm_slots = 8;
    double k_tardiness = 1.5;
    double reward_scale = 0; // 0 -> 1 / time_div; linear scaling, argmax-invariant
    bool per_agent_params = false;
    std::uint64_t seed = 1;
};

struct TrainLogRow {
    int episode = 0;
    double epsilon = 0;
    double mean_loss_ws = 0;
    double mean_loss_aiv = 0;
    double total_tardiness = 0;
    int n_tardy = 0;
    double energy_pct = 0;
};

// One Q-network with its target copy, replay memory and step counters.
struct NetBundle {
    Network online;
    Network target;
    ReplayBuffer buffer{0};
    long long sgd_steps = 0;
    double loss_sum = 0; // running totals for the current episode
    long long loss_count = 0;
};

// Everything that persists across episodes: the two decision networks
// (one pair shared by all job agents, or one pair per agent), their
// targets, replay memories and counters.
class MadqnBrain {
public:
    MadqnBrain(const Scenario& reference, const TrainConfig& config);

    TrainConfig config;
    ObservationScales scales;
    int n_workstations = 0;
    int n_aivs = 0;
    int n_jobs = 0;
    int episodes_trained = 0;
    std::vector<NetBundle> ws_bundles;
    std::vector<NetBundle> aiv_bundles;

    int bundle_index(int job_id) const { return config.per_agent_params ? job_id : 0; }
    double effective_reward_scale() const {
        return config.reward_scale > 0 ? config.reward_scale : 1.0 / scales.time_div;
    }

    void save(const std::string& path) const;
    static MadqnBrain load(const std::string& path);

private:
    MadqnBrain() = default;
};

// Per-episode controller: builds observations, runs the communication
// channel, selects actions and (in learning mode) fills replay memories
// and applies one SGD step per decision.
class MadqnPolicy : public DecisionPolicy {
public:
    MadqnPolicy(const MadqnBrain& brain, double epsilon);      // greedy/eval
    MadqnPolicy(MadqnBrain& brain, double epsilon, Rng explore); // learning

    int select_workstation(const Simulation& sim, const SimJob& job) override;
    int select_aiv(const Simulation& sim, const SimJob& job) override;
    void on_operation_completed(const Simulation& sim, const SimJob& job) override;
    void on_job_delivered(const Simulation& sim, const SimJob& job, double window_energy_pct) override;
    void on_job_completed(const Simulation& sim, const SimJob& job) override;

private:
    enum class Decision { Ws, Aiv };

    struct PendingTransition {
        bool active = false;
        std::vector<double> s;
        CommBundle comm;
        std::vector<std::uint8_t> mask;
        int action = -1;
        double reward = 0;
    };
    struct AgentState {
        std::vector<std::vector<double>> ws_acts;  // last hidden activations
        std::vector<std::vector<double>> aiv_acts;
        std::uint64_t last_activity = 0;
        PendingTransition pend_ws;
        PendingTransition pend_aiv;
    };

    void ensure_agents(const Simulation& sim);
    CommBundle build_comm(const Simulation& sim, int self, Decision type) const;
    int decide(const Simulation& sim, const SimJob& job, Decision type);
    void train_step(NetBundle& bundle);
    void flush_terminal(NetBundle& bundle, PendingTransition& pend);

    const MadqnBrain* brain_;
    MadqnBrain* learn_brain_ = nullptr;
    double epsilon_;
    Rng explore_{0};
    std::vector<AgentState> agents_;
    std::uint64_t decision_counter_ = 0;
};

using ScenarioProvider = std::function<Scenario(int episode)>;

std::vector<TrainLogRow> train(MadqnBrain& brain, const ScenarioProvider& provider, int episodes);
RunMetrics evaluate(const MadqnBrain& brain, const Scenario& scenario, TraceWriter* trace = nullptr);

void write_training_log(const std::string& path, const std::vector<TrainLogRow>& rows);

} // namespace aivshop
