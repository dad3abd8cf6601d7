#include "aivshop/madqn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aivshop {

namespace {

double clamp01(double v) { return v < 0 ? 0 : (v > 1 ? 1 : v); }

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

} // namespace

ObservationScales default_scales(const Scenario& s, double k_tardiness) {
    ObservationScales sc;
    sc.jobs_div = static_cast<double>(s.n_jobs());
    sc.dist_div = s.config.layout_max;
    double total_mean = 0;
    for (int j = 0; j < s.n_jobs(); ++j) total_mean += s.total_mean_processing(j);
    sc.time_div = s.n_jobs() * s.config.arrival_mean + total_mean;
    sc.k_tardiness = k_tardiness;
    return sc;
}

double current_tardiness(double due, double clock, double remaining_processing, double k) {
    return std::max(0.0, k * remaining_processing + clock - due);
}

double remaining_mean_processing(const Scenario& s, const SimJob& job) {
    const auto& ops = s.products[job.product].ops;
    double sum = 0;
    for (int i = job.next_op; i < static_cast<int>(ops.size()); ++i) sum += ops[i].mean_time();
    return sum;
}

double final_reward(const SimJob& job) {
    if (job.status != JobStatus::Completed)
        throw std::logic_error("final reward requested for an unfinished job");
    return -(job.completion - job.due);
}

std::vector<double> build_ws_observation(const Simulation& sim, const SimJob& job,
                                         const ObservationScales& sc) {
    const int m = sim.n_workstations();
    std::vector<double> o;
    o.reserve(3 * m + 4);
    for (int w = 0; w < m; ++w)
        o.push_back(clamp01(static_cast<double>(sim.workstation(w).queue.size()) / sc.jobs_div));
    for (int w = 0; w < m; ++w)
        o.push_back(clamp01(sim.transfer_time(job.location, sim.workstation(w).node) / sc.dist_div));
    for (int w = 0; w < m; ++w) o.push_back(clamp01(sim.ws_busy_fraction(w)));
    const auto& op = sim.scenario().job_op(job.id, job.next_op);
    o.push_back(clamp01(op.mean_time() / sc.time_div));
    const double rpt = remaining_mean_processing(sim.scenario(), job);
    o.push_back(clamp01(current_tardiness(job.due, sim.now(), rpt, sc.k_tardiness) / sc.time_div));
    o.push_back(clamp01(rpt / sc.time_div));
    o.push_back(clamp01(sim.now() / sc.time_div));
    return o;
}

std::vector<double> build_aiv_observation(const Simulation& sim, const SimJob& job,
                                          const ObservationScales& sc) {
    const int n = sim.n_aivs();
    std::vector<double> o;
    o.reserve(3 * n + 3);
    for (int a = 0; a < n; ++a)
        o.push_back(clamp01(static_cast<double>(sim.aiv(a).pending.size()) / sc.jobs_div));
    for (int a = 0; a < n; ++a)
        o.push_back(clamp01(sim.transfer_time(sim.aiv_reference_node(a), job.location) / sc.dist_div));
    for (int a = 0; a < n; ++a) o.push_back(clamp01(sim.battery_at_now(a) / 100.0));
    const double rpt = remaining_mean_processing(sim.scenario(), job);
    o.push_back(clamp01(current_tardiness(job.due, sim.now(), rpt, sc.k_tardiness) / sc.time_div));
    o.push_back(clamp01(rpt / sc.time_div));
    o.push_back(clamp01(sim.now() / sc.time_div));
    return o;
}

std::vector<double> mask_q_values(std::span<const double> q, const std::vector<std::uint8_t>& feasible) {
    if (q.size() != feasible.size()) throw std::invalid_argument("mask length mismatch");
    bool any = false;
    std::vector<double> out(q.begin(), q.end());
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (feasible[i]) any = true;
        else out[i] = kNegInf;
    }
    if (!any) throw std::logic_error("empty feasible set");
    return out;
}

int select_action(std::span<const double> masked_q, double epsilon, Rng& rng) {
    std::vector<int> feasible;
    feasible.reserve(masked_q.size());
    for (std::size_t i = 0; i < masked_q.size(); ++i)
        if (masked_q[i] != kNegInf) feasible.push_back(static_cast<int>(i));
    if (feasible.empty()) throw std::logic_error("empty feasible set");
    if (epsilon > 0 && rng.uniform01() < epsilon)
        return feasible[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(feasible.size()) - 1))];
    int best = feasible[0];
    for (int i : feasible)
        if (masked_q[i] > masked_q[best]) best = i;
    return best;
}

double td_target(double reward, std::span<const double> masked_next_q, double gamma, bool terminal) {
    if (terminal) return reward;
    double best = kNegInf;
    for (double v : masked_next_q) best = std::max(best, v);
    if (best == kNegInf) throw std::logic_error("next state has no feasible action");
    return reward + gamma * best;
}

void ReplayBuffer::push(Experience e) {
    if (capacity_ == 0) return;
    if (data_.size() < capacity_) {
        data_.push_back(std::move(e));
    } else {
        data_[head_] = std::move(e);
        head_ = (head_ + 1) % capacity_;
    }
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx)
        i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(data_.size()) - 1));
    return idx;
}

// --- brain ------------------------------------------------------------------

MadqnBrain::MadqnBrain(const Scenario& reference, const TrainConfig& cfg) : config(cfg) {
    scales = default_scales(reference, cfg.k_tardiness);
    n_workstations = reference.config.n_workstations;
    n_aivs = reference.config.aiv_count;
    n_jobs = reference.n_jobs();

    const int pairs = cfg.per_agent_params ? n_jobs : 1;
    const int cap = std::max(1, cfg.replay_capacity / pairs);
    SeededStreams streams(cfg.seed);
    Rng winit = streams.stream("weight-init");
    NetworkShape ws_shape{3 * n_workstations + 4, n_workstations, 10, 5, cfg.comm_slots, 10};
    NetworkShape aiv_shape{3 * n_aivs + 3, n_aivs, 10, 5, cfg.comm_slots, 10};
    for (int p = 0; p < pairs; ++p) {
        NetBundle wb;
        wb.online = Network::init(ws_shape, winit);
        wb.target = wb.online;
        wb.buffer = ReplayBuffer(static_cast<std::size_t>(cap));
        ws_bundles.push_back(std::move(wb));
        NetBundle ab;
        ab.online = Network::init(aiv_shape, winit);
        ab.target = ab.online;
        ab.buffer = ReplayBuffer(static_cast<std::size_t>(cap));
        aiv_bundles.push_back(std::move(ab));
    }
}

namespace {
std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

void MadqnBrain::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path + " for writing");
    f << "aivshop-checkpoint v1\n";
    f << "episodes_trained " << episodes_trained << "\n";
    f << "pairs " << ws_bundles.size() << "\n";
    f << "n_workstations " << n_workstations << " n_aivs " << n_aivs << " n_jobs " << n_jobs << "\n";
    f << "scales " << fmt17(scales.jobs_div) << " " << fmt17(scales.dist_div) << " "
      << fmt17(scales.time_div) << " " << fmt17(scales.k_tardiness) << "\n";
    f << "gamma " << fmt17(config.gamma) << " lr " << fmt17(config.lr) << " reward_scale "
      << fmt17(config.reward_scale) << "\n";
    f << "eps " << fmt17(config.eps_start) << " " << fmt17(config.eps_end) << " "
      << fmt17(config.eps_decay_frac) << "\n";
    f << "batch " << config.batch_size << " target_sync " << config.target_sync << " replay "
      << config.replay_capacity << " comm_slots " << config.comm_slots << " per_agent "
      << (config.per_agent_params ? 1 : 0) << " episodes " << config.episodes << " seed "
      << config.seed << "\n";
    for (std::size_t p = 0; p < ws_bundles.size(); ++p) {
        ws_bundles[p].online.write(f);
        ws_bundles[p].target.write(f);
        aiv_bundles[p].online.write(f);
        aiv_bundles[p].target.write(f);
    }
    f << "end\n";
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

MadqnBrain MadqnBrain::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint " + path);
    std::string line;
    if (!std::getline(f, line) || line != "aivshop-checkpoint v1")
        throw std::runtime_error("bad checkpoint header in " + path);
    MadqnBrain b;
    std::string tag;
    auto want = [&](const char* expect) {
        if (!(f >> tag) || tag != expect)
            throw std::runtime_error(std::string("checkpoint parse error, expected '") + expect + "'");
    };
    std::size_t pairs = 0;
    int per_agent = 0;
    want("episodes_trained");
    f >> b.episodes_trained;
    want("pairs");
    f >> pairs;
    want("n_workstations");
    f >> b.n_workstations;
    want("n_aivs");
    f >> b.n_aivs;
    want("n_jobs");
    f >> b.n_jobs;
    want("scales");
    f >> b.scales.jobs_div >> b.scales.dist_div >> b.scales.time_div >> b.scales.k_tardiness;
    want("gamma");
    f >> b.config.gamma;
    want("lr");
    f >> b.config.lr;
    want("reward_scale");
    f >> b.config.reward_scale;
    want("eps");
    f >> b.config.eps_start >> b.config.eps_end >> b.config.eps_decay_frac;
    want("batch");
    f >> b.config.batch_size;
    want("target_sync");
    f >> b.config.target_sync;
    want("replay");
    f >> b.config.replay_capacity;
    want("comm_slots");
    f >> b.config.comm_slots;
    want("per_agent");
    f >> per_agent;
    want("episodes");
    f >> b.config.episodes;
    want("seed");
    f >> b.config.seed;
    if (!f) throw std::runtime_error("checkpoint parse error in " + path);
    b.config.per_agent_params = per_agent != 0;
    b.config.k_tardiness = b.scales.k_tardiness;
    const int cap = std::max<int>(1, b.config.replay_capacity / static_cast<int>(pairs));
    for (std::size_t p = 0; p < pairs; ++p) {
        NetBundle wb;
        wb.online = Network::read(f);
        wb.target = Network::read(f);
        wb.buffer = ReplayBuffer(static_cast<std::size_t>(cap));
        NetBundle ab;
        ab.online = Network::read(f);
        ab.target = Network::read(f);
        ab.buffer = ReplayBuffer(static_cast<std::size_t>(cap));
        b.ws_bundles.push_back(std::move(wb));
        b.aiv_bundles.push_back(std::move(ab));
    }
    if (!(f >> tag) || tag != "end") throw std::runtime_error("truncated checkpoint " + path);
    return b;
}

// --- per-episode policy -----------------------------------------------------

MadqnPolicy::MadqnPolicy(const MadqnBrain& brain, double epsilon)
    : brain_(&brain), epsilon_(epsilon) {
    if (epsilon != 0)
        throw std::invalid_argument("exploration requires the learning constructor");
}

MadqnPolicy::MadqnPolicy(MadqnBrain& brain, double epsilon, Rng explore)
    : brain_(&brain), learn_brain_(&brain), epsilon_(epsilon), explore_(explore) {}

void MadqnPolicy::ensure_agents(const Simulation& sim) {
    if (agents_.empty()) agents_.resize(sim.jobs().size());
}

CommBundle MadqnPolicy::build_comm(const Simulation& sim, int self, Decision type) const {
    const NetworkShape& shape = (type == Decision::Ws ? brain_->ws_bundles[0].online.shape()
                                                      : brain_->aiv_bundles[0].online.shape());
    CommBundle comm = CommBundle::zeros(shape);
    // Co-active peers, most recent decision activity first.
    std::vector<int> peers;
    for (const auto& j : sim.jobs()) {
        if (j.id == self) continue;
        if (j.status == JobStatus::Pending || j.status == JobStatus::Completed) continue;
        peers.push_back(j.id);
    }
    std::sort(peers.begin(), peers.end(), [&](int a, int b) {
        const auto la = agents_[a].last_activity;
        const auto lb = agents_[b].last_activity;
        if (la != lb) return la > lb;
        return a < b;
    });
    const int slots = std::min<int>(shape.comm_slots, static_cast<int>(peers.size()));
    for (int k = 0; k < slots; ++k) {
        const auto& acts = (type == Decision::Ws ? agents_[peers[k]].ws_acts : agents_[peers[k]].aiv_acts);
        if (acts.empty()) continue; // peer has not evaluated yet: zeros
        for (int l = 0; l < shape.n_hidden; ++l)
            std::copy(acts[l].begin(), acts[l].end(),
                      comm.layers[l].begin() + static_cast<std::ptrdiff_t>(k) * shape.comm_width);
    }
    return comm;
}

int MadqnPolicy::decide(const Simulation& sim, const SimJob& job, Decision type) {
    ensure_agents(sim);
    auto& ag = agents_[job.id];
    const int bi = brain_->bundle_index(job.id);
    const NetBundle& bundle =
        (type == Decision::Ws ? brain_->ws_bundles[bi] : brain_->aiv_bundles[bi]);

    std::vector<double> obs = (type == Decision::Ws ? build_ws_observation(sim, job, brain_->scales)
                                                    : build_aiv_observation(sim, job, brain_->scales));
    CommBundle comm = build_comm(sim, job.id, type);

    std::vector<std::uint8_t> feasible;
    if (type == Decision::Ws) {
        feasible.assign(sim.n_workstations(), 0);
        for (int ws : sim.scenario().job_op(job.id, job.next_op).eligible) feasible[ws] = 1;
    } else {
        feasible.assign(sim.n_aivs(), 1);
    }

    ForwardTrace trace;
    const std::vector<double> q = bundle.online.forward(obs, comm, &trace);
    auto& acts = (type == Decision::Ws ? ag.ws_acts : ag.aiv_acts);
    acts = trace.acts;
    ag.last_activity = ++decision_counter_;

    const std::vector<double> masked = mask_q_values(q, feasible);
    const int action = select_action(masked, epsilon_, explore_);
    if (!feasible[action]) throw std::logic_error("selected action violates the mask");

    if (learn_brain_) {
        auto& pend = (type == Decision::Ws ? ag.pend_ws : ag.pend_aiv);
        auto& wb = (type == Decision::Ws ? learn_brain_->ws_bundles[bi]
                                         : learn_brain_->aiv_bundles[bi]);
        if (pend.active) {
            Experience e;
            e.s = std::move(pend.s);
            e.comm = std::move(pend.comm);
            e.mask = std::move(pend.mask);
            e.action = pend.action;
            e.reward = pend.reward;
            e.s2 = obs;
            e.comm2 = comm;
            e.mask2 = feasible;
            e.terminal = false;
            if (!e.mask[e.action]) throw std::logic_error("stored action violates its stored mask");
            wb.buffer.push(std::move(e));
        }
        pend.active = true;
        pend.s = std::move(obs);
        pend.comm = std::move(comm);
        pend.mask = std::move(feasible);
        pend.action = action;
        pend.reward = 0;
        train_step(wb);
    }
    return action;
}

int MadqnPolicy::select_workstation(const Simulation& sim, const SimJob& job) {
    return decide(sim, job, Decision::Ws);
}

int MadqnPolicy::select_aiv(const Simulation& sim, const SimJob& job) {
    return decide(sim, job, Decision::Aiv);
}

void MadqnPolicy::on_operation_completed(const Simulation& sim, const SimJob& job) {
    if (!learn_brain_) return;
    ensure_agents(sim);
    auto& pend = agents_[job.id].pend_ws;
    if (!pend.active) return;
    const double rpt = remaining_mean_processing(sim.scenario(), job);
    pend.reward -= current_tardiness(job.due, sim.now(), rpt, brain_->scales.k_tardiness);
}

void MadqnPolicy::on_job_delivered(const Simulation& sim, const SimJob& job, double window_energy_pct) {
    if (!learn_brain_) return;
    ensure_agents(sim);
    auto& pend = agents_[job.id].pend_aiv;
    if (!pend.active) return;
    pend.reward -= window_energy_pct;
}

void MadqnPolicy::on_job_completed(const Simulation& sim, const SimJob& job) {
    if (!learn_brain_) return;
    ensure_agents(sim);
    auto& ag = agents_[job.id];
    const double fr = final_reward(job);
    const int bi = brain_->bundle_index(job.id);
    if (ag.pend_ws.active) {
        ag.pend_ws.reward += fr;
        flush_terminal(learn_brain_->ws_bundles[bi], ag.pend_ws);
    }
    if (ag.pend_aiv.active) {
        ag.pend_aiv.reward += fr;
        flush_terminal(learn_brain_->aiv_bundles[bi], ag.pend_aiv);
    }
}

void MadqnPolicy::flush_terminal(NetBundle& bundle, PendingTransition& pend) {
    Experience e;
    e.s = std::move(pend.s);
    e.comm = std::move(pend.comm);
    e.mask = std::move(pend.mask);
    e.action = pend.action;
    e.reward = pend.reward;
    e.terminal = true;
    if (!e.mask[e.action]) throw std::logic_error("stored action violates its stored mask");
    bundle.buffer.push(std::move(e));
    pend = PendingTransition{};
}

void MadqnPolicy::train_step(NetBundle& bundle) {
    const auto& cfg = brain_->config;
    if (bundle.buffer.size() < static_cast<std::size_t>(cfg.batch_size)) return;
    const double scale = brain_->effective_reward_scale();
    const auto idx = bundle.buffer.sample(static_cast<std::size_t>(cfg.batch_size), explore_);

    Gradients grads = bundle.online.zero_gradients();
    double loss_sum = 0;
    std::vector<double> dq(static_cast<std::size_t>(bundle.online.shape().outputs), 0.0);
    for (std::size_t i : idx) {
        const Experience& e = bundle.buffer.at(i);
        double y;
        if (e.terminal) {
            y = td_target(e.reward * scale, {}, cfg.gamma, true);
        } else {
            const auto q2 = bundle.target.forward(e.s2, e.comm2);
            const auto masked2 = mask_q_values(q2, e.mask2);
            y = td_target(e.reward * scale, masked2, cfg.gamma, false);
        }
        ForwardTrace trace;
        const auto q = bundle.online.forward(e.s, e.comm, &trace);
        const double err = q[e.action] - y;
        loss_sum += err * err;
        std::fill(dq.begin(), dq.end(), 0.0);
        dq[e.action] = 2.0 * err / cfg.batch_size;
        grads.accumulate(bundle.online.backward(trace, dq));
    }
    const double loss = loss_sum / cfg.batch_size;
    if (!std::isfinite(loss)) throw TrainingDivergence("TD loss became non-finite");
    bundle.online.apply_sgd(grads, cfg.lr);
    ++bundle.sgd_steps;
    bundle.loss_sum += loss;
    ++bundle.loss_count;
    if (bundle.sgd_steps % cfg.target_sync == 0) bundle.target = bundle.online;
}

// --- training / evaluation drivers ------------------------------------------

namespace {
double epsilon_for(const TrainConfig& cfg, int episode, int total_target) {
    const double horizon = cfg.eps_decay_frac * std::max(1, total_target);
    if (horizon <= 0) return cfg.eps_end;
    const double frac = std::min(1.0, episode / horizon);
    return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}
} // namespace

std::vector<TrainLogRow> train(MadqnBrain& brain, const ScenarioProvider& provider, int episodes) {
    std::vector<TrainLogRow> log;
    const int total_target = brain.episodes_trained + episodes;
    SeededStreams streams(brain.config.seed);
    for (int e = 0; e < episodes; ++e) {
        const int global_ep = brain.episodes_trained;
        const double eps = epsilon_for(brain.config, global_ep, total_target);
        Scenario scn = provider(global_ep);
        if (scn.config.n_workstations != brain.n_workstations || scn.config.aiv_count != brain.n_aivs)
            throw std::invalid_argument("training scenario does not match network shapes");
        for (auto& bnd : brain.ws_bundles) {
            bnd.loss_sum = 0;
            bnd.loss_count = 0;
        }
        for (auto& bnd : brain.aiv_bundles) {
            bnd.loss_sum = 0;
            bnd.loss_count = 0;
        }
        MadqnPolicy policy(brain, eps, streams.stream("exploration", static_cast<std::uint64_t>(global_ep)));
        Simulation sim(scn, policy);
        const RunMetrics metrics = sim.run();

        TrainLogRow row;
        row.episode = global_ep;
        row.epsilon = eps;
        double ws_sum = 0, aiv_sum = 0;
        long long ws_n = 0, aiv_n = 0;
        for (const auto& bnd : brain.ws_bundles) {
            ws_sum += bnd.loss_sum;
            ws_n += bnd.loss_count;
        }
        for (const auto& bnd : brain.aiv_bundles) {
            aiv_sum += bnd.loss_sum;
            aiv_n += bnd.loss_count;
        }
        row.mean_loss_ws = ws_n ? ws_sum / ws_n : 0;
        row.mean_loss_aiv = aiv_n ? aiv_sum / aiv_n : 0;
        row.total_tardiness = metrics.total_tardiness;
        row.n_tardy = metrics.n_tardy;
        row.energy_pct = metrics.total_energy_pct;
        log.push_back(row);
        ++brain.episodes_trained;
    }
    return log;
}

RunMetrics evaluate(const MadqnBrain& brain, const Scenario& scenario, TraceWriter* trace) {
    if (scenario.config.n_workstations != brain.n_workstations ||
        scenario.config.aiv_count != brain.n_aivs)
        throw std::invalid_argument("scenario does not match checkpoint network shapes");
    MadqnPolicy policy(brain, 0.0);
    Simulation sim(scenario, policy, trace);
    return sim.run();
}

void write_training_log(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open training log " + path);
    f << "episode,epsilon,mean_loss_ws,mean_loss_aiv,total_tardiness,n_tardy,energy_pct\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%d,%.9g\n", r.episode, r.epsilon,
                      r.mean_loss_ws, r.mean_loss_aiv, r.total_tardiness, r.n_tardy, r.energy_pct);
        f << buf;
    }
}

} // namespace aivshop
