#include "aivshop/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace aivshop {

double energy_rate(EnergyClass c) {
    switch (c) {
        case EnergyClass::NotMoving: return 0.01;
        case EnergyClass::MovingEmpty: return 0.02;
        case EnergyClass::MovingOne: return 0.05;
        case EnergyClass::MovingTwo: return 0.10;
        case EnergyClass::Charging: return 0.0;
    }
    return 0.0;
}

const char* to_string(JobStatus s) {
    switch (s) {
        case JobStatus::Pending: return "pending";
        case JobStatus::WaitingTransport: return "waiting-for-transport";
        case JobStatus::InTransit: return "in-transit";
        case JobStatus::Queued: return "queued-at-workstation";
        case JobStatus::Processing: return "processing";
        case JobStatus::Completed: return "completed";
    }
    return "?";
}

const char* to_string(AivStatus s) {
    switch (s) {
        case AivStatus::Idle: return "idle";
        case AivStatus::MovingEmpty: return "moving-empty";
        case AivStatus::MovingLoaded: return "moving-loaded";
        case AivStatus::ToCharge: return "traveling-to-charge";
        case AivStatus::WaitingCharge: return "waiting-to-charge";
        case AivStatus::Charging: return "charging";
    }
    return "?";
}

const char* to_string(EnergyClass c) {
    switch (c) {
        case EnergyClass::NotMoving: return "not-moving";
        case EnergyClass::MovingEmpty: return "moving-0";
        case EnergyClass::MovingOne: return "moving-1";
        case EnergyClass::MovingTwo: return "moving-2";
        case EnergyClass::Charging: return "charging";
    }
    return "?";
}

double window_energy(const std::vector<LedgerEntry>& ledger, double t0, double t1) {
    if (t1 <= t0) return 0.0;
    double sum = 0;
    for (const auto& e : ledger) {
        const double lo = std::max(t0, e.t0);
        const double hi = std::min(t1, e.t1);
        if (hi <= lo) continue;
        const double len = e.t1 - e.t0;
        if (len <= 0) continue;
        sum += e.pct * (hi - lo) / len;
    }
    return sum;
}

void TraceWriter::emit(double t, std::string_view kind, std::string_view entity, const std::string& detail) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", t);
    os_ << buf << '\t' << kind << '\t' << entity << '\t' << detail << '\n';
}

namespace {
constexpr double kBusyEps = 1e-9;

bool is_moving(AivStatus s) {
    return s == AivStatus::MovingEmpty || s == AivStatus::MovingLoaded || s == AivStatus::ToCharge;
}
} // namespace

Simulation::Simulation(const Scenario& scenario, DecisionPolicy& policy, TraceWriter* trace)
    : scenario_(&scenario), policy_(&policy), tracer_(trace) {
    const auto& c = scenario.config;
    if (c.n_workstations < 1) throw std::invalid_argument("need at least one workstation");
    if (c.aiv_count < 1) throw std::invalid_argument("need at least one AIV");
    if (scenario.layout.n_nodes != scenario.n_nodes())
        throw std::invalid_argument("layout node count does not match configuration");

    jobs_.resize(scenario.jobs.size());
    for (std::size_t j = 0; j < scenario.jobs.size(); ++j) {
        auto& job = jobs_[j];
        job.id = static_cast<int>(j);
        job.product = scenario.jobs[j].product;
        job.arrival = scenario.jobs[j].arrival;
        job.due = scenario.jobs[j].due;
        const auto& ops = scenario.products[job.product].ops;
        if (ops.empty()) throw std::invalid_argument("product with no operations");
        for (const auto& op : ops)
            if (op.eligible.empty()) throw std::invalid_argument("operation with empty eligible set");
        job.assigned_ws.assign(ops.size(), -1);
    }
    workstations_.resize(c.n_workstations);
    for (int w = 0; w < c.n_workstations; ++w) {
        workstations_[w].id = w;
        workstations_[w].node = scenario.workstation_node(w);
    }
    aivs_.resize(c.aiv_count);
    legs_.resize(c.aiv_count);
    leg_pos_.assign(c.aiv_count, 0);
    ledgers_.resize(c.aiv_count);
    for (int a = 0; a < c.aiv_count; ++a) {
        aivs_[a].id = a;
        aivs_[a].node = scenario.storage_node();
    }
    stations_.resize(c.n_charging);
    for (int s = 0; s < c.n_charging; ++s) {
        stations_[s].id = s;
        stations_[s].node = scenario.charging_node(s);
    }

    // Arrival events are pushed in job order so equal arrival times resolve
    // by job index.
    for (std::size_t j = 0; j < jobs_.size(); ++j)
        push_event(jobs_[j].arrival, EventKind::JobArrival, static_cast<int>(j));
    for (std::size_t w = 0; w < scenario.breakdowns.size(); ++w)
        for (const auto& bw : scenario.breakdowns[w])
            push_event(bw.start, EventKind::BreakdownStart, static_cast<int>(w), -1, bw.duration);
}

void Simulation::push_event(double t, EventKind kind, int a, int b, double x, std::uint64_t epoch) {
    // Fixed same-timestamp order: processing completions, then repairs, then
    // breakdown onsets, then arrivals (job before vehicle), then charge
    // completions; insertion order breaks remaining ties.
    Event ev;
    ev.t = t;
    ev.prio = static_cast<int>(kind);
    ev.seq = seq_++;
    ev.kind = kind;
    ev.a = a;
    ev.b = b;
    ev.x = x;
    ev.epoch = epoch;
    events_.push(ev);
}

std::string Simulation::node_name(int node) const {
    if (node == 0) return "S";
    const int m = scenario_->config.n_workstations;
    if (node <= m) return "WS" + std::to_string(node);
    return "CH" + std::to_string(node - m);
}

void Simulation::trace(std::string_view kind, std::string_view entity, const std::string& detail) {
    if (tracer_) tracer_->emit(clock_, kind, entity, detail);
}

bool Simulation::step() {
    if (completed_ == static_cast<int>(jobs_.size())) return false;
    if (events_.empty())
        throw std::logic_error("simulation stalled: event queue empty with unfinished jobs");
    Event ev = events_.top();
    events_.pop();
    if (ev.t < clock_) throw std::logic_error("event timestamp precedes simulation clock");
    clock_ = ev.t;
    ++metrics_.n_events;
    switch (ev.kind) {
        case EventKind::JobArrival: handle_job_arrival(ev.a); break;
        case EventKind::ProcComplete: handle_proc_complete(ev); break;
        case EventKind::BreakdownStart: handle_breakdown_start(ev); break;
        case EventKind::BreakdownEnd: handle_breakdown_end(ev); break;
        case EventKind::AivArrival: handle_aiv_arrival(ev.a); break;
        case EventKind::ChargeComplete: handle_charge_complete(ev); break;
    }
    return true;
}

RunMetrics Simulation::run() {
    while (step()) {
    }
    finalize_books();
    return metrics_;
}

void Simulation::handle_job_arrival(int job) {
    auto& j = jobs_[job];
    j.status = JobStatus::WaitingTransport;
    j.location = scenario_->storage_node();
    trace("arrive", job_name(job), "product=P" + std::to_string(j.product + 1));
    decision_point(job);
}

void Simulation::decision_point(int job) {
    auto& j = jobs_[job];
    const int op = j.next_op;
    const auto& spec = scenario_->job_op(job, op);

    ++metrics_.n_ws_decisions;
    const int ws = policy_->select_workstation(*this, j);
    if (!spec.can_run_on(ws))
        throw std::logic_error("policy selected a workstation outside the eligible set");
    j.assigned_ws[op] = ws;
    trace("ws_select", job_name(job), "op=" + std::to_string(op) + " ws=" + ws_name(ws));

    const int dest = scenario_->workstation_node(ws);
    if (j.location == dest) {
        // Already at the chosen workstation: no transfer, straight to queue.
        enqueue_at_workstation(job, ws);
        return;
    }

    ++metrics_.n_aiv_decisions;
    const int a = policy_->select_aiv(*this, j);
    if (a < 0 || a >= n_aivs()) throw std::logic_error("policy selected an invalid AIV");
    trace("aiv_select", job_name(job), "aiv=" + aiv_name(a));

    j.status = JobStatus::WaitingTransport;
    TransportRequest req{job, j.location, dest, clock_};
    auto& v = aivs_[a];
    v.pending.push_back(req);
    trace("request", aiv_name(a),
          "job=" + job_name(job) + " origin=" + node_name(req.origin) + " dest=" + node_name(dest));
    if (v.status == AivStatus::Idle) {
        settle_energy(a);
        if (charge_due(v.battery, scenario_->config.charge_threshold))
            start_charge_trip(a);
        else
            start_tour(a);
    }
}

void Simulation::enqueue_at_workstation(int job, int ws) {
    auto& j = jobs_[job];
    auto& w = workstations_[ws];
    j.location = w.node;
    j.status = JobStatus::Queued;
    w.queue.push_back(job);
    trace("queue", ws_name(ws), "job=" + job_name(job) + " depth=" + std::to_string(w.queue.size()));
    try_start(ws);
}

void Simulation::try_start(int ws) {
    auto& w = workstations_[ws];
    if (!w.available || w.current_job != -1 || w.queue.empty()) return;
    const int job = w.queue.front();
    w.queue.pop_front();
    auto& j = jobs_[job];
    const int op = j.next_op;
    if (j.assigned_ws[op] != ws) throw std::logic_error("queued job assigned elsewhere");
    j.status = JobStatus::Processing;
    j.remaining = scenario_->job_op(job, op).time_on(ws);
    w.current_job = job;
    w.proc_start = clock_;
    ++w.proc_epoch;
    push_event(clock_ + j.remaining, EventKind::ProcComplete, ws, job, 0, w.proc_epoch);
    trace("start_proc", ws_name(ws), "job=" + job_name(job) + " op=" + std::to_string(op));
}

void Simulation::handle_proc_complete(const Event& ev) {
    auto& w = workstations_[ev.a];
    if (ev.epoch != w.proc_epoch || w.current_job != ev.b || w.suspended) return; // stale
    auto& j = jobs_[ev.b];
    w.busy_accum += clock_ - w.proc_start;
    w.current_job = -1;
    j.remaining = 0;
    ++j.next_op;
    trace("end_proc", ws_name(ev.a), "job=" + job_name(ev.b));
    policy_->on_operation_completed(*this, j);

    if (j.next_op < scenario_->n_ops(ev.b)) {
        j.status = JobStatus::WaitingTransport;
        decision_point(ev.b);
    } else {
        j.status = JobStatus::Completed;
        j.completion = clock_;
        ++completed_;
        trace("complete", job_name(ev.b),
              "lateness=" + std::to_string(clock_ - j.due));
        policy_->on_job_completed(*this, j);
    }
    if (completed_ < static_cast<int>(jobs_.size())) try_start(ev.a);
}

void Simulation::schedule_unavailability(int ws, double at, double duration) {
    if (ws < 0 || ws >= n_workstations()) throw std::invalid_argument("bad workstation id");
    if (duration <= 0) throw std::invalid_argument("unavailability duration must be positive");
    if (at < clock_) throw std::invalid_argument("unavailability scheduled in the past");
    push_event(at, EventKind::BreakdownStart, ws, -1, duration);
}

void Simulation::handle_breakdown_start(const Event& ev) {
    auto& w = workstations_[ev.a];
    const double end = clock_ + ev.x;
    if (!w.available) {
        // Overlapping windows merge into one longer outage.
        if (end > w.unavailable_until) {
            w.unavailable_until = end;
            ++w.repair_epoch;
            push_event(end, EventKind::BreakdownEnd, ev.a, -1, 0, w.repair_epoch);
        }
        return;
    }
    w.available = false;
    w.unavailable_until = end;
    ++w.repair_epoch;
    push_event(end, EventKind::BreakdownEnd, ev.a, -1, 0, w.repair_epoch);
    trace("breakdown", ws_name(ev.a), "until=" + std::to_string(end));
    if (w.current_job != -1 && !w.suspended) suspend_processing(ev.a);
}

void Simulation::suspend_processing(int ws) {
    auto& w = workstations_[ws];
    auto& j = jobs_[w.current_job];
    const double elapsed = clock_ - w.proc_start;
    w.busy_accum += elapsed;
    j.remaining -= elapsed;
    if (j.remaining < 0) throw std::logic_error("negative remaining processing time at suspend");
    w.suspended = true;
    ++w.proc_epoch; // invalidates the scheduled completion
    trace("suspend", ws_name(ws), "job=" + job_name(w.current_job) + " remaining=" + std::to_string(j.remaining));
}

void Simulation::handle_breakdown_end(const Event& ev) {
    auto& w = workstations_[ev.a];
    if (ev.epoch != w.repair_epoch) return; // superseded by a merged window
    w.available = true;
    w.unavailable_until = -1;
    trace("repair", ws_name(ev.a), "");
    resume_or_start(ev.a);
}

void Simulation::resume_or_start(int ws) {
    auto& w = workstations_[ws];
    if (w.suspended) {
        auto& j = jobs_[w.current_job];
        w.suspended = false;
        w.proc_start = clock_;
        ++w.proc_epoch;
        push_event(clock_ + j.remaining, EventKind::ProcComplete, ws, w.current_job, 0, w.proc_epoch);
        trace("resume", ws_name(ws), "job=" + job_name(w.current_job));
    } else {
        try_start(ws);
    }
}

// --- AIV handling -----------------------------------------------------------

void Simulation::set_energy_class(int aiv, EnergyClass c) {
    settle_energy(aiv);
    aivs_[aiv].eclass = c;
}

void Simulation::set_status(int aiv, AivStatus st) {
    auto& v = aivs_[aiv];
    if (is_moving(v.status)) v.busy_accum += clock_ - v.status_since;
    v.status = st;
    v.status_since = clock_;
}

void Simulation::settle_energy(int aiv) {
    auto& v = aivs_[aiv];
    const double dt = clock_ - v.last_settle;
    if (dt < 0) throw std::logic_error("energy settlement moving backwards");
    if (dt == 0) return;
    const double pct = energy_rate(v.eclass) * dt;
    double actual = pct;
    if (pct > v.battery) {
        actual = v.battery;
        if (!v.depleted) ++metrics_.battery_depletions;
        v.depleted = true;
    }
    v.battery -= actual;
    ledgers_[aiv].push_back({v.last_settle, clock_, v.eclass, actual});
    v.last_settle = clock_;
}

double Simulation::battery_at_now(int aiv) const {
    const auto& v = aivs_[aiv];
    const double pct = energy_rate(v.eclass) * (clock_ - v.last_settle);
    return std::max(0.0, v.battery - pct);
}

double Simulation::ws_busy_fraction(int ws) const {
    const auto& w = workstations_[ws];
    double busy = w.busy_accum;
    if (w.current_job != -1 && !w.suspended) busy += clock_ - w.proc_start;
    return busy / std::max(clock_, kBusyEps);
}

double Simulation::aiv_busy_fraction(int aiv) const {
    const auto& v = aivs_[aiv];
    double busy = v.busy_accum;
    if (is_moving(v.status)) busy += clock_ - v.status_since;
    return busy / std::max(clock_, kBusyEps);
}

int Simulation::aiv_reference_node(int aiv) const {
    const auto& v = aivs_[aiv];
    return v.target >= 0 ? v.target : v.node;
}

void Simulation::start_tour(int aiv) {
    auto& v = aivs_[aiv];
    if (v.status != AivStatus::Idle || v.pending.empty())
        throw std::logic_error("tour start requires an idle AIV with pending requests");
    const int take = std::min<int>(scenario_->config.aiv_capacity, static_cast<int>(v.pending.size()));
    v.tour.clear();
    legs_[aiv].clear();
    leg_pos_[aiv] = 0;
    for (int i = 0; i < take; ++i) {
        v.tour.push_back(v.pending.front());
        v.pending.pop_front();
    }
    // All pickups first (request order), then all deliveries (same order).
    for (int i = 0; i < take; ++i) legs_[aiv].push_back({v.tour[i].origin, true, i});
    for (int i = 0; i < take; ++i) legs_[aiv].push_back({v.tour[i].destination, false, i});
    trace("tour", aiv_name(aiv), "requests=" + std::to_string(take));
    depart(aiv);
}

void Simulation::depart(int aiv) {
    auto& v = aivs_[aiv];
    const auto& leg = legs_[aiv][leg_pos_[aiv]];
    if (leg.pickup) {
        // The transfer-energy window opens when the vehicle heads for the job.
        jobs_[v.tour[leg.request_idx].job].pickup_commence = clock_;
    }
    set_status(aiv, v.cargo.empty() ? AivStatus::MovingEmpty : AivStatus::MovingLoaded);
    EnergyClass c = EnergyClass::MovingEmpty;
    if (v.cargo.size() == 1) c = EnergyClass::MovingOne;
    else if (v.cargo.size() >= 2) c = EnergyClass::MovingTwo;
    set_energy_class(aiv, c);
    v.target = leg.node;
    push_event(clock_ + transfer_time(v.node, leg.node), EventKind::AivArrival, aiv);
    trace("depart", aiv_name(aiv), "to=" + node_name(leg.node) + " cargo=" + std::to_string(v.cargo.size()));
}

void Simulation::handle_aiv_arrival(int aiv) {
    auto& v = aivs_[aiv];
    settle_energy(aiv);
    v.node = v.target;
    v.target = -1;
    if (v.status == AivStatus::ToCharge) {
        arrive_at_station(aiv);
        return;
    }
    const auto leg = legs_[aiv][leg_pos_[aiv]];
    const auto req = v.tour[leg.request_idx];
    if (leg.pickup) {
        auto& j = jobs_[req.job];
        if (j.location != v.node || j.status != JobStatus::WaitingTransport)
            throw std::logic_error("pickup at wrong node or job state");
        j.status = JobStatus::InTransit;
        j.location = -1;
        j.carrier = aiv;
        v.cargo.push_back(req.job);
        if (static_cast<int>(v.cargo.size()) > scenario_->config.aiv_capacity)
            throw std::logic_error("AIV cargo exceeds capacity");
        trace("pickup", aiv_name(aiv), "job=" + job_name(req.job) + " at=" + node_name(v.node));
    } else {
        auto& j = jobs_[req.job];
        v.cargo.erase(std::find(v.cargo.begin(), v.cargo.end(), req.job));
        j.location = v.node;
        j.carrier = -1;
        j.delivered_at = clock_;
        const double e = window_energy(ledgers_[aiv], j.pickup_commence, clock_);
        trace("deliver", aiv_name(aiv), "job=" + job_name(req.job) + " at=" + node_name(v.node));
        policy_->on_job_delivered(*this, j, e);
        enqueue_at_workstation(req.job, v.node - 1);
    }
    ++leg_pos_[aiv];
    if (leg_pos_[aiv] < legs_[aiv].size())
        depart(aiv);
    else
        tour_finished(aiv);
}

void Simulation::tour_finished(int aiv) {
    auto& v = aivs_[aiv];
    if (!v.cargo.empty()) throw std::logic_error("tour finished with cargo aboard");
    v.tour.clear();
    legs_[aiv].clear();
    leg_pos_[aiv] = 0;
    set_status(aiv, AivStatus::Idle);
    set_energy_class(aiv, EnergyClass::NotMoving);
    trace("idle", aiv_name(aiv), "at=" + node_name(v.node));
    after_idle(aiv);
}

void Simulation::after_idle(int aiv) {
    auto& v = aivs_[aiv];
    if (charge_due(v.battery, scenario_->config.charge_threshold)) {
        start_charge_trip(aiv);
        return;
    }
    if (!v.pending.empty()) start_tour(aiv);
}

void Simulation::start_charge_trip(int aiv) {
    auto& v = aivs_[aiv];
    if (stations_.empty()) {
        // Nowhere to recharge; keep working.
        if (!v.pending.empty()) start_tour(aiv);
        return;
    }
    int best = -1;
    double best_d = 0;
    for (const auto& st : stations_) {
        if (st.occupant != -1) continue;
        const double d = transfer_time(v.node, st.node);
        if (best == -1 || d < best_d) {
            best = st.id;
            best_d = d;
        }
    }
    if (best == -1) {
        for (const auto& st : stations_) {
            const double d = transfer_time(v.node, st.node);
            if (best == -1 || d < best_d) {
                best = st.id;
                best_d = d;
            }
        }
    }
    v.station = best;
    set_status(aiv, AivStatus::ToCharge);
    set_energy_class(aiv, EnergyClass::MovingEmpty);
    v.target = stations_[best].node;
    push_event(clock_ + transfer_time(v.node, v.target), EventKind::AivArrival, aiv);
    trace("to_charge", aiv_name(aiv), "station=" + node_name(stations_[best].node));
}

void Simulation::arrive_at_station(int aiv) {
    auto& v = aivs_[aiv];
    auto& st = stations_[v.station];
    if (st.occupant == -1) {
        begin_charge(v.station, aiv);
    } else {
        st.wait.push_back(aiv);
        set_status(aiv, AivStatus::WaitingCharge);
        set_energy_class(aiv, EnergyClass::NotMoving);
        trace("charge_wait", aiv_name(aiv), "station=" + node_name(st.node));
    }
}

void Simulation::begin_charge(int station, int aiv) {
    auto& st = stations_[station];
    auto& v = aivs_[aiv];
    st.occupant = aiv;
    v.station = station;
    set_status(aiv, AivStatus::Charging);
    set_energy_class(aiv, EnergyClass::Charging);
    push_event(clock_ + scenario_->config.recharge_duration, EventKind::ChargeComplete, aiv, station);
    trace("charge_start", aiv_name(aiv), "station=" + node_name(st.node));
}

void Simulation::handle_charge_complete(const Event& ev) {
    auto& v = aivs_[ev.a];
    settle_energy(ev.a); // zero-rate entry keeps the ledger contiguous
    v.recharged += 100.0 - v.battery;
    v.battery = 100.0;
    auto& st = stations_[ev.b];
    if (st.occupant != ev.a) throw std::logic_error("charge completion for wrong occupant");
    st.occupant = -1;
    v.station = -1;
    trace("charge_end", aiv_name(ev.a), "station=" + node_name(st.node));
    if (!st.wait.empty()) {
        const int next = st.wait.front();
        st.wait.pop_front();
        begin_charge(ev.b, next);
    }
    set_status(ev.a, AivStatus::Idle);
    set_energy_class(ev.a, EnergyClass::NotMoving);
    after_idle(ev.a);
}

void Simulation::finalize_books() {
    if (finalized_) return;
    finalized_ = true;
    metrics_.makespan = clock_;
    for (int a = 0; a < n_aivs(); ++a) {
        settle_energy(a);
        auto& v = aivs_[a];
        if (is_moving(v.status)) {
            v.busy_accum += clock_ - v.status_since;
            v.status_since = clock_;
        }
        double consumed = 0;
        for (const auto& e : ledgers_[a]) consumed += e.pct;
        const double books = 100.0 - v.battery + v.recharged;
        if (std::abs(consumed - books) > 1e-9)
            throw std::logic_error("energy ledger does not balance battery movements");
        metrics_.total_energy_pct += consumed;
    }
    for (const auto& j : jobs_) {
        if (j.status != JobStatus::Completed) continue;
        const double tard = std::max(0.0, j.completion - j.due);
        metrics_.total_tardiness += tard;
        if (j.completion > j.due) ++metrics_.n_tardy;
    }
}

} // namespace aivshop
