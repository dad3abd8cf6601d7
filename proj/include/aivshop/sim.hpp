#pragma once

#include "aivshop/scenario.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace aivshop {

enum class EnergyClass { NotMoving, MovingEmpty, MovingOne, MovingTwo, Charging };

// Battery percentage consumed per time unit.
double energy_rate(EnergyClass c);

struct LedgerEntry {
    double t0 = 0;
    double t1 = 0;
    EnergyClass cls = EnergyClass::NotMoving;
    double pct = 0;
};

// Battery consumed by one AIV inside [t0, t1], prorated over ledger entries.
double window_energy(const std::vector<LedgerEntry>& ledger, double t0, double t1);

struct TransportRequest {
    int job = -1;
    int origin = -1;      // node
    int destination = -1; // node
    double request_time = 0;
};

enum class JobStatus { Pending, WaitingTransport, InTransit, Queued, Processing, Completed };

struct SimJob {
    int id = -1;
    int product = 0;
    double arrival = 0;
    double due = 0;
    int next_op = 0;
    JobStatus status = JobStatus::Pending;
    int location = -1; // node id; -1 while aboard an AIV
    int carrier = -1;
    double completion = -1;
    double remaining = 0; // unfinished processing time of the op in service
    std::vector<int> assigned_ws;
    // transfer window of the transport currently in flight / last finished
    double pickup_commence = -1;
    double delivered_at = -1;
};

struct SimWorkstation {
    int id = -1;
    int node = -1;
    std::deque<int> queue; // job ids, FIFO by physical arrival
    int current_job = -1;
    bool suspended = false;
    bool available = true;
    double unavailable_until = -1;
    double proc_start = 0;
    double busy_accum = 0;
    std::uint64_t proc_epoch = 0;
    std::uint64_t repair_epoch = 0;
};

enum class AivStatus { Idle, MovingEmpty, MovingLoaded, ToCharge, WaitingCharge, Charging };

struct SimAiv {
    int id = -1;
    int node = 0;    // last node reached
    int target = -1; // node currently traveling toward
    AivStatus status = AivStatus::Idle;
    double battery = 100.0;
    std::deque<TransportRequest> pending;   // not yet part of a tour
    std::vector<TransportRequest> tour;     // manifest of the running tour
    std::vector<int> cargo;                 // job ids aboard
    double busy_accum = 0;                  // time in motion
    double status_since = 0;
    EnergyClass eclass = EnergyClass::NotMoving;
    double last_settle = 0;
    double recharged = 0;
    bool depleted = false;
    int station = -1; // charging station index while heading to / at one
};

struct ChargingStationState {
    int id = -1;
    int node = -1;
    int occupant = -1;      // AIV id
    std::deque<int> wait;   // AIV ids, FIFO
};

struct RunMetrics {
    double total_tardiness = 0;
    int n_tardy = 0;
    double total_energy_pct = 0;
    double makespan = 0;
    int battery_depletions = 0;
    long long n_events = 0;
    long long n_ws_decisions = 0;
    long long n_aiv_decisions = 0;
};

class Simulation;

// Decision and reward surface between the engine and a scheduling policy.
// select_* are called synchronously when a job becomes ready; the on_*
// hooks report the facts reward functions are built from.
class DecisionPolicy {
public:
    virtual ~DecisionPolicy() = default;
    virtual int select_workstation(const Simulation& sim, const SimJob& job) = 0;
    virtual int select_aiv(const Simulation& sim, const SimJob& job) = 0;
    virtual void on_operation_completed(const Simulation&, const SimJob&) {}
    virtual void on_job_delivered(const Simulation&, const SimJob&, double window_energy_pct) {}
    virtual void on_job_completed(const Simulation&, const SimJob&) {}
};

// Line-oriented event trace: time<TAB>kind<TAB>entity<TAB>detail.
class TraceWriter {
public:
    explicit TraceWriter(std::ostream& os) : os_(os) {}
    void emit(double t, std::string_view kind, std::string_view entity, const std::string& detail);

private:
    std::ostream& os_;
};

class Simulation {
public:
    Simulation(const Scenario& scenario, DecisionPolicy& policy, TraceWriter* trace = nullptr);

    // Processes one event; returns false once every job has completed.
    bool step();
    RunMetrics run();

    double now() const { return clock_; }
    const Scenario& scenario() const { return *scenario_; }
    int n_workstations() const { return static_cast<int>(workstations_.size()); }
    int n_aivs() const { return static_cast<int>(aivs_.size()); }
    const SimWorkstation& workstation(int i) const { return workstations_[i]; }
    const SimAiv& aiv(int i) const { return aivs_[i]; }
    const SimJob& job(int i) const { return jobs_[i]; }
    const std::vector<SimJob>& jobs() const { return jobs_; }

    double transfer_time(int node_a, int node_b) const { return scenario_->layout.at(node_a, node_b); }
    // Battery at the current clock without mutating the ledger.
    double battery_at_now(int aiv) const;
    double ws_busy_fraction(int ws) const;
    double aiv_busy_fraction(int aiv) const;
    // Node distances are measured from: the AIV's travel target while it
    // moves, its resting node otherwise.
    int aiv_reference_node(int aiv) const;
    const std::vector<LedgerEntry>& ledger(int aiv) const { return ledgers_[aiv]; }
    double recharged_total(int aiv) const { return aivs_[aiv].recharged; }
    int completed_jobs() const { return completed_; }

    // Marks a workstation unavailable during [at, at+duration); overlapping
    // windows merge. Generated breakdowns are injected through this too.
    void schedule_unavailability(int ws, double at, double duration);

    static bool charge_due(double battery_pct, double threshold_pct) { return battery_pct < threshold_pct; }

private:
    enum class EventKind { ProcComplete, BreakdownEnd, BreakdownStart, JobArrival, AivArrival, ChargeComplete };

    struct Event {
        double t = 0;
        int prio = 0;
        std::uint64_t seq = 0;
        EventKind kind = EventKind::JobArrival;
        int a = -1; // primary entity id
        int b = -1; // secondary id (job for completions)
        double x = 0;
        std::uint64_t epoch = 0;
    };
    struct EventLater {
        bool operator()(const Event& l, const Event& r) const {
            if (l.t != r.t) return l.t > r.t;
            if (l.prio != r.prio) return l.prio > r.prio;
            return l.seq > r.seq;
        }
    };

    void push_event(double t, EventKind kind, int a, int b = -1, double x = 0, std::uint64_t epoch = 0);
    void handle_job_arrival(int job);
    void handle_proc_complete(const Event& ev);
    void handle_breakdown_start(const Event& ev);
    void handle_breakdown_end(const Event& ev);
    void handle_aiv_arrival(int aiv);
    void handle_charge_complete(const Event& ev);

    void decision_point(int job);
    void enqueue_at_workstation(int job, int ws);
    void try_start(int ws);
    void suspend_processing(int ws);
    void resume_or_start(int ws);

    void start_tour(int aiv);
    void depart(int aiv);
    void tour_finished(int aiv);
    void after_idle(int aiv);
    void start_charge_trip(int aiv);
    void arrive_at_station(int aiv);
    void begin_charge(int station, int aiv);

    void settle_energy(int aiv);
    void set_energy_class(int aiv, EnergyClass c);
    void set_status(int aiv, AivStatus st);
    void finalize_books();

    std::string node_name(int node) const;
    std::string job_name(int job) const { return "J" + std::to_string(job); }
    std::string aiv_name(int aiv) const { return "A" + std::to_string(aiv); }
    std::string ws_name(int ws) const { return "WS" + std::to_string(ws + 1); }
    void trace(std::string_view kind, std::string_view entity, const std::string& detail);

    const Scenario* scenario_;
    DecisionPolicy* policy_;
    TraceWriter* tracer_;

    double clock_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::vector<SimJob> jobs_;
    std::vector<SimWorkstation> workstations_;
    std::vector<SimAiv> aivs_;
    std::vector<ChargingStationState> stations_;
    std::vector<std::vector<LedgerEntry>> ledgers_;
    struct TourLeg {
        int node;
        bool pickup;
        int request_idx;
    };
    std::vector<std::vector<TourLeg>> legs_;   // per AIV
    std::vector<std::size_t> leg_pos_;         // per AIV
    int completed_ = 0;
    bool finalized_ = false;
    RunMetrics metrics_;
};

const char* to_string(JobStatus s);
const char* to_string(AivStatus s);
const char* to_string(EnergyClass c);

} // namespace aivshop
