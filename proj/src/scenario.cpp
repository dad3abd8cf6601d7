#include "aivshop/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace aivshop {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

constexpr double kDueTFloor = 0.1;

} // namespace

double OperationSpec::time_on(int ws) const {
    for (std::size_t i = 0; i < eligible.size(); ++i)
        if (eligible[i] == ws) return proc_time[i];
    throw std::invalid_argument("workstation not eligible for operation");
}

bool OperationSpec::can_run_on(int ws) const {
    return std::find(eligible.begin(), eligible.end(), ws) != eligible.end();
}

double OperationSpec::mean_time() const {
    if (proc_time.empty()) throw std::logic_error("operation has no eligible workstations");
    double sum = std::accumulate(proc_time.begin(), proc_time.end(), 0.0);
    return sum / static_cast<double>(proc_time.size());
}

double Scenario::total_mean_processing(int job) const {
    const auto& prod = products[jobs[job].product];
    double sum = 0;
    for (const auto& op : prod.ops) sum += op.mean_time();
    return sum;
}

std::vector<std::vector<std::vector<int>>> default_routings() {
    // Workstation ids are 0-based (WS1 -> 0).
    return {
        {{0, 2}, {2, 3}, {1, 2}}, // P1: (WS1/WS3) -> (WS3/WS4) -> (WS2/WS3)
        {{0, 3}, {0, 3}, {1, 2}}, // P2: (WS1/WS4) -> (WS1/WS4) -> (WS2/WS3)
        {{3, 4}, {0, 4}, {1, 2}}, // P3: (WS4/WS5) -> (WS1/WS5) -> (WS2/WS3)
        {{0, 3}, {0, 1}, {2, 3}}, // P4: (WS1/WS4) -> (WS1/WS2) -> (WS3/WS4)
    };
}

double due_date(double arrival, double t_draw, double total_mean_processing) {
    return arrival + t_draw * total_mean_processing;
}

Scenario generate_scenario(const ScenarioConfig& config) {
    if (config.n_jobs <= 0 || config.n_products <= 0)
        throw std::invalid_argument("job and product counts must be positive");
    if (config.n_jobs % config.n_products != 0)
        throw std::invalid_argument("n_jobs must be divisible by n_products");
    if (config.arrival_mean <= 0 || config.tbi_mean <= 0 || config.trf_mean <= 0)
        throw std::invalid_argument("rate parameters must be positive");
    if (config.layout_min <= 0 || config.layout_max < config.layout_min)
        throw std::invalid_argument("invalid layout range");
    if (config.pt_min <= 0 || config.pt_max < config.pt_min)
        throw std::invalid_argument("invalid processing-time range");
    if (config.aiv_count <= 0 || config.aiv_capacity <= 0)
        throw std::invalid_argument("AIV configuration must be positive");

    Scenario s;
    s.config = config;

    // Routings: the bundled case-study table, truncated/cycled to n_products.
    const auto routes = default_routings();
    SeededStreams streams(config.seed);
    SeededStreams layout_streams(config.effective_layout_seed());

    Rng pt_rng = streams.stream("processing-times");
    s.products.resize(config.n_products);
    for (int p = 0; p < config.n_products; ++p) {
        const auto& route = routes[p % routes.size()];
        for (const auto& elig : route) {
            OperationSpec op;
            for (int ws : elig) {
                if (ws >= config.n_workstations)
                    throw std::invalid_argument("routing references workstation beyond n_workstations");
                op.eligible.push_back(ws);
            }
            std::sort(op.eligible.begin(), op.eligible.end());
            for (std::size_t i = 0; i < op.eligible.size(); ++i)
                op.proc_time.push_back(static_cast<double>(
                    pt_rng.uniform_int(static_cast<long long>(config.pt_min),
                                       static_cast<long long>(config.pt_max))));
            s.products[p].ops.push_back(std::move(op));
        }
    }

    // Arrivals: exponential inter-arrival gaps, strictly increasing times.
    Rng arr_rng = streams.stream("arrivals");
    s.jobs.resize(config.n_jobs);
    double t = 0;
    for (int j = 0; j < config.n_jobs; ++j) {
        t += arr_rng.exponential(config.arrival_mean);
        s.jobs[j].arrival = t;
        s.jobs[j].product = j % config.n_products; // round-robin, equal counts
    }
    const double mu = config.effective_due_mu();
    for (int j = 0; j < config.n_jobs; ++j) {
        double draw = arr_rng.normal(mu, config.due_t_sigma);
        if (draw < kDueTFloor) draw = kDueTFloor;
        s.jobs[j].t_draw = draw;
    }

    // Layout: symmetric transfer times, zero diagonal, independent of the
    // variation seed so replications share one layout.
    Rng lay_rng = layout_streams.stream("layout");
    const int n = 1 + config.n_workstations + config.n_charging;
    s.layout.n_nodes = n;
    s.layout.transfer.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            double d = lay_rng.uniform(config.layout_min, config.layout_max);
            s.layout.at(a, b) = d;
            s.layout.at(b, a) = d;
        }

    // Due dates need the processing times, so compute after both exist.
    for (int j = 0; j < config.n_jobs; ++j)
        s.jobs[j].due = due_date(s.jobs[j].arrival, s.jobs[j].t_draw, s.total_mean_processing(j));

    // Breakdown traces: alternating exponential gaps and repair durations,
    // pre-drawn over a fixed horizon so paired runs share disturbances.
    double horizon = config.breakdown_horizon;
    if (horizon <= 0)
        horizon = 50.0 * config.n_jobs * config.arrival_mean + 20000.0;
    s.config.breakdown_horizon = horizon;
    Rng bd_rng = streams.stream("breakdowns");
    s.breakdowns.resize(config.n_workstations);
    for (int w = 0; w < config.n_workstations; ++w) {
        double clock = 0;
        while (true) {
            clock += bd_rng.exponential(config.tbi_mean);
            if (clock > horizon) break;
            double dur = bd_rng.exponential(config.trf_mean);
            s.breakdowns[w].push_back({clock, dur});
            clock += dur;
        }
    }

    return s;
}

// ---------------------------------------------------------------------------
// Persistence: line-oriented text, doubles at full round-trip precision.

std::string scenario_to_string(const Scenario& s) {
    std::ostringstream os;
    const auto& c = s.config;
    os << "aivshop-scenario v1\n";
    os << "[config]\n";
    os << "seed " << c.seed << "\n";
    os << "layout_seed " << c.effective_layout_seed() << "\n";
    os << "jobs " << c.n_jobs << "\n";
    os << "products " << c.n_products << "\n";
    os << "workstations " << c.n_workstations << "\n";
    os << "charging_stations " << c.n_charging << "\n";
    os << "aivs " << c.aiv_count << "\n";
    os << "aiv_capacity " << c.aiv_capacity << "\n";
    os << "charge_threshold " << fmt_double(c.charge_threshold) << "\n";
    os << "recharge_duration " << fmt_double(c.recharge_duration) << "\n";
    os << "arrival_mean " << fmt_double(c.arrival_mean) << "\n";
    os << "due_t_mu " << fmt_double(c.effective_due_mu()) << "\n";
    os << "due_t_sigma " << fmt_double(c.due_t_sigma) << "\n";
    os << "tbi_mean " << fmt_double(c.tbi_mean) << "\n";
    os << "trf_mean " << fmt_double(c.trf_mean) << "\n";
    os << "layout_min " << fmt_double(c.layout_min) << "\n";
    os << "layout_max " << fmt_double(c.layout_max) << "\n";
    os << "pt_min " << fmt_double(c.pt_min) << "\n";
    os << "pt_max " << fmt_double(c.pt_max) << "\n";
    os << "breakdown_horizon " << fmt_double(c.breakdown_horizon) << "\n";
    os << "[layout]\n";
    os << "nodes " << s.layout.n_nodes << "\n";
    for (int a = 0; a < s.layout.n_nodes; ++a) {
        os << "row";
        for (int b = 0; b < s.layout.n_nodes; ++b) os << " " << fmt_double(s.layout.at(a, b));
        os << "\n";
    }
    os << "[products]\n";
    for (std::size_t p = 0; p < s.products.size(); ++p) {
        os << "product " << p << " ops " << s.products[p].ops.size() << "\n";
        for (std::size_t o = 0; o < s.products[p].ops.size(); ++o) {
            const auto& op = s.products[p].ops[o];
            os << "route " << p << " " << o;
            for (int ws : op.eligible) os << " " << ws;
            os << "\n";
        }
    }
    os << "[processing_times]\n";
    for (std::size_t p = 0; p < s.products.size(); ++p)
        for (std::size_t o = 0; o < s.products[p].ops.size(); ++o) {
            const auto& op = s.products[p].ops[o];
            for (std::size_t i = 0; i < op.eligible.size(); ++i)
                os << "pt " << p << " " << o << " " << op.eligible[i] << " "
                   << fmt_double(op.proc_time[i]) << "\n";
        }
    os << "[jobs]\n";
    for (std::size_t j = 0; j < s.jobs.size(); ++j) {
        const auto& job = s.jobs[j];
        os << "job " << j << " " << job.product << " " << fmt_double(job.arrival) << " "
           << fmt_double(job.t_draw) << " " << fmt_double(job.due) << "\n";
    }
    os << "[breakdowns]\n";
    for (std::size_t w = 0; w < s.breakdowns.size(); ++w) {
        os << "ws " << w << " " << s.breakdowns[w].size() << "\n";
        for (const auto& bw : s.breakdowns[w])
            os << "window " << fmt_double(bw.start) << " " << fmt_double(bw.duration) << "\n";
    }
    os << "end\n";
    return os.str();
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << scenario_to_string(s);
    if (!f) throw std::runtime_error("write failed: " + path);
}

namespace {

class LineParser {
public:
    explicit LineParser(const std::string& text) : in_(text) {}

    // Next meaningful line, skipping blanks and # comments.
    bool next(std::string& out) {
        std::string line;
        while (std::getline(in_, line)) {
            ++lineno_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            std::size_t i = line.find_first_not_of(" \t");
            if (i == std::string::npos || line[i] == '#') continue;
            out = line;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::runtime_error("scenario parse error at line " + std::to_string(lineno_) + ": " + msg);
    }

    std::string expect(const std::string& what) {
        std::string line;
        if (!next(line)) fail("unexpected end of file, expected " + what);
        return line;
    }

private:
    std::istringstream in_;
    int lineno_ = 0;
};

double parse_double(LineParser& p, std::istringstream& ss, const char* field) {
    std::string tok;
    if (!(ss >> tok)) p.fail(std::string("missing field ") + field);
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') p.fail(std::string("bad number in field ") + field);
    return v;
}

long long parse_int(LineParser& p, std::istringstream& ss, const char* field) {
    long long v;
    if (!(ss >> v)) p.fail(std::string("missing integer field ") + field);
    return v;
}

std::string parse_word(LineParser& p, std::istringstream& ss, const char* field) {
    std::string w;
    if (!(ss >> w)) p.fail(std::string("missing field ") + field);
    return w;
}

} // namespace

Scenario scenario_from_string(const std::string& text) {
    LineParser p(text);
    if (p.expect("header") != "aivshop-scenario v1") p.fail("bad header, expected 'aivshop-scenario v1'");
    if (p.expect("[config]") != "[config]") p.fail("expected [config]");

    Scenario s;
    auto& c = s.config;
    std::string line;
    while (true) {
        line = p.expect("config entry or [layout]");
        if (line == "[layout]") break;
        std::istringstream ss(line);
        std::string key = parse_word(p, ss, "key");
        if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(p, ss, "seed"));
        else if (key == "layout_seed") c.layout_seed = static_cast<std::uint64_t>(parse_int(p, ss, "layout_seed"));
        else if (key == "jobs") c.n_jobs = static_cast<int>(parse_int(p, ss, "jobs"));
        else if (key == "products") c.n_products = static_cast<int>(parse_int(p, ss, "products"));
        else if (key == "workstations") c.n_workstations = static_cast<int>(parse_int(p, ss, "workstations"));
        else if (key == "charging_stations") c.n_charging = static_cast<int>(parse_int(p, ss, "charging_stations"));
        else if (key == "aivs") c.aiv_count = static_cast<int>(parse_int(p, ss, "aivs"));
        else if (key == "aiv_capacity") c.aiv_capacity = static_cast<int>(parse_int(p, ss, "aiv_capacity"));
        else if (key == "charge_threshold") c.charge_threshold = parse_double(p, ss, "charge_threshold");
        else if (key == "recharge_duration") c.recharge_duration = parse_double(p, ss, "recharge_duration");
        else if (key == "arrival_mean") c.arrival_mean = parse_double(p, ss, "arrival_mean");
        else if (key == "due_t_mu") c.due_t_mu = parse_double(p, ss, "due_t_mu");
        else if (key == "due_t_sigma") c.due_t_sigma = parse_double(p, ss, "due_t_sigma");
        else if (key == "tbi_mean") c.tbi_mean = parse_double(p, ss, "tbi_mean");
        else if (key == "trf_mean") c.trf_mean = parse_double(p, ss, "trf_mean");
        else if (key == "layout_min") c.layout_min = parse_double(p, ss, "layout_min");
        else if (key == "layout_max") c.layout_max = parse_double(p, ss, "layout_max");
        else if (key == "pt_min") c.pt_min = parse_double(p, ss, "pt_min");
        else if (key == "pt_max") c.pt_max = parse_double(p, ss, "pt_max");
        else if (key == "breakdown_horizon") c.breakdown_horizon = parse_double(p, ss, "breakdown_horizon");
        else p.fail("unknown config key '" + key + "'");
    }

    {
        std::istringstream ss(p.expect("nodes"));
        if (parse_word(p, ss, "nodes") != "nodes") p.fail("expected 'nodes'");
        s.layout.n_nodes = static_cast<int>(parse_int(p, ss, "node count"));
        if (s.layout.n_nodes != 1 + c.n_workstations + c.n_charging)
            p.fail("node count does not match workstation/charging configuration");
        s.layout.transfer.assign(static_cast<std::size_t>(s.layout.n_nodes) * s.layout.n_nodes, 0.0);
        for (int a = 0; a < s.layout.n_nodes; ++a) {
            std::istringstream row(p.expect("layout row"));
            if (parse_word(p, row, "row") != "row") p.fail("expected 'row'");
            for (int b = 0; b < s.layout.n_nodes; ++b)
                s.layout.at(a, b) = parse_double(p, row, "transfer time");
        }
    }

    if (p.expect("[products]") != "[products]") p.fail("expected [products]");
    s.products.resize(c.n_products);
    for (int prod = 0; prod < c.n_products; ++prod) {
        std::istringstream ss(p.expect("product"));
        if (parse_word(p, ss, "product") != "product") p.fail("expected 'product'");
        int idx = static_cast<int>(parse_int(p, ss, "product index"));
        if (idx != prod) p.fail("products out of order");
        if (parse_word(p, ss, "ops") != "ops") p.fail("expected 'ops'");
        int nops = static_cast<int>(parse_int(p, ss, "op count"));
        s.products[prod].ops.resize(nops);
        for (int o = 0; o < nops; ++o) {
            std::istringstream rr(p.expect("route"));
            if (parse_word(p, rr, "route") != "route") p.fail("expected 'route'");
            if (parse_int(p, rr, "product") != prod || parse_int(p, rr, "op") != o)
                p.fail("route indices out of order");
            int ws;
            while (rr >> ws) {
                if (ws < 0 || ws >= c.n_workstations) p.fail("route workstation out of range");
                s.products[prod].ops[o].eligible.push_back(ws);
            }
            if (s.products[prod].ops[o].eligible.empty()) p.fail("operation with empty eligible set");
            s.products[prod].ops[o].proc_time.assign(s.products[prod].ops[o].eligible.size(), 0.0);
        }
    }

    if (p.expect("[processing_times]") != "[processing_times]") p.fail("expected [processing_times]");
    while (true) {
        line = p.expect("pt entry or [jobs]");
        if (line == "[jobs]") break;
        std::istringstream ss(line);
        if (parse_word(p, ss, "pt") != "pt") p.fail("expected 'pt'");
        int prod = static_cast<int>(parse_int(p, ss, "product"));
        int o = static_cast<int>(parse_int(p, ss, "op"));
        int ws = static_cast<int>(parse_int(p, ss, "workstation"));
        double v = parse_double(p, ss, "time");
        if (prod < 0 || prod >= c.n_products) p.fail("pt product out of range");
        if (o < 0 || o >= static_cast<int>(s.products[prod].ops.size())) p.fail("pt op out of range");
        auto& op = s.products[prod].ops[o];
        if (v <= 0) p.fail("processing time must be positive");
        bool found = false;
        for (std::size_t i = 0; i < op.eligible.size(); ++i)
            if (op.eligible[i] == ws) {
                op.proc_time[i] = v;
                found = true;
            }
        if (!found) p.fail("pt workstation not in eligible set");
    }

    s.jobs.resize(c.n_jobs);
    while (true) {
        line = p.expect("job entry or [breakdowns]");
        if (line == "[breakdowns]") break;
        std::istringstream ss(line);
        if (parse_word(p, ss, "job") != "job") p.fail("expected 'job'");
        int j = static_cast<int>(parse_int(p, ss, "job index"));
        if (j < 0 || j >= c.n_jobs) p.fail("job index out of range");
        s.jobs[j].product = static_cast<int>(parse_int(p, ss, "product"));
        if (s.jobs[j].product < 0 || s.jobs[j].product >= c.n_products) p.fail("job product out of range");
        s.jobs[j].arrival = parse_double(p, ss, "arrival");
        s.jobs[j].t_draw = parse_double(p, ss, "t_draw");
        s.jobs[j].due = parse_double(p, ss, "due");
    }

    s.breakdowns.resize(c.n_workstations);
    for (int w = 0; w < c.n_workstations; ++w) {
        std::istringstream ss(p.expect("ws breakdown header"));
        if (parse_word(p, ss, "ws") != "ws") p.fail("expected 'ws'");
        if (parse_int(p, ss, "ws index") != w) p.fail("breakdown workstations out of order");
        int count = static_cast<int>(parse_int(p, ss, "window count"));
        for (int i = 0; i < count; ++i) {
            std::istringstream ww(p.expect("window"));
            if (parse_word(p, ww, "window") != "window") p.fail("expected 'window'");
            BreakdownWindow bw;
            bw.start = parse_double(p, ww, "start");
            bw.duration = parse_double(p, ww, "duration");
            if (bw.duration <= 0) p.fail("breakdown duration must be positive");
            s.breakdowns[w].push_back(bw);
        }
    }
    if (p.expect("end") != "end") p.fail("expected 'end'");

    // Validate the parts the simulator relies on.
    for (int prod = 0; prod < c.n_products; ++prod)
        for (const auto& op : s.products[prod].ops)
            for (double v : op.proc_time)
                if (v <= 0) throw std::runtime_error("scenario missing processing time for an eligible pair");
    for (int a = 0; a < s.layout.n_nodes; ++a) {
        if (s.layout.at(a, a) != 0) throw std::runtime_error("layout diagonal must be zero");
        for (int b = 0; b < s.layout.n_nodes; ++b)
            if (s.layout.at(a, b) != s.layout.at(b, a))
                throw std::runtime_error("layout must be symmetric");
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open scenario file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return scenario_from_string(buf.str());
}

} // namespace aivshop
