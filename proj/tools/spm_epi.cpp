// spm_epi: command-line front end for simulation, trace reconstruction, model
// selection, ABC inference, phase-transition sweeps and graph statistics.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spm/abc.hpp"
#include "spm/errors.hpp"
#include "spm/graph.hpp"
#include "spm/model_select.hpp"
#include "spm/models.hpp"
#include "spm/nlds.hpp"
#include "spm/stochastic.hpp"
#include "spm/trace.hpp"
#include "spm/trajectory.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spm;

namespace {

constexpr const char* kVersion = "1.0.0";

// Files produced by a command. On failure every registered file is removed.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    fs::path add(const std::string& name) {
        fs::path p = dir_ / name;
        files_.push_back(p);
        return p;
    }

    std::ofstream open(const std::string& name) {
        std::ofstream out(add(name));
        if (!out) throw InvalidInput("cannot write " + (dir_ / name).string());
        return out;
    }

    void write_json(const std::string& name, const json& j) {
        auto out = open(name);
        out << j.dump(2) << '\n';
        if (!out) throw InvalidInput("failed writing " + name);
    }

    void remove_all() noexcept {
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& f : files_) out.push_back(f.filename().string());
        return out;
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out = "spm_out";
    std::string config;
    bool verbose = false;

    std::uint64_t resolved_seed = 0;
    std::string seed_source = "default";
};

// ---------------------------------------------------------------- config file

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("config line lacks '='", line_no);
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

// Deepest selected subcommand.
CLI::App* active(CLI::App& app) {
    CLI::App* cur = &app;
    while (true) {
        auto subs = cur->get_subcommands();
        if (subs.empty()) return cur;
        cur = subs.front();
    }
}

CLI::Option* find_option(CLI::App* leaf, const std::string& key) {
    for (CLI::App* a = leaf; a != nullptr; a = a->get_parent()) {
        if (auto* opt = a->get_option_no_throw("--" + key)) return opt;
    }
    return nullptr;
}

// ---------------------------------------------------------------- helpers

std::vector<double> parse_s_values(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a = 0, b = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream is(text);
        if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || b < a) {
            throw InvalidInput("s range must look like start:stop:step");
        }
        const auto count = static_cast<int>(std::floor((b - a) / step + 1e-9));
        // Round to 12 significant digits so 0.1:2.0:0.1 yields 1.4, not 1.4000000000000001.
        for (int i = 0; i <= count; ++i) {
            std::ostringstream v;
            v.precision(12);
            v << a + i * step;
            out.push_back(std::stod(v.str()));
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    if (out.empty()) throw InvalidInput("no s values given");
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

json rates_json(ModelKind model, const RateParams& p) {
    json j;
    const auto names = free_parameter_names(model);
    const auto values = free_parameter_values(model, p);
    for (std::size_t i = 0; i < names.size(); ++i) j[std::string(names[i])] = values[i];
    j["dt"] = p.dt;
    return j;
}

// ---------------------------------------------------------------- graph source

struct GraphSource {
    std::string kind;  // er, ba, ws, cm, sf, or empty with an edge list
    std::string edgelist;
    std::size_t n = 1000;
    std::size_t m = 0;
    std::size_t k = 4;
    double p = 0.0;
    double exponent = 2.5;
    std::size_t min_degree = 1;
    std::string degrees;
    std::uint64_t graph_seed = 1;

    void add(CLI::App* cmd) {
        cmd->add_option("--graph", kind, "Generator: er, ba, ws, cm, sf")
            ->check(CLI::IsMember({"er", "ba", "ws", "cm", "sf"}));
        cmd->add_option("--edgelist", edgelist, "Edge-list file instead of a generator");
        cmd->add_option("--n", n, "Node count for generators");
        cmd->add_option("--m", m, "ER edge count, or BA edges per new node");
        cmd->add_option("--k", k, "WS ring degree (even)");
        cmd->add_option("--p", p, "WS rewiring probability");
        cmd->add_option("--exponent", exponent, "SF power-law exponent");
        cmd->add_option("--min-degree", min_degree, "SF minimum degree");
        cmd->add_option("--degrees", degrees, "CM degree sequence file (one degree per line)");
        cmd->add_option("--graph-seed", graph_seed, "Generator seed");
    }

    bool is_generated() const { return edgelist.empty(); }

    std::string label() const { return edgelist.empty() ? kind : fs::path(edgelist).stem().string(); }

    Graph build(bool verbose) const {
        if (!edgelist.empty()) {
            if (!kind.empty()) throw InvalidInput("give either --graph or --edgelist, not both");
            const auto load = load_edgelist(edgelist);
            if (verbose) {
                std::cerr << "loaded " << load.lines << " edge lines, dropped " << load.dropped << '\n';
            }
            return load.graph;
        }
        if (kind.empty()) throw InvalidInput("one of --graph or --edgelist is required");
        if (kind == "er") return generate(n, ErParams{m}, graph_seed);
        if (kind == "ba") return generate(n, BaParams{m}, graph_seed);
        if (kind == "ws") return generate(n, WsParams{k, p}, graph_seed);
        if (kind == "sf") return generate(n, SfParams{exponent, min_degree}, graph_seed);
        // cm
        if (degrees.empty()) throw InvalidInput("--graph cm needs --degrees FILE");
        std::ifstream in(degrees);
        if (!in) throw InvalidInput("cannot open degree file '" + degrees + "'");
        std::vector<std::size_t> seq;
        std::size_t d = 0;
        while (in >> d) seq.push_back(d);
        if (!in.eof()) throw InvalidInput("degree file must contain non-negative integers");
        return generate(seq.size(), CmParams{seq}, graph_seed);
    }
};

// ---------------------------------------------------------------- commands

struct SimulateCmd {
    std::string model;
    double beta = 0, mu = 0, gamma1 = 0, gamma2 = 0, sigma = 0, dt = 1.0;
    double population = 1000;
    double infected = 1;
    int steps = 100;
    std::string mode = "ode";
    int h = 10;
    bool realizations = false;

    void add(CLI::App* cmd) {
        cmd->add_option("--model", model, "si, sis, sir, seir or siidr")->required();
        cmd->add_option("--beta", beta, "Infection rate");
        cmd->add_option("--mu", mu, "Recovery rate");
        cmd->add_option("--gamma1", gamma1, "I -> I_D rate");
        cmd->add_option("--gamma2", gamma2, "I_D -> I rate");
        cmd->add_option("--sigma", sigma, "E -> I rate (SEIR)");
        cmd->add_option("--dt", dt, "Time step");
        cmd->add_option("--population", population, "Population size N");
        cmd->add_option("--infected", infected, "Initially infected");
        cmd->add_option("--steps", steps, "Number of steps");
        cmd->add_option("--mode", mode, "ode or stochastic")->check(CLI::IsMember({"ode", "stochastic"}));
        cmd->add_option("--h", h, "Stochastic realizations averaged");
        cmd->add_flag("--realizations", realizations, "Also write every stochastic realization");
    }

    json run(const Globals& g, Outputs& out) const {
        const ModelSpec& spec = ModelSpec::get(parse_model(model));
        RateParams p;
        p.beta = beta;
        p.mu = mu;
        p.gamma1 = gamma1;
        p.gamma2 = gamma2;
        p.sigma = sigma;
        p.dt = dt;
        p.validate();
        const auto init = CompartmentState::seeded(spec, population, infected);
        std::optional<Trajectory> traj;
        if (mode == "ode") {
            traj = integrate_ode(spec, p, init, steps);
        } else {
            SimConfig cfg;
            cfg.steps = steps;
            cfg.seed = g.resolved_seed;
            cfg.realizations = h;
            if (realizations) {
                const auto runs = simulate_ensemble(spec, p, init, cfg);
                auto f = out.open("realizations.csv");
                for (std::size_t r = 0; r < runs.size(); ++r) runs[r].write_csv(f, static_cast<int>(r), r == 0);
            }
            traj = simulate_avg(spec, p, init, cfg);
        }
        {
            auto f = out.open("trajectory.csv");
            traj->write_csv(f);
        }
        const std::size_t i_idx = *spec.index_of("I");
        double peak = -1;
        std::size_t peak_step = 0;
        for (std::size_t t = 0; t < traj->size(); ++t) {
            if (traj->at(t, i_idx) > peak) {
                peak = traj->at(t, i_idx);
                peak_step = t;
            }
        }
        json summary;
        summary["model"] = std::string(spec.name);
        summary["mode"] = mode;
        summary["params"] = rates_json(spec.kind, p);
        summary["population"] = population;
        summary["steps"] = steps;
        if (mode == "stochastic") {
            summary["realizations"] = h;
            summary["seed"] = g.resolved_seed;
        }
        json final_counts;
        const auto last = traj->row(traj->size() - 1);
        for (std::size_t c = 0; c < spec.size(); ++c) final_counts[std::string(spec.compartments[c])] = last[c];
        summary["final"] = final_counts;
        summary["final_cumulative_infected"] = traj->cumulative_infected(traj->size() - 1);
        summary["peak_infected"] = peak;
        summary["peak_time"] = traj->time(peak_step);
        summary["r0"] = mu > 0 ? json(r0(p)) : json(nullptr);
        out.write_json("summary.json", summary);
        return summary;
    }
};

struct ReconstructCmd {
    std::string log;
    std::string format = "zeek";
    int port = 445;
    std::string internal;
    bool strict = false;
    bool truncate = false;
    int T = 100;

    void add(CLI::App* cmd) {
        cmd->add_option("--log", log, "Connection log")->required();
        cmd->add_option("--format", format, "zeek or csv")->check(CLI::IsMember({"zeek", "csv"}));
        cmd->add_option("--port", port, "Malicious destination port");
        cmd->add_option("--internal", internal, "Comma-separated internal CIDR prefixes (default RFC 1918)");
        cmd->add_flag("--strict", strict, "Fail on the first malformed row");
        cmd->add_flag("--truncate", truncate, "Cut the trace at the last new infection");
        cmd->add_option("--T", T, "Number of timestamps for dt");
    }

    json run(const Globals& g, Outputs& out) const {
        const auto parsed = parse_log(log, {parse_log_format(format), strict});
        if (g.verbose) std::cerr << parsed.records.size() << " records, " << parsed.skipped << " skipped\n";
        ReconstructOptions opts;
        opts.malicious_port = port;
        if (!internal.empty()) {
            opts.internal.clear();
            for (const auto& c : split_list(internal)) opts.internal.push_back(Ipv4Prefix::parse(c));
        }
        EpidemicTrace trace = reconstruct(parsed.records, opts);
        if (truncate) trace = truncate_plateau(trace);
        const DeltaStats deltas = delta_stats(parsed.records, trace, opts);
        {
            auto f = out.open("trace.csv");
            write_trace_csv(f, trace);
        }
        {
            auto f = out.open("gaps.csv");
            f.precision(12);
            f << "kind,gap\n";
            for (double d : deltas.consecutive_gaps) f << "consecutive," << d << '\n';
            for (double d : deltas.tail_gaps) f << "tail," << d << '\n';
        }
        json summary = trace_summary_json(trace, &deltas, T);
        summary["records"] = parsed.records.size();
        summary["skipped_rows"] = parsed.skipped;
        summary["truncated"] = truncate;
        out.write_json("summary.json", summary);
        return summary;
    }
};

FitTarget load_target(const std::string& path, int T, long population, long initial, bool verbose) {
    const EpidemicTrace trace = read_trace_csv(path);
    if (population <= 0 && verbose) {
        std::cerr << "no --population given; using the final infected count " << trace.infected_ips << '\n';
    }
    return make_target(trace, T, population, initial);
}

struct SelectCmd {
    std::string trace;
    std::string models = "si,sis,sir,seir,siidr";
    std::string grid = "beta=20,mu=20,gamma1=10,gamma2=10";
    int h = 10;
    int T = 100;
    long population = 0;
    long initial = 1;
    std::string name;

    void add(CLI::App* cmd) {
        cmd->add_option("--trace", trace, "Trace CSV (t,cumulative_infected)")->required();
        cmd->add_option("--models", models, "Comma-separated model list");
        cmd->add_option("--grid", grid, "Grid counts, e.g. beta=20,mu=20,gamma1=10,gamma2=10");
        cmd->add_option("--h", h, "Realizations per grid point");
        cmd->add_option("--T", T, "Number of resampled points / simulation steps");
        cmd->add_option("--population", population, "Population size (default: contacted hosts in the trace)");
        cmd->add_option("--initial-infected", initial, "Initially infected hosts");
        cmd->add_option("--name", name, "Trace label in the outputs");
    }

    json run(const Globals& g, Outputs& out) const {
        const FitTarget target = load_target(trace, T, population, initial, g.verbose);
        std::vector<ModelKind> kinds;
        for (const auto& m : split_list(models)) kinds.push_back(parse_model(m));
        const auto report = select_model(target, kinds, GridSpec::parse(grid), {h, g.resolved_seed});
        const std::string label = name.empty() ? fs::path(trace).stem().string() : name;
        json j = selection_json(report, label);
        j["T"] = T;
        j["dt"] = target.dt;
        j["population"] = target.population;
        j["h"] = h;
        j["seed"] = g.resolved_seed;
        out.write_json("selection.json", j);
        auto f = out.open("selection.csv");
        write_selection_csv(f, report, label);
        return j;
    }
};

struct InferCmd {
    std::string trace;
    int T = 100;
    long population = 0;
    long initial = 1;
    AbcConfig abc;

    void add(CLI::App* cmd) {
        cmd->add_option("--trace", trace, "Trace CSV (t,cumulative_infected)")->required();
        cmd->add_option("--T", T, "Number of resampled points / simulation steps");
        cmd->add_option("--population", population, "Population size (default: contacted hosts in the trace)");
        cmd->add_option("--initial-infected", initial, "Initially infected hosts");
        cmd->add_option("--particles", abc.particles, "Particles per generation (N)");
        cmd->add_option("--generations", abc.generations, "Generations (G)");
        cmd->add_option("--neighbors", abc.neighbors, "Nearest neighbours for the kernel (M)");
        cmd->add_option("--sims", abc.n_sims, "Simulations per proposal");
        cmd->add_option("--budget-factor", abc.budget_factor, "Proposal budget per generation, in units of N");
        cmd->add_option("--pilot", abc.pilot_draws, "Pilot prior draws for the first tolerance");
    }

    json run(const Globals& g, Outputs& out) const {
        const FitTarget target = load_target(trace, T, population, initial, g.verbose);
        AbcConfig cfg = abc;
        cfg.seed = g.resolved_seed;
        const auto history = abc_smc_mnn(target, cfg);
        {
            auto f = out.open("populations.csv");
            write_population_csv(f, history);
        }
        const auto summary = posterior_summary(history.back());
        json j = posterior_json(summary, history, target.dt);
        j["particles"] = cfg.particles;
        j["seed"] = cfg.seed;
        out.write_json("posterior.json", j);
        return j;
    }
};

struct SweepCmd {
    GraphSource source;
    std::string s_values = "0.1:2.0:0.1";
    std::string init;
    SweepConfig cfg;

    void add(CLI::App* cmd) {
        source.add(cmd);
        cmd->add_option("--s", s_values, "Threshold values: start:stop:step or a comma list");
        cmd->add_option("--init", init, "Initial infection: a node count, or a fraction like 5%");
        cmd->add_option("--runs", cfg.runs, "Realizations per s value");
        cmd->add_option("--seeds", cfg.seeds, "Distinct initial-infection draws");
        cmd->add_option("--mu", cfg.mu, "Recovery rate");
        cmd->add_option("--gamma1", cfg.gamma1, "I -> I_D rate");
        cmd->add_option("--gamma2", cfg.gamma2, "I_D -> I rate");
        cmd->add_option("--max-steps", cfg.max_steps, "Step cap per realization");
    }

    json run(const Globals& g, Outputs& out) const {
        const Graph graph = source.build(g.verbose);
        SweepConfig c = cfg;
        c.seed = g.resolved_seed;
        if (init.empty()) {
            // One seed node for ER/BA/WS, 5% of nodes otherwise.
            const bool single = source.kind == "er" || source.kind == "ba" || source.kind == "ws";
            c.init = single ? InitialInfection{InitialInfection::Kind::Count, 1.0}
                            : InitialInfection{InitialInfection::Kind::Fraction, 0.05};
        } else if (init.back() == '%') {
            c.init = {InitialInfection::Kind::Fraction, std::stod(init.substr(0, init.size() - 1)) / 100.0};
        } else {
            c.init = {InitialInfection::Kind::Count, std::stod(init)};
        }
        const double lambda = leading_eigenvalue(graph, c.eigen_tol);
        const auto rows = phase_transition_sweep(graph, lambda, parse_s_values(s_values), c);
        {
            auto f = out.open("sweep.csv");
            write_sweep_csv(f, rows);
        }
        json j;
        j["graph"] = source.label();
        j["nodes"] = graph.node_count();
        j["edges"] = graph.edge_count();
        j["lambda_a"] = lambda;
        j["mu_step"] = NldsParams::from_rates(0.0, c.mu, c.gamma1, c.gamma2).mu();
        j["initially_infected"] = c.init.nodes(graph.node_count());
        j["runs"] = c.runs;
        const SweepRow* threshold = nullptr;
        for (const auto& r : rows) {
            if (r.mean_r > 0.05) {
                threshold = &r;
                break;
            }
        }
        j["first_s_above_5pct"] = threshold ? json(threshold->s) : json(nullptr);
        out.write_json("sweep.json", j);
        return j;
    }
};

struct GraphCmd {
    GraphSource source;
    double tol = 1e-10;

    void add(CLI::App* cmd) {
        source.add(cmd);
        cmd->add_option("--tol", tol, "Power-iteration tolerance");
    }

    json stats_cmd(const Globals& g, Outputs& out) const {
        const Graph graph = source.build(g.verbose);
        const auto s = stats(graph, tol);
        const auto j = json::parse(stats_json(s, source.label()));
        out.write_json("stats.json", j);
        auto f = out.open("stats.csv");
        f << stats_csv_header() << '\n' << stats_csv_row(s, source.label()) << '\n';
        return j;
    }

    json eigen_cmd(const Globals& g, Outputs& out) const {
        const Graph graph = source.build(g.verbose);
        json j;
        j["graph"] = source.label();
        j["lambda_a"] = leading_eigenvalue(graph, tol);
        j["average_degree"] = graph.average_degree();
        j["max_degree"] = graph.max_degree();
        out.write_json("eigen.json", j);
        return j;
    }

    json generate_cmd(const Globals& g, Outputs& out) const {
        if (!source.is_generated()) throw InvalidInput("graph generate needs --graph");
        const Graph graph = source.build(g.verbose);
        {
            auto f = out.open("edges.txt");
            write_edgelist(f, graph);
        }
        json j;
        j["graph"] = source.label();
        j["nodes"] = graph.node_count();
        j["edges"] = graph.edge_count();
        out.write_json("graph.json", j);
        return j;
    }
};

json describe_options(const CLI::App* app) {
    json j;
    for (const CLI::App* a = app; a != nullptr; a = a->get_parent()) {
        for (const CLI::Option* opt : a->get_options()) {
            const std::string name = opt->get_single_name();
            if (name.empty() || name == "help" || name == "config" || j.contains(name)) continue;
            const auto& res = opt->results();
            if (!res.empty()) {
                j[name] = res.back();
            } else if (!opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
    }
    return j;
}

std::string command_path(const CLI::App* leaf) {
    std::vector<std::string> parts;
    for (const CLI::App* a = leaf; a != nullptr && a->get_parent() != nullptr; a = a->get_parent()) {
        parts.push_back(a->get_name());
    }
    std::reverse(parts.begin(), parts.end());
    std::string s;
    for (const auto& p : parts) s += (s.empty() ? "" : " ") + p;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-propagating malware epidemic models: simulation, fitting and network thresholds"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h

    Globals g;
    app.add_option("--seed", g.seed, "Base seed (falls back to SPM_EPI_SEED, then 0)");
    app.add_option("--threads", g.threads, "OpenMP threads (default: all cores)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--config", g.config, "key=value file; command-line flags take precedence");
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

    SimulateCmd simulate;
    ReconstructCmd reconstruct_cmd;
    SelectCmd select;
    InferCmd infer;
    SweepCmd sweep;
    GraphCmd graph;

    auto* c_sim = app.add_subcommand("simulate", "ODE or chain-binomial trajectories");
    simulate.add(c_sim);
    auto* c_rec = app.add_subcommand("reconstruct", "Epidemic curve from a connection log");
    reconstruct_cmd.add(c_rec);
    auto* c_sel = app.add_subcommand("select", "AIC grid-search model selection");
    select.add(c_sel);
    auto* c_inf = app.add_subcommand("infer", "ABC-SMC posterior of SIIDR rates");
    infer.add(c_inf);
    auto* c_swp = app.add_subcommand("sweep", "Phase-transition sweep on a graph");
    sweep.add(c_swp);
    auto* c_graph = app.add_subcommand("graph", "Graph statistics, leading eigenvalue, generation");
    c_graph->require_subcommand(1);
    c_graph->fallthrough();
    graph.add(c_graph);
    auto* c_stats = c_graph->add_subcommand("stats", "Topological statistics");
    auto* c_eigen = c_graph->add_subcommand("eigen", "Leading adjacency eigenvalue");
    auto* c_gen = c_graph->add_subcommand("generate", "Write a generated graph as an edge list");
    for (auto* sub : {c_stats, c_eigen, c_gen}) sub->fallthrough();

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        app.parse(argc, argv);
        if (!g.config.empty()) {
            // Re-parse with config entries appended for every option the user left unset.
            std::vector<std::string> extra;
            CLI::App* leaf = active(app);
            for (const auto& [key, value] : read_config(g.config)) {
                CLI::Option* opt = find_option(leaf, key);
                if (opt == nullptr || key == "config") throw InvalidInput("unknown config key '" + key + "'");
                if (opt->count() == 0) extra.push_back("--" + key + "=" + value);
            }
            std::vector<std::string> all = args;
            all.insert(all.end(), extra.begin(), extra.end());
            std::reverse(all.begin(), all.end());
            app.clear();
            app.parse(all);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    if (g.seed) {
        g.resolved_seed = *g.seed;
        g.seed_source = "flag";
    } else if (const char* env = std::getenv("SPM_EPI_SEED")) {
        try {
            g.resolved_seed = std::stoull(env);
            g.seed_source = "SPM_EPI_SEED";
        } catch (const std::exception&) {
            std::cerr << "error: SPM_EPI_SEED is not an unsigned integer\n";
            return 2;
        }
    }
    const int threads = g.threads > 0 ? g.threads : omp_get_num_procs();
    omp_set_num_threads(threads);

    CLI::App* leaf = active(app);
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory '" << g.out << "': " << ec.message() << '\n';
        return 2;
    }
    Outputs out(g.out);
    try {
        json result;
        if (leaf == c_sim) result = simulate.run(g, out);
        else if (leaf == c_rec) result = reconstruct_cmd.run(g, out);
        else if (leaf == c_sel) result = select.run(g, out);
        else if (leaf == c_inf) result = infer.run(g, out);
        else if (leaf == c_swp) result = sweep.run(g, out);
        else if (leaf == c_stats) result = graph.stats_cmd(g, out);
        else if (leaf == c_eigen) result = graph.eigen_cmd(g, out);
        else if (leaf == c_gen) result = graph.generate_cmd(g, out);

        json manifest;
        manifest["tool"] = "spm_epi";
        manifest["version"] = kVersion;
        manifest["command"] = command_path(leaf);
        manifest["seed"] = g.resolved_seed;
        manifest["seed_source"] = g.seed_source;
        manifest["threads"] = threads;
        manifest["config_file"] = g.config.empty() ? json(nullptr) : json(g.config);
        manifest["options"] = describe_options(leaf);
        manifest["outputs"] = out.names();
        out.write_json("manifest.json", manifest);
        if (g.verbose) std::cout << result.dump(2) << '\n';
    } catch (const BudgetExhausted& e) {
        out.remove_all();
        std::cerr << "error: " << e.what() << " (epsilon " << e.epsilon() << ")\n";
        return 3;
    } catch (const EmptyEpidemic& e) {
        out.remove_all();
        std::cerr << "error: empty epidemic: " << e.what() << '\n';
        return 4;
    } catch (const ParseError& e) {
        out.remove_all();
        std::cerr << "error: line " << e.line() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        out.remove_all();
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
