#include "cli.hpp"

#include "seqcamo/cnf.hpp"
#include "seqcamo/oracle.hpp"
#include "seqcamo/random_circuit.hpp"
#include "seqcamo/sat.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace seqcamo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// RunRecord

json to_json(const RunRecord& r)
{
    return json{{"benchmark", r.benchmark},       {"k", r.k},
                {"seed", r.seed},                 {"disc_set_size", r.disc_size},
                {"max_length", r.max_length},     {"seconds", r.seconds},
                {"termination", r.termination},   {"gates_fixed", r.gates_fixed},
                {"success", r.success}};
}

RunRecord record_from_json(const json& j)
{
    try {
        RunRecord r;
        r.benchmark = j.at("benchmark").get<std::string>();
        r.k = j.at("k").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.disc_size = j.at("disc_set_size").get<std::size_t>();
        r.max_length = j.at("max_length").get<std::size_t>();
        r.seconds = j.at("seconds").get<double>();
        r.termination = j.at("termination").get<std::string>();
        r.gates_fixed = j.at("gates_fixed").get<std::size_t>();
        r.success = j.at("success").get<bool>();
        attack::parse_termination(r.termination);
        if (r.success && r.termination != "UC" && r.termination != "CE" && r.termination != "UMC")
            throw UsageError("successful run with termination " + r.termination);
        return r;
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed run record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("malformed run record: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Camouflaging

std::vector<GateKind> parse_candidates(const std::string& list)
{
    std::vector<GateKind> out;
    std::stringstream ss(list);
    std::string tag;
    while (std::getline(ss, tag, ',')) {
        const auto kind = parse_gate_kind(tag);
        if (!kind || *kind == GateKind::Hidden)
            throw UsageError("unknown candidate function '" + tag + "'");
        if (std::find(out.begin(), out.end(), *kind) != out.end())
            throw UsageError("duplicate candidate function '" + tag + "'");
        out.push_back(*kind);
    }
    if (out.size() < 2)
        throw UsageError("at least two candidate functions are required");
    return out;
}

std::vector<std::string> select_gates(const Circuit& c, std::size_t k, const std::vector<GateKind>& candidates,
                                      std::uint64_t seed)
{
    std::vector<std::string> eligible;
    for (const Gate& g : c.gates())
        if (std::find(candidates.begin(), candidates.end(), g.kind) != candidates.end() &&
            arity_ok(candidates.front(), g.inputs.size()) &&
            std::all_of(candidates.begin(), candidates.end(),
                        [&](GateKind kind) { return arity_ok(kind, g.inputs.size()); }))
            eligible.push_back(c.net_name(g.output));
    if (k == 0)
        throw UsageError("k must be positive");
    if (k > eligible.size())
        throw UsageError("only " + std::to_string(eligible.size()) + " eligible gates in " + c.name() +
                         ", cannot camouflage " + std::to_string(k));
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    for (std::size_t i : sample_indices(rng, eligible.size(), k))
        out.push_back(eligible[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fmt_seconds(double s)
{
    std::ostringstream o;
    o << std::fixed << std::setprecision(3) << s;
    return o.str();
}

json stats_json(const sat::SolveStats& s)
{
    return json{{"conflicts", s.conflicts},
                {"decisions", s.decisions},
                {"propagations", s.propagations},
                {"seconds", s.seconds}};
}

std::string cell_name(const CamoCircuit& c, std::size_t cell)
{
    const Circuit& base = c.circuit();
    return base.net_name(base.gates()[c.cells()[cell].gate].output);
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out)
        throw UsageError("cannot write '" + path.string() + "'");
    out << text;
}

} // namespace

json report_json(const CamoCircuit& c, const RunRecord& rec, const attack::AttackReport& rep, const json& config)
{
    json cells = json::array();
    for (std::size_t j = 0; j < c.num_cells(); ++j) {
        json cand = json::array();
        for (GateKind k : c.cells()[j].candidates)
            cand.push_back(std::string(to_string(k)));
        cells.push_back(json{{"gate", cell_name(c, j)}, {"candidates", cand}});
    }
    json disc = json::array();
    for (const auto& r : rep.disc_set.records())
        disc.push_back(json{{"input", r.input.to_string()}, {"output", r.output.to_string()}});
    json completions = json::array();
    for (const auto& x : rep.completions)
        completions.push_back(x.choices());
    json iterations = json::array();
    for (const auto& it : rep.iterations)
        iterations.push_back(json{{"bound", it.bound},
                                  {"length", it.length},
                                  {"x1", it.x1.choices()},
                                  {"x2", it.x2.choices()},
                                  {"solver", stats_json(it.stats)},
                                  {"seconds", it.seconds}});
    json checks = json::array();
    for (const auto& ch : rep.checks)
        checks.push_back(json{{"bound", ch.bound},
                              {"check", ch.check},
                              {"outcome", std::string(to_string(ch.outcome))},
                              {"seconds", ch.seconds}});
    json partial = json::array();
    for (std::size_t j = 0; j < rep.partial.size(); ++j) {
        json v{{"gate", cell_name(c, j)}, {"fixed", rep.partial[j].fixed}};
        if (rep.partial[j].fixed)
            v["value"] = std::string(to_string(c.cells()[j].candidates[rep.partial[j].value]));
        partial.push_back(std::move(v));
    }
    return json{{"record", to_json(rec)},
                {"config", config},
                {"circuit",
                 {{"inputs", c.num_inputs()},
                  {"outputs", c.num_outputs()},
                  {"flipflops", c.num_flipflops()},
                  {"gates", c.circuit().gates().size()},
                  {"reset", c.reset_state().to_string()}}},
                {"cells", cells},
                {"disc_set", disc},
                {"completions", completions},
                {"iterations", iterations},
                {"checks", checks},
                {"partial", partial},
                {"queries", rep.queries},
                {"steps", rep.steps},
                {"final_bound", rep.final_bound},
                {"solver", stats_json(rep.solver)}};
}

std::string SummaryRow::termination_column() const
{
    return std::to_string(uc) + "/" + std::to_string(ce) + "/" + std::to_string(umc);
}

std::string SummaryRow::partial_column() const
{
    if (partial.empty())
        return "-";
    std::string s;
    for (const auto& [fixed, count] : partial) {
        if (!s.empty())
            s += ' ';
        s += std::to_string(fixed) + "x" + std::to_string(count);
    }
    return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records)
{
    std::map<std::pair<std::string, std::size_t>, SummaryRow> rows;
    for (const RunRecord& r : records) {
        SummaryRow& row = rows[{r.benchmark, r.k}];
        if (row.runs == 0) {
            row.benchmark = r.benchmark;
            row.k = r.k;
            row.disc_min = row.disc_max = r.disc_size;
            row.steps_min = row.steps_max = r.max_length;
            row.time_min = row.time_max = r.seconds;
        }
        ++row.runs;
        row.disc_min = std::min(row.disc_min, r.disc_size);
        row.disc_max = std::max(row.disc_max, r.disc_size);
        row.steps_min = std::min(row.steps_min, r.max_length);
        row.steps_max = std::max(row.steps_max, r.max_length);
        row.time_min = std::min(row.time_min, r.seconds);
        row.time_max = std::max(row.time_max, r.seconds);
        if (r.termination == "UC")
            ++row.uc;
        else if (r.termination == "CE")
            ++row.ce;
        else if (r.termination == "UMC")
            ++row.umc;
        if (r.success)
            ++row.success;
        else
            ++row.partial[r.gates_fixed];
    }
    std::vector<SummaryRow> out;
    for (auto& [key, row] : rows)
        out.push_back(std::move(row));
    return out;
}

std::string format_table(const std::vector<SummaryRow>& rows)
{
    const std::vector<std::string> head{"benchmark", "k",        "runs",      "disc min", "disc max", "steps min",
                                        "steps max", "time min", "time max",  "UC/CE/UMC", "success", "partial fixed"};
    std::vector<std::vector<std::string>> cells{head};
    for (const auto& r : rows)
        cells.push_back({r.benchmark, std::to_string(r.k), std::to_string(r.runs), std::to_string(r.disc_min),
                         std::to_string(r.disc_max), std::to_string(r.steps_min), std::to_string(r.steps_max),
                         fmt_seconds(r.time_min), fmt_seconds(r.time_max), r.termination_column(),
                         std::to_string(r.success), r.partial_column()});
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& line : cells)
        for (std::size_t i = 0; i < line.size(); ++i)
            width[i] = std::max(width[i], line[i].size());
    std::ostringstream out;
    for (const auto& line : cells) {
        for (std::size_t i = 0; i + 1 < line.size(); ++i)
            out << std::left << std::setw(static_cast<int>(width[i])) << line[i] << "  ";
        out << line.back() << '\n';
    }
    return out.str();
}

std::string format_csv(const std::vector<SummaryRow>& rows)
{
    std::ostringstream out;
    out << "benchmark,k,runs,disc_min,disc_max,steps_min,steps_max,time_min,time_max,uc,ce,umc,success,"
           "partial_fixed\n";
    for (const auto& r : rows)
        out << r.benchmark << ',' << r.k << ',' << r.runs << ',' << r.disc_min << ',' << r.disc_max << ','
            << r.steps_min << ',' << r.steps_max << ',' << fmt_seconds(r.time_min) << ','
            << fmt_seconds(r.time_max) << ',' << r.uc << ',' << r.ce << ',' << r.umc << ',' << r.success << ','
            << (r.partial.empty() ? "" : r.partial_column()) << '\n';
    return out.str();
}

std::vector<RunRecord> load_records(const std::string& dir)
{
    if (!fs::is_directory(dir))
        throw UsageError("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<RunRecord> out;
    for (const auto& f : files) {
        json j;
        try {
            j = json::parse(read_file(f.string()));
        } catch (const json::exception& e) {
            throw UsageError(f.string() + ": " + e.what());
        }
        try {
            out.push_back(record_from_json(j.contains("record") ? j.at("record") : j));
        } catch (const UsageError& e) {
            throw UsageError(f.string() + ": " + e.what());
        }
    }
    if (out.empty())
        throw UsageError("no run records in '" + dir + "'");
    return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct AttackFlags
{
    std::size_t bmc_inc = 10;
    std::size_t max_bound = 120;
    std::string umc_mode = "explicit";
    std::optional<double> solver_timeout;
    std::optional<double> time_limit;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::string solver;
    bool enumerate_all = false;
    std::uint64_t enum_cap = 4096;
    std::uint64_t state_cap = std::uint64_t{1} << 26;
    std::uint64_t transition_cap = std::uint64_t{1} << 28;

    void add_to(CLI::App& app)
    {
        app.add_option("--bmc-inc", bmc_inc, "BMC bound increment")->capture_default_str();
        app.add_option("--max-bound", max_bound, "Largest BMC bound")->capture_default_str();
        app.add_option("--umc-mode", umc_mode, "explicit | bmc-to-diameter | skip")->capture_default_str();
        app.add_option("--solver-timeout", solver_timeout, "Seconds per solver call");
        app.add_option("--time-limit", time_limit, "Seconds for the whole run");
        app.add_option("--seed", seed, "Seed recorded with the run")->capture_default_str();
        app.add_option("--jobs", jobs, "Worker threads")->capture_default_str();
        app.add_option("--solver", solver, "External DIMACS solver command (default: embedded)");
        app.add_flag("--enumerate-all", enumerate_all, "Report every consistent completion");
        app.add_option("--enum-cap", enum_cap, "Completion enumeration cap")->capture_default_str();
        app.add_option("--state-cap", state_cap, "Product-machine state cap")->capture_default_str();
        app.add_option("--transition-cap", transition_cap, "Product-machine transition cap")
            ->capture_default_str();
    }

    attack::AttackConfig config(unsigned partial_jobs) const
    {
        attack::AttackConfig cfg;
        cfg.bmc_inc = bmc_inc;
        cfg.max_bound = max_bound;
        try {
            cfg.umc_mode = attack::parse_umc_mode(umc_mode);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        cfg.solver_budget.seconds = solver_timeout;
        cfg.time_limit = time_limit;
        cfg.seed = seed;
        cfg.jobs = partial_jobs;
        cfg.enumerate_all = enumerate_all;
        cfg.enum_cap = enum_cap;
        cfg.product_state_cap = state_cap;
        cfg.product_transition_cap = transition_cap;
        if (!solver.empty())
            cfg.backend = sat::external_backend(solver);
        try {
            cfg.validate();
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return cfg;
    }

    json to_json() const
    {
        return json{{"bmc_inc", bmc_inc},
                    {"max_bound", max_bound},
                    {"umc_mode", umc_mode},
                    {"solver_timeout", solver_timeout ? json(*solver_timeout) : json(nullptr)},
                    {"time_limit", time_limit ? json(*time_limit) : json(nullptr)},
                    {"seed", seed},
                    {"solver", solver.empty() ? "embedded" : solver},
                    {"enumerate_all", enumerate_all},
                    {"enum_cap", enum_cap},
                    {"state_cap", state_cap},
                    {"transition_cap", transition_cap}};
    }
};

Circuit load_circuit(const std::string& path)
{
    try {
        return load_bench(path);
    } catch (const BenchError& e) {
        throw UsageError(path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
}

CamoCircuit load_camo(const Circuit& base, const std::string& sidecar_path)
{
    try {
        return apply_sidecar(base, parse_sidecar(read_file(sidecar_path)));
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(sidecar_path + ": " + e.what());
    }
}

Completion load_completion(const CamoCircuit& c, const std::string& path)
{
    try {
        return parse_completion_file(read_file(path), c);
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
}

/// The only consumer of the secret file: it is read here and sealed inside
/// the black box.
std::unique_ptr<Oracle> make_oracle(const CamoCircuit& c, const std::string& secret_path, const std::string& command)
{
    if (!command.empty())
        return std::make_unique<ProcessOracle>(command, c.num_inputs(), c.num_outputs());
    return std::make_unique<BlackBox>(c, load_completion(c, secret_path));
}

std::string run_stem(const std::string& bench, std::size_t k, std::uint64_t seed)
{
    return bench + "_k" + std::to_string(k) + "_s" + std::to_string(seed);
}

struct RunOutput
{
    RunRecord record;
    json report;
    std::vector<Completion> completions;
};

RunOutput attack_once(const CamoCircuit& c, Oracle& oracle, const std::string& bench, const AttackFlags& flags,
                      unsigned partial_jobs)
{
    const attack::AttackConfig cfg = flags.config(partial_jobs);
    const auto t0 = std::chrono::steady_clock::now();
    const attack::AttackReport rep = attack::run_attack(c, oracle, cfg);
    RunOutput out;
    out.record.benchmark = bench;
    out.record.k = c.num_cells();
    out.record.seed = flags.seed;
    out.record.disc_size = rep.disc_set.size();
    out.record.max_length = rep.max_length();
    out.record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.record.termination = std::string(to_string(rep.termination));
    out.record.gates_fixed = rep.gates_fixed();
    out.record.success = rep.success();
    json config = flags.to_json();
    config["jobs"] = partial_jobs;
    out.report = report_json(c, out.record, rep, config);
    out.completions = rep.completions;
    return out;
}

void write_run(const fs::path& dir, const CamoCircuit& c, const RunOutput& run)
{
    fs::create_directories(dir);
    const std::string stem = run_stem(run.record.benchmark, run.record.k, run.record.seed);
    write_file(dir / (stem + ".json"), run.report.dump(2) + "\n");
    if (!run.completions.empty())
        write_file(dir / (stem + ".completion"), write_completion_file(c, run.completions.front()));
}

std::string run_line(const RunRecord& r)
{
    std::ostringstream o;
    o << r.benchmark << " k=" << r.k << " seed=" << r.seed << " termination=" << r.termination
      << " disc=" << r.disc_size << " max_length=" << r.max_length << " fixed=" << r.gates_fixed << "/" << r.k
      << " time=" << fmt_seconds(r.seconds) << "s";
    return o.str();
}

std::string completion_line(const CamoCircuit& c, const Completion& x)
{
    std::string s;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j)
            s += ' ';
        s += cell_name(c, j) + "=" + std::string(to_string(c.cells()[j].candidates[x[j]]));
    }
    return s;
}

struct Camouflaged
{
    Sidecar sidecar;
    CamoCircuit circuit;
    Completion secret;
};

Camouflaged camouflage_with(const Circuit& base, std::size_t k, const std::vector<GateKind>& candidates,
                            std::uint64_t seed, const std::optional<std::string>& reset)
{
    Sidecar sc;
    sc.candidates = candidates;
    sc.gates = select_gates(base, k, candidates, seed);
    if (reset) {
        try {
            sc.reset = BitVec::from_string(*reset);
        } catch (const std::exception& e) {
            throw UsageError(std::string("--reset: ") + e.what());
        }
        if (sc.reset->size() != base.flipflops().size())
            throw UsageError("--reset needs one bit per flip-flop");
    }
    CamoCircuit circuit = apply_sidecar(base, sc);
    Completion secret = original_completion(base, sc.gates, candidates);
    return Camouflaged{std::move(sc), std::move(circuit), std::move(secret)};
}

void write_camouflage(const fs::path& dir, const std::string& stem, const Camouflaged& cam)
{
    fs::create_directories(dir);
    write_file(dir / (stem + ".sidecar"), write_sidecar(cam.sidecar));
    write_file(dir / (stem + ".secret"), write_completion_file(cam.circuit, cam.secret));
}

std::vector<std::size_t> parse_list(const std::string& text)
{
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad number '" + item + "' in list");
        }
    }
    if (out.empty())
        throw UsageError("empty list");
    return out;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Oracle-guided reverse engineering of camouflaged sequential netlists"};
    app.require_subcommand(1);

    // camouflage
    std::string bench, sidecar_path, secret_path, completion_path, out_dir;
    std::size_t k = 0;
    std::string candidates = "NAND,NOR";
    std::uint64_t seed = 0;
    std::string strategy = "random";
    std::optional<std::string> reset;
    auto* cam = app.add_subcommand("camouflage", "Camouflage k randomly chosen gates");
    cam->add_option("--bench", bench, "Netlist (.bench)")->required();
    cam->add_option("--k", k, "Number of camouflaged gates")->required();
    cam->add_option("--candidates", candidates, "Candidate functions")->capture_default_str();
    cam->add_option("--seed", seed, "Selection seed")->capture_default_str();
    cam->add_option("--strategy", strategy, "Gate selection strategy")
        ->check(CLI::IsMember({"random"}))
        ->capture_default_str();
    cam->add_option("--reset", reset, "Reset state bits (default all zero)");
    cam->add_option("--out", out_dir, "Output directory")->required();

    // attack
    AttackFlags flags;
    std::string oracle_cmd;
    auto* atk = app.add_subcommand("attack", "Run the attack against a black box");
    atk->add_option("--bench", bench, "Netlist (.bench)")->required();
    atk->add_option("--sidecar", sidecar_path, "Camouflage annotation")->required();
    auto* secret_opt = atk->add_option("--secret", secret_path, "Secret completion (oracle only)");
    atk->add_option("--oracle", oracle_cmd, "Query a process speaking the line protocol instead")
        ->excludes(secret_opt);
    atk->add_option("--out", out_dir, "Output directory for the run report");
    flags.add_to(*atk);

    // verify
    std::uint64_t state_cap = std::uint64_t{1} << 26;
    std::uint64_t transition_cap = std::uint64_t{1} << 28;
    auto* ver = app.add_subcommand("verify", "Check a completion against the secret");
    ver->add_option("--bench", bench, "Netlist (.bench)")->required();
    ver->add_option("--sidecar", sidecar_path, "Camouflage annotation")->required();
    ver->add_option("--secret", secret_path, "Secret completion")->required();
    ver->add_option("--completion", completion_path, "Claimed completion")->required();
    ver->add_option("--state-cap", state_cap, "Product-machine state cap")->capture_default_str();
    ver->add_option("--transition-cap", transition_cap, "Product-machine transition cap")->capture_default_str();

    // report
    std::string report_dir, csv_path;
    auto* rep = app.add_subcommand("report", "Aggregate run records");
    rep->add_option("dir", report_dir, "Directory of run reports")->required();
    rep->add_option("--csv", csv_path, "Also write CSV here");

    // sweep
    std::string ks = "32,64,128,256";
    std::string seeds = "1";
    unsigned sweep_jobs = 1;
    AttackFlags sweep_flags;
    auto* swp = app.add_subcommand("sweep", "Camouflage and attack for several k and seeds");
    swp->add_option("--bench", bench, "Netlist (.bench)")->required();
    swp->add_option("--ks", ks, "Comma-separated gate counts")->capture_default_str();
    swp->add_option("--seeds", seeds, "Comma-separated seeds")->capture_default_str();
    swp->add_option("--candidates", candidates, "Candidate functions")->capture_default_str();
    swp->add_option("--out", out_dir, "Output directory")->required();
    swp->add_option("--runs-parallel", sweep_jobs, "Independent runs in parallel")->capture_default_str();
    sweep_flags.add_to(*swp);

    // serve
    std::optional<std::uint64_t> query_budget;
    auto* srv = app.add_subcommand("serve", "Answer protocol queries on stdin from the secret");
    srv->add_option("--bench", bench, "Netlist (.bench)")->required();
    srv->add_option("--sidecar", sidecar_path, "Camouflage annotation")->required();
    srv->add_option("--secret", secret_path, "Secret completion")->required();
    srv->add_option("--budget", query_budget, "Query budget");

    // sat
    std::string cnf_path, solver_cmd;
    std::optional<double> sat_timeout;
    auto* satc = app.add_subcommand("sat", "Solve a DIMACS file");
    satc->add_option("cnf", cnf_path, "DIMACS CNF file")->required();
    satc->add_option("--solver", solver_cmd, "External solver command (default: embedded)");
    satc->add_option("--timeout", sat_timeout, "Seconds");

    // gen
    RandomCircuitParams gen_params;
    std::string gen_name = "rand";
    auto* gen = app.add_subcommand("gen", "Write a random sequential netlist");
    gen->add_option("--inputs", gen_params.inputs)->capture_default_str();
    gen->add_option("--outputs", gen_params.outputs)->capture_default_str();
    gen->add_option("--flipflops", gen_params.flipflops)->capture_default_str();
    gen->add_option("--gates", gen_params.gates)->capture_default_str();
    gen->add_option("--seed", seed)->capture_default_str();
    gen->add_option("--name", gen_name)->capture_default_str();
    gen->add_option("--out", out_dir, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*cam) {
            const Circuit base = load_circuit(bench);
            const Camouflaged c = camouflage_with(base, k, parse_candidates(candidates), seed, reset);
            const std::string stem = run_stem(base.name(), k, seed);
            write_camouflage(out_dir, stem, c);
            out << "wrote " << (fs::path(out_dir) / (stem + ".sidecar")).string() << " and "
                << (fs::path(out_dir) / (stem + ".secret")).string() << "\n";
            return kSuccess;
        }

        if (*atk) {
            if (secret_path.empty() && oracle_cmd.empty())
                throw UsageError("attack needs --secret or --oracle");
            const Circuit base = load_circuit(bench);
            const CamoCircuit c = load_camo(base, sidecar_path);
            std::unique_ptr<Oracle> oracle = make_oracle(c, secret_path, oracle_cmd);
            RunOutput run;
            try {
                run = attack_once(c, *oracle, base.name(), flags, flags.jobs);
            } catch (const attack::InconsistentOracle& e) {
                err << "error: oracle conflict: " << e.what() << "\n";
                return kAttackFailure;
            } catch (const ObservationConflict& e) {
                err << "error: oracle conflict: " << e.what() << "\n";
                return kAttackFailure;
            }
            if (!out_dir.empty())
                write_run(out_dir, c, run);
            out << run_line(run.record) << "\n";
            for (const auto& x : run.completions)
                out << "completion " << completion_line(c, x) << "\n";
            return run.record.success ? kSuccess : kAttackFailure;
        }

        if (*ver) {
            const Circuit base = load_circuit(bench);
            const CamoCircuit c = load_camo(base, sidecar_path);
            const Completion secret = load_completion(c, secret_path);
            const Completion claim = load_completion(c, completion_path);
            const attack::EquivResult r = attack::product_equiv(c, claim, secret, state_cap, transition_cap);
            switch (r.kind) {
            case attack::EquivResult::Kind::Equivalent:
                out << "EQUIVALENT (" << r.states << " product states)\n";
                return kSuccess;
            case attack::EquivResult::Kind::Witness:
                out << "WITNESS length " << r.witness.size() << "\n"
                    << "input    " << r.witness.to_string() << "\n"
                    << "secret   " << run_sequence(c, secret, r.witness).to_string() << "\n"
                    << "claimed  " << run_sequence(c, claim, r.witness).to_string() << "\n";
                return kAttackFailure;
            case attack::EquivResult::Kind::Inconclusive:
                out << "INCONCLUSIVE after " << r.states << " product states\n";
                return kInconclusive;
            }
        }

        if (*rep) {
            const auto rows = summarize(load_records(report_dir));
            out << format_table(rows);
            if (!csv_path.empty())
                write_file(csv_path, format_csv(rows));
            return kSuccess;
        }

        if (*swp) {
            const Circuit base = load_circuit(bench);
            const auto cand = parse_candidates(candidates);
            sweep_flags.config(1);
            struct Job
            {
                std::size_t k;
                std::uint64_t seed;
            };
            std::vector<Job> jobs;
            for (std::size_t kk : parse_list(ks))
                for (std::size_t s : parse_list(seeds))
                    jobs.push_back({kk, s});
            // Selection errors surface before any run starts.
            std::vector<Camouflaged> cams;
            for (const Job& j : jobs) {
                cams.push_back(camouflage_with(base, j.k, cand, j.seed, std::nullopt));
                write_camouflage(out_dir, run_stem(base.name(), j.k, j.seed), cams.back());
            }
            std::vector<std::optional<RunOutput>> results(jobs.size());
            std::vector<std::string> errors(jobs.size());
            std::atomic<std::size_t> next{0};
            std::mutex io;
            auto worker = [&] {
                for (std::size_t i = next++; i < jobs.size(); i = next++) {
                    AttackFlags f = sweep_flags;
                    f.seed = jobs[i].seed;
                    BlackBox box(cams[i].circuit, cams[i].secret);
                    try {
                        results[i] = attack_once(cams[i].circuit, box, base.name(), f, 1);
                        write_run(out_dir, cams[i].circuit, *results[i]);
                        const std::lock_guard lock(io);
                        out << run_line(results[i]->record) << "\n" << std::flush;
                    } catch (const std::exception& e) {
                        errors[i] = e.what();
                    }
                }
            };
            std::vector<std::thread> pool;
            for (unsigned t = 1; t < std::max(1u, sweep_jobs); ++t)
                pool.emplace_back(worker);
            worker();
            for (auto& t : pool)
                t.join();
            bool all_ok = true;
            std::vector<RunRecord> records;
            for (std::size_t i = 0; i < jobs.size(); ++i) {
                if (!results[i]) {
                    err << "error: k=" << jobs[i].k << " seed=" << jobs[i].seed << ": " << errors[i] << "\n";
                    all_ok = false;
                    continue;
                }
                records.push_back(results[i]->record);
                all_ok = all_ok && results[i]->record.success;
            }
            if (!records.empty())
                out << format_table(summarize(records));
            return all_ok ? kSuccess : kAttackFailure;
        }

        if (*srv) {
            const Circuit base = load_circuit(bench);
            const CamoCircuit c = load_camo(base, sidecar_path);
            BlackBox box(c, load_completion(c, secret_path), query_budget);
            serve(box, std::cin, out);
            return kSuccess;
        }

        if (*satc) {
            std::ifstream in(cnf_path);
            if (!in)
                throw UsageError("cannot open '" + cnf_path + "'");
            cnf::CnfInstance inst;
            try {
                inst = cnf::parse_dimacs(in);
            } catch (const std::exception& e) {
                throw UsageError(cnf_path + ": " + e.what());
            }
            sat::Budget budget;
            budget.seconds = sat_timeout;
            const sat::SolveResult r = sat::solve(inst, {}, budget,
                                                  solver_cmd.empty() ? sat::BackendFactory{}
                                                                     : sat::external_backend(solver_cmd));
            switch (r.status) {
            case sat::Status::Sat: {
                out << "s SATISFIABLE\nv";
                for (int v = 1; v <= inst.num_vars(); ++v)
                    out << ' ' << (r.value(v) ? v : -v);
                out << " 0\n";
                return kSuccess;
            }
            case sat::Status::Unsat:
                out << "s UNSATISFIABLE\n";
                return kSuccess;
            case sat::Status::Timeout:
                out << "s UNKNOWN\n";
                return kInconclusive;
            }
        }

        if (*gen) {
            const std::string text = write_bench(random_circuit(gen_params, seed, gen_name));
            if (out_dir.empty())
                out << text;
            else
                write_file(out_dir, text);
            return kSuccess;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kAttackFailure;
    }
    return kUsage;
}

} // namespace seqcamo::cli
