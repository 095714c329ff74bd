#include "doctest.h"

#include "../support/fixtures.hpp"

#include "cli.hpp"
#include "seqcamo/oracle.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace seqcamo;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBench = std::string(SEQCAMO_DATA_DIR) + "/iscas89/s27.bench";

struct Result
{
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "seqcamo");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir
{
    fs::path path;
    TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "seqcamo-cli-XXXXXX").string();
        path = mkdtemp(tmpl.data());
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text)
{
    std::ofstream(path) << text;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_s27_files(const TempDir& dir)
{
    write(dir / "s27.sidecar", "candidates: NAND NOR\nreset: 100\nG9\nG12\n");
    write(dir / "s27.secret", "G9 0\nG12 1\n");
}

// Drops every wall-time field.
json strip_seconds(json j)
{
    if (j.is_object()) {
        j.erase("seconds");
        for (auto& [k, v] : j.items())
            v = strip_seconds(v);
    } else if (j.is_array()) {
        for (auto& v : j)
            v = strip_seconds(v);
    }
    return j;
}

cli::RunRecord rec(const std::string& bench, std::size_t disc, std::size_t len, double secs, const std::string& term,
                   std::size_t fixed = 32)
{
    cli::RunRecord r;
    r.benchmark = bench;
    r.k = 32;
    r.disc_size = disc;
    r.max_length = len;
    r.seconds = secs;
    r.termination = term;
    r.gates_fixed = fixed;
    r.success = term == "UC" || term == "CE" || term == "UMC";
    return r;
}

} // namespace

TEST_CASE("camouflage: seeded selection, determinism and the eligibility limit")
{
    TempDir dir;
    REQUIRE(invoke({"gen", "--inputs", "4", "--outputs", "2", "--flipflops", "3", "--gates", "60", "--seed", "5", "--name",
                 "g60", "--out", dir / "g60.bench"})
                .code == 0);
    const Circuit base = load_bench(dir / "g60.bench");
    const std::vector<GateKind> cand{GateKind::Nand, GateKind::Nor};
    const auto a = cli::select_gates(base, 8, cand, 1);
    const auto b = cli::select_gates(base, 8, cand, 1);
    const auto c = cli::select_gates(base, 8, cand, 2);
    CHECK(a == b);
    CHECK(a != c);
    for (const auto& g : a) {
        const auto idx = base.find_gate(g);
        REQUIRE(idx);
        const GateKind kind = base.gates()[*idx].kind;
        CHECK((kind == GateKind::Nand || kind == GateKind::Nor));
    }

    REQUIRE(invoke({"camouflage", "--bench", dir / "g60.bench", "--k", "8", "--seed", "1", "--out", dir / "c1"}).code ==
            0);
    REQUIRE(invoke({"camouflage", "--bench", dir / "g60.bench", "--k", "8", "--seed", "1", "--out", dir / "c2"}).code ==
            0);
    CHECK(slurp(dir / "c1/g60_k8_s1.sidecar") == slurp(dir / "c2/g60_k8_s1.sidecar"));
    CHECK(slurp(dir / "c1/g60_k8_s1.secret") == slurp(dir / "c2/g60_k8_s1.secret"));
    // The sidecar names gates but never their functions.
    CHECK(slurp(dir / "c1/g60_k8_s1.sidecar").find(" 0\n") == std::string::npos);

    // The secret reproduces the original netlist.
    const CamoCircuit cc = apply_sidecar(base, parse_sidecar(slurp(dir / "c1/g60_k8_s1.sidecar")));
    const Completion secret = parse_completion_file(slurp(dir / "c1/g60_k8_s1.secret"), cc);
    CHECK(secret == original_completion(base, a, cand));

    // s27 has one NAND and four NOR gates.
    const Result too_many = invoke({"camouflage", "--bench", kBench, "--k", "6", "--out", dir / "x"});
    CHECK(too_many.code == cli::kUsage);
    CHECK(too_many.err.find("eligible") != std::string::npos);
    CHECK(invoke({"camouflage", "--bench", kBench, "--k", "5", "--out", dir / "x"}).code == 0);
}

TEST_CASE("attack and verify on s27")
{
    TempDir dir;
    write_s27_files(dir);
    const Result r = invoke({"attack", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--secret", dir / "s27.secret",
                          "--out", dir / "runs"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("termination=UC") != std::string::npos);
    const json report = json::parse(slurp(dir / "runs/s27_k2_s0.json"));
    const cli::RunRecord record = cli::record_from_json(report.at("record"));
    CHECK(record.success);
    CHECK(record.termination == "UC");
    CHECK(record.k == 2);
    CHECK(record.benchmark == "s27");
    CHECK(report.at("completions").size() == 1);

    const Result same = invoke({"verify", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--secret",
                             dir / "s27.secret", "--completion", dir / "runs/s27_k2_s0.completion"});
    CHECK(same.code == 0);
    CHECK(same.out.rfind("EQUIVALENT", 0) == 0);
    CHECK(invoke({"verify", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--secret", dir / "s27.secret",
               "--completion", dir / "s27.secret"})
              .code == 0);

    write(dir / "wrong.completion", "G9 1\nG12 0\n");
    const Result wrong = invoke({"verify", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--secret",
                              dir / "s27.secret", "--completion", dir / "wrong.completion"});
    CHECK(wrong.code == cli::kAttackFailure);
    CHECK(wrong.out.rfind("WITNESS length 2\n", 0) == 0);

    const Result capped = invoke({"verify", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--secret",
                               dir / "s27.secret", "--completion", dir / "s27.secret", "--state-cap", "1"});
    CHECK(capped.code == cli::kInconclusive);
    CHECK(capped.out.rfind("INCONCLUSIVE", 0) == 0);
}

TEST_CASE("run records are reproducible apart from wall time")
{
    TempDir dir;
    REQUIRE(invoke({"gen", "--inputs", "3", "--outputs", "2", "--flipflops", "3", "--gates", "30", "--seed", "17",
                    "--name", "r", "--out", dir / "r.bench"})
                .code == 0);
    REQUIRE(invoke({"camouflage", "--bench", dir / "r.bench", "--k", "4", "--seed", "9", "--out", dir.path.string()})
                .code == 0);
    const std::vector<std::string> args{"attack",   "--bench",           dir / "r.bench", "--sidecar",
                                        dir / "r_k4_s9.sidecar", "--secret", dir / "r_k4_s9.secret", "--seed",
                                        "9",        "--bmc-inc",         "2",             "--max-bound", "8"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", dir / "a"});
    b.insert(b.end(), {"--out", dir / "b"});
    const Result ra = invoke(a);
    const Result rb = invoke(b);
    CHECK(ra.code == rb.code);
    const std::string stem = "r_k4_s9.json";
    const json ja = json::parse(slurp(dir / ("a/" + stem)));
    const json jb = json::parse(slurp(dir / ("b/" + stem)));
    CHECK(strip_seconds(ja) == strip_seconds(jb));
    CHECK(ja.at("record").at("seed") == 9);
}

TEST_CASE("report aggregates records")
{
    SUBCASE("ten UC runs")
    {
        std::vector<cli::RunRecord> rs;
        for (int i = 0; i < 10; ++i)
            rs.push_back(rec("s344", 3 + i % 3, 5 + i % 6, 0.5 + i, "UC"));
        const auto rows = cli::summarize(rs);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].termination_column() == "10/0/0");
        CHECK(rows[0].disc_min == 3);
        CHECK(rows[0].disc_max == 5);
        CHECK(rows[0].steps_max == 10);
        CHECK(rows[0].success == 10);
        CHECK(rows[0].partial_column() == "-");
    }
    SUBCASE("single record")
    {
        const auto rows = cli::summarize({rec("s27", 1, 2, 0.0123456, "UC")});
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].disc_min == rows[0].disc_max);
        CHECK(rows[0].steps_min == rows[0].steps_max);
        CHECK(rows[0].time_min == rows[0].time_max);
        CHECK(cli::format_csv(rows).find(",0.012,0.012,") != std::string::npos);
    }
    SUBCASE("six successes and four failures")
    {
        std::vector<cli::RunRecord> rs;
        for (int i = 0; i < 6; ++i)
            rs.push_back(rec("s5378", 10, 10, 1, i < 4 ? "UC" : "UMC"));
        for (std::size_t f : {21u, 29u, 29u, 25u})
            rs.push_back(rec("s5378", 12, 120, 9, "EXHAUSTED", f));
        const auto rows = cli::summarize(rs);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].success == 6);
        CHECK(rows[0].termination_column() == "4/0/2");
        CHECK(rows[0].partial_column() == "21x1 25x1 29x2");
        const std::string table = cli::format_table(rows);
        CHECK(table.find("21x1 25x1 29x2") != std::string::npos);
    }
    SUBCASE("directory round trip and malformed files")
    {
        TempDir dir;
        write(dir / "a.json", json{{"record", cli::to_json(rec("s27", 1, 2, 0.1, "UC"))}}.dump());
        write(dir / "b.json", cli::to_json(rec("s27", 2, 2, 0.2, "CE")).dump());
        const Result ok = invoke({"report", dir.path.string(), "--csv", dir / "t.csv"});
        CHECK(ok.code == 0);
        CHECK(ok.out.find("1/1/0") != std::string::npos);
        CHECK(slurp(dir / "t.csv").rfind("benchmark,k,runs,", 0) == 0);

        write(dir / "c.json", "{\"record\": {\"benchmark\": \"s27\"}}");
        const Result bad = invoke({"report", dir.path.string()});
        CHECK(bad.code == cli::kUsage);
        CHECK(bad.err.find("c.json") != std::string::npos);

        json lying = cli::to_json(rec("s27", 1, 2, 0.1, "EXHAUSTED"));
        lying["success"] = true;
        write(dir / "c.json", lying.dump());
        CHECK(invoke({"report", dir.path.string()}).code == cli::kUsage);

        TempDir empty;
        CHECK(invoke({"report", empty.path.string()}).code == cli::kUsage);
    }
}

TEST_CASE("usage errors")
{
    CHECK(invoke({}).code == cli::kUsage);
    CHECK(invoke({"attack", "--bench", kBench}).code == cli::kUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kUsage);
    CHECK(invoke({"--help"}).code == 0);
    TempDir dir;
    write_s27_files(dir);
    const std::vector<std::string> base{"attack", "--bench", kBench, "--sidecar", dir / "s27.sidecar"};
    CHECK(invoke(base).code == cli::kUsage);
    auto bad_mode = base;
    bad_mode.insert(bad_mode.end(), {"--secret", dir / "s27.secret", "--umc-mode", "psychic"});
    CHECK(invoke(bad_mode).code == cli::kUsage);
    auto bad_bound = base;
    bad_bound.insert(bad_bound.end(), {"--secret", dir / "s27.secret", "--bmc-inc", "20", "--max-bound", "10"});
    CHECK(invoke(bad_bound).code == cli::kUsage);
    CHECK(invoke({"attack", "--bench", dir / "missing.bench", "--sidecar", dir / "s27.sidecar", "--secret",
               dir / "s27.secret"})
              .code == cli::kUsage);
    write(dir / "short.secret", "G9 0\n");
    CHECK(invoke({"verify", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--secret", dir / "s27.secret",
               "--completion", dir / "short.secret"})
              .code == cli::kUsage);
}

TEST_CASE("sweep writes one record per (k, seed) and report reads them")
{
    TempDir dir;
    REQUIRE(invoke({"gen", "--inputs", "3", "--outputs", "2", "--flipflops", "2", "--gates", "24", "--seed", "3",
                 "--name", "g24", "--out", dir / "g24.bench"})
                .code == 0);
    const Result r = invoke({"sweep", "--bench", dir / "g24.bench", "--ks", "2,3", "--seeds", "1,2", "--out",
                          dir / "sweep", "--runs-parallel", "2", "--bmc-inc", "4", "--max-bound", "16"});
    CHECK(r.code == 0);
    std::size_t json_files = 0;
    for (const auto& e : fs::directory_iterator(dir.path / "sweep"))
        json_files += e.path().extension() == ".json";
    CHECK(json_files == 4);
    const Result rep = invoke({"report", (dir.path / "sweep").string()});
    CHECK(rep.code == 0);
    CHECK(rep.out.find("g24") != std::string::npos);
}

TEST_CASE("gen is deterministic")
{
    const Result a = invoke({"gen", "--gates", "30", "--seed", "4"});
    const Result b = invoke({"gen", "--gates", "30", "--seed", "4"});
    const Result c = invoke({"gen", "--gates", "30", "--seed", "5"});
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
    CHECK_NOTHROW(parse_bench(a.out));
}

// The remaining cases drive the installed executable as a child process.
TEST_CASE("external solver through the sat subcommand")
{
    TempDir dir;
    write(dir / "sat.cnf", "p cnf 3 3\n1 2 0\n-1 0\n-2 3 0\n");
    write(dir / "unsat.cnf", "p cnf 1 2\n1 0\n-1 0\n");
    const Result s = invoke({"sat", dir / "sat.cnf"});
    CHECK(s.code == 0);
    CHECK(s.out == "s SATISFIABLE\nv -1 2 3 0\n");
    CHECK(invoke({"sat", dir / "unsat.cnf"}).out == "s UNSATISFIABLE\n");

    const std::string self = std::string(SEQCAMO_CLI_PATH) + " sat";
    CHECK(invoke({"sat", dir / "sat.cnf", "--solver", self}).out == s.out);

    write_s27_files(dir);
    const std::vector<std::string> args{"attack",          "--bench",  kBench, "--sidecar", dir / "s27.sidecar",
                                        "--secret",        dir / "s27.secret"};
    auto embedded = args, external = args;
    embedded.insert(embedded.end(), {"--out", dir / "emb"});
    external.insert(external.end(), {"--out", dir / "ext", "--solver", self});
    REQUIRE(invoke(embedded).code == 0);
    REQUIRE(invoke(external).code == 0);
    json je = strip_seconds(json::parse(slurp(dir / "emb/s27_k2_s0.json")));
    json jx = strip_seconds(json::parse(slurp(dir / "ext/s27_k2_s0.json")));
    // Determinism holds per backend: a fresh process per call may return
    // different distinguishing inputs than the incremental embedded solver.
    for (const char* key : {"benchmark", "success", "termination", "gates_fixed"})
        CHECK(je.at("record").at(key) == jx.at("record").at(key));
    CHECK(je.at("completions") == jx.at("completions"));
    CHECK(jx.at("config").at("solver") == self);
}

TEST_CASE("process oracle against the serve subcommand")
{
    TempDir dir;
    write_s27_files(dir);
    const std::string serve_cmd = std::string(SEQCAMO_CLI_PATH) + " serve --bench " + kBench + " --sidecar " +
                                  (dir / "s27.sidecar") + " --secret " + (dir / "s27.secret");
    ProcessOracle proc(serve_cmd, 4, 1);
    BlackBox box(fixtures::s27_camo(), fixtures::s27_secret());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        BitSeq q(4);
        for (std::size_t t = rng() % 6; t > 0; --t)
            q.push_back(BitVec::from_uint(rng(), 4));
        REQUIRE(proc.query(q) == box.query(q));
    }
    CHECK(proc.query_count() == 50);

    // Attack through the process boundary.
    const Result r = invoke({"attack", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--oracle", serve_cmd});
    CHECK(r.code == 0);
    CHECK(r.out.find("G9=NAND G12=NOR") != std::string::npos);
}

TEST_CASE("an oracle no completion can reproduce is reported as a conflict")
{
    TempDir dir;
    write_s27_files(dir);
    // The chip's output inverter was replaced by a buffer.
    std::string text = slurp(kBench);
    const auto at = text.find("G17 = NOT(G11)");
    REQUIRE(at != std::string::npos);
    text.replace(at, 14, "G17 = BUFF(G11)");
    write(dir / "chip.bench", text);
    const std::string chip = std::string(SEQCAMO_CLI_PATH) + " serve --bench " + (dir / "chip.bench") +
                             " --sidecar " + (dir / "s27.sidecar") + " --secret " + (dir / "s27.secret");
    const Result r = invoke({"attack", "--bench", kBench, "--sidecar", dir / "s27.sidecar", "--oracle", chip});
    CHECK(r.code == cli::kAttackFailure);
    CHECK(r.err.find("oracle conflict") != std::string::npos);
}
