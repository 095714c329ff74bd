#include "doctest.h"

#include "../support/fixtures.hpp"

#include <map>
#include <random>

using namespace seqcamo;

namespace {

// Reference evaluator: sweeps the gates in a shuffled order until every net
// has a value, ignoring the topological order computed by the parser.
StepResult fixed_point_step(const CamoCircuit& cc, const Completion& x, const BitVec& state, const BitVec& input,
                            std::mt19937_64& rng)
{
    const Circuit& c = cc.circuit();
    std::vector<int> val(c.num_nets(), -1);
    for (std::size_t i = 0; i < c.inputs().size(); ++i)
        val[c.inputs()[i]] = input[i];
    for (std::size_t i = 0; i < c.flipflops().size(); ++i)
        val[c.flipflops()[i].state] = state[i];
    std::vector<std::size_t> order(c.gates().size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t g : order) {
            const Gate& gate = c.gates()[g];
            if (val[gate.output] >= 0)
                continue;
            std::vector<bool> ins;
            bool ready = true;
            for (NetId n : gate.inputs) {
                ready = ready && val[n] >= 0;
                ins.push_back(val[n] == 1);
            }
            if (!ready)
                continue;
            GateKind k = gate.kind;
            if (const auto cell = cc.cell_of_gate(g); cell >= 0)
                k = cc.cells()[static_cast<std::size_t>(cell)].candidates[x[static_cast<std::size_t>(cell)]];
            bool v = false;
            switch (k) {
            case GateKind::And: v = std::all_of(ins.begin(), ins.end(), [](bool b) { return b; }); break;
            case GateKind::Nand: v = !std::all_of(ins.begin(), ins.end(), [](bool b) { return b; }); break;
            case GateKind::Or: v = std::any_of(ins.begin(), ins.end(), [](bool b) { return b; }); break;
            case GateKind::Nor: v = !std::any_of(ins.begin(), ins.end(), [](bool b) { return b; }); break;
            case GateKind::Xor: v = std::count(ins.begin(), ins.end(), true) % 2 == 1; break;
            case GateKind::Xnor: v = std::count(ins.begin(), ins.end(), true) % 2 == 0; break;
            case GateKind::Not: v = !ins[0]; break;
            case GateKind::Buf: v = ins[0]; break;
            case GateKind::Hidden: FAIL("hidden gate"); break;
            }
            val[gate.output] = v;
            changed = true;
        }
    }
    StepResult r{BitVec(c.outputs().size()), BitVec(c.flipflops().size())};
    for (std::size_t i = 0; i < c.outputs().size(); ++i)
        r.output.set(i, val[c.outputs()[i]] == 1);
    for (std::size_t i = 0; i < c.flipflops().size(); ++i)
        r.next_state.set(i, val[c.flipflops()[i].next] == 1);
    return r;
}

BenchErrorKind error_kind(const std::string& text)
{
    try {
        parse_bench(text);
    } catch (const BenchError& e) {
        return e.kind();
    }
    FAIL("no error raised for: " << text);
    return BenchErrorKind::Structure;
}

} // namespace

TEST_CASE("s27 has 4 inputs, 1 output, 3 flip-flops")
{
    const Circuit c = fixtures::s27();
    CHECK(c.inputs().size() == 4);
    CHECK(c.outputs().size() == 1);
    CHECK(c.flipflops().size() == 3);
    CHECK(c.gates().size() == 10);
}

TEST_CASE("minimal BUF circuit")
{
    const Circuit c = parse_bench("INPUT(a)\nOUTPUT(b)\nb = BUF(a)\n");
    CHECK(c.inputs().size() == 1);
    CHECK(c.outputs().size() == 1);
    CHECK(c.flipflops().empty());
    const std::vector<std::string> none;
    CHECK_THROWS_AS(camouflage(c, none, fixtures::nand_nor(), BitVec()), std::invalid_argument);

    // Identity through a camouflaged AND/OR of (a, a).
    const Circuit d = parse_bench("INPUT(a)\nOUTPUT(b)\nb = AND(a, a)\n");
    const std::vector<std::string> cells{"b"};
    const std::vector<GateKind> ao{GateKind::And, GateKind::Or};
    const CamoCircuit cc = camouflage(d, cells, ao, BitVec());
    const StepResult r = step(cc, Completion({0}), BitVec(), BitVec::from_string("1"));
    CHECK(r.output == BitVec::from_string("1"));
    CHECK(r.next_state.empty());
}

TEST_CASE("parser: comments, case-insensitive keywords and tags, aliases")
{
    std::vector<std::string> warnings;
    const Circuit c = parse_bench("# header\ninput(a)\nINPUT( b )\noutput(z)\n"
                                  "q = dff(n, 1)  # trailing\n"
                                  "n = nand(a, q)\nm = INV(b)\nz = BUFF(m)\n",
                                  "t", &warnings);
    CHECK(c.inputs().size() == 2);
    CHECK(c.flipflops().size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("DFF") != std::string::npos);
}

TEST_CASE("parser: each malformed input yields its own diagnostic")
{
    CHECK(error_kind("INPUT(a)\nOUTPUT(b)\nb = AND(a,\n") == BenchErrorKind::Syntax);
    CHECK(error_kind("INPUT(a)\nOUTPUT(b)\nb = FOO(a)\n") == BenchErrorKind::UnknownFunction);
    CHECK(error_kind("INPUT(a)\nOUTPUT(b)\nb = NOT(a, a)\n") == BenchErrorKind::BadArity);
    CHECK(error_kind("INPUT(a)\nOUTPUT(b)\nb = AND(a, c)\n") == BenchErrorKind::UndrivenNet);
    CHECK(error_kind("INPUT(a)\nOUTPUT(b)\nb = NOT(a)\nb = BUF(a)\n") == BenchErrorKind::DuplicateDriver);
    CHECK(error_kind("INPUT(a)\nOUTPUT(b)\nb = AND(a, c)\nc = OR(a, b)\n") == BenchErrorKind::CombinationalCycle);

    try {
        parse_bench("INPUT(a)\nOUTPUT(b)\nb = AND(a b)\n");
        FAIL("expected syntax error");
    } catch (const BenchError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() > 1);
    }
}

TEST_CASE("parser round trip preserves the IR")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        RandomCircuitParams p;
        p.inputs = 1 + seed % 4;
        p.flipflops = seed % 5;
        p.gates = 5 + seed % 20;
        p.max_fanin = 3;
        p.kinds = {GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor, GateKind::Xor, GateKind::Xnor};
        const Circuit a = random_circuit(p, seed);
        const Circuit b = parse_bench(write_bench(a), a.name());
        REQUIRE(a.num_nets() == b.num_nets());
        CHECK(write_bench(b) == write_bench(a));
        REQUIRE(a.gates().size() == b.gates().size());
        for (std::size_t g = 0; g < a.gates().size(); ++g) {
            CHECK(a.net_name(a.gates()[g].output) == b.net_name(b.gates()[g].output));
            CHECK(a.gates()[g].kind == b.gates()[g].kind);
        }
    }
    const Circuit s = fixtures::s27();
    CHECK(write_bench(parse_bench(write_bench(s), s.name())) == write_bench(s));
}

TEST_CASE("camouflage argument errors")
{
    const Circuit c = fixtures::s27();
    const BitVec reset(3);
    const std::vector<std::string> unknown{"nope"};
    CHECK_THROWS_AS(camouflage(c, unknown, fixtures::nand_nor(), reset), std::invalid_argument);
    const std::vector<std::string> dup{"G9", "G9"};
    CHECK_THROWS_AS(camouflage(c, dup, fixtures::nand_nor(), reset), std::invalid_argument);
    const std::vector<std::string> inv{"G14"};
    CHECK_THROWS_AS(camouflage(c, inv, fixtures::nand_nor(), reset), std::invalid_argument);
    CHECK_THROWS_AS(camouflage(c, fixtures::s27_cells(), fixtures::nand_nor(), BitVec(2)), std::invalid_argument);
    const std::vector<GateKind> one{GateKind::Nand};
    CHECK_THROWS_AS(camouflage(c, fixtures::s27_cells(), one, reset), std::invalid_argument);

    const CamoCircuit cc = fixtures::s27_camo();
    CHECK(cc.num_cells() == 2);
    CHECK(cc.completion_count() == 4);
    CHECK_THROWS(cc.validate(Completion({0, 2})));
    CHECK_THROWS(cc.validate(Completion({0})));
}

TEST_CASE("camouflaged netlist text does not reveal the original functions")
{
    const CamoCircuit cc = fixtures::s27_camo();
    for (const auto& cell : cc.cells())
        CHECK(cc.circuit().gates()[cell.gate].kind == GateKind::Hidden);
    const std::string text = write_camo_bench(cc);
    CHECK(text.find("G9 = CAMO(") != std::string::npos);
    CHECK(text.find("G12 = CAMO(") != std::string::npos);
    CHECK(text.find("G9 = NAND") == std::string::npos);
    CHECK(text.find("G12 = NOR") == std::string::npos);
}

TEST_CASE("topological evaluation equals fixed-point evaluation")
{
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto inst = fixtures::random_small(seed);
        const CamoCircuit& cc = inst.circuit;
        for (int trial = 0; trial < 20; ++trial) {
            const Completion x = cc.completion_at(rng() % cc.completion_count());
            const BitVec s = BitVec::from_uint(rng(), cc.num_flipflops());
            const BitVec i = BitVec::from_uint(rng(), cc.num_inputs());
            const StepResult a = step(cc, x, s, i);
            const StepResult b = fixed_point_step(cc, x, s, i, rng);
            REQUIRE(a.output == b.output);
            REQUIRE(a.next_state == b.next_state);
        }
    }
}

TEST_CASE("run_sequence: Mealy length, determinism, composition")
{
    const auto inst = fixtures::random_small(5);
    const CamoCircuit& cc = inst.circuit;
    const std::size_t m = cc.num_inputs();
    CHECK(run_sequence(cc, inst.secret, BitSeq(m)).empty());
    std::mt19937_64 rng(3);
    BitSeq a(m);
    BitSeq b(m);
    for (int t = 0; t < 7; ++t)
        a.push_back(BitVec::from_uint(rng(), m));
    for (int t = 0; t < 5; ++t)
        b.push_back(BitVec::from_uint(rng(), m));
    const BitSeq whole = run_sequence(cc, inst.secret, a.concat(b));
    CHECK(whole.size() == 12);
    CHECK(whole == run_sequence(cc, inst.secret, a.concat(b)));

    const Simulator sim(cc, inst.secret);
    BitVec state = cc.reset_state();
    const BitSeq first = sim.run_from(state, a);
    const BitSeq second = sim.run_from(state, b);
    CHECK(first.concat(second) == whole);
    CHECK_THROWS(run_sequence(cc, inst.secret, BitSeq(m + 1, {BitVec(m + 1)})));
}

TEST_CASE("s27: single inputs never separate the completions")
{
    const CamoCircuit cc = fixtures::s27_camo();
    for (std::uint64_t in = 0; in < 16; ++in) {
        const BitSeq q(4, {BitVec::from_uint(in, 4)});
        const BitSeq ref = run_sequence(cc, Completion({0, 0}), q);
        for (std::uint64_t x = 1; x < 4; ++x)
            CHECK(run_sequence(cc, cc.completion_at(x), q) == ref);
    }
}

TEST_CASE("s27: two-step sequences whose last output is 1 only for (NAND, NOR)")
{
    const CamoCircuit cc = fixtures::s27_camo();
    const Completion secret = fixtures::s27_secret();
    CHECK(secret == Completion({0, 1}));
    std::size_t found = 0;
    for (std::uint64_t i0 = 0; i0 < 16; ++i0)
        for (std::uint64_t i1 = 0; i1 < 16; ++i1) {
            const BitSeq q(4, {BitVec::from_uint(i0, 4), BitVec::from_uint(i1, 4)});
            bool only_secret = true;
            for (std::uint64_t x = 0; x < 4; ++x) {
                const Completion cx = cc.completion_at(x);
                only_secret = only_secret && (run_sequence(cc, cx, q)[1][0] == (cx == secret));
            }
            found += only_secret;
        }
    CHECK(found > 0);
}

TEST_CASE("sidecar and completion files")
{
    const Sidecar sc = parse_sidecar("candidates: NAND NOR\nreset: 100\nG9\n\nG12\n");
    CHECK(sc.candidates == fixtures::nand_nor());
    REQUIRE(sc.reset);
    CHECK(*sc.reset == BitVec::from_string("100"));
    CHECK(sc.gates == fixtures::s27_cells());
    CHECK(parse_sidecar(write_sidecar(sc)).gates == sc.gates);

    const CamoCircuit cc = apply_sidecar(fixtures::s27(), sc);
    CHECK(cc.reset_state() == BitVec::from_string("100"));
    const Completion x({1, 0});
    CHECK(parse_completion_file(write_completion_file(cc, x), cc) == x);
    CHECK_THROWS(parse_completion_file("G12 0\nG9 1\n", cc));
    CHECK_THROWS(parse_completion_file("G9 5\nG12 0\n", cc));
    CHECK_THROWS(parse_sidecar("G9\n"));

    Sidecar noreset = sc;
    noreset.reset.reset();
    CHECK(apply_sidecar(fixtures::s27(), noreset).reset_state() == BitVec(3));
}
