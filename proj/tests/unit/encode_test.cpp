#include "doctest.h"

#include "../support/fixtures.hpp"

#include "seqcamo/attack.hpp"
#include "seqcamo/encode.hpp"
#include "seqcamo/sat.hpp"

#include <random>

using namespace seqcamo;
using cnf::Lit;

namespace {

struct Frame
{
    cnf::CnfInstance inst;
    encode::KeyVector key;
    encode::FrameLits lits;
    std::vector<Lit> state;
    std::vector<Lit> input;
};

// `symbolic` leaves state and input as variables to be pinned by assumptions.
Frame build_frame(const CamoCircuit& c, const BitVec& s, const BitVec& i, bool symbolic)
{
    Frame f;
    encode::LogicBuilder lb(f.inst);
    f.key = encode::make_key(lb, c);
    if (symbolic) {
        for (std::size_t j = 0; j < s.size(); ++j)
            f.state.push_back(lb.fresh());
        for (std::size_t j = 0; j < i.size(); ++j)
            f.input.push_back(lb.fresh());
    } else {
        f.state = encode::constants(s);
        f.input = encode::constants(i);
    }
    f.lits = encode::encode_keyed_frame(lb, c, f.key, f.state, f.input);
    return f;
}

std::vector<Lit> pins(const std::vector<Lit>& lits, const BitVec& v)
{
    std::vector<Lit> out;
    for (std::size_t j = 0; j < lits.size(); ++j)
        if (!cnf::is_const(lits[j]))
            out.push_back(v[j] ? lits[j] : -lits[j]);
    return out;
}

BitSeq random_seq(std::mt19937_64& rng, std::size_t width, std::size_t len)
{
    BitSeq s(width);
    for (std::size_t t = 0; t < len; ++t)
        s.push_back(BitVec::from_uint(rng(), width));
    return s;
}

sat::Status status_of(const encode::KeyedInstance& ki)
{
    return sat::solve(ki.cnf).status;
}

} // namespace

TEST_CASE("keyed frames agree with the simulator on 1000 random cases")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto inst = fixtures::random_small(static_cast<std::uint64_t>(trial));
        const CamoCircuit& c = inst.circuit;
        REQUIRE(c.circuit().gates().size() <= 30);
        const Completion x = c.completion_at(rng() % c.completion_count());
        const BitVec s = BitVec::from_uint(rng(), c.num_flipflops());
        const BitVec i = BitVec::from_uint(rng(), c.num_inputs());
        const StepResult expect = step(c, x, s, i);

        const bool symbolic = trial % 2 == 1;
        const Frame f = build_frame(c, s, i, symbolic);
        std::vector<Lit> assume = f.key.pin(x);
        if (symbolic) {
            auto a = pins(f.state, s);
            auto b = pins(f.input, i);
            assume.insert(assume.end(), a.begin(), a.end());
            assume.insert(assume.end(), b.begin(), b.end());
        }
        const auto r = sat::solve(f.inst, assume);
        REQUIRE(r.status == sat::Status::Sat);
        for (std::size_t j = 0; j < expect.output.size(); ++j)
            REQUIRE(encode::lit_value(*r.model, f.lits.outputs[j]) == expect.output[j]);
        for (std::size_t j = 0; j < expect.next_state.size(); ++j)
            REQUIRE(encode::lit_value(*r.model, f.lits.next_state[j]) == expect.next_state[j]);

        // The values are forced, not merely allowed.
        for (std::size_t j = 0; j < expect.output.size(); ++j) {
            const Lit o = f.lits.outputs[j];
            if (cnf::is_const(o))
                continue;
            std::vector<Lit> flipped = assume;
            flipped.push_back(expect.output[j] ? -o : o);
            REQUIRE(sat::solve(f.inst, flipped).status == sat::Status::Unsat);
        }
    }
}

TEST_CASE("BUF frame output is the input literal")
{
    const Circuit d = parse_bench("INPUT(a)\nINPUT(c)\nOUTPUT(b)\nOUTPUT(e)\nb = BUF(a)\ne = AND(a, c)\n");
    const std::vector<std::string> cells{"e"};
    const CamoCircuit cc = camouflage(d, cells, fixtures::nand_nor(), BitVec());
    cnf::CnfInstance inst;
    encode::LogicBuilder lb(inst);
    const auto key = encode::make_key(lb, cc);
    const Lit a = lb.fresh();
    const Lit c = lb.fresh();
    const std::vector<Lit> in{a, c};
    const auto f = encode::encode_keyed_frame(lb, cc, key, {}, in);
    CHECK(f.outputs[0] == a);
}

TEST_CASE("s27: keyed frame table over 4 keys and 16 inputs")
{
    const CamoCircuit c = fixtures::s27_camo();
    for (std::uint64_t xi = 0; xi < 4; ++xi) {
        const Completion x = c.completion_at(xi);
        for (std::uint64_t in = 0; in < 16; ++in) {
            const BitVec i = BitVec::from_uint(in, 4);
            const Frame f = build_frame(c, c.reset_state(), i, false);
            const auto r = sat::solve(f.inst, f.key.pin(x));
            REQUIRE(r.status == sat::Status::Sat);
            const StepResult e = step(c, x, c.reset_state(), i);
            CHECK(encode::lit_value(*r.model, f.lits.outputs[0]) == e.output[0]);
            for (std::size_t j = 0; j < 3; ++j)
                CHECK(encode::lit_value(*r.model, f.lits.next_state[j]) == e.next_state[j]);
        }
    }
}

TEST_CASE("non-power-of-two candidate lists are blocked above t")
{
    const Circuit d = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nz = XOR(a, b)\n");
    const std::vector<std::string> cells{"z"};
    const std::vector<GateKind> three{GateKind::Nand, GateKind::Nor, GateKind::Xor};
    const CamoCircuit cc = camouflage(d, cells, three, BitVec());
    CHECK(encode::bits_for(3) == 2);
    CHECK(encode::bits_for(2) == 1);
    CHECK(encode::bits_for(4) == 2);
    CHECK(encode::bits_for(5) == 3);
    const auto ki = encode::encode_consistency(cc, QuerySet{});
    CHECK(sat::solve(ki.cnf, ki.k1.pin(0, 3)).status == sat::Status::Unsat);
    for (std::uint32_t v = 0; v < 3; ++v)
        CHECK(sat::solve(ki.cnf, ki.k1.pin(0, v)).status == sat::Status::Sat);
    // XOR is the only candidate reproducing 00 -> 0 and 10 -> 1.
    QuerySet qs;
    qs.record(BitSeq::from_string("00 10", 2), BitSeq::from_string("0 1", 1));
    CHECK(attack::enumerate_consistent(cc, qs, 10) == std::vector<Completion>{Completion({2})});
}

TEST_CASE("encode_consistency solutions equal exhaustive enumeration (k <= 10)")
{
    std::mt19937_64 rng(77);
    std::size_t max_k_seen = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Completion secret;
        const CamoCircuit c = fixtures::random_camo(seed, 10, &secret);
        max_k_seen = std::max(max_k_seen, c.num_cells());
        QuerySet qs;
        const std::size_t nq = seed % 5;
        for (std::size_t q = 0; q < nq; ++q) {
            const BitSeq in = random_seq(rng, c.num_inputs(), 1 + rng() % 5);
            qs.record(in, run_sequence(c, secret, in));
        }
        const auto ki = encode::encode_consistency(c, qs);
        sat::CdclSolver solver;
        sat::load(solver, ki.cnf);
        std::size_t count = 0;
        for (std::uint64_t xi = 0; xi < c.completion_count(); ++xi) {
            const Completion x = c.completion_at(xi);
            const bool expect = attack::consistent_with(c, x, qs);
            const auto assume = ki.k1.pin(x);
            REQUIRE((solver.solve(assume) == sat::Status::Sat) == expect);
            count += expect;
        }
        CHECK(count >= 1);
        if (qs.empty())
            CHECK(count == c.completion_count());
    }
    CHECK(max_k_seen == 10);
}

TEST_CASE("s27 consistency: single-step records keep all four completions")
{
    const CamoCircuit c = fixtures::s27_camo();
    const Completion secret = fixtures::s27_secret();
    QuerySet qs;
    for (std::uint64_t in = 0; in < 16; ++in) {
        const BitSeq q(4, {BitVec::from_uint(in, 4)});
        qs.record(q, run_sequence(c, secret, q));
    }
    CHECK(attack::enumerate_consistent(c, qs, 100).size() == 4);

    // A two-step sequence whose last output is 1 only for the secret.
    for (std::uint64_t a = 0; a < 256; ++a) {
        const BitSeq q(4, {BitVec::from_uint(a & 15, 4), BitVec::from_uint(a >> 4, 4)});
        bool only = true;
        for (std::uint64_t xi = 0; xi < 4; ++xi)
            only = only && run_sequence(c, c.completion_at(xi), q)[1][0] == (c.completion_at(xi) == secret);
        if (!only)
            continue;
        QuerySet two;
        two.record(q, run_sequence(c, secret, q));
        const auto xs = attack::enumerate_consistent(c, two, 100);
        std::vector<Completion> equivalent;
        for (std::uint64_t xi = 0; xi < 4; ++xi)
            if (attack::product_equiv(c, c.completion_at(xi), secret).kind ==
                attack::EquivResult::Kind::Equivalent)
                equivalent.push_back(c.completion_at(xi));
        CHECK(xs == equivalent);
        break;
    }
}

TEST_CASE("s27 BMC disagreement: b=1 UNSAT, b=2 SAT with a two-step witness")
{
    const CamoCircuit c = fixtures::s27_camo();
    CHECK(status_of(encode::encode_bmc_disagreement(c, QuerySet{}, 1)) == sat::Status::Unsat);
    const auto ki = encode::encode_bmc_disagreement(c, QuerySet{}, 2);
    const auto r = sat::solve(ki.cnf);
    REQUIRE(r.status == sat::Status::Sat);
    const auto d = encode::decode_distinguisher(c, ki.k1, *ki.k2, ki.inputs, ki.frame_mismatch,
                                                [&](Lit l) { return encode::lit_value(*r.model, l); });
    CHECK(d.inputs.size() == 2);
    CHECK(run_sequence(c, d.x1, d.inputs) != run_sequence(c, d.x2, d.inputs));
    CHECK_THROWS(encode::encode_bmc_disagreement(c, QuerySet{}, 0));

    const std::string dimacs = cnf::to_dimacs(ki.cnf);
    CHECK(dimacs.find("c group K1 ") != std::string::npos);
    CHECK(dimacs.find("c group K2 ") != std::string::npos);
    CHECK(dimacs.find("c group I@1 ") != std::string::npos);
}

TEST_CASE("BMC status is monotone in b; decoded witnesses are genuine and truncated")
{
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto inst = fixtures::random_small(seed);
        bool seen_sat = false;
        for (std::size_t b = 1; b <= 6; ++b) {
            const auto ki = encode::encode_bmc_disagreement(inst.circuit, inst.qs, b);
            const auto r = sat::solve(ki.cnf);
            const bool is_sat = r.status == sat::Status::Sat;
            REQUIRE((!seen_sat || is_sat));
            seen_sat = is_sat;
            if (!is_sat)
                continue;
            const auto d = encode::decode_distinguisher(inst.circuit, ki.k1, *ki.k2, ki.inputs, ki.frame_mismatch,
                                                        [&](Lit l) { return encode::lit_value(*r.model, l); });
            REQUIRE(d.inputs.size() <= b);
            const BitSeq o1 = run_sequence(inst.circuit, d.x1, d.inputs);
            const BitSeq o2 = run_sequence(inst.circuit, d.x2, d.inputs);
            REQUIRE(o1 != o2);
            REQUIRE(o1.prefix(d.inputs.size() - 1) == o2.prefix(d.inputs.size() - 1));
            REQUIRE(attack::consistent_with(inst.circuit, d.x1, inst.qs));
            REQUIRE(attack::consistent_with(inst.circuit, d.x2, inst.qs));
        }
    }
}

TEST_CASE("only one consistent class: BMC, UC and CE are all UNSAT")
{
    const CamoCircuit c = fixtures::s27_camo();
    const Completion secret = fixtures::s27_secret();
    QuerySet qs;
    for (std::uint64_t a = 0; a < 256; ++a) {
        const BitSeq q(4, {BitVec::from_uint(a & 15, 4), BitVec::from_uint(a >> 4, 4)});
        qs.record(q, run_sequence(c, secret, q));
    }
    REQUIRE(attack::enumerate_consistent(c, qs, 10).size() == 1);
    for (std::size_t b = 1; b <= 5; ++b)
        CHECK(status_of(encode::encode_bmc_disagreement(c, qs, b)) == sat::Status::Unsat);
    CHECK(status_of(encode::encode_uc(c, qs)) == sat::Status::Unsat);
    CHECK(status_of(encode::encode_ce(c, qs)) == sat::Status::Unsat);
}

TEST_CASE("UC and CE queries on the fixtures")
{
    const CamoCircuit s27 = fixtures::s27_camo();
    CHECK(status_of(encode::encode_uc(s27, QuerySet{})) == sat::Status::Sat);
    CHECK(status_of(encode::encode_ce(s27, QuerySet{})) == sat::Status::Sat);

    std::mt19937_64 rng(8);
    const CamoCircuit ident = fixtures::identical_candidates();
    QuerySet qi;
    for (int q = 0; q < 20; ++q) {
        const BitSeq in = random_seq(rng, 2, 1 + rng() % 6);
        qi.record(in, run_sequence(ident, Completion({0}), in));
    }
    CHECK(status_of(encode::encode_uc(ident, qi)) == sat::Status::Sat);
    CHECK(status_of(encode::encode_ce(ident, qi)) == sat::Status::Unsat);

    const CamoCircuit unreach = fixtures::unreachable_divergence();
    QuerySet qu;
    for (int q = 0; q < 20; ++q) {
        const BitSeq in = random_seq(rng, 1, 1 + rng() % 6);
        qu.record(in, run_sequence(unreach, Completion({1}), in));
    }
    CHECK(status_of(encode::encode_uc(unreach, qu)) == sat::Status::Sat);
    CHECK(status_of(encode::encode_ce(unreach, qu)) == sat::Status::Sat);
}

TEST_CASE("UC UNSAT implies CE UNSAT")
{
    int uc_unsat = 0;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const auto inst = fixtures::random_small(seed);
        const bool uc = status_of(encode::encode_uc(inst.circuit, inst.qs)) == sat::Status::Unsat;
        const bool ce = status_of(encode::encode_ce(inst.circuit, inst.qs)) == sat::Status::Unsat;
        if (uc) {
            ++uc_unsat;
            CHECK(ce);
        }
    }
    CHECK(uc_unsat > 0);
}

TEST_CASE("logic builder folding and hashing")
{
    cnf::CnfInstance inst;
    encode::LogicBuilder lb(inst);
    const Lit a = lb.fresh();
    const Lit b = lb.fresh();
    CHECK(lb.and2(a, cnf::kTrue) == a);
    CHECK(lb.and2(a, cnf::kFalse) == cnf::kFalse);
    CHECK(lb.and2(a, -a) == cnf::kFalse);
    CHECK(lb.or2(a, -a) == cnf::kTrue);
    CHECK(lb.xor2(a, a) == cnf::kFalse);
    CHECK(lb.xor2(a, cnf::kTrue) == -a);
    CHECK(lb.and2(a, b) == lb.and2(b, a));
    CHECK(lb.xor2(-a, b) == -lb.xor2(a, b));
    CHECK(lb.mux(cnf::kTrue, a, b) == b);
    CHECK(lb.mux(a, b, b) == b);
    const std::size_t vars = static_cast<std::size_t>(inst.num_vars());
    lb.mux(a, b, lb.and2(a, b));
    lb.mux(a, b, lb.and2(a, b));
    CHECK(static_cast<std::size_t>(inst.num_vars()) <= vars + 2);

    // Exhaustive truth tables of the primitive encodings.
    const Lit s = lb.fresh();
    const Lit m = lb.mux(s, a, b);
    const Lit x = lb.xor2(a, b);
    const Lit o = lb.or2(a, b);
    for (int bits = 0; bits < 8; ++bits) {
        const bool va = bits & 1, vb = bits & 2, vs = bits & 4;
        const std::vector<Lit> assume{va ? a : -a, vb ? b : -b, vs ? s : -s};
        const auto r = sat::solve(inst, assume);
        REQUIRE(r.status == sat::Status::Sat);
        CHECK(encode::lit_value(*r.model, m) == (vs ? vb : va));
        CHECK(encode::lit_value(*r.model, x) == (va != vb));
        CHECK(encode::lit_value(*r.model, o) == (va || vb));
    }
}
