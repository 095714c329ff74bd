// Circuits shared by the unit and acceptance tests.
#ifndef SEQCAMO_TEST_FIXTURES_HPP
#define SEQCAMO_TEST_FIXTURES_HPP

#include "seqcamo/netlist.hpp"
#include "seqcamo/oracle.hpp"
#include "seqcamo/random_circuit.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using namespace seqcamo;

inline const std::vector<GateKind>& nand_nor()
{
    static const std::vector<GateKind> k{GateKind::Nand, GateKind::Nor};
    return k;
}

inline Circuit s27()
{
    return load_bench(std::string(SEQCAMO_DATA_DIR) + "/iscas89/s27.bench");
}

// The two camouflaged cells (U8, U9) of the s27 example and its reset.
inline const std::vector<std::string>& s27_cells()
{
    static const std::vector<std::string> g{"G9", "G12"};
    return g;
}

inline CamoCircuit s27_camo()
{
    return camouflage(s27(), s27_cells(), nand_nor(), BitVec::from_string("100"));
}

/// (NAND, NOR): the original functions.
inline Completion s27_secret()
{
    return original_completion(s27(), s27_cells(), nand_nor());
}

/// Both candidates of the single cell compute NOT a: no query can tell the
/// two keys apart, yet they are combinationally identical.
inline CamoCircuit identical_candidates()
{
    const Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\n"
                                  "s = DFF(n)\n"
                                  "g = NAND(a, a)\n"
                                  "n = XOR(g, s)\n"
                                  "z = AND(n, b)\n",
                                  "ident");
    const std::vector<std::string> cells{"g"};
    return camouflage(c, cells, nand_nor(), BitVec::from_string("0"));
}

/// Both flip-flops load the same input, so s1 == s2 in every reachable
/// state; NAND and NOR of (s1, s2) only differ when s1 != s2.
inline CamoCircuit unreachable_divergence()
{
    const Circuit c = parse_bench("INPUT(a)\nOUTPUT(z)\n"
                                  "s1 = DFF(a)\n"
                                  "s2 = DFF(a)\n"
                                  "g = NAND(s1, s2)\n"
                                  "z = XOR(g, a)\n",
                                  "unreach");
    const std::vector<std::string> cells{"g"};
    return camouflage(c, cells, nand_nor(), BitVec::from_string("00"));
}

struct SmallInstance
{
    CamoCircuit circuit;
    Completion secret;
    QuerySet qs;
};

/// Random sequential circuit with 1..3 inputs, l <= 3, k <= 3 NAND/NOR
/// cells, a random reset, a random secret and 0..3 recorded queries.
inline SmallInstance random_small(std::uint64_t seed, std::size_t max_ff = 3, std::size_t max_k = 3)
{
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
    RandomCircuitParams p;
    p.inputs = 1 + uniform_below(rng, 3);
    p.outputs = 1 + uniform_below(rng, 2);
    p.flipflops = 1 + uniform_below(rng, max_ff);
    p.gates = 5 + uniform_below(rng, 10);
    const Circuit base = random_circuit(p, seed, "r" + std::to_string(seed));

    std::vector<std::string> eligible;
    for (const auto& g : base.gates())
        if (g.inputs.size() >= 2)
            eligible.push_back(base.net_name(g.output));
    const std::size_t k = std::min<std::size_t>(eligible.size(), 1 + uniform_below(rng, max_k));
    std::vector<std::string> cells;
    for (std::size_t i : sample_indices(rng, eligible.size(), k))
        cells.push_back(eligible[i]);

    BitVec reset(base.flipflops().size());
    for (std::size_t i = 0; i < reset.size(); ++i)
        reset.set(i, uniform_below(rng, 2) != 0);
    CamoCircuit camo = camouflage(base, cells, nand_nor(), reset);
    Completion secret = camo.completion_at(uniform_below(rng, camo.completion_count()));

    QuerySet qs;
    const std::size_t nq = uniform_below(rng, 4);
    for (std::size_t q = 0; q < nq; ++q) {
        BitSeq in(camo.num_inputs());
        const std::size_t len = 1 + uniform_below(rng, 4);
        for (std::size_t t = 0; t < len; ++t)
            in.push_back(BitVec::from_uint(uniform_below(rng, std::uint64_t{1} << camo.num_inputs()), camo.num_inputs()));
        qs.record(in, run_sequence(camo, secret, in));
    }
    return {std::move(camo), std::move(secret), std::move(qs)};
}

/// Random circuit with 1..max_k NAND/NOR cells over gates of fan-in >= 2
/// and a random secret.
inline CamoCircuit random_camo(std::uint64_t seed, std::size_t max_k, Completion* secret)
{
    std::mt19937_64 rng(seed + 1000);
    RandomCircuitParams p;
    p.inputs = 1 + seed % 3;
    p.outputs = 1 + seed % 2;
    p.flipflops = 1 + seed % 3;
    p.gates = 12 + seed % 18;
    const Circuit base = random_circuit(p, seed, "e" + std::to_string(seed));
    std::vector<std::string> eligible;
    for (const auto& g : base.gates())
        if (g.inputs.size() >= 2)
            eligible.push_back(base.net_name(g.output));
    const std::size_t k = std::min<std::size_t>(eligible.size(), 1 + seed % max_k);
    std::vector<std::string> cells;
    for (std::size_t i : sample_indices(rng, eligible.size(), k))
        cells.push_back(eligible[i]);
    CamoCircuit cc = camouflage(base, cells, nand_nor(), BitVec(p.flipflops));
    *secret = cc.completion_at(rng() % cc.completion_count());
    return cc;
}

} // namespace fixtures

#endif // SEQCAMO_TEST_FIXTURES_HPP
