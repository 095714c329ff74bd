#ifndef SEQCAMO_RANDOM_CIRCUIT_HPP
#define SEQCAMO_RANDOM_CIRCUIT_HPP

#include "seqcamo/netlist.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace seqcamo {

/// Shape of a synthetic sequential netlist.
struct RandomCircuitParams
{
    std::size_t inputs = 3;
    std::size_t outputs = 1;
    std::size_t flipflops = 2;
    std::size_t gates = 10;
    std::size_t max_fanin = 2;
    /// Functions drawn for multi-input gates; NOT is mixed in at `not_ratio`.
    std::vector<GateKind> kinds = {GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor, GateKind::Xor};
    double not_ratio = 0.15;
};

/// Deterministic for a given (params, seed). Every flip-flop next-state and
/// every output is driven by a gate; gates read from inputs, flip-flop
/// states, and earlier gates.
Circuit random_circuit(const RandomCircuitParams& params, std::uint64_t seed, std::string name = "rand");

/// Uniform integer in [0, bound) without implementation-defined
/// distributions, so seeded runs are reproducible across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// `count` distinct indices from [0, population), in selection order.
std::vector<std::size_t> sample_indices(std::mt19937_64& rng, std::size_t population, std::size_t count);

} // namespace seqcamo

#endif // SEQCAMO_RANDOM_CIRCUIT_HPP
