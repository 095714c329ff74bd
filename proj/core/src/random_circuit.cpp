#include "seqcamo/random_circuit.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace seqcamo {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound)
{
    if (bound == 0)
        throw std::invalid_argument("uniform_below: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

std::vector<std::size_t> sample_indices(std::mt19937_64& rng, std::size_t population, std::size_t count)
{
    if (count > population)
        throw std::invalid_argument("sample_indices: count exceeds population");
    std::vector<std::size_t> pool(population);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_below(rng, population - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

Circuit random_circuit(const RandomCircuitParams& p, std::uint64_t seed, std::string name)
{
    if (p.inputs == 0 || p.outputs == 0 || p.gates == 0 || p.max_fanin < 2 || p.kinds.empty())
        throw std::invalid_argument("random_circuit: degenerate parameters");
    std::mt19937_64 rng(seed);
    auto chance = [&](double prob) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < prob; };

    Circuit::Description d;
    d.name = std::move(name);
    auto add_net = [&](std::string n) {
        d.net_names.push_back(std::move(n));
        return static_cast<NetId>(d.net_names.size() - 1);
    };

    std::vector<NetId> sources;
    for (std::size_t i = 0; i < p.inputs; ++i) {
        d.inputs.push_back(add_net("I" + std::to_string(i)));
        sources.push_back(d.inputs.back());
    }
    std::vector<NetId> states;
    for (std::size_t i = 0; i < p.flipflops; ++i) {
        states.push_back(add_net("S" + std::to_string(i)));
        sources.push_back(states.back());
    }

    std::vector<NetId> gate_nets;
    std::vector<std::size_t> unread;  // gate outputs not yet consumed
    for (std::size_t g = 0; g < p.gates; ++g) {
        const NetId out = add_net("N" + std::to_string(g));
        Gate gate{out, GateKind::Not, {}};
        const std::size_t pool = sources.size();
        if (pool < 2 || chance(p.not_ratio)) {
            gate.inputs.push_back(sources[uniform_below(rng, pool)]);
        } else {
            gate.kind = p.kinds[uniform_below(rng, p.kinds.size())];
            const std::size_t fanin = 2 + uniform_below(rng, std::min(p.max_fanin, pool) - 1);
            // Bias towards recent signals for depth, but keep every source reachable.
            for (std::size_t k = 0; k < fanin; ++k) {
                NetId pick;
                if (!unread.empty() && chance(0.5)) {
                    const std::size_t at = uniform_below(rng, unread.size());
                    pick = gate_nets[unread[at]];
                } else {
                    pick = sources[uniform_below(rng, pool)];
                }
                if (std::find(gate.inputs.begin(), gate.inputs.end(), pick) == gate.inputs.end())
                    gate.inputs.push_back(pick);
            }
            if (gate.inputs.size() < 2) {
                for (NetId s : sources)
                    if (s != gate.inputs[0]) {
                        gate.inputs.push_back(s);
                        break;
                    }
            }
            if (gate.inputs.size() < 2) {
                gate.kind = GateKind::Not;
                gate.inputs.resize(1);
            }
        }
        for (NetId in : gate.inputs) {
            auto it = std::find_if(unread.begin(), unread.end(), [&](std::size_t u) { return gate_nets[u] == in; });
            if (it != unread.end())
                unread.erase(it);
        }
        gate_nets.push_back(out);
        unread.push_back(g);
        sources.push_back(out);
        d.gates.push_back(std::move(gate));
    }

    // Sinks: prefer unread gate outputs, then any gate.
    auto take_sink = [&]() {
        if (!unread.empty()) {
            const std::size_t at = uniform_below(rng, unread.size());
            const NetId n = gate_nets[unread[at]];
            unread.erase(unread.begin() + static_cast<std::ptrdiff_t>(at));
            return n;
        }
        return gate_nets[uniform_below(rng, gate_nets.size())];
    };
    for (std::size_t i = 0; i < p.flipflops; ++i)
        d.flipflops.push_back({states[i], take_sink()});
    for (std::size_t i = 0; i < p.outputs; ++i)
        d.outputs.push_back(take_sink());
    return Circuit::make(std::move(d));
}

} // namespace seqcamo
