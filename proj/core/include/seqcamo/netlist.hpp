#ifndef SEQCAMO_NETLIST_HPP
#define SEQCAMO_NETLIST_HPP

#include "seqcamo/bits.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqcamo {

using NetId = std::uint32_t;

/// Combinational cell functions of the `.bench` alphabet. `Hidden` marks a
/// camouflaged gate inside a CamoCircuit; it is never produced by the parser
/// and never evaluated directly.
enum class GateKind : std::uint8_t { And, Or, Nand, Nor, Xor, Xnor, Not, Buf, Hidden };

std::optional<GateKind> parse_gate_kind(std::string_view tag);
std::string_view to_string(GateKind kind);
bool arity_ok(GateKind kind, std::size_t inputs);

/// Evaluates `kind` over `inputs` (values 0/1).
template <typename Range>
bool evaluate(GateKind kind, const Range& inputs)
{
    bool all = true;
    bool any = false;
    bool parity = false;
    for (auto v : inputs) {
        bool b = static_cast<bool>(v);
        all = all && b;
        any = any || b;
        parity = parity != b;
    }
    switch (kind) {
    case GateKind::And: return all;
    case GateKind::Or: return any;
    case GateKind::Nand: return !all;
    case GateKind::Nor: return !any;
    case GateKind::Xor: return parity;
    case GateKind::Xnor: return !parity;
    case GateKind::Not: return !any;
    case GateKind::Buf: return any;
    case GateKind::Hidden: break;
    }
    throw std::logic_error("evaluate: hidden gate function");
}

struct Gate
{
    NetId output;
    GateKind kind;
    std::vector<NetId> inputs;
};

struct FlipFlop
{
    NetId state;
    NetId next;
};

enum class BenchErrorKind {
    Syntax,
    UnknownFunction,
    BadArity,
    UndrivenNet,
    DuplicateDriver,
    CombinationalCycle,
    Structure,
};

/// Parse or validation failure. `line`/`column` are 1-based; 0 when the
/// problem has no single source location.
class BenchError : public std::runtime_error
{
  public:
    BenchError(BenchErrorKind kind, std::size_t line, std::size_t column, const std::string& what);
    BenchErrorKind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    BenchErrorKind kind_;
    std::size_t line_;
    std::size_t column_;
};

/// Immutable gate-level sequential netlist. Gates are stored in topological
/// order; flip-flop state nets are cut points.
class Circuit
{
  public:
    /// Raw description consumed by Circuit::make. Gates may be in any order.
    struct Description
    {
        std::string name;
        std::vector<std::string> net_names;
        std::vector<NetId> inputs;
        std::vector<NetId> outputs;
        std::vector<FlipFlop> flipflops;
        std::vector<Gate> gates;
        /// Source line of each gate (parallel to `gates`), for diagnostics.
        std::vector<std::size_t> gate_lines;
    };

    /// Validates and topologically sorts. Throws BenchError.
    static Circuit make(Description desc);

    const std::string& name() const { return name_; }
    std::size_t num_nets() const { return net_names_.size(); }
    const std::vector<NetId>& inputs() const { return inputs_; }
    const std::vector<NetId>& outputs() const { return outputs_; }
    const std::vector<FlipFlop>& flipflops() const { return flipflops_; }
    const std::vector<Gate>& gates() const { return gates_; }

    const std::string& net_name(NetId id) const { return net_names_.at(id); }
    std::optional<NetId> find_net(std::string_view name) const;
    /// Index into gates() of the gate driving net `name`.
    std::optional<std::size_t> find_gate(std::string_view name) const;

  private:
    friend class CamoCircuit;
    Circuit() = default;

    std::string name_;
    std::vector<std::string> net_names_;
    std::unordered_map<std::string, NetId> net_index_;
    std::vector<NetId> inputs_;
    std::vector<NetId> outputs_;
    std::vector<FlipFlop> flipflops_;
    std::vector<Gate> gates_;
    std::vector<std::int64_t> gate_of_net_;
};

/// Parses `.bench` text. DFF initial-value arguments are ignored; a note is
/// appended to `warnings` when given.
Circuit parse_bench(std::string_view text, std::string name = {},
                    std::vector<std::string>* warnings = nullptr);
Circuit load_bench(const std::string& path, std::vector<std::string>* warnings = nullptr);
std::string write_bench(const Circuit& c);

struct CamoCell
{
    std::size_t gate;                  ///< index into Circuit::gates()
    std::vector<GateKind> candidates;  ///< t candidate functions
};

/// Assignment of a candidate index to every camouflaged cell.
class Completion
{
  public:
    Completion() = default;
    explicit Completion(std::vector<std::uint32_t> choices) : choices_(std::move(choices)) {}

    std::size_t size() const { return choices_.size(); }
    std::uint32_t operator[](std::size_t i) const { return choices_[i]; }
    const std::vector<std::uint32_t>& choices() const { return choices_; }
    std::string to_string() const;

    friend auto operator<=>(const Completion&, const Completion&) = default;

  private:
    std::vector<std::uint32_t> choices_;
};

/// Netlist with k camouflaged cells. The pre-camouflage function of every
/// camouflaged gate is erased (GateKind::Hidden) on construction.
class CamoCircuit
{
  public:
    /// Throws std::invalid_argument on empty/duplicate cells, arity
    /// mismatch, fewer than two candidates, or reset width != l.
    static CamoCircuit make(const Circuit& base, std::vector<CamoCell> cells, BitVec reset);

    const Circuit& circuit() const { return circuit_; }
    const std::vector<CamoCell>& cells() const { return cells_; }
    const BitVec& reset_state() const { return reset_; }
    /// Cell index of gate `g`, or -1.
    std::int64_t cell_of_gate(std::size_t g) const { return cell_of_gate_[g]; }

    std::size_t num_inputs() const { return circuit_.inputs().size(); }
    std::size_t num_outputs() const { return circuit_.outputs().size(); }
    std::size_t num_flipflops() const { return circuit_.flipflops().size(); }
    std::size_t num_cells() const { return cells_.size(); }

    /// Throws std::invalid_argument if `x` is not a valid completion.
    void validate(const Completion& x) const;
    /// Total number of completions, saturating at UINT64_MAX.
    std::uint64_t completion_count() const;
    /// The i-th completion in mixed-radix order (cell 0 least significant).
    Completion completion_at(std::uint64_t index) const;

  private:
    CamoCircuit() = default;

    Circuit circuit_;
    std::vector<CamoCell> cells_;
    std::vector<std::int64_t> cell_of_gate_;
    BitVec reset_;
};

/// Camouflages the gates driving `gate_names` with a shared candidate list.
CamoCircuit camouflage(const Circuit& c, std::span<const std::string> gate_names,
                       std::span<const GateKind> candidates, BitVec reset);

/// The completion reproducing the original functions of the gates in
/// `gate_names`. Throws if an original function is not among `candidates`.
Completion original_completion(const Circuit& c, std::span<const std::string> gate_names,
                               std::span<const GateKind> candidates);

/// Attacker-visible camouflage annotation.
struct Sidecar
{
    std::vector<GateKind> candidates;
    std::optional<BitVec> reset;
    std::vector<std::string> gates;
};

Sidecar parse_sidecar(std::string_view text);
std::string write_sidecar(const Sidecar& s);
/// Reset defaults to all zeros when the sidecar does not give one.
CamoCircuit apply_sidecar(const Circuit& c, const Sidecar& s);

/// Secret / completion file: one `<gate-id> <candidate-index>` line per cell,
/// in sidecar order.
Completion parse_completion_file(std::string_view text, const CamoCircuit& c);
std::string write_completion_file(const CamoCircuit& c, const Completion& x);

/// Serializes a camouflaged netlist; camouflaged gates are written as
/// `CAMO(...)`, followed by `# candidates` comment lines.
std::string write_camo_bench(const CamoCircuit& c);

struct StepResult
{
    BitVec output;
    BitVec next_state;
};

/// Evaluator for one completed circuit. Cheap to copy; immutable.
class Simulator
{
  public:
    Simulator(const CamoCircuit& c, const Completion& x);

    StepResult step(const BitVec& state, const BitVec& input) const;
    /// Mealy run from the reset state: one output step per input step.
    BitSeq run(const BitSeq& inputs) const;
    /// Continues a run from `state`; `state` is updated in place.
    BitSeq run_from(BitVec& state, const BitSeq& inputs) const;

  private:
    const Circuit* circuit_;
    BitVec reset_;
    std::vector<GateKind> kinds_;  // resolved function per gate
};

StepResult step(const CamoCircuit& c, const Completion& x, const BitVec& state, const BitVec& input);
BitSeq run_sequence(const CamoCircuit& c, const Completion& x, const BitSeq& inputs);

} // namespace seqcamo

#endif // SEQCAMO_NETLIST_HPP
