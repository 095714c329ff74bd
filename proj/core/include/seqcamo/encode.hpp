#ifndef SEQCAMO_ENCODE_HPP
#define SEQCAMO_ENCODE_HPP

#include "seqcamo/cnf.hpp"
#include "seqcamo/netlist.hpp"
#include "seqcamo/oracle.hpp"

#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace seqcamo::encode {

using cnf::Lit;
using cnf::Var;

/// Tseitin gate builder with constant folding and structural hashing.
/// Results may be the constants cnf::kTrue / cnf::kFalse.
class LogicBuilder
{
  public:
    explicit LogicBuilder(cnf::ClauseSink& sink) : sink_(&sink) {}

    cnf::ClauseSink& sink() { return *sink_; }
    Lit fresh() { return sink_->new_var(); }

    Lit and_of(std::span<const Lit> xs);
    Lit or_of(std::span<const Lit> xs);
    Lit and2(Lit a, Lit b);
    Lit or2(Lit a, Lit b);
    Lit xor2(Lit a, Lit b);
    Lit xnor2(Lit a, Lit b) { return -xor2(a, b); }
    /// sel ? if_true : if_false
    Lit mux(Lit sel, Lit if_false, Lit if_true);
    Lit gate(GateKind kind, std::span<const Lit> xs);

    /// Adds a clause, dropping kFalse literals; a clause with kTrue is skipped.
    void clause(std::span<const Lit> lits);
    void clause(std::initializer_list<Lit> lits) { clause(std::span<const Lit>(lits.begin(), lits.size())); }
    void require(Lit l) { clause({l}); }
    void require_equal(Lit a, Lit b);

    std::size_t cache_size() const { return cache_.size(); }

  private:
    struct KeyHash
    {
        std::size_t operator()(const std::vector<Lit>& v) const noexcept;
    };
    std::optional<Lit> lookup(const std::vector<Lit>& key) const;

    cnf::ClauseSink* sink_;
    std::unordered_map<std::vector<Lit>, Lit, KeyHash> cache_;
};

inline Lit constant(bool v) { return v ? cnf::kTrue : cnf::kFalse; }
std::vector<Lit> constants(const BitVec& v);
/// Value of a (possibly constant) literal under a model indexed by variable.
bool lit_value(const std::vector<bool>& model, Lit l);

/// Binary-encoded candidate index per camouflaged cell, least significant
/// bit first.
struct KeyVector
{
    std::vector<std::vector<Lit>> cells;
    std::vector<std::uint32_t> arity;  ///< t per cell

    std::vector<Var> vars() const;
    /// Literals forcing cell `cell` to candidate `value`.
    std::vector<Lit> pin(std::size_t cell, std::uint32_t value) const;
    /// Literals forcing the whole key to `x`.
    std::vector<Lit> pin(const Completion& x) const;
    Completion decode(const std::function<bool(Var)>& value) const;
    Completion decode(const std::vector<bool>& model) const;
};

unsigned bits_for(std::uint32_t t);

/// Fresh key variables plus blocking clauses for indices >= t.
KeyVector make_key(LogicBuilder& lb, const CamoCircuit& c);

/// Literal that is true iff the two keys encode different completions.
Lit keys_differ(LogicBuilder& lb, const KeyVector& a, const KeyVector& b);

struct FrameLits
{
    std::vector<Lit> outputs;
    std::vector<Lit> next_state;
};

/// One time frame of the keyed circuit: every camouflaged cell becomes a
/// multiplexer tree over its candidate functions selected by its key bits.
FrameLits encode_keyed_frame(LogicBuilder& lb, const CamoCircuit& c, const KeyVector& key,
                             std::span<const Lit> state, std::span<const Lit> input);

/// Literal true iff some position differs.
Lit vectors_differ(LogicBuilder& lb, std::span<const Lit> a, std::span<const Lit> b);

/// Adds clauses forcing the keyed circuit to reproduce `rec` from reset.
void constrain_consistent(LogicBuilder& lb, const CamoCircuit& c, const KeyVector& key, const QueryRecord& rec);

struct UnrollSpec
{
    std::size_t frames = 0;
    bool share_inputs = true;
    std::optional<BitSeq> fix_inputs;
    std::optional<BitSeq> fix_outputs;
};

struct Unrolling
{
    std::vector<std::vector<Lit>> inputs;   ///< per frame
    std::vector<std::vector<Lit>> outputs;  ///< per frame
    std::vector<std::vector<Lit>> states;   ///< frames + 1 entries, [0] = reset
};

/// Unrolls the keyed circuit from reset. With share_inputs and a non-null
/// `shared`, the input literals of `shared` are reused.
Unrolling unroll(LogicBuilder& lb, const CamoCircuit& c, const KeyVector& key, const UnrollSpec& spec,
                 const Unrolling* shared = nullptr);

// ---------------------------------------------------------------------------
// Standalone instances. Key groups are named K1 (and K2); free inputs I@t,
// free state S; per-frame mismatch literals are labeled diff@t.

struct KeyedInstance
{
    cnf::CnfInstance cnf;
    KeyVector k1;
    std::optional<KeyVector> k2;
    std::vector<std::vector<Lit>> inputs;  ///< free input literals per frame
    std::vector<Lit> free_state;
    std::vector<Lit> frame_mismatch;       ///< BMC only, per frame
};

KeyedInstance encode_consistency(const CamoCircuit& c, const QuerySet& qs);
KeyedInstance encode_bmc_disagreement(const CamoCircuit& c, const QuerySet& qs, std::size_t b);
KeyedInstance encode_uc(const CamoCircuit& c, const QuerySet& qs);
KeyedInstance encode_ce(const CamoCircuit& c, const QuerySet& qs);

struct Distinguisher
{
    Completion x1;
    Completion x2;
    BitSeq inputs;
};

/// Decodes (X1, X2, I) from a model; I is cut after the first frame whose
/// mismatch literal is true.
Distinguisher decode_distinguisher(const CamoCircuit& c, const KeyVector& k1, const KeyVector& k2,
                                   const std::vector<std::vector<Lit>>& inputs,
                                   const std::vector<Lit>& frame_mismatch, const std::function<bool(Lit)>& value);

} // namespace seqcamo::encode

#endif // SEQCAMO_ENCODE_HPP
