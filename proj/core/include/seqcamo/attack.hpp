#ifndef SEQCAMO_ATTACK_HPP
#define SEQCAMO_ATTACK_HPP

#include "seqcamo/encode.hpp"
#include "seqcamo/netlist.hpp"
#include "seqcamo/oracle.hpp"
#include "seqcamo/sat.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqcamo::attack {

enum class UmcMode { Explicit, BmcToDiameter, Skip };
std::string_view to_string(UmcMode m);
UmcMode parse_umc_mode(std::string_view s);

enum class Termination { UC, CE, UMC, Exhausted, Timeout };
std::string_view to_string(Termination t);
Termination parse_termination(std::string_view s);

/// One solver query issued by the attack loop, for observers.
struct SolveEvent
{
    enum class Kind { Bmc, Uc, Ce } kind;
    std::size_t bound = 0;  ///< Bmc only
    const QuerySet* qs = nullptr;
    sat::Status status = sat::Status::Unsat;
};

struct AttackConfig
{
    std::size_t bmc_inc = 10;
    std::size_t max_bound = 120;
    sat::Budget solver_budget;
    /// Wall-clock limit for the whole run.
    std::optional<double> time_limit;
    UmcMode umc_mode = UmcMode::Explicit;
    std::uint64_t enum_cap = 4096;
    std::uint64_t product_state_cap = std::uint64_t{1} << 26;
    /// Cap on simulated product transitions (states times 2^m), summed over
    /// all pairs compared by one UMC check.
    std::uint64_t product_transition_cap = std::uint64_t{1} << 28;
    /// Recover every consistent completion (up to enum_cap) instead of one.
    bool enumerate_all = false;
    /// Worker threads for partial completion.
    unsigned jobs = 1;
    /// Recorded in reports; the embedded solver is deterministic.
    std::uint64_t seed = 0;
    sat::BackendFactory backend;
    std::function<void(const SolveEvent&)> observer;

    void validate() const;
};

enum class CheckOutcome { Pass, Fail, Inconclusive };
std::string_view to_string(CheckOutcome o);

struct IterationLog
{
    std::size_t bound = 0;
    std::size_t length = 0;  ///< |I~|
    Completion x1;
    Completion x2;
    sat::SolveStats stats;
    double seconds = 0;
};

struct CheckLog
{
    std::size_t bound = 0;
    std::string check;  ///< "UC", "CE", "UMC"
    CheckOutcome outcome = CheckOutcome::Inconclusive;
    double seconds = 0;
};

struct GateVerdict
{
    bool fixed = false;
    std::uint32_t value = 0;  ///< meaningful when fixed
};

struct AttackReport
{
    QuerySet disc_set;
    std::vector<Completion> completions;
    Termination termination = Termination::Exhausted;
    std::vector<IterationLog> iterations;
    std::vector<CheckLog> checks;
    std::uint64_t queries = 0;
    std::uint64_t steps = 0;
    std::size_t final_bound = 0;
    double seconds = 0;
    sat::SolveStats solver;
    /// Filled when the attack does not succeed.
    std::vector<GateVerdict> partial;

    bool success() const;
    std::size_t max_length() const { return disc_set.max_length(); }
    std::size_t gates_fixed() const;
};

/// Raised when a single solver call exhausts its budget where the operation
/// has no inconclusive outcome.
class SolverTimeout : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// No completion reproduces the observed black-box behavior.
class InconsistentOracle : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A cap was exceeded or a bound was too small to decide.
class Inconclusive : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Incremental solver context shared by one attack run: two key vectors
/// with permanent consistency constraints, a lazily extended two-copy
/// unrolling for BMC, and activation-guarded UC and CE gadgets.
class Session
{
  public:
    Session(const CamoCircuit& c, const AttackConfig& cfg);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    void add_record(const QueryRecord& rec);

    /// Sat fills `out`.
    sat::Status bmc(std::size_t b, encode::Distinguisher* out, const sat::Budget& budget);
    sat::Status uc(const sat::Budget& budget);
    sat::Status ce(const sat::Budget& budget);
    /// Any completion consistent with the recorded queries.
    sat::Status consistent(Completion* out, const sat::Budget& budget);

    const sat::SolveStats& total_stats() const { return total_; }
    const sat::SolveStats& last_stats() const { return last_; }
    int num_vars() const;

  private:
    sat::Status run(std::span<const cnf::Lit> assumptions, const sat::Budget& budget);
    void extend_to(std::size_t frames);

    const CamoCircuit& c_;
    std::unique_ptr<sat::Backend> solver_;
    std::unique_ptr<encode::LogicBuilder> lb_;
    encode::KeyVector k1_;
    encode::KeyVector k2_;
    std::vector<std::vector<cnf::Lit>> inputs_;
    std::vector<cnf::Lit> state1_;
    std::vector<cnf::Lit> state2_;
    std::vector<cnf::Lit> mismatch_;
    std::map<std::size_t, cnf::Lit> bmc_act_;
    std::optional<cnf::Lit> uc_act_;
    std::optional<cnf::Lit> ce_act_;
    sat::SolveStats total_;
    sat::SolveStats last_;
};

// ---------------------------------------------------------------------------
// Standalone operations (fresh solver per call).

/// NONE (nullopt) iff no length <= b sequence separates two completions that
/// are consistent with `qs`. Throws SolverTimeout.
std::optional<encode::Distinguisher> find_distinguishing(const CamoCircuit& c, const QuerySet& qs, std::size_t b,
                                                         const AttackConfig& cfg = {});

CheckOutcome uc_outcome(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});
CheckOutcome ce_outcome(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});
CheckOutcome umc_outcome(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});

/// Timeouts count as false.
bool check_uc(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});
bool check_ce(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});
/// Throws Inconclusive when no verdict could be reached.
bool check_umc(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});

struct EquivResult
{
    enum class Kind { Equivalent, Witness, Inconclusive } kind = Kind::Equivalent;
    BitSeq witness;  ///< shortest separating sequence when kind == Witness
    std::uint64_t states = 0;
    std::uint64_t transitions = 0;
};

/// Breadth-first search of the product machine of two completions from
/// (reset, reset) over all 2^m inputs per state.
EquivResult product_equiv(const CamoCircuit& c, const Completion& x1, const Completion& x2,
                          std::uint64_t state_cap = std::uint64_t{1} << 26,
                          std::uint64_t transition_cap = std::uint64_t{1} << 28);

/// Exhaustive reference: every pair of consistent completions is checked
/// for sequential equivalence. Throws Inconclusive above the caps.
bool brute_force_disc(const CamoCircuit& c, const QuerySet& qs, std::uint64_t completion_cap = 4096,
                      std::uint64_t state_cap = std::uint64_t{1} << 26);

/// Up to `cap` + 1 consistent completions via iterated SAT with blocking.
std::vector<Completion> enumerate_consistent(const CamoCircuit& c, const QuerySet& qs, std::uint64_t cap,
                                             const AttackConfig& cfg = {});

/// Throws std::logic_error if no completion is consistent.
Completion recover_completion(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});

/// One solve per (cell, candidate); a cell is fixed iff exactly one
/// candidate remains satisfiable. Timeouts leave the cell ambiguous.
std::vector<GateVerdict> partial_completion(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg = {});

/// True iff `x` reproduces every recorded output.
bool consistent_with(const CamoCircuit& c, const Completion& x, const QuerySet& qs);

AttackReport run_attack(const CamoCircuit& c, Oracle& oracle, const AttackConfig& cfg = {});

} // namespace seqcamo::attack

#endif // SEQCAMO_ATTACK_HPP
