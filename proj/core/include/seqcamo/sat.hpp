#ifndef SEQCAMO_SAT_HPP
#define SEQCAMO_SAT_HPP

#include "seqcamo/cnf.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seqcamo::sat {

using cnf::Lit;
using cnf::Var;

enum class Status { Sat, Unsat, Timeout };
std::string_view to_string(Status s);

/// Per-call resource limits. Unset fields mean unlimited.
struct Budget
{
    std::optional<double> seconds;
    std::optional<std::uint64_t> conflicts;
};

struct SolveStats
{
    std::uint64_t conflicts = 0;
    std::uint64_t decisions = 0;
    std::uint64_t propagations = 0;
    double seconds = 0;

    SolveStats& operator+=(const SolveStats& o);
};

/// Raised when a backend reports a model that violates the clause database
/// or the assumptions. Never expected; signals a solver bug.
class ModelVerificationError : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

/// Incremental SAT backend. Clauses are permanent; assumptions are per call.
/// A Sat answer is returned only after the model has been checked against
/// every clause added so far and every assumption.
class Backend : public cnf::ClauseSink
{
  public:
    using cnf::ClauseSink::add_clause;

    virtual Status solve(std::span<const Lit> assumptions, const Budget& budget = {}) = 0;
    Status solve() { return solve(std::span<const Lit>{}); }

    /// Value of `v` in the model of the last Sat answer.
    virtual bool model_value(Var v) const = 0;
    bool model_value_lit(Lit l) const { return model_value(cnf::var_of(l)) == (l > 0); }
    /// Model of the last Sat answer, indexed by variable (index 0 unused).
    std::vector<bool> model() const;

    /// Statistics of the most recent solve call.
    virtual const SolveStats& stats() const = 0;
};

using BackendFactory = std::function<std::unique_ptr<Backend>()>;

/// Conflict-driven clause-learning solver: two watched literals, VSIDS,
/// phase saving, recursive clause minimization, restarts and learnt clause
/// deletion driven by literal block distance. Deterministic.
class CdclSolver final : public Backend
{
  public:
    CdclSolver();
    ~CdclSolver() override;
    CdclSolver(const CdclSolver&) = delete;
    CdclSolver& operator=(const CdclSolver&) = delete;

    Var new_var() override;
    int num_vars() const override;
    void add_clause(std::span<const Lit> clause) override;
    using Backend::add_clause;
    using Backend::solve;

    Status solve(std::span<const Lit> assumptions, const Budget& budget = {}) override;
    bool model_value(Var v) const override;
    const SolveStats& stats() const override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Runs an external solver process per call: writes DIMACS (clauses plus
/// assumptions as unit clauses) to a temporary file, invokes
/// `<command> <file>`, and reads `s ...` / `v ... 0` lines from its stdout.
/// A time budget is enforced with coreutils `timeout`.
class ExternalSolver final : public Backend
{
  public:
    explicit ExternalSolver(std::string command);

    Var new_var() override;
    int num_vars() const override;
    void add_clause(std::span<const Lit> clause) override;
    using Backend::add_clause;
    using Backend::solve;

    Status solve(std::span<const Lit> assumptions, const Budget& budget = {}) override;
    bool model_value(Var v) const override;
    const SolveStats& stats() const override { return stats_; }

  private:
    std::string command_;
    cnf::CnfInstance clauses_;
    std::vector<bool> model_;
    SolveStats stats_;
};

BackendFactory embedded_backend();
BackendFactory external_backend(std::string command);

struct SolveResult
{
    Status status = Status::Unsat;
    /// Present iff status == Sat; indexed by variable.
    std::optional<std::vector<bool>> model;
    SolveStats stats;

    bool value(Var v) const { return model->at(static_cast<std::size_t>(v)); }
    std::vector<bool> values(const std::vector<Var>& group) const;
};

/// Loads `inst` into a fresh backend (embedded by default) and solves it.
/// Throws std::invalid_argument if an assumption names an undeclared variable.
SolveResult solve(const cnf::CnfInstance& inst, std::span<const Lit> assumptions = {}, const Budget& budget = {},
                  const BackendFactory& backend = {});

/// Appends `clauses`, declaring any variables they introduce.
void add_clauses(cnf::CnfInstance& inst, std::span<const cnf::Clause> clauses);

/// Copies every clause of `inst` into `backend`, declaring variables first.
void load(Backend& backend, const cnf::CnfInstance& inst);

/// Parses solver output (`s SATISFIABLE` / `v ... 0` lines). Returns the
/// status and fills `model` (indexed by variable) for Sat answers.
Status parse_solver_output(std::string_view text, int num_vars, std::vector<bool>& model);

} // namespace seqcamo::sat

#endif // SEQCAMO_SAT_HPP
