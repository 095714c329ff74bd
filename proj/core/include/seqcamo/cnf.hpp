#ifndef SEQCAMO_CNF_HPP
#define SEQCAMO_CNF_HPP

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace seqcamo::cnf {

/// Variables are 1-based; a literal is a signed variable (DIMACS convention).
using Var = int;
using Lit = int;

/// Constant literals used by the gate encoder for folding. They never reach a
/// clause database: clauses containing kTrue are dropped, kFalse literals
/// are removed.
inline constexpr Lit kTrue = std::numeric_limits<int>::max();
inline constexpr Lit kFalse = -kTrue;

inline constexpr Var var_of(Lit l) { return l < 0 ? -l : l; }
inline constexpr bool is_const(Lit l) { return l == kTrue || l == kFalse; }

/// Anything that can hand out variables and accept clauses: an in-memory
/// instance or a live solver.
class ClauseSink
{
  public:
    virtual ~ClauseSink() = default;
    virtual Var new_var() = 0;
    virtual int num_vars() const = 0;
    /// `clause` contains no constant literals.
    virtual void add_clause(std::span<const Lit> clause) = 0;

    void add_clause(std::initializer_list<Lit> clause) { add_clause(std::span<const Lit>(clause.begin(), clause.size())); }
};

using Clause = std::vector<Lit>;

/// Clause database with named variable groups and labeled assumption literals.
class CnfInstance final : public ClauseSink
{
  public:
    Var new_var() override { return ++num_vars_; }
    int num_vars() const override { return num_vars_; }
    void add_clause(std::span<const Lit> clause) override;
    using ClauseSink::add_clause;

    /// Raises the variable count to at least `n`.
    void reserve_vars(int n);

    const std::vector<Clause>& clauses() const { return clauses_; }

    void add_group(const std::string& name, std::vector<Var> vars);
    const std::map<std::string, std::vector<Var>>& groups() const { return groups_; }
    const std::vector<Var>* group(const std::string& name) const;

    void set_label(const std::string& name, Lit lit) { labels_[name] = lit; }
    std::optional<Lit> label(const std::string& name) const;
    const std::map<std::string, Lit>& labels() const { return labels_; }

    /// True iff every clause has a literal true under `model` (indexed by var).
    bool satisfied_by(const std::vector<bool>& model) const;

  private:
    int num_vars_ = 0;
    std::vector<Clause> clauses_;
    std::map<std::string, std::vector<Var>> groups_;
    std::map<std::string, Lit> labels_;
};

/// DIMACS CNF with a `c group <name> <ranges>` comment per named group and a
/// `c label <name> <lit>` comment per assumption label.
void write_dimacs(std::ostream& out, const CnfInstance& inst);
std::string to_dimacs(const CnfInstance& inst);
/// Reads DIMACS CNF (group/label comments are restored when present).
CnfInstance parse_dimacs(std::istream& in);

} // namespace seqcamo::cnf

#endif // SEQCAMO_CNF_HPP
