#include "seqcamo/sat.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace seqcamo::sat {

std::string_view to_string(Status s)
{
    switch (s) {
    case Status::Sat: return "SAT";
    case Status::Unsat: return "UNSAT";
    case Status::Timeout: return "TIMEOUT";
    }
    return "?";
}

SolveStats& SolveStats::operator+=(const SolveStats& o)
{
    conflicts += o.conflicts;
    decisions += o.decisions;
    propagations += o.propagations;
    seconds += o.seconds;
    return *this;
}

std::vector<bool> Backend::model() const
{
    std::vector<bool> m(static_cast<std::size_t>(num_vars()) + 1, false);
    for (Var v = 1; v <= num_vars(); ++v)
        m[static_cast<std::size_t>(v)] = model_value(v);
    return m;
}

// ---------------------------------------------------------------------------
// External process backend

ExternalSolver::ExternalSolver(std::string command) : command_(std::move(command)) {}

Var ExternalSolver::new_var()
{
    return clauses_.new_var();
}

int ExternalSolver::num_vars() const
{
    return clauses_.num_vars();
}

void ExternalSolver::add_clause(std::span<const Lit> clause)
{
    clauses_.add_clause(clause);
}

Status parse_solver_output(std::string_view text, int num_vars, std::vector<bool>& model)
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::optional<Status> status;
    model.assign(static_cast<std::size_t>(num_vars) + 1, false);
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag))
            continue;
        if (tag == "s") {
            std::string word;
            ls >> word;
            if (word == "SATISFIABLE")
                status = Status::Sat;
            else if (word == "UNSATISFIABLE")
                status = Status::Unsat;
            else
                status = Status::Timeout;
        } else if (tag == "v") {
            long long lit = 0;
            while (ls >> lit) {
                if (lit == 0)
                    break;
                const long long v = lit < 0 ? -lit : lit;
                if (v <= num_vars)
                    model[static_cast<std::size_t>(v)] = lit > 0;
            }
        }
    }
    return status.value_or(Status::Timeout);
}

Status ExternalSolver::solve(std::span<const Lit> assumptions, const Budget& budget)
{
    stats_ = {};
    model_.clear();
    const auto start = std::chrono::steady_clock::now();

    std::array<char, 32> path{};
    std::snprintf(path.data(), path.size(), "/tmp/seqcamo-XXXXXX");
    const int fd = ::mkstemp(path.data());
    if (fd < 0)
        throw std::runtime_error("ExternalSolver: cannot create temporary file");
    ::close(fd);
    {
        std::ofstream out(path.data());
        out << "p cnf " << clauses_.num_vars() << ' ' << clauses_.clauses().size() + assumptions.size() << '\n';
        for (const auto& c : clauses_.clauses()) {
            for (Lit l : c)
                out << l << ' ';
            out << "0\n";
        }
        for (Lit a : assumptions) {
            if (a == 0 || cnf::is_const(a) || cnf::var_of(a) > clauses_.num_vars())
                throw std::invalid_argument("ExternalSolver: bad assumption literal");
            out << a << " 0\n";
        }
    }

    std::string cmd;
    if (budget.seconds)
        cmd = "timeout -s KILL " + std::to_string(std::max(1.0, *budget.seconds)) + " ";
    cmd += command_ + " " + path.data() + " 2>/dev/null";
    std::string output;
    if (FILE* pipe = ::popen(cmd.c_str(), "r")) {
        std::array<char, 4096> buf{};
        std::size_t n;
        while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
            output.append(buf.data(), n);
        ::pclose(pipe);
    }
    std::remove(path.data());

    std::vector<bool> model;
    Status st = parse_solver_output(output, clauses_.num_vars(), model);
    stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (st == Status::Sat) {
        if (!clauses_.satisfied_by(model))
            throw ModelVerificationError("ExternalSolver: model violates the clause database");
        for (Lit a : assumptions)
            if (model[static_cast<std::size_t>(cnf::var_of(a))] != (a > 0))
                throw ModelVerificationError("ExternalSolver: model violates an assumption");
        model_ = std::move(model);
    }
    return st;
}

bool ExternalSolver::model_value(Var v) const
{
    return model_.at(static_cast<std::size_t>(v));
}

// ---------------------------------------------------------------------------

BackendFactory embedded_backend()
{
    return [] { return std::make_unique<CdclSolver>(); };
}

BackendFactory external_backend(std::string command)
{
    return [command = std::move(command)] { return std::make_unique<ExternalSolver>(command); };
}

std::vector<bool> SolveResult::values(const std::vector<Var>& group) const
{
    std::vector<bool> out;
    out.reserve(group.size());
    for (Var v : group)
        out.push_back(value(v));
    return out;
}

void load(Backend& backend, const cnf::CnfInstance& inst)
{
    while (backend.num_vars() < inst.num_vars())
        backend.new_var();
    for (const auto& c : inst.clauses())
        backend.add_clause(c);
}

SolveResult solve(const cnf::CnfInstance& inst, std::span<const Lit> assumptions, const Budget& budget,
                  const BackendFactory& backend)
{
    for (Lit a : assumptions)
        if (a == 0 || cnf::is_const(a) || cnf::var_of(a) > inst.num_vars())
            throw std::invalid_argument("solve: assumption references undeclared variable");
    auto solver = backend ? backend() : std::make_unique<CdclSolver>();
    load(*solver, inst);
    SolveResult r;
    r.status = solver->solve(assumptions, budget);
    r.stats = solver->stats();
    if (r.status == Status::Sat)
        r.model = solver->model();
    return r;
}

void add_clauses(cnf::CnfInstance& inst, std::span<const cnf::Clause> clauses)
{
    for (const auto& c : clauses) {
        for (Lit l : c)
            inst.reserve_vars(cnf::var_of(l));
        inst.add_clause(c);
    }
}

} // namespace seqcamo::sat
