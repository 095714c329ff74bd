#include "seqcamo/cnf.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace seqcamo::cnf {

void CnfInstance::add_clause(std::span<const Lit> clause)
{
    for (Lit l : clause) {
        if (l == 0 || is_const(l))
            throw std::invalid_argument("CnfInstance: constant or zero literal in clause");
        if (var_of(l) > num_vars_)
            throw std::invalid_argument("CnfInstance: clause references undeclared variable " +
                                        std::to_string(var_of(l)));
    }
    clauses_.emplace_back(clause.begin(), clause.end());
}

void CnfInstance::reserve_vars(int n)
{
    num_vars_ = std::max(num_vars_, n);
}

void CnfInstance::add_group(const std::string& name, std::vector<Var> vars)
{
    for (Var v : vars)
        if (v <= 0 || v > num_vars_)
            throw std::invalid_argument("CnfInstance: group '" + name + "' references undeclared variable");
    groups_[name] = std::move(vars);
}

const std::vector<Var>* CnfInstance::group(const std::string& name) const
{
    auto it = groups_.find(name);
    return it == groups_.end() ? nullptr : &it->second;
}

std::optional<Lit> CnfInstance::label(const std::string& name) const
{
    auto it = labels_.find(name);
    if (it == labels_.end())
        return std::nullopt;
    return it->second;
}

bool CnfInstance::satisfied_by(const std::vector<bool>& model) const
{
    for (const auto& c : clauses_) {
        bool sat = false;
        for (Lit l : c) {
            const Var v = var_of(l);
            if (static_cast<std::size_t>(v) < model.size() && model[v] == (l > 0)) {
                sat = true;
                break;
            }
        }
        if (!sat)
            return false;
    }
    return true;
}

void write_dimacs(std::ostream& out, const CnfInstance& inst)
{
    for (const auto& [name, vars] : inst.groups()) {
        out << "c group " << name;
        for (std::size_t i = 0; i < vars.size();) {
            std::size_t j = i;
            while (j + 1 < vars.size() && vars[j + 1] == vars[j] + 1)
                ++j;
            out << ' ' << vars[i];
            if (j > i)
                out << '-' << vars[j];
            i = j + 1;
        }
        out << '\n';
    }
    for (const auto& [name, lit] : inst.labels())
        out << "c label " << name << ' ' << lit << '\n';
    out << "p cnf " << inst.num_vars() << ' ' << inst.clauses().size() << '\n';
    for (const auto& c : inst.clauses()) {
        for (Lit l : c)
            out << l << ' ';
        out << "0\n";
    }
}

std::string to_dimacs(const CnfInstance& inst)
{
    std::ostringstream out;
    write_dimacs(out, inst);
    return out.str();
}

CnfInstance parse_dimacs(std::istream& in)
{
    CnfInstance inst;
    std::string line;
    bool header = false;
    Clause current;
    std::vector<std::pair<std::string, std::vector<Var>>> groups;
    std::vector<std::pair<std::string, Lit>> labels;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok))
            continue;
        if (tok == "c") {
            std::string kind, name;
            if (!(ls >> kind >> name))
                continue;
            if (kind == "group") {
                std::vector<Var> vars;
                std::string range;
                while (ls >> range) {
                    auto dash = range.find('-');
                    const Var a = std::stoi(range.substr(0, dash));
                    const Var b = dash == std::string::npos ? a : std::stoi(range.substr(dash + 1));
                    for (Var v = a; v <= b; ++v)
                        vars.push_back(v);
                }
                groups.emplace_back(name, std::move(vars));
            } else if (kind == "label") {
                Lit l = 0;
                if (ls >> l)
                    labels.emplace_back(name, l);
            }
            continue;
        }
        if (tok == "p") {
            std::string fmt;
            int vars = 0;
            long long count = 0;
            if (!(ls >> fmt >> vars >> count) || fmt != "cnf" || vars < 0)
                throw std::runtime_error("DIMACS: malformed header '" + line + "'");
            inst.reserve_vars(vars);
            header = true;
            continue;
        }
        if (!header)
            throw std::runtime_error("DIMACS: clause before 'p cnf' header");
        std::istringstream cs(line);
        long long lit = 0;
        while (cs >> lit) {
            if (lit == 0) {
                inst.add_clause(current);
                current.clear();
            } else {
                if (std::abs(lit) > inst.num_vars())
                    throw std::runtime_error("DIMACS: literal " + std::to_string(lit) + " exceeds declared variables");
                current.push_back(static_cast<Lit>(lit));
            }
        }
        if (!cs.eof())
            throw std::runtime_error("DIMACS: malformed clause line '" + line + "'");
    }
    if (!current.empty())
        inst.add_clause(current);
    for (auto& [name, vars] : groups)
        inst.add_group(name, std::move(vars));
    for (auto& [name, lit] : labels)
        inst.set_label(name, lit);
    return inst;
}

} // namespace seqcamo::cnf
