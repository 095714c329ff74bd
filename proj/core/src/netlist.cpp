#include "seqcamo/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_set>

namespace seqcamo {

namespace {

std::string upper(std::string_view s)
{
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

bool is_ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

} // namespace

std::optional<GateKind> parse_gate_kind(std::string_view tag)
{
    const std::string t = upper(tag);
    if (t == "AND")
        return GateKind::And;
    if (t == "OR")
        return GateKind::Or;
    if (t == "NAND")
        return GateKind::Nand;
    if (t == "NOR")
        return GateKind::Nor;
    if (t == "XOR")
        return GateKind::Xor;
    if (t == "XNOR")
        return GateKind::Xnor;
    if (t == "NOT" || t == "INV")
        return GateKind::Not;
    if (t == "BUF" || t == "BUFF")
        return GateKind::Buf;
    return std::nullopt;
}

std::string_view to_string(GateKind kind)
{
    switch (kind) {
    case GateKind::And: return "AND";
    case GateKind::Or: return "OR";
    case GateKind::Nand: return "NAND";
    case GateKind::Nor: return "NOR";
    case GateKind::Xor: return "XOR";
    case GateKind::Xnor: return "XNOR";
    case GateKind::Not: return "NOT";
    case GateKind::Buf: return "BUF";
    case GateKind::Hidden: return "CAMO";
    }
    return "?";
}

bool arity_ok(GateKind kind, std::size_t inputs)
{
    switch (kind) {
    case GateKind::Not:
    case GateKind::Buf: return inputs == 1;
    case GateKind::Hidden: return inputs >= 1;
    default: return inputs >= 2;
    }
}

BenchError::BenchError(BenchErrorKind kind, std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + what : what),
      kind_(kind), line_(line), column_(column)
{
}

// ---------------------------------------------------------------------------
// Circuit

Circuit Circuit::make(Description d)
{
    Circuit c;
    c.name_ = std::move(d.name);
    c.net_names_ = std::move(d.net_names);
    for (NetId i = 0; i < c.net_names_.size(); ++i)
        c.net_index_.emplace(c.net_names_[i], i);

    const std::size_t nets = c.net_names_.size();
    auto line_of = [&](std::size_t g) { return g < d.gate_lines.size() ? d.gate_lines[g] : 0; };

    if (d.inputs.empty())
        throw BenchError(BenchErrorKind::Structure, 0, 0, "circuit has no primary inputs");
    if (d.outputs.empty())
        throw BenchError(BenchErrorKind::Structure, 0, 0, "circuit has no primary outputs");

    // driver: -1 undriven, -2 primary input, -3 flip-flop, >= 0 gate index
    std::vector<std::int64_t> driver(nets, -1);
    auto claim = [&](NetId net, std::int64_t who, std::size_t line) {
        if (net >= nets)
            throw BenchError(BenchErrorKind::Structure, line, 0, "net id out of range");
        if (driver[net] != -1)
            throw BenchError(BenchErrorKind::DuplicateDriver, line, 1,
                             "net '" + c.net_names_[net] + "' has more than one driver");
        driver[net] = who;
    };
    for (NetId in : d.inputs)
        claim(in, -2, 0);
    for (const auto& ff : d.flipflops)
        claim(ff.state, -3, 0);
    for (std::size_t g = 0; g < d.gates.size(); ++g) {
        const Gate& gate = d.gates[g];
        if (gate.kind == GateKind::Hidden)
            throw BenchError(BenchErrorKind::UnknownFunction, line_of(g), 1, "hidden gate function in plain circuit");
        if (!arity_ok(gate.kind, gate.inputs.size()))
            throw BenchError(BenchErrorKind::BadArity, line_of(g), 1,
                             std::string(to_string(gate.kind)) + " gate '" + c.net_names_[gate.output] + "' has " +
                                 std::to_string(gate.inputs.size()) + " inputs");
        claim(gate.output, static_cast<std::int64_t>(g), line_of(g));
    }

    auto require_driven = [&](NetId net, std::size_t line, const std::string& use) {
        if (net >= nets || driver[net] == -1)
            throw BenchError(BenchErrorKind::UndrivenNet, line, line ? 1 : 0,
                             "net '" + (net < nets ? c.net_names_[net] : std::string("?")) + "' used by " + use +
                                 " is not driven");
    };
    for (std::size_t g = 0; g < d.gates.size(); ++g)
        for (NetId in : d.gates[g].inputs)
            require_driven(in, line_of(g), "gate '" + c.net_names_[d.gates[g].output] + "'");
    for (const auto& ff : d.flipflops)
        require_driven(ff.next, 0, "flip-flop '" + c.net_names_[ff.state] + "'");
    for (NetId out : d.outputs)
        require_driven(out, 0, "primary output");

    // Kahn's algorithm over gate-to-gate edges.
    const std::size_t ng = d.gates.size();
    std::vector<std::size_t> pending(ng, 0);
    std::vector<std::vector<std::size_t>> fanout(ng);
    for (std::size_t g = 0; g < ng; ++g)
        for (NetId in : d.gates[g].inputs)
            if (driver[in] >= 0) {
                ++pending[g];
                fanout[static_cast<std::size_t>(driver[in])].push_back(g);
            }
    std::queue<std::size_t> ready;
    for (std::size_t g = 0; g < ng; ++g)
        if (pending[g] == 0)
            ready.push(g);
    std::vector<std::size_t> order;
    order.reserve(ng);
    while (!ready.empty()) {
        std::size_t g = ready.front();
        ready.pop();
        order.push_back(g);
        for (std::size_t h : fanout[g])
            if (--pending[h] == 0)
                ready.push(h);
    }
    if (order.size() != ng) {
        std::size_t g = 0;
        while (pending[g] == 0)
            ++g;
        throw BenchError(BenchErrorKind::CombinationalCycle, line_of(g), 1,
                         "combinational cycle through gate '" + c.net_names_[d.gates[g].output] + "'");
    }

    c.inputs_ = std::move(d.inputs);
    c.outputs_ = std::move(d.outputs);
    c.flipflops_ = std::move(d.flipflops);
    c.gates_.reserve(ng);
    c.gate_of_net_.assign(nets, -1);
    for (std::size_t g : order) {
        c.gate_of_net_[d.gates[g].output] = static_cast<std::int64_t>(c.gates_.size());
        c.gates_.push_back(std::move(d.gates[g]));
    }
    return c;
}

std::optional<NetId> Circuit::find_net(std::string_view name) const
{
    auto it = net_index_.find(std::string(name));
    if (it == net_index_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> Circuit::find_gate(std::string_view name) const
{
    auto net = find_net(name);
    if (!net || gate_of_net_[*net] < 0)
        return std::nullopt;
    return static_cast<std::size_t>(gate_of_net_[*net]);
}

// ---------------------------------------------------------------------------
// .bench parsing

namespace {

class LineLexer
{
  public:
    LineLexer(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }
    bool at_end()
    {
        skip_ws();
        return pos_ >= text_.size();
    }
    std::size_t column() const { return pos_ + 1; }

    std::string ident(const char* what)
    {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_]))
            ++pos_;
        if (start == pos_)
            fail(std::string("expected ") + what);
        return std::string(text_.substr(start, pos_ - start));
    }
    bool accept(char c)
    {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c)
    {
        if (!accept(c))
            fail(std::string("expected '") + c + "'");
    }
    [[noreturn]] void fail(const std::string& msg)
    {
        skip_ws();
        std::string got = pos_ < text_.size() ? "'" + std::string(1, text_[pos_]) + "'" : "end of line";
        throw BenchError(BenchErrorKind::Syntax, line_, column(), msg + ", got " + got);
    }

  private:
    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

} // namespace

Circuit parse_bench(std::string_view text, std::string name, std::vector<std::string>* warnings)
{
    Circuit::Description d;
    d.name = std::move(name);
    std::unordered_map<std::string, NetId> ids;
    auto net = [&](const std::string& n) {
        auto [it, inserted] = ids.emplace(n, static_cast<NetId>(d.net_names.size()));
        if (inserted)
            d.net_names.push_back(n);
        return it->second;
    };

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);

        LineLexer lex(line, line_no);
        if (lex.at_end())
            continue;
        std::string head = lex.ident("identifier");
        const std::string head_upper = upper(head);

        if ((head_upper == "INPUT" || head_upper == "OUTPUT") && lex.accept('(')) {
            std::string id = lex.ident("net name");
            lex.expect(')');
            if (!lex.at_end())
                lex.fail("unexpected trailing text");
            (head_upper == "INPUT" ? d.inputs : d.outputs).push_back(net(id));
            continue;
        }

        lex.expect('=');
        const std::size_t func_col = lex.column();
        std::string func = lex.ident("function name");
        lex.expect('(');
        std::vector<std::string> args;
        if (!lex.accept(')')) {
            do {
                args.push_back(lex.ident("net name"));
            } while (lex.accept(','));
            lex.expect(')');
        }
        if (!lex.at_end())
            lex.fail("unexpected trailing text");

        if (upper(func) == "DFF") {
            if (args.size() == 2 && (args[1] == "0" || args[1] == "1")) {
                if (warnings)
                    warnings->push_back("line " + std::to_string(line_no) + ": DFF initial value '" + args[1] +
                                        "' ignored; reset state comes from the camouflage sidecar");
                args.pop_back();
            }
            if (args.size() != 1)
                throw BenchError(BenchErrorKind::BadArity, line_no, func_col, "DFF takes one input");
            d.flipflops.push_back({net(head), net(args[0])});
            continue;
        }
        auto kind = parse_gate_kind(func);
        if (!kind)
            throw BenchError(BenchErrorKind::UnknownFunction, line_no, func_col, "unknown function '" + func + "'");
        if (!arity_ok(*kind, args.size()))
            throw BenchError(BenchErrorKind::BadArity, line_no, func_col,
                             func + " with " + std::to_string(args.size()) + " inputs");
        Gate g{net(head), *kind, {}};
        for (const auto& a : args)
            g.inputs.push_back(net(a));
        d.gates.push_back(std::move(g));
        d.gate_lines.push_back(line_no);
    }
    return Circuit::make(std::move(d));
}

Circuit load_bench(const std::string& path, std::vector<std::string>* warnings)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos)
        name = name.substr(slash + 1);
    if (auto dot = name.find_last_of('.'); dot != std::string::npos)
        name = name.substr(0, dot);
    return parse_bench(ss.str(), name, warnings);
}

namespace {

void write_gate_line(std::ostream& out, const Circuit& c, const Gate& g, std::string_view func)
{
    out << c.net_name(g.output) << " = " << func << "(";
    for (std::size_t i = 0; i < g.inputs.size(); ++i)
        out << (i ? ", " : "") << c.net_name(g.inputs[i]);
    out << ")\n";
}

void write_header(std::ostream& out, const Circuit& c)
{
    if (!c.name().empty())
        out << "# " << c.name() << "\n";
    for (NetId in : c.inputs())
        out << "INPUT(" << c.net_name(in) << ")\n";
    for (NetId o : c.outputs())
        out << "OUTPUT(" << c.net_name(o) << ")\n";
    for (const auto& ff : c.flipflops())
        out << c.net_name(ff.state) << " = DFF(" << c.net_name(ff.next) << ")\n";
}

} // namespace

std::string write_bench(const Circuit& c)
{
    std::ostringstream out;
    write_header(out, c);
    for (const auto& g : c.gates())
        write_gate_line(out, c, g, to_string(g.kind));
    return out.str();
}

// ---------------------------------------------------------------------------
// Camouflaging

std::string Completion::to_string() const
{
    std::string s = "(";
    for (std::size_t i = 0; i < choices_.size(); ++i)
        s += (i ? "," : "") + std::to_string(choices_[i]);
    return s + ")";
}

CamoCircuit CamoCircuit::make(const Circuit& base, std::vector<CamoCell> cells, BitVec reset)
{
    if (cells.empty())
        throw std::invalid_argument("camouflage: at least one gate must be camouflaged");
    if (reset.size() != base.flipflops().size())
        throw std::invalid_argument("camouflage: reset width " + std::to_string(reset.size()) + " != " +
                                    std::to_string(base.flipflops().size()) + " flip-flops");
    CamoCircuit cc;
    cc.circuit_ = base;
    cc.cell_of_gate_.assign(base.gates().size(), -1);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const CamoCell& cell = cells[i];
        if (cell.gate >= base.gates().size())
            throw std::invalid_argument("camouflage: gate index out of range");
        Gate& g = cc.circuit_.gates_[cell.gate];
        const std::string& gname = base.net_name(g.output);
        if (cc.cell_of_gate_[cell.gate] != -1)
            throw std::invalid_argument("camouflage: gate '" + gname + "' listed twice");
        if (cell.candidates.size() < 2)
            throw std::invalid_argument("camouflage: gate '" + gname + "' needs at least two candidates");
        for (GateKind k : cell.candidates)
            if (k == GateKind::Hidden || !arity_ok(k, g.inputs.size()))
                throw std::invalid_argument("camouflage: candidate " + std::string(to_string(k)) +
                                            " does not fit the " + std::to_string(g.inputs.size()) +
                                            "-input gate '" + gname + "'");
        g.kind = GateKind::Hidden;
        cc.cell_of_gate_[cell.gate] = static_cast<std::int64_t>(i);
    }
    cc.cells_ = std::move(cells);
    cc.reset_ = std::move(reset);
    return cc;
}

void CamoCircuit::validate(const Completion& x) const
{
    if (x.size() != cells_.size())
        throw std::invalid_argument("completion has " + std::to_string(x.size()) + " entries, expected " +
                                    std::to_string(cells_.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] >= cells_[i].candidates.size())
            throw std::invalid_argument("completion index " + std::to_string(x[i]) + " out of range for cell " +
                                        std::to_string(i));
}

std::uint64_t CamoCircuit::completion_count() const
{
    std::uint64_t n = 1;
    for (const auto& cell : cells_) {
        const std::uint64_t t = cell.candidates.size();
        if (n > UINT64_MAX / t)
            return UINT64_MAX;
        n *= t;
    }
    return n;
}

Completion CamoCircuit::completion_at(std::uint64_t index) const
{
    std::vector<std::uint32_t> choices(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const std::uint64_t t = cells_[i].candidates.size();
        choices[i] = static_cast<std::uint32_t>(index % t);
        index /= t;
    }
    return Completion(std::move(choices));
}

CamoCircuit camouflage(const Circuit& c, std::span<const std::string> gate_names, std::span<const GateKind> candidates,
                       BitVec reset)
{
    std::vector<CamoCell> cells;
    cells.reserve(gate_names.size());
    for (const auto& name : gate_names) {
        auto g = c.find_gate(name);
        if (!g)
            throw std::invalid_argument("camouflage: no gate drives '" + name + "'");
        cells.push_back({*g, std::vector<GateKind>(candidates.begin(), candidates.end())});
    }
    return CamoCircuit::make(c, std::move(cells), std::move(reset));
}

Completion original_completion(const Circuit& c, std::span<const std::string> gate_names,
                               std::span<const GateKind> candidates)
{
    std::vector<std::uint32_t> choices;
    for (const auto& name : gate_names) {
        auto g = c.find_gate(name);
        if (!g)
            throw std::invalid_argument("no gate drives '" + name + "'");
        auto it = std::find(candidates.begin(), candidates.end(), c.gates()[*g].kind);
        if (it == candidates.end())
            throw std::invalid_argument("gate '" + name + "' is " + std::string(to_string(c.gates()[*g].kind)) +
                                        ", not among the candidates");
        choices.push_back(static_cast<std::uint32_t>(it - candidates.begin()));
    }
    return Completion(std::move(choices));
}

// ---------------------------------------------------------------------------
// Sidecar and completion files

Sidecar parse_sidecar(std::string_view text)
{
    Sidecar s;
    std::istringstream in{std::string(text)};
    std::string line;
    bool have_candidates = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word))
            continue;
        const std::string lw = upper(word);
        if (lw == "CANDIDATES:") {
            std::string tag;
            while (ls >> tag) {
                auto k = parse_gate_kind(tag);
                if (!k)
                    throw std::invalid_argument("sidecar line " + std::to_string(line_no) + ": unknown candidate '" +
                                                tag + "'");
                s.candidates.push_back(*k);
            }
            have_candidates = true;
        } else if (lw == "RESET:") {
            std::string bits;
            ls >> bits;
            s.reset = BitVec::from_string(bits);
        } else {
            std::string extra;
            if (ls >> extra)
                throw std::invalid_argument("sidecar line " + std::to_string(line_no) + ": expected one gate id");
            s.gates.push_back(word);
        }
    }
    if (!have_candidates)
        throw std::invalid_argument("sidecar: missing 'candidates:' header");
    return s;
}

std::string write_sidecar(const Sidecar& s)
{
    std::ostringstream out;
    out << "candidates:";
    for (GateKind k : s.candidates)
        out << ' ' << to_string(k);
    out << '\n';
    if (s.reset)
        out << "reset: " << s.reset->to_string() << '\n';
    for (const auto& g : s.gates)
        out << g << '\n';
    return out.str();
}

CamoCircuit apply_sidecar(const Circuit& c, const Sidecar& s)
{
    BitVec reset = s.reset.value_or(BitVec(c.flipflops().size()));
    return camouflage(c, s.gates, s.candidates, std::move(reset));
}

Completion parse_completion_file(std::string_view text, const CamoCircuit& c)
{
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::uint32_t> choices;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.resize(hash);
        std::istringstream ls(line);
        std::string gate;
        long long index = -1;
        if (!(ls >> gate))
            continue;
        if (!(ls >> index) || index < 0)
            throw std::invalid_argument("completion file: bad line '" + line + "'");
        const std::size_t i = choices.size();
        if (i >= c.num_cells())
            throw std::invalid_argument("completion file: more entries than camouflaged gates");
        const auto& cg = c.circuit().gates()[c.cells()[i].gate];
        if (c.circuit().net_name(cg.output) != gate)
            throw std::invalid_argument("completion file: entry " + std::to_string(i) + " names '" + gate +
                                        "', sidecar order expects '" + c.circuit().net_name(cg.output) + "'");
        choices.push_back(static_cast<std::uint32_t>(index));
    }
    Completion x(std::move(choices));
    c.validate(x);
    return x;
}

std::string write_completion_file(const CamoCircuit& c, const Completion& x)
{
    c.validate(x);
    std::ostringstream out;
    for (std::size_t i = 0; i < x.size(); ++i)
        out << c.circuit().net_name(c.circuit().gates()[c.cells()[i].gate].output) << ' ' << x[i] << '\n';
    return out.str();
}

std::string write_camo_bench(const CamoCircuit& cc)
{
    const Circuit& c = cc.circuit();
    std::ostringstream out;
    write_header(out, c);
    for (const auto& g : c.gates())
        write_gate_line(out, c, g, to_string(g.kind));
    for (const auto& cell : cc.cells()) {
        out << "# candidates " << c.net_name(c.gates()[cell.gate].output) << ":";
        for (GateKind k : cell.candidates)
            out << ' ' << to_string(k);
        out << '\n';
    }
    out << "# reset " << cc.reset_state().to_string() << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Simulation

Simulator::Simulator(const CamoCircuit& c, const Completion& x) : circuit_(&c.circuit()), reset_(c.reset_state())
{
    c.validate(x);
    const auto& gates = circuit_->gates();
    kinds_.reserve(gates.size());
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const std::int64_t cell = c.cell_of_gate(g);
        kinds_.push_back(cell < 0 ? gates[g].kind : c.cells()[cell].candidates[x[cell]]);
    }
}

StepResult Simulator::step(const BitVec& state, const BitVec& input) const
{
    const Circuit& c = *circuit_;
    if (state.size() != c.flipflops().size() || input.size() != c.inputs().size())
        throw std::invalid_argument("step: state/input width mismatch");
    std::vector<std::uint8_t> v(c.num_nets(), 0);
    for (std::size_t i = 0; i < c.inputs().size(); ++i)
        v[c.inputs()[i]] = input[i];
    for (std::size_t i = 0; i < c.flipflops().size(); ++i)
        v[c.flipflops()[i].state] = state[i];
    std::vector<std::uint8_t> args;
    const auto& gates = c.gates();
    for (std::size_t g = 0; g < gates.size(); ++g) {
        args.clear();
        for (NetId in : gates[g].inputs)
            args.push_back(v[in]);
        v[gates[g].output] = evaluate(kinds_[g], args);
    }
    StepResult r{BitVec(c.outputs().size()), BitVec(c.flipflops().size())};
    for (std::size_t i = 0; i < c.outputs().size(); ++i)
        r.output.set(i, v[c.outputs()[i]]);
    for (std::size_t i = 0; i < c.flipflops().size(); ++i)
        r.next_state.set(i, v[c.flipflops()[i].next]);
    return r;
}

BitSeq Simulator::run_from(BitVec& state, const BitSeq& inputs) const
{
    if (inputs.width() != circuit_->inputs().size() && !inputs.empty())
        throw std::invalid_argument("run_sequence: input width " + std::to_string(inputs.width()) + " != " +
                                    std::to_string(circuit_->inputs().size()));
    BitSeq out(circuit_->outputs().size());
    for (const auto& in : inputs.steps()) {
        StepResult r = step(state, in);
        out.push_back(std::move(r.output));
        state = std::move(r.next_state);
    }
    return out;
}

BitSeq Simulator::run(const BitSeq& inputs) const
{
    BitVec state = reset_;
    return run_from(state, inputs);
}

StepResult step(const CamoCircuit& c, const Completion& x, const BitVec& state, const BitVec& input)
{
    return Simulator(c, x).step(state, input);
}

BitSeq run_sequence(const CamoCircuit& c, const Completion& x, const BitSeq& inputs)
{
    return Simulator(c, x).run(inputs);
}

} // namespace seqcamo
