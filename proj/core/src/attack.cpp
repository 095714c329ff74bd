#include "seqcamo/attack.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <span>
#include <thread>
#include <unordered_map>

namespace seqcamo::attack {

using cnf::Lit;
using Clock = std::chrono::steady_clock;

std::string_view to_string(UmcMode m)
{
    switch (m) {
    case UmcMode::Explicit: return "explicit";
    case UmcMode::BmcToDiameter: return "bmc";
    case UmcMode::Skip: return "skip";
    }
    return "?";
}

UmcMode parse_umc_mode(std::string_view s)
{
    if (s == "explicit")
        return UmcMode::Explicit;
    if (s == "bmc" || s == "bmc-to-diameter")
        return UmcMode::BmcToDiameter;
    if (s == "skip")
        return UmcMode::Skip;
    throw std::invalid_argument("unknown UMC mode '" + std::string(s) + "'");
}

std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::UC: return "UC";
    case Termination::CE: return "CE";
    case Termination::UMC: return "UMC";
    case Termination::Exhausted: return "EXHAUSTED";
    case Termination::Timeout: return "TIMEOUT";
    }
    return "?";
}

Termination parse_termination(std::string_view s)
{
    for (auto t : {Termination::UC, Termination::CE, Termination::UMC, Termination::Exhausted, Termination::Timeout})
        if (to_string(t) == s)
            return t;
    throw std::invalid_argument("unknown termination tag '" + std::string(s) + "'");
}

std::string_view to_string(CheckOutcome o)
{
    switch (o) {
    case CheckOutcome::Pass: return "pass";
    case CheckOutcome::Fail: return "fail";
    case CheckOutcome::Inconclusive: return "inconclusive";
    }
    return "?";
}

void AttackConfig::validate() const
{
    if (bmc_inc < 1)
        throw std::invalid_argument("bmc_inc must be at least 1");
    if (max_bound < bmc_inc)
        throw std::invalid_argument("max_bound must be at least bmc_inc");
    if (jobs < 1)
        throw std::invalid_argument("jobs must be at least 1");
}

bool AttackReport::success() const
{
    return termination == Termination::UC || termination == Termination::CE || termination == Termination::UMC;
}

std::size_t AttackReport::gates_fixed() const
{
    if (success() && !completions.empty())
        return completions.front().size();
    return static_cast<std::size_t>(std::count_if(partial.begin(), partial.end(), [](const GateVerdict& v) {
        return v.fixed;
    }));
}

namespace {

std::unique_ptr<sat::Backend> make_backend(const AttackConfig& cfg)
{
    return cfg.backend ? cfg.backend() : std::make_unique<sat::CdclSolver>();
}

/// Fresh solver holding one key vector constrained by `qs`.
struct KeyedSolver
{
    std::unique_ptr<sat::Backend> solver;
    std::unique_ptr<encode::LogicBuilder> lb;
    encode::KeyVector key;

    KeyedSolver(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
        : solver(make_backend(cfg)), lb(std::make_unique<encode::LogicBuilder>(*solver))
    {
        key = encode::make_key(*lb, c);
        for (const auto& rec : qs.records())
            encode::constrain_consistent(*lb, c, key, rec);
    }
};

sat::Status solve_instance(const cnf::CnfInstance& inst, const AttackConfig& cfg, std::vector<bool>* model = nullptr)
{
    auto solver = make_backend(cfg);
    sat::load(*solver, inst);
    const sat::Status st = solver->solve(std::span<const Lit>{}, cfg.solver_budget);
    if (st == sat::Status::Sat && model)
        *model = solver->model();
    return st;
}

CheckOutcome outcome_of_unsat_check(sat::Status st)
{
    switch (st) {
    case sat::Status::Unsat: return CheckOutcome::Pass;
    case sat::Status::Sat: return CheckOutcome::Fail;
    case sat::Status::Timeout: break;
    }
    return CheckOutcome::Inconclusive;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// 2^(2l), or nullopt if it does not fit.
/// Flip-flops in the structural cone of influence of the primary outputs,
/// in index order. The others can never affect an output.
std::vector<std::size_t> observable_flipflops(const Circuit& c)
{
    std::vector<std::int64_t> driver(c.num_nets(), -1);
    for (std::size_t g = 0; g < c.gates().size(); ++g)
        driver[c.gates()[g].output] = static_cast<std::int64_t>(g);
    std::vector<std::int64_t> ff_of(c.num_nets(), -1);
    for (std::size_t f = 0; f < c.flipflops().size(); ++f)
        ff_of[c.flipflops()[f].state] = static_cast<std::int64_t>(f);

    std::vector<char> seen(c.num_nets(), 0);
    std::vector<char> in_cone(c.flipflops().size(), 0);
    std::vector<NetId> stack(c.outputs().begin(), c.outputs().end());
    while (!stack.empty()) {
        const NetId n = stack.back();
        stack.pop_back();
        if (seen[n])
            continue;
        seen[n] = 1;
        if (driver[n] >= 0) {
            for (NetId in : c.gates()[static_cast<std::size_t>(driver[n])].inputs)
                stack.push_back(in);
        } else if (ff_of[n] >= 0) {
            const auto f = static_cast<std::size_t>(ff_of[n]);
            in_cone[f] = 1;
            stack.push_back(c.flipflops()[f].next);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < in_cone.size(); ++f)
        if (in_cone[f])
            out.push_back(f);
    return out;
}

std::optional<std::uint64_t> product_diameter(std::size_t l)
{
    if (2 * l >= 63)
        return std::nullopt;
    return std::uint64_t{1} << (2 * l);
}

/// Shared body of the UMC check. `bmc_none(b)` answers whether no
/// distinguisher of length <= b exists (nullopt on timeout).
CheckOutcome umc_impl(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg,
                      const std::function<std::optional<bool>(std::size_t)>& bmc_none)
{
    if (cfg.umc_mode == UmcMode::Skip)
        return CheckOutcome::Inconclusive;

    if (cfg.umc_mode == UmcMode::Explicit) {
        bool decided = true;
        std::vector<Completion> xs;
        try {
            xs = enumerate_consistent(c, qs, cfg.enum_cap, cfg);
        } catch (const SolverTimeout&) {
            decided = false;
        }
        if (decided && xs.size() > cfg.enum_cap)
            decided = false;
        if (decided) {
            if (xs.empty())
                throw std::logic_error("UMC: no completion is consistent with the observations");
            // Sequential equivalence is transitive: comparing with one
            // representative decides the whole set.
            // The transition cap is shared by all pairs of one check.
            std::uint64_t left = cfg.product_transition_cap;
            for (std::size_t i = 1; i < xs.size(); ++i) {
                const EquivResult r = product_equiv(c, xs[0], xs[i], cfg.product_state_cap, left);
                left -= std::min(left, r.transitions);
                if (r.kind == EquivResult::Kind::Witness)
                    return CheckOutcome::Fail;
                if (r.kind == EquivResult::Kind::Inconclusive) {
                    decided = false;
                    break;
                }
            }
            if (decided)
                return CheckOutcome::Pass;
        }
    }

    const auto diameter = product_diameter(observable_flipflops(c.circuit()).size());
    if (!diameter || *diameter > cfg.max_bound)
        return CheckOutcome::Inconclusive;
    const auto none = bmc_none(static_cast<std::size_t>(*diameter));
    if (!none)
        return CheckOutcome::Inconclusive;
    return *none ? CheckOutcome::Pass : CheckOutcome::Fail;
}

} // namespace

// ---------------------------------------------------------------------------
// Session

Session::Session(const CamoCircuit& c, const AttackConfig& cfg)
    : c_(c), solver_(make_backend(cfg)), lb_(std::make_unique<encode::LogicBuilder>(*solver_))
{
    k1_ = encode::make_key(*lb_, c_);
    k2_ = encode::make_key(*lb_, c_);
    state1_ = encode::constants(c_.reset_state());
    state2_ = state1_;
}

Session::~Session() = default;

int Session::num_vars() const
{
    return solver_->num_vars();
}

void Session::add_record(const QueryRecord& rec)
{
    encode::constrain_consistent(*lb_, c_, k1_, rec);
    encode::constrain_consistent(*lb_, c_, k2_, rec);
}

sat::Status Session::run(std::span<const Lit> assumptions, const sat::Budget& budget)
{
    const sat::Status st = solver_->solve(assumptions, budget);
    last_ = solver_->stats();
    total_ += last_;
    return st;
}

void Session::extend_to(std::size_t frames)
{
    while (inputs_.size() < frames) {
        std::vector<Lit> in;
        for (std::size_t i = 0; i < c_.num_inputs(); ++i)
            in.push_back(lb_->fresh());
        encode::FrameLits f1 = encode::encode_keyed_frame(*lb_, c_, k1_, state1_, in);
        encode::FrameLits f2 = encode::encode_keyed_frame(*lb_, c_, k2_, state2_, in);
        mismatch_.push_back(encode::vectors_differ(*lb_, f1.outputs, f2.outputs));
        state1_ = std::move(f1.next_state);
        state2_ = std::move(f2.next_state);
        inputs_.push_back(std::move(in));
    }
}

sat::Status Session::bmc(std::size_t b, encode::Distinguisher* out, const sat::Budget& budget)
{
    if (b == 0)
        throw std::invalid_argument("Session::bmc: bound must be at least 1");
    extend_to(b);
    auto it = bmc_act_.find(b);
    if (it == bmc_act_.end()) {
        const Lit act = lb_->fresh();
        std::vector<Lit> cl{-act};
        cl.insert(cl.end(), mismatch_.begin(), mismatch_.begin() + static_cast<std::ptrdiff_t>(b));
        lb_->clause(cl);
        it = bmc_act_.emplace(b, act).first;
    }
    const Lit assume[1] = {it->second};
    const sat::Status st = run(assume, budget);
    if (st == sat::Status::Sat && out) {
        auto value = [this](Lit l) {
            if (cnf::is_const(l))
                return l == cnf::kTrue;
            return solver_->model_value_lit(l);
        };
        const std::vector<std::vector<Lit>> ins(inputs_.begin(), inputs_.begin() + static_cast<std::ptrdiff_t>(b));
        const std::vector<Lit> mm(mismatch_.begin(), mismatch_.begin() + static_cast<std::ptrdiff_t>(b));
        *out = encode::decode_distinguisher(c_, k1_, k2_, ins, mm, value);
    }
    return st;
}

sat::Status Session::uc(const sat::Budget& budget)
{
    if (!uc_act_) {
        uc_act_ = lb_->fresh();
        lb_->clause({-*uc_act_, encode::keys_differ(*lb_, k1_, k2_)});
    }
    const Lit assume[1] = {*uc_act_};
    return run(assume, budget);
}

sat::Status Session::ce(const sat::Budget& budget)
{
    if (!ce_act_) {
        std::vector<Lit> s;
        std::vector<Lit> in;
        for (std::size_t i = 0; i < c_.num_flipflops(); ++i)
            s.push_back(lb_->fresh());
        for (std::size_t i = 0; i < c_.num_inputs(); ++i)
            in.push_back(lb_->fresh());
        const auto f1 = encode::encode_keyed_frame(*lb_, c_, k1_, s, in);
        const auto f2 = encode::encode_keyed_frame(*lb_, c_, k2_, s, in);
        const Lit diff = lb_->or2(encode::vectors_differ(*lb_, f1.outputs, f2.outputs),
                                  encode::vectors_differ(*lb_, f1.next_state, f2.next_state));
        ce_act_ = lb_->fresh();
        lb_->clause({-*ce_act_, diff});
    }
    const Lit assume[1] = {*ce_act_};
    return run(assume, budget);
}

sat::Status Session::consistent(Completion* out, const sat::Budget& budget)
{
    const sat::Status st = run(std::span<const Lit>{}, budget);
    if (st == sat::Status::Sat && out)
        *out = k1_.decode([this](cnf::Var v) { return solver_->model_value(v); });
    return st;
}

// ---------------------------------------------------------------------------
// Standalone operations

std::optional<encode::Distinguisher> find_distinguishing(const CamoCircuit& c, const QuerySet& qs, std::size_t b,
                                                         const AttackConfig& cfg)
{
    const encode::KeyedInstance ki = encode::encode_bmc_disagreement(c, qs, b);
    std::vector<bool> model;
    const sat::Status st = solve_instance(ki.cnf, cfg, &model);
    if (st == sat::Status::Timeout)
        throw SolverTimeout("find_distinguishing: solver budget exhausted");
    if (st == sat::Status::Unsat)
        return std::nullopt;
    return encode::decode_distinguisher(c, ki.k1, *ki.k2, ki.inputs, ki.frame_mismatch,
                                        [&](Lit l) { return encode::lit_value(model, l); });
}

CheckOutcome uc_outcome(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    return outcome_of_unsat_check(solve_instance(encode::encode_uc(c, qs).cnf, cfg));
}

CheckOutcome ce_outcome(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    return outcome_of_unsat_check(solve_instance(encode::encode_ce(c, qs).cnf, cfg));
}

CheckOutcome umc_outcome(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    return umc_impl(c, qs, cfg, [&](std::size_t b) -> std::optional<bool> {
        try {
            return !find_distinguishing(c, qs, b, cfg).has_value();
        } catch (const SolverTimeout&) {
            return std::nullopt;
        }
    });
}

bool check_uc(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    return uc_outcome(c, qs, cfg) == CheckOutcome::Pass;
}

bool check_ce(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    return ce_outcome(c, qs, cfg) == CheckOutcome::Pass;
}

bool check_umc(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    if (cfg.umc_mode == UmcMode::Skip)
        throw std::invalid_argument("check_umc: UMC mode is skip");
    const CheckOutcome o = umc_outcome(c, qs, cfg);
    if (o == CheckOutcome::Inconclusive)
        throw Inconclusive("check_umc: enumeration, product-state or bound cap exceeded");
    return o == CheckOutcome::Pass;
}

namespace {

/// Evaluates one completed circuit on 64 input vectors at once; bit j of a
/// net word is the net's value in lane j.
class WordSim
{
  public:
    WordSim(const CamoCircuit& c, const Completion& x) : circuit_(c.circuit()), nets_(circuit_.num_nets(), 0)
    {
        const auto& gates = circuit_.gates();
        kinds_.reserve(gates.size());
        for (std::size_t g = 0; g < gates.size(); ++g) {
            const std::int64_t cell = c.cell_of_gate(g);
            kinds_.push_back(cell < 0 ? gates[g].kind
                                      : c.cells()[static_cast<std::size_t>(cell)].candidates[x[static_cast<std::size_t>(cell)]]);
        }
    }

    /// `inputs` holds one word per primary input.
    void eval(const BitVec& state, std::span<const std::uint64_t> inputs)
    {
        const auto& ins = circuit_.inputs();
        for (std::size_t i = 0; i < ins.size(); ++i)
            nets_[ins[i]] = inputs[i];
        const auto& ffs = circuit_.flipflops();
        for (std::size_t f = 0; f < ffs.size(); ++f)
            nets_[ffs[f].state] = state[f] ? ~std::uint64_t{0} : 0;
        const auto& gates = circuit_.gates();
        for (std::size_t g = 0; g < gates.size(); ++g) {
            const auto& in = gates[g].inputs;
            std::uint64_t all = ~std::uint64_t{0}, any = 0, parity = 0;
            for (NetId n : in) {
                all &= nets_[n];
                any |= nets_[n];
                parity ^= nets_[n];
            }
            std::uint64_t v = 0;
            switch (kinds_[g]) {
            case GateKind::And: v = all; break;
            case GateKind::Or: v = any; break;
            case GateKind::Nand: v = ~all; break;
            case GateKind::Nor: v = ~any; break;
            case GateKind::Xor: v = parity; break;
            case GateKind::Xnor: v = ~parity; break;
            case GateKind::Not: v = ~any; break;
            case GateKind::Buf: v = any; break;
            case GateKind::Hidden: throw std::logic_error("WordSim: hidden gate function");
            }
            nets_[gates[g].output] = v;
        }
    }

    std::uint64_t net(NetId n) const { return nets_[n]; }

  private:
    const Circuit& circuit_;
    std::vector<GateKind> kinds_;
    std::vector<std::uint64_t> nets_;
};

} // namespace

EquivResult product_equiv(const CamoCircuit& c, const Completion& x1, const Completion& x2, std::uint64_t state_cap,
                          std::uint64_t transition_cap)
{
    c.validate(x1);
    c.validate(x2);
    const std::size_t m = c.num_inputs();
    const std::size_t l = c.num_flipflops();
    EquivResult result;
    if (m >= 40) {
        result.kind = EquivResult::Kind::Inconclusive;
        return result;
    }
    const std::uint64_t n_inputs = std::uint64_t{1} << m;
    const Circuit& base = c.circuit();
    WordSim s1(c, x1);
    WordSim s2(c, x2);

    struct Node
    {
        BitVec a;
        BitVec b;
        std::int64_t parent;
        std::uint64_t input;
    };
    std::vector<Node> nodes;
    std::unordered_map<std::string, std::size_t> seen;
    // States that agree on the observable flip-flops have identical output
    // futures, so they share one node.
    const std::vector<std::size_t> obs = observable_flipflops(base);
    std::string key(2 * obs.size(), '0');
    auto key_of = [&](const BitVec& a, const BitVec& b) {
        for (std::size_t i = 0; i < obs.size(); ++i) {
            key[i] = a[obs[i]] ? '1' : '0';
            key[obs.size() + i] = b[obs[i]] ? '1' : '0';
        }
        return key;
    };
    nodes.push_back({c.reset_state(), c.reset_state(), -1, 0});
    seen.emplace(key_of(c.reset_state(), c.reset_state()), 0);
    std::uint64_t transitions = 0;
    auto finish = [&](EquivResult::Kind kind) {
        result.kind = kind;
        result.states = nodes.size();
        result.transitions = transitions;
        return result;
    };

    // Lane j of a block starting at `first` carries input value first + j.
    constexpr std::uint64_t kLaneBits[6] = {0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
                                            0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};
    std::vector<std::uint64_t> in_words(m);
    const auto& ffs = base.flipflops();
    const auto& outs = base.outputs();

    for (std::size_t head = 0; head < nodes.size(); ++head) {
        for (std::uint64_t first = 0; first < n_inputs; first += 64) {
            const std::uint64_t lanes = std::min<std::uint64_t>(64, n_inputs - first);
            for (std::size_t i = 0; i < m; ++i)
                in_words[i] = i < 6 ? kLaneBits[i] : (((first >> i) & 1U) ? ~std::uint64_t{0} : 0);
            s1.eval(nodes[head].a, in_words);
            s2.eval(nodes[head].b, in_words);
            std::uint64_t diff = 0;
            for (NetId o : outs)
                diff |= s1.net(o) ^ s2.net(o);
            for (std::uint64_t lane = 0; lane < lanes; ++lane) {
                if (++transitions > transition_cap)
                    return finish(EquivResult::Kind::Inconclusive);
                const std::uint64_t in = first + lane;
                if ((diff >> lane) & 1U) {
                    std::vector<BitVec> rev{BitVec::from_uint(in, m)};
                    for (std::int64_t at = static_cast<std::int64_t>(head);
                         nodes[static_cast<std::size_t>(at)].parent >= 0; at = nodes[static_cast<std::size_t>(at)].parent)
                        rev.push_back(BitVec::from_uint(nodes[static_cast<std::size_t>(at)].input, m));
                    std::reverse(rev.begin(), rev.end());
                    result.witness = BitSeq(m, std::move(rev));
                    return finish(EquivResult::Kind::Witness);
                }
                BitVec na(l), nb(l);
                for (std::size_t f = 0; f < l; ++f) {
                    na.set(f, (s1.net(ffs[f].next) >> lane) & 1U);
                    nb.set(f, (s2.net(ffs[f].next) >> lane) & 1U);
                }
                if (seen.emplace(key_of(na, nb), nodes.size()).second) {
                    if (nodes.size() >= state_cap)
                        return finish(EquivResult::Kind::Inconclusive);
                    nodes.push_back({std::move(na), std::move(nb), static_cast<std::int64_t>(head), in});
                }
            }
        }
    }
    return finish(EquivResult::Kind::Equivalent);
}

bool consistent_with(const CamoCircuit& c, const Completion& x, const QuerySet& qs)
{
    const Simulator sim(c, x);
    for (const auto& rec : qs.records())
        if (sim.run(rec.input) != rec.output)
            return false;
    return true;
}

bool brute_force_disc(const CamoCircuit& c, const QuerySet& qs, std::uint64_t completion_cap, std::uint64_t state_cap)
{
    const std::uint64_t n = c.completion_count();
    if (n > completion_cap)
        throw Inconclusive("brute_force_disc: " + std::to_string(n) + " completions exceed the cap");
    std::vector<Completion> consistent;
    for (std::uint64_t i = 0; i < n; ++i) {
        Completion x = c.completion_at(i);
        if (consistent_with(c, x, qs))
            consistent.push_back(std::move(x));
    }
    for (std::size_t i = 0; i < consistent.size(); ++i)
        for (std::size_t j = i + 1; j < consistent.size(); ++j) {
            const EquivResult r = product_equiv(c, consistent[i], consistent[j], state_cap, UINT64_MAX);
            if (r.kind == EquivResult::Kind::Inconclusive)
                throw Inconclusive("brute_force_disc: product-state cap exceeded");
            if (r.kind == EquivResult::Kind::Witness)
                return false;
        }
    return true;
}

std::vector<Completion> enumerate_consistent(const CamoCircuit& c, const QuerySet& qs, std::uint64_t cap,
                                             const AttackConfig& cfg)
{
    KeyedSolver ks(c, qs, cfg);
    std::vector<Completion> out;
    while (out.size() <= cap) {
        const sat::Status st = ks.solver->solve(std::span<const Lit>{}, cfg.solver_budget);
        if (st == sat::Status::Timeout)
            throw SolverTimeout("enumerate_consistent: solver budget exhausted");
        if (st == sat::Status::Unsat)
            break;
        Completion x = ks.key.decode([&](cnf::Var v) { return ks.solver->model_value(v); });
        std::vector<Lit> block = ks.key.pin(x);
        for (Lit& l : block)
            l = -l;
        ks.lb->clause(block);
        out.push_back(std::move(x));
    }
    std::sort(out.begin(), out.end());
    return out;
}

Completion recover_completion(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    KeyedSolver ks(c, qs, cfg);
    const sat::Status st = ks.solver->solve(std::span<const Lit>{}, cfg.solver_budget);
    if (st == sat::Status::Timeout)
        throw SolverTimeout("recover_completion: solver budget exhausted");
    if (st == sat::Status::Unsat)
        throw std::logic_error("recover_completion: no completion is consistent with the observations");
    return ks.key.decode([&](cnf::Var v) { return ks.solver->model_value(v); });
}

std::vector<GateVerdict> partial_completion(const CamoCircuit& c, const QuerySet& qs, const AttackConfig& cfg)
{
    const std::size_t k = c.num_cells();
    std::vector<GateVerdict> verdicts(k);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        KeyedSolver ks(c, qs, cfg);
        for (std::size_t g = next++; g < k; g = next++) {
            std::uint32_t sat_count = 0;
            std::uint32_t last = 0;
            bool timed_out = false;
            for (std::uint32_t v = 0; v < ks.key.arity[g]; ++v) {
                const auto pins = ks.key.pin(g, v);
                const sat::Status st = ks.solver->solve(pins, cfg.solver_budget);
                if (st == sat::Status::Timeout)
                    timed_out = true;
                if (st == sat::Status::Sat) {
                    ++sat_count;
                    last = v;
                }
            }
            verdicts[g] = (!timed_out && sat_count == 1) ? GateVerdict{true, last} : GateVerdict{};
        }
    };
    const unsigned jobs = std::max(1U, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(k)));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    return verdicts;
}

// ---------------------------------------------------------------------------
// Main loop

AttackReport run_attack(const CamoCircuit& c, Oracle& oracle, const AttackConfig& cfg)
{
    cfg.validate();
    if (oracle.input_width() != c.num_inputs() || oracle.output_width() != c.num_outputs())
        throw std::invalid_argument("run_attack: oracle interface does not match the netlist");

    const auto t0 = Clock::now();
    const std::uint64_t queries0 = oracle.query_count();
    const std::uint64_t steps0 = oracle.step_count();
    AttackReport rep;
    Session session(c, cfg);

    auto budget = [&]() -> std::optional<sat::Budget> {
        sat::Budget b = cfg.solver_budget;
        if (cfg.time_limit) {
            const double left = *cfg.time_limit - seconds_since(t0);
            if (left <= 0)
                return std::nullopt;
            b.seconds = b.seconds ? std::min(*b.seconds, left) : left;
        }
        return b;
    };
    auto notify = [&](SolveEvent::Kind kind, std::size_t bound, sat::Status st) {
        if (cfg.observer)
            cfg.observer(SolveEvent{kind, bound, &rep.disc_set, st});
    };

    std::size_t b = cfg.bmc_inc;
    std::optional<std::pair<std::size_t, CheckOutcome>> umc_memo;
    bool done = false;
    while (!done) {
        const auto bud = budget();
        if (!bud) {
            rep.termination = Termination::Timeout;
            break;
        }
        const auto it0 = Clock::now();
        encode::Distinguisher d;
        const sat::Status st = session.bmc(b, &d, *bud);
        notify(SolveEvent::Kind::Bmc, b, st);
        if (st == sat::Status::Timeout) {
            rep.termination = Termination::Timeout;
            break;
        }
        if (st == sat::Status::Sat) {
            BitSeq observed = oracle.query(d.inputs);
            const BitSeq o1 = run_sequence(c, d.x1, d.inputs);
            const BitSeq o2 = run_sequence(c, d.x2, d.inputs);
            if (o1 == o2)
                throw std::logic_error("run_attack: returned completions do not disagree on the new sequence");
            if (!rep.disc_set.record(d.inputs, observed))
                throw std::logic_error("run_attack: distinguishing sequence was already in the query set");
            if (o1 == observed && o2 == observed)
                throw std::logic_error("run_attack: new query eliminates neither completion");
            session.add_record(rep.disc_set.records().back());
            rep.iterations.push_back(IterationLog{b, d.inputs.size(), d.x1, d.x2, session.last_stats(),
                                                  seconds_since(it0)});
            continue;
        }

        // No distinguisher of length <= b: run the termination checks.
        if (const auto bb = budget(); bb && session.consistent(nullptr, *bb) == sat::Status::Unsat)
            throw InconsistentOracle("no completion of the netlist reproduces the observed outputs");
        auto timed_check = [&](const char* name, auto&& fn) {
            const auto tc = Clock::now();
            const CheckOutcome o = fn();
            rep.checks.push_back(CheckLog{b, name, o, seconds_since(tc)});
            return o == CheckOutcome::Pass;
        };
        if (timed_check("UC", [&] {
                const auto bb = budget();
                if (!bb)
                    return CheckOutcome::Inconclusive;
                const sat::Status s = session.uc(*bb);
                notify(SolveEvent::Kind::Uc, b, s);
                return outcome_of_unsat_check(s);
            })) {
            rep.termination = Termination::UC;
            break;
        }
        if (timed_check("CE", [&] {
                const auto bb = budget();
                if (!bb)
                    return CheckOutcome::Inconclusive;
                const sat::Status s = session.ce(*bb);
                notify(SolveEvent::Kind::Ce, b, s);
                return outcome_of_unsat_check(s);
            })) {
            rep.termination = Termination::CE;
            break;
        }
        if (cfg.umc_mode != UmcMode::Skip && timed_check("UMC", [&] {
                // The verdict depends only on the records, not on b.
                if (umc_memo && umc_memo->first == rep.disc_set.size())
                    return umc_memo->second;
                AttackConfig sub = cfg;
                if (auto bb = budget())
                    sub.solver_budget = *bb;
                else
                    return CheckOutcome::Inconclusive;
                const CheckOutcome o = umc_impl(c, rep.disc_set, sub, [&](std::size_t bound) -> std::optional<bool> {
                    const auto bb = budget();
                    if (!bb)
                        return std::nullopt;
                    const sat::Status s = session.bmc(bound, nullptr, *bb);
                    notify(SolveEvent::Kind::Bmc, bound, s);
                    if (s == sat::Status::Timeout)
                        return std::nullopt;
                    return s == sat::Status::Unsat;
                });
                umc_memo.emplace(rep.disc_set.size(), o);
                return o;
            })) {
            rep.termination = Termination::UMC;
            break;
        }
        if (b + cfg.bmc_inc > cfg.max_bound) {
            rep.termination = budget() ? Termination::Exhausted : Termination::Timeout;
            done = true;
        } else {
            b += cfg.bmc_inc;
        }
    }
    rep.final_bound = b;

    if (rep.success()) {
        if (cfg.enumerate_all) {
            rep.completions = enumerate_consistent(c, rep.disc_set, cfg.enum_cap, cfg);
            if (rep.completions.size() > cfg.enum_cap)
                rep.completions.resize(cfg.enum_cap);
        } else {
            Completion x;
            const sat::Status st = session.consistent(&x, cfg.solver_budget);
            if (st != sat::Status::Sat)
                throw std::logic_error("run_attack: no consistent completion after a successful check");
            rep.completions.push_back(std::move(x));
        }
        for (const auto& x : rep.completions)
            if (!consistent_with(c, x, rep.disc_set))
                throw std::logic_error("run_attack: recovered completion " + x.to_string() +
                                       " contradicts the observations");
    } else {
        AttackConfig sub = cfg;
        sub.observer = nullptr;
        rep.partial = partial_completion(c, rep.disc_set, sub);
    }

    rep.queries = oracle.query_count() - queries0;
    rep.steps = oracle.step_count() - steps0;
    rep.solver = session.total_stats();
    rep.seconds = seconds_since(t0);
    return rep;
}

} // namespace seqcamo::attack
