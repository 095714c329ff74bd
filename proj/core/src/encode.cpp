#include "seqcamo/encode.hpp"

#include <algorithm>
#include <stdexcept>

namespace seqcamo::encode {

namespace {

constexpr Lit kTagAnd = 1;
constexpr Lit kTagXor = 2;
constexpr Lit kTagMux = 3;

} // namespace

std::size_t LogicBuilder::KeyHash::operator()(const std::vector<Lit>& v) const noexcept
{
    std::size_t h = 1469598103934665603ULL;
    for (Lit l : v) {
        h ^= static_cast<std::size_t>(static_cast<unsigned>(l));
        h *= 1099511628211ULL;
    }
    return h;
}

std::optional<Lit> LogicBuilder::lookup(const std::vector<Lit>& key) const
{
    if (auto it = cache_.find(key); it != cache_.end())
        return it->second;
    return std::nullopt;
}

Lit LogicBuilder::and_of(std::span<const Lit> xs)
{
    std::vector<Lit> key;
    key.reserve(xs.size() + 1);
    for (Lit x : xs) {
        if (x == cnf::kFalse)
            return cnf::kFalse;
        if (x != cnf::kTrue)
            key.push_back(x);
    }
    std::sort(key.begin(), key.end(), [](Lit a, Lit b) {
        return cnf::var_of(a) != cnf::var_of(b) ? cnf::var_of(a) < cnf::var_of(b) : a < b;
    });
    key.erase(std::unique(key.begin(), key.end()), key.end());
    for (std::size_t i = 0; i + 1 < key.size(); ++i)
        if (key[i] == -key[i + 1])
            return cnf::kFalse;
    if (key.empty())
        return cnf::kTrue;
    if (key.size() == 1)
        return key[0];

    key.insert(key.begin(), kTagAnd);
    if (auto hit = lookup(key))
        return *hit;
    const Lit o = fresh();
    std::vector<Lit> big{o};
    for (std::size_t i = 1; i < key.size(); ++i) {
        sink_->add_clause({-o, key[i]});
        big.push_back(-key[i]);
    }
    sink_->add_clause(big);
    cache_.emplace(std::move(key), o);
    return o;
}

Lit LogicBuilder::or_of(std::span<const Lit> xs)
{
    std::vector<Lit> neg(xs.begin(), xs.end());
    for (Lit& l : neg)
        l = -l;
    return -and_of(neg);
}

Lit LogicBuilder::and2(Lit a, Lit b)
{
    const Lit xs[2] = {a, b};
    return and_of(xs);
}

Lit LogicBuilder::or2(Lit a, Lit b)
{
    const Lit xs[2] = {a, b};
    return or_of(xs);
}

Lit LogicBuilder::xor2(Lit a, Lit b)
{
    if (cnf::is_const(a))
        return a == cnf::kTrue ? -b : b;
    if (cnf::is_const(b))
        return b == cnf::kTrue ? -a : a;
    if (a == b)
        return cnf::kFalse;
    if (a == -b)
        return cnf::kTrue;
    const bool neg = (a < 0) != (b < 0);
    a = cnf::var_of(a);
    b = cnf::var_of(b);
    if (a > b)
        std::swap(a, b);
    std::vector<Lit> key{kTagXor, a, b};
    Lit o;
    if (auto hit = lookup(key)) {
        o = *hit;
    } else {
        o = fresh();
        sink_->add_clause({-o, a, b});
        sink_->add_clause({-o, -a, -b});
        sink_->add_clause({o, -a, b});
        sink_->add_clause({o, a, -b});
        cache_.emplace(std::move(key), o);
    }
    return neg ? -o : o;
}

Lit LogicBuilder::mux(Lit sel, Lit if_false, Lit if_true)
{
    if (cnf::is_const(sel))
        return sel == cnf::kTrue ? if_true : if_false;
    if (if_false == if_true)
        return if_false;
    if (sel < 0)
        return mux(-sel, if_true, if_false);
    if (if_false == cnf::kFalse)
        return and2(sel, if_true);
    if (if_false == cnf::kTrue)
        return or2(-sel, if_true);
    if (if_true == cnf::kFalse)
        return and2(-sel, if_false);
    if (if_true == cnf::kTrue)
        return or2(sel, if_false);
    if (if_false == -if_true)
        return xor2(sel, if_false);
    if (if_true == sel)
        return or2(sel, if_false);
    if (if_true == -sel)
        return and2(-sel, if_false);
    if (if_false == sel)
        return and2(sel, if_true);
    if (if_false == -sel)
        return or2(-sel, if_true);

    std::vector<Lit> key{kTagMux, sel, if_false, if_true};
    if (auto hit = lookup(key))
        return *hit;
    const Lit o = fresh();
    sink_->add_clause({-sel, -if_true, o});
    sink_->add_clause({-sel, if_true, -o});
    sink_->add_clause({sel, -if_false, o});
    sink_->add_clause({sel, if_false, -o});
    sink_->add_clause({-if_false, -if_true, o});
    sink_->add_clause({if_false, if_true, -o});
    cache_.emplace(std::move(key), o);
    return o;
}

Lit LogicBuilder::gate(GateKind kind, std::span<const Lit> xs)
{
    switch (kind) {
    case GateKind::And: return and_of(xs);
    case GateKind::Or: return or_of(xs);
    case GateKind::Nand: return -and_of(xs);
    case GateKind::Nor: return -or_of(xs);
    case GateKind::Xor:
    case GateKind::Xnor: {
        Lit acc = cnf::kFalse;
        for (Lit x : xs)
            acc = xor2(acc, x);
        return kind == GateKind::Xor ? acc : -acc;
    }
    case GateKind::Not: return -xs[0];
    case GateKind::Buf: return xs[0];
    case GateKind::Hidden: break;
    }
    throw std::logic_error("LogicBuilder::gate: hidden gate function");
}

void LogicBuilder::clause(std::span<const Lit> lits)
{
    std::vector<Lit> out;
    out.reserve(lits.size());
    for (Lit l : lits) {
        if (l == cnf::kTrue)
            return;
        if (l != cnf::kFalse)
            out.push_back(l);
    }
    sink_->add_clause(out);
}

void LogicBuilder::require_equal(Lit a, Lit b)
{
    clause({-a, b});
    clause({a, -b});
}

std::vector<Lit> constants(const BitVec& v)
{
    std::vector<Lit> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = constant(v[i]);
    return out;
}

bool lit_value(const std::vector<bool>& model, Lit l)
{
    if (l == cnf::kTrue)
        return true;
    if (l == cnf::kFalse)
        return false;
    const bool v = model.at(static_cast<std::size_t>(cnf::var_of(l)));
    return l > 0 ? v : !v;
}

// ---------------------------------------------------------------------------
// Keys

unsigned bits_for(std::uint32_t t)
{
    unsigned w = 0;
    while ((std::uint64_t{1} << w) < t)
        ++w;
    return std::max(w, 1U);
}

std::vector<Var> KeyVector::vars() const
{
    std::vector<Var> out;
    for (const auto& cell : cells)
        for (Lit l : cell)
            out.push_back(cnf::var_of(l));
    return out;
}

std::vector<Lit> KeyVector::pin(std::size_t cell, std::uint32_t value) const
{
    const auto& bits = cells.at(cell);
    std::vector<Lit> out;
    for (std::size_t j = 0; j < bits.size(); ++j)
        out.push_back((value >> j) & 1U ? bits[j] : -bits[j]);
    return out;
}

std::vector<Lit> KeyVector::pin(const Completion& x) const
{
    if (x.size() != cells.size())
        throw std::invalid_argument("KeyVector::pin: completion has wrong length");
    std::vector<Lit> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto p = pin(i, x[i]);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

Completion KeyVector::decode(const std::function<bool(Var)>& value) const
{
    std::vector<std::uint32_t> choices;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        std::uint32_t v = 0;
        for (std::size_t j = 0; j < cells[i].size(); ++j) {
            const Lit l = cells[i][j];
            const bool b = value(cnf::var_of(l)) == (l > 0);
            if (b)
                v |= 1U << j;
        }
        if (v >= arity[i])
            throw std::logic_error("KeyVector::decode: key value outside candidate range");
        choices.push_back(v);
    }
    return Completion(std::move(choices));
}

Completion KeyVector::decode(const std::vector<bool>& model) const
{
    return decode([&](Var v) { return static_cast<bool>(model.at(static_cast<std::size_t>(v))); });
}

KeyVector make_key(LogicBuilder& lb, const CamoCircuit& c)
{
    KeyVector key;
    for (const auto& cell : c.cells()) {
        const auto t = static_cast<std::uint32_t>(cell.candidates.size());
        const unsigned w = bits_for(t);
        std::vector<Lit> bits;
        for (unsigned j = 0; j < w; ++j)
            bits.push_back(lb.fresh());
        for (std::uint64_t v = t; v < (std::uint64_t{1} << w); ++v) {
            std::vector<Lit> block;
            for (unsigned j = 0; j < w; ++j)
                block.push_back((v >> j) & 1U ? -bits[j] : bits[j]);
            lb.clause(block);
        }
        key.cells.push_back(std::move(bits));
        key.arity.push_back(t);
    }
    return key;
}

Lit keys_differ(LogicBuilder& lb, const KeyVector& a, const KeyVector& b)
{
    std::vector<Lit> diffs;
    for (std::size_t i = 0; i < a.cells.size(); ++i)
        for (std::size_t j = 0; j < a.cells[i].size(); ++j)
            diffs.push_back(lb.xor2(a.cells[i][j], b.cells[i][j]));
    return lb.or_of(diffs);
}

// ---------------------------------------------------------------------------
// Frames

FrameLits encode_keyed_frame(LogicBuilder& lb, const CamoCircuit& c, const KeyVector& key,
                             std::span<const Lit> state, std::span<const Lit> input)
{
    const Circuit& ckt = c.circuit();
    if (state.size() != ckt.flipflops().size() || input.size() != ckt.inputs().size())
        throw std::invalid_argument("encode_keyed_frame: state/input width mismatch");
    std::vector<Lit> net(ckt.num_nets(), 0);
    for (std::size_t i = 0; i < input.size(); ++i)
        net[ckt.inputs()[i]] = input[i];
    for (std::size_t i = 0; i < state.size(); ++i)
        net[ckt.flipflops()[i].state] = state[i];

    std::vector<Lit> ins;
    for (std::size_t g = 0; g < ckt.gates().size(); ++g) {
        const Gate& gate = ckt.gates()[g];
        ins.clear();
        for (NetId n : gate.inputs)
            ins.push_back(net[n]);
        const std::int64_t cell = c.cell_of_gate(g);
        if (cell < 0) {
            net[gate.output] = lb.gate(gate.kind, ins);
            continue;
        }
        const auto& cands = c.cells()[static_cast<std::size_t>(cell)].candidates;
        std::vector<Lit> level;
        for (GateKind k : cands)
            level.push_back(lb.gate(k, ins));
        for (Lit bit : key.cells[static_cast<std::size_t>(cell)]) {
            std::vector<Lit> next;
            for (std::size_t i = 0; i < level.size(); i += 2)
                next.push_back(i + 1 < level.size() ? lb.mux(bit, level[i], level[i + 1]) : level[i]);
            level = std::move(next);
        }
        net[gate.output] = level[0];
    }

    FrameLits f;
    for (NetId o : ckt.outputs())
        f.outputs.push_back(net[o]);
    for (const auto& ff : ckt.flipflops())
        f.next_state.push_back(net[ff.next]);
    return f;
}

Lit vectors_differ(LogicBuilder& lb, std::span<const Lit> a, std::span<const Lit> b)
{
    std::vector<Lit> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        diffs.push_back(lb.xor2(a[i], b[i]));
    return lb.or_of(diffs);
}

void constrain_consistent(LogicBuilder& lb, const CamoCircuit& c, const KeyVector& key, const QueryRecord& rec)
{
    std::vector<Lit> state = constants(c.reset_state());
    for (std::size_t t = 0; t < rec.input.size(); ++t) {
        FrameLits f = encode_keyed_frame(lb, c, key, state, constants(rec.input[t]));
        for (std::size_t j = 0; j < f.outputs.size(); ++j)
            lb.require(rec.output[t][j] ? f.outputs[j] : -f.outputs[j]);
        state = std::move(f.next_state);
    }
}

Unrolling unroll(LogicBuilder& lb, const CamoCircuit& c, const KeyVector& key, const UnrollSpec& spec,
                 const Unrolling* shared)
{
    if (spec.fix_inputs && spec.fix_inputs->size() != spec.frames)
        throw std::invalid_argument("unroll: fix_inputs length differs from frame count");
    if (spec.fix_outputs && spec.fix_outputs->size() != spec.frames)
        throw std::invalid_argument("unroll: fix_outputs length differs from frame count");
    if (spec.share_inputs && shared && shared->inputs.size() < spec.frames)
        throw std::invalid_argument("unroll: shared unrolling too short");

    Unrolling u;
    u.states.push_back(constants(c.reset_state()));
    for (std::size_t t = 0; t < spec.frames; ++t) {
        std::vector<Lit> in;
        if (spec.share_inputs && shared) {
            in = shared->inputs[t];
        } else if (spec.fix_inputs) {
            in = constants((*spec.fix_inputs)[t]);
        } else {
            for (std::size_t i = 0; i < c.num_inputs(); ++i)
                in.push_back(lb.fresh());
        }
        FrameLits f = encode_keyed_frame(lb, c, key, u.states.back(), in);
        if (spec.fix_outputs)
            for (std::size_t j = 0; j < f.outputs.size(); ++j)
                lb.require((*spec.fix_outputs)[t][j] ? f.outputs[j] : -f.outputs[j]);
        u.inputs.push_back(std::move(in));
        u.outputs.push_back(std::move(f.outputs));
        u.states.push_back(std::move(f.next_state));
    }
    return u;
}

// ---------------------------------------------------------------------------
// Standalone instances

namespace {

void group_lits(cnf::CnfInstance& inst, const std::string& name, std::span<const Lit> lits)
{
    std::vector<Var> vars;
    for (Lit l : lits)
        if (!cnf::is_const(l))
            vars.push_back(cnf::var_of(l));
    inst.add_group(name, std::move(vars));
}

KeyVector consistent_key(LogicBuilder& lb, const CamoCircuit& c, const QuerySet& qs)
{
    KeyVector key = make_key(lb, c);
    for (const auto& rec : qs.records())
        constrain_consistent(lb, c, key, rec);
    return key;
}

} // namespace

KeyedInstance encode_consistency(const CamoCircuit& c, const QuerySet& qs)
{
    KeyedInstance ki;
    LogicBuilder lb(ki.cnf);
    ki.k1 = consistent_key(lb, c, qs);
    ki.cnf.add_group("K1", ki.k1.vars());
    return ki;
}

KeyedInstance encode_bmc_disagreement(const CamoCircuit& c, const QuerySet& qs, std::size_t b)
{
    if (b == 0)
        throw std::invalid_argument("encode_bmc_disagreement: bound must be at least 1");
    KeyedInstance ki;
    LogicBuilder lb(ki.cnf);
    ki.k1 = consistent_key(lb, c, qs);
    ki.k2 = consistent_key(lb, c, qs);
    UnrollSpec spec;
    spec.frames = b;
    const Unrolling u1 = unroll(lb, c, ki.k1, spec);
    const Unrolling u2 = unroll(lb, c, *ki.k2, spec, &u1);
    for (std::size_t t = 0; t < b; ++t)
        ki.frame_mismatch.push_back(vectors_differ(lb, u1.outputs[t], u2.outputs[t]));
    lb.clause(ki.frame_mismatch);
    ki.inputs = u1.inputs;

    ki.cnf.add_group("K1", ki.k1.vars());
    ki.cnf.add_group("K2", ki.k2->vars());
    for (std::size_t t = 0; t < b; ++t) {
        group_lits(ki.cnf, "I@" + std::to_string(t), ki.inputs[t]);
        if (!cnf::is_const(ki.frame_mismatch[t]))
            ki.cnf.set_label("diff@" + std::to_string(t), ki.frame_mismatch[t]);
    }
    return ki;
}

KeyedInstance encode_uc(const CamoCircuit& c, const QuerySet& qs)
{
    KeyedInstance ki;
    LogicBuilder lb(ki.cnf);
    ki.k1 = consistent_key(lb, c, qs);
    ki.k2 = consistent_key(lb, c, qs);
    lb.require(keys_differ(lb, ki.k1, *ki.k2));
    ki.cnf.add_group("K1", ki.k1.vars());
    ki.cnf.add_group("K2", ki.k2->vars());
    return ki;
}

KeyedInstance encode_ce(const CamoCircuit& c, const QuerySet& qs)
{
    KeyedInstance ki;
    LogicBuilder lb(ki.cnf);
    ki.k1 = consistent_key(lb, c, qs);
    ki.k2 = consistent_key(lb, c, qs);
    for (std::size_t i = 0; i < c.num_flipflops(); ++i)
        ki.free_state.push_back(lb.fresh());
    std::vector<Lit> in;
    for (std::size_t i = 0; i < c.num_inputs(); ++i)
        in.push_back(lb.fresh());
    const FrameLits f1 = encode_keyed_frame(lb, c, ki.k1, ki.free_state, in);
    const FrameLits f2 = encode_keyed_frame(lb, c, *ki.k2, ki.free_state, in);
    lb.require(lb.or2(vectors_differ(lb, f1.outputs, f2.outputs), vectors_differ(lb, f1.next_state, f2.next_state)));
    ki.inputs.push_back(in);

    ki.cnf.add_group("K1", ki.k1.vars());
    ki.cnf.add_group("K2", ki.k2->vars());
    group_lits(ki.cnf, "I@0", in);
    group_lits(ki.cnf, "S", ki.free_state);
    return ki;
}

Distinguisher decode_distinguisher(const CamoCircuit& c, const KeyVector& k1, const KeyVector& k2,
                                   const std::vector<std::vector<Lit>>& inputs,
                                   const std::vector<Lit>& frame_mismatch, const std::function<bool(Lit)>& value)
{
    std::size_t stop = frame_mismatch.size();
    for (std::size_t t = 0; t < frame_mismatch.size(); ++t)
        if (value(frame_mismatch[t])) {
            stop = t;
            break;
        }
    if (stop == frame_mismatch.size())
        throw std::logic_error("decode_distinguisher: model has no mismatching frame");
    Distinguisher d;
    auto var_value = [&](Var v) { return value(v); };
    d.x1 = k1.decode(var_value);
    d.x2 = k2.decode(var_value);
    d.inputs = BitSeq(c.num_inputs());
    for (std::size_t t = 0; t <= stop; ++t) {
        BitVec step(c.num_inputs());
        for (std::size_t i = 0; i < c.num_inputs(); ++i)
            step.set(i, value(inputs[t][i]));
        d.inputs.push_back(std::move(step));
    }
    return d;
}

} // namespace seqcamo::encode
