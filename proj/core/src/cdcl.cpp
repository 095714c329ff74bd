#include "seqcamo/sat.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>

namespace seqcamo::sat {

namespace {

// Internal literal: 2 * (var - 1) + sign, sign = 1 for negative.
using ILit = std::uint32_t;
using CRef = std::uint32_t;
constexpr CRef kNoReason = UINT32_MAX;

inline ILit to_ilit(Lit l) { return static_cast<ILit>(2 * (cnf::var_of(l) - 1) + (l < 0 ? 1 : 0)); }
inline std::uint32_t ivar(ILit l) { return l >> 1; }
inline ILit neg(ILit l) { return l ^ 1U; }

// lbool encoding: 0 = undefined, 1 = true, -1 = false
using LBool = std::int8_t;

// Clause arena layout at offset cr: size, flags (bit 0 learnt, bit 1 deleted,
// lbd above), activity (float bits), then the literals.
constexpr std::uint32_t kHeader = 3;
constexpr std::uint32_t kLearnt = 1;
constexpr std::uint32_t kDeleted = 2;

struct Watcher
{
    CRef cref;
    ILit blocker;
};

} // namespace

struct CdclSolver::Impl
{
    // problem
    std::vector<std::uint32_t> arena;
    std::size_t wasted = 0;
    std::vector<CRef> learnts;
    std::vector<std::vector<Lit>> original;  // for model verification
    bool ok = true;

    // assignment
    std::vector<LBool> assigns;
    std::vector<std::int32_t> level;
    std::vector<CRef> reason;
    std::vector<ILit> trail;
    std::vector<std::size_t> trail_lim;
    std::size_t qhead = 0;
    std::vector<std::vector<Watcher>> watches;  // indexed by literal that became true

    // heuristics
    std::vector<double> activity;
    std::vector<std::uint8_t> polarity;  // saved phase: 1 = negative
    double var_inc = 1.0;
    double var_decay = 0.8;
    float cla_inc = 1.0F;
    std::vector<std::uint32_t> heap;
    std::vector<std::int32_t> heap_pos;

    // analysis scratch
    std::vector<std::uint8_t> seen;
    std::vector<ILit> to_clear;
    std::vector<ILit> minimize_stack;
    std::vector<std::uint32_t> last_level_vars;
    std::vector<std::uint64_t> level_stamp;
    std::uint64_t stamp = 0;

    std::vector<bool> model;
    SolveStats stats;
    // restarts and clause deletion driven by learnt-clause LBD
    std::array<std::uint32_t, 50> recent_lbd{};
    std::size_t recent_count = 0;
    std::uint64_t recent_sum = 0;
    std::uint64_t total_lbd = 0;
    std::uint64_t total_conflicts = 0;
    std::array<std::uint32_t, 5000> recent_trail{};
    std::size_t trail_count = 0;
    std::uint64_t trail_sum = 0;
    std::uint64_t next_reduce = 2000;
    std::uint64_t reduce_step = 2000;

    std::uint32_t num_vars() const { return static_cast<std::uint32_t>(assigns.size()); }
    LBool value(ILit l) const
    {
        LBool v = assigns[ivar(l)];
        return (l & 1U) ? static_cast<LBool>(-v) : v;
    }
    std::int32_t decision_level() const { return static_cast<std::int32_t>(trail_lim.size()); }

    // --- clause arena ----------------------------------------------------
    std::uint32_t csize(CRef cr) const { return arena[cr]; }
    ILit* lits(CRef cr) { return arena.data() + cr + kHeader; }
    const ILit* lits(CRef cr) const { return arena.data() + cr + kHeader; }
    bool is_learnt(CRef cr) const { return (arena[cr + 1] & kLearnt) != 0; }
    bool is_deleted(CRef cr) const { return (arena[cr + 1] & kDeleted) != 0; }
    std::uint32_t lbd(CRef cr) const { return arena[cr + 1] >> 2; }
    float cactivity(CRef cr) const { return std::bit_cast<float>(arena[cr + 2]); }
    void set_cactivity(CRef cr, float a) { arena[cr + 2] = std::bit_cast<std::uint32_t>(a); }

    CRef alloc(std::span<const ILit> ls, bool learnt, std::uint32_t lbd_value)
    {
        const auto cr = static_cast<CRef>(arena.size());
        arena.push_back(static_cast<std::uint32_t>(ls.size()));
        arena.push_back((lbd_value << 2) | (learnt ? kLearnt : 0U));
        arena.push_back(0);
        arena.insert(arena.end(), ls.begin(), ls.end());
        return cr;
    }

    // --- heap ------------------------------------------------------------
    bool heap_less(std::uint32_t a, std::uint32_t b) const
    {
        return activity[a] > activity[b] || (activity[a] == activity[b] && a < b);
    }
    void heap_up(std::size_t i)
    {
        std::uint32_t v = heap[i];
        while (i > 0) {
            std::size_t p = (i - 1) / 2;
            if (!heap_less(v, heap[p]))
                break;
            heap[i] = heap[p];
            heap_pos[heap[i]] = static_cast<std::int32_t>(i);
            i = p;
        }
        heap[i] = v;
        heap_pos[v] = static_cast<std::int32_t>(i);
    }
    void heap_down(std::size_t i)
    {
        std::uint32_t v = heap[i];
        for (;;) {
            std::size_t c = 2 * i + 1;
            if (c >= heap.size())
                break;
            if (c + 1 < heap.size() && heap_less(heap[c + 1], heap[c]))
                ++c;
            if (!heap_less(heap[c], v))
                break;
            heap[i] = heap[c];
            heap_pos[heap[i]] = static_cast<std::int32_t>(i);
            i = c;
        }
        heap[i] = v;
        heap_pos[v] = static_cast<std::int32_t>(i);
    }
    void heap_insert(std::uint32_t v)
    {
        if (heap_pos[v] >= 0)
            return;
        heap.push_back(v);
        heap_up(heap.size() - 1);
    }
    std::uint32_t heap_pop()
    {
        std::uint32_t top = heap[0];
        heap_pos[top] = -1;
        std::uint32_t last = heap.back();
        heap.pop_back();
        if (!heap.empty()) {
            heap[0] = last;
            heap_pos[last] = 0;
            heap_down(0);
        }
        return top;
    }

    void bump_var(std::uint32_t v)
    {
        activity[v] += var_inc;
        if (activity[v] > 1e100) {
            for (auto& a : activity)
                a *= 1e-100;
            var_inc *= 1e-100;
        }
        if (heap_pos[v] >= 0)
            heap_up(static_cast<std::size_t>(heap_pos[v]));
    }
    void bump_clause(CRef cr)
    {
        set_cactivity(cr, cactivity(cr) + cla_inc);
        if (cactivity(cr) > 1e20F) {
            for (CRef r : learnts)
                set_cactivity(r, cactivity(r) * 1e-20F);
            cla_inc *= 1e-20F;
        }
    }

    // --- core ------------------------------------------------------------
    Var new_var()
    {
        const std::uint32_t v = num_vars();
        assigns.push_back(0);
        level.push_back(0);
        reason.push_back(kNoReason);
        activity.push_back(0);
        polarity.push_back(1);
        seen.push_back(0);
        heap_pos.push_back(-1);
        level_stamp.push_back(0);
        level_stamp.push_back(0);
        watches.emplace_back();
        watches.emplace_back();
        heap_insert(v);
        return static_cast<Var>(v + 1);
    }

    void enqueue(ILit l, CRef from)
    {
        const std::uint32_t v = ivar(l);
        assigns[v] = (l & 1U) ? -1 : 1;
        level[v] = decision_level();
        reason[v] = from;
        trail.push_back(l);
    }

    void attach(CRef cr)
    {
        const ILit* c = lits(cr);
        watches[neg(c[0])].push_back({cr, c[1]});
        watches[neg(c[1])].push_back({cr, c[0]});
    }

    CRef propagate()
    {
        CRef conflict = kNoReason;
        while (qhead < trail.size()) {
            const ILit p = trail[qhead++];  // p became true; clauses watching ~p
            const ILit false_lit = neg(p);
            auto& ws = watches[p];
            ++stats.propagations;
            Watcher* i = ws.data();
            Watcher* j = i;
            Watcher* const end = i + ws.size();
            while (i != end) {
                if (value(i->blocker) == 1) {
                    *j++ = *i++;
                    continue;
                }
                const CRef cr = i->cref;
                const ILit blocker = i->blocker;
                ILit* c = lits(cr);
                if (c[0] == false_lit)
                    std::swap(c[0], c[1]);
                ++i;
                const ILit first = c[0];
                const Watcher w{cr, first};
                if (first != blocker && value(first) == 1) {
                    *j++ = w;
                    continue;
                }
                const std::uint32_t n = csize(cr);
                bool moved = false;
                for (std::uint32_t k = 2; k < n; ++k) {
                    if (value(c[k]) != -1) {
                        c[1] = c[k];
                        c[k] = false_lit;
                        // neg(c[1]) != p, so ws is not reallocated here.
                        watches[neg(c[1])].push_back(w);
                        moved = true;
                        break;
                    }
                }
                if (moved)
                    continue;
                *j++ = w;
                if (value(first) == -1) {
                    conflict = cr;
                    qhead = trail.size();
                    while (i != end)
                        *j++ = *i++;
                } else {
                    enqueue(first, cr);
                }
            }
            ws.resize(static_cast<std::size_t>(j - ws.data()));
            if (conflict != kNoReason)
                break;
        }
        return conflict;
    }

    void cancel_until(std::int32_t lvl)
    {
        if (decision_level() <= lvl)
            return;
        for (std::size_t c = trail.size(); c-- > trail_lim[static_cast<std::size_t>(lvl)];) {
            const std::uint32_t v = ivar(trail[c]);
            assigns[v] = 0;
            reason[v] = kNoReason;
            polarity[v] = trail[c] & 1U;
            heap_insert(v);
        }
        trail.resize(trail_lim[static_cast<std::size_t>(lvl)]);
        trail_lim.resize(static_cast<std::size_t>(lvl));
        qhead = trail.size();
    }

    std::uint32_t abstract_level(std::uint32_t v) const { return 1U << (static_cast<std::uint32_t>(level[v]) & 31U); }

    // True when p is implied by literals of the learnt clause (seen marks).
    bool redundant(ILit p, std::uint32_t levels)
    {
        minimize_stack.clear();
        minimize_stack.push_back(p);
        const std::size_t top = to_clear.size();
        while (!minimize_stack.empty()) {
            const ILit q = minimize_stack.back();
            minimize_stack.pop_back();
            const CRef r = reason[ivar(q)];
            const ILit* c = lits(r);
            const std::uint32_t n = csize(r);
            for (std::uint32_t k = 1; k < n; ++k) {
                const ILit l = c[k];
                const std::uint32_t v = ivar(l);
                if (seen[v] || level[v] == 0)
                    continue;
                if (reason[v] != kNoReason && (abstract_level(v) & levels) != 0) {
                    seen[v] = 1;
                    minimize_stack.push_back(l);
                    to_clear.push_back(l);
                } else {
                    for (std::size_t t = top; t < to_clear.size(); ++t)
                        seen[ivar(to_clear[t])] = 0;
                    to_clear.resize(top);
                    return false;
                }
            }
        }
        return true;
    }

    void analyze(CRef conflict, std::vector<ILit>& out_learnt, std::int32_t& out_level)
    {
        int path = 0;
        ILit p = UINT32_MAX;
        last_level_vars.clear();
        out_learnt.clear();
        out_learnt.push_back(0);
        std::size_t index = trail.size();
        CRef cr = conflict;
        do {
            const ILit* c = lits(cr);
            const std::uint32_t n = csize(cr);
            if (is_learnt(cr)) {
                bump_clause(cr);
                if (lbd(cr) > 2) {
                    const std::uint32_t fresh = compute_lbd({c, n});
                    if (fresh + 1 < lbd(cr))
                        arena[cr + 1] = (fresh << 2) | (arena[cr + 1] & 3U);
                }
            }
            for (std::uint32_t k = (p == UINT32_MAX) ? 0 : 1; k < n; ++k) {
                const ILit q = c[k];
                const std::uint32_t v = ivar(q);
                if (!seen[v] && level[v] > 0) {
                    bump_var(v);
                    seen[v] = 1;
                    if (level[v] >= decision_level()) {
                        ++path;
                        if (reason[v] != kNoReason && is_learnt(reason[v]))
                            last_level_vars.push_back(v);
                    } else
                        out_learnt.push_back(q);
                }
            }
            while (!seen[ivar(trail[--index])]) {
            }
            p = trail[index];
            cr = reason[ivar(p)];
            seen[ivar(p)] = 0;
            --path;
        } while (path > 0);
        out_learnt[0] = neg(p);

        to_clear.assign(out_learnt.begin(), out_learnt.end());
        std::uint32_t levels = 0;
        for (std::size_t i = 1; i < out_learnt.size(); ++i)
            levels |= abstract_level(ivar(out_learnt[i]));
        std::size_t keep = 1;
        for (std::size_t i = 1; i < out_learnt.size(); ++i)
            if (reason[ivar(out_learnt[i])] == kNoReason || !redundant(out_learnt[i], levels))
                out_learnt[keep++] = out_learnt[i];
        out_learnt.resize(keep);
        for (ILit l : to_clear)
            seen[ivar(l)] = 0;

        if (out_learnt.size() == 1) {
            out_level = 0;
        } else {
            std::size_t max_i = 1;
            for (std::size_t i = 2; i < out_learnt.size(); ++i)
                if (level[ivar(out_learnt[i])] > level[ivar(out_learnt[max_i])])
                    max_i = i;
            std::swap(out_learnt[1], out_learnt[max_i]);
            out_level = level[ivar(out_learnt[1])];
        }
    }

    std::uint32_t compute_lbd(std::span<const ILit> ls)
    {
        ++stamp;
        std::uint32_t n = 0;
        for (ILit l : ls) {
            auto& s = level_stamp[static_cast<std::size_t>(level[ivar(l)])];
            if (s != stamp) {
                s = stamp;
                ++n;
            }
        }
        return n;
    }

    bool locked(CRef cr) const
    {
        const ILit first = lits(cr)[0];
        return value(first) == 1 && reason[ivar(first)] == cr;
    }

    void reduce_db()
    {
        // Worst first: high LBD, then low activity.
        std::sort(learnts.begin(), learnts.end(), [&](CRef a, CRef b) {
            if (lbd(a) != lbd(b))
                return lbd(a) > lbd(b);
            return cactivity(a) < cactivity(b) || (cactivity(a) == cactivity(b) && a < b);
        });
        const std::size_t half = learnts.size() / 2;
        std::size_t j = 0;
        for (std::size_t i = 0; i < learnts.size(); ++i) {
            const CRef cr = learnts[i];
            const bool removable = i < half && csize(cr) > 2 && lbd(cr) > 2 && !locked(cr);
            if (removable) {
                arena[cr + 1] |= kDeleted;
                wasted += kHeader + csize(cr);
            } else {
                learnts[j++] = cr;
            }
        }
        learnts.resize(j);
        for (auto& ws : watches)
            std::erase_if(ws, [&](const Watcher& w) { return is_deleted(w.cref); });
        if (wasted * 4 > arena.size())
            collect_garbage();
    }

    void collect_garbage()
    {
        std::vector<std::uint32_t> fresh;
        fresh.reserve(arena.size() - wasted);
        std::vector<CRef> moved(arena.size(), kNoReason);
        for (std::size_t cr = 0; cr < arena.size(); cr += kHeader + arena[cr]) {
            if ((arena[cr + 1] & kDeleted) != 0)
                continue;
            moved[cr] = static_cast<CRef>(fresh.size());
            fresh.insert(fresh.end(), arena.begin() + static_cast<std::ptrdiff_t>(cr),
                         arena.begin() + static_cast<std::ptrdiff_t>(cr + kHeader + arena[cr]));
        }
        for (auto& ws : watches)
            for (auto& w : ws)
                w.cref = moved[w.cref];
        for (auto& r : reason)
            if (r != kNoReason)
                r = moved[r];
        for (auto& r : learnts)
            r = moved[r];
        arena = std::move(fresh);
        wasted = 0;
    }

    bool add_clause(std::span<const Lit> in)
    {
        original.emplace_back(in.begin(), in.end());
        if (!ok)
            return false;
        cancel_until(0);
        std::vector<ILit> ls;
        ls.reserve(in.size());
        for (Lit l : in) {
            if (l == 0 || cnf::is_const(l) || cnf::var_of(l) > static_cast<Var>(num_vars()))
                throw std::invalid_argument("CdclSolver: bad literal " + std::to_string(l));
            ls.push_back(to_ilit(l));
        }
        std::sort(ls.begin(), ls.end());
        std::size_t j = 0;
        ILit prev = UINT32_MAX;
        for (ILit l : ls) {
            if (value(l) == 1 || (prev != UINT32_MAX && l == neg(prev)))
                return true;  // satisfied at top level or tautology
            if (value(l) != -1 && l != prev)
                ls[j++] = prev = l;
        }
        ls.resize(j);
        if (ls.empty()) {
            ok = false;
            return false;
        }
        if (ls.size() == 1) {
            enqueue(ls[0], kNoReason);
            ok = propagate() == kNoReason;
            return ok;
        }
        attach(alloc(ls, false, 0));
        return true;
    }

    ILit pick_branch()
    {
        while (!heap.empty()) {
            const std::uint32_t v = heap_pop();
            if (assigns[v] == 0)
                return 2 * v + polarity[v];
        }
        return UINT32_MAX;
    }

    void note_lbd(std::uint32_t value)
    {
        ++total_conflicts;
        total_lbd += value;
        const std::size_t slot = recent_count % recent_lbd.size();
        if (recent_count >= recent_lbd.size())
            recent_sum -= recent_lbd[slot];
        recent_lbd[slot] = value;
        recent_sum += value;
        ++recent_count;
    }

    // Postpones a restart when the trail is much longer than usual.
    void note_trail(std::size_t size)
    {
        const std::size_t slot = trail_count % recent_trail.size();
        if (trail_count >= recent_trail.size())
            trail_sum -= recent_trail[slot];
        recent_trail[slot] = static_cast<std::uint32_t>(size);
        trail_sum += size;
        ++trail_count;
        if (total_conflicts > 10000 && trail_count >= recent_trail.size() && recent_count >= recent_lbd.size() &&
            static_cast<double>(size) >
                1.4 * static_cast<double>(trail_sum) / static_cast<double>(recent_trail.size())) {
            recent_count = 0;
            recent_sum = 0;
        }
    }

    bool should_restart() const
    {
        if (recent_count < recent_lbd.size())
            return false;
        const double recent = static_cast<double>(recent_sum) / static_cast<double>(recent_lbd.size());
        const double global = static_cast<double>(total_lbd) / static_cast<double>(total_conflicts);
        return recent * 0.8 > global;
    }

    Status search(std::span<const ILit> assumptions, const std::function<bool()>& out_of_budget)
    {
        std::vector<ILit> learnt;
        recent_count = 0;
        recent_sum = 0;
        for (;;) {
            const CRef conflict = propagate();
            if (conflict != kNoReason) {
                ++stats.conflicts;
                if (decision_level() == 0) {
                    ok = false;
                    return Status::Unsat;
                }
                note_trail(trail.size());
                std::int32_t back = 0;
                analyze(conflict, learnt, back);
                const std::uint32_t learnt_lbd = compute_lbd(learnt);
                note_lbd(learnt_lbd);
                for (std::uint32_t v : last_level_vars)
                    if (lbd(reason[v]) < learnt_lbd)
                        bump_var(v);
                cancel_until(back);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], kNoReason);
                } else {
                    const CRef cr = alloc(learnt, true, learnt_lbd);
                    learnts.push_back(cr);
                    attach(cr);
                    bump_clause(cr);
                    enqueue(learnt[0], cr);
                }
                if (total_conflicts % 5000 == 0 && var_decay < 0.95)
                    var_decay += 0.01;
                var_inc /= var_decay;
                cla_inc /= 0.999F;
                if ((stats.conflicts & 255U) == 0 && out_of_budget())
                    return Status::Timeout;
                continue;
            }
            if (should_restart()) {
                cancel_until(0);
                return Status::Timeout;  // restart marker
            }
            if (total_conflicts >= next_reduce) {
                reduce_step += 300;
                next_reduce = total_conflicts + reduce_step;
                reduce_db();
            }

            ILit next = UINT32_MAX;
            while (static_cast<std::size_t>(decision_level()) < assumptions.size()) {
                const ILit a = assumptions[static_cast<std::size_t>(decision_level())];
                if (value(a) == 1) {
                    trail_lim.push_back(trail.size());
                } else if (value(a) == -1) {
                    return Status::Unsat;
                } else {
                    next = a;
                    break;
                }
            }
            if (next == UINT32_MAX) {
                ++stats.decisions;
                next = pick_branch();
                if (next == UINT32_MAX)
                    return Status::Sat;
            }
            trail_lim.push_back(trail.size());
            enqueue(next, kNoReason);
        }
    }
};

CdclSolver::CdclSolver() : impl_(std::make_unique<Impl>()) {}
CdclSolver::~CdclSolver() = default;

Var CdclSolver::new_var()
{
    return impl_->new_var();
}

int CdclSolver::num_vars() const
{
    return static_cast<int>(impl_->num_vars());
}

void CdclSolver::add_clause(std::span<const Lit> clause)
{
    impl_->add_clause(clause);
}

Status CdclSolver::solve(std::span<const Lit> assumptions, const Budget& budget)
{
    Impl& s = *impl_;
    s.stats = {};
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    auto out_of_budget = [&] {
        if (budget.conflicts && s.stats.conflicts >= *budget.conflicts)
            return true;
        return budget.seconds && elapsed() >= *budget.seconds;
    };

    s.model.clear();
    Status result = Status::Unsat;
    std::vector<ILit> assume;
    for (Lit l : assumptions) {
        if (l == 0 || cnf::is_const(l) || cnf::var_of(l) > num_vars())
            throw std::invalid_argument("CdclSolver: bad assumption literal " + std::to_string(l));
        assume.push_back(to_ilit(l));
    }
    if (s.ok) {
        s.cancel_until(0);
        if (s.propagate() != kNoReason)
            s.ok = false;
    }
    if (s.ok) {
        for (;;) {
            const Status st = s.search(assume, out_of_budget);
            if (st == Status::Sat || st == Status::Unsat) {
                result = st;
                break;
            }
            if (out_of_budget()) {
                result = Status::Timeout;
                break;
            }
        }
    }
    if (result == Status::Sat) {
        s.model.assign(s.num_vars() + 1, false);
        for (std::uint32_t v = 0; v < s.num_vars(); ++v)
            s.model[v + 1] = s.assigns[v] == 1;
        for (const auto& c : s.original) {
            bool sat = false;
            for (Lit l : c)
                if (s.model[static_cast<std::size_t>(cnf::var_of(l))] == (l > 0)) {
                    sat = true;
                    break;
                }
            if (!sat)
                throw ModelVerificationError("CdclSolver: model violates an input clause");
        }
        for (Lit l : assumptions)
            if (s.model[static_cast<std::size_t>(cnf::var_of(l))] != (l > 0))
                throw ModelVerificationError("CdclSolver: model violates an assumption");
    }
    s.cancel_until(0);
    s.stats.seconds = elapsed();
    return result;
}

bool CdclSolver::model_value(Var v) const
{
    return impl_->model.at(static_cast<std::size_t>(v));
}

const SolveStats& CdclSolver::stats() const
{
    return impl_->stats;
}

} // namespace seqcamo::sat
