#include "seqcamo/oracle.hpp"

#include <csignal>
#include <istream>
#include <ostream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace seqcamo {

BlackBox::BlackBox(CamoCircuit circuit, Completion secret, std::optional<std::uint64_t> query_budget)
    : circuit_(std::move(circuit)), sim_(circuit_, secret), budget_(query_budget)
{
}

BitSeq BlackBox::query(const BitSeq& inputs)
{
    if (!inputs.empty() && inputs.width() != circuit_.num_inputs())
        throw std::invalid_argument("query: input width " + std::to_string(inputs.width()) + " != " +
                                    std::to_string(circuit_.num_inputs()));
    const std::uint64_t n = queries_.fetch_add(1);
    if (budget_ && n >= *budget_) {
        queries_.fetch_sub(1);
        throw QueryBudgetExhausted("oracle query budget of " + std::to_string(*budget_) + " exhausted");
    }
    steps_.fetch_add(inputs.size());
    return sim_.run(inputs);
}

// ---------------------------------------------------------------------------

bool QuerySet::record(BitSeq input, BitSeq output)
{
    if (input.size() != output.size())
        throw std::invalid_argument("QuerySet: output has " + std::to_string(output.size()) + " steps for " +
                                    std::to_string(input.size()) + " input steps");
    if (auto it = index_.find(input); it != index_.end()) {
        if (records_[it->second].output != output)
            throw ObservationConflict("conflicting observations for input sequence '" + input.to_string() + "': '" +
                                      records_[it->second].output.to_string() + "' vs '" + output.to_string() + "'");
        return false;
    }
    index_.emplace(input, records_.size());
    records_.push_back({std::move(input), std::move(output)});
    return true;
}

const BitSeq* QuerySet::find(const BitSeq& input) const
{
    auto it = index_.find(input);
    return it == index_.end() ? nullptr : &records_[it->second].output;
}

std::size_t QuerySet::max_length() const
{
    std::size_t m = 0;
    for (const auto& r : records_)
        m = std::max(m, r.input.size());
    return m;
}

std::size_t QuerySet::total_steps() const
{
    std::size_t n = 0;
    for (const auto& r : records_)
        n += r.input.size();
    return n;
}

QuerySet record(QuerySet qs, BitSeq input, BitSeq output)
{
    qs.record(std::move(input), std::move(output));
    return qs;
}

// ---------------------------------------------------------------------------
// Line protocol

namespace {

BitSeq parse_tagged(std::string_view line, char tag, std::size_t width, bool counted)
{
    std::istringstream in{std::string(line)};
    std::string t;
    if (!(in >> t) || t.size() != 1 || t[0] != tag)
        throw std::invalid_argument(std::string("expected '") + tag + "' line, got '" + std::string(line) + "'");
    long long count = -1;
    if (counted && (!(in >> count) || count < 0))
        throw std::invalid_argument("missing step count in '" + std::string(line) + "'");
    BitSeq seq(width);
    std::string step;
    while (in >> step) {
        BitVec v = BitVec::from_string(step);
        if (v.size() != width)
            throw std::invalid_argument("step '" + step + "' has width " + std::to_string(v.size()) + ", expected " +
                                        std::to_string(width));
        seq.push_back(std::move(v));
    }
    if (counted && static_cast<std::size_t>(count) != seq.size())
        throw std::invalid_argument("step count " + std::to_string(count) + " does not match " +
                                    std::to_string(seq.size()) + " steps");
    return seq;
}

} // namespace

std::string format_query(const BitSeq& inputs)
{
    std::string s = "Q " + std::to_string(inputs.size());
    for (const auto& step : inputs.steps())
        s += ' ' + step.to_string();
    return s;
}

BitSeq parse_query(std::string_view line, std::size_t width)
{
    return parse_tagged(line, 'Q', width, true);
}

std::string format_answer(const BitSeq& outputs)
{
    std::string s = "A";
    for (const auto& step : outputs.steps())
        s += ' ' + step.to_string();
    return s;
}

BitSeq parse_answer(std::string_view line, std::size_t width)
{
    return parse_tagged(line, 'A', width, false);
}

std::uint64_t serve(Oracle& oracle, std::istream& in, std::ostream& out)
{
    std::uint64_t answered = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            BitSeq q = parse_query(line, oracle.input_width());
            out << format_answer(oracle.query(q)) << '\n';
            ++answered;
        } catch (const std::exception& e) {
            out << "E " << e.what() << '\n';
        }
        out.flush();
    }
    return answered;
}

// ---------------------------------------------------------------------------
// ProcessOracle

ProcessOracle::ProcessOracle(const std::string& command, std::size_t input_width, std::size_t output_width)
    : input_width_(input_width), output_width_(output_width)
{
    int down[2];
    int up[2];
    if (::pipe(down) != 0 || ::pipe(up) != 0)
        throw std::runtime_error("ProcessOracle: pipe() failed");
    std::signal(SIGPIPE, SIG_IGN);
    pid_ = ::fork();
    if (pid_ < 0)
        throw std::runtime_error("ProcessOracle: fork() failed");
    if (pid_ == 0) {
        ::dup2(down[0], STDIN_FILENO);
        ::dup2(up[1], STDOUT_FILENO);
        ::close(down[0]);
        ::close(down[1]);
        ::close(up[0]);
        ::close(up[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(down[0]);
    ::close(up[1]);
    to_child_ = down[1];
    from_child_ = up[0];
}

ProcessOracle::~ProcessOracle()
{
    if (to_child_ >= 0)
        ::close(to_child_);
    if (from_child_ >= 0)
        ::close(from_child_);
    if (pid_ > 0) {
        int status = 0;
        ::waitpid(pid_, &status, 0);
    }
}

std::string ProcessOracle::read_line()
{
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n <= 0)
            throw std::runtime_error("ProcessOracle: oracle process closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

BitSeq ProcessOracle::query(const BitSeq& inputs)
{
    if (!inputs.empty() && inputs.width() != input_width_)
        throw std::invalid_argument("query: input width mismatch");
    std::lock_guard lock(mutex_);
    const std::string request = format_query(inputs) + '\n';
    std::size_t sent = 0;
    while (sent < request.size()) {
        const ssize_t n = ::write(to_child_, request.data() + sent, request.size() - sent);
        if (n <= 0)
            throw std::runtime_error("ProcessOracle: cannot write to oracle process");
        sent += static_cast<std::size_t>(n);
    }
    const std::string line = read_line();
    if (line.rfind("E ", 0) == 0)
        throw std::runtime_error("oracle process error: " + line.substr(2));
    BitSeq out = parse_answer(line, output_width_);
    if (out.size() != inputs.size())
        throw std::runtime_error("oracle process answered " + std::to_string(out.size()) + " steps for " +
                                 std::to_string(inputs.size()));
    ++queries_;
    steps_ += inputs.size();
    return out;
}

} // namespace seqcamo
