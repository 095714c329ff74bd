#ifndef SEQCAMO_ORACLE_HPP
#define SEQCAMO_ORACLE_HPP

#include "seqcamo/netlist.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace seqcamo {

/// Black-box access to a chip: every query starts from the reset state.
class Oracle
{
  public:
    virtual ~Oracle() = default;
    virtual BitSeq query(const BitSeq& inputs) = 0;
    virtual std::size_t input_width() const = 0;
    virtual std::size_t output_width() const = 0;
    virtual std::uint64_t query_count() const = 0;
    virtual std::uint64_t step_count() const = 0;
};

class QueryBudgetExhausted : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// In-process simulation of the chip. The secret completion is sealed: it is
/// only ever used to answer queries. Queries may be issued concurrently.
class BlackBox final : public Oracle
{
  public:
    BlackBox(CamoCircuit circuit, Completion secret, std::optional<std::uint64_t> query_budget = std::nullopt);

    BitSeq query(const BitSeq& inputs) override;
    std::size_t input_width() const override { return circuit_.num_inputs(); }
    std::size_t output_width() const override { return circuit_.num_outputs(); }
    std::uint64_t query_count() const override { return queries_.load(); }
    std::uint64_t step_count() const override { return steps_.load(); }

  private:
    CamoCircuit circuit_;
    Simulator sim_;
    std::optional<std::uint64_t> budget_;
    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint64_t> steps_{0};
};

struct QueryRecord
{
    BitSeq input;
    BitSeq output;
};

/// Two different outputs observed for the same input sequence.
class ObservationConflict : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Ordered set of (input sequence, observed output sequence) pairs.
class QuerySet
{
  public:
    /// Appends the pair if `input` is new; no-op for an identical pair.
    /// Returns true when the set grew. Throws ObservationConflict when
    /// `input` was recorded with a different output, std::invalid_argument
    /// on a length mismatch.
    bool record(BitSeq input, BitSeq output);

    const std::vector<QueryRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const BitSeq* find(const BitSeq& input) const;

    std::size_t max_length() const;
    std::size_t total_steps() const;

  private:
    std::vector<QueryRecord> records_;
    std::map<BitSeq, std::size_t> index_;
};

/// Functional form of QuerySet::record.
QuerySet record(QuerySet qs, BitSeq input, BitSeq output);

// ---------------------------------------------------------------------------
// Line protocol: request `Q <p> <i0> ... <ip-1>`, response `A <o0> ... <op-1>`.

std::string format_query(const BitSeq& inputs);
BitSeq parse_query(std::string_view line, std::size_t width);
std::string format_answer(const BitSeq& outputs);
BitSeq parse_answer(std::string_view line, std::size_t width);

/// Answers requests from `in` on `out` until end of input. Malformed lines
/// get an `E <message>` response. Returns the number of answered queries.
std::uint64_t serve(Oracle& oracle, std::istream& in, std::ostream& out);

/// Oracle speaking the line protocol to a child process
/// (`/bin/sh -c <command>`) over its stdin/stdout.
class ProcessOracle final : public Oracle
{
  public:
    ProcessOracle(const std::string& command, std::size_t input_width, std::size_t output_width);
    ~ProcessOracle() override;
    ProcessOracle(const ProcessOracle&) = delete;
    ProcessOracle& operator=(const ProcessOracle&) = delete;

    BitSeq query(const BitSeq& inputs) override;
    std::size_t input_width() const override { return input_width_; }
    std::size_t output_width() const override { return output_width_; }
    std::uint64_t query_count() const override { return queries_; }
    std::uint64_t step_count() const override { return steps_; }

  private:
    std::string read_line();

    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::size_t input_width_;
    std::size_t output_width_;
    std::uint64_t queries_ = 0;
    std::uint64_t steps_ = 0;
    std::mutex mutex_;
};

} // namespace seqcamo

#endif // SEQCAMO_ORACLE_HPP
