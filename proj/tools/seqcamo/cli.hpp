#ifndef SEQCAMO_CLI_HPP
#define SEQCAMO_CLI_HPP

#include "seqcamo/attack.hpp"
#include "seqcamo/netlist.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace seqcamo::cli {

enum ExitCode : int { kSuccess = 0, kAttackFailure = 1, kUsage = 2, kInconclusive = 3 };

/// Bad input files or arguments; maps to the usage exit code.
class UsageError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// One attack run, as aggregated by `report`.
struct RunRecord
{
    std::string benchmark;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t disc_size = 0;
    std::size_t max_length = 0;
    double seconds = 0;
    std::string termination;
    std::size_t gates_fixed = 0;
    bool success = false;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

nlohmann::json to_json(const RunRecord& r);
/// Throws UsageError on missing or mistyped fields.
RunRecord record_from_json(const nlohmann::json& j);

/// `k` distinct gates whose function is one of `candidates`, chosen
/// uniformly with a generator seeded by `seed`. Throws UsageError when
/// fewer than `k` gates are eligible.
std::vector<std::string> select_gates(const Circuit& c, std::size_t k, const std::vector<GateKind>& candidates,
                                      std::uint64_t seed);

std::vector<GateKind> parse_candidates(const std::string& list);

/// Full machine-readable result of one run; wall-time values live only under
/// keys named "seconds".
nlohmann::json report_json(const CamoCircuit& c, const RunRecord& rec, const attack::AttackReport& rep,
                           const nlohmann::json& config);

/// Per (benchmark, k) aggregate row.
struct SummaryRow
{
    std::string benchmark;
    std::size_t k = 0;
    std::size_t runs = 0;
    std::size_t disc_min = 0, disc_max = 0;
    std::size_t steps_min = 0, steps_max = 0;
    double time_min = 0, time_max = 0;
    std::size_t uc = 0, ce = 0, umc = 0;
    std::size_t success = 0;
    /// gates fixed -> number of failed runs
    std::map<std::size_t, std::size_t> partial;

    std::string termination_column() const;
    std::string partial_column() const;
};

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);
std::string format_table(const std::vector<SummaryRow>& rows);
std::string format_csv(const std::vector<SummaryRow>& rows);

/// Reads every `*.json` run report in `dir`. Throws UsageError on malformed
/// files or an empty directory.
std::vector<RunRecord> load_records(const std::string& dir);

/// Entry point shared by the executable and tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace seqcamo::cli

#endif // SEQCAMO_CLI_HPP
