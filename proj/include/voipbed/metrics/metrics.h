#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipbed/harness/queryperf.h"
#include "voipbed/harness/scenario.h"
#include "voipbed/server/profile.h"

namespace voipbed::metrics {

struct PddSample {
    double ms = 0;
    harness::ScenarioId scenario = harness::ScenarioId::S1;
    double rate = 0;
};

// t_180 - t_invite, or nullopt (not measurable) when either is missing or
// the call timed out.
std::optional<PddSample> compute_pdd(const harness::CallRecord& rec, harness::ScenarioId scenario = harness::ScenarioId::S1,
                                     double rate = 0);
std::vector<PddSample> pdd_samples(const harness::RunResult& run);

class EmptySampleSet : public std::invalid_argument {
  public:
    EmptySampleSet() : std::invalid_argument("EmptySampleSet") {}
};

struct PddStats {
    double mean_ms = 0, min_ms = 0, max_ms = 0, p95_ms = 0;
    std::size_t count = 0;
};

// Mean rounded to 3 decimals; p95 is nearest-rank. Throws EmptySampleSet.
PddStats aggregate(const std::vector<PddSample>& samples);

struct UtilizationEstimate {
    server::ServerRole role = server::ServerRole::Ims;
    double rate = 0;
    double percent = 0;
    bool overloaded = false;
};

// Piecewise-linear through (0,0) and the profile's cpu_curve, extended along
// the last segment, clamped to [0,100]. overloaded iff rate > capacity.
UtilizationEstimate estimate_cpu(const server::ServerProfile& profile, double rate);

enum class Category { PcToPc, PcToPstn, PstnToPc };
std::string_view to_string(Category c);

struct ComplianceThresholds {
    struct Pair {
        double without_enum_s;
        double with_enum_s;
    };
    std::map<Category, Pair> limits;

    static ComplianceThresholds defaults();
    double limit_s(Category c, bool enum_used) const;
};

bool check_compliance(double pdd_ms, Category category, bool enum_used,
                      const ComplianceThresholds& thresholds = ComplianceThresholds::defaults());
// PC-to-PC for S1/S2, PC-to-PSTN for S3 and the direct gateway runs.
Category category_of(harness::ScenarioId id);
bool enum_used(harness::ScenarioId id);

// Reference means per rate for the ENUM scenario (S2), ms.
const std::map<double, double>& reference_s2_curve();
inline constexpr double kReferenceS1Idle = 107.87;
inline constexpr double kReferenceMaxPdd = 493.656;
inline constexpr double kReferenceGatewayInvite = 254.5;

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ReportInput {
    std::vector<harness::RunResult> runs;
    std::map<server::ServerRole, server::ServerProfile> profiles;  // for cpu.csv
    std::optional<harness::QueryperfResult> queryperf;
};

// Writes pdd.csv, cpu.csv, failures.csv, summary.txt, paper_compare.txt
// (and queryperf.csv when present) under `dir`. Throws std::invalid_argument
// for no runs, IoError when a file cannot be written.
void emit_report(const ReportInput& input, const std::filesystem::path& dir);
void write_queryperf_csv(const harness::QueryperfResult& result, const std::filesystem::path& path);

// Rows as written to pdd.csv, for reading reports back.
struct PddRow {
    std::string scenario;
    double rate = 0;
    PddStats stats;
};
std::vector<PddRow> read_pdd_csv(const std::filesystem::path& path);

std::string format_summary(const ReportInput& input);

}  // namespace voipbed::metrics
