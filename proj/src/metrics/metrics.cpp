#include "voipbed/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace voipbed::metrics {

using harness::ScenarioId;

namespace {

std::string fixed(double v, int digits = 3) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

// Rates print without a trailing ".000" when whole.
std::string rate_text(double r) {
    if (r == std::floor(r)) return std::to_string(static_cast<long long>(r));
    return fixed(r, 3);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<server::ServerRole> roles_in_path(ScenarioId id) {
    using server::ServerRole;
    switch (id) {
        case ScenarioId::S1: return {ServerRole::Ims};
        case ScenarioId::S2: return {ServerRole::Ims, ServerRole::Enum};
        case ScenarioId::S3: return {ServerRole::Ims, ServerRole::Enum, ServerRole::Gateway};
        case ScenarioId::GwDirect: return {ServerRole::Gateway};
    }
    return {};
}

std::optional<PddStats> stats_of(const harness::RunResult& run) {
    auto samples = pdd_samples(run);
    if (samples.empty()) return std::nullopt;
    return aggregate(samples);
}

}  // namespace

std::optional<PddSample> compute_pdd(const harness::CallRecord& rec, ScenarioId scenario, double rate) {
    if (rec.outcome == harness::Outcome::Timeout || !rec.t_invite_sent || !rec.t_180_received) return std::nullopt;
    double ms = std::chrono::duration<double, std::milli>(*rec.t_180_received - *rec.t_invite_sent).count();
    if (ms < 0) return std::nullopt;
    return PddSample{ms, scenario, rate};
}

std::vector<PddSample> pdd_samples(const harness::RunResult& run) {
    std::vector<PddSample> out;
    for (const auto& rec : run.records) {
        if (auto s = compute_pdd(rec, run.scenario, run.rate)) out.push_back(*s);
    }
    return out;
}

PddStats aggregate(const std::vector<PddSample>& samples) {
    if (samples.empty()) throw EmptySampleSet();
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.ms);
    std::sort(v.begin(), v.end());
    PddStats st;
    st.count = v.size();
    st.mean_ms = std::round(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()) * 1000.0) / 1000.0;
    st.min_ms = v.front();
    st.max_ms = v.back();
    auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
    st.p95_ms = v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
    return st;
}

UtilizationEstimate estimate_cpu(const server::ServerProfile& profile, double rate) {
    UtilizationEstimate e;
    e.role = profile.role;
    e.rate = rate;
    e.overloaded = profile.capacity > 0 && rate > profile.capacity;

    std::vector<server::CpuPoint> pts;
    if (profile.cpu_curve.empty() || profile.cpu_curve.front().rate > 0) pts.push_back({0, 0});
    pts.insert(pts.end(), profile.cpu_curve.begin(), profile.cpu_curve.end());
    if (pts.size() == 1 || rate <= 0) {
        e.percent = 0;
        return e;
    }
    double pct = 0;
    bool found = false;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (rate <= pts[i].rate) {
            const auto& a = pts[i - 1];
            const auto& b = pts[i];
            pct = a.percent + (b.percent - a.percent) * (rate - a.rate) / (b.rate - a.rate);
            found = true;
            break;
        }
    }
    if (!found) {
        const auto& a = pts[pts.size() - 2];
        const auto& b = pts.back();
        pct = b.percent + (b.percent - a.percent) * (rate - b.rate) / (b.rate - a.rate);
    }
    e.percent = std::clamp(pct, 0.0, 100.0);
    return e;
}

std::string_view to_string(Category c) {
    switch (c) {
        case Category::PcToPc: return "pc_to_pc";
        case Category::PcToPstn: return "pc_to_pstn";
        case Category::PstnToPc: return "pstn_to_pc";
    }
    return "?";
}

ComplianceThresholds ComplianceThresholds::defaults() {
    return {{{Category::PcToPc, {2.23, 2.25}}, {Category::PcToPstn, {3.79, 4.11}}, {Category::PstnToPc, {3.41, 3.95}}}};
}

double ComplianceThresholds::limit_s(Category c, bool enum_used) const {
    const auto& p = limits.at(c);
    return enum_used ? p.with_enum_s : p.without_enum_s;
}

bool check_compliance(double pdd_ms, Category category, bool enum_used, const ComplianceThresholds& thresholds) {
    return pdd_ms <= thresholds.limit_s(category, enum_used) * 1000.0;
}

Category category_of(ScenarioId id) {
    return id == ScenarioId::S3 || id == ScenarioId::GwDirect ? Category::PcToPstn : Category::PcToPc;
}

bool enum_used(ScenarioId id) { return id == ScenarioId::S2 || id == ScenarioId::S3; }

const std::map<double, double>& reference_s2_curve() {
    static const std::map<double, double> ref = {{0, 108.8},  {5, 109.5},  {10, 110.4}, {15, 114.1},
                                                 {20, 116.4}, {25, 118.6}, {30, 133.1}};
    return ref;
}

std::string format_summary(const ReportInput& input) {
    std::ostringstream out;
    std::set<ScenarioId> scenarios;
    for (const auto& r : input.runs) scenarios.insert(r.scenario);
    for (auto id : scenarios) {
        out << "scenario " << harness::to_string(id) << " (" << to_string(category_of(id))
            << (enum_used(id) ? ", with ENUM" : ", without ENUM") << ")\n";
        out << std::setw(6) << "rate" << std::setw(10) << "mean_ms" << std::setw(10) << "min_ms" << std::setw(10)
            << "max_ms" << std::setw(10) << "p95_ms" << std::setw(6) << "n" << std::setw(9) << "retrans"
            << std::setw(9) << "timeout" << std::setw(8) << "unexp" << std::setw(8) << "shed%" << std::setw(11)
            << "compliance" << "\n";
        for (const auto& r : input.runs) {
            if (r.scenario != id) continue;
            auto st = stats_of(r);
            auto cell = [&](double v) { return st ? fixed(v) : std::string("-"); };
            out << std::setw(6) << rate_text(r.rate) << std::setw(10) << cell(st ? st->mean_ms : 0) << std::setw(10)
                << cell(st ? st->min_ms : 0) << std::setw(10) << cell(st ? st->max_ms : 0) << std::setw(10)
                << cell(st ? st->p95_ms : 0) << std::setw(6) << (st ? st->count : 0) << std::setw(9)
                << r.counters.retrans << std::setw(9) << r.counters.timeout << std::setw(8)
                << r.counters.unexpected_msg << std::setw(8) << fixed(100.0 * r.shed_rate(), 1) << std::setw(11)
                << (st ? (check_compliance(st->mean_ms, category_of(id), enum_used(id)) ? "pass" : "FAIL") : "n/a")
                << (r.aborted ? "  (aborted)" : "") << "\n";
        }
        out << "\n";
    }
    if (input.queryperf) {
        out << "queryperf ceiling " << fixed(input.queryperf->ceiling, 2) << " q/s (reference hardware: "
            << fixed(harness::kReferenceQueryperfCeiling, 2) << " q/s), wrong answers " << input.queryperf->wrong_answers
            << "\n";
    }
    return out.str();
}

void write_queryperf_csv(const harness::QueryperfResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "rate,sent,correct,wrong,errors,lost,p50_ms,p95_ms,p99_ms,passed\n";
    for (const auto& s : result.steps) {
        out << rate_text(s.rate) << ',' << s.sent << ',' << s.correct << ',' << s.wrong << ',' << s.errors << ','
            << s.lost << ',' << fixed(s.p50_ms) << ',' << fixed(s.p95_ms) << ',' << fixed(s.p99_ms) << ','
            << (s.passed ? 1 : 0) << '\n';
    }
    close_out(out, path);
}

void emit_report(const ReportInput& input, const std::filesystem::path& dir) {
    if (input.runs.empty()) throw std::invalid_argument("emit_report needs at least one run");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    {
        auto path = dir / "pdd.csv";
        auto out = open_out(path);
        out << "scenario,rate,mean_ms,min_ms,max_ms,p95_ms,count\n";
        for (const auto& r : input.runs) {
            out << harness::to_string(r.scenario) << ',' << rate_text(r.rate) << ',';
            if (auto st = stats_of(r)) {
                out << fixed(st->mean_ms) << ',' << fixed(st->min_ms) << ',' << fixed(st->max_ms) << ','
                    << fixed(st->p95_ms) << ',' << st->count << '\n';
            } else {
                out << "NA,NA,NA,NA,0\n";
            }
        }
        close_out(out, path);
    }
    {
        auto path = dir / "cpu.csv";
        auto out = open_out(path);
        out << "server,rate,percent,overloaded\n";
        std::set<std::pair<server::ServerRole, double>> seen;
        for (const auto& r : input.runs) {
            for (auto role : roles_in_path(r.scenario)) {
                auto it = input.profiles.find(role);
                if (it == input.profiles.end() || !seen.insert({role, r.rate}).second) continue;
                auto e = estimate_cpu(it->second, r.rate);
                out << server::to_string(role) << ',' << rate_text(r.rate) << ',' << fixed(e.percent, 1) << ','
                    << (e.overloaded ? 1 : 0) << '\n';
            }
        }
        close_out(out, path);
    }
    {
        auto path = dir / "failures.csv";
        auto out = open_out(path);
        out << "scenario,rate,retrans,timeout,unexpected\n";
        for (const auto& r : input.runs) {
            out << harness::to_string(r.scenario) << ',' << rate_text(r.rate) << ',' << r.counters.retrans << ','
                << r.counters.timeout << ',' << r.counters.unexpected_msg << '\n';
        }
        close_out(out, path);
    }
    {
        auto path = dir / "summary.txt";
        auto out = open_out(path);
        out << format_summary(input);
        close_out(out, path);
    }
    {
        auto path = dir / "paper_compare.txt";
        auto out = open_out(path);
        std::map<std::pair<ScenarioId, double>, double> means;
        for (const auto& r : input.runs) {
            if (auto st = stats_of(r)) means[{r.scenario, r.rate}] = st->mean_ms;
        }
        auto mean_of = [&](ScenarioId id, double rate) -> std::optional<double> {
            auto it = means.find({id, rate});
            if (it == means.end()) return std::nullopt;
            return it->second;
        };
        out << "Measured values next to the reference testbed's. Reference figures come from 2008 hardware;\n"
               "only the calibrated budget (idle PDD, gateway INVITE cost) is expected to line up closely.\n\n";
        if (auto s1 = mean_of(ScenarioId::S1, 0)) {
            out << "s1 idle PDD            measured " << fixed(*s1) << " ms   reference " << fixed(kReferenceS1Idle)
                << " ms\n";
        }
        if (auto s2 = mean_of(ScenarioId::S2, 0), s3 = mean_of(ScenarioId::S3, 0); s2 && s3) {
            out << "s3 - s2 idle           measured " << fixed(*s3 - *s2) << " ms   reference "
                << fixed(kReferenceGatewayInvite) << " ms (gateway INVITE processing)\n";
        }
        for (const auto& r : input.runs) {
            if (r.scenario != ScenarioId::S3) continue;
            if (auto m = mean_of(ScenarioId::S3, r.rate)) {
                out << "s3 rate " << std::setw(3) << rate_text(r.rate) << "            measured " << fixed(*m)
                    << " ms   reference max " << fixed(kReferenceMaxPdd) << " ms\n";
            }
        }
        bool any_s2 = std::any_of(input.runs.begin(), input.runs.end(),
                                  [](const auto& r) { return r.scenario == ScenarioId::S2; });
        if (any_s2) {
            out << "\nscenario s2 (IMS-ENUM-IMS)\n" << std::setw(6) << "rate" << std::setw(14) << "measured_ms"
                << std::setw(14) << "reference_ms" << std::setw(10) << "delta" << "\n";
            for (const auto& r : input.runs) {
                if (r.scenario != ScenarioId::S2) continue;
                auto m = mean_of(ScenarioId::S2, r.rate);
                auto ref = reference_s2_curve().find(r.rate);
                out << std::setw(6) << rate_text(r.rate) << std::setw(14) << (m ? fixed(*m) : "-") << std::setw(14)
                    << (ref != reference_s2_curve().end() ? fixed(ref->second, 1) : "-") << std::setw(10)
                    << (m && ref != reference_s2_curve().end() ? fixed(*m - ref->second) : "-") << "\n";
            }
        }
        if (input.queryperf) {
            out << "\nqueryperf ceiling      measured " << fixed(input.queryperf->ceiling, 2)
                << " q/s   reference " << fixed(harness::kReferenceQueryperfCeiling, 2) << " q/s\n";
        }
        close_out(out, path);
    }
    if (input.queryperf) write_queryperf_csv(*input.queryperf, dir / "queryperf.csv");
}

std::vector<PddRow> read_pdd_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "scenario,rate,mean_ms,min_ms,max_ms,p95_ms,count") throw IoError("unexpected pdd.csv header");
    std::vector<PddRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() != 7) throw IoError("bad pdd.csv row: " + line);
        auto num = [](const std::string& s) { return s == "NA" ? std::nan("") : std::stod(s); };
        PddRow row;
        row.scenario = f[0];
        row.rate = std::stod(f[1]);
        row.stats = {num(f[2]), num(f[3]), num(f[4]), num(f[5]), static_cast<std::size_t>(std::stoul(f[6]))};
        rows.push_back(row);
    }
    return rows;
}

}  // namespace voipbed::metrics
