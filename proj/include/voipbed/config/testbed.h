#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipbed/harness/load.h"
#include "voipbed/harness/scenario.h"

namespace voipbed::config {

// One problem found in a config, zone or dialplan file. line 0 = whole file.
struct Diagnostic {
    std::filesystem::path file;
    int line = 0;
    std::string message;

    std::string to_string() const;  // "file:line: message"
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  private:
    std::vector<Diagnostic> diagnostics_;
};

struct MatrixCell {
    harness::ScenarioId scenario = harness::ScenarioId::S1;
    double rate = 0;
    bool operator==(const MatrixCell&) const = default;
};

struct TestbedConfig {
    std::filesystem::path source;
    harness::TopologyConfig topology;  // binds, profiles, zone, endpoints, dialplan, timers
    std::filesystem::path zone_path;
    std::filesystem::path dialplan_path;
    bool ims_enum = true;  // ENUM lookups when serving the IMS standalone
    harness::HarnessOptions harness;
    harness::LoadSpec load;  // rate is filled per matrix cell
    std::vector<MatrixCell> matrix;
    std::filesystem::path output_dir;

    std::string enum_apex() const;
};

// Parses and statically checks a testbed file plus the zone and dialplan it
// references (paths relative to the config's directory). Never opens
// sockets. Throws ConfigError listing every diagnostic found.
TestbedConfig load_config(const std::filesystem::path& path);

// load_config without the throw: empty means valid.
std::vector<Diagnostic> validate_config(const std::filesystem::path& path);

// "s2:0,5,10; s3:0,30" -> cells in order. Throws std::invalid_argument.
std::vector<MatrixCell> parse_matrix(std::string_view text);
// "0,5,10" -> rates. Throws std::invalid_argument.
std::vector<double> parse_rates(std::string_view text);

}  // namespace voipbed::config
