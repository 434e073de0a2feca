#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace voipbed::gateway {

struct DialplanEntry {
    enum class Action { ToFxs, Reject };

    std::string pattern;  // "2003", or "_2XXX" with X matching any digit
    Action action = Action::Reject;
    std::string endpoint;  // FXS id for ToFxs
    int line = 0;          // source line, 0 when built in code

    bool wildcard() const { return pattern.starts_with('_'); }
    bool operator==(const DialplanEntry&) const = default;
};

enum class DialplanErrc { SyntaxError, UnknownEndpoint, IoError };

class DialplanError : public std::runtime_error {
  public:
    DialplanError(DialplanErrc code, const std::string& detail, int line = 0);
    DialplanErrc code() const { return code_; }
    int line() const { return line_; }

  private:
    DialplanErrc code_;
    int line_;
};

// True when `pattern` is a valid exact or wildcard pattern.
bool valid_pattern(std::string_view pattern);
bool pattern_matches(std::string_view pattern, std::string_view number);

// Exact entries win (first one in plan order), then the first matching
// wildcard entry. nullopt is NoMatch.
std::optional<DialplanEntry> match_dialplan(std::string_view number, const std::vector<DialplanEntry>& plan);

// Lines: "<pattern> => fxs:<id>" or "<pattern> => reject"; '#' comments.
// Throws DialplanError(SyntaxError | UnknownEndpoint) naming the line.
std::vector<DialplanEntry> parse_dialplan(std::string_view text, const std::set<std::string>& endpoint_ids);
std::vector<DialplanEntry> load_dialplan(const std::filesystem::path& path, const std::set<std::string>& endpoint_ids);

}  // namespace voipbed::gateway
