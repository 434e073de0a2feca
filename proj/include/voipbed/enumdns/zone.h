#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "voipbed/enumdns/e164.h"
#include "voipbed/enumdns/naptr.h"

namespace voipbed::enumdns {

// Number -> NAPTR records under one apex. Read-only once loaded.
class EnumZone {
  public:
    explicit EnumZone(std::string apex = std::string(kDefaultApex));

    const std::string& apex() const { return apex_; }
    // Throws EnumError(DuplicateEntry) for a second record with the same
    // (order, preference) on one number.
    void add(const E164Number& number, NaptrRecord record);

    const std::vector<NaptrRecord>* find(const E164Number& number) const;
    // nullptr when the name is not a number under the apex or has no entry.
    const std::vector<NaptrRecord>* find_domain(std::string_view domain) const;
    bool is_apex(std::string_view domain) const;

    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, std::vector<NaptrRecord>>& entries() const { return entries_; }
    bool operator==(const EnumZone&) const = default;

  private:
    std::string apex_;
    std::map<std::string, std::vector<NaptrRecord>> entries_;
};

// Line format:
//   <owner> NAPTR <order> <pref> "<flags>" "<service>" "<regexp>" <replacement>
// Owner is a domain under the apex or "+<digits>". '#' starts a comment.
// Throws EnumError(SyntaxError | DuplicateEntry | DomainOutsideApex) with
// the offending line.
EnumZone parse_zone(std::string_view text, std::string_view apex = kDefaultApex);

// As parse_zone; also EnumError(IoError) when the file cannot be read.
EnumZone load_zone_file(const std::filesystem::path& path, std::string_view apex = kDefaultApex);

// Renders a zone back to the line format.
std::string format_zone(const EnumZone& zone);

}  // namespace voipbed::enumdns
