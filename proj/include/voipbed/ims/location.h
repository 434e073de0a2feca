#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

#include "voipbed/net/endpoint.h"
#include "voipbed/net/event_loop.h"
#include "voipbed/sip/message.h"

namespace voipbed::ims {

struct LocationBinding {
    std::string aor;  // user@host, host lowercased
    net::Endpoint contact;
    std::uint32_t expires = 3600;
    net::TimePoint registered_at{};

    bool operator==(const LocationBinding&) const = default;
};

// In-memory AOR -> contact map; one binding per AOR, last write wins.
// Concurrent readers, exclusive writers.
class LocationStore {
  public:
    void upsert(LocationBinding binding);
    bool erase(const std::string& aor);
    // Expired bindings are invisible.
    std::optional<LocationBinding> lookup(const std::string& aor, net::TimePoint now = net::EventLoop::now()) const;
    std::size_t size() const;
    std::vector<LocationBinding> snapshot() const;

    // "aor contact expires" per line, sorted by AOR.
    void dump(std::ostream& out) const;
    void dump_to_file(const std::filesystem::path& path) const;

  private:
    mutable std::shared_mutex mu_;
    std::map<std::string, LocationBinding> bindings_;
};

// Upserts the binding from To + Contact (+ Expires) and returns 200 echoing
// it, or 400 when Contact is missing or not an IPv4 literal. Expires 0
// removes the binding.
sip::SipMessage handle_register(const sip::SipMessage& msg, LocationStore& db,
                                net::TimePoint now = net::EventLoop::now());

}  // namespace voipbed::ims
