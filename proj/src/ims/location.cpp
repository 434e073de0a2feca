#include "voipbed/ims/location.h"

#include <charconv>
#include <fstream>
#include <mutex>

#include "voipbed/sip/uri.h"

namespace voipbed::ims {

void LocationStore::upsert(LocationBinding binding) {
    std::unique_lock lock(mu_);
    auto key = binding.aor;
    bindings_.insert_or_assign(std::move(key), std::move(binding));
}

bool LocationStore::erase(const std::string& aor) {
    std::unique_lock lock(mu_);
    return bindings_.erase(aor) > 0;
}

std::optional<LocationBinding> LocationStore::lookup(const std::string& aor, net::TimePoint now) const {
    std::shared_lock lock(mu_);
    auto it = bindings_.find(aor);
    if (it == bindings_.end()) return std::nullopt;
    if (now - it->second.registered_at >= std::chrono::seconds(it->second.expires)) return std::nullopt;
    return it->second;
}

std::size_t LocationStore::size() const {
    std::shared_lock lock(mu_);
    return bindings_.size();
}

std::vector<LocationBinding> LocationStore::snapshot() const {
    std::shared_lock lock(mu_);
    std::vector<LocationBinding> out;
    out.reserve(bindings_.size());
    for (const auto& [aor, b] : bindings_) out.push_back(b);
    return out;
}

void LocationStore::dump(std::ostream& out) const {
    for (const auto& b : snapshot()) out << b.aor << ' ' << b.contact.to_string() << ' ' << b.expires << '\n';
}

void LocationStore::dump_to_file(const std::filesystem::path& path) const {
    std::ofstream out(path);
    dump(out);
}

namespace {

std::optional<std::uint32_t> parse_expires(std::string_view s) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

sip::SipMessage handle_register(const sip::SipMessage& msg, LocationStore& db, net::TimePoint now) {
    auto bad = [&] { return sip::make_response(msg, 400, "reg"); };
    auto to = msg.header("To");
    auto contact = msg.header("Contact");
    if (!to || !contact) return bad();
    auto aor = sip::SipUri::parse(sip::addr_spec(*to));
    auto contact_uri = sip::SipUri::parse(sip::addr_spec(*contact));
    if (!aor || !contact_uri) return bad();
    auto where = contact_uri->literal_endpoint();
    if (!where) return bad();

    std::uint32_t expires = 3600;
    if (auto p = sip::header_param(*contact, "expires")) {
        auto v = parse_expires(*p);
        if (!v) return bad();
        expires = *v;
    } else if (auto h = msg.header("Expires")) {
        auto v = parse_expires(*h);
        if (!v) return bad();
        expires = *v;
    }

    auto resp = sip::make_response(msg, 200, "reg");
    if (expires == 0) {
        db.erase(aor->aor_key());
        return resp;
    }
    db.upsert(LocationBinding{aor->aor_key(), *where, expires, now});
    resp.add_header("Contact", "<" + contact_uri->to_string() + ">;expires=" + std::to_string(expires));
    return resp;
}

}  // namespace voipbed::ims
