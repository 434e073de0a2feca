#include "voipbed/enumdns/dns_wire.h"

#include "voipbed/enumdns/e164.h"
#include "voipbed/enumdns/error.h"

namespace voipbed::enumdns {

namespace {

using Bytes = std::vector<std::uint8_t>;

void put16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put32(Bytes& out, std::uint32_t v) {
    put16(out, static_cast<std::uint16_t>(v >> 16));
    put16(out, static_cast<std::uint16_t>(v & 0xffff));
}

void put_name(Bytes& out, std::string_view name) {
    std::size_t start = out.size();
    if (name.ends_with('.')) name.remove_suffix(1);
    while (!name.empty()) {
        auto dot = name.find('.');
        auto label = name.substr(0, dot);
        if (label.empty() || label.size() > 63) throw EnumError(EnumErrc::FormatError, "bad label in name");
        out.push_back(static_cast<std::uint8_t>(label.size()));
        out.insert(out.end(), label.begin(), label.end());
        name = dot == std::string_view::npos ? std::string_view{} : name.substr(dot + 1);
    }
    out.push_back(0);
    if (out.size() - start > 255) throw EnumError(EnumErrc::FormatError, "name longer than 255 bytes");
}

void put_string(Bytes& out, std::string_view s) {
    if (s.size() > 255) throw EnumError(EnumErrc::FormatError, "character-string longer than 255 bytes");
    out.push_back(static_cast<std::uint8_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void put_header(Bytes& out, const DnsHeader& h) {
    put16(out, h.id);
    std::uint16_t flags = 0;
    if (h.qr) flags |= 0x8000;
    flags |= static_cast<std::uint16_t>((h.opcode & 0xf) << 11);
    if (h.aa) flags |= 0x0400;
    if (h.tc) flags |= 0x0200;
    if (h.rd) flags |= 0x0100;
    if (h.ra) flags |= 0x0080;
    flags |= h.rcode & 0xf;
    put16(out, flags);
    put16(out, h.qdcount);
    put16(out, h.ancount);
    put16(out, h.nscount);
    put16(out, h.arcount);
}

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> raw) : raw_(raw) {}

    std::uint8_t u8() {
        need(1);
        return raw_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((raw_[pos_] << 8) | raw_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        auto hi = u16();
        return (static_cast<std::uint32_t>(hi) << 16) | u16();
    }
    std::string str() {
        auto n = u8();
        need(n);
        std::string s(reinterpret_cast<const char*>(raw_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::string name() {
        std::string out;
        std::size_t p = pos_;
        bool jumped = false;
        int hops = 0;
        while (true) {
            if (p >= raw_.size()) throw EnumError(EnumErrc::TruncatedPacket, "name runs past end");
            std::uint8_t len = raw_[p];
            if ((len & 0xc0) == 0xc0) {
                if (p + 1 >= raw_.size()) throw EnumError(EnumErrc::TruncatedPacket, "compression pointer cut");
                if (++hops > 64) throw EnumError(EnumErrc::FormatError, "compression loop");
                std::size_t target = static_cast<std::size_t>(((len & 0x3f) << 8) | raw_[p + 1]);
                if (!jumped) pos_ = p + 2;
                jumped = true;
                if (target >= raw_.size()) throw EnumError(EnumErrc::FormatError, "pointer out of range");
                p = target;
                continue;
            }
            if (len & 0xc0) throw EnumError(EnumErrc::FormatError, "unsupported label type");
            if (len == 0) {
                if (!jumped) pos_ = p + 1;
                break;
            }
            if (p + 1 + len > raw_.size()) throw EnumError(EnumErrc::TruncatedPacket, "label runs past end");
            if (!out.empty()) out.push_back('.');
            out.append(reinterpret_cast<const char*>(raw_.data() + p + 1), len);
            if (out.size() > 255) throw EnumError(EnumErrc::FormatError, "name too long");
            p += 1 + len;
        }
        return out;
    }
    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::size_t pos() const { return pos_; }

  private:
    void need(std::size_t n) const {
        if (pos_ + n > raw_.size()) throw EnumError(EnumErrc::TruncatedPacket, "packet ends early");
    }
    std::span<const std::uint8_t> raw_;
    std::size_t pos_ = 0;
};

DnsHeader read_header(Reader& r) {
    DnsHeader h;
    h.id = r.u16();
    auto flags = r.u16();
    h.qr = flags & 0x8000;
    h.opcode = static_cast<std::uint8_t>((flags >> 11) & 0xf);
    h.aa = flags & 0x0400;
    h.tc = flags & 0x0200;
    h.rd = flags & 0x0100;
    h.ra = flags & 0x0080;
    h.rcode = static_cast<std::uint8_t>(flags & 0xf);
    h.qdcount = r.u16();
    h.ancount = r.u16();
    h.nscount = r.u16();
    h.arcount = r.u16();
    return h;
}

DnsQuestion read_question(Reader& r) {
    DnsQuestion q;
    q.name = r.name();
    q.qtype = r.u16();
    q.qclass = r.u16();
    return q;
}

}  // namespace

std::vector<std::uint8_t> encode_query(std::string_view domain, std::uint16_t id, std::uint16_t qtype) {
    Bytes out;
    out.reserve(12 + domain.size() + 6);
    DnsHeader h;
    h.id = id;
    h.rd = true;
    h.qdcount = 1;
    put_header(out, h);
    put_name(out, domain);
    put16(out, qtype);
    put16(out, kClassIn);
    return out;
}

DnsQuery decode_query(std::span<const std::uint8_t> raw) {
    Reader r(raw);
    DnsQuery q;
    q.header = read_header(r);
    if (q.header.qr) throw EnumError(EnumErrc::FormatError, "not a query");
    if (q.header.qdcount != 1) throw EnumError(EnumErrc::FormatError, "expected exactly one question");
    q.question = read_question(r);
    return q;
}

std::vector<std::uint8_t> encode_response(const DnsQuery& query, Rcode rcode, const std::vector<NaptrRecord>& answers,
                                          std::size_t max_size) {
    Bytes out;
    DnsHeader h;
    h.id = query.header.id;
    h.qr = true;
    h.opcode = query.header.opcode;
    h.aa = true;
    h.rd = query.header.rd;
    h.rcode = static_cast<std::uint8_t>(rcode);
    h.qdcount = 1;
    put_header(out, h);
    put_name(out, query.question.name);
    put16(out, query.question.qtype);
    put16(out, query.question.qclass);

    std::uint16_t count = 0;
    bool truncated = false;
    for (const auto& rec : answers) {
        Bytes rr;
        // Owner is the question name, via a pointer to offset 12.
        put16(rr, 0xc00c);
        put16(rr, kTypeNaptr);
        put16(rr, kClassIn);
        put32(rr, rec.ttl);
        Bytes rdata;
        put16(rdata, rec.order);
        put16(rdata, rec.preference);
        put_string(rdata, rec.flags);
        put_string(rdata, rec.service);
        put_string(rdata, rec.regexp);
        put_name(rdata, rec.replacement == "." ? std::string_view{} : std::string_view(rec.replacement));
        put16(rr, static_cast<std::uint16_t>(rdata.size()));
        rr.insert(rr.end(), rdata.begin(), rdata.end());
        if (out.size() + rr.size() > max_size) {
            truncated = true;
            break;
        }
        out.insert(out.end(), rr.begin(), rr.end());
        ++count;
    }
    out[6] = static_cast<std::uint8_t>(count >> 8);
    out[7] = static_cast<std::uint8_t>(count & 0xff);
    if (truncated) out[2] |= 0x02;
    return out;
}

DnsResponse decode_response(std::span<const std::uint8_t> raw, std::optional<std::uint16_t> expected_id) {
    Reader r(raw);
    DnsResponse resp;
    resp.header = read_header(r);
    if (expected_id && resp.header.id != *expected_id) {
        throw EnumError(EnumErrc::IdMismatch, "got id " + std::to_string(resp.header.id));
    }
    if (!resp.header.qr) throw EnumError(EnumErrc::FormatError, "not a response");
    switch (static_cast<Rcode>(resp.header.rcode)) {
        case Rcode::NoError: break;
        case Rcode::NxDomain: throw EnumError(EnumErrc::Nxdomain, "name does not exist");
        case Rcode::ServFail: throw EnumError(EnumErrc::ServFail, "server failure");
        default: throw EnumError(EnumErrc::FormatError, "rcode " + std::to_string(resp.header.rcode));
    }
    for (int i = 0; i < resp.header.qdcount; ++i) {
        auto q = read_question(r);
        if (i == 0) resp.question = q;
    }
    for (int i = 0; i < resp.header.ancount; ++i) {
        r.name();
        auto type = r.u16();
        r.u16();  // class
        auto ttl = r.u32();
        auto rdlength = r.u16();
        auto rdata_start = r.pos();
        if (type != kTypeNaptr) {
            r.skip(rdlength);
            continue;
        }
        NaptrRecord rec;
        rec.ttl = ttl;
        rec.order = r.u16();
        rec.preference = r.u16();
        rec.flags = r.str();
        rec.service = r.str();
        rec.regexp = r.str();
        auto replacement = r.name();
        rec.replacement = replacement.empty() ? "." : replacement;
        if (r.pos() != rdata_start + rdlength) throw EnumError(EnumErrc::FormatError, "NAPTR rdlength mismatch");
        resp.answers.push_back(std::move(rec));
    }
    return resp;
}

std::optional<std::uint16_t> message_id(std::span<const std::uint8_t> raw) {
    if (raw.size() < 2) return std::nullopt;
    return static_cast<std::uint16_t>((raw[0] << 8) | raw[1]);
}

}  // namespace voipbed::enumdns
