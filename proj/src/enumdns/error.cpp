#include "voipbed/enumdns/error.h"

namespace voipbed::enumdns {

std::string_view to_string(EnumErrc code) {
    switch (code) {
        case EnumErrc::InvalidNumber: return "InvalidNumber";
        case EnumErrc::NotUnderApex: return "NotUnderApex";
        case EnumErrc::NonDigitLabel: return "NonDigitLabel";
        case EnumErrc::MultiCharLabel: return "MultiCharLabel";
        case EnumErrc::BadRegexpSyntax: return "BadRegexpSyntax";
        case EnumErrc::PatternMismatch: return "PatternMismatch";
        case EnumErrc::TruncatedPacket: return "TruncatedPacket";
        case EnumErrc::IdMismatch: return "IdMismatch";
        case EnumErrc::FormatError: return "FormatError";
        case EnumErrc::Nxdomain: return "Nxdomain";
        case EnumErrc::ServFail: return "ServFail";
        case EnumErrc::Timeout: return "Timeout";
        case EnumErrc::NoViableRecord: return "NoViableRecord";
        case EnumErrc::SyntaxError: return "SyntaxError";
        case EnumErrc::DuplicateEntry: return "DuplicateEntry";
        case EnumErrc::DomainOutsideApex: return "DomainOutsideApex";
        case EnumErrc::BindFailure: return "BindFailure";
        case EnumErrc::IoError: return "IoError";
    }
    return "?";
}

namespace {
std::string compose(EnumErrc code, const std::string& detail, int line) {
    std::string out(to_string(code));
    if (line > 0) out += " at line " + std::to_string(line);
    if (!detail.empty()) out += ": " + detail;
    return out;
}
}  // namespace

EnumError::EnumError(EnumErrc code, const std::string& detail, int line)
    : std::runtime_error(compose(code, detail, line)), code_(code), line_(line) {}

}  // namespace voipbed::enumdns
