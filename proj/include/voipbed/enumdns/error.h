#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace voipbed::enumdns {

enum class EnumErrc {
    InvalidNumber,
    NotUnderApex,
    NonDigitLabel,
    MultiCharLabel,
    BadRegexpSyntax,
    PatternMismatch,
    TruncatedPacket,
    IdMismatch,
    FormatError,
    Nxdomain,
    ServFail,
    Timeout,
    NoViableRecord,
    SyntaxError,
    DuplicateEntry,
    DomainOutsideApex,
    BindFailure,
    IoError,
};

std::string_view to_string(EnumErrc code);

class EnumError : public std::runtime_error {
  public:
    EnumError(EnumErrc code, const std::string& detail, int line = 0);
    EnumErrc code() const { return code_; }
    // 1-based source line for zone file errors, else 0.
    int line() const { return line_; }

  private:
    EnumErrc code_;
    int line_;
};

}  // namespace voipbed::enumdns
