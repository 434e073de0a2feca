#pragma once

#include "voipbed/server/profile.h"
#include "voipbed/sip/message.h"

namespace voipbed::sip {

// Maps a message to the signal kind used for delay lookup.
server::SignalKind signal_kind(const SipMessage& msg);

// A datagram of only CR/LF is a keepalive ping.
bool is_keepalive(std::string_view payload);

}  // namespace voipbed::sip
