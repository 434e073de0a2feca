#include "voipbed/sip/signal_kind.h"

namespace voipbed::sip {

server::SignalKind signal_kind(const SipMessage& msg) {
    using server::SignalKind;
    if (msg.is_request()) {
        switch (msg.method()) {
            case Method::Invite: return SignalKind::Invite;
            case Method::Ack: return SignalKind::Ack;
            case Method::Bye: return SignalKind::Bye;
            case Method::Cancel: return SignalKind::Cancel;
            case Method::Register: return SignalKind::Register;
            case Method::Unknown: return SignalKind::Other;
        }
        return SignalKind::Other;
    }
    switch (msg.status_code()) {
        case 100: return SignalKind::Trying;
        case 180: return SignalKind::Ringing;
        case 200: return SignalKind::Ok;
        default: return SignalKind::Other;
    }
}

bool is_keepalive(std::string_view payload) {
    return !payload.empty() && payload.find_first_not_of("\r\n") == std::string_view::npos;
}

}  // namespace voipbed::sip
