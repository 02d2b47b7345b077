#include "quiclens/core.hpp"

#include <sstream>
#include <stdexcept>

namespace quiclens {

const char* to_string(Direction d) {
    return d == Direction::ClientToServer ? "c2s" : "s2c";
}

const char* to_string(LongPacketType t) {
    switch (t) {
        case LongPacketType::Initial: return "initial";
        case LongPacketType::ZeroRTT: return "zero_rtt";
        case LongPacketType::Handshake: return "handshake";
        case LongPacketType::Retry: return "retry";
    }
    return "?";
}

std::string ConnectionKey::flow_id() const {
    std::ostringstream os;
    os << client_ip << ':' << client_port << '-' << server_ip << ':' << server_port;
    return os.str();
}

ConnectionKey normalize_key(const Endpoints& ep, bool first_packet_is_long_header,
                            const std::string& dcid_hex) {
    ConnectionKey key;
    bool src_is_client;
    if (first_packet_is_long_header) {
        src_is_client = true;
        key.client_inferred = true;
        key.quic_cid = dcid_hex;
    } else {
        // Mid-capture flow: no handshake visible. Port 443 marks the server;
        // failing that, the first sender is provisionally the client.
        key.client_inferred = false;
        src_is_client = !(ep.src_port == 443 && ep.dst_port != 443);
    }
    if (src_is_client) {
        key.client_ip = ep.src_ip;
        key.client_port = ep.src_port;
        key.server_ip = ep.dst_ip;
        key.server_port = ep.dst_port;
    } else {
        key.client_ip = ep.dst_ip;
        key.client_port = ep.dst_port;
        key.server_ip = ep.src_ip;
        key.server_port = ep.src_port;
    }
    return key;
}

std::string to_hex(const uint8_t* data, size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (size_t i = 0; i < len; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0xf]);
    }
    return out;
}

static int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::vector<uint8_t> from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = hex_val(hex[2 * i]);
        int lo = hex_val(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

}  // namespace quiclens
