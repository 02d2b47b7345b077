#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quiclens/core.hpp"

namespace quiclens {

// Visible facts of one QUIC packet inside a UDP datagram.
struct PacketFacts {
    HeaderForm header_form = HeaderForm::Short;
    std::optional<LongPacketType> long_packet_type;
    uint32_t quic_packet_len = 0;
    std::string dcid_hex;  // long headers only; empty for short headers
};

struct ParsedDatagram {
    std::vector<PacketFacts> packets;  // in wire order
};

enum class ParseError {
    Ok,
    NotQuic,          // fixed bit clear on the first byte
    MalformedHeader,  // truncated varint, CID length past the end, etc.
};

// Walks the coalesced QUIC packets of one UDP payload. Long headers are
// delimited by their Length field; a short header consumes the remainder and
// is only accepted as the final element. Retry packets have no Length field
// and also consume the remainder.
ParseError parse_header_facts(std::span<const uint8_t> udp_payload, ParsedDatagram& out);

// True when the first byte looks like QUIC (fixed bit set).
bool looks_like_quic(std::span<const uint8_t> udp_payload);

// RFC 9000 variable-length integer. Returns bytes consumed, 0 on truncation.
size_t decode_varint(std::span<const uint8_t> data, uint64_t& value);
size_t encode_varint(uint64_t value, uint8_t* out);  // caller provides >= 8 bytes
size_t varint_size(uint64_t value);

}  // namespace quiclens
