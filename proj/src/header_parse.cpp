#include "quiclens/header_parse.hpp"

namespace quiclens {

namespace {
constexpr uint8_t kFormBit = 0x80;
constexpr uint8_t kFixedBit = 0x40;
}  // namespace

size_t decode_varint(std::span<const uint8_t> data, uint64_t& value) {
    if (data.empty()) return 0;
    size_t len = size_t{1} << (data[0] >> 6);
    if (data.size() < len) return 0;
    value = data[0] & 0x3f;
    for (size_t i = 1; i < len; ++i) value = (value << 8) | data[i];
    return len;
}

size_t varint_size(uint64_t value) {
    if (value < (1ull << 6)) return 1;
    if (value < (1ull << 14)) return 2;
    if (value < (1ull << 30)) return 4;
    return 8;
}

size_t encode_varint(uint64_t value, uint8_t* out) {
    size_t len = varint_size(value);
    for (size_t i = 0; i < len; ++i)
        out[len - 1 - i] = static_cast<uint8_t>(value >> (8 * i));
    switch (len) {
        case 2: out[0] |= 0x40; break;
        case 4: out[0] |= 0x80; break;
        case 8: out[0] |= 0xc0; break;
        default: break;
    }
    return len;
}

bool looks_like_quic(std::span<const uint8_t> udp_payload) {
    return !udp_payload.empty() && (udp_payload[0] & kFixedBit) != 0;
}

// Parses one long-header packet starting at `p`; on success sets `consumed`
// to its total length and fills `facts`.
static ParseError parse_long(std::span<const uint8_t> p, PacketFacts& facts,
                             size_t& consumed) {
    // first byte + version(4) + dcid_len(1)
    if (p.size() < 6) return ParseError::MalformedHeader;
    auto type = static_cast<LongPacketType>((p[0] >> 4) & 0x03);
    facts.header_form = HeaderForm::Long;
    facts.long_packet_type = type;

    size_t off = 5;
    size_t dcid_len = p[off++];
    if (off + dcid_len + 1 > p.size()) return ParseError::MalformedHeader;
    facts.dcid_hex = to_hex(p.data() + off, dcid_len);
    off += dcid_len;
    size_t scid_len = p[off++];
    if (off + scid_len > p.size()) return ParseError::MalformedHeader;
    off += scid_len;

    if (type == LongPacketType::Retry) {
        // No Length field; a Retry owns the rest of the datagram.
        consumed = p.size();
        facts.quic_packet_len = static_cast<uint32_t>(p.size());
        return ParseError::Ok;
    }
    if (type == LongPacketType::Initial) {
        uint64_t token_len = 0;
        size_t n = decode_varint(p.subspan(off), token_len);
        if (n == 0) return ParseError::MalformedHeader;
        off += n;
        if (off + token_len > p.size()) return ParseError::MalformedHeader;
        off += token_len;
    }
    uint64_t length = 0;  // covers packet number + payload
    size_t n = decode_varint(p.subspan(off), length);
    if (n == 0) return ParseError::MalformedHeader;
    off += n;
    if (off + length > p.size()) return ParseError::MalformedHeader;
    consumed = off + length;
    facts.quic_packet_len = static_cast<uint32_t>(consumed);
    return ParseError::Ok;
}

ParseError parse_header_facts(std::span<const uint8_t> udp_payload, ParsedDatagram& out) {
    out.packets.clear();
    if (udp_payload.empty()) return ParseError::MalformedHeader;
    if (!looks_like_quic(udp_payload)) return ParseError::NotQuic;

    std::span<const uint8_t> rest = udp_payload;
    while (!rest.empty()) {
        PacketFacts facts;
        if (rest[0] & kFormBit) {
            size_t consumed = 0;
            ParseError err = parse_long(rest, facts, consumed);
            if (err != ParseError::Ok) return err;
            out.packets.push_back(std::move(facts));
            rest = rest.subspan(consumed);
        } else {
            // Short header: undiscoverable boundary, consumes the remainder.
            facts.header_form = HeaderForm::Short;
            facts.quic_packet_len = static_cast<uint32_t>(rest.size());
            out.packets.push_back(std::move(facts));
            rest = {};
        }
    }
    return ParseError::Ok;
}

}  // namespace quiclens
