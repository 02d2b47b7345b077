#include <doctest.h>

#include <vector>

#include "quiclens/header_parse.hpp"

using namespace quiclens;

namespace {

// Minimal structurally valid long-header packet: version 1, 4-byte DCID/SCID,
// `payload_len` bytes after the Length field (packet number + ciphertext).
std::vector<uint8_t> make_long(LongPacketType type, size_t payload_len) {
    std::vector<uint8_t> p;
    p.push_back(static_cast<uint8_t>(0xc1 | (static_cast<uint8_t>(type) << 4)));
    p.insert(p.end(), {0x00, 0x00, 0x00, 0x01});        // version
    p.push_back(4);
    p.insert(p.end(), {0xde, 0xad, 0xbe, 0xef});        // DCID
    p.push_back(4);
    p.insert(p.end(), {0x01, 0x02, 0x03, 0x04});        // SCID
    if (type == LongPacketType::Initial) p.push_back(0);  // empty token
    uint8_t varint[8];
    size_t n = encode_varint(payload_len, varint);
    p.insert(p.end(), varint, varint + n);
    p.insert(p.end(), payload_len, 0xAA);
    return p;
}

}  // namespace

TEST_CASE("varint encode/decode round trips all four widths") {
    for (uint64_t v : {uint64_t{0}, uint64_t{63}, uint64_t{64}, uint64_t{16383},
                       uint64_t{16384}, uint64_t{1073741823}, uint64_t{1073741824}}) {
        uint8_t buf[8];
        size_t n = encode_varint(v, buf);
        uint64_t back = 0;
        CHECK(decode_varint(std::span<const uint8_t>(buf, n), back) == n);
        CHECK(back == v);
    }
    // Truncated 2-byte varint
    uint8_t trunc[1] = {0x40};
    uint64_t out = 0;
    CHECK(decode_varint(std::span<const uint8_t>(trunc, 1), out) == 0);
}

TEST_CASE("first byte 0b1101_0001 parses as a 0-RTT long header") {
    auto pkt = make_long(LongPacketType::ZeroRTT, 30);
    CHECK(pkt[0] == 0xd1);  // 0b1101_0001 with our type/flag layout
    ParsedDatagram out;
    REQUIRE(parse_header_facts(pkt, out) == ParseError::Ok);
    REQUIRE(out.packets.size() == 1);
    CHECK(out.packets[0].header_form == HeaderForm::Long);
    CHECK(out.packets[0].long_packet_type == LongPacketType::ZeroRTT);
    CHECK(out.packets[0].quic_packet_len == pkt.size());
    CHECK(out.packets[0].dcid_hex == "deadbeef");
}

TEST_CASE("short header consumes the datagram remainder") {
    std::vector<uint8_t> pkt{0x41};
    pkt.insert(pkt.end(), 99, 0x55);
    ParsedDatagram out;
    REQUIRE(parse_header_facts(pkt, out) == ParseError::Ok);
    REQUIRE(out.packets.size() == 1);
    CHECK(out.packets[0].header_form == HeaderForm::Short);
    CHECK_FALSE(out.packets[0].long_packet_type.has_value());
    CHECK(out.packets[0].quic_packet_len == 100);
}

TEST_CASE("coalesced Initial + Handshake datagram yields two packets") {
    auto first = make_long(LongPacketType::Initial, 60);
    auto second = make_long(LongPacketType::Handshake, 40);
    std::vector<uint8_t> dgram = first;
    dgram.insert(dgram.end(), second.begin(), second.end());
    ParsedDatagram out;
    REQUIRE(parse_header_facts(dgram, out) == ParseError::Ok);
    REQUIRE(out.packets.size() == 2);
    CHECK(out.packets[0].long_packet_type == LongPacketType::Initial);
    CHECK(out.packets[1].long_packet_type == LongPacketType::Handshake);
    CHECK(out.packets[0].quic_packet_len + out.packets[1].quic_packet_len == dgram.size());
}

TEST_CASE("malformed inputs are flagged, not crashed on") {
    ParsedDatagram out;

    // Fixed bit clear: not QUIC at all.
    std::vector<uint8_t> not_quic{0x00, 0x01, 0x02};
    CHECK_FALSE(looks_like_quic(not_quic));
    CHECK(parse_header_facts(not_quic, out) == ParseError::NotQuic);

    // Long header truncated inside the DCID.
    std::vector<uint8_t> trunc{0xc1, 0x00, 0x00, 0x00, 0x01, 0x08, 0xaa};
    CHECK(parse_header_facts(trunc, out) == ParseError::MalformedHeader);

    // Length field claims more bytes than the datagram holds.
    auto lying = make_long(LongPacketType::Handshake, 40);
    lying.resize(lying.size() - 10);
    CHECK(parse_header_facts(lying, out) == ParseError::MalformedHeader);

    // An empty datagram has no header to inspect at all.
    CHECK(parse_header_facts(std::span<const uint8_t>{}, out) == ParseError::MalformedHeader);
}
