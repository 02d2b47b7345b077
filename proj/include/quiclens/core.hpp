#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace quiclens {

enum class Direction : uint8_t { ClientToServer, ServerToClient };

inline Direction opposite(Direction d) {
    return d == Direction::ClientToServer ? Direction::ServerToClient
                                          : Direction::ClientToServer;
}

enum class HeaderForm : uint8_t { Long, Short };

enum class LongPacketType : uint8_t { Initial, ZeroRTT, Handshake, Retry };

const char* to_string(Direction d);
const char* to_string(LongPacketType t);

// Timestamps are absolute microseconds within a trace.
using TsUs = int64_t;

inline double us_to_s(TsUs us) { return static_cast<double>(us) / 1e6; }

// Direction-normalized connection identity: the client endpoint (the sender
// of the first long-header packet, or the heuristic pick for mid-capture
// flows) is always stored first.
struct ConnectionKey {
    std::string client_ip;
    uint16_t client_port = 0;
    std::string server_ip;
    uint16_t server_port = 0;
    std::string quic_cid;  // hex of the DCID from the client's first long header; may be empty
    bool client_inferred = true;  // false when no long header established the initiator

    bool operator==(const ConnectionKey&) const = default;

    std::string flow_id() const;  // 5-tuple string, same for both directions
};

// One endpoint pair as seen on the wire (pre-normalization).
struct Endpoints {
    std::string src_ip;
    uint16_t src_port = 0;
    std::string dst_ip;
    uint16_t dst_port = 0;
};

// Designate the client endpoint of a new flow. When the first observed
// packet carries a long header its sender is the initiator; otherwise fall
// back to the port heuristic (443 is the server side) and flag the key.
ConnectionKey normalize_key(const Endpoints& first_packet,
                            bool first_packet_is_long_header,
                            const std::string& dcid_hex);

struct PacketRecord {
    TsUs ts_us = 0;
    Direction direction = Direction::ClientToServer;
    uint32_t udp_payload_len = 0;
    uint32_t quic_packet_len = 0;
    HeaderForm header_form = HeaderForm::Short;
    std::optional<LongPacketType> long_packet_type;
    uint32_t quic_packets_in_datagram = 1;
    uint64_t position_index = 0;
};

struct TimingConfig {
    double delta_t_req = 1.0;         // request inter-packet window, RTT multiples
    double delta_t_resp = 1.0;        // response inter-packet window
    double association_min_rtts = 1.0;
    double association_max_rtts = 20.0;
    double idle_rtts = 20.0;
};

struct AnalyzerConfig {
    uint32_t l_req_init = 100;   // request threshold before the first request
    uint32_t l_req_floor = 50;   // request threshold floor afterwards
    uint32_t l_resp_floor = 35;  // response threshold floor
    uint32_t mtu_init = 1200;
    double rtt_default_s = 0.1;  // used when the handshake yields no sample
    uint32_t n_req_cap = 64;     // max individual pairs per super object
    TimingConfig timing;

    double rtt_default_us() const { return rtt_default_s * 1e6; }
};

std::string to_hex(const uint8_t* data, size_t len);
std::vector<uint8_t> from_hex(const std::string& hex);  // throws std::invalid_argument

}  // namespace quiclens
