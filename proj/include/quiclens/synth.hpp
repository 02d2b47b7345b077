#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "quiclens/core.hpp"
#include "quiclens/ingest.hpp"

namespace quiclens {

enum class TrafficPattern {
    VideoSequential,
    WebMultiplexed,
    Login,
    BulkDownload,
    BulkUpload,
    ZeroRttResume,
};

const char* to_string(TrafficPattern p);
bool pattern_from_string(const std::string& name, TrafficPattern& out);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
    TrafficPattern pattern = TrafficPattern::VideoSequential;
    double rtt_s = 0.1;
    uint32_t mtu_up = 1252;
    uint32_t mtu_down = 1252;
    uint32_t n_pairs = 2;
    double loss_rate = 0.0;   // downstream data-packet loss (drives ACK growth)
    uint32_t ack_every = 2;   // one client ACK per this many response packets
    uint32_t handshake_rounds = 1;
    uint64_t seed = 1;
    std::string client_ip = "10.0.0.1";
    uint16_t client_port = 50000;
    std::string server_ip = "203.0.113.10";
    uint16_t server_port = 443;
};

enum class PacketRole : uint8_t { Handshake, RequestData, ResponseData, Ack, Control };

const char* to_string(PacketRole r);

struct LabeledPacket {
    uint64_t ordinal = 0;  // per-connection QUIC-packet index, wire order
    int32_t pair_id = -1;  // -1 for packets outside any HTTP pair
    PacketRole role = PacketRole::Control;
    uint32_t quic_packet_len = 0;
    TsUs ts_us = 0;
    Direction direction = Direction::ClientToServer;
};

struct TruePair {
    uint32_t pair_id = 0;
    TsUs request_start_us = 0;
    uint64_t request_size = 0;
    uint32_t request_packets = 0;
    TsUs response_start_us = 0;
    TsUs response_end_us = 0;
    uint64_t response_size = 0;
    uint32_t response_packets = 0;
    bool is_zero_rtt = false;
};

struct GroundTruth {
    ScenarioConfig config;
    std::vector<TruePair> pairs;
    std::vector<LabeledPacket> packets;
};

struct SyntheticTrace {
    std::vector<RawDatagram> datagrams;  // time order
    GroundTruth truth;
};

// Deterministic from config.seed. Header framing is structurally valid QUIC;
// payloads are random bytes.
SyntheticTrace generate(const ScenarioConfig& cfg);

void write_labels_json(std::ostream& out, const std::vector<GroundTruth>& truths);
std::vector<GroundTruth> read_labels_json(std::istream& in);
std::vector<GroundTruth> read_labels_file(const std::string& path);

}  // namespace quiclens
