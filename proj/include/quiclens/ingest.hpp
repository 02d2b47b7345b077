#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "quiclens/connection.hpp"
#include "quiclens/core.hpp"
#include "quiclens/header_parse.hpp"

namespace quiclens {

struct RawDatagram {
    TsUs ts_us = 0;
    Endpoints ep;
    std::vector<uint8_t> payload;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedLinkType : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestStats {
    uint64_t datagrams = 0;
    uint64_t skipped_non_udp = 0;
    uint64_t skipped_non_quic = 0;
    uint64_t malformed_datagrams = 0;
    uint64_t quic_packets = 0;
};

// `.qevents`: one datagram per line,
//   ts_us dir src_ip src_port dst_ip dst_port hex_payload
// The dir column is informational; direction is re-derived on read.
std::vector<RawDatagram> read_qevents(std::istream& in);
std::vector<RawDatagram> read_qevents_file(const std::string& path);
void write_qevents(std::ostream& out, const std::vector<RawDatagram>& datagrams);

// Classic pcap, Ethernet (1) or raw-IP (101) link types, IPv4/UDP only.
std::vector<RawDatagram> read_pcap_file(const std::string& path, IngestStats* stats = nullptr);
void write_pcap(std::ostream& out, const std::vector<RawDatagram>& datagrams);
void write_pcap_file(const std::string& path, const std::vector<RawDatagram>& datagrams);

struct OutputRecord {
    enum class Type { Object, Summary };
    Type type = Type::Object;
    ConnectionKey key;
    uint32_t generation = 0;
    TsUs conn_start_us = 0;
    HttpObjectRecord object;      // valid when type == Object
    ConnectionSummary summary;    // valid when type == Summary
};

// Demultiplexes datagrams into per-connection packet streams and drives one
// Connection pipeline each. Single-threaded; per-connection order follows
// capture order.
class Analyzer {
public:
    explicit Analyzer(const AnalyzerConfig& cfg, bool collect_records = false);
    ~Analyzer();

    void on_datagram(const RawDatagram& dgram);
    void finish();  // flush all open connections, in first-seen order

    const std::vector<OutputRecord>& records() const { return records_; }
    const IngestStats& stats() const { return stats_; }

    struct ConnectionDiag {
        ConnectionKey key;
        uint32_t generation = 0;
        bool handshake_complete = false;
        TsUs handshake_complete_ts = 0;
        double rtt_us = 0;
        std::vector<ClassifiedPacket> classification;
        std::vector<RequestEstimate> request_estimates;
        std::vector<ResponseEstimate> response_estimates;
        uint64_t admitted_request_bytes = 0;
        uint64_t admitted_response_bytes = 0;
        uint64_t dropped_response_bytes = 0;
    };
    const std::vector<ConnectionDiag>& diagnostics() const { return diags_; }

    // Per-connection PacketRecord streams (only when collect_records is on).
    const std::vector<std::pair<ConnectionKey, PacketRecord>>& packet_log() const {
        return packet_log_;
    }

private:
    struct FlowEntry;
    FlowEntry& lookup_flow(const RawDatagram& dgram, const ParsedDatagram& parsed);
    void close_entry(FlowEntry& entry);
    void emit_objects(const FlowEntry& entry, const std::vector<HttpObjectRecord>& objs);

    const AnalyzerConfig& cfg_;
    bool collect_records_;
    std::map<std::string, std::unique_ptr<FlowEntry>> flows_;
    std::vector<FlowEntry*> flow_order_;
    std::vector<OutputRecord> records_;
    std::vector<ConnectionDiag> diags_;
    std::vector<std::pair<ConnectionKey, PacketRecord>> packet_log_;
    IngestStats stats_;
};

// Convenience: read a capture (by extension: .pcap/.pcapng -> pcap reader,
// anything else -> qevents), run it through an analyzer.
void run_capture_file(const std::string& path, Analyzer& analyzer);

}  // namespace quiclens
