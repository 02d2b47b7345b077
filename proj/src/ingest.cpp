#include "quiclens/ingest.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include "quiclens/log.hpp"

namespace quiclens {

namespace {

std::string canonical_flow_id(const Endpoints& ep) {
    std::string a = ep.src_ip + ':' + std::to_string(ep.src_port);
    std::string b = ep.dst_ip + ':' + std::to_string(ep.dst_port);
    if (b < a) std::swap(a, b);
    return a + '|' + b;
}

}  // namespace

// ---------------------------------------------------------------------------
// qevents

std::vector<RawDatagram> read_qevents(std::istream& in) {
    std::vector<RawDatagram> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        RawDatagram d;
        std::string dir, hex;
        if (!(ls >> d.ts_us >> dir >> d.ep.src_ip >> d.ep.src_port >> d.ep.dst_ip >>
              d.ep.dst_port >> hex))
            throw FormatError("qevents line " + std::to_string(lineno) + ": bad field layout");
        try {
            d.payload = from_hex(hex);
        } catch (const std::invalid_argument& e) {
            throw FormatError("qevents line " + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<RawDatagram> read_qevents_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_qevents(in);
}

void write_qevents(std::ostream& out, const std::vector<RawDatagram>& datagrams) {
    // Derive the readability dir column the same way the analyzer does:
    // the sender of the flow's first long-header datagram is the client.
    std::map<std::string, std::string> client_of;  // flow id -> "ip:port"
    for (const RawDatagram& d : datagrams) {
        std::string id = canonical_flow_id(d.ep);
        if (client_of.count(id)) continue;
        if (!d.payload.empty() && (d.payload[0] & 0x80) && (d.payload[0] & 0x40)) {
            client_of[id] = d.ep.src_ip + ':' + std::to_string(d.ep.src_port);
        } else if (d.ep.src_port == 443 && d.ep.dst_port != 443) {
            client_of[id] = d.ep.dst_ip + ':' + std::to_string(d.ep.dst_port);
        } else {
            client_of[id] = d.ep.src_ip + ':' + std::to_string(d.ep.src_port);
        }
    }
    for (const RawDatagram& d : datagrams) {
        std::string src = d.ep.src_ip + ':' + std::to_string(d.ep.src_port);
        const char* dir = src == client_of[canonical_flow_id(d.ep)] ? "c2s" : "s2c";
        out << d.ts_us << ' ' << dir << ' ' << d.ep.src_ip << ' ' << d.ep.src_port << ' '
            << d.ep.dst_ip << ' ' << d.ep.dst_port << ' '
            << to_hex(d.payload.data(), d.payload.size()) << '\n';
    }
}

// ---------------------------------------------------------------------------
// pcap

namespace {

uint32_t rd32(const uint8_t* p, bool swap) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    if (swap) v = __builtin_bswap32(v);
    return v;
}

std::string ipv4_str(const uint8_t* p) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", p[0], p[1], p[2], p[3]);
    return buf;
}

bool parse_ipv4_str(const std::string& s, uint8_t out[4]) {
    unsigned a, b, c, d;
    if (std::sscanf(s.c_str(), "%u.%u.%u.%u", &a, &b, &c, &d) != 4) return false;
    if (a > 255 || b > 255 || c > 255 || d > 255) return false;
    out[0] = a; out[1] = b; out[2] = c; out[3] = d;
    return true;
}

constexpr uint32_t kMagicUs = 0xa1b2c3d4;
constexpr uint32_t kMagicUsSwapped = 0xd4c3b2a1;
constexpr uint32_t kMagicNs = 0xa1b23c4d;
constexpr uint32_t kMagicNsSwapped = 0x4d3cb2a1;

}  // namespace

std::vector<RawDatagram> read_pcap_file(const std::string& path, IngestStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 24) throw FormatError("pcap: truncated global header");

    uint32_t magic = rd32(buf.data(), false);
    bool swap = false, nanos = false;
    switch (magic) {
        case kMagicUs: break;
        case kMagicUsSwapped: swap = true; break;
        case kMagicNs: nanos = true; break;
        case kMagicNsSwapped: swap = true; nanos = true; break;
        default: throw FormatError("pcap: unrecognized magic");
    }
    uint32_t linktype = rd32(buf.data() + 20, swap);
    if (linktype != 1 && linktype != 101)
        throw UnsupportedLinkType("pcap: link type " + std::to_string(linktype));

    std::vector<RawDatagram> out;
    size_t off = 24;
    while (off + 16 <= buf.size()) {
        uint32_t ts_sec = rd32(buf.data() + off, swap);
        uint32_t ts_frac = rd32(buf.data() + off + 4, swap);
        uint32_t caplen = rd32(buf.data() + off + 8, swap);
        off += 16;
        if (off + caplen > buf.size()) throw FormatError("pcap: truncated record");
        const uint8_t* frame = buf.data() + off;
        off += caplen;

        size_t ip_off = 0;
        if (linktype == 1) {
            if (caplen < 14) { if (stats) ++stats->skipped_non_udp; continue; }
            uint16_t ethertype = static_cast<uint16_t>((frame[12] << 8) | frame[13]);
            if (ethertype != 0x0800) { if (stats) ++stats->skipped_non_udp; continue; }
            ip_off = 14;
        }
        if (caplen < ip_off + 20) { if (stats) ++stats->skipped_non_udp; continue; }
        const uint8_t* ip = frame + ip_off;
        if ((ip[0] >> 4) != 4) { if (stats) ++stats->skipped_non_udp; continue; }
        size_t ihl = (ip[0] & 0x0f) * 4;
        if (ip[9] != 17) { if (stats) ++stats->skipped_non_udp; continue; }
        if (caplen < ip_off + ihl + 8) { if (stats) ++stats->skipped_non_udp; continue; }
        const uint8_t* udp = ip + ihl;
        uint16_t udp_len = static_cast<uint16_t>((udp[4] << 8) | udp[5]);
        if (udp_len < 8) { if (stats) ++stats->skipped_non_udp; continue; }
        size_t payload_len = udp_len - 8;
        if (ip_off + ihl + 8 + payload_len > caplen)
            payload_len = caplen - ip_off - ihl - 8;

        RawDatagram d;
        d.ts_us = static_cast<TsUs>(ts_sec) * 1000000 +
                  (nanos ? ts_frac / 1000 : ts_frac);
        d.ep.src_ip = ipv4_str(ip + 12);
        d.ep.dst_ip = ipv4_str(ip + 16);
        d.ep.src_port = static_cast<uint16_t>((udp[0] << 8) | udp[1]);
        d.ep.dst_port = static_cast<uint16_t>((udp[2] << 8) | udp[3]);
        d.payload.assign(udp + 8, udp + 8 + payload_len);
        out.push_back(std::move(d));
        if (stats) ++stats->datagrams;
    }
    return out;
}

namespace {

void put32(std::string& s, uint32_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
    s.push_back(static_cast<char>((v >> 16) & 0xff));
    s.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint16_t ipv4_checksum(const uint8_t* hdr, size_t len) {
    uint32_t sum = 0;
    for (size_t i = 0; i + 1 < len; i += 2)
        sum += static_cast<uint32_t>((hdr[i] << 8) | hdr[i + 1]);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<uint16_t>(~sum);
}

}  // namespace

void write_pcap(std::ostream& out, const std::vector<RawDatagram>& datagrams) {
    std::string hdr;
    put32(hdr, kMagicUs);
    put32(hdr, 0x00040002);  // version 2.4 (minor, major little-endian)
    put32(hdr, 0);           // thiszone
    put32(hdr, 0);           // sigfigs
    put32(hdr, 65535);       // snaplen
    put32(hdr, 1);           // linktype: Ethernet
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

    for (const RawDatagram& d : datagrams) {
        uint8_t src[4], dst[4];
        if (!parse_ipv4_str(d.ep.src_ip, src) || !parse_ipv4_str(d.ep.dst_ip, dst))
            throw FormatError("pcap writer: non-IPv4 address " + d.ep.src_ip);

        size_t ip_total = 20 + 8 + d.payload.size();
        std::vector<uint8_t> frame(14 + ip_total);
        // Ethernet: zeroed MACs, IPv4 ethertype
        frame[12] = 0x08;
        frame[13] = 0x00;
        uint8_t* ip = frame.data() + 14;
        ip[0] = 0x45;
        ip[2] = static_cast<uint8_t>(ip_total >> 8);
        ip[3] = static_cast<uint8_t>(ip_total & 0xff);
        ip[8] = 64;  // TTL
        ip[9] = 17;  // UDP
        std::memcpy(ip + 12, src, 4);
        std::memcpy(ip + 16, dst, 4);
        uint16_t csum = ipv4_checksum(ip, 20);
        ip[10] = static_cast<uint8_t>(csum >> 8);
        ip[11] = static_cast<uint8_t>(csum & 0xff);
        uint8_t* udp = ip + 20;
        udp[0] = static_cast<uint8_t>(d.ep.src_port >> 8);
        udp[1] = static_cast<uint8_t>(d.ep.src_port & 0xff);
        udp[2] = static_cast<uint8_t>(d.ep.dst_port >> 8);
        udp[3] = static_cast<uint8_t>(d.ep.dst_port & 0xff);
        uint16_t udp_len = static_cast<uint16_t>(8 + d.payload.size());
        udp[4] = static_cast<uint8_t>(udp_len >> 8);
        udp[5] = static_cast<uint8_t>(udp_len & 0xff);
        std::memcpy(udp + 8, d.payload.data(), d.payload.size());

        std::string rec;
        put32(rec, static_cast<uint32_t>(d.ts_us / 1000000));
        put32(rec, static_cast<uint32_t>(d.ts_us % 1000000));
        put32(rec, static_cast<uint32_t>(frame.size()));
        put32(rec, static_cast<uint32_t>(frame.size()));
        out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
        out.write(reinterpret_cast<const char*>(frame.data()),
                  static_cast<std::streamsize>(frame.size()));
    }
}

void write_pcap_file(const std::string& path, const std::vector<RawDatagram>& datagrams) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_pcap(out, datagrams);
}

// ---------------------------------------------------------------------------
// Analyzer

struct Analyzer::FlowEntry {
    std::string flow_id;
    ConnectionKey key;
    uint32_t generation = 0;
    uint64_t next_position = 0;
    std::unique_ptr<Connection> conn;
};

Analyzer::Analyzer(const AnalyzerConfig& cfg, bool collect_records)
    : cfg_(cfg), collect_records_(collect_records) {}

Analyzer::~Analyzer() = default;

void Analyzer::emit_objects(const FlowEntry& entry, const std::vector<HttpObjectRecord>& objs) {
    for (const HttpObjectRecord& o : objs) {
        OutputRecord rec;
        rec.type = OutputRecord::Type::Object;
        rec.key = entry.key;
        rec.generation = entry.generation;
        rec.conn_start_us = entry.conn->connection_start_us();
        rec.object = o;
        records_.push_back(std::move(rec));
    }
}

void Analyzer::close_entry(FlowEntry& entry) {
    ConnectionDiag diag;
    diag.key = entry.key;
    diag.generation = entry.generation;
    diag.handshake_complete = entry.conn->handshake_complete();
    diag.handshake_complete_ts = entry.conn->handshake_complete_ts();
    diag.rtt_us = entry.conn->rtt_current_us();
    diag.classification = entry.conn->classification_log();
    diag.request_estimates = entry.conn->request_estimates();
    diag.response_estimates = entry.conn->response_estimates();

    auto [objects, summary] = entry.conn->finish();
    emit_objects(entry, objects);
    if (summary) {
        diag.admitted_request_bytes = summary->admitted_request_bytes;
        diag.admitted_response_bytes = summary->admitted_response_bytes;
        diag.dropped_response_bytes = summary->dropped_response_bytes;
        OutputRecord rec;
        rec.type = OutputRecord::Type::Summary;
        rec.key = entry.key;
        rec.generation = entry.generation;
        rec.conn_start_us = summary->connection_start_us;
        rec.summary = std::move(*summary);
        records_.push_back(std::move(rec));
    }
    diags_.push_back(std::move(diag));
}

Analyzer::FlowEntry& Analyzer::lookup_flow(const RawDatagram& dgram,
                                           const ParsedDatagram& parsed) {
    std::string id = canonical_flow_id(dgram.ep);
    auto it = flows_.find(id);
    const PacketFacts& first = parsed.packets.front();
    if (it == flows_.end()) {
        auto entry = std::make_unique<FlowEntry>();
        entry->flow_id = id;
        entry->key = normalize_key(dgram.ep, first.header_form == HeaderForm::Long,
                                   first.dcid_hex);
        entry->conn = std::make_unique<Connection>(cfg_, entry->key, 0);
        QUICLENS_LOG_INFO("new connection " << entry->key.flow_id() << " cid="
                                            << entry->key.quic_cid);
        FlowEntry* raw = entry.get();
        flows_.emplace(std::move(id), std::move(entry));
        flow_order_.push_back(raw);
        return *raw;
    }
    FlowEntry& entry = *it->second;
    // A fresh Initial from the client with a new DCID on a reused 5-tuple is
    // a distinct connection.
    bool from_client = dgram.ep.src_ip == entry.key.client_ip &&
                       dgram.ep.src_port == entry.key.client_port;
    if (from_client && first.header_form == HeaderForm::Long &&
        first.long_packet_type == LongPacketType::Initial && !entry.key.quic_cid.empty() &&
        first.dcid_hex != entry.key.quic_cid && entry.conn->handshake_complete()) {
        close_entry(entry);
        entry.key.quic_cid = first.dcid_hex;
        entry.generation = 0;
        entry.next_position = 0;
        entry.conn = std::make_unique<Connection>(cfg_, entry.key, 0);
        return entry;
    }
    // Idle closure: the old generation is summarized and cleared; traffic on
    // the same key reopens as a new generation.
    if (auto idle = entry.conn->check_idle(dgram.ts_us)) {
        emit_objects(entry, idle->objects);
        OutputRecord rec;
        rec.type = OutputRecord::Type::Summary;
        rec.key = entry.key;
        rec.generation = entry.generation;
        rec.conn_start_us = idle->summary.connection_start_us;
        rec.summary = idle->summary;
        records_.push_back(rec);
        ConnectionDiag diag;
        diag.key = entry.key;
        diag.generation = entry.generation;
        diag.handshake_complete = entry.conn->handshake_complete();
        diag.handshake_complete_ts = entry.conn->handshake_complete_ts();
        diag.rtt_us = entry.conn->rtt_current_us();
        diag.classification = entry.conn->classification_log();
        diag.request_estimates = entry.conn->request_estimates();
        diag.response_estimates = entry.conn->response_estimates();
        diag.admitted_request_bytes = idle->summary.admitted_request_bytes;
        diag.admitted_response_bytes = idle->summary.admitted_response_bytes;
        diag.dropped_response_bytes = idle->summary.dropped_response_bytes;
        diags_.push_back(std::move(diag));
        ++entry.generation;
        entry.next_position = 0;
        entry.conn = std::make_unique<Connection>(cfg_, entry.key, entry.generation);
        QUICLENS_LOG_INFO("idle reopen " << entry.key.flow_id() << " generation "
                                         << entry.generation);
    }
    return entry;
}

void Analyzer::on_datagram(const RawDatagram& dgram) {
    ++stats_.datagrams;
    if (dgram.payload.empty() || !looks_like_quic(dgram.payload)) {
        ++stats_.skipped_non_quic;
        return;
    }
    ParsedDatagram parsed;
    ParseError err = parse_header_facts(dgram.payload, parsed);
    if (err != ParseError::Ok) {
        ++stats_.malformed_datagrams;
        QUICLENS_LOG_DEBUG("malformed datagram at " << dgram.ts_us << "us, skipped");
        return;
    }

    FlowEntry& entry = lookup_flow(dgram, parsed);
    bool from_client = dgram.ep.src_ip == entry.key.client_ip &&
                       dgram.ep.src_port == entry.key.client_port;
    Direction dir = from_client ? Direction::ClientToServer : Direction::ServerToClient;

    for (const PacketFacts& facts : parsed.packets) {
        PacketRecord rec;
        rec.ts_us = dgram.ts_us;
        rec.direction = dir;
        rec.udp_payload_len = static_cast<uint32_t>(dgram.payload.size());
        rec.quic_packet_len = facts.quic_packet_len;
        rec.header_form = facts.header_form;
        rec.long_packet_type = facts.long_packet_type;
        rec.quic_packets_in_datagram = static_cast<uint32_t>(parsed.packets.size());
        rec.position_index = entry.next_position++;
        ++stats_.quic_packets;
        if (collect_records_) packet_log_.emplace_back(entry.key, rec);
        emit_objects(entry, entry.conn->process(rec));
    }
}

void Analyzer::finish() {
    for (FlowEntry* entry : flow_order_) {
        if (!entry->conn->closed()) close_entry(*entry);
    }
}

void run_capture_file(const std::string& path, Analyzer& analyzer) {
    std::vector<RawDatagram> datagrams;
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".pcap") == 0) {
        IngestStats dummy;
        datagrams = read_pcap_file(path, &dummy);
    } else {
        datagrams = read_qevents_file(path);
    }
    for (const RawDatagram& d : datagrams) analyzer.on_datagram(d);
    analyzer.finish();
}

}  // namespace quiclens
