#include "quiclens/output.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace quiclens {

namespace {

using nlohmann::json;

// Doubles are rounded to microsecond precision so the JSON and CSV encodings
// carry identical values.
double round6(double v) { return std::round(v * 1e6) / 1e6; }

const char* rtt_source_name(RttSource s) {
    return s == RttSource::HandshakeMeasured ? "handshake_measured" : "config_default";
}

json connection_json(const OutputRecord& rec) {
    return json{{"client_ip", rec.key.client_ip},
                {"client_port", rec.key.client_port},
                {"server_ip", rec.key.server_ip},
                {"server_port", rec.key.server_port},
                {"quic_cid", rec.key.quic_cid},
                {"client_inferred", rec.key.client_inferred},
                {"generation", rec.generation}};
}

json object_json(const OutputRecord& rec) {
    const HttpObjectRecord& o = rec.object;
    json j{{"request_start_us", o.request_start_us},
           {"request_start_rel_s", round6(us_to_s(o.request_start_us - rec.conn_start_us))},
           {"request_size", o.request_size},
           {"request_packets", o.request_packets},
           {"has_response", o.has_response},
           {"response_size", o.response_size},
           {"response_packets", o.response_packets},
           {"pair_count", o.pair_count},
           {"is_super", o.is_super},
           {"has_zero_rtt_request", o.has_zero_rtt_request},
           {"association", to_string(o.association)},
           {"ack_window_up", o.ack_window_up},
           {"ack_window_down", o.ack_window_down}};
    if (o.has_response) {
        j["response_start_us"] = o.response_start_us;
        j["response_start_rel_s"] = round6(us_to_s(o.response_start_us - rec.conn_start_us));
        j["response_end_us"] = o.response_end_us;
        j["response_end_rel_s"] = round6(us_to_s(o.response_end_us - rec.conn_start_us));
    }
    return j;
}

json summary_json(const OutputRecord& rec) {
    const ConnectionSummary& s = rec.summary;
    return json{{"connection_start_us", s.connection_start_us},
                {"duration_s", round6(s.duration_s)},
                {"total_request_size", s.total_request_size},
                {"total_response_size", s.total_response_size},
                {"total_request_packets", s.total_request_packets},
                {"total_response_packets", s.total_response_packets},
                {"individual_pair_count", s.individual_pair_count},
                {"estimated_object_count", s.estimated_object_count},
                {"multiplexing_level", round6(s.multiplexing_level)},
                {"no_objects", s.no_objects},
                {"rtt_used_s", round6(s.rtt_used_s)},
                {"rtt_source", rtt_source_name(s.rtt_source)},
                {"mtu_up", s.mtu_up},
                {"mtu_down", s.mtu_down},
                {"client_inferred", s.client_inferred},
                {"admitted_request_bytes", s.admitted_request_bytes},
                {"admitted_response_bytes", s.admitted_response_bytes},
                {"dropped_response_bytes", s.dropped_response_bytes}};
}

}  // namespace

void write_jsonl(std::ostream& out, const std::vector<OutputRecord>& records) {
    for (const OutputRecord& rec : records) {
        json j{{"record_type", rec.type == OutputRecord::Type::Object ? "object" : "summary"},
               {"schema_version", kSchemaVersion},
               {"connection", connection_json(rec)}};
        j["payload"] =
            rec.type == OutputRecord::Type::Object ? object_json(rec) : summary_json(rec);
        out << j.dump() << '\n';
    }
}

namespace {

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {
        "record_type", "schema_version", "client_ip", "client_port", "server_ip",
        "server_port", "quic_cid", "client_inferred", "generation",
        // object fields
        "request_start_us", "request_start_rel_s", "request_size", "request_packets",
        "has_response", "response_start_us", "response_start_rel_s", "response_end_us",
        "response_end_rel_s", "response_size", "response_packets", "pair_count", "is_super",
        "has_zero_rtt_request", "association", "ack_window_up", "ack_window_down",
        // summary fields
        "connection_start_us", "duration_s", "total_request_size", "total_response_size",
        "total_request_packets", "total_response_packets", "individual_pair_count",
        "estimated_object_count", "multiplexing_level", "no_objects", "rtt_used_s",
        "rtt_source", "mtu_up", "mtu_down", "admitted_request_bytes",
        "admitted_response_bytes", "dropped_response_bytes"};
    return cols;
}

std::string csv_value(const json& payload, const json& conn, const OutputRecord& rec,
                      const std::string& col) {
    if (col == "record_type")
        return rec.type == OutputRecord::Type::Object ? "object" : "summary";
    if (col == "schema_version") return kSchemaVersion;
    if (col == "ack_window_up" || col == "ack_window_down") {
        if (!payload.contains(col)) return "";
        std::ostringstream os;
        bool first = true;
        for (const auto& v : payload[col]) {
            if (!first) os << ';';
            os << v.get<uint64_t>();
            first = false;
        }
        return os.str();
    }
    const json* src = nullptr;
    if (conn.contains(col)) src = &conn;
    else if (payload.contains(col)) src = &payload;
    if (!src) return "";
    const json& v = (*src)[col];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<OutputRecord>& records) {
    const auto& cols = csv_columns();
    for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const OutputRecord& rec : records) {
        json payload =
            rec.type == OutputRecord::Type::Object ? object_json(rec) : summary_json(rec);
        json conn = connection_json(rec);
        for (size_t i = 0; i < cols.size(); ++i)
            out << (i ? "," : "") << csv_value(payload, conn, rec, cols[i]);
        out << '\n';
    }
}

std::vector<OutputRecord> read_jsonl(std::istream& in) {
    std::vector<OutputRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        OutputRecord rec;
        const json& conn = j.at("connection");
        rec.key.client_ip = conn.at("client_ip");
        rec.key.client_port = conn.at("client_port");
        rec.key.server_ip = conn.at("server_ip");
        rec.key.server_port = conn.at("server_port");
        rec.key.quic_cid = conn.at("quic_cid");
        rec.key.client_inferred = conn.at("client_inferred");
        rec.generation = conn.at("generation");
        const json& p = j.at("payload");
        if (j.at("record_type") == "object") {
            rec.type = OutputRecord::Type::Object;
            HttpObjectRecord& o = rec.object;
            o.request_start_us = p.at("request_start_us");
            o.request_size = p.at("request_size");
            o.request_packets = p.at("request_packets");
            o.has_response = p.at("has_response");
            if (o.has_response) {
                o.response_start_us = p.at("response_start_us");
                o.response_end_us = p.at("response_end_us");
            }
            o.response_size = p.at("response_size");
            o.response_packets = p.at("response_packets");
            o.pair_count = p.at("pair_count");
            o.is_super = p.at("is_super");
            o.has_zero_rtt_request = p.at("has_zero_rtt_request");
            std::string assoc = p.at("association");
            o.association = assoc == "valid" ? AssociationFlag::Valid
                            : assoc == "suspect_timing" ? AssociationFlag::SuspectTiming
                                                        : AssociationFlag::None;
            o.ack_window_up = p.at("ack_window_up").get<std::vector<uint32_t>>();
            o.ack_window_down = p.at("ack_window_down").get<std::vector<uint32_t>>();
            rec.conn_start_us = o.request_start_us -
                                static_cast<TsUs>(std::llround(
                                    p.at("request_start_rel_s").get<double>() * 1e6));
        } else {
            rec.type = OutputRecord::Type::Summary;
            ConnectionSummary& s = rec.summary;
            s.key = rec.key;
            s.generation = rec.generation;
            s.connection_start_us = p.at("connection_start_us");
            s.duration_s = p.at("duration_s");
            s.total_request_size = p.at("total_request_size");
            s.total_response_size = p.at("total_response_size");
            s.total_request_packets = p.at("total_request_packets");
            s.total_response_packets = p.at("total_response_packets");
            s.individual_pair_count = p.at("individual_pair_count");
            s.estimated_object_count = p.at("estimated_object_count");
            s.multiplexing_level = p.at("multiplexing_level");
            s.no_objects = p.at("no_objects");
            s.rtt_used_s = p.at("rtt_used_s");
            s.rtt_source = p.at("rtt_source") == "handshake_measured"
                               ? RttSource::HandshakeMeasured
                               : RttSource::ConfigDefault;
            s.mtu_up = p.at("mtu_up");
            s.mtu_down = p.at("mtu_down");
            s.client_inferred = p.at("client_inferred");
            s.admitted_request_bytes = p.at("admitted_request_bytes");
            s.admitted_response_bytes = p.at("admitted_response_bytes");
            s.dropped_response_bytes = p.at("dropped_response_bytes");
            rec.conn_start_us = s.connection_start_us;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace quiclens
