#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "quiclens/core.hpp"
#include "quiclens/matcher.hpp"
#include "quiclens/params.hpp"
#include "quiclens/request_sm.hpp"
#include "quiclens/response_sm.hpp"

namespace quiclens {

struct ConnectionSummary {
    ConnectionKey key;
    uint32_t generation = 0;
    TsUs connection_start_us = 0;  // first client->server packet
    TsUs first_packet_us = 0;
    TsUs last_packet_us = 0;
    double duration_s = 0;
    uint64_t total_request_size = 0;
    uint64_t total_response_size = 0;
    uint64_t total_request_packets = 0;
    uint64_t total_response_packets = 0;
    uint64_t individual_pair_count = 0;
    uint64_t estimated_object_count = 0;
    double multiplexing_level = 1.0;  // 1.0 by convention when no objects
    bool no_objects = true;
    double rtt_used_s = 0;
    RttSource rtt_source = RttSource::ConfigDefault;
    uint32_t mtu_up = 0;
    uint32_t mtu_down = 0;
    bool client_inferred = true;
    // conservation diagnostics
    uint64_t admitted_request_bytes = 0;
    uint64_t admitted_response_bytes = 0;
    uint64_t dropped_response_bytes = 0;
};

// How the analyzer treated one packet; kept per connection so the threshold
// adaptation can be evaluated against labeled traces.
enum class PacketClass : uint8_t { Data, NonData, Control, HandshakePhase };

struct ClassifiedPacket {
    uint64_t position_index = 0;
    Direction direction = Direction::ClientToServer;
    PacketClass cls = PacketClass::Control;
    bool window_warm = false;  // 10-sample window full in this direction at decision time
};

// Per-connection processor: routes packets through the adaptive parameters
// and the three state machines, and produces the connection summary.
class Connection {
public:
    Connection(const AnalyzerConfig& cfg, ConnectionKey key, uint32_t generation = 0);

    // Feed one packet (time order). Returns any completed objects.
    std::vector<HttpObjectRecord> process(const PacketRecord& pkt);

    struct IdleResult {
        std::vector<HttpObjectRecord> objects;
        ConnectionSummary summary;
    };
    // Closes the connection (flushing everything) once the idle timer fires.
    std::optional<IdleResult> check_idle(TsUs now_us);

    // End-of-trace flush; idempotent (a closed connection emits nothing).
    std::pair<std::vector<HttpObjectRecord>, std::optional<ConnectionSummary>> finish();

    bool closed() const { return closed_; }
    bool handshake_complete() const { return handshake_complete_; }
    TsUs handshake_complete_ts() const { return handshake_complete_ts_; }
    TsUs last_packet_ts() const { return last_ts_; }
    TsUs connection_start_us() const { return first_c2s_ts_.value_or(first_ts_); }
    double rtt_current_us() const;
    const ConnectionKey& key() const { return key_; }
    const std::vector<ClassifiedPacket>& classification_log() const { return class_log_; }
    const std::vector<RequestEstimate>& request_estimates() const { return request_log_; }
    const std::vector<ResponseEstimate>& response_estimates() const { return response_log_; }

    // Convenience: run a complete packet list through a fresh pipeline.
    static std::pair<std::vector<HttpObjectRecord>, ConnectionSummary> run_offline(
        const AnalyzerConfig& cfg, const ConnectionKey& key,
        const std::vector<PacketRecord>& packets);

private:
    RequestMachine::StepContext req_ctx() const;
    ResponseMachine::StepContext resp_ctx() const;
    Matcher::StepContext match_ctx() const;
    void feed_matcher(std::vector<RequestEstimate>& reqs, std::vector<ResponseEstimate>& resps,
                      std::vector<HttpObjectRecord>& out);
    void account(const std::vector<HttpObjectRecord>& objs);
    ConnectionSummary build_summary() const;

    const AnalyzerConfig* cfg_;
    ConnectionKey key_;
    uint32_t generation_;

    AdaptiveThresholds thresholds_;
    MtuEstimate mtu_;
    RttEstimator rtt_estimator_;
    RttEstimate rtt_;
    bool handshake_complete_ = false;
    TsUs handshake_complete_ts_ = 0;

    RequestMachine req_sm_;
    ResponseMachine resp_sm_;
    Matcher matcher_;
    uint64_t requests_emitted_ = 0;

    bool saw_packet_ = false;
    TsUs first_ts_ = 0;
    TsUs last_ts_ = 0;
    std::optional<TsUs> first_c2s_ts_;
    bool closed_ = false;

    // running totals over emitted objects
    uint64_t sum_request_size_ = 0, sum_response_size_ = 0;
    uint64_t sum_request_packets_ = 0, sum_response_packets_ = 0;
    uint64_t sum_pair_count_ = 0, object_count_ = 0;
    uint64_t admitted_request_bytes_ = 0, admitted_response_bytes_ = 0;

    std::vector<ClassifiedPacket> class_log_;
    std::vector<RequestEstimate> request_log_;
    std::vector<ResponseEstimate> response_log_;
};

}  // namespace quiclens
