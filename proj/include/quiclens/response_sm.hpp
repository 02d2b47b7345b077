#pragma once

#include <cstdint>
#include <vector>

#include "quiclens/core.hpp"

namespace quiclens {

struct ResponseEstimate {
    TsUs start_ts_us = 0;  // first member packet
    TsUs end_ts_us = 0;    // last member packet
    TsUs emit_ts_us = 0;
    uint64_t size = 0;
    uint32_t packet_count = 0;
};

// Response-estimation state machine. Consumes server->client packets already
// admitted by the length threshold; groups them into response estimates using
// the MTU-sized-run-with-small-tail pattern.
class ResponseMachine {
public:
    enum class State : uint8_t { Initial, Idle, WaitToStart, Transmitting, WaitToEnd };

    struct StepContext {
        double rtt_us = 0;
        double delta_t_resp = 1.0;
        uint32_t l_mtu_down = 1200;
        uint64_t requests_seen = 0;  // request estimates emitted so far
    };

    void advance_time(TsUs now_us, const StepContext& ctx, std::vector<ResponseEstimate>& out);
    void on_data_packet(const PacketRecord& pkt, const StepContext& ctx,
                        std::vector<ResponseEstimate>& out);
    void flush(const StepContext& ctx, std::vector<ResponseEstimate>& out);

    State state() const { return state_; }
    // Response data discarded because no request had been detected yet.
    uint64_t dropped_before_request_bytes() const { return dropped_bytes_; }
    uint32_t dropped_before_request_packets() const { return dropped_packets_; }

private:
    struct Member {
        TsUs ts_us;
        uint32_t len;
    };

    void append(const PacketRecord& pkt);
    ResponseEstimate emit_pending(TsUs emit_ts);
    bool is_large(uint32_t len, const StepContext& ctx) const {
        return len > ctx.l_mtu_down - 8;
    }

    State state_ = State::Initial;
    std::vector<Member> pending_;
    TsUs last_packet_ts_ = 0;
    uint64_t dropped_bytes_ = 0;
    uint32_t dropped_packets_ = 0;
};

}  // namespace quiclens
