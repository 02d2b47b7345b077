#pragma once

#include <cstdint>
#include <vector>

#include "quiclens/core.hpp"

namespace quiclens {

struct RequestEstimate {
    TsUs start_ts_us = 0;   // first member packet
    TsUs emit_ts_us = 0;    // event that completed the estimate
    uint64_t size = 0;      // sum of member quic_packet_len
    uint32_t packet_count = 0;
    bool is_zero_rtt = false;
};

// 0-RTT request detection criteria: single QUIC packet in the datagram,
// length in [100, 1000], and no 0-RTT data packet accepted yet in the same
// client flight.
bool detect_zero_rtt_request(const PacketRecord& pkt, bool zero_rtt_accepted_in_flight);

// Request-estimation state machine. Consumes client->server packets already
// admitted by the length threshold (single QUIC packet per datagram,
// quic_packet_len >= L_req); emits grouped request estimates.
class RequestMachine {
public:
    enum class State : uint8_t { Initial, Idle, Waiting, Transmitting };

    struct StepContext {
        double rtt_us = 0;
        double delta_t_req = 1.0;
        uint32_t l_mtu_up = 1200;
        bool handshake_complete = false;
    };

    // Fires any pending one-RTT timeout older than `now_us`. Call for every
    // event that moves time forward, regardless of direction.
    void advance_time(TsUs now_us, const StepContext& ctx, std::vector<RequestEstimate>& out);

    // Admitted data packet (short header after handshake).
    void on_data_packet(const PacketRecord& pkt, const StepContext& ctx,
                        std::vector<RequestEstimate>& out);

    // Client 0-RTT long-header packet seen pre-handshake.
    void on_zero_rtt_packet(const PacketRecord& pkt, std::vector<RequestEstimate>& out);

    // A server->client packet ends the current client flight.
    void note_server_packet() { zero_rtt_accepted_in_flight_ = false; }

    // End-of-trace / idle close: emit whatever is pending.
    void flush(const StepContext& ctx, std::vector<RequestEstimate>& out);

    State state() const { return state_; }

private:
    struct Member {
        TsUs ts_us;
        uint32_t len;
    };

    void append(const PacketRecord& pkt);
    RequestEstimate emit_pending(TsUs emit_ts);
    bool is_large(uint32_t len, const StepContext& ctx) const {
        return len > ctx.l_mtu_up - 8;
    }

    State state_ = State::Initial;
    std::vector<Member> pending_;
    TsUs last_packet_ts_ = 0;
    bool zero_rtt_accepted_in_flight_ = false;
};

}  // namespace quiclens
