#include "quiclens/request_sm.hpp"

namespace quiclens {

bool detect_zero_rtt_request(const PacketRecord& pkt, bool zero_rtt_accepted_in_flight) {
    if (pkt.header_form != HeaderForm::Long ||
        pkt.long_packet_type != LongPacketType::ZeroRTT ||
        pkt.direction != Direction::ClientToServer)
        return false;
    if (pkt.quic_packets_in_datagram != 1) return false;
    if (pkt.quic_packet_len < 100 || pkt.quic_packet_len > 1000) return false;
    if (zero_rtt_accepted_in_flight) return false;
    return true;
}

void RequestMachine::append(const PacketRecord& pkt) {
    pending_.push_back({pkt.ts_us, pkt.quic_packet_len});
    last_packet_ts_ = pkt.ts_us;
}

RequestEstimate RequestMachine::emit_pending(TsUs emit_ts) {
    RequestEstimate est;
    est.start_ts_us = pending_.front().ts_us;
    est.emit_ts_us = emit_ts;
    for (const Member& m : pending_) {
        est.size += m.len;
        ++est.packet_count;
    }
    pending_.clear();
    return est;
}

void RequestMachine::advance_time(TsUs now_us, const StepContext& ctx,
                                  std::vector<RequestEstimate>& out) {
    // Only the waiting state has a timeout (single-packet request decision).
    if (state_ != State::Waiting) return;
    double deadline = static_cast<double>(last_packet_ts_) + ctx.delta_t_req * ctx.rtt_us;
    if (static_cast<double>(now_us) > deadline) {
        out.push_back(emit_pending(static_cast<TsUs>(deadline)));
        state_ = State::Idle;
    }
}

void RequestMachine::on_zero_rtt_packet(const PacketRecord& pkt,
                                        std::vector<RequestEstimate>& out) {
    if (state_ != State::Initial) return;
    if (!detect_zero_rtt_request(pkt, zero_rtt_accepted_in_flight_)) return;
    // Pass through the output state and return; the machine stays available
    // for further 0-RTT requests in later flights.
    RequestEstimate est;
    est.start_ts_us = pkt.ts_us;
    est.emit_ts_us = pkt.ts_us;
    est.size = pkt.quic_packet_len;
    est.packet_count = 1;
    est.is_zero_rtt = true;
    out.push_back(est);
    zero_rtt_accepted_in_flight_ = true;
}

void RequestMachine::on_data_packet(const PacketRecord& pkt, const StepContext& ctx,
                                    std::vector<RequestEstimate>& out) {
    advance_time(pkt.ts_us, ctx, out);

    bool large = is_large(pkt.quic_packet_len, ctx);
    switch (state_) {
        case State::Initial:
            if (!ctx.handshake_complete) return;  // pre-handshake short data: not expected
            state_ = State::Idle;
            [[fallthrough]];
        case State::Idle:
            append(pkt);
            if (large) {
                state_ = State::Waiting;
            } else {
                out.push_back(emit_pending(pkt.ts_us));
                state_ = State::Idle;
            }
            break;
        case State::Waiting:
            append(pkt);
            if (large) {
                state_ = State::Transmitting;
            } else {
                out.push_back(emit_pending(pkt.ts_us));
                state_ = State::Idle;
            }
            break;
        case State::Transmitting:
            append(pkt);
            if (!large) {
                out.push_back(emit_pending(pkt.ts_us));
                state_ = State::Idle;
            }
            break;
    }
}

void RequestMachine::flush(const StepContext& ctx, std::vector<RequestEstimate>& out) {
    if (!pending_.empty()) {
        TsUs emit_ts = static_cast<TsUs>(static_cast<double>(last_packet_ts_) +
                                         ctx.delta_t_req * ctx.rtt_us);
        out.push_back(emit_pending(emit_ts));
    }
    state_ = ctx.handshake_complete ? State::Idle : State::Initial;
}

}  // namespace quiclens
