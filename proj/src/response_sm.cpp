#include "quiclens/response_sm.hpp"

namespace quiclens {

void ResponseMachine::append(const PacketRecord& pkt) {
    pending_.push_back({pkt.ts_us, pkt.quic_packet_len});
    last_packet_ts_ = pkt.ts_us;
}

ResponseEstimate ResponseMachine::emit_pending(TsUs emit_ts) {
    ResponseEstimate est;
    est.start_ts_us = pending_.front().ts_us;
    est.end_ts_us = pending_.back().ts_us;
    est.emit_ts_us = emit_ts;
    for (const Member& m : pending_) {
        est.size += m.len;
        ++est.packet_count;
    }
    pending_.clear();
    return est;
}

void ResponseMachine::advance_time(TsUs now_us, const StepContext& ctx,
                                   std::vector<ResponseEstimate>& out) {
    if (state_ != State::WaitToStart && state_ != State::WaitToEnd) return;
    double deadline = static_cast<double>(last_packet_ts_) + ctx.delta_t_resp * ctx.rtt_us;
    if (static_cast<double>(now_us) > deadline) {
        out.push_back(emit_pending(static_cast<TsUs>(deadline)));
        state_ = State::Idle;
    }
}

void ResponseMachine::on_data_packet(const PacketRecord& pkt, const StepContext& ctx,
                                     std::vector<ResponseEstimate>& out) {
    advance_time(pkt.ts_us, ctx, out);

    bool large = is_large(pkt.quic_packet_len, ctx);
    switch (state_) {
        case State::Initial:
            if (ctx.requests_seen == 0) {
                // Before any request is detected, response packets are discarded.
                dropped_bytes_ += pkt.quic_packet_len;
                ++dropped_packets_;
                return;
            }
            state_ = State::Idle;
            [[fallthrough]];
        case State::Idle:
            append(pkt);
            state_ = large ? State::Transmitting : State::WaitToStart;
            break;
        case State::WaitToStart:
            // Some servers open a multi-packet response with several non-MTU
            // packets; keep accumulating them as the response head.
            append(pkt);
            if (large) state_ = State::Transmitting;
            break;
        case State::Transmitting:
            append(pkt);
            if (!large) state_ = State::WaitToEnd;
            break;
        case State::WaitToEnd:
            if (large) {
                // The previous response is done; this packet opens a new one.
                out.push_back(emit_pending(pkt.ts_us));
                append(pkt);
                state_ = State::Transmitting;
            } else {
                append(pkt);  // retransmission tail
            }
            break;
    }
}

void ResponseMachine::flush(const StepContext& ctx, std::vector<ResponseEstimate>& out) {
    if (!pending_.empty()) {
        TsUs emit_ts = static_cast<TsUs>(static_cast<double>(last_packet_ts_) +
                                         ctx.delta_t_resp * ctx.rtt_us);
        out.push_back(emit_pending(emit_ts));
    }
    state_ = ctx.requests_seen > 0 ? State::Idle : State::Initial;
}

}  // namespace quiclens
