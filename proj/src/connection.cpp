#include "quiclens/connection.hpp"

#include <algorithm>

namespace quiclens {

Connection::Connection(const AnalyzerConfig& cfg, ConnectionKey key, uint32_t generation)
    : cfg_(&cfg),
      key_(std::move(key)),
      generation_(generation),
      thresholds_(cfg),
      mtu_(cfg.mtu_init) {
    rtt_.rtt_us = cfg.rtt_default_us();
    rtt_.source = RttSource::ConfigDefault;
}

double Connection::rtt_current_us() const {
    if (handshake_complete_) return rtt_.rtt_us;
    if (rtt_estimator_.has_samples())
        return rtt_estimator_.finalize(cfg_->rtt_default_us()).rtt_us;
    return cfg_->rtt_default_us();
}

RequestMachine::StepContext Connection::req_ctx() const {
    return {rtt_current_us(), cfg_->timing.delta_t_req, mtu_.up, handshake_complete_};
}

ResponseMachine::StepContext Connection::resp_ctx() const {
    return {rtt_current_us(), cfg_->timing.delta_t_resp, mtu_.down, requests_emitted_};
}

Matcher::StepContext Connection::match_ctx() const {
    Matcher::StepContext ctx;
    ctx.rtt_us = rtt_current_us();
    ctx.association_min_rtts = cfg_->timing.association_min_rtts;
    ctx.association_max_rtts = cfg_->timing.association_max_rtts;
    ctx.n_req_cap = cfg_->n_req_cap;
    ctx.ack_window_up = thresholds_.window(Direction::ClientToServer).snapshot();
    ctx.ack_window_down = thresholds_.window(Direction::ServerToClient).snapshot();
    return ctx;
}

void Connection::feed_matcher(std::vector<RequestEstimate>& reqs,
                              std::vector<ResponseEstimate>& resps,
                              std::vector<HttpObjectRecord>& out) {
    // Merge both estimate streams in emission order before handing them to
    // the matcher; ties go to requests.
    size_t i = 0, j = 0;
    while (i < reqs.size() || j < resps.size()) {
        bool take_req = j >= resps.size() ||
                        (i < reqs.size() && reqs[i].emit_ts_us <= resps[j].emit_ts_us);
        if (take_req) {
            request_log_.push_back(reqs[i]);
            ++requests_emitted_;
            admitted_request_bytes_ += reqs[i].size;
            matcher_.on_request(reqs[i++], match_ctx(), out);
        } else {
            response_log_.push_back(resps[j]);
            admitted_response_bytes_ += resps[j].size;
            matcher_.on_response(resps[j++], match_ctx(), out);
        }
    }
    reqs.clear();
    resps.clear();
}

void Connection::account(const std::vector<HttpObjectRecord>& objs) {
    for (const HttpObjectRecord& o : objs) {
        sum_request_size_ += o.request_size;
        sum_response_size_ += o.response_size;
        sum_request_packets_ += o.request_packets;
        sum_response_packets_ += o.response_packets;
        sum_pair_count_ += o.pair_count;
        ++object_count_;
    }
}

std::vector<HttpObjectRecord> Connection::process(const PacketRecord& pkt) {
    std::vector<HttpObjectRecord> objects;
    if (closed_) return objects;

    if (!saw_packet_) {
        saw_packet_ = true;
        first_ts_ = pkt.ts_us;
    }
    last_ts_ = pkt.ts_us;
    if (pkt.direction == Direction::ClientToServer && !first_c2s_ts_)
        first_c2s_ts_ = pkt.ts_us;

    mtu_.update(pkt.direction, pkt.quic_packet_len);

    if (pkt.header_form == HeaderForm::Short && !handshake_complete_) {
        // First short header in either direction: handshake done, RTT frozen.
        handshake_complete_ = true;
        handshake_complete_ts_ = pkt.ts_us;
        rtt_ = rtt_estimator_.finalize(cfg_->rtt_default_us());
    }

    // Time passes for all three machines regardless of packet direction.
    std::vector<RequestEstimate> reqs;
    std::vector<ResponseEstimate> resps;
    req_sm_.advance_time(pkt.ts_us, req_ctx(), reqs);
    resp_sm_.advance_time(pkt.ts_us, resp_ctx(), resps);
    feed_matcher(reqs, resps, objects);
    matcher_.advance_time(pkt.ts_us, match_ctx(), objects);

    ClassifiedPacket cls{pkt.position_index, pkt.direction, PacketClass::Control,
                         thresholds_.window(pkt.direction).full()};

    if (pkt.header_form == HeaderForm::Long) {
        if (!handshake_complete_) rtt_estimator_.on_long_packet(pkt.direction, pkt.ts_us);
        if (pkt.direction == Direction::ServerToClient) req_sm_.note_server_packet();
        cls.cls = PacketClass::HandshakePhase;
        if (pkt.long_packet_type == LongPacketType::ZeroRTT &&
            pkt.direction == Direction::ClientToServer && !handshake_complete_) {
            size_t before = reqs.size();
            req_sm_.on_zero_rtt_packet(pkt, reqs);
            if (reqs.size() > before) {
                thresholds_.note_request_detected();
                cls.cls = PacketClass::Data;
            }
        }
    } else {
        uint32_t threshold = thresholds_.effective_threshold(pkt.direction);
        if (pkt.quic_packet_len < threshold) {
            thresholds_.record_nondata(pkt.direction, pkt.quic_packet_len);
            cls.cls = PacketClass::NonData;
        } else if (pkt.quic_packets_in_datagram > 1) {
            cls.cls = PacketClass::Control;
        } else if (pkt.direction == Direction::ClientToServer) {
            thresholds_.note_request_detected();
            req_sm_.on_data_packet(pkt, req_ctx(), reqs);
            cls.cls = PacketClass::Data;
        } else {
            resp_sm_.on_data_packet(pkt, resp_ctx(), resps);
            cls.cls = PacketClass::Data;
        }
    }

    class_log_.push_back(cls);
    feed_matcher(reqs, resps, objects);
    account(objects);
    return objects;
}

ConnectionSummary Connection::build_summary() const {
    ConnectionSummary s;
    s.key = key_;
    s.generation = generation_;
    s.connection_start_us = first_c2s_ts_.value_or(first_ts_);
    s.first_packet_us = first_ts_;
    s.last_packet_us = last_ts_;
    s.duration_s = us_to_s(last_ts_ - first_ts_);
    s.total_request_size = sum_request_size_;
    s.total_response_size = sum_response_size_;
    s.total_request_packets = sum_request_packets_;
    s.total_response_packets = sum_response_packets_;
    s.individual_pair_count = sum_pair_count_;
    s.estimated_object_count = object_count_;
    s.no_objects = object_count_ == 0;
    s.multiplexing_level =
        object_count_ > 0 ? static_cast<double>(sum_pair_count_) /
                                static_cast<double>(object_count_)
                          : 1.0;
    s.rtt_used_s = rtt_current_us() / 1e6;
    s.rtt_source = handshake_complete_
                       ? rtt_.source
                       : (rtt_estimator_.has_samples() ? RttSource::HandshakeMeasured
                                                       : RttSource::ConfigDefault);
    s.mtu_up = mtu_.up;
    s.mtu_down = mtu_.down;
    s.client_inferred = key_.client_inferred;
    s.admitted_request_bytes = admitted_request_bytes_;
    s.admitted_response_bytes = admitted_response_bytes_;
    s.dropped_response_bytes = resp_sm_.dropped_before_request_bytes();
    return s;
}

std::pair<std::vector<HttpObjectRecord>, std::optional<ConnectionSummary>> Connection::finish() {
    std::vector<HttpObjectRecord> objects;
    if (closed_ || !saw_packet_) {
        closed_ = true;
        return {std::move(objects), std::nullopt};
    }
    std::vector<RequestEstimate> reqs;
    std::vector<ResponseEstimate> resps;
    req_sm_.flush(req_ctx(), reqs);
    resp_sm_.flush(resp_ctx(), resps);
    feed_matcher(reqs, resps, objects);
    matcher_.flush(match_ctx(), objects);
    account(objects);
    ConnectionSummary summary = build_summary();
    closed_ = true;
    return {std::move(objects), summary};
}

std::optional<Connection::IdleResult> Connection::check_idle(TsUs now_us) {
    if (closed_ || !saw_packet_) return std::nullopt;
    double gap = static_cast<double>(now_us - last_ts_);
    if (gap > cfg_->timing.idle_rtts * rtt_current_us()) {
        auto [objects, summary] = finish();
        return IdleResult{std::move(objects), std::move(summary.value())};
    }
    return std::nullopt;
}

std::pair<std::vector<HttpObjectRecord>, ConnectionSummary> Connection::run_offline(
    const AnalyzerConfig& cfg, const ConnectionKey& key,
    const std::vector<PacketRecord>& packets) {
    Connection conn(cfg, key);
    std::vector<HttpObjectRecord> objects;
    for (const PacketRecord& pkt : packets) {
        auto emitted = conn.process(pkt);
        objects.insert(objects.end(), emitted.begin(), emitted.end());
    }
    auto [tail, summary] = conn.finish();
    objects.insert(objects.end(), tail.begin(), tail.end());
    return {std::move(objects), summary.value()};
}

}  // namespace quiclens
