#include "quiclens/matcher.hpp"

#include <algorithm>

namespace quiclens {

const char* to_string(AssociationFlag f) {
    switch (f) {
        case AssociationFlag::None: return "none";
        case AssociationFlag::Valid: return "valid";
        case AssociationFlag::SuspectTiming: return "suspect_timing";
    }
    return "?";
}

AssociationFlag validate_association(TsUs req_start_us, TsUs resp_start_us, double rtt_us,
                                     double min_rtts, double max_rtts) {
    double gap = static_cast<double>(resp_start_us - req_start_us);
    if (gap > min_rtts * rtt_us && gap < max_rtts * rtt_us) return AssociationFlag::Valid;
    return AssociationFlag::SuspectTiming;
}

void Matcher::emit_object(TsUs emit_ts, const StepContext& ctx,
                          std::vector<HttpObjectRecord>& out) {
    HttpObjectRecord obj;
    obj.emit_ts_us = emit_ts;
    obj.request_start_us = open_requests_.front().start_ts_us;
    for (const RequestEstimate& r : open_requests_) {
        obj.request_size += r.size;
        obj.request_packets += r.packet_count;
        obj.has_zero_rtt_request = obj.has_zero_rtt_request || r.is_zero_rtt;
    }
    obj.pair_count = static_cast<uint32_t>(open_requests_.size());
    obj.is_super = obj.pair_count > 1;
    if (!open_responses_.empty()) {
        obj.has_response = true;
        obj.response_start_us = open_responses_.front().start_ts_us;
        obj.response_end_us = open_responses_.front().end_ts_us;
        for (const ResponseEstimate& r : open_responses_) {
            obj.response_size += r.size;
            obj.response_packets += r.packet_count;
            obj.response_end_us = std::max(obj.response_end_us, r.end_ts_us);
        }
        obj.association = validate_association(obj.request_start_us, obj.response_start_us,
                                               ctx.rtt_us, ctx.association_min_rtts,
                                               ctx.association_max_rtts);
    }
    obj.ack_window_up = ctx.ack_window_up;
    obj.ack_window_down = ctx.ack_window_down;
    open_requests_.clear();
    open_responses_.clear();
    out.push_back(std::move(obj));
}

void Matcher::seed_from_held(TsUs ts) {
    open_requests_ = std::move(held_requests_);
    held_requests_.clear();
    state_ = State::WaitingForResponse;
    last_event_ts_ = ts;
}

void Matcher::advance_time(TsUs now_us, const StepContext& ctx,
                           std::vector<HttpObjectRecord>& out) {
    // Several deadlines may have elapsed since the last event; resolve them
    // in order until none fires.
    for (;;) {
        if (state_ == State::WaitingForResponse) {
            double deadline = static_cast<double>(last_event_ts_) +
                              ctx.association_max_rtts * ctx.rtt_us;
            if (static_cast<double>(now_us) > deadline) {
                emit_object(static_cast<TsUs>(deadline), ctx, out);
                state_ = State::Idle;
                continue;
            }
        } else if (state_ == State::WaitingToOutput) {
            double deadline = static_cast<double>(output_wait_base_) + ctx.rtt_us;
            if (static_cast<double>(now_us) > deadline) {
                TsUs t = static_cast<TsUs>(deadline);
                emit_object(t, ctx, out);
                if (!held_requests_.empty())
                    seed_from_held(t);
                else
                    state_ = State::Idle;
                continue;
            }
        }
        break;
    }
}

void Matcher::on_request(const RequestEstimate& req, const StepContext& ctx,
                         std::vector<HttpObjectRecord>& out) {
    advance_time(req.emit_ts_us, ctx, out);
    ++requests_consumed_;
    switch (state_) {
        case State::Initial:
        case State::Idle:
            open_requests_.push_back(req);
            state_ = State::WaitingForResponse;
            last_event_ts_ = req.emit_ts_us;
            break;
        case State::WaitingForResponse:
            if (open_requests_.size() + 1 > ctx.n_req_cap) {
                // The super-object cap is reached: close the current group first.
                emit_object(req.emit_ts_us, ctx, out);
            }
            open_requests_.push_back(req);
            last_event_ts_ = req.emit_ts_us;
            break;
        case State::WaitingToOutput:
            // Held until the output timeout; seeds the next object.
            held_requests_.push_back(req);
            break;
    }
}

void Matcher::on_response(const ResponseEstimate& resp, const StepContext& ctx,
                          std::vector<HttpObjectRecord>& out) {
    advance_time(resp.emit_ts_us, ctx, out);
    switch (state_) {
        case State::Initial:
        case State::Idle:
            ++discarded_responses_;
            break;
        case State::WaitingForResponse:
            open_responses_.push_back(resp);
            last_event_ts_ = resp.emit_ts_us;
            if (open_responses_.size() >= open_requests_.size()) {
                state_ = State::WaitingToOutput;
                output_wait_base_ = resp.emit_ts_us;
            }
            break;
        case State::WaitingToOutput:
            open_responses_.push_back(resp);
            output_wait_base_ = resp.emit_ts_us;
            break;
    }
}

void Matcher::flush(const StepContext& ctx, std::vector<HttpObjectRecord>& out) {
    if (state_ == State::WaitingForResponse) {
        TsUs t = static_cast<TsUs>(static_cast<double>(last_event_ts_) +
                                   ctx.association_max_rtts * ctx.rtt_us);
        emit_object(t, ctx, out);
    } else if (state_ == State::WaitingToOutput) {
        TsUs t = static_cast<TsUs>(static_cast<double>(output_wait_base_) + ctx.rtt_us);
        emit_object(t, ctx, out);
        if (!held_requests_.empty()) {
            open_requests_ = std::move(held_requests_);
            held_requests_.clear();
            TsUs t2 = static_cast<TsUs>(static_cast<double>(t) +
                                        ctx.association_max_rtts * ctx.rtt_us);
            emit_object(t2, ctx, out);
        }
    }
    state_ = State::Idle;
}

}  // namespace quiclens
