#pragma once

#include <cstdint>
#include <vector>

#include "quiclens/core.hpp"
#include "quiclens/request_sm.hpp"
#include "quiclens/response_sm.hpp"

namespace quiclens {

enum class AssociationFlag : uint8_t { None, Valid, SuspectTiming };

const char* to_string(AssociationFlag f);

// The request/response gap must sit strictly inside the
// (min_rtts*rtt, max_rtts*rtt) window to look like a plausible pair.
AssociationFlag validate_association(TsUs req_start_us, TsUs resp_start_us, double rtt_us,
                                     double min_rtts, double max_rtts);

// One estimated (possibly super) HTTP request-response object.
struct HttpObjectRecord {
    TsUs request_start_us = 0;
    uint64_t request_size = 0;
    uint32_t request_packets = 0;
    bool has_response = false;
    TsUs response_start_us = 0;
    TsUs response_end_us = 0;
    uint64_t response_size = 0;
    uint32_t response_packets = 0;
    uint32_t pair_count = 0;  // individual HTTP pairs grouped in this object
    bool is_super = false;
    bool has_zero_rtt_request = false;
    AssociationFlag association = AssociationFlag::None;
    std::vector<uint32_t> ack_window_up;    // snapshot at emission, oldest first
    std::vector<uint32_t> ack_window_down;
    TsUs emit_ts_us = 0;
};

// Match state machine: pairs request estimates with response estimates;
// interleaved groups come out as super objects.
class Matcher {
public:
    enum class State : uint8_t { Initial, Idle, WaitingForResponse, WaitingToOutput };

    struct StepContext {
        double rtt_us = 0;
        double association_min_rtts = 1.0;
        double association_max_rtts = 20.0;
        uint32_t n_req_cap = 64;
        std::vector<uint32_t> ack_window_up;
        std::vector<uint32_t> ack_window_down;
    };

    void on_request(const RequestEstimate& req, const StepContext& ctx,
                    std::vector<HttpObjectRecord>& out);
    void on_response(const ResponseEstimate& resp, const StepContext& ctx,
                     std::vector<HttpObjectRecord>& out);
    void advance_time(TsUs now_us, const StepContext& ctx, std::vector<HttpObjectRecord>& out);
    void flush(const StepContext& ctx, std::vector<HttpObjectRecord>& out);

    State state() const { return state_; }
    uint64_t requests_consumed() const { return requests_consumed_; }
    uint64_t discarded_responses() const { return discarded_responses_; }

private:
    void emit_object(TsUs emit_ts, const StepContext& ctx, std::vector<HttpObjectRecord>& out);
    void seed_from_held(TsUs ts);

    State state_ = State::Initial;
    std::vector<RequestEstimate> open_requests_;
    std::vector<ResponseEstimate> open_responses_;
    std::vector<RequestEstimate> held_requests_;  // arrivals during WaitingToOutput
    TsUs last_event_ts_ = 0;   // any event, drives the 20-RTT group timeout
    TsUs output_wait_base_ = 0;  // entering WaitingToOutput or last response
    uint64_t requests_consumed_ = 0;
    uint64_t discarded_responses_ = 0;
};

}  // namespace quiclens
