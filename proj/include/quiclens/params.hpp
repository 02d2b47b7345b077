#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "quiclens/core.hpp"

namespace quiclens {

// Ring of the last ten non-data packet lengths in one direction.
class AckLengthWindow {
public:
    static constexpr size_t kCapacity = 10;

    void push(uint32_t len) {
        if (count_ < kCapacity) {
            buf_[count_++] = len;
        } else {
            buf_[next_] = len;
            next_ = (next_ + 1) % kCapacity;
        }
    }
    bool full() const { return count_ == kCapacity; }
    size_t size() const { return count_; }
    uint32_t current_max() const {
        uint32_t m = 0;
        for (size_t i = 0; i < count_; ++i) m = std::max(m, buf_[i]);
        return m;
    }
    std::vector<uint32_t> snapshot() const;  // oldest first

private:
    std::array<uint32_t, kCapacity> buf_{};
    size_t count_ = 0;
    size_t next_ = 0;  // overwrite position once full
};

// Per-connection data-length thresholds L_req / L_resp with the
// max-of-last-ten-ACKs-plus-ten update rule and floor values.
class AdaptiveThresholds {
public:
    explicit AdaptiveThresholds(const AnalyzerConfig& cfg) : cfg_(&cfg) {}

    void record_nondata(Direction dir, uint32_t len) {
        AckLengthWindow& w = window(dir);
        w.push(len);
        if (w.full()) {
            uint32_t v = w.current_max() + 10;
            if (dir == Direction::ClientToServer)
                window_l_req_ = v;
            else
                window_l_resp_ = v;
        }
    }

    void note_request_detected() { first_request_seen_ = true; }
    bool first_request_seen() const { return first_request_seen_; }

    uint32_t effective_l_req() const {
        uint32_t floor = first_request_seen_ ? cfg_->l_req_floor : cfg_->l_req_init;
        return std::max(floor, window_l_req_);
    }
    uint32_t effective_l_resp() const {
        return std::max(cfg_->l_resp_floor, window_l_resp_);
    }
    uint32_t effective_threshold(Direction dir) const {
        return dir == Direction::ClientToServer ? effective_l_req() : effective_l_resp();
    }

    const AckLengthWindow& window(Direction dir) const {
        return dir == Direction::ClientToServer ? up_ : down_;
    }
    AckLengthWindow& window(Direction dir) {
        return dir == Direction::ClientToServer ? up_ : down_;
    }

private:
    const AnalyzerConfig* cfg_;
    AckLengthWindow up_;
    AckLengthWindow down_;
    uint32_t window_l_req_ = 0;   // 0 until the window is full
    uint32_t window_l_resp_ = 0;
    bool first_request_seen_ = false;
};

// Per-direction max-observed packet length, floored at the 1200-byte init.
struct MtuEstimate {
    uint32_t up;
    uint32_t down;

    explicit MtuEstimate(uint32_t init = 1200) : up(init), down(init) {}

    void update(Direction dir, uint32_t quic_packet_len) {
        uint32_t& v = dir == Direction::ClientToServer ? up : down;
        v = std::max(v, quic_packet_len);
    }
    uint32_t in_direction(Direction dir) const {
        return dir == Direction::ClientToServer ? up : down;
    }
};

enum class RttSource : uint8_t { HandshakeMeasured, ConfigDefault };

struct RttEstimate {
    double rtt_us = 0;
    RttSource source = RttSource::ConfigDefault;
    std::vector<TsUs> samples_us;
};

// Pairs each client->server long-header flight start with the first
// subsequent server->client long-header packet; the mean gap is the RTT.
class RttEstimator {
public:
    void on_long_packet(Direction dir, TsUs ts_us) {
        if (dir == Direction::ClientToServer) {
            if (last_long_dir_ != Direction::ClientToServer) pending_flight_start_ = ts_us;
        } else {
            if (pending_flight_start_) {
                samples_.push_back(ts_us - *pending_flight_start_);
                pending_flight_start_.reset();
            }
        }
        last_long_dir_ = dir;
    }

    RttEstimate finalize(double default_rtt_us) const {
        RttEstimate est;
        if (samples_.empty()) {
            est.rtt_us = default_rtt_us;
            est.source = RttSource::ConfigDefault;
            return est;
        }
        double sum = 0;
        for (TsUs s : samples_) sum += static_cast<double>(s);
        est.rtt_us = sum / static_cast<double>(samples_.size());
        est.source = RttSource::HandshakeMeasured;
        est.samples_us = samples_;
        return est;
    }

    bool has_samples() const { return !samples_.empty(); }

private:
    std::vector<TsUs> samples_;
    std::optional<TsUs> pending_flight_start_;
    std::optional<Direction> last_long_dir_;
};

}  // namespace quiclens
