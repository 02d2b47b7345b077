#pragma once

#include <stdexcept>
#include <vector>

#include "quiclens/ingest.hpp"
#include "quiclens/synth.hpp"

namespace quiclens {

struct LabelMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConnectionScore {
    ConnectionKey key;
    uint64_t true_pairs = 0;
    uint64_t correct_pairs = 0;
    uint64_t estimated_objects = 0;
    uint64_t spurious_objects = 0;  // objects with no true pair assigned
    double match_accuracy = 1.0;
    double request_size_accuracy = 1.0;
    double response_size_accuracy = 1.0;
    double request_start_error_s = 0;
    double response_start_error_s = 0;
    double response_end_error_s = 0;
    double rtt_s = 0;  // ground-truth RTT, for RTT-multiple reporting
};

struct EvalReport {
    std::vector<ConnectionScore> connections;
    // corpus aggregates: accuracies over all pairs, time errors over all
    // objects that received at least one pair
    double match_accuracy = 1.0;
    double request_size_accuracy = 1.0;
    double response_size_accuracy = 1.0;
    double request_start_error_s = 0;
    double response_start_error_s = 0;
    double response_end_error_s = 0;
    double request_start_error_rtt = 0;
    double response_start_error_rtt = 0;
    double response_end_error_rtt = 0;
    uint64_t total_pairs = 0;
    uint64_t total_objects = 0;
    uint64_t spurious_objects = 0;
};

// Aligns true pairs to estimated objects greedily by start time: a pair's
// request goes to the last object whose request_start is not after it, its
// response to the last object whose response_start is not after it; the pair
// is correctly grouped when both land in the same object.
EvalReport score(const std::vector<OutputRecord>& records,
                 const std::vector<GroundTruth>& truths);

void write_report_json(std::ostream& out, const EvalReport& report);
void print_report(std::ostream& out, const EvalReport& report);

}  // namespace quiclens
