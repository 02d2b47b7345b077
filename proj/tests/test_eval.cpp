#include <doctest.h>

#include "quiclens/eval.hpp"

using namespace quiclens;

namespace {

ConnectionKey key() {
    ConnectionKey k;
    k.client_ip = "10.0.0.1";
    k.client_port = 50000;
    k.server_ip = "203.0.113.10";
    k.server_port = 443;
    return k;
}

GroundTruth truth_with(std::vector<TruePair> pairs) {
    GroundTruth t;
    t.config.rtt_s = 0.1;
    t.pairs = std::move(pairs);
    return t;
}

TruePair pair(uint32_t id, TsUs req_start, uint64_t req_size, TsUs resp_start, TsUs resp_end,
              uint64_t resp_size) {
    TruePair p;
    p.pair_id = id;
    p.request_start_us = req_start;
    p.request_size = req_size;
    p.response_start_us = resp_start;
    p.response_end_us = resp_end;
    p.response_size = resp_size;
    return p;
}

OutputRecord object(TsUs req_start, uint64_t req_size, TsUs resp_start, TsUs resp_end,
                    uint64_t resp_size, uint32_t pair_count = 1) {
    OutputRecord rec;
    rec.type = OutputRecord::Type::Object;
    rec.key = key();
    rec.object.request_start_us = req_start;
    rec.object.request_size = req_size;
    rec.object.has_response = true;
    rec.object.response_start_us = resp_start;
    rec.object.response_end_us = resp_end;
    rec.object.response_size = resp_size;
    rec.object.pair_count = pair_count;
    rec.object.is_super = pair_count > 1;
    return rec;
}

OutputRecord summary() {
    OutputRecord rec;
    rec.type = OutputRecord::Type::Summary;
    rec.key = key();
    return rec;
}

}  // namespace

TEST_CASE("perfect reconstruction scores 1.0 everywhere") {
    GroundTruth t = truth_with({pair(0, 1000, 400, 151000, 200000, 5000),
                                pair(1, 500000, 420, 651000, 700000, 6000)});
    std::vector<OutputRecord> recs{object(1000, 400, 151000, 200000, 5000),
                                   object(500000, 420, 651000, 700000, 6000), summary()};
    EvalReport r = score(recs, {t});
    CHECK(r.match_accuracy == doctest::Approx(1.0));
    CHECK(r.request_size_accuracy == doctest::Approx(1.0));
    CHECK(r.response_size_accuracy == doctest::Approx(1.0));
    CHECK(r.request_start_error_s == doctest::Approx(0.0));
    CHECK(r.response_start_error_s == doctest::Approx(0.0));
    CHECK(r.response_end_error_s == doctest::Approx(0.0));
    CHECK(r.spurious_objects == 0);
    CHECK(r.total_pairs == 2);
}

TEST_CASE("one of four pairs crossing object boundaries scores 0.75") {
    // Truth: four pairs, requests at t=1..4, responses at t=11..14 (ms scale).
    GroundTruth t = truth_with({pair(0, 1000, 100, 11000, 11500, 1000),
                                pair(1, 2000, 100, 12000, 12500, 1000),
                                pair(2, 3000, 100, 13000, 13500, 1000),
                                pair(3, 4000, 100, 14000, 14500, 1000)});
    // Estimate: object A covers requests 1-2 but only response 1; object B
    // starts at request 3 but its response span begins at response 2. Pair 1
    // maps (A, A); pairs 3 and 4 map (B, B); pair 2 maps (A, B): wrong.
    std::vector<OutputRecord> recs{object(1000, 200, 11000, 11500, 1000, 2),
                                   object(3000, 200, 12000, 14500, 3000, 2), summary()};
    EvalReport r = score(recs, {t});
    CHECK(r.match_accuracy == doctest::Approx(0.75));
}

TEST_CASE("a missing 600-byte tail of a 6000-byte response scores 0.9") {
    GroundTruth t = truth_with({pair(0, 1000, 400, 151000, 200000, 6000)});
    std::vector<OutputRecord> recs{object(1000, 400, 151000, 195000, 5400), summary()};
    EvalReport r = score(recs, {t});
    CHECK(r.response_size_accuracy == doctest::Approx(0.9));
    CHECK(r.match_accuracy == doctest::Approx(1.0));
    // End-time error is reported in both seconds and RTT multiples.
    CHECK(r.response_end_error_s == doctest::Approx(0.005));
    CHECK(r.response_end_error_rtt == doctest::Approx(0.05));
}

TEST_CASE("objects no true pair maps to are counted as spurious") {
    GroundTruth t = truth_with({pair(0, 10000, 400, 151000, 200000, 5000)});
    std::vector<OutputRecord> recs{object(10000, 400, 151000, 200000, 5000),
                                   object(900000, 50, 950000, 960000, 100), summary()};
    EvalReport r = score(recs, {t});
    CHECK(r.spurious_objects == 1);
    CHECK(r.match_accuracy == doctest::Approx(1.0));
}

TEST_CASE("score is independent of connection order") {
    GroundTruth t1 = truth_with({pair(0, 1000, 400, 151000, 200000, 5000)});
    GroundTruth t2 = truth_with({pair(0, 1000, 300, 151000, 200000, 4000)});
    t2.config.client_port = 50001;
    OutputRecord o1 = object(1000, 400, 151000, 200000, 5000);
    OutputRecord o2 = object(1000, 300, 151000, 200000, 4000);
    o2.key.client_port = 50001;
    OutputRecord s1 = summary(), s2 = summary();
    s2.key.client_port = 50001;

    EvalReport a = score({o1, s1, o2, s2}, {t1, t2});
    EvalReport b = score({o2, s2, o1, s1}, {t2, t1});
    CHECK(a.match_accuracy == b.match_accuracy);
    CHECK(a.total_pairs == b.total_pairs);
    CHECK(a.request_size_accuracy == doctest::Approx(b.request_size_accuracy));
}

TEST_CASE("labels without matching records are a hard error") {
    GroundTruth t = truth_with({pair(0, 1000, 400, 151000, 200000, 5000)});
    GroundTruth other = truth_with({});
    other.config.client_ip = "10.9.9.9";
    std::vector<OutputRecord> recs{object(1000, 400, 151000, 200000, 5000), summary()};
    CHECK_THROWS_AS(score(recs, {t, other}), LabelMismatch);
    CHECK_THROWS_AS(score(recs, {}), LabelMismatch);
    CHECK_THROWS_AS(score(recs, {t, t}), LabelMismatch);  // duplicate connection
}
