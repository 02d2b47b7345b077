#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "quiclens/ingest.hpp"
#include "quiclens/output.hpp"
#include "quiclens/synth.hpp"

using namespace quiclens;

namespace {

std::vector<RawDatagram> sample_trace() {
    ScenarioConfig cfg;
    cfg.pattern = TrafficPattern::VideoSequential;
    cfg.n_pairs = 2;
    cfg.seed = 42;
    return generate(cfg).datagrams;
}

std::string analyze_to_jsonl(const std::vector<RawDatagram>& dgrams) {
    AnalyzerConfig cfg;
    Analyzer analyzer(cfg);
    for (const auto& d : dgrams) analyzer.on_datagram(d);
    analyzer.finish();
    std::ostringstream os;
    write_jsonl(os, analyzer.records());
    return os.str();
}

struct TempPath {
    std::string path;
    explicit TempPath(const char* name) : path(std::string("/tmp/quiclens_test_") + name) {}
    ~TempPath() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("qevents round trip preserves every datagram") {
    auto dgrams = sample_trace();
    std::stringstream ss;
    write_qevents(ss, dgrams);
    auto back = read_qevents(ss);
    REQUIRE(back.size() == dgrams.size());
    for (size_t i = 0; i < dgrams.size(); ++i) {
        CHECK(back[i].ts_us == dgrams[i].ts_us);
        CHECK(back[i].ep.src_ip == dgrams[i].ep.src_ip);
        CHECK(back[i].ep.src_port == dgrams[i].ep.src_port);
        CHECK(back[i].payload == dgrams[i].payload);
    }
}

TEST_CASE("pcap round trip preserves timestamps and payloads") {
    auto dgrams = sample_trace();
    TempPath tmp("roundtrip.pcap");
    write_pcap_file(tmp.path, dgrams);
    IngestStats stats;
    auto back = read_pcap_file(tmp.path, &stats);
    REQUIRE(back.size() == dgrams.size());
    CHECK(stats.datagrams == dgrams.size());
    CHECK(stats.skipped_non_udp == 0);
    for (size_t i = 0; i < dgrams.size(); ++i) {
        CHECK(back[i].ts_us == dgrams[i].ts_us);
        CHECK(back[i].payload == dgrams[i].payload);
        CHECK(back[i].ep.dst_port == dgrams[i].ep.dst_port);
    }
}

TEST_CASE("qevents and pcap ingestion produce identical analyzer output") {
    auto dgrams = sample_trace();
    TempPath qe("equiv.qevents"), pc("equiv.pcap");
    {
        std::ofstream f(qe.path);
        write_qevents(f, dgrams);
    }
    write_pcap_file(pc.path, dgrams);

    std::string out_a, out_b;
    for (int i = 0; i < 2; ++i) {
        AnalyzerConfig cfg;
        Analyzer analyzer(cfg);
        run_capture_file(i == 0 ? qe.path : pc.path, analyzer);
        analyzer.finish();
        std::ostringstream os;
        write_jsonl(os, analyzer.records());
        (i == 0 ? out_a : out_b) = os.str();
    }
    CHECK(out_a == out_b);
    CHECK_FALSE(out_a.empty());
}

TEST_CASE("malformed qevents lines raise FormatError") {
    std::stringstream ss("123 c2s 10.0.0.1 50000 203.0.113.10\n");  // missing fields
    CHECK_THROWS_AS(read_qevents(ss), FormatError);
    std::stringstream bad_hex("123 c2s 10.0.0.1 50000 203.0.113.10 443 zz\n");
    CHECK_THROWS_AS(read_qevents(bad_hex), FormatError);
}

TEST_CASE("missing file raises IoError") {
    CHECK_THROWS_AS(read_qevents_file("/nonexistent/path.qevents"), IoError);
    CHECK_THROWS_AS(read_pcap_file("/nonexistent/path.pcap"), IoError);
}

TEST_CASE("analyzer runs are deterministic") {
    auto dgrams = sample_trace();
    CHECK(analyze_to_jsonl(dgrams) == analyze_to_jsonl(dgrams));
}

TEST_CASE("an idle gap reopens the same 5-tuple as a new generation") {
    auto dgrams = sample_trace();
    // Replay the trace a long time later on the same 5-tuple.
    auto shifted = dgrams;
    TsUs last = dgrams.back().ts_us;
    for (auto& d : shifted) d.ts_us += last + 60000000;  // 60 s gap >> 20 RTT
    std::vector<RawDatagram> both = dgrams;
    both.insert(both.end(), shifted.begin(), shifted.end());

    AnalyzerConfig cfg;
    Analyzer analyzer(cfg);
    for (const auto& d : both) analyzer.on_datagram(d);
    analyzer.finish();

    std::vector<uint32_t> summary_generations;
    for (const auto& rec : analyzer.records())
        if (rec.type == OutputRecord::Type::Summary)
            summary_generations.push_back(rec.generation);
    REQUIRE(summary_generations.size() == 2);
    CHECK(summary_generations[0] == 0);
    CHECK(summary_generations[1] == 1);
}

TEST_CASE("non-QUIC datagrams are skipped and counted") {
    RawDatagram d;
    d.ts_us = 1000;
    d.ep = {"10.0.0.1", 50000, "203.0.113.10", 443};
    d.payload = {0x00, 0x01, 0x02};  // fixed bit clear
    AnalyzerConfig cfg;
    Analyzer analyzer(cfg);
    analyzer.on_datagram(d);
    analyzer.finish();
    CHECK(analyzer.records().empty());
    CHECK(analyzer.stats().skipped_non_quic == 1);
}
