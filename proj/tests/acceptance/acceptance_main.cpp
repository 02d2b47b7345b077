// Acceptance gate for the analyzer. Each criterion prints one line:
//   [PASS] <name>        or        [FAIL] <name>: <detail>
// The process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "quiclens/eval.hpp"
#include "quiclens/header_parse.hpp"
#include "quiclens/ingest.hpp"
#include "quiclens/output.hpp"
#include "quiclens/synth.hpp"

using namespace quiclens;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
};

template <typename T>
std::string str(const T& v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Corpus shared by several criteria: >= 200 connections over all six traffic
// patterns, fixed seeds, zero loss, no response multiplexing.
// ---------------------------------------------------------------------------

std::vector<ScenarioConfig> corpus_configs() {
    const TrafficPattern patterns[] = {
        TrafficPattern::VideoSequential, TrafficPattern::WebMultiplexed,
        TrafficPattern::Login,           TrafficPattern::BulkDownload,
        TrafficPattern::BulkUpload,      TrafficPattern::ZeroRttResume,
    };
    const double rtts[] = {0.02, 0.05, 0.1, 0.2, 0.6};
    const uint32_t mtus[] = {1200, 1252, 1350};
    std::vector<ScenarioConfig> configs;
    for (uint32_t i = 0; i < 204; ++i) {
        ScenarioConfig cfg;
        cfg.pattern = patterns[i % 6];
        cfg.rtt_s = rtts[i % 5];
        cfg.mtu_up = mtus[i % 3];
        cfg.mtu_down = mtus[(i + 1) % 3];
        // "No multiplexing": the web pattern runs a single pair.
        cfg.n_pairs = cfg.pattern == TrafficPattern::WebMultiplexed ? 1 : 1 + i % 4;
        cfg.loss_rate = 0.0;
        cfg.ack_every = 1 + i % 3;
        cfg.handshake_rounds = 1 + i % 2;
        cfg.seed = 1000 + i;
        cfg.client_port = static_cast<uint16_t>(40000 + i);
        configs.push_back(cfg);
    }
    return configs;
}

struct CorpusRun {
    std::vector<SyntheticTrace> traces;  // one per connection
    std::vector<GroundTruth> truths;
    Analyzer analyzer;

    explicit CorpusRun(const std::vector<ScenarioConfig>& configs, const AnalyzerConfig& acfg)
        : analyzer(acfg, /*collect_records=*/true) {
        for (const auto& cfg : configs) {
            traces.push_back(generate(cfg));
            truths.push_back(traces.back().truth);
            for (const auto& d : traces.back().datagrams) analyzer.on_datagram(d);
        }
        analyzer.finish();
    }
};

const AnalyzerConfig kAnalyzerDefaults;

std::string jsonl_of(const std::vector<OutputRecord>& records) {
    std::ostringstream os;
    write_jsonl(os, records);
    return os.str();
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

// Two sequential request/response pairs after a 1-RTT handshake: the basic
// shape every other scenario builds on.
Check two_pair_sequential_fixture() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();

    ScenarioConfig cfg;
    cfg.pattern = TrafficPattern::VideoSequential;
    cfg.n_pairs = 2;
    cfg.rtt_s = 0.6;
    cfg.seed = 21;
    auto trace = generate(cfg);
    Analyzer analyzer(kAnalyzerDefaults);
    for (const auto& d : trace.datagrams) analyzer.on_datagram(d);
    analyzer.finish();

    std::vector<const HttpObjectRecord*> objects;
    const ConnectionSummary* summary = nullptr;
    for (const auto& rec : analyzer.records()) {
        if (rec.type == OutputRecord::Type::Object) objects.push_back(&rec.object);
        else summary = &rec.summary;
    }
    c.expect(objects.size() == 2, "expected 2 objects, got " + str(objects.size()));
    c.expect(summary != nullptr, "no summary emitted");
    if (!c.ok) return c;
    c.expect(summary->multiplexing_level == 1.0,
             "multiplexing_level " + str(summary->multiplexing_level));
    for (size_t i = 0; i < 2; ++i) {
        const TruePair& truth = trace.truth.pairs[i];
        c.expect(objects[i]->pair_count == 1, "object pair_count != 1");
        c.expect(objects[i]->request_size == truth.request_size,
                 "request size " + str(objects[i]->request_size) + " != labeled " +
                     str(truth.request_size));
        c.expect(objects[i]->response_size == truth.response_size,
                 "response size " + str(objects[i]->response_size) + " != labeled " +
                     str(truth.response_size));
    }

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 1.0, "took " + str(secs) + " s");
    return c;
}

// Three interleaved pairs on one connection collapse into a single super
// object: individual pairs are not separable without decryption.
Check interleaved_super_object_fixture() {
    Check c;
    ScenarioConfig cfg;
    cfg.pattern = TrafficPattern::WebMultiplexed;
    cfg.n_pairs = 3;
    cfg.seed = 22;
    auto trace = generate(cfg);
    Analyzer analyzer(kAnalyzerDefaults);
    for (const auto& d : trace.datagrams) analyzer.on_datagram(d);
    analyzer.finish();

    size_t n_objects = 0;
    for (const auto& rec : analyzer.records()) {
        if (rec.type == OutputRecord::Type::Object) {
            ++n_objects;
            c.expect(rec.object.pair_count == 3,
                     "pair_count " + str(rec.object.pair_count) + " != 3");
            c.expect(rec.object.is_super, "object not marked super");
        } else {
            c.expect(rec.summary.multiplexing_level == 3.0,
                     "multiplexing_level " + str(rec.summary.multiplexing_level));
        }
    }
    c.expect(n_objects == 1, "expected 1 super object, got " + str(n_objects));
    return c;
}

// 0-RTT resumption: the request rides in the client's first flight and must
// be recognized before the handshake completes, then matched to its response.
Check zero_rtt_fixture() {
    Check c;
    ScenarioConfig cfg;
    cfg.pattern = TrafficPattern::ZeroRttResume;
    cfg.n_pairs = 1;
    cfg.seed = 23;
    auto trace = generate(cfg);
    Analyzer analyzer(kAnalyzerDefaults);
    for (const auto& d : trace.datagrams) analyzer.on_datagram(d);
    analyzer.finish();

    const HttpObjectRecord* obj = nullptr;
    for (const auto& rec : analyzer.records())
        if (rec.type == OutputRecord::Type::Object) obj = &rec.object;
    c.expect(obj != nullptr, "no object emitted");
    if (!c.ok) return c;
    c.expect(obj->has_zero_rtt_request, "object lacks the 0-RTT flag");
    c.expect(obj->has_response, "0-RTT request unmatched to a response");
    c.expect(obj->request_size == trace.truth.pairs[0].request_size, "request size mismatch");

    c.expect(analyzer.diagnostics().size() == 1, "expected one connection");
    if (!c.ok) return c;
    const auto& diag = analyzer.diagnostics()[0];
    c.expect(!diag.request_estimates.empty(), "no request estimate recorded");
    if (!c.ok) return c;
    const RequestEstimate& est = diag.request_estimates.front();
    c.expect(est.is_zero_rtt, "first request estimate not flagged 0-RTT");
    c.expect(est.emit_ts_us < diag.handshake_complete_ts,
             "0-RTT estimate emitted at " + str(est.emit_ts_us) +
                 ", not before handshake completion at " + str(diag.handshake_complete_ts));
    return c;
}

// Zero-loss corpus: reconstruction must be exact.
Check zero_loss_corpus() {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    CorpusRun run(corpus_configs(), kAnalyzerDefaults);
    EvalReport report = score(run.analyzer.records(), run.truths);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    c.expect(report.connections.size() >= 200,
             "only " + str(report.connections.size()) + " connections");
    c.expect(report.match_accuracy == 1.0, "match_accuracy " + str(report.match_accuracy));
    c.expect(report.request_size_accuracy == 1.0,
             "request_size_accuracy " + str(report.request_size_accuracy));
    c.expect(report.response_size_accuracy == 1.0,
             "response_size_accuracy " + str(report.response_size_accuracy));
    c.expect(report.request_start_error_rtt <= 1.0,
             "request_start_error " + str(report.request_start_error_rtt) + " RTT");
    c.expect(report.response_start_error_rtt <= 1.0,
             "response_start_error " + str(report.response_start_error_rtt) + " RTT");
    c.expect(report.response_end_error_rtt <= 1.0,
             "response_end_error " + str(report.response_end_error_rtt) + " RTT");
    c.expect(report.spurious_objects == 0, str(report.spurious_objects) + " spurious objects");
    c.expect(secs < 30.0, "corpus run took " + str(secs) + " s");
    return c;
}

// Lossy corpus: growing ACKs must not leak into the data classification once
// the ten-packet window has warmed up.
Check lossy_ack_classification() {
    Check c;
    std::vector<ScenarioConfig> configs;
    for (uint32_t i = 0; i < 40; ++i) {
        ScenarioConfig cfg;
        cfg.pattern = i % 2 == 0 ? TrafficPattern::VideoSequential : TrafficPattern::BulkDownload;
        cfg.rtt_s = 0.1;
        cfg.n_pairs = 6;
        cfg.loss_rate = 0.05;
        cfg.ack_every = 1;
        cfg.seed = 9000 + i;
        cfg.client_port = static_cast<uint16_t>(42000 + i);
        configs.push_back(cfg);
    }
    CorpusRun run(configs, kAnalyzerDefaults);

    std::map<std::string, const GroundTruth*> truth_by_port;
    for (const auto& t : run.truths) truth_by_port[str(t.config.client_port)] = &t;

    uint64_t checked = 0, wrong = 0;
    for (const auto& diag : run.analyzer.diagnostics()) {
        const GroundTruth* truth = truth_by_port.at(str(diag.key.client_port));
        c.expect(diag.classification.size() == truth->packets.size(),
                 "classification/label count mismatch");
        if (!c.ok) return c;
        for (size_t i = 0; i < diag.classification.size(); ++i) {
            const ClassifiedPacket& cls = diag.classification[i];
            const LabeledPacket& label = truth->packets[cls.position_index];
            if (!cls.window_warm) continue;  // criterion applies to the warm window only
            if (label.role == PacketRole::Ack) {
                ++checked;
                if (cls.cls != PacketClass::NonData) ++wrong;
            } else if (label.role == PacketRole::RequestData ||
                       label.role == PacketRole::ResponseData) {
                ++checked;
                if (cls.cls != PacketClass::Data) ++wrong;
            }
        }
    }
    c.expect(checked > 1000, "only " + str(checked) + " packets exercised the window");
    c.expect(wrong == 0, str(wrong) + " of " + str(checked) + " Ack/Data packets misclassified");
    return c;
}

// Passive RTT estimation from the handshake, three configured path RTTs.
Check rtt_estimation() {
    Check c;
    for (double rtt_s : {0.01, 0.1, 0.6}) {
        ScenarioConfig cfg;
        cfg.pattern = TrafficPattern::VideoSequential;
        cfg.n_pairs = 1;
        cfg.rtt_s = rtt_s;
        cfg.seed = 31;
        auto trace = generate(cfg);
        Analyzer analyzer(kAnalyzerDefaults);
        for (const auto& d : trace.datagrams) analyzer.on_datagram(d);
        analyzer.finish();
        for (const auto& rec : analyzer.records()) {
            if (rec.type != OutputRecord::Type::Summary) continue;
            c.expect(rec.summary.rtt_source == RttSource::HandshakeMeasured,
                     "rtt not measured from the handshake at " + str(rtt_s));
            double rel = std::abs(rec.summary.rtt_used_s - rtt_s) / rtt_s;
            c.expect(rel <= 0.05, "rtt " + str(rec.summary.rtt_used_s) + " vs configured " +
                                      str(rtt_s) + " (" + str(rel * 100) + "% off)");
        }
    }
    return c;
}

// Per-direction MTU must be recovered exactly from the handshake alone.
Check mtu_detection() {
    Check c;
    const uint32_t mtus[] = {1200, 1252, 1350};
    for (uint32_t up : mtus) {
        for (uint32_t down : mtus) {
            ScenarioConfig cfg;
            cfg.pattern = TrafficPattern::BulkDownload;
            cfg.n_pairs = 1;
            cfg.mtu_up = up;
            cfg.mtu_down = down;
            cfg.seed = 41;
            auto trace = generate(cfg);

            // Truncate the trace at the first server short-header datagram:
            // nothing past the handshake phase reaches the analyzer.
            std::vector<RawDatagram> handshake_only;
            for (const auto& d : trace.datagrams) {
                handshake_only.push_back(d);
                bool s2c = d.ep.src_port == cfg.server_port;
                if (s2c && !d.payload.empty() && (d.payload[0] & 0x80) == 0) break;
            }
            Analyzer analyzer(kAnalyzerDefaults);
            for (const auto& d : handshake_only) analyzer.on_datagram(d);
            analyzer.finish();
            for (const auto& rec : analyzer.records()) {
                if (rec.type != OutputRecord::Type::Summary) continue;
                c.expect(rec.summary.mtu_up == up, "mtu_up " + str(rec.summary.mtu_up) +
                                                       " != " + str(up));
                c.expect(rec.summary.mtu_down == down, "mtu_down " + str(rec.summary.mtu_down) +
                                                           " != " + str(down));
            }
        }
    }
    return c;
}

// Streaming (datagram-by-datagram) and batch (capture file) runs must agree
// byte-for-byte on every corpus trace.
Check online_offline_equivalence() {
    Check c;
    auto configs = corpus_configs();
    for (size_t i = 0; i < configs.size(); i += 17) {  // a spread of 12 traces
        auto trace = generate(configs[i]);

        Analyzer online(kAnalyzerDefaults);
        for (const auto& d : trace.datagrams) online.on_datagram(d);
        online.finish();

        std::string path = "/tmp/quiclens_accept_equiv.qevents";
        {
            std::ofstream f(path);
            write_qevents(f, trace.datagrams);
        }
        Analyzer offline(kAnalyzerDefaults);
        run_capture_file(path, offline);
        offline.finish();
        std::remove(path.c_str());

        c.expect(jsonl_of(online.records()) == jsonl_of(offline.records()),
                 "outputs differ on corpus trace " + str(i));
        if (!c.ok) return c;
    }
    return c;
}

// Conservation: summary totals, object sums, and the lengths of the packets
// the classifier admitted as data must agree exactly on every corpus trace.
Check conservation_suite() {
    Check c;
    CorpusRun run(corpus_configs(), kAnalyzerDefaults);

    // Admitted data bytes per connection, recomputed from the per-packet
    // classification log and the raw packet stream.
    struct Admitted {
        uint64_t up = 0, down = 0;
    };
    std::map<std::string, std::vector<uint32_t>> lens_by_flow;
    for (const auto& [key, pkt] : run.analyzer.packet_log())
        lens_by_flow[key.flow_id()].push_back(pkt.quic_packet_len);
    std::map<std::string, Admitted> admitted;
    for (const auto& diag : run.analyzer.diagnostics()) {
        const auto& lens = lens_by_flow.at(diag.key.flow_id());
        Admitted& a = admitted[diag.key.flow_id()];
        for (const auto& cls : diag.classification) {
            if (cls.cls != PacketClass::Data) continue;
            uint64_t len = lens.at(cls.position_index);
            if (cls.direction == Direction::ClientToServer) a.up += len;
            else a.down += len;
        }
    }

    std::map<std::string, Admitted> object_sums;
    for (const auto& rec : run.analyzer.records()) {
        if (rec.type != OutputRecord::Type::Object) continue;
        Admitted& s = object_sums[rec.key.flow_id()];
        s.up += rec.object.request_size;
        s.down += rec.object.response_size;
    }

    size_t summaries = 0;
    for (const auto& rec : run.analyzer.records()) {
        if (rec.type != OutputRecord::Type::Summary) continue;
        ++summaries;
        const ConnectionSummary& s = rec.summary;
        const std::string flow = rec.key.flow_id();
        const Admitted& obj = object_sums[flow];
        const Admitted& adm = admitted[flow];
        c.expect(s.total_request_size == obj.up,
                 flow + ": summary request total != object sum");
        c.expect(s.total_response_size == obj.down,
                 flow + ": summary response total != object sum");
        c.expect(adm.up == s.total_request_size,
                 flow + ": admitted uplink bytes " + str(adm.up) + " != summary " +
                     str(s.total_request_size));
        c.expect(adm.down == s.total_response_size + s.dropped_response_bytes,
                 flow + ": admitted downlink bytes " + str(adm.down) + " != summary " +
                     str(s.total_response_size + s.dropped_response_bytes));
        if (!c.ok) return c;
    }
    c.expect(summaries >= 200, "only " + str(summaries) + " summaries");
    return c;
}

// Bitwise determinism over the full corpus, including record order.
Check determinism() {
    Check c;
    auto configs = corpus_configs();
    std::string first, second;
    for (int round = 0; round < 2; ++round) {
        CorpusRun run(configs, kAnalyzerDefaults);
        (round == 0 ? first : second) = jsonl_of(run.analyzer.records());
    }
    c.expect(!first.empty(), "empty corpus output");
    c.expect(first == second, "two corpus runs differ");
    return c;
}

}  // namespace

int main() {
    using Criterion = std::pair<const char*, std::function<Check()>>;
    const std::vector<Criterion> criteria = {
        {"two-pair sequential fixture", two_pair_sequential_fixture},
        {"interleaved super-object fixture", interleaved_super_object_fixture},
        {"0-RTT resumption fixture", zero_rtt_fixture},
        {"zero-loss corpus exactness", zero_loss_corpus},
        {"lossy-corpus ACK/data classification", lossy_ack_classification},
        {"handshake RTT estimation within 5%", rtt_estimation},
        {"exact per-direction MTU detection", mtu_detection},
        {"online/offline byte equivalence", online_offline_equivalence},
        {"conservation of admitted bytes", conservation_suite},
        {"bitwise determinism", determinism},
    };

    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        try {
            c = fn();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        if (c.ok) {
            std::cout << "[PASS] " << name << '\n';
        } else {
            std::cout << "[FAIL] " << name << ": " << c.detail << '\n';
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
