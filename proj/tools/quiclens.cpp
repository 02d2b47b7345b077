#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quiclens/eval.hpp"
#include "quiclens/ingest.hpp"
#include "quiclens/log.hpp"
#include "quiclens/output.hpp"
#include "quiclens/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitMalformed = 2;
constexpr int kExitConfig = 3;

struct ParamFlags {
    quiclens::AnalyzerConfig cfg;

    void attach(CLI::App* app) {
        app->add_option("--l-req", cfg.l_req_init, "Initial request-data length threshold");
        app->add_option("--l-resp", cfg.l_resp_floor, "Response-data length threshold floor");
        app->add_option("--mtu-init", cfg.mtu_init, "Initial per-direction MTU estimate");
        app->add_option("--rtt-default", cfg.rtt_default_s,
                        "Fallback RTT in seconds when the handshake yields no sample");
        app->add_option("--idle-rtts", cfg.timing.idle_rtts,
                        "Idle timeout in RTT multiples");
        app->add_option("--assoc-max-rtts", cfg.timing.association_max_rtts,
                        "Upper bound of the request-response association window, RTT multiples");
        app->add_option("--n-req-cap", cfg.n_req_cap,
                        "Maximum pairs accumulated into one super object");
    }

    void validate() const {
        if (cfg.rtt_default_s <= 0) throw quiclens::ConfigError("--rtt-default must be > 0");
        if (cfg.timing.idle_rtts <= 0) throw quiclens::ConfigError("--idle-rtts must be > 0");
        if (cfg.timing.association_max_rtts <= cfg.timing.association_min_rtts)
            throw quiclens::ConfigError("--assoc-max-rtts must exceed the association minimum");
        if (cfg.n_req_cap == 0) throw quiclens::ConfigError("--n-req-cap must be >= 1");
        if (cfg.mtu_init == 0) throw quiclens::ConfigError("--mtu-init must be >= 1");
    }
};

std::ostream* open_out(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return &std::cout;
    file.open(path);
    if (!file) throw quiclens::IoError("cannot open output file: " + path);
    return &file;
}

std::vector<quiclens::OutputRecord> analyze_records(const std::string& input,
                                                    const quiclens::AnalyzerConfig& cfg) {
    quiclens::Analyzer analyzer(cfg);
    quiclens::run_capture_file(input, analyzer);
    analyzer.finish();
    return analyzer.records();
}

void write_records(const std::vector<quiclens::OutputRecord>& records,
                   const std::string& format, const std::string& out_path) {
    std::ofstream file;
    std::ostream* out = open_out(out_path, file);
    if (format == "csv")
        quiclens::write_csv(*out, records);
    else
        quiclens::write_jsonl(*out, records);
}

struct SynthFlags {
    std::string pattern = "video";
    double rtt_s = 0.1;
    uint32_t mtu_up = 1252;
    uint32_t mtu_down = 1252;
    uint32_t n_pairs = 2;
    double loss_rate = 0.0;
    uint32_t ack_every = 2;
    uint32_t handshake_rounds = 1;
    uint64_t seed = 1;
    uint32_t count = 1;

    void attach(CLI::App* app) {
        app->add_option("--pattern", pattern,
                        "video|web|login|download|upload|zero-rtt")
            ->capture_default_str();
        app->add_option("--rtt", rtt_s, "Path RTT in seconds")->capture_default_str();
        app->add_option("--mtu-up", mtu_up, "Client-to-server MTU")->capture_default_str();
        app->add_option("--mtu-down", mtu_down, "Server-to-client MTU")->capture_default_str();
        app->add_option("--pairs", n_pairs, "Request-response pairs per connection")
            ->capture_default_str();
        app->add_option("--loss", loss_rate, "Downstream data-packet loss rate")
            ->capture_default_str();
        app->add_option("--ack-every", ack_every, "Response packets per client ACK")
            ->capture_default_str();
        app->add_option("--handshake-rounds", handshake_rounds, "Handshake flight pairs")
            ->capture_default_str();
        app->add_option("--seed", seed, "Deterministic RNG seed")->capture_default_str();
        app->add_option("--count", count, "Number of connections to generate")
            ->capture_default_str();
    }

    // One config per connection: distinct client port and derived seed.
    std::vector<quiclens::ScenarioConfig> configs() const {
        quiclens::ScenarioConfig base;
        if (!quiclens::pattern_from_string(pattern, base.pattern))
            throw quiclens::ConfigError("unknown pattern: " + pattern);
        base.rtt_s = rtt_s;
        base.mtu_up = mtu_up;
        base.mtu_down = mtu_down;
        base.n_pairs = n_pairs;
        base.loss_rate = loss_rate;
        base.ack_every = ack_every;
        base.handshake_rounds = handshake_rounds;
        if (count == 0) throw quiclens::ConfigError("--count must be >= 1");
        std::vector<quiclens::ScenarioConfig> out;
        for (uint32_t i = 0; i < count; ++i) {
            quiclens::ScenarioConfig cfg = base;
            cfg.seed = seed + i;
            cfg.client_port = static_cast<uint16_t>(50000 + i);
            out.push_back(cfg);
        }
        return out;
    }
};

struct SynthResult {
    std::vector<quiclens::RawDatagram> datagrams;  // merged, time order
    std::vector<quiclens::GroundTruth> truths;
};

SynthResult run_synth(const std::vector<quiclens::ScenarioConfig>& cfgs) {
    SynthResult result;
    for (const auto& cfg : cfgs) {
        quiclens::SyntheticTrace trace = quiclens::generate(cfg);
        result.truths.push_back(std::move(trace.truth));
        result.datagrams.insert(result.datagrams.end(), trace.datagrams.begin(),
                                trace.datagrams.end());
    }
    std::stable_sort(result.datagrams.begin(), result.datagrams.end(),
                     [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
    return result;
}

void write_trace(const SynthResult& result, const std::string& out_path,
                 const std::string& pcap_path, const std::string& labels_path) {
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw quiclens::IoError("cannot open output file: " + out_path);
        quiclens::write_qevents(f, result.datagrams);
    }
    if (!pcap_path.empty()) quiclens::write_pcap_file(pcap_path, result.datagrams);
    if (!labels_path.empty()) {
        std::ofstream f(labels_path);
        if (!f) throw quiclens::IoError("cannot open labels file: " + labels_path);
        quiclens::write_labels_json(f, result.truths);
    }
}

void run_eval(const std::vector<quiclens::OutputRecord>& records,
              const std::vector<quiclens::GroundTruth>& truths,
              const std::string& report_path) {
    quiclens::EvalReport report = quiclens::score(records, truths);
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        if (!f) throw quiclens::IoError("cannot open report file: " + report_path);
        quiclens::write_report_json(f, report);
    }
    quiclens::print_report(std::cout, report);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quiclens: passive HTTP object reconstruction from encrypted QUIC traffic"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Analyze a capture (.pcap or .qevents)");
    std::string an_input, an_mode = "online", an_format = "json", an_out;
    analyze->add_option("input", an_input, "Capture file")->required();
    analyze->add_option("--mode", an_mode, "online|offline (outputs are identical)")
        ->check(CLI::IsMember({"online", "offline"}));
    analyze->add_option("--format", an_format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    analyze->add_option("--out", an_out, "Output path (default stdout)");
    ParamFlags an_params;
    an_params.attach(analyze);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic trace");
    std::string sy_out, sy_pcap, sy_labels;
    synth->add_option("--out", sy_out, "qevents output path");
    synth->add_option("--pcap", sy_pcap, "Optional pcap output path");
    synth->add_option("--labels", sy_labels, "labels.json output path");
    SynthFlags sy_flags;
    sy_flags.attach(synth);

    // eval
    auto* eval = app.add_subcommand("eval", "Score analyzer JSONL output against labels");
    std::string ev_records, ev_labels, ev_report;
    eval->add_option("--records", ev_records, "Analyzer JSONL output")->required();
    eval->add_option("--labels", ev_labels, "labels.json from synth")->required();
    eval->add_option("--report", ev_report, "report.json output path");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "synth -> analyze -> eval in one step");
    std::string pl_report, pl_out;
    pipeline->add_option("--report", pl_report, "report.json output path");
    pipeline->add_option("--out", pl_out, "Also write the analyzer JSONL here");
    SynthFlags pl_flags;
    pl_flags.attach(pipeline);
    ParamFlags pl_params;
    pl_params.attach(pipeline);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*analyze) {
            an_params.validate();
            auto records = analyze_records(an_input, an_params.cfg);
            write_records(records, an_format, an_out);
        } else if (*synth) {
            if (sy_out.empty() && sy_pcap.empty())
                throw quiclens::ConfigError("synth needs --out and/or --pcap");
            write_trace(run_synth(sy_flags.configs()), sy_out, sy_pcap, sy_labels);
        } else if (*eval) {
            std::ifstream f(ev_records);
            if (!f) throw quiclens::IoError("cannot open records file: " + ev_records);
            auto records = quiclens::read_jsonl(f);
            auto truths = quiclens::read_labels_file(ev_labels);
            run_eval(records, truths, ev_report);
        } else if (*pipeline) {
            pl_params.validate();
            SynthResult sr = run_synth(pl_flags.configs());
            quiclens::Analyzer analyzer(pl_params.cfg);
            for (const auto& d : sr.datagrams) analyzer.on_datagram(d);
            analyzer.finish();
            if (!pl_out.empty()) write_records(analyzer.records(), "json", pl_out);
            run_eval(analyzer.records(), sr.truths, pl_report);
        }
    } catch (const quiclens::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const quiclens::FormatError& e) {
        std::cerr << "malformed input: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const quiclens::UnsupportedLinkType& e) {
        std::cerr << "malformed input: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const quiclens::LabelMismatch& e) {
        std::cerr << "label mismatch: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const quiclens::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}
