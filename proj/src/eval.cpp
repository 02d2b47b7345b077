#include "quiclens/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace quiclens {

namespace {

using nlohmann::json;

std::string endpoint_key(const std::string& cip, uint16_t cport, const std::string& sip,
                         uint16_t sport) {
    std::ostringstream os;
    os << cip << ':' << cport << '-' << sip << ':' << sport;
    return os.str();
}

double size_accuracy(uint64_t est, uint64_t truth) {
    if (truth == 0) return est == 0 ? 1.0 : 0.0;
    double rel = std::abs(static_cast<double>(est) - static_cast<double>(truth)) /
                 static_cast<double>(truth);
    return 1.0 - std::min(1.0, rel);
}

// Index of the last object whose key time is <= t, or -1.
int last_at_or_before(const std::vector<TsUs>& starts, TsUs t) {
    int best = -1;
    for (size_t i = 0; i < starts.size(); ++i)
        if (starts[i] <= t) best = static_cast<int>(i);
    return best;
}

struct Accum {
    double sum = 0;
    uint64_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    double mean() const { return n ? sum / n : 0.0; }
};

}  // namespace

EvalReport score(const std::vector<OutputRecord>& records,
                 const std::vector<GroundTruth>& truths) {
    if (truths.empty()) throw LabelMismatch("label file contains no connections");

    // Objects per labeled connection, in emission order (all generations).
    std::map<std::string, std::vector<const HttpObjectRecord*>> objects_by_conn;
    std::map<std::string, const OutputRecord*> any_record_by_conn;
    for (const OutputRecord& rec : records) {
        std::string k = endpoint_key(rec.key.client_ip, rec.key.client_port, rec.key.server_ip,
                                     rec.key.server_port);
        any_record_by_conn.emplace(k, &rec);
        if (rec.type == OutputRecord::Type::Object) objects_by_conn[k].push_back(&rec.object);
    }

    EvalReport report;
    Accum agg_req_size, agg_resp_size;
    Accum agg_req_start, agg_resp_start, agg_resp_end;
    Accum agg_req_start_rtt, agg_resp_start_rtt, agg_resp_end_rtt;
    uint64_t agg_true = 0, agg_correct = 0;
    std::map<std::string, bool> seen_truth_keys;

    for (const GroundTruth& truth : truths) {
        const ScenarioConfig& cfg = truth.config;
        std::string k =
            endpoint_key(cfg.client_ip, cfg.client_port, cfg.server_ip, cfg.server_port);
        if (seen_truth_keys.count(k))
            throw LabelMismatch("duplicate labeled connection " + k);
        seen_truth_keys[k] = true;
        if (!any_record_by_conn.count(k))
            throw LabelMismatch("no analyzer records for labeled connection " + k);

        const auto it = objects_by_conn.find(k);
        const std::vector<const HttpObjectRecord*> objs =
            it == objects_by_conn.end() ? std::vector<const HttpObjectRecord*>{} : it->second;

        ConnectionScore cs;
        cs.key = any_record_by_conn.at(k)->key;
        cs.rtt_s = cfg.rtt_s;
        cs.true_pairs = truth.pairs.size();
        cs.estimated_objects = objs.size();

        std::vector<TsUs> req_starts, resp_starts;
        std::vector<bool> has_resp;
        for (const HttpObjectRecord* o : objs) {
            req_starts.push_back(o->request_start_us);
            resp_starts.push_back(o->has_response ? o->response_start_us
                                                  : std::numeric_limits<TsUs>::max());
            has_resp.push_back(o->has_response);
        }
        // Response attribution ignores objects without a response.
        auto last_resp_at_or_before = [&](TsUs t) {
            int best = -1;
            for (size_t i = 0; i < objs.size(); ++i)
                if (has_resp[i] && resp_starts[i] <= t) best = static_cast<int>(i);
            return best;
        };

        struct Assigned {
            std::vector<const TruePair*> reqs, resps;
        };
        std::vector<Assigned> assigned(objs.size());
        for (const TruePair& p : truth.pairs) {
            int ri = last_at_or_before(req_starts, p.request_start_us);
            int si = last_resp_at_or_before(p.response_start_us);
            if (ri >= 0) assigned[ri].reqs.push_back(&p);
            if (si >= 0) assigned[si].resps.push_back(&p);
            if (ri >= 0 && ri == si) ++cs.correct_pairs;
        }
        cs.match_accuracy =
            cs.true_pairs ? static_cast<double>(cs.correct_pairs) / cs.true_pairs : 1.0;
        agg_true += cs.true_pairs;
        agg_correct += cs.correct_pairs;

        Accum c_req_size, c_resp_size, c_req_start, c_resp_start, c_resp_end;
        const double rtt_us = cfg.rtt_s * 1e6;
        for (size_t i = 0; i < objs.size(); ++i) {
            const HttpObjectRecord& o = *objs[i];
            const Assigned& a = assigned[i];
            if (a.reqs.empty() && a.resps.empty()) ++cs.spurious_objects;
            if (!a.reqs.empty()) {
                uint64_t true_size = 0;
                TsUs first_start = a.reqs.front()->request_start_us;
                for (const TruePair* p : a.reqs) {
                    true_size += p->request_size;
                    first_start = std::min(first_start, p->request_start_us);
                }
                double sa = size_accuracy(o.request_size, true_size);
                double te = std::abs(static_cast<double>(o.request_start_us - first_start)) / 1e6;
                c_req_size.add(sa);
                c_req_start.add(te);
                agg_req_size.add(sa);
                agg_req_start.add(te);
                agg_req_start_rtt.add(te * 1e6 / rtt_us);
            }
            if (!a.resps.empty() && o.has_response) {
                uint64_t true_size = 0;
                TsUs first_start = a.resps.front()->response_start_us;
                TsUs last_end = a.resps.front()->response_end_us;
                for (const TruePair* p : a.resps) {
                    true_size += p->response_size;
                    first_start = std::min(first_start, p->response_start_us);
                    last_end = std::max(last_end, p->response_end_us);
                }
                double sa = size_accuracy(o.response_size, true_size);
                double ts = std::abs(static_cast<double>(o.response_start_us - first_start)) / 1e6;
                double te = std::abs(static_cast<double>(o.response_end_us - last_end)) / 1e6;
                c_resp_size.add(sa);
                c_resp_start.add(ts);
                c_resp_end.add(te);
                agg_resp_size.add(sa);
                agg_resp_start.add(ts);
                agg_resp_end.add(te);
                agg_resp_start_rtt.add(ts * 1e6 / rtt_us);
                agg_resp_end_rtt.add(te * 1e6 / rtt_us);
            }
        }
        cs.request_size_accuracy = c_req_size.n ? c_req_size.mean() : 1.0;
        cs.response_size_accuracy = c_resp_size.n ? c_resp_size.mean() : 1.0;
        cs.request_start_error_s = c_req_start.mean();
        cs.response_start_error_s = c_resp_start.mean();
        cs.response_end_error_s = c_resp_end.mean();
        report.spurious_objects += cs.spurious_objects;
        report.total_objects += cs.estimated_objects;
        report.connections.push_back(std::move(cs));
    }

    report.total_pairs = agg_true;
    report.match_accuracy = agg_true ? static_cast<double>(agg_correct) / agg_true : 1.0;
    report.request_size_accuracy = agg_req_size.n ? agg_req_size.mean() : 1.0;
    report.response_size_accuracy = agg_resp_size.n ? agg_resp_size.mean() : 1.0;
    report.request_start_error_s = agg_req_start.mean();
    report.response_start_error_s = agg_resp_start.mean();
    report.response_end_error_s = agg_resp_end.mean();
    report.request_start_error_rtt = agg_req_start_rtt.mean();
    report.response_start_error_rtt = agg_resp_start_rtt.mean();
    report.response_end_error_rtt = agg_resp_end_rtt.mean();
    return report;
}

void write_report_json(std::ostream& out, const EvalReport& report) {
    json conns = json::array();
    for (const ConnectionScore& cs : report.connections) {
        conns.push_back(json{{"client_ip", cs.key.client_ip},
                             {"client_port", cs.key.client_port},
                             {"server_ip", cs.key.server_ip},
                             {"server_port", cs.key.server_port},
                             {"true_pairs", cs.true_pairs},
                             {"correct_pairs", cs.correct_pairs},
                             {"estimated_objects", cs.estimated_objects},
                             {"spurious_objects", cs.spurious_objects},
                             {"match_accuracy", cs.match_accuracy},
                             {"request_size_accuracy", cs.request_size_accuracy},
                             {"response_size_accuracy", cs.response_size_accuracy},
                             {"request_start_error_s", cs.request_start_error_s},
                             {"response_start_error_s", cs.response_start_error_s},
                             {"response_end_error_s", cs.response_end_error_s},
                             {"rtt_s", cs.rtt_s}});
    }
    json j{{"aggregate",
            json{{"match_accuracy", report.match_accuracy},
                 {"request_size_accuracy", report.request_size_accuracy},
                 {"response_size_accuracy", report.response_size_accuracy},
                 {"request_start_error_s", report.request_start_error_s},
                 {"response_start_error_s", report.response_start_error_s},
                 {"response_end_error_s", report.response_end_error_s},
                 {"request_start_error_rtt", report.request_start_error_rtt},
                 {"response_start_error_rtt", report.response_start_error_rtt},
                 {"response_end_error_rtt", report.response_end_error_rtt},
                 {"total_pairs", report.total_pairs},
                 {"total_objects", report.total_objects},
                 {"spurious_objects", report.spurious_objects}}},
           {"connections", conns}};
    out << j.dump(2) << '\n';
}

void print_report(std::ostream& out, const EvalReport& report) {
    out << std::fixed << std::setprecision(4);
    out << "connections:            " << report.connections.size() << '\n'
        << "true pairs:             " << report.total_pairs << '\n'
        << "estimated objects:      " << report.total_objects << '\n'
        << "spurious objects:       " << report.spurious_objects << '\n'
        << "match accuracy:         " << report.match_accuracy << '\n'
        << "request size accuracy:  " << report.request_size_accuracy << '\n'
        << "response size accuracy: " << report.response_size_accuracy << '\n'
        << "request start error:    " << report.request_start_error_s << " s ("
        << report.request_start_error_rtt << " RTT)\n"
        << "response start error:   " << report.response_start_error_s << " s ("
        << report.response_start_error_rtt << " RTT)\n"
        << "response end error:     " << report.response_end_error_s << " s ("
        << report.response_end_error_rtt << " RTT)\n";
}

}  // namespace quiclens
