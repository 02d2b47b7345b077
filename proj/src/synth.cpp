#include "quiclens/synth.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <random>

#include <json.hpp>

#include "quiclens/header_parse.hpp"

namespace quiclens {

using nlohmann::json;

const char* to_string(TrafficPattern p) {
    switch (p) {
        case TrafficPattern::VideoSequential: return "video";
        case TrafficPattern::WebMultiplexed: return "web";
        case TrafficPattern::Login: return "login";
        case TrafficPattern::BulkDownload: return "download";
        case TrafficPattern::BulkUpload: return "upload";
        case TrafficPattern::ZeroRttResume: return "zero-rtt";
    }
    return "?";
}

bool pattern_from_string(const std::string& name, TrafficPattern& out) {
    for (TrafficPattern p :
         {TrafficPattern::VideoSequential, TrafficPattern::WebMultiplexed,
          TrafficPattern::Login, TrafficPattern::BulkDownload, TrafficPattern::BulkUpload,
          TrafficPattern::ZeroRttResume}) {
        if (name == to_string(p)) {
            out = p;
            return true;
        }
    }
    return false;
}

const char* to_string(PacketRole r) {
    switch (r) {
        case PacketRole::Handshake: return "handshake";
        case PacketRole::RequestData: return "request_data";
        case PacketRole::ResponseData: return "response_data";
        case PacketRole::Ack: return "ack";
        case PacketRole::Control: return "control";
    }
    return "?";
}

namespace {

PacketRole role_from_string(const std::string& s) {
    if (s == "handshake") return PacketRole::Handshake;
    if (s == "request_data") return PacketRole::RequestData;
    if (s == "response_data") return PacketRole::ResponseData;
    if (s == "ack") return PacketRole::Ack;
    return PacketRole::Control;
}

struct PacketSpec {
    std::vector<uint8_t> bytes;
    PacketRole role = PacketRole::Control;
    int32_t pair_id = -1;
};

class TraceBuilder {
public:
    explicit TraceBuilder(const ScenarioConfig& cfg)
        : cfg_(cfg), rng_(cfg.seed), rtt_us_(static_cast<TsUs>(cfg.rtt_s * 1e6)) {
        for (auto& b : dcid_) b = static_cast<uint8_t>(rng_());
        for (auto& b : scid_) b = static_cast<uint8_t>(rng_());
        eps_us_ = std::max<TsUs>(rtt_us_ / 50, 100);
        now_us_ = 1'000'000;
    }

    uint32_t uniform(uint32_t lo, uint32_t hi) {
        return std::uniform_int_distribution<uint32_t>(lo, hi)(rng_);
    }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(rng_); }

    PacketSpec long_packet(LongPacketType type, uint32_t total_len, PacketRole role,
                           int32_t pair_id = -1) {
        // first byte + version + dcid + scid (+ token varint) + 2-byte length + pn
        size_t overhead = 1 + 4 + 1 + dcid_.size() + 1 + scid_.size() +
                          (type == LongPacketType::Initial ? 1 : 0) + 2 + 1;
        if (total_len < overhead + 1)
            throw ConfigError("long packet too small for framing");
        size_t body = total_len - overhead;  // packet number is part of Length

        PacketSpec spec;
        spec.role = role;
        spec.pair_id = pair_id;
        std::vector<uint8_t>& p = spec.bytes;
        p.push_back(static_cast<uint8_t>(0xc0 | (static_cast<uint8_t>(type) << 4)));
        for (int i = 0; i < 4; ++i) p.push_back(i == 3 ? 1 : 0);  // version 1
        p.push_back(static_cast<uint8_t>(dcid_.size()));
        p.insert(p.end(), dcid_.begin(), dcid_.end());
        p.push_back(static_cast<uint8_t>(scid_.size()));
        p.insert(p.end(), scid_.begin(), scid_.end());
        if (type == LongPacketType::Initial) p.push_back(0);  // empty token
        // Length = packet number + body, in the non-minimal 2-byte varint form
        // so small and large packets share one header layout.
        size_t length_field = body + 1;
        if (length_field >= 16384) throw ConfigError("long packet exceeds 2-byte length");
        p.push_back(static_cast<uint8_t>(0x40 | (length_field >> 8)));
        p.push_back(static_cast<uint8_t>(length_field & 0xff));
        p.push_back(static_cast<uint8_t>(rng_()));  // packet number byte
        for (size_t i = 0; i < body; ++i) p.push_back(static_cast<uint8_t>(rng_()));
        return spec;
    }

    PacketSpec short_packet(uint32_t total_len, PacketRole role, int32_t pair_id = -1) {
        size_t overhead = 1 + dcid_.size() + 1;
        if (total_len < overhead + 1) throw ConfigError("short packet too small");
        PacketSpec spec;
        spec.role = role;
        spec.pair_id = pair_id;
        std::vector<uint8_t>& p = spec.bytes;
        p.push_back(0x41);  // fixed bit set, 1-byte packet number
        p.insert(p.end(), dcid_.begin(), dcid_.end());
        p.push_back(static_cast<uint8_t>(rng_()));
        for (size_t i = overhead; i < total_len; ++i)
            p.push_back(static_cast<uint8_t>(rng_()));
        return spec;
    }

    void emit(Direction dir, TsUs ts, std::vector<PacketSpec> packets) {
        RawDatagram d;
        d.ts_us = ts;
        if (dir == Direction::ClientToServer) {
            d.ep = {cfg_.client_ip, cfg_.client_port, cfg_.server_ip, cfg_.server_port};
        } else {
            d.ep = {cfg_.server_ip, cfg_.server_port, cfg_.client_ip, cfg_.client_port};
        }
        for (PacketSpec& spec : packets) {
            LabeledPacket lp;
            lp.ordinal = ordinal_++;
            lp.pair_id = spec.pair_id;
            lp.role = spec.role;
            lp.quic_packet_len = static_cast<uint32_t>(spec.bytes.size());
            lp.ts_us = ts;
            lp.direction = dir;
            truth_.packets.push_back(lp);
            d.payload.insert(d.payload.end(), spec.bytes.begin(), spec.bytes.end());
        }
        datagrams_.push_back(std::move(d));
        now_us_ = std::max(now_us_, ts);
    }

    uint32_t next_ack_len() {
        uint32_t target = std::min<uint32_t>(28 + 4 * outstanding_losses_, 120);
        // ACK ranges accumulate gradually on the wire; cap the step so the
        // ten-packet window always tracks the growth.
        uint32_t len = std::min(target, last_ack_len_ + 8);
        last_ack_len_ = len;
        return len;
    }

    void client_ack(TsUs ts) { emit(Direction::ClientToServer, ts, make_vec(short_packet(next_ack_len(), PacketRole::Ack))); }
    void server_ack(TsUs ts) { emit(Direction::ServerToClient, ts, make_vec(short_packet(28, PacketRole::Ack))); }

    static std::vector<PacketSpec> make_vec(PacketSpec a) {
        std::vector<PacketSpec> v;
        v.push_back(std::move(a));
        return v;
    }

    // 1-RTT handshake opening (no 0-RTT). Ends with the server's first
    // short-header packet; both directions have shown their MTU by then.
    void handshake() {
        emit(Direction::ClientToServer, now_us_,
             make_vec(long_packet(LongPacketType::Initial, cfg_.mtu_up, PacketRole::Handshake)));
        TsUs t = now_us_ + rtt_us_;
        {
            std::vector<PacketSpec> flight;
            flight.push_back(long_packet(LongPacketType::Initial, 140, PacketRole::Handshake));
            flight.push_back(long_packet(LongPacketType::Handshake, 600, PacketRole::Handshake));
            emit(Direction::ServerToClient, t, std::move(flight));
        }
        emit(Direction::ServerToClient, t + eps_us_,
             make_vec(long_packet(LongPacketType::Handshake, cfg_.mtu_down, PacketRole::Handshake)));
        for (uint32_t round = 1; round < cfg_.handshake_rounds; ++round) {
            emit(Direction::ClientToServer, t + 2 * eps_us_,
                 make_vec(long_packet(LongPacketType::Handshake, 80, PacketRole::Handshake)));
            t = t + 2 * eps_us_ + rtt_us_;
            emit(Direction::ServerToClient, t,
                 make_vec(long_packet(LongPacketType::Handshake, 200, PacketRole::Handshake)));
        }
        emit(Direction::ClientToServer, t + 2 * eps_us_,
             make_vec(long_packet(LongPacketType::Handshake, 80, PacketRole::Handshake)));
        // HANDSHAKE_DONE: the first short-header packet of the connection.
        emit(Direction::ServerToClient, t + 3 * eps_us_,
             make_vec(short_packet(32, PacketRole::Control)));
        now_us_ = t + 3 * eps_us_;
    }

    // 0-RTT opening: Initial plus a standalone 0-RTT request datagram.
    void zero_rtt_opening(uint32_t request_len) {
        TruePair pair;
        pair.pair_id = next_pair_id_++;
        pair.is_zero_rtt = true;

        emit(Direction::ClientToServer, now_us_,
             make_vec(long_packet(LongPacketType::Initial, cfg_.mtu_up, PacketRole::Handshake)));
        TsUs t_req = now_us_ + eps_us_;
        emit(Direction::ClientToServer, t_req,
             make_vec(long_packet(LongPacketType::ZeroRTT, request_len, PacketRole::RequestData,
                                  static_cast<int32_t>(pair.pair_id))));
        pair.request_start_us = t_req;
        pair.request_size = request_len;
        pair.request_packets = 1;

        TsUs t = now_us_ + rtt_us_;
        {
            std::vector<PacketSpec> flight;
            flight.push_back(long_packet(LongPacketType::Initial, 140, PacketRole::Handshake));
            flight.push_back(long_packet(LongPacketType::Handshake, 600, PacketRole::Handshake));
            emit(Direction::ServerToClient, t, std::move(flight));
        }
        emit(Direction::ServerToClient, t + eps_us_,
             make_vec(long_packet(LongPacketType::Handshake, cfg_.mtu_down, PacketRole::Handshake)));
        emit(Direction::ServerToClient, t + 2 * eps_us_,
             make_vec(short_packet(32, PacketRole::Control)));

        // The 0-RTT response rides the first 1-RTT flight.
        TsUs t_resp = pair.request_start_us + rtt_us_ + rtt_us_ / 4;
        uint32_t resp_len = uniform(400, 900);
        emit(Direction::ServerToClient, t_resp,
             make_vec(short_packet(resp_len, PacketRole::ResponseData,
                                   static_cast<int32_t>(pair.pair_id))));
        pair.response_start_us = t_resp;
        pair.response_end_us = t_resp;
        pair.response_size = resp_len;
        pair.response_packets = 1;
        client_ack(t_resp + eps_us_ / 2);
        now_us_ = t_resp + eps_us_;
        truth_.pairs.push_back(pair);
    }

    // One request-response exchange. Request and response are given as
    // per-packet QUIC lengths; loss is applied to MTU-sized response packets.
    void exchange(const std::vector<uint32_t>& req_lens,
                  const std::vector<uint32_t>& resp_lens) {
        TruePair pair;
        pair.pair_id = next_pair_id_++;

        TsUs t = now_us_;
        pair.request_start_us = t;
        for (size_t i = 0; i < req_lens.size(); ++i) {
            emit(Direction::ClientToServer, t,
                 make_vec(short_packet(req_lens[i], PacketRole::RequestData,
                                       static_cast<int32_t>(pair.pair_id))));
            pair.request_size += req_lens[i];
            ++pair.request_packets;
            if (cfg_.ack_every > 0 && (i + 1) % cfg_.ack_every == 0 && req_lens.size() > 2)
                server_ack(t + eps_us_ / 2);
            t += eps_us_;
        }
        TsUs t_resp = pair.request_start_us + rtt_us_ + rtt_us_ / 4;
        emit_response_packets(pair, t_resp, resp_lens);
        truth_.pairs.push_back(pair);
        now_us_ = pair.response_end_us + 5 * rtt_us_ / 2;
    }

    void emit_response_packets(TruePair& pair, TsUs t, const std::vector<uint32_t>& lens) {
        std::vector<uint32_t> retransmit;
        uint32_t since_ack = 0;
        pair.response_start_us = t;
        auto send_one = [&](uint32_t len, bool may_lose) {
            emit(Direction::ServerToClient, t,
                 make_vec(short_packet(len, PacketRole::ResponseData,
                                       static_cast<int32_t>(pair.pair_id))));
            pair.response_size += len;
            ++pair.response_packets;
            pair.response_end_us = t;
            if (may_lose && len + 8 > cfg_.mtu_down && bernoulli(cfg_.loss_rate)) {
                ++outstanding_losses_;
                retransmit.push_back(len);
            }
            if (++since_ack >= cfg_.ack_every) {
                client_ack(t + eps_us_ / 2);
                since_ack = 0;
            }
            t += eps_us_;
        };
        for (uint32_t len : lens) send_one(len, cfg_.loss_rate > 0);
        // Retransmissions trail the response within the same RTT window.
        for (uint32_t len : retransmit) {
            send_one(len, false);
            if (outstanding_losses_ > 0) --outstanding_losses_;
        }
    }

    std::vector<uint32_t> video_response() {
        std::vector<uint32_t> lens{cfg_.mtu_down - 28};
        uint32_t body = uniform(3, 7);
        for (uint32_t i = 0; i < body; ++i) lens.push_back(cfg_.mtu_down);
        lens.push_back(uniform(300, 900));
        return lens;
    }

    void build() {
        switch (cfg_.pattern) {
            case TrafficPattern::VideoSequential:
                handshake();
                now_us_ += rtt_us_ / 2;
                for (uint32_t i = 0; i < cfg_.n_pairs; ++i)
                    exchange({uniform(250, 700)}, video_response());
                break;
            case TrafficPattern::WebMultiplexed:
                handshake();
                now_us_ += rtt_us_ / 2;
                if (cfg_.n_pairs == 1) {
                    exchange({uniform(250, 700)}, video_response());
                } else {
                    multiplexed_burst();
                }
                break;
            case TrafficPattern::Login:
                handshake();
                now_us_ += rtt_us_ / 2;
                for (uint32_t i = 0; i < cfg_.n_pairs; ++i)
                    exchange({uniform(150, 400)}, {uniform(300, 800)});
                break;
            case TrafficPattern::BulkDownload:
                handshake();
                now_us_ += rtt_us_ / 2;
                for (uint32_t i = 0; i < cfg_.n_pairs; ++i) {
                    std::vector<uint32_t> lens{cfg_.mtu_down - 28};
                    uint32_t body = uniform(25, 45);
                    for (uint32_t j = 0; j < body; ++j) lens.push_back(cfg_.mtu_down);
                    lens.push_back(uniform(300, 900));
                    exchange({uniform(250, 600)}, lens);
                }
                break;
            case TrafficPattern::BulkUpload:
                handshake();
                now_us_ += rtt_us_ / 2;
                for (uint32_t i = 0; i < cfg_.n_pairs; ++i) {
                    std::vector<uint32_t> req;
                    uint32_t body = uniform(5, 10);
                    for (uint32_t j = 0; j < body; ++j) req.push_back(cfg_.mtu_up);
                    req.push_back(uniform(300, 900));
                    exchange(req, {uniform(300, 700)});
                }
                break;
            case TrafficPattern::ZeroRttResume:
                zero_rtt_opening(uniform(300, 800));
                now_us_ += 5 * rtt_us_ / 2;
                for (uint32_t i = 1; i < cfg_.n_pairs; ++i)
                    exchange({uniform(250, 700)}, video_response());
                break;
        }
    }

    // Interleaved pairs: all requests up front, response streams back to
    // back, so the matcher sees one super object.
    void multiplexed_burst() {
        std::vector<TruePair> pairs(cfg_.n_pairs);
        TsUs t = now_us_;
        for (uint32_t i = 0; i < cfg_.n_pairs; ++i) {
            pairs[i].pair_id = next_pair_id_++;
            uint32_t len = uniform(250, 700);
            emit(Direction::ClientToServer, t,
                 make_vec(short_packet(len, PacketRole::RequestData,
                                       static_cast<int32_t>(pairs[i].pair_id))));
            pairs[i].request_start_us = t;
            pairs[i].request_size = len;
            pairs[i].request_packets = 1;
            t += rtt_us_ / 10;
        }
        TsUs t_resp = pairs[0].request_start_us + rtt_us_ + rtt_us_ / 4;
        for (uint32_t i = 0; i < cfg_.n_pairs; ++i) {
            std::vector<uint32_t> lens{cfg_.mtu_down - 28};
            uint32_t body = uniform(2, 4);
            for (uint32_t j = 0; j < body; ++j) lens.push_back(cfg_.mtu_down);
            lens.push_back(uniform(300, 900));
            TsUs t0 = std::max(t_resp, now_us_ + eps_us_);
            TsUs cur = t0;
            for (uint32_t len : lens) {
                emit(Direction::ServerToClient, cur,
                     make_vec(short_packet(len, PacketRole::ResponseData,
                                           static_cast<int32_t>(pairs[i].pair_id))));
                pairs[i].response_size += len;
                ++pairs[i].response_packets;
                pairs[i].response_end_us = cur;
                cur += eps_us_;
            }
            pairs[i].response_start_us = t0;
            client_ack(cur);
            now_us_ = cur;
            t_resp = cur + eps_us_;
        }
        for (TruePair& p : pairs) truth_.pairs.push_back(p);
        now_us_ += 5 * rtt_us_ / 2;
    }

    SyntheticTrace take() {
        SyntheticTrace trace;
        trace.datagrams = std::move(datagrams_);
        truth_.config = cfg_;
        trace.truth = std::move(truth_);
        return trace;
    }

private:
    ScenarioConfig cfg_;
    std::mt19937_64 rng_;
    TsUs rtt_us_;
    TsUs eps_us_;
    TsUs now_us_;
    std::array<uint8_t, 8> dcid_{};
    std::array<uint8_t, 8> scid_{};
    uint64_t ordinal_ = 0;
    uint32_t next_pair_id_ = 0;
    uint32_t outstanding_losses_ = 0;
    uint32_t last_ack_len_ = 28;
    std::vector<RawDatagram> datagrams_;
    GroundTruth truth_;
};

void validate(const ScenarioConfig& cfg) {
    if (cfg.rtt_s <= 0) throw ConfigError("rtt must be positive");
    if (cfg.mtu_up < 1200 || cfg.mtu_down < 1200)
        throw ConfigError("mtu must be at least 1200");
    if (cfg.loss_rate < 0 || cfg.loss_rate >= 1)
        throw ConfigError("loss_rate must be in [0, 1)");
    if (cfg.n_pairs < 1) throw ConfigError("n_pairs must be at least 1");
    if (cfg.ack_every < 1) throw ConfigError("ack_every must be at least 1");
    if (cfg.handshake_rounds < 1) throw ConfigError("handshake_rounds must be at least 1");
}

}  // namespace

SyntheticTrace generate(const ScenarioConfig& cfg) {
    validate(cfg);
    TraceBuilder builder(cfg);
    builder.build();
    return builder.take();
}

void write_labels_json(std::ostream& out, const std::vector<GroundTruth>& truths) {
    json root;
    root["schema_version"] = "1.0";
    json conns = json::array();
    for (const GroundTruth& t : truths) {
        json c;
        c["client_ip"] = t.config.client_ip;
        c["client_port"] = t.config.client_port;
        c["server_ip"] = t.config.server_ip;
        c["server_port"] = t.config.server_port;
        c["pattern"] = to_string(t.config.pattern);
        c["rtt_s"] = t.config.rtt_s;
        c["mtu_up"] = t.config.mtu_up;
        c["mtu_down"] = t.config.mtu_down;
        c["seed"] = t.config.seed;
        json pairs = json::array();
        for (const TruePair& p : t.pairs) {
            pairs.push_back(json{{"pair_id", p.pair_id},
                                 {"request_start_us", p.request_start_us},
                                 {"request_size", p.request_size},
                                 {"request_packets", p.request_packets},
                                 {"response_start_us", p.response_start_us},
                                 {"response_end_us", p.response_end_us},
                                 {"response_size", p.response_size},
                                 {"response_packets", p.response_packets},
                                 {"is_zero_rtt", p.is_zero_rtt}});
        }
        c["pairs"] = std::move(pairs);
        json pkts = json::array();
        for (const LabeledPacket& lp : t.packets) {
            pkts.push_back(json{{"ordinal", lp.ordinal},
                                {"pair_id", lp.pair_id},
                                {"role", to_string(lp.role)},
                                {"len", lp.quic_packet_len},
                                {"ts_us", lp.ts_us},
                                {"dir", to_string(lp.direction)}});
        }
        c["packets"] = std::move(pkts);
        conns.push_back(std::move(c));
    }
    root["connections"] = std::move(conns);
    out << root.dump(2) << '\n';
}

std::vector<GroundTruth> read_labels_json(std::istream& in) {
    json root = json::parse(in);
    std::vector<GroundTruth> out;
    for (const json& c : root.at("connections")) {
        GroundTruth t;
        t.config.client_ip = c.at("client_ip");
        t.config.client_port = c.at("client_port");
        t.config.server_ip = c.at("server_ip");
        t.config.server_port = c.at("server_port");
        std::string pat = c.at("pattern");
        pattern_from_string(pat, t.config.pattern);
        t.config.rtt_s = c.at("rtt_s");
        t.config.mtu_up = c.at("mtu_up");
        t.config.mtu_down = c.at("mtu_down");
        t.config.seed = c.at("seed");
        for (const json& p : c.at("pairs")) {
            TruePair pair;
            pair.pair_id = p.at("pair_id");
            pair.request_start_us = p.at("request_start_us");
            pair.request_size = p.at("request_size");
            pair.request_packets = p.at("request_packets");
            pair.response_start_us = p.at("response_start_us");
            pair.response_end_us = p.at("response_end_us");
            pair.response_size = p.at("response_size");
            pair.response_packets = p.at("response_packets");
            pair.is_zero_rtt = p.at("is_zero_rtt");
            t.pairs.push_back(pair);
        }
        for (const json& lp : c.at("packets")) {
            LabeledPacket pkt;
            pkt.ordinal = lp.at("ordinal");
            pkt.pair_id = lp.at("pair_id");
            pkt.role = role_from_string(lp.at("role"));
            pkt.quic_packet_len = lp.at("len");
            pkt.ts_us = lp.at("ts_us");
            pkt.direction = lp.at("dir") == "c2s" ? Direction::ClientToServer
                                                  : Direction::ServerToClient;
            t.packets.push_back(pkt);
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<GroundTruth> read_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return read_labels_json(in);
}

}  // namespace quiclens
