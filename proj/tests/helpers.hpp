#pragma once

#include <vector>

#include "quiclens/core.hpp"

namespace quiclens::testing {

inline PacketRecord data_pkt(TsUs ts_us, Direction dir, uint32_t len,
                             uint32_t coalesced = 1) {
    PacketRecord p;
    p.ts_us = ts_us;
    p.direction = dir;
    p.udp_payload_len = len;
    p.quic_packet_len = len;
    p.header_form = HeaderForm::Short;
    p.quic_packets_in_datagram = coalesced;
    return p;
}

inline PacketRecord long_pkt(TsUs ts_us, Direction dir, uint32_t len, LongPacketType type,
                             uint32_t coalesced = 1) {
    PacketRecord p = data_pkt(ts_us, dir, len, coalesced);
    p.header_form = HeaderForm::Long;
    p.long_packet_type = type;
    return p;
}

inline constexpr Direction kUp = Direction::ClientToServer;
inline constexpr Direction kDown = Direction::ServerToClient;

}  // namespace quiclens::testing
