#include <doctest.h>

#include <stdexcept>

#include "quiclens/core.hpp"

using namespace quiclens;

TEST_CASE("normalize_key: long-header sender becomes the client") {
    Endpoints ep{"192.0.2.7", 51000, "198.51.100.1", 8443};
    ConnectionKey key = normalize_key(ep, /*first_packet_is_long_header=*/true, "aabb");
    CHECK(key.client_ip == "192.0.2.7");
    CHECK(key.client_port == 51000);
    CHECK(key.server_ip == "198.51.100.1");
    CHECK(key.server_port == 8443);
    CHECK(key.quic_cid == "aabb");
    CHECK(key.client_inferred);
}

TEST_CASE("normalize_key: mid-capture flow falls back to the port heuristic") {
    // First observed packet travels server->client; port 443 marks the server.
    Endpoints ep{"198.51.100.1", 443, "192.0.2.7", 51000};
    ConnectionKey key = normalize_key(ep, /*first_packet_is_long_header=*/false, "");
    CHECK(key.client_ip == "192.0.2.7");
    CHECK(key.server_ip == "198.51.100.1");
    CHECK(key.server_port == 443);
    CHECK_FALSE(key.client_inferred);
}

TEST_CASE("flow_id is identical for both directions of the same 5-tuple") {
    Endpoints a{"10.0.0.1", 50000, "203.0.113.10", 443};
    Endpoints b{"203.0.113.10", 443, "10.0.0.1", 50000};
    ConnectionKey ka = normalize_key(a, true, "cc");
    ConnectionKey kb = normalize_key(b, false, "");
    CHECK(ka.flow_id() == kb.flow_id());
}

TEST_CASE("hex round trip") {
    std::vector<uint8_t> bytes{0x00, 0x41, 0xff, 0x10};
    std::string hex = to_hex(bytes.data(), bytes.size());
    CHECK(hex == "0041ff10");
    CHECK(from_hex(hex) == bytes);
    CHECK_THROWS_AS(from_hex("zz"), std::invalid_argument);
    CHECK_THROWS_AS(from_hex("abc"), std::invalid_argument);  // odd length
}
