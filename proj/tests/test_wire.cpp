// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <deque>
#include <thread>

#include "error.hpp"
#include "rng.hpp"
#include "wire.hpp"

using namespace score;
using namespace score::wire;

namespace {

// In-memory transport: scripted inbound bytes, captured outbound bytes.
struct MemoryStream final : ByteStream {
    std::deque<uint8_t> inbound;
    std::vector<uint8_t> outbound;

    void feed(const std::vector<uint8_t>& bytes) {
        inbound.insert(inbound.end(), bytes.begin(), bytes.end());
    }

    void write_all(const uint8_t* data, size_t len) override {
        outbound.insert(outbound.end(), data, data + len);
    }

    size_t read_some(uint8_t* data, size_t len, int timeout_ms) override {
        if (inbound.empty()) {
            if (timeout_ms < 0) return 0;
            // an empty script means the peer closed the stream
            return 0;
        }
        size_t n = std::min(len, inbound.size());
        for (size_t i = 0; i < n; ++i) {
            data[i] = inbound.front();
            inbound.pop_front();
        }
        return n;
    }
};

void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}

std::vector<uint8_t> epsilon_frame(uint32_t h, uint32_t w, uint32_t c,
                                   const std::vector<float>& payload) {
    std::vector<uint8_t> f;
    f.push_back(kMsgEpsilon);
    put_u32le(f, h);
    put_u32le(f, w);
    put_u32le(f, c);
    for (float v : payload) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32le(f, bits);
    }
    return f;
}

ImageGrid float_image(int h, int w, int c, uint64_t seed) {
    RngStream rng(seed, 0);
    ImageGrid g(h, w, c);
    for (double& v : g.data) {
        v = static_cast<double>(static_cast<float>(rng.next_double() * 2.0 - 1.0));
    }
    return g;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("predict request frames follow the documented byte layout") {
    MemoryStream stream;
    ImageGrid x = float_image(2, 3, 1, 5);
    write_predict_request(stream, x, 42);
    const std::vector<uint8_t>& b = stream.outbound;
    REQUIRE(b.size() == 17 + 6 * 4);
    CHECK(b[0] == 1);                        // message type
    CHECK(b[1] == 42);                       // t, little-endian
    CHECK(b[2] == 0);
    CHECK(b[5] == 2);                        // H
    CHECK(b[9] == 3);                        // W
    CHECK(b[13] == 1);                       // C
    float first;
    uint32_t bits = static_cast<uint32_t>(b[17]) | (static_cast<uint32_t>(b[18]) << 8) |
                    (static_cast<uint32_t>(b[19]) << 16) | (static_cast<uint32_t>(b[20]) << 24);
    std::memcpy(&first, &bits, 4);
    CHECK(static_cast<double>(first) == x.data[0]);
}

TEST_CASE("handshake round-trips and rejects bad peers") {
    MemoryStream ok;
    ok.feed({'S', 'C', 'E', 'P', 1, 0});
    CHECK_NOTHROW(expect_handshake(ok, 100));

    MemoryStream bad_magic;
    bad_magic.feed({'X', 'C', 'E', 'P', 1, 0});
    CHECK(code_of([&] { expect_handshake(bad_magic, 100); }) == ErrorCode::proto_malformed);

    MemoryStream bad_version;
    bad_version.feed({'S', 'C', 'E', 'P', 9, 0});
    CHECK(code_of([&] { expect_handshake(bad_version, 100); }) ==
          ErrorCode::proto_version_mismatch);

    MemoryStream eof;
    eof.feed({'S', 'C'});
    CHECK(code_of([&] { expect_handshake(eof, 100); }) == ErrorCode::proto_truncated);
}

TEST_CASE("epsilon responses are validated field by field") {
    ImageGrid expected = float_image(2, 2, 1, 6);
    std::vector<float> payload = {0.5f, -0.25f, 0.125f, 1.0f};

    SUBCASE("valid frame decodes to the exact tensor") {
        MemoryStream s;
        s.feed(epsilon_frame(2, 2, 1, payload));
        ImageGrid eps = read_epsilon_response(s, expected, 100);
        for (size_t i = 0; i < 4; ++i) {
            CHECK(eps.data[i] == static_cast<double>(payload[i]));
        }
    }

    SUBCASE("wrong message type is malformed") {
        MemoryStream s;
        auto f = epsilon_frame(2, 2, 1, payload);
        f[0] = 7;
        s.feed(f);
        CHECK(code_of([&] { (void)read_epsilon_response(s, expected, 100); }) ==
              ErrorCode::proto_malformed);
    }

    SUBCASE("wrong dimensions raise shape mismatch naming both shapes") {
        MemoryStream s;
        s.feed(epsilon_frame(2, 3, 1, payload));
        try {
            (void)read_epsilon_response(s, expected, 100);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::proto_shape_mismatch);
            CHECK(std::string(e.what()).find("2x3x1") != std::string::npos);
            CHECK(std::string(e.what()).find("2x2x1") != std::string::npos);
        }
    }

    SUBCASE("mid-payload close is a truncated-frame error") {
        MemoryStream s;
        auto f = epsilon_frame(2, 2, 1, payload);
        f.resize(f.size() - 6);
        s.feed(f);
        CHECK(code_of([&] { (void)read_epsilon_response(s, expected, 100); }) ==
              ErrorCode::proto_truncated);
    }

    SUBCASE("non-finite payload is a data-integrity error") {
        MemoryStream s;
        std::vector<float> nan_payload = {0.5f, std::nanf(""), 0.0f, 0.0f};
        s.feed(epsilon_frame(2, 2, 1, nan_payload));
        CHECK(code_of([&] { (void)read_epsilon_response(s, expected, 100); }) ==
              ErrorCode::data_integrity);
    }
}

TEST_CASE("the frame timeout bounds the whole frame, not each read") {
    // one byte every 25 ms never completes a 13-byte header inside 100 ms
    struct TrickleStream final : ByteStream {
        uint8_t next = 2;
        void write_all(const uint8_t*, size_t) override {}
        size_t read_some(uint8_t* data, size_t, int) override {
            std::this_thread::sleep_for(std::chrono::milliseconds(25));
            data[0] = next;
            next = 0;
            return 1;
        }
    };
    TrickleStream s;
    ImageGrid expected = float_image(2, 2, 1, 11);
    CHECK(code_of([&] { (void)read_epsilon_response(s, expected, 100); }) ==
          ErrorCode::proto_timeout);
}

TEST_CASE("echo subprocess round-trips tensors bit-exactly") {
    auto pred = ExternalPredictor::open("exec:" SCORE_ECHO_BIN, 5000);
    ImageGrid x = float_image(6, 5, 3, 7);
    ImageGrid eps = pred->predict(x, 13);
    CHECK(eps.data == x.data);
    // a second round on the same connection
    ImageGrid y = float_image(6, 5, 3, 8);
    CHECK(pred->predict(y, 14).data == y.data);
}

TEST_CASE("echo subprocess fault modes map to distinct errors") {
    CHECK(code_of([&] {
              auto pred = ExternalPredictor::open("exec:" SCORE_ECHO_BIN " --mode bad-magic", 5000);
          }) == ErrorCode::proto_malformed);
    CHECK(code_of([&] {
              auto pred =
                  ExternalPredictor::open("exec:" SCORE_ECHO_BIN " --mode bad-version", 5000);
          }) == ErrorCode::proto_version_mismatch);

    ImageGrid x = float_image(4, 4, 1, 9);
    {
        auto pred = ExternalPredictor::open("exec:" SCORE_ECHO_BIN " --mode wrong-shape", 5000);
        CHECK(code_of([&] { (void)pred->predict(x, 1); }) == ErrorCode::proto_shape_mismatch);
    }
    {
        auto pred = ExternalPredictor::open("exec:" SCORE_ECHO_BIN " --mode truncate", 5000);
        CHECK(code_of([&] { (void)pred->predict(x, 1); }) == ErrorCode::proto_truncated);
    }
    {
        auto pred = ExternalPredictor::open("exec:" SCORE_ECHO_BIN " --mode stall", 300);
        CHECK(code_of([&] { (void)pred->predict(x, 1); }) == ErrorCode::proto_timeout);
    }
}

TEST_CASE("tcp transport speaks the same protocol") {
    int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(listener >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
    REQUIRE(::listen(listener, 1) == 0);
    socklen_t alen = sizeof(addr);
    REQUIRE(::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &alen) == 0);
    uint16_t port = ntohs(addr.sin_port);

    std::thread server([listener] {
        int conn = ::accept(listener, nullptr, nullptr);
        if (conn < 0) return;
        auto read_n = [&](uint8_t* dst, size_t len) {
            size_t got = 0;
            while (got < len) {
                ssize_t n = ::read(conn, dst + got, len - got);
                if (n <= 0) return false;
                got += static_cast<size_t>(n);
            }
            return true;
        };
        uint8_t hello[6];
        if (!read_n(hello, 6)) return;
        uint8_t greeting[6] = {'S', 'C', 'E', 'P', 1, 0};
        (void)!::write(conn, greeting, 6);
        uint8_t head[17];
        if (!read_n(head, 17)) return;
        uint32_t h = head[5], w = head[9], c = head[13];
        size_t payload = static_cast<size_t>(h) * w * c * 4;
        std::vector<uint8_t> body(payload);
        if (!read_n(body.data(), payload)) return;
        std::vector<uint8_t> resp;
        resp.push_back(2);
        resp.insert(resp.end(), head + 5, head + 17);
        resp.insert(resp.end(), body.begin(), body.end());
        (void)!::write(conn, resp.data(), resp.size());
        ::close(conn);
    });

    auto pred = ExternalPredictor::open("tcp:127.0.0.1:" + std::to_string(port), 5000);
    ImageGrid x = float_image(3, 3, 1, 10);
    ImageGrid eps = pred->predict(x, 5);
    CHECK(eps.data == x.data);
    server.join();
    ::close(listener);
}

TEST_CASE("endpoint strings are validated") {
    CHECK(code_of([&] { (void)ExternalPredictor::open("http://x", 100); }) ==
          ErrorCode::invalid_argument);
    CHECK(code_of([&] { (void)ExternalPredictor::open("tcp:nohost", 100); }) ==
          ErrorCode::invalid_argument);
}
