// SPDX-License-Identifier: Apache-2.0
//
// Minimal reference server for the external-predictor protocol, used by the
// test suite and as a starting point for wiring up a real model. Speaks the
// protocol on stdin/stdout and echoes each request tensor back as the
// epsilon response. Deliberately implemented from the wire format alone (no
// library code) so client and server are independent implementations.
//
//   handshake  : both sides send "SCEP" + u16le version (= 1)
//   request    : u8 type 1, u32le t, u32le H, u32le W, u32le C, H*W*C f32le
//   response   : u8 type 2, u32le H, u32le W, u32le C, same payload layout
//
// Fault-injection modes for protocol error-path tests:
//   --mode echo        normal behaviour (default)
//   --mode wrong-shape respond with W+1 in the header
//   --mode truncate    close the stream mid-payload
//   --mode bad-version handshake with version 99
//   --mode bad-magic   handshake with the wrong magic
//   --mode stall       handshake, then never respond

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(uint8_t* dst, size_t len) {
    size_t got = 0;
    while (got < len) {
        ssize_t n = ::read(STDIN_FILENO, dst + got, len - got);
        if (n <= 0) return false;
        got += static_cast<size_t>(n);
    }
    return true;
}

bool write_all(const uint8_t* src, size_t len) {
    size_t sent = 0;
    while (sent < len) {
        ssize_t n = ::write(STDOUT_FILENO, src + sent, len - sent);
        if (n <= 0) return false;
        sent += static_cast<size_t>(n);
    }
    return true;
}

uint32_t get_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}

}  // namespace

int main(int argc, char** argv) {
    std::string mode = "echo";
    for (int i = 1; i + 1 < argc; i += 2) {
        if (std::string(argv[i]) == "--mode") mode = argv[i + 1];
    }

    // Handshake: read the client's greeting, then answer.
    uint8_t hello[6];
    if (!read_exact(hello, sizeof(hello))) return 1;
    if (std::memcmp(hello, "SCEP", 4) != 0) {
        std::fprintf(stderr, "echo-predictor: bad client magic\n");
        return 1;
    }
    std::vector<uint8_t> greeting;
    if (mode == "bad-magic") {
        greeting = {'X', 'X', 'X', 'X', 1, 0};
    } else if (mode == "bad-version") {
        greeting = {'S', 'C', 'E', 'P', 99, 0};
    } else {
        greeting = {'S', 'C', 'E', 'P', 1, 0};
    }
    if (!write_all(greeting.data(), greeting.size())) return 1;
    if (mode == "bad-magic" || mode == "bad-version") return 0;

    for (;;) {
        uint8_t head[17];
        if (!read_exact(head, 1)) return 0;  // clean EOF between frames
        if (head[0] != 1) {
            std::fprintf(stderr, "echo-predictor: unexpected message type %d\n", head[0]);
            return 1;
        }
        if (!read_exact(head + 1, 16)) return 1;
        uint32_t h = get_u32le(head + 5);
        uint32_t w = get_u32le(head + 9);
        uint32_t c = get_u32le(head + 13);
        if (h > (1u << 16) || w > (1u << 16) || c > 4) {
            std::fprintf(stderr, "echo-predictor: absurd request dims\n");
            return 1;
        }
        size_t payload_len = static_cast<size_t>(h) * w * c * 4;
        std::vector<uint8_t> payload(payload_len);
        if (!read_exact(payload.data(), payload_len)) return 1;

        if (mode == "stall") {
            ::pause();
            return 0;
        }

        std::vector<uint8_t> resp;
        resp.reserve(13 + payload_len);
        resp.push_back(2);
        put_u32le(resp, h);
        put_u32le(resp, mode == "wrong-shape" ? w + 1 : w);
        put_u32le(resp, c);
        if (mode == "truncate") {
            resp.insert(resp.end(), payload.begin(), payload.begin() + payload_len / 2);
            write_all(resp.data(), resp.size());
            return 0;  // stream closes mid-payload
        }
        resp.insert(resp.end(), payload.begin(), payload.end());
        if (!write_all(resp.data(), resp.size())) return 1;
    }
}
