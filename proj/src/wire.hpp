// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "diffusion.hpp"
#include "grid.hpp"

namespace score {
namespace wire {

// External-predictor protocol, little-endian throughout.
//   handshake  : both sides send "SCEP" + u16 version (= 1)
//   request    : u8 type 1, u32 t, u32 H, u32 W, u32 C, H*W*C float32
//   response   : u8 type 2, u32 H, u32 W, u32 C, H*W*C float32
inline constexpr char kMagic[4] = {'S', 'C', 'E', 'P'};
inline constexpr uint16_t kVersion = 1;
inline constexpr uint8_t kMsgPredict = 1;
inline constexpr uint8_t kMsgEpsilon = 2;
inline constexpr int kDefaultTimeoutMs = 30000;

// Blocking byte transport with per-read timeouts. read_some returns 0 at
// end of stream and throws proto_timeout when nothing arrives in time.
class ByteStream {
  public:
    virtual ~ByteStream() = default;
    virtual void write_all(const uint8_t* data, size_t len) = 0;
    virtual size_t read_some(uint8_t* data, size_t len, int timeout_ms) = 0;
};

// TCP client connection ("tcp:host:port").
std::unique_ptr<ByteStream> connect_tcp(const std::string& host, uint16_t port, int timeout_ms);

// Spawned subprocess speaking the protocol on its stdin/stdout
// ("exec:command arg ..."; whitespace-split, no quoting).
std::unique_ptr<ByteStream> spawn_subprocess(const std::vector<std::string>& argv);

// Frame-level helpers shared by client, tests and servers.
void write_handshake(ByteStream& stream);
void expect_handshake(ByteStream& stream, int timeout_ms);
void write_predict_request(ByteStream& stream, const ImageGrid& x_t, int t);
ImageGrid read_epsilon_response(ByteStream& stream, const ImageGrid& expected_shape,
                                int timeout_ms);

// Wire client for a remote noise predictor. Performs the handshake on
// construction. One connection serves one chain at a time (single-chain
// affinity); open one predictor per concurrent chain.
class ExternalPredictor final : public EpsilonPredictor {
  public:
    // endpoint: "tcp:host:port" or "exec:command arg ...".
    static std::unique_ptr<ExternalPredictor> open(const std::string& endpoint,
                                                   int timeout_ms = kDefaultTimeoutMs);

    // Takes ownership of an established transport and handshakes over it.
    ExternalPredictor(std::unique_ptr<ByteStream> stream, int timeout_ms);

    ImageGrid predict(const ImageGrid& x_t, int t) override;

  private:
    std::unique_ptr<ByteStream> stream_;
    int timeout_ms_;
};

}  // namespace wire
}  // namespace score
