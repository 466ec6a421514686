// SPDX-License-Identifier: Apache-2.0

#include "wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <sstream>

#include "error.hpp"

namespace score {
namespace wire {

namespace {

void put_u32le(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 24));
}

uint32_t get_u32le(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

// The timeout covers the whole frame, not each read.
void read_exact(ByteStream& stream, uint8_t* dst, size_t len, int timeout_ms,
                const char* what) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    size_t got = 0;
    while (got < len) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - std::chrono::steady_clock::now())
                        .count();
        if (left <= 0) {
            fail(ErrorCode::proto_timeout, std::string(what) + " not complete within " +
                                               std::to_string(timeout_ms) + " ms");
        }
        size_t n = stream.read_some(dst + got, len - got, static_cast<int>(left));
        if (n == 0) {
            fail(ErrorCode::proto_truncated,
                 std::string("stream closed mid-") + what + " (" + std::to_string(got) + "/" +
                     std::to_string(len) + " bytes)");
        }
        got += n;
    }
}

// fd-backed stream shared by the TCP and subprocess transports.
class FdStream final : public ByteStream {
  public:
    FdStream(int read_fd, int write_fd, pid_t child = -1)
        : read_fd_(read_fd), write_fd_(write_fd), child_(child) {}

    ~FdStream() override {
        if (read_fd_ >= 0) ::close(read_fd_);
        if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
        if (child_ > 0) {
            ::kill(child_, SIGTERM);
            int status = 0;
            ::waitpid(child_, &status, 0);
        }
    }

    void write_all(const uint8_t* data, size_t len) override {
        size_t sent = 0;
        while (sent < len) {
            ssize_t n = ::write(write_fd_, data + sent, len - sent);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail(ErrorCode::io_error, std::string("stream write failed: ") + strerror(errno));
            }
            sent += static_cast<size_t>(n);
        }
    }

    size_t read_some(uint8_t* data, size_t len, int timeout_ms) override {
        struct pollfd pfd = {read_fd_, POLLIN, 0};
        int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr < 0) {
            fail(ErrorCode::io_error, std::string("poll failed: ") + strerror(errno));
        }
        if (pr == 0) {
            fail(ErrorCode::proto_timeout,
                 "no data within " + std::to_string(timeout_ms) + " ms");
        }
        ssize_t n = ::read(read_fd_, data, len);
        if (n < 0) {
            if (errno == EINTR) return read_some(data, len, timeout_ms);
            fail(ErrorCode::io_error, std::string("stream read failed: ") + strerror(errno));
        }
        return static_cast<size_t>(n);
    }

  private:
    int read_fd_;
    int write_fd_;
    pid_t child_;
};

}  // namespace

std::unique_ptr<ByteStream> connect_tcp(const std::string& host, uint16_t port, int timeout_ms) {
    struct addrinfo hints;
    std::memset(&hints, 0, sizeof(hints));
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* result = nullptr;
    int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &result);
    if (rc != 0) {
        fail(ErrorCode::io_error, "cannot resolve " + host + ": " + gai_strerror(rc));
    }
    int fd = -1;
    std::string last_error = "no addresses";
    for (struct addrinfo* ai = result; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        last_error = strerror(errno);
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(result);
    if (fd < 0) {
        fail(ErrorCode::io_error, "cannot connect to " + host + ": " + last_error);
    }
    (void)timeout_ms;  // per-frame timeouts are applied on reads
    return std::make_unique<FdStream>(fd, fd);
}

std::unique_ptr<ByteStream> spawn_subprocess(const std::vector<std::string>& argv) {
    if (argv.empty()) fail(ErrorCode::invalid_argument, "spawn: empty command");
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
        fail(ErrorCode::io_error, std::string("pipe failed: ") + strerror(errno));
    }
    pid_t pid = ::fork();
    if (pid < 0) fail(ErrorCode::io_error, std::string("fork failed: ") + strerror(errno));
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        std::vector<char*> args;
        for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        ::execvp(args[0], args.data());
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    return std::make_unique<FdStream>(from_child[0], to_child[1], pid);
}

void write_handshake(ByteStream& stream) {
    std::vector<uint8_t> buf(kMagic, kMagic + 4);
    buf.push_back(static_cast<uint8_t>(kVersion));
    buf.push_back(static_cast<uint8_t>(kVersion >> 8));
    stream.write_all(buf.data(), buf.size());
}

void expect_handshake(ByteStream& stream, int timeout_ms) {
    uint8_t buf[6];
    read_exact(stream, buf, sizeof(buf), timeout_ms, "handshake");
    if (std::memcmp(buf, kMagic, 4) != 0) {
        fail(ErrorCode::proto_malformed, "handshake magic mismatch");
    }
    uint16_t version = static_cast<uint16_t>(buf[4]) | (static_cast<uint16_t>(buf[5]) << 8);
    if (version != kVersion) {
        fail(ErrorCode::proto_version_mismatch,
             "protocol version mismatch: peer " + std::to_string(version) + ", expected " +
                 std::to_string(kVersion));
    }
}

void write_predict_request(ByteStream& stream, const ImageGrid& x_t, int t) {
    require_finite(x_t, "predict request");
    std::vector<uint8_t> buf;
    buf.reserve(17 + x_t.data.size() * 4);
    buf.push_back(kMsgPredict);
    put_u32le(buf, static_cast<uint32_t>(t));
    put_u32le(buf, static_cast<uint32_t>(x_t.height));
    put_u32le(buf, static_cast<uint32_t>(x_t.width));
    put_u32le(buf, static_cast<uint32_t>(x_t.channels));
    for (double v : x_t.data) {
        float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32le(buf, bits);
    }
    stream.write_all(buf.data(), buf.size());
}

ImageGrid read_epsilon_response(ByteStream& stream, const ImageGrid& expected_shape,
                                int timeout_ms) {
    uint8_t head[13];
    read_exact(stream, head, sizeof(head), timeout_ms, "response header");
    if (head[0] != kMsgEpsilon) {
        fail(ErrorCode::proto_malformed,
             "unexpected message type " + std::to_string(head[0]) + ", expected epsilon (2)");
    }
    uint32_t h = get_u32le(head + 1);
    uint32_t w = get_u32le(head + 5);
    uint32_t c = get_u32le(head + 9);
    if (h != static_cast<uint32_t>(expected_shape.height) ||
        w != static_cast<uint32_t>(expected_shape.width) ||
        c != static_cast<uint32_t>(expected_shape.channels)) {
        std::ostringstream msg;
        msg << "response shape mismatch: got " << h << "x" << w << "x" << c << ", expected "
            << expected_shape.height << "x" << expected_shape.width << "x"
            << expected_shape.channels;
        fail(ErrorCode::proto_shape_mismatch, msg.str());
    }
    size_t count = static_cast<size_t>(h) * w * c;
    std::vector<uint8_t> payload(count * 4);
    read_exact(stream, payload.data(), payload.size(), timeout_ms, "response payload");
    ImageGrid eps(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits = get_u32le(payload.data() + i * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        eps.data[i] = static_cast<double>(f);
    }
    require_finite(eps, "epsilon response");
    return eps;
}

std::unique_ptr<ExternalPredictor> ExternalPredictor::open(const std::string& endpoint,
                                                           int timeout_ms) {
    if (endpoint.rfind("tcp:", 0) == 0) {
        std::string rest = endpoint.substr(4);
        auto colon = rest.rfind(':');
        if (colon == std::string::npos) {
            fail(ErrorCode::invalid_argument, "endpoint must be tcp:host:port, got " + endpoint);
        }
        std::string host = rest.substr(0, colon);
        int port = 0;
        try {
            port = std::stoi(rest.substr(colon + 1));
        } catch (const std::logic_error&) {
            port = 0;
        }
        if (port <= 0 || port > 65535) {
            fail(ErrorCode::invalid_argument, "bad port in endpoint: " + endpoint);
        }
        return std::make_unique<ExternalPredictor>(
            connect_tcp(host, static_cast<uint16_t>(port), timeout_ms), timeout_ms);
    }
    if (endpoint.rfind("exec:", 0) == 0) {
        std::istringstream args(endpoint.substr(5));
        std::vector<std::string> argv;
        std::string tok;
        while (args >> tok) argv.push_back(tok);
        return std::make_unique<ExternalPredictor>(spawn_subprocess(argv), timeout_ms);
    }
    fail(ErrorCode::invalid_argument,
         "endpoint must start with tcp: or exec:, got " + endpoint);
}

ExternalPredictor::ExternalPredictor(std::unique_ptr<ByteStream> stream, int timeout_ms)
    : stream_(std::move(stream)), timeout_ms_(timeout_ms) {
    write_handshake(*stream_);
    expect_handshake(*stream_, timeout_ms_);
}

ImageGrid ExternalPredictor::predict(const ImageGrid& x_t, int t) {
    try {
        write_predict_request(*stream_, x_t, t);
        return read_epsilon_response(*stream_, x_t, timeout_ms_);
    } catch (const Error& e) {
        // keep the code, add the failing timestep for the caller's report
        throw Error(e.code(), "predict at t=" + std::to_string(t) + ": " + e.what());
    }
}

}  // namespace wire
}  // namespace score
