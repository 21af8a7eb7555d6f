/* Copyright 2026 The vla-eval Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/socket.h>

#include <atomic>
#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <charconv>
#include <list>
#include <mutex>
#include <optional>
#include <thread>

#include "vlaeval/transport.hpp"

namespace vlaeval {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

Endpoint Endpoint::parse(std::string_view url) {
  constexpr std::string_view kScheme = "ws://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw std::invalid_argument("endpoint must look like ws://host:port, got '" +
                                std::string(url) + "'");
  }
  std::string_view rest = url.substr(kScheme.size());
  if (!rest.empty() && rest.back() == '/') rest.remove_suffix(1);
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw std::invalid_argument("endpoint is missing host or port: '" + std::string(url) + "'");
  }
  Endpoint ep;
  ep.host = std::string(rest.substr(0, colon));
  std::string_view port = rest.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535) {
    throw std::invalid_argument("bad port in endpoint '" + std::string(url) + "'");
  }
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

std::string Endpoint::url() const { return "ws://" + host + ":" + std::to_string(port); }

namespace {

bool is_disconnect(const beast::error_code& ec) {
  return ec == websocket::error::closed || ec == asio::error::eof ||
         ec == asio::error::connection_reset || ec == asio::error::broken_pipe ||
         ec == asio::error::operation_aborted || ec == asio::error::not_connected ||
         ec == asio::error::bad_descriptor || ec == beast::http::error::end_of_stream;
}

// Each transport owns its io_context so timed reads can drive it locally.
class BeastTransport : public FrameTransport {
 public:
  BeastTransport() : ws_(ioc_) {}

  websocket::stream<tcp::socket>& ws() { return ws_; }
  asio::io_context& ioc() { return ioc_; }

  void send_frame(std::span<const std::uint8_t> frame) override {
    if (closed_) throw ConnectionClosed("connection already closed");
    beast::error_code ec;
    ws_.binary(true);
    ws_.write(asio::buffer(frame.data(), frame.size()), ec);
    if (ec) {
      closed_ = true;
      throw ConnectionClosed("send failed: " + ec.message());
    }
  }

  Bytes receive_frame(Millis timeout) override {
    if (closed_) throw ConnectionClosed("connection already closed");
    beast::flat_buffer buffer;
    beast::error_code ec;
    if (timeout == kNoTimeout) {
      ws_.read(buffer, ec);
    } else {
      std::optional<beast::error_code> result;
      ws_.async_read(buffer, [&](beast::error_code e, std::size_t) { result = e; });
      ioc_.restart();
      ioc_.run_for(timeout);
      if (!result) {
        beast::error_code ignored;
        ws_.next_layer().cancel(ignored);
        ioc_.restart();
        ioc_.run();
        closed_ = true;
        throw ReceiveTimeout("no frame within " + std::to_string(timeout.count()) + " ms");
      }
      ec = *result;
    }
    if (ec) {
      closed_ = true;
      if (is_disconnect(ec)) throw ConnectionClosed("peer closed the connection");
      throw ConnectionClosed("receive failed: " + ec.message());
    }
    auto data = buffer.cdata();
    const auto* begin = static_cast<const std::uint8_t*>(data.data());
    return Bytes(begin, begin + data.size());
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
    ws_.next_layer().close(ec);
  }

  // Thread-safe at the OS level; unblocks a reader on another thread.
  void shutdown_socket() {
    if (ws_.next_layer().is_open()) {
      ::shutdown(ws_.next_layer().native_handle(), SHUT_RDWR);
    }
  }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<FrameTransport> connect_websocket(const Endpoint& endpoint, Millis connect_timeout) {
  auto transport = std::make_unique<BeastTransport>();
  auto& ioc = transport->ioc();
  tcp::resolver resolver(ioc);
  beast::error_code ec;
  auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port), ec);
  if (ec) throw ConnectionClosed("cannot resolve " + endpoint.url() + ": " + ec.message());

  std::optional<beast::error_code> connected;
  asio::async_connect(transport->ws().next_layer(), results,
                      [&](beast::error_code e, const tcp::endpoint&) { connected = e; });
  ioc.restart();
  ioc.run_for(connect_timeout);
  if (!connected) {
    transport->ws().next_layer().close(ec);
    ioc.restart();
    ioc.run();
    throw ConnectionClosed("timed out connecting to " + endpoint.url());
  }
  if (*connected) {
    throw ConnectionClosed("cannot connect to " + endpoint.url() + ": " + connected->message());
  }
  transport->ws().next_layer().set_option(tcp::no_delay(true), ec);

  std::optional<beast::error_code> upgraded;
  transport->ws().async_handshake(endpoint.host, "/", [&](beast::error_code e) { upgraded = e; });
  ioc.restart();
  ioc.run_for(connect_timeout);
  if (!upgraded || *upgraded) {
    transport->ws().next_layer().close(ec);
    ioc.restart();
    ioc.run();
    throw ConnectionClosed("websocket upgrade with " + endpoint.url() + " failed");
  }
  transport->ws().binary(true);
  return transport;
}

Connection::Connection(std::unique_ptr<FrameTransport> transport)
    : transport_(std::move(transport)) {}

void Connection::send(MessageType type, Value::Object payload) {
  try {
    transport_->send_frame(codec_.pack(type, std::move(payload)));
  } catch (const ConnectionClosed&) {
    broken_ = true;
    throw;
  }
}

Message Connection::receive(Millis timeout) {
  try {
    Bytes frame = transport_->receive_frame(timeout);
    return codec_.unpack(frame);
  } catch (...) {
    broken_ = true;
    throw;
  }
}

Message Connection::handshake(std::string_view role, Millis timeout, Value::Object extra) {
  send(MessageType::kHandshake, handshake_payload(role, std::move(extra)));
  Message reply = receive(timeout);
  if (reply.type == MessageType::kError) {
    const Value* msg = find_key(reply.payload, "message");
    broken_ = true;
    throw VersionMismatch("handshake rejected: " +
                          (msg != nullptr && msg->is_string() ? msg->as_string() : "?"));
  }
  check_handshake(reply, role == "runner" ? "model" : "runner");
  return reply;
}

void Connection::close() {
  broken_ = true;
  transport_->close();
}

struct WebSocketServer::Impl {
  struct Live {
    std::thread thread;
    std::shared_ptr<BeastTransport> transport;
    std::atomic<bool> done{false};
  };

  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  Handler handler;
  std::thread accept_thread;
  std::mutex mu;
  std::list<Live> live;
  std::atomic<bool> stopping{false};

  void reap_locked() {
    for (auto it = live.begin(); it != live.end();) {
      if (it->done.load()) {
        if (it->thread.joinable()) it->thread.join();
        it = live.erase(it);
      } else {
        ++it;
      }
    }
  }

  void accept_loop() {
    while (!stopping.load()) {
      auto transport = std::make_shared<BeastTransport>();
      beast::error_code ec;
      acceptor.accept(transport->ws().next_layer(), ec);
      if (ec) {
        if (stopping.load()) return;
        continue;
      }
      transport->ws().next_layer().set_option(tcp::no_delay(true), ec);
      std::lock_guard<std::mutex> lock(mu);
      reap_locked();
      if (stopping.load()) {
        transport->shutdown_socket();
        return;
      }
      Live& slot = live.emplace_back();
      slot.transport = transport;
      slot.thread = std::thread([this, &slot, transport] {
        beast::error_code hs;
        transport->ws().accept(hs);
        if (!hs) {
          transport->ws().binary(true);
          try {
            handler(*transport);
          } catch (...) {
            // Per-connection failures never take the server down.
          }
          transport->close();
        }
        slot.done.store(true);
      });
    }
  }
};

WebSocketServer::WebSocketServer(const std::string& host, std::uint16_t port, Handler handler)
    : impl_(std::make_unique<Impl>()) {
  impl_->handler = std::move(handler);
  beast::error_code ec;
  auto address = asio::ip::make_address(host, ec);
  if (ec) throw BindFailure("invalid listen address '" + host + "'");
  tcp::endpoint ep(address, port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw BindFailure("cannot listen on " + host + ":" + std::to_string(port) + ": " +
                      ec.message());
  }
}

WebSocketServer::~WebSocketServer() { stop(); }

std::uint16_t WebSocketServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WebSocketServer::start() {
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void WebSocketServer::stop() {
  if (impl_->stopping.exchange(true)) {
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    return;
  }
  if (impl_->acceptor.is_open()) ::shutdown(impl_->acceptor.native_handle(), SHUT_RDWR);
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  beast::error_code ec;
  impl_->acceptor.close(ec);
  std::list<Impl::Live> remaining;
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    for (auto& slot : impl_->live) slot.transport->shutdown_socket();
    remaining.splice(remaining.end(), impl_->live);
  }
  for (auto& slot : remaining) {
    if (slot.thread.joinable()) slot.thread.join();
  }
}

}  // namespace vlaeval
