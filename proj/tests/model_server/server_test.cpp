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

#include <gtest/gtest.h>

#include <thread>

#include "vlaeval/model_server.hpp"
#include "vlaeval/msgpack.hpp"

namespace vlaeval {
namespace {

using namespace std::chrono_literals;

ModelServerConfig base_config() {
  ModelServerConfig c;
  c.chunk_horizon = 4;
  c.action_dim = 7;
  c.port = 0;
  c.max_wait_ms = 1.0;
  return c;
}

Value::Object obs_payload(double dx) {
  ObservationPayload obs;
  obs.states = {dx, 0, 0, 0, 0, 0};
  obs.task_description = "reach";
  return observation_to_payload(obs);
}

Value::Object start_payload(const std::string& id) {
  return Value::Object{{"episode_id", Value(id)}, {"task_id", Value("t")}, {"task_description", Value("reach")},
                       {"seed", Value(0)}};
}

// Step-indexed constant chunks: row i of the chunk issued at step s is s.
class StepPolicy : public Policy {
 public:
  using Policy::Policy;
  std::string_view name() const override { return "step"; }
  ActionChunk predict(const ObservationPayload&, const PredictContext& ctx) override {
    std::vector<double> a(action_dim_, double(ctx.step_index));
    return ActionChunk::repeat(a, horizon_, ctx.step_index);
  }
};

class FailingPolicy : public Policy {
 public:
  using Policy::Policy;
  std::string_view name() const override { return "failing"; }
  ActionChunk predict(const ObservationPayload&, const PredictContext&) override { throw ModelFailure("boom"); }
};

TEST(ModelServerConfigTest, JsonRoundTrip) {
  ModelServerConfig c = base_config();
  c.policy = {"constant", {{"action", {1, 2, 3, 4, 5, 6, 7}}}};
  c.ensemble = EnsembleStrategy::average();
  c.replan_interval = 2;
  c.max_batch_size = 16;
  c.latency = {4.0, 0.5};
  auto back = model_server_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(ModelServerConfigTest, DefaultsAndValidation) {
  auto c = model_server_config_from_json(Json::object());
  EXPECT_EQ(c.chunk_horizon, 8u);
  EXPECT_EQ(c.ensemble.kind, EnsembleKind::kEma);
  EXPECT_DOUBLE_EQ(c.ensemble.alpha, 0.5);
  EXPECT_EQ(c.replan_interval, 1u);
  EXPECT_EQ(c.max_batch_size, 1u);
  EXPECT_DOUBLE_EQ(c.max_wait_ms, 5.0);
  EXPECT_THROW(model_server_config_from_json({{"replan_interval", 9}}), SchemaViolation);
  EXPECT_THROW(model_server_config_from_json({{"ensemble", {{"kind", "median"}}}}), SchemaViolation);
  EXPECT_THROW(model_server_config_from_json({{"max_batch_size", 0}}), SchemaViolation);
  EXPECT_THROW(model_server_config_from_json({{"colour", "red"}}), SchemaViolation);
  try {
    model_server_config_from_json({{"policy", {{"name", "proportional"}, {"params", {{"gain", 2}}}}}});
    FAIL();
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.path(), "policy.params.gain");
  }
}

TEST(ModelSessionTest, HandshakeReply) {
  ModelServer server(base_config());
  Connection conn(std::make_unique<LoopbackTransport>(server));
  Message reply = conn.handshake("runner", 1s);
  EXPECT_EQ(reply.type, MessageType::kHandshake);
  EXPECT_EQ(reply.payload.at(0).second.as_int(), kProtocolVersion);
  EXPECT_EQ(find_key(reply.payload, "chunk_horizon")->as_int(), 4);
}

TEST(ModelSessionTest, VersionMismatchIsReportedAndClosed) {
  ModelServer server(base_config());
  Connection conn(std::make_unique<LoopbackTransport>(server));
  conn.send(MessageType::kHandshake, {{"protocol_version", Value(2)}, {"role", Value("runner")}});
  Message m = conn.receive(1s);
  EXPECT_EQ(m.type, MessageType::kError);
  EXPECT_EQ(find_key(m.payload, "kind")->as_string(), "version_mismatch");
  EXPECT_THROW(conn.send(MessageType::kObservation, obs_payload(0)), ConnectionClosed);
}

TEST(ModelSessionTest, ObservationBeforeHandshakeIsProtocolError) {
  ModelServer server(base_config());
  Connection conn(std::make_unique<LoopbackTransport>(server));
  conn.send(MessageType::kObservation, obs_payload(0));
  Message m = conn.receive(1s);
  EXPECT_EQ(find_key(m.payload, "kind")->as_string(), "protocol_error");
}

TEST(ModelSessionTest, SequenceGapIsProtocolError) {
  ModelServer server(base_config());
  LoopbackTransport t(server);
  Message hs{MessageType::kHandshake, handshake_payload("runner"), 0, 0.0};
  t.send_frame(encode_message(hs));
  t.receive_frame(1s);
  Message obs{MessageType::kObservation, obs_payload(0), 5, 0.0};
  t.send_frame(encode_message(obs));
  Message m = decode_message(t.receive_frame(1s));
  EXPECT_EQ(find_key(m.payload, "kind")->as_string(), "protocol_error");
}

TEST(ModelSessionTest, ProportionalActionsOverLoopback) {
  ModelServerConfig c = base_config();
  c.policy = {"proportional", {{"gain", 0.5}}};
  c.ensemble = EnsembleStrategy::newest();
  ModelServer server(c);
  Connection conn(std::make_unique<LoopbackTransport>(server));
  conn.handshake("runner", 1s);
  conn.send(MessageType::kEpisodeStart, start_payload("e#0"));
  conn.send(MessageType::kObservation, obs_payload(1.0));
  Message m = conn.receive(1s);
  ASSERT_EQ(m.type, MessageType::kAction);
  auto a = action_from_payload(m.payload);
  ASSERT_EQ(a.size(), 7u);
  EXPECT_DOUBLE_EQ(a[0], 0.5);
}

TEST(ModelSessionTest, EnsemblesOverlappingChunks) {
  ModelServerConfig c = base_config();
  c.ensemble = EnsembleStrategy::average();
  ModelServer server(c, std::make_unique<StepPolicy>(4, 7));
  ModelSession session(server);
  session.handle({MessageType::kHandshake, handshake_payload("runner"), 0, 0});
  session.handle({MessageType::kEpisodeStart, start_payload("e"), 1, 0});
  std::vector<double> got;
  for (int s = 0; s < 6; ++s) {
    auto r = session.handle({MessageType::kObservation, obs_payload(0), std::uint64_t(2 + s), 0});
    ASSERT_EQ(r.size(), 1u);
    got.push_back(action_from_payload(r[0].second)[0]);
  }
  // Step s averages the chunks issued at max(0, s-3) .. s.
  EXPECT_EQ(got, (std::vector<double>{0, 0.5, 1, 1.5, 2.5, 3.5}));
}

TEST(ModelSessionTest, EpisodeStartClearsBuffer) {
  ModelServerConfig c = base_config();
  c.ensemble = EnsembleStrategy::average();
  ModelServer server(c, std::make_unique<StepPolicy>(4, 7));
  ModelSession session(server);
  std::uint64_t seq = 0;
  session.handle({MessageType::kHandshake, handshake_payload("runner"), seq++, 0});
  session.handle({MessageType::kEpisodeStart, start_payload("a"), seq++, 0});
  for (int s = 0; s < 3; ++s) session.handle({MessageType::kObservation, obs_payload(0), seq++, 0});
  EXPECT_EQ(session.buffer().size(), 3u);
  session.handle({MessageType::kEpisodeStart, start_payload("b"), seq++, 0});
  EXPECT_EQ(session.buffer().size(), 0u);
  EXPECT_EQ(session.context().episode_id, "b");
  auto r = session.handle({MessageType::kObservation, obs_payload(0), seq++, 0});
  EXPECT_EQ(action_from_payload(r[0].second)[0], 0.0);
  EXPECT_EQ(session.buffer().size(), 1u);
}

TEST(ModelSessionTest, ReplanIntervalReusesChunk) {
  ModelServerConfig c = base_config();
  c.replan_interval = 4;
  c.ensemble = EnsembleStrategy::newest();
  ModelServer server(c, std::make_unique<StepPolicy>(4, 7));
  ModelSession session(server);
  std::uint64_t seq = 0;
  session.handle({MessageType::kHandshake, handshake_payload("runner"), seq++, 0});
  session.handle({MessageType::kEpisodeStart, start_payload("a"), seq++, 0});
  std::vector<double> got;
  for (int s = 0; s < 8; ++s) {
    auto r = session.handle({MessageType::kObservation, obs_payload(0), seq++, 0});
    got.push_back(action_from_payload(r[0].second)[0]);
  }
  EXPECT_EQ(got, (std::vector<double>{0, 0, 0, 0, 4, 4, 4, 4}));
  EXPECT_EQ(server.stats().requests_completed, 2u);
}

TEST(ModelSessionTest, ModelFailureIsModelError) {
  ModelServer server(base_config(), std::make_unique<FailingPolicy>(4, 7));
  Connection conn(std::make_unique<LoopbackTransport>(server));
  conn.handshake("runner", 1s);
  conn.send(MessageType::kEpisodeStart, start_payload("e"));
  conn.send(MessageType::kObservation, obs_payload(0));
  Message m = conn.receive(1s);
  EXPECT_EQ(m.type, MessageType::kError);
  EXPECT_EQ(find_key(m.payload, "kind")->as_string(), "model_error");
  EXPECT_EQ(find_key(m.payload, "message")->as_string(), "boom");
}

TEST(ModelServerTest, SubmittedBatchesMatchSequential) {
  ModelServerConfig c = base_config();
  c.max_batch_size = 16;
  c.max_wait_ms = 50.0;
  c.policy = {"proportional", Json::object()};
  ModelServer server(c);
  std::vector<PredictRequest> reqs;
  for (int i = 0; i < 20; ++i) {
    ObservationPayload obs;
    obs.states = {0.01 * i, -0.02 * i, 0.5, 0, 0, 0};
    reqs.push_back({obs, {"e" + std::to_string(i), std::uint64_t(i), "t"}});
  }
  std::vector<std::future<PredictOutcome>> futures;
  for (const auto& r : reqs) futures.push_back(server.submit(r));
  auto direct = server.predict_batch(reqs);
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    auto out = futures[i].get();
    ASSERT_TRUE(out.ok());
    EXPECT_EQ(*out.chunk, *direct[i].chunk);
  }
  auto stats = server.stats();
  EXPECT_EQ(stats.batch_sizes[16], 1u);
  EXPECT_EQ(stats.batch_sizes[4], 1u);
}

TEST(ModelServerTest, LatencyModelIsApplied) {
  ModelServerConfig c = base_config();
  c.latency = {20.0, 5.0};
  ModelServer server(c);
  std::vector<PredictRequest> reqs(2, PredictRequest{{{}, {0, 0, 0}, ""}, {}});
  const auto t0 = std::chrono::steady_clock::now();
  server.predict_batch(reqs);
  EXPECT_GE(std::chrono::steady_clock::now() - t0, 30ms);
}

TEST(ModelServerTest, ShutdownAnswersQueuedRequests) {
  ModelServerConfig c = base_config();
  c.latency = {5.0, 0.0};
  ModelServer server(c);
  std::vector<std::future<PredictOutcome>> futures;
  for (int i = 0; i < 5; ++i) futures.push_back(server.submit({{{}, {0, 0, 0}, ""}, {}}));
  server.shutdown();
  for (auto& f : futures) EXPECT_TRUE(f.get().ok());
  EXPECT_FALSE(server.submit({{{}, {0, 0, 0}, ""}, {}}).get().ok());
}

TEST(ServeTest, HandshakeOverWebSocket) {
  ServerHandle handle(base_config());
  Connection conn(connect_websocket(handle.endpoint()));
  Message reply = conn.handshake("runner", 2s);
  EXPECT_EQ(find_key(reply.payload, "protocol_version")->as_int(), kProtocolVersion);
  EXPECT_EQ(find_key(reply.payload, "role")->as_string(), "model");
}

TEST(ServeTest, ConcurrentConnectionsAreIndependent) {
  ModelServerConfig c = base_config();
  c.max_batch_size = 2;
  c.ensemble = EnsembleStrategy::average();
  ServerHandle handle(c, std::make_unique<StepPolicy>(4, 7));
  auto run = [&](int steps, std::vector<double>& out) {
    Connection conn(connect_websocket(handle.endpoint()));
    conn.handshake("runner", 2s);
    conn.send(MessageType::kEpisodeStart, start_payload("x"));
    for (int s = 0; s < steps; ++s) {
      conn.send(MessageType::kObservation, obs_payload(0));
      Message m = conn.receive(5s);
      out.push_back(action_from_payload(m.payload)[0]);
    }
    conn.close();
  };
  std::vector<double> a, b;
  std::thread ta([&] { run(6, a); });
  std::thread tb([&] { run(3, b); });
  ta.join();
  tb.join();
  EXPECT_EQ(a, (std::vector<double>{0, 0.5, 1, 1.5, 2.5, 3.5}));
  EXPECT_EQ(b, (std::vector<double>{0, 0.5, 1}));
}

TEST(ServeTest, BadConnectionDoesNotAffectOthers) {
  ServerHandle handle(base_config());
  auto bad = connect_websocket(handle.endpoint());
  const Bytes junk{0xc1, 0x00};
  bad->send_frame(junk);
  Message err = decode_message(bad->receive_frame(Millis(2000)));
  EXPECT_EQ(find_key(err.payload, "kind")->as_string(), "protocol_error");

  Connection good(connect_websocket(handle.endpoint()));
  good.handshake("runner", 2s);
  good.send(MessageType::kEpisodeStart, start_payload("g"));
  good.send(MessageType::kObservation, obs_payload(0.2));
  EXPECT_EQ(good.receive(2s).type, MessageType::kAction);
}

TEST(ServeTest, BindFailureOnBusyPort) {
  ServerHandle first(base_config());
  ModelServerConfig c = base_config();
  c.port = first.port();
  EXPECT_THROW(ServerHandle second(c), BindFailure);
}

}  // namespace
}  // namespace vlaeval
