#include "storyloom/errors.hpp"
#include "storyloom/service.hpp"

#include "http_harness.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <future>
#include <set>

using namespace storyloom;
using namespace storyloom::testing;

namespace {

ServiceOptions fixed_options() {
  ServiceOptions o;
  o.clock = fixed_clock();
  o.ids = sequential_id_generator("s");
  return o;
}

nlohmann::json body_of(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

}  // namespace

TEST(Service, EndpointsEndToEnd) {
  GateGateway g;
  ServiceHarness h({load_fixture("two_level"), load_fixture("minimal")}, g, scratch_dir("e2e"), fixed_options());

  auto created = h.post("/api/sessions", {{"corpus_id", "two-level"}});
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  auto c = body_of(created);
  const std::string id = c["session_id"];
  EXPECT_EQ(c["corpus_id"], "two-level");
  EXPECT_EQ(c["goal_text"], "Learn about the flood.");
  EXPECT_EQ(c["history"].size(), 1u);
  EXPECT_EQ(c["corpus_hash"], load_fixture("two_level")->content_hash);

  auto defaulted = h.post("/api/sessions", nlohmann::json::object());
  ASSERT_EQ(defaulted->status, 201);
  EXPECT_EQ(body_of(defaulted)["corpus_id"], "two-level");
  EXPECT_EQ(h.post("/api/sessions", {{"corpus_id", "nope"}})->status, 404);

  auto msg = h.post("/api/sessions/" + id + "/messages", {{"text", "what about a boat"}});
  ASSERT_EQ(msg->status, 200);
  auto o = body_of(msg);
  EXPECT_EQ(o["npc_reply"], "I hear you.");
  EXPECT_EQ(o["newly_fired"], nlohmann::json::array({"t-boat"}));
  EXPECT_TRUE(o["transition"].is_null());

  EXPECT_EQ(h.post("/api/sessions/" + id + "/messages", {{"text", "  "}})->status, 400);
  EXPECT_EQ(h.post("/api/sessions/" + id + "/messages", {{"words", "x"}})->status, 400);
  EXPECT_EQ(h.client().Post("/api/sessions/" + id + "/messages", "{oops", "application/json")->status, 400);
  EXPECT_EQ(h.post("/api/sessions/missing/messages", {{"text", "x"}})->status, 404);

  auto view = h.get("/api/sessions/" + id);
  ASSERT_EQ(view->status, 200);
  auto v = body_of(view);
  EXPECT_EQ(v["status"], "active");
  EXPECT_EQ(v["current_level"], 0);
  EXPECT_EQ(v["level_count"], 2);
  EXPECT_EQ(v["history"].size(), 3u);
  EXPECT_EQ(h.get("/api/sessions/missing")->status, 404);

  auto feed = h.get("/api/sessions/" + id + "/feed");
  ASSERT_EQ(feed->status, 200);
  auto f = body_of(feed);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0]["media_id"], "m-boat");
  EXPECT_EQ(f[0]["asset_url"], "/assets/boat.png");

  auto asset = h.get("/assets/boat.png");
  ASSERT_EQ(asset->status, 200);
  EXPECT_EQ(asset->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(asset->body, read_text(source_path("tests/fixtures/corpora/boat.png")));
  EXPECT_EQ(h.get("/assets/../CMakeLists.txt")->status, 404);
  EXPECT_EQ(h.get("/assets/minimal.yaml")->status, 404);

  auto health = h.get("/healthz");
  ASSERT_EQ(health->status, 200);
  auto hz = body_of(health);
  EXPECT_EQ(hz["status"], "ok");
  EXPECT_EQ(hz["corpus_hash"], load_fixture("two_level")->content_hash);
  EXPECT_EQ(hz["corpora"]["minimal"], load_fixture("minimal")->content_hash);

  auto ab = h.post("/api/sessions/" + id + "/abandon", nlohmann::json::object());
  ASSERT_EQ(ab->status, 200);
  EXPECT_EQ(body_of(ab)["status"], "abandoned");
  EXPECT_EQ(h.post("/api/sessions/" + id + "/abandon", nlohmann::json::object())->status, 409);
  auto after = h.post("/api/sessions/" + id + "/messages", {{"text", "hello"}});
  EXPECT_EQ(after->status, 409);
  EXPECT_EQ(body_of(after)["error"], "session_not_active");
  std::filesystem::remove_all(h.dir);
}

TEST(Service, DoublePostConflicts) {
  GateGateway g;
  ServiceHarness h({load_fixture("two_level")}, g, scratch_dir("conflict"), fixed_options());
  const std::string id = body_of(h.post("/api/sessions", nlohmann::json::object()))["session_id"];
  g.hold();
  auto first = std::async(std::launch::async, [&] { return h.post("/api/sessions/" + id + "/messages", {{"text", "rain"}}); });
  g.wait_for_waiter();
  auto second = h.post("/api/sessions/" + id + "/messages", {{"text", "river bank"}});
  ASSERT_TRUE(second);
  EXPECT_EQ(second->status, 409);
  EXPECT_EQ(body_of(second)["error"], "conflict");
  g.release();
  auto r = first.get();
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(h.service->get_session(id).history.size(), 3u);
  std::filesystem::remove_all(h.dir);
}

TEST(Service, ConcurrentCreations) {
  GateGateway g;
  ServiceOptions o;
  ServiceHarness h({load_fixture("two_level")}, g, scratch_dir("many"), o);
  std::vector<std::future<std::string>> futures;
  for (int i = 0; i < 100; ++i) {
    futures.push_back(std::async(std::launch::async, [&] {
      auto r = h.post("/api/sessions", nlohmann::json::object());
      if (!r || r->status != 201) return std::string();
      return body_of(r)["session_id"].get<std::string>();
    }));
  }
  std::set<std::string> ids;
  for (auto& f : futures) ids.insert(f.get());
  EXPECT_EQ(ids.size(), 100u);
  EXPECT_FALSE(ids.contains(""));
  EXPECT_EQ(h.store->size(), 100u);
  std::filesystem::remove_all(h.dir);
}

TEST(Service, UpstreamFailureLeavesDocumentUntouched) {
  GateGateway g;
  ServiceHarness h({load_fixture("two_level")}, g, scratch_dir("down"), fixed_options());
  const std::string id = body_of(h.post("/api/sessions", nlohmann::json::object()))["session_id"];
  const auto before = read_text(h.store->document_path(id));
  g.reply = [](const PromptBundle&) -> std::string { throw GatewayExhausted("down"); };
  auto r = h.post("/api/sessions/" + id + "/messages", {{"text", "rain by the river bank"}});
  ASSERT_EQ(r->status, 503);
  EXPECT_EQ(body_of(r)["error"], "upstream_unavailable");
  EXPECT_EQ(read_text(h.store->document_path(id)), before);
  g.reply = [](const PromptBundle&) { return std::string("back"); };
  EXPECT_EQ(h.post("/api/sessions/" + id + "/messages", {{"text", "rain by the river bank"}})->status, 200);
  std::filesystem::remove_all(h.dir);
}

TEST(Service, FeedNewestFirst) {
  GateGateway g;
  auto dir = scratch_dir("feed");
  SessionStore store(dir);
  GameService svc({load_fixture("two_level")}, g, store, fixed_options());
  auto s = svc.create_session("two-level");
  EXPECT_TRUE(svc.get_feed(s.session_id).empty());
  svc.post_message(s.session_id, "a boat");
  svc.post_message(s.session_id, "rain by the river bank");
  auto feed = svc.get_feed(s.session_id);
  ASSERT_EQ(feed.size(), 2u);
  EXPECT_EQ(feed[0].media_id, "m-valley");
  EXPECT_EQ(feed[1].media_id, "m-boat");
  EXPECT_GT(feed[0].unlocked_at, feed[1].unlocked_at);
  EXPECT_EQ(feed_to_json(feed)[0]["caption"], "the valley before.");
  std::filesystem::remove_all(dir);
}

TEST(Service, FeedTiesKeepCorpusOrder) {
  auto c = load_fixture("two_level");
  auto s = new_session(*c, "x", fixed_clock());
  const auto t = s.created_at;
  s.fired.insert("t-boat");
  s.history.push_back({TurnRole::Player, "boat", 0, {"t-boat"}, t, {}});
  s.history.push_back({TurnRole::Cutscene, "cut", 0, {}, t, {"m-valley"}});
  auto feed = feed_entries(*c, s);
  ASSERT_EQ(feed.size(), 2u);
  EXPECT_EQ(feed[0].media_id, "m-valley");
  EXPECT_EQ(feed[1].media_id, "m-boat");
}

TEST(Service, AbandonedSessionSurvivesRestart) {
  GateGateway g;
  auto dir = scratch_dir("restart");
  std::string id;
  {
    SessionStore store(dir);
    GameService svc({load_fixture("two_level")}, g, store, fixed_options());
    id = svc.create_session("two-level").session_id;
    svc.post_message(id, "boat");
    svc.abandon(id);
  }
  SessionStore store(dir);
  GameService svc({load_fixture("two_level")}, g, store, fixed_options());
  auto s = svc.get_session(id);
  EXPECT_EQ(s.status, SessionStatus::Abandoned);
  EXPECT_EQ(s.history.size(), 3u);
  EXPECT_THROW(svc.post_message(id, "hello"), SessionNotActive);
  EXPECT_THROW(svc.abandon(id), SessionNotActive);
  std::filesystem::remove_all(dir);
}

TEST(Service, UnloadedCorpusVersionIsRejected) {
  GateGateway g;
  auto dir = scratch_dir("mismatch");
  std::string id;
  {
    SessionStore store(dir);
    GameService svc({load_fixture("two_level")}, g, store, fixed_options());
    id = svc.create_session("two-level").session_id;
  }
  SessionStore store(dir);
  GameService svc({load_fixture("minimal")}, g, store, fixed_options());
  EXPECT_THROW(svc.post_message(id, "hello"), CorpusMismatch);
  std::filesystem::remove_all(dir);
}

TEST(Service, CorsHeadersWhenConfigured) {
  GateGateway g;
  ServiceHarness h({load_fixture("minimal")}, g, scratch_dir("cors"), fixed_options(), "http://localhost:5173");
  auto r = h.get("/healthz");
  EXPECT_EQ(r->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  auto pre = h.client().Options("/api/sessions");
  EXPECT_EQ(pre->status, 204);
  std::filesystem::remove_all(h.dir);
}
