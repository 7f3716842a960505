#include <doctest.h>

#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "fluororeg/cli.hpp"
#include "fluororeg/manifest.hpp"
#include "fluororeg/server.hpp"
#include "support/checks.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace fluororeg;
using nlohmann::json;

namespace {

json pose_array(const RigidPose& p) {
  const Quat& q = p.rotation();
  const Vec3& t = p.translation();
  return json::array({q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()});
}

// Synthesized two-frame data set served on an ephemeral port.
struct Fixture {
  checks::TempDir dir{"server"};
  std::unique_ptr<HttpService> service;
  std::thread thread;
  int port = -1;

  Fixture() {
    std::ostringstream out, err;
    const int rc = cli_main({"synth", "--activity", "chair_sit", "--frames", "2", "--seed", "3", "--downscale", "8",
                             "--out-dir", dir.path().string()},
                            out, err);
    REQUIRE_MESSAGE(rc == 0, err.str());
    service = std::make_unique<HttpService>(dir.path() / "manifest.jsonl");
    port = service->bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { service->listen(); });
  }
  ~Fixture() {
    service->stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
  Manifest manifest() const { return read_manifest(dir.path() / "manifest.jsonl"); }
};

bool is_png(const std::string& body) { return body.size() > 8 && body.compare(1, 3, "PNG") == 0; }

}  // namespace

TEST_CASE("endpoints") {
  Fixture fx;
  auto cli = fx.client();
  const Manifest m = fx.manifest();
  REQUIRE(m.records.size() == 2);
  const TrialRecord& rec = m.records[0];

  auto res = cli.Get("/api/trials");
  REQUIRE(res);
  CHECK(res->status == 200);
  const json trials = json::parse(res->body);
  REQUIRE(trials.size() == 2);
  CHECK(trials[0]["trial_id"] == rec.trial_id);
  CHECK(trials[0]["activity"] == "chair_sit");
  CHECK(trials[0]["has_manual"] == false);

  for (const char* plane : {"a", "b"}) {
    res = cli.Get("/api/image/" + rec.trial_id + "/" + plane);
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(is_png(res->body));
  }

  res = cli.Get("/api/pose/" + rec.trial_id);
  REQUIRE(res);
  CHECK(res->status == 200);
  const json pose = json::parse(res->body);
  CHECK(pose["target"].size() == 7);
  CHECK(pose["manual_revision"] == 0);
  CHECK_FALSE(pose.contains("manual"));

  json body{{"trial", rec.trial_id}, {"plane", "a"}, {"pose", pose_array(rec.true_pose)}};
  res = cli.Post("/api/render", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(is_png(res->body));

  // the true pose reproduces the stored targets
  for (const char* plane : {"a", "b"}) {
    body["plane"] = plane;
    res = cli.Post("/api/ncc", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    CHECK(json::parse(res->body)["ncc"].get<double>() >= 0.999);
  }
  // out of frame gives null
  body["plane"] = "a";
  body["pose"] = pose_array(RigidPose(rec.true_pose.rotation(), Vec3(5000, 0, 0)));
  res = cli.Post("/api/ncc", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["ncc"].is_null());

  json commit{{"pose", pose_array(rec.true_pose)}, {"ncc_a", 0.9995}, {"ncc_b", 0.9991}, {"revision", 0}};
  res = cli.Post("/api/pose/" + rec.trial_id + "/manual", commit.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["revision"] == 1);
  res = cli.Get("/api/pose/" + rec.trial_id);
  REQUIRE(res);
  const json after = json::parse(res->body);
  CHECK(after["manual"].size() == 7);
  CHECK(after["manual_revision"] == 1);
  CHECK(after["manual_ncc_a"] == 0.9995);
  const TrialRecord* stored = fx.manifest().find(rec.trial_id);
  REQUIRE(stored != nullptr);
  REQUIRE(stored->manual_pose.has_value());
  CHECK(format_pose(*stored->manual_pose) == format_pose(rec.true_pose));
  res = cli.Get("/api/trials");
  REQUIRE(res);
  CHECK(json::parse(res->body)[0]["has_manual"] == true);
}

TEST_CASE("bad requests") {
  Fixture fx;
  auto cli = fx.client();
  const std::string id = fx.manifest().records[0].trial_id;
  const json good = pose_array(fx.manifest().records[0].true_pose);

  auto status = [](const httplib::Result& r) { return r ? r->status : -1; };
  CHECK(status(cli.Get("/api/pose/nope")) == 404);
  CHECK(status(cli.Get("/api/image/nope/a")) == 404);
  CHECK(status(cli.Get("/api/image/" + id + "/c")) == 404);
  CHECK(status(cli.Get("/api/unknown")) == 404);
  CHECK(status(cli.Post("/api/ncc", "not json", "application/json")) == 400);
  CHECK(status(cli.Post("/api/ncc", json{{"trial", id}, {"plane", "a"}}.dump(), "application/json")) == 400);
  CHECK(status(cli.Post("/api/ncc", json{{"trial", id}, {"plane", "a"}, {"pose", {1, 0, 0}}}.dump(),
                        "application/json")) == 400);
  CHECK(status(cli.Post("/api/ncc", json{{"trial", id}, {"plane", "a"}, {"pose", {2, 0, 0, 0, 0, 0, 0}}}.dump(),
                        "application/json")) == 400);
  CHECK(status(cli.Post("/api/ncc", json{{"trial", "nope"}, {"plane", "a"}, {"pose", good}}.dump(),
                        "application/json")) == 404);
  CHECK(status(cli.Post("/api/render", json{{"trial", id}, {"plane", "a"}, {"pose", good}, {"downscale", 0}}.dump(),
                        "application/json")) == 400);
  CHECK(status(cli.Post("/api/pose/" + id + "/manual", json{{"pose", good}}.dump(), "application/json")) == 400);
  CHECK(status(cli.Post("/api/pose/nope/manual", json{{"pose", good}, {"ncc_a", 1}, {"ncc_b", 1}}.dump(),
                        "application/json")) == 404);
}

TEST_CASE("concurrent commits on the same revision") {
  Fixture fx;
  const TrialRecord rec = fx.manifest().records[1];
  std::atomic<int> ok{0}, conflict{0}, other{0};
  auto commit = [&](double tx) {
    auto cli = fx.client();
    const RigidPose p(rec.true_pose.rotation(), rec.true_pose.translation() + Vec3(tx, 0, 0));
    const json body{{"pose", pose_array(p)}, {"ncc_a", 0.99}, {"ncc_b", 0.99}, {"revision", 0}};
    const auto res = cli.Post("/api/pose/" + rec.trial_id + "/manual", body.dump(), "application/json");
    if (res && res->status == 200) {
      ++ok;
    } else if (res && res->status == 409) {
      ++conflict;
    } else {
      ++other;
    }
  };
  std::thread t1(commit, 1.0), t2(commit, -1.0);
  t1.join();
  t2.join();
  CHECK(ok == 1);
  CHECK(conflict == 1);
  CHECK(other == 0);
  const TrialRecord* stored = fx.manifest().find(rec.trial_id);
  REQUIRE(stored != nullptr);
  CHECK(stored->manual_revision == 1);
  REQUIRE(stored->manual_pose.has_value());
  CHECK(std::abs(std::abs(stored->manual_pose->translation().x() - rec.true_pose.translation().x()) - 1.0) < 1e-9);
}
