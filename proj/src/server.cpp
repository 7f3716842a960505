#include "fluororeg/server.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <optional>

#include "fluororeg/dataset.hpp"
#include "fluororeg/error.hpp"
#include "fluororeg/image.hpp"
#include "fluororeg/manifest.hpp"
#include "fluororeg/render.hpp"

// after Eigen: httplib drags in resolv.h, whose _res macro breaks Eigen headers
#include <httplib.h>
#include <json.hpp>

namespace fluororeg {

namespace {

using nlohmann::json;

struct HttpError {
  int status;
  std::string message;
};

[[noreturn]] void http_fail(int status, std::string message) { throw HttpError{status, std::move(message)}; }

json pose_json(const RigidPose& p) {
  const Quat& q = p.rotation();
  const Vec3& t = p.translation();
  return json::array({q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z()});
}

RigidPose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 7) http_fail(400, "pose must be an array of 7 numbers");
  double v[7];
  for (int i = 0; i < 7; ++i) {
    if (!j[i].is_number()) http_fail(400, "pose must be an array of 7 numbers");
    v[i] = j[i].get<double>();
    if (!std::isfinite(v[i])) http_fail(400, "pose has a non-finite field");
  }
  const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
  if (std::abs(norm - 1.0) > 1e-3) http_fail(400, "pose quaternion is not unit length");
  return RigidPose(Quat(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]));
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) http_fail(400, "body must be a JSON object");
  return body;
}

Plane plane_from(const std::string& s) {
  if (s == "a" || s == "A") return Plane::A;
  if (s == "b" || s == "B") return Plane::B;
  http_fail(404, "unknown plane '" + s + "'");
}

std::string string_field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) http_fail(400, std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

}  // namespace

struct HttpService::Impl {
  std::filesystem::path manifest_path;
  ManifestStore store;
  Dataset ds;
  httplib::Server server;

  std::mutex cache_mu;
  std::map<std::string, std::shared_ptr<const TargetPair>> targets;

  explicit Impl(const std::filesystem::path& path)
      : manifest_path(path), store(path), ds(open_dataset(store.snapshot()->header, path)) {
    routes();
  }

  TrialRecord record(const std::string& id) {
    auto snap = store.snapshot();
    const TrialRecord* r = snap->find(id);
    if (r == nullptr) http_fail(404, "unknown trial '" + id + "'");
    return *r;
  }

  std::shared_ptr<const TargetPair> targets_for(const TrialRecord& r) {
    {
      std::lock_guard lock(cache_mu);
      auto it = targets.find(r.trial_id);
      if (it != targets.end()) return it->second;
    }
    auto t = std::make_shared<const TargetPair>(load_targets(ds, r));
    std::lock_guard lock(cache_mu);
    return targets.emplace(r.trial_id, std::move(t)).first->second;
  }

  template <class F>
  auto guarded(F&& f) {
    return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        res.status = e.status;
        res.set_content(json{{"error", e.message}}.dump(), "application/json");
      } catch (const Error& e) {
        res.status = e.kind() == ErrorKind::InvalidConfig ? 400 : 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  }

  void routes() {
    server.Get("/api/trials", guarded([this](const httplib::Request&, httplib::Response& res) {
      auto snap = store.snapshot();
      json out = json::array();
      for (const TrialRecord& r : snap->records) {
        out.push_back({{"trial_id", r.trial_id}, {"activity", r.activity}, {"has_manual", r.manual_pose.has_value()}});
      }
      res.set_content(out.dump(), "application/json");
    }));

    server.Get(R"(/api/image/([^/]+)/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const TrialRecord r = record(req.matches[1]);
      const Plane plane = plane_from(req.matches[2]);
      const auto png = encode_png(load_stored_image(ds, r, plane));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Post("/api/render", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      record(string_field(body, "trial"));
      const Plane plane = plane_from(string_field(body, "plane"));
      const RigidPose pose = pose_from_json(body.value("pose", json()));
      RenderConfig cfg = ds.target_render;
      if (auto it = body.find("downscale"); it != body.end()) {
        if (!it->is_number_integer()) http_fail(400, "downscale must be an integer");
        cfg.downscale = it->get<int>();
      }
      cfg.validate();
      const auto png = encode_png(render(*ds.mesh, pose, ds.rig.camera(plane), cfg));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    server.Get(R"(/api/pose/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const TrialRecord r = record(req.matches[1]);
      json out{{"trial_id", r.trial_id}, {"target", pose_json(r.target_pose)}, {"manual_revision", r.manual_revision}};
      if (r.auto_pose) out["auto"] = pose_json(*r.auto_pose);
      if (r.manual_pose) out["manual"] = pose_json(*r.manual_pose);
      if (r.manual_ncc_a) out["manual_ncc_a"] = *r.manual_ncc_a;
      if (r.manual_ncc_b) out["manual_ncc_b"] = *r.manual_ncc_b;
      res.set_content(out.dump(), "application/json");
    }));

    server.Post(R"(/api/pose/([^/]+)/manual)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const json body = parse_body(req);
      const RigidPose pose = pose_from_json(body.value("pose", json()));
      auto number = [&](const char* key) {
        auto it = body.find(key);
        if (it == body.end() || !it->is_number()) http_fail(400, std::string("missing number '") + key + "'");
        return it->get<double>();
      };
      const double ncc_a = number("ncc_a");
      const double ncc_b = number("ncc_b");
      int expected = 0;
      if (auto it = body.find("revision"); it != body.end()) {
        if (!it->is_number_integer()) http_fail(400, "revision must be an integer");
        expected = it->get<int>();
      }
      int revision = 0;
      switch (store.commit_manual(id, pose, ncc_a, ncc_b, expected, &revision)) {
        case CommitStatus::NotFound:
          http_fail(404, "unknown trial '" + id + "'");
        case CommitStatus::Conflict:
          res.status = 409;
          res.set_content(json{{"error", "manual pose changed since revision " + std::to_string(expected)},
                               {"revision", revision}}
                              .dump(),
                          "application/json");
          return;
        case CommitStatus::Ok:
          break;
      }
      res.set_content(json{{"trial_id", id}, {"revision", revision}}.dump(), "application/json");
    }));

    server.Post("/api/ncc", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const TrialRecord r = record(string_field(body, "trial"));
      const Plane plane = plane_from(string_field(body, "plane"));
      const RigidPose pose = pose_from_json(body.value("pose", json()));
      const auto tp = targets_for(r);
      const GrayImage img = render(*ds.mesh, pose, ds.rig.camera(plane), ds.target_render);
      json out;
      try {
        out["ncc"] = ncc(img, (*tp)[plane]);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ConstantImage) throw;
        out["ncc"] = nullptr;  // render left the field of view
      }
      res.set_content(out.dump(), "application/json");
    }));
  }
};

HttpService::HttpService(const std::filesystem::path& manifest_path)
    : impl_(std::make_unique<Impl>(manifest_path)) {}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpService::listen() { return impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

ManifestStore& HttpService::store() { return impl_->store; }

}  // namespace fluororeg
