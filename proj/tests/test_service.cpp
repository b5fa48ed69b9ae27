// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "foldlab/config.hpp"
#include "foldlab/modal.hpp"
#include "foldlab/service.hpp"
#include "foldlab/strain_space.hpp"

using namespace foldlab;
using nlohmann::json;

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;

ServiceOptions one_worker() {
  ServiceOptions o;
  o.port = 0;
  o.workers = 1;
  return o;
}

json body(const HttpReply& r) { return json::parse(r.body); }

std::string submit_fold(DesignService& svc, const std::string& scene, const std::string& request) {
  const HttpReply r = svc.handle("POST", "/api/scenes/" + scene + "/fold", request);
  REQUIRE(r.status == 202);
  return body(r)["job"].get<std::string>();
}

Trajectory hinge_fold(int steps) {
  const Scene sc = make_scene("hinge");
  const ShellModel model = build_model(sc.mesh, sc.config);
  const ModeSet modes = rest_modes(model, 1);
  FoldOptions o;
  o.steps = steps;
  o.solver = sc.config.solver;
  return fold_mode(model, modes, 0, o);
}

double max_diff(const json& positions, const State& x) {
  REQUIRE(static_cast<Eigen::Index>(positions.size()) == x.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) d = std::max(d, std::abs(positions[i].get<double>() - x[i]));
  return d;
}

}  // namespace

TEST_CASE("service: health, scenes, mesh and modes") {
  DesignService svc(one_worker());
  CHECK(body(svc.handle("GET", "/api/health", ""))["status"] == "ok");

  const json scenes = body(svc.handle("GET", "/api/scenes", ""));
  REQUIRE(scenes.size() == scene_names().size());
  CHECK(scenes[0]["name"] == "hinge");
  CHECK(scenes[0]["vertices"] == 4);

  const json mesh = body(svc.handle("GET", "/api/scenes/hinge/mesh", ""));
  CHECK(mesh["positions"].size() == 12);
  CHECK(mesh["indices"].size() == 6);
  CHECK(mesh["hinges"] == 1);
  CHECK(mesh["fingerprint"] == make_scene("hinge").mesh->fingerprint());

  const json modes = body(svc.handle("GET", "/api/scenes/hinge/modes?count=3", ""));
  CHECK(modes["count"] == 3);
  REQUIRE(modes["eigenvalues"].size() == 3);
  CHECK(modes["eigenvalues"][0].get<double>() <= modes["eigenvalues"][1].get<double>());
  CHECK(body(svc.handle("GET", "/api/scenes/hinge/modes?count=0", ""))["eigenvalues"].empty());

  CHECK(svc.handle("GET", "/api/scenes/hinge/modes?count=13", "").status == 422);
  CHECK(svc.handle("GET", "/api/scenes/hinge/modes?count=-1", "").status == 422);
  CHECK(svc.handle("GET", "/api/scenes/hinge/modes?count=x", "").status == 400);
  CHECK(svc.handle("GET", "/api/scenes/cube/mesh", "").status == 404);
  CHECK(svc.handle("GET", "/api/jobs/999", "").status == 404);
  CHECK(svc.handle("GET", "/api/sessions/999", "").status == 404);
  CHECK(svc.handle("GET", "/api/nothing", "").status == 404);
  const HttpReply err = svc.handle("GET", "/api/scenes/cube/mesh", "");
  CHECK(body(err)["error"].get<std::string>().find("cube") != std::string::npos);
}

TEST_CASE("service: fold job frames equal the library trajectory") {
  DesignService svc(one_worker());
  CHECK(svc.handle("POST", "/api/scenes/hinge/fold", "{}").status == 400);
  CHECK(svc.handle("POST", "/api/scenes/hinge/fold", "{bad").status == 400);
  CHECK(svc.handle("POST", "/api/scenes/hinge/fold", R"({"mode": 12})").status == 422);
  CHECK(svc.handle("POST", "/api/scenes/hinge/fold", R"({"mode": 0, "steps": 0})").status == 422);
  CHECK(svc.handle("POST", "/api/scenes/hinge/fold", R"({"mode": 0, "tmax": -1})").status == 422);
  CHECK(svc.handle("POST", "/api/scenes/cube/fold", R"({"mode": 0})").status == 404);

  const std::string id = submit_fold(svc, "hinge", R"({"mode": 0, "steps": 3})");
  REQUIRE(svc.wait_for_job(id, 60.0));
  const json job = body(svc.handle("GET", "/api/jobs/" + id, ""));
  CHECK(job["status"] == "done");
  CHECK(job["frames_ready"] == 4);
  const Trajectory tr = hinge_fold(3);
  REQUIRE(tr.complete());
  for (int k = 0; k < 4; ++k) {
    const json f = body(svc.handle("GET", "/api/jobs/" + id + "/frames/" + std::to_string(k), ""));
    CHECK(f["step"] == k);
    CHECK(f["t"].get<double>() == doctest::Approx(tr.steps[k].t).epsilon(1e-12));
    CHECK(max_diff(f["positions"], tr.steps[k].x) < 1e-8);
  }
  CHECK(svc.handle("GET", "/api/jobs/" + id + "/frames/4", "").status == 404);
  CHECK(!svc.wait_for_job("999", 0.01));
}

TEST_CASE("service: design sessions relax toward spring pairs") {
  DesignService svc(one_worker());
  const std::string id = submit_fold(svc, "hinge", R"({"mode": 0, "steps": 2})");
  REQUIRE(svc.wait_for_job(id, 60.0));

  CHECK(svc.handle("POST", "/api/sessions", "{}").status == 400);
  CHECK(svc.handle("POST", "/api/sessions", R"({"scene": "cube"})").status == 404);
  CHECK(svc.handle("POST", "/api/sessions", R"({"scene": "hinge", "start": "middle"})").status == 422);
  CHECK(svc.handle("POST", "/api/sessions", R"({"scene": "hinge", "frame": {"positions": [1, 2]}})").status == 422);
  CHECK(svc.handle("POST", "/api/sessions", R"({"scene": "hinge", "frame": {"job": "999"}})").status == 404);

  const HttpReply created =
      svc.handle("POST", "/api/sessions", json{{"scene", "hinge"}, {"frame", {{"job", id}}}}.dump());
  REQUIRE(created.status == 201);
  const json s0 = body(created);
  const std::string sid = s0["id"];
  const Trajectory tr = hinge_fold(2);
  const State rest = make_scene("hinge").mesh->rest_state();
  const double rest_rms = std::sqrt((rest - tr.steps.back().x).squaredNorm() / 4);
  CHECK(s0["deviation"].get<double>() == doctest::Approx(rest_rms).epsilon(1e-9));
  CHECK(max_diff(s0["target_positions"], tr.steps.back().x) < 1e-8);

  const std::string path = "/api/sessions/" + sid + "/pairs";
  const json empty = body(svc.handle("PUT", path, R"({"pairs": []})"));
  CHECK(empty["deviation"].get<double>() == doctest::Approx(rest_rms).epsilon(1e-12));
  CHECK(max_diff(empty["positions"], rest) == 0.0);

  CHECK(svc.handle("PUT", path, R"({"pairs": [[0, 0]]})").status == 422);
  CHECK(svc.handle("PUT", path, R"({"pairs": [[0, 4]]})").status == 422);
  CHECK(svc.handle("PUT", path, R"({"pairs": [[-1, 2]]})").status == 422);
  CHECK(svc.handle("PUT", path, R"({"pairs": ["x"]})").status == 400);
  CHECK(svc.handle("PUT", path, R"({"pairs": 3})").status == 400);

  // Pulling the free flap onto the pinned one closes the fold.
  const json one = body(svc.handle("PUT", path, R"({"pairs": [{"a": 1, "b": 3}]})"));
  CHECK(one["converged"] == true);
  CHECK(one["pairs"][0]["weight"].get<double>() > 0);
  CHECK(one["deviation"].get<double>() < 0.5 * rest_rms);
  const json again = body(svc.handle("PUT", path, R"([[1, 3]])"));
  CHECK(again["newton_iters"] == 0);
  CHECK(max_diff(again["positions"], State(Eigen::Map<const Eigen::VectorXd>(
                                         one["positions"].get<std::vector<double>>().data(), 12))) == 0.0);

  CHECK(svc.handle("DELETE", "/api/sessions/" + sid, "").status == 204);
  CHECK(svc.handle("GET", "/api/sessions/" + sid, "").status == 404);
  CHECK(svc.handle("DELETE", "/api/sessions/" + sid, "").status == 404);
}

TEST_CASE("service: HTTP transport with CORS and WebSocket frame streaming") {
  DesignService svc(one_worker());
  svc.start();
  const int port = svc.port();
  REQUIRE(port > 0);
  boost::asio::io_context io;
  tcp::resolver resolver(io);
  const auto endpoints = resolver.resolve("127.0.0.1", std::to_string(port));

  const auto request = [&](http::verb verb, const std::string& target, const std::string& payload,
                           const std::string& origin) {
    tcp::socket sock(io);
    boost::asio::connect(sock, endpoints);
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    if (!origin.empty()) req.set(http::field::origin, origin);
    req.body() = payload;
    req.prepare_payload();
    http::write(sock, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(sock, buf, res);
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_both, ec);
    return res;
  };

  const auto health = request(http::verb::get, "/api/health", "", "http://localhost:5173");
  CHECK(health.result_int() == 200);
  CHECK(health[http::field::access_control_allow_origin] == "http://localhost:5173");
  CHECK(json::parse(health.body())["status"] == "ok");
  const auto foreign = request(http::verb::get, "/api/health", "", "http://example.com");
  CHECK(foreign[http::field::access_control_allow_origin].empty());
  const auto preflight = request(http::verb::options, "/api/sessions", "", "http://127.0.0.1:3000");
  CHECK(preflight.result_int() == 204);
  CHECK(std::string(preflight[http::field::access_control_allow_methods]).find("PUT") != std::string::npos);
  CHECK(request(http::verb::get, "/api/scenes/cube/mesh", "", "").result_int() == 404);

  const auto submitted = request(http::verb::post, "/api/scenes/hinge/fold", R"({"mode": 0, "steps": 3})", "");
  REQUIRE(submitted.result_int() == 202);
  const std::string id = json::parse(submitted.body())["job"];

  websocket::stream<tcp::socket> ws(io);
  boost::asio::connect(ws.next_layer(), endpoints);
  ws.handshake("127.0.0.1", "/api/jobs/" + id + "/frames");
  const Trajectory tr = hinge_fold(3);
  std::vector<json> frames;
  json last;
  for (;;) {
    beast::flat_buffer buf;
    ws.read(buf);
    const json m = json::parse(beast::buffers_to_string(buf.data()));
    if (m.contains("done")) {
      last = m;
      break;
    }
    frames.push_back(m);
  }
  CHECK(last["status"] == "done");
  REQUIRE(frames.size() == tr.steps.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    CHECK(frames[k]["step"] == k);
    CHECK(max_diff(frames[k]["positions"], tr.steps[k].x) < 1e-8);
  }
  beast::error_code ec;
  ws.close(websocket::close_code::normal, ec);

  websocket::stream<tcp::socket> bad(io);
  boost::asio::connect(bad.next_layer(), endpoints);
  bad.handshake("127.0.0.1", "/api/jobs/999/frames", ec);
  CHECK(ec);
  svc.stop();
}
