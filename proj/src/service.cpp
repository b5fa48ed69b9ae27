// SPDX-License-Identifier: Apache-2.0
#include "foldlab/service.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include "foldlab/config.hpp"
#include "foldlab/error.hpp"
#include "foldlab/parallel.hpp"
#include "foldlab/strain_space.hpp"

namespace foldlab {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = boost::asio::ip::tcp;
using nlohmann::json;

struct HttpError {
  int status;
  std::string message;
};

[[noreturn]] void http_fail(int status, const std::string& message) { throw HttpError{status, message}; }

json report_json(const EnergyReport& r) {
  return {{"E_total_J", r.total},
          {"E_membrane_J", r.membrane},
          {"E_bending_J", r.bending},
          {"E_penalty_J", r.penalty},
          {"E_barrier_J", r.barrier},
          {"max_strain", r.max_inplane_strain},
          {"mass_displacement_m", r.mass_displacement}};
}

json positions_json(const State& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    if (j > i) parts.push_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

std::map<std::string, std::string> parse_query(const std::string& q) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i < q.size()) {
    std::size_t amp = q.find('&', i);
    if (amp == std::string::npos) amp = q.size();
    const std::string kv = q.substr(i, amp - i);
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      out[kv] = "";
    } else {
      out[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    i = amp + 1;
  }
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    http_fail(400, what + " must be an integer");
  }
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    http_fail(400, std::string("malformed JSON: ") + e.what());
  }
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Conflict:
      return 409;
    case ErrorCode::InvalidArgument:
    case ErrorCode::Topology:
    case ErrorCode::DegenerateElement:
      return 422;
    case ErrorCode::Parse:
      return 400;
    default:
      return 500;
  }
}

struct SceneEntry {
  Scene scene;
  std::unique_ptr<ShellModel> model;
  std::mutex mu;
  std::shared_ptr<const ModeSet> modes;
};

struct Frame {
  double t = 0.0;
  State x;
  EnergyReport report;
  int iterations = 0;
};

struct Job {
  std::string id;
  std::string scene;
  int mode = 0;
  double tmax = -1.0;
  int steps = 10;
  std::mutex mu;
  std::condition_variable cv;
  std::string status = "queued";
  std::vector<Frame> frames;
  std::string error;
  bool finished() const { return status == "done" || status == "failed"; }
};

struct Pair {
  int a = 0;
  int b = 0;
  double weight = 0.0;
  bool operator==(const Pair& o) const { return a == o.a && b == o.b && weight == o.weight; }
};

struct Session {
  std::string id;
  std::string scene;
  State target;
  bool start_from_rest = false;
  std::atomic<bool> busy{false};
  std::mutex mu;
  std::vector<Pair> pairs;
  State equilibrium;
  double deviation = 0.0;
  bool converged = true;
  int iterations = 0;
  bool solved_once = false;
};

double rms_distance(const State& a, const State& b) {
  const Eigen::Index n = a.size() / 3;
  return n ? std::sqrt((a - b).squaredNorm() / n) : 0.0;
}

}  // namespace

struct DesignService::Impl {
  ServiceOptions options;

  std::mutex scenes_mu;
  std::map<std::string, std::shared_ptr<SceneEntry>> scenes;

  std::mutex jobs_mu;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::deque<std::shared_ptr<Job>> queue;
  std::condition_variable queue_cv;
  std::vector<std::thread> workers;

  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  std::atomic<long> next_id{1};
  std::atomic<bool> stopping{false};
  bool started = false;

  boost::asio::io_context io;
  std::unique_ptr<tcp::acceptor> acceptor;
  std::thread accept_thread;
  std::mutex conn_mu;
  std::set<int> open_fds;
  std::vector<std::pair<std::thread, std::shared_ptr<std::atomic<bool>>>> connections;
  std::mutex stop_mu;
  std::condition_variable stop_cv;

  explicit Impl(ServiceOptions o) : options(std::move(o)) {}

  std::string new_id() { return std::to_string(next_id++); }

  std::shared_ptr<SceneEntry> scene(const std::string& name) {
    std::lock_guard lock(scenes_mu);
    auto it = scenes.find(name);
    if (it != scenes.end()) return it->second;
    const auto names = scene_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) http_fail(404, "unknown scene '" + name + "'");
    auto entry = std::make_shared<SceneEntry>();
    entry->scene = make_scene(name);
    entry->model = std::make_unique<ShellModel>(build_model(entry->scene.mesh, entry->scene.config));
    scenes[name] = entry;
    return entry;
  }

  std::shared_ptr<const ModeSet> modes(SceneEntry& e, int k) {
    std::lock_guard lock(e.mu);
    if (k > e.model->dofs()) {
      http_fail(422, "requested " + std::to_string(k) + " modes but the scene has " + std::to_string(e.model->dofs()) +
                         " degrees of freedom");
    }
    if (!e.modes || e.modes->size() < k) {
      // Round up so nearby requests share one solve.
      const int want = std::min(e.model->dofs(), std::max(k, 20));
      e.modes = std::make_shared<const ModeSet>(rest_modes(*e.model, want));
    }
    return e.modes;
  }

  std::shared_ptr<Job> job(const std::string& id) {
    std::lock_guard lock(jobs_mu);
    auto it = jobs.find(id);
    if (it == jobs.end()) http_fail(404, "unknown job '" + id + "'");
    return it->second;
  }

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) http_fail(404, "unknown session '" + id + "'");
    return it->second;
  }

  // ---- workers -------------------------------------------------------------

  void start_workers() {
    const int n = options.workers > 0 ? options.workers : thread_cap();
    for (int i = 0; i < n; ++i) workers.emplace_back([this] { worker_loop(); });
  }

  void worker_loop() {
    for (;;) {
      std::shared_ptr<Job> j;
      {
        std::unique_lock lock(jobs_mu);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        j = queue.front();
        queue.pop_front();
      }
      run_job(*j);
    }
  }

  void run_job(Job& j) {
    {
      std::lock_guard lock(j.mu);
      j.status = "running";
    }
    j.cv.notify_all();
    try {
      auto entry = scene(j.scene);
      auto ms = modes(*entry, j.mode + 1);
      FoldOptions fo;
      fo.t_max = j.tmax;
      fo.steps = j.steps;
      fo.solver = entry->scene.config.solver;
      fo.on_step = [&](const TrajectoryStep& s) {
        {
          std::lock_guard lock(j.mu);
          j.frames.push_back({s.t, s.x, s.report, s.stats.iterations});
        }
        j.cv.notify_all();
      };
      const Trajectory tr = fold_mode(*entry->model, *ms, j.mode, fo);
      std::lock_guard lock(j.mu);
      j.status = tr.complete() ? "done" : "failed";
      j.error = tr.error;
    } catch (const HttpError& e) {
      std::lock_guard lock(j.mu);
      j.status = "failed";
      j.error = e.message;
    } catch (const std::exception& e) {
      std::lock_guard lock(j.mu);
      j.status = "failed";
      j.error = e.what();
    }
    j.cv.notify_all();
  }

  // ---- routes --------------------------------------------------------------

  json job_json(Job& j) {
    std::lock_guard lock(j.mu);
    return {{"id", j.id},           {"scene", j.scene},          {"mode", j.mode},
            {"tmax", j.tmax},       {"steps", j.steps},          {"status", j.status},
            {"frames_ready", j.frames.size()}, {"error", j.error}};
  }

  json frame_json(const Job& j, std::size_t k) {
    const Frame& f = j.frames[k];
    return {{"job", j.id}, {"step", k}, {"t", f.t}, {"positions", positions_json(f.x)}, {"report", report_json(f.report)},
            {"newton_iters", f.iterations}};
  }

  json session_json(Session& s) {
    std::lock_guard lock(s.mu);
    json pairs = json::array();
    for (const auto& p : s.pairs) pairs.push_back({{"a", p.a}, {"b", p.b}, {"weight", p.weight}});
    return {{"id", s.id},
            {"scene", s.scene},
            {"start", s.start_from_rest ? "rest" : "target"},
            {"pairs", pairs},
            {"deviation", s.deviation},
            {"converged", s.converged},
            {"newton_iters", s.iterations},
            {"positions", positions_json(s.equilibrium)},
            {"target_positions", positions_json(s.target)}};
  }

  HttpReply ok(const json& j, int status = 200) { return {status, j.dump(), "application/json"}; }

  HttpReply route(const std::string& method, const std::string& target, const std::string& body) {
    const std::size_t qpos = target.find('?');
    const std::string path = target.substr(0, qpos);
    const auto query = qpos == std::string::npos ? std::map<std::string, std::string>{} : parse_query(target.substr(qpos + 1));
    const auto p = split_path(path);
    const auto is = [&](std::initializer_list<const char*> pattern) {
      if (p.size() != pattern.size()) return false;
      std::size_t i = 0;
      for (const char* s : pattern) {
        if (std::string(s) != "*" && p[i] != s) return false;
        ++i;
      }
      return true;
    };

    if (method == "GET" && is({"api", "health"})) return ok({{"status", "ok"}});
    if (method == "GET" && is({"api", "scenes"})) {
      json list = json::array();
      for (const auto& name : scene_names()) {
        auto e = scene(name);
        list.push_back({{"name", name},
                        {"description", e->scene.description},
                        {"vertices", e->scene.mesh->vertex_count()},
                        {"triangles", e->scene.mesh->triangle_count()}});
      }
      return ok(list);
    }
    if (method == "GET" && is({"api", "scenes", "*", "mesh"})) {
      auto e = scene(p[2]);
      const TriMesh& m = *e->scene.mesh;
      std::vector<int> indices;
      for (const auto& t : m.triangles()) indices.insert(indices.end(), t.begin(), t.end());
      return ok({{"scene", p[2]},
                 {"vertices", m.vertex_count()},
                 {"triangles", m.triangle_count()},
                 {"hinges", m.hinge_count()},
                 {"fingerprint", m.fingerprint()},
                 {"positions", positions_json(m.rest_state())},
                 {"indices", indices}});
    }
    if (method == "GET" && is({"api", "scenes", "*", "modes"})) {
      auto e = scene(p[2]);
      const int count = query.count("count") ? parse_int(query.at("count"), "count") : 10;
      if (count < 0) http_fail(422, "count must be non-negative");
      json lambdas = json::array(), normal = json::array(), rigid = json::array();
      if (count > 0) {
        auto ms = modes(*e, count);
        for (int i = 0; i < count; ++i) {
          const Eigen::VectorXd v = ms->mode(i);
          lambdas.push_back(ms->eigenvalues[i]);
          normal.push_back(normal_fraction(*e->scene.mesh, e->model->mass(), v));
          rigid.push_back(rigid_fraction(*e->scene.mesh, e->model->mass(), v) >= 0.5);
        }
      }
      return ok({{"scene", p[2]}, {"count", count}, {"eigenvalues", lambdas}, {"normal_fraction", normal}, {"rigid", rigid}});
    }
    if (method == "POST" && is({"api", "scenes", "*", "fold"})) {
      auto e = scene(p[2]);
      const json req = parse_body(body);
      if (!req.is_object() || !req.contains("mode") || !req["mode"].is_number_integer()) http_fail(400, "fold needs an integer mode");
      auto j = std::make_shared<Job>();
      j->scene = p[2];
      j->mode = req["mode"].get<int>();
      if (j->mode < 0 || j->mode >= e->model->dofs()) http_fail(422, "mode index out of range");
      if (req.contains("tmax") && !req["tmax"].is_null()) {
        if (!req["tmax"].is_number()) http_fail(400, "tmax must be a number");
        j->tmax = req["tmax"].get<double>();
        if (!(j->tmax >= 0) || !std::isfinite(j->tmax)) http_fail(422, "tmax must be finite and non-negative");
      }
      if (req.contains("steps")) {
        if (!req["steps"].is_number_integer()) http_fail(400, "steps must be an integer");
        j->steps = req["steps"].get<int>();
        if (j->steps < 1 || j->steps > 10000) http_fail(422, "steps must lie in [1, 10000]");
      }
      j->id = new_id();
      {
        std::lock_guard lock(jobs_mu);
        jobs[j->id] = j;
        queue.push_back(j);
      }
      queue_cv.notify_one();
      return ok({{"job", j->id}}, 202);
    }
    if (method == "GET" && is({"api", "jobs", "*"})) return ok(job_json(*job(p[2])));
    if (method == "GET" && is({"api", "jobs", "*", "frames", "*"})) {
      auto j = job(p[2]);
      const int k = parse_int(p[4], "frame index");
      std::lock_guard lock(j->mu);
      if (k < 0 || (j->finished() && k >= static_cast<int>(j->frames.size()))) http_fail(404, "no such frame");
      if (k >= static_cast<int>(j->frames.size())) http_fail(409, "frame not ready");
      return ok(frame_json(*j, k));
    }
    if (method == "POST" && is({"api", "sessions"})) return create_session(parse_body(body));
    if (method == "GET" && is({"api", "sessions", "*"})) return ok(session_json(*session(p[2])));
    if (method == "DELETE" && is({"api", "sessions", "*"})) {
      std::lock_guard lock(sessions_mu);
      if (!sessions.erase(p[2])) http_fail(404, "unknown session '" + p[2] + "'");
      return {204, "", "application/json"};
    }
    if (method == "PUT" && is({"api", "sessions", "*", "pairs"})) return put_pairs(*session(p[2]), parse_body(body));
    if (p.size() >= 1 && p[0] == "api") http_fail(404, "no route for " + method + " " + path);
    http_fail(404, "not found");
  }

  HttpReply create_session(const json& req) {
    if (!req.is_object() || !req.contains("scene") || !req["scene"].is_string()) http_fail(400, "session needs a scene name");
    auto e = scene(req["scene"].get<std::string>());
    const TriMesh& mesh = *e->scene.mesh;
    auto s = std::make_shared<Session>();
    s->scene = req["scene"].get<std::string>();
    s->target = mesh.rest_state();
    if (req.contains("start")) {
      const std::string start = req["start"].is_string() ? req["start"].get<std::string>() : "";
      if (start != "rest" && start != "target") http_fail(422, "start must be 'rest' or 'target'");
      s->start_from_rest = start == "rest";
    }
    if (req.contains("frame") && !req["frame"].is_null()) {
      const json& f = req["frame"];
      if (!f.is_object()) http_fail(400, "frame must be an object");
      if (f.contains("positions")) {
        const json& pos = f["positions"];
        if (!pos.is_array() || static_cast<int>(pos.size()) != 3 * mesh.vertex_count()) {
          http_fail(422, "positions must hold 3 * vertex_count numbers");
        }
        for (std::size_t i = 0; i < pos.size(); ++i) {
          if (!pos[i].is_number()) http_fail(422, "positions must be numbers");
          s->target[i] = pos[i].get<double>();
        }
      } else if (f.contains("job")) {
        if (!f["job"].is_string()) http_fail(400, "frame.job must be a job id string");
        auto j = job(f["job"].get<std::string>());
        if (j->scene != s->scene) http_fail(422, "job belongs to another scene");
        std::lock_guard lock(j->mu);
        int k = f.contains("step") && f["step"].is_number_integer() ? f["step"].get<int>()
                                                                     : static_cast<int>(j->frames.size()) - 1;
        if (k < 0 && !j->finished()) http_fail(409, "frame not ready");
        if (k < 0 || (j->finished() && k >= static_cast<int>(j->frames.size()))) http_fail(422, "no such frame");
        if (k >= static_cast<int>(j->frames.size())) http_fail(409, "frame not ready");
        s->target = j->frames[k].x;
      } else {
        http_fail(400, "frame needs positions or a job reference");
      }
    }
    s->equilibrium = mesh.rest_state();
    s->deviation = rms_distance(s->equilibrium, s->target);
    s->id = new_id();
    {
      std::lock_guard lock(sessions_mu);
      sessions[s->id] = s;
    }
    return ok(session_json(*s), 201);
  }

  HttpReply put_pairs(Session& s, const json& req) {
    const json* list = &req;
    if (req.is_object()) {
      if (!req.contains("pairs")) http_fail(400, "body needs a pairs list");
      list = &req["pairs"];
    }
    if (!list->is_array()) http_fail(400, "pairs must be a list");
    auto e = scene(s.scene);
    const int n = e->scene.mesh->vertex_count();
    const double default_weight = e->scene.config.default_penalty_weight();
    std::vector<Pair> pairs;
    for (const auto& item : *list) {
      Pair pr;
      if (item.is_array() && item.size() == 2 && item[0].is_number_integer() && item[1].is_number_integer()) {
        pr.a = item[0].get<int>();
        pr.b = item[1].get<int>();
      } else if (item.is_object() && item.contains("a") && item.contains("b") && item["a"].is_number_integer() &&
                 item["b"].is_number_integer()) {
        pr.a = item["a"].get<int>();
        pr.b = item["b"].get<int>();
        if (item.contains("weight")) {
          if (!item["weight"].is_number()) http_fail(422, "pair weight must be a number");
          pr.weight = item["weight"].get<double>();
        }
      } else {
        http_fail(400, "each pair is [a, b] or {a, b, weight}");
      }
      if (pr.a < 0 || pr.a >= n || pr.b < 0 || pr.b >= n) http_fail(422, "pair vertex index out of range");
      if (pr.a == pr.b) http_fail(422, "pair vertices must differ");
      if (pr.weight <= 0) pr.weight = default_weight;
      if (!std::isfinite(pr.weight)) http_fail(422, "pair weight must be finite");
      pairs.push_back(pr);
    }

    bool expected = false;
    if (!s.busy.compare_exchange_strong(expected, true)) http_fail(409, "a solve is already running for this session");
    struct Release {
      std::atomic<bool>& flag;
      ~Release() { flag = false; }
    } release{s.busy};

    State warm;
    bool same;
    {
      std::lock_guard lock(s.mu);
      same = s.solved_once && pairs == s.pairs;
      warm = same ? s.equilibrium : (s.start_from_rest ? e->scene.mesh->rest_state() : s.target);
    }
    State x = e->scene.mesh->rest_state();
    bool converged = true;
    int iterations = 0;
    if (!pairs.empty()) {
      Config cfg = e->scene.config;
      for (const auto& pr : pairs) cfg.springs.push_back({pr.a, pr.b, pr.weight});
      const ShellModel model = build_model(e->scene.mesh, cfg);
      const ShellObjective obj(model, e->scene.mesh->rest_angles());
      SolveResult r = minimize(obj, warm, cfg.solver);
      x = std::move(r.x);
      converged = r.converged();
      iterations = r.stats.iterations;
    }
    {
      std::lock_guard lock(s.mu);
      s.pairs = pairs;
      s.equilibrium = x;
      s.deviation = rms_distance(x, s.target);
      s.converged = converged;
      s.iterations = iterations;
      s.solved_once = true;
    }
    return ok(session_json(s));
  }

  HttpReply handle(const std::string& method, const std::string& target, const std::string& body) {
    try {
      return route(method, target, body);
    } catch (const HttpError& e) {
      return {e.status, json{{"error", e.message}}.dump(), "application/json"};
    } catch (const Error& e) {
      return {http_status_for(e.code()), json{{"error", e.what()}}.dump(), "application/json"};
    } catch (const std::exception& e) {
      return {500, json{{"error", e.what()}}.dump(), "application/json"};
    }
  }

  // ---- transport -----------------------------------------------------------

  static bool allowed_origin(const std::string& origin) {
    for (const char* prefix : {"http://localhost", "http://127.0.0.1", "https://localhost", "https://127.0.0.1"}) {
      if (origin.rfind(prefix, 0) == 0) {
        const std::size_t n = std::strlen(prefix);
        if (origin.size() == n || origin[n] == ':') return true;
      }
    }
    return false;
  }

  void track(int fd, bool add) {
    std::lock_guard lock(conn_mu);
    if (add) {
      open_fds.insert(fd);
    } else {
      open_fds.erase(fd);
    }
  }

  void serve_connection(tcp::socket sock) {
    const int fd = sock.native_handle();
    track(fd, true);
    beast::error_code ec;
    beast::flat_buffer buffer;
    for (;;) {
      http::request_parser<http::string_body> parser;
      parser.body_limit(16 * 1024 * 1024);
      http::read(sock, buffer, parser, ec);
      if (ec) break;
      auto req = parser.release();
      const std::string origin(req[http::field::origin]);
      if (websocket::is_upgrade(req)) {
        stream_frames(std::move(sock), std::move(req));
        track(fd, false);
        return;
      }
      http::response<http::string_body> res;
      res.version(req.version());
      res.keep_alive(req.keep_alive());
      if (!origin.empty() && allowed_origin(origin)) {
        res.set(http::field::access_control_allow_origin, origin);
        res.set(http::field::vary, "Origin");
      }
      if (req.method() == http::verb::options) {
        res.result(http::status::no_content);
        res.set(http::field::access_control_allow_methods, "GET, POST, PUT, DELETE, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
      } else {
        const HttpReply reply = handle(std::string(req.method_string()), std::string(req.target()), req.body());
        res.result(static_cast<http::status>(reply.status));
        if (reply.status != 204) {
          res.set(http::field::content_type, reply.content_type);
          res.body() = reply.body;
        }
      }
      res.prepare_payload();
      http::write(sock, res, ec);
      if (ec || !res.keep_alive() || stopping) break;
    }
    track(fd, false);
    sock.shutdown(tcp::socket::shutdown_both, ec);
  }

  void stream_frames(tcp::socket sock, http::request<http::string_body> req) {
    beast::error_code ec;
    const auto p = split_path(std::string(req.target()).substr(0, std::string(req.target()).find('?')));
    std::shared_ptr<Job> j;
    if (p.size() == 4 && p[0] == "api" && p[1] == "jobs" && p[3] == "frames") {
      std::lock_guard lock(jobs_mu);
      auto it = jobs.find(p[2]);
      if (it != jobs.end()) j = it->second;
    }
    if (!j) {
      http::response<http::string_body> res{http::status::not_found, req.version()};
      res.set(http::field::content_type, "application/json");
      res.body() = json{{"error", "unknown job stream"}}.dump();
      res.prepare_payload();
      http::write(sock, res, ec);
      return;
    }
    websocket::stream<tcp::socket> ws(std::move(sock));
    ws.read_message_max(options.max_frame_bytes);
    ws.accept(req, ec);
    if (ec) return;
    ws.text(true);
    std::size_t sent = 0;
    for (;;) {
      std::string message;
      bool done = false;
      {
        std::unique_lock lock(j->mu);
        j->cv.wait_for(lock, std::chrono::milliseconds(200),
                       [&] { return stopping || j->frames.size() > sent || j->finished(); });
        if (stopping) break;
        if (j->frames.size() > sent) {
          message = frame_json(*j, sent).dump();
          if (message.size() > options.max_frame_bytes) {
            message = json{{"job", j->id}, {"step", sent}, {"error", "frame exceeds the size limit"}}.dump();
          }
          ++sent;
        } else if (j->finished()) {
          message = json{{"job", j->id}, {"done", true}, {"status", j->status}, {"error", j->error}, {"frames", sent}}.dump();
          done = true;
        } else {
          continue;
        }
      }
      ws.write(boost::asio::buffer(message), ec);
      if (ec || done) break;
    }
    ws.close(websocket::close_code::normal, ec);
  }

  void accept_loop() {
    for (;;) {
      tcp::socket sock(io);
      beast::error_code ec;
      acceptor->accept(sock, ec);
      if (stopping) break;
      if (ec) continue;
      std::lock_guard lock(conn_mu);
      for (auto it = connections.begin(); it != connections.end();) {
        if (*it->second) {
          it->first.join();
          it = connections.erase(it);
        } else {
          ++it;
        }
      }
      auto done = std::make_shared<std::atomic<bool>>(false);
      std::thread t(
          [this, done](tcp::socket s) {
            serve_connection(std::move(s));
            *done = true;
          },
          std::move(sock));
      connections.emplace_back(std::move(t), done);
    }
  }
};

DesignService::DesignService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->start_workers();
}

DesignService::~DesignService() { stop(); }

void DesignService::start() {
  if (impl_->started) fail(ErrorCode::Conflict, "service already started");
  auto& im = *impl_;
  beast::error_code ec;
  const auto address = boost::asio::ip::make_address(im.options.host, ec);
  if (ec) fail(ErrorCode::InvalidArgument, "invalid host '" + im.options.host + "'");
  im.acceptor = std::make_unique<tcp::acceptor>(im.io);
  const tcp::endpoint ep(address, static_cast<unsigned short>(im.options.port));
  im.acceptor->open(ep.protocol(), ec);
  if (!ec) im.acceptor->set_option(boost::asio::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor->bind(ep, ec);
  if (!ec) im.acceptor->listen(boost::asio::socket_base::max_listen_connections, ec);
  if (ec) fail(ErrorCode::Io, "cannot listen on " + im.options.host + ":" + std::to_string(im.options.port) + ": " + ec.message());
  im.started = true;
  im.accept_thread = std::thread([&im] { im.accept_loop(); });
}

int DesignService::port() const {
  if (!impl_->acceptor) return 0;
  beast::error_code ec;
  return impl_->acceptor->local_endpoint(ec).port();
}

void DesignService::stop() {
  auto& im = *impl_;
  if (im.stopping.exchange(true)) return;
  im.queue_cv.notify_all();
  {
    std::lock_guard lock(im.jobs_mu);
    for (auto& [id, j] : im.jobs) j->cv.notify_all();
  }
  if (im.acceptor) ::shutdown(im.acceptor->native_handle(), SHUT_RDWR);
  if (im.accept_thread.joinable()) im.accept_thread.join();
  {
    std::lock_guard lock(im.conn_mu);
    for (int fd : im.open_fds) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& [t, done] : im.connections)
    if (t.joinable()) t.join();
  for (auto& w : im.workers)
    if (w.joinable()) w.join();
  if (im.acceptor) {
    beast::error_code ec;
    im.acceptor->close(ec);
  }
  {
    std::lock_guard lock(im.stop_mu);
  }
  im.stop_cv.notify_all();
}

void DesignService::wait() {
  std::unique_lock lock(impl_->stop_mu);
  impl_->stop_cv.wait(lock, [&] { return impl_->stopping.load(); });
}

HttpReply DesignService::handle(const std::string& method, const std::string& target, const std::string& body) {
  return impl_->handle(method, target, body);
}

bool DesignService::wait_for_job(const std::string& id, double timeout_s) {
  std::shared_ptr<Job> j;
  {
    std::lock_guard lock(impl_->jobs_mu);
    auto it = impl_->jobs.find(id);
    if (it == impl_->jobs.end()) return false;
    j = it->second;
  }
  std::unique_lock lock(j->mu);
  return j->cv.wait_for(lock, std::chrono::duration<double>(timeout_s), [&] { return j->finished(); });
}

}  // namespace foldlab
