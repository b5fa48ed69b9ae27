// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

namespace foldlab {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  /// Fold job workers; <= 0 selects thread_cap().
  int workers = 0;
  std::size_t max_frame_bytes = 1 << 20;
};

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// HTTP + WebSocket design service.
///
///   GET  /api/health
///   GET  /api/scenes
///   GET  /api/scenes/{s}/mesh
///   GET  /api/scenes/{s}/modes?count=K
///   POST /api/scenes/{s}/fold          {mode, tmax, steps}
///   GET  /api/jobs/{id}
///   GET  /api/jobs/{id}/frames/{k}
///   WS   /api/jobs/{id}/frames
///   POST /api/sessions                 {scene, frame, start}
///   GET  /api/sessions/{id}
///   PUT  /api/sessions/{id}/pairs      {pairs: [{a, b, weight}]}
///   DELETE /api/sessions/{id}
///
/// Errors are {"error": message} with 400 (malformed request), 404
/// (unknown scene, job or session), 409 (session busy or frame not ready)
/// or 422 (invalid indices or parameters).
class DesignService {
 public:
  explicit DesignService(ServiceOptions options = {});
  ~DesignService();
  DesignService(const DesignService&) = delete;
  DesignService& operator=(const DesignService&) = delete;

  /// Binds and starts accepting connections in the background.
  void start();
  /// Bound port (after start).
  int port() const;
  /// Stops accepting, closes open connections and joins all threads.
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

  /// Routes one request without any transport.
  HttpReply handle(const std::string& method, const std::string& target, const std::string& body);

  /// Waits until a fold job has finished; false on timeout or unknown id.
  bool wait_for_job(const std::string& id, double timeout_s);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace foldlab
