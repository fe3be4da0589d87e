#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "t2iattack/remote_oracle.hpp"

namespace httplib {
class Server;
}

namespace t2ia::testing {

struct StubRequest {
  std::string method;
  std::string path;
  std::string body;
  std::string authorization;
  std::string protocol_version;
};

struct StubReply {
  int status = 200;
  std::string body;
};

/// In-process HTTP server on a loopback port for wire-protocol tests.
class StubServer {
 public:
  using Handler = std::function<StubReply(const StubRequest&)>;

  explicit StubServer(Handler handler);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url() const;
  std::vector<StubRequest> requests() const;

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  Handler handler_;
  mutable std::mutex mutex_;
  std::vector<StubRequest> requests_;
};

/// Serves the adapter protocol from an in-process oracle, honouring max_n.
StubServer::Handler oracle_handler(GenerationOracle& oracle, Capabilities caps);

/// Recorded exchanges, keyed by path plus canonical request JSON.
struct Fixture {
  std::string capabilities_body;
  std::map<std::string, std::string> responses;
  // Request bodies in recording order, for replay checks.
  std::vector<std::pair<std::string, nlohmann::json>> requests;

  static std::string key(const std::string& path, const nlohmann::json& request);
  static Fixture parse(const std::string& contents);
  std::string serialize() const;
};

/// Replays a fixture; unknown requests get HTTP 404.
StubServer::Handler fixture_handler(const Fixture& fixture);

/// Wraps a handler and records every successful exchange.
StubServer::Handler recording_handler(StubServer::Handler inner, Fixture& out,
                                      std::mutex& out_mutex);

std::string read_text_file(const std::string& path);

}  // namespace t2ia::testing
