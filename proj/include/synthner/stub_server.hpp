#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "synthner/remote.hpp"

namespace httplib {
class Server;
}

namespace synthner {

/// Canned behaviours of the stub model service, for protocol tests and offline runs.
struct StubBehavior {
  enum class Generate {
    echo,          ///< prompt followed by filler words up to min_tokens
    short_texts,   ///< prompt only (fails the min_tokens check)
    missing_text,  ///< one text fewer than requested
  };
  enum class Annotate {
    all_o,          ///< every token "O"
    capitalized,    ///< capitalized tokens "B-NAME", everything else "O"
    short_labels,   ///< one label fewer than tokens
    unknown_label,  ///< first label "B-???" style garbage
  };
  Generate generate = Generate::echo;
  Annotate annotate = Annotate::all_o;
  /// Answer HTTP 500 to the first N requests; negative means forever.
  int fail_first = 0;
  /// Answer 200 with a body that is not JSON.
  bool malformed = false;
};

/// In-process HTTP server speaking the generate/adapt/annotate/train protocol.
class StubServer {
 public:
  explicit StubServer(StubBehavior behavior = {});
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  void start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

  int port() const noexcept { return port_; }
  Endpoint endpoint() const;

  void set_behavior(const StubBehavior& behavior);
  std::size_t requests(const std::string& path) const;
  std::size_t total_requests() const;

 private:
  void install();
  bool should_fail();

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::string host_ = "127.0.0.1";

  mutable std::mutex mutex_;
  StubBehavior behavior_;
  int failures_served_ = 0;
  std::map<std::string, std::size_t> counts_;
};

}  // namespace synthner
