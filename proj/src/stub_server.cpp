#include "synthner/stub_server.hpp"

#include <httplib.h>

#include "synthner/error.hpp"
#include "synthner/rng.hpp"
#include "synthner/text.hpp"

namespace synthner {

StubServer::StubServer(StubBehavior behavior)
    : server_(std::make_unique<httplib::Server>()), behavior_(behavior) {
  install();
}

StubServer::~StubServer() { stop(); }

void StubServer::set_behavior(const StubBehavior& behavior) {
  std::lock_guard lock(mutex_);
  behavior_ = behavior;
  failures_served_ = 0;
}

std::size_t StubServer::requests(const std::string& path) const {
  std::lock_guard lock(mutex_);
  const auto it = counts_.find(path);
  return it == counts_.end() ? 0 : it->second;
}

std::size_t StubServer::total_requests() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, c] : counts_) n += c;
  return n;
}

Endpoint StubServer::endpoint() const {
  Endpoint e;
  e.host = host_;
  e.port = port_;
  return e;
}

bool StubServer::should_fail() {
  if (behavior_.fail_first < 0) return true;
  if (failures_served_ < behavior_.fail_first) {
    ++failures_served_;
    return true;
  }
  return false;
}

void StubServer::install() {
  auto handler = [this](auto body_fn) {
    return [this, body_fn](const httplib::Request& req, httplib::Response& res) {
      StubBehavior b;
      {
        std::lock_guard lock(mutex_);
        ++counts_[req.path];
        if (should_fail()) {
          res.status = 500;
          res.set_content(R"({"error":"injected failure"})", "application/json");
          return;
        }
        b = behavior_;
      }
      if (b.malformed) {
        res.set_content("not json {", "text/plain");
        return;
      }
      nlohmann::json in;
      try {
        in = nlohmann::json::parse(req.body);
        res.set_content(body_fn(in, b).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  };

  server_->Post("/v1/generate", handler([](const nlohmann::json& in, const StubBehavior& b) {
    const auto spp = in.at("samples_per_prompt").get<std::size_t>();
    const auto min_tokens = in.at("min_tokens").get<std::size_t>();
    nlohmann::json texts = nlohmann::json::array();
    for (const auto& p : in.at("prompts")) {
      for (std::size_t s = 0; s < spp; ++s) {
        auto words = text::split_words(p.get<std::string>());
        if (b.generate != StubBehavior::Generate::short_texts) {
          for (std::size_t k = 0; words.size() < min_tokens; ++k) words.push_back("w" + std::to_string(s + k));
        }
        texts.push_back(text::join(words, " "));
      }
    }
    if (b.generate == StubBehavior::Generate::missing_text && !texts.empty()) texts.erase(texts.size() - 1);
    return nlohmann::json{{"texts", texts}};
  }));

  server_->Post("/v1/annotate", handler([](const nlohmann::json& in, const StubBehavior& b) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : in.at("documents")) {
      std::vector<std::string> labels;
      for (const auto& t : d.at("tokens")) {
        const auto cps = text::decode_utf8(t.get<std::string>());
        const bool cap = b.annotate == StubBehavior::Annotate::capitalized && !cps.empty() && text::is_upper(cps[0]);
        labels.push_back(cap ? "B-NAME" : "O");
      }
      if (b.annotate == StubBehavior::Annotate::short_labels && !labels.empty()) labels.pop_back();
      if (b.annotate == StubBehavior::Annotate::unknown_label && !labels.empty()) labels[0] = "X-NAME";
      docs.push_back({{"id", d.at("id")}, {"labels", labels}});
    }
    return nlohmann::json{{"documents", docs}};
  }));

  auto model = [](const char* kind) {
    return [kind](const nlohmann::json& in, const StubBehavior&) {
      const std::string corpus = in.at("corpus_jsonl").get<std::string>();
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(hash_string(corpus + in.at("training").dump())));
      return nlohmann::json{{"model_id", std::string(kind) + "-" + buf}};
    };
  };
  server_->Post("/v1/adapt", handler(model("adapted")));
  server_->Post("/v1/train", handler(model("ner")));
}

void StubServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error("stub server cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void StubServer::listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error("stub server cannot listen on " + host + ":" + std::to_string(port));
}

void StubServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace synthner
