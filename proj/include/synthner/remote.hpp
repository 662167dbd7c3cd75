#pragma once

#include <chrono>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthner/corpus.hpp"
#include "synthner/synthesis.hpp"

namespace synthner {

/// Plain-HTTP service address, e.g. "http://127.0.0.1:8080" or "http://host:9000/models".
struct Endpoint {
  std::string host;
  int port = 80;
  /// Prepended to every request path; empty or starting with '/'.
  std::string prefix;
  std::chrono::milliseconds timeout{30000};

  static Endpoint parse(std::string_view url);
  std::string url() const;

  bool operator==(const Endpoint& o) const { return host == o.host && port == o.port && prefix == o.prefix; }
};

/// Transport failures and 5xx responses are retried with exponential backoff.
struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};
  double multiplier = 2.0;
};

/// Domain-adaptation hyperparameters, forwarded opaquely to the generator service.
struct RemoteTrainingConfig {
  std::size_t lora_rank = 8;
  std::size_t lora_alpha = 32;
  double dropout = 0.05;
  double weight_decay = 0.1;
  double learning_rate = 0.0001;
  std::size_t batch_size = 16;
  std::size_t epochs = 6;

  void validate() const;
  nlohmann::json to_json() const;

  bool operator==(const RemoteTrainingConfig&) const = default;
};

/// NER fine-tuning hyperparameters, forwarded to the annotator service.
struct RemoteNerConfig {
  double weight_decay = 0.00001;
  double learning_rate = 0.0001;
  std::size_t batch_size = 16;
  std::size_t epochs = 6;

  void validate() const;
  nlohmann::json to_json() const;

  bool operator==(const RemoteNerConfig&) const = default;
};

/// JSON-over-HTTP POST with the retry budget applied. Throws RemoteUnavailable once the
/// budget is spent, RemoteStatusError on 4xx, RemoteProtocolError on a non-JSON body.
class RemoteClient {
 public:
  explicit RemoteClient(Endpoint endpoint, RetryPolicy retry = {});

  nlohmann::json post(std::string_view path, const nlohmann::json& body);

  /// HTTP requests issued so far, retries included.
  std::size_t requests() const noexcept { return requests_; }
  const Endpoint& endpoint() const noexcept { return endpoint_; }

 private:
  Endpoint endpoint_;
  RetryPolicy retry_;
  std::size_t requests_ = 0;
};

/// POST /v1/generate. Returns prompts x samples_per_prompt texts in (prompt, sample) order.
/// Each text must start with its prompt and hold between min_tokens and max_tokens words,
/// otherwise ResponseValidationError names the sample id.
std::vector<std::string> generate_remote(RemoteClient& client, std::span<const Prompt> prompts,
                                         const GenerationConfig& cfg, const RemoteTrainingConfig& training,
                                         std::string_view model_id = {}, std::string_view id_prefix = "syn");

/// POST /v1/adapt; returns the service's model id.
std::string adapt_remote(RemoteClient& client, const Corpus& corpus, const RemoteTrainingConfig& training);

/// POST /v1/annotate in batches of `batch_size` chunks of at most `chunk_words` tokens.
/// Labels are checked per chunk (count, form, BIO, membership in `classes` when non-empty);
/// violations raise ResponseValidationError naming the document. Seams are repaired as in
/// annotate_corpus.
Corpus annotate_remote(RemoteClient& client, const Corpus& corpus, std::size_t batch_size = 16,
                       std::size_t chunk_words = 128, const std::set<std::string>& classes = {},
                       std::string_view model_id = {});

/// POST /v1/train; returns the service's model id.
std::string train_remote(RemoteClient& client, const Corpus& corpus, const RemoteNerConfig& training);

}  // namespace synthner
