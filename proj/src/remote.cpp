#include "synthner/remote.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>

#include "synthner/error.hpp"
#include "synthner/formats.hpp"
#include "synthner/text.hpp"

namespace synthner {

Endpoint Endpoint::parse(std::string_view url) {
  std::string_view rest = url;
  if (rest.starts_with("https://")) throw ValidationError("https endpoints are not supported: " + std::string(url));
  if (rest.starts_with("http://")) rest.remove_prefix(7);
  Endpoint e;
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) e.prefix = std::string(rest.substr(slash));
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    const std::string port(authority.substr(colon + 1));
    std::size_t pos = 0;
    int p = 0;
    try {
      p = std::stoi(port, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != port.size() || p <= 0 || p > 65535) {
      throw ValidationError("bad port in endpoint: " + std::string(url));
    }
    e.port = p;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw ValidationError("endpoint has no host: " + std::string(url));
  e.host = std::string(authority);
  return e;
}

std::string Endpoint::url() const { return "http://" + host + ":" + std::to_string(port) + prefix; }

void RemoteTrainingConfig::validate() const {
  if (lora_rank == 0 || lora_alpha == 0 || batch_size == 0 || epochs == 0 || !(dropout >= 0.0 && dropout < 1.0) ||
      !(weight_decay > 0.0) || !(learning_rate > 0.0)) {
    throw ValidationError("remote training hyperparameters must be positive (dropout in [0, 1))");
  }
}

nlohmann::json RemoteTrainingConfig::to_json() const {
  return {{"r", lora_rank},         {"alpha", lora_alpha},     {"dropout", dropout},
          {"weight_decay", weight_decay}, {"learning_rate", learning_rate},
          {"batch_size", batch_size}, {"epochs", epochs}};
}

void RemoteNerConfig::validate() const {
  if (batch_size == 0 || epochs == 0 || !(weight_decay > 0.0) || !(learning_rate > 0.0)) {
    throw ValidationError("remote NER hyperparameters must be positive (dropout in [0, 1))");
  }
}

nlohmann::json RemoteNerConfig::to_json() const {
  return {{"weight_decay", weight_decay},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"epochs", epochs}};
}

RemoteClient::RemoteClient(Endpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
  if (retry_.attempts < 1) throw ValidationError("retry budget must allow at least one attempt");
}

nlohmann::json RemoteClient::post(std::string_view path, const nlohmann::json& body) {
  const std::string full = endpoint_.prefix + std::string(path);
  const std::string payload = body.dump();
  httplib::Client cli(endpoint_.host, endpoint_.port);
  const auto secs = endpoint_.timeout.count() / 1000;
  const auto usecs = (endpoint_.timeout.count() % 1000) * 1000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  std::string last;
  auto delay = std::chrono::duration<double, std::milli>(retry_.base_delay);
  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(delay);
      delay *= retry_.multiplier;
    }
    ++requests_;
    auto res = cli.Post(full, payload, "application/json");
    if (!res) {
      last = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw RemoteStatusError(res->status, "POST " + full + " returned HTTP " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw RemoteProtocolError("POST " + full + ": response is not JSON: " + e.what());
    }
  }
  throw RemoteUnavailable("POST " + endpoint_.url() + std::string(path) + " failed after " +
                              std::to_string(retry_.attempts) + " attempts (" + last + ")",
                          retry_.attempts);
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* name, std::string_view where) {
  if (!j.is_object() || !j.contains(name)) {
    throw RemoteProtocolError(std::string(where) + ": response lacks '" + name + "'");
  }
  return j.at(name);
}

std::string model_id_of(const nlohmann::json& res, std::string_view where) {
  const auto& id = field(res, "model_id", where);
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw RemoteProtocolError(std::string(where) + ": model_id must be a non-empty string");
  }
  return id.get<std::string>();
}

std::vector<std::string> string_array(const nlohmann::json& j, std::string_view where) {
  if (!j.is_array()) throw RemoteProtocolError(std::string(where) + ": expected an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_string()) throw RemoteProtocolError(std::string(where) + ": expected an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

std::vector<std::string> generate_remote(RemoteClient& client, std::span<const Prompt> prompts,
                                         const GenerationConfig& cfg, const RemoteTrainingConfig& training,
                                         std::string_view model_id, std::string_view id_prefix) {
  cfg.validate();
  training.validate();
  if (prompts.empty()) throw ValidationError("cannot synthesize from an empty prompt list");
  nlohmann::json texts_in = nlohmann::json::array();
  for (const auto& p : prompts) texts_in.push_back(text::join(p.words, " "));
  nlohmann::json body = {{"prompts", texts_in},
                         {"samples_per_prompt", cfg.samples_per_prompt},
                         {"top_p", cfg.top_p},
                         {"temperature", cfg.temperature},
                         {"min_tokens", cfg.min_tokens},
                         {"max_tokens", cfg.max_tokens},
                         {"training", training.to_json()}};
  if (!model_id.empty()) body["model_id"] = std::string(model_id);

  const auto res = client.post("/v1/generate", body);
  auto texts = string_array(field(res, "texts", "/v1/generate"), "/v1/generate texts");
  const std::size_t expected = prompts.size() * cfg.samples_per_prompt;
  if (texts.size() != expected) {
    throw RemoteProtocolError("/v1/generate returned " + std::to_string(texts.size()) + " texts, expected " +
                              std::to_string(expected));
  }
  for (std::size_t k = 0; k < texts.size(); ++k) {
    const std::size_t p = k / cfg.samples_per_prompt;
    const std::string id = synthetic_id(id_prefix, p, k % cfg.samples_per_prompt);
    const auto words = text::split_words(texts[k]);
    if (words.size() < cfg.min_tokens) {
      throw ResponseValidationError(id, std::to_string(words.size()) + " words, fewer than min_tokens " +
                                            std::to_string(cfg.min_tokens));
    }
    if (words.size() > cfg.max_tokens) {
      throw ResponseValidationError(id, std::to_string(words.size()) + " words, more than max_tokens " +
                                            std::to_string(cfg.max_tokens));
    }
    const auto& pw = prompts[p].words;
    if (!std::equal(pw.begin(), pw.end(), words.begin())) {
      throw ResponseValidationError(id, "text does not start with its prompt");
    }
  }
  return texts;
}

std::string adapt_remote(RemoteClient& client, const Corpus& corpus, const RemoteTrainingConfig& training) {
  training.validate();
  if (corpus.empty()) throw ValidationError("cannot adapt on an empty corpus");
  const auto res =
      client.post("/v1/adapt", {{"corpus_jsonl", write_jsonl(corpus)}, {"training", training.to_json()}});
  return model_id_of(res, "/v1/adapt");
}

std::string train_remote(RemoteClient& client, const Corpus& corpus, const RemoteNerConfig& training) {
  training.validate();
  if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
  const auto res =
      client.post("/v1/train", {{"corpus_jsonl", write_jsonl(corpus)}, {"training", training.to_json()}});
  return model_id_of(res, "/v1/train");
}

Corpus annotate_remote(RemoteClient& client, const Corpus& corpus, std::size_t batch_size,
                       std::size_t chunk_words, const std::set<std::string>& classes,
                       std::string_view model_id) {
  if (batch_size == 0) throw ValidationError("batch size must be at least 1");
  if (chunk_words == 0) throw ValidationError("chunk size must be at least 1");

  struct Item {
    std::size_t doc;
    std::string id;
    std::span<const std::string> tokens;
  };
  std::vector<Item> items;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto chunks = chunk_document(corpus[d], chunk_words);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      std::string id = chunks.size() == 1 ? corpus[d].id : corpus[d].id + "#" + std::to_string(c);
      items.push_back({d, std::move(id), chunks[c].tokens});
    }
  }

  std::vector<std::vector<std::string>> labels(corpus.size());
  std::set<std::string> seen;
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t end = std::min(items.size(), start + batch_size);
    nlohmann::json docs = nlohmann::json::array();
    for (std::size_t i = start; i < end; ++i) {
      docs.push_back({{"id", items[i].id}, {"tokens", items[i].tokens}});
    }
    nlohmann::json body = {{"documents", docs}};
    if (!model_id.empty()) body["model_id"] = std::string(model_id);
    const auto res = client.post("/v1/annotate", body);
    const auto& out = field(res, "documents", "/v1/annotate");
    if (!out.is_array() || out.size() != end - start) {
      throw RemoteProtocolError("/v1/annotate returned " + std::to_string(out.is_array() ? out.size() : 0) +
                                " documents for a batch of " + std::to_string(end - start));
    }
    for (std::size_t i = start; i < end; ++i) {
      const auto& item = items[i];
      const auto& rec = out[i - start];
      const auto& rid = field(rec, "id", "/v1/annotate document");
      if (!rid.is_string() || rid.get<std::string>() != item.id) {
        throw RemoteProtocolError("/v1/annotate returned documents out of order at '" + item.id + "'");
      }
      const std::string& doc_id = corpus[item.doc].id;
      auto got = string_array(field(rec, "labels", "/v1/annotate document"), "/v1/annotate labels");
      if (got.size() != item.tokens.size()) {
        throw ResponseValidationError(doc_id, std::to_string(got.size()) + " labels for " +
                                                  std::to_string(item.tokens.size()) + " tokens");
      }
      for (const auto& l : got) {
        if (!is_well_formed_label(l)) throw ResponseValidationError(doc_id, "unknown label '" + l + "'");
        const std::string cls(label_class(l));
        if (!cls.empty()) {
          if (!classes.empty() && !classes.contains(cls)) {
            throw ResponseValidationError(doc_id, "unknown label '" + l + "'");
          }
          seen.insert(cls);
        }
      }
      if (!is_valid_bio(got)) throw ResponseValidationError(doc_id, "labels are not valid BIO");
      auto& dst = labels[item.doc];
      dst.insert(dst.end(), got.begin(), got.end());
    }
  }

  std::vector<Document> docs = corpus.documents();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    docs[d].labels = std::move(labels[d]);
    repair_bio(docs[d].labels);
  }
  std::set<std::string> label_set = classes.empty() ? seen : classes;
  return Corpus(std::move(docs), std::move(label_set));
}

}  // namespace synthner
