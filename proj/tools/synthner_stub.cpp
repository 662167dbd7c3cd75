// Stub model service for offline runs and protocol tests.

#include <iostream>

#include <CLI11.hpp>

#include "synthner/stub_server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stub generator/annotator service speaking the synthner remote protocol."};
  std::string host = "127.0.0.1";
  int port = 8088;
  std::string generate = "echo", annotate = "all_o";
  int fail_first = 0;
  bool malformed = false;
  app.add_option("--host", host)->capture_default_str();
  app.add_option("--port", port)->capture_default_str();
  app.add_option("--generate", generate, "echo, short or missing")->capture_default_str();
  app.add_option("--annotate", annotate, "all_o, capitalized, short or unknown")->capture_default_str();
  app.add_option("--fail-first", fail_first, "answer 500 to the first N requests (-1: always)")
      ->capture_default_str();
  app.add_flag("--malformed", malformed, "answer with non-JSON bodies");
  CLI11_PARSE(app, argc, argv);

  synthner::StubBehavior b;
  if (generate == "short") {
    b.generate = synthner::StubBehavior::Generate::short_texts;
  } else if (generate == "missing") {
    b.generate = synthner::StubBehavior::Generate::missing_text;
  } else if (generate != "echo") {
    std::cerr << "unknown --generate mode " << generate << "\n";
    return 1;
  }
  if (annotate == "capitalized") {
    b.annotate = synthner::StubBehavior::Annotate::capitalized;
  } else if (annotate == "short") {
    b.annotate = synthner::StubBehavior::Annotate::short_labels;
  } else if (annotate == "unknown") {
    b.annotate = synthner::StubBehavior::Annotate::unknown_label;
  } else if (annotate != "all_o") {
    std::cerr << "unknown --annotate mode " << annotate << "\n";
    return 1;
  }
  b.fail_first = fail_first;
  b.malformed = malformed;

  synthner::StubServer server(b);
  std::cerr << "listening on http://" << host << ":" << port << "\n";
  try {
    server.listen(host, port);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
