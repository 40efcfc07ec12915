// guardsim-stub: deterministic stand-in for the embedding, moderation,
// judge and log-probability services. Useful for demos and CI.

#include <CLI11.hpp>

#include <iostream>

#include "guardsim/testing/stub_service.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Deterministic stub of the external model services"};
  guardsim::testing::StubConfig config;
  app.add_option("--host", config.host);
  app.add_option("--port", config.port, "0 picks a free port");
  app.add_option("--dim", config.embed_dim, "Embedding width")->check(CLI::PositiveNumber);
  app.add_option("--fail-first", config.fail_first, "Answer the first N requests per path with 503");
  CLI11_PARSE(app, argc, argv);

  try {
    guardsim::testing::StubService service(config);
    std::cout << service.url() << std::endl;
    service.wait();
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
