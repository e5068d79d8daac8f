// Serves fixture sites behind a local SOCKS5h proxy for manual testing:
//   onionlens-mock --site abc...xyz.onion=tests/fixtures/sites/drugs
//   onionlens scan --proxy socks5h://127.0.0.1:<port> --url http://abc...xyz.onion/
#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "mocknet.hpp"

namespace {
std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local onion-network stand-in"};
  std::vector<std::string> sites;
  app.add_option("--site", sites, "host=directory, repeatable")->required();
  CLI11_PARSE(app, argc, argv);

  onionlens::mocknet::MockOnionNet net;
  for (const auto& spec : sites) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      std::cerr << "bad --site '" << spec << "', expected host=directory\n";
      return 2;
    }
    net.web().add_site(spec.substr(0, eq), spec.substr(eq + 1));
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "proxy " << net.proxy_url() << "\nweb   http://127.0.0.1:" << net.web().port() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  return 0;
}
