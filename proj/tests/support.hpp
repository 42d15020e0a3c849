#pragma once

#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>
#include <spawn.h>
#include <fcntl.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "edgeprune/graph.hpp"
#include "edgeprune/kernels.hpp"
#include "edgeprune/manifest.hpp"
#include "edgeprune/runtime.hpp"

extern char** environ;

namespace testsupport {

namespace fs = std::filesystem;

inline bool port_free(std::uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  ::close(fd);
  return ok;
}

/// First port of `count` consecutive free ports, drawn so that concurrently
/// running test binaries rarely collide.
inline std::uint16_t free_ports(std::size_t count = 8) {
  static std::atomic<std::uint32_t> calls{0};
  std::mt19937 rng(static_cast<std::uint32_t>(::getpid()) * 7919u + calls++ * 104729u);
  std::uniform_int_distribution<std::uint32_t> pick(20000, 60000);
  for (int attempt = 0; attempt < 200; ++attempt) {
    auto base = static_cast<std::uint16_t>(pick(rng));
    bool ok = true;
    for (std::size_t i = 0; i < count && ok; ++i) ok = port_free(static_cast<std::uint16_t>(base + i));
    if (ok) return base;
  }
  throw std::runtime_error("no free port block");
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> n{0};
    path_ = fs::temp_directory_path() /
            ("edgeprune-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  fs::path path_;
};

/// Runs every manifest in its own thread (in-process stand-in for separate
/// device processes) and returns their stats in manifest order.
inline std::vector<edgeprune::RunStats> run_all(const std::vector<edgeprune::DeploymentManifest>& manifests,
                                                const edgeprune::RunOptions& options = {}) {
  static const edgeprune::KernelRegistry registry = edgeprune::default_registry();
  std::vector<edgeprune::RunStats> out(manifests.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    threads.emplace_back([&, i] { out[i] = edgeprune::run_program(manifests[i], registry, options); });
  }
  for (auto& t : threads) t.join();
  return out;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

/// Spawns `args` (args[0] is the program path) and waits for it.
inline CommandResult run_command(const std::vector<std::string>& args, const fs::path& log) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = 0;
  CommandResult r;
  if (posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ) != 0) {
    posix_spawn_file_actions_destroy(&actions);
    return r;
  }
  posix_spawn_file_actions_destroy(&actions);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  try {
    r.output = edgeprune::read_text_file(log.string());
  } catch (const std::exception&) {
  }
  return r;
}

inline std::vector<std::uint8_t> bytes_of(const fs::path& p) {
  std::string s = edgeprune::read_text_file(p.string());
  return {s.begin(), s.end()};
}

}  // namespace testsupport
