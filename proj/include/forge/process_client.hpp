#pragma once

// Persistent child-process client for the toolchain protocol: a pool of
// worker processes, each handling one JSON-per-line request at a time.
// Linux-only plumbing; the rest of the library never touches it in mock mode.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/toolchain_protocol.hpp"
#include "forge/util.hpp"

namespace forge {

class ProcessToolchain : public ToolchainClient {
 public:
  ProcessToolchain(std::string command, size_t workers = 4, long timeout_ms = 120000)
      : command_(std::move(command)), timeout_ms_(timeout_ms) {
    if (command_.empty()) throw ConfigError("toolchain command must not be empty");
    workers_.resize(workers == 0 ? 1 : workers);
    for (size_t i = 0; i < workers_.size(); ++i) free_.push_back(i);
  }

  ~ProcessToolchain() override {
    for (auto& w : workers_) shutdown_worker(w);
  }

  bool deterministic() const override { return false; }

  nlohmann::json request(const nlohmann::json& req) override {
    size_t idx = acquire();
    Worker& w = workers_[idx];
    try {
      if (w.pid < 0) spawn(w);
      std::string line = req.dump();
      line.push_back('\n');
      write_all(w, line);
      std::string response_line = read_line(w);
      nlohmann::json resp = nlohmann::json::parse(response_line);
      release(idx);
      return resp;
    } catch (...) {
      shutdown_worker(w);  // protocol state is unknown; respawn on next use
      release(idx);
      throw;
    }
  }

 private:
  struct Worker {
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string buffer;
  };

  size_t acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return !free_.empty(); });
    size_t idx = free_.back();
    free_.pop_back();
    return idx;
  }

  void release(size_t idx) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      free_.push_back(idx);
    }
    cv_.notify_one();
  }

  void spawn(Worker& w) {
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw ToolchainError("cannot create pipes for toolchain process");
    }
    pid_t pid = fork();
    if (pid < 0) throw ToolchainError("cannot fork toolchain process");
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    w.pid = pid;
    w.to_child = to_child[1];
    w.from_child = from_child[0];
    w.buffer.clear();
  }

  void shutdown_worker(Worker& w) {
    if (w.to_child >= 0) close(w.to_child);
    if (w.from_child >= 0) close(w.from_child);
    w.to_child = w.from_child = -1;
    if (w.pid > 0) {
      kill(w.pid, SIGKILL);
      waitpid(w.pid, nullptr, 0);
      w.pid = -1;
    }
    w.buffer.clear();
  }

  void write_all(Worker& w, const std::string& data) {
    size_t off = 0;
    while (off < data.size()) {
      ssize_t n = ::write(w.to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ToolchainError(std::string("write to toolchain failed: ") + strerror(errno));
      }
      off += static_cast<size_t>(n);
    }
  }

  std::string read_line(Worker& w) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    for (;;) {
      size_t nl = w.buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = w.buffer.substr(0, nl);
        w.buffer.erase(0, nl + 1);
        return line;
      }
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                           deadline - std::chrono::steady_clock::now())
                           .count();
      if (remaining <= 0) {
        throw ToolchainTimeout("no response within " + std::to_string(timeout_ms_) + " ms");
      }
      pollfd pfd{w.from_child, POLLIN, 0};
      int rc = poll(&pfd, 1, static_cast<int>(remaining));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw ToolchainError(std::string("poll failed: ") + strerror(errno));
      }
      if (rc == 0) {
        throw ToolchainTimeout("no response within " + std::to_string(timeout_ms_) + " ms");
      }
      char chunk[4096];
      ssize_t n = ::read(w.from_child, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ToolchainError(std::string("read from toolchain failed: ") + strerror(errno));
      }
      if (n == 0) throw ToolchainError("toolchain process closed the pipe");
      w.buffer.append(chunk, static_cast<size_t>(n));
    }
  }

  std::string command_;
  long timeout_ms_;
  std::vector<Worker> workers_;
  std::vector<size_t> free_;
  std::mutex mutex_;
  std::condition_variable cv_;
};

}  // namespace forge
