#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "lcx/error.hpp"
#include "lcx/oracle.hpp"

namespace lcx {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

std::string exit_description(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "was killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

// Writes with SIGPIPE blocked on this thread; a pending SIGPIPE raised by the
// write is consumed before the mask is restored.
ssize_t write_no_sigpipe(int fd, const char* data, std::size_t len) {
  sigset_t pipe_set;
  sigset_t old_set;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &pipe_set, &old_set);
  const ssize_t n = ::write(fd, data, len);
  const int saved = errno;
  if (n < 0 && saved == EPIPE) {
    const timespec zero{0, 0};
    while (sigtimedwait(&pipe_set, nullptr, &zero) > 0) {
    }
  }
  pthread_sigmask(SIG_SETMASK, &old_set, nullptr);
  errno = saved;
  return n;
}

}  // namespace

std::string encode_oracle_request(std::size_t id, const PointBatch& points) {
  nlohmann::json req;
  req["id"] = id;
  auto& rows = req["points"] = nlohmann::json::array();
  for (std::size_t i = 0; i < points.n; ++i) {
    const auto r = points.row(i);
    rows.push_back(nlohmann::json(std::vector<double>(r.begin(), r.end())));
  }
  return req.dump();
}

std::vector<ClassId> decode_oracle_reply(const std::string& line, std::size_t id, std::size_t n_points) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw OracleError("malformed oracle reply: " + line.substr(0, 200), id);
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_unsigned()) {
    throw OracleError("oracle reply lacks a numeric id", id);
  }
  if (reply["id"].get<std::uint64_t>() != id) {
    throw OracleError("oracle reply id " + reply["id"].dump() + " does not match request id " + std::to_string(id),
                      id);
  }
  if (reply.contains("error")) throw OracleError("oracle reported an error: " + reply["error"].dump(), id);
  if (!reply.contains("labels") || !reply["labels"].is_array()) {
    throw OracleError("oracle reply lacks a labels array", id);
  }
  const auto& labels = reply["labels"];
  if (labels.size() != n_points) {
    throw OracleError("oracle returned " + std::to_string(labels.size()) + " labels for " + std::to_string(n_points) +
                          " points",
                      id);
  }
  std::vector<ClassId> out;
  out.reserve(n_points);
  for (const auto& v : labels) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > std::numeric_limits<ClassId>::max()) {
      throw OracleError("oracle label " + v.dump() + " is not a class id", id);
    }
    out.push_back(v.get<ClassId>());
  }
  return out;
}

SubprocessOracle::SubprocessOracle(std::string command, std::size_t input_dim, std::chrono::milliseconds timeout)
    : command_(std::move(command)), dim_(input_dim), timeout_(timeout) {
  if (command_.empty()) throw InputError("empty oracle command");
  start();
}

SubprocessOracle::~SubprocessOracle() { stop(); }

void SubprocessOracle::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) throw OracleError(std::string("pipe: ") + std::strerror(errno));
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw OracleError(std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw OracleError(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Own process group, so a kill also reaches whatever the shell spawned.
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::signal(SIGPIPE, SIG_DFL);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFL, ::fcntl(to_child_, F_GETFL) | O_NONBLOCK);
  ::fcntl(from_child_, F_SETFL, ::fcntl(from_child_, F_GETFL) | O_NONBLOCK);
}

void SubprocessOracle::stop() noexcept {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin asks the oracle to finish; give it a moment.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);  // stragglers left behind by the shell
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void SubprocessOracle::write_all(const std::string& data, Clock::time_point deadline) {
  std::size_t off = 0;
  while (off < data.size()) {
    pollfd p{to_child_, POLLOUT, 0};
    const int ready = ::poll(&p, 1, remaining_ms(deadline));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) throw OracleError("oracle timed out while reading its request", next_id_);
    const ssize_t n = write_no_sigpipe(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw OracleError(std::string("oracle process closed its input: ") + std::strerror(errno), next_id_);
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string SubprocessOracle::read_line(Clock::time_point deadline) {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    pollfd p{from_child_, POLLIN, 0};
    const int ready = ::poll(&p, 1, remaining_ms(deadline));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) {
      throw OracleError("oracle timed out after " + std::to_string(timeout_.count()) + " ms", next_id_);
    }
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EAGAIN || errno == EINTR) continue;
      throw OracleError(std::string("reading oracle output: ") + std::strerror(errno), next_id_);
    }
    if (n == 0) {
      int status = 0;
      std::string how = "closed its output";
      if (::waitpid(pid_, &status, 0) == pid_) {
        how = exit_description(status);
        pid_ = -1;
      }
      throw OracleError("oracle process " + how, next_id_);
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<ClassId> SubprocessOracle::classify(const PointBatch& points) {
  if (points.dim != dim_) {
    throw InputError("oracle expects points of width " + std::to_string(dim_) + ", got " +
                     std::to_string(points.dim));
  }
  std::lock_guard lock(mutex_);
  if (dead_) throw OracleError("oracle process is no longer usable", next_id_);
  const std::size_t id = next_id_;
  try {
    const auto deadline = Clock::now() + timeout_;
    write_all(encode_oracle_request(id, points) + "\n", deadline);
    auto labels = decode_oracle_reply(read_line(deadline), id, points.n);
    ++next_id_;
    return labels;
  } catch (const OracleError&) {
    dead_ = true;
    stop();
    throw;
  }
}

nlohmann::ordered_json SubprocessOracle::describe() const {
  return {{"kind", "subprocess"},
          {"command", command_},
          {"input_dim", dim_},
          {"timeout_ms", static_cast<std::int64_t>(timeout_.count())}};
}

}  // namespace lcx
