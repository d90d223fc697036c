#include "repovul/adapter.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "repovul/error.hpp"

extern char** environ;

namespace repovul {

std::chrono::milliseconds adapter_timeout_from_env() {
  const char* env = std::getenv("REPOVUL_ADAPTER_TIMEOUT_MS");
  if (env == nullptr || *env == '\0') return kDefaultAdapterTimeout;
  char* end = nullptr;
  const long long ms = std::strtoll(env, &end, 10);
  if (end == env || *end != '\0' || ms <= 0) {
    throw Error(ErrorCode::InvalidConfig, "REPOVUL_ADAPTER_TIMEOUT_MS must be a positive integer");
  }
  return std::chrono::milliseconds(ms);
}

ProcessChannel::ProcessChannel(const std::string& command, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0 || pipe2(out_pipe, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::AdapterCrashed, std::string("pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  std::string shell = "/bin/sh";
  std::string flag = "-c";
  std::string cmd = command;
  char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
  pid_t pid = -1;
  const int rc = posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  close(in_pipe[0]);
  close(out_pipe[1]);
  if (rc != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    throw Error(ErrorCode::AdapterCrashed, "cannot start adapter: " + std::string(std::strerror(rc)));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ProcessChannel::~ProcessChannel() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ <= 0) return;
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    if (waitpid(pid_, &status, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  kill(pid_, SIGKILL);
  waitpid(pid_, &status, 0);
}

void ProcessChannel::write_line(std::string_view line) {
  std::string data(line);
  data.push_back('\n');
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = write(to_child_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::AdapterCrashed, std::string("write to adapter: ") + std::strerror(errno));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::string ProcessChannel::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error(ErrorCode::AdapterTimeout, "no reply within " + std::to_string(timeout_.count()) + " ms");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::AdapterCrashed, std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::AdapterCrashed, std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) throw Error(ErrorCode::AdapterCrashed, "adapter closed its output stream");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

AdapterClient::AdapterClient(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {}

void AdapterClient::handshake() {
  nlohmann::ordered_json hello;
  hello["type"] = "hello";
  hello["version"] = kProtocolVersion;
  channel_->write_line(hello.dump());
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(channel_->read_line());
    if (reply.at("type") != "hello") throw Error(ErrorCode::ProtocolError, "expected hello, got " + reply.dump());
    if (reply.at("version") != kProtocolVersion) {
      throw Error(ErrorCode::ProtocolError, "adapter speaks version " + reply.at("version").dump());
    }
    name_ = reply.at("name").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("bad hello: ") + e.what());
  }
  ready_ = true;
}

std::string AdapterClient::next_request_id() { return "r" + std::to_string(next_id_++); }

nlohmann::json AdapterClient::await(std::string_view id, std::string_view type) {
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(channel_->read_line());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("malformed JSON from adapter: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_string()) {
    throw Error(ErrorCode::ProtocolError, "reply without id: " + reply.dump());
  }
  if (reply["id"].get<std::string>() != id) {
    throw Error(ErrorCode::ProtocolError,
                "reply id " + reply["id"].get<std::string>() + " does not match request " + std::string(id));
  }
  if (!reply.contains("type") || reply["type"] != type) {
    throw Error(ErrorCode::ProtocolError, "expected " + std::string(type) + " reply: " + reply.dump());
  }
  return reply;
}

AdapterVerdict AdapterClient::detect(std::string_view code, Strategy strategy) {
  if (!ready_) throw Error(ErrorCode::ProtocolError, "handshake not completed");
  const std::string id = next_request_id();
  nlohmann::ordered_json req;
  req["type"] = "detect";
  req["id"] = id;
  req["code"] = code;
  req["strategy"] = to_string(strategy);
  channel_->write_line(req.dump());
  const auto reply = await(id, "result");
  AdapterVerdict v;
  try {
    v.label = reply.at("label").get<int>();
    v.score = reply.at("score").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("bad result: ") + e.what());
  }
  if ((v.label != 0 && v.label != 1) || !(v.score >= 0.0 && v.score <= 1.0)) {
    throw Error(ErrorCode::ProtocolError, "result out of range: " + reply.dump());
  }
  return v;
}

std::vector<double> AdapterClient::embed(std::string_view text) {
  if (!ready_) throw Error(ErrorCode::ProtocolError, "handshake not completed");
  const std::string id = next_request_id();
  nlohmann::ordered_json req;
  req["type"] = "embed";
  req["id"] = id;
  req["text"] = text;
  channel_->write_line(req.dump());
  const auto reply = await(id, "embedding");
  std::vector<double> vec;
  try {
    vec = reply.at("vector").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("bad embedding: ") + e.what());
  }
  if (vec.empty()) throw Error(ErrorCode::ProtocolError, "empty embedding");
  if (dimension_ == 0) dimension_ = vec.size();
  if (vec.size() != dimension_) {
    throw Error(ErrorCode::ProtocolError, "embedding dimension changed from " + std::to_string(dimension_) +
                                              " to " + std::to_string(vec.size()));
  }
  return vec;
}

ExternalDetector::ExternalDetector(std::string id, std::shared_ptr<AdapterClient> client, std::size_t budget)
    : id_(std::move(id)), client_(std::move(client)), budget_(budget) {
  if (!client_) throw Error(ErrorCode::ProviderUnavailable, "external detector without adapter");
  if (budget_ < kMinContextBudget) {
    throw Error(ErrorCode::InvalidArgument, "context budget must be at least 64 tokens");
  }
}

DetectionOutcome ExternalDetector::detect(const ComposedInput& input) {
  const AdapterVerdict v = client_->detect(input.text, input.strategy);
  DetectionOutcome out;
  out.sample_id = input.sample_id;
  out.predicted = v.label;
  out.score = v.score;
  out.detector_id = id_;
  out.strategy = input.strategy;
  return out;
}

std::shared_ptr<AdapterClient> launch_adapter(const std::string& command,
                                              std::chrono::milliseconds timeout) {
  auto client = std::make_shared<AdapterClient>(std::make_unique<ProcessChannel>(command, timeout));
  client->handshake();
  return client;
}

}  // namespace repovul
