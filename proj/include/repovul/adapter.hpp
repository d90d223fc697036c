#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "repovul/detection.hpp"
#include "repovul/retrieval.hpp"

namespace repovul {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::chrono::milliseconds kDefaultAdapterTimeout{30000};

// Reads REPOVUL_ADAPTER_TIMEOUT_MS, falling back to kDefaultAdapterTimeout.
std::chrono::milliseconds adapter_timeout_from_env();

// Bidirectional line channel to an adapter.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  // Throws Error{AdapterTimeout} or Error{AdapterCrashed}.
  virtual std::string read_line() = 0;
};

// Child process started through /bin/sh -c; its stdin/stdout carry the
// protocol and stderr is inherited. The child is reaped on destruction.
class ProcessChannel final : public LineChannel {
 public:
  ProcessChannel(const std::string& command, std::chrono::milliseconds timeout);
  ~ProcessChannel() override;
  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line() override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::chrono::milliseconds timeout_;
  std::string buffer_;
};

struct AdapterVerdict {
  int label = 0;
  double score = 0.0;
};

// Speaks protocol v1 over a channel. One request is in flight at a time.
class AdapterClient {
 public:
  explicit AdapterClient(std::unique_ptr<LineChannel> channel);

  // Performs the hello exchange; throws Error{ProtocolError} on a version
  // mismatch or malformed reply.
  void handshake();
  const std::string& name() const { return name_; }

  AdapterVerdict detect(std::string_view code, Strategy strategy);
  std::vector<double> embed(std::string_view text);

  std::size_t requests_sent() const { return next_id_; }

 private:
  std::string next_request_id();
  nlohmann::json await(std::string_view id, std::string_view type);

  std::unique_ptr<LineChannel> channel_;
  std::string name_;
  bool ready_ = false;
  std::size_t next_id_ = 0;
  std::size_t dimension_ = 0;
};

class ExternalDetector final : public Detector {
 public:
  ExternalDetector(std::string id, std::shared_ptr<AdapterClient> client,
                   std::size_t budget = kDefaultContextBudget);

  const std::string& id() const override { return id_; }
  std::size_t context_budget() const override { return budget_; }
  // predicted comes from the adapter's label verbatim; score is advisory.
  DetectionOutcome detect(const ComposedInput& input) override;

 private:
  std::string id_;
  std::shared_ptr<AdapterClient> client_;
  std::size_t budget_;
};

class AdapterEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit AdapterEmbeddingProvider(std::shared_ptr<AdapterClient> client) : client_(std::move(client)) {}
  std::vector<double> embed(std::string_view text) override { return client_->embed(text); }

 private:
  std::shared_ptr<AdapterClient> client_;
};

// Spawns `command`, completes the handshake and returns the client.
std::shared_ptr<AdapterClient> launch_adapter(const std::string& command,
                                              std::chrono::milliseconds timeout);

}  // namespace repovul
