#pragma once

// Scorer wire protocol: one JSON object per line over a child process's
// stdin/stdout.
//
//   request:  {"id": str, "mode": "refclip"|"bert"|"categorize",
//              "candidate": str, "reference"?: str, "image_ref"?: str}
//   response: {"id": str, "score": float}        (refclip, bert)
//             {"id": str, "category": str}       (categorize)
//             {"id": str, "error": str}
//
// "refclip" requires image_ref, "bert" requires reference. Responses arrive in
// request order; a response may carry an optional "metadata" object.

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace gre {

enum class ScoreMode { refclip, bert, categorize };

std::string_view to_string(ScoreMode m) noexcept;
std::optional<ScoreMode> parse_score_mode(std::string_view s) noexcept;

struct ScoreRequest {
  std::string id;
  ScoreMode mode = ScoreMode::bert;
  std::string candidate;
  std::optional<std::string> reference;
  std::optional<std::string> image_ref;
};

struct ScoreResponse {
  std::string id;
  std::optional<double> score;
  std::optional<std::string> category;
  std::optional<std::string> error;
  nlohmann::json metadata;  // null when absent
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mode preconditions; returns the error text ("missing image_ref", ...) or nullopt.
std::optional<std::string> request_precondition_error(const ScoreRequest& req);

std::string encode_request(const ScoreRequest& req);
ScoreRequest decode_request(std::string_view line);  // throws ProtocolError
std::string encode_response(const ScoreResponse& resp);
ScoreResponse decode_response(std::string_view line);  // throws ProtocolError

class ScorerClient {
 public:
  virtual ~ScorerClient() = default;
  /// Never throws for per-request failures; they come back as error responses.
  virtual ScoreResponse score(const ScoreRequest& req) = 0;
  virtual std::string describe() const = 0;
};

/// In-process scorer answering every well-formed request with a constant.
class MockScorer final : public ScorerClient {
 public:
  explicit MockScorer(double constant, std::string category = "inference");
  ScoreResponse score(const ScoreRequest& req) override;
  std::string describe() const override;

 private:
  double constant_;
  std::string category_;
};

class ScorerSpawnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Child process speaking the protocol on its stdin/stdout. The command line
/// is split on whitespace (single and double quotes group words) and run
/// without a shell. A request that gets no matching response within the
/// timeout yields an error response; late responses are discarded by id.
class ProcessScorer final : public ScorerClient {
 public:
  ProcessScorer(const std::string& command_line, std::chrono::milliseconds timeout);
  ~ProcessScorer() override;
  ProcessScorer(const ProcessScorer&) = delete;
  ProcessScorer& operator=(const ProcessScorer&) = delete;

  ScoreResponse score(const ScoreRequest& req) override;
  std::string describe() const override;

 private:
  bool read_line(std::string& line, std::chrono::steady_clock::time_point deadline);

  std::string command_;
  std::chrono::milliseconds timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool dead_ = false;
};

std::vector<std::string> split_command_line(std::string_view cmd);

/// Serves the protocol with a constant score until `in` closes; used by the
/// `mock-scorer` CLI subcommand. Malformed lines get error responses with id
/// "unknown" and the line number.
void serve_constant(std::istream& in, std::ostream& out, double constant);

}  // namespace gre
