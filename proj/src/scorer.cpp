#include "gre/scorer.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <istream>
#include <ostream>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace gre {

namespace {

using nlohmann::json;

json parse_line(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
}

std::optional<std::string> optional_string(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ProtocolError(std::string("'") + name + "' must be a string");
  return it->get<std::string>();
}

ScoreResponse error_response(std::string id, std::string message) {
  ScoreResponse r;
  r.id = std::move(id);
  r.error = std::move(message);
  return r;
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

std::string_view to_string(ScoreMode m) noexcept {
  switch (m) {
    case ScoreMode::refclip: return "refclip";
    case ScoreMode::bert: return "bert";
    case ScoreMode::categorize: return "categorize";
  }
  return "unknown";
}

std::optional<ScoreMode> parse_score_mode(std::string_view s) noexcept {
  for (ScoreMode m : {ScoreMode::refclip, ScoreMode::bert, ScoreMode::categorize}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::optional<std::string> request_precondition_error(const ScoreRequest& req) {
  if (req.mode == ScoreMode::refclip && !req.image_ref) return "missing image_ref";
  if (req.mode == ScoreMode::bert && !req.reference) return "missing reference";
  return std::nullopt;
}

std::string encode_request(const ScoreRequest& req) {
  json j{{"id", req.id}, {"mode", std::string(to_string(req.mode))}, {"candidate", req.candidate}};
  if (req.reference) j["reference"] = *req.reference;
  if (req.image_ref) j["image_ref"] = *req.image_ref;
  return j.dump();
}

ScoreRequest decode_request(std::string_view line) {
  const json j = parse_line(line);
  if (!j.is_object()) throw ProtocolError("request is not a JSON object");
  ScoreRequest req;
  const auto id = optional_string(j, "id");
  if (!id) throw ProtocolError("request needs a string 'id'");
  req.id = *id;
  const auto mode_text = optional_string(j, "mode");
  const auto mode = mode_text ? parse_score_mode(*mode_text) : std::nullopt;
  if (!mode) throw ProtocolError("request needs 'mode' in {refclip, bert, categorize}");
  req.mode = *mode;
  const auto candidate = optional_string(j, "candidate");
  if (!candidate) throw ProtocolError("request needs a string 'candidate'");
  req.candidate = *candidate;
  req.reference = optional_string(j, "reference");
  req.image_ref = optional_string(j, "image_ref");
  return req;
}

std::string encode_response(const ScoreResponse& resp) {
  json j{{"id", resp.id}};
  if (resp.error) {
    j["error"] = *resp.error;
  } else {
    if (resp.score) j["score"] = *resp.score;
    if (resp.category) j["category"] = *resp.category;
  }
  if (!resp.metadata.is_null()) j["metadata"] = resp.metadata;
  return j.dump();
}

ScoreResponse decode_response(std::string_view line) {
  const json j = parse_line(line);
  if (!j.is_object()) throw ProtocolError("response is not a JSON object");
  ScoreResponse resp;
  const auto id = optional_string(j, "id");
  if (!id) throw ProtocolError("response needs a string 'id'");
  resp.id = *id;
  if (const auto it = j.find("score"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw ProtocolError("'score' must be a number");
    resp.score = it->get<double>();
  }
  resp.category = optional_string(j, "category");
  resp.error = optional_string(j, "error");
  if (resp.error && resp.score) throw ProtocolError("response carries both 'score' and 'error'");
  if (!resp.error && !resp.score && !resp.category) {
    throw ProtocolError("response needs one of 'score', 'category' or 'error'");
  }
  if (const auto it = j.find("metadata"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ProtocolError("'metadata' must be an object");
    resp.metadata = *it;
  }
  return resp;
}

MockScorer::MockScorer(double constant, std::string category)
    : constant_(constant), category_(std::move(category)) {
  if (!(constant >= 0.0 && constant <= 1.0)) {
    throw std::invalid_argument("mock scorer constant must lie in [0, 1]");
  }
}

ScoreResponse MockScorer::score(const ScoreRequest& req) {
  if (auto err = request_precondition_error(req)) return error_response(req.id, *err);
  ScoreResponse resp;
  resp.id = req.id;
  if (req.mode == ScoreMode::categorize) {
    resp.category = category_;
  } else {
    resp.score = constant_;
  }
  return resp;
}

std::string MockScorer::describe() const {
  json j = constant_;
  return "mock(" + j.dump() + ")";
}

std::vector<std::string> split_command_line(std::string_view cmd) {
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (char c : cmd) {
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else {
        current += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else {
      current += c;
      in_word = true;
    }
  }
  if (quote != 0) throw std::invalid_argument("unterminated quote in command line");
  if (in_word) words.push_back(std::move(current));
  return words;
}

ProcessScorer::ProcessScorer(const std::string& command_line, std::chrono::milliseconds timeout)
    : command_(command_line), timeout_(timeout) {
  const std::vector<std::string> words = split_command_line(command_line);
  if (words.empty()) throw ScorerSpawnError("empty scorer command");
  if (timeout.count() <= 0) throw std::invalid_argument("scorer timeout must be positive");

  // A dead child must surface as EPIPE, not kill the process.
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ScorerSpawnError(std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ScorerSpawnError(std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (const auto& w : words) argv.push_back(const_cast<char*>(w.c_str()));
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw ScorerSpawnError("cannot start scorer '" + words[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ProcessScorer::~ProcessScorer() {
  if (to_child_ >= 0) ::close(to_child_);
  if (pid_ > 0) {
    // Closing stdin asks the child to exit; give it a moment before killing.
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      ::usleep(20000);
    }
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }
  if (from_child_ >= 0) ::close(from_child_);
}

bool ProcessScorer::read_line(std::string& line, std::chrono::steady_clock::time_point deadline) {
  for (;;) {
    if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
      line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return true;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      dead_ = true;
      return false;
    }
    if (rc == 0) return false;
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      dead_ = true;
      return false;
    }
    if (n == 0) {
      dead_ = true;
      return false;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

ScoreResponse ProcessScorer::score(const ScoreRequest& req) {
  if (auto err = request_precondition_error(req)) return error_response(req.id, *err);
  if (dead_) return error_response(req.id, "scorer process is not running");
  if (!write_all(to_child_, encode_request(req) + "\n")) {
    dead_ = true;
    return error_response(req.id, "scorer process closed its input");
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::string line;
  while (read_line(line, deadline)) {
    if (line.empty()) continue;
    ScoreResponse resp;
    try {
      resp = decode_response(line);
    } catch (const ProtocolError& e) {
      return error_response(req.id, std::string("protocol error: ") + e.what());
    }
    if (resp.id == req.id) return resp;
    // Anything else answers an earlier, timed-out request.
  }
  if (dead_) return error_response(req.id, "scorer process exited");
  return error_response(req.id, "timeout after " + std::to_string(timeout_.count()) + " ms");
}

std::string ProcessScorer::describe() const { return "process(" + command_ + ")"; }

void serve_constant(std::istream& in, std::ostream& out, double constant) {
  MockScorer mock(constant);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ScoreResponse resp;
    try {
      resp = mock.score(decode_request(line));
    } catch (const ProtocolError& e) {
      resp = error_response("unknown", "malformed request at line " + std::to_string(line_no) +
                                           ": " + e.what());
    }
    out << encode_response(resp) << '\n' << std::flush;
  }
}

}  // namespace gre
