#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdes/featurize.hpp"

namespace rdes {

inline constexpr const char* kTemplateVersion = "v1";
inline constexpr const char* kApiKeyEnvVar = "RDES_API_KEY";

enum class PromptStyle { standard, cot };

PromptStyle prompt_style_from_string(const std::string& s);
std::string to_string(PromptStyle s);

struct PromptSpec {
  std::string input_text;
  std::vector<std::pair<std::string, std::string>> demos;  // (text, label)
  std::vector<std::string> labels;
  PromptStyle style = PromptStyle::standard;
  std::string template_version = kTemplateVersion;
};

// Deterministic, byte-stable few-shot prompt: instruction line, the label
// set as a comma-separated line, one "Text:/Label:" block per demo, then the
// query with an open "Label:".
std::string build_standard_prompt(const PromptSpec& spec);

// The standard prompt with a step-by-step reasoning instruction block; the
// two differ only in that block.
std::string build_cot_prompt(const PromptSpec& spec);

struct BackendConfig {
  enum class Kind { http_chat, mock_oracle };

  Kind kind = Kind::mock_oracle;
  std::string endpoint;  // base URL, e.g. http://localhost:8080
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  int timeout_ms = 30000;
  int max_retries = 3;
  int backoff_ms = 250;
  int max_in_flight = 4;

  void validate() const;
};

BackendConfig::Kind backend_kind_from_string(const std::string& s);
std::string to_string(BackendConfig::Kind k);

struct ParsedPrediction {
  std::string label;
  std::string raw_text;
  std::optional<std::string> reasoning;
};

// Resolution order: (1) last "Label: X" line with X in the vocabulary,
// case-insensitively; (2) exact whole-string match; (3) unique label
// substring in the final non-empty line. Zero or multiple candidates throw
// LabelParseError. Text before a matched "Label:" line becomes reasoning.
ParsedPrediction parse_label(const std::string& raw, const std::vector<std::string>& labels);

// Nearest-demo-by-cosine label; ties go to the earliest demo. The oracle can
// only return labels present among the demos, so a selection covering the
// true label is a necessary condition for a correct prediction.
std::string mock_predict(const TfidfModel& m, const std::string& input_text,
                         const std::vector<std::pair<std::string, std::string>>& demos);

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  // Raw completion text for a rendered prompt. The structured spec rides
  // along so the mock oracle can score demos without re-parsing the prompt.
  virtual std::string complete(const PromptSpec& spec, const std::string& prompt) = 0;
};

// OpenAI-compatible /v1/chat/completions client with bounded retries and
// exponential backoff on transport and 5xx errors. Reads the API key from
// the RDES_API_KEY environment variable.
std::unique_ptr<LlmBackend> make_http_backend(const BackendConfig& cfg);

// Deterministic oracle backend delegating to mock_predict; responds with a
// single "Label: X" line.
std::unique_ptr<LlmBackend> make_mock_backend(const TfidfModel& model);

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& cfg, const TfidfModel* mock_model);

}  // namespace rdes
