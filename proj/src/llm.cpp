#include "rdes/llm.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "rdes/error.hpp"

namespace rdes {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

void check_demos(const PromptSpec& spec) {
  if (spec.demos.empty()) throw Error("prompt builder: few-shot styles need at least one demo");
  for (const auto& [text, label] : spec.demos) {
    (void)text;
    if (std::find(spec.labels.begin(), spec.labels.end(), label) == spec.labels.end()) {
      throw Error("prompt builder: demo label '" + label + "' is not in the label set");
    }
  }
}

std::string render_prompt(const PromptSpec& spec, bool cot) {
  check_demos(spec);
  std::string out = "Classify the final text into exactly one of the allowed labels.\n";
  out += "Labels: ";
  for (std::size_t i = 0; i < spec.labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += spec.labels[i];
  }
  out += "\n";
  if (cot) {
    out +=
        "Reason step by step about which label fits, then end your answer "
        "with one final line of the form:\nLabel: <one of the allowed labels>\n";
  }
  for (const auto& [text, label] : spec.demos) {
    out += "Text: " + text + "\nLabel: " + label + "\n";
  }
  out += "Text: " + spec.input_text + "\nLabel:";
  return out;
}

}  // namespace

PromptStyle prompt_style_from_string(const std::string& s) {
  if (s == "standard") return PromptStyle::standard;
  if (s == "cot") return PromptStyle::cot;
  throw ConfigError("unknown prompt style '" + s + "'");
}

std::string to_string(PromptStyle s) {
  return s == PromptStyle::standard ? "standard" : "cot";
}

std::string build_standard_prompt(const PromptSpec& spec) {
  if (spec.style != PromptStyle::standard) {
    throw Error("build_standard_prompt: spec style is not 'standard'");
  }
  return render_prompt(spec, false);
}

std::string build_cot_prompt(const PromptSpec& spec) {
  if (spec.style != PromptStyle::cot) throw Error("build_cot_prompt: spec style is not 'cot'");
  return render_prompt(spec, true);
}

void BackendConfig::validate() const {
  if (kind == Kind::http_chat) {
    if (endpoint.empty()) throw ConfigError("http_chat backend needs an endpoint");
    if (model.empty()) throw ConfigError("http_chat backend needs a model name");
  }
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (timeout_ms < 1) throw ConfigError("timeout_ms must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
}

BackendConfig::Kind backend_kind_from_string(const std::string& s) {
  if (s == "http_chat") return BackendConfig::Kind::http_chat;
  if (s == "mock_oracle") return BackendConfig::Kind::mock_oracle;
  throw ConfigError("unknown backend kind '" + s + "'");
}

std::string to_string(BackendConfig::Kind k) {
  return k == BackendConfig::Kind::http_chat ? "http_chat" : "mock_oracle";
}

ParsedPrediction parse_label(const std::string& raw, const std::vector<std::string>& labels) {
  std::vector<std::string> lines;
  {
    std::string current;
    for (char c : raw) {
      if (c == '\n') {
        lines.push_back(current);
        current.clear();
      } else if (c != '\r') {
        current.push_back(c);
      }
    }
    lines.push_back(current);
  }

  auto canonical = [&](const std::string& candidate) -> std::optional<std::string> {
    const std::string lc = lower(trim(candidate));
    for (const auto& label : labels) {
      if (lower(label) == lc) return label;
    }
    return std::nullopt;
  };

  // Rule 1: last "Label: X" line whose X is in the vocabulary.
  for (std::size_t i = lines.size(); i-- > 0;) {
    const std::string line = trim(lines[i]);
    const std::string lowered = lower(line);
    if (lowered.rfind("label:", 0) != 0) continue;
    std::string candidate = trim(line.substr(6));
    while (!candidate.empty() && (candidate.back() == '.' || candidate.back() == '!')) {
      candidate.pop_back();
    }
    if (auto label = canonical(candidate)) {
      ParsedPrediction out;
      out.label = *label;
      out.raw_text = raw;
      std::string reasoning;
      for (std::size_t j = 0; j < i; ++j) {
        if (j > 0) reasoning += '\n';
        reasoning += lines[j];
      }
      if (!trim(reasoning).empty()) out.reasoning = trim(reasoning);
      return out;
    }
  }

  // Rule 2: the whole response is exactly a label.
  if (auto label = canonical(raw)) {
    return ParsedPrediction{*label, raw, std::nullopt};
  }

  // Rule 3: exactly one label occurs in the final non-empty line.
  std::string final_line;
  for (std::size_t i = lines.size(); i-- > 0;) {
    if (!trim(lines[i]).empty()) {
      final_line = lower(lines[i]);
      break;
    }
  }
  std::vector<std::string> hits;
  for (const auto& label : labels) {
    if (final_line.find(lower(label)) != std::string::npos) hits.push_back(label);
  }
  if (hits.size() == 1) {
    return ParsedPrediction{hits[0], raw, std::nullopt};
  }
  throw LabelParseError(hits.empty() ? "no label found in response"
                                     : "ambiguous response mentions several labels");
}

std::string mock_predict(const TfidfModel& m, const std::string& input_text,
                         const std::vector<std::pair<std::string, std::string>>& demos) {
  if (demos.empty()) throw Error("mock_predict: demos must be non-empty");
  const SparseVector query = m.transform(input_text);
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < demos.size(); ++i) {
    const double score = cosine(query, m.transform(demos[i].first));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return demos[best].second;
}

namespace {

class MockOracleBackend final : public LlmBackend {
 public:
  explicit MockOracleBackend(const TfidfModel& model) : model_(&model) {}

  std::string complete(const PromptSpec& spec, const std::string&) override {
    return "Label: " + mock_predict(*model_, spec.input_text, spec.demos);
  }

 private:
  const TfidfModel* model_;
};

class HttpChatBackend final : public LlmBackend {
 public:
  explicit HttpChatBackend(BackendConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  std::string complete(const PromptSpec&, const std::string& prompt) override {
    nlohmann::json body;
    body["model"] = cfg_.model;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = cfg_.temperature;
    body["max_tokens"] = cfg_.max_tokens;
    const std::string payload = body.dump();

    std::string last_cause;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        const auto delay = cfg_.backoff_ms * (1L << (attempt - 1));
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }

      httplib::Client client(cfg_.endpoint);
      client.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
      client.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
      client.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
      httplib::Headers headers;
      if (const char* key = std::getenv(kApiKeyEnvVar)) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }

      auto res = client.Post("/v1/chat/completions", headers, payload, "application/json");
      if (!res) {
        const auto err = res.error();
        last_cause = "transport error: " + httplib::to_string(err);
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
          last_cause = "timeout: " + httplib::to_string(err);
        }
        continue;  // retryable
      }
      if (res->status == 401 || res->status == 403) {
        throw BackendError(BackendError::Kind::auth,
                           "authentication failed (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status >= 500) {
        last_cause = "HTTP " + std::to_string(res->status);
        continue;  // retryable
      }
      if (res->status != 200) {
        throw BackendError(BackendError::Kind::transport,
                           "unexpected HTTP " + std::to_string(res->status));
      }
      return extract_content(res->body);
    }
    throw BackendError(BackendError::Kind::retries_exhausted,
                       "retries exhausted; last cause: " + last_cause);
  }

 private:
  static std::string extract_content(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      throw BackendError(BackendError::Kind::malformed, "response is not valid JSON");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      throw BackendError(BackendError::Kind::malformed, "response has no choices");
    }
    const auto& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
      throw BackendError(BackendError::Kind::malformed, "response choice has no message content");
    }
    return choice["message"]["content"].get<std::string>();
  }

  BackendConfig cfg_;
};

}  // namespace

std::unique_ptr<LlmBackend> make_http_backend(const BackendConfig& cfg) {
  return std::make_unique<HttpChatBackend>(cfg);
}

std::unique_ptr<LlmBackend> make_mock_backend(const TfidfModel& model) {
  return std::make_unique<MockOracleBackend>(model);
}

std::unique_ptr<LlmBackend> make_backend(const BackendConfig& cfg, const TfidfModel* mock_model) {
  cfg.validate();
  if (cfg.kind == BackendConfig::Kind::http_chat) return make_http_backend(cfg);
  if (mock_model == nullptr) {
    throw ConfigError("mock_oracle backend needs a fitted TF-IDF model");
  }
  return make_mock_backend(*mock_model);
}

}  // namespace rdes
