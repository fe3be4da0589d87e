#include "t2iattack/remote_oracle.hpp"

#include <atomic>
#include <cmath>
#include <mutex>

#include <httplib.h>

#include "t2iattack/error.hpp"

namespace t2ia {

namespace wire {

namespace {

Embedding parse_unit_row(const nlohmann::json& row, std::size_t dimension) {
  if (!row.is_array()) throw Error(ErrorCode::kProtocol, "embedding row is not an array");
  std::vector<double> values;
  values.reserve(row.size());
  for (const auto& v : row) {
    if (!v.is_number()) throw Error(ErrorCode::kProtocol, "embedding value is not a number");
    values.push_back(v.get<double>());
  }
  if (dimension != 0 && values.size() != dimension) {
    throw Error(ErrorCode::kProtocol, "embedding has dimension " + std::to_string(values.size()) +
                                          ", expected " + std::to_string(dimension));
  }
  double s = 0.0;
  for (double v : values) s += v * v;
  if (std::abs(std::sqrt(s) - 1.0) > kUnitNormTolerance) {
    throw Error(ErrorCode::kProtocol, "embedding is not unit-norm");
  }
  return l2_normalize(values);
}

const nlohmann::json& field(const nlohmann::json& body, const char* name) {
  if (!body.is_object() || !body.contains(name)) {
    throw Error(ErrorCode::kProtocol, std::string("missing field '") + name + "'");
  }
  return body.at(name);
}

}  // namespace

nlohmann::json generate_request(std::string_view text, int n, EncoderRole encoder,
                                std::optional<std::uint64_t> seed) {
  nlohmann::json body = {{"text", text}, {"n", n}, {"encoder", to_string(encoder)}};
  if (seed) body["seed"] = *seed;
  return body;
}

nlohmann::json embed_text_request(std::string_view text, EncoderRole encoder) {
  return {{"text", text}, {"encoder", to_string(encoder)}};
}

EmbeddingBatch parse_generate_response(const nlohmann::json& body, std::string_view text, int n,
                                       std::size_t dimension) {
  const auto& rows = field(body, "embeddings");
  if (!rows.is_array()) throw Error(ErrorCode::kProtocol, "'embeddings' is not an array");
  if (static_cast<int>(rows.size()) != n) {
    throw Error(ErrorCode::kProtocol, "expected " + std::to_string(n) + " embeddings, got " +
                                          std::to_string(rows.size()));
  }
  if (!field(body, "model_id").is_string() || !field(body, "query_id").is_string()) {
    throw Error(ErrorCode::kProtocol, "model_id and query_id must be strings");
  }
  EmbeddingBatch batch;
  batch.source_text = std::string(text);
  batch.query_id = body.at("query_id").get<std::string>();
  for (const auto& row : rows) batch.embeddings.push_back(parse_unit_row(row, dimension));
  batch.validate();
  return batch;
}

Embedding parse_embed_text_response(const nlohmann::json& body, std::size_t dimension) {
  if (!field(body, "model_id").is_string()) {
    throw Error(ErrorCode::kProtocol, "model_id must be a string");
  }
  return parse_unit_row(field(body, "embedding"), dimension);
}

Capabilities parse_capabilities(const nlohmann::json& body) {
  Capabilities caps;
  const auto& dim = field(body, "dimension");
  const auto& max_n = field(body, "max_n");
  const auto& encoders = field(body, "encoders");
  if (!dim.is_number_integer() || dim.get<long long>() < 1 || !max_n.is_number_integer() ||
      max_n.get<long long>() < 1 || !encoders.is_array()) {
    throw Error(ErrorCode::kProtocol, "malformed capabilities");
  }
  caps.dimension = dim.get<std::size_t>();
  caps.max_n = max_n.get<int>();
  for (const auto& e : encoders) {
    if (!e.is_string()) throw Error(ErrorCode::kProtocol, "encoder ids must be strings");
    caps.encoders.push_back(e.get<std::string>());
  }
  return caps;
}

nlohmann::json generate_response(const EmbeddingBatch& batch, std::string_view model_id) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : batch.embeddings) {
    rows.push_back(std::vector<double>(e.values().begin(), e.values().end()));
  }
  return {{"embeddings", rows}, {"model_id", model_id}, {"query_id", batch.query_id}};
}

nlohmann::json embed_text_response(const Embedding& embedding, std::string_view model_id) {
  return {{"embedding", std::vector<double>(embedding.values().begin(), embedding.values().end())},
          {"model_id", model_id}};
}

nlohmann::json capabilities_response(const Capabilities& caps) {
  return {{"dimension", caps.dimension}, {"max_n", caps.max_n}, {"encoders", caps.encoders}};
}

}  // namespace wire

struct RemoteOracle::Impl {
  explicit Impl(const OracleConfig& config) : config(config) {
    const std::string& url = config.endpoint;
    const auto scheme = url.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto path_start = url.find('/', host_start);
    base_url = url.substr(0, path_start);
    if (path_start != std::string::npos) {
      path_prefix = url.substr(path_start);
      while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
    }
  }

  httplib::Headers headers() const {
    httplib::Headers h{{std::string(kProtocolVersionHeader), std::string(kProtocolVersion)}};
    if (!config.bearer_token.empty()) h.emplace("Authorization", "Bearer " + config.bearer_token);
    return h;
  }

  httplib::Client make_client() const {
    httplib::Client client(base_url);
    const auto secs = static_cast<time_t>(config.timeout_seconds);
    const auto usecs = static_cast<time_t>((config.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    return client;
  }

  // One logical call: up to 1 + retry_cap HTTP attempts.
  nlohmann::json call(const std::string& method, const std::string& path,
                      const nlohmann::json* body) {
    httplib::Client client = make_client();
    const int max_attempts = 1 + config.retry_cap;
    std::string last_error = "no attempt made";
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      ++attempts;
      httplib::Result res = method == "GET"
                                ? client.Get(path_prefix + path, headers())
                                : client.Post(path_prefix + path, headers(), body->dump(),
                                              "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::kProtocol,
                    path + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kProtocol, path + " returned invalid JSON: " + e.what());
      }
    }
    throw OracleUnavailable(config.endpoint + path + ": " + last_error, max_attempts);
  }

  const Capabilities& caps() {
    std::call_once(caps_once, [this] {
      capabilities = wire::parse_capabilities(call("GET", "/v1/capabilities", nullptr));
    });
    return capabilities;
  }

  OracleConfig config;
  std::string base_url;
  std::string path_prefix;
  std::atomic<std::uint64_t> attempts{0};
  std::once_flag caps_once;
  Capabilities capabilities;
  std::mutex model_mutex;
  std::string model_id;
};

RemoteOracle::RemoteOracle(const OracleConfig& config) : impl_(std::make_unique<Impl>(config)) {
  config.validate();
}

RemoteOracle::~RemoteOracle() = default;

EmbeddingBatch RemoteOracle::generate(std::string_view text, int n, EncoderRole encoder) {
  if (text.empty()) throw Error(ErrorCode::kEmptyInput, "empty text");
  const auto& caps = impl_->caps();
  if (n < 1 || n > caps.max_n) {
    throw Error(ErrorCode::kPrecondition, "n must be in [1, " + std::to_string(caps.max_n) + "]");
  }
  const auto request = wire::generate_request(text, n, encoder, impl_->config.seed);
  const auto body = impl_->call("POST", "/v1/generate", &request);
  auto batch = wire::parse_generate_response(body, text, n, caps.dimension);
  std::lock_guard lock(impl_->model_mutex);
  impl_->model_id = body.at("model_id").get<std::string>();
  return batch;
}

Embedding RemoteOracle::embed_text(std::string_view text, EncoderRole encoder) {
  if (text.empty()) throw Error(ErrorCode::kEmptyInput, "empty text");
  const auto& caps = impl_->caps();
  const auto request = wire::embed_text_request(text, encoder);
  return wire::parse_embed_text_response(impl_->call("POST", "/v1/embed_text", &request),
                                         caps.dimension);
}

std::size_t RemoteOracle::dimension() const { return impl_->caps().dimension; }

std::string RemoteOracle::model_id() const {
  std::lock_guard lock(impl_->model_mutex);
  return impl_->model_id.empty() ? "remote:" + impl_->config.endpoint : impl_->model_id;
}

const Capabilities& RemoteOracle::capabilities() const { return impl_->caps(); }

std::uint64_t RemoteOracle::attempts() const { return impl_->attempts.load(); }

}  // namespace t2ia
