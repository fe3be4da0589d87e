#pragma once

#include <cstdint>
#include <string>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "t2iattack/oracle.hpp"

namespace t2ia {

inline constexpr std::string_view kProtocolVersionHeader = "X-T2IA-Protocol";
inline constexpr std::string_view kProtocolVersion = "1";

struct Capabilities {
  std::size_t dimension = 0;
  int max_n = 0;
  std::vector<std::string> encoders;
};

// Wire codecs, shared by the client and test stubs.
namespace wire {

nlohmann::json generate_request(std::string_view text, int n, EncoderRole encoder,
                                std::optional<std::uint64_t> seed);
nlohmann::json embed_text_request(std::string_view text, EncoderRole encoder);

/// Each parser validates the schema and unit norm (within 1e-5) and throws
/// Error(kProtocol) on violations.
EmbeddingBatch parse_generate_response(const nlohmann::json& body, std::string_view text,
                                       int n, std::size_t dimension);
Embedding parse_embed_text_response(const nlohmann::json& body, std::size_t dimension);
Capabilities parse_capabilities(const nlohmann::json& body);

nlohmann::json generate_response(const EmbeddingBatch& batch, std::string_view model_id);
nlohmann::json embed_text_response(const Embedding& embedding, std::string_view model_id);
nlohmann::json capabilities_response(const Capabilities& caps);

inline constexpr double kUnitNormTolerance = 1e-5;

}  // namespace wire

/// HTTP client for the adapter service.
///
/// A call is retried up to retry_cap times on transport failures and 5xx
/// responses; OracleUnavailable reports how many attempts were made.
class RemoteOracle final : public GenerationOracle {
 public:
  explicit RemoteOracle(const OracleConfig& config);
  ~RemoteOracle() override;

  EmbeddingBatch generate(std::string_view text, int n, EncoderRole encoder) override;
  Embedding embed_text(std::string_view text, EncoderRole encoder) override;
  std::size_t dimension() const override;
  std::string model_id() const override;

  const Capabilities& capabilities() const;

  /// Total HTTP attempts made, retries included.
  std::uint64_t attempts() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace t2ia
