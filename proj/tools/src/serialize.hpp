#pragma once

#include <string>

#include <json.hpp>

#include "t2iattack/attack.hpp"
#include "t2iattack/evaluation.hpp"

namespace t2ia::cli {

using Json = nlohmann::ordered_json;

Json ledger_json(const QueryLedger& ledger);
Json result_json(const AttackResult& result, const EvalRow* evaluation);

/// 16 hex digits of a 64-bit content hash.
std::string digest_hex(std::string_view bytes);

}  // namespace t2ia::cli
