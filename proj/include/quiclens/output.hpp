#pragma once

#include <iosfwd>
#include <vector>

#include "quiclens/ingest.hpp"

namespace quiclens {

inline constexpr const char* kSchemaVersion = "1.0";

void write_jsonl(std::ostream& out, const std::vector<OutputRecord>& records);
void write_csv(std::ostream& out, const std::vector<OutputRecord>& records);

// Parses records previously written by write_jsonl (used by the eval CLI).
std::vector<OutputRecord> read_jsonl(std::istream& in);

}  // namespace quiclens
