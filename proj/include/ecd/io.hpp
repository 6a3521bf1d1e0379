#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecd/core.hpp"

namespace ecd {

using json = nlohmann::json;

json to_json(const Vector& v);
Vector vector_from_json(const json& j);

json to_json(const BbiHyperParams& hp);
/// Reads a full or partial object; absent keys keep their values in `hp`.
/// Unknown keys raise ParseError.
void update_from_json(BbiHyperParams& hp, const json& j);

json to_json(const EcdState& s);
EcdState state_from_json(const json& j);

/// Summary fields only; the trace goes to CSV.
json to_json(const RunSummary& r);

/// Shortest round-trip decimal form, "nan"/"inf"/"-inf" for non-finite.
std::string format_double(double x);

inline constexpr const char* kTraceCsvHeader = "step,V,pi_norm,speed,energy_err,bounce";

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace ecd
