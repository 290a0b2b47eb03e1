#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadrep/denoise.hpp"
#include "quadrep/representation.hpp"
#include "quadrep/selection.hpp"

namespace quadrep {

using Json = nlohmann::ordered_json;

// Shortest decimal string that parses back to the same double ("nan", "inf",
// "-inf" for non-finite values). Locale independent.
std::string format_double(double v);
double parse_double(std::string_view s);

Json to_json(const Representation& rep);
Representation rep_from_json(const Json& j);  // SchemaError on mismatch

Json to_json(const SelectionTrace& trace);
Json to_json(const ManifoldFit4& fit);
Json to_json(const IterativeResult& result);

// Header `x,f`, one sample per row.
void write_dataset_csv(std::ostream& out, std::span<const double> x, std::span<const double> f);
NoisyDataset read_dataset_csv(std::istream& in);

Json dataset_metadata(const NoisyDataset& data);
void apply_metadata(NoisyDataset& data, const Json& meta);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

}  // namespace quadrep
