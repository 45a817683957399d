#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "motifcnn/ansatz.hpp"

namespace motifcnn {

using Json = nlohmann::json;

/// Writes to a sibling temporary file, then renames over the target.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
void write_json_atomic(const std::filesystem::path& path, const Json& doc);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws InvalidArgument if absent.
  std::size_t column(const std::string& name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);
void write_csv_atomic(const std::filesystem::path& path, const CsvTable& table);

Json read_json(const std::filesystem::path& path);

/// Round-trippable decimal text for a double.
std::string format_double(double x);

/// 16 hex digits of FNV-1a over the compact dump.
std::string content_hash(const Json& doc);

/// {N, M, K, v, b, w: row-major}.
Json params_to_json(const CnnParams& p, int sites);
CnnParams params_from_json(const Json& doc);

}  // namespace motifcnn
