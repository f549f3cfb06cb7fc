#pragma once

#include <string>
#include <vector>

#include "batchlr/common.hpp"
#include "batchlr/model.hpp"

namespace batchlr {

/// Dataset <-> JSON, format tag "batchlr-dataset-v1". Field names are part
/// of the on-disk contract: params {d,n,m,alpha,sigma,R,k,seed}, covariates
/// (model name), beta_star, batches [{X: row-major point rows, y}],
/// provenance [{origin, detail}].
std::string dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const std::string& text);

/// Candidate lists as a JSON array of arrays, shortest round-trip doubles.
std::string candidates_to_json(const std::vector<Vec>& candidates);
std::vector<Vec> candidates_from_json(const std::string& text);

/// Doubles for CSV cells: 17 significant digits, '.' separator, round-trips
/// exactly.
std::string format_double(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// FNV-1a over the canonical text, reported as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace batchlr
