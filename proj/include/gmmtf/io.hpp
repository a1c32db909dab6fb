#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "gmmtf/core.hpp"
#include "gmmtf/transformer.hpp"

namespace gmmtf {

// Task JSON: {"d", "k", "weights", "means", "scales"?, "data", "labels"?}.
std::string task_to_json(const Task& task, int indent = -1);
Task task_from_json(const std::string& text);

std::string params_to_json(const GmmParams& params, int indent = -1);
GmmParams params_from_json(const std::string& text);

// Weight JSON:
//   {"format": "gmmtf-weights", "version": 1, "embed_dim": D,
//    "layers": [{"activation": "softmax" | "relu_scaled",
//                "heads": [{"query": M, "key": M, "value": M}, ...],
//                "mlp": {"w1": M, "w2": M}}, ...],
//    "readout": {"pooling": "softmax" | "linear_mean",
//                "value": M, "key": M, "query": M}?}
// where M = {"rows": r, "cols": c, "data": [row-major doubles]}.
std::string weights_to_json(const TfWeights& weights);
TfWeights weights_from_json(const std::string& text);

// Binary weights: magic "GMTFW\0\0\1", then little-endian u32/f64 fields in
// the JSON order. Matrices are (u32 rows, u32 cols, row-major f64 payload).
void write_weights_binary(std::ostream& out, const TfWeights& weights);
TfWeights read_weights_binary(std::istream& in);

void save_weights(const std::string& path, const TfWeights& weights);
TfWeights load_weights(const std::string& path);

// Flat "key = value" config; '#' starts a comment. Keys are trimmed,
// duplicates override earlier lines.
std::map<std::string, std::string> parse_flat_config(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace gmmtf
