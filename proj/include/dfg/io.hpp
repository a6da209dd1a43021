#pragma once

#include <filesystem>
#include <string>

#include "dfg/family.hpp"

namespace dfg {

/// I/O failure (unreadable file, malformed JSON); distinct from InputError so
/// the CLI can map it to its own exit code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Graph file: {"vertices": [id...], "edges": [[id, id, w]...],
//              "killing": {id: c}, "measure": {id: m}}
// Ids are strings or integers. An edge listed once is stored in both
// directions; listing both directions stores them as given (so asymmetric
// input reaches validate()). Missing killing defaults to 0, measure to 1.
Graph graph_from_json(const Json& j);
Json graph_to_json(const Graph& g);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// A family file, a graph file, or a registry name.
FamilyPtr load_family(const std::string& path_or_name);

}  // namespace dfg
