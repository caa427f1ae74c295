#pragma once

#include <iosfwd>
#include <string>

#include "mmrec/data/types.hpp"

namespace mmrec::data {

inline constexpr int kDatasetSchemaVersion = 1;

/// Line-delimited JSON. Line 1 is a header with the schema version,
/// embedding width and catalog; every further line is one user:
///
///   {"format":"mmrec-dataset","version":1,"embedding_dim":32,
///    "catalog":[{"name":"car","kind":"base"},
///               {"name":"roadside","kind":"coverage","base_of":0}]}
///   {"user":"u1","owned":[0],"purchase":{"time":...,"items":[3]},
///    "events":[{"type":"session","time":...,"actions":[["sec:claims","line:car"]]},
///              {"type":"conversation","time":...,
///               "sentences":[{"speaker":"agent","embedding":[...],"keywords":["car"]}]}]}
///
/// An empty input is an empty dataset.
Dataset read_dataset(std::istream& is, const std::string& source_name = "<stream>");
Dataset load_dataset(const std::string& path);

void write_dataset(std::ostream& os, const Dataset& dataset);
void save_dataset(const std::string& path, const Dataset& dataset);

/// Canonical serialization; equal datasets give equal strings.
std::string serialize_dataset(const Dataset& dataset);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string dataset_fingerprint(const Dataset& dataset);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace mmrec::data
