#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/models/recommender.hpp"

namespace mmrec::eval {

struct LatentExport {
  std::size_t input_rows = 0;
  std::size_t output_rows = 0;
};

/// One TSV row per event: user, event index, modality, user subset, then the
/// representation fed to the recurrent stack. Only sequence models have one;
/// returns false (and writes nothing) for other kinds.
bool write_input_representations(std::ostream& os, models::Recommender& model,
                                 const std::vector<data::UserRecord>& users, std::size_t* rows = nullptr);

/// One TSV row per scored user: user, subset, then the predicted scores.
std::size_t write_outputs(std::ostream& os, models::Recommender& model, const std::vector<data::UserRecord>& users);

/// Writes `dir`/inputs.tsv (when available) and `dir`/outputs.tsv.
LatentExport export_latents(models::Recommender& model, const std::vector<data::UserRecord>& users,
                            const std::string& dir);

}  // namespace mmrec::eval
