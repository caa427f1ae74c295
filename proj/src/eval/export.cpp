#include "mmrec/eval/export.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmrec/error.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::eval {

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

}  // namespace

bool write_input_representations(std::ostream& os, models::Recommender& model,
                                 const std::vector<data::UserRecord>& users, std::size_t* rows) {
  auto* neural = dynamic_cast<models::NeuralModel*>(&model);
  if (neural == nullptr) return false;
  const auto inputs = neural->inputs(users);
  std::vector<std::size_t> index;
  std::vector<EncodedSequence> seqs;
  for (std::size_t i = 0; i < users.size(); ++i)
    if (inputs[i]) {
      index.push_back(i);
      seqs.push_back(*inputs[i]);
    }
  const auto reps = neural->network().step_representations(seqs);
  std::size_t count = 0;
  os << "user\tevent\tmodality\tsubset\tvalues\n";
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const data::UserRecord& u = users[index[s]];
    const auto subset = data::to_string(data::subset_of(u));
    for (nn::Index t = 0; t < reps[s].rows(); ++t) {
      os << u.id << '\t' << t << '\t' << to_string(seqs[s].steps[static_cast<std::size_t>(t)].modality) << '\t'
         << subset;
      for (nn::Index j = 0; j < reps[s].cols(); ++j) {
        os << '\t';
        put(os, static_cast<double>(reps[s](t, j)));
      }
      os << '\n';
      ++count;
    }
  }
  if (rows) *rows = count;
  return true;
}

std::size_t write_outputs(std::ostream& os, models::Recommender& model, const std::vector<data::UserRecord>& users) {
  const auto preds = model.predict(users);
  std::size_t count = 0;
  os << "user\tsubset\tscores\n";
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!preds[i]) continue;
    os << users[i].id << '\t' << data::to_string(data::subset_of(users[i]));
    for (double v : *preds[i]) {
      os << '\t';
      put(os, v);
    }
    os << '\n';
    ++count;
  }
  return count;
}

LatentExport export_latents(models::Recommender& model, const std::vector<data::UserRecord>& users,
                            const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  LatentExport out;
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
  };
  const std::filesystem::path inputs = std::filesystem::path(dir) / "inputs.tsv";
  {
    std::ostringstream buf;
    if (write_input_representations(buf, model, users, &out.input_rows)) {
      std::ofstream f = open(inputs);
      f << buf.str();
      if (!f) throw IoError("failed writing " + inputs.string());
    }
  }
  const std::filesystem::path outputs = std::filesystem::path(dir) / "outputs.tsv";
  std::ofstream f = open(outputs);
  out.output_rows = write_outputs(f, model, users);
  if (!f) throw IoError("failed writing " + outputs.string());
  return out;
}

}  // namespace mmrec::eval
