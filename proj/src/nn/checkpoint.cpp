#include "mmrec/nn/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmrec/error.hpp"

namespace mmrec::nn {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_number(const std::string& token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw DataError("checkpoint: bad number '" + token + "'");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const std::vector<NamedTensor>& tensors) {
  std::string out = "mmrec-checkpoint " + std::to_string(kCheckpointVersion) + "\n";
  out += "tensors " + std::to_string(tensors.size()) + "\n";
  for (const NamedTensor& t : tensors) {
    out += "tensor " + t.name + " " + std::to_string(t.values.rows()) + " " + std::to_string(t.values.cols()) + "\n";
    for (Index r = 0; r < t.values.rows(); ++r) {
      for (Index c = 0; c < t.values.cols(); ++c) {
        if (c > 0) out += ' ';
        append_number(out, t.values(r, c));
      }
      out += '\n';
    }
  }
  os << out;
  if (!os) throw IoError("checkpoint: write failed");
}

std::vector<NamedTensor> read_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "mmrec-checkpoint")
    throw DataError("checkpoint: missing header");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  std::string word;
  std::size_t count = 0;
  if (!(is >> word >> count) || word != "tensors") throw DataError("checkpoint: missing tensor count");
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    NamedTensor t;
    Index rows = 0, cols = 0;
    if (!(is >> word >> t.name >> rows >> cols) || word != "tensor" || rows < 0 || cols < 0)
      throw DataError("checkpoint: bad tensor header #" + std::to_string(k));
    t.values.resize(rows, cols);
    std::string token;
    for (Index i = 0; i < t.values.size(); ++i) {
      if (!(is >> token)) throw DataError("checkpoint: truncated tensor " + t.name);
      t.values.data()[i] = parse_number(token);
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

template <typename T>
std::vector<NamedTensor> export_parameters(const Network<T>& net) {
  std::vector<NamedTensor> out;
  for (const Parameter<T>* p : net.parameters()) out.push_back({p->name, p->value.template cast<double>()});
  return out;
}

template <typename T>
void import_parameters(Network<T>& net, const std::vector<NamedTensor>& tensors) {
  std::vector<Parameter<T>*> params = net.parameters();
  if (params.size() != tensors.size())
    throw DataError("checkpoint has " + std::to_string(tensors.size()) + " tensors, network expects " +
                    std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedTensor& t = tensors[i];
    if (t.name != params[i]->name) throw DataError("checkpoint tensor '" + t.name + "' where '" + params[i]->name + "' expected");
    if (t.values.rows() != params[i]->value.rows() || t.values.cols() != params[i]->value.cols())
      throw DataError("checkpoint tensor '" + t.name + "' has the wrong shape");
    params[i]->value = t.values.template cast<T>();
  }
}

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path);
  write_checkpoint(os, tensors);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path);
  return read_checkpoint(is);
}

template std::vector<NamedTensor> export_parameters<float>(const Network<float>&);
template std::vector<NamedTensor> export_parameters<double>(const Network<double>&);
template void import_parameters<float>(Network<float>&, const std::vector<NamedTensor>&);
template void import_parameters<double>(Network<double>&, const std::vector<NamedTensor>&);

}  // namespace mmrec::nn
