#include "mmrec/error.hpp"
#include "mmrec/sequence.hpp"

namespace mmrec {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::training: return 4;
    case ErrorKind::io: return 5;
    case ErrorKind::usage: return 6;
  }
  return 1;
}

std::string_view to_string(Modality m) noexcept {
  return m == Modality::conversation ? "conversation" : "session";
}

}  // namespace mmrec
