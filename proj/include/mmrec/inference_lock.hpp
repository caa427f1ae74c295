#pragma once

#include <mutex>

namespace mmrec {

/// Mutex for objects whose networks keep per-call state. Copies get a fresh,
/// unlocked mutex so the owner stays copyable.
class InferenceLock {
 public:
  InferenceLock() = default;
  InferenceLock(const InferenceLock&) noexcept {}
  InferenceLock& operator=(const InferenceLock&) noexcept { return *this; }

  std::mutex& get() const noexcept { return m_; }

 private:
  mutable std::mutex m_;
};

}  // namespace mmrec
