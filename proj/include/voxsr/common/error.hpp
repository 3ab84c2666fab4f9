#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace voxsr {

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  throw std::runtime_error(cat(std::forward<Args>(args)...));
}

template <typename... Args>
[[noreturn]] void fail_arg(Args&&... args) {
  throw std::invalid_argument(cat(std::forward<Args>(args)...));
}

}  // namespace voxsr
