#include "bmtl/common.hpp"

#include <cstdlib>
#include <iostream>

namespace bmtl {

void warn(const std::string& what) {
  static const bool quiet = std::getenv("BMTL_QUIET") != nullptr;
  if (!quiet) std::clog << "bmtl: warning: " << what << '\n';
}

}  // namespace bmtl
