#pragma once

#include <stdexcept>
#include <string>

namespace pixdef {

// All library failures surface as this type. Messages are prefixed with the
// stage that failed when raised from the pipeline ("deflect: ...").
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pixdef
