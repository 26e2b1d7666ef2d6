#pragma once

#include <stdexcept>
#include <string>

namespace effort {

// All library failures surface as this type; the message is a single line.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace effort
