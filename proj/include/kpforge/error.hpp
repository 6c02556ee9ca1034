#pragma once

#include <stdexcept>
#include <string>

namespace kpforge {

// Base class for every error the toolkit raises on bad input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kpforge
