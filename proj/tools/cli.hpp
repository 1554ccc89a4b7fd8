#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace colorsal::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kTransportError = 3;
inline constexpr int kFailure = 4;  // validation errors and failed properties

// Entry point of the `colorsal` binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "#rrggbb" for a color in [0,1]^3.
std::string to_hex(const std::array<float, 3>& color);

}  // namespace colorsal::cli
