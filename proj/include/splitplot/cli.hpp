#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace splitplot {

/// Default RNG seed used by the `oracle` and `simulate` subcommands when
/// --seed is not given.
inline constexpr uint64_t kDefaultSeed = 20240901;

/// Entry point behind the `splitplot` binary. Returns 0 on success, 2 when
/// the inputs violate a documented precondition (bad flags, invalid design,
/// nonexistent correction matrix, ...), 1 on internal errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace splitplot
