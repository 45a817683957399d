#pragma once

#include <ostream>

namespace motifcnn {

inline constexpr const char* kOutputRootEnv = "MOTIFCNN_OUT";

/// Entry point of the command-line tool. Returns 0 on success, 2 for invalid
/// arguments or configuration, 3 for numerical failures; errors are reported on
/// `err` as a JSON object.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace motifcnn
