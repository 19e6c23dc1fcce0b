#pragma once

#include <ostream>

namespace tpmsvox::cli {

/// Runs one `tpmsvox` invocation. Returns the process exit code: 0 when
/// every requested output was written, 1 on a domain or I/O error, and the
/// parser's code for usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tpmsvox::cli
