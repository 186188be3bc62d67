#pragma once

#include <iosfwd>

namespace echoless {

/// Runs the `echoless` command line. Returns 0 on success, 1 on a domain
/// error (undecodable packet, unreadable file, failed estimate) and 2 on a
/// usage error.
int cli_dispatch(int argc, char** argv);
int cli_dispatch(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace echoless
