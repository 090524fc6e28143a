#ifndef MSGDD_CLI_HPP
#define MSGDD_CLI_HPP

namespace msgdd {

// Entry point behind the msgdd binary. Returns the process exit status:
// 0 success, 1 runtime failure, 2 usage error.
int cli_main(int argc, const char* const* argv);

} // namespace msgdd

#endif
