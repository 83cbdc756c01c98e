#ifndef HNSF_TOOLS_CLI_HPP_
#define HNSF_TOOLS_CLI_HPP_

namespace hnsf::cli {

// Exit codes: 0 success, 1 usage error, 2 runtime failure.
int run(int argc, const char* const* argv);

}  // namespace hnsf::cli

#endif  // HNSF_TOOLS_CLI_HPP_
