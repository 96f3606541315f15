#pragma once

namespace abst {

// Exit codes: 0 ok, 2 config error, 3 data error, 4 model/spec mismatch,
// 5 verification failure.
int cli_run(int argc, const char* const* argv);

} // namespace abst
