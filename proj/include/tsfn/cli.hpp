#pragma once
// Subcommands behind the tsfn binary: optimization runs, Marchenko-Pastur
// spectra, quantum-vs-classical verification, rsvd bound checks, and PCA
// reports. Every command writes deterministic CSV with the invocation and
// seed embedded in a header comment; files land in --out-dir, the
// TSFN_OUT_DIR environment variable, or the working directory, in that
// order of precedence. A JSON object passed via --config supplies flag
// defaults; explicit flags win.

#include <string>
#include <vector>

namespace tsfn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitMaxIter = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitUsage = 64;

// args hold the tokens after the subcommand name. Each returns a process
// exit code; flag errors print usage to stderr and return kExitUsage.
int cmd_optimize(const std::vector<std::string>& args);
int cmd_mp(const std::vector<std::string>& args);
int cmd_qverify(const std::vector<std::string>& args);
int cmd_rsvd(const std::vector<std::string>& args);
int cmd_pca(const std::vector<std::string>& args);

// Routes argv[1] to the matching command. Unknown or missing subcommands
// print usage and return kExitUsage; exceptions escaping a command are
// reported on stderr with kExitRuntime.
int dispatch(int argc, const char* const* argv);

}  // namespace tsfn::cli
