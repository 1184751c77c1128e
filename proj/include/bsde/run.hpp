#pragma once

#include <ostream>

#include "bsde/config.hpp"

namespace bsde {

// Executes one validated solve request end to end: simulate driving noise,
// run the configured route, write every artifact under config.out_dir
// (created when missing; nothing is written anywhere else). Output bytes are
// a pure function of the config contents, so equal configs give equal files.
//
// Returns 0 on success and 4 when the perturbation route rejects its target
// (the certificate records the failed margin and the base solution is kept).
// Solver failures propagate as typed exceptions for the caller to map to
// exit codes. The acceptance route is not handled here; the suite has its
// own entry point.
int execute_run(const RunConfig& config, std::ostream& log);

}  // namespace bsde
