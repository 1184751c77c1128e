#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsde/problem.hpp"

namespace bsde {

struct AuditCheck {
    std::string name;
    double observed = 0.0;
    double declared = 0.0;
    bool pass = true;
};

struct AuditReport {
    std::vector<AuditCheck> checks;
    bool pass = true;
    std::string summary() const;
};

// Monte Carlo audit of the declared assumption constants: bounds and
// difference quotients are probed on sampled paths, coordinate bumps and
// random (y, z) arguments. A check passes while the observed value stays
// within 1% of the declared constant. Probe i is a pure function of
// (seed, i), so raising probe_budget never turns a fail into a pass.
AuditReport audit_assumptions(const ProblemSpec& spec, int probe_budget, std::uint64_t seed);

}  // namespace bsde
