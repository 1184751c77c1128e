#include <iostream>

#include "bsde/acceptance.hpp"

// Runs the full verification suite at its shipped tolerances and fails the
// build when any criterion fails.
int main() {
    bsde::AcceptanceOptions options;
    const bsde::AcceptanceReport report = bsde::run_acceptance_suite(options, std::cout);
    return report.all_pass ? 0 : 1;
}
