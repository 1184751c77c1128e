#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace bsde {

// One verification criterion of the suite. `observed` is the headline
// measurement and `limit` the threshold it was held against (after the
// tolerance scale); sub-checks fold into `pass` and are summarized in
// `detail`.
struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double limit = 0.0;
    std::string detail;
};

struct AcceptanceOptions {
    std::uint64_t seed = 1729;
    // Multiplies every numeric tolerance: 0.5 reruns the suite at half the
    // shipped margins. Failing criteria are reported, never thrown.
    double tolerance_scale = 1.0;
    std::string out_dir = "acceptance-out";  // report.txt / report.csv land here
};

struct AcceptanceReport {
    std::vector<CriterionResult> results;
    bool all_pass = false;
    std::string text;  // plain report, one line per criterion, no timestamps
    std::string csv;   // index,name,pass,observed,limit
};

// Runs the twelve verification criteria in order, streaming one line per
// criterion to `log`, and writes report.txt and report.csv under
// options.out_dir. The report bytes are a pure function of the options, so
// repeated runs with one seed are byte-identical. Criterion failures are
// recorded, not thrown; only I/O problems raise.
AcceptanceReport run_acceptance_suite(const AcceptanceOptions& options, std::ostream& log);

}  // namespace bsde
