#pragma once

#include <map>
#include <string>
#include <vector>

#include "bsde/problem.hpp"

namespace bsde {

// Built-in problem instances. Unknown names or parameters raise CatalogError.
ProblemSpec lookup_catalog(const std::string& name, const std::map<std::string, double>& params = {});

std::vector<std::string> catalog_names();

}  // namespace bsde
