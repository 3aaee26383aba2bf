#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace homoscope {

// Runs the command line front end on args (without the program name).
// Returns 0 on success, 2 on usage or input errors, 3 when a metric is
// undefined on the input, 4 on numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace homoscope
