#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shefk {

struct ValidationOptions {
    bool quick = true;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    /// Name of a check whose measured deviation is corrupted (test hook).
    std::string inject_fault;
};

struct ValidationCheck {
    std::string name;
    double deviation = 0.0;  // measured error, in the check's own units
    double tolerance = 0.0;
    bool passed = false;
};

std::vector<std::string> validation_check_names();

std::vector<ValidationCheck> run_validation(const ValidationOptions& options);

}  // namespace shefk
