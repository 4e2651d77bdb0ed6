#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "widthlab/kernels.hpp"

namespace widthlab {

struct ValidationOptions {
    std::uint64_t seed = 20240611;
    Exec exec = Exec::parallel;
};

struct CriterionResult {
    int id = 0;
    std::string slug;
    std::string name;
    bool pass = false;
    std::vector<std::string> details; // one line per sub-check, prefixed ok / FAIL
    double seconds = 0.0;
};

struct CriterionInfo {
    int id;
    const char* slug;
    const char* name;
};

const std::vector<CriterionInfo>& criteria();

CriterionResult run_criterion(int id, const ValidationOptions& opts = {});

// Criterion ids for a suite slug; "all" selects every criterion. ConfigInvalid if unknown.
std::vector<int> suite_ids(const std::string& slug);

// "[PASS] 4 kappa4-relu: ... (12.3 s)"
std::string summary_line(const CriterionResult& r);

} // namespace widthlab
