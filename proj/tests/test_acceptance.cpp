// Acceptance runner: one pass/fail line per criterion.
//   test_acceptance                 run all criteria
//   test_acceptance --criterion N   run criterion N only
//   test_acceptance --seed S        master seed (default 20240611)
#include <iostream>

#include <CLI11.hpp>

#include "widthlab/validation.hpp"

using namespace widthlab;

int main(int argc, char** argv) {
    CLI::App app{"widthlab acceptance criteria"};
    int criterion = 0;
    ValidationOptions opts;
    app.add_option("--criterion", criterion, "criterion id, 0 = all")->check(CLI::Range(0, 13));
    app.add_option("--seed", opts.seed, "master seed");
    CLI11_PARSE(app, argc, argv);

    std::vector<int> ids;
    if (criterion == 0)
        for (const auto& c : criteria()) ids.push_back(c.id);
    else
        ids.push_back(criterion);

    bool ok = true;
    for (int id : ids) {
        const CriterionResult r = run_criterion(id, opts);
        std::cout << summary_line(r) << "\n";
        for (const auto& d : r.details) std::cout << "    " << d << "\n";
        std::cout.flush();
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}
