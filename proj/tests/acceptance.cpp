// Runs acceptance criteria 1-12 and prints one PASS/FAIL line each.
// With --quick the slow high-degree runs are shortened.
#include "qdom/verify.hpp"

#include <cstdio>
#include <cstring>

int main(int argc, char** argv) {
    qdom::SuiteOptions opt;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--quick") == 0)
            opt.quick = true;
    int failed = 0;
    for (const auto& check : qdom::acceptance_suite(opt)) {
        const auto r = qdom::timed(check);
        failed += !r.pass;
        std::printf("criterion %2d %-40s %s  (%.1fs) %s\n", r.id, r.name.c_str(), r.pass ? "PASS" : "FAIL", r.seconds,
                    r.detail.dump().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
