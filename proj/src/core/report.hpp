#pragma once

#include <string>
#include <vector>

namespace linecolor {

// Collects non-fatal notes (dropped labels, skipped examples, fallbacks).
// Callers that do not care pass nullptr.
struct Report {
    std::vector<std::string> notes;

    void add(std::string line) { notes.push_back(std::move(line)); }
    bool empty() const { return notes.empty(); }
};

inline void report_note(Report* report, std::string line) {
    if (report) report->add(std::move(line));
}

}  // namespace linecolor
