#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

// loader for tests/fixtures/derived_fixtures.csv (name,inputs,value,evidence)

namespace testsupport {

struct Fixture {
    std::string inputs;
    double value = 0.0;
    double evidence = 0.0;
};

inline const std::map<std::string, Fixture>& fixtures() {
    static const std::map<std::string, Fixture> table = [] {
        std::map<std::string, Fixture> t;
        std::ifstream in(std::string(MULTIFRAC_FIXTURES_DIR) + "/derived_fixtures.csv");
        if (!in) throw std::runtime_error("missing derived_fixtures.csv (run make_fixtures)");
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string name, inputs, value, evidence;
            std::getline(ss, name, ',');
            std::getline(ss, inputs, ',');
            std::getline(ss, value, ',');
            std::getline(ss, evidence, ',');
            t[name] = {inputs, std::stod(value), std::stod(evidence)};
        }
        return t;
    }();
    return table;
}

inline double derived(const std::string& name) {
    auto it = fixtures().find(name);
    if (it == fixtures().end()) throw std::runtime_error("unknown fixture " + name);
    return it->second.value;
}

} // namespace testsupport
