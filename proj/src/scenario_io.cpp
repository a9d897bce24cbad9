#include "durinv/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace durinv {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& val) {
    size_t pos = 0;
    double x;
    try {
        x = std::stod(val, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("scenario: bad numeric value for '" + key + "': " + val);
    }
    if (pos != val.size())
        throw std::runtime_error("scenario: trailing characters in value for '" + key + "': " + val);
    return x;
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
    std::map<std::string, double ModelParams::*> fields = {
        {"mu_S", &ModelParams::mu_S},         {"sigma_S", &ModelParams::sigma_S},
        {"eta", &ModelParams::eta},           {"lambda_1", &ModelParams::lambda_1},
        {"r", &ModelParams::r},               {"mu_P", &ModelParams::mu_P},
        {"sigma_P1", &ModelParams::sigma_P1}, {"sigma_P2", &ModelParams::sigma_P2},
        {"delta", &ModelParams::delta},       {"ell", &ModelParams::ell},
        {"lambda_2", &ModelParams::lambda_2}, {"phi", &ModelParams::phi},
        {"rho", &ModelParams::rho},           {"beta", &ModelParams::beta},
        {"gamma", &ModelParams::gamma},       {"theta", &ModelParams::theta},
    };

    Scenario sc;
    std::map<std::string, bool> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = line;
        size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("scenario: line " + std::to_string(lineno) +
                                     " is not 'key = value': " + line);
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (seen.count(key))
            throw std::runtime_error("scenario: duplicate key '" + key + "'");
        seen[key] = true;

        if (key == "name") {
            sc.name = val;
        } else if (key == "phi_grid") {
            std::istringstream vs(val);
            std::string tok;
            while (vs >> tok) sc.phi_grid.push_back(parse_double(key, tok));
            if (sc.phi_grid.empty())
                throw std::runtime_error("scenario: empty phi_grid");
            for (size_t i = 0; i < sc.phi_grid.size(); ++i) {
                if (sc.phi_grid[i] < 1.0)
                    throw std::runtime_error("scenario: phi_grid entries must be >= 1");
                if (i > 0 && sc.phi_grid[i] <= sc.phi_grid[i - 1])
                    throw std::runtime_error("scenario: phi_grid must be strictly increasing");
            }
        } else if (auto it = fields.find(key); it != fields.end()) {
            sc.params.*(it->second) = parse_double(key, val);
        } else {
            throw std::runtime_error("scenario: unknown key '" + key + "'");
        }
    }

    if (!seen.count("name")) throw std::runtime_error("scenario: missing key 'name'");
    for (const auto& [key, ptr] : fields) {
        (void)ptr;
        if (!seen.count(key)) throw std::runtime_error("scenario: missing key '" + key + "'");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("scenario: cannot open " + path);
    return parse_scenario(f);
}

void save_scenario(const Scenario& sc, std::ostream& out) {
    char buf[64];
    auto w = [&out, &buf](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << key << " = " << buf << "\n";
    };
    out << "name = " << sc.name << "\n";
    const ModelParams& p = sc.params;
    w("mu_S", p.mu_S);
    w("sigma_S", p.sigma_S);
    w("eta", p.eta);
    w("lambda_1", p.lambda_1);
    w("r", p.r);
    w("mu_P", p.mu_P);
    w("sigma_P1", p.sigma_P1);
    w("sigma_P2", p.sigma_P2);
    w("delta", p.delta);
    w("ell", p.ell);
    w("lambda_2", p.lambda_2);
    w("phi", p.phi);
    w("rho", p.rho);
    w("beta", p.beta);
    w("gamma", p.gamma);
    w("theta", p.theta);
    if (!sc.phi_grid.empty()) {
        out << "phi_grid =";
        for (double v : sc.phi_grid) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << " " << buf;
        }
        out << "\n";
    }
}

}  // namespace durinv
