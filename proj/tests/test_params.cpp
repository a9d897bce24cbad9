#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "durinv/params.hpp"
#include "durinv/scenario_io.hpp"

using namespace durinv;

namespace {

ModelParams base_params() {
    ModelParams p;
    p.mu_S = 0.06;
    p.sigma_S = 0.25;
    p.eta = 0.1;
    p.lambda_1 = 0.0;
    p.r = 0.02;
    p.mu_P = 0.02;
    p.sigma_P1 = 0.1;
    p.sigma_P2 = 0.2;
    p.delta = 0.015;
    p.ell = 0.5;
    p.lambda_2 = 0.01;
    p.phi = 1.0;
    p.rho = 0.04;
    p.beta = 0.5;
    p.gamma = 0.9;
    p.theta = 0.05;
    return p;
}

bool has_violation(const ModelParams& p, const std::string& needle) {
    for (const auto& msg : validate_params(p))
        if (msg.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("utility closed-form values") {
    CHECK(utility(1.0, 1.0, 0.5, 0.9) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(utility(4.0, 1.0, 0.5, 2.0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(utility(2.0, 3.0, 0.3, 0.5) ==
          doctest::Approx(2.0 * std::pow(std::pow(2.0, 0.3) * std::pow(3.0, 0.7), 0.5))
              .epsilon(1e-14));
}

TEST_CASE("utility homogeneity of degree 1-gamma") {
    for (double gamma : {0.5, 0.9, 2.0, 3.5}) {
        for (double kappa : {0.5, 2.0, 7.3}) {
            double lhs = utility(kappa * 1.3, kappa * 0.7, 0.4, gamma);
            double rhs = std::pow(kappa, 1.0 - gamma) * utility(1.3, 0.7, 0.4, gamma);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("utility monotone increasing in both arguments") {
    for (double gamma : {0.5, 2.0}) {
        CHECK(utility(2.0, 1.0, 0.5, gamma) > utility(1.0, 1.0, 0.5, gamma));
        CHECK(utility(1.0, 2.0, 0.5, gamma) > utility(1.0, 1.0, 0.5, gamma));
    }
}

TEST_CASE("utility sign matches 1-gamma") {
    CHECK(utility(0.8, 1.7, 0.5, 0.5) > 0.0);
    CHECK(utility(0.8, 1.7, 0.5, 3.0) < 0.0);
}

TEST_CASE("utility boundary and domain handling") {
    CHECK(utility(0.0, 1.0, 0.5, 0.9) == 0.0);
    CHECK(utility(1.0, 0.0, 0.5, 0.9) == 0.0);
    CHECK_THROWS_AS(utility(0.0, 1.0, 0.5, 2.0), std::domain_error);
    CHECK_THROWS_AS(utility(-1.0, 1.0, 0.5, 0.9), std::domain_error);
    CHECK_THROWS_AS(utility(1.0, -2.0, 0.5, 0.9), std::domain_error);
}

TEST_CASE("derived constants on the base calibration") {
    DerivedParams d = derive_constants(base_params());
    CHECK(d.beta_bar == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(d.rho_bar == doctest::Approx(0.0415).epsilon(1e-15));
    CHECK(d.mu_bar_P == doctest::Approx(-0.015).epsilon(1e-13));
    CHECK(d.mu_bar_S == doctest::Approx(0.04).epsilon(1e-13));
    CHECK(d.sigma_P_sq == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("transversality margin on the base calibration") {
    TransversalityResult tv = check_transversality(base_params());
    CHECK(tv.holds);
    CHECK(tv.margin == doctest::Approx(0.0416875).epsilon(1e-12));
}

TEST_CASE("transversality boundary is non-strict") {
    ModelParams p = base_params();
    p.mu_P = 0.0;
    p.sigma_P1 = 0.0;
    p.sigma_P2 = 0.0;
    p.delta = 0.0;
    p.rho = 0.0;
    p.gamma = 0.5;
    TransversalityResult tv = check_transversality(p);
    CHECK(tv.margin == 0.0);
    CHECK(tv.holds);

    p.rho = -1e-9;
    CHECK_FALSE(check_transversality(p).holds);
    p.rho = 10.0;
    CHECK(check_transversality(p).holds);
    CHECK(check_transversality(p).margin > 9.0);
}

TEST_CASE("parameter validation accepts the base calibration") {
    CHECK(validate_params(base_params()).empty());
}

TEST_CASE("parameter validation reports each violated constraint") {
    ModelParams p = base_params();
    p.gamma = 1.0;
    CHECK(has_violation(p, "gamma must differ from 1"));

    p = base_params();
    p.gamma = -0.2;
    CHECK(has_violation(p, "gamma must be positive"));

    p = base_params();
    p.phi = 0.5;
    CHECK(has_violation(p, ">= 1"));

    p = base_params();
    p.beta = 1.0;
    CHECK(has_violation(p, "beta"));

    p = base_params();
    p.ell = 0.0;
    CHECK(has_violation(p, "ell"));
    p.ell = 1.0;
    CHECK(has_violation(p, "ell"));

    p = base_params();
    p.theta = -0.01;
    CHECK(has_violation(p, "theta"));

    p = base_params();
    p.sigma_S = 0.0;
    CHECK(has_violation(p, "sigma_S"));

    p = base_params();
    p.lambda_1 = 0.2;
    p.eta = 0.0;
    CHECK(has_violation(p, "eta must be positive"));

    p = base_params();
    p.mu_S = std::nan("");
    CHECK(has_violation(p, "finite"));
}

TEST_CASE("scenario files round-trip") {
    Scenario sc;
    sc.name = "roundtrip";
    sc.params = base_params();
    sc.params.sigma_P1 = -0.1;
    sc.params.rho = 1.0 / 3.0;
    sc.phi_grid = {1.0, 1.05, 1.5};

    std::ostringstream out;
    save_scenario(sc, out);
    std::istringstream in(out.str());
    Scenario back = parse_scenario(in);

    CHECK(back.name == sc.name);
    CHECK(back.params.rho == sc.params.rho);
    CHECK(back.params.sigma_P1 == sc.params.sigma_P1);
    CHECK(back.params.gamma == sc.params.gamma);
    REQUIRE(back.phi_grid.size() == 3);
    CHECK(back.phi_grid[1] == 1.05);
}

TEST_CASE("scenario parser accepts comments and blank lines") {
    std::ostringstream out;
    Scenario sc;
    sc.name = "commented";
    sc.params = base_params();
    save_scenario(sc, out);
    std::istringstream in("# header comment\n\n" + out.str() + "\ntheta2 = 1 # oops\n");
    CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("unknown key 'theta2'"),
                         std::runtime_error);

    std::istringstream ok("# header\n\n" + out.str());
    Scenario back = parse_scenario(ok);
    CHECK(back.params.theta == 0.05);
}

TEST_CASE("scenario parser rejects malformed input") {
    Scenario sc;
    sc.name = "bad";
    sc.params = base_params();
    std::ostringstream out;
    save_scenario(sc, out);
    std::string good = out.str();

    {
        std::istringstream in(good + "r = 0.03\n");
        CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("duplicate key 'r'"),
                             std::runtime_error);
    }
    {
        std::string missing = good.substr(0, good.find("theta ="));
        std::istringstream in(missing);
        CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("missing key 'theta'"),
                             std::runtime_error);
    }
    {
        std::istringstream in(good + "phi_grid = 1.0 0.9\n");
        CHECK_THROWS_AS(parse_scenario(in), std::runtime_error);
    }
    {
        std::istringstream in(good + "phi_grid = 1.0 1.0\n");
        CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("strictly increasing"),
                             std::runtime_error);
    }
    {
        std::istringstream in(good + "phi_grid =\n");
        CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("empty phi_grid"),
                             std::runtime_error);
    }
    {
        std::istringstream in("name = x\nmu_S = abc\n");
        CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("bad numeric value"),
                             std::runtime_error);
    }
    {
        std::istringstream in("just some words\n");
        CHECK_THROWS_WITH_AS(parse_scenario(in), doctest::Contains("line 1"),
                             std::runtime_error);
    }
}
