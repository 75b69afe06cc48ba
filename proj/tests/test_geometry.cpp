#include "aurlab/geometry.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace aurlab;
using geometry::PenaltyMode;
using geometry::SetKind;
using geometry::UncertaintySet;

namespace {

Matrix row2(double a, double b) {
    Matrix m(1, 2);
    m << a, b;
    return m;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("membership basics") {
    CHECK(geometry::contains(UncertaintySet::box(1.0, 2, 3), Matrix::Zero(2, 3)));
    CHECK(geometry::contains(UncertaintySet::ellipsoidal(1.0, 2, 2), Matrix::Zero(2, 2)));
    CHECK(geometry::contains(UncertaintySet::diamond(1.0, 1, 2), Matrix::Zero(1, 2)));
    CHECK(geometry::contains(UncertaintySet::budget(1.0, 0.6, 1, 2), Matrix::Zero(1, 2)));

    // |0.6| + |0.6| = 1.2 > rho
    CHECK_FALSE(geometry::contains(UncertaintySet::diamond(1.0, 1, 2), row2(0.6, 0.6)));

    // l1 = 0.8 <= rho but the 0.7 entry breaks the gamma cap
    const auto budget = UncertaintySet::budget(1.0, 0.6, 1, 2);
    CHECK_FALSE(geometry::contains(budget, row2(0.7, 0.1)));
    CHECK(geometry::contains(budget, row2(0.5, 0.3)));

    CHECK_THROWS_AS(geometry::contains(budget, Matrix::Zero(2, 2)), DimensionError);
}

TEST_CASE("membership boundary tolerance is 1e-12 relative") {
    const auto diamond = UncertaintySet::diamond(1.0, 1, 2);
    CHECK(geometry::contains(diamond, row2(0.5, 0.5)));
    CHECK(geometry::contains(diamond, row2(0.5, 0.5 + 4e-13)));
    CHECK_FALSE(geometry::contains(diamond, row2(0.5, 0.5 + 1e-11)));

    const auto box = UncertaintySet::box(2.0, 1, 2);
    CHECK(geometry::contains(box, row2(2.0 + 1e-12, 0.0)));  // 0.5e-12 relative
    CHECK_FALSE(geometry::contains(box, row2(2.0 + 1e-10, 0.0)));
}

TEST_CASE("volumes: frozen values") {
    CHECK(geometry::volume(UncertaintySet::diamond(1.0, 1, 2)) ==
          doctest::Approx(2.0).epsilon(1e-13));
    CHECK(geometry::volume(UncertaintySet::box(0.5, 1, 3)) == doctest::Approx(1.0).epsilon(1e-13));
    // diamond area 2 minus four corner triangles of area (0.4)^2/2 each
    CHECK(geometry::volume(UncertaintySet::budget(1.0, 0.6, 1, 2)) ==
          doctest::Approx(1.36).epsilon(1e-12));
    CHECK(geometry::volume(UncertaintySet::ellipsoidal(1.0, 1, 2)) ==
          doctest::Approx(3.14159265358979324).epsilon(1e-12));
    CHECK(geometry::volume(UncertaintySet::ellipsoidal(1.5, 1, 1)) ==
          doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("volumes and m2 against the 2-D quadrature oracle") {
    struct Case {
        UncertaintySet set;
        std::function<bool(double, double)> member;
    };
    const double rho = 1.0, gamma = 0.6;
    const Case cases[] = {
        {UncertaintySet::box(rho, 1, 2),
         [=](double a, double b) { return std::abs(a) <= rho && std::abs(b) <= rho; }},
        {UncertaintySet::ellipsoidal(rho, 1, 2),
         [=](double a, double b) { return a * a + b * b <= rho * rho; }},
        {UncertaintySet::diamond(rho, 1, 2),
         [=](double a, double b) { return std::abs(a) + std::abs(b) <= rho; }},
        {UncertaintySet::budget(rho, gamma, 1, 2),
         [=](double a, double b) {
             return std::abs(a) + std::abs(b) <= rho && std::abs(a) <= gamma &&
                    std::abs(b) <= gamma;
         }},
    };
    for (const Case& c : cases) {
        CAPTURE(geometry::kind_name(c.set.kind));
        const oracles::Quad2d quad = oracles::quad2d(c.member, rho * 1.01);
        CHECK(geometry::volume(c.set) == doctest::Approx(quad.volume).epsilon(5e-3));
        CHECK(geometry::per_entry_second_moment(c.set, PenaltyMode::DerivedFormula) ==
              doctest::Approx(quad.m2).epsilon(5e-3));
        CHECK(std::abs(quad.cross) < 5e-3);
    }
}

TEST_CASE("second moments: frozen values") {
    CHECK(geometry::per_entry_second_moment(UncertaintySet::box(1.0, 2, 3),
                                            PenaltyMode::DerivedFormula) ==
          doctest::Approx(1.0 / 3).epsilon(1e-14));
    // d = 1 diamond IS the interval, so it matches the box value
    CHECK(geometry::per_entry_second_moment(UncertaintySet::diamond(1.0, 1, 1),
                                            PenaltyMode::DerivedFormula) ==
          doctest::Approx(1.0 / 3).epsilon(1e-14));
    // d = 1 ellipsoid: (1/2) integral_{-1}^{1} x^2 dx = 1/3 derived; paper rho^2/k = 1
    const auto ball1 = UncertaintySet::ellipsoidal(1.0, 1, 1);
    CHECK(geometry::per_entry_second_moment(ball1, PenaltyMode::DerivedFormula) ==
          doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(geometry::per_entry_second_moment(ball1, PenaltyMode::PaperFormula) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // d = 1 budget is the interval [-gamma, gamma]
    CHECK(geometry::per_entry_second_moment(UncertaintySet::budget(1.0, 0.6, 1, 1),
                                            PenaltyMode::DerivedFormula) ==
          doctest::Approx(0.36 / 3).epsilon(1e-13));
}

TEST_CASE("ridge lambda: theorem constants and the derived form") {
    // box n=3: n rho^2/3 = 1 in both modes
    const auto box = UncertaintySet::box(1.0, 3, 4);
    CHECK(geometry::ridge_lambda(box, PenaltyMode::PaperFormula) == doctest::Approx(1.0));
    CHECK(geometry::ridge_lambda(box, PenaltyMode::DerivedFormula) == doctest::Approx(1.0));

    // ellipsoidal n=2, k=3: paper rho^2/k = 1/3, derived n rho^2/(nk+2) = 0.25
    const auto ball = UncertaintySet::ellipsoidal(1.0, 2, 3);
    CHECK(geometry::ridge_lambda(ball, PenaltyMode::PaperFormula) ==
          doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(geometry::ridge_lambda(ball, PenaltyMode::DerivedFormula) ==
          doctest::Approx(0.25).epsilon(1e-14));

    // diamond: both modes print the same constant
    const auto diamond = UncertaintySet::diamond(0.7, 4, 5);
    CHECK(geometry::ridge_lambda(diamond, PenaltyMode::PaperFormula) ==
          doctest::Approx(geometry::ridge_lambda(diamond, PenaltyMode::DerivedFormula))
              .epsilon(1e-14));

    // budget with gamma = rho reduces to the diamond in both modes
    const auto budget_full = UncertaintySet::budget(0.7, 0.7, 4, 5);
    for (PenaltyMode mode : {PenaltyMode::PaperFormula, PenaltyMode::DerivedFormula})
        CHECK(geometry::ridge_lambda(budget_full, mode) ==
              doctest::Approx(geometry::ridge_lambda(diamond, mode)).epsilon(1e-14));
}

TEST_CASE("lambda(derived) = n * m2(derived) exactly") {
    const UncertaintySet sets[] = {
        UncertaintySet::ellipsoidal(0.5, 3, 2), UncertaintySet::box(2.0, 5, 7),
        UncertaintySet::diamond(0.05, 2, 9), UncertaintySet::budget(1.0, 0.8, 4, 3)};
    for (const UncertaintySet& set : sets) {
        CAPTURE(geometry::kind_name(set.kind));
        CHECK(geometry::ridge_lambda(set, PenaltyMode::DerivedFormula) ==
              static_cast<double>(set.rows) *
                  geometry::per_entry_second_moment(set, PenaltyMode::DerivedFormula));
    }
}

TEST_CASE("scaling laws in rho") {
    auto scaled = [](SetKind kind, double rho, int n, int k) {
        switch (kind) {
            case SetKind::Ellipsoidal: return UncertaintySet::ellipsoidal(rho, n, k);
            case SetKind::Box: return UncertaintySet::box(rho, n, k);
            case SetKind::Diamond: return UncertaintySet::diamond(rho, n, k);
            default: return UncertaintySet::budget(rho, 0.8 * rho, n, k);
        }
    };
    for (SetKind kind : {SetKind::Ellipsoidal, SetKind::Box, SetKind::Diamond, SetKind::Budget}) {
        CAPTURE(geometry::kind_name(kind));
        const int n = 2, k = 3;
        const double d = n * k;
        for (double rho : {0.3, 1.7, 12.0}) {
            const auto unit = scaled(kind, 1.0, n, k);
            const auto set = scaled(kind, rho, n, k);
            CHECK(geometry::per_entry_second_moment(set, PenaltyMode::DerivedFormula) ==
                  doctest::Approx(rho * rho *
                                  geometry::per_entry_second_moment(unit,
                                                                    PenaltyMode::DerivedFormula))
                      .epsilon(1e-12));
            CHECK(geometry::volume(set) ==
                  doctest::Approx(std::pow(rho, d) * geometry::volume(unit)).epsilon(1e-12));
        }
    }
}

TEST_CASE("closed forms stay finite at d = 10^4") {
    const int n = 100, k = 100;
    const UncertaintySet sets[] = {
        UncertaintySet::ellipsoidal(1.0, n, k), UncertaintySet::box(1.0, n, k),
        UncertaintySet::diamond(1.0, n, k), UncertaintySet::budget(1.0, 0.8, n, k)};
    for (const UncertaintySet& set : sets) {
        CAPTURE(geometry::kind_name(set.kind));
        CHECK(std::isfinite(geometry::log_volume(set)));
        const double m2 = geometry::per_entry_second_moment(set, PenaltyMode::DerivedFormula);
        CHECK(std::isfinite(m2));
        CHECK(m2 >= 0.0);
        CHECK(std::isfinite(geometry::ridge_lambda(set, PenaltyMode::PaperFormula)));
    }
    // log-volume scaling: log V(2 rho) - log V(rho) = d log 2
    const auto unit = UncertaintySet::diamond(1.0, n, k);
    const auto doubled = UncertaintySet::diamond(2.0, n, k);
    CHECK(geometry::log_volume(doubled) - geometry::log_volume(unit) ==
          doctest::Approx(1e4 * std::log(2.0)).epsilon(1e-10));
}

TEST_CASE("budget converges to diamond as gamma -> rho") {
    for (auto [n, k] : {std::pair{1, 2}, std::pair{2, 3}, std::pair{3, 4}}) {
        const double rho = 0.9;
        const auto diamond = UncertaintySet::diamond(rho, n, k);
        const auto nearly = UncertaintySet::budget(rho, rho * (1.0 - 1e-8), n, k);
        CHECK(geometry::volume(nearly) ==
              doctest::Approx(geometry::volume(diamond)).epsilon(1e-6));
        CHECK(geometry::per_entry_second_moment(nearly, PenaltyMode::DerivedFormula) ==
              doctest::Approx(
                  geometry::per_entry_second_moment(diamond, PenaltyMode::DerivedFormula))
                  .epsilon(1e-6));
        CHECK(geometry::ridge_lambda(nearly, PenaltyMode::DerivedFormula) ==
              doctest::Approx(geometry::ridge_lambda(diamond, PenaltyMode::DerivedFormula))
                  .epsilon(1e-6));
    }
}

TEST_CASE("budget volume is nondecreasing in gamma on [rho/2, rho]") {
    const double rho = 1.3;
    double previous = 0.0;
    for (int i = 0; i <= 40; ++i) {
        const double gamma = rho * (0.5 + 0.5 * i / 40.0);
        const double vol = geometry::volume(UncertaintySet::budget(rho, gamma, 2, 2));
        CHECK(vol >= previous);
        previous = vol;
    }
}

TEST_CASE("budget closed forms refuse gamma < rho/2") {
    const auto narrow = UncertaintySet::budget(1.0, 0.4, 1, 2);
    CHECK_THROWS_AS(geometry::volume(narrow), FormulaInvalidError);
    CHECK_THROWS_AS(geometry::log_volume(narrow), FormulaInvalidError);
    CHECK_THROWS_AS(geometry::per_entry_second_moment(narrow, PenaltyMode::DerivedFormula),
                    FormulaInvalidError);
    CHECK_THROWS_AS(geometry::per_entry_second_moment(narrow, PenaltyMode::PaperFormula),
                    FormulaInvalidError);
    CHECK_THROWS_AS(geometry::ridge_lambda(narrow, PenaltyMode::DerivedFormula),
                    FormulaInvalidError);
    // membership still works there
    CHECK(geometry::contains(narrow, row2(0.3, 0.3)));
    CHECK_FALSE(geometry::contains(narrow, row2(0.45, 0.1)));
}

TEST_CASE("closed-form moment report") {
    const auto set = UncertaintySet::diamond(1.0, 1, 2);
    const auto report = geometry::closed_form_moments(set, PenaltyMode::DerivedFormula);
    CHECK(report.per_entry_mean == 0.0);
    CHECK(report.cross_moment == 0.0);
    CHECK(report.volume == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(report.per_entry_second_moment == doctest::Approx(1.0 / 6).epsilon(1e-13));
    CHECK(report.source == geometry::MomentSource::ClosedForm);
}

TEST_CASE("descriptor validation") {
    CHECK_THROWS_AS(UncertaintySet::box(0.0, 1, 1), ConfigError);
    CHECK_THROWS_AS(UncertaintySet::box(-1.0, 1, 1), ConfigError);
    CHECK_THROWS_AS(UncertaintySet::diamond(1.0, 0, 1), ConfigError);
    CHECK_THROWS_AS(UncertaintySet::budget(1.0, 0.0, 1, 1), ConfigError);
    CHECK_THROWS_AS(UncertaintySet::budget(1.0, 1.5, 1, 1), ConfigError);
}

TEST_CASE("json round trip") {
    const UncertaintySet sets[] = {
        UncertaintySet::ellipsoidal(0.5, 3, 2), UncertaintySet::box(2.0, 5, 7),
        UncertaintySet::diamond(0.05, 2, 9), UncertaintySet::budget(1.0, 0.8, 4, 3)};
    for (const UncertaintySet& set : sets) {
        const auto back = geometry::set_from_json(geometry::to_json(set));
        CHECK(back.kind == set.kind);
        CHECK(back.rho == set.rho);
        CHECK(back.rows == set.rows);
        CHECK(back.cols == set.cols);
        if (set.kind == SetKind::Budget) CHECK(back.gamma == set.gamma);
    }
    CHECK_THROWS_AS(geometry::set_from_json(nlohmann::json{{"kind", "box"}}), ConfigError);
    CHECK_THROWS_AS(geometry::set_from_json(
                        nlohmann::json{{"kind", "budget"}, {"rho", 1.0}, {"n", 1}, {"k", 2}}),
                    ConfigError);
}

}  // TEST_SUITE
