#include "steamnet/ensemble.hpp"
#include "steamnet/errors.hpp"
#include "steamnet/scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace steamnet;

namespace {

ArxModel arx(std::vector<double> f, std::vector<double> b, double gamma = 0.0)
{
    ArxModel m;
    m.f = std::move(f);
    m.b = std::move(b);
    m.gamma = gamma;
    return m;
}

// Random stable (3, 2, 1) model with poles inside a disc of radius 0.9.
ArxModel random_model(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> pole(-0.9, 0.9), gain(0.1, 1.0), bias(-0.05, 0.05);
    const double p1 = pole(rng), p2 = pole(rng), p3 = pole(rng);
    // (1 - p1 z)(1 - p2 z)(1 - p3 z)
    std::vector<double> f{-(p1 + p2 + p3), p1 * p2 + p1 * p3 + p2 * p3, -p1 * p2 * p3};
    return arx(f, {gain(rng), 0.5 * gain(rng)}, bias(rng));
}

const IdentificationResult& default_identification()
{
    static const IdentificationResult ident = run_identification(default_scenario());
    return ident;
}

std::vector<ReferenceModel> default_refs()
{
    const auto& id = default_identification();
    std::vector<ReferenceModel> refs;
    for (const auto& b : id.boilers)
        refs.push_back(make_reference(b.ss, id.boilers.front().arx));
    return refs;
}

} // namespace

TEST_CASE("reference of the template itself reproduces the template")
{
    const ArxModel t = arx({-1.2, 0.35, -0.02}, {0.3, -0.1}, 0.05);
    const StateSpaceModel ss = realize(t);
    const ReferenceModel ref = make_reference(ss, t);
    CHECK((ref.A_hat - ss.A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((ref.B_hat - ss.B).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(ref.gamma_hat == 0.05);
    CHECK(ref.beta.isIdentity());
}

TEST_CASE("scalar reference input follows the gain of the generator")
{
    const ArxModel tmpl = arx({-0.5}, {1.0});
    CHECK(tmpl.dc_gain() == doctest::Approx(2.0));
    const ArxModel other = arx({-0.2}, {2.4}); // gain 3
    const ReferenceModel ref = make_reference(realize(other), tmpl);
    CHECK(ref.B_hat(0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(ref.A_hat(0, 0) == 0.5);
    CHECK(dc_gain(ref.A_hat, ref.B_hat, ref.C_hat) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("references are gain consistent for random generator models")
{
    std::mt19937_64 rng(7);
    const ArxModel tmpl = random_model(rng);
    for (int trial = 0; trial < 30; ++trial) {
        const ArxModel m = random_model(rng);
        const StateSpaceModel ss = realize(m);
        const ReferenceModel ref = make_reference(ss, tmpl);
        CHECK(std::abs(dc_gain(ref.A_hat, ref.B_hat, ref.C_hat) - m.dc_gain()) <= 1e-9);
        CHECK(ref.gamma_hat == m.gamma);
    }
}

TEST_CASE("degenerate template is rejected")
{
    const ArxModel bad = arx({-1.0}, {1.0});
    const StateSpaceModel ss = realize(arx({-0.5}, {1.0}));
    CHECK_THROWS_AS(make_reference(ss, bad), DegenerateTemplateError);
}

TEST_CASE("identified boilers: reference and actual step responses settle together")
{
    const auto& id = default_identification();
    const auto refs = default_refs();
    REQUIRE(refs.size() == 5);
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& actual = id.boilers[i].ss;
        CHECK(std::abs(dc_gain(refs[i].A_hat, refs[i].B_hat, refs[i].C_hat) - id.boilers[i].g) <= 1e-9);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(actual.order());
        Eigen::VectorXd xr = Eigen::VectorXd::Zero(refs[i].order());
        for (int k = 0; k < 400; ++k) {
            x = actual.A * x + actual.B;
            xr = refs[i].A_hat * xr + refs[i].B_hat;
        }
        CHECK(std::abs(actual.C.dot(x) - refs[i].C_hat.dot(xr)) <= 1e-6);
    }
}

TEST_CASE("aggregate: degenerate and convex cases")
{
    const auto refs = default_refs();
    SUBCASE("single active generator")
    {
        const EnsembleModel e = aggregate(refs, {0, 0, 1, 0, 0}, {0, 0, 1, 0, 0});
        CHECK((e.B - refs[2].B_hat).cwiseAbs().maxCoeff() == 0.0);
        CHECK((e.A - refs[2].A_hat).cwiseAbs().maxCoeff() == 0.0);
        CHECK(e.gamma == refs[2].gamma_hat);
        CHECK(e.g == refs[2].g);
    }
    SUBCASE("identical references")
    {
        const std::vector<ReferenceModel> two{refs[1], refs[1]};
        const EnsembleModel e = aggregate(two, {0.5, 0.5}, {1, 1});
        CHECK((e.B - refs[1].B_hat).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SUBCASE("gain of the aggregate matches the weighted gains")
    {
        const std::vector<double> alpha{0.1, 0.15, 0.2, 0.25, 0.3};
        const EnsembleModel e = aggregate(refs, alpha, {1, 1, 1, 1, 1});
        double g = 0.0;
        for (std::size_t i = 0; i < refs.size(); ++i)
            g += alpha[i] * refs[i].g;
        CHECK(std::abs(dc_gain(e.A, e.B, e.C) - g) <= 1e-9);
        CHECK(std::abs(e.g - g) <= 1e-12);
    }
    SUBCASE("order does not depend on the active set")
    {
        CHECK(aggregate(refs, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}).order() ==
              aggregate(refs, {0.2, 0.2, 0.2, 0.2, 0.2}, {1, 1, 1, 1, 1}).order());
    }
    SUBCASE("removing a generator removes exactly its bias")
    {
        const EnsembleModel all = aggregate(refs, {0.2, 0.2, 0.2, 0.2, 0.2}, {1, 1, 1, 1, 1});
        const EnsembleModel four = aggregate(refs, {0.25, 0.25, 0.25, 0.25, 0.0}, {1, 1, 1, 1, 0});
        CHECK(all.gamma - four.gamma == doctest::Approx(refs[4].gamma_hat).epsilon(1e-12));
    }
}

TEST_CASE("aggregate rejects inconsistent shares")
{
    const auto refs = default_refs();
    CHECK_THROWS_AS(aggregate(refs, {0.5, 0.4, 0, 0, 0}, {1, 1, 0, 0, 0}), ContractError);
    CHECK_THROWS_AS(aggregate(refs, {0.5, 0.5, 0, 0, 0}, {1, 0, 0, 0, 0}), ContractError);
    CHECK_THROWS_AS(aggregate(refs, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}), ContractError);
    CHECK_THROWS_AS(aggregate(refs, {1.0}, {1}), ContractError);
}

TEST_CASE("resample: scalar example and identities")
{
    EnsembleModel e;
    e.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
    e.B = Eigen::VectorXd::Constant(1, 1.0);
    e.C = Eigen::RowVectorXd::Constant(1, 1.0);
    const EnsembleModel s = resample(e, 3);
    CHECK(s.A_T(0, 0) == 0.125);
    CHECK(s.B_T(0) == 1.75);

    const EnsembleModel one = resample(e, 1);
    CHECK(one.A_T == e.A);
    CHECK(one.B_T == e.B);
    CHECK_THROWS_AS(resample(e, 0), ContractError);

    const auto refs = default_refs();
    const EnsembleModel ens = aggregate(refs, {0.3, 0, 0.3, 0.4, 0}, {1, 0, 1, 1, 0});
    for (int nu : {1, 2, 3, 7}) {
        const EnsembleModel r = resample(ens, nu);
        Eigen::MatrixXd P = Eigen::MatrixXd::Identity(ens.order(), ens.order());
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(ens.order());
        for (int j = 0; j < nu; ++j) {
            acc += P * ens.B;
            P = ens.A * P;
        }
        CHECK((r.A_T - P).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((r.B_T - acc).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(dc_gain(r.A_T, r.B_T, r.C) - dc_gain(ens.A, ens.B, ens.C)) <= 1e-9);
    }
}

TEST_CASE("slow step of the resampled model equals nu fast steps under a held input")
{
    const auto refs = default_refs();
    const EnsembleModel ens = resample(aggregate(refs, {0.5, 0.5, 0, 0, 0}, {1, 1, 0, 0, 0}), 3);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(ens.order(), 0.1, 0.4);
    const double u = 1.7;
    Eigen::VectorXd fast = x;
    for (int j = 0; j < 3; ++j)
        fast = ens.A * fast + ens.B * u;
    const Eigen::VectorXd slow = ens.A_T * x + ens.B_T * u;
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ensemble state sums the selected reference states")
{
    const auto refs = default_refs();
    std::vector<Eigen::VectorXd> x;
    for (const auto& r : refs)
        x.push_back(Eigen::VectorXd::Constant(r.beta.cols(), 1.0));
    const Eigen::VectorXd s = ensemble_state(refs, {1, 0, 1, 0, 0}, x);
    CHECK((s - refs[0].beta * x[0] - refs[2].beta * x[2]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("disturbance bound")
{
    SUBCASE("identical models give no mismatch")
    {
        const ArxModel m = arx({-1.2, 0.35, -0.02}, {0.3, -0.1});
        const StateSpaceModel ss = realize(m);
        const auto bound = estimate_disturbance_bound({make_reference(ss, m)}, {ss}, 0.5, 1.0);
        CHECK(bound.w_inf <= 1e-12);
        CHECK(bound.w_fast <= 1e-12);
    }
    SUBCASE("smaller rate set does not increase the bound")
    {
        const auto& id = default_identification();
        const auto refs = default_refs();
        std::vector<StateSpaceModel> ss;
        for (const auto& b : id.boilers)
            ss.push_back(b.ss);
        const auto full = estimate_disturbance_bound(refs, ss, 0.5, 1.0);
        const auto half = estimate_disturbance_bound(refs, ss, 0.25, 1.0);
        CHECK(half.w_inf <= full.w_inf);
        CHECK(full.w_inf > 0.0);
        CHECK(full.w_inf <= 4e-2);
        CHECK(full.w_box.size() == refs.front().order());
    }
    SUBCASE("slowly settling mismatch is a model-quality failure")
    {
        const ArxModel tmpl = arx({-0.5}, {1.0});
        const ArxModel slow = arx({-0.9995}, {0.001});
        const StateSpaceModel ss = realize(slow);
        CHECK_THROWS_AS(estimate_disturbance_bound({make_reference(ss, tmpl)}, {ss}, 0.5, 1.0), ModelQualityError);
    }
    SUBCASE("bad arguments")
    {
        const ArxModel m = arx({-0.5}, {1.0});
        const StateSpaceModel ss = realize(m);
        CHECK_THROWS_AS(estimate_disturbance_bound({make_reference(ss, m)}, {ss}, 0.0, 1.0), ContractError);
        CHECK_THROWS_AS(estimate_disturbance_bound({}, {}, 0.5, 1.0), ContractError);
    }
}
