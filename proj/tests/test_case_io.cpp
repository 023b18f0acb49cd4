#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "support/fixtures.hpp"
#include "support/random_networks.hpp"

using namespace fppf;

namespace {

const char* const bundled[] = {"two_bus.json",
                               "two_bus_infeasible.json",
                               "star_multi_pv.json",
                               "star_multi_pv_infeasible.json",
                               "single_pv_neighbor.json",
                               "single_pv_neighbor_infeasible.json",
                               "mixed_radial.json",
                               "mixed_radial_infeasible.json",
                               "six_bus_tree.json"};

}  // namespace

TEST(CaseIo, BundledCasesLoadAndValidate) {
    for (const char* name : bundled) {
        SCOPED_TRACE(name);
        const PowerNetwork net = load_case(testgen::case_path(name));
        EXPECT_TRUE(validate_network(net).accepted());
        EXPECT_EQ(network_from_json(network_to_json(net)), net);
    }
}

TEST(CaseIo, TwoBusCaseHasReferenceStresses) {
    const FppfProblem pr = FppfProblem::build(load_case(testgen::case_path("two_bus.json")));
    const SolvabilityCertificate c = certify(pr);
    EXPECT_NEAR(c.local_stress->delta(0), 0.5, 1e-15);
    EXPECT_NEAR(c.local_stress->gamma(0), 0.25, 1e-15);
}

TEST(CaseIo, RoundTripThroughFile) {
    std::mt19937_64 rng(61);
    const auto path = std::filesystem::temp_directory_path() / "fppf_roundtrip.json";
    for (int t = 0; t < 30; ++t) {
        const PowerNetwork net =
            testgen::random_injections(rng, testgen::random_tree(rng, 1 + t % 7, 1 + t % 3, testgen::Topology::General));
        save_case(path.string(), net);
        EXPECT_EQ(load_case(path.string()), net);
    }
    std::filesystem::remove(path);
}

TEST(CaseIo, SchemaErrors) {
    auto parse = [](const char* text) { return network_from_json(json::parse(text)); };
    EXPECT_THROW(parse("[]"), InputError);
    EXPECT_THROW(parse(R"({"buses": []})"), InputError);
    EXPECT_THROW(parse(R"({"buses": [{"id": 1, "kind": "PV", "p": 0}], "branches": []})"), InputError);
    EXPECT_THROW(parse(R"({"buses": [{"id": 1, "kind": "XX", "p": 0}], "branches": []})"), InputError);
    EXPECT_THROW(parse(R"({"buses": [{"id": 1, "kind": "PQ", "p": 0, "v_set": 1}], "branches": []})"), InputError);
    EXPECT_THROW(parse(R"({"buses": [{"id": 1, "kind": "PV", "p": 0, "v_set": 1, "q": 0}], "branches": []})"),
                 InputError);
    EXPECT_THROW(parse(R"({"buses": [{"id": 1, "kind": "PQ", "p": "x"}], "branches": []})"), InputError);
    EXPECT_THROW(parse(R"({"buses": [{"id": 1, "kind": "PQ", "p": 0}], "branches": [{"from": 1, "to": 2, "b": -1}]})"),
                 InputError);
    EXPECT_THROW(load_case("/nonexistent/case.json"), InputError);

    const PowerNetwork ok = parse(R"({"buses": [{"id": 1, "kind": "PV", "p": 0, "v_set": 1},
                                               {"id": 2, "kind": "pq", "p": 0}],
                                     "branches": [{"from": 2, "to": 1, "b": -1}]})");
    EXPECT_EQ(ok.base_mva(), 100.0);
    EXPECT_EQ(ok.buses()[0].q, 0.0);
    EXPECT_EQ(ok.branches()[0].from, 1);
}

TEST(CaseIo, SolutionAndCertificateJson) {
    const FppfProblem pr = FppfProblem::build(load_case(testgen::case_path("single_pv_neighbor.json")));
    const FppfState st = fppf_solve(pr);
    const json js = solution_to_json(pr, st, recover_angles(pr, st));
    EXPECT_TRUE(js["converged"].get<bool>());
    EXPECT_EQ(js["buses"].size(), 7u);
    EXPECT_EQ(js["branches"].size(), 6u);
    EXPECT_LT(js["residual"]["sup"].get<double>(), 1e-9);
    EXPECT_EQ(js["step_history"].size(), static_cast<std::size_t>(st.iterations));

    const json jc = certificate_to_json(pr.net, certify(pr));
    EXPECT_EQ(jc["theorem"], "no_pq_pq");
    EXPECT_TRUE(jc["uniqueness"].get<bool>());
    EXPECT_EQ(jc["buses"].size(), 4u);
    EXPECT_TRUE(jc["buses"][0].contains("dead_zones"));
    EXPECT_TRUE(jc["buses"][0].contains("angle_bound_deg"));
    EXPECT_EQ(jc["gg_branches"].size(), 2u);

    // Doubles survive serialization exactly.
    const double x = 0.1 + 0.2;
    EXPECT_EQ(json::parse(json(x).dump()).get<double>(), x);
}
