#include <catch_amalgamated.hpp>

#include <random>

#include "pwave/report.hpp"

using namespace pwave;

namespace {

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("number formatting round-trips", "[report]") {
    std::mt19937_64 g(2);
    std::uniform_real_distribution<double> u(-300, 300);
    for (int i = 0; i < 1000; ++i) {
        double x = std::pow(10.0, u(g) / 10) * (i % 2 ? -1 : 1);
        CHECK(std::strtod(fmt17(x).c_str(), nullptr) == x);
    }
    CHECK(fmt17(0.1) == "0.10000000000000001");
    CHECK(fmt17(std::nan("")) == "nan");
    CHECK(fmt17(-INFINITY) == "-inf");
    CHECK(json_number(INFINITY).is_null());
    CHECK(json_number(2.5).get<double>() == 2.5);
}

TEST_CASE("CSV quoting", "[report]") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("study and check tables", "[report]") {
    ratio_study st;
    st.id = "demo";
    ratio_member a;
    a.id = 0;
    a.descriptor = "k1l2 k3l1";
    a.lhs = 1.5;
    a.rhs = 3;
    a.ratio = 0.5;
    ratio_member b = a;
    b.id = 1;
    b.descriptor = "x,y";
    b.ratio = std::nan("");
    b.error = "resolution_error: too coarse";
    st.members = {a, b};
    auto L = lines(study_csv({st, st}));
    REQUIRE(L.size() == 5);
    CHECK(L[0] == "study,member,descriptor,lhs,rhs,ratio,lhs_2T,ratio_2T,ratio_refined,error");
    CHECK(L[1] == "demo,0,k1l2 k3l1,1.5,3,0.5,0,0,0,");
    CHECK(L[2] == "demo,1,\"x,y\",1.5,3,nan,0,0,0,resolution_error: too coarse");

    auto C = lines(checks_csv({make_check("dirac", "unitarity, 200 steps", 2e-15, 0, 1e-8)}));
    REQUIRE(C.size() == 2);
    CHECK(C[0] == "group,name,value,lo,hi,pass");
    CHECK(C[1] == "dirac,\"unitarity, 200 steps\",2.0000000000000002e-15,0,1e-08,1");

    auto T = lines(trajectory_csv({{0, 1, 2, 3, 4}, {0.5, 1, 2, 3, 4.5}}));
    REQUIRE(T.size() == 3);
    CHECK(T[0] == "t,l2,h1,lambda_s_h1,x_running");
    CHECK(T[2] == "0.5,1,2,3,4.5");
}

TEST_CASE("JSON summaries", "[report]") {
    ratio_study st;
    st.id = "genineq2";
    st.members.resize(3);
    st.max_ratio = 0.7;
    st.check_growth = false;
    st.check_drift = true;
    st.drift = 0.01;
    st.extras = {{"s0_residual", 1e-9}};
    st.pass = true;
    auto j = study_summary(st);
    CHECK(j["members"] == 3);
    CHECK(j["t_growth"].is_null());
    CHECK(j["drift"].get<double>() == 0.01);
    CHECK(j["extras"]["s0_residual"].get<double>() == 1e-9);
    CHECK_FALSE(j.contains("note"));
    CHECK(j["pass"] == true);
    // nlohmann writes the shortest representation that round-trips
    CHECK(nlohmann::json::parse(j.dump())["max"].get<double>() == 0.7);

    auto c = check_summary(make_check("g", "n", std::nan(""), 0, 1));
    CHECK(c["value"].is_null());
    CHECK(c["pass"] == false);

    nld_report r;
    r.contraction.radii = {1e-3, 1e-2};
    r.picard_ok = true;
    auto n = nld_summary(r);
    CHECK(n["contraction"]["radii"].size() == 2);
    CHECK(n["gates"]["picard"] == true);
    CHECK(n["pass"] == false);
    CHECK(n["base"].contains("product_C"));
}
