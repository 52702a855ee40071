#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pwave/nld.hpp"
#include "pwave/verify.hpp"

namespace pwave {

// 17 significant digits: round-trip safe for doubles.
inline std::string fmt17(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string study_csv(const std::vector<ratio_study>& studies) {
    std::ostringstream os;
    os << "study,member,descriptor,lhs,rhs,ratio,lhs_2T,ratio_2T,ratio_refined,error\n";
    for (auto& st : studies)
        for (auto& m : st.members)
            os << st.id << ',' << m.id << ',' << csv_quote(m.descriptor) << ',' << fmt17(m.lhs) << ',' << fmt17(m.rhs)
               << ',' << fmt17(m.ratio) << ',' << fmt17(m.lhs_2T) << ',' << fmt17(m.ratio_2T) << ','
               << fmt17(m.ratio_refined) << ',' << csv_quote(m.error) << '\n';
    return os.str();
}

inline std::string checks_csv(const std::vector<check_entry>& checks) {
    std::ostringstream os;
    os << "group,name,value,lo,hi,pass\n";
    for (auto& c : checks)
        os << c.group << ',' << csv_quote(c.name) << ',' << fmt17(c.value) << ',' << fmt17(c.lo) << ',' << fmt17(c.hi)
           << ',' << (c.pass ? 1 : 0) << '\n';
    return os.str();
}

// Columns: t, L^2, H^1, Lambda^s H^1, running X-norm.
inline std::string trajectory_csv(const std::vector<nld_diag_row>& diag) {
    std::ostringstream os;
    os << "t,l2,h1,lambda_s_h1,x_running\n";
    for (auto& d : diag)
        os << fmt17(d.t) << ',' << fmt17(d.l2) << ',' << fmt17(d.h1) << ',' << fmt17(d.lambda_h1) << ','
           << fmt17(d.x_running) << '\n';
    return os.str();
}

// JSON has no NaN/inf; non-finite values are written as null.
inline nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return x;
}

inline nlohmann::json study_summary(const ratio_study& st) {
    nlohmann::json j;
    j["id"] = st.id;
    j["T"] = json_number(st.T);
    j["members"] = st.members.size();
    j["max"] = json_number(st.max_ratio);
    j["median"] = json_number(st.median_ratio);
    j["max_2T"] = st.check_growth ? json_number(st.max_ratio_2T) : nlohmann::json(nullptr);
    j["t_growth"] = st.check_growth ? json_number(st.t_growth) : nlohmann::json(nullptr);
    j["max_refined"] = st.check_drift ? json_number(st.max_ratio_refined) : nlohmann::json(nullptr);
    j["drift"] = st.check_drift ? json_number(st.drift) : nlohmann::json(nullptr);
    for (auto& [k, v] : st.extras) j["extras"][k] = json_number(v);
    if (!st.note.empty()) j["note"] = st.note;
    j["pass"] = st.pass;
    return j;
}

inline nlohmann::json check_summary(const check_entry& c) {
    return {{"group", c.group}, {"name", c.name}, {"value", json_number(c.value)},
            {"lo", json_number(c.lo)}, {"hi", json_number(c.hi)}, {"pass", c.pass}};
}

inline nlohmann::json nld_summary(const nld_report& r) {
    auto level = [](const nld_level_report& l) {
        return nlohmann::json{{"dt", l.dt},
                              {"r_nodes", l.r_nodes},
                              {"data_norm", json_number(l.data_norm)},
                              {"sup_lambda_h1", json_number(l.sup_lambda_h1)},
                              {"x_half", json_number(l.x_half)},
                              {"x_T", json_number(l.x_T)},
                              {"l2_drift", json_number(l.l2_drift)},
                              {"product_C", json_number(l.product_C)}};
    };
    nlohmann::json j;
    j["base"] = level(r.base);
    j["refined"] = level(r.refined);
    j["picard_residual"] = json_number(r.picard_residual);
    j["homogeneity_error"] = json_number(r.homogeneity_error);
    j["contraction"] = {{"radii", r.contraction.radii},
                        {"slope", json_number(r.contraction.slope)},
                        {"intercept", json_number(r.contraction.intercept)},
                        {"cubic_exponent", json_number(r.contraction.cubic_exponent)},
                        {"A", json_number(r.contraction.A)},
                        {"B", json_number(r.contraction.B)}};
    j["gates"] = {{"bound", r.bound_ok},         {"x_stable", r.x_stable}, {"picard", r.picard_ok},
                  {"contraction", r.contraction_ok}, {"cubic", r.cubic_ok}, {"product", r.product_ok},
                  {"homogeneity", r.homogeneity_ok}};
    j["pass"] = r.pass;
    return j;
}

}  // namespace pwave
