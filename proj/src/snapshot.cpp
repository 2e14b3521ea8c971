#include "windgbm/snapshot.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace windgbm {

namespace {

nlohmann::json matrix_json(const Eigen::Matrix2d& m) {
    return {{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}};
}

Eigen::Matrix2d matrix_from(const nlohmann::json& j) {
    Eigen::Matrix2d m;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

}  // namespace

nlohmann::json to_json(const SpeedFilterState& s) {
    return {{"x_hat", s.x_hat},
            {"p_x", s.p_x},
            {"sigma_z2", s.sigma_z2},
            {"theta",
             {{"theta_hat", {s.theta.theta_hat(0), s.theta.theta_hat(1)}},
              {"p_theta", matrix_json(s.theta.p_theta)},
              {"q", matrix_json(s.theta.q)}}},
            {"a_row", {s.a_row(0), s.a_row(1)}},
            {"delta_t", s.delta_t},
            {"sigma2_min", s.sigma2_min},
            {"phase", s.phase == SpeedFilterState::Phase::posterior ? "posterior" : "prior"}};
}

SpeedFilterState filter_state_from_json(const nlohmann::json& j) {
    SpeedFilterState s;
    s.x_hat = j.at("x_hat").get<double>();
    s.p_x = j.at("p_x").get<double>();
    s.sigma_z2 = j.at("sigma_z2").get<double>();
    const auto& th = j.at("theta");
    s.theta.theta_hat << th.at("theta_hat").at(0).get<double>(), th.at("theta_hat").at(1).get<double>();
    s.theta.p_theta = matrix_from(th.at("p_theta"));
    s.theta.q = matrix_from(th.at("q"));
    s.a_row << j.at("a_row").at(0).get<double>(), j.at("a_row").at(1).get<double>();
    s.delta_t = j.at("delta_t").get<double>();
    s.sigma2_min = j.value("sigma2_min", 1e-8);
    const auto phase = j.value("phase", std::string("posterior"));
    if (phase != "posterior" && phase != "prior")
        throw std::invalid_argument("unknown filter phase '" + phase + "'");
    s.phase = phase == "posterior" ? SpeedFilterState::Phase::posterior
                                   : SpeedFilterState::Phase::prior;
    s.check();
    return s;
}

nlohmann::json to_json(const PowerCurveModel& m) {
    return {{"centers", std::vector<double>(m.centers.begin(), m.centers.end())},
            {"lambdas", std::vector<double>(m.lambdas.begin(), m.lambdas.end())},
            {"delta", m.delta},
            {"gamma", m.gamma},
            {"window", m.window},
            {"sigma_f", m.sigma_f},
            {"lambda_last", m.lambda_last},
            {"delta_t", m.delta_t}};
}

PowerCurveModel curve_from_json(const nlohmann::json& j) {
    PowerCurveModel m;
    const auto centers = j.at("centers").get<std::vector<double>>();
    const auto lambdas = j.at("lambdas").get<std::vector<double>>();
    if (centers.size() != lambdas.size())
        throw std::invalid_argument("curve snapshot: centers and lambdas differ in length");
    m.centers.assign(centers.begin(), centers.end());
    m.lambdas.assign(lambdas.begin(), lambdas.end());
    m.delta = j.at("delta").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.window = j.value("window", std::size_t{0});
    m.sigma_f = j.at("sigma_f").get<double>();
    m.lambda_last = j.value("lambda_last", lambdas.empty() ? 0.0 : lambdas.back());
    m.delta_t = j.value("delta_t", 1.0);
    if (!(m.delta > 0.0) || !(m.gamma > 0.0) || m.sigma_f < 0.0 ||
        (m.window != 0 && m.size() > m.window))
        throw std::invalid_argument("curve snapshot violates model invariants");
    return m;
}

nlohmann::json to_json(const PipelineState& s) {
    return {{"filter", to_json(s.filter)},
            {"curve", to_json(s.curve)},
            {"hyper",
             {{"q_mu", s.hyper.q_mu},
              {"q_sigma", s.hyper.q_sigma},
              {"sigma_z2", s.hyper.sigma_z2}}},
            {"last_power", s.last_power},
            {"last_speed", s.last_speed},
            {"steps_done", s.steps_done}};
}

PipelineState pipeline_from_json(const nlohmann::json& j) {
    PipelineState s;
    s.filter = filter_state_from_json(j.at("filter"));
    s.curve = curve_from_json(j.at("curve"));
    const auto& h = j.at("hyper");
    s.hyper = {h.at("q_mu").get<double>(), h.at("q_sigma").get<double>(),
               h.at("sigma_z2").get<double>()};
    s.last_power = j.at("last_power").get<double>();
    s.last_speed = j.at("last_speed").get<double>();
    s.steps_done = j.at("steps_done").get<std::size_t>();
    return s;
}

void save_snapshot(const std::filesystem::path& path, const PipelineState& state) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(state).dump(2) << '\n';
}

PipelineState load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open snapshot " + path.string());
    try {
        return pipeline_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed snapshot: ") + e.what());
    }
}

}  // namespace windgbm
