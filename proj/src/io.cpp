#include "wbcal/io.hpp"

#include <fstream>

namespace wbcal::io {

using nlohmann::json;

json to_json(const cvec& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
    return a;
}

json to_json(const rvec& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json to_json(const cmat& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(cvec(m.row(r).transpose())));
    return rows;
}

cvec cvec_from_json(const json& j)
{
    cvec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = {j[i].at(0).get<double>(), j[i].at(1).get<double>()};
    return v;
}

rvec rvec_from_json(const json& j)
{
    rvec v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

cmat cmat_from_json(const json& j)
{
    const Eigen::Index rows = j.size();
    const Eigen::Index cols = rows ? j[0].size() : 0;
    cmat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = cvec_from_json(j[r]).transpose();
    return m;
}

json to_json(const MeasurementSet& ms)
{
    json j;
    j["format"] = "wbcal.measurements/1";
    j["sigma2"] = ms.sigma2;
    j["schedule"] = {{"carriers", ms.schedule.carriers}, {"n_p", ms.schedule.n_p}, {"frames", ms.schedule.frames}};
    json beams = json::array();
    for (int p = 0; p < ms.beams.n_p(); ++p)
        beams.push_back({{"D", to_json(ms.beams.D[p])}, {"W", to_json(ms.beams.W[p])}, {"s", to_json(ms.beams.s[p])}});
    j["beams"] = beams;
    j["layout"] = "y[m][(q*n_p + p)*n_rrf + r]";
    json ys = json::array();
    for (const auto& y : ms.y) ys.push_back(to_json(y));
    j["y"] = ys;
    return j;
}

MeasurementSet measurements_from_json(const json& j)
{
    MeasurementSet ms;
    ms.sigma2 = j.at("sigma2").get<double>();
    ms.schedule.carriers = j.at("schedule").at("carriers").get<std::vector<int>>();
    ms.schedule.n_p = j.at("schedule").at("n_p").get<int>();
    ms.schedule.frames = j.at("schedule").at("frames").get<int>();
    for (const auto& b : j.at("beams")) {
        ms.beams.D.push_back(cmat_from_json(b.at("D")));
        ms.beams.W.push_back(cmat_from_json(b.at("W")));
        ms.beams.s.push_back(cvec_from_json(b.at("s")));
    }
    for (const auto& y : j.at("y")) ms.y.push_back(cvec_from_json(y));
    return ms;
}

namespace {

json errors_json(const ArrayErrorSet& e)
{
    return {{"coupling", to_json(e.coupling)},
            {"gamma", to_json(e.gamma)},
            {"eps_x", to_json(e.spacing.eps_x)},
            {"eps_y", to_json(e.spacing.eps_y)}};
}

ArrayErrorSet errors_from(const json& j)
{
    return {cmat_from_json(j.at("coupling")), cvec_from_json(j.at("gamma")),
            {rvec_from_json(j.at("eps_x")), rvec_from_json(j.at("eps_y"))}};
}

}  // namespace

json to_json(const EstimatorState& st)
{
    json j;
    j["format"] = "wbcal.state/1";
    j["errors_bs"] = errors_json(st.errors_bs);
    j["errors_ue"] = errors_json(st.errors_ue);
    json frames = json::array();
    for (const auto& f : st.frames)
        frames.push_back({{"vr_x", to_json(f.vr_x)},
                          {"vr_y", to_json(f.vr_y)},
                          {"vt_x", to_json(f.vt_x)},
                          {"vt_y", to_json(f.vt_y)},
                          {"tau", to_json(f.tau)},
                          {"alpha", to_json(f.alpha)}});
    j["frames"] = frames;
    j["objective_history"] = st.objective_history;
    j["phase"] = st.phase == Phase::OnGrid ? "ongrid" : "offgrid";
    j["coupling_mode"] = st.coupling_mode == CouplingMode::ToeplitzOnly ? "toeplitz" : "approx";
    json steps = json::array();
    for (const auto& s : st.frame_steps) steps.push_back({s.angle, s.delay});
    j["frame_steps"] = steps;
    j["spacing_step"] = {st.spacing_step_bs, st.spacing_step_ue};
    j["iterations"] = st.iterations;
    j["flagged_solves"] = st.flagged_solves;
    return j;
}

EstimatorState state_from_json(const json& j)
{
    EstimatorState st;
    st.errors_bs = errors_from(j.at("errors_bs"));
    st.errors_ue = errors_from(j.at("errors_ue"));
    for (const auto& f : j.at("frames"))
        st.frames.push_back({rvec_from_json(f.at("vr_x")), rvec_from_json(f.at("vr_y")), rvec_from_json(f.at("vt_x")),
                             rvec_from_json(f.at("vt_y")), rvec_from_json(f.at("tau")), cvec_from_json(f.at("alpha"))});
    st.objective_history = j.at("objective_history").get<std::vector<double>>();
    st.phase = j.at("phase").get<std::string>() == "ongrid" ? Phase::OnGrid : Phase::OffGrid;
    st.coupling_mode = j.at("coupling_mode").get<std::string>() == "toeplitz" ? CouplingMode::ToeplitzOnly
                                                                              : CouplingMode::Approx;
    for (const auto& s : j.at("frame_steps")) st.frame_steps.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    st.spacing_step_bs = j.at("spacing_step").at(0).get<double>();
    st.spacing_step_ue = j.at("spacing_step").at(1).get<double>();
    st.iterations = j.at("iterations").get<int>();
    st.flagged_solves = j.at("flagged_solves").get<int>();
    return st;
}

namespace {

void write_file(const std::string& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    // max_digits10 round-trips doubles exactly
    out << j.dump(1) << '\n';
}

json read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

}  // namespace

void save_measurements(const MeasurementSet& ms, const std::string& path) { write_file(path, to_json(ms)); }
MeasurementSet load_measurements(const std::string& path) { return measurements_from_json(read_file(path)); }
void save_checkpoint(const EstimatorState& st, const std::string& path) { write_file(path, to_json(st)); }
EstimatorState load_checkpoint(const std::string& path) { return state_from_json(read_file(path)); }

}  // namespace wbcal::io
