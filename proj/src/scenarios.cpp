#include "sgflow/scenarios.hpp"

#include <fstream>

namespace sgflow {

namespace {

// ---- json helpers -------------------------------------------------------

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ParseError(where, "unknown key '" + it.key() + "'");
    }
}

Mat parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw ParseError(where, "expected an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j.front().size();
    Mat M(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) throw ParseError(where, "ragged matrix");
        for (std::size_t k = 0; k < cols; ++k) M(i, k) = j[i][k].get<double>();
    }
    return M;
}

Vec parse_vector(const json& j, const std::string& where) {
    if (!j.is_array()) throw ParseError(where, "expected an array");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
    return v;
}

QuadraticForm parse_quadratic(const json& j, int dim, const std::string& where) {
    require_keys(j, {"c", "g", "Q"}, where);
    QuadraticForm q;
    q.c = j.value("c", 0.0);
    q.g = j.contains("g") ? parse_vector(j["g"], where + ".g") : Vec::Zero(dim).eval();
    q.Q = j.contains("Q") ? parse_matrix(j["Q"], where + ".Q") : Mat::Zero(dim, dim).eval();
    if (q.g.size() != dim || q.Q.rows() != dim || q.Q.cols() != dim)
        throw ParseError(where, "dimension mismatch");
    return q;
}

json matrix_json(const Mat& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index k = 0; k < M.cols(); ++k) r.push_back(M(i, k));
        rows.push_back(r);
    }
    return rows;
}

json vector_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

// ---- deterministic grids -------------------------------------------------

double radical_inverse(std::size_t index, unsigned base) {
    double result = 0.0, f = 1.0 / base;
    while (index > 0) {
        result += f * (index % base);
        index /= base;
        f /= base;
    }
    return result;
}

void finalize(Scenario& s) {
    try {
        s.plant = make_linear_plant(s.A, s.B);
    } catch (const NotHurwitz& e) {
        throw ValidationError(e.what());
    }
    s.problem = make_problem_spec(s.plant.n, s.plant.m, s.phi, s.h_form, s.b_form);
    s.problem.regularization = s.regularization;
    s.params.validate();
    s.sim.validate();
    for (const auto& [x0, u0] : s.ics)
        if (x0.size() != s.plant.n || u0.size() != s.plant.m)
            throw ValidationError("IC dimensions do not match the plant");
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"convex", "nonconvex", "item3-study", "spurious", "spurious-regularized"};
}

std::vector<std::pair<Vec, Vec>> safe_ic_grid(const PlantModel& plant,
                                              const ProblemSpec& spec, double beta, int r,
                                              const Vec& lo_x, const Vec& hi_x,
                                              const Vec& lo_u, const Vec& hi_u,
                                              std::size_t count, double margin) {
    BarrierChain chain = build_chain(plant, spec, beta, r);
    static const unsigned bases[] = {2, 3, 5, 7, 11, 13};
    const int n = plant.n, m = plant.m;
    std::vector<std::pair<Vec, Vec>> out;
    Vec x(n), u(m);
    for (std::size_t idx = 1; idx < 200000 && out.size() < count; ++idx) {
        for (int i = 0; i < n; ++i)
            x(i) = lo_x(i) + (hi_x(i) - lo_x(i)) * radical_inverse(idx, bases[i]);
        for (int i = 0; i < m; ++i)
            u(i) = lo_u(i) + (hi_u(i) - lo_u(i)) * radical_inverse(idx, bases[n + i]);
        if (spec.b(u) < margin) continue;
        Vec ch = chain.eval_chain(x, u);
        if ((ch.array() >= margin).all()) out.emplace_back(x, u);
    }
    return out;
}

Scenario builtin(const std::string& name, double ustar) {
    Scenario s;
    s.name = name;
    s.r = 1;

    auto grid_ics = [&s](const Vec& lox, const Vec& hix, const Vec& lou, const Vec& hiu) {
        return safe_ic_grid(s.plant, s.problem, s.params.beta, s.r, lox, hix, lou, hiu, 20);
    };

    if (name == "convex" || name == "nonconvex") {
        s.A = Mat{{-1.3, -0.3}, {-1.4, -0.5}};
        s.B = Mat::Identity(2, 2);
        // h(x) = 1 - (x1-0.2)^2/4 - (x2-0.3)^2, expanded
        s.h_form.c = 0.9;
        s.h_form.g = Vec{{0.1, 0.6}};
        s.h_form.Q = Mat{{-0.25, 0.0}, {0.0, -1.0}};
        if (name == "convex") {
            // phi = (x1+1.2)^2 + (x2-1)^2
            s.phi.terms = {{0, 1, -1.2, 1.0}, {1, 1, 1.0, 1.0}};
            // b(u) = 12 - ||u||^2
            s.b_form.c = 12.0;
            s.b_form.g = Vec::Zero(2);
            s.b_form.Q = -Mat::Identity(2, 2);
            s.params = ControllerParams{0.035, 5.0, 5.0, 1.0};
            s.sim = SimConfig{1e-3, 1500.0, 1000, 1e-7, 1.0};
            Expectations e;
            e.settled_states = {Vec{{-1.2, 1.0}}};
            e.tol = 0.02;
            s.expectations = e;
        } else {
            // phi = (x1^2 - 1.5^2)^2 + (x2^2 - 1)^2
            s.phi.terms = {{0, 2, 2.25, 1.0}, {1, 2, 1.0, 1.0}};
            // b(u) = 8 + u1^2 - u2^2
            s.b_form.c = 8.0;
            s.b_form.g = Vec::Zero(2);
            s.b_form.Q = Mat{{1.0, 0.0}, {0.0, -1.0}};
            s.params = ControllerParams{0.01, 5.0, 5.0, 1.0};
            s.sim = SimConfig{1e-3, 900.0, 1000, 1e-7, 1.0};
            Expectations e;
            e.settled_states = {Vec{{1.5, 1.0}}, Vec{{-1.49, 0.8}}};
            e.tol = 0.03;
            s.expectations = e;
        }
        finalize(s);
        s.ics.emplace_back(name == "convex" ? Vec{{1.55, -0.25}} : Vec{{0.0, -0.3}},
                           Vec::Zero(2));
        auto grid = grid_ics(Vec{{-1.7, -0.65}}, Vec{{2.1, 1.25}}, Vec{{-2.0, -2.0}},
                             Vec{{2.0, 2.0}});
        s.ics.insert(s.ics.end(), grid.begin(), grid.end());
        return s;
    }

    if (name == "item3-study") {
        s.A = Mat{{-1.0, 1.0}, {0.0, -1.0}};
        s.B = Mat{{0.0}, {1.0}};
        // phi = ||x - (ustar, ustar)||^2
        s.phi.terms = {{0, 1, ustar, 1.0}, {1, 1, ustar, 1.0}};
        // h(x) = 4 - ||x||^2
        s.h_form.c = 4.0;
        s.h_form.g = Vec::Zero(2);
        s.h_form.Q = -Mat::Identity(2, 2);
        // b(u) = 4 - u^2
        s.b_form.c = 4.0;
        s.b_form.g = Vec::Zero(1);
        s.b_form.Q = Mat{{-1.0}};
        s.params = ControllerParams{1.0, 5.0, 5.0, 1.0};
        s.sim = SimConfig{1e-3, 150.0, 100, 1e-7, 1.0};
        Expectations e;
        e.settled_states = {Vec{{ustar, ustar}}};
        e.tol = 0.02;
        s.expectations = e;
        finalize(s);
        s.ics = grid_ics(Vec{{-1.9, -1.9}}, Vec{{1.9, 1.9}}, Vec{{-1.9}}, Vec{{1.9}});
        return s;
    }

    if (name == "spurious" || name == "spurious-regularized") {
        s.A = Mat{{-2.0, 0.0}, {0.0, -4.0}};
        s.B = Mat::Identity(2, 2);
        // phi = ||x - (2,2)||^2
        s.phi.terms = {{0, 1, 2.0, 1.0}, {1, 1, 2.0, 1.0}};
        // h(x) = 1 - x1 - x2
        s.h_form.c = 1.0;
        s.h_form.g = Vec{{-1.0, -1.0}};
        s.h_form.Q = Mat::Zero(2, 2);
        // the study has no input constraint; a constant slack row stands in
        s.b_form.c = 1.0;
        s.b_form.g = Vec::Zero(2);
        s.b_form.Q = Mat::Zero(2, 2);
        s.params = ControllerParams{1.0, 5.0, 5.0, 1.0};
        s.sim = SimConfig{1e-3, 150.0, 100, 1e-7, 1.0};
        Expectations e;
        if (name == "spurious-regularized") {
            s.regularization = Regularization{2.0, 0.8};
            e.settled_states = {Vec{{0.48, 0.48}}};
        } else {
            e.settled_states = {Vec{{1.0, 0.0}}};
        }
        e.tol = 0.02;
        s.expectations = e;
        finalize(s);
        s.ics = grid_ics(Vec{{-1.5, -1.5}}, Vec{{1.0, 1.0}}, Vec{{-2.0, -2.0}},
                         Vec{{2.0, 2.0}});
        return s;
    }

    throw UnknownScenario(name);
}

Scenario load_scenario(const json& doc, const std::string& where) {
    if (!doc.is_object()) throw ParseError(where, "document must be an object");
    require_keys(doc,
                 {"name", "plant", "problem", "params", "sim", "r", "ics", "regularization",
                  "expectations"},
                 where);
    if (!doc.contains("plant") || !doc.contains("problem"))
        throw ParseError(where, "'plant' and 'problem' are required");

    Scenario s;
    s.name = doc.value("name", "custom");

    const json& plant = doc["plant"];
    require_keys(plant, {"A", "B"}, where + ".plant");
    if (!plant.contains("A") || !plant.contains("B"))
        throw ParseError(where + ".plant", "'A' and 'B' are required");
    s.A = parse_matrix(plant["A"], where + ".plant.A");
    s.B = parse_matrix(plant["B"], where + ".plant.B");
    const int n = static_cast<int>(s.A.rows());
    const int m = static_cast<int>(s.B.cols());

    const json& prob = doc["problem"];
    require_keys(prob, {"phi", "h", "b"}, where + ".problem");
    if (!prob.contains("phi") || !prob.contains("h") || !prob.contains("b"))
        throw ParseError(where + ".problem", "'phi', 'h' and 'b' are required");
    require_keys(prob["phi"], {"terms"}, where + ".problem.phi");
    for (const json& t : prob["phi"]["terms"]) {
        require_keys(t, {"index", "power", "center", "coef"}, where + ".problem.phi.terms[]");
        PolyObjective::Term term;
        term.index = t.value("index", 0);
        term.power = t.value("power", 1);
        term.center = t.value("center", 0.0);
        term.coef = t.value("coef", 1.0);
        if (term.index < 0 || term.index >= n)
            throw ParseError(where + ".problem.phi", "term index out of range");
        if (term.power < 1 || term.power > 4)
            throw ParseError(where + ".problem.phi", "term power must be in [1,4]");
        s.phi.terms.push_back(term);
    }
    s.h_form = parse_quadratic(prob["h"], n, where + ".problem.h");
    s.b_form = parse_quadratic(prob["b"], m, where + ".problem.b");

    if (doc.contains("params")) {
        const json& p = doc["params"];
        require_keys(p, {"epsilon", "alpha", "gamma", "beta"}, where + ".params");
        s.params.epsilon = p.value("epsilon", s.params.epsilon);
        s.params.alpha = p.value("alpha", s.params.alpha);
        s.params.gamma = p.value("gamma", s.params.gamma);
        s.params.beta = p.value("beta", s.params.beta);
    }
    if (doc.contains("sim")) {
        const json& c = doc["sim"];
        require_keys(c, {"dt", "t_final", "record_stride", "settle_tol", "settle_window"},
                     where + ".sim");
        s.sim.dt = c.value("dt", s.sim.dt);
        s.sim.t_final = c.value("t_final", s.sim.t_final);
        s.sim.record_stride = c.value("record_stride", s.sim.record_stride);
        s.sim.settle_tol = c.value("settle_tol", s.sim.settle_tol);
        s.sim.settle_window = c.value("settle_window", s.sim.settle_window);
    }
    s.r = doc.value("r", 1);
    if (doc.contains("ics")) {
        for (const json& ic : doc["ics"]) {
            require_keys(ic, {"x", "u"}, where + ".ics[]");
            if (!ic.contains("x") || !ic.contains("u"))
                throw ParseError(where + ".ics[]", "'x' and 'u' are required");
            s.ics.emplace_back(parse_vector(ic["x"], where + ".ics[].x"),
                               parse_vector(ic["u"], where + ".ics[].u"));
        }
    }
    if (doc.contains("regularization")) {
        const json& rj = doc["regularization"];
        require_keys(rj, {"p", "margin"}, where + ".regularization");
        Regularization reg;
        reg.p = rj.value("p", 0.0);
        reg.margin = rj.value("margin", 0.0);
        if (reg.p <= 0 || reg.margin <= 0)
            throw ParseError(where + ".regularization", "p and margin must be positive");
        s.regularization = reg;
    }
    if (doc.contains("expectations")) {
        const json& ej = doc["expectations"];
        require_keys(ej, {"settled_states", "tol", "expect_safe"}, where + ".expectations");
        Expectations e;
        if (ej.contains("settled_states"))
            for (const json& p : ej["settled_states"])
                e.settled_states.push_back(parse_vector(p, where + ".expectations"));
        e.tol = ej.value("tol", 0.02);
        e.expect_safe = ej.value("expect_safe", true);
        s.expectations = e;
    }

    finalize(s);
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, "cannot open file");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path, e.what());
    }
    return load_scenario(doc, path);
}

json to_json(const Scenario& s) {
    json doc;
    doc["name"] = s.name;
    doc["plant"]["A"] = matrix_json(s.A);
    doc["plant"]["B"] = matrix_json(s.B);
    json terms = json::array();
    for (const auto& t : s.phi.terms)
        terms.push_back(
            {{"index", t.index}, {"power", t.power}, {"center", t.center}, {"coef", t.coef}});
    doc["problem"]["phi"]["terms"] = terms;
    doc["problem"]["h"] = {{"c", s.h_form.c},
                           {"g", vector_json(s.h_form.g)},
                           {"Q", matrix_json(s.h_form.Q)}};
    doc["problem"]["b"] = {{"c", s.b_form.c},
                           {"g", vector_json(s.b_form.g)},
                           {"Q", matrix_json(s.b_form.Q)}};
    doc["params"] = {{"epsilon", s.params.epsilon},
                     {"alpha", s.params.alpha},
                     {"gamma", s.params.gamma},
                     {"beta", s.params.beta}};
    doc["sim"] = {{"dt", s.sim.dt},
                  {"t_final", s.sim.t_final},
                  {"record_stride", s.sim.record_stride},
                  {"settle_tol", s.sim.settle_tol},
                  {"settle_window", s.sim.settle_window}};
    doc["r"] = s.r;
    json ics = json::array();
    for (const auto& [x, u] : s.ics)
        ics.push_back({{"x", vector_json(x)}, {"u", vector_json(u)}});
    doc["ics"] = ics;
    if (s.regularization)
        doc["regularization"] = {{"p", s.regularization->p},
                                 {"margin", s.regularization->margin}};
    if (s.expectations) {
        json pts = json::array();
        for (const auto& p : s.expectations->settled_states) pts.push_back(vector_json(p));
        doc["expectations"] = {{"settled_states", pts},
                               {"tol", s.expectations->tol},
                               {"expect_safe", s.expectations->expect_safe}};
    }
    return doc;
}

BarrierChain make_chain(const Scenario& s) {
    return build_chain(s.plant, s.problem, s.params.beta, s.r);
}

std::vector<SweepEntry> sweep_scenario(const Scenario& s, RhsKind kind, int jobs) {
    BarrierChain chain = make_chain(s);
    return initial_condition_sweep(s.plant, s.problem, chain, s.params, kind, s.ics, s.sim,
                                   jobs);
}

}  // namespace sgflow
