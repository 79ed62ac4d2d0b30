#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "sgflow/analysis.hpp"

using namespace sgflow;

namespace {

Vec parse_numbers(const std::string& s) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        vals.push_back(std::stod(s.substr(pos, next - pos)));
        pos = next + 1;
    }
    Vec v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v(i) = vals[i];
    return v;
}

// "x0,..,xn;u0,..,um"
std::pair<Vec, Vec> parse_point(const std::string& s) {
    const std::size_t semi = s.find(';');
    if (semi == std::string::npos) throw ParseError(s, "expected 'x...;u...'");
    return {parse_numbers(s.substr(0, semi)), parse_numbers(s.substr(semi + 1))};
}

struct Overrides {
    double epsilon = -1, alpha = -1, gamma = -1, beta = -1;
    double dt = -1, t_final = -1;
    std::string regularize;  // "p,margin"

    void apply(Scenario& s) const {
        if (epsilon > 0) s.params.epsilon = epsilon;
        if (alpha > 0) s.params.alpha = alpha;
        if (gamma > 0) s.params.gamma = gamma;
        if (beta > 0) s.params.beta = beta;
        if (dt > 0) s.sim.dt = dt;
        if (t_final > 0) s.sim.t_final = t_final;
        if (!regularize.empty()) {
            Vec pm = parse_numbers(regularize);
            if (pm.size() != 2) throw ParseError(regularize, "expected 'p,margin'");
            s.regularization = Regularization{pm(0), pm(1)};
            s.problem = sgflow::regularize(s.problem, pm(0), pm(1));
        }
        s.params.validate();
        s.sim.validate();
    }
};

Scenario load_by_ref(const std::string& ref) {
    for (const auto& n : builtin_names())
        if (ref == n) return builtin(n);
    return load_scenario_file(ref);
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Settled: return "settled";
        case Outcome::TimedOut: return "timed_out";
        case Outcome::Aborted: return "aborted";
    }
    return "unknown";
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json summarize(const Trajectory& t) {
    json s;
    s["outcome"] = outcome_name(t.outcome);
    if (t.outcome == Outcome::Settled) {
        s["settled_point"] = {{"x", vec_json(t.settled_x)}, {"u", vec_json(t.settled_u)}};
        s["settle_time"] = t.outcome_time;
    } else {
        s["settled_point"] = nullptr;
        s["settle_time"] = nullptr;
    }
    s["min_h"] = t.min_h;
    s["min_b"] = t.min_b;
    s["safe_start"] = t.safe_start;
    if (t.outcome == Outcome::Aborted) s["abort_reason"] = t.abort_reason;
    return s;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file " + path);
    out << content;
}

void write_traj_csv(const std::string& path, const Trajectory& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file " + path);
    write_csv(t, out);
}

int exit_code_for(Outcome o) {
    switch (o) {
        case Outcome::Settled: return 0;
        case Outcome::Aborted: return 2;
        case Outcome::TimedOut: return 3;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"safe feedback optimization: closed-loop studies and diagnostics"};
    app.require_subcommand(1);

    std::string scenario_ref, ic_str, point_str, out_path = "out";
    int jobs = 0;
    bool use_baseline = false;
    Overrides ov;

    auto add_common = [&](CLI::App* cmd, bool with_ic) {
        cmd->add_option("--scenario", scenario_ref, "builtin name or scenario JSON path")
            ->required();
        if (with_ic) cmd->add_option("--ic", ic_str, "initial condition 'x0,..;u0,..'");
        cmd->add_option("--epsilon", ov.epsilon, "gradient gain");
        cmd->add_option("--alpha", ov.alpha, "input-constraint gain");
        cmd->add_option("--gamma", ov.gamma, "barrier gain");
        cmd->add_option("--beta", ov.beta, "chain parameter");
        cmd->add_option("--dt", ov.dt, "integration step");
        cmd->add_option("--t-final", ov.t_final, "horizon");
        cmd->add_option("--regularize", ov.regularize, "objective penalty 'p,margin'");
    };

    auto* run = app.add_subcommand("run", "integrate one closed-loop trajectory");
    add_common(run, true);
    run->add_option("--out", out_path, "trajectory CSV path");
    run->add_flag("--baseline", use_baseline, "use the asymptotic-state-constraint baseline");

    auto* sweep = app.add_subcommand("sweep", "run every scenario IC");
    add_common(sweep, false);
    sweep->add_option("--out", out_path, "output prefix");
    sweep->add_option("--jobs", jobs, "parallel runs (default: hardware)");
    sweep->add_flag("--baseline", use_baseline, "use the baseline controller");

    auto* compare = app.add_subcommand("compare", "run Sgf and Baseline from one IC");
    add_common(compare, true);
    compare->add_option("--out", out_path, "output prefix");

    auto* analyze = app.add_subcommand("analyze", "KKT/equilibrium diagnostics at a point");
    add_common(analyze, false);
    analyze->add_option("--point", point_str, "state-input point 'x0,..;u0,..'")->required();

    app.add_subcommand("list-scenarios", "print builtin scenario names");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-scenarios")) {
            for (const auto& n : builtin_names()) std::cout << n << "\n";
            return 0;
        }

        Scenario sc = load_by_ref(scenario_ref);
        ov.apply(sc);

        if (app.got_subcommand("run")) {
            std::pair<Vec, Vec> ic = ic_str.empty()
                                         ? (sc.ics.empty()
                                                ? throw ValidationError("scenario has no ICs")
                                                : sc.ics.front())
                                         : parse_point(ic_str);
            BarrierChain chain = make_chain(sc);
            Trajectory t =
                integrate(sc.plant, sc.problem, chain, sc.params,
                          use_baseline ? RhsKind::Baseline : RhsKind::Sgf, ic.first,
                          ic.second, sc.sim);
            write_traj_csv(out_path, t);
            json s = summarize(t);
            write_file(out_path + ".summary.json", s.dump(2) + "\n");
            std::cout << s.dump(2) << "\n";
            return exit_code_for(t.outcome);
        }

        if (app.got_subcommand("sweep")) {
            auto entries = sweep_scenario(
                sc, use_baseline ? RhsKind::Baseline : RhsKind::Sgf, jobs);
            json agg = json::array();
            std::size_t settled = 0, aborted = 0;
            for (const auto& e : entries) {
                json row;
                row["index"] = e.index;
                row["ic"] = {{"x", vec_json(e.x0)}, {"u", vec_json(e.u0)}};
                row["outcome"] = outcome_name(e.outcome);
                if (e.outcome == Outcome::Settled)
                    row["settled_point"] = {{"x", vec_json(e.settled_x)},
                                            {"u", vec_json(e.settled_u)}};
                row["min_h"] = e.min_h;
                row["min_b"] = e.min_b;
                row["min_chain"] = e.min_chain;
                row["safe_start"] = e.safe_start;
                if (!e.abort_reason.empty()) row["abort_reason"] = e.abort_reason;
                agg.push_back(row);
                settled += e.outcome == Outcome::Settled;
                aborted += e.outcome == Outcome::Aborted;
            }
            json doc;
            doc["runs"] = agg;
            doc["total"] = entries.size();
            doc["settled"] = settled;
            doc["aborted"] = aborted;
            write_file(out_path + "_sweep.json", doc.dump(2) + "\n");
            std::cout << doc.dump(2) << "\n";
            return aborted == 0 ? 0 : 2;
        }

        if (app.got_subcommand("compare")) {
            std::pair<Vec, Vec> ic = ic_str.empty()
                                         ? (sc.ics.empty()
                                                ? throw ValidationError("scenario has no ICs")
                                                : sc.ics.front())
                                         : parse_point(ic_str);
            BarrierChain chain = make_chain(sc);
            Trajectory ts = integrate(sc.plant, sc.problem, chain, sc.params, RhsKind::Sgf,
                                      ic.first, ic.second, sc.sim);
            Trajectory tb = integrate(sc.plant, sc.problem, chain, sc.params,
                                      RhsKind::Baseline, ic.first, ic.second, sc.sim);
            write_traj_csv(out_path + "_sgf.csv", ts);
            write_traj_csv(out_path + "_baseline.csv", tb);
            json diff;
            diff["sgf_min_h"] = ts.min_h;
            diff["baseline_min_h"] = tb.min_h;
            diff["both_settled_points"] = {{"sgf", summarize(ts)["settled_point"]},
                                           {"baseline", summarize(tb)["settled_point"]}};
            write_file(out_path + "_diff.json", diff.dump(2) + "\n");
            std::cout << diff.dump(2) << "\n";
            return 0;
        }

        if (app.got_subcommand("analyze")) {
            std::pair<Vec, Vec> pt = parse_point(point_str);
            BarrierChain chain = make_chain(sc);
            EquilibriumClassification cls = classify_equilibrium(
                sc.plant, sc.problem, chain, sc.params, pt.first, pt.second);
            std::cout << to_json(cls).dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
