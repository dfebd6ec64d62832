// Command-line front end: dispersion ODE tables, split-step simulation,
// transport metrics, Fokker-Planck checks, and the experiment harness.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlslab/dispersion.hpp"
#include "nlslab/experiments.hpp"
#include "nlslab/field.hpp"
#include "nlslab/fokker_planck.hpp"
#include "nlslab/nls.hpp"
#include "nlslab/self_similar.hpp"
#include "nlslab/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlslab;

namespace {

std::vector<double> parse_probes(const std::string& spec, double t_end) {
    std::vector<double> probes;
    if (spec.find(',') != std::string::npos) {
        std::stringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) probes.push_back(std::stod(tok));
    } else {
        int count = std::stoi(spec);
        for (int i = 1; i <= count; ++i) probes.push_back(t_end * i / count);
    }
    return probes;
}

int cmd_ode(const std::string& kind_name, double alpha, double sigma, int dim, double t_end,
            double tol, int samples, bool gap, const std::string& out_path) {
    std::vector<double> t_grid;
    for (int i = 1; i <= samples; ++i) t_grid.push_back(t_end * i / samples);

    std::ofstream out(out_path);
    if (!out) {
        std::cerr << "cannot open " << out_path << "\n";
        return 1;
    }
    if (gap) {
        auto gp = tau_gap(sigma, dim, t_grid, tol);
        out << "t,w,wdot,bound\n";
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            double t = t_grid[i];
            double bound = sigma * t * std::pow(std::log(t + 2.0), 1.5);
            out << format_double(t) << ',' << format_double(gp.w[i]) << ','
                << format_double(gp.w_dot[i]) << ',' << format_double(bound) << "\n";
        }
        return 0;
    }
    OdeKind kind;
    if (kind_name == "log")
        kind = OdeKind::logarithmic();
    else if (kind_name == "power")
        kind = OdeKind::generic_power(alpha);
    else if (kind_name == "sigma")
        kind = OdeKind::sigma_power(sigma, dim);
    else {
        std::cerr << "unknown ODE kind '" << kind_name << "'\n";
        return 1;
    }
    auto curve = solve_dispersion(kind, t_end, tol, t_grid);
    auto res = first_integral_residual(curve);
    out << "t,tau,tau_dot,residual\n";
    for (std::size_t i = 0; i < curve.times.size(); ++i)
        out << format_double(curve.times[i]) << ',' << format_double(curve.tau[i]) << ','
            << format_double(curve.tau_dot[i]) << ',' << format_double(res[i]) << "\n";
    return 0;
}

int cmd_simulate(const std::string& model_name, double sigma, int dim, int n, double half_width,
                 double dt, double t_end, const std::string& frame, const std::string& probes,
                 const std::string& out_dir) {
    Grid g = make_grid(dim, n, half_width);
    ComplexField phi = gaussian_field(g, 1.0, 1.0);
    auto probe_times = parse_probes(probes, t_end);
    fs::create_directories(out_dir);

    std::ofstream csv(out_dir + "/probes.csv");
    csv << "t,mass,energy,j_norm,pc_quantity,pc_rhs,kinetic,potential_term,boundary_mass\n";
    auto write_record = [&](const ProbeRecord& r) {
        csv << format_double(r.t) << ',' << format_double(r.mass) << ','
            << format_double(r.energy) << ',' << format_double(r.j_norm) << ','
            << format_double(r.pc_quantity) << ',' << format_double(r.pc_rhs) << ','
            << format_double(r.kinetic) << ',' << format_double(r.potential_term) << ','
            << format_double(r.boundary_mass) << "\n";
    };

    if (frame == "lab") {
        Model model = model_name == "power"      ? Model::power(sigma)
                      : model_name == "rescaled" ? Model::rescaled_power(sigma)
                                                 : Model::log();
        EvolutionConfig cfg;
        cfg.dt = dt;
        cfg.t_end = t_end;
        cfg.probe_times = probe_times;
        auto result = evolve(phi, model, cfg);
        for (const auto& r : result.records) write_record(r);
        save_checkpoint(out_dir + "/final.nlsf", result.final_field);
        return 0;
    }
    if (frame != "selfsim") {
        std::cerr << "frame must be 'lab' or 'selfsim'\n";
        return 1;
    }
    SelfSimilarModel model =
        model_name == "log" ? SelfSimilarModel::log() : SelfSimilarModel::rescaled(sigma);
    OdeKind kind = model.is_log ? OdeKind::logarithmic() : OdeKind::sigma_power(sigma, dim);
    auto curve = solve_dispersion(kind, t_end * 1.01 + 1.0, 1e-11);
    ComplexField v = phi;
    v.frame = Frame::SelfSimilar;
    double t = 0.0;
    std::size_t next = 0;
    while (next < probe_times.size()) {
        double target = probe_times[next];
        while (t < target) {
            double tau = curve.tau_at(t);
            double h = std::min(dt * std::max(1.0, tau), target - t);
            step_self_similar(v, h, model, curve);
            t = v.time;
        }
        v.time = t = target;
        ProbeRecord r;
        r.t = t;
        double l2 = lp_norm(v, 2.0);
        r.mass = l2 * l2;
        double tau = curve.tau_at(t);
        auto pe = pseudo_energy(v, model.is_log ? 0.0 : model.sigma, tau);
        r.energy = pe.total;
        r.kinetic = pe.kinetic;
        r.potential_term = pe.potential + pe.nonlinear;
        r.boundary_mass = boundary_mass_fraction(v);
        write_record(r);
        std::ostringstream name;
        name << out_dir << "/v_t" << format_double(t) << ".nlsf";
        save_checkpoint(name.str(), v);
        ++next;
    }
    return 0;
}

Density as_density(const Checkpoint& cp) {
    if (std::holds_alternative<Density>(cp)) return std::get<Density>(cp);
    return density_from_field(std::get<ComplexField>(cp));
}

int cmd_metrics(const std::string& file_a, const std::string& file_b,
                const std::vector<double>& hs_orders, const std::string& out_path) {
    Density a = as_density(load_checkpoint(file_a));
    Density b = as_density(load_checkpoint(file_b));
    json j;
    j["w1"] = a.grid.dim == 1 ? w1_1d(a, b) : w1_sliced(a, b, 64, 20240901u);
    j["l1"] = l1_distance(a, b);
    double ma = mean_coordinate(a), va = variance(a);
    double mb = mean_coordinate(b), vb = variance(b);
    j["w2_gaussian_fit"] = w2_gaussian(ma, va, mb, vb);
    json hs = json::object();
    for (double s : hs_orders) {
        std::vector<double> diff(a.values.size());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.values[i] - b.values[i];
        hs[format_double(s)] = sobolev_norm(a.grid, diff, -s);
    }
    j["hs"] = hs;
    if (out_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        std::ofstream(out_path) << j.dump(2) << "\n";
    return 0;
}

int cmd_lab_run(const std::string& config_path) {
    std::string bytes = read_file_bytes(config_path);
    json j = json::parse(bytes);
    std::vector<ExperimentConfig> configs;
    if (j.contains("experiments")) { // multi-experiment config
        for (const auto& sub : j.at("experiments")) configs.push_back(config_from_json(sub));
    } else {
        configs.push_back(config_from_json(j));
    }
    std::string out_dir = configs.front().out_dir;
    if (j.contains("out_dir")) out_dir = j.at("out_dir").get<std::string>();
    std::vector<ExperimentReport> reports;
    for (const auto& cfg : configs) {
        std::cerr << "running " << cfg.name << "...\n";
        reports.push_back(run_experiment(cfg));
        const auto& rep = reports.back();
        for (const auto& v : rep.verdicts)
            std::cerr << "  [" << (v.pass ? "pass" : "FAIL") << "] " << v.check
                      << " (value " << format_double(v.value) << ")\n";
    }
    emit_reports(reports, out_dir, bytes);
    bool ok = true;
    for (const auto& r : reports) ok &= r.pass();
    std::cout << (ok ? "all experiments passed" : "some experiments FAILED") << "\n";
    return ok ? 0 : 2;
}

int cmd_lab_verify(const std::string& manifest_path) {
    json manifest = json::parse(read_file_bytes(manifest_path));
    bool aggregate = true;
    for (const auto& exp : manifest.at("experiments")) {
        bool exp_pass = true;
        for (const auto& v : exp.at("verdicts")) exp_pass &= v.at("pass").get<bool>();
        if (exp_pass != exp.at("pass").get<bool>()) {
            std::cerr << "manifest inconsistency in experiment " << exp.at("name") << "\n";
            return 1;
        }
        aggregate &= exp_pass;
    }
    if (aggregate != manifest.at("pass").get<bool>()) {
        std::cerr << "manifest aggregate verdict inconsistent\n";
        return 1;
    }
    std::cout << "manifest consistent; aggregate " << (aggregate ? "pass" : "fail") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for power and logarithmic NLS flows"};
    app.require_subcommand(1);

    // ode
    auto* ode = app.add_subcommand("ode", "dispersion ODE tables (CSV)");
    std::string ode_kind = "log", ode_out = "ode.csv";
    double ode_alpha = 2.0, ode_sigma = 0.1, ode_tend = 100.0, ode_tol = 1e-10;
    int ode_dim = 1, ode_samples = 200;
    bool ode_gap = false;
    ode->add_option("--kind", ode_kind, "log | power | sigma");
    ode->add_option("--alpha", ode_alpha, "exponent for kind=power");
    ode->add_option("--sigma", ode_sigma, "sigma for kind=sigma or --gap");
    ode->add_option("--dim", ode_dim, "spatial dimension d");
    ode->add_option("--t-end", ode_tend);
    ode->add_option("--tol", ode_tol);
    ode->add_option("--samples", ode_samples);
    ode->add_flag("--gap", ode_gap, "emit w = tau_0 - tau_sigma gap table");
    ode->add_option("--out", ode_out);

    // simulate
    auto* sim = app.add_subcommand("simulate", "split-step evolution with probe records");
    std::string sim_model = "power", sim_frame = "lab", sim_probes = "10", sim_out = "sim-out";
    double sim_sigma = 1.0, sim_hw = 32.0, sim_dt = 2e-3, sim_tend = 1.0;
    int sim_dim = 1, sim_n = 2048;
    sim->add_option("--model", sim_model, "power | rescaled | log");
    sim->add_option("--sigma", sim_sigma);
    sim->add_option("--dim", sim_dim);
    sim->add_option("--n", sim_n);
    sim->add_option("--half-width", sim_hw);
    sim->add_option("--dt", sim_dt);
    sim->add_option("--t-end", sim_tend);
    sim->add_option("--frame", sim_frame, "lab | selfsim");
    sim->add_option("--probes", sim_probes, "count, or comma-separated times");
    sim->add_option("--out", sim_out);

    // metrics
    auto* met = app.add_subcommand("metrics", "distances between two checkpoints (JSON)");
    std::string met_a, met_b, met_out;
    std::vector<double> met_hs = {1.5};
    met->add_option("file_a", met_a)->required();
    met->add_option("file_b", met_b)->required();
    met->add_option("--hs", met_hs, "H^{-s} orders");
    met->add_option("--out", met_out);

    // fp
    auto* fp = app.add_subcommand("fp", "harmonic Fokker-Planck operations");
    fp->require_subcommand(1);
    auto* fp_prop = fp->add_subcommand("propagate", "apply e^{sL/lambda} to a checkpoint");
    std::string fp_in, fp_out;
    double fp_s = 0.5, fp_lambda = 1.0;
    fp_prop->add_option("--s", fp_s)->required();
    fp_prop->add_option("--lambda", fp_lambda);
    fp_prop->add_option("--input", fp_in)->required();
    fp_prop->add_option("--output", fp_out)->required();
    auto* fp_con = fp->add_subcommand("contraction", "W2 contraction lemma check (JSON)");
    double con_s = 0.5, con_mean = 1.0, con_var = 0.5;
    int con_n = 2048;
    double con_hw = 12.0;
    fp_con->add_option("--s", con_s);
    fp_con->add_option("--mean", con_mean);
    fp_con->add_option("--var", con_var);
    fp_con->add_option("--n", con_n);
    fp_con->add_option("--half-width", con_hw);
    auto* fp_wt = fp->add_subcommand("weights", "weighted moment lemma check (JSON)");
    double wt_s = 0.5, wt_c = 2.0;
    std::string wt_in;
    fp_wt->add_option("--s", wt_s);
    fp_wt->add_option("--constant", wt_c);
    fp_wt->add_option("--input", wt_in)->required();
    auto* fp_tr = fp->add_subcommand("trade", "derivative trade lemma check (JSON)");
    double tr_s = 0.3;
    std::string tr_in;
    fp_tr->add_option("--s", tr_s);
    fp_tr->add_option("--input", tr_in)->required();

    // lab
    auto* lab = app.add_subcommand("lab", "experiment harness");
    lab->require_subcommand(1);
    auto* lab_run = lab->add_subcommand("run", "run experiments from a config file");
    std::string lab_config;
    lab_run->add_option("config", lab_config)->required();
    auto* lab_list = lab->add_subcommand("list", "list available experiments");
    auto* lab_verify = lab->add_subcommand("verify", "verify a manifest");
    std::string lab_manifest;
    lab_verify->add_option("manifest", lab_manifest)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (ode->parsed())
            return cmd_ode(ode_kind, ode_alpha, ode_sigma, ode_dim, ode_tend, ode_tol,
                           ode_samples, ode_gap, ode_out);
        if (sim->parsed())
            return cmd_simulate(sim_model, sim_sigma, sim_dim, sim_n, sim_hw, sim_dt, sim_tend,
                                sim_frame, sim_probes, sim_out);
        if (met->parsed()) return cmd_metrics(met_a, met_b, met_hs, met_out);
        if (fp->parsed()) {
            if (fp_prop->parsed()) {
                Density d = as_density(load_checkpoint(fp_in));
                save_checkpoint(fp_out, fp_propagate(d, fp_s, fp_lambda));
                return 0;
            }
            json j;
            if (fp_con->parsed()) {
                Grid g = make_grid(1, con_n, con_hw);
                auto chk = fp_contraction_check(gaussian_density(g, con_mean, con_var), con_s,
                                                true);
                j = {{"lemma", "fokker_planck_to_gaussian"},
                     {"lhs", chk.lhs},
                     {"rhs", chk.rhs},
                     {"ok", chk.ok}};
            } else if (fp_wt->parsed()) {
                auto chk = fp_weight_bound_check(as_density(load_checkpoint(wt_in)), wt_s, wt_c);
                j = {{"lemma", "fokker_planck_with_weights"},
                     {"lhs", chk.lhs},
                     {"rhs", chk.rhs},
                     {"fitted_c", chk.fitted_c},
                     {"ok", chk.ok}};
            } else if (fp_tr->parsed()) {
                double res = fp_derivative_trade_check(as_density(load_checkpoint(tr_in)), tr_s);
                j = {{"lemma", "fokker_planck_trade"}, {"residual", res}, {"ok", res <= 1e-8}};
            }
            std::cout << j.dump(2) << "\n";
            return j.value("ok", true) ? 0 : 2;
        }
        if (lab->parsed()) {
            if (lab_list->parsed()) {
                for (const auto& name : experiment_names()) std::cout << name << "\n";
                return 0;
            }
            if (lab_run->parsed()) return cmd_lab_run(lab_config);
            if (lab_verify->parsed()) return cmd_lab_verify(lab_manifest);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
