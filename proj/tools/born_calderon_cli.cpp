// born-calderon: batch front end for the D-N and Born computations.
//
// Exit codes: 0 success, 2 numerical failure (resonance, non-convergence,
// singular systems), 3 invalid input (schema, arguments, files),
// 4 tolerance violation (self-test failures, route gaps, accuracy errors).

#include "born_calderon/born3d.hpp"
#include "born_calderon/born_radial.hpp"
#include "born_calderon/dtn3d.hpp"
#include "born_calderon/errors.hpp"
#include "born_calderon/parallel.hpp"
#include "born_calderon/potential_spec.hpp"
#include "born_calderon/quadrature.hpp"
#include "born_calderon/radial_dtn.hpp"
#include "born_calderon/result_table.hpp"
#include "born_calderon/selfcheck.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

using namespace bc;
using nlohmann::json;

namespace {

constexpr int exit_numerical = 2;
constexpr int exit_input = 3;
constexpr int exit_tolerance = 4;

struct ToleranceViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void progress(const std::string& cmd, const std::string& msg)
{
    std::cerr << "[born-calderon " << cmd << "] " << msg << '\n';
}

Vec3 parse_omega(const std::string& text)
{
    std::vector<double> v;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        char* end = nullptr;
        const double x = std::strtod(part.c_str(), &end);
        if (part.empty() || *end != '\0') throw SchemaError("--omega expects x,y,z");
        v.push_back(x);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (v.size() != 3) throw SchemaError("--omega expects three components");
    const Vec3 w(v[0], v[1], v[2]);
    if (!(w.norm() > 0.0)) throw SchemaError("--omega must be nonzero");
    return w.normalized();
}

std::vector<double> s_grid(double smax, int ns)
{
    if (!(smax >= 0.0) || ns < 1) throw SchemaError("need --smax >= 0 and --ns >= 1");
    std::vector<double> s;
    for (int i = 0; i < ns; ++i) s.push_back(ns == 1 ? smax : smax * i / (ns - 1));
    return s;
}

json base_meta(const std::string& cmd, const PotentialSpec* spec)
{
    json m;
    m["command"] = cmd;
    if (spec) {
        m["potential_hash"] = hex64(spec->hash());
        m["potential"] = spec->source;
    }
    m["git_revision"] = git_revision();
    return m;
}

void write_table(const std::string& cmd, const ResultTable& t, const std::string& out)
{
    t.write(out);
    progress(cmd, "wrote " + out + " (" + std::to_string(t.rows().size()) + " rows)");
}

// ---------------------------------------------------------------------------

struct EigsArgs {
    std::string potential, out, method = "ode";
    int kmin = 0, kmax = 20, terms = 8;
};

int cmd_eigs_radial(const EigsArgs& a)
{
    const std::string cmd = "eigs-radial";
    const PotentialSpec spec = load_potential_spec(a.potential);
    if (!spec.is_radial()) throw SchemaError("eigs-radial needs a radial potential");
    if (a.kmin < 0 || a.kmax < a.kmin) throw SchemaError("need 0 <= --kmin <= --kmax");
    const RadialPotential& q = *spec.radial;
    const bool ode = a.method != "series";
    const bool series = a.method != "ode";

    std::vector<Column> cols = {{"k", ColumnType::integer}, {"lambda_k", ColumnType::real}};
    if (a.method == "both") {
        cols.push_back({"lambda_series", ColumnType::real});
        cols.push_back({"method_diff", ColumnType::real});
    }
    if (series) cols.push_back({"series_tail", ColumnType::real});
    for (const char* c : {"sigma_k1", "residual", "residual_bound"}) cols.push_back({c, ColumnType::real});
    ResultTable t(cols);

    const int n = a.kmax - a.kmin + 1;
    std::vector<double> lam_ode(n), lam_series(n), tail(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const int k = a.kmin + static_cast<int>(i);
        if (ode) lam_ode[i] = solve_radial_channel(q, k).lambda;
        if (series) {
            const SeriesEigenvalue s = eigenvalue_series(q, k, a.terms);
            lam_series[i] = s.lambda;
            tail[i] = s.tail_bound;
        }
    });
    for (int i = 0; i < n; ++i) {
        const int k = a.kmin + i;
        const double lam = ode ? lam_ode[i] : lam_series[i];
        const double s1 = sigma_k1(q, k);
        std::vector<Cell> row = {static_cast<long long>(k), lam};
        if (a.method == "both") {
            row.push_back(lam_series[i]);
            row.push_back(std::abs(lam_series[i] - lam_ode[i]));
        }
        if (series) row.push_back(tail[i]);
        row.push_back(s1);
        row.push_back(std::abs(lam - k - s1));
        row.push_back(first_order_residual_bound(q, k));
        t.add_row(row);
    }
    json m = base_meta(cmd, &spec);
    m["parameters"] = {{"kmin", a.kmin}, {"kmax", a.kmax}, {"method", a.method}, {"series_terms", a.terms}};
    m["tolerances"] = {{"ode_tolerance", OdeOptions{}.tolerance}, {"ode_start_radius", OdeOptions{}.start_radius}};
    t.meta() = m;
    write_table(cmd, t, a.out);
    return 0;
}

struct BornRadialArgs {
    std::string potential, out, method = "ode";
    double smax = 10.0;
    int ns = 101, kmax = 40;
};

int cmd_born_radial(const BornRadialArgs& a)
{
    const std::string cmd = "born-radial";
    const PotentialSpec spec = load_potential_spec(a.potential);
    if (!spec.is_radial()) throw SchemaError("born-radial needs a radial potential");
    if (a.kmax < 0) throw SchemaError("--kmax must be >= 0");
    const RadialPotential& q = *spec.radial;
    progress(cmd, "computing " + std::to_string(a.kmax + 1) + " eigenvalues");
    const DtnSpectrum spectrum = compute_spectrum(
        q, a.kmax, a.method == "series" ? DtnSpectrum::Method::series : DtnSpectrum::Method::ode);
    std::vector<double> sigma;
    for (int k = 0; k <= a.kmax; ++k) sigma.push_back(sigma_k1(q, k));

    ResultTable t({{"s", ColumnType::real},
                   {"born_hat", ColumnType::real},
                   {"born_tail", ColumnType::real},
                   {"fourier", ColumnType::real},
                   {"born_minus_fourier", ColumnType::real},
                   {"truncation_warning", ColumnType::integer}});
    int warnings = 0;
    for (double s : s_grid(a.smax, a.ns)) {
        const SeriesValue b = born_hat_radial(spectrum, s, a.kmax);
        const SeriesValue f = fourier_from_moments(sigma, s, q.dimension(), a.kmax);
        warnings += b.truncation_warning;
        t.add_row({s, b.value, b.tail_estimate, f.value, b.value - f.value,
                   static_cast<long long>(b.truncation_warning || f.truncation_warning)});
    }
    if (warnings > 0) progress(cmd, "warning: truncation at kmax on " + std::to_string(warnings) + " rows");
    json m = base_meta(cmd, &spec);
    m["parameters"] = {{"smax", a.smax}, {"ns", a.ns}, {"kmax", a.kmax}, {"method", a.method}};
    m["tolerances"] = {{"truncation_warning_relative", 1e-12}, {"ode_tolerance", OdeOptions{}.tolerance}};
    t.meta() = m;
    write_table(cmd, t, a.out);
    return 0;
}

struct MatrixArgs {
    std::string potential, out, omega = "0,0,1";
    int kmax = 4, lmax = -1;
    double route_tolerance = 1e-8;
};

int cmd_matrix_elements(const MatrixArgs& a)
{
    const std::string cmd = "matrix-elements";
    const PotentialSpec spec = load_potential_spec(a.potential);
    const PotentialSH q = spec.as_sph();
    const Frame f = Frame::from_direction(parse_omega(a.omega));
    if (a.kmax < 0) throw SchemaError("--kmax must be >= 0");
    progress(cmd, "solving " + std::to_string(a.kmax + 1) + " boundary problems");
    const MatrixElementTable table = matrix_element_table(q, f, a.kmax, a.lmax);
    const MomentTable3D moments = moment_table_3d(q, f, a.kmax);

    ResultTable t({{"k", ColumnType::integer},
                   {"l", ColumnType::integer},
                   {"entry", ColumnType::complex},
                   {"derivative_route", ColumnType::complex},
                   {"moment", ColumnType::complex}});
    for (int k = 0; k <= a.kmax; ++k)
        for (int l = k; l <= a.kmax; ++l)
            t.add_row({static_cast<long long>(k), static_cast<long long>(l), table.entries(k, l),
                       table.derivative_route(k, l), moments.entries(k, l)});
    for (const std::string& w : table.warnings) progress(cmd, "warning: " + w);

    json m = base_meta(cmd, &spec);
    m["parameters"] = {{"kmax", a.kmax}, {"lmax", table.lmax}, {"omega", {f.omega()(0), f.omega()(1), f.omega()(2)}}};
    const ChannelOptions opt;
    m["tolerances"] = {{"route_tolerance", a.route_tolerance},
                       {"gmres_tolerance", opt.tolerance},
                       {"shell_warning", opt.shell_warning},
                       {"nodes_per_panel", opt.nodes_per_panel},
                       {"max_panel_width", opt.max_panel_width}};
    m["diagnostics"] = {{"max_route_gap", table.max_route_gap},
                        {"max_shell_energy", table.max_shell_energy},
                        {"warnings", table.warnings}};
    t.meta() = m;
    write_table(cmd, t, a.out);
    if (table.max_route_gap > a.route_tolerance)
        throw ToleranceViolation("route gap " + format_real(table.max_route_gap) + " exceeds " +
                                 format_real(a.route_tolerance));
    return 0;
}

struct AveragedArgs {
    std::string potential, out, omega = "0,0,1";
    double smax = 5.0;
    int ns = 51, kmax = 12, lmax = -1;
};

int cmd_born_averaged(const AveragedArgs& a)
{
    const std::string cmd = "born-averaged";
    const PotentialSpec spec = load_potential_spec(a.potential);
    const PotentialSH q = spec.as_sph();
    const Frame f = Frame::from_direction(parse_omega(a.omega));
    if (a.kmax < 0) throw SchemaError("--kmax must be >= 0");
    progress(cmd, "matrix elements up to degree " + std::to_string(a.kmax));
    const MatrixElementTable table = matrix_element_table(q, f, a.kmax, a.lmax);
    const MomentTable3D moments = moment_table_3d(q, f, a.kmax);
    const TailModel tail{q.alpha(), q.sup_norm()};

    ResultTable t({{"s", ColumnType::real},
                   {"averaged", ColumnType::complex},
                   {"fourier_moments", ColumnType::complex},
                   {"difference", ColumnType::real},
                   {"tail_bound", ColumnType::real},
                   {"truncation_warning", ColumnType::integer}});
    int warnings = 0;
    for (double s : s_grid(a.smax, a.ns)) {
        const BornEvaluation b = averaged_born_hat(table, s * f.omega(), a.kmax, tail);
        const BornEvaluation m = fourier_via_moments_3d(moments, s * f.omega(), a.kmax);
        warnings += b.truncation_warning;
        t.add_row({s, b.value, m.value, std::abs(b.value - m.value), b.tail_bound.value_or(0.0),
                   static_cast<long long>(b.truncation_warning)});
    }
    if (warnings > 0) progress(cmd, "warning: truncation at kmax on " + std::to_string(warnings) + " rows");
    for (const std::string& w : table.warnings) progress(cmd, "warning: " + w);

    json m = base_meta(cmd, &spec);
    m["parameters"] = {{"smax", a.smax},
                       {"ns", a.ns},
                       {"kmax", a.kmax},
                       {"lmax", table.lmax},
                       {"omega", {f.omega()(0), f.omega()(1), f.omega()(2)}}};
    m["tolerances"] = {{"truncation_warning_relative", 1e-12}, {"gmres_tolerance", ChannelOptions{}.tolerance}};
    m["diagnostics"] = {{"max_route_gap", table.max_route_gap},
                        {"max_shell_energy", table.max_shell_energy},
                        {"warnings", table.warnings}};
    t.meta() = m;
    write_table(cmd, t, a.out);
    return 0;
}

struct OracleArgs {
    std::string potential, out, omega = "0,0,1";
    double smax = 10.0, tolerance = 1e-9;
    int ns = 51;
};

int cmd_fourier_oracle(const OracleArgs& a)
{
    const std::string cmd = "fourier-oracle";
    const PotentialSpec spec = load_potential_spec(a.potential);
    const BallFunction qb = spec.as_ball_function();
    const Vec3 w = parse_omega(a.omega);
    const std::vector<double> s = s_grid(a.smax, a.ns);
    OracleOptions opt;
    opt.tolerance = a.tolerance;
    std::vector<OracleResult> res(s.size());
    progress(cmd, "evaluating " + std::to_string(s.size()) + " samples");
    parallel_for(s.size(), [&](std::size_t i) { res[i] = fourier_oracle(qb, s[i] * w, opt); });

    ResultTable t({{"s", ColumnType::real},
                   {"xi_x", ColumnType::real},
                   {"xi_y", ColumnType::real},
                   {"xi_z", ColumnType::real},
                   {"value", ColumnType::complex},
                   {"last_change", ColumnType::real},
                   {"converged", ColumnType::integer}});
    int unconverged = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Vec3 xi = s[i] * w;
        unconverged += !res[i].converged;
        t.add_row({s[i], xi(0), xi(1), xi(2), res[i].value, res[i].last_change,
                   static_cast<long long>(res[i].converged)});
    }
    if (unconverged > 0) progress(cmd, "warning: " + std::to_string(unconverged) + " samples did not converge");
    json m = base_meta(cmd, &spec);
    m["parameters"] = {{"smax", a.smax}, {"ns", a.ns}, {"omega", {w(0), w(1), w(2)}}};
    m["tolerances"] = {{"oracle_tolerance", opt.tolerance},
                       {"initial_radial_order", opt.initial_radial_order},
                       {"initial_angular_degree", opt.initial_angular_degree},
                       {"max_doublings", opt.max_doublings}};
    t.meta() = m;
    write_table(cmd, t, a.out);
    return 0;
}

struct ReconstructArgs {
    std::string input, out, column = "born_hat", grid = "1,201";
    double band_limit = 0.0;
};

int cmd_reconstruct(const ReconstructArgs& a)
{
    const std::string cmd = "reconstruct";
    const ParsedTable in = read_csv(a.input);
    const int sc = in.find("s");
    const int vc = in.find(a.column);
    if (sc < 0 || vc < 0) throw SchemaError("input needs columns s and " + a.column);
    std::vector<double> values;
    for (const auto& row : in.rows) values.push_back(row[static_cast<std::size_t>(vc)]);
    if (in.rows.size() < 2) throw SchemaError("input needs at least two samples");
    const double ds = in.rows[1][static_cast<std::size_t>(sc)] - in.rows[0][static_cast<std::size_t>(sc)];
    for (std::size_t i = 0; i < in.rows.size(); ++i) {
        const double s = in.rows[i][static_cast<std::size_t>(sc)];
        if (std::abs(s - i * ds) > 1e-9 * std::max(1.0, ds * in.rows.size()))
            throw SchemaError("input s column must be uniform and start at 0");
    }

    const std::size_t comma = a.grid.find(',');
    if (comma == std::string::npos) throw SchemaError("--grid expects rmax,n");
    const double rmax = std::stod(a.grid.substr(0, comma));
    const int n = std::stoi(a.grid.substr(comma + 1));
    if (!(rmax > 0.0) || n < 2) throw SchemaError("--grid needs rmax > 0 and n >= 2");
    std::vector<double> r;
    for (int i = 0; i < n; ++i) r.push_back(rmax * i / (n - 1));

    const RadialReconstruction rec = reconstruct_radial(values, ds, a.band_limit, r);
    for (const std::string& w : rec.warnings) progress(cmd, "warning: " + w);
    ResultTable t({{"r", ColumnType::real}, {"q", ColumnType::real}});
    for (std::size_t i = 0; i < r.size(); ++i) t.add_row({r[i], rec.q[i]});
    json m = base_meta(cmd, nullptr);
    m["input"] = a.input;
    m["input_hash"] = hex64(fnv1a64(a.input));
    m["parameters"] = {{"band_limit", a.band_limit}, {"column", a.column}, {"rmax", rmax}, {"n", n}, {"ds", ds}};
    m["warnings"] = rec.warnings;
    t.meta() = m;
    write_table(cmd, t, a.out);
    return 0;
}

int cmd_selftest(const std::string& suite_name)
{
    const Suite suite = parse_suite(suite_name);
    int failed = 0;
    run_selfcheck(suite, [&](const CriterionResult& r) {
        std::cout << format_criterion(r) << std::endl;
        failed += !r.passed;
    });
    std::cout << (failed == 0 ? "selftest passed" : "selftest FAILED: " + std::to_string(failed) + " criteria")
              << std::endl;
    if (failed > 0) throw ToleranceViolation(std::to_string(failed) + " self-test criteria failed");
    return 0;
}

int report(int code, const std::string& kind, const std::string& message)
{
    json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << j.dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dirichlet-to-Neumann maps and Born approximations for Schrodinger potentials"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    EigsArgs eigs;
    auto* e = app.add_subcommand("eigs-radial", "radial D-N eigenvalues with moments and residual bounds");
    e->add_option("--potential", eigs.potential, "potential JSON")->required();
    e->add_option("--kmin", eigs.kmin, "first degree")->capture_default_str();
    e->add_option("--kmax", eigs.kmax, "last degree")->capture_default_str();
    e->add_option("--method", eigs.method)->check(CLI::IsMember({"ode", "series", "both"}))->capture_default_str();
    e->add_option("--terms", eigs.terms, "series terms")->capture_default_str();
    e->add_option("--out", eigs.out, "output CSV")->required();

    BornRadialArgs br;
    auto* b = app.add_subcommand("born-radial", "Born series and Fourier transform of a radial potential");
    b->add_option("--potential", br.potential)->required();
    b->add_option("--smax", br.smax)->capture_default_str();
    b->add_option("--ns", br.ns)->capture_default_str();
    b->add_option("--kmax", br.kmax)->capture_default_str();
    b->add_option("--method", br.method)->check(CLI::IsMember({"ode", "series"}))->capture_default_str();
    b->add_option("--out", br.out)->required();

    MatrixArgs mx;
    auto* mcmd = app.add_subcommand("matrix-elements", "averaged D-N matrix elements and moments along omega");
    mcmd->add_option("--potential", mx.potential)->required();
    mcmd->add_option("--kmax", mx.kmax)->capture_default_str();
    mcmd->add_option("--omega", mx.omega, "direction x,y,z")->capture_default_str();
    mcmd->add_option("--lmax", mx.lmax, "channel bandwidth (-1: automatic)")->capture_default_str();
    mcmd->add_option("--route-tolerance", mx.route_tolerance)->capture_default_str();
    mcmd->add_option("--out", mx.out)->required();

    AveragedArgs av;
    auto* a = app.add_subcommand("born-averaged", "averaged Born transform along omega");
    a->add_option("--potential", av.potential)->required();
    a->add_option("--omega", av.omega)->capture_default_str();
    a->add_option("--smax", av.smax)->capture_default_str();
    a->add_option("--ns", av.ns)->capture_default_str();
    a->add_option("--kmax", av.kmax)->capture_default_str();
    a->add_option("--lmax", av.lmax)->capture_default_str();
    a->add_option("--out", av.out)->required();

    OracleArgs orc;
    auto* o = app.add_subcommand("fourier-oracle", "Fourier transform by adaptive ball quadrature");
    o->add_option("--potential", orc.potential)->required();
    o->add_option("--omega", orc.omega)->capture_default_str();
    o->add_option("--smax", orc.smax)->capture_default_str();
    o->add_option("--ns", orc.ns)->capture_default_str();
    o->add_option("--tolerance", orc.tolerance)->capture_default_str();
    o->add_option("--out", orc.out)->required();

    ReconstructArgs rc;
    auto* r = app.add_subcommand("reconstruct", "radial band-limited inversion of a transform table");
    r->add_option("--input", rc.input, "CSV with a uniform s column")->required();
    r->add_option("--column", rc.column)->capture_default_str();
    r->add_option("--band-limit", rc.band_limit)->required();
    r->add_option("--grid", rc.grid, "rmax,n")->capture_default_str();
    r->add_option("--out", rc.out)->required();

    std::string suite = "fast";
    auto* st = app.add_subcommand("selftest", "acceptance battery");
    st->add_option("--suite", suite)->check(CLI::IsMember({"fast", "full"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return report(exit_input, "ArgumentError", ex.what());
    }

    try {
        if (*e) return cmd_eigs_radial(eigs);
        if (*b) return cmd_born_radial(br);
        if (*mcmd) return cmd_matrix_elements(mx);
        if (*a) return cmd_born_averaged(av);
        if (*o) return cmd_fourier_oracle(orc);
        if (*r) return cmd_reconstruct(rc);
        if (*st) return cmd_selftest(suite);
    } catch (const ToleranceViolation& ex) {
        return report(exit_tolerance, "ToleranceViolation", ex.what());
    } catch (const SchemaError& ex) {
        return report(exit_input, "SchemaError", ex.what());
    } catch (const DomainError& ex) {
        return report(exit_input, "DomainError", ex.what());
    } catch (const AccuracyError& ex) {
        return report(exit_tolerance, "AccuracyError", ex.what());
    } catch (const TruncationError& ex) {
        return report(exit_tolerance, "TruncationError", ex.what());
    } catch (const ResonanceError& ex) {
        return report(exit_numerical, "ResonanceError", ex.what());
    } catch (const ConvergenceError& ex) {
        return report(exit_numerical, "ConvergenceError", ex.what());
    } catch (const SingularSystemError& ex) {
        return report(exit_numerical, "SingularSystemError", ex.what());
    } catch (const NumericalError& ex) {
        return report(exit_numerical, "NumericalError", ex.what());
    } catch (const std::invalid_argument& ex) {
        return report(exit_input, "ArgumentError", ex.what());
    } catch (const std::exception& ex) {
        return report(1, "InternalError", ex.what());
    }
    return 1;
}
