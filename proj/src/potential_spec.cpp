#include "born_calderon/potential_spec.hpp"

#include "born_calderon/errors.hpp"
#include "born_calderon/result_table.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace bc {

namespace {

using nlohmann::json;

const json& field(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.contains(key)) {
        throw SchemaError(where + ": missing field \"" + key + "\"");
    }
    return obj.at(key);
}

double number(const json& obj, const std::string& key, const std::string& where)
{
    const json& v = field(obj, key, where);
    if (!v.is_number()) {
        throw SchemaError(where + ": field \"" + key + "\" must be a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw SchemaError(where + ": field \"" + key + "\" must be finite");
    }
    return x;
}

int integer(const json& obj, const std::string& key, const std::string& where)
{
    const json& v = field(obj, key, where);
    if (!v.is_number_integer()) {
        throw SchemaError(where + ": field \"" + key + "\" must be an integer");
    }
    return v.get<int>();
}

std::vector<double> numbers(const json& obj, const std::string& key, const std::string& where)
{
    const json& v = field(obj, key, where);
    if (!v.is_array()) {
        throw SchemaError(where + ": field \"" + key + "\" must be an array of numbers");
    }
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) {
            throw SchemaError(where + ": field \"" + key + "\" must be an array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

void allow_keys(const json& obj, std::set<std::string> keys, const std::string& where)
{
    if (!obj.is_object()) {
        throw SchemaError(where + ": expected a JSON object");
    }
    for (const auto& item : obj.items()) {
        if (!keys.count(item.key())) {
            throw SchemaError(where + ": unknown field \"" + item.key() + "\"");
        }
    }
}

RadialPotential radial_profile(const json& p, double alpha, int dimension, const std::string& where)
{
    if (!p.is_object()) {
        throw SchemaError(where + ": profile must be an object");
    }
    const json& kind_field = field(p, "kind", where);
    if (!kind_field.is_string()) {
        throw SchemaError(where + ": profile kind must be a string");
    }
    const std::string kind = kind_field.get<std::string>();
    try {
        if (kind == "constant_ball") {
            allow_keys(p, {"kind", "c"}, where);
            return RadialPotential::constant_ball(number(p, "c", where), alpha, dimension);
        }
        if (kind == "annulus") {
            allow_keys(p, {"kind", "c", "r_inner"}, where);
            return RadialPotential::annulus(number(p, "c", where), number(p, "r_inner", where), alpha, dimension);
        }
        if (kind == "gaussian_trunc") {
            allow_keys(p, {"kind", "amplitude", "width"}, where);
            return RadialPotential::gaussian_trunc(number(p, "amplitude", where), number(p, "width", where), alpha,
                                                   dimension);
        }
        if (kind == "bump") {
            allow_keys(p, {"kind", "amplitude"}, where);
            return RadialPotential::bump(number(p, "amplitude", where), alpha, dimension);
        }
        if (kind == "piecewise_constant") {
            allow_keys(p, {"kind", "breaks", "values"}, where);
            std::vector<double> breaks = numbers(p, "breaks", where);
            if (breaks.empty() || std::abs(breaks.back() - alpha) > 1e-12) {
                throw SchemaError(where + ": the last break must equal alpha");
            }
            breaks.back() = alpha;
            return RadialPotential::piecewise_constant(breaks, numbers(p, "values", where), dimension);
        }
    } catch (const DomainError& e) {
        throw SchemaError(where + ": " + e.what());
    }
    throw SchemaError(where + ": unknown profile kind \"" + kind + "\"");
}

PotentialSH sph_potential(const json& coeffs, double alpha)
{
    if (!coeffs.is_array() || coeffs.empty()) {
        throw SchemaError("coeffs must be a non-empty array");
    }
    std::vector<std::pair<SphericalIndex, PotentialSH::Basis>> profiles;
    std::set<std::pair<int, int>> seen;
    std::vector<double> breaks;
    double sup = 0.0;
    int degree = 0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const json& c = coeffs[i];
        const std::string where = "coeffs[" + std::to_string(i) + "]";
        allow_keys(c, {"l", "m", "value", "profile"}, where);
        const int l = integer(c, "l", where);
        const int m = integer(c, "m", where);
        if (l < 0 || std::abs(m) > l) {
            throw SchemaError(where + ": need l >= 0 and |m| <= l");
        }
        if (!seen.insert({l, m}).second) {
            throw SchemaError(where + ": duplicate (l, m)");
        }
        cplx value = 1.0;
        if (c.contains("value")) {
            const std::vector<double> v = numbers(c, "value", where);
            if (v.size() != 2) {
                throw SchemaError(where + ": value must be [re, im]");
            }
            value = {v[0], v[1]};
        }
        const RadialPotential rp = radial_profile(field(c, "profile", where), alpha, 3, where + ".profile");
        for (double b : rp.panel_ends()) {
            if (b > 0.0 && b < alpha) {
                breaks.push_back(b);
            }
        }
        sup += std::abs(value) * rp.sup_norm() * std::sqrt((2.0 * l + 1.0) / (4.0 * pi));
        degree = std::max(degree, l);
        profiles.push_back({{l, m}, [rp, value](double r) { return value * rp(r); }});
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    PotentialSH q = PotentialSH::from_profiles(degree, profiles, alpha, sup, breaks);
    double scale = 0.0;
    for (const auto& [idx, f] : profiles) {
        for (int j = 1; j <= 16; ++j) {
            scale = std::max(scale, std::abs(f(alpha * j / 17.0)));
        }
    }
    if (q.reality_defect() > 1e-12 * std::max(scale, 1.0)) {
        throw SchemaError("coeffs violate q_{l,-m} = (-1)^m conj(q_{l,m}); list both signs of m");
    }
    return q;
}

} // namespace

std::uint64_t PotentialSpec::hash() const
{
    return fnv1a64(source.dump());
}

PotentialSH PotentialSpec::as_sph() const
{
    if (sph) {
        return *sph;
    }
    if (dimension != 3) {
        throw DomainError("three-dimensional computations need dimension 3");
    }
    return PotentialSH::from_radial(*radial);
}

BallFunction PotentialSpec::as_ball_function() const
{
    if (radial) {
        if (dimension != 3) {
            throw DomainError("ball functions need dimension 3");
        }
        return radial->as_ball_function();
    }
    return sph->as_ball_function();
}

PotentialSpec parse_potential_spec(const nlohmann::json& spec)
{
    allow_keys(spec, {"type", "dimension", "alpha", "profile", "coeffs", "name", "description"}, "potential");
    PotentialSpec out;
    out.source = spec;
    const json& type = field(spec, "type", "potential");
    if (!type.is_string()) {
        throw SchemaError("potential: type must be a string");
    }
    out.type = type.get<std::string>();
    out.dimension = spec.contains("dimension") ? integer(spec, "dimension", "potential") : 3;
    out.alpha = number(spec, "alpha", "potential");
    if (!(out.alpha > 0.0) || out.alpha > 1.0) {
        throw SchemaError("potential: alpha must lie in (0, 1]");
    }
    if (out.type == "radial") {
        if (spec.contains("coeffs")) {
            throw SchemaError("potential: radial specs take a profile, not coeffs");
        }
        if (out.dimension < 2) {
            throw SchemaError("potential: dimension must be at least 2");
        }
        out.radial = radial_profile(field(spec, "profile", "potential"), out.alpha, out.dimension, "profile");
    } else if (out.type == "sph3d") {
        if (spec.contains("profile")) {
            throw SchemaError("potential: sph3d specs take coeffs, not a profile");
        }
        if (out.dimension != 3) {
            throw SchemaError("potential: sph3d needs dimension 3");
        }
        out.sph = sph_potential(field(spec, "coeffs", "potential"), out.alpha);
    } else {
        throw SchemaError("potential: unknown type \"" + out.type + "\"");
    }
    return out;
}

PotentialSpec load_potential_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open potential file " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_potential_spec(j);
}

} // namespace bc
