#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <variant>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

enum class Frame : std::uint8_t { Lab = 0, SelfSimilar = 1 };

/// Discretized wavefunction on a Grid. `time` is lab time t, or the
/// compactified variable when the owner flags it so (experiments keep
/// track; the solver never reinterprets it).
struct ComplexField {
    Grid grid;
    std::vector<std::complex<double>> values;
    Frame frame = Frame::Lab;
    double time = 0.0;

    ComplexField() = default;
    ComplexField(const Grid& g, Frame f = Frame::Lab, double t = 0.0)
        : grid(g), values(g.size(), {0.0, 0.0}), frame(f), time(t) {}

    bool finite() const {
        for (const auto& v : values)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }
};

/// Nonnegative grid function with cached mass (rectangle-rule integral).
struct Density {
    Grid grid;
    std::vector<double> values;

    Density() = default;
    Density(const Grid& g) : grid(g), values(g.size(), 0.0) {}
    Density(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != g.size())
            throw std::invalid_argument("Density: size mismatch");
        recompute_mass();
    }

    double mass() const { return mass_; }

    void recompute_mass() {
        long double acc = 0.0L;
        for (double v : values) acc += v;
        mass_ = static_cast<double>(acc) * grid.cell_volume();
    }

    void scale(double a) {
        for (double& v : values) v *= a;
        mass_ *= a;
    }

  private:
    double mass_ = 0.0;
};

inline Density density_from_field(const ComplexField& u, bool normalize = false) {
    Density d(u.grid);
    for (std::size_t i = 0; i < u.values.size(); ++i) d.values[i] = std::norm(u.values[i]);
    d.recompute_mass();
    if (normalize) {
        if (!(d.mass() > 0)) throw std::invalid_argument("density_from_field: zero mass");
        d.scale(1.0 / d.mass());
    }
    return d;
}

// ---------------------------------------------------------------------------
// Binary checkpoint format (little endian):
//   magic "NLSF", version u32, dim u32, n u32, half_width f64, frame u8,
//   time f64, then raw f64 data: interleaved (re, im) for fields, plain
//   f64 for densities. Field vs density is inferred from the payload size.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_header(std::ofstream& out, const Grid& g, Frame frame, double time) {
    out.write("NLSF", 4);
    std::uint32_t version = 1, dim = g.dim, n = g.n;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&g.half_width), 8);
    std::uint8_t f = static_cast<std::uint8_t>(frame);
    out.write(reinterpret_cast<const char*>(&f), 1);
    out.write(reinterpret_cast<const char*>(&time), 8);
}

struct Header {
    Grid grid;
    Frame frame;
    double time;
};

inline Header read_header(std::ifstream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "NLSF", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    std::uint32_t version, dim, n;
    double half_width, time;
    std::uint8_t frame;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&n), 4);
    in.read(reinterpret_cast<char*>(&half_width), 8);
    in.read(reinterpret_cast<char*>(&frame), 1);
    in.read(reinterpret_cast<char*>(&time), 8);
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
    Header h{make_grid(static_cast<int>(dim), static_cast<int>(n), half_width),
             static_cast<Frame>(frame), time};
    return h;
}

} // namespace detail

inline void save_checkpoint(const std::string& path, const ComplexField& u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    detail::write_header(out, u.grid, u.frame, u.time);
    out.write(reinterpret_cast<const char*>(u.values.data()),
              static_cast<std::streamsize>(u.values.size() * sizeof(std::complex<double>)));
}

inline void save_checkpoint(const std::string& path, const Density& d, double time = 0.0) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    detail::write_header(out, d.grid, Frame::Lab, time);
    out.write(reinterpret_cast<const char*>(d.values.data()),
              static_cast<std::streamsize>(d.values.size() * sizeof(double)));
}

using Checkpoint = std::variant<ComplexField, Density>;

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    auto h = detail::read_header(in);
    auto pos = in.tellg();
    in.seekg(0, std::ios::end);
    std::size_t payload = static_cast<std::size_t>(in.tellg() - pos);
    in.seekg(pos);
    std::size_t npts = h.grid.size();
    if (payload == npts * sizeof(std::complex<double>)) {
        ComplexField u(h.grid, h.frame, h.time);
        in.read(reinterpret_cast<char*>(u.values.data()),
                static_cast<std::streamsize>(payload));
        if (!in) throw std::runtime_error("checkpoint: truncated field payload");
        return u;
    }
    if (payload == npts * sizeof(double)) {
        std::vector<double> v(npts);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(payload));
        if (!in) throw std::runtime_error("checkpoint: truncated density payload");
        return Density(h.grid, std::move(v));
    }
    throw std::runtime_error("checkpoint: payload size matches neither field nor density");
}

} // namespace nlslab
