#include "kirchlab/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace kirchlab {

namespace {

void write_component(std::ostream& os, const char* tag, const SpectralField& f) {
    const Lattice& lat = *f.lattice();
    os << "component " << tag << '\n';
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Complex c = f[i];
        if (c == Complex{0.0, 0.0}) continue;
        for (int v : lat.point(i)) os << v << ' ';
        os << std::setprecision(17) << c.real() << ' ' << c.imag() << '\n';
    }
}

void write_header(std::ostream& os, const Lattice& lat, const char* kind) {
    os << "kirchlab-state v1\n";
    os << "d " << lat.dim() << '\n';
    os << "n_max " << lat.n_max() << '\n';
    os << "kind " << kind << '\n';
}

}  // namespace

void write_state(std::ostream& os, const PhysicalState& st) {
    write_header(os, *st.a.lattice(), "physical");
    write_component(os, "a", st.a);
    write_component(os, "b", st.b);
}

void write_state(std::ostream& os, const ConjugatePair& pair) {
    write_header(os, *pair.u.lattice(), "conjugate");
    write_component(os, "u", pair.u);
    write_component(os, "v", pair.v);
}

void write_state_file(const std::string& path, const StateVariant& st) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_state_file: cannot open " + path);
    std::visit([&](const auto& s) { write_state(os, s); }, st);
}

StateVariant read_state(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "kirchlab-state v1")
        throw std::runtime_error("read_state: bad header");
    int d = 0;
    std::int64_t n_max = 0;
    std::string kind;
    std::string key;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("read_state: truncated header");
        std::istringstream ls(line);
        ls >> key;
        if (key == "d")
            ls >> d;
        else if (key == "n_max")
            ls >> n_max;
        else if (key == "kind")
            ls >> kind;
        else
            throw std::runtime_error("read_state: unexpected header line: " + line);
    }
    auto lat = Lattice::build(d, n_max);
    SpectralField first(lat), second(lat);
    SpectralField* current = nullptr;
    std::vector<int> coords(d);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string head;
        if (line.rfind("component", 0) == 0) {
            ls >> head >> head;
            if (head == "a" || head == "u")
                current = &first;
            else if (head == "b" || head == "v")
                current = &second;
            else
                throw std::runtime_error("read_state: unknown component " + head);
            continue;
        }
        if (current == nullptr) throw std::runtime_error("read_state: data before component tag");
        for (int c = 0; c < d; ++c)
            if (!(ls >> coords[c])) throw std::runtime_error("read_state: bad point line: " + line);
        double re = 0.0, im = 0.0;
        if (!(ls >> re >> im)) throw std::runtime_error("read_state: bad value line: " + line);
        const auto idx = lat->find_point(coords);
        if (!idx) throw std::runtime_error("read_state: point outside lattice: " + line);
        (*current)[*idx] = Complex{re, im};
    }
    if (kind == "physical") return PhysicalState{std::move(first), std::move(second)};
    if (kind == "conjugate") return ConjugatePair{std::move(first), std::move(second)};
    throw std::runtime_error("read_state: unknown kind " + kind);
}

StateVariant read_state_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_state_file: cannot open " + path);
    return read_state(is);
}

void write_physical_csv(std::ostream& os, const Lattice& lat, const Trajectory& traj) {
    os << "t,H,norm_m1";
    for (const auto& sh : lat.shells()) os << ",U_" << sh.n;
    os << '\n';
    os << std::setprecision(17);
    for (const auto& row : traj.diagnostics) {
        os << row.t << ',' << row.H << ',' << row.norm_m1;
        for (double u : row.U) os << ',' << u;
        os << '\n';
    }
}

void write_effective_csv(std::ostream& os, const Lattice& lat, const EffectiveTrajectory& traj) {
    os << "t,P";
    for (const auto& sh : lat.shells()) os << ",S_" << sh.n;
    for (const auto& sh : lat.shells()) os << ",absB_" << sh.n;
    for (const auto& sh : lat.shells()) os << ",argB_" << sh.n;
    os << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        os << traj.times[i] << ',' << traj.P[i];
        for (double s : traj.S[i]) os << ',' << s;
        for (const auto& b : traj.B[i]) os << ',' << std::abs(b);
        for (const auto& b : traj.B[i]) os << ',' << std::arg(b);
        os << '\n';
    }
}

void write_triple_csv(std::ostream& os, const Lattice& lat, const EffectiveTrajectory& traj,
                      const TripleSet& triples) {
    os << "t,n_a,n_b,n_l,omega,Omega,theta\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        EffectiveState st{traj.lattice, traj.S[i], traj.B[i], ClosureMode::ZeroP};
        for (const auto& tr : triples.sum_triples) {
            const auto d = triple_diagnostics(st, tr);
            os << traj.times[i] << ',' << lat.shell(tr.sa).n << ',' << lat.shell(tr.sb).n << ','
               << lat.shell(tr.sc).n << ',' << d.omega << ',' << d.Omega << ',' << d.theta
               << '\n';
        }
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_text_file: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_text_file: cannot open " + path);
    os << content;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

}  // namespace kirchlab
