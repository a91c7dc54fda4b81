#include <cstdio>
#include <fstream>
#include <sstream>

#include "myo/errors.hpp"
#include "myo/mesh.hpp"

namespace myo {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string vec(const Vec3& a) { return fmt(a[0]) + " " + fmt(a[1]) + " " + fmt(a[2]); }

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next non-blank, non-comment line split into tokens; false at EOF.
  bool next(std::vector<std::string>& tok) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
      std::istringstream ls(line);
      tok.clear();
      for (std::string t; ls >> t;) tok.push_back(t);
      if (!tok.empty()) return true;
    }
    return false;
  }

  void expect(std::vector<std::string>& tok, const std::string& what) {
    if (!next(tok)) fail("unexpected end of file, expected " + what);
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_no_); }

  double number(const std::string& t) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used == t.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad number '" + t + "'");
  }

  long integer(const std::string& t) const {
    try {
      std::size_t used = 0;
      const long v = std::stol(t, &used);
      if (used == t.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad integer '" + t + "'");
  }

  std::size_t line() const { return line_no_; }

 private:
  std::istringstream in_;
  std::size_t line_no_ = 0;
};

}  // namespace

std::string write_mesh(const Mesh& m) {
  std::ostringstream out;
  out << "MYOMESH 1\n";
  out << "KIND " << (m.kind == BasisKind::Q1 ? "Q1" : "Q2") << "\n";
  out << "NODES " << m.nodes.size() << "\n";
  for (std::size_t i = 0; i < m.nodes.size(); ++i) out << i << " " << vec(m.nodes[i]) << "\n";
  out << "CELLS " << m.cells.size() << "\n";
  for (std::size_t c = 0; c < m.cells.size(); ++c) {
    out << c << " " << m.region_of(static_cast<int>(c));
    for (int n : m.cells[c]) out << " " << n;
    out << "\n";
  }
  out << "FACESETS " << m.face_sets.size() << "\n";
  for (const auto& [name, faces] : m.face_sets) {
    out << name << " " << faces.size();
    for (const auto& f : faces) out << " " << f.cell << ":" << f.face;
    out << "\n";
  }
  if (!m.node_sets.empty()) {
    out << "NODESETS " << m.node_sets.size() << "\n";
    for (const auto& [name, ns] : m.node_sets) {
      out << name << " " << ns.size();
      for (int n : ns) out << " " << n;
      out << "\n";
    }
  }
  const auto& fib = m.fibres;
  if (!fib.per_region.empty()) {
    out << "FIBRES region " << fib.per_region.size() << "\n";
    for (const auto& [name, a] : fib.per_region) out << name << " " << vec(a) << "\n";
  }
  if (!fib.per_cell.empty()) {
    out << "FIBRES cell " << fib.per_cell.size() << "\n";
    for (std::size_t c = 0; c < fib.per_cell.size(); ++c)
      out << c << " " << vec(fib.per_cell[c]) << "\n";
  }
  if (!fib.per_point.empty()) {
    std::size_t count = 0;
    for (const auto& c : fib.per_point) count += c.size();
    out << "FIBRES point " << fib.point_order << " " << count << "\n";
    for (std::size_t c = 0; c < fib.per_point.size(); ++c)
      for (std::size_t g = 0; g < fib.per_point[c].size(); ++g)
        out << c << " " << g << " " << vec(fib.per_point[c][g]) << "\n";
  }
  out << "END\n";
  return out.str();
}

Mesh read_mesh(const std::string& text, const MeshReadOptions& opt) {
  LineReader r(text);
  std::vector<std::string> t;
  r.expect(t, "header");
  if (t.size() != 2 || t[0] != "MYOMESH" || t[1] != "1") r.fail("expected header 'MYOMESH 1'");

  Mesh m;
  bool kind_given = false;
  auto count = [&](std::size_t at) -> std::size_t {
    if (t.size() <= at) r.fail("missing record count");
    const long n = r.integer(t[at]);
    if (n < 0) r.fail("negative record count");
    return static_cast<std::size_t>(n);
  };
  auto read_vec = [&](std::size_t at) {
    if (t.size() != at + 3) r.fail("expected three components");
    Vec3 a(r.number(t[at]), r.number(t[at + 1]), r.number(t[at + 2]));
    const double norm = a.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
      if (!opt.auto_normalize || norm == 0.0)
        throw ValidationError("line " + std::to_string(r.line()) +
                              ": fibre vector has norm " + std::to_string(norm));
      a /= norm;
    }
    return a;
  };

  while (r.next(t)) {
    const std::string& sec = t[0];
    if (sec == "END") break;
    if (sec == "KIND") {
      if (t.size() != 2 || (t[1] != "Q1" && t[1] != "Q2")) r.fail("KIND must be Q1 or Q2");
      m.kind = t[1] == "Q1" ? BasisKind::Q1 : BasisKind::Q2;
      kind_given = true;
    } else if (sec == "NODES") {
      const std::size_t n = count(1);
      m.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        r.expect(t, "node record");
        if (t.size() != 4) r.fail("node record needs index x y z");
        if (r.integer(t[0]) != static_cast<long>(i)) r.fail("node index out of order");
        m.nodes[i] = Vec3(r.number(t[1]), r.number(t[2]), r.number(t[3]));
      }
    } else if (sec == "CELLS") {
      const std::size_t n = count(1);
      for (std::size_t i = 0; i < n; ++i) {
        r.expect(t, "cell record");
        if (t.size() != 2 + 8 && t.size() != 2 + 27) r.fail("cell record needs 8 or 27 nodes");
        if (r.integer(t[0]) != static_cast<long>(i)) r.fail("cell index out of order");
        const BasisKind k = t.size() == 10 ? BasisKind::Q1 : BasisKind::Q2;
        if (i == 0 && !kind_given) m.kind = k;
        if (k != m.kind) r.fail("cell node count does not match mesh kind");
        std::vector<int> c;
        for (std::size_t a = 2; a < t.size(); ++a) c.push_back(static_cast<int>(r.integer(t[a])));
        m.cells.push_back(std::move(c));
        m.region.push_back(m.region_index(t[1]));
      }
    } else if (sec == "FACESETS") {
      const std::size_t n = count(1);
      for (std::size_t i = 0; i < n; ++i) {
        r.expect(t, "face set record");
        if (t.size() < 2) r.fail("face set needs name and count");
        const std::size_t k = count(1);
        if (t.size() != 2 + k) r.fail("face set entry count mismatch");
        auto& dst = m.face_sets[t[0]];
        for (std::size_t a = 2; a < t.size(); ++a) {
          const auto colon = t[a].find(':');
          if (colon == std::string::npos) r.fail("face entry must be cell:face");
          dst.push_back({static_cast<int>(r.integer(t[a].substr(0, colon))),
                         static_cast<int>(r.integer(t[a].substr(colon + 1)))});
        }
      }
    } else if (sec == "NODESETS") {
      const std::size_t n = count(1);
      for (std::size_t i = 0; i < n; ++i) {
        r.expect(t, "node set record");
        if (t.size() < 2) r.fail("node set needs name and count");
        const std::size_t k = count(1);
        if (t.size() != 2 + k) r.fail("node set entry count mismatch");
        auto& dst = m.node_sets[t[0]];
        for (std::size_t a = 2; a < t.size(); ++a) dst.push_back(static_cast<int>(r.integer(t[a])));
      }
    } else if (sec == "FIBRES") {
      if (t.size() < 3) r.fail("FIBRES needs a mode and count");
      if (t[1] == "region") {
        const std::size_t n = count(2);
        for (std::size_t i = 0; i < n; ++i) {
          r.expect(t, "fibre record");
          m.fibres.per_region[t[0]] = read_vec(1);
        }
      } else if (t[1] == "cell") {
        const std::size_t n = count(2);
        m.fibres.per_cell.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          r.expect(t, "fibre record");
          const long c = r.integer(t[0]);
          if (c < 0 || c >= static_cast<long>(n)) r.fail("fibre cell index out of range");
          m.fibres.per_cell[c] = read_vec(1);
        }
      } else if (t[1] == "point") {
        if (t.size() != 4) r.fail("FIBRES point needs order and count");
        m.fibres.point_order = static_cast<int>(r.integer(t[2]));
        const std::size_t n = count(3);
        const std::size_t nq = static_cast<std::size_t>(m.fibres.point_order) *
                               m.fibres.point_order * m.fibres.point_order;
        m.fibres.per_point.assign(m.cells.size(), {});
        for (std::size_t i = 0; i < n; ++i) {
          r.expect(t, "fibre record");
          if (t.size() != 5) r.fail("point fibre record needs cell qp ax ay az");
          const long c = r.integer(t[0]), g = r.integer(t[1]);
          if (c < 0 || c >= static_cast<long>(m.cells.size()) || g < 0 ||
              g >= static_cast<long>(nq))
            r.fail("point fibre index out of range");
          auto& cell = m.fibres.per_point[c];
          if (cell.size() < nq) cell.resize(nq, Vec3::Zero());
          cell[g] = read_vec(2);
        }
      } else {
        r.fail("unknown FIBRES mode '" + t[1] + "'");
      }
    } else {
      r.fail("unknown section '" + sec + "'");
    }
  }
  m.validate(opt.validate_order);
  return m;
}

Mesh import_mesh(const std::string& path, const MeshReadOptions& opt) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return read_mesh(buf.str(), opt);
}

void export_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  out << write_mesh(mesh);
}

}  // namespace myo
