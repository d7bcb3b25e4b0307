#include "iga/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "iga/errors.hpp"

namespace iga {

namespace {

constexpr double kMatchTol = 1e-10;

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

std::string to_string(Side side) {
    switch (side) {
        case Side::west: return "west";
        case Side::east: return "east";
        case Side::south: return "south";
        case Side::north: return "north";
    }
    return "?";
}

std::string to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::dirichlet: return "dirichlet";
        case BoundaryTag::neumann: return "neumann";
        case BoundaryTag::neumann_load: return "neumann_load";
    }
    return "?";
}

Side parse_side(const std::string& name) {
    for (Side s : kAllSides)
        if (to_string(s) == name) return s;
    throw GeometryFileError("unknown side name: " + name);
}

BoundaryTag parse_boundary_tag(const std::string& name) {
    for (BoundaryTag t : {BoundaryTag::dirichlet, BoundaryTag::neumann, BoundaryTag::neumann_load})
        if (to_string(t) == name) return t;
    throw GeometryFileError("unknown boundary tag: " + name);
}

GeometryMap::GeometryMap(TensorSplineSpace basis, std::vector<Eigen::Vector2d> control_points)
    : basis_(std::move(basis)), cps_(std::move(control_points)) {
    if (static_cast<int>(cps_.size()) != basis_.total_dim())
        throw GeometryFileError("control net size does not match the spline space");
}

GeometryMap GeometryMap::bilinear(const std::array<Eigen::Vector2d, 4>& corners) {
    return GeometryMap(make_uniform_space(1, 0),
                       {corners[0], corners[1], corners[2], corners[3]});
}

Eigen::Vector2d GeometryMap::operator()(double xh, double yh) const {
    const KnotVector& kx = basis_.direction(0);
    const KnotVector& ky = basis_.direction(1);
    const auto [fx, vx] = kx.eval_basis(xh, 0);
    const auto [fy, vy] = ky.eval_basis(yh, 0);
    const int nx = basis_.dim(0);
    Eigen::Vector2d out = Eigen::Vector2d::Zero();
    for (std::size_t j = 0; j < vy.size(); ++j)
        for (std::size_t i = 0; i < vx.size(); ++i)
            out += vy[j] * vx[i] * cps_[(fy + j) * nx + (fx + i)];
    return out;
}

Eigen::Matrix2d GeometryMap::jacobian(double xh, double yh) const {
    const KnotVector& kx = basis_.direction(0);
    const KnotVector& ky = basis_.direction(1);
    const int px = kx.degree(), py = ky.degree();
    std::vector<double> vx(px + 1), dx(px + 1), vy(py + 1), dy(py + 1);
    int fx = 0, fy = 0;
    kx.eval_with_derivative(xh, fx, vx, dx);
    ky.eval_with_derivative(yh, fy, vy, dy);
    const int nx = basis_.dim(0);
    Eigen::Matrix2d out = Eigen::Matrix2d::Zero();
    for (int j = 0; j <= py; ++j)
        for (int i = 0; i <= px; ++i) {
            const Eigen::Vector2d& cp = cps_[(fy + j) * nx + (fx + i)];
            out.col(0) += dx[i] * vy[j] * cp;
            out.col(1) += vx[i] * dy[j] * cp;
        }
    return out;
}

Eigen::Vector2d GeometryMap::corner(int c) const {
    const int nx = basis_.dim(0), ny = basis_.dim(1);
    switch (c) {
        case 0: return cps_[0];
        case 1: return cps_[nx - 1];
        case 2: return cps_[(ny - 1) * nx];
        case 3: return cps_[ny * nx - 1];
    }
    throw DomainError("corner index must be in 0..3");
}

std::vector<Eigen::Vector2d> GeometryMap::side_control_polygon(Side side) const {
    const int nx = basis_.dim(0), ny = basis_.dim(1);
    std::vector<Eigen::Vector2d> out;
    switch (side) {
        case Side::west:
            for (int j = 0; j < ny; ++j) out.push_back(cps_[j * nx]);
            break;
        case Side::east:
            for (int j = 0; j < ny; ++j) out.push_back(cps_[j * nx + nx - 1]);
            break;
        case Side::south:
            for (int i = 0; i < nx; ++i) out.push_back(cps_[i]);
            break;
        case Side::north:
            for (int i = 0; i < nx; ++i) out.push_back(cps_[(ny - 1) * nx + i]);
            break;
    }
    return out;
}

double GeometryMap::diameter() const {
    double d = 0.0;
    for (std::size_t a = 0; a < cps_.size(); ++a)
        for (std::size_t b = a + 1; b < cps_.size(); ++b)
            d = std::max(d, (cps_[a] - cps_[b]).norm());
    return d;
}

Eigen::Matrix2d jacobian(const GeometryMap& map, const Eigen::Vector2d& xhat) {
    return map.jacobian(xhat(0), xhat(1));
}

std::optional<int> MultiPatchDomain::interface_at(int k, Side side) const {
    const int idx = interface_of_side_[k][static_cast<int>(side)];
    if (idx < 0) return std::nullopt;
    return idx;
}

std::optional<BoundaryTag> MultiPatchDomain::boundary_tag(int k, Side side) const {
    if (interface_at(k, side)) return std::nullopt;
    return tags_[k][static_cast<int>(side)];
}

std::vector<int> MultiPatchDomain::edge_neighbors(int k) const {
    std::vector<int> out;
    for (const Interface& it : interfaces_) {
        if (it.patch_a == k) out.push_back(it.patch_b);
        if (it.patch_b == k) out.push_back(it.patch_a);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool MultiPatchDomain::has_dirichlet() const {
    for (int k = 0; k < patch_count(); ++k)
        for (Side s : kAllSides)
            if (boundary_tag(k, s) == BoundaryTag::dirichlet) return true;
    return false;
}

int MultiPatchDomain::max_corner_valence() const {
    int c1 = 0;
    for (const CornerJunction& c : corners_)
        c1 = std::max(c1, static_cast<int>(c.members.size()));
    return c1;
}

namespace {

bool polygons_match(const std::vector<Eigen::Vector2d>& a,
                    const std::vector<Eigen::Vector2d>& b, bool& reversed) {
    if (a.size() != b.size()) return false;
    const auto eq = [](const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
        return (p - q).norm() <= kMatchTol;
    };
    bool forward = true, backward = true;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n && (forward || backward); ++i) {
        if (!eq(a[i], b[i])) forward = false;
        if (!eq(a[i], b[n - 1 - i])) backward = false;
    }
    if (forward) {
        reversed = false;
        return true;
    }
    if (backward) {
        reversed = true;
        return true;
    }
    return false;
}

int trace_direction(Side side) {
    return (side == Side::west || side == Side::east) ? 1 : 0;
}

Eigen::Vector2d side_point(const GeometryMap& map, Side side, double t) {
    switch (side) {
        case Side::west: return map(0.0, t);
        case Side::east: return map(1.0, t);
        case Side::south: return map(t, 0.0);
        case Side::north: return map(t, 1.0);
    }
    return {};
}

constexpr int kEdgeSamples = 65;

std::vector<Eigen::Vector2d> sample_edge(const GeometryMap& map, Side side) {
    std::vector<Eigen::Vector2d> out(kEdgeSamples);
    for (int i = 0; i < kEdgeSamples; ++i)
        out[i] = side_point(map, side, static_cast<double>(i) / (kEdgeSamples - 1));
    return out;
}

// Distance from point c to the edge, minimized over the trace parameter;
// uses the precomputed samples as the starting bracket.
double distance_to_edge(const GeometryMap& map, Side side,
                        const std::vector<Eigen::Vector2d>& samples, const Eigen::Vector2d& c) {
    double best_t = 0.0, best = std::numeric_limits<double>::max();
    for (int i = 0; i < kEdgeSamples; ++i) {
        const double d = (samples[i] - c).norm();
        if (d < best) {
            best = d;
            best_t = static_cast<double>(i) / (kEdgeSamples - 1);
        }
    }
    if (best > 1e-3 * (1.0 + map.diameter())) return best; // nowhere near the edge
    double lo = std::max(0.0, best_t - 1.0 / (kEdgeSamples - 1));
    double hi = std::min(1.0, best_t + 1.0 / (kEdgeSamples - 1));
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        const double d1 = (side_point(map, side, m1) - c).squaredNorm();
        const double d2 = (side_point(map, side, m2) - c).squaredNorm();
        (d1 < d2 ? hi : lo) = (d1 < d2 ? m2 : m1);
    }
    const double t = 0.5 * (lo + hi);
    return (side_point(map, side, t) - c).norm();
}

void check_matching_traces(const std::vector<TensorSplineSpace>& spaces, const Interface& it) {
    const KnotVector& ka = spaces[it.patch_a].direction(trace_direction(it.side_a));
    const KnotVector& kb = spaces[it.patch_b].direction(trace_direction(it.side_b));
    const auto fail = [&](const std::string& what) {
        throw MatchingError("interface between patches " + std::to_string(it.patch_a) + " and " +
                            std::to_string(it.patch_b) + ": " + what);
    };
    if (ka.degree() != kb.degree()) fail("trace degrees differ");
    if (ka.size() != kb.size()) fail("trace dimensions differ");
    const auto& ua = ka.knots();
    const auto& ub = kb.knots();
    for (std::size_t i = 0; i < ua.size(); ++i) {
        const double other = it.reversed ? 1.0 - ub[ub.size() - 1 - i] : ub[i];
        if (std::abs(ua[i] - other) > 1e-12) fail("trace knots differ");
    }
}

} // namespace

MultiPatchDomain build_topology(std::vector<GeometryMap> maps,
                                std::vector<std::array<BoundaryTag, 4>> tags,
                                std::vector<TensorSplineSpace> spaces) {
    const int n = static_cast<int>(maps.size());
    if (n == 0) throw AdmissibilityError("domain needs at least one patch");
    if (static_cast<int>(tags.size()) != n || static_cast<int>(spaces.size()) != n)
        throw AdmissibilityError("patch, tag and space counts disagree");

    MultiPatchDomain domain;
    domain.maps_ = std::move(maps);
    domain.spaces_ = std::move(spaces);
    domain.tags_ = std::move(tags);
    domain.interface_of_side_.assign(n, {-1, -1, -1, -1});

    // side control polygons, matched point-by-point
    std::vector<std::array<std::vector<Eigen::Vector2d>, 4>> polys(n);
    for (int k = 0; k < n; ++k)
        for (Side s : kAllSides)
            polys[k][static_cast<int>(s)] = domain.maps_[k].side_control_polygon(s);

    for (int a = 0; a < n; ++a) {
        for (Side sa : kAllSides) {
            if (domain.interface_of_side_[a][static_cast<int>(sa)] >= 0) continue;
            for (int b = a + 1; b < n; ++b) {
                for (Side sb : kAllSides) {
                    if (domain.interface_of_side_[b][static_cast<int>(sb)] >= 0) continue;
                    bool reversed = false;
                    if (!polygons_match(polys[a][static_cast<int>(sa)],
                                        polys[b][static_cast<int>(sb)], reversed))
                        continue;
                    if (domain.interface_of_side_[a][static_cast<int>(sa)] >= 0)
                        throw AdmissibilityError("patch side matched twice (overlapping patches?)");
                    Interface it{a, b, sa, sb, reversed};
                    check_matching_traces(domain.spaces_, it);
                    domain.interface_of_side_[a][static_cast<int>(sa)] =
                        static_cast<int>(domain.interfaces_.size());
                    domain.interface_of_side_[b][static_cast<int>(sb)] =
                        static_cast<int>(domain.interfaces_.size());
                    domain.interfaces_.push_back(it);
                }
            }
        }
    }

    // T-junction scan: a patch corner in the open interior of another edge
    std::vector<std::array<std::vector<Eigen::Vector2d>, 4>> samples(n);
    for (int k = 0; k < n; ++k)
        for (Side s : kAllSides)
            samples[k][static_cast<int>(s)] = sample_edge(domain.maps_[k], s);
    for (int k = 0; k < n; ++k) {
        for (int c = 0; c < 4; ++c) {
            const Eigen::Vector2d corner = domain.maps_[k].corner(c);
            for (int q = 0; q < n; ++q) {
                if (q == k) continue;
                for (Side s : kAllSides) {
                    const auto& poly = polys[q][static_cast<int>(s)];
                    if ((corner - poly.front()).norm() <= kMatchTol ||
                        (corner - poly.back()).norm() <= kMatchTol)
                        continue;
                    if (distance_to_edge(domain.maps_[q], s, samples[q][static_cast<int>(s)],
                                         corner) <= 1e-8)
                        throw AdmissibilityError(
                            "T-junction: corner of patch " + std::to_string(k) +
                            " lies inside the " + to_string(s) + " edge of patch " +
                            std::to_string(q));
                }
            }
        }
    }

    // shared corners, Dirichlet ones excluded
    struct Candidate {
        Eigen::Vector2d point;
        int patch, corner;
    };
    std::vector<Candidate> cands;
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < 4; ++c) cands.push_back({domain.maps_[k].corner(c), k, c});
    UnionFind uf(static_cast<int>(cands.size()));
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = i + 1; j < cands.size(); ++j)
            if ((cands[i].point - cands[j].point).norm() <= kMatchTol)
                uf.unite(static_cast<int>(i), static_cast<int>(j));

    const auto corner_sides = [](int c) -> std::array<Side, 2> {
        switch (c) {
            case 0: return {Side::west, Side::south};
            case 1: return {Side::east, Side::south};
            case 2: return {Side::west, Side::north};
            default: return {Side::east, Side::north};
        }
    };

    std::vector<int> root_to_corner(cands.size(), -1);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const int root = uf.find(static_cast<int>(i));
        if (root != static_cast<int>(i)) continue;
        std::vector<std::pair<int, int>> members;
        std::vector<int> patches;
        bool on_dirichlet = false;
        for (std::size_t j = 0; j < cands.size(); ++j) {
            if (uf.find(static_cast<int>(j)) != root) continue;
            members.emplace_back(cands[j].patch, cands[j].corner);
            patches.push_back(cands[j].patch);
            for (Side s : corner_sides(cands[j].corner))
                if (domain.boundary_tag(cands[j].patch, s) == BoundaryTag::dirichlet)
                    on_dirichlet = true;
        }
        std::sort(patches.begin(), patches.end());
        patches.erase(std::unique(patches.begin(), patches.end()), patches.end());
        if (patches.size() >= 2 && !on_dirichlet) {
            std::sort(members.begin(), members.end());
            domain.corners_.push_back({cands[i].point, std::move(members)});
        }
    }

    return domain;
}

MultiPatchDomain make_strip_grid(int kx, int ky, double length, int degree, int levels) {
    if (kx < 1 || ky < 1) throw AdmissibilityError("strip grid needs at least one patch per direction");
    if (length <= 0.0) throw AdmissibilityError("strip length must be positive");
    const double w = length / kx, h = 1.0 / ky;
    std::vector<GeometryMap> maps;
    std::vector<std::array<BoundaryTag, 4>> tags;
    std::vector<TensorSplineSpace> spaces;
    for (int j = 0; j < ky; ++j) {
        for (int i = 0; i < kx; ++i) {
            const double x0 = i * w, y0 = j * h;
            maps.push_back(GeometryMap::bilinear({Eigen::Vector2d(x0, y0),
                                                  Eigen::Vector2d(x0 + w, y0),
                                                  Eigen::Vector2d(x0, y0 + h),
                                                  Eigen::Vector2d(x0 + w, y0 + h)}));
            std::array<BoundaryTag, 4> t{BoundaryTag::neumann, BoundaryTag::neumann,
                                         BoundaryTag::neumann, BoundaryTag::neumann};
            if (i == 0) t[static_cast<int>(Side::west)] = BoundaryTag::dirichlet;
            if (i == kx - 1) t[static_cast<int>(Side::east)] = BoundaryTag::neumann_load;
            tags.push_back(t);
            spaces.push_back(make_uniform_space(degree, levels));
        }
    }
    return build_topology(std::move(maps), std::move(tags), std::move(spaces));
}

MultiPatchDomain make_cantilever(int patches, int degree, int levels) {
    if (patches < 1) throw AdmissibilityError("cantilever needs at least one patch");
    return make_strip_grid(patches, 1, static_cast<double>(patches), degree, levels);
}

MultiPatchDomain with_spaces(const MultiPatchDomain& domain, int degree, int levels) {
    std::vector<GeometryMap> maps;
    std::vector<std::array<BoundaryTag, 4>> tags;
    std::vector<TensorSplineSpace> spaces;
    for (int k = 0; k < domain.patch_count(); ++k) {
        maps.push_back(domain.map(k));
        std::array<BoundaryTag, 4> t{};
        for (Side s : kAllSides) {
            const auto tag = domain.boundary_tag(k, s);
            t[static_cast<int>(s)] = tag.value_or(BoundaryTag::neumann);
        }
        tags.push_back(t);
        spaces.push_back(make_uniform_space(degree, levels));
    }
    return build_topology(std::move(maps), std::move(tags), std::move(spaces));
}

GeometryReport geometry_report(const MultiPatchDomain& domain, int resolution) {
    GeometryReport report;
    report.sample_resolution = resolution;
    report.c1 = domain.max_corner_valence();
    for (int k = 0; k < domain.patch_count(); ++k) {
        PatchGeometryStats s;
        s.diameter = domain.map(k).diameter();
        for (int i = 0; i < resolution; ++i) {
            for (int j = 0; j < resolution; ++j) {
                const double x = static_cast<double>(i) / (resolution - 1);
                const double y = static_cast<double>(j) / (resolution - 1);
                const Eigen::Matrix2d J = domain.map(k).jacobian(x, y);
                const Eigen::JacobiSVD<Eigen::Matrix2d> svd(J);
                s.sup_grad = std::max(s.sup_grad, svd.singularValues()(0));
                if (svd.singularValues()(1) > 0.0)
                    s.sup_grad_inv = std::max(s.sup_grad_inv, 1.0 / svd.singularValues()(1));
            }
        }
        s.c2 = std::max(s.sup_grad / s.diameter, s.sup_grad_inv * s.diameter);
        s.h_hat = domain.space(k).max_span();
        s.h = s.diameter * s.h_hat;
        s.quasi_uniformity = domain.space(k).quasi_uniformity();
        report.c2 = std::max(report.c2, s.c2);
        report.c3 = std::max(report.c3, s.quasi_uniformity);
        report.patches.push_back(s);
    }
    return report;
}

namespace {

void write_knots(std::ostream& out, const char* name, const KnotVector& kv) {
    out << name << ' ' << kv.knots().size();
    out.precision(17);
    for (double v : kv.knots()) out << ' ' << v;
    out << '\n';
}

} // namespace

void write_geometry(std::ostream& out, const MultiPatchDomain& domain) {
    out << "mpgeo 1\n";
    out << "patches " << domain.patch_count() << '\n';
    out.precision(17);
    for (int k = 0; k < domain.patch_count(); ++k) {
        const GeometryMap& map = domain.map(k);
        out << "patch " << k << '\n';
        out << "degree " << map.basis().direction(0).degree() << ' '
            << map.basis().direction(1).degree() << '\n';
        write_knots(out, "knots_u", map.basis().direction(0));
        write_knots(out, "knots_v", map.basis().direction(1));
        out << "cps " << map.control_points().size() << '\n';
        for (const Eigen::Vector2d& p : map.control_points())
            out << p(0) << ' ' << p(1) << '\n';
        for (Side s : kAllSides) {
            const auto tag = domain.boundary_tag(k, s);
            out << "side " << to_string(s) << ' '
                << to_string(tag.value_or(BoundaryTag::neumann)) << '\n';
        }
    }
}

GeometryFile read_geometry(std::istream& in) {
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "mpgeo")
        throw GeometryFileError("not a multi-patch geometry file");
    if (version != 1)
        throw GeometryFileError("unsupported geometry file version " + std::to_string(version));

    int patch_count = 0;
    if (!(in >> word >> patch_count) || word != "patches" || patch_count < 1)
        throw GeometryFileError("missing patch count");

    GeometryFile file;
    const auto read_knots = [&](const char* name, int degree) {
        std::string key;
        int count = 0;
        if (!(in >> key >> count) || key != name)
            throw GeometryFileError(std::string("expected ") + name);
        std::vector<double> knots(count);
        for (double& v : knots)
            if (!(in >> v)) throw GeometryFileError("truncated knot vector");
        return KnotVector(degree, std::move(knots));
    };

    for (int k = 0; k < patch_count; ++k) {
        int idx = -1;
        if (!(in >> word >> idx) || word != "patch" || idx != k)
            throw GeometryFileError("expected patch " + std::to_string(k));
        int px = 0, py = 0;
        if (!(in >> word >> px >> py) || word != "degree")
            throw GeometryFileError("expected degree line");
        KnotVector ku = read_knots("knots_u", px);
        KnotVector kv = read_knots("knots_v", py);
        int cps = 0;
        if (!(in >> word >> cps) || word != "cps")
            throw GeometryFileError("expected cps line");
        std::vector<Eigen::Vector2d> points(cps);
        for (auto& p : points)
            if (!(in >> p(0) >> p(1))) throw GeometryFileError("truncated control net");
        std::array<BoundaryTag, 4> tags{};
        std::array<bool, 4> seen{};
        for (int s = 0; s < 4; ++s) {
            std::string side_name, tag_name;
            if (!(in >> word >> side_name >> tag_name) || word != "side")
                throw GeometryFileError("expected four side lines per patch");
            const Side side = parse_side(side_name);
            tags[static_cast<int>(side)] = parse_boundary_tag(tag_name);
            seen[static_cast<int>(side)] = true;
        }
        for (bool s : seen)
            if (!s) throw GeometryFileError("duplicate side line in patch " + std::to_string(k));
        file.maps.emplace_back(TensorSplineSpace(std::move(ku), std::move(kv)), std::move(points));
        file.tags.push_back(tags);
    }
    return file;
}

MultiPatchDomain load_domain(const std::string& path, int degree, int levels) {
    std::ifstream in(path);
    if (!in) throw GeometryFileError("cannot open geometry file: " + path);
    GeometryFile file = read_geometry(in);
    std::vector<TensorSplineSpace> spaces(file.maps.size(), make_uniform_space(degree, levels));
    return build_topology(std::move(file.maps), std::move(file.tags), std::move(spaces));
}

} // namespace iga
