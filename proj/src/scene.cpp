#include "remkit/scene.hpp"

#include "remkit/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace remkit {

namespace {

using Key = std::array<double, 3>;

Key key_of(const GeoPoint& p) { return {p.lat, p.lon, p.alt}; }

struct UniquePoints {
    std::vector<GeoPoint> points;
    std::vector<std::size_t> index_of; ///< input position -> unique index
};

UniquePoints dedupe(std::span<const GeoPoint> points) {
    UniquePoints out;
    std::map<Key, std::size_t> seen;
    out.index_of.reserve(points.size());
    for (const auto& p : points) {
        auto [it, inserted] = seen.try_emplace(key_of(p), out.points.size());
        if (inserted)
            out.points.push_back(p);
        out.index_of.push_back(it->second);
    }
    return out;
}

Eigen::MatrixXd covariance_matrix(std::span<const GeoPoint> pts, const CorrelationModel& corr) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd c(n, n);
    const double s2 = corr.sigma_z * corr.sigma_z;
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i, i) = s2;
        for (Eigen::Index j = 0; j < i; ++j)
            c(i, j) = c(j, i) = covariance(corr, pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
    }
    return c;
}

constexpr double kDiagonalLift = 1e-10;

struct FieldFactor {
    Eigen::MatrixXd l;
    bool triangular = true;
};

// L with L L^T = C + lift I: Cholesky, or the eigen square root if that fails.
FieldFactor field_factor(Eigen::MatrixXd c) {
    c.diagonal().array() += kDiagonalLift;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success)
        return {llt.matrixL(), true};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return {eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose(), false};
}

std::seed_seq make_seed(std::uint64_t seed, std::uint32_t stream) {
    return std::seed_seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream};
}

constexpr std::uint32_t kFieldStream = 1;
constexpr std::uint32_t kNoiseStream = 2;

struct FieldDraw {
    UniquePoints unique;
    Eigen::VectorXd values; ///< per unique point
    Eigen::VectorXd alpha;  ///< (C + lift I)^{-1} values
};

FieldDraw draw_field(std::span<const GeoPoint> points, const CorrelationModel& corr, std::uint64_t seed,
                     bool need_alpha) {
    corr.validate();
    FieldDraw d;
    d.unique = dedupe(points);
    const auto n = static_cast<Eigen::Index>(d.unique.points.size());
    if (d.unique.points.size() > kMaxFieldPoints)
        throw TooManyPoints("field sampling supports at most " + std::to_string(kMaxFieldPoints) +
                            " distinct points, got " + std::to_string(n));
    d.values = Eigen::VectorXd::Zero(n);
    d.alpha = Eigen::VectorXd::Zero(n);
    if (corr.sigma_z == 0.0 || n == 0)
        return d;

    const FieldFactor f = field_factor(covariance_matrix(d.unique.points, corr));
    auto seq = make_seed(seed, kFieldStream);
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        w[i] = normal(rng);
    d.values = f.l * w;
    if (need_alpha) {
        // (L L^T)^{-1} L w = L^{-T} w
        if (f.triangular)
            d.alpha = f.l.transpose().triangularView<Eigen::Upper>().solve(w);
        else
            d.alpha = (f.l * f.l).ldlt().solve(d.values);
    }
    return d;
}

// Equal-step resampling of a local polyline (east, north, alt); each segment
// keeps both end points.
std::vector<GeoPoint> resample(const LocalFrame& frame, const std::vector<std::array<double, 3>>& vertices,
                               double spacing) {
    std::vector<GeoPoint> out;
    if (vertices.empty())
        return out;
    out.push_back(frame.to_geo({vertices[0][0], vertices[0][1]}, vertices[0][2]));
    for (std::size_t k = 1; k < vertices.size(); ++k) {
        const auto& a = vertices[k - 1];
        const auto& b = vertices[k];
        const double len = std::hypot(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
        if (len == 0.0)
            continue;
        const int steps = std::max(1, static_cast<int>(std::lround(len / spacing)));
        for (int s = 1; s <= steps; ++s) {
            const double t = static_cast<double>(s) / steps;
            out.push_back(frame.to_geo({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}, a[2] + t * (b[2] - a[2])));
        }
    }
    return out;
}

void check_spacing(double spacing) {
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw ValidationError("sample spacing must be positive");
}

double snap(double length, double spacing) { return std::max(1.0, std::round(length / spacing)) * spacing; }

} // namespace

double BlobSpec::offset_db(const GeoPoint& p) const {
    const double r = horizontal_distance(center, p);
    if (r >= radius_m)
        return 0.0;
    return depth_db * 0.5 * (1.0 + std::cos(std::numbers::pi * r / radius_m));
}

CalibratedDelta make_sector_distortion(double bin_deg, std::span<const SectorDistortion> sectors) {
    CalibratedDelta d = CalibratedDelta::zeros(bin_deg);
    for (const auto& s : sectors) {
        if (!(s.el_min_deg <= s.el_max_deg) || !std::isfinite(s.delta_db))
            throw ValidationError("invalid sector distortion");
        for (std::size_t i = 0; i < d.az_grid.size(); ++i) {
            const double az = d.az_grid[i];
            const bool in_az = s.az_min_deg <= s.az_max_deg ? (az >= s.az_min_deg && az <= s.az_max_deg)
                                                            : (az >= s.az_min_deg || az <= s.az_max_deg);
            if (!in_az)
                continue;
            for (std::size_t j = 0; j < d.el_grid.size(); ++j)
                if (d.el_grid[j] >= s.el_min_deg && d.el_grid[j] <= s.el_max_deg)
                    d.delta_db(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.delta_db;
        }
    }
    return d;
}

void SceneSpec::validate() const {
    remkit::validate(gs);
    cfg.validate();
    corr.validate();
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
        throw ValidationError("noise_sd must be finite and non-negative");
    for (const auto& b : blobs) {
        remkit::validate(b.center);
        if (!(b.radius_m > 0.0) || !std::isfinite(b.depth_db))
            throw ValidationError("blob radius must be positive and depth finite");
    }
}

Trajectory Trajectory::lawnmower(const GeoPoint& center, double width_m, double height_m, double lane_spacing_m,
                                 double altitude_m, double sample_spacing_m) {
    check_spacing(sample_spacing_m);
    if (!(width_m > 0.0 && height_m >= 0.0 && lane_spacing_m > 0.0))
        throw ValidationError("invalid lawnmower dimensions");
    const double w = snap(width_m, sample_spacing_m);
    const double lane = snap(lane_spacing_m, sample_spacing_m);
    const int lanes = static_cast<int>(std::floor(height_m / lane + 1e-9)) + 1;
    const double y0 = -0.5 * (lanes - 1) * lane;
    std::vector<std::array<double, 3>> v;
    for (int k = 0; k < lanes; ++k) {
        const double y = y0 + k * lane;
        const double xa = (k % 2 == 0) ? -0.5 * w : 0.5 * w;
        v.push_back({xa, y, altitude_m});
        v.push_back({-xa, y, altitude_m});
    }
    return {resample(LocalFrame(center), v, sample_spacing_m), TrajectoryKind::lawnmower, sample_spacing_m};
}

Trajectory Trajectory::zigzag(const GeoPoint& center, double width_m, double height_m, int legs, double altitude_m,
                              double sample_spacing_m) {
    check_spacing(sample_spacing_m);
    if (!(width_m > 0.0 && height_m >= 0.0) || legs < 1)
        throw ValidationError("invalid zigzag dimensions");
    std::vector<std::array<double, 3>> v;
    for (int k = 0; k <= legs; ++k)
        v.push_back({(k % 2 == 0) ? -0.5 * width_m : 0.5 * width_m, -0.5 * height_m + height_m * k / legs, altitude_m});
    return {resample(LocalFrame(center), v, sample_spacing_m), TrajectoryKind::zigzag, sample_spacing_m};
}

Trajectory Trajectory::ring(const GeoPoint& center, double radius_m, double altitude_m, double sample_spacing_m) {
    check_spacing(sample_spacing_m);
    if (!(radius_m > 0.0))
        throw ValidationError("ring radius must be positive");
    const int n = std::max(3, static_cast<int>(std::lround(2.0 * std::numbers::pi * radius_m / sample_spacing_m)));
    const LocalFrame frame(center);
    Trajectory t{{}, TrajectoryKind::ring, sample_spacing_m};
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        t.waypoints.push_back(frame.to_geo({radius_m * std::sin(a), radius_m * std::cos(a)}, altitude_m));
    }
    return t;
}

Trajectory Trajectory::custom(std::span<const GeoPoint> vertices, double sample_spacing_m) {
    check_spacing(sample_spacing_m);
    if (vertices.empty())
        throw ValidationError("custom trajectory needs at least one vertex");
    const LocalFrame frame(vertices.front());
    std::vector<std::array<double, 3>> v;
    for (const auto& p : vertices) {
        remkit::validate(p);
        const LocalXY xy = frame.to_local(p);
        v.push_back({xy.east, xy.north, p.alt});
    }
    return {resample(frame, v, sample_spacing_m), TrajectoryKind::custom, sample_spacing_m};
}

Trajectory Trajectory::concat(std::span<const Trajectory> parts) {
    Trajectory out;
    if (parts.empty())
        return out;
    out.kind = parts.front().kind;
    out.sample_spacing_m = parts.front().sample_spacing_m;
    for (const auto& p : parts) {
        if (p.kind != out.kind)
            out.kind = TrajectoryKind::custom;
        out.waypoints.insert(out.waypoints.end(), p.waypoints.begin(), p.waypoints.end());
    }
    return out;
}

Trajectory Trajectory::at_altitude(double altitude_m) const {
    Trajectory t = *this;
    for (auto& p : t.waypoints)
        p.alt = altitude_m;
    return t;
}

std::string to_string(TrajectoryKind kind) {
    switch (kind) {
    case TrajectoryKind::zigzag:
        return "zigzag";
    case TrajectoryKind::lawnmower:
        return "lawnmower";
    case TrajectoryKind::ring:
        return "ring";
    case TrajectoryKind::custom:
        return "custom";
    }
    return "custom";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
    for (auto k : {TrajectoryKind::zigzag, TrajectoryKind::lawnmower, TrajectoryKind::ring, TrajectoryKind::custom})
        if (to_string(k) == name)
            return k;
    throw ValidationError("unknown trajectory kind '" + name + "'");
}

std::vector<double> sample_correlated_field(std::span<const GeoPoint> points, const CorrelationModel& corr,
                                            std::uint64_t seed) {
    const FieldDraw d = draw_field(points, corr, seed, false);
    std::vector<double> out;
    out.reserve(points.size());
    for (std::size_t idx : d.unique.index_of)
        out.push_back(d.values[static_cast<Eigen::Index>(idx)]);
    return out;
}

TruthField::TruthField(SceneSpec spec, std::vector<GeoPoint> unique_locations, std::vector<double> sf,
                       Eigen::VectorXd alpha)
    : spec_(std::move(spec)), locations_(std::move(unique_locations)), sf_(std::move(sf)), alpha_(std::move(alpha)) {}

TruthField::TruthField(SceneSpec spec, std::vector<GeoPoint> locations, std::vector<double> sf)
    : spec_(std::move(spec)) {
    if (locations.size() != sf.size())
        throw ValidationError("locations and values differ in length");
    const UniquePoints u = dedupe(locations);
    locations_ = u.points;
    sf_.assign(u.points.size(), 0.0);
    for (std::size_t i = 0; i < sf.size(); ++i)
        sf_[u.index_of[i]] = sf[i];
    const auto n = static_cast<Eigen::Index>(locations_.size());
    alpha_ = Eigen::VectorXd::Zero(n);
    if (spec_.corr.sigma_z > 0.0 && n > 0) {
        Eigen::MatrixXd c = covariance_matrix(locations_, spec_.corr);
        c.diagonal().array() += kDiagonalLift;
        alpha_ = c.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(sf_.data(), n));
    }
}

double TruthField::deterministic_dbm(const GeoPoint& p) const {
    const LinkGeometry g = link_geometry(spec_.gs, p, spec_.cfg.wavelength());
    return trpl_received_power_db(spec_.cfg, g, spec_.pattern_distortion ? &*spec_.pattern_distortion : nullptr);
}

double TruthField::shadow_fading_db(const GeoPoint& p) const {
    for (std::size_t i = 0; i < locations_.size(); ++i)
        if (locations_[i] == p)
            return sf_[i];
    double z = 0.0;
    for (std::size_t i = 0; i < locations_.size(); ++i)
        z += covariance(spec_.corr, p, locations_[i]) * alpha_[static_cast<Eigen::Index>(i)];
    return z;
}

double TruthField::blob_db(const GeoPoint& p) const {
    double total = 0.0;
    for (const auto& b : spec_.blobs)
        total += b.offset_db(p);
    return total;
}

double TruthField::rsrp_dbm(const GeoPoint& p) const { return deterministic_dbm(p) + shadow_fading_db(p) + blob_db(p); }

std::vector<Campaign> generate_campaigns(const SceneSpec& scene, std::span<const Trajectory> trajectories) {
    scene.validate();
    std::vector<GeoPoint> all;
    for (const auto& t : trajectories)
        all.insert(all.end(), t.waypoints.begin(), t.waypoints.end());
    for (const auto& p : all)
        remkit::validate(p);

    FieldDraw draw = draw_field(all, scene.corr, scene.seed, true);
    std::vector<double> sf;
    sf.reserve(all.size());
    for (std::size_t idx : draw.unique.index_of)
        sf.push_back(draw.values[static_cast<Eigen::Index>(idx)]);
    auto truth = std::shared_ptr<const TruthField>(new TruthField(
        scene, std::move(draw.unique.points),
        std::vector<double>(draw.values.data(), draw.values.data() + draw.values.size()), std::move(draw.alpha)));

    auto seq = make_seed(scene.seed, kNoiseStream);
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;

    std::vector<Campaign> out;
    std::size_t offset = 0;
    for (const auto& t : trajectories) {
        Campaign c;
        c.truth = truth;
        c.measurements.reserve(t.waypoints.size());
        for (std::size_t k = 0; k < t.waypoints.size(); ++k) {
            const GeoPoint& p = t.waypoints[k];
            const double noise = scene.noise_sd > 0.0 ? scene.noise_sd * normal(rng) : 0.0;
            const double rsrp = truth->deterministic_dbm(p) + sf[offset + k] + truth->blob_db(p) + noise;
            c.measurements.push_back({p, rsrp, static_cast<std::int64_t>(k)});
        }
        offset += t.waypoints.size();
        out.push_back(std::move(c));
    }
    return out;
}

Campaign generate_campaign(const SceneSpec& scene, const Trajectory& traj) {
    auto v = generate_campaigns(scene, std::span<const Trajectory>(&traj, 1));
    return std::move(v.front());
}

} // namespace remkit
