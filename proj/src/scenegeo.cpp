#include "mrsls/scenegeo.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace mrsls
{

    namespace
    {
        constexpr double kBoundaryEps = 1e-9;

        using Vec3 = std::array<double, 3>;

        Vec3 sub(Vec3 a, Vec3 b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
        Vec3 cross3(Vec3 a, Vec3 b)
        {
            return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
        }
        Vec3 normalized(Vec3 v)
        {
            const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            return {v[0] / n, v[1] / n, v[2] / n};
        }

        bool on_segment(Vec2 p, Vec2 a, Vec2 b)
        {
            return segment_distance(p, a, b) <= kBoundaryEps;
        }

        int orientation(Vec2 a, Vec2 b, Vec2 c)
        {
            const double v = cross(b - a, c - a);
            if (v > 0)
                return 1;
            if (v < 0)
                return -1;
            return 0;
        }

        bool segments_touch(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2)
        {
            const int o1 = orientation(p1, p2, q1);
            const int o2 = orientation(p1, p2, q2);
            const int o3 = orientation(q1, q2, p1);
            const int o4 = orientation(q1, q2, p2);
            if (o1 != o2 && o3 != o4)
                return true;
            if (o1 == 0 && on_segment(q1, p1, p2))
                return true;
            if (o2 == 0 && on_segment(q2, p1, p2))
                return true;
            if (o3 == 0 && on_segment(p1, q1, q2))
                return true;
            if (o4 == 0 && on_segment(p2, q1, q2))
                return true;
            return false;
        }

        bool finite(double v) { return std::isfinite(v); }
    } // namespace

    double segment_distance(Vec2 p, Vec2 a, Vec2 b)
    {
        const Vec2 ab = b - a;
        const double len2 = dot(ab, ab);
        if (len2 == 0.0)
            return norm(p - a);
        const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
        return norm(p - (a + ab * t));
    }

    Camera Camera::look_at(WorldPoint eye, WorldPoint target, double focal_px, int width, int height)
    {
        const Vec3 forward = normalized(sub({target.x, target.y, target.z}, {eye.x, eye.y, eye.z}));
        const Vec3 right = normalized(cross3(forward, {0.0, 0.0, 1.0}));
        const Vec3 down = cross3(forward, right);

        Camera c;
        c.position = eye;
        c.rotation = {right, down, forward};
        c.focal_px = focal_px;
        c.principal = {width / 2.0, height / 2.0};
        c.image_width = width;
        c.image_height = height;
        return c;
    }

    WorldPoint Camera::to_camera(WorldPoint p) const
    {
        const double dx = p.x - position.x;
        const double dy = p.y - position.y;
        const double dz = p.z - position.z;
        const auto& r = rotation;
        return {r[0][0] * dx + r[0][1] * dy + r[0][2] * dz, r[1][0] * dx + r[1][1] * dy + r[1][2] * dz,
                r[2][0] * dx + r[2][1] * dy + r[2][2] * dz};
    }

    std::optional<ImagePoint> project(const Camera& camera, WorldPoint p)
    {
        const WorldPoint c = camera.to_camera(p);
        if (!(c.z > 0.0))
            return std::nullopt;
        return ImagePoint{camera.principal.u + camera.focal_px * c.x / c.z,
                          camera.principal.v + camera.focal_px * c.y / c.z};
    }

    double depth_of(const Camera& camera, WorldPoint p)
    {
        return camera.to_camera(p).z;
    }

    bool in_viewport(const Camera& camera, const Rect& viewport, WorldPoint p)
    {
        const auto img = project(camera, p);
        return img && viewport.contains(*img);
    }

    Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices))
    {
        if (vertices_.empty())
            return;
        min_ = max_ = vertices_.front();
        for (const auto& v : vertices_)
        {
            min_.x = std::min(min_.x, v.x);
            min_.y = std::min(min_.y, v.y);
            max_.x = std::max(max_.x, v.x);
            max_.y = std::max(max_.y, v.y);
        }
    }

    double Polygon::signed_area() const
    {
        double twice = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            twice += cross(vertex(i), vertex(i + 1));
        return twice / 2.0;
    }

    bool Polygon::is_simple() const
    {
        const std::size_t n = vertices_.size();
        if (n < 3)
            return false;
        for (std::size_t i = 0; i < n; ++i)
        {
            for (std::size_t j = i + 1; j < n; ++j)
            {
                const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if (adjacent)
                {
                    // Adjacent edges may only share their common vertex.
                    const Vec2 shared = j == i + 1 ? vertex(j) : vertex(i);
                    const Vec2 a_far = j == i + 1 ? vertex(i) : vertex(i + 1);
                    const Vec2 b_far = j == i + 1 ? vertex(j + 1) : vertex(j);
                    if (orientation(a_far, shared, b_far) == 0 && dot(a_far - shared, b_far - shared) > 0)
                        return false;
                    continue;
                }
                if (segments_touch(vertex(i), vertex(i + 1), vertex(j), vertex(j + 1)))
                    return false;
            }
        }
        return true;
    }

    std::optional<Polygon::Crossing> Polygon::first_crossing(Vec2 from, Vec2 to) const
    {
        const Vec2 d = to - from;
        std::optional<Crossing> best;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
        {
            const Vec2 a = vertex(i);
            const Vec2 e = vertex(i + 1) - a;
            const double denom = cross(d, e);
            if (denom == 0.0)
                continue;
            const Vec2 w = a - from;
            const double t = cross(w, e) / denom;
            const double u = cross(w, d) / denom;
            if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0)
                continue;
            if (!best || t < best->t)
                best = Crossing{t, i};
        }
        return best;
    }

    Vec2 Polygon::inward_normal(std::size_t edge) const
    {
        const Vec2 e = vertex(edge + 1) - vertex(edge);
        const double len = norm(e);
        Vec2 left{-e.y / len, e.x / len};
        return signed_area() > 0 ? left : left * -1.0;
    }

    bool contains(const Polygon& polygon, Vec2 p)
    {
        const std::size_t n = polygon.size();
        if (n < 3)
            return false;
        const Vec2 lo = polygon.min_corner();
        const Vec2 hi = polygon.max_corner();
        if (p.x < lo.x - kBoundaryEps || p.x > hi.x + kBoundaryEps || p.y < lo.y - kBoundaryEps ||
            p.y > hi.y + kBoundaryEps)
            return false;

        bool inside = false;
        for (std::size_t i = 0, j = n - 1; i < n; j = i++)
        {
            const Vec2 a = polygon.vertex(i);
            const Vec2 b = polygon.vertex(j);
            if (on_segment(p, a, b))
                return true;
            if ((a.y > p.y) != (b.y > p.y))
            {
                const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (p.x < x_at)
                    inside = !inside;
            }
        }
        return inside;
    }

    Vec2 sample_lake_point(Rng& rng, const Polygon& polygon)
    {
        const Vec2 lo = polygon.min_corner();
        const Vec2 hi = polygon.max_corner();
        for (;;)
        {
            const Vec2 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
            if (contains(polygon, p))
                return p;
        }
    }

    void validate(const SceneConfig& scene)
    {
        const auto fail = [](const std::string& what) { throw ConfigError("scene: " + what); };

        const auto& cam = scene.camera;
        if (!finite(cam.position.x) || !finite(cam.position.y) || !finite(cam.position.z))
            fail("camera position must be finite");
        if (!(cam.focal_px > 0.0))
            fail("focal length must be positive");
        if (cam.image_width <= 0 || cam.image_height <= 0)
            fail("image size must be positive");
        for (int r = 0; r < 3; ++r)
        {
            for (int c = 0; c < 3; ++c)
            {
                double d = 0.0;
                for (int k = 0; k < 3; ++k)
                    d += cam.rotation[r][k] * cam.rotation[c][k];
                if (std::abs(d - (r == c ? 1.0 : 0.0)) > 1e-6)
                    fail("camera rotation must be orthonormal");
            }
        }

        const auto& lake = scene.lake;
        if (lake.size() < 3)
            fail("lake polygon needs at least 3 vertices");
        for (const auto& v : lake.vertices())
        {
            if (!finite(v.x) || !finite(v.y))
                fail("lake polygon vertices must be finite");
        }
        if (std::abs(lake.signed_area()) <= 1e-9)
            fail("lake polygon has zero area");
        if (!lake.is_simple())
            fail("lake polygon must not self-intersect");

        const Rect image{0.0, 0.0, static_cast<double>(cam.image_width), static_cast<double>(cam.image_height)};
        if (!(scene.viewport.width() > 0.0 && scene.viewport.height() > 0.0) || !image.contains(scene.viewport))
            fail("viewport must be a non-empty rectangle within the image");
        if (!(scene.sky_band.width() > 0.0 && scene.sky_band.height() > 0.0) || !image.contains(scene.sky_band))
            fail("sky_band must be a non-empty rectangle within the image");

        if (!contains(lake, scene.boat_path.start) || !contains(lake, scene.boat_path.end))
            fail("boat path endpoints must lie on the lake");

        const auto& ph = scene.physics;
        if (!(ph.restitution >= 0.0 && ph.restitution <= 1.0))
            fail("restitution must be in [0, 1]");
        const std::pair<const char*, double> positive[] = {
            {"idle_drift_speed", ph.idle_drift_speed},
            {"dash_speed", ph.dash_speed},
            {"dash_duration_s", ph.dash_duration_s},
            {"lotus_radius", ph.lotus_radius},
            {"shine_duration_s", ph.shine_duration_s},
            {"fish_duration_s", ph.fish_duration_s},
            {"firework_duration_s", ph.firework_duration_s},
            {"umbrella_duration_s", ph.umbrella_duration_s},
            {"boat_duration_s", ph.boat_duration_s},
            {"boat_half_width", ph.boat_half_width},
        };
        for (const auto& [name, value] : positive)
        {
            if (!(value > 0.0) || !finite(value))
                fail(std::string(name) + " must be positive");
        }
        if (ph.story_max_chars == 0)
            fail("story_max_chars must be positive");
    }

    namespace
    {
        using nlohmann::json;

        Vec2 vec2_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

        Rect rect_from(const json& j)
        {
            return {j.at("left").get<double>(), j.at("top").get<double>(), j.at("right").get<double>(),
                    j.at("bottom").get<double>()};
        }

        template <class T>
        void optional_field(const json& j, const char* key, T& out)
        {
            if (j.contains(key))
                out = j.at(key).get<T>();
        }
    } // namespace

    SceneConfig parse_scene(const std::string& json_text)
    {
        SceneConfig scene;
        try
        {
            const json doc = json::parse(json_text);
            optional_field(doc, "name", scene.name);
            optional_field(doc, "background_plate", scene.background_plate);

            const json& cam = doc.at("camera");
            const json& pos = cam.at("position");
            const WorldPoint eye{pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
            const double focal = cam.at("focal_px").get<double>();
            const int width = cam.at("image_size").at(0).get<int>();
            const int height = cam.at("image_size").at(1).get<int>();
            if (cam.contains("rotation"))
            {
                scene.camera.position = eye;
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        scene.camera.rotation[r][c] = cam.at("rotation").at(r).at(c).get<double>();
                scene.camera.focal_px = focal;
                scene.camera.image_width = width;
                scene.camera.image_height = height;
                scene.camera.principal = {width / 2.0, height / 2.0};
            }
            else if (cam.contains("look_at"))
            {
                const json& t = cam.at("look_at");
                scene.camera = Camera::look_at(
                    eye, {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()}, focal, width, height);
            }
            else
            {
                throw ConfigError("scene: camera needs 'rotation' or 'look_at'");
            }
            if (cam.contains("principal"))
                scene.camera.principal = {cam.at("principal").at(0).get<double>(),
                                          cam.at("principal").at(1).get<double>()};

            std::vector<Vec2> lake;
            for (const auto& v : doc.at("lake_polygon"))
                lake.push_back(vec2_from(v));
            scene.lake = Polygon(std::move(lake));

            scene.sky_band = rect_from(doc.at("sky_band"));
            scene.viewport = doc.contains("viewport")
                                 ? rect_from(doc.at("viewport"))
                                 : Rect{0.0, 0.0, static_cast<double>(width), static_cast<double>(height)};
            scene.boat_path = {vec2_from(doc.at("boat_path").at("start")), vec2_from(doc.at("boat_path").at("end"))};

            if (doc.contains("physics"))
            {
                const json& ph = doc.at("physics");
                auto& p = scene.physics;
                optional_field(ph, "idle_drift_speed", p.idle_drift_speed);
                optional_field(ph, "dash_speed", p.dash_speed);
                optional_field(ph, "dash_duration_s", p.dash_duration_s);
                optional_field(ph, "restitution", p.restitution);
                optional_field(ph, "lotus_radius", p.lotus_radius);
                optional_field(ph, "shine_duration_s", p.shine_duration_s);
                optional_field(ph, "fish_duration_s", p.fish_duration_s);
                optional_field(ph, "firework_duration_s", p.firework_duration_s);
                optional_field(ph, "umbrella_duration_s", p.umbrella_duration_s);
                optional_field(ph, "boat_duration_s", p.boat_duration_s);
                optional_field(ph, "boat_half_width", p.boat_half_width);
                optional_field(ph, "story_max_chars", p.story_max_chars);
            }
        }
        catch (const json::exception& e)
        {
            throw ConfigError(std::string("scene: ") + e.what());
        }
        validate(scene);
        return scene;
    }

    SceneConfig load_scene(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("cannot open scene file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_scene(ss.str());
    }

} // namespace mrsls
