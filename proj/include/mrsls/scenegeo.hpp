#pragma once

#include "mrsls/rng.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrsls
{

    // Point or vector on the z = 0 water plane, meters.
    struct Vec2
    {
        double x = 0.0;
        double y = 0.0;

        constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
        constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
        constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
        constexpr Vec2& operator+=(Vec2 o)
        {
            x += o.x;
            y += o.y;
            return *this;
        }
        constexpr bool operator==(const Vec2&) const = default;
    };

    constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
    constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
    inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

    // Distance from p to the closed segment [a, b].
    double segment_distance(Vec2 p, Vec2 a, Vec2 b);

    struct WorldPoint
    {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;
        constexpr bool operator==(const WorldPoint&) const = default;
    };

    inline constexpr WorldPoint on_water(Vec2 p) { return {p.x, p.y, 0.0}; }

    struct ImagePoint
    {
        double u = 0.0;
        double v = 0.0;
        constexpr bool operator==(const ImagePoint&) const = default;
    };

    // Axis-aligned image rectangle, pixels. Edges are inclusive.
    struct Rect
    {
        double left = 0.0;
        double top = 0.0;
        double right = 0.0;
        double bottom = 0.0;

        constexpr bool contains(ImagePoint p) const
        {
            return p.u >= left && p.u <= right && p.v >= top && p.v <= bottom;
        }
        constexpr bool contains(const Rect& r) const
        {
            return r.left >= left && r.right <= right && r.top >= top && r.bottom <= bottom;
        }
        constexpr double width() const { return right - left; }
        constexpr double height() const { return bottom - top; }
        constexpr bool operator==(const Rect&) const = default;
    };

    using Matrix3 = std::array<std::array<double, 3>, 3>;

    // Pinhole camera. Rows of `rotation` are the camera's right, down and
    // forward axes in world coordinates (world-to-camera rotation).
    struct Camera
    {
        WorldPoint position;
        Matrix3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
        double focal_px = 1000.0;
        ImagePoint principal{960.0, 540.0};
        int image_width = 1920;
        int image_height = 1080;

        // Camera looking from `eye` at `target` with world +z as up.
        static Camera look_at(WorldPoint eye, WorldPoint target, double focal_px, int width, int height);

        // Camera-frame coordinates of a world point; z is depth.
        WorldPoint to_camera(WorldPoint p) const;
    };

    std::optional<ImagePoint> project(const Camera& camera, WorldPoint p);

    // Camera-space depth, the hint clients use for back-to-front compositing.
    double depth_of(const Camera& camera, WorldPoint p);

    bool in_viewport(const Camera& camera, const Rect& viewport, WorldPoint p);

    class Polygon
    {
    public:
        Polygon() = default;
        explicit Polygon(std::vector<Vec2> vertices);

        const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
        std::size_t size() const noexcept { return vertices_.size(); }
        Vec2 vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

        double signed_area() const;
        bool is_simple() const;

        Vec2 min_corner() const { return min_; }
        Vec2 max_corner() const { return max_; }

        struct Crossing
        {
            double t;          // fraction along from->to
            std::size_t edge;  // edge i runs vertex(i) -> vertex(i + 1)
        };

        // First edge crossed by the segment from -> to, if any.
        std::optional<Crossing> first_crossing(Vec2 from, Vec2 to) const;

        // Unit normal of edge i pointing into the polygon interior.
        Vec2 inward_normal(std::size_t edge) const;

    private:
        std::vector<Vec2> vertices_;
        Vec2 min_;
        Vec2 max_;
    };

    // Even-odd rule; points on the boundary count as inside.
    bool contains(const Polygon& polygon, Vec2 p);

    // Rejection sampling over the bounding box. Requires positive area.
    Vec2 sample_lake_point(Rng& rng, const Polygon& polygon);

    struct PhysicsConfig
    {
        double idle_drift_speed = 0.05; // m/s, +x
        double dash_speed = 1.5;        // m/s
        double dash_duration_s = 2.0;
        double restitution = 0.9;
        double lotus_radius = 0.4; // m
        double shine_duration_s = 2.0;
        double fish_duration_s = 3.0;
        double firework_duration_s = 2.5;
        double umbrella_duration_s = 8.0;
        double boat_duration_s = 20.0;
        double boat_half_width = 2.5; // m
        std::size_t story_max_chars = 140;
    };

    struct BoatPath
    {
        Vec2 start;
        Vec2 end;
    };

    struct SceneConfig
    {
        std::string name;
        std::string background_plate;
        Camera camera;
        Polygon lake;
        Rect sky_band;
        Rect viewport;
        BoatPath boat_path;
        PhysicsConfig physics;
    };

    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Throws ConfigError naming the first violated invariant.
    void validate(const SceneConfig& scene);

    SceneConfig load_scene(const std::filesystem::path& path);
    SceneConfig parse_scene(const std::string& json_text);

} // namespace mrsls
