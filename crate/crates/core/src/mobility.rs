//! Vehicle arrivals, straight-line trapezoidal-speed trajectories across the
//! tile, and the sojourn-time state feature.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular area served by one RSU placed at its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub width: f64,
    pub height: f64,
}

impl Default for Tile {
    fn default() -> Self {
        Self {
            width: 300.0,
            height: 100.0,
        }
    }
}

impl Tile {
    pub fn rsu_position(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        const SLACK: f64 = 1e-9;
        p.x >= -SLACK && p.x <= self.width + SLACK && p.y >= -SLACK && p.y <= self.height + SLACK
    }

    /// Uniform point on edge `edge` (0 bottom, 1 right, 2 top, 3 left).
    fn point_on_edge<R: Rng + ?Sized>(&self, edge: u8, rng: &mut R) -> Point {
        match edge {
            0 => Point::new(rng.gen_range(0.0..=self.width), 0.0),
            1 => Point::new(self.width, rng.gen_range(0.0..=self.height)),
            2 => Point::new(rng.gen_range(0.0..=self.width), self.height),
            _ => Point::new(0.0, rng.gen_range(0.0..=self.height)),
        }
    }
}

/// Longitudinal motion limits shared by all vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub max_speed: f64,
    pub min_cruise_speed: f64,
    pub acceleration: f64,
    pub deceleration: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            max_speed: 17.0,
            min_cruise_speed: 8.0,
            acceleration: 2.6,
            deceleration: 4.5,
        }
    }
}

/// Straight entry-to-exit path with an accelerate / cruise / decelerate profile.
/// The vehicle enters at rest and stops at the exit point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub entry_point: Point,
    pub exit_point: Point,
    pub entry_time: f64,
    pub cruise_speed: f64,
    pub acceleration: f64,
    pub deceleration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Point,
    pub velocity: (f64, f64),
    pub distance_to_rsu: f64,
    pub speed: f64,
}

impl Kinematics {
    /// Builds kinematics from position and velocity, deriving distance and speed.
    pub fn new(position: Point, velocity: (f64, f64), rsu: Point) -> Self {
        Self {
            position,
            velocity,
            distance_to_rsu: position.distance(rsu),
            speed: velocity.0.hypot(velocity.1),
        }
    }

    /// True when the velocity has a positive component along the vehicle→RSU
    /// direction.
    pub fn approaching(&self, rsu: Point) -> bool {
        let dx = rsu.x - self.position.x;
        let dy = rsu.y - self.position.y;
        self.velocity.0 * dx + self.velocity.1 * dy > 0.0
    }
}

impl Trajectory {
    pub fn length(&self) -> f64 {
        self.entry_point.distance(self.exit_point)
    }

    /// Peak speed actually reached; lower than `cruise_speed` on short paths.
    pub fn peak_speed(&self) -> f64 {
        let (a, d) = (self.acceleration, self.deceleration);
        let triangle = (2.0 * self.length() * a * d / (a + d)).sqrt();
        self.cruise_speed.min(triangle)
    }

    /// Total time from entry to exit.
    pub fn duration(&self) -> f64 {
        let v = self.peak_speed();
        let (a, d) = (self.acceleration, self.deceleration);
        let ramp_dist = v * v / (2.0 * a) + v * v / (2.0 * d);
        let cruise = (self.length() - ramp_dist).max(0.0) / v;
        v / a + cruise + v / d
    }

    pub fn exit_time(&self) -> f64 {
        self.entry_time + self.duration()
    }

    /// Distance travelled and speed `tau` seconds after entry.
    fn profile(&self, tau: f64) -> (f64, f64) {
        let v = self.peak_speed();
        let (a, d) = (self.acceleration, self.deceleration);
        let len = self.length();
        let t_acc = v / a;
        let d_acc = v * v / (2.0 * a);
        let d_dec = v * v / (2.0 * d);
        let t_cruise = (len - d_acc - d_dec).max(0.0) / v;
        let total = t_acc + t_cruise + v / d;
        if tau <= t_acc {
            (0.5 * a * tau * tau, a * tau)
        } else if tau <= t_acc + t_cruise {
            (d_acc + v * (tau - t_acc), v)
        } else {
            let left = (total - tau).max(0.0);
            // Mirror of the deceleration ramp measured from the exit.
            (len - 0.5 * d * left * left, d * left)
        }
    }

    /// Time (absolute) at which the vehicle has travelled `s` meters.
    pub fn time_at_distance(&self, s: f64) -> f64 {
        let v = self.peak_speed();
        let (a, d) = (self.acceleration, self.deceleration);
        let len = self.length();
        let s = s.clamp(0.0, len);
        let d_acc = v * v / (2.0 * a);
        let d_dec = v * v / (2.0 * d);
        let t_acc = v / a;
        let t_cruise = (len - d_acc - d_dec).max(0.0) / v;
        let tau = if s <= d_acc {
            (2.0 * s / a).sqrt()
        } else if s <= len - d_dec {
            t_acc + (s - d_acc) / v
        } else {
            let rem = len - s;
            t_acc + t_cruise + v / d - (2.0 * rem / d).sqrt()
        };
        self.entry_time + tau
    }

    pub fn position_at(&self, t: f64, rsu: Point) -> Result<Kinematics> {
        const EPS: f64 = 1e-9;
        let tau = t - self.entry_time;
        if tau > self.duration() + EPS {
            return Err(SimError::VehicleDeparted(0));
        }
        let tau = tau.max(0.0);
        let (s, speed) = self.profile(tau);
        let len = self.length();
        let (ux, uy) = (
            (self.exit_point.x - self.entry_point.x) / len,
            (self.exit_point.y - self.entry_point.y) / len,
        );
        let position = Point::new(self.entry_point.x + ux * s, self.entry_point.y + uy * s);
        Ok(Kinematics::new(position, (ux * speed, uy * speed), rsu))
    }

    /// Absolute time interval during which the vehicle is within `radius` of
    /// `center`, if any.
    pub fn coverage_interval(&self, center: Point, radius: f64) -> Option<(f64, f64)> {
        let len = self.length();
        let (ux, uy) = (
            (self.exit_point.x - self.entry_point.x) / len,
            (self.exit_point.y - self.entry_point.y) / len,
        );
        let (ex, ey) = (self.entry_point.x - center.x, self.entry_point.y - center.y);
        let b = ux * ex + uy * ey;
        let c = ex * ex + ey * ey - radius * radius;
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let s0 = (-b - root).max(0.0);
        let s1 = (-b + root).min(len);
        if s1 <= s0 {
            return None;
        }
        Some((self.time_at_distance(s0), self.time_at_distance(s1)))
    }

    /// Random trajectory between two distinct tile edges.
    pub fn random<R: Rng + ?Sized>(
        tile: &Tile,
        limits: &MotionLimits,
        entry_time: f64,
        rng: &mut R,
    ) -> Self {
        loop {
            let entry_edge: u8 = rng.gen_range(0..4);
            let exit_edge = (entry_edge + rng.gen_range(1..4)) % 4;
            let entry_point = tile.point_on_edge(entry_edge, rng);
            let exit_point = tile.point_on_edge(exit_edge, rng);
            let cruise_speed = if limits.min_cruise_speed >= limits.max_speed {
                limits.max_speed
            } else {
                rng.gen_range(limits.min_cruise_speed..=limits.max_speed)
            };
            // Corner-to-same-corner draws are degenerate; redraw.
            if entry_point.distance(exit_point) < 1.0 {
                continue;
            }
            return Self {
                entry_point,
                exit_point,
                entry_time,
                cruise_speed,
                acceleration: limits.acceleration,
                deceleration: limits.deceleration,
            };
        }
    }
}

/// Vehicle entry instants `k * interval` for `k = 1..=floor(duration / interval)`.
pub fn spawn_times(interval: f64, duration: f64) -> impl Iterator<Item = f64> {
    let count = if interval.is_finite() && interval > 0.0 && duration > 0.0 {
        (duration / interval + 1e-9).floor() as u64
    } else {
        0
    };
    (1..=count).map(move |k| k as f64 * interval)
}

/// Predicted remaining time inside coverage.
///
/// Approaching vehicles get `(radius - d) / speed`, clamped at zero; receding
/// vehicles get zero. A stopped vehicle inside coverage gets `stationary_cap`.
pub fn sojourn_time(k: &Kinematics, rsu: Point, coverage_diameter: f64, stationary_cap: f64) -> f64 {
    let radius = coverage_diameter / 2.0;
    if k.speed <= f64::EPSILON {
        return if k.distance_to_rsu <= radius {
            stationary_cap
        } else {
            0.0
        };
    }
    if !k.approaching(rsu) {
        return 0.0;
    }
    ((radius - k.distance_to_rsu) / k.speed).max(0.0)
}

/// Discretized sojourn time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SojournBucket {
    pub value: u8,
    pub raw: f64,
}

pub const SOJOURN_BOUNDS: [f64; 4] = [2.9, 5.6, 8.4, 11.2];

pub fn sojourn_bucket(sj: f64) -> Result<SojournBucket> {
    if !(sj >= 0.0) {
        return Err(SimError::NegativeSojourn(sj));
    }
    let value = SOJOURN_BOUNDS.iter().take_while(|&&b| sj > b).count() as u8;
    Ok(SojournBucket { value, raw: sj })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RngStream;

    fn straight(len: f64, cruise: f64) -> Trajectory {
        Trajectory {
            entry_point: Point::new(0.0, 50.0),
            exit_point: Point::new(len, 50.0),
            entry_time: 0.0,
            cruise_speed: cruise,
            acceleration: 2.6,
            deceleration: 4.5,
        }
    }

    #[test]
    fn spawn_count_matches_floor() {
        assert_eq!(spawn_times(0.66, 250.0).count(), 378);
        assert_eq!(spawn_times(f64::INFINITY, 250.0).count(), 0);
        assert_eq!(spawn_times(1.0, 10.0).last(), Some(10.0));
    }

    #[test]
    fn starts_at_rest_on_entry_point() {
        let tr = straight(200.0, 17.0);
        let k = tr.position_at(0.0, Point::new(150.0, 50.0)).unwrap();
        assert_eq!(k.position, tr.entry_point);
        assert_eq!(k.speed, 0.0);
    }

    #[test]
    fn cruises_mid_path() {
        let tr = straight(200.0, 17.0);
        let k = tr.position_at(10.0, Point::new(150.0, 50.0)).unwrap();
        assert!((k.speed - 17.0).abs() < 1e-12);
    }

    #[test]
    fn traversal_time_closed_form() {
        // accel 17/2.6 s, decel 17/4.5 s, cruise over the remaining distance
        let t_acc = 17.0 / 2.6;
        let t_dec = 17.0 / 4.5;
        let cruise_dist = 200.0 - 17.0 * 17.0 / 5.2 - 17.0 * 17.0 / 9.0;
        let expected = t_acc + t_dec + cruise_dist / 17.0;
        let tr = straight(200.0, 17.0);
        assert!((tr.duration() - expected).abs() < 1e-12);
        assert!((tr.duration() - 16.9226).abs() < 1e-3);
    }

    #[test]
    fn query_after_exit_is_departed() {
        let tr = straight(200.0, 17.0);
        let err = tr.position_at(tr.exit_time() + 0.1, Point::new(0.0, 0.0));
        assert!(matches!(err, Err(SimError::VehicleDeparted(_))));
    }

    #[test]
    fn short_path_uses_triangular_profile() {
        let tr = straight(20.0, 17.0);
        assert!(tr.peak_speed() < 17.0);
        let end = tr.position_at(tr.exit_time(), Point::default()).unwrap();
        assert!((end.position.x - 20.0).abs() < 1e-9);
        assert!(end.speed < 1e-9);
    }

    #[test]
    fn time_at_distance_inverts_profile() {
        let tr = straight(200.0, 17.0);
        for s in [0.0, 10.0, 55.0, 120.0, 180.0, 200.0] {
            let t = tr.time_at_distance(s);
            let k = tr.position_at(t, Point::default()).unwrap();
            assert!((k.position.x - s).abs() < 1e-6, "s={s}");
        }
    }

    #[test]
    fn coverage_interval_matches_geometry() {
        let tr = straight(300.0, 17.0);
        let rsu = Point::new(150.0, 50.0);
        let (t0, t1) = tr.coverage_interval(rsu, 100.0).unwrap();
        let k0 = tr.position_at(t0, rsu).unwrap();
        let k1 = tr.position_at(t1, rsu).unwrap();
        assert!((k0.distance_to_rsu - 100.0).abs() < 1e-6);
        assert!((k1.distance_to_rsu - 100.0).abs() < 1e-6);
        let far = Trajectory {
            entry_point: Point::new(0.0, 0.0),
            exit_point: Point::new(0.0, 100.0),
            ..tr
        };
        assert!(far.coverage_interval(rsu, 100.0).is_none());
    }

    #[test]
    fn sojourn_examples() {
        let rsu = Point::new(150.0, 50.0);
        // d = 50, heading straight at the RSU at 10 m/s
        let k = Kinematics::new(Point::new(100.0, 50.0), (10.0, 0.0), rsu);
        assert!((sojourn_time(&k, rsu, 200.0, 20.0) - 5.0).abs() < 1e-12);
        let away = Kinematics::new(Point::new(100.0, 50.0), (-10.0, 0.0), rsu);
        assert_eq!(sojourn_time(&away, rsu, 200.0, 20.0), 0.0);
        let edge = Kinematics::new(Point::new(50.0, 50.0), (17.0, 0.0), rsu);
        assert_eq!(sojourn_time(&edge, rsu, 200.0, 20.0), 0.0);
        let outside = Kinematics::new(Point::new(10.0, 50.0), (17.0, 0.0), rsu);
        assert_eq!(sojourn_time(&outside, rsu, 200.0, 20.0), 0.0);
        let parked = Kinematics::new(Point::new(120.0, 50.0), (0.0, 0.0), rsu);
        assert_eq!(sojourn_time(&parked, rsu, 200.0, 20.0), 20.0);
        assert_eq!(sojourn_bucket(20.0).unwrap().value, 4);
    }

    #[test]
    fn bucket_examples() {
        assert_eq!(sojourn_bucket(0.0).unwrap().value, 0);
        assert_eq!(sojourn_bucket(5.0).unwrap().value, 1);
        assert_eq!(sojourn_bucket(11.2000001).unwrap().value, 4);
        assert!(sojourn_bucket(-0.1).is_err());
        assert!(sojourn_bucket(f64::NAN).is_err());
    }

    #[test]
    fn random_trajectories_use_distinct_edges() {
        let tile = Tile::default();
        let mut rng = RngStream::new("mobility", 3);
        for _ in 0..500 {
            let tr = Trajectory::random(&tile, &MotionLimits::default(), 0.0, &mut rng);
            assert!(tr.entry_point != tr.exit_point);
            assert!(tr.cruise_speed > 0.0 && tr.cruise_speed <= 17.0);
            assert!(tile.contains(tr.entry_point) && tile.contains(tr.exit_point));
        }
    }
}
