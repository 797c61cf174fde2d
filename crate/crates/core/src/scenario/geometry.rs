use std::ops::{Add, Mul, Sub};

/// A 2-D point or vector in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (o - self).norm()
    }

    pub fn distance_sq(self, o: Point) -> f64 {
        let d = o - self;
        d.dot(d)
    }

    /// Unit vector, or zero for a zero vector.
    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            Point::default()
        } else {
            Point::new(self.x / n, self.y / n)
        }
    }

    /// The vector rotated by -90 degrees (to the right of a heading).
    pub fn right_normal(self) -> Point {
        Point::new(self.y, -self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains_strict(&self, p: Point) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    /// Whether the segment `a`-`b` passes through the open interior of the
    /// rectangle. Grazing an edge or a corner does not count.
    pub fn segment_hits_interior(&self, a: Point, b: Point) -> bool {
        let d = b - a;
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for (p, dp, min, max) in [
            (a.x, d.x, self.min.x, self.max.x),
            (a.y, d.y, self.min.y, self.max.y),
        ] {
            if dp == 0.0 {
                if p <= min || p >= max {
                    return false;
                }
            } else {
                let t1 = (min - p) / dp;
                let t2 = (max - p) / dp;
                let (t_in, t_out) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
                lo = lo.max(t_in);
                hi = hi.min(t_out);
            }
        }
        lo < hi
    }
}

/// Radio link state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkState {
    Los,
    Nlos,
}

impl LinkState {
    pub fn is_los(self) -> bool {
        self == LinkState::Los
    }
}
