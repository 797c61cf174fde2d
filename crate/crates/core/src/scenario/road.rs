//! Manhattan road grid.
//!
//! Roads are the centre lines `x = i * block_size` and `y = j * block_size`.
//! Every block is filled by one building whose walls are set back
//! `setback` metres from the surrounding centre lines, so the open space is a
//! set of `2 * setback` wide corridors along each road.

use super::geometry::{LinkState, Point, Rect};
use crate::error::{Error, Result};

/// A road-graph node: the intersection at column `i`, row `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Intersection {
    pub i: u16,
    pub j: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub block_size: f64,
    pub n_blocks_x: u16,
    pub n_blocks_y: u16,
    /// Distance from a road centre line to the adjacent building walls.
    pub setback: f64,
    buildings: Vec<Rect>,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        Self::manhattan(4, 4, 250.0, 10.0).expect("default grid is valid")
    }
}

impl RoadNetwork {
    pub fn manhattan(n_blocks_x: u16, n_blocks_y: u16, block_size: f64, setback: f64) -> Result<Self> {
        if n_blocks_x == 0 || n_blocks_y == 0 {
            return Err(Error::InvalidConfig("road grid needs at least 1x1 blocks".into()));
        }
        if !(block_size > 0.0 && setback > 0.0 && 2.0 * setback < block_size) {
            return Err(Error::InvalidConfig(format!(
                "need block_size > 2 * setback > 0 (block_size={block_size}, setback={setback})"
            )));
        }
        let mut buildings = Vec::with_capacity(n_blocks_x as usize * n_blocks_y as usize);
        for j in 0..n_blocks_y {
            for i in 0..n_blocks_x {
                let x0 = f64::from(i) * block_size;
                let y0 = f64::from(j) * block_size;
                buildings.push(Rect {
                    min: Point::new(x0 + setback, y0 + setback),
                    max: Point::new(x0 + block_size - setback, y0 + block_size - setback),
                });
            }
        }
        Ok(Self {
            block_size,
            n_blocks_x,
            n_blocks_y,
            setback,
            buildings,
        })
    }

    pub fn buildings(&self) -> &[Rect] {
        &self.buildings
    }

    pub fn width(&self) -> f64 {
        f64::from(self.n_blocks_x) * self.block_size
    }

    pub fn height(&self) -> f64 {
        f64::from(self.n_blocks_y) * self.block_size
    }

    pub fn total_length_m(&self) -> f64 {
        let vertical = f64::from(self.n_blocks_x + 1) * self.height();
        let horizontal = f64::from(self.n_blocks_y + 1) * self.width();
        vertical + horizontal
    }

    pub fn intersection_count(&self) -> usize {
        (self.n_blocks_x as usize + 1) * (self.n_blocks_y as usize + 1)
    }

    pub fn node_position(&self, n: Intersection) -> Point {
        Point::new(
            f64::from(n.i) * self.block_size,
            f64::from(n.j) * self.block_size,
        )
    }

    /// All road segments between adjacent intersections.
    pub fn edges(&self) -> Vec<(Intersection, Intersection)> {
        let mut out = Vec::new();
        for j in 0..=self.n_blocks_y {
            for i in 0..self.n_blocks_x {
                out.push((Intersection { i, j }, Intersection { i: i + 1, j }));
            }
        }
        for i in 0..=self.n_blocks_x {
            for j in 0..self.n_blocks_y {
                out.push((Intersection { i, j }, Intersection { i, j: j + 1 }));
            }
        }
        out
    }

    /// Whether `p` lies on a road centre line (within `tol` metres).
    pub fn on_road(&self, p: Point, tol: f64) -> bool {
        let in_x = p.x >= -tol && p.x <= self.width() + tol;
        let in_y = p.y >= -tol && p.y <= self.height() + tol;
        let on_vertical = (p.x - self.snap(p.x)).abs() <= tol && in_y;
        let on_horizontal = (p.y - self.snap(p.y)).abs() <= tol && in_x;
        on_vertical || on_horizontal
    }

    fn snap(&self, v: f64) -> f64 {
        (v / self.block_size).round() * self.block_size
    }

    /// Index of the road corridor containing coordinate `v`, if any.
    fn corridor(&self, v: f64, count: u16) -> Option<i64> {
        let k = (v / self.block_size).round();
        if k < 0.0 || k > f64::from(count) {
            return None;
        }
        ((v - k * self.block_size).abs() <= self.setback).then_some(k as i64)
    }

    fn building_at(&self, i: usize, j: usize) -> &Rect {
        &self.buildings[j * self.n_blocks_x as usize + i]
    }

    fn block_index(&self, v: f64, count: u16) -> usize {
        ((v / self.block_size).floor().max(0.0) as usize).min(count as usize - 1)
    }

    /// Geometric line-of-sight between two points: NLOS iff the open segment
    /// crosses a building interior. Degenerate segments are LOS.
    pub fn los_geometry(&self, a: Point, b: Point) -> LinkState {
        if a == b {
            return LinkState::Los;
        }
        // Both ends inside one road corridor: the corridor is convex and
        // building-free.
        if let (Some(ca), Some(cb)) = (
            self.corridor(a.x, self.n_blocks_x),
            self.corridor(b.x, self.n_blocks_x),
        ) {
            if ca == cb {
                return LinkState::Los;
            }
        }
        if let (Some(ca), Some(cb)) = (
            self.corridor(a.y, self.n_blocks_y),
            self.corridor(b.y, self.n_blocks_y),
        ) {
            if ca == cb {
                return LinkState::Los;
            }
        }
        let mid = (a + b) * 0.5;
        let (mi, mj) = (
            self.block_index(mid.x, self.n_blocks_x),
            self.block_index(mid.y, self.n_blocks_y),
        );
        if self.building_at(mi, mj).contains_strict(mid) {
            return LinkState::Nlos;
        }
        let (i0, i1) = (
            self.block_index(a.x.min(b.x), self.n_blocks_x),
            self.block_index(a.x.max(b.x), self.n_blocks_x),
        );
        let (j0, j1) = (
            self.block_index(a.y.min(b.y), self.n_blocks_y),
            self.block_index(a.y.max(b.y), self.n_blocks_y),
        );
        for j in j0..=j1 {
            for i in i0..=i1 {
                if self.building_at(i, j).segment_hits_interior(a, b) {
                    return LinkState::Nlos;
                }
            }
        }
        LinkState::Los
    }

    /// Reference implementation of [`Self::los_geometry`]: tests every
    /// building.
    pub fn los_brute_force(&self, a: Point, b: Point) -> LinkState {
        if a == b {
            return LinkState::Los;
        }
        if self.buildings.iter().any(|r| r.segment_hits_interior(a, b)) {
            LinkState::Nlos
        } else {
            LinkState::Los
        }
    }
}

/// Line-of-sight queries among a fixed set of road points.
///
/// A segment that spans a whole building column must stay inside one
/// horizontal corridor while it does, so its slope is bounded by
/// `2 * setback / (block_size - 2 * setback)`; likewise for rows. Steeper
/// segments are rejected without touching any building; the rest are tested
/// against the buildings of the blocks they can reach.
#[derive(Debug, Clone)]
pub struct LosIndex<'a> {
    road: &'a RoadNetwork,
    entries: Vec<IndexedPoint>,
}

#[derive(Debug, Clone, Copy)]
struct IndexedPoint {
    p: Point,
    /// Corridor containing the point along each axis, or -1.
    corridor_x: i32,
    corridor_y: i32,
    /// Far wall of the first building column (row) lying wholly beyond the
    /// point in the +x (+y) direction; infinite when there is none or the
    /// point is outside the grid's corridors.
    col_wall: f64,
    row_wall: f64,
    /// Block cell holding the point (clamped to the grid).
    block_x: usize,
    block_y: usize,
}

impl<'a> LosIndex<'a> {
    pub fn new(road: &'a RoadNetwork, points: Vec<Point>) -> Self {
        let (bs, sb) = (road.block_size, road.setback);
        let wall = |v: f64, count: u16| {
            let first = ((v - sb) / bs).ceil().max(0.0);
            if first < f64::from(count) && first * bs + sb >= v {
                (first + 1.0) * bs - sb
            } else {
                f64::INFINITY
            }
        };
        let entries = points
            .into_iter()
            .map(|p| {
                let inside = p.x >= -sb && p.x <= road.width() + sb && p.y >= -sb && p.y <= road.height() + sb;
                let corridor = |v, count| road.corridor(v, count).map_or(-1, |c| c as i32);
                IndexedPoint {
                    p,
                    corridor_x: corridor(p.x, road.n_blocks_x),
                    corridor_y: corridor(p.y, road.n_blocks_y),
                    col_wall: if inside { wall(p.x, road.n_blocks_x) } else { f64::INFINITY },
                    row_wall: if inside { wall(p.y, road.n_blocks_y) } else { f64::INFINITY },
                    block_x: road.block_index(p.x, road.n_blocks_x),
                    block_y: road.block_index(p.y, road.n_blocks_y),
                }
            })
            .collect();
        Self { road, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn point(&self, i: usize) -> Point {
        self.entries[i].p
    }

    pub fn los(&self, a: usize, b: usize) -> LinkState {
        let (ea, eb) = (&self.entries[a], &self.entries[b]);
        if (ea.corridor_x >= 0 && ea.corridor_x == eb.corridor_x) || (ea.corridor_y >= 0 && ea.corridor_y == eb.corridor_y) {
            return LinkState::Los;
        }
        let (dx, dy) = (eb.p.x - ea.p.x, eb.p.y - ea.p.y);
        let (adx, ady) = (dx.abs(), dy.abs());
        let w = self.road.block_size - 2.0 * self.road.setback;
        let band = 2.0 * self.road.setback;
        let margin = 1e-9 * (adx + ady + 1.0);
        let spans_col = if dx >= 0.0 { eb.p.x >= ea.col_wall } else { ea.p.x >= eb.col_wall };
        if spans_col && ady * w > band * adx + margin {
            return LinkState::Nlos;
        }
        let spans_row = if dy >= 0.0 { eb.p.y >= ea.row_wall } else { ea.p.y >= eb.row_wall };
        if spans_row && adx * w > band * ady + margin {
            return LinkState::Nlos;
        }
        if ea.p == eb.p {
            return LinkState::Los;
        }
        let (i0, i1) = (ea.block_x.min(eb.block_x), ea.block_x.max(eb.block_x));
        let (j0, j1) = (ea.block_y.min(eb.block_y), ea.block_y.max(eb.block_y));
        for j in j0..=j1 {
            for i in i0..=i1 {
                if self.road.building_at(i, j).segment_hits_interior(ea.p, eb.p) {
                    return LinkState::Nlos;
                }
            }
        }
        LinkState::Los
    }
}
