//! Transmit beam codebooks and beam search procedures.
//!
//! Beams form a regular `nx x ny` grid over azimuth [-60, 60] degrees and
//! elevation [-30, 30] degrees. Index `i` maps to column `i % nx` (azimuth)
//! and row `i / nx` (elevation).

mod tracking;

pub use tracking::{BeamPolicy, LinkObservation, LinkTracker, TrainingLedger, Trigger};

use crate::error::{Error, Result};
use crate::scenario::{Point, VehicleState};

pub const AZ_SPAN_DEG: f64 = 120.0;
pub const EL_SPAN_DEG: f64 = 60.0;
/// Roll-off in dB at one cell width off centre.
pub const ROLLOFF_DB: f64 = 12.0;
pub const SIDELOBE_FLOOR_DB: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BeamCodebook {
    pub nx: usize,
    pub ny: usize,
}

impl BeamCodebook {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 || nx * ny < 4 {
            return Err(Error::InvalidConfig(format!(
                "codebook needs at least 4 beams, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    /// Square grid with `cardinality` beams.
    pub fn square(cardinality: usize) -> Result<Self> {
        let n = (cardinality as f64).sqrt().round() as usize;
        if n * n != cardinality {
            return Err(Error::InvalidConfig(format!(
                "codebook cardinality {cardinality} is not a perfect square"
            )));
        }
        Self::new(n, n)
    }

    pub fn cardinality(&self) -> usize {
        self.nx * self.ny
    }

    pub fn peak_gain_db(&self) -> f64 {
        10.0 * (self.cardinality() as f64).log10()
    }

    pub fn az_width(&self) -> f64 {
        AZ_SPAN_DEG / self.nx as f64
    }

    pub fn el_width(&self) -> f64 {
        EL_SPAN_DEG / self.ny as f64
    }

    /// Grid coordinates `(column, row)` of a beam.
    pub fn cell(&self, beam: usize) -> (usize, usize) {
        (beam % self.nx, beam / self.nx)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Pointing direction `(az, el)` in degrees.
    pub fn direction(&self, beam: usize) -> (f64, f64) {
        let (ix, iy) = self.cell(beam);
        (
            -AZ_SPAN_DEG / 2.0 + (ix as f64 + 0.5) * self.az_width(),
            -EL_SPAN_DEG / 2.0 + (iy as f64 + 0.5) * self.el_width(),
        )
    }

    fn check(&self, beam: usize) -> Result<()> {
        if beam >= self.cardinality() {
            return Err(Error::contract(format!(
                "beam index {beam} out of range for cardinality {}",
                self.cardinality()
            )));
        }
        Ok(())
    }

    /// Valid beams in the 3x3 neighbourhood of `beam` (itself included),
    /// in ascending index order.
    pub fn neighbourhood(&self, beam: usize) -> Vec<usize> {
        let (ix, iy) = self.cell(beam);
        let mut out = Vec::with_capacity(9);
        for y in iy.saturating_sub(1)..=(iy + 1).min(self.ny - 1) {
            for x in ix.saturating_sub(1)..=(ix + 1).min(self.nx - 1) {
                out.push(self.index(x, y));
            }
        }
        out
    }
}

/// Gain of `beam` towards direction `(az, el)`: flat inside the beam's cell,
/// quadratic roll-off outside it, floored at the side-lobe level.
pub fn beam_gain_db(cb: &BeamCodebook, beam: usize, az: f64, el: f64) -> Result<f64> {
    cb.check(beam)?;
    Ok(gain_unchecked(cb, beam, az, el))
}

pub(crate) fn gain_unchecked(cb: &BeamCodebook, beam: usize, az: f64, el: f64) -> f64 {
    let (beam_az, beam_el) = cb.direction(beam);
    let u = (az - beam_az) / cb.az_width();
    let v = (el - beam_el) / cb.el_width();
    let peak = cb.peak_gain_db();
    if u.abs() <= 0.5 && v.abs() <= 0.5 {
        return peak;
    }
    peak - (ROLLOFF_DB * (u * u + v * v)).min(SIDELOBE_FLOOR_DB)
}

fn better(a: (usize, f64), b: (usize, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

/// Hill climbing on the beam grid. Each iteration measures the whole 3x3
/// neighbourhood of the incumbent (one slot per measurement) and moves to its
/// argmax, ties to the lower index; it stops when the incumbent wins.
/// Returns the final beam and the slots spent.
pub fn gradient_track(
    cb: &BeamCodebook,
    current_beam: usize,
    mut measure: impl FnMut(usize) -> f64,
) -> Result<(usize, u32)> {
    cb.check(current_beam)?;
    let mut incumbent = current_beam;
    let mut slots = 0u32;
    // Each move strictly improves (gain, -index), so this bound is never hit.
    for _ in 0..=cb.cardinality() {
        let mut best: Option<(usize, f64)> = None;
        for b in cb.neighbourhood(incumbent) {
            let g = measure(b);
            slots += 1;
            if best.is_none_or(|cur| better((b, g), cur)) {
                best = Some((b, g));
            }
        }
        let (b, _) = best.expect("neighbourhood contains the incumbent");
        if b == incumbent {
            return Ok((incumbent, slots));
        }
        incumbent = b;
    }
    Err(Error::invariant("gradient_track failed to terminate"))
}

/// Measure every candidate once and return the argmax (ties to the lower
/// index) with the slots spent.
pub fn sweep(candidates: &[usize], mut measure: impl FnMut(usize) -> f64) -> Result<(usize, u32)> {
    let mut best: Option<(usize, f64)> = None;
    for &b in candidates {
        let g = measure(b);
        if best.is_none_or(|cur| better((b, g), cur)) {
            best = Some((b, g));
        }
    }
    best.map(|(b, _)| (b, candidates.len() as u32))
        .ok_or_else(|| Error::contract("sweep over an empty candidate set"))
}

/// The `k` beams whose directions are nearest to `(az, el)` in degree space,
/// ties to the lower index, returned in ascending distance.
pub fn nearest_beams(cb: &BeamCodebook, az: f64, el: f64, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > cb.cardinality() {
        return Err(Error::contract(format!(
            "candidate count {k} outside 1..={}",
            cb.cardinality()
        )));
    }
    let mut all: Vec<(f64, usize)> = (0..cb.cardinality())
        .map(|b| {
            let (beam_az, beam_el) = cb.direction(b);
            ((az - beam_az).powi(2) + (el - beam_el).powi(2), b)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(all.into_iter().take(k).map(|(_, b)| b).collect())
}

/// Direction of `rx` as seen from a transmitter at `tx_pos` facing
/// `tx_heading`, in degrees. Azimuth is positive to the left of the heading;
/// targets behind are folded onto the front half-plane (front and rear
/// panels share one codebook).
pub fn angle_of_departure(tx_pos: Point, tx_heading: Point, tx_height: f64, rx_pos: Point, rx_height: f64) -> (f64, f64) {
    let d = rx_pos - tx_pos;
    let fwd = d.dot(tx_heading);
    let left = tx_heading.x * d.y - tx_heading.y * d.x;
    let mut az = left.atan2(fwd).to_degrees();
    if az > 90.0 {
        az = 180.0 - az;
    } else if az < -90.0 {
        az = -180.0 - az;
    }
    let el = (rx_height - tx_height).atan2(d.norm()).to_degrees();
    (az, el)
}

/// Position-aided candidate subset: the `k` beams nearest the geometric
/// angle of departure computed from the reported vehicle states.
pub fn xapp_candidates(tx: &VehicleState, rx: &VehicleState, cb: &BeamCodebook, k: usize) -> Result<Vec<usize>> {
    let (az, el) = angle_of_departure(
        tx.antenna_position(),
        tx.heading,
        tx.antenna_height,
        rx.antenna_position(),
        rx.antenna_height,
    );
    nearest_beams(cb, az, el, k)
}

/// Default xApp candidate count.
pub fn default_candidates(cardinality: usize) -> usize {
    cardinality.div_ceil(8)
}
