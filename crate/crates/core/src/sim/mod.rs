//! Simulation clock, run configuration and random streams.
//!
//! Time is kept as integer step counters and converted to seconds only where
//! a physical quantity needs it, so a run never accumulates rounding drift.

mod rng;

pub use rng::{mix64, rng_stream, streams, sub_stream, SimRng, SplitMix64};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Run length in seconds.
    pub duration: f64,
    /// Mobility / snapshot granularity in seconds.
    pub mobility_step: f64,
    /// One FR2 slot (120 kHz numerology) in seconds.
    pub slot_duration: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            duration: 300.0,
            mobility_step: 0.1,
            slot_duration: 0.000_125,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "duration must be > 0, got {}",
                self.duration
            )));
        }
        if !(self.mobility_step > 0.0 && self.mobility_step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mobility_step must be > 0, got {}",
                self.mobility_step
            )));
        }
        if !(self.slot_duration > 0.0 && self.slot_duration.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "slot_duration must be > 0, got {}",
                self.slot_duration
            )));
        }
        let ratio = self.mobility_step / self.slot_duration;
        if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::InvalidConfig(format!(
                "mobility_step ({}) must be an integer multiple of slot_duration ({})",
                self.mobility_step, self.slot_duration
            )));
        }
        Ok(())
    }

    pub fn slots_per_step(&self) -> u64 {
        (self.mobility_step / self.slot_duration).round() as u64
    }

    /// Number of mobility steps in the run (at least one).
    pub fn total_steps(&self) -> u64 {
        ((self.duration / self.mobility_step).round() as u64).max(1)
    }

    pub fn clock(&self) -> Clock {
        Clock::new(self.mobility_step)
    }
}

/// Integer-indexed simulation clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clock {
    step_index: u64,
    step: f64,
}

impl Clock {
    pub fn new(step: f64) -> Self {
        Self { step_index: 0, step }
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Current time in seconds, always `step_index * step`.
    pub fn now(&self) -> f64 {
        self.step_index as f64 * self.step
    }

    #[must_use]
    pub fn advance(self) -> Self {
        Self {
            step_index: self.step_index + 1,
            step: self.step,
        }
    }
}
