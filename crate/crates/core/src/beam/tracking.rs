//! Slot-level beam maintenance for one directional link.
//!
//! Time advances in mobility steps of `slots` slots each. Geometry is frozen
//! within a step. A training procedure occupies consecutive slots (possibly
//! spilling into later steps) and the selected beam takes effect once it
//! completes; losing line of sight aborts it.

use super::{gain_unchecked, gradient_track, nearest_beams, sweep, BeamCodebook};
use crate::channel::spectral_efficiency;
use crate::error::Result;

/// Realized-gain drop (dB) that forces re-training, also the gap to peak
/// below which a local search result is rejected.
pub const RETRAIN_DROP_DB: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamPolicy {
    /// Standard procedure: exhaustive sweep for initial access, local
    /// gradient tracking afterwards with an exhaustive fallback.
    Gradient,
    /// Sweep of the `k` beams nearest the reported geometry.
    XApp { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    InitialAccess,
    LosResumed,
    GainDrop,
}

/// What one link looks like during one mobility step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkObservation {
    pub los: bool,
    /// True angle of departure (degrees).
    pub az: f64,
    pub el: f64,
    /// Angle of departure computed from the positions last reported over
    /// the control plane.
    pub reported_az: f64,
    pub reported_el: f64,
    /// SNR with a perfectly aligned transmit beam.
    pub snr_aligned_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLedger {
    pub training_slots: u64,
    pub data_slots: u64,
    /// Sum of spectral efficiency over data slots.
    pub se_slot_sum: f64,
    pub triggers: u64,
    /// Local searches that had to fall back to an exhaustive sweep.
    pub fallbacks: u64,
    /// Control messages exchanged with the controller.
    pub ul_msgs: u64,
    pub dl_msgs: u64,
}

impl TrainingLedger {
    pub fn overhead_fraction(&self) -> f64 {
        let total = self.training_slots + self.data_slots;
        if total == 0 {
            0.0
        } else {
            self.training_slots as f64 / total as f64
        }
    }

    /// Mean spectral efficiency over line-of-sight slots, training slots
    /// counting as zero.
    pub fn mean_se(&self) -> f64 {
        let total = self.training_slots + self.data_slots;
        if total == 0 {
            0.0
        } else {
            self.se_slot_sum / total as f64
        }
    }

    pub fn merge(&mut self, o: &TrainingLedger) {
        self.training_slots += o.training_slots;
        self.data_slots += o.data_slots;
        self.se_slot_sum += o.se_slot_sum;
        self.triggers += o.triggers;
        self.fallbacks += o.fallbacks;
        self.ul_msgs += o.ul_msgs;
        self.dl_msgs += o.dl_msgs;
    }
}

#[derive(Debug, Clone)]
pub struct LinkTracker {
    policy: BeamPolicy,
    beam: Option<usize>,
    /// Gain measured when the current beam was selected.
    trained_gain: f64,
    training_left: u64,
    pending: Option<usize>,
    was_los: bool,
}

impl LinkTracker {
    pub fn new(policy: BeamPolicy) -> Self {
        Self {
            policy,
            beam: None,
            trained_gain: f64::NEG_INFINITY,
            training_left: 0,
            pending: None,
            was_los: false,
        }
    }

    pub fn beam(&self) -> Option<usize> {
        self.beam
    }

    pub fn is_training(&self) -> bool {
        self.training_left > 0
    }

    fn trigger(&self, cb: &BeamCodebook, obs: &LinkObservation) -> Option<Trigger> {
        if self.training_left > 0 {
            return None;
        }
        let beam = match self.beam {
            None => return Some(Trigger::InitialAccess),
            Some(b) => b,
        };
        if !self.was_los {
            return Some(Trigger::LosResumed);
        }
        let reference = cb.peak_gain_db().min(self.trained_gain);
        (gain_unchecked(cb, beam, obs.az, obs.el) < reference - RETRAIN_DROP_DB).then_some(Trigger::GainDrop)
    }

    fn train(
        &self,
        cb: &BeamCodebook,
        obs: &LinkObservation,
        trigger: Trigger,
        ledger: &mut TrainingLedger,
    ) -> Result<(usize, u64)> {
        let measure = |b| gain_unchecked(cb, b, obs.az, obs.el);
        let all: Vec<usize> = (0..cb.cardinality()).collect();
        match self.policy {
            BeamPolicy::Gradient => {
                let start = match (trigger, self.beam) {
                    (Trigger::InitialAccess, _) | (_, None) => {
                        let (b, s) = sweep(&all, measure)?;
                        return Ok((b, u64::from(s)));
                    }
                    (_, Some(b)) => b,
                };
                let (b, s) = gradient_track(cb, start, measure)?;
                if measure(b) < cb.peak_gain_db() - RETRAIN_DROP_DB {
                    ledger.fallbacks += 1;
                    let (b2, s2) = sweep(&all, measure)?;
                    return Ok((b2, u64::from(s) + u64::from(s2)));
                }
                Ok((b, u64::from(s)))
            }
            BeamPolicy::XApp { k } => {
                // one position report up, one candidate list down
                ledger.ul_msgs += 1;
                ledger.dl_msgs += 1;
                let cand = nearest_beams(cb, obs.reported_az, obs.reported_el, k)?;
                let (b, s) = sweep(&cand, measure)?;
                Ok((b, u64::from(s)))
            }
        }
    }

    /// Advance the link by one mobility step of `slots` slots. Returns the
    /// trigger that started a training in this step, if any.
    pub fn step(
        &mut self,
        cb: &BeamCodebook,
        obs: &LinkObservation,
        slots: u64,
        se_cap: f64,
        ledger: &mut TrainingLedger,
    ) -> Result<Option<Trigger>> {
        if !obs.los {
            self.training_left = 0;
            self.pending = None;
            self.was_los = false;
            return Ok(None);
        }
        let trigger = self.trigger(cb, obs);
        self.was_los = true;
        if let Some(t) = trigger {
            let (beam, cost) = self.train(cb, obs, t, ledger)?;
            ledger.triggers += 1;
            self.training_left = cost;
            self.pending = Some(beam);
        }
        let spent = self.training_left.min(slots);
        ledger.training_slots += spent;
        self.training_left -= spent;
        if self.training_left == 0 {
            if let Some(b) = self.pending.take() {
                self.beam = Some(b);
                self.trained_gain = gain_unchecked(cb, b, obs.az, obs.el);
            }
        }
        let rest = slots - spent;
        if rest > 0 {
            if let Some(b) = self.beam {
                let misalign = cb.peak_gain_db() - gain_unchecked(cb, b, obs.az, obs.el);
                let se = spectral_efficiency(obs.snr_aligned_db - misalign, se_cap);
                ledger.data_slots += rest;
                ledger.se_slot_sum += se * rest as f64;
            }
        }
        Ok(trigger)
    }
}
