//! FR2 link budget: urban V2V pathloss, thermal noise, SNR and the capped
//! Shannon spectral-efficiency mapping.
//!
//! Pathloss uses the 3GPP TR 37.885 urban V2V forms:
//!
//! | state | pathloss (dB), d in m, fc in GHz        |
//! |-------|-----------------------------------------|
//! | LOS   | 38.77 + 16.7 log10(d) + 18.2 log10(fc)  |
//! | NLOS  | 36.85 + 30.0 log10(d) + 18.9 log10(fc)  |
//!
//! Fast fading is not modelled; SNR is a deterministic function of geometry
//! and blockage state.

use crate::scenario::LinkState;

/// Distances below this are clamped before evaluating the pathloss.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudgetParams {
    pub carrier_freq_ghz: f64,
    /// Includes the transmit array gain.
    pub eirp_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Spectral-efficiency ceiling in bits/s/Hz.
    pub se_cap: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 28.0,
            eirp_dbm: 23.0,
            bandwidth_hz: 100e6,
            noise_figure_db: 9.0,
            se_cap: 7.4,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.carrier_freq_ghz > 0.0 && self.bandwidth_hz > 0.0 && self.se_cap > 0.0;
        if ok && self.eirp_dbm.is_finite() && self.noise_figure_db.is_finite() {
            Ok(())
        } else {
            Err(crate::Error::InvalidConfig(format!(
                "link budget needs carrier_freq, bandwidth and se_cap > 0: {self:?}"
            )))
        }
    }

    pub fn noise_dbm(&self) -> f64 {
        noise_power_dbm(self.bandwidth_hz, self.noise_figure_db)
    }

    /// SNR of a link at `distance` metres in `state`, with `rx_gain_db` of
    /// receive array gain.
    pub fn snr_at(&self, distance: f64, state: LinkState, rx_gain_db: f64) -> f64 {
        link_snr_db(self, pathloss_db(distance, self.carrier_freq_ghz, state), rx_gain_db)
    }
}

/// One evaluated link between two endpoints at a single time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSnapshot {
    pub a: u32,
    pub b: u32,
    pub distance: f64,
    pub state: LinkState,
    pub snr_db: f64,
    pub spectral_efficiency: f64,
}

impl LinkSnapshot {
    pub fn evaluate(
        params: &LinkBudgetParams,
        a: u32,
        b: u32,
        distance: f64,
        state: LinkState,
        rx_gain_db: f64,
    ) -> Self {
        let snr_db = params.snr_at(distance, state, rx_gain_db);
        Self {
            a,
            b,
            distance,
            state,
            snr_db,
            spectral_efficiency: spectral_efficiency(snr_db, params.se_cap),
        }
    }
}

pub fn pathloss_db(distance: f64, fc_ghz: f64, state: LinkState) -> f64 {
    let d = distance.max(MIN_DISTANCE_M);
    match state {
        LinkState::Los => 38.77 + 16.7 * d.log10() + 18.2 * fc_ghz.log10(),
        LinkState::Nlos => 36.85 + 30.0 * d.log10() + 18.9 * fc_ghz.log10(),
    }
}

/// Thermal noise power in dBm: -174 dBm/Hz + 10 log10(B) + NF.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn link_snr_db(params: &LinkBudgetParams, pathloss_db: f64, rx_gain_db: f64) -> f64 {
    params.eirp_dbm + rx_gain_db - pathloss_db - params.noise_dbm()
}

/// `min(log2(1 + snr), cap)`, never negative.
pub fn spectral_efficiency(snr_db: f64, se_cap: f64) -> f64 {
    let linear = 10f64.powf(snr_db / 10.0);
    (1.0 + linear).log2().clamp(0.0, se_cap)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FC: f64 = 28.0;

    #[test]
    fn pathloss_at_one_metre_is_frequency_term() {
        let pl = pathloss_db(1.0, FC, LinkState::Los);
        assert!((pl - (38.77 + 18.2 * 28f64.log10())).abs() < 1e-12);
        assert!((pl - 65.11).abs() < 0.005);
    }

    #[test]
    fn pathloss_hand_values() {
        // 38.77 + 16.7*2 + 18.2*1.447158 = 98.5083
        assert!((pathloss_db(100.0, FC, LinkState::Los) - 98.51).abs() < 0.005);
        // 36.85 + 30*2 + 18.9*1.447158 = 124.2013
        assert!((pathloss_db(100.0, FC, LinkState::Nlos) - 124.20).abs() < 0.005);
    }

    #[test]
    fn pathloss_clamps_below_one_metre() {
        for s in [LinkState::Los, LinkState::Nlos] {
            assert_eq!(pathloss_db(0.0, FC, s), pathloss_db(1.0, FC, s));
            assert_eq!(pathloss_db(0.3, FC, s), pathloss_db(1.0, FC, s));
        }
    }

    #[test]
    fn noise_power_examples() {
        assert_eq!(noise_power_dbm(1.0, 0.0), -174.0);
        assert!((noise_power_dbm(100e6, 9.0) + 85.0).abs() < 1e-9);
        assert!((noise_power_dbm(400e6, 7.0) + 81.0).abs() < 0.05);
    }

    #[test]
    fn snr_examples() {
        let p = LinkBudgetParams::default();
        assert!((link_snr_db(&p, 23.0, 0.0) - 85.0).abs() < 1e-9);
        let snr = link_snr_db(&p, 98.51, 18.06);
        assert!((snr - 27.55).abs() < 1e-9);
        let snr = link_snr_db(&p, f64::INFINITY, 0.0);
        assert_eq!(snr, f64::NEG_INFINITY);
        assert_eq!(spectral_efficiency(snr, p.se_cap), 0.0);
    }

    #[test]
    fn spectral_efficiency_examples() {
        assert!((spectral_efficiency(0.0, 7.4) - 1.0).abs() < 1e-12);
        assert!((spectral_efficiency(10.0, 7.4) - 11f64.log2()).abs() < 1e-12);
        assert!((spectral_efficiency(10.0, 7.4) - 3.4594).abs() < 1e-4);
        assert_eq!(spectral_efficiency(40.0, 7.4), 7.4);
    }

    #[test]
    fn snapshot_se_within_cap() {
        let p = LinkBudgetParams::default();
        for d in [0.5, 3.0, 40.0, 900.0] {
            for s in [LinkState::Los, LinkState::Nlos] {
                let l = LinkSnapshot::evaluate(&p, 0, 1, d, s, 18.06);
                assert!((0.0..=p.se_cap).contains(&l.spectral_efficiency));
            }
        }
    }
}
