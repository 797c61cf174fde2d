//! Flat `key = value` configuration.
//!
//! One pair per line, `#` starts a comment, unknown keys are rejected and
//! missing keys keep their defaults. Lists are comma separated.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::channel::LinkBudgetParams;
use crate::error::{Error, Result};
use crate::mac::ResourceGrid;
use crate::ric::LatencyModel;
use crate::scenario::{BlockageProcess, RoadNetwork, ScenarioParams};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Beam,
    Mac,
    Relay,
    Overhead,
    Rsu,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Beam,
        Experiment::Mac,
        Experiment::Relay,
        Experiment::Overhead,
        Experiment::Rsu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Beam => "beam",
            Experiment::Mac => "mac",
            Experiment::Relay => "relay",
            Experiment::Overhead => "overhead",
            Experiment::Rsu => "rsu",
        }
    }

    /// Default sweep axis: codebook cardinality, transmitting CAVs, minimum
    /// SNR (dB) or RSU capacity.
    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            Experiment::Beam => vec![16.0, 64.0, 256.0],
            Experiment::Mac => vec![5.0, 10.0, 20.0, 30.0, 40.0],
            Experiment::Relay | Experiment::Overhead => vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            Experiment::Rsu => vec![2.0, 4.0, 6.0, 8.0, 10.0, f64::INFINITY],
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment '{s}' (expected beam, mac, relay, overhead or rsu)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub sweep: Vec<f64>,
    /// Run length and clock; the seed field is set per run.
    pub sim: SimConfig,
    pub scenario: ScenarioParams,
    pub link: LinkBudgetParams,
    /// Receive array gain of V2V/V2I links (the beam experiment models the
    /// receiver as quasi-omni instead).
    pub rx_gain_db: f64,
    pub latency: LatencyModel,
    pub beam_pairs: usize,
    /// xApp candidates = ceil(cardinality / divisor).
    pub beam_k_divisor: usize,
    pub mac_grid: ResourceGrid,
    pub mac_demand: u32,
    pub mac_interference_range_m: f64,
    pub relay_pairs: usize,
    pub rsu_attach_snr_db: f64,
    pub rsu_epoch_s: f64,
    pub rsu_horizon_epochs: usize,
    /// Largest CAV count solved exactly; the greedy is used above it.
    pub rsu_exact_limit: usize,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        Self {
            experiment,
            seeds: vec![1],
            sweep: experiment.default_sweep(),
            sim: SimConfig::default(),
            scenario: ScenarioParams::default(),
            link: LinkBudgetParams::default(),
            rx_gain_db: 10.0 * 64f64.log10(),
            latency: LatencyModel::default(),
            beam_pairs: 50,
            beam_k_divisor: 8,
            mac_grid: ResourceGrid::default(),
            mac_demand: 10,
            mac_interference_range_m: 150.0,
            relay_pairs: 50,
            rsu_attach_snr_db: 10.0,
            rsu_epoch_s: 1.0,
            rsu_horizon_epochs: 5,
            rsu_exact_limit: 1_000_000,
        }
    }

    /// Cross-field checks after parsing.
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidConfig("sweep axis is empty".into()));
        }
        self.sim.validate()?;
        self.link.validate()?;
        self.scenario.mobility.validate(&self.scenario.road)?;
        for &v in &self.sweep {
            let ok = match self.experiment {
                Experiment::Beam => v >= 4.0 && v.fract() == 0.0 && (v.sqrt().round().powi(2) == v),
                Experiment::Mac => v >= 1.0 && v.fract() == 0.0 && v.is_finite(),
                Experiment::Relay | Experiment::Overhead => v.is_finite(),
                Experiment::Rsu => v == f64::INFINITY || (v >= 0.0 && v.fract() == 0.0),
            };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "sweep value {v} is not valid for the {} experiment",
                    self.experiment.name()
                )));
            }
        }
        let ratio = self.rsu_epoch_s / self.sim.mobility_step;
        if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::InvalidConfig("rsu_epoch_s must be a multiple of mobility_step_s".into()));
        }
        if !self.sim.slots_per_step().is_multiple_of(u64::from(self.mac_grid.period_slots)) {
            return Err(Error::InvalidConfig(
                "a mobility step must hold a whole number of MAC periods".into(),
            ));
        }
        Ok(())
    }

    /// The resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", ");
        let s = &self.scenario;
        let mut t = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(t, "{k} = {v}");
        };
        kv("# experiment", self.experiment.name().to_string());
        kv("seeds", seeds);
        kv("sweep", list(&self.sweep));
        kv("duration_s", format!("{}", self.sim.duration));
        kv("mobility_step_s", format!("{}", self.sim.mobility_step));
        kv("slot_duration_s", format!("{}", self.sim.slot_duration));
        kv("density_veh_per_km", format!("{}", s.density_per_km));
        kv("grid_blocks_x", format!("{}", s.road.n_blocks_x));
        kv("grid_blocks_y", format!("{}", s.road.n_blocks_y));
        kv("block_size_m", format!("{}", s.road.block_size));
        kv("setback_m", format!("{}", s.road.setback));
        kv("speed_min_mps", format!("{}", s.mobility.speed_min));
        kv("speed_max_mps", format!("{}", s.mobility.speed_max));
        kv("lane_offset_m", format!("{}", s.mobility.lane_offset));
        kv("truck_fraction", format!("{}", s.mobility.truck_fraction));
        kv("car_antenna_height_m", format!("{}", s.mobility.car_antenna_height));
        kv("truck_antenna_height_m", format!("{}", s.mobility.truck_antenna_height));
        kv("blockage_p10_s", format!("{}", self.blockage_p10()));
        kv("blockage_p90_s", format!("{}", self.blockage_p90()));
        kv("blockage_clear_mean_s", format!("{}", s.blockage.clear_mean));
        kv("rsu_spacing_m", format!("{}", s.rsu_spacing));
        kv("rsu_height_m", format!("{}", s.rsu_height));
        kv("carrier_freq_ghz", format!("{}", self.link.carrier_freq_ghz));
        kv("eirp_dbm", format!("{}", self.link.eirp_dbm));
        kv("bandwidth_hz", format!("{}", self.link.bandwidth_hz));
        kv("noise_figure_db", format!("{}", self.link.noise_figure_db));
        kv("se_cap", format!("{}", self.link.se_cap));
        kv("rx_gain_db", format!("{}", self.rx_gain_db));
        kv("control_latency_s", format!("{}", self.latency.one_way_latency));
        kv("beam_pairs", self.beam_pairs.to_string());
        kv("beam_k_divisor", self.beam_k_divisor.to_string());
        kv("mac_period_slots", self.mac_grid.period_slots.to_string());
        kv("mac_subchannels", self.mac_grid.subchannels.to_string());
        kv("mac_demand", self.mac_demand.to_string());
        kv("mac_interference_range_m", format!("{}", self.mac_interference_range_m));
        kv("relay_pairs", self.relay_pairs.to_string());
        kv("rsu_attach_snr_db", format!("{}", self.rsu_attach_snr_db));
        kv("rsu_epoch_s", format!("{}", self.rsu_epoch_s));
        kv("rsu_horizon_epochs", self.rsu_horizon_epochs.to_string());
        kv("rsu_exact_limit", self.rsu_exact_limit.to_string());
        t
    }

    fn blockage_p10(&self) -> f64 {
        let b = &self.scenario.blockage;
        (b.blocked_mu - Z90 * b.blocked_sigma).exp()
    }

    fn blockage_p90(&self) -> f64 {
        let b = &self.scenario.blockage;
        (b.blocked_mu + Z90 * b.blocked_sigma).exp()
    }
}

const Z90: f64 = 1.281_551_565_544_600_4;

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("malformed value '{v}'"))
}

fn parse_list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',').map(|x| parse_num(x.trim())).collect()
}

fn positive(x: f64) -> std::result::Result<f64, String> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be > 0, got {x}"))
    }
}

fn non_negative(x: f64) -> std::result::Result<f64, String> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("must be >= 0, got {x}"))
    }
}

fn at_least_one<T: PartialOrd + From<u8> + std::fmt::Display>(x: T) -> std::result::Result<T, String> {
    if x >= T::from(1) {
        Ok(x)
    } else {
        Err(format!("must be >= 1, got {x}"))
    }
}

/// Parse configuration text for `experiment`.
pub fn parse_config(text: &str, experiment: Experiment) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(experiment);
    let mut seen: HashMap<String, usize> = HashMap::new();
    let (mut p10, mut p90, mut clear) = (3.0, 10.0, cfg.scenario.blockage.clear_mean);
    let (mut bx, mut by, mut bs, mut sb) = (4u16, 4u16, 250.0, 10.0);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Config { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(format!("duplicate key '{key}' (first set on line {prev})")));
        }
        let m = &mut cfg.scenario.mobility;
        let r: std::result::Result<(), String> = (|| {
            match key {
                "seeds" => cfg.seeds = parse_list(value)?,
                "sweep" => cfg.sweep = parse_list(value)?,
                "duration_s" => cfg.sim.duration = positive(parse_num(value)?)?,
                "mobility_step_s" => cfg.sim.mobility_step = positive(parse_num(value)?)?,
                "slot_duration_s" => cfg.sim.slot_duration = positive(parse_num(value)?)?,
                "density_veh_per_km" => cfg.scenario.density_per_km = non_negative(parse_num(value)?)?,
                "grid_blocks_x" => bx = at_least_one(parse_num(value)?)?,
                "grid_blocks_y" => by = at_least_one(parse_num(value)?)?,
                "block_size_m" => bs = positive(parse_num(value)?)?,
                "setback_m" => sb = positive(parse_num(value)?)?,
                "speed_min_mps" => m.speed_min = non_negative(parse_num(value)?)?,
                "speed_max_mps" => m.speed_max = non_negative(parse_num(value)?)?,
                "lane_offset_m" => m.lane_offset = non_negative(parse_num(value)?)?,
                "truck_fraction" => m.truck_fraction = non_negative(parse_num(value)?)?,
                "car_antenna_height_m" => m.car_antenna_height = non_negative(parse_num(value)?)?,
                "truck_antenna_height_m" => m.truck_antenna_height = non_negative(parse_num(value)?)?,
                "blockage_p10_s" => p10 = positive(parse_num(value)?)?,
                "blockage_p90_s" => p90 = positive(parse_num(value)?)?,
                "blockage_clear_mean_s" => clear = positive(parse_num(value)?)?,
                "rsu_spacing_m" => cfg.scenario.rsu_spacing = positive(parse_num(value)?)?,
                "rsu_height_m" => cfg.scenario.rsu_height = non_negative(parse_num(value)?)?,
                "carrier_freq_ghz" => cfg.link.carrier_freq_ghz = positive(parse_num(value)?)?,
                "eirp_dbm" => cfg.link.eirp_dbm = parse_num(value)?,
                "bandwidth_hz" => cfg.link.bandwidth_hz = positive(parse_num(value)?)?,
                "noise_figure_db" => cfg.link.noise_figure_db = non_negative(parse_num(value)?)?,
                "se_cap" => cfg.link.se_cap = positive(parse_num(value)?)?,
                "rx_gain_db" => cfg.rx_gain_db = parse_num(value)?,
                "control_latency_s" => cfg.latency = LatencyModel::new(parse_num(value)?).map_err(|e| e.to_string())?,
                "beam_pairs" => cfg.beam_pairs = at_least_one(parse_num(value)?)?,
                "beam_k_divisor" => cfg.beam_k_divisor = at_least_one(parse_num(value)?)?,
                "mac_period_slots" => cfg.mac_grid.period_slots = at_least_one(parse_num(value)?)?,
                "mac_subchannels" => cfg.mac_grid.subchannels = at_least_one(parse_num(value)?)?,
                "mac_demand" => cfg.mac_demand = at_least_one(parse_num(value)?)?,
                "mac_interference_range_m" => cfg.mac_interference_range_m = non_negative(parse_num(value)?)?,
                "relay_pairs" => cfg.relay_pairs = at_least_one(parse_num(value)?)?,
                "rsu_attach_snr_db" => cfg.rsu_attach_snr_db = parse_num(value)?,
                "rsu_epoch_s" => cfg.rsu_epoch_s = positive(parse_num(value)?)?,
                "rsu_horizon_epochs" => cfg.rsu_horizon_epochs = at_least_one(parse_num(value)?)?,
                "rsu_exact_limit" => cfg.rsu_exact_limit = parse_num(value)?,
                _ => return Err(format!("unknown key '{key}'")),
            }
            Ok(())
        })();
        r.map_err(err)?;
    }
    let line_of = |k: &str| seen.get(k).copied();
    let blame = |keys: &[&str], e: Error| match keys.iter().filter_map(|k| line_of(k)).max() {
        Some(line) => Error::Config {
            line,
            message: e.to_string(),
        },
        None => e,
    };
    cfg.scenario.blockage = BlockageProcess::from_deciles(p10, p90, clear)
        .map_err(|e| blame(&["blockage_p10_s", "blockage_p90_s", "blockage_clear_mean_s"], e))?;
    cfg.scenario.road = RoadNetwork::manhattan(bx, by, bs, sb)
        .map_err(|e| blame(&["grid_blocks_x", "grid_blocks_y", "block_size_m", "setback_m"], e))?;
    cfg.validate()?;
    Ok(cfg)
}
