//! Seeded scenario generation, unit conversions and the JSON scenario
//! configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{ArrayGeometry, MultipathParams, OfdmNumerology, ParamKind, PathParams, ResourceElement};
use crate::fim::{ResourceGrid, SensingProblem, WeightMatrix};
use crate::optim::PowerConstraints;
use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Per-symbol power multiplier; `∞` disables the per-symbol caps. Written
/// as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(pub f64);

impl Alpha {
    pub const INFINITE: Alpha = Alpha(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl std::fmt::Display for Alpha {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v > 0.0 => Ok(Alpha(v)),
            Raw::Num(v) => Err(serde::de::Error::custom(format!("alpha must be positive, got {v}"))),
            Raw::Text(t) if t == "inf" => Ok(Alpha::INFINITE),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("alpha must be a number or \"inf\", got {t:?}"))),
        }
    }
}

/// Everything needed to draw random scenarios. Defaults are the desk-scale
/// setup: 8×8 arrays at 3 GHz with 15 kHz spacing, a 16×4 grid, three paths,
/// `P = 10`, −10 dB SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub subcarrier_spacing_hz: f64,
    pub carrier_frequency_hz: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub subcarriers: usize,
    pub symbols: usize,
    /// Explicit `(subcarrier, symbol)` list replacing the rectangular grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resource_elements: Option<Vec<(usize, usize)>>,
    pub paths: usize,
    pub path_length_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    pub angle_deg: [f64; 2],
    pub power: f64,
    pub snr_db: f64,
    /// Explicit noise variance overriding `snr_db`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    pub alpha: Alpha,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            subcarrier_spacing_hz: 15e3,
            carrier_frequency_hz: 3e9,
            n_tx: 8,
            n_rx: 8,
            subcarriers: 16,
            symbols: 4,
            resource_elements: None,
            paths: 3,
            path_length_m: [10.0, 800.0],
            velocity_mps: [0.0, 80.0],
            angle_deg: [-90.0, 90.0],
            power: 10.0,
            snr_db: -10.0,
            noise_variance: None,
            alpha: Alpha(50.0),
        }
    }
}

fn config_error(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{key}`: {msg}"))
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("subcarrier_spacing_hz", self.subcarrier_spacing_hz), ("carrier_frequency_hz", self.carrier_frequency_hz), ("power", self.power)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(key, format!("must be positive and finite, got {v}")));
            }
        }
        for (key, v) in [("n_tx", self.n_tx), ("n_rx", self.n_rx), ("paths", self.paths)] {
            if v == 0 {
                return Err(config_error(key, "must be at least 1"));
            }
        }
        match &self.resource_elements {
            Some(list) if list.is_empty() => return Err(config_error("resource_elements", "list is empty")),
            None if self.subcarriers == 0 || self.symbols == 0 => {
                return Err(config_error("subcarriers", "grid needs at least one subcarrier and one symbol"))
            }
            _ => {}
        }
        for (key, [lo, hi]) in [("path_length_m", self.path_length_m), ("velocity_mps", self.velocity_mps), ("angle_deg", self.angle_deg)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(config_error(key, format!("range [{lo}, {hi}] is not ordered")));
            }
        }
        if self.path_length_m[0] < 0.0 {
            return Err(config_error("path_length_m", "lengths must be non-negative"));
        }
        if self.angle_deg[0] <= -90.0 - 1e-9 || self.angle_deg[1] >= 90.0 + 1e-9 {
            return Err(config_error("angle_deg", "angles must lie within [-90, 90]"));
        }
        if !self.snr_db.is_finite() {
            return Err(config_error("snr_db", "must be finite"));
        }
        if let Some(v) = self.noise_variance {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error("noise_variance", format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn numerology(&self) -> Result<OfdmNumerology> {
        OfdmNumerology::new(self.subcarrier_spacing_hz, self.carrier_frequency_hz)
    }

    pub fn geometry(&self) -> Result<ArrayGeometry> {
        ArrayGeometry::new(self.n_tx, self.n_rx)
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance.unwrap_or_else(|| noise_variance(self.power, self.snr_db))
    }

    pub fn is_rectangular(&self) -> bool {
        self.resource_elements.is_none()
    }

    pub fn grid(&self) -> Result<ResourceGrid> {
        match &self.resource_elements {
            Some(list) => ResourceGrid::uniform(
                list.iter().map(|&(n, k)| ResourceElement::new(n, k)).collect(),
                self.noise_variance(),
            ),
            None => ResourceGrid::rectangular(self.subcarriers, self.symbols, self.noise_variance()),
        }
    }

    pub fn num_resource_elements(&self) -> usize {
        self.resource_elements.as_ref().map_or(self.subcarriers * self.symbols, Vec::len)
    }
}

/// `σ² = P / 10^(SNR_dB/10)`.
pub fn noise_variance(power: f64, snr_db: f64) -> f64 {
    power / 10f64.powf(snr_db / 10.0)
}

/// `T_s` on the delay block, `f_0` on the Doppler block, 1 elsewhere.
pub fn default_weight_matrix(num_paths: usize, num: &OfdmNumerology) -> WeightMatrix {
    let mut diag = vec![1.0; 6 * num_paths];
    for l in 0..num_paths {
        diag[ParamKind::Delay.block() * num_paths + l] = num.symbol_duration();
        diag[ParamKind::Doppler.block() * num_paths + l] = num.subcarrier_spacing();
    }
    WeightMatrix::new(diag).expect("positive numerology")
}

pub fn delay_from_length(length_m: f64) -> f64 {
    length_m / SPEED_OF_LIGHT
}

pub fn doppler_from_velocity(velocity_mps: f64, carrier_frequency_hz: f64) -> f64 {
    velocity_mps * carrier_frequency_hz / SPEED_OF_LIGHT
}

/// A drawn scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: MultipathParams,
    pub grid: ResourceGrid,
    pub constraints: PowerConstraints,
    pub numerology: OfdmNumerology,
    pub geometry: ArrayGeometry,
    pub weight: WeightMatrix,
}

impl Scenario {
    pub fn problem(&self) -> Result<SensingProblem> {
        SensingProblem::new(self.params.clone(), self.grid.clone(), self.numerology, self.geometry, self.weight.clone())
    }

    /// Same scenario with caps `α·P`.
    pub fn with_alpha(&self, alpha: Alpha) -> Result<Scenario> {
        let constraints = PowerConstraints::new(self.constraints.power, alpha.value(), self.grid.len())?;
        Ok(Scenario { constraints, ..self.clone() })
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws gains from the standard complex normal (unit-variance real and
/// imaginary parts), path lengths, speeds and angles uniformly over the
/// configured ranges, and converts them to delays, Dopplers and radians.
pub fn generate_scenario<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Scenario> {
    cfg.validate()?;
    let numerology = cfg.numerology()?;
    let geometry = cfg.geometry()?;
    let paths = (0..cfg.paths)
        .map(|_| {
            let gain_re: f64 = rng.sample(StandardNormal);
            let gain_im: f64 = rng.sample(StandardNormal);
            let length = uniform(rng, cfg.path_length_m);
            let speed = uniform(rng, cfg.velocity_mps);
            let aoa = uniform(rng, cfg.angle_deg).to_radians();
            let aod = uniform(rng, cfg.angle_deg).to_radians();
            PathParams {
                gain_re,
                gain_im,
                delay: delay_from_length(length),
                doppler: doppler_from_velocity(speed, cfg.carrier_frequency_hz),
                aoa,
                aod,
            }
        })
        .collect();
    let params = MultipathParams::new(paths)?;
    let grid = cfg.grid()?;
    let constraints = PowerConstraints::new(cfg.power, cfg.alpha.value(), grid.len())?;
    let weight = default_weight_matrix(cfg.paths, &numerology);
    Ok(Scenario { params, grid, constraints, numerology, geometry, weight })
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Scenario = 0,
    InitialPoint = 1,
    Design = 2,
    Evaluation = 3,
}

/// Generator for `(seed, index, purpose)`.
pub fn substream(seed: u64, index: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 8) | stream as u64);
    rng
}
