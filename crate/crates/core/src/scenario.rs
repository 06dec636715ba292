//! Problem instances: array geometry, user channels, radar targets and
//! thresholds, plus generation from a TOML template.
//!
//! Internal power unit is the milliwatt. Template files give powers in dBm
//! (transmit power, noise) and the cross-interference threshold in watts.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::linalg::{norm_sqr, CMatrix, C64};

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

fn check_angle(field: &str, theta: f64) -> Result<(), ScenarioError> {
    if theta.is_finite() && theta > 0.0 && theta < 180.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(
            field,
            format!("angle {theta} outside (0, 180) degrees"),
        ))
    }
}

/// Uniform linear array response with half-wavelength spacing, phase
/// reference at the array centre.
pub fn steering_vector(theta_deg: f64, n: usize) -> Result<Vec<C64>, ScenarioError> {
    check_angle("theta", theta_deg)?;
    if n < 1 {
        return Err(ScenarioError::invalid("n_antennas", "must be at least 1"));
    }
    let cos = theta_deg.to_radians().cos();
    Ok((0..n)
        .map(|k| {
            let offset = (2.0 * k as f64 - n as f64 + 1.0) / 2.0;
            C64::from_polar(1.0, PI * offset * cos)
        })
        .collect())
}

/// `alpha · a(θ) a(θ)ᴴ`.
pub fn target_response(theta_deg: f64, alpha: f64, n: usize) -> Result<CMatrix, ScenarioError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ScenarioError::invalid(
            "alpha",
            format!("reflection coefficient {alpha} must be positive"),
        ));
    }
    Ok(CMatrix::outer(&steering_vector(theta_deg, n)?, alpha))
}

/// Large-scale attenuation in dB (urban macro model, distance in metres,
/// carrier in GHz).
pub fn path_loss_db(distance_m: f64, carrier_ghz: f64, shadowing_db: f64) -> f64 {
    28.0 + 22.0 * distance_m.log10() + 20.0 * carrier_ghz.log10() + shadowing_db
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub carrier_ghz: f64,
    /// Rician K-factor, linear.
    pub rician_factor: f64,
    /// Variance of the log-normal shadowing term, in dB².
    pub shadowing_var_db2: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            carrier_ghz: 71.0,
            rician_factor: 100.0,
            shadowing_var_db2: 4.0,
        }
    }
}

/// Draws one Rician channel (amplitude in √mW units) for a user at LoS angle
/// `beta_deg` and distance `distance_m`.
pub fn sample_channel<R: Rng + ?Sized>(
    beta_deg: f64,
    distance_m: f64,
    n: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<C64>, ScenarioError> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(ScenarioError::invalid(
            "distance",
            format!("{distance_m} must be positive"),
        ));
    }
    let los = steering_vector(beta_deg, n)?;
    let shadowing = if params.shadowing_var_db2 > 0.0 {
        Normal::new(0.0, params.shadowing_var_db2.sqrt())
            .expect("finite standard deviation")
            .sample(rng)
    } else {
        0.0
    };
    let gain = 10f64.powf(-path_loss_db(distance_m, params.carrier_ghz, shadowing) / 20.0);
    let half = Normal::new(0.0, 0.5f64.sqrt()).expect("finite standard deviation");
    let k = params.rician_factor;
    let (w_los, w_nlos) = if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    Ok(los
        .into_iter()
        .map(|a| {
            let nlos = C64::new(half.sample(rng), half.sample(rng));
            (a * w_los + nlos * w_nlos) * gain
        })
        .collect())
}

/// A fully specified instance in natural units (mW, linear ratios).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_rf_chains: usize,
    pub n_targets: usize,
    pub n_sched_targets: usize,
    pub channels: Vec<Vec<C64>>,
    pub noise_power: f64,
    pub target_angles: Vec<f64>,
    pub target_coeffs: Vec<f64>,
    pub sinr_thresholds: Vec<f64>,
    pub cross_interference_threshold: f64,
    pub tx_power: f64,
    pub phase_bits: u32,
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(
            field,
            format!("{v} must be positive and finite"),
        ))
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let count = |field: &str, v: usize| {
            if v == 0 {
                Err(ScenarioError::invalid(field, "must be at least 1"))
            } else {
                Ok(())
            }
        };
        count("n_antennas", self.n_antennas)?;
        count("n_users", self.n_users)?;
        count("n_rf_chains", self.n_rf_chains)?;
        count("n_targets", self.n_targets)?;
        count("n_sched_targets", self.n_sched_targets)?;
        count("phase_bits", self.phase_bits as usize)?;
        if self.n_rf_chains > self.n_users {
            return Err(ScenarioError::invalid(
                "n_rf_chains",
                "exceeds the number of users",
            ));
        }
        if self.n_sched_targets > self.n_rf_chains.min(self.n_targets) {
            return Err(ScenarioError::invalid(
                "n_sched_targets",
                "exceeds min(rf chains, targets)",
            ));
        }
        if self.channels.len() != self.n_users {
            return Err(ScenarioError::invalid(
                "channels",
                "one channel per user required",
            ));
        }
        for (u, h) in self.channels.iter().enumerate() {
            if h.len() != self.n_antennas {
                return Err(ScenarioError::invalid(
                    format!("channels[{u}]"),
                    "length differs from n_antennas",
                ));
            }
            if h.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(ScenarioError::invalid(
                    format!("channels[{u}]"),
                    "non-finite entry",
                ));
            }
        }
        if self.target_angles.len() != self.n_targets {
            return Err(ScenarioError::invalid(
                "target_angles",
                "one angle per target required",
            ));
        }
        for &a in &self.target_angles {
            check_angle("target_angles", a)?;
        }
        if self.target_coeffs.len() != self.n_targets {
            return Err(ScenarioError::invalid(
                "target_coeffs",
                "one coefficient per target required",
            ));
        }
        for &a in &self.target_coeffs {
            positive("target_coeffs", a)?;
        }
        if self.sinr_thresholds.len() != self.n_users {
            return Err(ScenarioError::invalid(
                "sinr_thresholds",
                "one threshold per user required",
            ));
        }
        for &g in &self.sinr_thresholds {
            positive("sinr_thresholds", g)?;
        }
        positive("noise_power", self.noise_power)?;
        positive("tx_power", self.tx_power)?;
        positive(
            "cross_interference_threshold",
            self.cross_interference_threshold,
        )?;
        Ok(())
    }

    /// Divides channels by the noise amplitude and precomputes the channel
    /// and target Gram matrices.
    pub fn normalize(&self) -> Result<NormalizedScenario, ScenarioError> {
        self.validate()?;
        let sigma = self.noise_power.sqrt();
        let channels: Vec<Vec<C64>> = self
            .channels
            .iter()
            .map(|h| h.iter().map(|x| x / sigma).collect())
            .collect();
        let channel_grams = channels.iter().map(|h| CMatrix::outer(h, 1.0)).collect();
        let target_grams = self
            .target_angles
            .iter()
            .zip(&self.target_coeffs)
            .map(|(&theta, &alpha)| target_response(theta, alpha, self.n_antennas))
            .collect::<Result<_, _>>()?;
        Ok(NormalizedScenario {
            n_antennas: self.n_antennas,
            n_users: self.n_users,
            n_rf_chains: self.n_rf_chains,
            n_targets: self.n_targets,
            n_sched_targets: self.n_sched_targets,
            channels,
            channel_grams,
            target_angles: self.target_angles.clone(),
            target_coeffs: self.target_coeffs.clone(),
            target_grams,
            sinr_thresholds: self.sinr_thresholds.clone(),
            cross_interference_threshold: self.cross_interference_threshold,
            tx_power: self.tx_power,
            phase_bits: self.phase_bits,
        })
    }
}

/// A scenario with noise-normalized channels (unit noise power).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedScenario {
    pub n_antennas: usize,
    pub n_users: usize,
    pub n_rf_chains: usize,
    pub n_targets: usize,
    pub n_sched_targets: usize,
    pub channels: Vec<Vec<C64>>,
    pub channel_grams: Vec<CMatrix>,
    pub target_angles: Vec<f64>,
    pub target_coeffs: Vec<f64>,
    pub target_grams: Vec<CMatrix>,
    pub sinr_thresholds: Vec<f64>,
    pub cross_interference_threshold: f64,
    pub tx_power: f64,
    pub phase_bits: u32,
}

impl NormalizedScenario {
    /// The same instance viewed as a raw scenario with unit noise power.
    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            n_antennas: self.n_antennas,
            n_users: self.n_users,
            n_rf_chains: self.n_rf_chains,
            n_targets: self.n_targets,
            n_sched_targets: self.n_sched_targets,
            channels: self.channels.clone(),
            noise_power: 1.0,
            target_angles: self.target_angles.clone(),
            target_coeffs: self.target_coeffs.clone(),
            sinr_thresholds: self.sinr_thresholds.clone(),
            cross_interference_threshold: self.cross_interference_threshold,
            tx_power: self.tx_power,
            phase_bits: self.phase_bits,
        }
    }

    pub fn channel_gain(&self, u: usize) -> f64 {
        norm_sqr(&self.channels[u])
    }
}

/// SINR threshold given once for all users or per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    Common(f64),
    PerUser(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub count: usize,
    pub sinr_threshold: Thresholds,
    /// Fixed LoS angles; drawn at random with `los_separation_deg` spacing
    /// when absent.
    #[serde(default)]
    pub los_angles_deg: Option<Vec<f64>>,
    #[serde(default = "default_separation")]
    pub los_separation_deg: f64,
    #[serde(default = "default_angle_range")]
    pub los_range_deg: [f64; 2],
    #[serde(default)]
    pub distances_m: Option<Vec<f64>>,
    #[serde(default = "default_distance_range")]
    pub distance_range_m: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub count: usize,
    pub scheduled: usize,
    #[serde(default)]
    pub angles_deg: Option<Vec<f64>>,
    #[serde(default = "default_angle_range")]
    pub angle_range_deg: [f64; 2],
    #[serde(default)]
    pub coeffs: Option<Vec<f64>>,
    #[serde(default = "default_coeff_range")]
    pub coeff_range: [f64; 2],
}

fn default_separation() -> f64 {
    10.0
}
fn default_angle_range() -> [f64; 2] {
    [20.0, 160.0]
}
fn default_distance_range() -> [f64; 2] {
    [20.0, 80.0]
}
fn default_coeff_range() -> [f64; 2] {
    [0.04, 0.08]
}

/// Scenario template as stored on disk. Fixed values are used verbatim;
/// missing optional arrays are sampled per realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub version: u32,
    pub seed: u64,
    pub antennas: usize,
    pub phase_bits: u32,
    pub rf_chains: usize,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub cross_interference_threshold_w: f64,
    pub channel: ChannelParams,
    pub users: UserSection,
    pub targets: TargetSection,
}

pub const TEMPLATE_VERSION: u32 = 1;

fn uniform<R: Rng + ?Sized>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

impl ScenarioTemplate {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let t: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("template serializes")
    }

    fn check(&self) -> Result<(), ScenarioError> {
        if self.version != TEMPLATE_VERSION {
            return Err(ScenarioError::invalid(
                "version",
                format!("unsupported version {}", self.version),
            ));
        }
        let u = self.users.count;
        if let Some(a) = &self.users.los_angles_deg {
            if a.len() != u {
                return Err(ScenarioError::invalid(
                    "users.los_angles_deg",
                    "length differs from users.count",
                ));
            }
        } else {
            let [lo, hi] = self.users.los_range_deg;
            let span = self.users.los_separation_deg * (u.saturating_sub(1)) as f64;
            if !(lo > 0.0 && hi < 180.0 && hi - span >= lo) {
                return Err(ScenarioError::invalid(
                    "users.los_range_deg",
                    "range too narrow for the requested separation",
                ));
            }
        }
        if let Some(d) = &self.users.distances_m {
            if d.len() != u {
                return Err(ScenarioError::invalid(
                    "users.distances_m",
                    "length differs from users.count",
                ));
            }
        }
        if let Thresholds::PerUser(v) = &self.users.sinr_threshold {
            if v.len() != u {
                return Err(ScenarioError::invalid(
                    "users.sinr_threshold",
                    "length differs from users.count",
                ));
            }
        }
        let t = self.targets.count;
        if self
            .targets
            .angles_deg
            .as_ref()
            .is_some_and(|a| a.len() != t)
        {
            return Err(ScenarioError::invalid(
                "targets.angles_deg",
                "length differs from targets.count",
            ));
        }
        if self.targets.coeffs.as_ref().is_some_and(|a| a.len() != t) {
            return Err(ScenarioError::invalid(
                "targets.coeffs",
                "length differs from targets.count",
            ));
        }
        positive("channel.carrier_ghz", self.channel.carrier_ghz)?;
        if !(self.channel.rician_factor >= 0.0) {
            return Err(ScenarioError::invalid(
                "channel.rician_factor",
                "must be non-negative",
            ));
        }
        if !(self.channel.shadowing_var_db2 >= 0.0 && self.channel.shadowing_var_db2.is_finite()) {
            return Err(ScenarioError::invalid(
                "channel.shadowing_var_db2",
                "must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn sinr_thresholds(&self) -> Vec<f64> {
        match &self.users.sinr_threshold {
            Thresholds::Common(g) => vec![*g; self.users.count],
            Thresholds::PerUser(v) => v.clone(),
        }
    }

    /// Draws a concrete scenario. The same seed always gives the same
    /// scenario; transmit power and thresholds do not affect the draws.
    pub fn realize(&self, seed: u64) -> Result<Scenario, ScenarioError> {
        self.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = self.users.count;
        let betas = match &self.users.los_angles_deg {
            Some(a) => a.clone(),
            None => {
                let sep = self.users.los_separation_deg;
                let [lo, hi] = self.users.los_range_deg;
                let first = uniform(&mut rng, [lo, hi - sep * (u - 1) as f64]);
                (0..u).map(|k| first + sep * k as f64).collect()
            }
        };
        let distances = match &self.users.distances_m {
            Some(d) => d.clone(),
            None => (0..u)
                .map(|_| uniform(&mut rng, self.users.distance_range_m))
                .collect(),
        };
        let t = self.targets.count;
        let target_angles = match &self.targets.angles_deg {
            Some(a) => a.clone(),
            None => (0..t)
                .map(|_| uniform(&mut rng, self.targets.angle_range_deg))
                .collect(),
        };
        let target_coeffs = match &self.targets.coeffs {
            Some(a) => a.clone(),
            None => (0..t)
                .map(|_| uniform(&mut rng, self.targets.coeff_range))
                .collect(),
        };
        let channels = betas
            .iter()
            .zip(&distances)
            .map(|(&b, &d)| sample_channel(b, d, self.antennas, &self.channel, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        let scenario = Scenario {
            n_antennas: self.antennas,
            n_users: u,
            n_rf_chains: self.rf_chains,
            n_targets: t,
            n_sched_targets: self.targets.scheduled,
            channels,
            noise_power: dbm_to_mw(self.noise_power_dbm),
            target_angles,
            target_coeffs,
            sinr_thresholds: self.sinr_thresholds(),
            cross_interference_threshold: self.cross_interference_threshold_w * 1e3,
            tx_power: dbm_to_mw(self.tx_power_dbm),
            phase_bits: self.phase_bits,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Loads a template and realizes it with the seed stored in the file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let t = ScenarioTemplate::load(path)?;
    t.realize(t.seed)
}
