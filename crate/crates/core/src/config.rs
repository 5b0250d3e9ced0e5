//! Scenario files and shipped geometry presets.
//!
//! Scenarios are TOML. Powers are given in dBm, gains and Rician factors in
//! dB and angular spreads in degrees; everything is converted to linear units
//! and radians once, when the file is parsed.
//!
//! ```toml
//! name = "desk-scale"
//! seed = 7
//! trials = 200
//! schemes = ["bd", "mtzf", "bd-random", "mtzf-random"]
//!
//! [system]
//! bs_array = [2, 8]
//! ris_array = [8, 3]
//! users_per_group = 4
//! transmit_power_dbm = 30.0
//! noise_power_dbm = -114.0
//!
//! [geometry]
//! preset = "fig2-like-g4"
//! num_groups = 3
//!
//! [sweep]
//! axis = "transmit_power_dbm"
//! values = [20.0, 25.0, 30.0, 35.0, 40.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bd::BdSettings;
use crate::channel::{db_to_linear, dbm_to_watts, ChannelParams, Geometry, LinkParams, Position3D, UpaShape};
use crate::error::{Error, Result};
use crate::mtzf::MtzfSettings;
use crate::sdr::SdrSettings;
use crate::system::SystemConfig;

/// Position of the single-RIS reference deployment, meters.
pub const SINGLE_RIS_POSITION: [f64; 3] = [100.0, 100.0, 5.0];

pub const BS_HEIGHT_M: f64 = 15.0;
pub const RIS_HEIGHT_M: f64 = 5.0;
pub const USER_HEIGHT_M: f64 = 1.0;
/// Distance between a group center and its RIS, away from the BS.
pub const RIS_OFFSET_M: f64 = 10.0;
pub const DEFAULT_USER_RADIUS_M: f64 = 5.0;
pub const DEFAULT_NOISE_DBM: f64 = -114.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// BD beamforming with SDR-designed phases (alternating loop).
    Bd,
    /// MTZF beamforming with loss-minimizing phases.
    Mtzf,
    /// BD beamforming with uniformly random phases.
    BdRandom,
    /// MTZF beamforming with uniformly random phases.
    MtzfRandom,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [Self::Bd, Self::Mtzf, Self::BdRandom, Self::MtzfRandom];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bd => "bd",
            Self::Mtzf => "mtzf",
            Self::BdRandom => "bd-random",
            Self::MtzfRandom => "mtzf-random",
        }
    }

    /// Stable index used to derive per-scheme random streams.
    pub fn index(self) -> u64 {
        match self {
            Self::Bd => 0,
            Self::Mtzf => 1,
            Self::BdRandom => 2,
            Self::MtzfRandom => 3,
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TransmitPowerDbm,
    /// Total BS antennas; the horizontal array size is kept.
    NAntennas,
    /// Users in every group.
    UsersPerGroup,
    /// Elements of every RIS; the vertical array size is kept.
    RisElements,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::TransmitPowerDbm => "transmit_power_dbm",
            Self::NAntennas => "n_antennas",
            Self::UsersPerGroup => "users_per_group",
            Self::RisElements => "ris_elements",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Either one value for every group or one value per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerGroup<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Clone> PerGroup<T> {
    fn expand(&self, groups: usize, what: &str) -> Result<Vec<T>> {
        match self {
            Self::All(v) => Ok(vec![v.clone(); groups]),
            Self::Each(v) if v.len() == groups => Ok(v.clone()),
            Self::Each(v) => Err(Error::Config(format!(
                "{what}: {} entries for {groups} groups",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    /// `[n_ver, n_hor]`.
    pub bs_array: [usize; 2],
    /// `[m_ver, m_hor]`, for every RIS or per group.
    pub ris_array: PerGroup<[usize; 2]>,
    pub users_per_group: PerGroup<usize>,
    pub transmit_power_dbm: f64,
    #[serde(default = "default_noise")]
    pub noise_power_dbm: f64,
    /// Per-user noise powers `[g][k]`, dBm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_overrides_dbm: Option<Vec<Vec<f64>>>,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_DBM
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// Name of a shipped preset; explicit fields below override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Keep only the first groups of the preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_groups: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_centers: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ris: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_radius: Option<f64>,
}

/// Overrides of one link class; unset fields keep the defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_loss_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rician_factor_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_nlos_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_spread_ver_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_spread_hor_deg: Option<f64>,
}

impl LinkSpec {
    fn apply(&self, mut base: LinkParams) -> LinkParams {
        if let Some(v) = self.path_loss_exponent {
            base.path_loss_exponent = v;
        }
        if let Some(v) = self.rician_factor_db {
            base.rician_factor = db_to_linear(v);
        }
        if let Some(v) = self.num_nlos_paths {
            base.num_nlos_paths = v;
        }
        if let Some(v) = self.reference_loss_db {
            base.reference_loss = db_to_linear(v);
        }
        if let Some(v) = self.angular_spread_ver_deg {
            base.angular_spread_ver = v.to_radians();
        }
        if let Some(v) = self.angular_spread_hor_deg {
            base.angular_spread_hor = v.to_radians();
        }
        base
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub bs_user: LinkSpec,
    #[serde(default)]
    pub ris_user: LinkSpec,
    #[serde(default)]
    pub bs_ris: LinkSpec,
}

/// A scenario file as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<SchemeKind>,
    pub system: SystemSpec,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub bd: BdSettings,
    #[serde(default)]
    pub sdr: SdrSettings,
    #[serde(default)]
    pub mtzf: MtzfSettings,
}

/// A parsed, validated experiment: base system, sweep and schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub schemes: Vec<SchemeKind>,
    pub base: SystemConfig,
    pub sweep: SweepSpec,
    /// The file this scenario came from, embedded in JSON output.
    pub source: ScenarioFile,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("malformed scenario: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Converts units, resolves the geometry and checks every sweep point.
    pub fn resolve(&self) -> Result<Scenario> {
        let geometry = self.geometry.resolve()?;
        let groups = geometry.group_centers.len();
        let sys = &self.system;
        let bs_array = UpaShape::new(sys.bs_array[0], sys.bs_array[1])?;
        let ris_arrays = sys
            .ris_array
            .expand(groups, "ris_array")?
            .into_iter()
            .map(|[v, h]| UpaShape::new(v, h))
            .collect::<Result<Vec<_>>>()?;
        let base = SystemConfig {
            bs_array,
            ris_arrays,
            users_per_group: sys.users_per_group.expand(groups, "users_per_group")?,
            total_power_w: dbm_to_watts(sys.transmit_power_dbm),
            noise_power_w: dbm_to_watts(sys.noise_power_dbm),
            noise_overrides: sys
                .noise_overrides_dbm
                .as_ref()
                .map(|n| n.iter().map(|g| g.iter().map(|&d| dbm_to_watts(d)).collect()).collect()),
            geometry,
            channel: ChannelParams {
                bs_user: self.channel.bs_user.apply(LinkParams::bs_user()),
                ris_user: self.channel.ris_user.apply(LinkParams::ris_user()),
                bs_ris: self.channel.bs_ris.apply(LinkParams::bs_ris()),
            },
            bd: self.bd,
            sdr: self.sdr,
            mtzf: self.mtzf,
        };
        let scenario = Scenario {
            name: self.name.clone(),
            seed: self.seed,
            trials: self.trials,
            schemes: self.schemes.clone(),
            base,
            sweep: self.sweep.clone(),
            source: self.clone(),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl GeometrySpec {
    pub fn resolve(&self) -> Result<Geometry> {
        let mut geo = match &self.preset {
            Some(name) => {
                preset(name)
                    .ok_or_else(|| Error::Config(format!("unknown geometry preset `{name}`")))?
                    .geometry
            }
            None => Geometry {
                bs: Position3D::new(0.0, 0.0, BS_HEIGHT_M),
                group_centers: Vec::new(),
                ris: Vec::new(),
                user_radius: DEFAULT_USER_RADIUS_M,
            },
        };
        if let Some(bs) = self.bs {
            geo.bs = bs.into();
        }
        if let Some(c) = &self.group_centers {
            geo.group_centers = c.iter().map(|&p| p.into()).collect();
        }
        if let Some(r) = &self.ris {
            geo.ris = r.iter().map(|&p| p.into()).collect();
        }
        if let Some(r) = self.user_radius {
            geo.user_radius = r;
        }
        if let Some(g) = self.num_groups {
            if g == 0 || g > geo.group_centers.len() || g > geo.ris.len() {
                return Err(Error::Config(format!(
                    "num_groups = {g} but the geometry defines {} groups",
                    geo.group_centers.len().min(geo.ris.len())
                )));
            }
            geo.group_centers.truncate(g);
            geo.ris.truncate(g);
        }
        if geo.group_centers.is_empty() {
            return Err(Error::Config("geometry defines no groups".into()));
        }
        Ok(geo)
    }
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ScenarioFile::load(path)?.resolve()
    }

    pub fn parse(text: &str) -> Result<Self> {
        ScenarioFile::parse(text)?.resolve()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials >= 1 violated".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes requested".into()));
        }
        let mut sorted = self.schemes.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.schemes.len() {
            return Err(Error::Config("schemes are listed more than once".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep has no values".into()));
        }
        if self.sweep.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("sweep values must be strictly increasing".into()));
        }
        self.base.validate()?;
        for &v in &self.sweep.values {
            self.config_at(v)?.validate()?;
        }
        Ok(())
    }

    /// The base system with the sweep axis set to `value`.
    pub fn config_at(&self, value: f64) -> Result<SystemConfig> {
        let mut cfg = self.base.clone();
        let axis = self.sweep.axis;
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value < u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!(
                    "{} needs positive integer values, got {value}",
                    axis.name()
                )))
            }
        };
        match axis {
            SweepAxis::TransmitPowerDbm => {
                if !value.is_finite() {
                    return Err(Error::Config(format!("transmit power {value} dBm")));
                }
                cfg.total_power_w = dbm_to_watts(value);
            }
            SweepAxis::NAntennas => {
                let n = count()?;
                let hor = cfg.bs_array.n_hor;
                if n % hor != 0 {
                    return Err(Error::Config(format!(
                        "N = {n} is not a multiple of the {hor} horizontal antennas"
                    )));
                }
                cfg.bs_array = UpaShape::new(n / hor, hor)?;
            }
            SweepAxis::UsersPerGroup => {
                let k = count()?;
                if cfg.noise_overrides.is_some() {
                    return Err(Error::Config(
                        "per-user noise overrides cannot be combined with a users_per_group sweep".into(),
                    ));
                }
                cfg.users_per_group = vec![k; cfg.num_groups()];
            }
            SweepAxis::RisElements => {
                let m = count()?;
                cfg.ris_arrays = cfg
                    .ris_arrays
                    .iter()
                    .map(|shape| {
                        let ver = shape.n_ver;
                        if m % ver != 0 {
                            return Err(Error::Config(format!(
                                "M = {m} is not a multiple of the {ver} vertical RIS elements"
                            )));
                        }
                        UpaShape::new(ver, m / ver)
                    })
                    .collect::<Result<_>>()?;
            }
        }
        Ok(cfg)
    }
}

/// A shipped geometry. Coordinates are illustrative layout choices;
/// they are assumptions, not measured data.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub geometry: Geometry,
}

/// Places each RIS `RIS_OFFSET_M` beyond its group center, on the horizontal
/// ray from the BS through the center.
pub fn ris_beyond_centers(bs: &Position3D, centers: &[Position3D]) -> Vec<Position3D> {
    centers
        .iter()
        .map(|c| {
            let (dx, dy) = (c.x - bs.x, c.y - bs.y);
            let d = dx.hypot(dy);
            let (ux, uy) = if d > 0.0 { (dx / d, dy / d) } else { (1.0, 0.0) };
            Position3D::new(c.x + RIS_OFFSET_M * ux, c.y + RIS_OFFSET_M * uy, RIS_HEIGHT_M)
        })
        .collect()
}

fn layout(centers: &[[f64; 2]]) -> Geometry {
    let bs = Position3D::new(0.0, 0.0, BS_HEIGHT_M);
    let group_centers: Vec<Position3D> = centers
        .iter()
        .map(|&[x, y]| Position3D::new(x, y, USER_HEIGHT_M))
        .collect();
    Geometry {
        ris: ris_beyond_centers(&bs, &group_centers),
        bs,
        group_centers,
        user_radius: DEFAULT_USER_RADIUS_M,
    }
}

pub fn presets() -> Vec<GeometryPreset> {
    vec![
        GeometryPreset {
            name: "fig2-like-g4",
            description: "four groups spread over a quarter circle 86-96 m from the BS, one RIS 10 m behind each group",
            geometry: layout(&[[90.0, 10.0], [70.0, 50.0], [40.0, 80.0], [10.0, 95.0]]),
        },
        GeometryPreset {
            name: "fig9a-like-g3",
            description:
                "three groups 60-100 m from the BS on both sides of the array broadside, one RIS 10 m behind each group",
            geometry: layout(&[[95.0, -20.0], [60.0, 30.0], [45.0, 85.0]]),
        },
    ]
}

pub fn preset(name: &str) -> Option<GeometryPreset> {
    presets().into_iter().find(|p| p.name == name)
}

/// The desk-scale experiment: N = 2x8, G = 3, K_g = 4, M_g = 8x3, P_T from
/// 20 to 40 dBm in 5 dB steps, 200 trials, all four schemes.
pub fn desk_scale() -> ScenarioFile {
    ScenarioFile {
        name: "desk-scale".into(),
        seed: 2024,
        trials: 200,
        schemes: SchemeKind::ALL.to_vec(),
        system: SystemSpec {
            bs_array: [2, 8],
            ris_array: PerGroup::All([8, 3]),
            users_per_group: PerGroup::All(4),
            transmit_power_dbm: 30.0,
            noise_power_dbm: DEFAULT_NOISE_DBM,
            noise_overrides_dbm: None,
        },
        geometry: GeometrySpec {
            preset: Some("fig2-like-g4".into()),
            num_groups: Some(3),
            ..Default::default()
        },
        channel: ChannelSpec::default(),
        sweep: SweepSpec {
            axis: SweepAxis::TransmitPowerDbm,
            values: vec![20.0, 25.0, 30.0, 35.0, 40.0],
        },
        bd: BdSettings::default(),
        sdr: SdrSettings::default(),
        mtzf: MtzfSettings::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn desk_scale_resolves() {
        let s = desk_scale().resolve().unwrap();
        assert_eq!(s.base.num_groups(), 3);
        assert_eq!(s.base.n_antennas(), 16);
        assert_eq!(s.base.ris_elements(2), 24);
        assert_relative_eq!(s.base.noise_power_w, 10f64.powf(-14.4), max_relative = 1e-12);
        assert_relative_eq!(s.config_at(40.0).unwrap().total_power_w, 10.0, max_relative = 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let file = desk_scale();
        let text = file.to_toml().unwrap();
        assert_eq!(ScenarioFile::parse(&text).unwrap(), file);
    }

    #[test]
    fn presets_place_ris_behind_groups() {
        for p in presets() {
            let g = &p.geometry;
            for (c, r) in g.group_centers.iter().zip(&g.ris) {
                assert_eq!(c.z, USER_HEIGHT_M);
                assert_eq!(r.z, RIS_HEIGHT_M);
                let horizontal = (r.x - c.x).hypot(r.y - c.y);
                assert_relative_eq!(horizontal, RIS_OFFSET_M, epsilon = 1e-12);
                assert!(r.x.hypot(r.y) > c.x.hypot(c.y));
                let d = c.x.hypot(c.y);
                assert!((60.0..=100.0).contains(&d), "{} center at {d} m", p.name);
            }
        }
        assert!(preset("fig2-like-g4").is_some());
        assert!(preset("fig9a-like-g3").is_some());
        assert_eq!(preset("fig2-like-g4").unwrap().geometry.group_centers.len(), 4);
    }

    #[test]
    fn sweep_axes_reshape_arrays() {
        let mut file = desk_scale();
        file.sweep = SweepSpec {
            axis: SweepAxis::NAntennas,
            values: vec![16.0, 24.0, 32.0, 48.0],
        };
        let s = file.resolve().unwrap();
        assert_eq!(s.config_at(48.0).unwrap().bs_array, UpaShape::new(6, 8).unwrap());
        assert!(s.config_at(20.0).is_err());

        file.sweep = SweepSpec {
            axis: SweepAxis::RisElements,
            values: vec![24.0, 32.0],
        };
        let s = file.resolve().unwrap();
        assert_eq!(s.config_at(32.0).unwrap().ris_arrays[1], UpaShape::new(8, 4).unwrap());

        file.sweep = SweepSpec {
            axis: SweepAxis::UsersPerGroup,
            values: vec![2.0, 6.0],
        };
        let s = file.resolve().unwrap();
        assert_eq!(s.config_at(6.0).unwrap().users_per_group, vec![6; 3]);
        assert!(s.config_at(2.5).is_err());
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut file = desk_scale();
        file.sweep.values = vec![30.0, 20.0];
        assert!(file.resolve().is_err());

        let mut file = desk_scale();
        file.system.bs_array = [1, 2];
        let err = file.resolve().unwrap_err().to_string();
        assert!(err.contains("N >= G"), "{err}");

        let mut file = desk_scale();
        file.trials = 0;
        assert!(file.resolve().is_err());

        let mut file = desk_scale();
        file.geometry.preset = Some("nowhere".into());
        assert!(file.resolve().is_err());

        assert!(ScenarioFile::parse("seed = 1\nbogus = 2").is_err());
    }

    #[test]
    fn link_overrides_convert_units() {
        let mut file = desk_scale();
        file.channel.ris_user.rician_factor_db = Some(10.0);
        file.channel.bs_ris.angular_spread_hor_deg = Some(90.0);
        let s = file.resolve().unwrap();
        assert_relative_eq!(s.base.channel.ris_user.rician_factor, 10.0, max_relative = 1e-12);
        assert_relative_eq!(s.base.channel.bs_ris.angular_spread_hor, std::f64::consts::FRAC_PI_2);
        assert_eq!(s.base.channel.bs_user, LinkParams::bs_user());
    }
}
