//! System model and rate mathematics shared by both beamforming schemes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bd::BdSettings;
use crate::channel::{ChannelParams, ChannelSet, Geometry, UpaShape};
use crate::error::{Error, Result};
use crate::linalg::{row_dot, CMat, CVec, C64, ONE};
use crate::mtzf::MtzfSettings;
use crate::sdr::SdrSettings;

/// Unit-modulus tolerance for [`RisPhaseVector`].
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

/// Full definition of one system: arrays, group sizes, powers, geometry,
/// channel parameters and algorithm settings. Linear units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub bs_array: UpaShape,
    /// One RIS per group.
    pub ris_arrays: Vec<UpaShape>,
    pub users_per_group: Vec<usize>,
    pub total_power_w: f64,
    pub noise_power_w: f64,
    /// Optional per-user noise powers `[g][k]`, watts.
    pub noise_overrides: Option<Vec<Vec<f64>>>,
    pub geometry: Geometry,
    pub channel: ChannelParams,
    pub bd: BdSettings,
    pub sdr: SdrSettings,
    pub mtzf: MtzfSettings,
}

impl SystemConfig {
    pub fn n_antennas(&self) -> usize {
        self.bs_array.total()
    }

    pub fn num_groups(&self) -> usize {
        self.users_per_group.len()
    }

    pub fn total_users(&self) -> usize {
        self.users_per_group.iter().sum()
    }

    pub fn ris_elements(&self, g: usize) -> usize {
        self.ris_arrays[g].total()
    }

    /// `P_T / G` for every group.
    pub fn equal_power(&self) -> Vec<f64> {
        equal_power(self.total_power_w, self.num_groups())
    }

    /// Noise power of every user, `[g][k]`.
    pub fn noise_powers(&self) -> Vec<Vec<f64>> {
        match &self.noise_overrides {
            Some(n) => n.clone(),
            None => self
                .users_per_group
                .iter()
                .map(|&k| vec![self.noise_power_w; k])
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.num_groups();
        let bad = |msg: String| Err(Error::Config(msg));
        if g == 0 {
            return bad("at least one group is required".into());
        }
        if self.n_antennas() < g {
            return bad(format!(
                "N >= G violated: N = {} antennas < G = {g} groups",
                self.n_antennas()
            ));
        }
        if self.ris_arrays.len() != g {
            return bad(format!("{} RIS arrays for {g} groups", self.ris_arrays.len()));
        }
        if let Some(k) = self.users_per_group.iter().position(|&k| k == 0) {
            return bad(format!("group {} has no users", k + 1));
        }
        if !(self.total_power_w > 0.0 && self.total_power_w.is_finite()) {
            return bad(format!("P_T > 0 violated: {} W", self.total_power_w));
        }
        if !(self.noise_power_w > 0.0 && self.noise_power_w.is_finite()) {
            return bad(format!("noise power > 0 violated: {} W", self.noise_power_w));
        }
        if let Some(n) = &self.noise_overrides {
            let shape_ok = n.len() == g && n.iter().zip(&self.users_per_group).all(|(v, &k)| v.len() == k);
            if !shape_ok {
                return bad("per-user noise overrides do not match users_per_group".into());
            }
            if n.iter().flatten().any(|&s| !(s > 0.0)) {
                return bad("per-user noise powers must be positive".into());
            }
        }
        let geo = &self.geometry;
        if geo.group_centers.len() != g || geo.ris.len() != g {
            return bad(format!(
                "geometry has {} group centers and {} RIS positions for {g} groups",
                geo.group_centers.len(),
                geo.ris.len()
            ));
        }
        if !(geo.user_radius >= 0.0) {
            return bad("user radius must be non-negative".into());
        }
        let positions = std::iter::once(&geo.bs).chain(&geo.group_centers).chain(&geo.ris);
        if positions.clone().any(|p| !(p.z >= 0.0)) {
            return bad("all positions need z >= 0".into());
        }
        for (i, c) in geo.group_centers.iter().enumerate() {
            if c.distance(&geo.bs) <= geo.user_radius {
                return bad(format!("group {} disk contains the BS", i + 1));
            }
        }
        self.channel.bs_user.validate("bs_user")?;
        self.channel.ris_user.validate("ris_user")?;
        self.channel.bs_ris.validate("bs_ris")?;
        self.bd.validate()?;
        self.sdr.validate()?;
        self.mtzf.validate()?;
        Ok(())
    }
}

/// Starting phases of the iterative designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseInit {
    /// Zero phase shift everywhere.
    #[default]
    AllOnes,
    /// Uniform on `[0, 2 pi)`.
    Random,
}

impl PhaseInit {
    pub fn phases<R: Rng + ?Sized>(self, ris_elements: &[usize], rng: &mut R) -> Vec<RisPhaseVector> {
        ris_elements
            .iter()
            .map(|&m| match self {
                PhaseInit::AllOnes => RisPhaseVector::all_ones(m),
                PhaseInit::Random => RisPhaseVector::random(m, rng),
            })
            .collect()
    }
}

pub fn equal_power(total: f64, groups: usize) -> Vec<f64> {
    vec![total / groups as f64; groups]
}

/// Unit-modulus reflection coefficients of one RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct RisPhaseVector(CVec);

impl RisPhaseVector {
    pub fn new(phases: CVec) -> Result<Self> {
        if let Some(m) = phases.iter().position(|z| (z.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
            return Err(Error::Config(format!(
                "reflection coefficient {m} has modulus {}",
                phases[m].norm()
            )));
        }
        Ok(Self(phases))
    }

    /// Projects every entry onto the unit circle (zero maps to 1).
    pub fn from_unnormalized(values: &CVec) -> Self {
        Self(values.map(crate::linalg::unit_phase))
    }

    pub fn from_angles(angles: &[f64]) -> Self {
        Self(CVec::from_iterator(
            angles.len(),
            angles.iter().map(|&a| C64::from_polar(1.0, a)),
        ))
    }

    /// Zero phase shift on every element.
    pub fn all_ones(len: usize) -> Self {
        Self(CVec::from_element(len, ONE))
    }

    /// Phases uniform on `[0, 2 pi)`.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let angles: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        Self::from_angles(&angles)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vec(&self) -> &CVec {
        &self.0
    }

    pub fn into_vec(self) -> CVec {
        self.0
    }
}

/// `N x G` precoder. Column `g` has squared norm `power[g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerMatrix {
    columns: CMat,
    power: Vec<f64>,
}

impl BeamformerMatrix {
    /// Normalizes every direction column to unit norm and scales it by
    /// `sqrt(power[g])`. Zero columns stay zero.
    pub fn from_directions(directions: CMat, power: &[f64]) -> Result<Self> {
        if directions.ncols() != power.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} beam directions for {} power levels",
                directions.ncols(),
                power.len()
            )));
        }
        let mut columns = directions;
        for (g, &p) in power.iter().enumerate() {
            let mut col = columns.column_mut(g);
            let norm = col.norm();
            if norm > 0.0 {
                col *= C64::from(p.sqrt() / norm);
            }
        }
        Ok(Self {
            columns,
            power: power.to_vec(),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.columns
    }

    pub fn column(&self, g: usize) -> CVec {
        self.columns.column(g).into_owned()
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn num_groups(&self) -> usize {
        self.columns.ncols()
    }

    /// `Tr(F^H F)`.
    pub fn total_power(&self) -> f64 {
        self.columns.norm_squared()
    }
}

/// `h^H = h_d^H + h_r^H diag(phi) H` as a row vector of length `N`.
pub fn effective_channel(direct: &CVec, reflect: &CVec, phases: &RisPhaseVector, bs_ris: &CMat) -> Result<CVec> {
    let (m, n) = bs_ris.shape();
    if direct.len() != n || reflect.len() != m || phases.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "direct {} / reflect {} / phases {} against BS-RIS {m}x{n}",
            direct.len(),
            reflect.len(),
            phases.len()
        )));
    }
    let weighted = reflect.component_mul(phases.as_vec());
    Ok(direct + bs_ris.tr_mul(&weighted))
}

/// Effective channels of every user, `[g][k]`.
pub fn effective_channels(channels: &ChannelSet, phases: &[RisPhaseVector]) -> Result<Vec<Vec<CVec>>> {
    if phases.len() != channels.num_groups() {
        return Err(Error::DimensionMismatch(format!(
            "{} phase vectors for {} groups",
            phases.len(),
            channels.num_groups()
        )));
    }
    (0..channels.num_groups())
        .map(|g| {
            (0..channels.users_in(g))
                .map(|k| {
                    effective_channel(
                        &channels.direct[g][k],
                        &channels.reflect[g][k],
                        &phases[g],
                        &channels.bs_ris[g],
                    )
                })
                .collect()
        })
        .collect()
}

/// Rate of a user with effective row channel `h` (bits/s/Hz).
pub fn rate_for_channel(h: &CVec, f: &BeamformerMatrix, g: usize, noise: f64) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for gp in 0..f.num_groups() {
        let p = row_dot(h, &f.columns.column(gp).into_owned()).norm_sqr();
        if gp == g {
            signal = p;
        } else {
            interference += p;
        }
    }
    (1.0 + signal / (interference + noise)).log2()
}

pub fn user_rate(
    channels: &ChannelSet,
    phases: &[RisPhaseVector],
    f: &BeamformerMatrix,
    g: usize,
    k: usize,
    noise: f64,
) -> Result<f64> {
    let h = effective_channel(
        &channels.direct[g][k],
        &channels.reflect[g][k],
        &phases[g],
        &channels.bs_ris[g],
    )?;
    Ok(rate_for_channel(&h, f, g, noise))
}

/// Per-group minimum user rate.
pub fn min_rates(
    channels: &ChannelSet,
    phases: &[RisPhaseVector],
    f: &BeamformerMatrix,
    noise: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let eff = effective_channels(channels, phases)?;
    Ok(min_rates_from_effective(&eff, f, noise))
}

pub(crate) fn min_rates_from_effective(eff: &[Vec<CVec>], f: &BeamformerMatrix, noise: &[Vec<f64>]) -> Vec<f64> {
    eff.iter()
        .enumerate()
        .map(|(g, users)| {
            users
                .iter()
                .enumerate()
                .map(|(k, h)| rate_for_channel(h, f, g, noise[g][k]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Multicast sum-rate: sum over groups of the worst user rate.
pub fn sum_rate(
    channels: &ChannelSet,
    phases: &[RisPhaseVector],
    f: &BeamformerMatrix,
    noise: &[Vec<f64>],
) -> Result<f64> {
    Ok(min_rates(channels, phases, f, noise)?.iter().sum())
}

/// The same noise power for every user of `channels`.
pub fn uniform_noise(channels: &ChannelSet, noise: f64) -> Vec<Vec<f64>> {
    (0..channels.num_groups())
        .map(|g| vec![noise; channels.users_in(g)])
        .collect()
}
