//! Geometry-driven Rician channel synthesis.
//!
//! Every link is one LoS path plus `C` NLoS paths between two uniform planar
//! arrays (half-wavelength spacing, arrays parallel to the xz-plane). LoS
//! angles come from the actual transceiver positions; NLoS angles are drawn
//! uniformly inside the configured angular spread around them.

use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{crandn, CMat, CVec, C64};
use crate::system::SystemConfig;

/// Reference distance of the path-loss model, meters.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position3D) -> f64 {
        ((other.x - self.x).powi(2) + (other.y - self.y).powi(2) + (other.z - self.z).powi(2)).sqrt()
    }
}

impl From<[f64; 3]> for Position3D {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

/// Shape of a uniform planar array: `n_ver` rows by `n_hor` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpaShape {
    pub n_ver: usize,
    pub n_hor: usize,
}

impl UpaShape {
    pub const SINGLE: UpaShape = UpaShape { n_ver: 1, n_hor: 1 };

    pub fn new(n_ver: usize, n_hor: usize) -> Result<Self> {
        if n_ver == 0 || n_hor == 0 {
            return Err(Error::Config(format!("array shape {n_ver}x{n_hor} has no elements")));
        }
        Ok(Self { n_ver, n_hor })
    }

    pub fn total(&self) -> usize {
        self.n_ver * self.n_hor
    }
}

impl std::fmt::Display for UpaShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.n_ver, self.n_hor)
    }
}

/// Large- and small-scale parameters of one link class. All linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub path_loss_exponent: f64,
    /// Rician factor, linear. `f64::INFINITY` gives a pure LoS link.
    pub rician_factor: f64,
    pub num_nlos_paths: usize,
    /// Linear power gain at the reference distance.
    pub reference_loss: f64,
    pub angular_spread_ver: f64,
    pub angular_spread_hor: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

impl LinkParams {
    fn with(eta: f64, kappa_db: f64, paths: usize) -> Self {
        Self {
            path_loss_exponent: eta,
            rician_factor: db_to_linear(kappa_db),
            num_nlos_paths: paths,
            reference_loss: db_to_linear(-30.0),
            angular_spread_ver: 5f64.to_radians(),
            angular_spread_hor: 8f64.to_radians(),
        }
    }

    /// BS to user direct link.
    pub fn bs_user() -> Self {
        Self::with(4.5, 3.0, 8)
    }

    /// RIS to user reflection link.
    pub fn ris_user() -> Self {
        Self::with(2.2, 7.0, 4)
    }

    /// BS to RIS link.
    pub fn bs_ris() -> Self {
        Self::with(2.3, 5.0, 8)
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        let ok = self.path_loss_exponent > 0.0
            && self.rician_factor >= 0.0
            && self.num_nlos_paths >= 1
            && self.reference_loss > 0.0
            && self.angular_spread_ver >= 0.0
            && self.angular_spread_hor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid link parameters for {what}: {self:?}")))
        }
    }
}

/// Link parameters for the three link classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub bs_user: LinkParams,
    pub ris_user: LinkParams,
    pub bs_ris: LinkParams,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            bs_user: LinkParams::bs_user(),
            ris_user: LinkParams::ris_user(),
            bs_ris: LinkParams::bs_ris(),
        }
    }
}

/// Positions of the BS, each group's center and each group's RIS.
///
/// Group centers carry the user height in `z`; users are dropped uniformly in
/// a disk of `user_radius` around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs: Position3D,
    pub group_centers: Vec<Position3D>,
    pub ris: Vec<Position3D>,
    pub user_radius: f64,
}

/// All links of one trial. Row vectors are stored as the entries of the
/// conjugate-transposed channel, e.g. `direct[g][k][n]` is entry `n` of
/// `h_d^H` for user `k` of group `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub direct: Vec<Vec<CVec>>,
    pub reflect: Vec<Vec<CVec>>,
    pub bs_ris: Vec<CMat>,
    pub user_positions: Vec<Vec<Position3D>>,
}

impl ChannelSet {
    pub fn num_groups(&self) -> usize {
        self.bs_ris.len()
    }

    pub fn users_in(&self, g: usize) -> usize {
        self.direct[g].len()
    }

    pub fn n_antennas(&self) -> usize {
        self.bs_ris.first().map_or(0, |h| h.ncols())
    }

    pub fn is_finite(&self) -> bool {
        let vec_ok = |v: &CVec| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        self.direct.iter().flatten().all(vec_ok)
            && self.reflect.iter().flatten().all(vec_ok)
            && self.bs_ris.iter().all(crate::linalg::is_finite)
    }

    /// Hash of every channel coefficient; equal sets give equal fingerprints.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        let mut feed = |z: &C64| {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        };
        self.direct.iter().flatten().flat_map(|v| v.iter()).for_each(&mut feed);
        self.reflect.iter().flatten().flat_map(|v| v.iter()).for_each(&mut feed);
        self.bs_ris.iter().flat_map(|m| m.iter()).for_each(&mut feed);
        h.finish()
    }
}

/// Normalized UPA steering vector: vertical steering vector Kronecker the
/// horizontal one, scaled by `1/sqrt(total)`.
pub fn upa_response(theta_ver: f64, theta_hor: f64, shape: UpaShape) -> CVec {
    let ver = PI * theta_ver.sin();
    let hor = PI * theta_hor.sin() * theta_ver.cos();
    let scale = 1.0 / (shape.total() as f64).sqrt();
    CVec::from_iterator(
        shape.total(),
        (0..shape.n_ver)
            .flat_map(|iv| (0..shape.n_hor).map(move |ih| C64::from_polar(scale, iv as f64 * ver + ih as f64 * hor))),
    )
}

/// Vertical (elevation) and horizontal (azimuth in the xy-plane, from +x)
/// angles of the direction `from -> to`.
pub fn los_angles(from: &Position3D, to: &Position3D) -> Result<(f64, f64)> {
    let d = from.distance(to);
    if d <= 0.0 || !d.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "coincident positions {from:?} and {to:?}"
        )));
    }
    let ver = ((to.z - from.z) / d).clamp(-1.0, 1.0).asin();
    let hor = (to.y - from.y).atan2(to.x - from.x);
    Ok((ver, hor))
}

pub fn path_loss(distance: f64, params: &LinkParams) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::InvalidDistance(distance));
    }
    Ok(params.reference_loss * (distance / REFERENCE_DISTANCE_M).powf(-params.path_loss_exponent))
}

/// One Rician link, `rx_total x tx_total`. The LoS gain is `exp(j psi)` with
/// `psi` uniform on `[0, 2 pi)`.
pub fn synth_link<R: Rng + ?Sized>(
    tx_shape: UpaShape,
    rx_shape: UpaShape,
    tx_pos: &Position3D,
    rx_pos: &Position3D,
    params: &LinkParams,
    rng: &mut R,
) -> Result<CMat> {
    let psi = rng.random_range(0.0..2.0 * PI);
    synth_link_with_los_gain(
        tx_shape,
        rx_shape,
        tx_pos,
        rx_pos,
        params,
        C64::from_polar(1.0, psi),
        rng,
    )
}

/// [`synth_link`] with a caller-supplied LoS gain.
pub fn synth_link_with_los_gain<R: Rng + ?Sized>(
    tx_shape: UpaShape,
    rx_shape: UpaShape,
    tx_pos: &Position3D,
    rx_pos: &Position3D,
    params: &LinkParams,
    los_gain: C64,
    rng: &mut R,
) -> Result<CMat> {
    let distance = tx_pos.distance(rx_pos);
    let gain = path_loss(distance, params)?;
    let (tx_ver, tx_hor) = los_angles(tx_pos, rx_pos)?;
    let (rx_ver, rx_hor) = los_angles(rx_pos, tx_pos)?;

    let kappa = params.rician_factor;
    let (los_w, nlos_w) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    };
    let scale = (gain * (rx_shape.total() * tx_shape.total()) as f64).sqrt();

    let a_rx = upa_response(rx_ver, rx_hor, rx_shape);
    let a_tx = upa_response(tx_ver, tx_hor, tx_shape);
    let mut h = (&a_rx * a_tx.adjoint()) * (los_gain * los_w);

    let paths = params.num_nlos_paths;
    let path_w = nlos_w / (paths as f64).sqrt();
    let jitter = |rng: &mut R, spread: f64| {
        if spread > 0.0 {
            rng.random_range(-0.5 * spread..0.5 * spread)
        } else {
            0.0
        }
    };
    for _ in 0..paths {
        let gamma = crandn(rng);
        let rv = rx_ver + jitter(rng, params.angular_spread_ver);
        let rh = rx_hor + jitter(rng, params.angular_spread_hor);
        let tv = tx_ver + jitter(rng, params.angular_spread_ver);
        let th = tx_hor + jitter(rng, params.angular_spread_hor);
        let a_rx = upa_response(rv, rh, rx_shape);
        let a_tx = upa_response(tv, th, tx_shape);
        if path_w > 0.0 {
            h += (&a_rx * a_tx.adjoint()) * (gamma * path_w);
        }
    }
    Ok(h * C64::from(scale))
}

/// Uniform point in a disk of `radius` around `center` (same height).
pub fn drop_in_disk<R: Rng + ?Sized>(center: &Position3D, radius: f64, rng: &mut R) -> Position3D {
    let r = radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..2.0 * PI);
    Position3D::new(center.x + r * a.cos(), center.y + r * a.sin(), center.z)
}

/// Draws user positions and every link of the system.
///
/// User `k` of group `g` sees the BS directly and RIS `g` only; reflections
/// through other RISs are neglected.
pub fn synth_trial<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    let geo = &config.geometry;
    let params = &config.channel;
    let num_groups = config.num_groups();
    let mut set = ChannelSet {
        direct: Vec::with_capacity(num_groups),
        reflect: Vec::with_capacity(num_groups),
        bs_ris: Vec::with_capacity(num_groups),
        user_positions: Vec::with_capacity(num_groups),
    };
    for g in 0..num_groups {
        let ris_shape = config.ris_arrays[g];
        let ris_pos = geo.ris[g];
        let h_g = synth_link(config.bs_array, ris_shape, &geo.bs, &ris_pos, &params.bs_ris, rng)?;
        let mut direct = Vec::with_capacity(config.users_per_group[g]);
        let mut reflect = Vec::with_capacity(config.users_per_group[g]);
        let mut positions = Vec::with_capacity(config.users_per_group[g]);
        for _ in 0..config.users_per_group[g] {
            let user = drop_in_disk(&geo.group_centers[g], geo.user_radius, rng);
            let d = synth_link(config.bs_array, UpaShape::SINGLE, &geo.bs, &user, &params.bs_user, rng)?;
            let r = synth_link(ris_shape, UpaShape::SINGLE, &ris_pos, &user, &params.ris_user, rng)?;
            direct.push(d.row(0).transpose());
            reflect.push(r.row(0).transpose());
            positions.push(user);
        }
        set.direct.push(direct);
        set.reflect.push(reflect);
        set.bs_ris.push(h_g);
        set.user_positions.push(positions);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn broadside_response_is_flat() {
        let a = upa_response(0.0, 0.0, UpaShape::new(2, 2).unwrap());
        for z in a.iter() {
            assert_relative_eq!(z.re, 0.5, epsilon = 1e-15);
            assert_relative_eq!(z.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn response_phases_match_hand_evaluation() {
        let (v, h) = (PI / 6.0, PI / 4.0);
        let a = upa_response(v, h, UpaShape::new(2, 2).unwrap());
        let hor = PI * (PI / 4.0).sin() * (PI / 6.0).cos();
        let ver = PI * (PI / 6.0).sin();
        let expected = [0.0, hor, ver, hor + ver];
        for (z, phase) in a.iter().zip(expected) {
            let want = C64::from_polar(0.5, phase);
            assert!((z - want).norm() < 1e-15, "{z} vs {want}");
        }
    }

    #[test]
    fn response_has_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let shape = UpaShape::new(rng.random_range(1..9), rng.random_range(1..9)).unwrap();
            let a = upa_response(rng.random_range(-PI..PI), rng.random_range(-PI..PI), shape);
            assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn los_angles_cases() {
        let o = Position3D::new(0.0, 0.0, 0.0);
        assert_eq!(los_angles(&o, &Position3D::new(1.0, 0.0, 0.0)).unwrap(), (0.0, 0.0));
        let (v, h) = los_angles(&o, &Position3D::new(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(v, PI / 2.0);
        assert_eq!(h, 0.0);

        let (v, h) = los_angles(&Position3D::new(0.0, 0.0, 15.0), &Position3D::new(80.0, 20.0, 5.0)).unwrap();
        let d = (80f64.powi(2) + 20f64.powi(2) + 10f64.powi(2)).sqrt();
        assert_relative_eq!(v, (-10.0 / d).asin(), epsilon = 1e-15);
        assert_relative_eq!(h, 20f64.atan2(80.0), epsilon = 1e-15);

        assert!(matches!(los_angles(&o, &o), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn path_loss_values() {
        let p = LinkParams::ris_user();
        assert_relative_eq!(path_loss(1.0, &p).unwrap(), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(
            path_loss(10.0, &p).unwrap(),
            1e-3 * 10f64.powf(-2.2),
            max_relative = 1e-12
        );
        let half = LinkParams {
            path_loss_exponent: 1.1,
            ..p
        };
        assert_relative_eq!(path_loss(1.0, &half).unwrap(), 1e-3, max_relative = 1e-12);
        assert!(path_loss(0.0, &p).is_err());
        assert!(path_loss(-1.0, &p).is_err());
    }

    #[test]
    fn path_loss_decreases_with_distance() {
        let p = LinkParams::bs_user();
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let v = path_loss(i as f64 * 0.7, &p).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn default_link_params_match_table() {
        let bu = LinkParams::bs_user();
        let ru = LinkParams::ris_user();
        let br = LinkParams::bs_ris();
        assert_eq!(
            (bu.path_loss_exponent, ru.path_loss_exponent, br.path_loss_exponent),
            (4.5, 2.2, 2.3)
        );
        assert_relative_eq!(bu.rician_factor, 10f64.powf(0.3));
        assert_relative_eq!(ru.rician_factor, 10f64.powf(0.7));
        assert_relative_eq!(br.rician_factor, 10f64.powf(0.5));
        assert_eq!((bu.num_nlos_paths, ru.num_nlos_paths, br.num_nlos_paths), (8, 4, 8));
        assert_relative_eq!(bu.angular_spread_ver, 5f64.to_radians());
        assert_relative_eq!(bu.angular_spread_hor, 8f64.to_radians());
    }
}
