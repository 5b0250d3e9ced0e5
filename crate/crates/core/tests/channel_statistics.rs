//! Statistical and structural checks of the channel synthesizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_multicast::channel::{
    los_angles, path_loss, synth_link, synth_link_with_los_gain, synth_trial, upa_response, LinkParams, Position3D,
    UpaShape,
};
use ris_multicast::config::desk_scale;
use ris_multicast::linalg::{svd_full_right, CMat, C64};

fn positions() -> (Position3D, Position3D) {
    (Position3D::new(0.0, 0.0, 15.0), Position3D::new(60.0, 35.0, 5.0))
}

#[test]
fn pure_los_link_matches_closed_form() {
    let (tx, rx) = positions();
    let (tx_shape, rx_shape) = (UpaShape::new(2, 4).unwrap(), UpaShape::new(3, 2).unwrap());
    let params = LinkParams {
        rician_factor: f64::INFINITY,
        ..LinkParams::bs_ris()
    };
    let gain = C64::from_polar(1.0, 0.7);
    let h = synth_link_with_los_gain(
        tx_shape,
        rx_shape,
        &tx,
        &rx,
        &params,
        gain,
        &mut ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    let (tv, th) = los_angles(&tx, &rx).unwrap();
    let (rv, rh) = los_angles(&rx, &tx).unwrap();
    let scale = (path_loss(tx.distance(&rx), &params).unwrap() * 48.0).sqrt();
    let expected = upa_response(rv, rh, rx_shape) * upa_response(tv, th, tx_shape).adjoint() * (gain * scale);
    assert!(
        (&h - &expected).norm() <= 1e-12 * expected.norm(),
        "LoS mismatch {}",
        (&h - &expected).norm()
    );
}

#[test]
fn huge_rician_factor_gives_rank_one_link() {
    let (tx, rx) = positions();
    let params = LinkParams {
        rician_factor: 1e9,
        ..LinkParams::bs_ris()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = synth_link(
        UpaShape::new(2, 8).unwrap(),
        UpaShape::new(8, 3).unwrap(),
        &tx,
        &rx,
        &params,
        &mut rng,
    )
    .unwrap();
    let (s, _) = svd_full_right(&h);
    assert!(s[1] / s[0] < 1e-4, "second singular value ratio {}", s[1] / s[0]);
}

#[test]
fn mean_power_matches_path_loss() {
    let (tx, rx) = positions();
    let params = LinkParams::bs_ris();
    let (tx_shape, rx_shape) = (UpaShape::new(2, 2).unwrap(), UpaShape::new(2, 2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 10_000;
    let total: f64 = (0..draws)
        .map(|_| {
            synth_link(tx_shape, rx_shape, &tx, &rx, &params, &mut rng)
                .unwrap()
                .norm_squared()
        })
        .sum();
    let expected = path_loss(tx.distance(&rx), &params).unwrap() * 16.0;
    let rel = (total / draws as f64 - expected).abs() / expected;
    assert!(rel < 0.05, "relative power error {rel}");
}

#[test]
fn mean_with_fixed_los_gain_is_the_los_term() {
    let (tx, rx) = positions();
    let params = LinkParams::bs_user();
    let (tx_shape, rx_shape) = (UpaShape::new(1, 4).unwrap(), UpaShape::SINGLE);
    let gain = C64::from_polar(1.0, -1.1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draws = 10_000;
    let samples: Vec<CMat> = (0..draws)
        .map(|_| synth_link_with_los_gain(tx_shape, rx_shape, &tx, &rx, &params, gain, &mut rng).unwrap())
        .collect();
    let mean = samples.iter().fold(CMat::zeros(1, 4), |acc, h| acc + h) / C64::from(draws as f64);
    let kappa = params.rician_factor;
    let scale = (path_loss(tx.distance(&rx), &params).unwrap() * 4.0 * kappa / (1.0 + kappa)).sqrt();
    let (tv, th) = los_angles(&tx, &rx).unwrap();
    let (rv, rh) = los_angles(&rx, &tx).unwrap();
    let los = upa_response(rv, rh, rx_shape) * upa_response(tv, th, tx_shape).adjoint() * (gain * scale);
    for i in 0..4 {
        let var = samples
            .iter()
            .map(|h| (h[(0, i)] - mean[(0, i)]).norm_sqr())
            .sum::<f64>()
            / (draws - 1) as f64;
        let sigma = (var / draws as f64).sqrt();
        let err = (mean[(0, i)] - los[(0, i)]).norm();
        assert!(
            err < 3.0 * sigma * 2f64.sqrt(),
            "entry {i}: error {err:e}, sigma {sigma:e}"
        );
    }
}

#[test]
fn same_seed_same_trial() {
    let cfg = desk_scale().resolve().unwrap().base;
    let a = synth_trial(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = synth_trial(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let c = synth_trial(&cfg, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.fingerprint(), b.fingerprint());
    assert_ne!(a.fingerprint(), c.fingerprint());
}

#[test]
fn trial_shapes_follow_the_configuration() {
    let cfg = desk_scale().resolve().unwrap().base;
    let set = synth_trial(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(set.num_groups(), 3);
    assert!(set.is_finite());
    for g in 0..3 {
        assert_eq!(set.bs_ris[g].shape(), (24, 16));
        assert_eq!(set.users_in(g), 4);
        assert!(set.direct[g].iter().all(|h| h.len() == 16));
        assert!(set.reflect[g].iter().all(|h| h.len() == 24));
        for p in &set.user_positions[g] {
            assert!(p.distance(&cfg.geometry.group_centers[g]) <= cfg.geometry.user_radius + 1e-12);
        }
    }
}

#[test]
fn zero_radius_puts_users_on_the_center() {
    let mut cfg = desk_scale().resolve().unwrap().base;
    cfg.geometry.user_radius = 0.0;
    let set = synth_trial(&cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    for (g, users) in set.user_positions.iter().enumerate() {
        assert!(users.iter().all(|p| *p == cfg.geometry.group_centers[g]));
    }
}
