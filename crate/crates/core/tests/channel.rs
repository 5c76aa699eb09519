use std::f64::consts::PI;

use num_complex::Complex64 as C;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xlmimo::channel::dump::{read_matrix, write_matrix};
use xlmimo::channel::{
    build_covariance, draw_user_specs, generate_realization, noise_variance, realize,
    ArrayGeometry, ChannelFactor, VisibilityRegion,
};
use xlmimo::{CMatrix, Constellation, SystemConfig};

#[test]
fn identity_covariance_gives_unit_variance_entries() {
    let m = 6;
    let vr = 1..5;
    let r = CMatrix::from_fn(m, m, |p, q| {
        if p == q && vr.contains(&p) { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) }
    });
    let f = ChannelFactor::new(&r).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let mut power = vec![0.0; m];
    for _ in 0..n {
        let h = f.sample(&mut rng);
        for p in 0..m {
            power[p] += h[p].norm_sqr();
            if !vr.contains(&p) {
                assert_eq!(h[p], C::new(0.0, 0.0));
            }
        }
    }
    for p in vr {
        let v = power[p] / n as f64;
        assert!((v - 1.0).abs() < 0.05, "antenna {p} variance {v}");
    }
}

#[test]
fn zero_covariance_gives_zero_channel() {
    let f = ChannelFactor::new(&CMatrix::<f64>::zeros(5, 5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!(f.sample(&mut rng).iter().all(|z| *z == C::new(0.0, 0.0)));
}

#[test]
fn covariance_support_follows_the_visibility_region() {
    let geo = ArrayGeometry::ula(16, 0.5);
    let vr = VisibilityRegion::centered(16, 12, 7);
    let r = build_covariance::<f64>(0.4, PI / 10.0, &geo, vr.antennas.clone());
    for p in 0..16 {
        for q in 0..16 {
            if !(vr.contains(p) && vr.contains(q)) {
                assert_eq!(r[(p, q)], C::new(0.0, 0.0));
            }
        }
    }
    assert_eq!(vr.antennas, 9..16);
}

#[test]
fn drawn_channels_vanish_outside_their_regions() {
    let cfg = SystemConfig { m: 40, k: 8, b: 4, ..SystemConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let specs = draw_user_specs::<f64, _>(&cfg, &mut rng).unwrap();
    let c = Constellation::qpsk();
    let x = vec![0; cfg.k];
    let real = generate_realization(&specs, &c, &x, 0.0, &mut rng).unwrap();
    for (k, spec) in specs.iter().enumerate() {
        let mask = spec.vr_mask();
        assert!(!spec.vr.is_empty());
        for p in 0..cfg.m {
            if !mask[p] {
                assert_eq!(real.h[(p, k)], C::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn same_seed_same_realization() {
    let cfg = SystemConfig { m: 20, k: 3, b: 2, ..SystemConfig::default() };
    let c = Constellation::qpsk();
    let draw = || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let specs = draw_user_specs::<f64, _>(&cfg, &mut rng).unwrap();
        generate_realization(&specs, &c, &[1, 2, 3], 5.0, &mut rng).unwrap()
    };
    assert_eq!(draw(), draw());
}

#[test]
fn zero_db_means_unit_noise_and_infinite_snr_is_noiseless() {
    assert_eq!(noise_variance(0.0), 1.0);
    let c = Constellation::qpsk();
    let mut h = CMatrix::zeros(3, 1);
    h[(0, 0)] = C::new(1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = realize(h, &c, &[3], f64::INFINITY, &mut rng).unwrap();
    assert_eq!(r.y[0], c.symbol(3));
    assert_eq!(r.y[1], C::new(0.0, 0.0));
    assert_eq!(r.y[2], C::new(0.0, 0.0));
}

#[test]
fn dump_round_trips_several_matrices() {
    let a = CMatrix::from_fn(3, 2, |r, c| C::new(r as f64 + 0.25, -(c as f64) * 1e-300));
    let b = CMatrix::from_fn(1, 4, |_, c| C::new(f64::MAX / (c + 1) as f64, 0.5));
    let mut buf = Vec::new();
    write_matrix(&mut buf, &a).unwrap();
    write_matrix(&mut buf, &b).unwrap();
    assert_eq!(buf.len(), 2 * 16 + (6 + 4) * 16);
    let mut cur = std::io::Cursor::new(buf);
    assert_eq!(read_matrix(&mut cur).unwrap(), Some(a));
    assert_eq!(read_matrix(&mut cur).unwrap(), Some(b));
    assert_eq!(read_matrix(&mut cur).unwrap(), None);
}

#[test]
fn single_precision_covariance_matches_double() {
    let geo = ArrayGeometry::ula(10, 0.5);
    let r64 = build_covariance::<f64>(-0.3, PI / 5.0, &geo, 2..9);
    let r32 = build_covariance::<f32>(-0.3, PI / 5.0, &geo, 2..9);
    for (a, b) in r64.iter().zip(r32.iter()) {
        assert!((a.re - b.re as f64).abs() < 1e-5 && (a.im - b.im as f64).abs() < 1e-5);
    }
}
