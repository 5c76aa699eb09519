use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xlmimo::baselines::{central_vmp, single_user_bound, zf_detect, BoundNoise};
use xlmimo::channel::standard_complex_normal;
use xlmimo::model::LambdaInit;
use xlmimo::{CMatrix, CVector, Constellation};

#[test]
fn noiseless_zf_recovers_every_symbol() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = Constellation::qpsk();
    for _ in 0..200 {
        let h = CMatrix::from_fn(12, 5, |_, _| standard_complex_normal(&mut rng));
        let x: Vec<usize> = (0..5).map(|_| rng.random_range(0..4)).collect();
        let y = &h * CVector::from_iterator(5, x.iter().map(|&i| c.symbol(i)));
        let out = zf_detect(&h, &y, &c);
        assert_eq!(out.decisions, x);
        assert!(!out.regularized);
    }
}

#[test]
fn zf_survives_a_rank_deficient_channel() {
    let c = Constellation::qpsk();
    let col = CVector::from_vec(vec![C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.5, 0.5)]);
    let h = CMatrix::from_columns(&[col.clone(), col]);
    let y = h.column(0) * c.symbol(1);
    let out = zf_detect(&h, &y, &c);
    assert!(out.regularized);
    assert_eq!(out.decisions.len(), 2);
}

#[test]
fn single_user_central_vmp_matches_the_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = Constellation::qpsk();
    let (m, trials, sigma2) = (8, 10_000, 10f64.powf(-0.6));
    let (mut vmp_err, mut bound_err) = (0, 0);
    for _ in 0..trials {
        let h = CMatrix::from_fn(m, 1, |_, _| standard_complex_normal(&mut rng));
        let xi = rng.random_range(0..4);
        let n = CVector::from_fn(m, |_, _| standard_complex_normal::<f64, _>(&mut rng) * sigma2.sqrt());
        let y = h.column(0) * c.symbol(xi) + &n;
        let out = central_vmp(&h, &y, &c, 20, LambdaInit::FromData, None).unwrap();
        vmp_err += usize::from(out.readout(0)[0] != xi);
        let b = single_user_bound(&h, &[xi], &c, BoundNoise::<f64, ChaCha8Rng>::Shared(&n), &mut rng);
        bound_err += usize::from(b.decisions[0] != xi);
    }
    let ser = vmp_err as f64 / trials as f64;
    assert!(ser < 1e-3, "central VMP SER {ser}");
    assert!(vmp_err <= 2 * bound_err.max(1), "vmp {vmp_err} bound {bound_err}");
}

#[test]
fn bound_marks_users_without_a_channel_as_erased() {
    let c = Constellation::qpsk();
    let mut h = CMatrix::zeros(4, 2);
    h[(0, 0)] = C::new(1.0, 0.0);
    let n = CVector::zeros(4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let out = single_user_bound(&h, &[2, 1], &c, BoundNoise::<f64, ChaCha8Rng>::Shared(&n), &mut rng);
    assert_eq!(out.decisions[0], 2);
    assert_eq!(out.erasures, vec![1]);
}
