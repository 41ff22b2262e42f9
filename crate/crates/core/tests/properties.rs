use netbell_core::covariance::{self, DykstraOptions, Embedding};
use netbell_core::entropic;
use netbell_core::inequalities as iq;
use netbell_core::localfit::{self, CorrelatorModel, FitOptions};
use netbell_core::lp::{self, LpProblem};
use netbell_core::model::{decode, encode, no_signaling_check};
use netbell_core::quantum::{born, random_strategy};
use netbell_core::{Distribution, LocalModel, Network, Scenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn random_dist(outputs: &[usize], seed: u64) -> Distribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = outputs.iter().product();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    Distribution::from_computed(Scenario::no_input(outputs), raw.iter().map(|v| v / s).collect()).unwrap()
}

proptest! {
    #![proptest_config(cfg(64))]

    #[test]
    fn encode_decode_round_trip(radix in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
        let total: usize = radix.iter().product();
        let idx = (seed as usize) % total;
        prop_assert_eq!(encode(&decode(idx, &radix), &radix), idx);
    }

    #[test]
    fn tv_distance_is_a_metric(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (x, y, z) = (random_dist(&[2, 3], a), random_dist(&[2, 3], b), random_dist(&[2, 3], c));
        prop_assert!(x.tv_distance(&x) == 0.0);
        prop_assert!((x.tv_distance(&y) - y.tv_distance(&x)).abs() < 1e-15);
        prop_assert!(x.tv_distance(&z) <= x.tv_distance(&y) + y.tv_distance(&z) + 1e-12);
        prop_assert!(x.tv_distance(&y) <= 1.0 + 1e-12);
    }

    #[test]
    fn mixtures_stay_normalized(a in any::<u64>(), b in any::<u64>(), w in 0.0f64..=1.0) {
        let m = random_dist(&[2, 2, 2], a).mix(&random_dist(&[2, 2, 2], b), w).unwrap();
        prop_assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shannon_elemental_inequalities_hold(seed in any::<u64>(), n in 2usize..5) {
        let outs = vec![2; n];
        let d = random_dist(&outs, seed);
        let ev = entropic::entropy_vector_of_joint(&outs, &d.probs).unwrap();
        prop_assert!(entropic::elemental_violation(&ev.h, n) <= 1e-9);
    }

    #[test]
    fn fourier_pair_is_an_involution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..64).map(|_| rng.gen::<f64>()).collect();
        let s: f64 = raw.iter().sum();
        let q: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let m = CorrelatorModel::from_q([2, 1, 2], [1, 2, 1], &q);
        for (a, b) in m.q().iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn covariance_ignores_constant_shifts(seed in any::<u64>(), shift in -3.0f64..3.0) {
        let d = random_dist(&[2, 3, 2], seed);
        let e = Embedding::one_hot(&[2, 3, 2]);
        let mut shifted = e.clone();
        for v in shifted.vectors[1].iter_mut() {
            v.iter_mut().for_each(|x| *x += shift);
        }
        let a = covariance::covariance(&d, &e).unwrap();
        let b = covariance::covariance(&d, &Embedding::new(shifted.vectors).unwrap()).unwrap();
        prop_assert!(a.sub(&b).frobenius() < 1e-12);
    }
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn triangle_local_models_pass_every_necessary_test(seed in any::<u64>(), det in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::triangle(2);
        let cards: Vec<usize> = (0..3).map(|_| rng.gen_range(1..4)).collect();
        let d = LocalModel::random(&net, &cards, det, &mut rng).evaluate(&net).unwrap();
        prop_assert!(iq::finner_triangle(&d).unwrap().satisfied);
        prop_assert!(iq::ns_triangle(&d).unwrap().satisfied);
        prop_assert!(entropic::check_triangle_entropy(&d).unwrap().satisfied);
        let c = covariance::test_distribution(&d, &net, &Embedding::one_hot(&[2, 2, 2]), DykstraOptions::default()).unwrap();
        prop_assert!(c.feasible, "residual {}", c.residual);
    }

    #[test]
    fn bell_local_models_respect_chsh(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::bell(2, 2, 2);
        let card = rng.gen_range(1..6);
        let d = LocalModel::random(&net, &[card], false, &mut rng).evaluate(&net).unwrap();
        prop_assert!(iq::chsh(&d).unwrap().value <= 2.0 + 1e-12);
    }

    #[test]
    fn born_outputs_do_not_signal(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::bilocal((2, 2), (2, 2), (2, 2));
        let d = born(&random_strategy(&net, 2, &mut rng).unwrap()).unwrap();
        prop_assert!(no_signaling_check(&d, 1e-10).passed);
    }

    #[test]
    fn random_lps_agree_with_exact_mode(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..6);
        let mut p = LpProblem::<f64>::new(n);
        for _ in 0..rng.gen_range(1..6) {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-3i32..4) as f64).collect();
            let b = rng.gen_range(-4i32..5) as f64;
            if rng.gen_bool(0.3) {
                p.add_eq(row, b);
            } else {
                p.add_le(row, b);
            }
        }
        for k in 0..n {
            p.upper[k] = Some(5.0);
        }
        let f = lp::solve(&p).unwrap();
        let e = lp::solve_exact(&p).unwrap();
        prop_assert_eq!(f.is_feasible(), e.is_feasible());
        prop_assert!(lp::verify_certificate(&p, &f));
        prop_assert!(lp::verify_certificate(&p.to_rational(), &e));
    }

    #[test]
    fn fit_history_never_increases(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::triangle(2);
        let d = LocalModel::random(&net, &[2, 2, 2], false, &mut rng).mix_target(&net, &mut rng);
        let mut opts = FitOptions::new(vec![2, 2, 2]);
        opts.restarts = 1;
        opts.smooth_iters = 0;
        opts.seed = seed;
        let r = localfit::fit(&d, &net, &opts).unwrap();
        for w in r.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

/// Local distribution mixed with a random one, so the fit has work to do.
trait MixTarget {
    fn mix_target(&self, net: &Network, rng: &mut ChaCha8Rng) -> Distribution;
}

impl MixTarget for LocalModel {
    fn mix_target(&self, net: &Network, rng: &mut ChaCha8Rng) -> Distribution {
        let d = self.evaluate(net).unwrap();
        d.mix(&random_dist(&[2, 2, 2], rng.gen()), 0.7).unwrap()
    }
}
