use order_recovery::features::normalized_entropy;
use order_recovery::spectrum::{
    box_kernel, broaden, gaussian_kernel, ideal_spectrum, noisy_mixture, sample_shots,
};
use order_recovery::{Instance, NoiseConfig, Sector, Spectrum};
use proptest::prelude::*;

fn weights(t: u32) -> impl Strategy<Value = Spectrum> {
    prop::collection::vec(0.0f64..1.0, 1usize << t).prop_filter_map("all zero", move |mut w| {
        w[0] += 1e-3;
        Spectrum::from_weights(t, w).ok()
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #[test]
    fn broaden_commutes_with_shifts(p in weights(6), sigma in 0.0f64..8.0, c in 0u64..64) {
        let k = gaussian_kernel(64, sigma).unwrap();
        let lhs = broaden(&p.rotated(c), &k).unwrap();
        let rhs = broaden(&p, &k).unwrap().rotated(c);
        prop_assert!(close(lhs.probs(), rhs.probs(), 1e-15));
        let total: f64 = lhs.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn broaden_is_linear(p in weights(5), u in weights(5), w in 0.0f64..=1.0, sigma in 0.0f64..5.0) {
        let k = box_kernel(32, sigma).unwrap();
        let mix: Vec<f64> = p.probs().iter().zip(u.probs()).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        let mix = Spectrum::from_weights(5, mix).unwrap();
        let lhs = broaden(&mix, &k).unwrap();
        let (bp, bu) = (broaden(&p, &k).unwrap(), broaden(&u, &k).unwrap());
        let rhs: Vec<f64> = bp.probs().iter().zip(bu.probs()).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        prop_assert!(close(lhs.probs(), &rhs, 1e-12));
    }

    #[test]
    fn mixture_and_sampling_stay_normalized(
        eps in 0.0f64..=1.0, sigma in 0.0f64..10.0, lambda in 0.0f64..=1.0,
        shots in 1u64..3000, seed: u64,
    ) {
        let inst = Instance::new(31, 4, 8).unwrap();
        let cfg = NoiseConfig {
            epsilon: eps,
            sigma0: sigma,
            lambda_uniform: lambda,
            sectors: vec![
                Sector { h: 0, nu: 0.5, sigma },
                Sector { h: 3, nu: 0.5, sigma: 2.0 * sigma },
            ],
            ..NoiseConfig::default()
        };
        let p = noisy_mixture(&inst, &cfg).unwrap();
        prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let s = sample_shots(&p, shots, seed).unwrap();
        prop_assert!((s.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn entropy_non_decreasing_in_lambda(eps in 0.0f64..=1.0, sigma in 0.0f64..6.0) {
        let inst = Instance::new(63, 8, 8).unwrap();
        let mut last = 0.0;
        for i in 0..=10 {
            let cfg = NoiseConfig {
                epsilon: eps,
                sigma0: sigma,
                lambda_uniform: f64::from(i) / 10.0,
                sectors: order_recovery::spectrum::default_sectors(&inst, sigma).unwrap(),
                ..NoiseConfig::default()
            };
            let h = normalized_entropy(&noisy_mixture(&inst, &cfg).unwrap());
            prop_assert!(h >= last - 1e-12, "lambda {}: {} < {}", i, h, last);
            last = h;
        }
    }
}

#[test]
fn comb_with_r_dividing_q_is_exact() {
    for (n, a) in [(15u64, 2u64), (15, 4), (63, 8), (255, 2)] {
        let inst = Instance::new(n, a, 9).unwrap();
        let (q, r) = (inst.q(), inst.order());
        assert_eq!(q % r, 0);
        for (y, &p) in ideal_spectrum(&inst).probs().iter().enumerate() {
            let want = if (y as u64).is_multiple_of(q / r) {
                1.0 / r as f64
            } else {
                0.0
            };
            assert_eq!(p, want, "{inst} y={y}");
        }
    }
}
