use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unimodal::copula::{copula_density, copula_mode_given};
use unimodal::data::Column;
use unimodal::dpmix::{update_sticks, AllocationState, SliceSchedule, StickState};
use unimodal::kernel::{partial_mean_integral, KernelParams};
use unimodal::mcmc::uni::{sweep_uni, UniState};
use unimodal::mcmc::{McmcConfig, MoveStats};
use unimodal::normal;
use unimodal::quad::{integrate, integrate_lower, integrate_upper};

fn nonzero_mu() -> impl Strategy<Value = f64> {
    (0.5f64..20.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m })
}

fn kernel() -> impl Strategy<Value = KernelParams<f64>> {
    (nonzero_mu(), 0.1f64..10.0, -50.0f64..50.0).prop_map(|(mu, c, kappa)| KernelParams::new(mu, c, kappa).unwrap())
}

fn upper_mass(p: &KernelParams<f64>) -> f64 {
    integrate_upper(|y| p.density(y), p.kappa(), 1e-11)
}

fn lower_mass(p: &KernelParams<f64>) -> f64 {
    integrate_lower(|y| p.density(y), p.kappa(), 1e-11)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_integrates_to_one(p in kernel()) {
        let total = upper_mass(&p) + lower_mass(&p);
        prop_assert!((total - 1.0).abs() < 1e-6, "total {total}");
    }

    #[test]
    fn mass_above_mode_is_normal_tail(p in kernel()) {
        let expected = normal::cdf(p.mu().signum() * p.c().sqrt());
        prop_assert!((upper_mass(&p) - expected).abs() < 1e-6);
    }

    #[test]
    fn kernel_decreases_away_from_mode(p in kernel(), span in 0.1f64..100.0) {
        for side in [-1.0, 1.0] {
            let mut prev = f64::INFINITY;
            for k in 1..=1000 {
                let f = p.density(p.kappa() + side * span * k as f64 / 1000.0);
                prop_assert!(f <= prev * (1.0 + 1e-12) + 1e-300);
                prev = f;
            }
        }
    }

    #[test]
    fn partial_mean_matches_quadrature(xi in -30.0f64..30.0, mu in -10.0f64..10.0, sigma in 0.05f64..10.0) {
        let closed = partial_mean_integral(xi, mu, sigma).unwrap();
        let g = |s: f64| s * (-0.5 * ((s - mu) / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let quad = integrate(g, 0.0, xi, 1e-12).abs();
        prop_assert!((closed - quad).abs() < 1e-8, "closed {closed} quad {quad}");
    }

    #[test]
    fn latent_density_integrates_to_kernel(p in kernel(), offset in 0.01f64..20.0, above in any::<bool>()) {
        let y = p.kappa() + if above { offset } else { -offset };
        let quad = integrate(|x| p.latent_density(y, x), 0.0, 1.0, 1e-13);
        let f = p.density(y);
        prop_assert!((quad - f).abs() <= 1e-8 * f.max(1e-3), "quad {quad} closed {f}");
    }

    #[test]
    fn latent_maximizer_beats_grid(p in kernel(), offset in 0.01f64..20.0, above in any::<bool>()) {
        let y = p.kappa() + if above { offset } else { -offset };
        let x_hat = p.latent_argmax(y);
        let best = (1..=20_000)
            .map(|k| k as f64 / 20_000.0)
            .max_by(|a, b| p.ln_latent_density(y, *a).total_cmp(&p.ln_latent_density(y, *b)))
            .unwrap();
        prop_assert!((x_hat - best).abs() < 1e-4 || p.ln_latent_density(y, x_hat) >= p.ln_latent_density(y, best));
    }

    #[test]
    fn copula_is_symmetric_and_reflective(x1 in 0.001f64..0.999, x2 in 0.001f64..0.999, rho in 0.0f64..0.99) {
        let c = copula_density(x1, x2, rho).unwrap();
        prop_assert!((c - copula_density(x2, x1, rho).unwrap()).abs() <= 1e-10 * c);
        prop_assert!((c - copula_density(1.0 - x1, 1.0 - x2, rho).unwrap()).abs() <= 1e-8 * c);
    }

    #[test]
    fn copula_mode_beats_grid(x_other in 0.01f64..0.99, rho in 0.05f64..0.95) {
        let mode = copula_mode_given(x_other, rho).unwrap();
        let at_mode = copula_density(mode, x_other, rho).unwrap();
        for k in 1..1000 {
            let x = k as f64 / 1000.0;
            prop_assert!(copula_density(x, x_other, rho).unwrap() <= at_mode * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sticks_satisfy_identity(counts in prop::collection::vec(0usize..6, 1..12), m in 0.05f64..20.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s: StickState<f64> = update_sticks(&counts, m, counts.len(), &mut rng);
        let mut rest = 1.0;
        for (v, w) in s.fractions().iter().zip(s.weights()) {
            prop_assert!((w - v * rest).abs() <= 1e-15);
            rest *= 1.0 - v;
        }
        prop_assert!(s.weights().iter().sum::<f64>() <= 1.0 + 1e-12);
        prop_assert!((s.remaining() - rest).abs() <= 1e-15);
    }

    #[test]
    fn slices_admit_their_component(d in prop::collection::vec(0usize..8, 1..30), gamma in 0.001f64..1.0, seed in any::<u64>()) {
        let schedule = SliceSchedule::new(gamma).unwrap();
        let a = AllocationState::from_allocations(d.clone(), &schedule, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(a.slices_consistent(&schedule));
        prop_assert!(a.truncation >= a.max_component());
        for (k, &avail) in d.iter().zip(&a.available) {
            prop_assert!(avail > *k);
        }
    }

    #[test]
    fn sweeps_keep_slices_consistent(ys in prop::collection::vec(-20.0f64..20.0, 3..15), seed in any::<u64>()) {
        let data = Column::new(ys).unwrap();
        let cfg = McmcConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = UniState::initial(&data, &cfg, &mut rng).unwrap();
        let mut stats = MoveStats::default();
        let schedule = cfg.tuning.schedule();
        for _ in 0..20 {
            sweep_uni(&mut state, &data, &cfg, &mut stats, &mut rng).unwrap();
            prop_assert!(state.alloc.slices_consistent(&schedule));
            let sorted = data.sorted();
            prop_assert!(state.kappa > sorted[0] && state.kappa < sorted[sorted.len() - 1]);
        }
    }
}
