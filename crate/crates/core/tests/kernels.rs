use proptest::prelude::*;

use moyal_core::kernels::{bessel_k0, heat_kernel_landau, phi_integral, phi_majorant, psi_integral};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phi_is_dominated_by_k0(v2 in 0.01f64..20.0, xi in 0.1f64..4.0, theta in 0.5f64..4.0, mu2 in 0.0f64..5.0) {
        let phi = phi_integral(v2, xi, theta, mu2).unwrap();
        let k = phi_majorant(v2, xi, theta).unwrap();
        prop_assert!(phi <= k * (1.0 + 1e-10));
        prop_assert!(phi > 0.0);
    }

    #[test]
    fn phi_decreases_with_distance(v2 in 0.01f64..10.0, step in 0.01f64..2.0, mu2 in 0.0f64..3.0) {
        let near = phi_integral(v2, 1.0, 1.0, mu2).unwrap();
        let far = phi_integral(v2 + step, 1.0, 1.0, mu2).unwrap();
        prop_assert!(far < near);
    }

    #[test]
    fn psi_depends_on_the_modulus_of_xi(v2 in 0.01f64..10.0, xi in 0.1f64..4.0) {
        prop_assert_eq!(psi_integral(v2, xi, 1.0, 1.0).unwrap(), psi_integral(v2, -xi, 1.0, 1.0).unwrap());
    }

    #[test]
    fn heat_kernel_is_hermitian(x1 in -2.0f64..2.0, x2 in -2.0f64..2.0, y1 in -2.0f64..2.0, y2 in -2.0f64..2.0, t in 0.05f64..5.0) {
        let k = heat_kernel_landau([x1, x2], [y1, y2], t, 1.5, 2.0).unwrap();
        let kt = heat_kernel_landau([y1, y2], [x1, x2], t, 1.5, 2.0).unwrap();
        prop_assert!((k - kt.conj()).norm() <= 1e-15 * k.norm().max(1e-300));
    }
}

#[test]
fn k0_matches_its_series_at_small_argument() {
    // K₀(x) = −(ln(x/2) + γ) I₀(x) + (x²/4)(1 − ln(x/2) − γ) + O(x⁴ ln x)
    let gamma = 0.577_215_664_901_532_9;
    let x: f64 = 1e-3;
    let l = (x / 2.0).ln() + gamma;
    let series = -l * (1.0 + x * x / 4.0) + x * x / 4.0;
    assert!((bessel_k0(x).unwrap() - series).abs() < 1e-11);
}
