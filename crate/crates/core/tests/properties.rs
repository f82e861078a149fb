use cars_qfi::excitation::{image_amplitudes, EmitterScene, ExcitationConfig, PlaneWaveExcitation, VortexExcitation};
use cars_qfi::fisher::{
    fi_direct, fi_spade, fi_spade_partial_sums, mean_photons_spade, qfi_matrix, qfi_plane_normalized, qfi_separation,
    Family,
};
use cars_qfi::psf_modes::{gaussian_geometry, GaussianPsf, HermiteGaussBasis};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (0.0f64..4.0).prop_map(|ktilde| Family::Plane { ktilde }),
        (0.4f64..1.2, -0.3f64..0.3).prop_map(|(a, psi)| Family::Vortex { a, psi }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spade_never_exceeds_qfi(fam in family(), s in 0.02f64..3.0, m in 0usize..40) {
        let (amps, geom) = fam.unit_amplitudes(s).unwrap();
        let q = qfi_separation(&amps, &geom).normalized_value;
        let basis = HermiteGaussBasis::new(1.0, m).unwrap();
        prop_assert!(fi_spade(&amps, &basis).normalized_value <= q * (1.0 + 1e-12) + 1e-14);
        prop_assert!(qfi_matrix(&amps, &geom).is_psd(1e-9));
    }

    #[test]
    fn spade_partial_sums_grow(fam in family(), s in 0.02f64..3.0) {
        let (amps, _) = fam.unit_amplitudes(s).unwrap();
        let sums = fi_spade_partial_sums(&amps, 30);
        prop_assert!(sums.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn plane_qfi_depends_only_on_ktilde(
        k_pu_x in -2.0f64..2.0, ktilde in 0.0f64..4.0, ky in -3.0f64..3.0,
        s in 0.05f64..3.0, x0 in -1.0f64..1.0,
    ) {
        let exc = ExcitationConfig::Plane(PlaneWaveExcitation {
            k_pu_x,
            k_pu_y: 0.5 * ky,
            k_st_x: ktilde + 2.0 * k_pu_x,
            k_st_y: 2.0 * ky,
        });
        let scene = EmitterScene::new(s, x0, 1.0, 1.0).unwrap();
        let psf = GaussianPsf::unit();
        let amps = image_amplitudes(&exc, &scene, &psf).unwrap();
        let q = qfi_separation(&amps, &gaussian_geometry(s, 1.0).unwrap()).normalized_value;
        prop_assert!((q - qfi_plane_normalized(ktilde, s)).abs() < 1e-10);
    }

    #[test]
    fn vortex_qfi_is_even_in_row_offset(a in 0.4f64..1.2, psi in 0.0f64..0.4, s in 0.05f64..3.0) {
        let (p, gp) = Family::Vortex { a, psi }.unit_amplitudes(s).unwrap();
        let (m, gm) = Family::Vortex { a, psi: -psi }.unit_amplitudes(s).unwrap();
        let (qp, qm) = (qfi_separation(&p, &gp).value, qfi_separation(&m, &gm).value);
        prop_assert!((qp - qm).abs() <= 1e-12 * qp.max(1.0));
    }

    #[test]
    fn normalized_values_ignore_signal_strength(fam in family(), s in 0.05f64..3.0, g in 0.1f64..5.0, kappa in 0.05f64..1.0) {
        let exc = fam.excitation().unwrap();
        let psf = GaussianPsf::unit();
        let geom = gaussian_geometry(s, 1.0).unwrap();
        let unit = image_amplitudes(&exc, &EmitterScene::new(s, 0.0, 1.0, 1.0).unwrap(), &psf).unwrap();
        let scaled = image_amplitudes(&exc, &EmitterScene::new(s, 0.0, g, kappa).unwrap(), &psf).unwrap();
        let (a, b) = (qfi_separation(&unit, &geom), qfi_separation(&scaled, &geom));
        prop_assert!((a.normalized_value - b.normalized_value).abs() <= 1e-12 * a.normalized_value.max(1e-3));
        prop_assert!((b.value / a.value - g * g * kappa).abs() <= 1e-12 * g * g * kappa);
    }

    #[test]
    fn photons_are_conserved(fam in family(), s in 0.05f64..3.0, x0 in -0.5f64..0.5) {
        let exc = match fam {
            Family::Plane { ktilde } => ExcitationConfig::Plane(PlaneWaveExcitation::from_ktilde(ktilde)),
            Family::Vortex { a, psi } => ExcitationConfig::Vortex(VortexExcitation::new(a, psi).unwrap()),
        };
        let psf = GaussianPsf::unit();
        let amps = image_amplitudes(&exc, &EmitterScene::new(s, x0, 1.0, 1.0).unwrap(), &psf).unwrap();
        let basis = HermiteGaussBasis::new(1.0, 40).unwrap();
        let total: f64 = (0..=40).map(|m| mean_photons_spade(&amps, &basis, m).unwrap()).sum();
        prop_assert!((total - amps.total_photons()).abs() <= 1e-10 * amps.total_photons());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn direct_imaging_never_exceeds_qfi(fam in family(), s in 0.05f64..3.0) {
        let (amps, geom) = fam.unit_amplitudes(s).unwrap();
        let q = qfi_separation(&amps, &geom).normalized_value;
        let di = fi_direct(&amps, &GaussianPsf::unit()).unwrap().normalized_value;
        prop_assert!(di <= q + 1e-6);
        prop_assert!(di >= 0.0);
    }
}
