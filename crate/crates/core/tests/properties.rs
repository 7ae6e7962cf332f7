use phasecon_core::annealer::{perturb_point, random_constellation, swap_labels};
use phasecon_core::capacity::{ami_quadrature, pami_quadrature};
use phasecon_core::likelihood::{log_ratio, MetricContext};
use phasecon_core::model::{
    is_gray, make_constellation, normalize_average_power, reference_constellation, ChannelParams, Constellation,
    ReferenceKind,
};
use phasecon_core::quadrature::QuadratureGrid;
use phasecon_core::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn constellation(size: usize) -> impl Strategy<Value = Constellation> {
    any::<u64>().prop_map(move |seed| random_constellation(size, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap())
}

fn channel() -> impl Strategy<Value = ChannelParams> {
    (-5.0..25.0f64, prop_oneof![Just(0.0), 0.5..30.0f64])
        .prop_map(|(snr, pnsd)| ChannelParams::from_snr_pnsd(snr, pnsd).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalization_is_idempotent(c in constellation(8), scale in 0.01..100.0f64) {
        let once = normalize_average_power(&c.scaled(scale)).unwrap();
        let twice = normalize_average_power(&once).unwrap();
        prop_assert!((once.average_power() - 1.0).abs() < 1e-12);
        for (a, b) in once.points().iter().zip(twice.points()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        prop_assert_eq!(once.labels(), c.labels());
    }

    #[test]
    fn parts_round_trip(c in constellation(16)) {
        let (points, labels) = c.clone().into_parts();
        prop_assert_eq!(make_constellation(points, labels).unwrap(), c);
    }

    #[test]
    fn gray_check_ignores_rotation_and_scale(c in constellation(8), theta in -3.2..3.2f64, scale in 0.1..10.0f64) {
        prop_assert_eq!(is_gray(&c), is_gray(&c.rotated(theta).scaled(scale)));
        let psk = reference_constellation(ReferenceKind::Psk, 16, None).unwrap();
        prop_assert!(is_gray(&psk.rotated(theta).scaled(scale)));
    }

    #[test]
    fn channel_conversions_round_trip(snr in -20.0..60.0f64, pnsd in 0.01..60.0f64) {
        let p = ChannelParams::from_snr_pnsd(snr, pnsd).unwrap();
        prop_assert!((p.snr_db() - snr).abs() <= 1e-12 * snr.abs().max(1.0));
        prop_assert!((p.pnsd_deg() - pnsd).abs() <= 1e-12 * pnsd);
        prop_assert!((p.a_ratio() * p.k_phi() - p.k_n()).abs() <= 1e-12 * p.k_n());
    }

    #[test]
    fn pami_never_exceeds_ami(c in constellation(8), p in channel()) {
        let grid = QuadratureGrid::new(4).unwrap();
        let a = ami_quadrature(&c, &p, &grid).unwrap();
        let b = pami_quadrature(&c, &p, &grid).unwrap();
        prop_assert!(b.raw_bits <= a.raw_bits + 1e-6, "{} > {}", b.raw_bits, a.raw_bits);
        prop_assert!((0.0..=3.0).contains(&a.bits));
    }

    #[test]
    fn label_swaps_keep_ami(c in constellation(8), p in channel(), i in 0usize..8, j in 0usize..8) {
        prop_assume!(i != j);
        let grid = QuadratureGrid::new(3).unwrap();
        let swapped = swap_labels(&c, i, j).unwrap();
        let a = ami_quadrature(&c, &p, &grid).unwrap().raw_bits;
        let b = ami_quadrature(&swapped, &p, &grid).unwrap().raw_bits;
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn ami_is_rotation_invariant(c in constellation(8), p in channel(), theta in -3.2..3.2f64) {
        let grid = QuadratureGrid::new(3).unwrap();
        let a = ami_quadrature(&c, &p, &grid).unwrap().raw_bits;
        let b = ami_quadrature(&c.rotated(theta), &p, &grid).unwrap().raw_bits;
        prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn perturbation_keeps_unit_power(c in constellation(4), idx in 0usize..4, d in 1e-6..2.0f64, u1 in 0.0..1.0f64, u2 in 0.0..1.0f64) {
        let out = perturb_point(&c, idx, d, (u1, u2)).unwrap();
        prop_assert!((out.average_power() - 1.0).abs() < 1e-12);
        prop_assert_eq!(out.labels(), c.labels());
    }

    #[test]
    fn log_ratio_chain_rule(
        y in (-2.0..2.0f64, -2.0..2.0f64),
        p in channel(),
        a in 0usize..8, b in 0usize..8, x in 0usize..8,
    ) {
        let psk = reference_constellation(ReferenceKind::Psk, 8, None).unwrap();
        let ctx = MetricContext::new(p, &psk);
        let pts = psk.points();
        let y = Complex64::new(y.0, y.1);
        let direct = log_ratio(y, pts[a], pts[b], &ctx);
        let via = log_ratio(y, pts[a], pts[x], &ctx) - log_ratio(y, pts[b], pts[x], &ctx);
        prop_assert!((direct - via).abs() < 1e-9 * (1.0 + direct.abs()));
    }
}
