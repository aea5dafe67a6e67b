use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robin_spectra::bounds::belsup;
use robin_spectra::domain::parse_value_list;
use robin_spectra::energy::{grad_energy, rayleigh};
use robin_spectra::io;
use robin_spectra::mesh::{build_interval, build_square};
use robin_spectra::{BoundaryWeight, NodalField};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rayleigh_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0, p in 1.1f64..10.0, m in 0.1f64..10.0) {
        let mesh = build_square(0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = NodalField::new(&mesh, (0..mesh.n_nodes()).map(|_| rand::Rng::gen_range(&mut rng, 0.1..1.0)).collect()).unwrap();
        let w = BoundaryWeight::random(&mesh, m, &mut rng).unwrap();
        let a = rayleigh(&mesh, &u, Some(&w), p).unwrap();
        let b = rayleigh(&mesh, &u.scaled(c), Some(&w), p).unwrap();
        prop_assert!(close(a, b, 1e-10), "{} vs {}", a, b);
        prop_assert!(close(grad_energy(&mesh, &u.scaled(c), p), c.powf(p) * grad_energy(&mesh, &u, p), 1e-10));
    }

    #[test]
    fn constants_give_mass_over_volume(seed in any::<u64>(), value in 0.1f64..10.0, p in 1.1f64..10.0, m in 0.01f64..100.0) {
        let mesh = build_square(0.25).unwrap();
        let w = BoundaryWeight::random(&mesh, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let q = rayleigh(&mesh, &NodalField::constant(&mesh, value), Some(&w), p).unwrap();
        prop_assert!(close(q, m / mesh.volume(), 1e-10));
    }

    #[test]
    fn belsup_is_increasing_and_below_both_caps(
        m1 in 1e-6f64..1e4, f in 1.001f64..10.0, ld in 0.1f64..1e3, vol in 0.1f64..10.0, p in 1.1f64..10.0
    ) {
        let m2 = m1 * f;
        let (a, b) = (belsup(m1, ld, vol, p), belsup(m2, ld, vol, p));
        prop_assert!(a < b);
        prop_assert!(b <= ld && b <= m2 / vol);
    }

    #[test]
    fn fields_round_trip_exactly(values in prop::collection::vec(-1e6f64..1e6, 21)) {
        let mesh = build_interval(20).unwrap();
        let u = NodalField::new(&mesh, values).unwrap();
        let back = io::read_field(&mesh, &io::write_field(&mesh, &u)).unwrap();
        prop_assert_eq!(back, u);
    }

    #[test]
    fn weights_round_trip_exactly(seed in any::<u64>(), m in 1e-3f64..1e3) {
        let mesh = build_square(0.25).unwrap();
        let w = BoundaryWeight::random(&mesh, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let back = io::read_weight(&mesh, &io::write_weight(&w)).unwrap();
        prop_assert_eq!(back.facet_density(), w.facet_density());
        prop_assert_eq!(back.atoms(), w.atoms());
    }

    #[test]
    fn log_lists_hit_their_endpoints(a in 1e-6f64..1.0, r in 1.5f64..1e6, n in 2usize..40) {
        let b = a * r;
        let v = parse_value_list(&format!("log:{a}:{b}:{n}")).unwrap();
        prop_assert_eq!(v.len(), n);
        prop_assert_eq!(v[0], a);
        prop_assert_eq!(v[n - 1], b);
        prop_assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}
