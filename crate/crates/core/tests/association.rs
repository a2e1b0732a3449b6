use hetnet_da::association::{
    associate_users, ca_fixed_point, ca_macro_probability, da_probabilities, threshold_constant, AssociationRule,
    ClusterSpec,
};
use hetnet_da::geometry::{simulation_window, Deployment};
use hetnet_da::{NetworkConfig, Tier};
use proptest::prelude::*;

fn cfg_with(p_m: f64, p_s: f64, ratio: f64) -> NetworkConfig {
    NetworkConfig {
        p_m,
        p_s,
        lambda_s: ratio * 1e-7,
        ..NetworkConfig::default()
    }
}

/// Bisection on the scalar equation of a cluster with `n` equal groups of `k`.
fn scalar_root(cfg: &NetworkConfig, n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let f = |a: f64| {
        let k_m = (k - 1.0) * a + 1.0 + (n - 1.0) * k * a;
        let k_s = (k - 1.0) * (1.0 - a) + 1.0;
        ca_macro_probability(cfg, threshold_constant(cfg, k_m, k_s).unwrap()) - a
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn decoupled_users_join_the_nearest_bs() {
    let cfg = NetworkConfig::default();
    let dep = Deployment::sample(&cfg, simulation_window(&cfg), Some(Tier::Macro), 41).unwrap();
    let s = associate_users(&dep, AssociationRule::Decoupled).unwrap();
    assert_eq!(s.links.len(), dep.user_points.len());
    for l in &s.links {
        let closer = if l.nearest_sbs.distance < l.nearest_mbs.distance { Tier::Small } else { Tier::Macro };
        assert_eq!(l.serving, closer);
        assert_eq!(l.serving_distance(), l.nearest_mbs.distance.min(l.nearest_sbs.distance));
    }
    let served: usize = s.mbs_load.iter().chain(&s.sbs_load).sum();
    assert_eq!(served, s.links.len());
    for bs in 0..dep.mbs_points.len() {
        assert_eq!(s.served_by(Tier::Macro, bs).len(), s.load(Tier::Macro, bs));
    }
}

#[test]
fn coupling_shifts_users_to_the_macro_tier() {
    let cfg = NetworkConfig::default();
    let dep = Deployment::sample(&cfg, simulation_window(&cfg), Some(Tier::Macro), 42).unwrap();
    let da = associate_users(&dep, AssociationRule::Decoupled).unwrap();
    let ca = associate_users(&dep, AssociationRule::Coupled { c: 0.4 }).unwrap();
    assert!(ca.macro_fraction() > da.macro_fraction());
    // A coupled user joins the SBS only if a decoupled one would too.
    for (d, c) in da.links.iter().zip(&ca.links) {
        if c.serving == Tier::Small {
            assert_eq!(d.serving, Tier::Small);
        }
    }
    let cross: usize = (0..dep.mbs_points.len()).map(|m| ca.kappa(Tier::Macro, m)).sum();
    let to_small = ca.links.iter().filter(|l| l.serving == Tier::Small).count();
    assert_eq!(cross, to_small);
}

#[test]
fn empty_tier_is_an_invalid_realization() {
    let cfg = NetworkConfig::default();
    let mut dep = Deployment::sample(&cfg, 2000.0, Some(Tier::Macro), 43).unwrap();
    dep.sbs_points.clear();
    assert!(associate_users(&dep, AssociationRule::Decoupled).is_err());
}

#[test]
fn irregular_cluster_converges() {
    let cfg = cfg_with(10.0, 0.5, 8.0);
    let cluster = ClusterSpec::new(vec![vec![3, 0, 7, 1], vec![2, 5, 0, 4]], 1).unwrap();
    let p = ca_fixed_point(&cfg, &cluster).unwrap();
    assert!(p.residual < 1e-10);
    for (row, srow) in p.a_m_ca.iter().zip(&p.a_s_ca) {
        for (a, s) in row.iter().zip(srow) {
            assert!((0.0..=1.0).contains(a));
            assert_eq!(a + s, 1.0);
        }
    }
}

#[test]
fn malformed_clusters_are_rejected() {
    assert!(ClusterSpec::new(vec![], 0).is_err());
    assert!(ClusterSpec::new(vec![vec![1, 2], vec![3]], 0).is_err());
    assert!(ClusterSpec::new(vec![vec![1]], 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fixed_point_is_the_unique_scalar_root(
        p_m in 0.1f64..40.0, p_s in 0.05f64..2.0, ratio in 1.0f64..12.0, n in 1usize..4, k in 1usize..6,
    ) {
        let cfg = cfg_with(p_m, p_s, ratio);
        let cluster = ClusterSpec::new(vec![vec![k; n]], 0).unwrap();
        let p = ca_fixed_point(&cfg, &cluster).unwrap();
        let root = scalar_root(&cfg, n, k);
        for a in &p.a_m_ca[0] {
            prop_assert!((a - root).abs() < 1e-8, "{} vs {}", a, root);
        }
    }

    #[test]
    fn common_power_scale_leaves_association_unchanged(scale in 0.01f64..100.0, p_m in 0.1f64..40.0) {
        let a = cfg_with(p_m, 0.1, 5.0);
        let b = cfg_with(p_m * scale, 0.1 * scale, 5.0);
        let cl = ClusterSpec::from_config(&a);
        let pa = ca_fixed_point(&a, &cl).unwrap();
        let pb = ca_fixed_point(&b, &cl).unwrap();
        prop_assert!((pa.a_m_ca[0][0] - pb.a_m_ca[0][0]).abs() < 1e-9);
        prop_assert_eq!(da_probabilities(&a), da_probabilities(&b));
    }

    #[test]
    fn more_macro_power_attracts_more_users(p_m in 0.1f64..30.0, factor in 1.01f64..3.0, ratio in 1.0f64..10.0) {
        let lo = cfg_with(p_m, 0.1, ratio);
        let hi = cfg_with(p_m * factor, 0.1, ratio);
        let cl = ClusterSpec::from_config(&lo);
        prop_assert!(ca_fixed_point(&hi, &cl).unwrap().a_m_ca[0][0] >= ca_fixed_point(&lo, &cl).unwrap().a_m_ca[0][0]);
    }

    #[test]
    fn macro_probability_falls_with_the_threshold(c in 0.01f64..1.0, dc in 0.001f64..1.0, ratio in 0.5f64..20.0) {
        let cfg = cfg_with(10.0, 0.1, ratio);
        prop_assert!(ca_macro_probability(&cfg, c + dc) < ca_macro_probability(&cfg, c));
        let (m, s) = da_probabilities(&cfg);
        prop_assert!((m + s - 1.0).abs() < 1e-15);
        prop_assert!((ca_macro_probability(&cfg, 1.0) - m).abs() < 1e-15);
    }
}
