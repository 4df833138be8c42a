//! Invariants over randomly generated inputs.

use dppdesign::baselines::{fedorov_exchange, lhs_design, random_design, Placement};
use dppdesign::diagnostics::{f_function, g_function, linspace, reference_grid, ripley_k, EdgeCorrection};
use dppdesign::dpp::{build_cb_tables, sample_conditional_bernoulli, ProjectionWalk};
use dppdesign::emulator::{emulate_design, violating_set};
use dppdesign::io::format_f64;
use dppdesign::kernel::{build_kernel_matrix, condition_kernel, eigendecompose};
use dppdesign::rng::from_seed;
use dppdesign::sgd::{feature_map, random_batches, squared_loss_gradient};
use dppdesign::{CandidateSet, KernelFamily, KernelSpec};
use proptest::prelude::*;

fn points(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), 3..=max_n)
}

fn family() -> impl Strategy<Value = KernelFamily> {
    prop_oneof![Just(KernelFamily::GaussianIso), Just(KernelFamily::ExponentialL1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cb_draws_have_size_n_and_distinct_indices(
        lambdas in prop::collection::vec(0.01f64..5.0, 1..15),
        frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let n = 1 + ((lambdas.len() - 1) as f64 * frac) as usize;
        let t = build_cb_tables(&lambdas, n).unwrap();
        let s = sample_conditional_bernoulli(&t, &mut from_seed(seed));
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|&i| i < lambdas.len()));
    }

    #[test]
    fn cb_inclusion_probabilities_are_probabilities(
        lambdas in prop::collection::vec(0.0f64..5.0, 2..12),
        n in 1usize..4,
    ) {
        let n = n.min(lambdas.len());
        if let Ok(t) = build_cb_tables(&lambdas, n) {
            for j in 1..=lambdas.len() {
                for r in 0..=n {
                    let p = t.inclusion_probability(j, r);
                    prop_assert!((0.0..=1.0).contains(&p));
                }
            }
        }
    }

    #[test]
    fn kernel_is_symmetric_with_unit_diagonal(pts in points(12, 2), rho in 0.001f64..0.999, fam in family()) {
        let c = CandidateSet::new(pts).unwrap();
        let k = build_kernel_matrix(&c, &KernelSpec::new(fam, rho).unwrap()).unwrap();
        for i in 0..k.size() {
            prop_assert_eq!(k.get(i, i), 1.0);
            for j in 0..k.size() {
                prop_assert_eq!(k.get(i, j), k.get(j, i));
                prop_assert!(k.get(i, j) > 0.0 && k.get(i, j) <= 1.0);
            }
        }
        let eig = eigendecompose(&k).unwrap();
        prop_assert!(eig.eigenvalues().iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn walk_weights_sum_to_remaining(pts in points(10, 2), rho in 0.01f64..0.9, n in 1usize..4, seed in any::<u64>()) {
        let c = CandidateSet::new(pts).unwrap();
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, rho).unwrap()).unwrap();
        let eig = eigendecompose(&k).unwrap();
        let n = n.min(c.len());
        let cols: Vec<usize> = (0..n).collect();
        let mut walk = ProjectionWalk::new(&eig, &cols).unwrap();
        let mut rng = from_seed(seed);
        let mut taken = vec![false; c.len()];
        while walk.remaining() > 0 {
            let total: f64 = walk.raw_weights().iter().sum();
            prop_assert!((total - walk.remaining() as f64).abs() < 1e-8);
            prop_assert!(walk.raw_weights().iter().all(|&w| w > -1e-10 && w < 1.0 + 1e-10));
            let free: Vec<usize> = (0..c.len()).filter(|&i| !taken[i]).collect();
            let pos = free[rand::Rng::random_range(&mut rng, 0..free.len())];
            walk.select(pos);
            taken[pos] = true;
        }
    }

    #[test]
    fn conditioning_keeps_psd_and_shrinks_variance(pts in points(10, 2), rho in 0.05f64..0.9, m in 1usize..4) {
        let c = CandidateSet::new(pts).unwrap();
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, rho).unwrap()).unwrap();
        let m = m.min(c.len() - 1);
        let sel: Vec<usize> = (0..m).collect();
        let cond = condition_kernel(&k, &sel).unwrap();
        prop_assert_eq!(cond.size(), c.len() - m);
        for a in 0..cond.size() {
            let id = cond.candidate_ids()[a];
            prop_assert!(cond.get(a, a) <= k.get(id, id) + 1e-12);
            prop_assert!(cond.get(a, a) >= -1e-8);
            for b in 0..cond.size() {
                prop_assert!((cond.get(a, b) - cond.get(b, a)).abs() < 1e-12);
            }
        }
        prop_assert!(eigendecompose(&cond).is_ok());
    }

    #[test]
    fn emulated_designs_are_distinct_and_repeatable(pts in points(15, 2), rho in 0.01f64..0.9, n in 1usize..6) {
        let c = CandidateSet::new(pts).unwrap();
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, rho).unwrap()).unwrap();
        let n = n.min(c.len());
        let a = emulate_design(&k, &c, n, None).unwrap();
        let b = emulate_design(&k, &c, n, None).unwrap();
        prop_assert_eq!(&a.indices, &b.indices);
        let mut s = a.indices.clone();
        s.sort();
        s.dedup();
        prop_assert_eq!(s.len(), n);
    }

    #[test]
    fn violating_set_excludes_design_and_shares_a_coordinate(m in 3usize..8, n in 1usize..4, seed in any::<u64>()) {
        let c = CandidateSet::grid(m, 2).unwrap();
        let d = random_design(&c, n, &mut from_seed(seed)).unwrap();
        let v = violating_set(&c, &d);
        for &i in &v {
            prop_assert!(!d.indices.contains(&i));
            let p = c.point(i);
            prop_assert!(d.coords.iter().any(|q| q[0] == p[0] || q[1] == p[1]));
        }
        for i in 0..c.len() {
            if !v.contains(&i) && !d.indices.contains(&i) {
                let p = c.point(i);
                prop_assert!(d.coords.iter().all(|q| q[0] != p[0] && q[1] != p[1]));
            }
        }
    }

    #[test]
    fn lhs_columns_are_permutations(n in 1usize..20, d in 1usize..5, uniform in any::<bool>(), seed in any::<u64>()) {
        let placement = if uniform { Placement::Uniform } else { Placement::Centroid };
        let lhs = lhs_design(n, d, placement, &mut from_seed(seed)).unwrap();
        for j in 0..d {
            let mut col: Vec<usize> = lhs.bins.iter().map(|b| b[j]).collect();
            col.sort();
            prop_assert_eq!(col, (1..=n).collect::<Vec<_>>());
        }
        for (b, p) in lhs.bins.iter().zip(&lhs.points) {
            for j in 0..d {
                let lo = (b[j] - 1) as f64 / n as f64;
                prop_assert!(p[j] >= lo && p[j] <= lo + 1.0 / n as f64);
            }
        }
    }

    #[test]
    fn exchange_trace_never_decreases(pts in points(10, 2), n in 1usize..5, seed in any::<u64>()) {
        let c = CandidateSet::new(pts).unwrap();
        let k = build_kernel_matrix(&c, &KernelSpec::new(KernelFamily::GaussianIso, 0.2).unwrap()).unwrap();
        let n = n.min(c.len());
        let r = fedorov_exchange(&k, &c, n, 100, &mut from_seed(seed)).unwrap();
        prop_assert_eq!(r.trace.len(), 101);
        prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(r.design.log_det.unwrap(), *r.trace.last().unwrap());
    }

    #[test]
    fn nearest_neighbour_functions_are_cdfs(pts in points(20, 2)) {
        let h = linspace(1.5, 31);
        let f = f_function(&pts, &reference_grid(6, 2), &h).unwrap();
        let g = g_function(&pts, &h).unwrap();
        for curve in [&f, &g] {
            prop_assert!(curve.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(curve.iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert_eq!(*curve.last().unwrap(), 1.0);
        }
        let r = linspace(0.5, 11);
        for edge in [EdgeCorrection::None, EdgeCorrection::Translation] {
            let k = ripley_k(&pts, 1.0, &r, edge).unwrap();
            prop_assert!(k.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!(k[0] >= 0.0);
        }
    }

    #[test]
    fn random_batches_partition(m in 1usize..200, bs in 1usize..30, seed in any::<u64>()) {
        let batches = random_batches(m, bs, &mut from_seed(seed));
        prop_assert_eq!(batches.len(), m.div_ceil(bs));
        let mut all: Vec<usize> = batches.concat();
        all.sort();
        prop_assert_eq!(all, (0..m).collect::<Vec<_>>());
    }

    #[test]
    fn gradient_is_residual_times_features(x in prop::array::uniform5(0.0f64..1.0), beta in prop::array::uniform6(-10.0f64..10.0), y in -50.0f64..50.0) {
        let phi = feature_map(&x);
        let r: f64 = phi.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() - y;
        let g = squared_loss_gradient(&beta, &x, y);
        for i in 0..6 {
            prop_assert!((g[i] - 2.0 * r * phi[i]).abs() <= 1e-12 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn formatted_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let s = format_f64(v);
        prop_assert!(!s.contains('e'));
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}
