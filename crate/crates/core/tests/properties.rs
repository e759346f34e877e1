mod common;

use proptest::prelude::*;

use tmperc::analytic::{
    a_of_t, coinflip_reduce, neighbor_count_law, pi_r, AnalyticModel, CoinflipClass, CoinflipModel,
};
use tmperc::engine::{
    run_cheating3, run_coinflip, run_halting3, run_standard, CoinflipState, EngineConfig,
    PercolationTrace, StandardProcess,
};
use tmperc::intervention::{
    predict, residual_tm, surrogate, InterventionSpec, ObservedState, Prediction, ResidualProfile,
};
use tmperc::rng::substream;
use tmperc::template::TemplateGraph;
use tmperc::tmgraph::{
    sample_graph, select_seeds, TMParams, ThresholdAssignment, ThresholdDistribution,
};

fn template() -> impl Strategy<Value = TemplateGraph> {
    (0..common::small_templates().len()).prop_map(|i| common::small_templates()[i].clone())
}

fn distribution(max_r: usize) -> impl Strategy<Value = ThresholdDistribution> {
    prop::collection::vec(0.0f64..1.0, 1..=max_r)
        .prop_filter_map("zero mass", |w| ThresholdDistribution::from_weights(w).ok())
}

fn assert_monotone(trace: &PercolationTrace) {
    let totals = trace.totals();
    for pair in trace.records.windows(2) {
        assert_eq!(pair[1].new, pair[1].total - pair[0].total);
    }
    assert!(totals.windows(2).all(|w| w[0] <= w[1]));
    for pair in trace.records.windows(2) {
        assert!(pair[0]
            .per_cluster
            .iter()
            .zip(&pair[1].per_cluster)
            .all(|(a, b)| a <= b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pi_r_matches_exact_rationals(
        tmpl in template(),
        p in 0.0f64..0.5,
        ratio in 0.0f64..1.0,
        t in 0u64..6,
        r in 1u32..6,
    ) {
        let k = tmpl.k() as u64;
        let params = TMParams::new(tmpl, 40 * k, p, p * ratio).unwrap();
        let exact = common::tail_exact(params.k_p() as u64 * t, params.p, params.k_q() as u64 * t, params.q, r);
        let got = pi_r(t, r, &params);
        prop_assert!((got - exact).abs() <= 1e-10 * exact + 1e-20, "{got} vs {exact}");
        prop_assert!((0.0..=1.0).contains(&got));
        prop_assert!(pi_r(t + 1, r, &params) >= got - 1e-15);
        prop_assert!(pi_r(t, r + 1, &params) <= got + 1e-15);
    }

    #[test]
    fn neighbour_count_law_sums_to_one(tmpl in template(), p in 0.0f64..1.0, q in 0.0f64..1.0, t in 0u64..8) {
        let k = tmpl.k() as u64;
        let params = TMParams::new(tmpl, 10 * k, p, q).unwrap();
        let law = neighbor_count_law(t, &params);
        let total: f64 = (0..law.support_len()).map(|j| law.pmf(j)).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ratio_bound(tmpl in template(), p in 1e-4f64..0.5, ratio in 0.0f64..1.0, r in 1u32..8, extra in 1u64..200) {
        let k = tmpl.k() as u64;
        let params = TMParams::new(tmpl, 1000 * k, p, p * ratio).unwrap();
        let t = r as u64 + extra;
        let law = neighbor_count_law(t, &params);
        let (lo, hi) = (law.pmf(r as usize), law.pmf(r as usize + 1));
        prop_assume!(hi > 0.0);
        let factor = params.phi() * t as f64 / (1.0 - params.p.max(params.q));
        prop_assert!(hi < factor * lo, "D_(r+1) = {hi}, bound {}", factor * lo);
    }

    #[test]
    fn f_is_affine_in_phi(dist in distribution(4), t in 1u64..30, phi in 0.0f64..500.0) {
        let params = TMParams::new(TemplateGraph::ring(5, 1).unwrap(), 5000, 2e-3, 5e-4).unwrap();
        let model = AnalyticModel::new(params.clone(), dist.clone()).unwrap();
        let t = t.min(model.t_max());
        let a = a_of_t(t, &dist, &params);
        let step = model.f(phi + 1.0, t) - model.f(phi, t);
        prop_assert!((step - (1.0 - a)).abs() < 1e-9);
    }

    #[test]
    fn critical_seed_is_minimal(dist in distribution(4), n_mul in 2u64..20, degree in 3.0f64..15.0) {
        let params = TMParams::from_degrees(TemplateGraph::ring(4, 1).unwrap(), 1000 * n_mul, degree * 0.6, degree * 0.4).unwrap();
        let model = AnalyticModel::new(params, dist).unwrap();
        let result = model.critical_seed();
        let phi = result.phi as f64;
        prop_assert!((1..=model.t_max()).all(|t| model.f(phi, t) >= 0.0));
        if result.phi >= 1 {
            prop_assert!((1..=model.t_max()).any(|t| model.f(phi - 1.0, t) < 0.0));
        }
        prop_assert!(result.t_star >= 1 && result.t_star <= model.t_max());
        let min = (1..=model.t_max()).map(|t| model.f(phi, t)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(model.f(phi, result.t_star), min);
    }

    #[test]
    fn coinflip_reduction_is_a_law(
        classes in prop::collection::vec((0u32..5, 0.0f64..1.0, 0.01f64..1.0), 1..4),
        cap in 6u32..25,
    ) {
        let total: f64 = classes.iter().map(|c| c.2).sum();
        let model = CoinflipModel {
            classes: classes.iter().map(|&(s, z, weight)| CoinflipClass { s, z, weight: weight / total }).collect(),
            cap,
        };
        let dist = coinflip_reduce(&model).unwrap();
        let total: f64 = dist.as_slice().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        let s_min = classes.iter().map(|c| c.0).min().unwrap();
        for r in 1..=s_min {
            prop_assert_eq!(dist.zeta(r), 0.0);
        }
    }

    #[test]
    fn engine_is_monotone_deterministic_and_order_free(
        tmpl in template(),
        size in 1u64..6,
        p in 0.0f64..1.0,
        q in 0.0f64..0.5,
        seed in any::<u64>(),
    ) {
        let k = tmpl.k() as u64;
        let n = k * size;
        let params = TMParams::new(tmpl, n, p, q).unwrap();
        let mut rng = substream(seed, &[]);
        let g = sample_graph(&params, &mut rng).unwrap();
        let thresholds: Vec<u32> = (0..n).map(|i| 1 + (seed.rotate_left(i as u32) % 3) as u32).collect();
        let seeds = select_seeds(n / 3 + 1, n, &mut rng).unwrap();
        let assignment = ThresholdAssignment(thresholds.clone());
        let config = EngineConfig::default().to_fixpoint();

        let trace = run_standard(&g, &assignment, &seeds, &config).unwrap();
        assert_monotone(&trace);
        prop_assert_eq!(&trace, &run_standard(&g, &assignment, &seeds, &config).unwrap());
        let mut process = StandardProcess::new(&g, &assignment, &seeds, &config).unwrap();
        process.run().unwrap();
        prop_assert_eq!(process.infected(), common::fixpoint_async(&g, &thresholds, &seeds, &mut substream(seed, &[9])));

        for run in [run_halting3, run_cheating3] {
            let a = run(&g, &assignment, &seeds, &config, &mut substream(seed, &[1])).unwrap();
            let b = run(&g, &assignment, &seeds, &config, &mut substream(seed, &[1])).unwrap();
            assert_monotone(&a);
            prop_assert_eq!(a, b);
        }
        let coins = CoinflipState::uniform(n as usize, 1, 0.5, 4);
        let a = run_coinflip(&g, &coins, &seeds, &config, &mut substream(seed, &[2])).unwrap();
        assert_monotone(&a);
        prop_assert_eq!(a, run_coinflip(&g, &coins, &seeds, &config, &mut substream(seed, &[2])).unwrap());
    }

    #[test]
    fn residual_laws_are_normalised(
        tmpl in template(),
        r in 1u32..5,
        counts in prop::collection::vec((0u64..40, 0u64..40), 8),
        p in 1e-3f64..0.05,
        ratio in 0.0f64..1.0,
    ) {
        let k = tmpl.k();
        let eta = 200u64;
        let params = TMParams::new(tmpl, eta * k as u64, p, p * ratio).unwrap();
        let prev: Vec<u64> = counts[..k].iter().map(|c| c.0).collect();
        let now: Vec<u64> = counts[..k].iter().map(|c| c.0 + c.1).collect();
        let infected: u64 = now.iter().sum();
        let mut healthy = vec![0; r as usize];
        healthy[r as usize - 1] = params.n - infected;
        let state = ObservedState {
            tau: 3,
            n: params.n,
            infected,
            infected_prev: prev.iter().sum(),
            per_cluster: now,
            per_cluster_prev: prev,
            healthy_by_threshold: healthy,
        };
        for c in 0..k {
            let law = residual_tm(&state, r, &params, c).unwrap();
            prop_assert!((law.total() - 1.0).abs() < 1e-10);
        }
        let profile = ResidualProfile::observe(&state, &params).unwrap();
        for law in profile.laws.iter().flatten() {
            prop_assert!((law.total() - 1.0).abs() < 1e-10);
            let thinned = law.thinned(0.5, 0.25);
            prop_assert!((thinned.total() - 1.0).abs() < 1e-10);
        }
        for spec in [
            InterventionSpec::bolster_a(0.5, 0.1).unwrap(),
            InterventionSpec::bolster_b(0.3, 0.1).unwrap(),
            InterventionSpec::delay(0.4, 6, 0.1),
            InterventionSpec::diminish(0.5, 0.3, 0.1),
            InterventionSpec::sequester(0.5, 0.5, 0.1),
        ] {
            let j = surrogate(&state, &spec, &params).unwrap();
            prop_assert!((j.mass() - 1.0).abs() < 1e-9, "{spec:?}: mass {}", j.mass());
        }
    }

    #[test]
    fn halt_region_is_a_down_set_in_alpha(
        infected in 200u64..500,
        share in 0.05f64..0.5,
        sequester in any::<bool>(),
    ) {
        let n = 10_000;
        let params = TMParams::new(TemplateGraph::single(), n, 15.0 / n as f64, 0.0).unwrap();
        let prev = ((1.0 - share) * infected as f64) as u64;
        let state = ObservedState::er(n, infected, prev, vec![0, 0, n - infected]);
        let mut seen_not_halt = false;
        for i in 0..=20 {
            let alpha = i as f64 / 20.0;
            let spec = if sequester {
                InterventionSpec::sequester(alpha, alpha, 0.1)
            } else {
                InterventionSpec::diminish(alpha, alpha, 0.1)
            };
            let verdict = predict(&surrogate(&state, &spec, &params).unwrap(), 0.1).unwrap();
            if verdict.outcome != Prediction::Halt {
                seen_not_halt = true;
            } else {
                prop_assert!(!seen_not_halt, "halt again at alpha = {alpha}");
            }
        }
    }
}
