use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;

use nbn::analysis::{evolutionary_path, identify_optima, set_distance, FitnessScale};
use nbn::builder::{cnbsi, cnbsrp, cnbsrp_local};
use nbn::io::{self as nio, Annotations, ExportFormat, NodeRecord};
use nbn::problems::{generate_rue, RUE_DEFAULT_EXTENT};
use nbn::sampling::{sample_global, sample_local, LocalStrategy};
use nbn::transition::{argmax_transition, TransitionModel};
use nbn::{NbnGraph, Problem, SampleSet, Solution};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn binary_set(dim: usize, n: usize, jitter: Option<u64>, seed: u64) -> Arc<SampleSet> {
    let p = match jitter {
        Some(j) => Problem::onemax_jittered(dim, j),
        None => Problem::onemax(dim),
    };
    Arc::new(sample_global(&Arc::new(p), n, seed).unwrap())
}

fn tour_set(dim: usize, n: usize, seed: u64) -> Arc<SampleSet> {
    let p = Arc::new(Problem::Tsp(generate_rue(dim, seed, RUE_DEFAULT_EXTENT)));
    Arc::new(sample_global(&p, n, seed).unwrap())
}

fn arb_binary() -> impl Strategy<Value = Arc<SampleSet>> {
    (4usize..14, 2usize..160, proptest::option::of(any::<u64>()), any::<u64>())
        .prop_map(|(d, n, j, s)| binary_set(d, n, j, s))
}

fn arb_tours() -> impl Strategy<Value = Arc<SampleSet>> {
    (5usize..10, 2usize..120, any::<u64>()).prop_map(|(d, n, s)| tour_set(d, n, s))
}

fn exact_nbd(set: &SampleSet, id: u32) -> f64 {
    set.ids()
        .filter(|&j| set.fitness(j) > set.fitness(id))
        .map(|j| set.distance(id, j))
        .fold(f64::INFINITY, f64::min)
}

fn check_sound_and_bounded(set: &Arc<SampleSet>, g: &NbnGraph) -> Result<(), TestCaseError> {
    for id in set.ids() {
        if let Some(l) = g.link(id) {
            prop_assert!(set.fitness(l.parent) > set.fitness(id));
            prop_assert_eq!(l.distance, set.distance(id, l.parent));
        }
        prop_assert!(g.nbd(id) >= exact_nbd(set, id));
    }
    prop_assert!(g.check_acyclic().is_ok());
    Ok(())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn exact_build_matches_brute_force(set in prop_oneof![arb_binary(), arb_tours()]) {
        let g = NbnGraph::new(set.clone(), cnbsi(&set)).unwrap();
        for id in set.ids() {
            prop_assert_eq!(g.nbd(id), exact_nbd(&set, id));
        }
        prop_assert!(g.check_acyclic().is_ok());
    }

    #[test]
    fn projection_build_is_sound_and_one_sided(
        set in prop_oneof![arb_binary(), arb_tours()],
        rounds in 1usize..6,
        leaf in 2usize..30,
        seed in any::<u64>(),
    ) {
        let g = NbnGraph::new(set.clone(), cnbsrp(&set, rounds, leaf, seed).unwrap()).unwrap();
        check_sound_and_bounded(&set, &g)?;
    }

    #[test]
    fn local_build_is_sound(dim in 8usize..40, k in 1usize..8, n in 2usize..200, seed in any::<u64>(), tour in any::<bool>()) {
        let p = if tour {
            Arc::new(Problem::Tsp(generate_rue(dim, seed, RUE_DEFAULT_EXTENT)))
        } else {
            Arc::new(Problem::onemax(dim))
        };
        let center = p.optimum().unwrap_or_else(|| (0..dim as u32).collect());
        let set = Arc::new(sample_local(&p, &center, k, n, seed, LocalStrategy::UniformRadius).unwrap());
        let c = Solution::new(center.clone(), p.evaluate(&center).unwrap());
        let g = NbnGraph::new(set.clone(), cnbsrp_local(&set, 3, 20, seed, &c).unwrap()).unwrap();
        check_sound_and_bounded(&set, &g)?;
    }

    #[test]
    fn merge_never_increases_distance(set in arb_binary(), a in any::<u64>(), b in any::<u64>()) {
        let t1 = cnbsrp(&set, 1, 5, a).unwrap();
        let t2 = cnbsrp(&set, 1, 5, b).unwrap();
        let m = t1.clone().merge(&t2).unwrap();
        for id in set.ids() {
            prop_assert_eq!(m.nbd(id), t1.nbd(id).min(t2.nbd(id)));
        }
    }

    #[test]
    fn single_leaf_projection_is_exact(set in prop_oneof![arb_binary(), arb_tours()], seed in any::<u64>()) {
        let t = cnbsrp(&set, 1, set.len().max(2), seed).unwrap();
        let exact = cnbsi(&set);
        prop_assert_eq!(t.links(), exact.links());
    }

    #[test]
    fn argmax_transition_agrees_for_any_step_size(dim in 3usize..9, jitter in any::<u64>(), r in 0.01f64..50.0) {
        let set = binary_set(dim, 1 << dim, Some(jitter), 0);
        let exact = cnbsi(&set);
        let model = TransitionModel::new(r, dim).unwrap();
        for x in set.ids() {
            prop_assert_eq!(argmax_transition(&set, x, &model), exact.get(x).map(|l| l.parent));
        }
    }

    #[test]
    fn paths_climb_strictly(set in prop_oneof![arb_binary(), arb_tours()]) {
        let g = NbnGraph::new(set.clone(), cnbsi(&set)).unwrap();
        let levels: HashSet<u64> = set.fitnesses().iter().map(|f| f.to_bits()).collect();
        for x in set.ids() {
            let p = evolutionary_path(&g, x);
            prop_assert!(p.nodes.len() <= set.len());
            prop_assert!(p.nodes.len() <= levels.len());
            prop_assert!(g.is_root(p.end()));
            for w in p.nodes.windows(2) {
                prop_assert!(set.fitness(w[1]) > set.fitness(w[0]));
            }
        }
    }

    #[test]
    fn set_containing_the_optimum_has_zero_distance(set in arb_binary(), picks in proptest::collection::vec(any::<u32>(), 0..10)) {
        let g = NbnGraph::new(set.clone(), cnbsi(&set)).unwrap();
        let mut members: Vec<u32> = picks.iter().map(|p| p % set.len() as u32).collect();
        members.push(g.global_best().unwrap());
        prop_assert_eq!(set_distance(&g, &members).unwrap().distance, 0.0);
    }

    #[test]
    fn optima_shrink_with_thresholds(set in arb_binary(), t1 in 0.0f64..14.0, t2 in 0.0f64..14.0, v1 in 0.0f64..6.0, v2 in 0.0f64..6.0) {
        let g = NbnGraph::new(set.clone(), cnbsi(&set)).unwrap();
        let (tl, th) = (t1.min(t2), t1.max(t2));
        let (vl, vh) = (v1.min(v2), v1.max(v2));
        let loose: HashSet<u32> = identify_optima(&g, tl, vl, FitnessScale::Raw).unwrap().optima_ids.into_iter().collect();
        let strict = identify_optima(&g, th, vh, FitnessScale::Raw).unwrap().optima_ids;
        prop_assert!(strict.iter().all(|id| loose.contains(id)));
    }

    #[test]
    fn isolated_nodes_of_full_cube_are_local_optima(dim in 3usize..10, jitter in proptest::option::of(any::<u64>())) {
        let set = binary_set(dim, 1 << dim, jitter, 0);
        let g = NbnGraph::new(set.clone(), cnbsi(&set)).unwrap();
        let optima: HashSet<u32> = identify_optima(&g, f64::NEG_INFINITY, 2.0, FitnessScale::Raw).unwrap().optima_ids.into_iter().collect();
        for id in set.ids() {
            let v = set.values(id);
            let improvable = (0..dim).any(|i| {
                let mut w = v.clone();
                w[i] ^= 1;
                set.problem().evaluate(&w).unwrap() > set.fitness(id)
            });
            prop_assert_eq!(optima.contains(&id), !improvable);
        }
    }

    #[test]
    fn local_samples_stay_in_radius_and_repeat(dim in 6usize..60, k in 0usize..12, n in 2usize..300, seed in any::<u64>(), tour in any::<bool>(), ball in any::<bool>()) {
        let p = if tour {
            Arc::new(Problem::Tsp(generate_rue(dim, 1, RUE_DEFAULT_EXTENT)))
        } else {
            Arc::new(Problem::onemax(dim))
        };
        let center: Vec<u32> = if tour { (0..dim as u32).rev().collect() } else { vec![0; dim] };
        let strategy = if ball { LocalStrategy::UniformBall } else { LocalStrategy::UniformRadius };
        let a = sample_local(&p, &center, k, n, seed, strategy).unwrap();
        let b = sample_local(&p, &center, k, n, seed, strategy).unwrap();
        prop_assert_eq!(a.find(&center), Some(0));
        for id in a.ids() {
            prop_assert!(a.distance_to(id, &center).unwrap() <= k as f64);
            prop_assert_eq!(a.values(id), b.values(id));
        }
        prop_assert_eq!(a.len(), b.len());
    }

    #[test]
    fn containers_and_exports_round_trip(set in prop_oneof![arb_binary(), arb_tours()], seed in any::<u64>()) {
        let g = NbnGraph::new(set.clone(), cnbsrp(&set, 2, 10, seed).unwrap()).unwrap();
        let bytes = nio::write_samples(Vec::new(), &set, None, None).unwrap();
        let back = Arc::new(nio::read_samples(bytes.as_slice(), None).unwrap().set);
        prop_assert_eq!(back.len(), set.len());
        prop_assert_eq!(nio::sample_digest(&back), nio::sample_digest(&set));
        let gbytes = nio::write_graph(Vec::new(), &g).unwrap();
        let g2 = nio::read_graph(gbytes.as_slice(), back).unwrap();
        prop_assert_eq!(g2.links(), g.links());

        let out = nio::export_graph(&g, ExportFormat::Jsonl, &Annotations::default(), Vec::new()).unwrap();
        let recs: Vec<NodeRecord> = out
            .split(|&b| b == b'\n')
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_slice(l).unwrap())
            .collect();
        prop_assert_eq!(recs.len(), g.len());
        for r in recs {
            prop_assert_eq!(r.parent, g.parent(r.id));
            prop_assert_eq!(r.fitness, g.fitness(r.id));
        }
    }

    #[test]
    fn tour_fitness_ignores_rotation_and_direction(dim in 3usize..30, seed in any::<u64>(), shift in 0usize..30) {
        let p = Problem::Tsp(generate_rue(dim, seed, RUE_DEFAULT_EXTENT));
        let t: Vec<u32> = (0..dim as u32).map(|i| (i * 7 + seed as u32) % dim as u32).collect();
        let mut uniq = t.clone();
        uniq.sort_unstable();
        uniq.dedup();
        prop_assume!(uniq.len() == dim);
        let f = p.evaluate(&t).unwrap();
        prop_assert_eq!(p.evaluate(&t).unwrap(), f);
        let mut rot = t.clone();
        rot.rotate_left(shift % dim);
        let mut rev = t.clone();
        rev.reverse();
        prop_assert!((p.evaluate(&rot).unwrap() - f).abs() <= 1e-9 * f.abs().max(1.0));
        prop_assert!((p.evaluate(&rev).unwrap() - f).abs() <= 1e-9 * f.abs().max(1.0));
    }
}
