//! Randomized invariant checks for the belief engine, task structures, and
//! replay routing.

use proptest::prelude::*;

use tomnet_core::agent::{Agent, LesionMode, ModelConfig};
use tomnet_core::belief::{
    from_clues, kl_divergence, plain_update, surprise_update, Belief, CodedMessage, InfoWeights,
    StrengthCode, EPS_FLOOR,
};
use tomnet_core::replay::{evaluate_dataset, TeamSim};
use tomnet_core::synth::{simulate_ensemble, SynthConfig};
use tomnet_core::task::{
    betweenness_centrality, difficulty, enumerate_topologies, generate_instance, AnswerOption,
    Clue, Visibility,
};

fn catalog() -> &'static [tomnet_core::Topology] {
    static CATALOG: std::sync::OnceLock<Vec<tomnet_core::Topology>> = std::sync::OnceLock::new();
    CATALOG.get_or_init(enumerate_topologies)
}

fn belief_strategy() -> impl Strategy<Value = Belief> {
    prop::array::uniform5(1e-6f64..1.0).prop_map(|p| Belief::from_probs(p).unwrap())
}

fn likelihood_strategy() -> impl Strategy<Value = [f64; 5]> {
    prop::array::uniform5(0.02f64..20.0)
}

fn strength_strategy() -> impl Strategy<Value = StrengthCode> {
    prop::sample::select(vec![
        StrengthCode::Sn,
        StrengthCode::Mn,
        StrengthCode::My,
        StrengthCode::Sy,
    ])
}

fn clue_strategy() -> impl Strategy<Value = Clue> {
    (proptest::collection::btree_set(0usize..5, 1..=3), proptest::collection::vec(strength_strategy(), 3))
        .prop_map(|(options, strengths)| {
            let codes = options
                .into_iter()
                .enumerate()
                .map(|(i, o)| (AnswerOption::from_index(o).unwrap(), strengths[i % 3]))
                .collect();
            Clue::new(codes, Visibility::Private).unwrap()
        })
}

fn assert_canonical(b: &Belief) {
    let sum: f64 = b.probs().iter().sum();
    assert!((sum - 1.0).abs() < 1e-9, "simplex violated: sum {sum}");
    assert!(
        b.probs().iter().all(|&p| p >= EPS_FLOOR),
        "floor violated: {:?}",
        b.probs()
    );
}

proptest! {
    #[test]
    fn updates_preserve_simplex_and_floor(prior in belief_strategy(), l in likelihood_strategy()) {
        assert_canonical(&surprise_update(&prior, &l).unwrap());
        assert_canonical(&plain_update(&prior, &l).unwrap());
    }

    #[test]
    fn surprise_identity_likelihood_is_noop(prior in belief_strategy()) {
        let post = surprise_update(&prior, &[1.0; 5]).unwrap();
        for s in 0..5 {
            prop_assert_eq!(post.probs()[s].to_bits(), prior.probs()[s].to_bits());
        }
    }

    #[test]
    fn plain_update_commutes(prior in belief_strategy(), l1 in likelihood_strategy(), l2 in likelihood_strategy()) {
        let ab = plain_update(&plain_update(&prior, &l1).unwrap(), &l2).unwrap();
        let ba = plain_update(&plain_update(&prior, &l2).unwrap(), &l1).unwrap();
        for s in 0..5 {
            prop_assert!((ab.probs()[s] - ba.probs()[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn surprise_update_is_order_sensitive(
        prior in belief_strategy(),
        w1 in 1.2f64..5.0,
        w2 in 0.05f64..0.8,
        o1 in 0usize..5,
        shift in 1usize..5,
    ) {
        // Two informative likelihoods touching different options.
        let o2 = (o1 + shift) % 5;
        let mut l1 = [1.0; 5];
        l1[o1] = w1;
        let mut l2 = [1.0; 5];
        l2[o2] = w2;
        let ab = surprise_update(&surprise_update(&prior, &l1).unwrap(), &l2).unwrap();
        let ba = surprise_update(&surprise_update(&prior, &l2).unwrap(), &l1).unwrap();
        let max_diff = (0..5)
            .map(|s| (ab.probs()[s] - ba.probs()[s]).abs())
            .fold(0.0f64, f64::max);
        prop_assert!(max_diff > 1e-12, "expected order sensitivity, diff {max_diff}");
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(q in belief_strategy(), p in belief_strategy()) {
        prop_assert!(kl_divergence(&q, &p) >= 0.0);
        prop_assert_eq!(kl_divergence(&q, &q), 0.0);
    }

    #[test]
    fn from_clues_is_order_invariant(clues in proptest::collection::vec(clue_strategy(), 0..5), seed in 0u64..1000) {
        let w = InfoWeights::new(0.3, 0.8, 1.4, 1.9).unwrap();
        let fwd = from_clues(&clues, &w).unwrap();
        let mut shuffled = clues.clone();
        // deterministic shuffle by rotation
        let k = (seed as usize) % (shuffled.len().max(1));
        shuffled.rotate_left(k);
        let rot = from_clues(&shuffled, &w).unwrap();
        for s in 0..5 {
            prop_assert!((fwd.probs()[s] - rot.probs()[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn difficulty_never_rises_when_ruling_out_a_wrong_option(
        clues in proptest::collection::vec(clue_strategy(), 1..4),
        correct_idx in 0usize..5,
        sn_weight in 0.01f64..1.0,
        wrong_shift in 1usize..5,
    ) {
        let w = InfoWeights::new(sn_weight, 0.9, 1.3, 1.8).unwrap();
        let correct = AnswerOption::from_index(correct_idx).unwrap();
        let wrong = AnswerOption::from_index((correct_idx + wrong_shift) % 5).unwrap();
        let base = difficulty(&clues, correct, &w).unwrap();
        let mut extended = clues.clone();
        extended.push(Clue::new(vec![(wrong, StrengthCode::Sn)], Visibility::Private).unwrap());
        let with_sn = difficulty(&extended, correct, &w).unwrap();
        prop_assert!(with_sn <= base + 1e-12, "difficulty rose from {base} to {with_sn}");
    }

    #[test]
    fn betweenness_is_isomorphism_invariant(catalog_idx in 0usize..21, perm_seed in 0u64..120) {
        let t = &catalog()[catalog_idx];
        // perm_seed indexes the 120 permutations of 0..5 in lexicographic order
        let mut items: Vec<usize> = (0..5).collect();
        let mut perm = Vec::new();
        let mut k = perm_seed as usize;
        let mut fact = 24; // 4!
        for i in (0..5).rev() {
            let idx = k / fact;
            perm.push(items.remove(idx));
            k %= fact;
            fact /= i.max(1);
        }
        let relabeled = t.relabel(&perm).unwrap();
        let b = betweenness_centrality(t).unwrap();
        let rb = betweenness_centrality(&relabeled).unwrap();
        for v in 0..5 {
            prop_assert!((b[v] - rb[perm[v]]).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_is_invariant_under_alter_relabeling(
        w1 in 1.1f64..3.0,
        w2 in 0.1f64..0.9,
        o1 in 0usize..5,
        o2 in 0usize..5,
        alpha in 0.0f64..=1.0,
    ) {
        // Two agents whose alter beliefs are swapped between neighbors 1 and
        // 2 must aggregate identically: the product over alters commutes.
        let cfg = ModelConfig::new(InfoWeights::new(w2, 1.0, w1, 2.0).unwrap(), alpha, LesionMode::Full).unwrap();
        let endowment = vec![
            Clue::new(vec![(AnswerOption::new(1).unwrap(), StrengthCode::Sy)], Visibility::Public).unwrap(),
            Clue::new(vec![(AnswerOption::new(2).unwrap(), StrengthCode::Sn)], Visibility::Private).unwrap(),
        ];
        let m1 = CodedMessage::new(0.0, 1, vec![(AnswerOption::from_index(o1).unwrap(), StrengthCode::My)]).unwrap();
        let m2 = CodedMessage::new(1.0, 2, vec![(AnswerOption::from_index(o2).unwrap(), StrengthCode::Sn)]).unwrap();
        let mut straight = Agent::new(0, &endowment, &[1, 2], &cfg).unwrap();
        straight.observe(&m1).unwrap();
        straight.observe(&m2).unwrap();
        // swapped: neighbor 1 says what neighbor 2 said and vice versa
        let m1s = CodedMessage::new(0.0, 2, m1.codes.clone()).unwrap();
        let m2s = CodedMessage::new(1.0, 1, m2.codes.clone()).unwrap();
        let mut swapped = Agent::new(0, &endowment, &[1, 2], &cfg).unwrap();
        swapped.observe(&m1s).unwrap();
        swapped.observe(&m2s).unwrap();
        let a = straight.aggregate();
        let b = swapped.aggregate();
        for s in 0..5 {
            prop_assert!((a.probs()[s] - b.probs()[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_is_invariant_under_monotone_transform(b in belief_strategy(), power in 0.2f64..3.0) {
        let transformed = Belief::from_probs([
            b.probs()[0].powf(power),
            b.probs()[1].powf(power),
            b.probs()[2].powf(power),
            b.probs()[3].powf(power),
            b.probs()[4].powf(power),
        ])
        .unwrap();
        // Unique maxima must agree (ties can expand or shrink at the
        // tolerance boundary, so restrict to the unique case).
        let orig = b.argmax_set();
        let trans = transformed.argmax_set();
        if orig.len() == 1 && trans.len() == 1 {
            prop_assert_eq!(orig[0], trans[0]);
        }
    }

    #[test]
    fn generated_instances_always_validate(seed in 0u64..2000, catalog_idx in 0usize..21) {
        let rec = generate_instance(seed, &catalog()[catalog_idx]).unwrap();
        rec.validate().unwrap();
        // one public clue shared by everyone
        let public = &rec.endowments[0][0];
        for e in &rec.endowments {
            prop_assert_eq!(&e[0].codes, &public.codes);
        }
    }
}

/// The replay engine only ever lets an agent see its own and its neighbors'
/// messages; anything else is an error.
#[test]
fn replay_rejects_out_of_blanket_delivery() {
    let star = &catalog()[0];
    let rec = generate_instance(1, star).unwrap();
    let cfg = ModelConfig::new(InfoWeights::identity(), 0.5, LesionMode::Full).unwrap();
    let sim = TeamSim::new(&rec, &cfg).unwrap();
    let mut agents = sim.agents().to_vec();
    // star: node 1 and node 2 are both leaves, not adjacent
    let msg = CodedMessage::new(
        0.0,
        2,
        vec![(AnswerOption::new(1).unwrap(), StrengthCode::Sy)],
    )
    .unwrap();
    assert!(agents[1].observe(&msg).is_err());
}

/// Parallel schedule must not change any reported number.
#[test]
fn evaluation_is_schedule_independent() {
    let recs = simulate_ensemble(&SynthConfig { teams: 10, seed: 77, ..Default::default() }).unwrap();
    let cfg = tomnet_core::synth::default_generating_config();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| evaluate_dataset(&recs, &cfg, 7, 3).unwrap())
    };
    let single = run(1);
    let multi = run(4);
    assert_eq!(single.accuracy_mean.to_bits(), multi.accuracy_mean.to_bits());
    assert_eq!(single.total_loglik.to_bits(), multi.total_loglik.to_bits());
    assert_eq!(
        single.agreement_mean.unwrap().to_bits(),
        multi.agreement_mean.unwrap().to_bits()
    );
}
