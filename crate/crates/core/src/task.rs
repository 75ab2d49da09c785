//! Hidden-profile task instances: answer options, clue endowments, the
//! catalog of connected five-node communication topologies, network metrics,
//! per-individual difficulty, and a synthetic instance generator.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::belief::{from_clues, InfoWeights, StrengthCode};
use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Number of answer options per question dimension.
pub const NUM_OPTIONS: usize = 5;

/// One of the five answer options, numbered 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnswerOption(u8);

impl AnswerOption {
    pub fn new(number: u32) -> Result<AnswerOption> {
        if (1..=NUM_OPTIONS as u32).contains(&number) {
            Ok(AnswerOption(number as u8))
        } else {
            Err(Error::InvalidOption(number))
        }
    }

    /// Zero-based index into belief vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Option<AnswerOption> {
        if index < NUM_OPTIONS {
            Some(AnswerOption(index as u8 + 1))
        } else {
            None
        }
    }

    /// One-based option number as it appears in data files.
    pub fn number(self) -> u32 {
        self.0 as u32
    }

    pub fn all() -> impl Iterator<Item = AnswerOption> {
        (1..=NUM_OPTIONS as u8).map(AnswerOption)
    }
}

impl std::fmt::Display for AnswerOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether a clue was given to the whole team or to a single player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    Public,
    Private,
}

impl Visibility {
    pub fn parse(s: &str) -> Option<Visibility> {
        match s.trim().to_ascii_lowercase().as_str() {
            "public" => Some(Visibility::Public),
            "private" => Some(Visibility::Private),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::Private => "private",
        }
    }
}

/// A piece of initial information: one or more (option, strength) codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Clue {
    pub codes: Vec<(AnswerOption, StrengthCode)>,
    pub visibility: Visibility,
}

impl Clue {
    pub fn new(codes: Vec<(AnswerOption, StrengthCode)>, visibility: Visibility) -> Result<Clue> {
        if codes.is_empty() {
            return Err(Error::InvalidArgument("clue must carry at least one code".into()));
        }
        let mut seen = [false; NUM_OPTIONS];
        for (opt, _) in &codes {
            if seen[opt.index()] {
                return Err(Error::InvalidArgument(format!(
                    "option {opt} appears more than once in one clue"
                )));
            }
            seen[opt.index()] = true;
        }
        Ok(Clue { codes, visibility })
    }
}

/// An undirected communication network over the team's players.
///
/// Edges are stored normalized (`a < b`), so duplicates and self-loops cannot
/// be represented. Connectivity is validated where operations require it, not
/// at construction, so that the disconnected-input error paths stay testable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Topology {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Topology> {
        if node_count == 0 {
            return Err(Error::InvalidTopology("node count must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a}, {b}) outside 0..{node_count}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Topology { node_count, edges: set })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.node_count).filter(|&u| u != v && self.has_edge(u, v)).collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.node_count
    }

    /// Apply a node permutation: node `v` becomes `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Topology> {
        if perm.len() != self.node_count {
            return Err(Error::InvalidTopology("permutation length mismatch".into()));
        }
        Topology::new(self.node_count, self.edges().map(|(a, b)| (perm[a], perm[b])))
    }

    /// Lexicographically smallest edge set over all vertex permutations.
    /// Exhaustive (n! permutations), intended for the five-node catalog.
    pub fn canonical_edges(&self) -> Vec<(usize, usize)> {
        (0..self.node_count)
            .permutations(self.node_count)
            .map(|perm| {
                let mut edges: Vec<(usize, usize)> = self
                    .edges()
                    .map(|(a, b)| {
                        let (x, y) = (perm[a], perm[b]);
                        (x.min(y), x.max(y))
                    })
                    .collect();
                edges.sort_unstable();
                edges
            })
            .min()
            .unwrap_or_default()
    }

    pub fn is_isomorphic_to(&self, other: &Topology) -> bool {
        self.node_count == other.node_count && self.canonical_edges() == other.canonical_edges()
    }
}

/// All connected five-node graphs up to isomorphism, canonically labeled,
/// ordered by (edge count, canonical edge set). There are exactly 21.
pub fn enumerate_topologies() -> Vec<Topology> {
    let all_edges: Vec<(usize, usize)> = (0..5).tuple_combinations().collect();
    let mut canon: BTreeSet<(usize, Vec<(usize, usize)>)> = BTreeSet::new();
    for mask in 0u32..(1 << all_edges.len()) {
        let edges = all_edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &e)| e);
        let t = Topology::new(5, edges).expect("catalog edges are valid");
        if t.is_connected() {
            let c = t.canonical_edges();
            canon.insert((c.len(), c));
        }
    }
    canon
        .into_iter()
        .map(|(_, edges)| Topology::new(5, edges).expect("canonical edges are valid"))
        .collect()
}

/// Shortest-path betweenness centrality for every node, in the unnormalized
/// pair-count convention: for each unordered pair (s, t) the fraction of
/// shortest s-t paths passing through v is accumulated onto v.
pub fn betweenness_centrality(t: &Topology) -> Result<Vec<f64>> {
    if !t.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = t.node_count();
    // All-pairs BFS with shortest-path counts.
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut sigma = vec![vec![0f64; n]; n];
    for s in 0..n {
        dist[s][s] = 0;
        sigma[s][s] = 1.0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for u in t.neighbors(v) {
                if dist[s][u] == usize::MAX {
                    dist[s][u] = dist[s][v] + 1;
                    queue.push_back(u);
                }
                if dist[s][u] == dist[s][v] + 1 {
                    sigma[s][u] += sigma[s][v];
                }
            }
        }
    }
    let mut centrality = vec![0.0; n];
    for s in 0..n {
        for t_ in (s + 1)..n {
            for (v, c) in centrality.iter_mut().enumerate() {
                if v == s || v == t_ {
                    continue;
                }
                if dist[s][v] != usize::MAX && dist[s][v] + dist[v][t_] == dist[s][t_] {
                    *c += sigma[s][v] * sigma[v][t_] / sigma[s][t_];
                }
            }
        }
    }
    Ok(centrality)
}

/// Task difficulty faced by one individual: 1 minus the probability the
/// initial clue belief assigns to the correct answer, under the same
/// information weights as the model being evaluated.
pub fn difficulty(endowment: &[Clue], correct: AnswerOption, w: &InfoWeights) -> Result<f64> {
    let prior = from_clues(endowment, w)?;
    Ok(1.0 - prior.prob(correct))
}

/// Equal-width bin index in 0..5 for a difficulty value.
pub fn difficulty_bin(d: f64) -> usize {
    ((d.clamp(0.0, 1.0) * 5.0) as usize).min(4)
}

/// A recorded (or synthetic) team: topology, clue endowments, transcript,
/// human answers, and the correct answer. The unit of replay.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamRecord {
    pub team_id: String,
    pub topology: Topology,
    /// Player names by node index; names are only used by the data formats.
    pub players: Vec<String>,
    /// Clue endowment by node index, public clue first.
    pub endowments: Vec<Vec<Clue>>,
    /// Time-ordered coded messages.
    pub transcript: Vec<crate::belief::CodedMessage>,
    /// Recorded human answers by node index; absent entries are individuals
    /// who did not submit an answer.
    pub human_answers: std::collections::BTreeMap<usize, AnswerOption>,
    pub correct_answer: AnswerOption,
}

impl TeamRecord {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidRecord { team: self.team_id.clone(), reason };
        let n = self.topology.node_count();
        if self.players.len() != n {
            return Err(fail(format!("{} players but topology has {n} nodes", self.players.len())));
        }
        if self.endowments.len() != n {
            return Err(fail(format!("{} endowments for {n} players", self.endowments.len())));
        }
        if !self.topology.is_connected() {
            return Err(fail("topology is disconnected".into()));
        }
        for (node, clues) in self.endowments.iter().enumerate() {
            let public = clues.iter().filter(|c| c.visibility == Visibility::Public).count();
            let private = clues.iter().filter(|c| c.visibility == Visibility::Private).count();
            if public != 1 || private != 1 {
                return Err(fail(format!(
                    "player {} has {public} public and {private} private clues (expected 1 and 1)",
                    self.players[node]
                )));
            }
        }
        let mut last_time = f64::NEG_INFINITY;
        for m in &self.transcript {
            if m.sender >= n {
                return Err(fail(format!("message sender index {} out of range", m.sender)));
            }
            if m.time < last_time {
                return Err(fail(format!(
                    "transcript timestamps decrease at t={} after t={last_time}",
                    m.time
                )));
            }
            last_time = m.time;
        }
        for node in self.human_answers.keys() {
            if *node >= n {
                return Err(fail(format!("answer for unknown player index {node}")));
            }
        }
        Ok(())
    }

    /// Non-neutral transcript messages, in order.
    pub fn codable_messages(&self) -> impl Iterator<Item = &crate::belief::CodedMessage> {
        self.transcript.iter().filter(|m| !m.is_neutral())
    }
}

/// Generate a synthetic hidden-profile instance on the given topology.
///
/// Six clues are built so the pooled profile is unambiguous while each
/// individual endowment stays ambiguous: a strong-no on each of the four
/// wrong options, plus a strong-yes and a maybe-yes on the correct one. One
/// clue (chosen uniformly) becomes public to all; the rest are dealt
/// privately, one per player. Deterministic in the seed. The transcript and
/// human answers are left empty.
pub fn generate_instance(seed: u64, topology: &Topology) -> Result<TeamRecord> {
    if !topology.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = topology.node_count();
    let mut rng = StreamKey::new(seed).with("generate-instance").rng();

    let correct = AnswerOption::new(rng.gen_range(1..=NUM_OPTIONS as u32))?;
    let mut pool: Vec<Vec<(AnswerOption, StrengthCode)>> = AnswerOption::all()
        .filter(|o| *o != correct)
        .map(|o| vec![(o, StrengthCode::Sn)])
        .collect();
    pool.push(vec![(correct, StrengthCode::Sy)]);
    pool.push(vec![(correct, StrengthCode::My)]);

    let public_idx = rng.gen_range(0..pool.len());
    let public_codes = pool.remove(public_idx);
    pool.shuffle(&mut rng);

    let endowments = (0..n)
        .map(|node| {
            let private_codes = pool[node % pool.len()].clone();
            Ok(vec![
                Clue::new(public_codes.clone(), Visibility::Public)?,
                Clue::new(private_codes, Visibility::Private)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let record = TeamRecord {
        team_id: format!("synth-{seed}"),
        topology: topology.clone(),
        players: (0..n).map(|i| format!("p{}", i + 1)).collect(),
        endowments,
        transcript: Vec::new(),
        human_answers: std::collections::BTreeMap::new(),
        correct_answer: correct,
    };
    record.validate()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::plain_update;
    use crate::belief::Belief;
    use crate::stats::chi2_gof_test;

    fn star() -> Topology {
        Topology::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()
    }

    fn path() -> Topology {
        Topology::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap()
    }

    fn complete() -> Topology {
        Topology::new(5, (0..5).tuple_combinations().collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn option_range_enforced() {
        assert!(AnswerOption::new(0).is_err());
        assert!(AnswerOption::new(6).is_err());
        assert_eq!(AnswerOption::new(3).unwrap().index(), 2);
    }

    #[test]
    fn catalog_has_21_connected_graphs() {
        let catalog = enumerate_topologies();
        assert_eq!(catalog.len(), 21);
        assert!(catalog.iter().all(|t| t.is_connected()));
        assert!(catalog.iter().all(|t| t.node_count() == 5));
        // Pairwise non-isomorphic.
        for (i, a) in catalog.iter().enumerate() {
            for b in catalog.iter().skip(i + 1) {
                assert!(!a.is_isomorphic_to(b));
            }
        }
        // Deterministic order, sorted by edge count first.
        let again = enumerate_topologies();
        assert_eq!(catalog, again);
        let counts: Vec<usize> = catalog.iter().map(|t| t.edge_count()).collect();
        let mut sorted = counts.clone();
        sorted.sort_unstable();
        assert_eq!(counts, sorted);
    }

    #[test]
    fn catalog_contains_star_and_complete() {
        let catalog = enumerate_topologies();
        assert!(catalog.iter().any(|t| t.is_isomorphic_to(&star())));
        assert!(catalog.iter().any(|t| t.is_isomorphic_to(&complete())));
        assert_eq!(catalog.last().unwrap().edge_count(), 10);
    }

    #[test]
    fn betweenness_star_center_and_leaves() {
        let b = betweenness_centrality(&star()).unwrap();
        assert_eq!(b[0], 6.0);
        for leaf in &b[1..] {
            assert_eq!(*leaf, 0.0);
        }
    }

    #[test]
    fn betweenness_complete_graph_is_zero() {
        let b = betweenness_centrality(&complete()).unwrap();
        assert!(b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn betweenness_path_middle_is_strict_max() {
        let b = betweenness_centrality(&path()).unwrap();
        assert_eq!(b[2], 4.0);
        assert!((0..5).filter(|&v| v != 2).all(|v| b[v] < b[2]));
    }

    #[test]
    fn betweenness_rejects_disconnected() {
        let t = Topology::new(5, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(betweenness_centrality(&t), Err(Error::Disconnected)));
    }

    #[test]
    fn betweenness_invariant_under_relabeling() {
        let t = Topology::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
        let perm = [3usize, 0, 4, 2, 1];
        let relabeled = t.relabel(&perm).unwrap();
        let b = betweenness_centrality(&t).unwrap();
        let rb = betweenness_centrality(&relabeled).unwrap();
        for v in 0..5 {
            assert!((b[v] - rb[perm[v]]).abs() < 1e-12);
        }
    }

    #[test]
    fn topology_rejects_bad_edges() {
        assert!(Topology::new(5, [(1, 1)]).is_err());
        assert!(Topology::new(5, [(0, 5)]).is_err());
        assert!(Topology::new(0, []).is_err());
    }

    #[test]
    fn difficulty_uninformative_clues() {
        let w = InfoWeights::identity();
        let clue = Clue::new(
            vec![(AnswerOption::new(1).unwrap(), StrengthCode::My)],
            Visibility::Public,
        )
        .unwrap();
        let d = difficulty(&[clue], AnswerOption::new(3).unwrap(), &w).unwrap();
        assert!((d - 0.8).abs() < 1e-12);
    }

    #[test]
    fn difficulty_single_supporting_clue() {
        let w = InfoWeights::new(1.0, 1.0, 1.0, 2.0).unwrap();
        let correct = AnswerOption::new(2).unwrap();
        let clue = Clue::new(vec![(correct, StrengthCode::Sy)], Visibility::Private).unwrap();
        let d = difficulty(&[clue], correct, &w).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn difficulty_elimination_of_all_wrong_options() {
        let w = InfoWeights::new(1e-6, 1.0, 1.0, 1.0).unwrap();
        let correct = AnswerOption::new(5).unwrap();
        let clues: Vec<Clue> = (1..=4)
            .map(|o| {
                Clue::new(
                    vec![(AnswerOption::new(o).unwrap(), StrengthCode::Sn)],
                    Visibility::Private,
                )
                .unwrap()
            })
            .collect();
        let d = difficulty(&clues, correct, &w).unwrap();
        assert!(d < 1e-4, "difficulty {d} not near zero");
    }

    #[test]
    fn difficulty_bins_cover_unit_interval() {
        assert_eq!(difficulty_bin(0.0), 0);
        assert_eq!(difficulty_bin(0.19), 0);
        assert_eq!(difficulty_bin(0.2), 1);
        assert_eq!(difficulty_bin(0.81), 4);
        assert_eq!(difficulty_bin(1.0), 4);
    }

    #[test]
    fn generate_instance_is_deterministic() {
        let t = star();
        let a = generate_instance(42, &t).unwrap();
        let b = generate_instance(42, &t).unwrap();
        assert_eq!(a.correct_answer, b.correct_answer);
        assert_eq!(a.endowments, b.endowments);
        let c = generate_instance(43, &t).unwrap();
        assert!(a.correct_answer != c.correct_answer || a.endowments != c.endowments);
    }

    #[test]
    fn generate_instance_pooled_clues_identify_correct_answer() {
        let w = InfoWeights::new(0.35, 0.85, 1.95, 2.0).unwrap();
        let t = complete();
        for seed in 0..100 {
            let rec = generate_instance(seed, &t).unwrap();
            // Pool the public clue and every private clue, then plain Bayes.
            let mut belief = Belief::uniform();
            let mut clues: Vec<&Clue> = vec![&rec.endowments[0][0]];
            clues.extend(rec.endowments.iter().map(|e| &e[1]));
            for clue in clues {
                let mut l = [1.0; NUM_OPTIONS];
                for (opt, s) in &clue.codes {
                    l[opt.index()] *= w.weight(*s);
                }
                belief = plain_update(&belief, &l).unwrap();
            }
            let set = belief.argmax_set();
            assert_eq!(set, vec![rec.correct_answer], "seed {seed}");
        }
    }

    #[test]
    fn generate_instance_correct_answer_is_uniform() {
        let t = star();
        let mut counts = [0u64; NUM_OPTIONS];
        for seed in 0..1000 {
            let rec = generate_instance(seed, &t).unwrap();
            counts[rec.correct_answer.index()] += 1;
        }
        let (_, p) = chi2_gof_test(&counts, &[0.2; NUM_OPTIONS]);
        assert!(p > 0.01, "correct-answer distribution not uniform (p = {p})");
    }

    #[test]
    fn generated_records_pass_validation() {
        for (i, t) in enumerate_topologies().into_iter().enumerate() {
            let rec = generate_instance(i as u64, &t).unwrap();
            rec.validate().unwrap();
        }
    }
}
