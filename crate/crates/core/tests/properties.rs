use std::collections::BTreeSet;

use proptest::prelude::*;

use seqsoccer::diagnostics::{mutual_information, site_entropy};
use seqsoccer::fca::{dependency_matrix, evolve, step, FcaRuleVector, FuzzyRule, FuzzyState, Terminal, ALL_RULES};
use seqsoccer::fmaca::{build_tree, classify_detailed, FmacaNode, GaConfig, LabeledPattern};
use seqsoccer::lcs::{bucket_brigade_update, ClassifierRule};
use seqsoccer::miner::{count_occurrences, enumerate_unique, find_tandem_repeats, PatternQuery};
use seqsoccer::sequence::{read_fasta, write_fasta, FastaRecord, SequenceId};
use seqsoccer::sim::{CommandKind, AgentId};
use seqsoccer::ActionSymbol;

fn rule() -> impl Strategy<Value = FuzzyRule> {
    proptest::sample::select(ALL_RULES.to_vec()).prop_map(|n| FuzzyRule::new(n as u32).unwrap())
}

fn automaton(max: usize) -> impl Strategy<Value = (FcaRuleVector, FuzzyState)> {
    (1..=max).prop_flat_map(|n| {
        (
            proptest::collection::vec(rule(), n).prop_map(|r| FcaRuleVector::new(r).unwrap()),
            proptest::collection::vec(0.0f64..=1.0, n).prop_map(|c| FuzzyState::new(c).unwrap()),
        )
    })
}

fn letters(max: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::sample::select(vec!['A', 'C', 'G', 'T', '-']), 0..=max)
        .prop_map(|v| v.into_iter().collect())
}

fn bits(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..=1, n)
}

/// Two-symbol Shannon entropy straight from the definition.
fn entropy_oracle(ones: usize, n: usize) -> f64 {
    let mut h = 0.0;
    for c in [ones, n - ones] {
        if c > 0 {
            let p = c as f64 / n as f64;
            h -= p * p.log2();
        }
    }
    h
}

proptest! {
    #[test]
    fn step_stays_in_unit_interval((rules, state) in automaton(12)) {
        let next = step(&state, &rules).unwrap();
        prop_assert_eq!(next.len(), state.len());
        prop_assert!(next.cells().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn complement_is_one_minus_base(r in rule(), l in 0.0f64..=1.0, c in 0.0f64..=1.0, x in 0.0f64..=1.0) {
        let d = r.complement().eval(l, c, x) - (1.0 - r.eval(l, c, x));
        prop_assert!(d.abs() <= 1e-12);
        prop_assert_eq!(r.complement().complement(), r);
    }

    #[test]
    fn dependency_rows_follow_neighbourhoods((rules, _) in automaton(10)) {
        let m = dependency_matrix(&rules);
        let n = rules.len();
        for (i, r) in rules.rules().iter().enumerate() {
            let [l, c, x] = r.neighbours();
            for j in 0..n {
                let want = (l && j + 1 == i) || (c && j == i) || (x && j == i + 1);
                prop_assert_eq!(m.get(i, j), want);
            }
        }
    }

    #[test]
    fn evolve_terminates_consistently((rules, state) in automaton(8)) {
        let t = evolve(&state, &rules, 64, 1e-9).unwrap();
        prop_assert!(!t.states.is_empty() && t.states.len() <= 65);
        match t.terminal {
            Terminal::FixedPoint { index } => {
                let again = step(&t.states[index], &rules).unwrap();
                prop_assert!(again.max_abs_diff(&t.states[index]) <= 1e-9);
            }
            Terminal::Cycle { start, period } => {
                prop_assert!(period >= 1 && start + period <= t.states.len());
            }
            Terminal::Truncated { max_steps } => prop_assert_eq!(max_steps, 64),
        }
        prop_assert!(t.attractor().cells().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn rule_vector_text_roundtrip((rules, state) in automaton(10)) {
        prop_assert_eq!(rules.to_string().parse::<FcaRuleVector>().unwrap(), rules);
        let back: FuzzyState = state.cells().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",").parse().unwrap();
        prop_assert_eq!(back, state);
    }

    #[test]
    fn mi_symmetric_and_bounded((a, b) in (1usize..40).prop_flat_map(|n| (bits(n), bits(n)))) {
        let ab = mutual_information(&a, &b).unwrap();
        let ba = mutual_information(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() <= 1e-12);
        let constant = a.iter().all(|&x| x == a[0]);
        let self_mi = mutual_information(&a, &a).unwrap();
        prop_assert_eq!(self_mi, if constant { 0.0 } else { 1.0 });
    }

    #[test]
    fn site_entropy_matches_oracle(window in (1usize..6, 1usize..12).prop_flat_map(|(cells, t)| proptest::collection::vec(bits(cells), t))) {
        let cells = window[0].len();
        let t = window.len();
        let want: f64 = (0..cells)
            .map(|i| entropy_oracle(window.iter().filter(|row| row[i] == 1).count(), t))
            .sum::<f64>()
            / cells as f64;
        let got = site_entropy(&window);
        prop_assert!((got - want).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn miner_matches_brute_force(s in letters(60), min in 1usize..4, extra in 0usize..4, p in letters(3)) {
        let max = min + extra;
        let b = s.as_bytes();
        let mut want = BTreeSet::new();
        for i in 0..b.len() {
            for len in min..=max {
                if i + len <= b.len() {
                    want.insert(s[i..i + len].to_string());
                }
            }
        }
        prop_assert_eq!(enumerate_unique(&s, PatternQuery::new(min, max).unwrap()), want);
        if !p.is_empty() {
            let starts: Vec<usize> = (0..b.len()).filter(|&i| s[i..].starts_with(&p)).collect();
            let (n, got) = count_occurrences(&s, &p).unwrap();
            prop_assert_eq!(n, starts.len());
            prop_assert_eq!(&got, &starts);
            for run in find_tandem_repeats(&s, &p).unwrap() {
                prop_assert!(run.copies >= 2);
                let span = &s[run.start..run.start + run.copies * p.len()];
                prop_assert_eq!(span, p.repeat(run.copies));
                prop_assert!(starts.contains(&run.start));
            }
        }
    }

    #[test]
    fn brigade_conserves_strength(
        strengths in proptest::collection::vec(0.0f64..500.0, 2..10),
        cur in 0usize..10,
        prev in proptest::option::of(0usize..10),
        reward in 0.0f64..1000.0,
        beta in 0.01f64..0.99,
    ) {
        let n = strengths.len();
        let cur = cur % n;
        let prev = prev.map(|p| p % n);
        let mut pop: Vec<ClassifierRule> = strengths
            .iter()
            .map(|&s| ClassifierRule::new("#####", ActionSymbol::A, s).unwrap())
            .collect();
        let before: f64 = pop.iter().map(|r| r.strength).sum();
        let out = bucket_brigade_update(&mut pop, cur, prev, reward, beta);
        let after: f64 = pop.iter().map(|r| r.strength).sum();
        prop_assert_eq!(out.clamps, 0);
        prop_assert!((after - (before + reward - out.dissipated)).abs() <= 1e-9 * before.max(1.0));
        prop_assert!(pop.iter().all(|r| r.strength >= 0.0));
        if prev.is_some() {
            prop_assert_eq!(out.dissipated, 0.0);
        }
    }

    #[test]
    fn clamped_commands_are_in_range(
        a in prop_oneof![any::<f64>(), -1e4f64..1e4],
        b in prop_oneof![any::<f64>(), -1e4f64..1e4],
        which in 0u8..3,
    ) {
        let cmd = match which {
            0 => CommandKind::Turn { moment: a },
            1 => CommandKind::Dash { power: a },
            _ => CommandKind::Kick { power: a, direction: b },
        };
        let c = cmd.clone().clamped();
        prop_assert!(c.in_range());
        if cmd.in_range() {
            prop_assert_eq!(c, cmd);
        }
    }

    #[test]
    fn fasta_roundtrip(seqs in proptest::collection::vec((proptest::sample::select(vec!['a', 'b', 'c', 'd']), letters(40)), 1..6)) {
        let records: Vec<FastaRecord> = seqs
            .into_iter()
            .map(|(p, letters)| FastaRecord {
                id: SequenceId::Player { player: AgentId(p), game: "g".into() },
                letters,
            })
            .collect();
        let mut buf = Vec::new();
        write_fasta(&mut buf, &records).unwrap();
        prop_assert_eq!(read_fasta(buf.as_slice()).unwrap(), records);
    }
}

fn collect_leaves(node: &FmacaNode, out: &mut Vec<usize>) {
    match node {
        FmacaNode::Leaf { members, .. } => out.extend(members),
        FmacaNode::Internal { children, .. } => children.iter().for_each(|c| collect_leaves(c, out)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fmaca_leaves_partition_training(
        data in (2usize..6).prop_flat_map(|n| proptest::collection::vec(
            (proptest::collection::vec(0.0f64..=1.0, n), 1u32..=2), 2..24)),
        seed in any::<u64>(),
    ) {
        let set: Vec<LabeledPattern> = data
            .into_iter()
            .map(|(c, l)| LabeledPattern::new(FuzzyState::new(c).unwrap(), l))
            .collect();
        let ga = GaConfig { population_size: 6, generations: 2, rng_seed: seed, ..GaConfig::default() };
        let tree = build_tree(&set, 2, &ga).unwrap();
        let mut leaves = Vec::new();
        collect_leaves(&tree.root, &mut leaves);
        leaves.sort_unstable();
        prop_assert_eq!(leaves, (0..set.len()).collect::<Vec<_>>());
        for p in &set {
            let c = classify_detailed(&tree, &p.features).unwrap();
            prop_assert!(c.class == 1 || c.class == 2);
        }
        let json = tree.to_json().unwrap();
        let back = seqsoccer::fmaca::FmacaTree::read_json(json.as_bytes()).unwrap();
        for p in &set {
            prop_assert_eq!(
                classify_detailed(&back, &p.features).unwrap(),
                classify_detailed(&tree, &p.features).unwrap()
            );
        }
    }
}
