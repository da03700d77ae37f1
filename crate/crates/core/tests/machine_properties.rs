use std::collections::BTreeSet;

use aiq_core::machine::TextTransform;
use aiq_core::{
    classify_machine, ControlDirective, ElementId, MachineEvent, MachineSnapshot, Mark, Modality,
    StandardIntelligentMachine, SyncDirection, SystemType, World,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    /// Input a brand-new element of the given modality.
    InputFresh(Modality),
    /// Input an element the machine already masters (by index).
    InputKnown(usize),
    /// Input a shared element (by index).
    InputShared(usize),
    Output(usize),
    Control(u8, Vec<usize>),
    Innovate(u64),
    Sync(bool),
    Publish(Modality),
}

fn modality() -> impl Strategy<Value = Modality> {
    prop::sample::select(Modality::ALL.to_vec())
}

fn modality_set() -> impl Strategy<Value = BTreeSet<Modality>> {
    prop_oneof![
        1 => Just(BTreeSet::new()),
        3 => prop::collection::btree_set(modality(), 1..=3),
    ]
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => modality().prop_map(Op::InputFresh),
        2 => any::<usize>().prop_map(Op::InputKnown),
        2 => any::<usize>().prop_map(Op::InputShared),
        3 => any::<usize>().prop_map(Op::Output),
        2 => (0u8..6, prop::collection::vec(any::<usize>(), 0..3)).prop_map(|(d, ids)| Op::Control(d, ids)),
        2 => any::<u64>().prop_map(Op::Innovate),
        2 => any::<bool>().prop_map(Op::Sync),
        1 => modality().prop_map(Op::Publish),
    ]
}

/// A machine with random capabilities and preloaded knowledge, plus a
/// random life cycle. Mostly-passive life cycles are weighted in so that
/// the fixed-knowledge class shows up regularly.
fn scenario() -> impl Strategy<
    Value = (
        BTreeSet<Modality>,
        BTreeSet<Modality>,
        Vec<Modality>,
        Vec<Op>,
    ),
> {
    let passive = prop::collection::vec(
        prop_oneof![
            any::<usize>().prop_map(Op::Output),
            any::<usize>().prop_map(Op::InputKnown)
        ],
        0..6,
    );
    (
        modality_set(),
        modality_set(),
        prop::collection::vec(modality(), 0..4),
        prop_oneof![2 => prop::collection::vec(op(), 0..25), 1 => passive],
    )
}

fn pick(ids: &[ElementId], i: usize) -> Option<ElementId> {
    (!ids.is_empty()).then(|| ids[i % ids.len()])
}

struct Run {
    machine: StandardIntelligentMachine,
    initial: MachineSnapshot,
    invariant_failures: Vec<String>,
}

fn drive(
    q_i: BTreeSet<Modality>,
    q_o: BTreeSet<Modality>,
    preload: Vec<Modality>,
    ops: Vec<Op>,
) -> Run {
    let mut world = World::new();
    for (i, m) in preload.iter().enumerate() {
        world.publish(format!("shared {i}"), *m);
    }
    let elements: Vec<_> = preload
        .iter()
        .enumerate()
        .map(|(i, m)| world.draw(format!("preloaded {i}"), *m))
        .collect();
    let mut machine = StandardIntelligentMachine::new(q_i, q_o).with_knowledge(elements);
    let initial = machine.snapshot();
    let mut failures = Vec::new();

    for op in ops {
        let known: Vec<ElementId> = machine.mastered().map(|e| e.id).collect();
        let before = (machine.mastered_len(), machine.innovated_len());
        let trace_before = machine.trace().len();
        match op.clone() {
            Op::InputFresh(m) => {
                let e = world.draw("fresh", m);
                machine.input_knowledge(e);
            }
            Op::InputKnown(i) => {
                let Some(id) = pick(&known, i) else { continue };
                let e = machine.get(id).unwrap().clone();
                machine.input_knowledge(e.clone());
                let after = machine.snapshot();
                machine.input_knowledge(e);
                if machine.snapshot() != after {
                    failures.push("input is not idempotent".into());
                }
            }
            Op::InputShared(i) => {
                let shared: Vec<_> = world.shared().cloned().collect();
                let Some(e) = (!shared.is_empty()).then(|| shared[i % shared.len()].clone()) else {
                    continue;
                };
                machine.input_knowledge(e);
            }
            Op::Output(i) => {
                let Some(id) = pick(&known, i) else { continue };
                machine.output_knowledge(id, &mut world).unwrap();
            }
            Op::Control(d, idx) => {
                let directive = match d {
                    0 => ControlDirective::Copy,
                    1 => ControlDirective::Delete,
                    2 => ControlDirective::Transform(TextTransform::Uppercase),
                    3 => ControlDirective::Transform(TextTransform::CollapseWhitespace),
                    _ => ControlDirective::Collate,
                };
                let ids: Vec<ElementId> = idx.iter().filter_map(|&i| pick(&known, i)).collect();
                machine.control_knowledge(directive, &ids, &mut world);
            }
            Op::Innovate(seed) => {
                let shared_before: BTreeSet<ElementId> = world.shared().map(|e| e.id).collect();
                let mark = machine.innovate(&mut world, seed);
                let (m, n) = (machine.mastered_len(), machine.innovated_len());
                if mark == Mark::Success {
                    if (m, n) != (before.0 + 1, before.1 + 1) {
                        failures.push(format!("innovate changed sizes {before:?} -> {:?}", (m, n)));
                    }
                    let new: Vec<_> = machine
                        .mastered()
                        .map(|e| e.id)
                        .filter(|id| !known.contains(id))
                        .collect();
                    if new.len() != 1 || shared_before.contains(&new[0]) {
                        failures.push("innovated element is not fresh".into());
                    }
                }
            }
            Op::Sync(push) => {
                let dir = if push {
                    SyncDirection::Push
                } else {
                    SyncDirection::Pull
                };
                machine.sync_shared_knowledge(&mut world, dir);
            }
            Op::Publish(m) => {
                world.publish("published", m);
                continue;
            }
        }
        let calls = if matches!(op, Op::InputKnown(_)) {
            2
        } else {
            1
        };
        if machine.trace().len() != trace_before + calls {
            failures.push(format!(
                "{op:?} appended {} events",
                machine.trace().len() - trace_before
            ));
        }
        if !machine.innovated_subset_of_mastered() {
            failures.push("K_N is not a subset of K_M".into());
        }
    }
    Run {
        machine,
        initial,
        invariant_failures: failures,
    }
}

/// Independent reading of the classification table: rebuild the size
/// history of K_M and K_N from the deltas, evaluate each column for each
/// row, and pick the row whose every column holds.
fn table_oracle(
    trace: &[MachineEvent],
    initial: &MachineSnapshot,
    fin: &MachineSnapshot,
) -> SystemType {
    let mut km = vec![initial.mastered.len() as i64];
    let mut kn = vec![initial.innovated.len() as i64];
    for e in trace {
        km.push(km.last().unwrap() + e.delta_mastered);
        kn.push(kn.last().unwrap() + e.delta_innovated);
    }
    km.push(fin.mastered.len() as i64);
    kn.push(fin.innovated.len() as i64);

    let io_null = fin.input_modalities.is_empty() && fin.output_modalities.is_empty();
    let io_open = !io_null;
    let km_non_null = !fin.mastered.is_empty();
    let km_fixed = initial.mastered == fin.mastered && km.windows(2).all(|w| w[0] == w[1]);
    let km_grows = km.last() > km.first();
    let kn_always_null = kn.iter().all(|&n| n == 0);
    let kn_non_null = !fin.innovated.is_empty();

    let rows = [
        (SystemType::Type0, io_null),
        (
            SystemType::Type1,
            io_open && km_non_null && km_fixed && kn_always_null,
        ),
        (
            SystemType::Type2,
            io_open && km_non_null && km_grows && kn_always_null,
        ),
        (SystemType::Type3, io_open && km_non_null && kn_non_null),
    ];
    let matching: Vec<SystemType> = rows.iter().filter(|r| r.1).map(|r| r.0).collect();
    match matching.as_slice() {
        [] => SystemType::Type9,
        [t] => *t,
        // The isolated row takes precedence; the others never overlap.
        [SystemType::Type0, ..] => SystemType::Type0,
        other => panic!("rows overlap: {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn classifier_agrees_with_table_oracle((q_i, q_o, preload, ops) in scenario()) {
        let run = drive(q_i, q_o, preload, ops);
        let m = &run.machine;
        let fin = m.snapshot();
        prop_assert_eq!(
            classify_machine(m.trace(), &run.initial, &fin),
            table_oracle(m.trace(), &run.initial, &fin)
        );
    }

    #[test]
    fn operation_invariants_hold((q_i, q_o, preload, ops) in scenario()) {
        let run = drive(q_i, q_o, preload, ops);
        prop_assert!(run.invariant_failures.is_empty(), "{:?}", run.invariant_failures);
        for (i, e) in run.machine.trace().iter().enumerate() {
            prop_assert_eq!(e.step, i as u64 + 1);
        }
    }
}

#[test]
fn generated_life_cycles_cover_every_class() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    let mut seen = BTreeSet::new();
    for _ in 0..1000 {
        let (q_i, q_o, preload, ops) = scenario().new_tree(&mut runner).unwrap().current();
        let run = drive(q_i, q_o, preload, ops);
        let m = &run.machine;
        seen.insert(classify_machine(m.trace(), &run.initial, &m.snapshot()).number());
    }
    assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![0, 1, 2, 3, 9]);
}
