use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zmachine::asm::{local, Arg, StoryBuilder, SP};
use zmachine::fixture::box_game;
use zmachine::{load_story, MachineState, Opcode, Snapshot, Status};

const COMMANDS: &[&str] = &[
    "look", "take lamp", "drop lamp", "i", "score", "xyzzy", "n", "wait", "frob", "", "get lamp",
];

fn boxed(seed: u64) -> MachineState {
    MachineState::new(Arc::new(load_story(&box_game(0)).unwrap()), seed)
}

/// Story that reads input from inside a routine with locals and a busy stack,
/// so snapshots have frames to encode.
fn nested_reader() -> Vec<u8> {
    let mut asm = StoryBuilder::new()
        .text_buffer("text", 20)
        .parse_buffer("parse", 4)
        .assemble();
    let (text, parse) = (asm.addr("text"), asm.addr("parse"));
    asm.op(Opcode::Push, &[Arg::Num(11)])
        .op(Opcode::Push, &[Arg::Num(12)])
        .emit(Opcode::Call, &[Arg::Packed("outer".into()), Arg::Num(1)], Some(0), None)
        .op(Opcode::Quit, &[]);
    asm.routine("outer", &[0, 0, 0])
        .op(Opcode::Push, &[local(1)])
        .emit(Opcode::Call, &[Arg::Packed("inner".into())], Some(0), None)
        .op(Opcode::RetPopped, &[]);
    asm.routine("inner", &[5, 6, 7, 8, 9])
        .op(Opcode::Push, &[Arg::Num(99)])
        .op(Opcode::Sread, &[Arg::Num(text), Arg::Num(parse)])
        .op(Opcode::Ret, &[SP]);
    asm.finish()
}

#[test]
fn serialized_size_follows_the_formula() {
    let mut m = MachineState::new(Arc::new(load_story(&nested_reader()).unwrap()), 0);
    m.run_until_input().unwrap();
    assert_eq!(m.frames().len(), 2);
    assert_eq!(m.stack().len(), 4);

    let snap = m.snapshot();
    let expected = m.dynamic_memory().len()
        + 2 * m.stack().len()
        + m.frames().iter().map(|f| 11 + 2 * f.locals.len()).sum::<usize>()
        + 88;
    assert_eq!(Snapshot::FIXED_OVERHEAD, 88);
    assert_eq!(Snapshot::FRAME_OVERHEAD, 11);
    assert_eq!(snap.byte_len(), expected);
    assert_eq!(snap.to_bytes().len(), expected);
    // 3 locals + 5 locals
    assert_eq!(expected, m.dynamic_memory().len() + 8 + (11 + 6) + (11 + 10) + 88);
}

#[test]
fn restore_then_snapshot_is_identity() {
    let mut m = boxed(4);
    m.run_until_input().unwrap();
    m.feed_input("take lamp").unwrap();
    m.run_until_input().unwrap();
    let snap = m.snapshot();

    m.feed_input("drop lamp").unwrap();
    m.run_until_input().unwrap();
    assert_ne!(m.snapshot(), snap);

    m.restore(&snap);
    assert_eq!(m.snapshot(), snap);
    assert_eq!(m.snapshot().to_bytes(), snap.to_bytes());
}

#[test]
fn restored_copy_continues_identically() {
    let mut m = boxed(9);
    m.run_until_input().unwrap();
    let snap = m.snapshot();
    let mut copy = boxed(123);
    copy.restore(&snap);
    for cmd in ["xyzzy", "take lamp", "score"] {
        m.feed_input(cmd).unwrap();
        copy.feed_input(cmd).unwrap();
        assert_eq!(m.run_until_input().unwrap(), copy.run_until_input().unwrap());
    }
    assert_eq!(m.snapshot(), copy.snapshot());
}

/// Plays 500 random commands. When `probe` is set, each step also runs a
/// `score` command on the live machine and rolls it back with a snapshot.
fn transcript(probe: bool) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut m = boxed(77);
    let mut out = vec![m.run_until_input().unwrap()];
    for _ in 0..500 {
        if m.status() != Status::AwaitingInput {
            break;
        }
        if probe {
            let snap = m.snapshot();
            m.feed_input("score").unwrap();
            let reply = m.run_until_input().unwrap();
            assert!(reply.contains("out of a possible"));
            m.restore(&snap);
        }
        let cmd = COMMANDS[rng.gen_range(0..COMMANDS.len())];
        m.feed_input(cmd).unwrap();
        out.push(m.run_until_input().unwrap());
    }
    out
}

#[test]
fn probing_with_snapshots_leaves_no_trace() {
    let plain = transcript(false);
    assert_eq!(plain.len(), 501);
    assert_eq!(plain, transcript(true));
}

#[test]
fn halted_state_round_trips() {
    let mut m = boxed(0);
    m.run_until_input().unwrap();
    m.feed_input("quit").unwrap();
    m.run_until_input().unwrap();
    let snap = m.snapshot();
    assert_eq!(snap.status(), Status::Halted);
    let mut other = boxed(0);
    other.restore(&snap);
    assert_eq!(other.status(), Status::Halted);
}
