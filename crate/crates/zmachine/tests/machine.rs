use std::sync::Arc;

use zmachine::asm::{global, global_var, local, Arg, Assembler, ObjectDef, StoryBuilder, Target, SP};
use zmachine::fixture::{box_game, hello_story, BOX_GAME_BANNER, BOX_GAME_MAX_SCORE};
use zmachine::{load_story, MachineState, Opcode, Status, ZError, DEFAULT_STEP_LIMIT};

fn machine(bytes: Vec<u8>, seed: u64) -> MachineState {
    MachineState::new(Arc::new(load_story(&bytes).unwrap()), seed)
}

/// Assembles a program around a text and parse buffer. The closure writes the
/// body.
fn program(build: impl FnOnce(&mut Assembler)) -> Vec<u8> {
    let mut asm = StoryBuilder::new()
        .words(&["go", "west", "take", "lamp"])
        .separators(b",")
        .object(ObjectDef::new("room"))
        .object(ObjectDef::new("lamp").parent(1).prop(4, &[9]).prop(2, &[1, 2]))
        .object(ObjectDef::new("key").parent(1))
        .property_default(7, 77)
        .text_buffer("text", 20)
        .parse_buffer("parse", 4)
        .array("table", &[0; 32])
        .assemble();
    build(&mut asm);
    asm.finish()
}

fn run(bytes: Vec<u8>) -> (MachineState, Result<String, ZError>) {
    let mut m = machine(bytes, 1);
    let out = m.run_until_input();
    (m, out)
}

#[test]
fn hello_prints_and_waits() {
    let mut m = machine(hello_story(), 0);
    assert_eq!(m.run_until_input().unwrap(), "You are in a box.");
    assert_eq!(m.status(), Status::AwaitingInput);
    m.feed_input("anything").unwrap();
    assert_eq!(m.run_until_input().unwrap(), "");
    assert_eq!(m.status(), Status::Halted);
}

#[test]
fn quit_first_halts_with_empty_narration() {
    let (m, out) = run(program(|a| {
        a.op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "");
    assert_eq!(m.status(), Status::Halted);
    assert!(m.fault().is_none());
}

#[test]
fn running_a_halted_machine_is_an_error() {
    let mut m = machine(hello_story(), 0);
    m.run_until_input().unwrap();
    m.feed_input("x").unwrap();
    m.run_until_input().unwrap();
    assert!(m.run_until_input().is_err());
}

#[test]
fn feeding_without_pending_read_fails() {
    let mut m = machine(hello_story(), 0);
    assert_eq!(m.feed_input("look"), Err(ZError::NotAwaitingInput));
}

fn parse_entries(m: &MachineState, parse: u16) -> Vec<(u16, u8, u8)> {
    let mem = m.dynamic_memory();
    let p = parse as usize;
    let count = mem[p + 1] as usize;
    (0..count)
        .map(|i| {
            let at = p + 2 + 4 * i;
            (u16::from_be_bytes([mem[at], mem[at + 1]]), mem[at + 2], mem[at + 3])
        })
        .collect()
}

fn reader() -> (Vec<u8>, u16, u16) {
    let mut bufs = (0, 0);
    let story = program(|a| {
        bufs = (a.addr("text"), a.addr("parse"));
        a.op(Opcode::Sread, &[Arg::Num(bufs.0), Arg::Num(bufs.1)])
            .op(Opcode::Quit, &[]);
    });
    (story, bufs.0, bufs.1)
}

#[test]
fn tokenises_into_parse_buffer() {
    let (story, text, parse) = reader();
    let mut m = machine(story, 0);
    m.run_until_input().unwrap();
    m.feed_input("Go West").unwrap();
    let go = m.lookup_dictionary("go");
    let west = m.lookup_dictionary("west");
    assert_ne!(go, 0);
    assert_ne!(west, 0);
    // positions count from 1 (byte 1 of the text buffer holds the first letter)
    assert_eq!(parse_entries(&m, parse), vec![(go, 2, 1), (west, 4, 4)]);
    let t = text as usize;
    assert_eq!(&m.dynamic_memory()[t + 1..t + 9], b"go west\0");
}

#[test]
fn empty_input_yields_no_words() {
    let (story, _, parse) = reader();
    let mut m = machine(story, 0);
    m.run_until_input().unwrap();
    m.feed_input("").unwrap();
    assert_eq!(parse_entries(&m, parse), vec![]);
    assert_eq!(m.status(), Status::Running);
}

#[test]
fn unknown_word_has_zero_address() {
    let (story, _, parse) = reader();
    let mut m = machine(story, 0);
    m.run_until_input().unwrap();
    m.feed_input("xyzzyqq").unwrap();
    assert_eq!(parse_entries(&m, parse), vec![(0, 7, 1)]);
}

#[test]
fn separators_are_words_and_max_words_truncates() {
    let (story, _, parse) = reader();
    let mut m = machine(story, 0);
    m.run_until_input().unwrap();
    m.feed_input("take lamp, go west").unwrap();
    let take = m.lookup_dictionary("take");
    let lamp = m.lookup_dictionary("lamp");
    let comma = 0; // separators are looked up like words and are not in the dictionary
    // parse buffer holds 4 words
    assert_eq!(
        parse_entries(&m, parse),
        vec![(take, 4, 1), (lamp, 4, 6), (comma, 1, 10), (m.lookup_dictionary("go"), 2, 12)]
    );
}

#[test]
fn input_is_truncated_to_buffer_capacity() {
    let (story, text, _) = reader();
    let mut m = machine(story, 0);
    m.run_until_input().unwrap();
    m.feed_input(&"a".repeat(50)).unwrap();
    let t = text as usize;
    // capacity is 20 letters
    assert_eq!(m.dynamic_memory()[t + 1..t + 21], [b'a'; 20]);
    assert_eq!(m.dynamic_memory()[t + 21], 0);
}

#[test]
fn arithmetic_is_signed_16_bit() {
    let (_, out) = run(program(|a| {
        a.op_store(Opcode::Sub, &[Arg::Num(3), Arg::Num(10)], 0)
            .op(Opcode::PrintNum, &[SP])
            .print(" ")
            .op_store(Opcode::Div, &[Arg::Wide((-7i16) as u16), Arg::Num(2)], 0)
            .op(Opcode::PrintNum, &[SP])
            .print(" ")
            .op_store(Opcode::Mod, &[Arg::Wide((-7i16) as u16), Arg::Num(2)], 0)
            .op(Opcode::PrintNum, &[SP])
            .print(" ")
            .op_store(Opcode::Mul, &[Arg::Wide(300), Arg::Wide(300)], 0)
            .op(Opcode::PrintNum, &[SP])
            .op(Opcode::Quit, &[]);
    }));
    // 90000 mod 65536 = 24464
    assert_eq!(out.unwrap(), "-7 -3 -1 24464");
}

#[test]
fn division_by_zero_faults_and_halts() {
    let (m, out) = run(program(|a| {
        a.print("before").op_store(Opcode::Div, &[Arg::Num(1), Arg::Num(0)], 0);
    }));
    assert!(matches!(out, Err(ZError::ExecutionFault { .. })));
    assert_eq!(m.status(), Status::Halted);
    assert!(m.fault().is_some());
}

#[test]
fn partial_output_survives_a_fault() {
    let mut m = machine(
        program(|a| {
            a.print("before").op_store(Opcode::Mod, &[Arg::Num(1), Arg::Num(0)], 0);
        }),
        0,
    );
    let mut sink = String::new();
    assert!(m.run_into(&mut sink).is_err());
    assert_eq!(sink, "before");
}

#[test]
fn stack_underflow_faults() {
    let (_, out) = run(program(|a| {
        a.op(Opcode::Pop, &[]);
    }));
    match out {
        Err(ZError::ExecutionFault { reason, .. }) => assert!(reason.contains("underflow")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn routine_cannot_pop_callers_stack() {
    let (_, out) = run(program(|a| {
        a.op(Opcode::Push, &[Arg::Num(1)])
            .emit(Opcode::Call, &[Arg::Packed("r".into())], Some(0), None)
            .op(Opcode::Quit, &[]);
        a.routine("r", &[]).op(Opcode::RetPopped, &[]);
    }));
    assert!(matches!(out, Err(ZError::ExecutionFault { .. })));
}

#[test]
fn illegal_opcode_faults() {
    let (m, out) = run(program(|a| {
        a.print("x").raw(&[0xBE, 0x00]);
    }));
    match out {
        Err(ZError::ExecutionFault { reason, .. }) => assert!(reason.contains("illegal"), "{reason}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(m.status(), Status::Halted);
}

#[test]
fn write_to_static_memory_faults() {
    let (_, out) = run(program(|a| {
        let static_base = 0x0E; // header field holding the base; read it at runtime
        a.op_store(Opcode::Loadw, &[Arg::Num(0), Arg::Num(static_base / 2)], 0)
            .op(Opcode::Storeb, &[SP, Arg::Num(0), Arg::Num(1)])
            .op(Opcode::Quit, &[]);
    }));
    match out {
        Err(ZError::ExecutionFault { reason, .. }) => assert!(reason.contains("static"), "{reason}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn infinite_loop_hits_step_limit() {
    assert_eq!(DEFAULT_STEP_LIMIT, 10_000_000);
    let mut m = machine(
        program(|a| {
            a.label("top").jump("top");
        }),
        0,
    );
    m.set_step_limit(5_000);
    assert_eq!(m.run_until_input(), Err(ZError::RunawayProgram { steps: 5_000 }));
    assert_eq!(m.status(), Status::Halted);
}

#[test]
fn calls_bind_arguments_over_defaults() {
    let (m, out) = run(program(|a| {
        a.emit(Opcode::Call, &[Arg::Packed("sum".into()), Arg::Num(5), Arg::Num(6)], Some(global_var(10)), None)
            .op(Opcode::PrintNum, &[global(10)])
            .op(Opcode::Quit, &[]);
        // locals 1..3 default to 100, 200, 300; the call overrides 1 and 2
        a.routine("sum", &[100, 200, 300])
            .op_store(Opcode::Add, &[local(1), local(2)], 0)
            .op_store(Opcode::Add, &[SP, local(3)], 0)
            .op(Opcode::RetPopped, &[]);
    }));
    assert_eq!(out.unwrap(), "311");
    assert_eq!(m.global(10), 311);
    assert!(m.frames().is_empty());
    assert!(m.stack().is_empty());
}

#[test]
fn calling_address_zero_returns_false() {
    let (_, out) = run(program(|a| {
        a.op_store(Opcode::Call, &[Arg::Num(0)], 0)
            .op(Opcode::PrintNum, &[SP])
            .op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "0");
}

#[test]
fn branch_targets_return_values() {
    let (_, out) = run(program(|a| {
        a.emit(Opcode::Call, &[Arg::Packed("t".into())], Some(0), None)
            .op(Opcode::PrintNum, &[SP])
            .emit(Opcode::Call, &[Arg::Packed("f".into())], Some(0), None)
            .op(Opcode::PrintNum, &[SP])
            .op(Opcode::Quit, &[]);
        a.routine("t", &[]).emit(Opcode::Jz, &[Arg::Num(0)], None, Some((true, Target::ReturnTrue)));
        a.op(Opcode::Rfalse, &[]);
        a.routine("f", &[]).emit(Opcode::Jz, &[Arg::Num(1)], None, Some((false, Target::ReturnFalse)));
        a.op(Opcode::Rtrue, &[]);
    }));
    assert_eq!(out.unwrap(), "10");
}

#[test]
fn indirect_variable_ops_use_stack_in_place() {
    let (m, out) = run(program(|a| {
        a.op(Opcode::Push, &[Arg::Num(41)])
            .op(Opcode::Inc, &[Arg::Num(0)])
            .op(Opcode::PrintNum, &[SP])
            .op(Opcode::Push, &[Arg::Num(3)])
            .op(Opcode::Store, &[Arg::Num(0), Arg::Num(9)])
            .op(Opcode::PrintNum, &[SP])
            .op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "429");
    assert!(m.stack().is_empty());
}

#[test]
fn inc_chk_and_dec_chk_compare_signed() {
    let (_, out) = run(program(|a| {
        a.op(Opcode::Store, &[Arg::Num(global_var(0) as u16), Arg::Num(0)]);
        a.label("loop")
            .op(Opcode::PrintNum, &[global(0)])
            .op_branch(Opcode::IncChk, &[Arg::Num(global_var(0) as u16), Arg::Num(3)], false, "loop")
            .print("|")
            .op_branch(Opcode::DecChk, &[Arg::Num(global_var(0) as u16), Arg::Wide(0xFFFF)], true, "done")
            .print("-")
            .op_branch(Opcode::DecChk, &[Arg::Num(global_var(0) as u16), Arg::Num(5)], true, "done")
            .print("never");
        a.label("done").op(Opcode::PrintNum, &[global(0)]).op(Opcode::Quit, &[]);
    }));
    // 4 > 3 ends the loop; 3 < -1 fails as a signed compare; 2 < 5 branches
    assert_eq!(out.unwrap(), "0123|-2");
}

#[test]
fn object_tree_operations() {
    let (m, out) = run(program(|a| {
        // initial tree: room(1) > [lamp(2), key(3)]
        a.op(Opcode::PrintObj, &[Arg::Num(1)])
            .print(":")
            .emit(Opcode::GetChild, &[Arg::Num(1)], Some(0), Some((true, Target::from("c"))));
        a.label("c")
            .op(Opcode::PrintObj, &[SP])
            .print(",")
            .emit(Opcode::GetSibling, &[Arg::Num(2)], Some(0), Some((true, Target::from("s"))));
        a.label("s")
            .op(Opcode::PrintObj, &[SP])
            .op(Opcode::RemoveObj, &[Arg::Num(2)])
            .op(Opcode::InsertObj, &[Arg::Num(2), Arg::Num(3)])
            .op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "room:lamp,key");
    assert_eq!(m.child(1).unwrap(), 3);
    assert_eq!(m.parent(2).unwrap(), 3);
    assert_eq!(m.child(3).unwrap(), 2);
    assert_eq!(m.sibling(3).unwrap(), 0);
    assert_eq!(m.sibling(2).unwrap(), 0);
}

#[test]
fn attributes_set_and_clear() {
    let (m, _) = run(program(|a| {
        a.op(Opcode::SetAttr, &[Arg::Num(2), Arg::Num(0)])
            .op(Opcode::SetAttr, &[Arg::Num(2), Arg::Num(31)])
            .op(Opcode::SetAttr, &[Arg::Num(2), Arg::Num(9)])
            .op(Opcode::ClearAttr, &[Arg::Num(2), Arg::Num(9)])
            .op(Opcode::Quit, &[]);
    }));
    assert!(m.test_attr(2, 0).unwrap());
    assert!(m.test_attr(2, 31).unwrap());
    assert!(!m.test_attr(2, 9).unwrap());
    assert!(!m.test_attr(3, 0).unwrap());
}

#[test]
fn properties_read_write_and_walk() {
    let (_, out) = run(program(|a| {
        let print_sp = |a: &mut Assembler| {
            a.op(Opcode::PrintNum, &[SP]).print(" ");
        };
        a.op_store(Opcode::GetProp, &[Arg::Num(2), Arg::Num(4)], 0);
        print_sp(a);
        a.op_store(Opcode::GetProp, &[Arg::Num(2), Arg::Num(2)], 0);
        print_sp(a);
        // property 7 is absent: falls back to the default table
        a.op_store(Opcode::GetProp, &[Arg::Num(2), Arg::Num(7)], 0);
        print_sp(a);
        a.op(Opcode::PutProp, &[Arg::Num(2), Arg::Num(4), Arg::Num(42)])
            .op_store(Opcode::GetProp, &[Arg::Num(2), Arg::Num(4)], 0);
        print_sp(a);
        a.op_store(Opcode::GetNextProp, &[Arg::Num(2), Arg::Num(0)], 0);
        print_sp(a);
        a.op_store(Opcode::GetNextProp, &[Arg::Num(2), Arg::Num(4)], 0);
        print_sp(a);
        a.op_store(Opcode::GetNextProp, &[Arg::Num(2), Arg::Num(2)], 0);
        print_sp(a);
        a.op_store(Opcode::GetPropAddr, &[Arg::Num(2), Arg::Num(2)], 0)
            .op_store(Opcode::GetPropLen, &[SP], 0);
        print_sp(a);
        a.op_store(Opcode::GetPropAddr, &[Arg::Num(2), Arg::Num(9)], 0);
        print_sp(a);
        a.op(Opcode::Quit, &[]);
    }));
    // properties are stored in descending order: 4 then 2; 0x0102 = 258
    assert_eq!(out.unwrap(), "9 258 77 42 4 2 0 2 0 ");
}

#[test]
fn memory_stream_captures_output() {
    let mut table = 0;
    let (m, out) = run(program(|a| {
        table = a.addr("table");
        a.print("a")
            .op(Opcode::OutputStream, &[Arg::Num(3), Arg::Num(table)])
            .print("hid\n")
            .op(Opcode::OutputStream, &[Arg::Wide((-3i16) as u16)])
            .print("b")
            .op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "ab");
    let t = table as usize;
    let mem = m.dynamic_memory();
    assert_eq!(&mem[t..t + 6], &[0, 4, b'h', b'i', b'd', 13]);
}

#[test]
fn screen_stream_and_upper_window_suppress_output() {
    let (_, out) = run(program(|a| {
        a.print("1")
            .op(Opcode::OutputStream, &[Arg::Wide((-1i16) as u16)])
            .print("2")
            .op(Opcode::OutputStream, &[Arg::Num(1)])
            .op(Opcode::SetWindow, &[Arg::Num(1)])
            .print("3")
            .op(Opcode::SetWindow, &[Arg::Num(0)])
            .print("4")
            .op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "14");
}

#[test]
fn print_char_and_addr() {
    let (_, out) = run(program(|a| {
        a.op(Opcode::PrintChar, &[Arg::Num(b'Q' as u16)])
            .op(Opcode::PrintPaddr, &[Arg::Packed("msg".into())])
            .op(Opcode::NewLine, &[])
            .op(Opcode::Quit, &[]);
        a.string("msg", "Hello, World!");
    }));
    assert_eq!(out.unwrap(), "QHello, World!\n");
}

fn random_program() -> Vec<u8> {
    program(|a| {
        let (text, parse) = (a.addr("text"), a.addr("parse"));
        a.label("loop")
            .op_store(Opcode::Random, &[Arg::Num(100)], 0)
            .op(Opcode::PrintNum, &[SP])
            .print(" ")
            .op(Opcode::Sread, &[Arg::Num(text), Arg::Num(parse)])
            .jump("loop");
    })
}

fn draws(seed: u64, n: usize) -> Vec<String> {
    let mut m = machine(random_program(), seed);
    let mut out = Vec::new();
    for _ in 0..n {
        out.push(m.run_until_input().unwrap());
        m.feed_input("").unwrap();
    }
    out
}

#[test]
fn random_is_seeded_and_in_range() {
    let a = draws(7, 50);
    assert_eq!(a, draws(7, 50));
    assert_ne!(a, draws(8, 50));
    for s in &a {
        let v: u16 = s.trim().parse().unwrap();
        assert!((1..=100).contains(&v));
    }
}

#[test]
fn negative_random_reseeds_predictably() {
    let prog = |seed_arg: i16| {
        program(move |a| {
            a.op_store(Opcode::Random, &[Arg::Wide(seed_arg as u16)], 0)
                .op(Opcode::PrintNum, &[SP])
                .print(":");
            for _ in 0..5 {
                a.op_store(Opcode::Random, &[Arg::Num(1000)], 0)
                    .op(Opcode::PrintNum, &[SP])
                    .print(" ");
            }
            a.op(Opcode::Quit, &[]);
        })
    };
    let (_, x) = run(prog(-5));
    let mut m = machine(prog(-5), 999);
    let y = m.run_until_input().unwrap();
    assert_eq!(x.unwrap(), y);
    assert!(y.starts_with("0:"));
}

#[test]
fn box_game_walkthrough() {
    let mut m = machine(box_game(0), 3);
    let intro = m.run_until_input().unwrap();
    assert!(intro.starts_with(BOX_GAME_BANNER));
    assert!(intro.contains("There is a brass lamp here."));
    assert_eq!(m.global(0), 1);

    let say = |m: &mut MachineState, s: &str| {
        m.feed_input(s).unwrap();
        m.run_until_input().unwrap()
    };
    assert_eq!(say(&mut m, "take lamp"), "Taken.\n");
    assert_eq!(m.global(1), 5);
    assert_eq!(say(&mut m, "take lamp"), "You already have that.\n");
    assert_eq!(say(&mut m, "i"), "You are carrying:\n  a brass lamp\n");
    assert_eq!(say(&mut m, "drop lamp"), "Dropped.\n");
    assert_eq!(say(&mut m, "get lamp"), "Taken.\n");
    assert_eq!(m.global(1), 5, "points are awarded once");
    assert_eq!(say(&mut m, "n"), "You can't go that way.\n");
    assert_eq!(say(&mut m, "dance"), "I don't understand that sentence.\n");
    assert_eq!(say(&mut m, ""), "I beg your pardon?\n");
    assert_eq!(
        say(&mut m, "score"),
        format!("You have so far scored 5 out of a possible {BOX_GAME_MAX_SCORE}, in 9 turns.\n")
    );
    assert_eq!(m.global(2), 9);
    say(&mut m, "xyzzy");
    assert_eq!(m.global(1), 10);
    assert_eq!(say(&mut m, "quit"), "Goodbye.\n");
    assert_eq!(m.status(), Status::Halted);
}

#[test]
fn box_game_initial_score_is_a_global() {
    let mut m = machine(box_game(7), 0);
    m.run_until_input().unwrap();
    assert_eq!(m.global(1), 7);
    assert!(m.story().header().is_score_game());
}

#[test]
fn restart_loops_forever_without_persistent_state() {
    let mut m = machine(
        program(|a| {
            a.print("x").op(Opcode::Restart, &[]);
        }),
        0,
    );
    m.set_step_limit(30);
    let mut sink = String::new();
    assert!(matches!(m.run_into(&mut sink), Err(ZError::RunawayProgram { .. })));
    assert_eq!(sink, "x".repeat(15));
}

#[test]
fn verify_checks_the_checksum() {
    let body = |a: &mut Assembler| {
        a.op_branch(Opcode::Verify, &[], true, "ok")
            .print("bad")
            .op(Opcode::Quit, &[]);
        a.label("ok").print("good").op(Opcode::Quit, &[]);
    };
    let (_, out) = run(program(body));
    assert_eq!(out.unwrap(), "good");

    let mut bytes = program(body);
    let last = bytes.len() - 1;
    bytes[last] ^= 0xFF;
    let (_, out) = run(bytes);
    assert_eq!(out.unwrap(), "bad");
}

#[test]
fn save_and_restore_opcodes_fail_gracefully() {
    let (_, out) = run(program(|a| {
        a.op_branch(Opcode::Save, &[], false, "nosave").print("saved");
        a.label("nosave")
            .op_branch(Opcode::Restore, &[], false, "norestore")
            .print("restored");
        a.label("norestore").print("ok").op(Opcode::Quit, &[]);
    }));
    assert_eq!(out.unwrap(), "ok");
}
