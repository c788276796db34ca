//! Story images built with the assembler, shared by tests across the
//! workspace and by the `make_fixture` example.

use crate::asm::{global, global_var, Arg, ObjectDef, StoryBuilder, Target};
use crate::instruction::Opcode;

/// Maximum score of [`box_game`].
pub const BOX_GAME_MAX_SCORE: u16 = 10;

/// Banner printed by [`box_game`] before the first prompt.
pub const BOX_GAME_BANNER: &str = "Welcome to the Box.\nA tiny test of the machine.\n\n";

/// Three instructions: print, read, quit.
pub fn hello_story() -> Vec<u8> {
    let mut asm = StoryBuilder::new()
        .text_buffer("text", 40)
        .parse_buffer("parse", 8)
        .assemble();
    let (text, parse) = (asm.addr("text"), asm.addr("parse"));
    asm.print("You are in a box.")
        .op(Opcode::Sread, &[Arg::Num(text), Arg::Num(parse)])
        .op(Opcode::Quit, &[]);
    asm.finish()
}

/// A one-room score game: a lamp worth 5 points, a magic word worth 5, and
/// the usual look/inventory/score verbs. Global 0 is the location, 1 the
/// score, 2 the turn count.
pub fn box_game(initial_score: u16) -> Vec<u8> {
    const BOX: u16 = 1;
    const LAMP: u16 = 2;
    const PLAYER: u16 = 3;
    const TAKEN: u16 = 1;
    const SOLVED: u16 = 2;

    let mut asm = StoryBuilder::new()
        .abbreviation("You ")
        .abbreviation("the ")
        .words(&[
            "look", "l", "take", "get", "drop", "lamp", "score", "inventory", "i", "quit",
            "xyzzy", "north", "n", "wait", "z",
        ])
        .separators(b",.")
        .object(ObjectDef::new("Box"))
        .object(ObjectDef::new("brass lamp").parent(1).prop(5, &[0, 7]))
        .object(ObjectDef::new("you").parent(1))
        .global(0, BOX)
        .global(1, initial_score)
        .text_buffer("text", 60)
        .parse_buffer("parse", 10)
        .assemble();

    let text = asm.addr("text");
    let parse = asm.addr("parse");
    let d = |w: &str, asm: &crate::asm::Assembler| Arg::Num(asm.dict(w));
    let (g_loc, g_score, g_turns) = (global(0), global(1), global(2));
    let (w1, w2, tmp) = (global_var(3), global_var(4), global_var(6));

    asm.print(BOX_GAME_BANNER)
        .emit(Opcode::Call, &[Arg::Packed("describe".into())], Some(tmp), None);

    asm.label("loop")
        .op(Opcode::Sread, &[Arg::Num(text), Arg::Num(parse)])
        .op(Opcode::Inc, &[Arg::Num(global_var(2) as u16)])
        .op_store(Opcode::Loadb, &[Arg::Num(parse), Arg::Num(1)], tmp)
        .op_branch(Opcode::Jz, &[Arg::Var(tmp)], true, "empty")
        .op_store(Opcode::Loadw, &[Arg::Num(parse), Arg::Num(1)], w1)
        .op_store(Opcode::Loadw, &[Arg::Num(parse), Arg::Num(3)], w2);
    let dispatch: [(&[&str], &str); 9] = [
        (&["look", "l"], "do_look"),
        (&["take", "get"], "do_take"),
        (&["drop"], "do_drop"),
        (&["score"], "do_score"),
        (&["inventory", "i"], "do_inv"),
        (&["quit"], "do_quit"),
        (&["xyzzy"], "do_magic"),
        (&["north", "n"], "do_north"),
        (&["wait", "z"], "do_wait"),
    ];
    for (words, label) in dispatch {
        let mut args = vec![Arg::Var(w1)];
        args.extend(words.iter().map(|w| d(w, &asm)));
        asm.op_branch(Opcode::Je, &args, true, label);
    }
    asm.print("I don't understand that sentence.\n").jump("loop");

    asm.label("empty").print("I beg your pardon?\n").jump("loop");

    asm.label("do_look")
        .emit(Opcode::Call, &[Arg::Packed("describe".into())], Some(tmp), None)
        .jump("loop");

    let lamp_word = d("lamp", &asm);
    asm.label("do_take")
        .op_branch(Opcode::Je, &[Arg::Var(w2), lamp_word.clone()], true, "take_lamp")
        .print("You can't see any such thing.\n")
        .jump("loop");
    asm.label("take_lamp")
        .op_branch(Opcode::Jin, &[Arg::Num(LAMP), Arg::Num(PLAYER)], true, "already")
        .op(Opcode::InsertObj, &[Arg::Num(LAMP), Arg::Num(PLAYER)])
        .op_branch(Opcode::TestAttr, &[Arg::Num(LAMP), Arg::Num(TAKEN)], true, "taken")
        .op(Opcode::SetAttr, &[Arg::Num(LAMP), Arg::Num(TAKEN)])
        .op_store(Opcode::Add, &[g_score.clone(), Arg::Num(5)], global_var(1));
    asm.label("taken").print("Taken.\n").jump("loop");
    asm.label("already").print("You already have that.\n").jump("loop");

    asm.label("do_drop")
        .op_branch(Opcode::Je, &[Arg::Var(w2), lamp_word], false, "not_held")
        .op_branch(Opcode::Jin, &[Arg::Num(LAMP), Arg::Num(PLAYER)], false, "not_held")
        .op(Opcode::InsertObj, &[Arg::Num(LAMP), Arg::Num(BOX)])
        .print("Dropped.\n")
        .jump("loop");
    asm.label("not_held").print("You don't have that.\n").jump("loop");

    asm.label("do_score")
        .print("You have so far scored ")
        .op(Opcode::PrintNum, &[g_score.clone()])
        .print(" out of a possible ")
        .op(Opcode::PrintNum, &[Arg::Num(BOX_GAME_MAX_SCORE)])
        .print(", in ")
        .op(Opcode::PrintNum, &[g_turns])
        .print(" turns.\n")
        .jump("loop");

    asm.label("do_inv")
        .emit(
            Opcode::GetChild,
            &[Arg::Num(PLAYER)],
            Some(tmp),
            Some((false, Target::from("empty_handed"))),
        )
        .print("You are carrying:\n  a ")
        .op(Opcode::PrintObj, &[Arg::Var(tmp)])
        .op(Opcode::NewLine, &[])
        .jump("loop");
    asm.label("empty_handed").print("You are empty-handed.\n").jump("loop");

    asm.label("do_quit").print("Goodbye.\n").op(Opcode::Quit, &[]);

    asm.label("do_magic")
        .op_store(Opcode::Random, &[Arg::Num(100)], global_var(5))
        .print("A hollow voice says \"")
        .op(Opcode::PrintNum, &[global(5)])
        .print("\".\n")
        .op_branch(Opcode::TestAttr, &[Arg::Num(BOX), Arg::Num(SOLVED)], true, "loop")
        .op(Opcode::SetAttr, &[Arg::Num(BOX), Arg::Num(SOLVED)])
        .op_store(Opcode::Add, &[g_score, Arg::Num(5)], global_var(1))
        .jump("loop");

    asm.label("do_north").print("You can't go that way.\n").jump("loop");
    asm.label("do_wait").print("Time passes.\n").jump("loop");

    asm.routine("describe", &[])
        .op(Opcode::PrintObj, &[g_loc])
        .op(Opcode::NewLine, &[])
        .print("You are in a small wooden box with the lid shut.\n")
        .op_branch(Opcode::Jin, &[Arg::Num(LAMP), Arg::Num(BOX)], false, Target::ReturnTrue)
        .op(Opcode::PrintPaddr, &[Arg::Packed("lamp_here".into())])
        .op(Opcode::Rtrue, &[]);
    asm.string("lamp_here", "There is a brass lamp here.\n");

    asm.finish()
}
