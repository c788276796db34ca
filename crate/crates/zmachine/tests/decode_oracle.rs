//! Hand-decoded instruction bytes. Every expected value below was worked out
//! by hand from the encoding rules, not produced by the decoder.

use zmachine::instruction::{decode, Branch, BranchTarget, Form, Instruction, Opcode, Operand};
use zmachine::{Memory, ZError};

const AT: usize = 0x100;

struct Bytes(Vec<u8>);

impl Memory for Bytes {
    fn byte(&self, addr: usize) -> Option<u8> {
        self.0.get(addr).copied()
    }
    fn abbreviations(&self) -> usize {
        0
    }
}

/// Places `code` at `AT` in a buffer that ends right after it.
fn decode_bytes(code: &[u8]) -> zmachine::Result<Instruction> {
    let mut mem = vec![0u8; AT];
    mem.extend_from_slice(code);
    decode(&Bytes(mem), AT)
}

fn check(
    code: &[u8],
    form: Form,
    opcode: Opcode,
    operands: &[Operand],
    store: Option<u8>,
    branch: Option<Branch>,
) -> Instruction {
    let ins = decode_bytes(code).unwrap_or_else(|e| panic!("{code:02x?}: {e}"));
    assert_eq!(ins.form, form, "{code:02x?}");
    assert_eq!(ins.opcode, opcode, "{code:02x?}");
    assert_eq!(ins.operands, operands, "{code:02x?}");
    assert_eq!(ins.store, store, "{code:02x?}");
    assert_eq!(ins.branch, branch, "{code:02x?}");
    assert_eq!(ins.length, code.len(), "{code:02x?}");
    assert_eq!(ins.next_addr(), AT + code.len());
    ins
}

fn to(on_true: bool, target: usize) -> Option<Branch> {
    Some(Branch {
        on_true,
        target: BranchTarget::Address(target),
    })
}

fn ret(on_true: bool, value: bool) -> Option<Branch> {
    Some(Branch {
        on_true,
        target: if value {
            BranchTarget::ReturnTrue
        } else {
            BranchTarget::ReturnFalse
        },
    })
}

use Operand::{Large, Small, Variable as Var};

#[test]
fn long_add_var_small() {
    check(&[0x54, 0x01, 0x02, 0x00], Form::Long, Opcode::Add, &[Var(1), Small(2)], Some(0), None);
}

#[test]
fn long_store_small_small() {
    check(&[0x0D, 0x10, 0x05], Form::Long, Opcode::Store, &[Small(0x10), Small(5)], None, None);
}

#[test]
fn long_loadw_and_loadb() {
    check(&[0x4F, 0x01, 0x02, 0x10], Form::Long, Opcode::Loadw, &[Var(1), Small(2)], Some(0x10), None);
    check(&[0x10, 0x20, 0x03, 0x04], Form::Long, Opcode::Loadb, &[Small(0x20), Small(3)], Some(4), None);
}

#[test]
fn long_object_ops() {
    check(&[0x0B, 0x05, 0x03], Form::Long, Opcode::SetAttr, &[Small(5), Small(3)], None, None);
    check(&[0x6E, 0x01, 0x02], Form::Long, Opcode::InsertObj, &[Var(1), Var(2)], None, None);
    // 0x80 0x06: branch on true, two-byte offset 6 -> (AT+5) + 6 - 2
    check(
        &[0x0A, 0x05, 0x03, 0x80, 0x06],
        Form::Long,
        Opcode::TestAttr,
        &[Small(5), Small(3)],
        None,
        to(true, AT + 9),
    );
}

#[test]
fn long_je_var_var_rfalse() {
    // 0xC0: on true, short form, offset 0 = return false
    check(&[0x61, 0x10, 0x11, 0xC0], Form::Long, Opcode::Je, &[Var(0x10), Var(0x11)], None, ret(true, false));
}

#[test]
fn long_je_negative_branch() {
    // 0x3F 0xF0: on false, 14-bit 0x3FF0 = -16 -> (AT+5) - 16 - 2
    check(
        &[0x41, 0x01, 0x02, 0x3F, 0xF0],
        Form::Long,
        Opcode::Je,
        &[Var(1), Small(2)],
        None,
        to(false, AT + 5 - 18),
    );
}

#[test]
fn short_0op_table() {
    let cases = [
        (0xB0, Opcode::Rtrue),
        (0xB1, Opcode::Rfalse),
        (0xB4, Opcode::Nop),
        (0xB7, Opcode::Restart),
        (0xB8, Opcode::RetPopped),
        (0xB9, Opcode::Pop),
        (0xBA, Opcode::Quit),
        (0xBB, Opcode::NewLine),
        (0xBC, Opcode::ShowStatus),
    ];
    for (byte, op) in cases {
        check(&[byte], Form::Short, op, &[], None, None);
    }
}

#[test]
fn short_save_and_verify_branch() {
    // 0xC2: on true, offset 2 -> (AT+2) + 2 - 2
    check(&[0xB5, 0xC2], Form::Short, Opcode::Save, &[], None, to(true, AT + 2));
    check(&[0xBD, 0xC1], Form::Short, Opcode::Verify, &[], None, ret(true, true));
    check(&[0xBF, 0x41], Form::Short, Opcode::Piracy, &[], None, ret(false, true));
}

#[test]
fn short_print_inline_text() {
    // "hi": h=13 i=14 pad=5 -> 0x35C5, end bit -> 0xB5C5
    let ins = check(&[0xB2, 0xB5, 0xC5], Form::Short, Opcode::Print, &[], None, None);
    assert_eq!(ins.text.as_deref(), Some("hi"));
    // "ok": o=20 k=16 pad=5 -> 0x5205 | 0x8000
    let ins = check(&[0xB3, 0xD2, 0x05], Form::Short, Opcode::PrintRet, &[], None, None);
    assert_eq!(ins.text.as_deref(), Some("ok"));
}

#[test]
fn short_1op_jumps_and_tests() {
    check(&[0x8C, 0xFF, 0xF9], Form::Short, Opcode::Jump, &[Large(0xFFF9)], None, None);
    // 0xC5: on true, offset 5 -> (AT+3) + 5 - 2
    check(&[0xA0, 0x05, 0xC5], Form::Short, Opcode::Jz, &[Var(5)], None, to(true, AT + 6));
    check(&[0xA0, 0x05, 0x40], Form::Short, Opcode::Jz, &[Var(5)], None, ret(false, false));
    check(&[0xA0, 0x05, 0xC1], Form::Short, Opcode::Jz, &[Var(5)], None, ret(true, true));
}

#[test]
fn short_1op_store_and_branch() {
    check(&[0x91, 0x07, 0x10, 0xC3], Form::Short, Opcode::GetSibling, &[Small(7)], Some(0x10), to(true, AT + 5));
    // 0x80 0x0A: on true, two-byte offset 10 -> (AT+5) + 10 - 2
    check(&[0x92, 0x07, 0x03, 0x80, 0x0A], Form::Short, Opcode::GetChild, &[Small(7)], Some(3), to(true, AT + 13));
    check(&[0x93, 0x07, 0x00], Form::Short, Opcode::GetParent, &[Small(7)], Some(0), None);
}

#[test]
fn short_1op_misc() {
    check(&[0xAE, 0x10, 0x05], Form::Short, Opcode::Load, &[Var(0x10)], Some(5), None);
    check(&[0x9F, 0x0F, 0x02], Form::Short, Opcode::Not, &[Small(0x0F)], Some(2), None);
    check(&[0x8D, 0x01, 0x23], Form::Short, Opcode::PrintPaddr, &[Large(0x0123)], None, None);
    check(&[0x9B, 0x01], Form::Short, Opcode::Ret, &[Small(1)], None, None);
    check(&[0x95, 0x10], Form::Short, Opcode::Inc, &[Small(0x10)], None, None);
    check(&[0xA9, 0x03], Form::Short, Opcode::RemoveObj, &[Var(3)], None, None);
}

#[test]
fn variable_call_one_large() {
    // types 0x3F: large, then omitted
    check(&[0xE0, 0x3F, 0x12, 0x34, 0x00], Form::Variable, Opcode::Call, &[Large(0x1234)], Some(0), None);
}

#[test]
fn variable_call_mixed_args() {
    // types 0x1B = 00 01 10 11: large, small, variable, omitted
    check(
        &[0xE0, 0x1B, 0x01, 0x23, 0x05, 0x10, 0x00],
        Form::Variable,
        Opcode::Call,
        &[Large(0x0123), Small(5), Var(0x10)],
        Some(0),
        None,
    );
}

#[test]
fn variable_form_2op_three_operand_je() {
    // types 0x97 = 10 01 01 11; branch 0xC8 -> (AT+6) + 8 - 2
    check(
        &[0xC1, 0x97, 0x05, 0x06, 0x07, 0xC8],
        Form::Variable,
        Opcode::Je,
        &[Var(5), Small(6), Small(7)],
        None,
        to(true, AT + 12),
    );
}

#[test]
fn variable_form_2op_large_add() {
    check(
        &[0xD4, 0x0F, 0x12, 0x34, 0x56, 0x78, 0x03],
        Form::Variable,
        Opcode::Add,
        &[Large(0x1234), Large(0x5678)],
        Some(3),
        None,
    );
}

#[test]
fn variable_storew_and_sread() {
    // types 0x5B = 01 01 10 11
    check(
        &[0xE1, 0x5B, 0x10, 0x02, 0x03],
        Form::Variable,
        Opcode::Storew,
        &[Small(0x10), Small(2), Var(3)],
        None,
        None,
    );
    check(
        &[0xE4, 0x0F, 0x03, 0x58, 0x03, 0x96],
        Form::Variable,
        Opcode::Sread,
        &[Large(0x0358), Large(0x0396)],
        None,
        None,
    );
}

#[test]
fn variable_single_operand_ops() {
    check(&[0xE7, 0x7F, 0x64, 0x05], Form::Variable, Opcode::Random, &[Small(100)], Some(5), None);
    check(&[0xE8, 0xBF, 0x01], Form::Variable, Opcode::Push, &[Var(1)], None, None);
    check(&[0xE9, 0x7F, 0x01], Form::Variable, Opcode::Pull, &[Small(1)], None, None);
    check(&[0xE5, 0x7F, 0x41], Form::Variable, Opcode::PrintChar, &[Small(65)], None, None);
    check(&[0xE6, 0xBF, 0x10], Form::Variable, Opcode::PrintNum, &[Var(0x10)], None, None);
    check(&[0xF3, 0x3F, 0xFF, 0xFD], Form::Variable, Opcode::OutputStream, &[Large(0xFFFD)], None, None);
}

#[test]
fn variable_put_prop_four_bytes_of_types() {
    // types 0x57 = 01 01 01 11
    check(
        &[0xE3, 0x57, 0x02, 0x05, 0x07],
        Form::Variable,
        Opcode::PutProp,
        &[Small(2), Small(5), Small(7)],
        None,
        None,
    );
}

fn assert_illegal(code: &[u8]) {
    match decode_bytes(code) {
        Err(ZError::IllegalOpcode { addr, .. }) => assert_eq!(addr, AT),
        other => panic!("{code:02x?}: expected IllegalOpcode, got {other:?}"),
    }
}

#[test]
fn illegal_opcodes_are_rejected() {
    assert_illegal(&[0xBE, 0x00]); // 0OP 14 is the v5 extended prefix
    assert_illegal(&[0x00, 0x01, 0x02]); // 2OP 0 does not exist
    assert_illegal(&[0x19, 0x01, 0x02, 0x00]); // 2OP 25 is v4+
    assert_illegal(&[0x88, 0x01, 0x00]); // 1OP 8 is v4+
    assert_illegal(&[0xEC, 0x3F, 0x00, 0x00]); // VAR 12 is v4+
    assert_illegal(&[0xF6, 0x7F, 0x00]); // VAR 22 is v4+
}

#[test]
fn two_op_in_variable_form_needs_two_operands() {
    // je with one operand
    assert_illegal(&[0xC1, 0x7F, 0x05, 0xC0]);
    // add with three
    assert_illegal(&[0xD4, 0x57, 0x01, 0x02, 0x03, 0x00]);
}

#[test]
fn truncation_is_reported_at_the_instruction() {
    for code in [
        &[0x54, 0x01][..],
        &[0xE0, 0x3F, 0x12][..],
        &[0xA0, 0x05][..],
        &[0x0A, 0x05, 0x03, 0x80][..],
        &[0xB2, 0x35, 0xC5][..], // no end bit before memory ends
    ] {
        assert_eq!(decode_bytes(code), Err(ZError::TruncatedInstruction { addr: AT }), "{code:02x?}");
    }
}

#[test]
fn display_matches_listing_format() {
    let ins = decode_bytes(&[0x54, 0x01, 0x02, 0x00]).unwrap();
    assert_eq!(ins.to_string(), "00100: ADD L01,#02 -> sp");
    let ins = decode_bytes(&[0xA0, 0x05, 0xC5]).unwrap();
    assert_eq!(ins.to_string(), "00100: JZ L05 ?00106");
    let ins = decode_bytes(&[0xA0, 0x05, 0x40]).unwrap();
    assert_eq!(ins.to_string(), "00100: JZ L05 ?~rfalse");
    // jump shows its absolute destination: (AT+3) - 7 - 2
    let ins = decode_bytes(&[0x8C, 0xFF, 0xF9]).unwrap();
    assert_eq!(ins.to_string(), "00100: JUMP 000fa");
    let ins = decode_bytes(&[0xB2, 0xB5, 0xC5]).unwrap();
    assert_eq!(ins.to_string(), "00100: PRINT \"hi\"");
    let ins = decode_bytes(&[0xAE, 0x10, 0x05]).unwrap();
    assert_eq!(ins.to_string(), "00100: LOAD G00 -> L05");
}
