//! Cross-checks between the reference models and the emulator.

mod common;

use common::*;
use num_rational::BigRational;
use num_traits::Signed;
use z1_core::microcode::{run_add_sub, run_bin2dec, run_dec2bin, run_div, run_mul, MicrocodeError, Opcode, PanelInput, ZeroPolicy};
use z1_core::numerics::Word24;

fn w(s: bool, e: i32, f: u16) -> Word24 {
    Word24::pack(s, e, f).unwrap()
}

fn observe<T>(r: Result<T, MicrocodeError>, word: impl Fn(&T) -> Word24) -> Expect {
    match r {
        Ok(v) => Expect::Word(word(&v)),
        Err(MicrocodeError::ZeroUnsupported) => Expect::Zero,
        Err(MicrocodeError::ExponentOverflow(_)) => Expect::Overflow,
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn reference_models_on_known_values() {
    assert_eq!(add_sub(w(false, 0, 0), w(false, 0, 0), false), Expect::Word(w(false, 1, 0)));
    assert_eq!(add_sub(w(false, 3, 0x8000), w(false, 3, 0), true), Expect::Word(w(false, 2, 0)));
    assert_eq!(add_sub(w(false, 3, 7), w(false, 3, 7), true), Expect::Zero);
    assert_eq!(mul_bitwise(w(false, 0, 0x8000), w(false, 0, 0x8000)), Expect::Word(w(false, 1, 0x2000)));
    assert_eq!(div_restoring(w(false, 1, 0x8000), w(false, 0, 0)), Expect::Word(w(false, 1, 0x8000)));
    assert_eq!(div_restoring(w(false, 0, 0), w(false, 0, 0x8000)), Expect::Word(w(false, -1, 0x5554)));
    assert_eq!(decimal(&int(8743)), ([8, 7, 4, 3], 4));
    assert_eq!(decimal(&int(1)), ([1, 0, 0, 0], 1));
    assert_eq!(decimal(&(int(1) / int(4))), ([2, 5, 0, 0], 0));
    assert_eq!(exact(w(false, 13, 0b0001_0001_0011_1000)), int(8743));
}

/// Error of the bit-faithful product against the exact one stays within
/// 2^(e-16) + 2^(e-19): 2^-16 from the final repack plus under 2^-19 from
/// the 17 truncating half-shifts.
#[test]
fn multiplication_bound_holds_for_reference() {
    let mut r = rng(0x5eed_0001);
    let mut worst = 0f64;
    for _ in 0..20_000 {
        let (f, g) = (word(&mut r, -30..=30), word(&mut r, -30..=30));
        let Expect::Word(p) = mul_bitwise(f, g) else { panic!() };
        let err = (exact(p) - exact(f) * exact(g)).abs();
        let bound = pow2(p.exponent() - 16) + pow2(p.exponent() - 19);
        assert!(err <= bound, "{f} * {g}");
        worst = worst.max(to_f64(&(err / pow2(p.exponent() - 16))));
        assert!(exact(p).abs() <= (exact(f) * exact(g)).abs());
    }
    assert!(worst > 0.9, "bound is not slack: worst {worst}");
}

/// Quotients lose at most one unit of the 17-bit quotient, which becomes
/// 2^(e-15) when the quotient needed a normalizing shift.
#[test]
fn division_bound_holds_for_reference() {
    let mut r = rng(0x5eed_0002);
    for _ in 0..20_000 {
        let (f, g) = (word(&mut r, -30..=30), word(&mut r, -30..=30));
        let Expect::Word(q) = div_restoring(f, g) else { panic!() };
        let err = (exact(q) - exact(f) / exact(g)).abs();
        assert!(err < pow2(q.exponent() - 15), "{f} / {g}");
    }
}

#[test]
fn add_sub_matches_reference() {
    let mut r = rng(0x5eed_0003);
    for i in 0..10_000 {
        let (f, g) = (word(&mut r, -64..=63), word(&mut r, -64..=63));
        let op = if i % 2 == 0 { Opcode::Add } else { Opcode::Sub };
        let got = observe(run_add_sub(f, g, op, ZeroPolicy::Strict), |v| v.word);
        assert_eq!(got, add_sub(f, g, op == Opcode::Sub), "{f} {op} {g}");
    }
}

#[test]
fn addition_commutes() {
    let mut r = rng(0x5eed_0004);
    for _ in 0..5_000 {
        let (f, g) = (word(&mut r, -20..=20), word(&mut r, -20..=20));
        let a = observe(run_add_sub(f, g, Opcode::Add, ZeroPolicy::Strict), |v| v.word);
        let b = observe(run_add_sub(g, f, Opcode::Add, ZeroPolicy::Strict), |v| v.word);
        assert_eq!(a, b, "{f} + {g}");
    }
}

#[test]
fn mul_div_match_references() {
    let mut r = rng(0x5eed_0005);
    for _ in 0..10_000 {
        let (f, g) = (word(&mut r, -64..=63), word(&mut r, -64..=63));
        assert_eq!(observe(run_mul(f, g, ZeroPolicy::Strict), |v| v.word), mul_bitwise(f, g), "{f} * {g}");
        assert_eq!(observe(run_div(f, g, ZeroPolicy::Strict), |v| v.word), div_restoring(f, g), "{f} / {g}");
    }
}

#[test]
fn self_division_is_one() {
    let mut r = rng(0x5eed_0006);
    for _ in 0..2_000 {
        let x = word(&mut r, -64..=63);
        assert_eq!(run_div(x, x, ZeroPolicy::Strict).unwrap().word, w(false, 0, 0));
    }
}

#[test]
fn decimal_conversion_of_small_integers() {
    for n in 1..=200u32 {
        let digits = [(n / 1000) as u8, (n / 100 % 10) as u8, (n / 10 % 10) as u8, (n % 10) as u8];
        let r = run_dec2bin(PanelInput { digits, lever: 0, negative: false }, ZeroPolicy::Strict).unwrap();
        assert_eq!(exact(r.word), int(n as i64));
        let d = run_bin2dec(r.word, ZeroPolicy::Strict).unwrap();
        assert_eq!((d.digits, d.arrow), decimal(&int(n as i64)));
    }
}

#[test]
fn lever_scales_by_powers_of_ten() {
    for lever in 0..=4 {
        let r = run_dec2bin(PanelInput { digits: [0, 0, 1, 7], lever, negative: false }, ZeroPolicy::Strict).unwrap();
        let want = int(17) * num_traits::pow(int(10), lever as usize);
        assert_eq!(to_word(&want), Expect::Word(r.word), "lever {lever}");
    }
    for lever in -3..0 {
        let r = run_dec2bin(PanelInput { digits: [1, 2, 5, 0], lever, negative: false }, ZeroPolicy::Strict).unwrap();
        let want = int(1250) / num_traits::pow(int(10), (-lever) as usize);
        let rel: BigRational = ((exact(r.word) - &want) / want).abs();
        assert!(to_f64(&rel) < 1e-4, "lever {lever}: {}", r.word);
    }
}

#[test]
fn display_of_fractions_and_large_values() {
    for (x, want) in [
        (w(false, -4, 0x999a), ([1, 0, 0, 0], 0)),
        (w(false, 20, 0), ([1, 0, 4, 8], 7)),
        (w(true, -10, 0x8000), ([1, 4, 6, 4], -2)),
    ] {
        let d = run_bin2dec(x, ZeroPolicy::Strict).unwrap();
        assert_eq!((d.digits, d.arrow), want, "{x}");
        assert_eq!(decimal(&exact(x)).1, want.1);
    }
}
