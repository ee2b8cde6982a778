//! Reference models built from exact rationals and plain integer loops.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use z1_core::numerics::Word24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Word(Word24),
    Zero,
    Overflow,
}

pub fn pow2(e: i32) -> BigRational {
    let two = BigRational::from_integer(BigInt::from(2));
    if e >= 0 {
        num_traits::pow(two, e as usize)
    } else {
        BigRational::one() / num_traits::pow(two, (-e) as usize)
    }
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Value of a stored word, hidden bit restored.
pub fn exact(w: Word24) -> BigRational {
    let bits = w.to_bits();
    let sign = bits >> 23 & 1 == 1;
    let e = ((bits >> 16 & 0x7f) as i32 ^ 0x40) - 0x40;
    let m = int(65536 + (bits & 0xffff) as i64) / int(65536);
    let v = m * pow2(e);
    if sign {
        -v
    } else {
        v
    }
}

/// floor(log2 |x|) for nonzero x.
pub fn ilog2(x: &BigRational) -> i32 {
    let a = x.abs();
    let mut e = a.numer().bits() as i32 - a.denom().bits() as i32;
    while a < pow2(e) {
        e -= 1;
    }
    while a >= pow2(e + 1) {
        e += 1;
    }
    e
}

/// Truncates |x| to 17 significant bits and packs it.
pub fn to_word(x: &BigRational) -> Expect {
    if x.is_zero() {
        return Expect::Zero;
    }
    let e = ilog2(x);
    if !(-64..=63).contains(&e) {
        return Expect::Overflow;
    }
    let m = x.abs() / pow2(e);
    let frac = ((m - BigRational::one()) * int(65536)).floor().to_integer().to_u32().unwrap();
    Expect::Word(Word24::pack(x.is_negative(), e, frac as u16).unwrap())
}

/// Add/subtract with the smaller operand's mantissa cut at 2^-20 after
/// alignment, everything else exact.
pub fn add_sub(f: Word24, g: Word24, sub: bool) -> Expect {
    let g_val = if sub { -exact(g) } else { exact(g) };
    let f_val = exact(f);
    let d = f.exponent() - g.exponent();
    if !(-63..=63).contains(&d) {
        return Expect::Overflow;
    }
    let (big, small, e_big) = if d >= 0 { (f_val, g_val, f.exponent()) } else { (g_val, f_val, g.exponent()) };
    let unit = pow2(e_big - 20);
    let small_cut = (small.abs() / &unit).floor() * &unit;
    let small_cut = if small.is_negative() { -small_cut } else { small_cut };
    to_word(&(big + small_cut))
}

fn mantissa17(w: Word24) -> u64 {
    65536 + w.fraction() as u64
}

/// Shift-and-add over the 17 multiplier bits, lowest first, keeping 20
/// fraction bits.
pub fn mul_bitwise(f: Word24, g: Word24) -> Expect {
    let mg = mantissa17(g) << 4;
    let mf = mantissa17(f);
    let mut acc = 0u64;
    for j in 0..17 {
        acc >>= 1;
        if mf >> j & 1 == 1 {
            acc += mg;
        }
    }
    let mut e = f.exponent() + g.exponent();
    if acc >= 2 << 20 {
        acc >>= 1;
        e += 1;
    }
    if !(-64..=63).contains(&e) {
        return Expect::Overflow;
    }
    Expect::Word(Word24::pack(f.sign() ^ g.sign(), e, (acc >> 4 & 0xffff) as u16).unwrap())
}

/// Restoring long division producing 17 quotient bits (positions 0..=-16).
pub fn div_restoring(f: Word24, g: Word24) -> Expect {
    let d = mantissa17(g);
    let mut r = mantissa17(f);
    let mut q = 0u64;
    for _ in 0..17 {
        q <<= 1;
        if r >= d {
            r -= d;
            q |= 1;
        }
        r <<= 1;
    }
    let mut e = f.exponent() - g.exponent();
    if q >> 16 == 0 {
        q <<= 1;
        e -= 1;
    }
    if !(-64..=63).contains(&e) {
        return Expect::Overflow;
    }
    Expect::Word(Word24::pack(f.sign() ^ g.sign(), e, (q & 0xffff) as u16).unwrap())
}

/// Four leading decimal digits (truncated) and arrow with
/// |x| = 0.d3d2d1d0... x 10^arrow.
pub fn decimal(x: &BigRational) -> ([u8; 4], i32) {
    let a = x.abs();
    let ten = int(10);
    let mut arrow = 0i32;
    let pow10 = |k: i32| {
        if k >= 0 {
            num_traits::pow(ten.clone(), k as usize)
        } else {
            BigRational::one() / num_traits::pow(ten.clone(), (-k) as usize)
        }
    };
    while a >= pow10(arrow) {
        arrow += 1;
    }
    while a < pow10(arrow - 1) {
        arrow -= 1;
    }
    let n = (a * pow10(4 - arrow)).floor().to_integer().to_u32().unwrap();
    let digits = [(n / 1000) as u8, (n / 100 % 10) as u8, (n / 10 % 10) as u8, (n % 10) as u8];
    (digits, arrow)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn word(r: &mut StdRng, exp: std::ops::RangeInclusive<i32>) -> Word24 {
    Word24::pack(r.gen(), r.gen_range(exp), r.gen()).unwrap()
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}
