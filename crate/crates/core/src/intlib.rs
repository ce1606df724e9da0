//! Rational-integer number theory: extended gcd, CRT, primality,
//! factorization, and prime search in arithmetic progressions.

use crate::error::{Error, Result};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;

/// A congruence `x = residue (mod modulus)` with `0 <= residue < modulus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Congruence {
    pub residue: BigInt,
    pub modulus: BigInt,
}

impl Congruence {
    pub fn new(residue: impl Into<BigInt>, modulus: impl Into<BigInt>) -> Congruence {
        let modulus = modulus.into();
        assert!(modulus >= BigInt::one(), "modulus must be >= 1");
        let residue = residue.into().mod_floor(&modulus);
        Congruence { residue, modulus }
    }
}

/// Extended Euclid: returns `(g, u, v)` with `u*a + v*b = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let (mut old_r, mut r) = (a.clone(), b.clone());
    let (mut old_s, mut s) = (BigInt::one(), BigInt::zero());
    let (mut old_t, mut t) = (BigInt::zero(), BigInt::one());
    while !r.is_zero() {
        let q = &old_r / &r;
        let nr = &old_r - &q * &r;
        old_r = std::mem::replace(&mut r, nr);
        let ns = &old_s - &q * &s;
        old_s = std::mem::replace(&mut s, ns);
        let nt = &old_t - &q * &t;
        old_t = std::mem::replace(&mut t, nt);
    }
    if old_r.is_negative() {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    a.gcd(b)
}

/// Nearest-integer division, ties toward zero.
pub fn round_div(num: &BigInt, den: &BigInt) -> BigInt {
    let (num, den) = if den.is_negative() {
        (-num, -den)
    } else {
        (num.clone(), den.clone())
    };
    let (q, r) = num.div_rem(&den);
    if BigInt::from(2) * r.abs() > den {
        if r.is_negative() {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

/// Modular inverse of `a` mod `m`, when `gcd(a, m) = 1`.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let (g, u, _) = ext_gcd(a, m);
    if g.is_one() {
        Some(u.mod_floor(m))
    } else {
        None
    }
}

/// Solves a system of congruences with pairwise coprime moduli.
/// The empty system yields `0 (mod 1)`.
pub fn crt(system: &[Congruence]) -> Result<Congruence> {
    let mut acc = Congruence::new(0, 1);
    for c in system {
        let (g, _, _) = ext_gcd(&acc.modulus, &c.modulus);
        if !g.is_one() {
            return Err(Error::ModuliNotCoprime);
        }
        // x = acc.residue + acc.modulus * t, with t chosen mod c.modulus
        let inv = mod_inverse(&acc.modulus, &c.modulus).ok_or(Error::ModuliNotCoprime)?;
        let t = ((&c.residue - &acc.residue) * inv).mod_floor(&c.modulus);
        let modulus = &acc.modulus * &c.modulus;
        let residue = (&acc.residue + &acc.modulus * t).mod_floor(&modulus);
        acc = Congruence { residue, modulus };
    }
    Ok(acc)
}

fn miller_rabin_round(n: &BigUint, d: &BigUint, s: u32, base: &BigUint) -> bool {
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let mut x = base.modpow(d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Primality test. Deterministic for inputs below 2^64 (fixed base set);
/// 64 fixed-base rounds beyond that.
pub fn is_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2);
    if n < &two {
        return false;
    }
    let n = n.to_biguint().expect("positive");
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let p = BigUint::from(p);
        if n == p {
            return true;
        }
        if (&n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = &n - BigUint::one();
    let s = n_minus_1.trailing_zeros().unwrap_or(0) as u32;
    let d = &n_minus_1 >> s;
    // These 12 bases decide primality for all n < 2^64; extra rounds with
    // further prime bases cover larger inputs with error below 2^-128.
    let mut bases: Vec<u64> = vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n.bits() > 64 {
        bases.extend(SMALL_PRIMES.iter().skip(12).take(52).map(|&p| p as u64));
    }
    bases
        .iter()
        .all(|&b| miller_rabin_round(&n, &d, s, &BigUint::from(b)))
}

const SMALL_PRIMES: [u32; 64] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293,
    307, 311,
];

fn pollard_rho(n: &BigUint) -> BigUint {
    // Brent's cycle variant; n must be odd, composite, and not a prime power
    // small enough for trial division to have caught.
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let mut c = BigUint::one();
    loop {
        let mut x = two.clone();
        let mut y = two.clone();
        let mut d = one.clone();
        while d == one {
            x = (&x * &x + &c) % n;
            y = (&y * &y + &c) % n;
            y = (&y * &y + &c) % n;
            let diff = if x > y { &x - &y } else { &y - &x };
            if diff.is_zero() {
                break;
            }
            d = diff.gcd(n);
        }
        if d != one && &d != n {
            return d;
        }
        c += 1u32;
    }
}

fn factor_into(n: BigUint, out: &mut BTreeSet<BigInt>) {
    if n <= BigUint::one() {
        return;
    }
    let mut rest = n;
    for &p in SMALL_PRIMES.iter() {
        let p = BigUint::from(p);
        if &p * &p > rest {
            break;
        }
        while (&rest % &p).is_zero() {
            out.insert(BigInt::from(p.clone()));
            rest /= &p;
        }
    }
    if rest.is_one() {
        return;
    }
    if is_prime(&BigInt::from(rest.clone())) {
        out.insert(BigInt::from(rest));
        return;
    }
    // trial division up to 2^20 before handing off to rho
    let mut p = BigUint::from(*SMALL_PRIMES.last().unwrap());
    let limit = BigUint::from(1u32 << 20);
    while &p * &p <= rest && p <= limit {
        if (&rest % &p).is_zero() {
            out.insert(BigInt::from(p.clone()));
            while (&rest % &p).is_zero() {
                rest /= &p;
            }
            if rest.is_one() {
                return;
            }
            if is_prime(&BigInt::from(rest.clone())) {
                out.insert(BigInt::from(rest));
                return;
            }
        }
        p += 2u32;
    }
    if rest.is_one() {
        return;
    }
    if is_prime(&BigInt::from(rest.clone())) {
        out.insert(BigInt::from(rest));
        return;
    }
    let d = pollard_rho(&rest);
    let q = &rest / &d;
    factor_into(d, out);
    factor_into(q, out);
}

/// Set of distinct primes dividing `|n|`. `n = 0` is an error; `|n| = 1`
/// yields the empty set.
pub fn prime_divisors(n: &BigInt) -> Result<BTreeSet<BigInt>> {
    if n.is_zero() {
        return Err(Error::ZeroFactorization);
    }
    let mut out = BTreeSet::new();
    factor_into(n.abs().to_biguint().expect("abs"), &mut out);
    Ok(out)
}

/// Outcome of a prime search along `A*f + B`.
#[derive(Debug, Clone)]
pub struct ProgressionPrime {
    /// Index with `p = A*f + B`. Negative only when `A < 0` forces it.
    pub f: BigInt,
    pub p: BigInt,
}

/// Finds the first prime `p = A*f + B > 0` with `p` outside `forbidden` and
/// coprime to `coprime_to`, scanning at most `f_max` candidates. Requires
/// `A != 0` and `gcd(A, B) = 1`; prefers the smallest nonnegative `f`, and
/// only falls back to negative `f` when `A < 0` leaves no other choice.
pub fn dirichlet_prime_search(
    a: &BigInt,
    b: &BigInt,
    forbidden: &BTreeSet<BigInt>,
    coprime_to: &BigInt,
    f_max: u64,
) -> Result<ProgressionPrime> {
    if a.is_zero() {
        return Err(Error::PreconditionViolated("progression step is zero".into()));
    }
    let (g, _, _) = ext_gcd(a, b);
    if !g.is_one() {
        return Err(Error::GcdNotOne);
    }
    let accept = |p: &BigInt| -> bool {
        p > &BigInt::one()
            && !forbidden.contains(p)
            && gcd(p, coprime_to).is_one()
            && is_prime(p)
    };
    let mut scanned: u64 = 0;
    // Pass 1: f = 0, 1, 2, ... while the value stays positive.
    let mut f = BigInt::zero();
    loop {
        let p = a * &f + b;
        if p.is_negative() || p.is_zero() {
            if a.is_positive() {
                f += 1;
                continue; // still climbing toward positive values
            }
            break; // negative step: positive values exhausted
        }
        scanned += 1;
        if scanned > f_max {
            return Err(Error::BudgetExhausted(format!(
                "no prime in progression {a}*f+{b} after {f_max} candidates"
            )));
        }
        if accept(&p) {
            return Ok(ProgressionPrime { f, p });
        }
        f += 1;
    }
    // Negative step: walk f = -1, -2, ... so p climbs through the positives.
    let mut f = -BigInt::one();
    loop {
        let p = a * &f + b;
        if p.is_positive() {
            scanned += 1;
            if scanned > f_max {
                return Err(Error::BudgetExhausted(format!(
                    "no prime in progression {a}*f+{b} after {f_max} candidates"
                )));
            }
            if accept(&p) {
                return Ok(ProgressionPrime { f: f.clone(), p });
            }
        }
        f -= 1;
        if f.to_i64() == Some(i64::MIN) {
            return Err(Error::BudgetExhausted("progression scan overflow".into()));
        }
    }
}
