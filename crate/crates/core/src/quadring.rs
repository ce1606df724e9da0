//! Exact arithmetic in the ring of integers of a real quadratic field
//! `Q(sqrt(alpha))`, covering both integral bases: `Z[sqrt(alpha)]` when
//! `alpha = 2, 3 (mod 4)` and `Z[(1 + sqrt(alpha))/2]` when `alpha = 1 (mod 4)`.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// Which integral basis the ring uses, determined by `alpha mod 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `alpha = 1 (mod 4)`: generator `(1 + sqrt(alpha))/2`.
    OneMod4,
    /// `alpha = 2, 3 (mod 4)`: generator `sqrt(alpha)`.
    TwoThreeMod4,
}

/// A real quadratic integer ring, identified by its square-free radicand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingSpec {
    alpha: u64,
    branch: Branch,
}

fn square_free_violation(alpha: u64) -> Option<u64> {
    let mut n = alpha;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return Some(p);
            }
        }
        p += 1;
    }
    None
}

impl RingSpec {
    /// Builds the ring for a square-free `alpha >= 2`.
    pub fn new(alpha: i64) -> Result<RingSpec> {
        if alpha < 2 {
            return Err(Error::AlphaTooSmall);
        }
        let alpha = alpha as u64;
        if alpha % 4 == 0 {
            return Err(Error::AlphaDivisibleByFour);
        }
        if let Some(p) = square_free_violation(alpha) {
            return Err(Error::AlphaNotSquareFree(p));
        }
        let branch = if alpha % 4 == 1 {
            Branch::OneMod4
        } else {
            Branch::TwoThreeMod4
        };
        Ok(RingSpec { alpha, branch })
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn discriminant(&self) -> u64 {
        match self.branch {
            Branch::OneMod4 => self.alpha,
            Branch::TwoThreeMod4 => 4 * self.alpha,
        }
    }

    pub fn omega_description(&self) -> String {
        match self.branch {
            Branch::OneMod4 => format!("(1+sqrt({}))/2", self.alpha),
            Branch::TwoThreeMod4 => format!("sqrt({})", self.alpha),
        }
    }

    /// The ring generator: `sqrt(alpha)` or `(1 + sqrt(alpha))/2`.
    pub fn omega(&self) -> QuadInt {
        match self.branch {
            Branch::OneMod4 => QuadInt::from_half_coords(*self, BigInt::one(), BigInt::one()),
            Branch::TwoThreeMod4 => {
                QuadInt::from_half_coords(*self, BigInt::zero(), BigInt::from(2))
            }
        }
    }

    pub fn zero(&self) -> QuadInt {
        QuadInt::from_half_coords(*self, BigInt::zero(), BigInt::zero())
    }

    pub fn one(&self) -> QuadInt {
        self.int(1)
    }

    pub fn int(&self, n: i64) -> QuadInt {
        self.from_int(BigInt::from(n))
    }

    pub fn from_int(&self, n: BigInt) -> QuadInt {
        QuadInt::from_half_coords(*self, n * 2, BigInt::zero())
    }

    /// Element from coefficients over the integral basis `(1, omega)`.
    pub fn from_coords(&self, c1: impl Into<BigInt>, c2: impl Into<BigInt>) -> QuadInt {
        let c1 = c1.into();
        let c2 = c2.into();
        match self.branch {
            Branch::TwoThreeMod4 => QuadInt::from_half_coords(*self, c1 * 2, c2 * 2),
            Branch::OneMod4 => {
                let u = c1 * 2 + &c2;
                QuadInt::from_half_coords(*self, u, c2)
            }
        }
    }

    /// The smallest unit above 1, found by scanning `u^2 - alpha v^2 = +-4`
    /// in half-coordinates with ascending `v`. Cached per radicand.
    pub fn fundamental_unit(&self) -> QuadInt {
        static CACHE: OnceLock<Mutex<HashMap<u64, (BigInt, BigInt)>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some((u, v)) = cache.lock().unwrap().get(&self.alpha) {
            return QuadInt::from_half_coords(*self, u.clone(), v.clone());
        }
        let alpha = BigInt::from(self.alpha);
        let four = BigInt::from(4);
        let mut v = BigInt::one();
        let found = loop {
            let av2 = &alpha * &v * &v;
            let mut hit = None;
            // minus sign first: for the same v it gives the smaller unit
            for cand in [&av2 - &four, &av2 + &four] {
                if cand.is_negative() {
                    continue;
                }
                let u = cand.sqrt();
                if &u * &u == cand && self.coords_valid(&u, &v) {
                    hit = Some(u);
                    break;
                }
            }
            if let Some(u) = hit {
                break (u, v);
            }
            v += 1;
            assert!(
                v < BigInt::from(20_000_000u64),
                "fundamental unit search exceeded scan bound for alpha = {}",
                self.alpha
            );
        };
        cache
            .lock()
            .unwrap()
            .insert(self.alpha, (found.0.clone(), found.1.clone()));
        QuadInt::from_half_coords(*self, found.0, found.1)
    }

    fn coords_valid(&self, u: &BigInt, v: &BigInt) -> bool {
        match self.branch {
            Branch::OneMod4 => (u - v).is_even(),
            Branch::TwoThreeMod4 => u.is_even() && v.is_even(),
        }
    }

    /// Parses `a`, `b*w`, `a+b*w`, `a-b*w` (with `w` the ring generator),
    /// or the coordinate pair form `(c1,c2)`.
    pub fn parse_element(&self, text: &str) -> Result<QuadInt> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Parse(format!("cannot parse element {text:?}"));
        if s.is_empty() {
            return Err(bad());
        }
        if let Some(inner) = s.strip_prefix('(') {
            let inner = inner.strip_suffix(')').ok_or_else(bad)?;
            let (a, b) = inner.split_once(',').ok_or_else(bad)?;
            let c1: BigInt = a.parse().map_err(|_| bad())?;
            let c2: BigInt = b.parse().map_err(|_| bad())?;
            return Ok(self.from_coords(c1, c2));
        }
        let parse_w_coeff = |t: &str| -> Result<BigInt> {
            // "b*w" | "w" | "-w" | "+w"
            let head = t.strip_suffix('w').ok_or_else(bad)?;
            let head = head.strip_suffix('*').unwrap_or(head);
            match head {
                "" | "+" => Ok(BigInt::one()),
                "-" => Ok(-BigInt::one()),
                _ => head.parse().map_err(|_| bad()),
            }
        };
        if !s.contains('w') {
            let a: BigInt = s.parse().map_err(|_| bad())?;
            return Ok(self.from_coords(a, 0));
        }
        // split "a+b*w" / "a-b*w" at the sign that separates the two terms
        let mut split = None;
        for (i, ch) in s.char_indices().skip(1) {
            if (ch == '+' || ch == '-') && !s[..i].contains('w') && !s[..i].ends_with(['+', '-'])
            {
                split = Some(i);
                break;
            }
        }
        match split {
            None => {
                let b = parse_w_coeff(&s)?;
                Ok(self.from_coords(0, b))
            }
            Some(i) => {
                let a: BigInt = s[..i].parse().map_err(|_| bad())?;
                let sign = if s.as_bytes()[i] == b'-' { -1 } else { 1 };
                let b = parse_w_coeff(&s[i + 1..])?;
                Ok(self.from_coords(a, b * sign))
            }
        }
    }
}

/// An element of the ring stored as `(u + v*sqrt(alpha))/2`. `u` and `v`
/// always share parity; for the `Z[sqrt(alpha)]` branch both are even.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadInt {
    ring: RingSpec,
    u: BigInt,
    v: BigInt,
}

impl QuadInt {
    fn from_half_coords(ring: RingSpec, u: BigInt, v: BigInt) -> QuadInt {
        debug_assert!(ring.coords_valid(&u, &v), "half-coordinate parity broken");
        QuadInt { ring, u, v }
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn half_coords(&self) -> (&BigInt, &BigInt) {
        (&self.u, &self.v)
    }

    /// Coefficients over the integral basis `(1, omega)`.
    pub fn to_coords(&self) -> (BigInt, BigInt) {
        match self.ring.branch {
            Branch::TwoThreeMod4 => (&self.u / 2, &self.v / 2),
            Branch::OneMod4 => ((&self.u - &self.v) / 2, self.v.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.v.is_zero() && self.u == BigInt::from(2)
    }

    /// True when the element lies in `Z`.
    pub fn is_rational(&self) -> bool {
        self.v.is_zero()
    }

    /// The rational integer value, when `is_rational` holds.
    pub fn rational_part(&self) -> Option<BigInt> {
        if self.is_rational() {
            Some(&self.u / 2)
        } else {
            None
        }
    }

    fn check_ring(&self, other: &QuadInt) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring.alpha, other.ring.alpha));
        }
        Ok(())
    }

    pub fn add(&self, other: &QuadInt) -> Result<QuadInt> {
        self.check_ring(other)?;
        Ok(QuadInt::from_half_coords(
            self.ring,
            &self.u + &other.u,
            &self.v + &other.v,
        ))
    }

    pub fn sub(&self, other: &QuadInt) -> Result<QuadInt> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> QuadInt {
        QuadInt::from_half_coords(self.ring, -&self.u, -&self.v)
    }

    pub fn mul(&self, other: &QuadInt) -> Result<QuadInt> {
        self.check_ring(other)?;
        let alpha = BigInt::from(self.ring.alpha);
        let u = (&self.u * &other.u + &self.v * &other.v * &alpha) / 2;
        let v = (&self.u * &other.v + &self.v * &other.u) / 2;
        Ok(QuadInt::from_half_coords(self.ring, u, v))
    }

    pub fn mul_int(&self, k: &BigInt) -> QuadInt {
        QuadInt::from_half_coords(self.ring, &self.u * k, &self.v * k)
    }

    /// Galois conjugate: `sqrt(alpha) -> -sqrt(alpha)`.
    pub fn conj(&self) -> QuadInt {
        QuadInt::from_half_coords(self.ring, self.u.clone(), -&self.v)
    }

    pub fn trace(&self) -> BigInt {
        self.u.clone()
    }

    /// Field norm `x * conj(x)`, always a rational integer.
    pub fn norm(&self) -> BigInt {
        (&self.u * &self.u - &self.v * &self.v * BigInt::from(self.ring.alpha)) / 4
    }

    pub fn is_unit(&self) -> bool {
        self.norm().abs().is_one()
    }

    /// Exact division; fails when `self` is not a multiple of `d`.
    pub fn exact_div(&self, d: &QuadInt) -> Result<QuadInt> {
        self.check_ring(d)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = d.norm();
        let num = self.mul(&d.conj())?;
        let (qu, ru) = num.u.div_rem(&n);
        let (qv, rv) = num.v.div_rem(&n);
        if !ru.is_zero() || !rv.is_zero() || !self.ring.coords_valid(&qu, &qv) {
            return Err(Error::NotDivisible(self.to_string(), d.to_string()));
        }
        let q = QuadInt::from_half_coords(self.ring, qu, qv);
        debug_assert_eq!(q.mul(d).unwrap(), *self);
        Ok(q)
    }

    pub fn divides(&self, other: &QuadInt) -> bool {
        !self.is_zero() && other.exact_div(self).is_ok()
    }

    pub fn pow(&self, mut k: u32) -> QuadInt {
        let mut acc = self.ring.one();
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).expect("same ring");
            }
            base = base.mul(&base).expect("same ring");
            k >>= 1;
        }
        acc
    }

    /// Renders the coordinate pair form `(c1,c2)`.
    pub fn pair_string(&self) -> String {
        let (c1, c2) = self.to_coords();
        format!("({c1},{c2})")
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (c1, c2) = self.to_coords();
        if c2.is_zero() {
            return write!(f, "{c1}");
        }
        let w_term = if c2.is_one() {
            "w".to_string()
        } else if c2 == -BigInt::one() {
            "-w".to_string()
        } else {
            format!("{c2}*w")
        };
        if c1.is_zero() {
            write!(f, "{w_term}")
        } else if c2.is_positive() {
            write!(f, "{c1}+{w_term}")
        } else {
            write!(f, "{c1}{w_term}")
        }
    }
}
