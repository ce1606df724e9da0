//! 2x2 matrices over the ring, the four conjugation generators, and
//! conjugation sequences.

use crate::error::{Error, Result};
use crate::quadring::{QuadInt, RingSpec};
use std::fmt;

/// Row-major 2x2 matrix with all entries in one ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat2 {
    ring: RingSpec,
    /// entries `[p, q, r, s]` for `(p q; r s)`
    e: [QuadInt; 4],
}

impl Mat2 {
    pub fn new(p: QuadInt, q: QuadInt, r: QuadInt, s: QuadInt) -> Result<Mat2> {
        let ring = p.ring();
        for x in [&q, &r, &s] {
            if x.ring() != ring {
                return Err(Error::RingMismatch(ring.alpha(), x.ring().alpha()));
            }
        }
        Ok(Mat2 { ring, e: [p, q, r, s] })
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn entries(&self) -> &[QuadInt; 4] {
        &self.e
    }

    pub fn identity(ring: RingSpec) -> Mat2 {
        Mat2 {
            ring,
            e: [ring.one(), ring.zero(), ring.zero(), ring.one()],
        }
    }

    pub fn zero(ring: RingSpec) -> Mat2 {
        Mat2 {
            ring,
            e: [ring.zero(), ring.zero(), ring.zero(), ring.zero()],
        }
    }

    /// The singular row matrix `(x y; 0 0)`.
    pub fn row(x: QuadInt, y: QuadInt) -> Result<Mat2> {
        let ring = x.ring();
        let z0 = ring.zero();
        Mat2::new(x, y, z0.clone(), z0)
    }

    pub fn from_ints(ring: RingSpec, vals: [i64; 4]) -> Mat2 {
        Mat2 {
            ring,
            e: vals.map(|v| ring.int(v)),
        }
    }

    pub fn mul(&self, other: &Mat2) -> Result<Mat2> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring.alpha(), other.ring.alpha()));
        }
        let [a, b, c, d] = &self.e;
        let [p, q, r, s] = &other.e;
        Ok(Mat2 {
            ring: self.ring,
            e: [
                a.mul(p)?.add(&b.mul(r)?)?,
                a.mul(q)?.add(&b.mul(s)?)?,
                c.mul(p)?.add(&d.mul(r)?)?,
                c.mul(q)?.add(&d.mul(s)?)?,
            ],
        })
    }

    pub fn det(&self) -> QuadInt {
        let [a, b, c, d] = &self.e;
        a.mul(d).unwrap().sub(&b.mul(c).unwrap()).unwrap()
    }

    pub fn is_identity(&self) -> bool {
        *self == Mat2::identity(self.ring)
    }

    pub fn in_sl2(&self) -> bool {
        self.det().is_one()
    }

    pub fn is_idempotent(&self) -> bool {
        match self.mul(self) {
            Ok(sq) => sq == *self,
            Err(_) => false,
        }
    }

    /// Inverse of an SL2 matrix via the adjugate.
    pub fn inverse_sl2(&self) -> Result<Mat2> {
        if !self.in_sl2() {
            return Err(Error::NotInSl2);
        }
        let [a, b, c, d] = &self.e;
        Ok(Mat2 {
            ring: self.ring,
            e: [d.clone(), b.neg(), c.neg(), a.clone()],
        })
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.e;
        write!(f, "({a}, {b}; {c}, {d})")
    }
}

/// Which of the four conjugation generators a symbolic conjugator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjKind {
    /// `(a 1; -1 0)`
    A11,
    /// `(1 a; 0 1)`
    A12,
    /// `(1 0; a 1)`
    A21,
    /// `(0 1; -1 a)`
    A22,
}

impl ConjKind {
    pub fn label(&self) -> &'static str {
        match self {
            ConjKind::A11 => "a11",
            ConjKind::A12 => "a12",
            ConjKind::A21 => "a21",
            ConjKind::A22 => "a22",
        }
    }

    pub fn from_label(s: &str) -> Option<ConjKind> {
        match s {
            "a11" => Some(ConjKind::A11),
            "a12" => Some(ConjKind::A12),
            "a21" => Some(ConjKind::A21),
            "a22" => Some(ConjKind::A22),
            _ => None,
        }
    }
}

/// A conjugation generator kept in symbolic form so certificates stay
/// readable and replayable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conjugator {
    pub kind: ConjKind,
    pub a: QuadInt,
}

impl Conjugator {
    pub fn new(kind: ConjKind, a: QuadInt) -> Conjugator {
        Conjugator { kind, a }
    }

    pub fn matrix(&self) -> Mat2 {
        let ring = self.a.ring();
        let one = ring.one();
        let zero = ring.zero();
        let a = self.a.clone();
        let m = match self.kind {
            ConjKind::A11 => Mat2::new(a, one.clone(), one.neg(), zero),
            ConjKind::A12 => Mat2::new(one.clone(), a, zero, one.clone()),
            ConjKind::A21 => Mat2::new(one.clone(), zero, a, one.clone()),
            ConjKind::A22 => Mat2::new(zero, one.clone(), one.neg(), a),
        };
        m.expect("one ring")
    }
}

impl fmt::Display for Conjugator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.label(), self.a.pair_string())
    }
}

/// An SL2 element in a conjugation sequence: a symbolic generator or a raw
/// matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sl2Elem {
    Gen(Conjugator),
    Raw(Mat2),
}

impl Sl2Elem {
    pub fn gen(kind: ConjKind, a: QuadInt) -> Sl2Elem {
        Sl2Elem::Gen(Conjugator::new(kind, a))
    }

    pub fn matrix(&self) -> Mat2 {
        match self {
            Sl2Elem::Gen(c) => c.matrix(),
            Sl2Elem::Raw(m) => m.clone(),
        }
    }
}

impl fmt::Display for Sl2Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sl2Elem::Gen(c) => write!(f, "{c}"),
            Sl2Elem::Raw(m) => write!(f, "{m}"),
        }
    }
}

/// `C^-1 * M * C` for `C` in SL2.
pub fn conjugate(m: &Mat2, c: &Mat2) -> Result<Mat2> {
    let inv = c.inverse_sl2()?;
    inv.mul(m)?.mul(c)
}

pub fn conjugate_by(m: &Mat2, c: &Conjugator) -> Result<Mat2> {
    conjugate(m, &c.matrix())
}

/// Applies a conjugation sequence left to right: `M^(C1 C2 ... Cn)`.
pub fn conjugate_seq(m: &Mat2, cs: &[Sl2Elem]) -> Result<Mat2> {
    let mut acc = m.clone();
    for c in cs {
        acc = conjugate(&acc, &c.matrix())?;
    }
    Ok(acc)
}

/// Inverts a conjugation sequence: conjugating by the result undoes
/// conjugation by `cs`.
pub fn reversed_inverses(cs: &[Sl2Elem]) -> Result<Vec<Sl2Elem>> {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs.iter().rev() {
        out.push(Sl2Elem::Raw(c.matrix().inverse_sl2()?));
    }
    Ok(out)
}

/// Swap move on a row matrix: conjugating `(x y; 0 0)` by the `a22`
/// generator at 0 equals `(0 0; 1 0) * (-y x; 0 0)`. Both sides are
/// recomputed and compared on every call.
pub fn swap_identity(x: &QuadInt, y: &QuadInt) -> Result<(Mat2, Mat2)> {
    let ring = x.ring();
    let row_in = Mat2::row(x.clone(), y.clone())?;
    let swap = Conjugator::new(ConjKind::A22, ring.zero());
    let lhs = conjugate_by(&row_in, &swap)?;
    let prefactor = Mat2::from_ints(ring, [0, 0, 1, 0]);
    let row_out = Mat2::row(y.neg(), x.clone())?;
    let rhs = prefactor.mul(&row_out)?;
    if lhs != rhs {
        return Err(Error::PipelineInvariant("swap identity".into()));
    }
    Ok((prefactor, row_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(alpha: i64) -> RingSpec {
        RingSpec::new(alpha).unwrap()
    }

    fn rand_el(r: RingSpec, rng: &mut ChaCha8Rng, h: i64) -> QuadInt {
        r.from_coords(rng.random_range(-h..=h), rng.random_range(-h..=h))
    }

    fn rand_seq(r: RingSpec, rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Sl2Elem> {
        let len = rng.random_range(0..=max_len);
        (0..len)
            .map(|_| {
                let kind = match rng.random_range(0..4) {
                    0 => ConjKind::A11,
                    1 => ConjKind::A12,
                    2 => ConjKind::A21,
                    _ => ConjKind::A22,
                };
                Sl2Elem::gen(kind, rand_el(r, rng, 5))
            })
            .collect()
    }

    #[test]
    fn generator_determinants() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let r = ring(2);
        for _ in 0..200 {
            let a = rand_el(r, &mut rng, 30);
            for kind in [ConjKind::A11, ConjKind::A12, ConjKind::A21, ConjKind::A22] {
                assert!(Conjugator::new(kind, a.clone()).matrix().in_sl2());
            }
        }
        let row = Mat2::row(rand_el(r, &mut rng, 10), rand_el(r, &mut rng, 10)).unwrap();
        assert!(row.det().is_zero());
        let m = Mat2::from_ints(r, [1, 2, 3, 4]);
        assert_eq!(Mat2::identity(r).mul(&m).unwrap(), m);
    }

    #[test]
    fn idempotent_checks() {
        let r2 = ring(2);
        assert!(Mat2::from_ints(r2, [1, -1, 0, 0]).is_idempotent());
        let z = r2.from_coords(5, 1);
        let one_minus_z = r2.one().sub(&z).unwrap();
        let m = Mat2::new(r2.one(), r2.zero(), one_minus_z, r2.zero()).unwrap();
        assert!(m.is_idempotent());
        assert!(!Mat2::from_ints(r2, [1, 1, 0, 1]).is_idempotent());
        assert!(Mat2::zero(r2).is_idempotent());
        assert!(Mat2::identity(r2).is_idempotent());
    }

    #[test]
    fn conjugation_examples() {
        let r2 = ring(2);
        // empty sequence
        let m = Mat2::from_ints(r2, [1, 2, 3, 4]);
        assert_eq!(conjugate_seq(&m, &[]).unwrap(), m);
        // (1 0; 1 0) conjugated by the a11 generator at 1
        let m = Mat2::from_ints(r2, [1, 0, 1, 0]);
        let c = Conjugator::new(ConjKind::A11, r2.one());
        assert_eq!(conjugate_by(&m, &c).unwrap(), Mat2::from_ints(r2, [-1, -1, 2, 2]));
        // row (1 0) through the swap generator
        let row = Mat2::from_ints(r2, [1, 0, 0, 0]);
        let c = Conjugator::new(ConjKind::A22, r2.zero());
        assert_eq!(conjugate_by(&row, &c).unwrap(), Mat2::from_ints(r2, [0, 0, 0, 1]));
    }

    #[test]
    fn conjugation_closed_form() {
        // (a 0; b 0) conjugated by a11 at u equals (-bu -b; u(a+bu) a+bu),
        // compared against the direct triple product
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for alpha in [2i64, 5] {
            let r = ring(alpha);
            for _ in 0..500 {
                let a = rand_el(r, &mut rng, 20);
                let b = rand_el(r, &mut rng, 20);
                let u = rand_el(r, &mut rng, 20);
                let m = Mat2::new(a.clone(), r.zero(), b.clone(), r.zero()).unwrap();
                let got = conjugate_by(&m, &Conjugator::new(ConjKind::A11, u.clone())).unwrap();
                let abu = a.add(&b.mul(&u).unwrap()).unwrap();
                let want = Mat2::new(
                    b.mul(&u).unwrap().neg(),
                    b.neg(),
                    u.mul(&abu).unwrap(),
                    abu,
                )
                .unwrap();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn conjugation_special_cases() {
        // (a 0; 1 0)^((-a) a11) = (a -1; 0 0) and (a 0; -1 0)^((a) a11) = (a 1; 0 0)
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for alpha in [2i64, 13] {
            let r = ring(alpha);
            for _ in 0..500 {
                let a = rand_el(r, &mut rng, 25);
                let m = Mat2::new(a.clone(), r.zero(), r.one(), r.zero()).unwrap();
                let got =
                    conjugate_by(&m, &Conjugator::new(ConjKind::A11, a.neg())).unwrap();
                assert_eq!(got, Mat2::row(a.clone(), r.int(-1)).unwrap());
                let m = Mat2::new(a.clone(), r.zero(), r.int(-1), r.zero()).unwrap();
                let got =
                    conjugate_by(&m, &Conjugator::new(ConjKind::A11, a.clone())).unwrap();
                assert_eq!(got, Mat2::row(a.clone(), r.one()).unwrap());
            }
        }
    }

    #[test]
    fn conjugation_distributes_over_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..1000 {
            let r = ring(if rng.random_bool(0.5) { 2 } else { 5 });
            let m1 = Mat2::new(
                rand_el(r, &mut rng, 8),
                rand_el(r, &mut rng, 8),
                rand_el(r, &mut rng, 8),
                rand_el(r, &mut rng, 8),
            )
            .unwrap();
            let m2 = Mat2::new(
                rand_el(r, &mut rng, 8),
                rand_el(r, &mut rng, 8),
                rand_el(r, &mut rng, 8),
                rand_el(r, &mut rng, 8),
            )
            .unwrap();
            let seq = rand_seq(r, &mut rng, 4);
            let lhs = conjugate_seq(&m1.mul(&m2).unwrap(), &seq).unwrap();
            let rhs = conjugate_seq(&m1, &seq)
                .unwrap()
                .mul(&conjugate_seq(&m2, &seq).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn conjugation_preserves_idempotency() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let r = ring(10);
        for _ in 0..300 {
            let z = rand_el(r, &mut rng, 10);
            let e = Mat2::new(r.one(), r.zero(), r.one().sub(&z).unwrap(), r.zero()).unwrap();
            assert!(e.is_idempotent());
            let seq = rand_seq(r, &mut rng, 3);
            assert!(conjugate_seq(&e, &seq).unwrap().is_idempotent());
        }
    }

    #[test]
    fn reversed_inverses_undo_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let r = ring(5);
        for _ in 0..300 {
            let m = Mat2::new(
                rand_el(r, &mut rng, 10),
                rand_el(r, &mut rng, 10),
                rand_el(r, &mut rng, 10),
                rand_el(r, &mut rng, 10),
            )
            .unwrap();
            let seq = rand_seq(r, &mut rng, 4);
            let inv = reversed_inverses(&seq).unwrap();
            let back = conjugate_seq(&conjugate_seq(&m, &seq).unwrap(), &inv).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn swap_identity_cases() {
        let r2 = ring(2);
        let (pre, row) = swap_identity(&r2.one(), &r2.zero()).unwrap();
        assert_eq!(pre, Mat2::from_ints(r2, [0, 0, 1, 0]));
        assert_eq!(row, Mat2::from_ints(r2, [0, 1, 0, 0]));
        assert_eq!(pre.mul(&row).unwrap(), Mat2::from_ints(r2, [0, 0, 0, 1]));
        let y = r2.from_coords(4, -2);
        let (_, row) = swap_identity(&r2.zero(), &y).unwrap();
        assert_eq!(row, Mat2::row(y.neg(), r2.zero()).unwrap());
        let x = r2.from_coords(3, 1);
        let (_, row) = swap_identity(&x, &x).unwrap();
        assert_eq!(row, Mat2::row(x.neg(), x.clone()).unwrap());
    }

    #[test]
    fn sl2_inverse_guard() {
        let r = ring(2);
        assert!(matches!(
            Mat2::from_ints(r, [2, 0, 0, 1]).inverse_sl2(),
            Err(Error::NotInSl2)
        ));
        let c = Conjugator::new(ConjKind::A11, r.from_coords(3, -2)).matrix();
        assert!(c.mul(&c.inverse_sl2().unwrap()).unwrap().is_identity());
    }
}
