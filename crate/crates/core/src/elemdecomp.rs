//! Decomposition of SL2 matrices into elementary factors, and normalization
//! to the even-length alternating word shape the row-reduction chain needs.

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::quadring::{Branch, QuadInt, RingSpec};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// One elementary matrix: `(1 a; 0 1)` for `Upper`, `(1 0; a 1)` for `Lower`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryFactor {
    pub side: Side,
    pub a: QuadInt,
}

impl ElementaryFactor {
    pub fn upper(a: QuadInt) -> ElementaryFactor {
        ElementaryFactor { side: Side::Upper, a }
    }

    pub fn lower(a: QuadInt) -> ElementaryFactor {
        ElementaryFactor { side: Side::Lower, a }
    }

    pub fn matrix(&self) -> Mat2 {
        let r = self.a.ring();
        match self.side {
            Side::Upper => Mat2::new(r.one(), self.a.clone(), r.zero(), r.one()),
            Side::Lower => Mat2::new(r.one(), r.zero(), self.a.clone(), r.one()),
        }
        .expect("one ring")
    }
}

pub fn product_of(factors: &[ElementaryFactor], ring: RingSpec) -> Mat2 {
    factors.iter().fold(Mat2::identity(ring), |acc, f| {
        acc.mul(&f.matrix()).expect("same ring")
    })
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub factors: Vec<ElementaryFactor>,
    /// True when the plain nearest-point quotient stalled somewhere and a
    /// perturbed quotient or unit twist was needed.
    pub fallback_used: bool,
}

fn round_nearest(num: &BigInt, den: &BigInt) -> BigInt {
    // nearest integer to num/den, ties toward zero
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

/// The exact ratio `num / div` split per coordinate into an integer
/// rounding plus a fractional part in `[-1/2, 1/2]` (the fraction as f64,
/// safe at any magnitude because the numerator is already reduced).
struct SplitRatio {
    int1: BigInt,
    int2: BigInt,
    frac1: f64,
    frac2: f64,
}

fn split_ratio(num: &QuadInt, div: &QuadInt) -> SplitRatio {
    let n = div.norm();
    let prod = num.mul(&div.conj()).expect("same ring");
    let (p1, p2) = prod.to_coords();
    let int1 = round_nearest(&p1, &n);
    let int2 = round_nearest(&p2, &n);
    let nf = n.to_f64().unwrap_or(f64::MAX);
    let frac1 = (&p1 - &int1 * &n).to_f64().unwrap_or(0.0) / nf;
    let frac2 = (&p2 - &int2 * &n).to_f64().unwrap_or(0.0) / nf;
    SplitRatio { int1, int2, frac1, frac2 }
}

/// Candidate quotients for `num / div`. The norm form is indefinite, so the
/// norm-nearest lattice point can sit far from the coordinate rounding,
/// along the asymptotes: for each generator-coefficient offset within
/// `reach`, aim the rational coefficient so that one embedding of the
/// remainder nearly vanishes.
fn quotient_candidates(num: &QuadInt, div: &QuadInt, reach: i64) -> Vec<QuadInt> {
    let ring = num.ring();
    let sr = split_ratio(num, div);
    let sqrt_a = (ring.alpha() as f64).sqrt();
    let (w_pos, w_neg) = match ring.branch() {
        Branch::TwoThreeMod4 => (sqrt_a, -sqrt_a),
        Branch::OneMod4 => ((1.0 + sqrt_a) / 2.0, (1.0 - sqrt_a) / 2.0),
    };
    let mut out: Vec<QuadInt> = Vec::new();
    let mut push = |dq1: i64, dq2: i64| {
        let q = ring.from_coords(&sr.int1 + BigInt::from(dq1), &sr.int2 + BigInt::from(dq2));
        if !out.contains(&q) {
            out.push(q);
        }
    };
    for dq2 in -reach..=reach {
        let f2 = sr.frac2 - dq2 as f64;
        for w in [w_pos, w_neg] {
            let aim = sr.frac1 + f2 * w;
            let dq1 = aim.round() as i64;
            for e in -1..=1 {
                push(dq1 + e, dq2);
            }
        }
    }
    push(0, 0);
    out
}

/// Quotient minimizing the exact residual norm among the candidates.
fn best_quotient(num: &QuadInt, div: &QuadInt, reach: i64) -> Option<(BigInt, QuadInt)> {
    let mut best: Option<(BigInt, QuadInt)> = None;
    for q in quotient_candidates(num, div, reach) {
        let n = num.sub(&q.mul(div).unwrap()).unwrap().norm().abs();
        if best.as_ref().is_none_or(|(bn, _)| &n < bn) {
            best = Some((n, q));
        }
    }
    best
}

/// Reduces an SL2 completion `(z, w)` of the pair `(x, y)` modulo the pair
/// itself; `x w - y z` is unchanged.
pub fn reduce_completion(
    x: &QuadInt,
    y: &QuadInt,
    z: &QuadInt,
    w: &QuadInt,
) -> (QuadInt, QuadInt) {
    let (num, div) = if x.norm().abs() >= y.norm().abs() {
        (z, x)
    } else {
        (w, y)
    };
    if div.is_zero() {
        return (z.clone(), w.clone());
    }
    match best_quotient(num, div, 4) {
        Some((_, q)) => (
            z.sub(&q.mul(x).expect("same ring")).expect("same ring"),
            w.sub(&q.mul(y).expect("same ring")).expect("same ring"),
        ),
        None => (z.clone(), w.clone()),
    }
}

struct Reducer {
    work: Mat2,
    factors: Vec<ElementaryFactor>,
    fallback_used: bool,
    budget: usize,
}

impl Reducer {
    fn emit(&mut self, f: ElementaryFactor) -> Result<()> {
        // work <- F^-1 * work, keeping M = (emitted factors) * work
        let inv = match f.side {
            Side::Upper => ElementaryFactor::upper(f.a.neg()),
            Side::Lower => ElementaryFactor::lower(f.a.neg()),
        };
        self.work = inv.matrix().mul(&self.work)?;
        self.factors.push(f);
        if self.factors.len() > self.budget {
            return Err(Error::BudgetExhausted(format!(
                "elementary decomposition exceeded {} factors",
                self.budget
            )));
        }
        Ok(())
    }

    /// Emits the three elementary factors of `W(u) = (0 u; -u^-1 0)`.
    fn emit_unit_swap(&mut self, u: &QuadInt) -> Result<()> {
        let uinv = u.ring().one().exact_div(u)?;
        self.emit(ElementaryFactor::upper(u.clone()))?;
        self.emit(ElementaryFactor::lower(uinv.neg()))?;
        self.emit(ElementaryFactor::upper(u.clone()))
    }

    fn column(&self) -> (QuadInt, QuadInt) {
        let e = self.work.entries();
        (e[0].clone(), e[2].clone())
    }

    /// One division step on the first column; returns false on a stall.
    /// The quotient is the lattice point nearest in norm distance within
    /// the unit box around the coordinate rounding; a wider box counts as
    /// fallback.
    fn euclid_step(&mut self) -> Result<bool> {
        let (p, r) = self.column();
        let reduce_top = p.norm().abs() >= r.norm().abs();
        let (num, div) = if reduce_top { (&p, &r) } else { (&r, &p) };
        let bound = div.norm().abs();
        let mut chosen = best_quotient(num, div, 4).filter(|(n, _)| n < &bound).map(|(_, q)| q);
        if chosen.is_none() {
            chosen = best_quotient(num, div, 16).filter(|(n, _)| n < &bound).map(|(_, q)| {
                self.fallback_used = true;
                q
            });
        }
        let Some(q) = chosen else {
            return Ok(false);
        };
        if reduce_top {
            self.emit(ElementaryFactor::upper(q))?;
        } else {
            self.emit(ElementaryFactor::lower(q))?;
        }
        Ok(true)
    }

    /// Breadth-first search over short division sequences that escape a
    /// stalled state: accepts temporarily non-decreasing steps until the
    /// column norm drops below where it started.
    fn stall_search(&mut self) -> Result<bool> {
        let (p0, r0) = self.column();
        let start = p0.norm().abs().min(r0.norm().abs());
        let mut frontier: Vec<(Mat2, Vec<ElementaryFactor>)> = vec![(self.work.clone(), vec![])];
        let mut seen: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
        let mut nodes = 0usize;
        for _depth in 0..4 {
            let mut next = Vec::new();
            for (state, path) in frontier {
                let e = state.entries();
                let (p, r) = (e[0].clone(), e[2].clone());
                for reduce_top in [true, false] {
                    let (num, div) = if reduce_top { (&p, &r) } else { (&r, &p) };
                    if div.is_zero() {
                        continue;
                    }
                    // keep the few exact-norm-best candidates per side
                    let mut cands: Vec<(BigInt, QuadInt)> = quotient_candidates(num, div, 3)
                        .into_iter()
                        .filter(|q| !q.is_zero())
                        .map(|q| {
                            let n = num.sub(&q.mul(div).unwrap()).unwrap().norm().abs();
                            (n, q)
                        })
                        .collect();
                    cands.sort_by(|a, b| a.0.cmp(&b.0));
                    cands.truncate(5);
                    for (_, q) in cands {
                            let f = if reduce_top {
                                ElementaryFactor::upper(q)
                            } else {
                                ElementaryFactor::lower(q)
                            };
                            let inv = match f.side {
                                Side::Upper => ElementaryFactor::upper(f.a.neg()),
                                Side::Lower => ElementaryFactor::lower(f.a.neg()),
                            };
                            let new_state = inv.matrix().mul(&state)?;
                            let ne = new_state.entries();
                            let (np, nr) = (&ne[0], &ne[2]);
                            let mut new_path = path.clone();
                            new_path.push(f);
                            let measure = if np.is_zero() || nr.is_zero() {
                                BigInt::from(0)
                            } else {
                                np.norm().abs().min(nr.norm().abs())
                            };
                            if measure < start {
                                for f in new_path {
                                    self.emit(f)?;
                                }
                                return Ok(true);
                            }
                        let key = format!("{new_state}");
                        if seen.insert(key) {
                            nodes += 1;
                            if nodes < 4000 {
                                next.push((new_state, new_path));
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(false)
    }

    /// Handles `(p q; 0 p^-1)` and `(0 q; r s)` tails.
    fn finish(&mut self) -> Result<()> {
        let e = self.work.entries().clone();
        let ring = self.work.ring();
        if e[2].is_zero() {
            let p = e[0].clone();
            if p.is_one() {
                if !e[1].is_zero() {
                    self.emit(ElementaryFactor::upper(e[1].clone()))?;
                }
            } else {
                // (p q; 0 p^-1) = W(p) W(-1) U(p^-1 q)
                self.emit_unit_swap(&p)?;
                self.emit_unit_swap(&ring.int(-1))?;
                let e = self.work.entries().clone();
                debug_assert!(e[0].is_one() && e[2].is_zero());
                if !e[1].is_zero() {
                    self.emit(ElementaryFactor::upper(e[1].clone()))?;
                }
            }
        } else {
            // (0 q; r s) with q = -r^-1: W(q) U(-q s)
            let q = e[1].clone();
            self.emit_unit_swap(&q)?;
            let e = self.work.entries().clone();
            debug_assert!(e[0].is_one() && e[2].is_zero());
            if !e[1].is_zero() {
                self.emit(ElementaryFactor::upper(e[1].clone()))?;
            }
        }
        if !self.work.is_identity() {
            return Err(Error::PipelineInvariant("decomposition tail".into()));
        }
        Ok(())
    }
}

/// Writes an SL2 matrix as a product of elementary factors. Euclidean
/// nearest-point reduction on the first column, with perturbed quotients
/// and fundamental-unit twists as a stall fallback.
pub fn decompose(m: &Mat2, max_factors: usize) -> Result<Decomposition> {
    if !m.in_sl2() {
        return Err(Error::NotInSl2);
    }
    let ring = m.ring();
    let mut red = Reducer {
        work: m.clone(),
        factors: Vec::new(),
        fallback_used: false,
        budget: max_factors,
    };
    let twists = [1i32, -1, 2, -2, 3, -3];
    let mut twist_idx = 0;
    loop {
        if red.work.is_identity() {
            break;
        }
        let (p, r) = red.column();
        if p.is_zero() || r.is_zero() {
            red.finish()?;
            break;
        }
        if red.euclid_step()? {
            twist_idx = 0;
            continue;
        }
        red.fallback_used = true;
        if red.stall_search()? {
            twist_idx = 0;
            continue;
        }
        // last resort: rescale the column by a unit and retry
        if twist_idx >= twists.len() {
            return Err(Error::BudgetExhausted(
                "euclidean reduction stalled beyond the unit-twist budget".into(),
            ));
        }
        let eps = ring.fundamental_unit();
        let k = twists[twist_idx];
        twist_idx += 1;
        let u = if k > 0 {
            eps.pow(k as u32)
        } else {
            ring.one().exact_div(&eps.pow((-k) as u32))?
        };
        red.fallback_used = true;
        red.emit_unit_swap(&u)?;
    }
    debug_assert_eq!(product_of(&red.factors, ring), *m);
    Ok(Decomposition {
        factors: red.factors,
        fallback_used: red.fallback_used,
    })
}

/// An even-length strictly alternating elementary word
/// `U(q0) L(q1) ... U(q_{2n0-2}) L(q_{2n0-1})` equal to `source`.
#[derive(Debug, Clone)]
pub struct AlternatingWord {
    pub qs: Vec<QuadInt>,
    pub n0: usize,
    pub source: Mat2,
}

impl AlternatingWord {
    pub fn factors(&self) -> Vec<ElementaryFactor> {
        self.qs
            .iter()
            .enumerate()
            .map(|(i, q)| {
                if i % 2 == 0 {
                    ElementaryFactor::upper(q.clone())
                } else {
                    ElementaryFactor::lower(q.clone())
                }
            })
            .collect()
    }
}

/// Merges adjacent same-side factors, drops vanishing ones, and pads with
/// zero factors so the word starts upper, alternates, and has even length.
/// The product is re-checked against `m`.
pub fn to_alternating(factors: &[ElementaryFactor], m: &Mat2) -> Result<AlternatingWord> {
    let ring = m.ring();
    if product_of(factors, ring) != *m {
        return Err(Error::PreconditionViolated(
            "factor product does not equal the target".into(),
        ));
    }
    let mut merged: Vec<ElementaryFactor> = Vec::new();
    for f in factors {
        match merged.last_mut() {
            Some(last) if last.side == f.side => {
                last.a = last.a.add(&f.a)?;
                if last.a.is_zero() {
                    merged.pop();
                }
            }
            _ => {
                if !f.a.is_zero() {
                    merged.push(f.clone());
                }
            }
        }
    }
    let flip = |s: Side| match s {
        Side::Upper => Side::Lower,
        Side::Lower => Side::Upper,
    };
    let mut qs: Vec<QuadInt> = Vec::with_capacity(merged.len() + 2);
    let mut expect = Side::Upper;
    for f in &merged {
        if f.side != expect {
            qs.push(ring.zero());
            expect = flip(expect);
        }
        qs.push(f.a.clone());
        expect = flip(expect);
    }
    if qs.len() % 2 == 1 {
        qs.push(ring.zero());
    }
    let n0 = qs.len() / 2;
    let word = AlternatingWord {
        qs,
        n0,
        source: m.clone(),
    };
    if product_of(&word.factors(), ring) != *m {
        return Err(Error::PipelineInvariant("alternating word product".into()));
    }
    Ok(word)
}

/// Random SL2 matrix built as a short alternating elementary word (tests).
#[cfg(test)]
pub(crate) fn random_sl2_word(
    r: RingSpec,
    rng: &mut rand_chacha::ChaCha8Rng,
    max_len: usize,
    height: i64,
) -> Mat2 {
    use rand::Rng;
    let len = rng.random_range(0..=max_len);
    let mut m = Mat2::identity(r);
    for i in 0..len {
        let a = r.from_coords(
            rng.random_range(-height..=height),
            rng.random_range(-height..=height),
        );
        let f = if i % 2 == 0 {
            ElementaryFactor::upper(a)
        } else {
            ElementaryFactor::lower(a)
        };
        m = m.mul(&f.matrix()).unwrap();
    }
    m
}
