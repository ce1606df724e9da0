//! Ideals of the ring as rank-2 integer lattices over the integral basis
//! `(1, omega)`: Hermite-normal-form canonicalization, membership, norms,
//! combination solving, principality testing, inverses, and common-divisor
//! extraction.

use crate::error::{Error, Result};
use crate::intlib::{ext_gcd, prime_divisors};
use crate::quadring::{Branch, QuadInt, RingSpec};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

type Coords = (BigInt, BigInt);

fn coords(x: &QuadInt) -> Coords {
    x.to_coords()
}

/// Product of two elements given by coordinates over `(1, omega)`.
fn coord_mul(ring: RingSpec, a: &Coords, b: &Coords) -> Coords {
    let (p1, q1) = a;
    let (p2, q2) = b;
    match ring.branch() {
        Branch::TwoThreeMod4 => (
            p1 * p2 + q1 * q2 * BigInt::from(ring.alpha()),
            p1 * q2 + p2 * q1,
        ),
        Branch::OneMod4 => {
            let t = BigInt::from((ring.alpha() - 1) / 4);
            (p1 * p2 + q1 * q2 * t, p1 * q2 + p2 * q1 + q1 * q2)
        }
    }
}

fn coord_conj(ring: RingSpec, a: &Coords) -> Coords {
    let (p, q) = a;
    match ring.branch() {
        Branch::TwoThreeMod4 => (p.clone(), -q),
        Branch::OneMod4 => (p + q, -q),
    }
}

fn omega_coords() -> Coords {
    (BigInt::zero(), BigInt::one())
}

/// An element of the field written as `(c1 + c2*omega)/den`, kept reduced
/// with `den > 0`. Used for fractional-ideal arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FracElem {
    ring: RingSpec,
    c1: BigInt,
    c2: BigInt,
    den: BigInt,
}

impl FracElem {
    pub fn new(ring: RingSpec, c1: BigInt, c2: BigInt, den: BigInt) -> FracElem {
        assert!(!den.is_zero());
        let mut f = FracElem { ring, c1, c2, den };
        f.reduce();
        f
    }

    pub fn from_quadint(x: &QuadInt) -> FracElem {
        let (c1, c2) = coords(x);
        FracElem::new(x.ring(), c1, c2, BigInt::one())
    }

    fn reduce(&mut self) {
        if self.den.is_negative() {
            self.c1 = -&self.c1;
            self.c2 = -&self.c2;
            self.den = -&self.den;
        }
        let g = self.c1.gcd(&self.c2).gcd(&self.den);
        if g > BigInt::one() {
            self.c1 /= &g;
            self.c2 /= &g;
            self.den /= &g;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c1.is_zero() && self.c2.is_zero()
    }

    pub fn mul_quadint(&self, x: &QuadInt) -> FracElem {
        let (c1, c2) = coord_mul(self.ring, &(self.c1.clone(), self.c2.clone()), &coords(x));
        FracElem::new(self.ring, c1, c2, self.den.clone())
    }

    pub fn add(&self, other: &FracElem) -> FracElem {
        FracElem::new(
            self.ring,
            &self.c1 * &other.den + &other.c1 * &self.den,
            &self.c2 * &other.den + &other.c2 * &self.den,
            &self.den * &other.den,
        )
    }

    pub fn scale(&self, k: &BigInt) -> FracElem {
        FracElem::new(self.ring, &self.c1 * k, &self.c2 * k, self.den.clone())
    }

    /// Converts to a ring element when the denominator is 1.
    pub fn as_quadint(&self) -> Option<QuadInt> {
        if self.den.is_one() {
            Some(self.ring.from_coords(self.c1.clone(), self.c2.clone()))
        } else {
            None
        }
    }
}

/// A nonzero fractional ideal stored as an HNF lattice `L/den` over the
/// coordinate space, with the original generators retained. Canonical:
/// equal ideals have identical basis and denominator.
#[derive(Debug, Clone)]
pub struct OIdeal {
    ring: RingSpec,
    /// columns `(a, c)` and `(0, d)` with `a, d > 0` and `0 <= c < d`
    a: BigInt,
    c: BigInt,
    d: BigInt,
    den: BigInt,
    gens: Vec<QuadInt>,
}

impl PartialEq for OIdeal {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring
            && self.a == other.a
            && self.c == other.c
            && self.d == other.d
            && self.den == other.den
    }
}
impl Eq for OIdeal {}

/// Pairwise column reduction bringing a set of coordinate columns into HNF.
fn hnf_columns(cols: &[Coords]) -> Option<(BigInt, BigInt, BigInt)> {
    let mut pivot: Option<Coords> = None;
    let mut rest: Vec<BigInt> = Vec::new();
    for col in cols {
        if col.0.is_zero() {
            if !col.1.is_zero() {
                rest.push(col.1.clone());
            }
            continue;
        }
        match pivot.take() {
            None => pivot = Some(col.clone()),
            Some((a, c)) => {
                let (g, u, v) = ext_gcd(&a, &col.0);
                let new_c = &u * &c + &v * &col.1;
                // complementary combination has first entry 0
                rest.push((&a / &g) * &col.1 - (&col.0 / &g) * &c);
                pivot = Some((g, new_c));
            }
        }
    }
    let (mut a, mut c) = pivot?;
    if a.is_negative() {
        a = -a;
        c = -c;
    }
    let mut d = BigInt::zero();
    for s in rest {
        d = d.gcd(&s);
    }
    if d.is_zero() {
        return None;
    }
    c = c.mod_floor(&d);
    Some((a, c, d))
}

impl OIdeal {
    fn from_lattice(ring: RingSpec, cols: &[Coords], den: BigInt, gens: Vec<QuadInt>) -> Result<OIdeal> {
        let (a, c, d) = hnf_columns(cols).ok_or(Error::AllGeneratorsZero)?;
        let mut ideal = OIdeal { ring, a, c, d, den, gens };
        ideal.normalize();
        ideal.check_omega_closed()?;
        Ok(ideal)
    }

    fn normalize(&mut self) {
        let g = self.a.gcd(&self.c).gcd(&self.d).gcd(&self.den);
        if g > BigInt::one() {
            self.a /= &g;
            self.c /= &g;
            self.d /= &g;
            self.den /= &g;
        }
    }

    fn check_omega_closed(&self) -> Result<()> {
        let w = omega_coords();
        for col in [(self.a.clone(), self.c.clone()), (BigInt::zero(), self.d.clone())] {
            let prod = coord_mul(self.ring, &col, &w);
            if !self.lattice_contains(&prod) {
                return Err(Error::PipelineInvariant("ideal lattice not omega-closed".into()));
            }
        }
        Ok(())
    }

    /// Membership of raw numerator coordinates (already on this lattice's
    /// denominator scale).
    fn lattice_contains(&self, p: &Coords) -> bool {
        let (m, rm) = p.0.div_rem(&self.a);
        if !rm.is_zero() {
            return false;
        }
        let (_, rn) = (&p.1 - &m * &self.c).div_rem(&self.d);
        rn.is_zero()
    }

    pub fn from_generators(ring: RingSpec, gens: &[QuadInt]) -> Result<OIdeal> {
        for g in gens {
            if g.ring() != ring {
                return Err(Error::RingMismatch(ring.alpha(), g.ring().alpha()));
            }
        }
        let mut cols = Vec::with_capacity(gens.len() * 2);
        for g in gens {
            if g.is_zero() {
                continue;
            }
            let gc = coords(g);
            cols.push(gc.clone());
            cols.push(coord_mul(ring, &gc, &omega_coords()));
        }
        if cols.is_empty() {
            return Err(Error::AllGeneratorsZero);
        }
        OIdeal::from_lattice(ring, &cols, BigInt::one(), gens.to_vec())
    }

    pub fn unit_ideal(ring: RingSpec) -> OIdeal {
        OIdeal::from_generators(ring, &[ring.one()]).expect("nonzero")
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn generators(&self) -> &[QuadInt] {
        &self.gens
    }

    pub fn is_unit_ideal(&self) -> bool {
        self.a.is_one() && self.d.is_one() && self.den.is_one()
    }

    /// True when the lattice lies inside the ring of integers.
    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    /// `|det| / den^2` as a reduced fraction `(numerator, denominator)`.
    pub fn norm_pair(&self) -> (BigInt, BigInt) {
        let num = &self.a * &self.d;
        let den = &self.den * &self.den;
        let g = num.gcd(&den);
        (num / &g, den / g)
    }

    /// Integer norm of an integral ideal.
    pub fn norm_int(&self) -> Option<BigInt> {
        let (n, d) = self.norm_pair();
        d.is_one().then_some(n)
    }

    pub fn contains(&self, x: &QuadInt) -> Result<bool> {
        if x.ring() != self.ring {
            return Err(Error::RingMismatch(self.ring.alpha(), x.ring().alpha()));
        }
        if x.is_zero() {
            return Ok(true);
        }
        let (p, q) = coords(x);
        Ok(self.lattice_contains(&(p * &self.den, q * &self.den)))
    }

    /// The two lattice basis vectors as field elements.
    pub fn basis_elements(&self) -> [FracElem; 2] {
        [
            FracElem::new(self.ring, self.a.clone(), self.c.clone(), self.den.clone()),
            FracElem::new(self.ring, BigInt::zero(), self.d.clone(), self.den.clone()),
        ]
    }

    pub fn mul(&self, other: &OIdeal) -> Result<OIdeal> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch(self.ring.alpha(), other.ring.alpha()));
        }
        let b1 = [
            (self.a.clone(), self.c.clone()),
            (BigInt::zero(), self.d.clone()),
        ];
        let b2 = [
            (other.a.clone(), other.c.clone()),
            (BigInt::zero(), other.d.clone()),
        ];
        let mut cols = Vec::with_capacity(4);
        for x in &b1 {
            for y in &b2 {
                cols.push(coord_mul(self.ring, x, y));
            }
        }
        OIdeal::from_lattice(self.ring, &cols, &self.den * &other.den, Vec::new())
    }

    pub fn conj(&self) -> OIdeal {
        let cols = [
            coord_conj(self.ring, &(self.a.clone(), self.c.clone())),
            coord_conj(self.ring, &(BigInt::zero(), self.d.clone())),
        ];
        OIdeal::from_lattice(self.ring, &cols, self.den.clone(), Vec::new()).expect("nonzero")
    }

    /// `I^-1 = conj(I) / norm(I)`; the product `I * I^-1 = O` is re-checked.
    pub fn inverse(&self) -> Result<OIdeal> {
        let (n, nd) = self.norm_pair();
        if n.is_zero() {
            return Err(Error::ZeroIdeal);
        }
        let conj = self.conj();
        let mut inv = OIdeal {
            ring: conj.ring,
            a: &conj.a * &nd,
            c: &conj.c * &nd,
            d: &conj.d * &nd,
            den: &conj.den * &n,
            gens: Vec::new(),
        };
        inv.normalize();
        let prod = self.mul(&inv)?;
        if !prod.is_unit_ideal() {
            return Err(Error::PipelineInvariant("ideal inverse product".into()));
        }
        Ok(inv)
    }

    /// Integral elements `i*b1 + j*b2` with `max(|i|, |j|) <= radius`,
    /// ordered by that radius, zero first.
    pub fn small_elements(&self, radius: i64) -> Vec<QuadInt> {
        self.small_elements_with_shell(radius)
            .into_iter()
            .map(|(q, _)| q)
            .collect()
    }

    /// As `small_elements`, also reporting each element's shell radius.
    pub fn small_elements_with_shell(&self, radius: i64) -> Vec<(QuadInt, i64)> {
        let [b1, b2] = self.basis_elements();
        let mut out = vec![(self.ring.zero(), 0)];
        for shell in 1..=radius {
            for i in -shell..=shell {
                for j in -shell..=shell {
                    if i.abs().max(j.abs()) != shell {
                        continue;
                    }
                    let e = b1.scale(&BigInt::from(i)).add(&b2.scale(&BigInt::from(j)));
                    if let Some(q) = e.as_quadint() {
                        out.push((q, shell));
                    }
                }
            }
        }
        out
    }

    /// Searches for a generator: an element of the right norm whose
    /// principal ideal equals this one. Absence within the unit-reduced
    /// search box is conclusive; `height_budget` only caps the box.
    pub fn is_principal(&self, height_budget: u64) -> Option<QuadInt> {
        self.is_principal_noting_budget(height_budget).0
    }

    /// As `is_principal`, also reporting whether the box was truncated by
    /// the budget (in which case an empty answer is inconclusive).
    pub fn is_principal_noting_budget(&self, height_budget: u64) -> (Option<QuadInt>, bool) {
        let Some(n) = self.norm_int() else {
            return (None, false);
        };
        if self.is_unit_ideal() {
            return (Some(self.ring.one()), false);
        }
        let (cands, truncated) = norm_form_solutions(self.ring, &n, height_budget);
        for z in cands {
            if self.contains(&z).unwrap_or(false) {
                if let Ok(zo) = OIdeal::from_generators(self.ring, &[z.clone()]) {
                    if zo == *self && z.norm().abs() == n {
                        return (Some(z), false);
                    }
                }
            }
        }
        (None, truncated)
    }
}

/// All elements with `|norm| = n` up to sign, enumerated inside the box a
/// fundamental-unit reduction guarantees to contain one associate of each.
/// Returns the candidates and whether the box was truncated by the budget.
pub fn norm_form_solutions(ring: RingSpec, n: &BigInt, budget: u64) -> (Vec<QuadInt>, bool) {
    let alpha = BigInt::from(ring.alpha());
    let eps = ring.fundamental_unit();
    let (eu, ev) = eps.half_coords();
    let emb = (eu.to_f64().unwrap_or(f64::MAX)
        + ev.to_f64().unwrap_or(f64::MAX) * (ring.alpha() as f64).sqrt())
        / 2.0;
    let sqrt_n = n.to_f64().unwrap_or(f64::MAX).sqrt();
    let bound = (sqrt_n * (emb + 1.0) / (ring.alpha() as f64).sqrt()).ceil() + 2.0;
    let vmax_f = bound.min(budget as f64);
    let truncated = bound > budget as f64;
    let vmax = vmax_f as i64;
    let four_n: BigInt = n * BigInt::from(4);
    let mut out = Vec::new();
    let mut push = |u: BigInt, v: BigInt| {
        if u.is_zero() && v.is_zero() {
            return;
        }
        let x = quad_from_half(ring, u, v);
        if let Some(x) = x {
            if !out.contains(&x) {
                out.push(x);
            }
        }
    };
    for v in 0..=vmax {
        let v = BigInt::from(v);
        let av2 = &alpha * &v * &v;
        for c in [&av2 + &four_n, &av2 - &four_n] {
            if c.is_negative() {
                continue;
            }
            let u = c.sqrt();
            if &u * &u != c {
                continue;
            }
            push(u.clone(), v.clone());
            if !v.is_zero() {
                push(u, -&v);
            }
        }
    }
    (out, truncated)
}

fn quad_from_half(ring: RingSpec, u: BigInt, v: BigInt) -> Option<QuadInt> {
    let ok = match ring.branch() {
        Branch::OneMod4 => (&u - &v).is_even(),
        Branch::TwoThreeMod4 => u.is_even() && v.is_even(),
    };
    if !ok {
        return None;
    }
    let (c1, c2) = match ring.branch() {
        Branch::TwoThreeMod4 => (u / 2, v / 2),
        Branch::OneMod4 => ((&u - &v) / 2, v),
    };
    Some(ring.from_coords(c1, c2))
}

/// A non-unit element dividing both inputs, of maximal norm among the
/// divisors found; `None` when the pair has no common non-unit factor
/// within the search box.
pub fn common_divisor(x: &QuadInt, y: &QuadInt, height_budget: u64) -> Option<QuadInt> {
    common_divisor_noting_budget(x, y, height_budget).0
}

/// As `common_divisor`, also reporting whether any enumeration box was
/// truncated by the budget.
pub fn common_divisor_noting_budget(
    x: &QuadInt,
    y: &QuadInt,
    height_budget: u64,
) -> (Option<QuadInt>, bool) {
    if x.is_zero() && y.is_zero() {
        return (None, false);
    }
    if x.is_zero() {
        return ((!y.is_unit()).then(|| y.clone()), false);
    }
    if y.is_zero() {
        return ((!x.is_unit()).then(|| x.clone()), false);
    }
    let g = x.norm().abs().gcd(&y.norm().abs());
    if g.is_one() {
        return (None, false);
    }
    let mut divisors = all_divisors(&g);
    divisors.sort();
    divisors.reverse();
    let mut any_truncated = false;
    for d in divisors {
        if d.is_one() {
            continue;
        }
        let (cands, truncated) = norm_form_solutions(x.ring(), &d, height_budget);
        any_truncated |= truncated;
        for z in cands {
            if !z.is_unit() && z.divides(x) && z.divides(y) {
                return (Some(z), false);
            }
        }
    }
    (None, any_truncated)
}

fn all_divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = vec![BigInt::one()];
    let Ok(primes) = prime_divisors(n) else {
        return out;
    };
    for p in primes {
        let mut extended = out.clone();
        let mut pk = p.clone();
        while (n % &pk).is_zero() {
            for d in &out {
                extended.push(d * &pk);
            }
            pk *= &p;
        }
        out = extended;
    }
    out
}

/// Solves `target = sum m_i * gens_i` with rational-integer coefficients.
pub fn solve_integer_combination(gens: &[QuadInt], target: &QuadInt) -> Option<Vec<BigInt>> {
    let cols: Vec<Coords> = gens.iter().map(coords).collect();
    solve_2xn(&cols, &coords(target))
}

/// Solves `target = sum c_i * gens_i` with ring coefficients, as an integer
/// linear system over the coordinate lattice. The found combination is
/// re-multiplied against the target before returning.
pub fn solve_combination(gens: &[QuadInt], target: &QuadInt) -> Result<Vec<QuadInt>> {
    let ring = target.ring();
    let mut cols = Vec::with_capacity(gens.len() * 2);
    for g in gens {
        if g.ring() != ring {
            return Err(Error::RingMismatch(ring.alpha(), g.ring().alpha()));
        }
        let gc = coords(g);
        cols.push(gc.clone());
        cols.push(coord_mul(ring, &gc, &omega_coords()));
    }
    let t = solve_2xn(&cols, &coords(target)).ok_or(Error::NotInIdeal)?;
    let mut coeffs = Vec::with_capacity(gens.len());
    let mut check = ring.zero();
    for (i, g) in gens.iter().enumerate() {
        let ci = ring.from_coords(t[2 * i].clone(), t[2 * i + 1].clone());
        check = check.add(&ci.mul(g)?)?;
        coeffs.push(ci);
    }
    if check != *target {
        return Err(Error::PipelineInvariant("combination recheck".into()));
    }
    Ok(coeffs)
}

/// Integer solution of a 2-row linear system `M t = target`, by column
/// reduction with a recorded transform.
pub fn solve_2xn(cols: &[Coords], target: &Coords) -> Option<Vec<BigInt>> {
    let n = cols.len();
    if n == 0 {
        return (target.0.is_zero() && target.1.is_zero()).then(Vec::new);
    }
    let mut m: Vec<Coords> = cols.to_vec();
    // u[j] = expression of working column j over the original columns
    let mut u: Vec<Vec<BigInt>> = (0..n)
        .map(|j| {
            let mut col = vec![BigInt::zero(); n];
            col[j] = BigInt::one();
            col
        })
        .collect();

    let combine = |m: &mut Vec<Coords>, u: &mut Vec<Vec<BigInt>>, i: usize, j: usize| {
        // reduce first nonzero row of column j against pivot column i
        let (g, p, q) = ext_gcd(&m[i].0, &m[j].0);
        let (ai, aj) = (&m[i].0 / &g, &m[j].0 / &g);
        let new_i = (g.clone(), &p * &m[i].1 + &q * &m[j].1);
        let new_j = (BigInt::zero(), &ai * &m[j].1 - &aj * &m[i].1);
        m[i] = new_i;
        m[j] = new_j;
        let ui: Vec<BigInt> = (0..u[i].len())
            .map(|k| &p * &u[i][k] + &q * &u[j][k])
            .collect();
        let uj: Vec<BigInt> = (0..u[i].len())
            .map(|k| &ai * &u[j][k] - &aj * &u[i][k])
            .collect();
        u[i] = ui;
        u[j] = uj;
    };

    // stage 1: single pivot in row 0
    let mut p0 = None;
    for j in 0..n {
        if m[j].0.is_zero() {
            continue;
        }
        match p0 {
            None => p0 = Some(j),
            Some(i) => combine(&mut m, &mut u, i, j),
        }
    }
    // stage 2: single pivot in row 1 among the remaining columns
    let mut p1 = None;
    for j in 0..n {
        if Some(j) == p0 || m[j].1.is_zero() {
            continue;
        }
        match p1 {
            None => p1 = Some(j),
            Some(i) => {
                // same reduction, acting on row 1
                let (g, p, q) = ext_gcd(&m[i].1, &m[j].1);
                let (ai, aj) = (&m[i].1 / &g, &m[j].1 / &g);
                m[i].1 = g;
                m[j].1 = BigInt::zero();
                let ui: Vec<BigInt> = (0..u[i].len())
                    .map(|k| &p * &u[i][k] + &q * &u[j][k])
                    .collect();
                let uj: Vec<BigInt> = (0..u[i].len())
                    .map(|k| &ai * &u[j][k] - &aj * &u[i][k])
                    .collect();
                u[i] = ui;
                u[j] = uj;
            }
        }
    }

    let mut s = vec![BigInt::zero(); n];
    let mut rem = target.clone();
    if let Some(i) = p0 {
        let (q, r) = rem.0.div_rem(&m[i].0);
        if !r.is_zero() {
            return None;
        }
        rem.0 -= &q * &m[i].0;
        rem.1 -= &q * &m[i].1;
        s[i] = q;
    } else if !rem.0.is_zero() {
        return None;
    }
    if let Some(i) = p1 {
        let (q, r) = rem.1.div_rem(&m[i].1);
        if !r.is_zero() {
            return None;
        }
        rem.1 -= &q * &m[i].1;
        s[i] = q;
    }
    if !rem.0.is_zero() || !rem.1.is_zero() {
        return None;
    }
    let mut t: Vec<BigInt> = (0..n)
        .map(|k| (0..n).fold(BigInt::zero(), |acc, j| acc + &s[j] * &u[j][k]))
        .collect();
    // the zeroed working columns carry kernel vectors; size-reduce the
    // particular solution against them so callers see small witnesses
    let kernel: Vec<Vec<BigInt>> = (0..n)
        .filter(|j| Some(*j) != p0 && Some(*j) != p1)
        .map(|j| u[j].clone())
        .filter(|k| k.iter().any(|c| !c.is_zero()))
        .collect();
    babai_reduce(&mut t, kernel);
    Some(t)
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

use crate::intlib::round_div;

/// Nearest-plane style reduction of `t` against a small kernel basis,
/// with a pairwise Gauss reduction of the basis first.
fn babai_reduce(t: &mut [BigInt], mut kernel: Vec<Vec<BigInt>>) {
    for _ in 0..6 {
        let mut changed = false;
        for i in 0..kernel.len() {
            for j in 0..kernel.len() {
                if i == j {
                    continue;
                }
                let nj = dot(&kernel[j], &kernel[j]);
                if nj.is_zero() {
                    continue;
                }
                let q = round_div(&dot(&kernel[i], &kernel[j]), &nj);
                if !q.is_zero() {
                    for k in 0..kernel[i].len() {
                        let d = &q * &kernel[j][k];
                        kernel[i][k] -= d;
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // exact projection onto a rank-2 kernel via the Gram system, then
    // nearest-integer passes until stable
    if kernel.len() == 2 {
        let (v1, v2) = (&kernel[0], &kernel[1]);
        let g11 = dot(v1, v1);
        let g12 = dot(v1, v2);
        let g22 = dot(v2, v2);
        let det = &g11 * &g22 - &g12 * &g12;
        if !det.is_zero() {
            let c1 = dot(t, v1);
            let c2 = dot(t, v2);
            let q1 = round_div(&(&g22 * &c1 - &g12 * &c2), &det);
            let q2 = round_div(&(&g11 * &c2 - &g12 * &c1), &det);
            for k in 0..t.len() {
                let d = &q1 * &v1[k] + &q2 * &v2[k];
                t[k] -= d;
            }
        }
    }
    let mut rounds = 0;
    loop {
        let mut changed = false;
        for kv in &kernel {
            let nk = dot(kv, kv);
            if nk.is_zero() {
                continue;
            }
            let q = round_div(&dot(t, kv), &nk);
            if !q.is_zero() {
                for k in 0..t.len() {
                    let d = &q * &kv[k];
                    t[k] -= d;
                }
                changed = true;
            }
        }
        rounds += 1;
        if !changed || rounds > 5000 {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ring(alpha: i64) -> RingSpec {
        RingSpec::new(alpha).unwrap()
    }

    fn el(r: RingSpec, c1: i64, c2: i64) -> QuadInt {
        r.from_coords(c1, c2)
    }

    #[test]
    fn ideal_norms_match_examples() {
        let r2 = ring(2);
        let i = OIdeal::from_generators(r2, &[r2.int(2), r2.omega()]).unwrap();
        assert_eq!(i.norm_int().unwrap(), BigInt::from(2));
        // sqrt(2) generates the same ideal
        let j = OIdeal::from_generators(r2, &[r2.omega()]).unwrap();
        assert_eq!(i, j);

        let i = OIdeal::from_generators(r2, &[r2.int(3), el(r2, 1, 1)]).unwrap();
        assert!(i.is_unit_ideal());

        let r10 = ring(10);
        let i = OIdeal::from_generators(r10, &[r10.int(5)]).unwrap();
        assert_eq!(i.norm_int().unwrap(), BigInt::from(25));
        let i = OIdeal::from_generators(r10, &[r10.int(2), r10.omega()]).unwrap();
        assert_eq!(i.norm_int().unwrap(), BigInt::from(2));
        assert_eq!(OIdeal::unit_ideal(r10).norm_int().unwrap(), BigInt::one());
    }

    #[test]
    fn membership() {
        let r10 = ring(10);
        let i = OIdeal::from_generators(r10, &[r10.int(2), r10.omega()]).unwrap();
        assert!(i.contains(&r10.int(2)).unwrap());
        assert!(i.contains(&r10.omega()).unwrap());
        assert!(i.contains(&r10.zero()).unwrap());
        assert!(!i.contains(&r10.one()).unwrap());
        assert!(matches!(
            i.contains(&ring(2).one()),
            Err(Error::RingMismatch(..))
        ));
    }

    #[test]
    fn hnf_is_canonical_under_generator_changes() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for alpha in [2i64, 5, 10, 15] {
            let r = ring(alpha);
            let unit = r.fundamental_unit();
            for _ in 0..250 {
                let g1 = el(r, rng.random_range(-20..=20), rng.random_range(-20..=20));
                let g2 = el(r, rng.random_range(-20..=20), rng.random_range(-20..=20));
                if g1.is_zero() && g2.is_zero() {
                    continue;
                }
                let i = OIdeal::from_generators(r, &[g1.clone(), g2.clone()]).unwrap();
                let shuffled = OIdeal::from_generators(r, &[g2.clone(), g1.clone()]).unwrap();
                assert_eq!(i, shuffled);
                let scaled = OIdeal::from_generators(
                    r,
                    &[g1.mul(&unit).unwrap(), g2.clone()],
                )
                .unwrap();
                assert_eq!(i, scaled);
            }
        }
    }

    #[test]
    fn combination_solving() {
        let r10 = ring(10);
        let gens = [r10.int(2), r10.omega()];
        let c = solve_combination(&gens, &r10.int(2)).unwrap();
        let back = c[0]
            .mul(&gens[0])
            .unwrap()
            .add(&c[1].mul(&gens[1]).unwrap())
            .unwrap();
        assert_eq!(back, r10.int(2));
        assert!(matches!(
            solve_combination(&gens, &r10.one()),
            Err(Error::NotInIdeal)
        ));

        let r2 = ring(2);
        let gens = [r2.int(3), el(r2, 1, 1)];
        let c = solve_combination(&gens, &r2.one()).unwrap();
        let back = c[0]
            .mul(&gens[0])
            .unwrap()
            .add(&c[1].mul(&gens[1]).unwrap())
            .unwrap();
        assert!(back.is_one());
    }

    #[test]
    fn combination_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for alpha in [2i64, 13, 10] {
            let r = ring(alpha);
            for _ in 0..300 {
                let g1 = el(r, rng.random_range(-15..=15), rng.random_range(-15..=15));
                let g2 = el(r, rng.random_range(-15..=15), rng.random_range(-15..=15));
                let c1 = el(r, rng.random_range(-9..=9), rng.random_range(-9..=9));
                let c2 = el(r, rng.random_range(-9..=9), rng.random_range(-9..=9));
                let target = c1.mul(&g1).unwrap().add(&c2.mul(&g2).unwrap()).unwrap();
                let sol = solve_combination(&[g1.clone(), g2.clone()], &target).unwrap();
                let back = sol[0]
                    .mul(&g1)
                    .unwrap()
                    .add(&sol[1].mul(&g2).unwrap())
                    .unwrap();
                assert_eq!(back, target);
            }
        }
    }

    #[test]
    fn principality_oracles() {
        let r2 = ring(2);
        let i = OIdeal::from_generators(r2, &[r2.int(2), r2.omega()]).unwrap();
        let z = i.is_principal(1_000_000).unwrap();
        let zo = OIdeal::from_generators(r2, &[z.clone()]).unwrap();
        assert_eq!(zo, i);
        assert_eq!(z.norm().abs(), BigInt::from(2));

        // x^2 - 10 y^2 = +-2 has no solutions mod 5, so (2, sqrt(10)) has
        // no generator at any height
        let r10 = ring(10);
        let i = OIdeal::from_generators(r10, &[r10.int(2), r10.omega()]).unwrap();
        assert!(i.is_principal(1_000_000).is_none());

        assert_eq!(OIdeal::unit_ideal(r10).is_principal(100).unwrap(), r10.one());
    }

    #[test]
    fn inverse_ideals() {
        let r2 = ring(2);
        let i = OIdeal::from_generators(r2, &[r2.omega()]).unwrap();
        let inv = i.inverse().unwrap();
        assert_eq!(inv.norm_pair(), (BigInt::one(), BigInt::from(2)));
        assert!(i.mul(&inv).unwrap().is_unit_ideal());

        let o = OIdeal::unit_ideal(r2);
        assert_eq!(o.inverse().unwrap(), o);

        let r10 = ring(10);
        let i = OIdeal::from_generators(r10, &[r10.int(2), r10.omega()]).unwrap();
        let inv = i.inverse().unwrap();
        assert!(!inv.is_integral());
        assert!(i.mul(&inv).unwrap().is_unit_ideal());
    }

    #[test]
    fn inverse_ideal_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for alpha in [2i64, 5, 10, 15] {
            let r = ring(alpha);
            for _ in 0..250 {
                let g1 = el(r, rng.random_range(-12..=12), rng.random_range(-12..=12));
                let g2 = el(r, rng.random_range(-12..=12), rng.random_range(-12..=12));
                if g1.is_zero() && g2.is_zero() {
                    continue;
                }
                let i = OIdeal::from_generators(r, &[g1, g2]).unwrap();
                let inv = i.inverse().unwrap();
                assert!(i.mul(&inv).unwrap().is_unit_ideal());
            }
        }
    }

    #[test]
    fn common_divisors() {
        let r2 = ring(2);
        let x = el(r2, 2, 2);
        let y = r2.int(4);
        let z = common_divisor(&x, &y, 10_000).unwrap();
        assert!(!z.is_unit());
        assert!(z.divides(&x) && z.divides(&y));
        assert_eq!(z.norm().abs(), BigInt::from(4));

        assert!(common_divisor(&el(r2, 1, 1), &r2.int(3), 10_000).is_none());

        let r10 = ring(10);
        assert!(common_divisor(&r10.int(2), &r10.omega(), 10_000).is_none());
    }

    #[test]
    fn norm_multiplicativity_under_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for alpha in [2i64, 10] {
            let r = ring(alpha);
            for _ in 0..200 {
                let i = OIdeal::from_generators(
                    r,
                    &[
                        el(r, rng.random_range(-9..=9), rng.random_range(-9..=9)),
                        el(r, rng.random_range(-9..=9), rng.random_range(-9..=9)),
                    ],
                );
                let j = OIdeal::from_generators(
                    r,
                    &[
                        el(r, rng.random_range(-9..=9), rng.random_range(-9..=9)),
                        el(r, rng.random_range(-9..=9), rng.random_range(-9..=9)),
                    ],
                );
                let (Ok(i), Ok(j)) = (i, j) else { continue };
                let (pn, pd) = i.mul(&j).unwrap().norm_pair();
                let (an, ad) = i.norm_pair();
                let (bn, bd) = j.norm_pair();
                assert_eq!(pn * ad * bd, an * bn * pd);
            }
        }
    }

    #[test]
    fn zero_generator_list_is_rejected() {
        let r2 = ring(2);
        assert!(matches!(
            OIdeal::from_generators(r2, &[r2.zero()]),
            Err(Error::AllGeneratorsZero)
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_ring() -> impl Strategy<Value = RingSpec> {
            prop::sample::select(vec![2i64, 5, 10, 15]).prop_map(ring)
        }

        proptest! {
            // equal ideals have identical canonical form no matter how the
            // generator list is presented
            #[test]
            fn hnf_canonical_under_presentation(
                r in any_ring(),
                g1 in (-30i64..=30, -30i64..=30),
                g2 in (-30i64..=30, -30i64..=30),
                scale_first in any::<bool>(),
            ) {
                let a = r.from_coords(g1.0, g1.1);
                let b = r.from_coords(g2.0, g2.1);
                prop_assume!(!a.is_zero() || !b.is_zero());
                let i = OIdeal::from_generators(r, &[a.clone(), b.clone()]).unwrap();
                let j = OIdeal::from_generators(r, &[b.clone(), a.clone()]).unwrap();
                prop_assert_eq!(&i, &j);
                let unit = r.fundamental_unit();
                let scaled = if scale_first {
                    OIdeal::from_generators(r, &[a.mul(&unit).unwrap(), b]).unwrap()
                } else {
                    OIdeal::from_generators(r, &[a, b.mul(&unit).unwrap()]).unwrap()
                };
                prop_assert_eq!(&i, &scaled);
            }

            #[test]
            fn inverse_multiplies_to_unit_ideal(
                r in any_ring(),
                g1 in (-20i64..=20, -20i64..=20),
                g2 in (-20i64..=20, -20i64..=20),
            ) {
                let a = r.from_coords(g1.0, g1.1);
                let b = r.from_coords(g2.0, g2.1);
                prop_assume!(!a.is_zero() || !b.is_zero());
                let i = OIdeal::from_generators(r, &[a, b]).unwrap();
                prop_assert!(i.mul(&i.inverse().unwrap()).unwrap().is_unit_ideal());
            }
        }
    }
}
