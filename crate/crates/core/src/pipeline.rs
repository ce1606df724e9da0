//! The constructive pipeline: row certificates from elementary
//! decompositions, integerization of the leading coordinate, the
//! principal-ideal route, the idempotent split for non-principal pairs,
//! and the top-level driver that ties them together.

use crate::certify::{Certificate, Flag};
use crate::elemdecomp::{decompose, to_alternating, AlternatingWord};
use crate::error::{Error, Result};
use crate::intlib::{self, Congruence};
use crate::mat2::{swap_identity, ConjKind, Conjugator, Mat2, Sl2Elem};
use crate::omodule::{common_divisor_noting_budget, solve_combination, solve_integer_combination, FracElem, OIdeal};
use crate::quadring::{Branch, QuadInt, RingSpec};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Search limits for the scans the construction replaces existence
/// arguments with. `IDEMFACT_BUDGET` overrides the two progression scans.
#[derive(Debug, Clone)]
pub struct Budgets {
    /// candidate cap for each prime-in-progression scan
    pub dirichlet_fmax: u64,
    /// cap on the coprimality shift scan
    pub case2_emax: u64,
    /// elementary-factor cap per decomposition
    pub elem_factors: usize,
    /// box cap for norm-form enumeration (principality, common divisors)
    pub search_height: u64,
    /// kernel-shift radius in the idempotent split
    pub gamma_radius: i64,
    /// driver recursion cap
    pub max_depth: usize,
}

impl Default for Budgets {
    fn default() -> Budgets {
        Budgets {
            dirichlet_fmax: 1_000_000,
            case2_emax: 1_000_000,
            elem_factors: 512,
            search_height: 1_000_000,
            gamma_radius: 24,
            max_depth: 16,
        }
    }
}

impl Budgets {
    /// Default budgets with the `IDEMFACT_BUDGET` environment override
    /// applied to the scan caps.
    pub fn from_env() -> Budgets {
        let mut b = Budgets::default();
        if let Ok(v) = std::env::var("IDEMFACT_BUDGET") {
            if let Ok(n) = v.trim().parse::<u64>() {
                b.dirichlet_fmax = n;
                b.case2_emax = n;
            }
        }
        b
    }

    pub fn with_scan_cap(mut self, n: u64) -> Budgets {
        self.dirichlet_fmax = n;
        self.case2_emax = n;
        self
    }
}

/// Aggregated per-run observations, reported alongside the certificate.
#[derive(Debug, Clone, Default)]
pub struct PipelineStats {
    /// largest alternating half-length any decomposition produced
    pub n0_max: usize,
    pub flags: BTreeSet<Flag>,
    pub phases: Vec<String>,
}

impl PipelineStats {
    fn phase(&mut self, s: impl Into<String>) {
        self.phases.push(s.into());
    }
}

/// The remainder chain attached to an alternating word: `r_{-1} = x`,
/// `r_0 = y`, `r_i = q_{i+1} r_{i+1} + r_{i+2}`, ending at `r_{2n0} = 0`.
#[derive(Debug, Clone)]
pub struct EuclidChain {
    pub word: AlternatingWord,
    /// `rs[k]` holds `r_{k-1}`, so the vector spans `r_{-1} ..= r_{2n0}`
    pub rs: Vec<QuadInt>,
    pub n0: usize,
}

impl EuclidChain {
    pub fn build(word: AlternatingWord, x: &QuadInt, y: &QuadInt) -> Result<EuclidChain> {
        let n0 = word.n0;
        let mut rs = Vec::with_capacity(2 * n0 + 2);
        rs.push(x.clone());
        rs.push(y.clone());
        for i in 0..2 * n0 {
            let next = rs[i].sub(&word.qs[i].mul(&rs[i + 1])?)?;
            rs.push(next);
        }
        for i in 0..2 * n0 {
            let back = word.qs[i].mul(&rs[i + 1])?.add(&rs[i + 2])?;
            if back != rs[i] {
                return Err(Error::PipelineInvariant("remainder recurrence".into()));
            }
        }
        if !rs[2 * n0 + 1].is_zero() {
            return Err(Error::ChainBroken);
        }
        Ok(EuclidChain { word, rs, n0 })
    }

    /// `r_{2n0 - 1}`, the last nonzero remainder.
    pub fn last_remainder(&self) -> &QuadInt {
        &self.rs[2 * self.n0]
    }
}

/// Certificate for a row `(x y; 0 0)` that completes to an SL2 matrix
/// `(x z; y w)` with `x w - y z = 1`. The alternating word of the
/// completion drives the remainder chain; counts come out as exactly
/// `(n0 + 2, 2 n0)`.
pub fn unimodular_row_cert(
    x: &QuadInt,
    y: &QuadInt,
    z: &QuadInt,
    w: &QuadInt,
    budgets: &Budgets,
    stats: &mut PipelineStats,
) -> Result<Certificate> {
    let ring = x.ring();
    let unim = x.mul(w)?.sub(&y.mul(z)?)?;
    if !unim.is_one() {
        return Err(Error::NotUnimodular(format!("x*w - y*z = {unim}")));
    }
    // shifting the completion by a multiple of (x, y) keeps the
    // determinant; a reduced completion keeps the word short
    let (z, w) = crate::elemdecomp::reduce_completion(x, y, z, w);
    let m = Mat2::new(x.clone(), z.clone(), y.clone(), w.clone())?;
    let dec = decompose(&m, budgets.elem_factors)?;
    let word = to_alternating(&dec.factors, &m)?;
    let n0 = word.n0;
    stats.n0_max = stats.n0_max.max(n0);
    if n0 > 9 {
        stats.flags.insert(Flag::MrsExceeded);
    }
    let chain = EuclidChain::build(word, x, y)?;
    let conjugators: Vec<Sl2Elem> = chain
        .word
        .qs
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let kind = if i % 2 == 0 { ConjKind::A21 } else { ConjKind::A12 };
            Sl2Elem::gen(kind, q.neg())
        })
        .collect();
    let mut idempotents = Vec::with_capacity(n0 + 2);
    for h in 0..n0 {
        let base = Mat2::new(ring.one(), ring.zero(), chain.word.qs[2 * h].clone(), ring.zero())?;
        idempotents.push(crate::mat2::conjugate_seq(&base, &conjugators[2 * h + 1..])?);
    }
    idempotents.push(Mat2::from_ints(ring, [1, -1, 0, 0]));
    let tail = ring.one().sub(chain.last_remainder())?;
    idempotents.push(Mat2::new(ring.one(), ring.zero(), tail, ring.zero())?);
    let mut cert = Certificate::new(Mat2::row(x.clone(), y.clone())?, conjugators, idempotents)?;
    if n0 > 9 {
        cert.add_flag(Flag::MrsExceeded);
    }
    cert.annotate(format!("unimodular row, n0 = {n0}"));
    let counts = cert.counts();
    if counts.r != n0 + 2 || counts.s != 2 * n0 {
        return Err(Error::PipelineInvariant("row certificate counts".into()));
    }
    stats.phase(format!("unimodular-row n0={n0}"));
    Ok(cert)
}

/// Certificate for `(a 0; 0 0)`: two idempotents, or one when `a` is 0 or 1.
pub fn row_with_zero_cert(a: &QuadInt) -> Result<Certificate> {
    let ring = a.ring();
    if a.is_zero() {
        return Certificate::trivial(Mat2::zero(ring));
    }
    if a.is_one() {
        return Certificate::trivial(Mat2::new(ring.one(), ring.zero(), ring.zero(), ring.zero())?);
    }
    Certificate::new(
        Mat2::row(a.clone(), ring.zero())?,
        Vec::new(),
        vec![
            Mat2::from_ints(ring, [1, -1, 0, 0]),
            Mat2::new(ring.one(), ring.zero(), ring.one().sub(a)?, ring.zero())?,
        ],
    )
}

/// Certificate for `(x 0; +-1 0)`: one conjugation to a unimodular row,
/// then the row certificate.
pub fn column_unit_cert(
    x: &QuadInt,
    sign: i8,
    budgets: &Budgets,
    stats: &mut PipelineStats,
) -> Result<Certificate> {
    let ring = x.ring();
    let (target, conj, row_y, z, w) = if sign >= 0 {
        // (x 0; 1 0) conjugated by a11 at -x gives (x -1; 0 0)
        (
            Mat2::new(x.clone(), ring.zero(), ring.one(), ring.zero())?,
            Conjugator::new(ConjKind::A11, x.neg()),
            ring.int(-1),
            ring.one(),
            ring.zero(),
        )
    } else {
        // (x 0; -1 0) conjugated by a11 at x gives (x 1; 0 0)
        (
            Mat2::new(x.clone(), ring.zero(), ring.int(-1), ring.zero())?,
            Conjugator::new(ConjKind::A11, x.clone()),
            ring.one(),
            ring.int(-1),
            ring.zero(),
        )
    };
    let inner = unimodular_row_cert(x, &row_y, &z, &w, budgets, stats)?;
    let cert = inner.conjugate_preimage(&[Sl2Elem::Gen(conj)])?;
    if cert.target() != &target {
        return Err(Error::PipelineInvariant("column certificate target".into()));
    }
    Ok(cert)
}

/// Certificate for a pair generating the principal ideal of `z`: strip `z`
/// as two idempotent prefactors, then certify the unimodular quotient row.
pub fn principal_row_cert(
    x: &QuadInt,
    y: &QuadInt,
    z: &QuadInt,
    budgets: &Budgets,
    stats: &mut PipelineStats,
) -> Result<Certificate> {
    if z.is_zero() {
        return Err(Error::NotPrincipalWitness("zero generator".into()));
    }
    if !z.divides(x) || !z.divides(y) {
        return Err(Error::NotPrincipalWitness(format!(
            "{z} does not divide both {x} and {y}"
        )));
    }
    let x1 = x.exact_div(z)?;
    let y1 = y.exact_div(z)?;
    let comb = solve_combination(&[x1.clone(), y1.clone()], &x.ring().one())
        .map_err(|_| Error::NotPrincipalWitness("quotient pair is not unimodular".into()))?;
    let inner = unimodular_row_cert(&x1, &y1, &comb[1].neg(), &comb[0], budgets, stats)?;
    let ring = x.ring();
    let cert = inner.left_mul_idempotents(&[
        Mat2::from_ints(ring, [1, -1, 0, 0]),
        Mat2::new(ring.one(), ring.zero(), ring.one().sub(z)?, ring.zero())?,
    ])?;
    if cert.target() != &Mat2::row(x.clone(), y.clone())? {
        return Err(Error::PipelineInvariant("principal certificate target".into()));
    }
    stats.phase(format!("principal z={z}"));
    Ok(cert)
}

// --- integerization --------------------------------------------------------

/// Deferred certificate wrapping: operations that turn a certificate for
/// the reduced row into one for the original row.
#[derive(Debug, Clone, Default)]
pub struct CertBuilder {
    ops: Vec<BuildOp>,
}

#[derive(Debug, Clone)]
enum BuildOp {
    /// prepend conjugators (the target is the preimage)
    Prepend(Vec<Sl2Elem>),
    /// prefix idempotent factors on the left
    Prefix(Vec<Mat2>),
}

impl CertBuilder {
    fn prepend(&mut self, cs: Vec<Sl2Elem>) {
        self.ops.push(BuildOp::Prepend(cs));
    }

    fn prefix(&mut self, es: Vec<Mat2>) {
        self.ops.push(BuildOp::Prefix(es));
    }

    pub fn apply(&self, inner: Certificate) -> Result<Certificate> {
        let mut cert = inner;
        for op in &self.ops {
            cert = match op {
                BuildOp::Prepend(cs) => cert.conjugate_preimage(cs)?,
                BuildOp::Prefix(es) => cert.left_mul_idempotents(es)?,
            };
        }
        Ok(cert)
    }
}

/// Bezout data behind a shift step.
#[derive(Debug, Clone)]
pub struct ShiftPlan {
    pub a0: BigInt,
    pub b0: BigInt,
    pub a: BigInt,
    pub b: BigInt,
    pub conjugator: Conjugator,
}

/// Everything the coprimality-restoring shift of the double-gcd case
/// computes, kept for inspection and tests.
#[derive(Debug, Clone)]
pub struct DoubleGcdContext {
    pub lambda: BigInt,
    pub epsilon: BigInt,
    pub z1: BigInt,
    pub z2: BigInt,
    pub w1: BigInt,
    pub w2: BigInt,
    /// primes dividing `z1 w2 - z2 w1`
    pub disc_set: BTreeSet<BigInt>,
    pub j_set: BTreeSet<BigInt>,
    pub x_set: BTreeSet<BigInt>,
    pub y_set: BTreeSet<BigInt>,
    /// chosen residue per prime of `j_set`
    pub residues: Vec<(BigInt, BigInt)>,
    pub u: BigInt,
    /// product of `j_set`
    pub p_modulus: BigInt,
    pub f: BigInt,
    /// the progression prime, or the unit `w1` in the degenerate `z1 = 0` case
    pub p: BigInt,
    pub e: BigInt,
    pub y1p: BigInt,
    pub y2p: BigInt,
    /// true when the odd gcd driving the construction was `lambda`
    pub lambda_side: bool,
    /// set when the progression search actually ran
    pub prime_searched: bool,
}

/// Outcome of integerization: the reduced row `(h, beta)` plus the wrapper
/// that lifts a certificate for it back to the original row, or a finished
/// certificate when the proportional split closes the factorization.
#[derive(Debug, Clone)]
pub enum Integerized {
    Reduced(IntegerizeResult, CertBuilder),
    Done(Certificate),
}

#[derive(Debug, Clone)]
pub struct IntegerizeResult {
    pub h: BigInt,
    pub beta: QuadInt,
    pub steps: Vec<String>,
    pub shift: Option<ShiftPlan>,
    pub double_gcd: Option<DoubleGcdContext>,
}

/// The two idempotents whose product is the swap prefactor `(0 0; 1 0)`.
fn swap_prefactor_idempotents(ring: RingSpec) -> Vec<Mat2> {
    vec![
        Mat2::from_ints(ring, [0, 0, 1, 1]),
        Mat2::from_ints(ring, [1, 0, 0, 0]),
    ]
}

/// Single-coordinate-coprime shift: Bezout data and the conjugator taking
/// `(x, y)` to `(x, H)` with `H` rational. Returns `(plan, h)`.
fn clearing_shift(x: &QuadInt, y: &QuadInt) -> Result<(ShiftPlan, BigInt)> {
    let ring = x.ring();
    let (x1, x2) = x.to_coords();
    let (y1, y2) = y.to_coords();
    let (u1, u2) = match ring.branch() {
        Branch::TwoThreeMod4 => (x1.clone(), x2.clone()),
        Branch::OneMod4 => (&x1 + &x2, x2.clone()),
    };
    let (g0, a0, b0) = intlib::ext_gcd(&u1, &u2);
    if !g0.is_one() {
        return Err(Error::PreconditionViolated(
            "leading coordinates are not coprime".into(),
        ));
    }
    let cleared = |a0: &BigInt, b0: &BigInt| -> BigInt {
        let scale = match ring.branch() {
            Branch::TwoThreeMod4 => BigInt::from(ring.alpha()),
            Branch::OneMod4 => BigInt::from((ring.alpha() - 1) / 4),
        };
        -(b0 * &y2) * &x1 + -(a0 * &y2) * &x2 * scale + &y1
    };
    // the Bezout family (a0 + t u2, b0 - t u1) moves the cleared value by
    // t * y2 * norm(x); the balanced member keeps it small
    let step = &y2 * x.norm();
    let (a0, b0) = if step.is_zero() {
        (a0, b0)
    } else {
        let t = intlib::round_div(&-cleared(&a0, &b0), &step);
        (&a0 + &t * &u2, &b0 - &t * &u1)
    };
    let a = -&a0 * &y2;
    let b = -&b0 * &y2;
    let shift_el = ring.from_coords(b.clone(), a.clone());
    let shifted = x.mul(&shift_el)?.add(y)?;
    let h_expect = cleared(&a0, &b0);
    let shifted_int = shifted
        .rational_part()
        .ok_or_else(|| Error::PipelineInvariant("shift did not clear the irrational part".into()))?;
    if shifted_int != h_expect {
        return Err(Error::PipelineInvariant("shift closed form".into()));
    }
    let plan = ShiftPlan {
        a0,
        b0,
        a,
        b,
        conjugator: Conjugator::new(ConjKind::A12, shift_el),
    };
    Ok((plan, -h_expect))
}

/// Case analysis on the coordinates of `(x, y)`; see `Integerized`.
pub fn integerize(
    x: &QuadInt,
    y: &QuadInt,
    budgets: &Budgets,
    stats: &mut PipelineStats,
) -> Result<Integerized> {
    let ring = x.ring();
    let (x1, x2) = x.to_coords();
    let (y1, y2) = y.to_coords();
    let mut steps = Vec::new();

    if x2.is_zero() {
        steps.push("integerize: leading coordinate already rational".into());
        return Ok(Integerized::Reduced(
            IntegerizeResult {
                h: x1,
                beta: y.clone(),
                steps,
                shift: None,
                double_gcd: None,
            },
            CertBuilder::default(),
        ));
    }
    if y2.is_zero() {
        // swap: (x y1) -> prefactor * (-y1 x)
        swap_identity(x, y)?;
        let mut builder = CertBuilder::default();
        builder.prefix(swap_prefactor_idempotents(ring));
        builder.prepend(vec![Sl2Elem::gen(ConjKind::A22, ring.zero())]);
        steps.push("integerize: swap onto rational second coordinate".into());
        return Ok(Integerized::Reduced(
            IntegerizeResult {
                h: -y1,
                beta: x.clone(),
                steps,
                shift: None,
                double_gcd: None,
            },
            builder,
        ));
    }
    if x1.is_zero() && y1.is_zero() {
        // common generator factor: (x y) = (w 0; ...) * (x2 y2)
        let omega = ring.omega();
        let mut builder = CertBuilder::default();
        builder.prefix(vec![
            Mat2::from_ints(ring, [1, -1, 0, 0]),
            Mat2::new(ring.one(), ring.zero(), ring.one().sub(&omega)?, ring.zero())?,
        ]);
        steps.push("integerize: generator factored out of both coordinates".into());
        return Ok(Integerized::Reduced(
            IntegerizeResult {
                h: x2,
                beta: ring.from_int(y2),
                steps,
                shift: None,
                double_gcd: None,
            },
            builder,
        ));
    }

    let s = x1.gcd(&x2);
    let r = y1.gcd(&y2);
    if s.is_one() {
        let (plan, h) = clearing_shift(x, y)?;
        let mut builder = CertBuilder::default();
        builder.prefix(swap_prefactor_idempotents(ring));
        builder.prepend(vec![
            Sl2Elem::Gen(plan.conjugator.clone()),
            Sl2Elem::gen(ConjKind::A22, ring.zero()),
        ]);
        steps.push("integerize: coprime leading coordinates, shift and swap".into());
        return Ok(Integerized::Reduced(
            IntegerizeResult {
                h,
                beta: x.clone(),
                steps,
                shift: Some(plan),
                double_gcd: None,
            },
            builder,
        ));
    }
    if r.is_one() {
        // swap first, then the coprime-leading case on (-y, x)
        let ny = y.neg();
        let (plan, h) = clearing_shift(&ny, x)?;
        let mut builder = CertBuilder::default();
        builder.prefix(swap_prefactor_idempotents(ring));
        builder.prepend(vec![
            Sl2Elem::Gen(plan.conjugator.clone()),
            Sl2Elem::gen(ConjKind::A22, ring.zero()),
        ]);
        builder.prefix(swap_prefactor_idempotents(ring));
        builder.prepend(vec![Sl2Elem::gen(ConjKind::A22, ring.zero())]);
        steps.push("integerize: coprime trailing coordinates, swap then shift".into());
        return Ok(Integerized::Reduced(
            IntegerizeResult {
                h,
                beta: ny,
                steps,
                shift: Some(plan),
                double_gcd: None,
            },
            builder,
        ));
    }

    // both gcds exceed 1
    let delta = s.gcd(&r);
    if !delta.is_one() {
        // strip the shared rational content as two idempotent prefactors
        let delta_el = ring.from_int(delta.clone());
        let xq = x.exact_div(&delta_el)?;
        let yq = y.exact_div(&delta_el)?;
        steps.push(format!("integerize: shared content {delta} stripped"));
        stats.phase(format!("integerize-strip delta={delta}"));
        let prefactors = vec![
            Mat2::from_ints(ring, [1, -1, 0, 0]),
            Mat2::new(ring.one(), ring.zero(), ring.one().sub(&delta_el)?, ring.zero())?,
        ];
        return match integerize(&xq, &yq, budgets, stats)? {
            Integerized::Done(cert) => Ok(Integerized::Done(cert.left_mul_idempotents(&prefactors)?)),
            Integerized::Reduced(mut res, mut builder) => {
                builder.prefix(prefactors);
                res.steps.extend(steps);
                Ok(Integerized::Reduced(res, builder))
            }
        };
    }

    let lambda = x1.gcd(&y1);
    let epsilon = x2.gcd(&y2);
    if !lambda.gcd(&epsilon).is_one() {
        return Err(Error::PipelineInvariant("gcd(lambda, epsilon) = 1".into()));
    }
    let z1 = &x1 / &lambda;
    let w1 = &y1 / &lambda;
    let z2 = &x2 / &epsilon;
    let w2 = &y2 / &epsilon;
    let disc = &z1 * &w2 - &z2 * &w1;

    if disc.is_zero() {
        // proportional rows: split off the common factor and certify both
        // pieces outright
        let delta_sign = &z1 / &z2;
        if (&delta_sign * &z2 != z1) || delta_sign.abs() != BigInt::one() {
            return Err(Error::PipelineInvariant("proportional sign".into()));
        }
        let g = ring.from_coords(&lambda * &delta_sign, epsilon.clone());
        let z2_el = ring.from_int(z2.clone());
        let w2_el = ring.from_int(w2.clone());
        if g.mul(&z2_el)? != *x || g.mul(&w2_el)? != *y {
            return Err(Error::PipelineInvariant("proportional factorization".into()));
        }
        let left = row_with_zero_cert(&g)?;
        let (g0, u0, v0) = intlib::ext_gcd(&z2, &w2);
        if !g0.is_one() {
            return Err(Error::PipelineInvariant("proportional quotients coprime".into()));
        }
        let right = unimodular_row_cert(
            &z2_el,
            &w2_el,
            &ring.from_int(-v0),
            &ring.from_int(u0),
            budgets,
            stats,
        )?;
        let mut cert = Certificate::multiply(&left, &right)?;
        if cert.target() != &Mat2::row(x.clone(), y.clone())? {
            return Err(Error::PipelineInvariant("proportional product target".into()));
        }
        cert.annotate("integerize: proportional split");
        stats.phase("integerize-proportional");
        return Ok(Integerized::Done(cert));
    }

    let ctx = double_gcd_shift(&x1, &x2, &y1, &y2, budgets)?;
    stats.phase(format!(
        "integerize-double-gcd {} e={}",
        if ctx.lambda_side { "lambda" } else { "epsilon" },
        ctx.e
    ));
    let e_el = ring.from_int(ctx.e.clone());
    let y_shifted = y.add(&x.mul(&e_el)?)?;
    let (sy1, sy2) = y_shifted.to_coords();
    if sy1 != ctx.y1p || sy2 != ctx.y2p {
        return Err(Error::PipelineInvariant("coprimality shift closed form".into()));
    }
    // now gcd of the shifted trailing coordinates is 1: swap then shift
    let ny = y_shifted.neg();
    let (plan, h) = clearing_shift(&ny, x)?;
    let mut builder = CertBuilder::default();
    builder.prefix(swap_prefactor_idempotents(ring));
    builder.prepend(vec![
        Sl2Elem::Gen(plan.conjugator.clone()),
        Sl2Elem::gen(ConjKind::A22, ring.zero()),
    ]);
    builder.prefix(swap_prefactor_idempotents(ring));
    builder.prepend(vec![Sl2Elem::gen(ConjKind::A22, ring.zero())]);
    builder.prepend(vec![Sl2Elem::gen(ConjKind::A12, e_el)]);
    steps.push(format!(
        "integerize: coprimality shift e = {} (prime {})",
        ctx.e, ctx.p
    ));
    Ok(Integerized::Reduced(
        IntegerizeResult {
            h,
            beta: ny,
            steps,
            shift: Some(plan),
            double_gcd: Some(ctx),
        },
        builder,
    ))
}

/// Builds the CRT data and progression prime restoring coprimality of the
/// trailing coordinates when both coordinate gcds exceed 1. Preconditions:
/// `x2, y2` nonzero, not both of `x1, y1` zero, `gcd(s, r) = 1`, and
/// `z1 w2 - z2 w1` nonzero.
pub fn double_gcd_shift(
    x1: &BigInt,
    x2: &BigInt,
    y1: &BigInt,
    y2: &BigInt,
    budgets: &Budgets,
) -> Result<DoubleGcdContext> {
    let lambda = x1.gcd(y1);
    let epsilon = x2.gcd(y2);
    if lambda.is_zero() || epsilon.is_zero() {
        return Err(Error::PreconditionViolated("degenerate coordinate pair".into()));
    }
    if !lambda.gcd(&epsilon).is_one() {
        return Err(Error::PipelineInvariant("gcd(lambda, epsilon) = 1".into()));
    }
    let z1 = x1 / &lambda;
    let w1 = y1 / &lambda;
    let z2 = x2 / &epsilon;
    let w2 = y2 / &epsilon;
    let disc = &z1 * &w2 - &z2 * &w1;
    if disc.is_zero() {
        return Err(Error::PreconditionViolated("proportional pair".into()));
    }
    let disc_set = intlib::prime_divisors(&disc)?;
    let lambda_side = lambda.is_odd();
    if !lambda_side && epsilon.is_even() {
        return Err(Error::PipelineInvariant("one of the gcds must be odd".into()));
    }

    // the side whose primes constrain the shift
    let (side, za, wa, zb, wb, coprime_to) = if lambda_side {
        (&lambda, &z1, &w1, &z2, &w2, &epsilon)
    } else {
        (&epsilon, &z2, &w2, &z1, &w1, &lambda)
    };
    // j_set: primes of the side where the OTHER numerator is invertible
    let side_primes = intlib::prime_divisors(side).unwrap_or_default();
    let mut j_set = BTreeSet::new();
    let mut x_set = BTreeSet::new();
    let mut y_set = BTreeSet::new();
    for ell in side_primes {
        if (zb % &ell).is_zero() {
            continue;
        }
        j_set.insert(ell.clone());
        if (za % &ell).is_zero() {
            x_set.insert(ell);
        } else {
            y_set.insert(ell);
        }
    }
    let mut residues = Vec::new();
    let mut congs = Vec::new();
    for ell in &j_set {
        if ell.is_even() {
            return Err(Error::PipelineInvariant("even prime in the residue system".into()));
        }
        // forbidden residues: u = -za^-1 wa and u = -zb^-1 wb (mod ell),
        // the first only when za is invertible
        let mut banned = Vec::new();
        let zb_inv = intlib::mod_inverse(zb, ell).expect("invertible by j_set membership");
        banned.push(((-&zb_inv * wb) % ell + ell) % ell);
        if y_set.contains(ell) {
            let za_inv = intlib::mod_inverse(za, ell).expect("invertible in y_set");
            banned.push(((-&za_inv * wa) % ell + ell) % ell);
        }
        let mut pick = BigInt::zero();
        while banned.contains(&pick) {
            pick += 1;
        }
        if &pick >= ell {
            return Err(Error::PipelineInvariant("residue choice".into()));
        }
        residues.push((ell.clone(), pick.clone()));
        congs.push(Congruence::new(pick, ell.clone()));
    }
    let (u, p_modulus) = if j_set.is_empty() {
        (BigInt::one(), BigInt::one())
    } else {
        let c = intlib::crt(&congs)?;
        (c.residue, c.modulus)
    };

    let (f, p, e, prime_searched) = if za.is_zero() {
        // the side numerator vanished: its cofactor is a unit and no prime
        // is needed; the CRT residue alone fixes coprimality
        if wa.abs() != BigInt::one() {
            return Err(Error::PipelineInvariant("unit cofactor in degenerate shift".into()));
        }
        (BigInt::zero(), wa.clone(), u.clone(), false)
    } else {
        let a = za * &p_modulus;
        let b = za * &u + wa;
        // doubling retry before giving up on the progression scan
        let mut found = None;
        let mut cap = budgets.dirichlet_fmax.max(1);
        for _ in 0..3 {
            match intlib::dirichlet_prime_search(&a, &b, &disc_set, coprime_to, cap) {
                Ok(hit) => {
                    found = Some(hit);
                    break;
                }
                Err(Error::BudgetExhausted(_)) => cap = cap.saturating_mul(2),
                Err(e) => return Err(e),
            }
        }
        let found = found.ok_or_else(|| {
            Error::BudgetExhausted(format!("no prime in progression {a}*f+{b} within {cap}"))
        })?;
        let e = &p_modulus * &found.f + &u;
        if za * &e + wa != found.p {
            return Err(Error::PipelineInvariant("progression bookkeeping".into()));
        }
        (found.f, found.p, e, true)
    };

    let y1p = y1 + &e * x1;
    let y2p = y2 + &e * x2;
    if !y1p.gcd(&y2p).is_one() {
        return Err(Error::PipelineInvariant(
            "shifted trailing coordinates are not coprime".into(),
        ));
    }
    Ok(DoubleGcdContext {
        lambda,
        epsilon,
        z1,
        z2,
        w1,
        w2,
        disc_set,
        j_set,
        x_set,
        y_set,
        residues,
        u,
        p_modulus,
        f,
        p,
        e,
        y1p,
        y2p,
        lambda_side,
        prime_searched,
    })
}

// --- non-principal pairs ----------------------------------------------------

/// Output of the idempotent split: `(x y; 0 0) = (x' y'; 0 0) * E` with
/// `E` idempotent and `(x', y')` unimodular with the returned cofactors.
#[derive(Debug, Clone)]
pub struct RowSplit {
    pub e: Mat2,
    pub xp: QuadInt,
    pub yp: QuadInt,
    /// completion `(x' z; y' w)` in SL2
    pub cof_z: QuadInt,
    pub cof_w: QuadInt,
}

/// Property check shared by the implementation and its tests: idempotency,
/// trace 1, zero determinant, the row product identity, and unimodularity
/// of the split pair.
pub fn check_idempotent_split(x: &QuadInt, y: &QuadInt, split: &RowSplit) -> Result<()> {
    let ring = x.ring();
    let e = &split.e;
    if !e.is_idempotent() {
        return Err(Error::VerifyFailed("split factor is not idempotent".into()));
    }
    let tr = e.entries()[0].add(&e.entries()[3])?;
    if !tr.is_one() {
        return Err(Error::VerifyFailed("split factor trace is not 1".into()));
    }
    if !e.det().is_zero() {
        return Err(Error::VerifyFailed("split factor determinant is not 0".into()));
    }
    let row = Mat2::row(split.xp.clone(), split.yp.clone())?;
    if row.mul(e)? != Mat2::row(x.clone(), y.clone())? {
        return Err(Error::VerifyFailed("split row product mismatch".into()));
    }
    let unim = split
        .xp
        .mul(&split.cof_w)?
        .sub(&split.yp.mul(&split.cof_z)?)?;
    if !unim.is_one() {
        return Err(Error::VerifyFailed("split pair is not unimodular".into()));
    }
    let _ = ring;
    Ok(())
}

/// The split construction itself, with no precondition on the leading
/// entry: pick `s, t` in the inverse ideal with `x s + y t = 1`, set
/// `E = (xs ys; xt yt)`, and walk the solution coset `(x + gt, y - gs)`
/// until the complementary pair is unimodular; among the unimodular
/// candidates in reach, the smallest by norm is kept.
fn split_unchecked(x: &QuadInt, y: &QuadInt, budgets: &Budgets) -> Result<RowSplit> {
    let ring = x.ring();
    let ideal = OIdeal::from_generators(ring, &[x.clone(), y.clone()])?;
    let inv = ideal.inverse()?;
    let [b1, b2] = inv.basis_elements();
    let to_quad = |f: &FracElem| -> Result<QuadInt> {
        f.as_quadint()
            .ok_or_else(|| Error::PipelineInvariant("inverse-ideal product not integral".into()))
    };
    let cols = vec![
        to_quad(&b1.mul_quadint(x))?,
        to_quad(&b2.mul_quadint(x))?,
        to_quad(&b1.mul_quadint(y))?,
        to_quad(&b2.mul_quadint(y))?,
    ];
    let sol = solve_integer_combination(&cols, &ring.one()).ok_or_else(|| {
        Error::PipelineInvariant("no inverse-ideal solution of x s + y t = 1".into())
    })?;
    let s_el = b1.scale(&sol[0]).add(&b2.scale(&sol[1]));
    let t_el = b1.scale(&sol[2]).add(&b2.scale(&sol[3]));
    let e = Mat2::new(
        to_quad(&s_el.mul_quadint(x))?,
        to_quad(&s_el.mul_quadint(y))?,
        to_quad(&t_el.mul_quadint(x))?,
        to_quad(&t_el.mul_quadint(y))?,
    )?;
    let mut best: Option<(BigInt, RowSplit)> = None;
    let mut found_shell: Option<i64> = None;
    for (gamma, shell) in ideal.small_elements_with_shell(budgets.gamma_radius) {
        if found_shell.is_some_and(|s| shell > s + 1) {
            break;
        }
        let xp = x.add(&to_quad(&t_el.mul_quadint(&gamma))?)?;
        let yp = y.sub(&to_quad(&s_el.mul_quadint(&gamma))?)?;
        let Ok(comb) = solve_combination(&[xp.clone(), yp.clone()], &ring.one()) else {
            continue;
        };
        found_shell.get_or_insert(shell);
        let size = xp.norm().abs() * yp.norm().abs();
        if best.as_ref().is_some_and(|(b, _)| b <= &size) {
            continue;
        }
        let split = RowSplit {
            e: e.clone(),
            xp,
            yp,
            cof_z: comb[1].neg(),
            cof_w: comb[0].clone(),
        };
        check_idempotent_split(x, y, &split)?;
        best = Some((size, split));
    }
    best.map(|(_, s)| s).ok_or(Error::NoUnimodularSolution)
}

/// Realizes the idempotent split for a rational `x` whose pair ideal need
/// not be principal. The preconditions are the ones under which the coset
/// walk is guaranteed to succeed; the construction itself is checked per
/// call either way.
pub fn idempotent_split(x: &QuadInt, y: &QuadInt, budgets: &Budgets) -> Result<RowSplit> {
    let xi = x
        .rational_part()
        .ok_or_else(|| Error::PreconditionViolated("leading entry must be rational".into()))?;
    let ny = y.norm();
    let m = xi.gcd(&ny);
    if m.is_one() {
        return Err(Error::PreconditionViolated("gcd(x, norm y) = 1".into()));
    }
    let s_val = xi.gcd(&(&ny / &m));
    if !s_val.is_one() {
        return Err(Error::PreconditionViolated("gcd(x, norm y / m) != 1".into()));
    }
    split_unchecked(x, y, budgets)
}

/// Smallest `e >= 0` restoring `gcd(x, norm(y + e x)/m) = 1`; also asserts
/// `gcd(x, norm(y + e x)) = m` before returning.
pub fn coprimality_shift(x: &QuadInt, y: &QuadInt, m: &BigInt, budgets: &Budgets) -> Result<BigInt> {
    let xi = x
        .rational_part()
        .ok_or_else(|| Error::PreconditionViolated("leading entry must be rational".into()))?;
    let ny = y.norm();
    if &xi.gcd(&ny) != m || m.is_one() {
        return Err(Error::PreconditionViolated("m must be gcd(x, norm y) != 1".into()));
    }
    let tr = y.trace();
    let mut e = BigInt::zero();
    for _ in 0..=budgets.case2_emax {
        // norm(y + e x) = norm(y) + e x tr(y) + e^2 x^2 for rational x
        let shifted = &ny + &e * &xi * &tr + &e * &e * &xi * &xi;
        let (q, rem) = shifted.div_rem(m);
        if !rem.is_zero() {
            return Err(Error::PipelineInvariant("m must divide the shifted norm".into()));
        }
        if xi.gcd(&q).is_one() {
            if &xi.gcd(&shifted) != m {
                return Err(Error::PipelineInvariant("shifted gcd is not m".into()));
            }
            return Ok(e);
        }
        e += 1;
    }
    Err(Error::BudgetExhausted(format!(
        "no coprimality shift within {} candidates",
        budgets.case2_emax
    )))
}

// --- driver -----------------------------------------------------------------

/// Factors the singular row `(x y; 0 0)` into a verified certificate.
pub fn factor_singular_row(
    x: &QuadInt,
    y: &QuadInt,
    budgets: &Budgets,
) -> Result<(Certificate, PipelineStats)> {
    let mut stats = PipelineStats::default();
    let mut cert = drive(x, y, budgets, &mut stats, 0)?;
    for f in &stats.flags {
        cert.add_flag(*f);
    }
    for f in cert.flags().clone() {
        stats.flags.insert(f);
    }
    let counts = cert.counts();
    let conforming = counts.r <= 15 && counts.s <= 19 && cert.flags().is_empty();
    cert.annotate(format!(
        "counts {counts} against the (15, 19) target: {}",
        if conforming { "within" } else { "outside" }
    ));
    cert.verify()?;
    Ok((cert, stats))
}

fn drive(
    x: &QuadInt,
    y: &QuadInt,
    budgets: &Budgets,
    stats: &mut PipelineStats,
    depth: usize,
) -> Result<Certificate> {
    if depth > budgets.max_depth {
        return Err(Error::PipelineInvariant("driver recursion depth".into()));
    }
    let ring = x.ring();
    if y.is_zero() {
        stats.phase("degenerate: zero second entry");
        return row_with_zero_cert(x);
    }
    if x.is_zero() {
        // swap to (-y 0), certify, and lift back
        stats.phase("degenerate: zero first entry");
        swap_identity(x, y)?;
        let inner = row_with_zero_cert(&y.neg())?;
        let cert = inner
            .left_mul_idempotents(&swap_prefactor_idempotents(ring))?
            .conjugate_preimage(&[Sl2Elem::gen(ConjKind::A22, ring.zero())])?;
        return Ok(cert);
    }
    if let Ok(comb) = solve_combination(&[x.clone(), y.clone()], &ring.one()) {
        return unimodular_row_cert(x, y, &comb[1].neg(), &comb[0], budgets, stats);
    }
    let ideal = OIdeal::from_generators(ring, &[x.clone(), y.clone()])?;
    let (gen, truncated) = ideal.is_principal_noting_budget(budgets.search_height);
    if truncated {
        // an empty answer from a truncated box is only "treated as
        // non-principal"; the certificate says so
        stats.flags.insert(Flag::BudgetHit);
    }
    if let Some(z) = gen {
        return principal_row_cert(x, y, &z, budgets, stats);
    }
    let (divisor, truncated) = common_divisor_noting_budget(x, y, budgets.search_height);
    if truncated {
        stats.flags.insert(Flag::BudgetHit);
    }
    if let Some(z) = divisor {
        let xq = x.exact_div(&z)?;
        let yq = y.exact_div(&z)?;
        if x.is_rational() && !xq.is_rational() {
            // the quotient left the rational line; the recursion will
            // integerize again
            stats.flags.insert(Flag::RestripOccurred);
        }
        stats.phase(format!("strip z={z}"));
        let inner = drive(&xq, &yq, budgets, stats, depth + 1)?;
        return inner.left_mul_idempotents(&[
            Mat2::from_ints(ring, [1, -1, 0, 0]),
            Mat2::new(ring.one(), ring.zero(), ring.one().sub(&z)?, ring.zero())?,
        ]);
    }
    if !x.is_rational() {
        // the split construction is checked per call and does not need a
        // rational leading entry; when its coset walk succeeds it is far
        // cheaper than integerizing first
        if let Ok(split) = split_unchecked(x, y, budgets) {
            stats.phase("idempotent split (direct)");
            let row_cert = unimodular_row_cert(
                &split.xp,
                &split.yp,
                &split.cof_z,
                &split.cof_w,
                budgets,
                stats,
            )?;
            let e_cert = Certificate::trivial(split.e.clone())?;
            let cert = Certificate::multiply(&row_cert, &e_cert)?;
            if cert.target() != &Mat2::row(x.clone(), y.clone())? {
                return Err(Error::PipelineInvariant("direct split target".into()));
            }
            return Ok(cert);
        }
        return match integerize(x, y, budgets, stats)? {
            Integerized::Done(cert) => Ok(cert),
            Integerized::Reduced(res, builder) => {
                let h_el = ring.from_int(res.h.clone());
                let inner = drive(&h_el, &res.beta, budgets, stats, depth + 1)?;
                let mut cert = builder.apply(inner)?;
                for s in &res.steps {
                    cert.annotate(s.clone());
                }
                if cert.target() != &Mat2::row(x.clone(), y.clone())? {
                    return Err(Error::PipelineInvariant("integerize wrapper target".into()));
                }
                Ok(cert)
            }
        };
    }

    // rational leading entry, non-principal pair ideal, nothing to strip
    let xi = x.rational_part().expect("rational");
    let ny = y.norm();
    let m = xi.gcd(&ny);
    if m.is_one() {
        return Err(Error::PipelineInvariant(
            "coprime pair escaped the unimodular route".into(),
        ));
    }
    let s_val = xi.gcd(&(&ny / &m));
    let (y_eff, shift_e) = if s_val.is_one() {
        (y.clone(), None)
    } else {
        let e = coprimality_shift(x, y, &m, budgets)?;
        stats.phase(format!("coprimality shift e={e}"));
        let e_el = ring.from_int(e.clone());
        (y.add(&x.mul(&e_el)?)?, Some(e_el))
    };
    let split = idempotent_split(x, &y_eff, budgets)?;
    stats.phase("idempotent split");
    let row_cert = unimodular_row_cert(
        &split.xp,
        &split.yp,
        &split.cof_z,
        &split.cof_w,
        budgets,
        stats,
    )?;
    let e_cert = Certificate::trivial(split.e.clone())?;
    let mut cert = Certificate::multiply(&row_cert, &e_cert)?;
    if let Some(e_el) = shift_e {
        cert = cert.conjugate_preimage(&[Sl2Elem::gen(ConjKind::A12, e_el)])?;
    }
    if cert.target() != &Mat2::row(x.clone(), y.clone())? {
        return Err(Error::PipelineInvariant("split route target".into()));
    }
    Ok(cert)
}
