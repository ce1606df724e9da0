//! Certificates witnessing that a target matrix, conjugated through a list
//! of SL2 elements, equals a product of idempotent matrices. Verification
//! recomputes everything from scratch; the composition operations below
//! always hand back certificates that have already been re-verified.

use crate::error::{Error, Result};
use crate::mat2::{conjugate_seq, reversed_inverses, ConjKind, Conjugator, Mat2, Sl2Elem};
use crate::quadring::RingSpec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Abnormal events observed while a certificate was being built. Flags only
/// accumulate through composition, never disappear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Flag {
    BudgetHit,
    MrsExceeded,
    RestripOccurred,
}

impl Flag {
    pub fn label(&self) -> &'static str {
        match self {
            Flag::BudgetHit => "BudgetHit",
            Flag::MrsExceeded => "MrsExceeded",
            Flag::RestripOccurred => "RestripOccurred",
        }
    }

    pub fn from_label(s: &str) -> Option<Flag> {
        match s {
            "BudgetHit" => Some(Flag::BudgetHit),
            "MrsExceeded" => Some(Flag::MrsExceeded),
            "RestripOccurred" => Some(Flag::RestripOccurred),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    target: Mat2,
    conjugators: Vec<Sl2Elem>,
    idempotents: Vec<Mat2>,
    flags: BTreeSet<Flag>,
    annotations: Vec<String>,
}

/// Realized counts: `r` idempotent factors, `s` conjugators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub r: usize,
    pub s: usize,
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(r={}, s={})", self.r, self.s)
    }
}

impl Certificate {
    /// Checked constructor: the witness equation must verify.
    pub fn new(
        target: Mat2,
        conjugators: Vec<Sl2Elem>,
        idempotents: Vec<Mat2>,
    ) -> Result<Certificate> {
        let cert = Certificate {
            target,
            conjugators,
            idempotents,
            flags: BTreeSet::new(),
            annotations: Vec::new(),
        };
        cert.verify()?;
        Ok(cert)
    }

    /// A certificate for an idempotent matrix: itself, with no conjugators.
    pub fn trivial(m: Mat2) -> Result<Certificate> {
        if !m.is_idempotent() {
            return Err(Error::NotIdempotent);
        }
        Certificate::new(m.clone(), Vec::new(), vec![m])
    }

    pub fn target(&self) -> &Mat2 {
        &self.target
    }

    pub fn ring(&self) -> RingSpec {
        self.target.ring()
    }

    pub fn conjugators(&self) -> &[Sl2Elem] {
        &self.conjugators
    }

    pub fn idempotents(&self) -> &[Mat2] {
        &self.idempotents
    }

    pub fn counts(&self) -> Counts {
        Counts {
            r: self.idempotents.len(),
            s: self.conjugators.len(),
        }
    }

    pub fn flags(&self) -> &BTreeSet<Flag> {
        &self.flags
    }

    pub fn annotations(&self) -> &[String] {
        &self.annotations
    }

    pub fn add_flag(&mut self, flag: Flag) {
        self.flags.insert(flag);
    }

    pub fn annotate(&mut self, note: impl Into<String>) {
        self.annotations.push(note.into());
    }

    fn inherit(&mut self, parents: &[&Certificate]) {
        for p in parents {
            self.flags.extend(p.flags.iter().copied());
            self.annotations.extend(p.annotations.iter().cloned());
        }
    }

    /// Recomputes the conjugated target and the idempotent product from
    /// scratch, re-checking SL2 membership and idempotency of every factor.
    pub fn verify(&self) -> Result<()> {
        if self.idempotents.is_empty() {
            return Err(Error::VerifyFailed("no idempotent factors".into()));
        }
        for (i, c) in self.conjugators.iter().enumerate() {
            if !c.matrix().in_sl2() {
                return Err(Error::VerifyFailed(format!(
                    "conjugator {i} is not in SL2"
                )));
            }
        }
        for (i, a) in self.idempotents.iter().enumerate() {
            if !a.is_idempotent() {
                return Err(Error::VerifyFailed(format!(
                    "factor {i} is not idempotent"
                )));
            }
        }
        let lhs = conjugate_seq(&self.target, &self.conjugators)?;
        let mut rhs = Mat2::identity(self.target.ring());
        for a in &self.idempotents {
            rhs = rhs.mul(a)?;
        }
        if lhs != rhs {
            return Err(Error::VerifyFailed(
                "conjugated target does not equal the idempotent product".into(),
            ));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.verify().is_ok()
    }

    /// Given this certificate for `N = M^(A1...Al)`, produces one for the
    /// preimage `M` by prepending the conjugators.
    pub fn conjugate_preimage(&self, pre: &[Sl2Elem]) -> Result<Certificate> {
        for c in pre {
            if !c.matrix().in_sl2() {
                return Err(Error::NotInSl2);
            }
        }
        let undo = reversed_inverses(pre)?;
        let target = conjugate_seq(&self.target, &undo)?;
        let mut conjugators = pre.to_vec();
        conjugators.extend(self.conjugators.iter().cloned());
        let mut cert = Certificate::new(target, conjugators, self.idempotents.clone())?;
        cert.inherit(&[self]);
        Ok(cert)
    }

    /// Certificate for `(E1 ... Ek) * target` given idempotent prefactors:
    /// each prefactor is pushed through the conjugator list and prepended
    /// to the factor list.
    pub fn left_mul_idempotents(&self, prefactors: &[Mat2]) -> Result<Certificate> {
        let mut target = self.target.clone();
        for e in prefactors.iter().rev() {
            if !e.is_idempotent() {
                return Err(Error::NotIdempotent);
            }
            target = e.mul(&target)?;
        }
        let mut idempotents = Vec::with_capacity(prefactors.len() + self.idempotents.len());
        for e in prefactors {
            idempotents.push(conjugate_seq(e, &self.conjugators)?);
        }
        idempotents.extend(self.idempotents.iter().cloned());
        let mut cert = Certificate::new(target, self.conjugators.clone(), idempotents)?;
        cert.inherit(&[self]);
        Ok(cert)
    }

    /// Raw idempotent factorization of the target: each factor conjugated
    /// back through the inverted conjugator list, leaving no conjugators.
    pub fn unwound_idempotents(&self) -> Result<Vec<Mat2>> {
        let undo = reversed_inverses(&self.conjugators)?;
        self.idempotents
            .iter()
            .map(|a| conjugate_seq(a, &undo))
            .collect()
    }

    /// Certificate for the product `M * N` of two certified targets. The
    /// side with fewer conjugators keeps them; the other side is unwound to
    /// a raw idempotent product and pushed through the kept list.
    pub fn multiply(cm: &Certificate, cn: &Certificate) -> Result<Certificate> {
        if cm.ring() != cn.ring() {
            return Err(Error::RingMismatch(cm.ring().alpha(), cn.ring().alpha()));
        }
        let target = cm.target.mul(&cn.target)?;
        let (keep, unwind, unwound_first) = if cm.conjugators.len() <= cn.conjugators.len() {
            (cm, cn, false)
        } else {
            (cn, cm, true)
        };
        let raw = unwind.unwound_idempotents()?;
        let pushed: Vec<Mat2> = raw
            .iter()
            .map(|a| conjugate_seq(a, &keep.conjugators))
            .collect::<Result<_>>()?;
        let mut idempotents = Vec::with_capacity(cm.counts().r + cn.counts().r);
        if unwound_first {
            // M was unwound: (MN)^E = M^E * (N's factors)
            idempotents.extend(pushed);
            idempotents.extend(keep.idempotents.iter().cloned());
        } else {
            // N was unwound: (MN)^E = (M's factors) * N^E
            idempotents.extend(keep.idempotents.iter().cloned());
            idempotents.extend(pushed);
        }
        let mut cert = Certificate::new(target, keep.conjugators.clone(), idempotents)?;
        cert.inherit(&[cm, cn]);
        Ok(cert)
    }

    /// The same witness with the conjugators folded away: the target as a
    /// raw product of (conjugated) idempotents.
    pub fn unwind(&self) -> Result<Certificate> {
        let raw = self.unwound_idempotents()?;
        let mut cert = Certificate::new(self.target.clone(), Vec::new(), raw)?;
        cert.inherit(&[self]);
        Ok(cert)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&CertDto::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Certificate> {
        let dto: CertDto =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("certificate: {e}")))?;
        dto.into_certificate()
    }
}

// --- JSON layer -----------------------------------------------------------
// Elements travel as coordinate pairs "(c1,c2)" so parsing is exact at any
// magnitude.

#[derive(Serialize, Deserialize)]
struct RingDto {
    alpha: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ConjDto {
    Gen { kind: String, a: String },
    Raw { matrix: [String; 4] },
}

#[derive(Serialize, Deserialize)]
struct CountsDto {
    r: usize,
    s: usize,
}

#[derive(Serialize, Deserialize)]
struct CertDto {
    ring: RingDto,
    target: [String; 4],
    conjugators: Vec<ConjDto>,
    idempotents: Vec<[String; 4]>,
    counts: CountsDto,
    flags: Vec<String>,
    annotations: Vec<String>,
}

fn mat_to_strings(m: &Mat2) -> [String; 4] {
    let e = m.entries();
    [
        e[0].pair_string(),
        e[1].pair_string(),
        e[2].pair_string(),
        e[3].pair_string(),
    ]
}

fn mat_from_strings(ring: RingSpec, s: &[String; 4]) -> Result<Mat2> {
    Mat2::new(
        ring.parse_element(&s[0])?,
        ring.parse_element(&s[1])?,
        ring.parse_element(&s[2])?,
        ring.parse_element(&s[3])?,
    )
}

impl From<&Certificate> for CertDto {
    fn from(c: &Certificate) -> CertDto {
        CertDto {
            ring: RingDto {
                alpha: c.ring().alpha(),
            },
            target: mat_to_strings(&c.target),
            conjugators: c
                .conjugators
                .iter()
                .map(|e| match e {
                    Sl2Elem::Gen(g) => ConjDto::Gen {
                        kind: g.kind.label().to_string(),
                        a: g.a.pair_string(),
                    },
                    Sl2Elem::Raw(m) => ConjDto::Raw {
                        matrix: mat_to_strings(m),
                    },
                })
                .collect(),
            idempotents: c.idempotents.iter().map(mat_to_strings).collect(),
            counts: CountsDto {
                r: c.counts().r,
                s: c.counts().s,
            },
            flags: c.flags.iter().map(|f| f.label().to_string()).collect(),
            annotations: c.annotations.clone(),
        }
    }
}

impl CertDto {
    fn into_certificate(self) -> Result<Certificate> {
        let ring = RingSpec::new(self.ring.alpha as i64)?;
        let target = mat_from_strings(ring, &self.target)?;
        let mut conjugators = Vec::with_capacity(self.conjugators.len());
        for c in &self.conjugators {
            conjugators.push(match c {
                ConjDto::Gen { kind, a } => {
                    let kind = ConjKind::from_label(kind)
                        .ok_or_else(|| Error::Parse(format!("unknown conjugator kind {kind:?}")))?;
                    Sl2Elem::Gen(Conjugator::new(kind, ring.parse_element(a)?))
                }
                ConjDto::Raw { matrix } => Sl2Elem::Raw(mat_from_strings(ring, matrix)?),
            });
        }
        let idempotents = self
            .idempotents
            .iter()
            .map(|m| mat_from_strings(ring, m))
            .collect::<Result<Vec<_>>>()?;
        if self.counts.r != idempotents.len() || self.counts.s != conjugators.len() {
            return Err(Error::Parse(
                "counts field does not match the factor lists".into(),
            ));
        }
        let mut flags = BTreeSet::new();
        for f in &self.flags {
            flags.insert(
                Flag::from_label(f).ok_or_else(|| Error::Parse(format!("unknown flag {f:?}")))?,
            );
        }
        // deliberately NOT verified here: a parsed certificate may be
        // invalid, and the verifier is how that gets reported
        Ok(Certificate {
            target,
            conjugators,
            idempotents,
            flags,
            annotations: self.annotations,
        })
    }
}
