//! Constellation types `{x_0, ..., x_k}_d`, their containment order and the
//! dephased angle template that embeds a restricted type in a torus.
//!
//! A spec is kept in canonical form: group sizes sorted decreasingly with
//! empty groups dropped. A spec is *restricted* when its largest group has
//! `d-1` states; that group plays the role of the fixed first basis and the
//! remaining groups are the "extra" groups `x_1, ..., x_k`.
//!
//! Angle layout of [`realize`]: groups `1..` in canonical order, members in
//! order, components `2..d` in order. The first member of group 1 is the
//! fixed all-ones anchor and consumes no angles.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::states::CVector;
use crate::{Error, Result, C64, MAX_DIM};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConstellationSpec {
    d: usize,
    counts: Vec<usize>,
}

impl ConstellationSpec {
    /// Builds a spec from group sizes in any order; zeros are dropped.
    pub fn new(d: usize, counts: impl Into<Vec<usize>>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        let mut counts: Vec<usize> = counts.into();
        counts.retain(|&x| x > 0);
        counts.sort_unstable_by(|a, b| b.cmp(a));
        if counts.is_empty() {
            return Err(Error::InvalidSpec("no non-empty group".into()));
        }
        if let Some(&x) = counts.iter().find(|&&x| x > d - 1) {
            return Err(Error::InvalidSpec(format!(
                "group of {x} states exceeds d-1 = {}",
                d - 1
            )));
        }
        if counts.len() > d + 1 {
            return Err(Error::InvalidSpec(format!(
                "{} groups exceed d+1 = {}",
                counts.len(),
                d + 1
            )));
        }
        Ok(Self { d, counts })
    }

    /// `{d-1, extra...}_d`.
    pub fn restricted(d: usize, extra: &[usize]) -> Result<Self> {
        let mut counts = Vec::with_capacity(extra.len() + 1);
        counts.push(d.saturating_sub(1));
        counts.extend_from_slice(extra);
        Self::new(d, counts)
    }

    /// Three complete bases, `{(d-1)^3}_d`.
    pub fn three_bases(d: usize) -> Result<Self> {
        Self::restricted(d, &[d - 1, d - 1])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn is_restricted(&self) -> bool {
        self.counts[0] == self.d - 1
    }

    /// Sizes of the groups after the first.
    pub fn extra(&self) -> &[usize] {
        &self.counts[1..]
    }

    /// Number of states outside the first group.
    pub fn s(&self) -> usize {
        self.extra().iter().sum()
    }

    pub fn total_states(&self) -> usize {
        self.counts.iter().sum()
    }

    fn require_restricted(&self) -> Result<()> {
        if self.is_restricted() {
            Ok(())
        } else {
            Err(Error::NotRestricted(self.to_string()))
        }
    }

    /// Number of free angles `(d-1)(s-1)`; zero when `s == 0`.
    pub fn parameter_count(&self) -> usize {
        (self.d - 1) * self.s().saturating_sub(1)
    }

    /// Containment order: `self ≤ other` iff every group fits position-wise
    /// after both are sorted decreasingly.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(self.d, other.d));
        }
        if self.counts.len() > other.counts.len() {
            return Ok(false);
        }
        Ok(self.counts.iter().zip(&other.counts).all(|(a, b)| a <= b))
    }

    /// Brace notation with exponents, e.g. `{5,4^2,2}_6`.
    pub fn braces(&self) -> String {
        format!("{{{}}}_{}", self.compact_counts(), self.d)
    }

    fn compact_counts(&self) -> String {
        let mut parts = Vec::new();
        let mut i = 0;
        while i < self.counts.len() {
            let x = self.counts[i];
            let run = self.counts[i..].iter().take_while(|&&y| y == x).count();
            if run > 1 {
                parts.push(format!("{x}^{run}"));
            } else {
                parts.push(x.to_string());
            }
            i += run;
        }
        parts.join(",")
    }
}

impl fmt::Display for ConstellationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={}:{}", self.d, self.compact_counts())
    }
}

/// Parses `d=6:5,4,4,2` or `d=6:5,4^2,2`.
impl FromStr for ConstellationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidSpec(format!("{s:?}: {why}"));
        let s = s.trim();
        let (dpart, cpart) = s.split_once(':').ok_or_else(|| bad("expected d=<n>:<counts>"))?;
        let d: usize = dpart
            .trim()
            .strip_prefix("d=")
            .ok_or_else(|| bad("missing d="))?
            .trim()
            .parse()
            .map_err(|_| bad("dimension is not an integer"))?;
        let mut counts = Vec::new();
        for item in cpart.split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(bad("empty group size"));
            }
            let (x, times) = match item.split_once('^') {
                Some((x, e)) => (x, e.trim().parse::<usize>().map_err(|_| bad("bad exponent"))?),
                None => (item, 1),
            };
            let x: usize = x.trim().parse().map_err(|_| bad("group size is not an integer"))?;
            counts.extend(std::iter::repeat_n(x, times));
        }
        Self::new(d, counts)
    }
}

impl TryFrom<String> for ConstellationSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConstellationSpec> for String {
    fn from(spec: ConstellationSpec) -> String {
        spec.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Underdetermined,
    Critical,
    Overdetermined,
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecKind::Underdetermined => "underdetermined",
            SpecKind::Critical => "critical",
            SpecKind::Overdetermined => "overdetermined",
        })
    }
}

/// Parameter and constraint counts of a restricted spec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub p: usize,
    pub c: usize,
    pub s: usize,
    #[serde(rename = "S")]
    pub total_states: usize,
    pub kind: SpecKind,
}

pub fn classify(spec: &ConstellationSpec) -> Result<Classification> {
    spec.require_restricted()?;
    let s = spec.s();
    if s == 0 {
        return Err(Error::InvalidSpec(format!(
            "{spec} needs at least one group besides the complete basis"
        )));
    }
    let p = (spec.d - 1) * (s - 1);
    let c = s * (s - 1) / 2;
    let kind = match c.cmp(&p) {
        std::cmp::Ordering::Less => SpecKind::Underdetermined,
        std::cmp::Ordering::Equal => SpecKind::Critical,
        std::cmp::Ordering::Greater => SpecKind::Overdetermined,
    };
    Ok(Classification {
        p,
        c,
        s,
        total_states: spec.d - 1 + s,
        kind,
    })
}

/// Restricted specs with the same number of extra groups as `top`, every
/// extra group non-empty, contained in `top`. Ordered by `s`, then by the
/// extra group sizes lexicographically.
pub fn enumerate_subspecs(top: &ConstellationSpec) -> Result<Vec<ConstellationSpec>> {
    top.require_restricted()?;
    let bound = top.extra();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(bound.len());
    fn rec(
        bound: &[usize],
        cap: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let i = cur.len();
        if i == bound.len() {
            out.push(cur.clone());
            return;
        }
        for x in 1..=cap.min(bound[i]) {
            cur.push(x);
            rec(bound, x, cur, out);
            cur.pop();
        }
    }
    rec(bound, top.d - 1, &mut cur, &mut out);
    let mut specs = out
        .into_iter()
        .map(|extra| ConstellationSpec::restricted(top.d, &extra))
        .collect::<Result<Vec<_>>>()?;
    specs.sort_by(|a, b| a.s().cmp(&b.s()).then_with(|| a.extra().cmp(b.extra())));
    Ok(specs)
}

/// A point of the constellation torus of a restricted spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterPoint {
    spec: ConstellationSpec,
    angles: Vec<f64>,
}

impl ParameterPoint {
    pub fn new(spec: ConstellationSpec, angles: Vec<f64>) -> Result<Self> {
        spec.require_restricted()?;
        let expected = spec.parameter_count();
        if angles.len() != expected {
            return Err(Error::AngleCount {
                expected,
                got: angles.len(),
            });
        }
        Ok(Self { spec, angles })
    }

    pub fn zeros(spec: ConstellationSpec) -> Result<Self> {
        let p = spec.parameter_count();
        Self::new(spec, vec![0.0; p])
    }

    pub fn spec(&self) -> &ConstellationSpec {
        &self.spec
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn into_angles(self) -> Vec<f64> {
        self.angles
    }

    /// Angles reduced to `[0, 2π)`.
    pub fn wrapped(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            angles: self.angles.iter().map(|&a| wrap_angle(a)).collect(),
        }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Position of one state of groups `1..` inside the angle vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct VectorSlot {
    pub group: usize,
    pub member: usize,
    /// `None` for the all-ones anchor.
    pub angle_offset: Option<usize>,
}

pub(crate) fn vector_slots(spec: &ConstellationSpec) -> Vec<VectorSlot> {
    let d = spec.d;
    let mut next = 0;
    let mut slots = Vec::with_capacity(spec.s());
    for (g, &x) in spec.extra().iter().enumerate() {
        for m in 0..x {
            let angle_offset = if g == 0 && m == 0 {
                None
            } else {
                let off = next;
                next += d - 1;
                Some(off)
            };
            slots.push(VectorSlot {
                group: g + 1,
                member: m,
                angle_offset,
            });
        }
    }
    slots
}

/// Groups of unit vectors in `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSet {
    d: usize,
    groups: Vec<Vec<CVector>>,
}

impl StateSet {
    pub fn new(d: usize, groups: Vec<Vec<CVector>>) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        for g in &groups {
            if g.len() > d {
                return Err(Error::InvalidSpec(format!(
                    "group of {} vectors in C^{d}",
                    g.len()
                )));
            }
            for v in g {
                if v.dim() != d {
                    return Err(Error::DimensionMismatch(d, v.dim()));
                }
                if !v.is_unit() {
                    return Err(Error::InvalidSpec(format!(
                        "vector with squared norm {} is not unit",
                        v.norm_sqr()
                    )));
                }
            }
        }
        Ok(Self { d, groups })
    }

    pub(crate) fn from_parts_unchecked(d: usize, groups: Vec<Vec<CVector>>) -> Self {
        Self { d, groups }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn groups(&self) -> &[Vec<CVector>] {
        &self.groups
    }

    pub fn into_groups(self) -> Vec<Vec<CVector>> {
        self.groups
    }

    pub fn num_states(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Canonical spec of the group sizes. Fails when a group holds a full
    /// basis of `d` vectors, which has no constellation type of its own.
    pub fn spec(&self) -> Result<ConstellationSpec> {
        ConstellationSpec::new(self.d, self.groups.iter().map(Vec::len).collect::<Vec<_>>())
    }

    /// Reads the angles back from a dephased state set laid out like
    /// [`realize`] output. Angles are reduced to `[0, 2π)`.
    pub fn dephased_angles(&self) -> Result<ParameterPoint> {
        let spec = self.spec()?;
        spec.require_restricted()?;
        let sizes: Vec<usize> = self.groups.iter().map(Vec::len).collect();
        if sizes != spec.counts() {
            return Err(Error::InvalidSpec(format!(
                "group sizes {sizes:?} are not in canonical order"
            )));
        }
        let mut angles = vec![0.0; spec.parameter_count()];
        for slot in vector_slots(&spec) {
            if let Some(off) = slot.angle_offset {
                let v = &self.groups[slot.group][slot.member];
                for k in 1..self.d {
                    let z = v[k];
                    angles[off + k - 1] = wrap_angle(z.im.atan2(z.re));
                }
            }
        }
        ParameterPoint::new(spec, angles)
    }
}

/// Builds the dephased state set of a parameter point.
///
/// Group 0 is `e_1, ..., e_{d-1}`; every other state has components of
/// modulus `1/√d`, first component real positive, and the first state of
/// group 1 is the uniform vector.
pub fn realize(point: &ParameterPoint) -> StateSet {
    let spec = &point.spec;
    let d = spec.d;
    let amp = 1.0 / (d as f64).sqrt();
    let mut groups: Vec<Vec<CVector>> = Vec::with_capacity(spec.counts.len());
    groups.push((0..d - 1).map(|k| CVector::basis(d, k)).collect());
    for &x in spec.extra() {
        groups.push(Vec::with_capacity(x));
    }
    for slot in vector_slots(spec) {
        let v = match slot.angle_offset {
            None => CVector::uniform(d),
            Some(off) => {
                let mut e = Vec::with_capacity(d);
                e.push(C64::new(amp, 0.0));
                e.extend(point.angles[off..off + d - 1].iter().map(|&a| C64::from_polar(amp, a)));
                CVector::new(e).expect("dimension validated by spec")
            }
        };
        groups[slot.group].push(v);
    }
    StateSet::from_parts_unchecked(d, groups)
}
