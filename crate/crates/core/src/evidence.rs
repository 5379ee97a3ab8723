//! Basic probability assignments and Dempster's rule of combination.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::frames::{Frame, Refinement, Subset};
use crate::scalars::{Mode, Rational, Scalar};

/// Tolerance for sums and the normalizing constant in float mode.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// Largest frame accepted by [`mass_from_belief`].
pub const ORACLE_MAX_SIZE: usize = 12;

/// A basic probability assignment: focal subsets with their masses.
///
/// Never holds `∅` or a zero mass; masses sum to one (exactly, except in
/// float mode where `|Σ - 1| <= 1e-12`).
#[derive(Debug, Clone)]
pub struct MassFunction {
    frame: Frame,
    mode: Mode,
    focal: BTreeMap<u64, Scalar>,
}

impl MassFunction {
    pub fn new<I>(frame: &Frame, assignments: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Subset, Scalar)>,
    {
        let mut focal = BTreeMap::new();
        let mut mode = None;
        for (subset, value) in assignments {
            frame.check(subset)?;
            let m = *mode.get_or_insert(value.mode());
            if value.mode() != m {
                return Err(Error::ModeMismatch(m.name(), value.mode().name()));
            }
            if subset.is_empty() {
                return Err(Error::MassOnEmptySet);
            }
            if focal.contains_key(&subset.mask()) {
                return Err(Error::DuplicateFocal(render_subset(frame, subset)));
            }
            if !value.in_unit_interval() {
                return Err(Error::MassOutOfRange {
                    subset: render_subset(frame, subset),
                    value: value.to_string(),
                });
            }
            focal.insert(subset.mask(), value);
        }
        let mode = mode.ok_or_else(|| Error::MassSum("0".into()))?;
        focal.retain(|_, v| !v.is_zero());
        let m = MassFunction {
            frame: frame.clone(),
            mode,
            focal,
        };
        m.check_sum()?;
        Ok(m)
    }

    fn check_sum(&self) -> Result<()> {
        let total = self.total()?;
        let ok = match &total {
            Scalar::Float(x) => (x - 1.0).abs() <= FLOAT_TOLERANCE,
            other => other.equals(&Scalar::one(self.mode))?,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::MassSum(total.to_string()))
        }
    }

    fn total(&self) -> Result<Scalar> {
        self.focal
            .values()
            .try_fold(Scalar::zero(self.mode), |acc, v| acc.add(v))
    }

    /// Total ignorance: `m(Θ) = 1`.
    pub fn vacuous(frame: &Frame, mode: Mode) -> Self {
        MassFunction {
            frame: frame.clone(),
            mode,
            focal: BTreeMap::from([(frame.full_mask(), Scalar::one(mode))]),
        }
    }

    /// Certainty that the truth lies in `b`: `m(b) = 1`.
    pub fn categorical(frame: &Frame, b: Subset, mode: Mode) -> Result<Self> {
        MassFunction::new(frame, [(b, Scalar::one(mode))])
    }

    /// `m(a) = s`, `m(Θ) = 1 - s`: a simple support function focused on `a`.
    pub fn simple_support(frame: &Frame, a: Subset, s: Scalar) -> Result<Self> {
        if a.is_full() {
            return MassFunction::categorical(frame, a, s.mode());
        }
        let rest = s.complement();
        MassFunction::new(frame, [(a, s), (frame.full(), rest)])
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn focal_count(&self) -> usize {
        self.focal.len()
    }

    /// Focal subsets in mask order with their masses.
    pub fn focal(&self) -> impl Iterator<Item = (Subset, &Scalar)> + '_ {
        self.focal
            .iter()
            .map(|(&mask, v)| (self.frame.full().with_mask(mask), v))
    }

    pub fn mass(&self, a: Subset) -> Result<Scalar> {
        self.frame.check(a)?;
        Ok(self
            .focal
            .get(&a.mask())
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.mode)))
    }

    /// `Bel(A) = Σ_{B ⊆ A} m(B)`.
    pub fn belief(&self, a: Subset) -> Result<Scalar> {
        self.frame.check(a)?;
        self.focal
            .iter()
            .filter(|(&b, _)| b & !a.mask() == 0)
            .try_fold(Scalar::zero(self.mode), |acc, (_, v)| acc.add(v))
    }

    /// `Pl(A) = 1 - Bel(Aᶜ)`.
    pub fn plausibility(&self, a: Subset) -> Result<Scalar> {
        self.frame.check(a)?;
        Ok(self.belief(a.complement())?.complement())
    }

    pub fn interval(&self, a: Subset) -> Result<BeliefInterval> {
        Ok(BeliefInterval {
            bel: self.belief(a)?,
            pl: self.plausibility(a)?,
        })
    }

    /// Dempster's rule: the orthogonal sum `self ⊗ other`.
    pub fn combine(&self, other: &MassFunction) -> Result<CombineResult> {
        if self.frame != other.frame {
            return Err(Error::FrameMismatch);
        }
        if self.mode != other.mode {
            return Err(Error::ModeMismatch(self.mode.name(), other.mode.name()));
        }
        let mut products: BTreeMap<u64, Scalar> = BTreeMap::new();
        for (&a, x) in &self.focal {
            for (&b, y) in &other.focal {
                let p = x.mul(y)?;
                let slot = products.entry(a & b).or_insert_with(|| Scalar::zero(self.mode));
                *slot = slot.add(&p)?;
            }
        }
        let conflict = products
            .get(&0)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.mode));
        let k = conflict.complement();
        let total_conflict = match &k {
            Scalar::Float(x) => x.abs() <= FLOAT_TOLERANCE,
            other => other.is_zero(),
        };
        if total_conflict {
            return Err(Error::TotalConflict);
        }
        let mut focal = BTreeMap::new();
        for (&mask, v) in products.iter().filter(|(&m, _)| m != 0) {
            if v.is_zero() {
                continue;
            }
            focal.insert(mask, v.div(&k)?);
        }
        Ok(CombineResult {
            mass: MassFunction {
                frame: self.frame.clone(),
                mode: self.mode,
                focal,
            },
            k,
            conflict,
            unnormalized: products,
        })
    }

    /// Dempster conditioning on `b`: combination with `m(b) = 1`.
    pub fn condition(&self, b: Subset) -> Result<CombineResult> {
        self.frame.check(b)?;
        if b.is_empty() {
            return Err(Error::MassOnEmptySet);
        }
        self.combine(&MassFunction::categorical(&self.frame, b, self.mode)?)
    }

    /// Carries a coarse mass function to the fine frame of `r`: each focal
    /// set `A` becomes `w(A)` with the same mass.
    pub fn lift(&self, r: &Refinement) -> Result<MassFunction> {
        if &self.frame != r.coarse() {
            return Err(Error::FrameMismatch);
        }
        let mut focal = BTreeMap::new();
        for (a, v) in self.focal() {
            focal.insert(r.refine(a)?.mask(), v.clone());
        }
        Ok(MassFunction {
            frame: r.fine().clone(),
            mode: self.mode,
            focal,
        })
    }

    /// Re-expresses a mass function whose focal sets all lie inside `within`
    /// on `target`, mapping the members of `within` (in frame order) onto the
    /// labels of `target` (in order).
    pub fn restrict(&self, within: Subset, target: &Frame) -> Result<MassFunction> {
        self.frame.check(within)?;
        if within.len() as usize != target.len() {
            return Err(Error::MaskOutOfRange {
                mask: within.mask(),
                size: target.len(),
            });
        }
        let members: Vec<usize> = (0..self.frame.len())
            .filter(|i| within.mask() >> i & 1 == 1)
            .collect();
        let mut focal = BTreeMap::new();
        for (&mask, v) in &self.focal {
            if mask & !within.mask() != 0 {
                return Err(Error::NotABeliefFunction(format!(
                    "focal set {} lies outside {}",
                    render_subset(&self.frame, self.frame.full().with_mask(mask)),
                    render_subset(&self.frame, within)
                )));
            }
            let image = members
                .iter()
                .enumerate()
                .filter(|(_, &bit)| mask >> bit & 1 == 1)
                .fold(0u64, |acc, (j, _)| acc | 1 << j);
            focal.insert(image, v.clone());
        }
        Ok(MassFunction {
            frame: target.clone(),
            mode: self.mode,
            focal,
        })
    }
}

impl PartialEq for MassFunction {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame
            && self.mode == other.mode
            && self.focal.len() == other.focal.len()
            && self
                .focal
                .iter()
                .zip(&other.focal)
                .all(|((ma, va), (mb, vb))| ma == mb && va == vb)
    }
}

impl fmt::Display for MassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .focal()
            .map(|(a, v)| format!("{}: {}", render_subset(&self.frame, a), v))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// `{a,b}` notation, with `theta` for the whole frame.
pub fn render_subset(frame: &Frame, a: Subset) -> String {
    if a.is_full() && frame.len() > 1 {
        "theta".to_string()
    } else {
        frame.render(a)
    }
}

#[derive(Debug, Clone)]
pub struct CombineResult {
    pub mass: MassFunction,
    /// Normalizing constant `K = 1 - conflict`.
    pub k: Scalar,
    /// Mass that fell on `∅` before normalization.
    pub conflict: Scalar,
    unnormalized: BTreeMap<u64, Scalar>,
}

impl CombineResult {
    /// The pre-normalization mass `m'(X)`; `m'(∅)` is the conflict.
    pub fn unnormalized(&self, x: Subset) -> Result<Scalar> {
        self.mass.frame.check(x)?;
        Ok(self
            .unnormalized
            .get(&x.mask())
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.mass.mode)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefInterval {
    pub bel: Scalar,
    pub pl: Scalar,
}

impl fmt::Display for BeliefInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.bel, self.pl)
    }
}

/// Recovers a mass function from a belief table by Möbius inversion,
/// `m(A) = Σ_{B ⊆ A} (-1)^{|A \ B|} Bel(B)`.
///
/// Independent of [`MassFunction::belief`]; used as its oracle.
pub fn mass_from_belief(frame: &Frame, bel: impl Fn(Subset) -> Scalar) -> Result<MassFunction> {
    if frame.len() > ORACLE_MAX_SIZE {
        return Err(Error::OracleTooLarge(frame.len()));
    }
    let table: Vec<Scalar> = frame.all_subsets().map(&bel).collect();
    let mode = table[0].mode();
    if !table[0].is_zero() {
        return Err(Error::NotABeliefFunction("Bel(∅) must be 0".into()));
    }
    let mut assignments = Vec::new();
    for a in frame.all_subsets().skip(1) {
        let outer = a.mask();
        let mut acc = Scalar::zero(mode);
        // Walk every submask of `outer`, including 0.
        let mut sub = outer;
        loop {
            let sign_negative = (outer & !sub).count_ones() % 2 == 1;
            let term = &table[sub as usize];
            acc = if sign_negative { acc.sub(term)? } else { acc.add(term)? };
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & outer;
        }
        if acc.is_zero() {
            continue;
        }
        let negative = match &acc {
            Scalar::Float(x) => *x < -FLOAT_TOLERANCE,
            Scalar::Rational(r) => *r < Rational::from_integer(0.into()),
            Scalar::Sym(_) => !acc.in_unit_interval(),
        };
        if negative {
            return Err(Error::NotABeliefFunction(format!(
                "m({}) = {} is negative",
                render_subset(frame, a),
                acc
            )));
        }
        assignments.push((a, acc));
    }
    MassFunction::new(frame, assignments).map_err(|e| Error::NotABeliefFunction(e.to_string()))
}
