//! Canonical-form arithmetic in free graded-commutative algebras.
//!
//! An element is a finite map from monomials to exact scalars. Monomials are
//! words sorted by the table's name order; reordering during multiplication
//! emits the Koszul sign `(-1)^{p p'}` per transposition of odd factors, and
//! a repeated odd factor annihilates the term. Equality of elements is
//! structural equality of the canonical maps.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use std::collections::BTreeMap;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::table::{GenId, GenKind, Table};

/// A monomial: factors `(rank, exponent)` sorted by rank. Ranks refer to the
/// table's name order, so `Ord` on the raw vector is the canonical order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Monomial {
    factors: Vec<(u32, i32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { factors: Vec::new() }
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[(u32, i32)] {
        &self.factors
    }

    fn single(rank: u32, exp: i32) -> Self {
        Monomial { factors: vec![(rank, exp)] }
    }

    /// Assemble from factors already sorted by rank.
    pub fn from_factors(factors: Vec<(u32, i32)>) -> Self {
        debug_assert!(factors.windows(2).all(|w| w[0].0 < w[1].0));
        Monomial { factors }
    }

    /// Total parity of the word (odd factors have exponent 1).
    fn parity(&self, table: &Table) -> bool {
        let mut p = false;
        for &(r, e) in &self.factors {
            if table.info_at_rank(r).odd && e.rem_euclid(2) == 1 {
                p = !p;
            }
        }
        p
    }

    /// Merge two sorted words; returns `None` when an odd factor repeats,
    /// otherwise the merged word and the Koszul sign of the interleave.
    fn mul(&self, rhs: &Monomial, table: &Table) -> Option<(Monomial, bool)> {
        let mut out = Vec::with_capacity(self.factors.len() + rhs.factors.len());
        let mut neg = false;
        // odd ranks of `self` in increasing order, for crossing counts
        let left_odd: Vec<u32> = self
            .factors
            .iter()
            .filter(|&&(r, _)| table.info_at_rank(r).odd)
            .map(|&(r, _)| r)
            .collect();
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() || j < rhs.factors.len() {
            let take_left = match (self.factors.get(i), rhs.factors.get(j)) {
                (Some(&(ra, _)), Some(&(rb, _))) => ra <= rb,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!(),
            };
            if take_left {
                let (r, e) = self.factors[i];
                i += 1;
                if j < rhs.factors.len() && rhs.factors[j].0 == r {
                    let (_, e2) = rhs.factors[j];
                    j += 1;
                    let info = table.info_at_rank(r);
                    if info.odd {
                        return None; // odd generator squared
                    }
                    let e3 = e + e2;
                    if e3 != 0 {
                        out.push((r, e3));
                    }
                } else {
                    out.push((r, e));
                }
            } else {
                let (r, e) = rhs.factors[j];
                j += 1;
                let info = table.info_at_rank(r);
                if info.odd {
                    // crossings with left odd factors of strictly larger rank
                    let crossings = left_odd.iter().filter(|&&lr| lr > r).count();
                    if crossings % 2 == 1 {
                        neg = !neg;
                    }
                }
                out.push((r, e));
            }
        }
        Some((Monomial { factors: out }, neg))
    }
}

/// An element of the free graded-commutative algebra over a [`Table`].
#[derive(Clone)]
pub struct GradedElement {
    table: Arc<Table>,
    terms: BTreeMap<Monomial, Scalar>,
}

impl PartialEq for GradedElement {
    fn eq(&self, other: &Self) -> bool {
        self.table.fingerprint() == other.table.fingerprint() && self.terms == other.terms
    }
}
impl Eq for GradedElement {}

impl GradedElement {
    pub fn zero(table: &Arc<Table>) -> Self {
        GradedElement { table: table.clone(), terms: BTreeMap::new() }
    }

    pub fn one(table: &Arc<Table>) -> Self {
        Self::constant(table, Scalar::one())
    }

    pub fn constant(table: &Arc<Table>, c: Scalar) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        GradedElement { table: table.clone(), terms }
    }

    pub fn generator(table: &Arc<Table>, id: GenId) -> Self {
        Self::gen_pow(table, id, 1).expect("exponent 1 is always legal")
    }

    pub fn from_monomial(table: &Arc<Table>, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(m, Scalar::one());
        GradedElement { table: table.clone(), terms }
    }

    pub fn gen_pow(table: &Arc<Table>, id: GenId, exp: i32) -> Result<Self, Error> {
        let info = table.info(id);
        if exp == 0 {
            return Ok(Self::one(table));
        }
        if info.odd && exp.abs() > 1 {
            return Err(Error::OddPower(info.name.clone(), exp as i64));
        }
        if exp < 0 && !info.invertible {
            return Err(Error::NegativePower(info.name.clone(), exp as i64));
        }
        let mut terms = BTreeMap::new();
        terms.insert(Monomial::single(table.rank(id), exp), Scalar::one());
        Ok(GradedElement { table: table.clone(), terms })
    }

    pub fn table(&self) -> &Arc<Table> {
        &self.table
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn constant_term(&self) -> Scalar {
        self.coefficient(&Monomial::one())
    }

    fn assert_same_table(&self, rhs: &GradedElement) {
        assert_eq!(
            self.table.fingerprint(),
            rhs.table.fingerprint(),
            "mismatched generator tables"
        );
    }

    fn insert_term(terms: &mut BTreeMap<Monomial, Scalar>, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = &*o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &Scalar) -> GradedElement {
        if c.is_zero() {
            return Self::zero(&self.table);
        }
        let terms = self.terms.iter().map(|(m, s)| (m.clone(), s * c)).collect();
        GradedElement { table: self.table.clone(), terms }
    }

    pub fn scale_int(&self, n: i64) -> GradedElement {
        self.scale(&Scalar::from_int(n))
    }

    /// Multiply one monomial term into an accumulator.
    fn mul_term_into(
        &self,
        acc: &mut BTreeMap<Monomial, Scalar>,
        m1: &Monomial,
        c1: &Scalar,
        rhs: &GradedElement,
    ) {
        for (m2, c2) in &rhs.terms {
            if let Some((m, neg)) = m1.mul(m2, &self.table) {
                let mut c = c1 * c2;
                if neg {
                    c = -c;
                }
                Self::insert_term(acc, m, c);
            }
        }
    }

    pub fn pow(&self, e: u32) -> GradedElement {
        let mut acc = Self::one(&self.table);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Left graded partial derivative with respect to a ring generator:
    /// strip one factor of `g` from each monomial, with the Koszul sign of
    /// moving the operator past the preceding factors.
    pub fn differentiate(&self, g: GenId) -> GradedElement {
        let rank = self.table.rank(g);
        let info = self.table.info(g);
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let Some(pos) = m.factors.iter().position(|&(r, _)| r == rank) else {
                continue;
            };
            let (_, e) = m.factors[pos];
            let mut factors = m.factors.clone();
            let mut coeff = c.clone();
            if info.odd {
                // parity of the factors preceding g in the word
                let mut neg = false;
                for &(r, ex) in &factors[..pos] {
                    if self.table.info_at_rank(r).odd && ex.rem_euclid(2) == 1 {
                        neg = !neg;
                    }
                }
                if neg {
                    coeff = -coeff;
                }
                factors.remove(pos);
            } else {
                coeff = &coeff * &Scalar::from_int(e as i64);
                if e == 1 {
                    factors.remove(pos);
                } else {
                    factors[pos].1 = e - 1;
                }
            }
            Self::insert_term(&mut terms, Monomial { factors }, coeff);
        }
        GradedElement { table: self.table.clone(), terms }
    }

    /// Substitute scalars for (some) degree-0 weight-0 ring generators.
    /// Generators of nonzero degree or weight survive symbolically.
    pub fn evaluate(&self, point: &BTreeMap<GenId, Scalar>) -> Result<GradedElement, Error> {
        for (&id, v) in point {
            let info = self.table.info(id);
            if info.degree != 0 || info.weight != 0 {
                return Err(Error::InvalidPoint(format!(
                    "`{}` is not a degree-0 coordinate",
                    info.name
                )));
            }
            if info.invertible && v.is_zero() {
                return Err(Error::ZeroAtUnit(info.name.clone()));
            }
        }
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut factors = Vec::with_capacity(m.factors.len());
            for &(r, e) in &m.factors {
                let id = self.table.id_at_rank(r);
                match point.get(&id) {
                    Some(v) => coeff = &coeff * &v.pow(e as i64)?,
                    None => factors.push((r, e)),
                }
            }
            Self::insert_term(&mut terms, Monomial { factors }, coeff);
        }
        Ok(GradedElement { table: self.table.clone(), terms })
    }

    /// Fibre of the element at a classical point: substitute the point's
    /// values and kill every term containing a ring generator of nonzero
    /// degree. Form and vector symbols survive as basis labels.
    pub fn restrict_to_point(&self, point: &BTreeMap<GenId, Scalar>) -> Result<GradedElement, Error> {
        let evaluated = self.evaluate(point)?;
        let mut terms = BTreeMap::new();
        'term: for (m, c) in &evaluated.terms {
            for &(r, _) in &m.factors {
                let info = self.table.info_at_rank(r);
                match info.kind {
                    GenKind::Ring if info.degree != 0 => continue 'term,
                    GenKind::Ring => {
                        // degree-0 ring generator without assigned value
                        continue 'term;
                    }
                    _ => {}
                }
            }
            Self::insert_term(&mut terms, m.clone(), c.clone());
        }
        Ok(GradedElement { table: self.table.clone(), terms })
    }

    fn monomial_degree(&self, m: &Monomial) -> i64 {
        m.factors
            .iter()
            .map(|&(r, e)| self.table.info_at_rank(r).degree * e as i64)
            .sum()
    }

    fn monomial_cdegree(&self, m: &Monomial) -> i64 {
        m.factors
            .iter()
            .map(|&(r, e)| self.table.info_at_rank(r).cdegree * e as i64)
            .sum()
    }

    fn monomial_weight(&self, m: &Monomial) -> i64 {
        m.factors
            .iter()
            .map(|&(r, e)| self.table.info_at_rank(r).weight as i64 * e as i64)
            .sum()
    }

    /// Internal degree, when the element is homogeneous. Zero is homogeneous
    /// of every degree; `None` means inhomogeneous.
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let d = self.monomial_degree(first);
        for m in it {
            if self.monomial_degree(m) != d {
                return None;
            }
        }
        Some(d)
    }

    /// Degree in the grading that the differential raises by one. Agrees
    /// with [`degree`](Self::degree) except on vector symbols.
    pub fn cdegree(&self) -> Option<i64> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let d = self.monomial_cdegree(first);
        for m in it {
            if self.monomial_cdegree(m) != d {
                return None;
            }
        }
        Some(d)
    }

    /// Form weight (or polyvector weight), when homogeneous in it.
    pub fn weight(&self) -> Option<i64> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let w = self.monomial_weight(first);
        for m in it {
            if self.monomial_weight(m) != w {
                return None;
            }
        }
        Some(w)
    }

    pub fn is_homogeneous_of(&self, degree: i64) -> bool {
        self.terms.keys().all(|m| self.monomial_degree(m) == degree)
    }

    /// Koszul parity when homogeneous; `None` for mixed parity.
    pub fn parity(&self) -> Option<bool> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let p = first.parity(&self.table);
        for m in it {
            if m.parity(&self.table) != p {
                return None;
            }
        }
        Some(p)
    }

    /// Reinterpret over a table that extends this element's table.
    pub fn promote(&self, ext: &Arc<Table>) -> GradedElement {
        assert!(ext.extends(&self.table), "promote target must extend the table");
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let factors = m
                .factors
                .iter()
                .map(|&(r, e)| (ext.rank(self.table.id_at_rank(r)), e))
                .collect::<Vec<_>>();
            let mut sorted = factors;
            sorted.sort_by_key(|&(r, _)| r);
            // relative name order of existing generators is unchanged by an
            // extension, so re-sorting never swaps two odd factors
            terms.insert(Monomial { factors: sorted }, c.clone());
        }
        GradedElement { table: ext.clone(), terms }
    }

    /// Keep only the terms `pred` accepts (by monomial).
    pub fn filter_terms(&self, mut pred: impl FnMut(&Monomial) -> bool) -> GradedElement {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| pred(m))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        GradedElement { table: self.table.clone(), terms }
    }

    /// Does any term contain one of the given generators?
    pub fn involves(&self, ids: &[GenId]) -> bool {
        let ranks: Vec<u32> = ids.iter().map(|&id| self.table.rank(id)).collect();
        self.terms
            .keys()
            .any(|m| m.factors.iter().any(|&(r, _)| ranks.contains(&r)))
    }

    /// The exponent of `g` in a monomial.
    pub fn exponent_of(&self, m: &Monomial, g: GenId) -> i32 {
        let rank = self.table.rank(g);
        m.factors.iter().find(|&&(r, _)| r == rank).map(|&(_, e)| e).unwrap_or(0)
    }

    /// Invert an element that is a unit of the represented ring: a single
    /// term whose generators are all invertible.
    pub fn invert_unit(&self) -> Result<GradedElement, Error> {
        if self.terms.len() != 1 {
            return Err(Error::NotAUnit(self.to_string()));
        }
        let (m, c) = self.terms.iter().next().expect("one term");
        for &(r, _) in &m.factors {
            if !self.table.info_at_rank(r).invertible {
                return Err(Error::NotAUnit(self.to_string()));
            }
        }
        let mut terms = BTreeMap::new();
        let inv = Monomial { factors: m.factors.iter().map(|&(r, e)| (r, -e)).collect() };
        terms.insert(inv, c.inv()?);
        Ok(GradedElement { table: self.table.clone(), terms })
    }

    /// True when this element is a unit of the represented ring.
    pub fn is_unit(&self) -> bool {
        self.invert_unit().is_ok()
    }

    /// Exact division by a unit.
    pub fn div_unit(&self, unit: &GradedElement) -> Result<GradedElement, Error> {
        Ok(self * &unit.invert_unit()?)
    }

    /// Decompose a weight-one element as `sum_g coeff_g * sym_g` over its
    /// weight-one symbols, coefficients on the left. Fails on terms whose
    /// weight is not one.
    pub fn split_weight_one(&self) -> Result<BTreeMap<GenId, GradedElement>, Error> {
        let mut out: BTreeMap<GenId, GradedElement> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut sym = None;
            for &(r, e) in &m.factors {
                let info = self.table.info_at_rank(r);
                if info.weight > 0 {
                    if sym.is_some() || info.weight as i32 * e != 1 {
                        return Err(Error::BadInstance(format!(
                            "term `{}` does not have weight one",
                            self.print_monomial(m, c)
                        )));
                    }
                    sym = Some(r);
                }
            }
            let Some(rank) = sym else {
                return Err(Error::BadInstance("weight-zero term in weight-one split".into()));
            };
            // Move the symbol to the right end: sign is the parity product of
            // the symbol and everything after it.
            let pos = m.factors.iter().position(|&(r, _)| r == rank).expect("present");
            let info = self.table.info_at_rank(rank);
            let mut neg = false;
            if info.odd {
                for &(r, e) in &m.factors[pos + 1..] {
                    if self.table.info_at_rank(r).odd && e.rem_euclid(2) == 1 {
                        neg = !neg;
                    }
                }
            }
            let mut factors = m.factors.clone();
            factors.remove(pos);
            let mut coeff = c.clone();
            if neg {
                coeff = -coeff;
            }
            let id = self.table.id_at_rank(rank);
            let entry = out.entry(id).or_insert_with(|| Self::zero(&self.table));
            Self::insert_term(&mut entry.terms, Monomial { factors }, coeff);
        }
        out.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Decompose `self = free + sum_g coeff_g * g` over the listed
    /// generators, coefficients on the left. Errors when a term contains
    /// two of the listed generators.
    pub fn split_linear_in(
        &self,
        ids: &[GenId],
    ) -> Result<(GradedElement, BTreeMap<GenId, GradedElement>), Error> {
        let ranks: Vec<u32> = ids.iter().map(|&id| self.table.rank(id)).collect();
        let mut free = GradedElement::zero(&self.table);
        let mut parts: BTreeMap<GenId, GradedElement> = BTreeMap::new();
        for (m, c) in &self.terms {
            let hits: Vec<usize> = m
                .factors
                .iter()
                .enumerate()
                .filter(|(_, &(r, _))| ranks.contains(&r))
                .map(|(i, _)| i)
                .collect();
            match hits.len() {
                0 => Self::insert_term(&mut free.terms, m.clone(), c.clone()),
                1 => {
                    let pos = hits[0];
                    let (rank, exp) = m.factors[pos];
                    if exp != 1 {
                        return Err(Error::NonlinearInY(self.print_monomial(m, c)));
                    }
                    // move the factor to the right end
                    let info = self.table.info_at_rank(rank);
                    let mut neg = false;
                    if info.odd {
                        for &(r, e) in &m.factors[pos + 1..] {
                            if self.table.info_at_rank(r).odd && e.rem_euclid(2) == 1 {
                                neg = !neg;
                            }
                        }
                    }
                    let mut factors = m.factors.clone();
                    factors.remove(pos);
                    let mut coeff = c.clone();
                    if neg {
                        coeff = -coeff;
                    }
                    let id = self.table.id_at_rank(rank);
                    let entry = parts.entry(id).or_insert_with(|| Self::zero(&self.table));
                    Self::insert_term(&mut entry.terms, Monomial { factors }, coeff);
                }
                _ => return Err(Error::NonlinearInY(self.print_monomial(m, c))),
            }
        }
        parts.retain(|_, v| !v.is_zero());
        Ok((free, parts))
    }

    fn print_monomial(&self, m: &Monomial, c: &Scalar) -> String {
        let mut parts = vec![c.to_string()];
        for &(r, e) in &m.factors {
            let name = &self.table.info_at_rank(r).name;
            parts.push(if e == 1 { name.clone() } else { format!("{name}^{e}") });
        }
        parts.join("*")
    }
}

impl Add for &GradedElement {
    type Output = GradedElement;
    fn add(self, rhs: &GradedElement) -> GradedElement {
        self.assert_same_table(rhs);
        let mut terms = self.terms.clone();
        for (m, c) in &rhs.terms {
            GradedElement::insert_term(&mut terms, m.clone(), c.clone());
        }
        GradedElement { table: self.table.clone(), terms }
    }
}

impl Sub for &GradedElement {
    type Output = GradedElement;
    fn sub(self, rhs: &GradedElement) -> GradedElement {
        self + &(-rhs)
    }
}

impl Neg for &GradedElement {
    type Output = GradedElement;
    fn neg(self) -> GradedElement {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect();
        GradedElement { table: self.table.clone(), terms }
    }
}

impl Mul for &GradedElement {
    type Output = GradedElement;
    fn mul(self, rhs: &GradedElement) -> GradedElement {
        self.assert_same_table(rhs);
        let mut terms = BTreeMap::new();
        for (m1, c1) in &self.terms {
            self.mul_term_into(&mut terms, m1, c1, rhs);
        }
        GradedElement { table: self.table.clone(), terms }
    }
}

macro_rules! forward_elem {
    ($trait:ident, $method:ident) => {
        impl $trait for GradedElement {
            type Output = GradedElement;
            fn $method(self, rhs: GradedElement) -> GradedElement {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&GradedElement> for GradedElement {
            type Output = GradedElement;
            fn $method(self, rhs: &GradedElement) -> GradedElement {
                (&self).$method(rhs)
            }
        }
    };
}
forward_elem!(Add, add);
forward_elem!(Sub, sub);
forward_elem!(Mul, mul);

impl Neg for GradedElement {
    type Output = GradedElement;
    fn neg(self) -> GradedElement {
        -&self
    }
}

impl fmt::Display for GradedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let (lead, mag) = if c.is_rational() && c.re() < &num_traits::Zero::zero() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if first {
                if lead == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else if lead == "-" {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = mag.is_one();
            if m.is_one() {
                write!(f, "{mag}")?;
            } else {
                let mut started = false;
                if !coeff_is_one {
                    write!(f, "{mag}")?;
                    started = true;
                }
                for &(r, e) in &m.factors {
                    if started {
                        write!(f, "*")?;
                    }
                    started = true;
                    write!(f, "{}", self.table.info_at_rank(r).name)?;
                    if e != 1 {
                        write!(f, "^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for GradedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
