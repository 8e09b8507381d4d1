//! Differential graded structure on a generator table.
//!
//! A [`Cdga`] stores the differential only on generators; it is extended to
//! arbitrary elements as an odd derivation on demand. `check_square_zero`
//! and `check_morphism` report residuals instead of failing, so corrupted
//! data can be diagnosed.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::element::{GradedElement, Monomial};
use crate::error::Error;
use crate::table::{GenId, Table};

/// Extend generator images to an odd derivation (parity signs taken from
/// the table). `image` returns the value on each generator; factors with no
/// image contribute nothing.
pub fn derive(elem: &GradedElement, image: &dyn Fn(GenId) -> Option<GradedElement>) -> GradedElement {
    let table = elem.table().clone();
    let mut acc = GradedElement::zero(&table);
    for (m, c) in elem.terms() {
        let factors = m.factors();
        let mut prefix_neg = false;
        for (t, &(rank, exp)) in factors.iter().enumerate() {
            let id = table.id_at_rank(rank);
            let info = table.info(id);
            if let Some(dg) = image(id) {
                if !dg.is_zero() {
                    // (-1)^{p(prefix)} prefix * d(g^e) * suffix
                    let mut term = GradedElement::constant(&table, c.clone());
                    if prefix_neg {
                        term = -term;
                    }
                    let prefix = Monomial::from_factors(factors[..t].to_vec());
                    term = &term * &GradedElement::from_monomial(&table, prefix);
                    // d(g^e) = e * g^{e-1} * dg  (odd generators have e = 1)
                    if info.odd {
                        term = &term * &dg;
                    } else {
                        let pow = GradedElement::gen_pow(&table, id, exp - 1)
                            .expect("even generator power");
                        term = &term * &pow.scale_int(exp as i64);
                        term = &term * &dg;
                    }
                    let suffix = Monomial::from_factors(factors[t + 1..].to_vec());
                    term = &term * &GradedElement::from_monomial(&table, suffix);
                    acc = &acc + &term;
                }
            }
            if info.odd && exp.rem_euclid(2) == 1 {
                prefix_neg = !prefix_neg;
            }
        }
    }
    acc
}

/// A cdga presented by a generator table and the differential on generators.
#[derive(Clone, Debug)]
pub struct Cdga {
    table: Arc<Table>,
    diff: BTreeMap<GenId, GradedElement>,
    /// Relaxed only for the interval algebra and its tensor products.
    allow_positive: bool,
}

impl Cdga {
    /// Build and validate: differentials must be homogeneous of the
    /// generator's degree plus one (in the grading `cdegree`).
    pub fn new(table: Arc<Table>, diff: BTreeMap<GenId, GradedElement>) -> Result<Self, Error> {
        let c = Self::new_unchecked(table, diff, false);
        c.validate()?;
        Ok(c)
    }

    pub fn new_unchecked(
        table: Arc<Table>,
        diff: BTreeMap<GenId, GradedElement>,
        allow_positive: bool,
    ) -> Self {
        let diff = diff.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        Cdga { table, diff, allow_positive }
    }

    fn validate(&self) -> Result<(), Error> {
        for (&g, dg) in &self.diff {
            let info = self.table.info(g);
            if !self.allow_positive && info.degree == 0 && info.weight == 0 {
                return Err(Error::BadInstance(format!(
                    "degree-0 generator `{}` has nonzero differential",
                    info.name
                )));
            }
            let want = info.cdegree + 1;
            if !dg.is_zero() && dg.cdegree() != Some(want) {
                return Err(Error::DegreeMismatch {
                    expected: want,
                    found: format!("d({}) = {}", info.name, dg),
                });
            }
        }
        Ok(())
    }

    pub fn table(&self) -> &Arc<Table> {
        &self.table
    }

    pub fn allow_positive(&self) -> bool {
        self.allow_positive
    }

    pub fn diff_of(&self, g: GenId) -> GradedElement {
        self.diff.get(&g).cloned().unwrap_or_else(|| GradedElement::zero(&self.table))
    }

    pub fn diff_map(&self) -> &BTreeMap<GenId, GradedElement> {
        &self.diff
    }

    /// The differential, extended as a degree +1 derivation.
    pub fn d(&self, a: &GradedElement) -> GradedElement {
        assert_eq!(
            a.table().fingerprint(),
            self.table.fingerprint(),
            "element over a different table"
        );
        derive(a, &|g| self.diff.get(&g).cloned())
    }

    /// Evaluate `d(d g)` on every generator; nonzero residuals are reported
    /// with the offending generator.
    pub fn check_square_zero(&self) -> Vec<(GenId, GradedElement)> {
        let mut bad = Vec::new();
        for g in self.table.ids() {
            let r = self.d(&self.d(&GradedElement::generator(&self.table, g)));
            if !r.is_zero() {
                bad.push((g, r));
            }
        }
        bad
    }

    /// Virtual dimension: alternating sum over the ring generators,
    /// `sum_i (-1)^i m_i` with `m_i` the number of generators in degree i
    /// (degrees are counted by absolute value of the index).
    pub fn vdim(&self) -> i64 {
        let mut v = 0i64;
        for g in self.table.ring_ids() {
            let d = self.table.info(g).degree;
            v += if d.rem_euclid(2) == 0 { 1 } else { -1 };
        }
        v
    }
}

/// A morphism of cdgas, presented by generator images. Whether it commutes
/// with the differentials is a checkable predicate, not an assumption.
#[derive(Clone, Debug)]
pub struct CdgaMorphism {
    source: Cdga,
    target: Cdga,
    images: BTreeMap<GenId, GradedElement>,
}

impl CdgaMorphism {
    pub fn new(
        source: Cdga,
        target: Cdga,
        images: BTreeMap<GenId, GradedElement>,
    ) -> Result<Self, Error> {
        for (&g, im) in &images {
            let info = source.table().info(g);
            if !im.is_zero() && im.cdegree() != Some(info.cdegree) {
                return Err(Error::DegreeMismatch {
                    expected: info.cdegree,
                    found: format!("image of {} = {}", info.name, im),
                });
            }
        }
        Ok(CdgaMorphism { source, target, images })
    }

    pub fn identity(c: &Cdga) -> Self {
        let images = c
            .table()
            .ids()
            .map(|g| (g, GradedElement::generator(c.table(), g)))
            .collect();
        CdgaMorphism { source: c.clone(), target: c.clone(), images }
    }

    pub fn source(&self) -> &Cdga {
        &self.source
    }

    pub fn target(&self) -> &Cdga {
        &self.target
    }

    pub fn image_of(&self, g: GenId) -> Option<&GradedElement> {
        self.images.get(&g)
    }

    pub fn images(&self) -> &BTreeMap<GenId, GradedElement> {
        &self.images
    }

    /// Apply the morphism to an element of the source.
    pub fn apply(&self, a: &GradedElement) -> GradedElement {
        let target = self.target.table();
        let mut acc = GradedElement::zero(target);
        'term: for (m, c) in a.terms() {
            let mut prod = GradedElement::constant(target, c.clone());
            for &(rank, exp) in m.factors() {
                let id = a.table().id_at_rank(rank);
                let Some(im) = self.images.get(&id) else {
                    panic!("no image for generator `{}`", a.table().info(id).name);
                };
                let factor = if exp >= 0 {
                    im.pow(exp as u32)
                } else {
                    match im.invert_unit() {
                        Ok(inv) => inv.pow((-exp) as u32),
                        Err(_) => {
                            // image of an invertible generator must be a unit
                            panic!(
                                "image of invertible generator `{}` is not a unit",
                                a.table().info(id).name
                            );
                        }
                    }
                };
                if factor.is_zero() {
                    continue 'term;
                }
                prod = &prod * &factor;
            }
            acc = &acc + &prod;
        }
        acc
    }

    /// Residuals `d(f(g)) - f(d g)` per source generator; the morphism is
    /// valid iff all vanish.
    pub fn check(&self) -> Vec<(GenId, GradedElement)> {
        let mut bad = Vec::new();
        for g in self.source.table().ids() {
            if !self.images.contains_key(&g) {
                continue;
            }
            let lhs = self.target.d(self.images.get(&g).expect("image"));
            let rhs = self.apply(&self.source.diff_of(g));
            let r = &lhs - &rhs;
            if !r.is_zero() {
                bad.push((g, r));
            }
        }
        bad
    }
}

/// Interval algebra support: extend a cdga by `s` (degree 0) and `t`
/// (degree 1, odd) with `d s = t`, `d t = 0`. Restriction at `s = c, t = 0`
/// is an algebra morphism killing `t`.
#[derive(Clone, Debug)]
pub struct HomotopyAlgebra {
    pub base: Cdga,
    pub extended: Cdga,
    pub s: GenId,
    pub t: GenId,
}

impl HomotopyAlgebra {
    pub fn new(base: &Cdga) -> Result<Self, Error> {
        let table = base.table().extend_interval()?;
        let s = table.require("s")?;
        let t = table.require("t")?;
        // extension preserves generator ids
        let mut diff: BTreeMap<GenId, GradedElement> = base
            .diff_map()
            .iter()
            .map(|(&g, v)| (g, v.promote(&table)))
            .collect();
        diff.insert(s, GradedElement::generator(&table, t));
        let extended = Cdga::new_unchecked(table, diff, true);
        Ok(HomotopyAlgebra { base: base.clone(), extended, s, t })
    }

    /// Evaluate at `s = c, t = 0`, landing back in the base table.
    pub fn restrict(&self, a: &GradedElement, c: i64) -> Result<GradedElement, Error> {
        let mut point = BTreeMap::new();
        point.insert(self.s, crate::scalar::Scalar::from_int(c));
        let killed = a.filter_terms(|m| {
            !m.factors().iter().any(|&(r, _)| a.table().id_at_rank(r) == self.t)
        });
        let evaluated = killed.evaluate(&point)?;
        // rebuild over the base table
        let base_table = self.base.table();
        let mut out = GradedElement::zero(base_table);
        for (m, coeff) in evaluated.terms() {
            let mut term = GradedElement::constant(base_table, coeff.clone());
            for &(rank, exp) in m.factors() {
                let name = &evaluated.table().info_at_rank(rank).name;
                let id = base_table.require(name)?;
                term = &term * &GradedElement::gen_pow(base_table, id, exp)?;
            }
            out = &out + &term;
        }
        Ok(out)
    }
}
