//! Generator tables for free graded-commutative algebras.
//!
//! A table fixes the alphabet of an algebra: ring generators, their de Rham
//! symbols `d(g)`, polyvector symbols `D(g)`, and the interval generators
//! `s`, `t` used for homotopies. The canonical monomial order is the
//! lexicographic order on generator names; every element over a table is
//! stored sorted by that order.
//!
//! Each generator carries an explicit Koszul parity. For ring generators it
//! is the degree mod 2; for `d(g)` it is `|g| + 1`; for `D(g)` in the
//! algebra of polyvectors with shift parameter `k` it is `|g| + k + 1`.
//! Parities are stored rather than recomputed so that the same element type
//! serves functions, forms and polyvectors.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::Error;
use crate::scalar::Field;

pub type GenId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GenKind {
    /// An ordinary ring generator.
    Ring,
    /// The de Rham symbol `d(g)` of the ring generator `g`.
    Form { base: GenId },
    /// The dual symbol `D(g)` (a shifted vector field) of `g`.
    Vector { base: GenId },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GenInfo {
    pub name: String,
    /// Internal (cohomological) degree. For `D(g)` this is `-|g|`, the
    /// unshifted degree a polyvector reports.
    pub degree: i64,
    /// Degree used when grading differentials; differs from `degree` only
    /// for vector symbols, where the shift enters.
    pub cdegree: i64,
    /// Koszul parity: true = odd.
    pub odd: bool,
    /// Form weight (for `d(g)`) or polyvector weight (for `D(g)`).
    pub weight: u32,
    pub invertible: bool,
    pub kind: GenKind,
}

/// Specification of one ring generator when building a table. The JSON
/// form carries `form_degree` as well, so symbol tables round-trip.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct GenSpec {
    pub name: String,
    pub degree: i64,
    #[serde(default)]
    pub form_degree: u32,
    #[serde(default)]
    pub invertible: bool,
}

impl GenSpec {
    pub fn new(name: impl Into<String>, degree: i64) -> Self {
        GenSpec { name: name.into(), degree, form_degree: 0, invertible: false }
    }

    pub fn unit(name: impl Into<String>) -> Self {
        GenSpec { name: name.into(), degree: 0, form_degree: 0, invertible: true }
    }
}

#[derive(Debug)]
pub struct Table {
    gens: Vec<GenInfo>,
    by_name: BTreeMap<String, GenId>,
    /// rank_of[id] = position of the generator in name-lex order.
    rank_of: Vec<u32>,
    /// id_by_rank[rank] = generator id.
    id_by_rank: Vec<GenId>,
    field: Field,
    /// Shift parameter of the vector extension, if any.
    vector_shift: Option<i64>,
    fingerprint: u64,
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
    }
}
impl Eq for Table {}

impl Table {
    pub fn new(field: Field, specs: Vec<GenSpec>) -> Result<Arc<Table>, Error> {
        let mut gens = Vec::with_capacity(specs.len());
        for s in specs {
            if s.invertible && s.degree != 0 {
                return Err(Error::BadInstance(format!(
                    "invertible generator `{}` must have degree 0",
                    s.name
                )));
            }
            check_name(&s.name)?;
            gens.push(GenInfo {
                odd: s.degree.rem_euclid(2) == 1,
                cdegree: s.degree,
                degree: s.degree,
                weight: 0,
                invertible: s.invertible,
                kind: GenKind::Ring,
                name: s.name,
            });
        }
        Self::build(field, gens, None)
    }

    fn build(field: Field, gens: Vec<GenInfo>, vector_shift: Option<i64>) -> Result<Arc<Table>, Error> {
        let mut by_name = BTreeMap::new();
        for (i, g) in gens.iter().enumerate() {
            if by_name.insert(g.name.clone(), i as GenId).is_some() {
                return Err(Error::DuplicateGenerator(g.name.clone()));
            }
        }
        let mut order: Vec<GenId> = (0..gens.len() as GenId).collect();
        order.sort_by(|a, b| gens[*a as usize].name.cmp(&gens[*b as usize].name));
        let mut rank_of = vec![0u32; gens.len()];
        for (rank, id) in order.iter().enumerate() {
            rank_of[*id as usize] = rank as u32;
        }
        let mut h = DefaultHasher::new();
        for id in &order {
            gens[*id as usize].hash(&mut h);
        }
        vector_shift.hash(&mut h);
        (field == Field::Qi).hash(&mut h);
        let fingerprint = h.finish();
        Ok(Arc::new(Table { gens, by_name, rank_of, id_by_rank: order, field, vector_shift, fingerprint }))
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn vector_shift(&self) -> Option<i64> {
        self.vector_shift
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn info(&self, id: GenId) -> &GenInfo {
        &self.gens[id as usize]
    }

    pub fn rank(&self, id: GenId) -> u32 {
        self.rank_of[id as usize]
    }

    pub fn id_at_rank(&self, rank: u32) -> GenId {
        self.id_by_rank[rank as usize]
    }

    pub fn info_at_rank(&self, rank: u32) -> &GenInfo {
        self.info(self.id_at_rank(rank))
    }

    pub fn lookup(&self, name: &str) -> Option<GenId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<GenId, Error> {
        self.lookup(name).ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = GenId> + '_ {
        0..self.gens.len() as GenId
    }

    pub fn ring_ids(&self) -> impl Iterator<Item = GenId> + '_ {
        self.ids().filter(|id| matches!(self.info(*id).kind, GenKind::Ring))
    }

    /// Ids of the `d(g)` symbols, paired with their base generator.
    pub fn form_ids(&self) -> impl Iterator<Item = (GenId, GenId)> + '_ {
        self.ids().filter_map(|id| match self.info(id).kind {
            GenKind::Form { base } => Some((id, base)),
            _ => None,
        })
    }

    pub fn vector_ids(&self) -> impl Iterator<Item = (GenId, GenId)> + '_ {
        self.ids().filter_map(|id| match self.info(id).kind {
            GenKind::Vector { base } => Some((id, base)),
            _ => None,
        })
    }

    /// The `d(g)` symbol of a ring generator, if this table has one.
    pub fn form_symbol(&self, base: GenId) -> Option<GenId> {
        self.lookup(&format!("d({})", self.info(base).name))
    }

    pub fn vector_symbol(&self, base: GenId) -> Option<GenId> {
        self.lookup(&format!("D({})", self.info(base).name))
    }

    /// Extend by de Rham symbols `d(g)` for every ring generator.
    /// Base generators keep their ids; symbols are appended.
    pub fn extend_forms(self: &Arc<Table>) -> Arc<Table> {
        let mut gens = self.gens.clone();
        for id in self.ring_ids() {
            let g = self.info(id);
            gens.push(GenInfo {
                name: format!("d({})", g.name),
                degree: g.degree,
                cdegree: g.degree,
                odd: (g.degree + 1).rem_euclid(2) == 1,
                weight: 1,
                invertible: false,
                kind: GenKind::Form { base: id },
            });
        }
        Self::build(self.field, gens, self.vector_shift).expect("extension cannot collide")
    }

    /// Extend by vector symbols `D(g)` for every ring generator. `shift` is
    /// the parameter `k` of the polyvector algebra Sym(T[-k-1]): `D(g)` gets
    /// parity `|g| + shift + 1` and reports unshifted degree `-|g|`.
    pub fn extend_vectors(self: &Arc<Table>, shift: i64) -> Arc<Table> {
        let mut gens = self.gens.clone();
        for id in self.ring_ids() {
            let g = self.info(id);
            gens.push(GenInfo {
                name: format!("D({})", g.name),
                degree: -g.degree,
                cdegree: -g.degree + shift + 1,
                odd: (g.degree + shift + 1).rem_euclid(2) == 1,
                weight: 1,
                invertible: false,
                kind: GenKind::Vector { base: id },
            });
        }
        Self::build(self.field, gens, Some(shift)).expect("extension cannot collide")
    }

    /// Extend by the interval generators `s` (degree 0) and `t` (degree 1,
    /// odd) that support homotopies of morphisms.
    pub fn extend_interval(self: &Arc<Table>) -> Result<Arc<Table>, Error> {
        let mut gens = self.gens.clone();
        gens.push(GenInfo {
            name: "s".into(),
            degree: 0,
            cdegree: 0,
            odd: false,
            weight: 0,
            invertible: false,
            kind: GenKind::Ring,
        });
        gens.push(GenInfo {
            name: "t".into(),
            degree: 1,
            cdegree: 1,
            odd: true,
            weight: 0,
            invertible: false,
            kind: GenKind::Ring,
        });
        Self::build(self.field, gens, self.vector_shift)
    }

    /// True when `other` extends `self` with the same ids for shared
    /// generators (our extensions always append).
    pub fn extends(&self, base: &Table) -> bool {
        base.gens.len() <= self.gens.len()
            && base.gens.iter().zip(&self.gens).all(|(a, b)| a == b)
            && self.field == base.field
    }

    /// Serialize the generator list: ring generators at form degree 0, de
    /// Rham symbols at form degree 1.
    pub fn spec(&self) -> Vec<GenSpec> {
        self.gens
            .iter()
            .map(|g| GenSpec {
                name: g.name.clone(),
                degree: g.degree,
                form_degree: g.weight,
                invertible: g.invertible,
            })
            .collect()
    }

    /// Rebuild a table from a serialized generator list. Entries of form
    /// degree 1 must be exactly the `d(g)` symbols of the ring part.
    pub fn from_spec(field: Field, specs: &[GenSpec]) -> Result<Arc<Table>, Error> {
        let ring: Vec<GenSpec> = specs.iter().filter(|s| s.form_degree == 0).cloned().collect();
        let symbols: Vec<&GenSpec> = specs.iter().filter(|s| s.form_degree > 0).collect();
        if symbols.iter().any(|s| s.form_degree > 1) {
            return Err(Error::BadInstance("form degrees above one are not serialized".into()));
        }
        let base = Table::new(field, ring)?;
        if symbols.is_empty() {
            return Ok(base);
        }
        let extended = base.extend_forms();
        for s in &symbols {
            let id = extended.require(&s.name)?;
            let info = extended.info(id);
            if info.weight != 1 || info.degree != s.degree {
                return Err(Error::BadInstance(format!(
                    "symbol `{}` does not match the ring part",
                    s.name
                )));
            }
        }
        let n_syms = extended.form_ids().count();
        if n_syms != symbols.len() {
            return Err(Error::BadInstance(
                "a partial symbol list does not present a table".into(),
            ));
        }
        Ok(extended)
    }
}

fn check_name(name: &str) -> Result<(), Error> {
    let mut chars = name.chars();
    let ok_head = chars.next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false);
    let ok_tail = name.chars().skip(1).all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok_head || !ok_tail {
        return Err(Error::BadInstance(format!("`{name}` is not a valid generator name")));
    }
    if name == "i" || name == "d" || name == "D" {
        return Err(Error::BadInstance(format!("`{name}` is reserved")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_follow_name_order() {
        let t = Table::new(
            Field::Q,
            vec![GenSpec::new("y1", -1), GenSpec::new("x1", 0), GenSpec::new("a", 0)],
        )
        .unwrap();
        let a = t.require("a").unwrap();
        let x = t.require("x1").unwrap();
        let y = t.require("y1").unwrap();
        assert!(t.rank(a) < t.rank(x) && t.rank(x) < t.rank(y));
    }

    #[test]
    fn form_extension_parities() {
        let t = Table::new(Field::Q, vec![GenSpec::new("x", 0), GenSpec::new("y", -1)]).unwrap();
        let ft = t.extend_forms();
        let dx = ft.require("d(x)").unwrap();
        let dy = ft.require("d(y)").unwrap();
        assert!(ft.info(dx).odd);
        assert!(!ft.info(dy).odd);
        assert!(ft.extends(&t));
        assert_eq!(ft.require("x").unwrap(), t.require("x").unwrap());
    }

    #[test]
    fn vector_extension_shifted_parity() {
        let t = Table::new(Field::Q, vec![GenSpec::new("x", 0), GenSpec::new("y", -1)]).unwrap();
        // shift k = -1: D(x) even, D(y) odd
        let vt = t.extend_vectors(-1);
        assert!(!vt.info(vt.require("D(x)").unwrap()).odd);
        assert!(vt.info(vt.require("D(y)").unwrap()).odd);
        assert_eq!(vt.info(vt.require("D(y)").unwrap()).degree, 1);
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(Table::new(Field::Q, vec![GenSpec::new("x", 0), GenSpec::new("x", -1)]).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let t = Table::new(
            Field::Q,
            vec![GenSpec::new("x", 0), GenSpec::unit("q"), GenSpec::new("y", -1)],
        )
        .unwrap()
        .extend_forms();
        let json = serde_json::to_string(&t.spec()).unwrap();
        let specs: Vec<GenSpec> = serde_json::from_str(&json).unwrap();
        let t2 = Table::from_spec(Field::Q, &specs).unwrap();
        assert_eq!(t.fingerprint(), t2.fingerprint());
        // a partial symbol list is rejected
        let partial: Vec<GenSpec> =
            t.spec().into_iter().filter(|s| s.name != "d(x)").collect();
        assert!(Table::from_spec(Field::Q, &partial).is_err());
    }
}
