//! Kähler differentials, wedge powers, the de Rham differential and the
//! induced internal differential on forms, pushforward along morphisms,
//! and contraction against polyvectors.
//!
//! Forms live in the same canonical-polynomial representation as ring
//! elements: `d(g)` is just one more generator, of internal degree `|g|`,
//! form weight 1 and parity `|g| + 1`.
//!
//! Sign ledger. Both the internal differential `d` and the de Rham
//! differential `d_dR` are odd derivations for the total parity
//! `(degree + weight) mod 2`, the internal differential of a symbol is
//! `d(d(g)) = -d_dR(d g)`, and consequently `d` and `d_dR` anticommute:
//! `d . d_dR + d_dR . d = 0`. This is the unique assignment under which the
//! closed identities of the Darboux models come out exactly; the
//! calibration suite in `darboux` pins it.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cdga::{derive, Cdga, CdgaMorphism};
use crate::element::GradedElement;
use crate::error::Error;
use crate::table::{GenId, Table};

/// The de Rham differential: `g -> d(g)`, `d(g) -> 0`, extended as an odd
/// derivation. The element must live over a form-extended table.
pub fn de_rham(a: &GradedElement) -> GradedElement {
    let table = a.table().clone();
    derive(a, &|g| {
        table
            .form_symbol(g)
            .map(|sym| GradedElement::generator(&table, sym))
    })
}

/// The form extension of a cdga: same differential on ring generators plus
/// `d(d(g)) = -d_dR(d g)` on symbols. Elements of the result support both
/// `d` (via [`Cdga::d`]) and [`de_rham`].
pub fn form_extension(c: &Cdga) -> Cdga {
    let table = c.table().extend_forms();
    let mut diff: BTreeMap<GenId, GradedElement> = c
        .diff_map()
        .iter()
        .map(|(&g, v)| (g, v.promote(&table)))
        .collect();
    for (sym, base) in table.form_ids() {
        let dg = c.diff_of(base).promote(&table);
        let v = -&de_rham(&dg);
        if !v.is_zero() {
            diff.insert(sym, v);
        }
    }
    Cdga::new_unchecked(table, diff, c.allow_positive())
}

/// Pushforward of forms along a morphism: `g -> f(g)`,
/// `d(g) -> d_dR(f(g))`; an algebra morphism on forms.
pub fn pushforward(f: &CdgaMorphism, a: &GradedElement) -> GradedElement {
    form_morphism(f).apply(a)
}

/// The morphism between form extensions induced by `f`.
pub fn form_morphism(f: &CdgaMorphism) -> CdgaMorphism {
    let src = form_extension(f.source());
    let tgt = form_extension(f.target());
    let tgt_table = tgt.table().clone();
    let mut images: BTreeMap<GenId, GradedElement> = f
        .images()
        .iter()
        .map(|(&g, v)| (g, v.promote(&tgt_table)))
        .collect();
    for (sym, base) in src.table().form_ids() {
        if let Some(im) = f.image_of(base) {
            images.insert(sym, de_rham(&im.promote(&tgt_table)));
        }
    }
    CdgaMorphism::new(src, tgt, images).expect("degree-preserving by construction")
}

/// Interior product with a single vector symbol `D(g)`: the derivation (of
/// the symbol's parity) that kills ring generators and other symbols and
/// sends `d(g) -> 1`.
fn interior_single(table: &Arc<Table>, vec_sym: GenId, a: &GradedElement) -> GradedElement {
    let base = match table.info(vec_sym).kind {
        crate::table::GenKind::Vector { base } => base,
        _ => panic!("interior product needs a vector symbol"),
    };
    let Some(form_sym) = table.form_symbol(base) else {
        return GradedElement::zero(table);
    };
    // The derivation extension of "strip one d(g)" with the operator parity
    // of D(g). When D(g) and d(g) have the same parity this is exactly a
    // signed partial derivative; in general the operator moves past a
    // prefix with the parity of D(g).
    let vec_odd = table.info(vec_sym).odd;
    let form_odd = table.info(form_sym).odd;
    if vec_odd == form_odd {
        return a.differentiate(form_sym);
    }
    // Parities differ: same stripping rule, but the crossing signs come from
    // the operator parity, not the stripped symbol's.
    let mut acc = GradedElement::zero(table);
    for (m, c) in a.terms() {
        let rank = table.rank(form_sym);
        let Some(pos) = m.factors().iter().position(|&(r, _)| r == rank) else {
            continue;
        };
        let (_, e) = m.factors()[pos];
        let mut neg = false;
        if vec_odd {
            for &(r, ex) in &m.factors()[..pos] {
                if table.info_at_rank(r).odd && ex.rem_euclid(2) == 1 {
                    neg = !neg;
                }
            }
        }
        let mut factors = m.factors().to_vec();
        let mut coeff = c.clone();
        if form_odd {
            factors.remove(pos);
        } else {
            coeff = &coeff * &crate::scalar::Scalar::from_int(e as i64);
            if e == 1 {
                factors.remove(pos);
            } else {
                factors[pos].1 = e - 1;
            }
        }
        if neg {
            coeff = -coeff;
        }
        let term = GradedElement::from_monomial(table, crate::element::Monomial::from_factors(factors))
            .scale(&coeff);
        acc = &acc + &term;
    }
    acc
}

/// Contraction of a polyvector against a form of at least its weight; at
/// equal weights this is the full pairing into ring elements.
///
/// For a polyvector monomial `c * f * X_1 ... X_r` (canonical word order,
/// `f` the ring part) the contraction is `c * f * i_{X_1}(... i_{X_r} ...)`
/// read inside out from the word: the leftmost symbol acts first. Since
/// interior products graded-commute exactly like the symbols themselves,
/// this is well defined on canonical forms.
pub fn contract(v: &GradedElement, a: &GradedElement) -> Result<GradedElement, Error> {
    let table = v.table().clone();
    assert_eq!(table.fingerprint(), a.table().fingerprint(), "mismatched generator tables");
    if v.is_zero() || a.is_zero() {
        return Ok(GradedElement::zero(&table));
    }
    let (Some(wv), Some(wa)) = (v.weight(), a.weight()) else {
        return Err(Error::BadInstance("contraction needs weight-homogeneous arguments".into()));
    };
    if wv > wa {
        return Err(Error::BadInstance(format!(
            "weight mismatch: polyvector weight {wv}, form weight {wa}"
        )));
    }
    let mut acc = GradedElement::zero(&table);
    for (m, c) in v.terms() {
        // split the word into ring prefactor and vector symbols, tracking
        // the Koszul sign of moving ring factors to the front
        let mut ring = Vec::new();
        let mut syms: Vec<GenId> = Vec::new();
        let mut neg = false;
        let mut syms_parity_after = 0u32; // parity of symbols seen so far
        for &(r, e) in m.factors() {
            let id = table.id_at_rank(r);
            let info = table.info(id);
            match info.kind {
                crate::table::GenKind::Vector { .. } => {
                    for _ in 0..e {
                        syms.push(id);
                        if info.odd {
                            syms_parity_after += 1;
                        }
                    }
                }
                _ => {
                    // ring or form factor moves left past the symbols
                    // collected so far
                    if info.odd && e.rem_euclid(2) == 1 && syms_parity_after % 2 == 1 {
                        neg = !neg;
                    }
                    ring.push((r, e));
                }
            }
        }
        // leftmost symbol acts first: i_{X1 X2} = i_{X2} . i_{X1}
        let mut val = a.clone();
        for &sym in syms.iter() {
            val = interior_single(&table, sym, &val);
            if val.is_zero() {
                break;
            }
        }
        let mut term = GradedElement::from_monomial(
            &table,
            crate::element::Monomial::from_factors(ring),
        );
        term = &term * &val;
        let mut coeff = c.clone();
        if neg {
            coeff = -coeff;
        }
        acc = &acc + &term.scale(&coeff);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use crate::scalar::Field;
    use crate::table::GenSpec;

    #[test]
    fn de_rham_squares_to_zero() {
        let t = Table::new(
            Field::Q,
            vec![GenSpec::new("x", 0), GenSpec::new("y", -1), GenSpec::new("w", -2)],
        )
        .unwrap()
        .extend_forms();
        for src in ["x^3*y", "x*y*w", "w^2 - x*w"] {
            let e = parse(src, &t).unwrap();
            assert!(de_rham(&de_rham(&e)).is_zero(), "d_dR^2 != 0 on {src}");
        }
    }

    #[test]
    fn anticommutation_ledger() {
        // A = Q[x][y], d y = 3x^2 (Crit(x^3)); on the form extension
        // d . d_dR + d_dR . d = 0.
        let t = Table::new(Field::Q, vec![GenSpec::new("x", 0), GenSpec::new("y", -1)]).unwrap();
        let mut diff = BTreeMap::new();
        diff.insert(t.require("y").unwrap(), parse("3*x^2", &t).unwrap());
        let c = Cdga::new(t, diff).unwrap();
        let fc = form_extension(&c);
        let ft = fc.table();
        for src in ["y", "x*y", "d(y)", "x*d(y)", "y*d(x)", "d(x)*d(y)"] {
            let e = parse(src, ft).unwrap();
            let r = &fc.d(&de_rham(&e)) + &de_rham(&fc.d(&e));
            assert!(r.is_zero(), "anticommutator nonzero on {src}: {r}");
        }
        assert!(fc.check_square_zero().is_empty());
    }

    #[test]
    fn pushforward_commutes_with_de_rham() {
        let t = Table::new(Field::Q, vec![GenSpec::new("x", 0), GenSpec::new("y", -1)]).unwrap();
        let mut diff = BTreeMap::new();
        diff.insert(t.require("y").unwrap(), parse("2*x", &t).unwrap());
        let a = Cdga::new(t.clone(), diff).unwrap();
        let s = Table::new(
            Field::Q,
            vec![GenSpec::new("x", 0), GenSpec::new("u", 0), GenSpec::new("y", -1)],
        )
        .unwrap();
        let mut sdiff = BTreeMap::new();
        sdiff.insert(s.require("y").unwrap(), parse("2*x", &s).unwrap());
        let b = Cdga::new(s.clone(), sdiff).unwrap();
        let mut images = BTreeMap::new();
        images.insert(t.require("x").unwrap(), parse("x", &s).unwrap());
        images.insert(t.require("y").unwrap(), parse("y", &s).unwrap());
        let f = CdgaMorphism::new(a.clone(), b, images).unwrap();
        assert!(f.check().is_empty());
        let ft = form_extension(&a);
        for src in ["x^2*y", "x*d(y) - y*d(x)", "d(x)*d(y)"] {
            let e = parse(src, ft.table()).unwrap();
            let lhs = pushforward(&f, &de_rham(&e));
            let rhs = de_rham(&pushforward(&f, &e));
            assert_eq!(lhs, rhs, "pushforward vs d_dR on {src}");
        }
    }

    #[test]
    fn contraction_pairs_symbols() {
        // k = -1 ledger: D(x) even, D(y) odd; i_{D(x)D(y)}(d(x)d(y)) = 1.
        let t = Table::new(Field::Q, vec![GenSpec::new("x", 0), GenSpec::new("y", -1)])
            .unwrap()
            .extend_forms()
            .extend_vectors(-1);
        let pi = parse("D(x)*D(y)", &t).unwrap();
        let omega = parse("d(x)*d(y)", &t).unwrap();
        let r = contract(&pi, &omega).unwrap();
        assert_eq!(r, GradedElement::one(&t));
        // missing paired symbols contract to zero
        let r2 = contract(&parse("D(y)", &t).unwrap(), &parse("d(x)", &t).unwrap()).unwrap();
        assert!(r2.is_zero());
        // weight mismatch is an error
        assert!(contract(&pi, &parse("d(x)", &t).unwrap()).is_err());
    }
}
