//! Property tests for the arithmetic kernel, with shrinking. The
//! acceptance suite runs the same laws at volume; these stay small so
//! counterexamples minimize well.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use darboux_core::cdga::Cdga;
use darboux_core::derham::{de_rham, form_extension};
use darboux_core::element::GradedElement;
use darboux_core::parse::{parse, print};
use darboux_core::scalar::{Field, Scalar};
use darboux_core::table::{GenSpec, Table};

fn fixture() -> (Arc<Table>, Cdga) {
    let table = Table::new(
        Field::Q,
        vec![
            GenSpec::new("x", 0),
            GenSpec::unit("c"),
            GenSpec::new("a1", -1),
            GenSpec::new("a2", -1),
            GenSpec::new("b", -2),
        ],
    )
    .unwrap();
    let mut diff = BTreeMap::new();
    diff.insert(table.require("a1").unwrap(), parse("x^2", &table).unwrap());
    diff.insert(table.require("a2").unwrap(), parse("-x^2", &table).unwrap());
    diff.insert(table.require("b").unwrap(), parse("x*a1 + x*a2", &table).unwrap());
    let cdga = Cdga::new(table.clone(), diff).unwrap();
    (table, cdga)
}

/// One random monomial as (exponent choices per generator).
fn arb_monomial(table: Arc<Table>) -> impl Strategy<Value = GradedElement> {
    let n = table.len();
    proptest::collection::vec(-2i32..=2, n).prop_map(move |exps| {
        let mut m = GradedElement::one(&table);
        for (idx, &e) in exps.iter().enumerate() {
            let id = idx as u32;
            let info = table.info(id);
            let e = if info.odd {
                e.clamp(0, 1)
            } else if info.invertible {
                e
            } else {
                e.clamp(0, 2)
            };
            if let Ok(p) = GradedElement::gen_pow(&table, id, e) {
                m = &m * &p;
            }
        }
        m
    })
}

fn arb_element(table: Arc<Table>) -> impl Strategy<Value = GradedElement> {
    let t2 = table.clone();
    proptest::collection::vec((arb_monomial(table), -4i64..=4), 1..4).prop_map(move |terms| {
        let mut out = GradedElement::zero(&t2);
        for (m, c) in terms {
            out = &out + &m.scale(&Scalar::from_int(c));
        }
        out
    })
}

/// Parity-homogeneous slice of an element (largest-parity part).
fn homogeneous_part(e: &GradedElement) -> GradedElement {
    if e.parity().is_some() {
        return e.clone();
    }
    let table = e.table().clone();
    let even = e.filter_terms(|m| {
        let el = GradedElement::from_monomial(&table, m.clone());
        el.parity() == Some(false)
    });
    if even.num_terms() > 0 {
        even
    } else {
        e.filter_terms(|m| {
            let el = GradedElement::from_monomial(&table, m.clone());
            el.parity() == Some(true)
        })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn graded_commutativity(a0 in fixture_elem(), b0 in fixture_elem()) {
        let a = homogeneous_part(&a0);
        let b = homogeneous_part(&b0);
        if let (Some(pa), Some(pb)) = (a.parity(), b.parity()) {
            let sign = if pa && pb { -1 } else { 1 };
            prop_assert_eq!(&a * &b, (&b * &a).scale_int(sign));
        }
    }

    #[test]
    fn associativity(a in fixture_elem(), b in fixture_elem(), c in fixture_elem()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
    }

    #[test]
    fn subtraction_is_equality(a in fixture_elem(), b in fixture_elem()) {
        prop_assert_eq!(a == b, (&a - &b).is_zero());
    }

    #[test]
    fn derivative_leibniz(a0 in fixture_elem(), b in fixture_elem(), gidx in 0u32..5) {
        let a = homogeneous_part(&a0);
        let Some(pa) = a.parity() else { return Ok(()); };
        let table = a.table().clone();
        let pg = table.info(gidx).odd;
        let lhs = (&a * &b).differentiate(gidx);
        let sign = if pa && pg { -1 } else { 1 };
        let rhs = &(&a.differentiate(gidx) * &b) + &(&a * &b.differentiate(gidx)).scale_int(sign);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn differentials_square_to_zero(a in form_elem()) {
        let (_, cdga) = fixture();
        let forms = form_extension(&cdga);
        prop_assert!(forms.d(&forms.d(&a)).is_zero());
        prop_assert!(de_rham(&de_rham(&a)).is_zero());
        let anti = &forms.d(&de_rham(&a)) + &de_rham(&forms.d(&a));
        prop_assert!(anti.is_zero());
    }

    #[test]
    fn parser_round_trip(a in form_elem()) {
        let s = print(&a);
        let b = parse(&s, a.table()).expect("canonical text reparses");
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(print(&b), s);
    }
}

fn fixture_elem() -> impl Strategy<Value = GradedElement> {
    let (table, _) = fixture();
    arb_element(table)
}

fn form_elem() -> impl Strategy<Value = GradedElement> {
    let (_, cdga) = fixture();
    let ftable = form_extension(&cdga).table().clone();
    arb_element(ftable)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pushforward_commutes_with_de_rham(a in form_elem()) {
        use darboux_core::cdga::CdgaMorphism;
        use darboux_core::derham::pushforward;
        let (table, cdga) = fixture();
        // a morphism into a larger algebra with a nontrivial image
        let t2 = Table::new(
            Field::Q,
            vec![
                GenSpec::new("x", 0),
                GenSpec::new("u", 0),
                GenSpec::unit("c"),
                GenSpec::new("a1", -1),
                GenSpec::new("a2", -1),
                GenSpec::new("b", -2),
            ],
        )
        .unwrap();
        let mut d2 = BTreeMap::new();
        d2.insert(t2.require("a1").unwrap(), parse("x^2", &t2).unwrap());
        d2.insert(t2.require("a2").unwrap(), parse("-x^2", &t2).unwrap());
        d2.insert(t2.require("b").unwrap(), parse("x*a1 + x*a2", &t2).unwrap());
        let c2 = darboux_core::cdga::Cdga::new(t2.clone(), d2).unwrap();
        let mut im = BTreeMap::new();
        im.insert(table.require("x").unwrap(), parse("x + u^2", &t2).unwrap());
        im.insert(table.require("c").unwrap(), parse("2*c^-1", &t2).unwrap());
        im.insert(table.require("a1").unwrap(), parse("a1", &t2).unwrap());
        im.insert(table.require("a2").unwrap(), parse("a2", &t2).unwrap());
        im.insert(table.require("b").unwrap(), parse("b", &t2).unwrap());
        let f = CdgaMorphism::new(cdga, c2, im).unwrap();
        let lhs = pushforward(&f, &de_rham(&a));
        let rhs = de_rham(&pushforward(&f, &a));
        prop_assert_eq!(lhs, rhs);
    }
}
