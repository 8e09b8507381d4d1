//! Expression parser and printer.
//!
//! Grammar: rational literals `p/q`, generator names, `+ - * ^`,
//! parentheses, unary minus. `i` is the imaginary unit when the table's
//! field is Q(i). De Rham symbols are written `d(g)`, vector symbols
//! `D(g)`. Printing produces the canonical form; `print . parse` is the
//! identity on canonical text and `parse . print` on elements.

use num_bigint::BigInt;
use num_rational::BigRational;
use std::sync::Arc;

use crate::element::GradedElement;
use crate::error::Error;
use crate::scalar::Scalar;
use crate::table::Table;

pub fn parse(text: &str, table: &Arc<Table>) -> Result<GradedElement, Error> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0, table };
    p.skip_ws();
    if p.at_end() {
        return Ok(GradedElement::zero(table));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

pub fn print(e: &GradedElement) -> String {
    e.to_string()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    table: &'a Arc<Table>,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<GradedElement, Error> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<GradedElement, Error> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                acc = &acc * &self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<GradedElement, Error> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(-&self.factor()?);
        }
        let atom = self.atom()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.int_literal()?;
            return self.power(atom, exp);
        }
        Ok(atom)
    }

    fn power(&mut self, base: GradedElement, exp: i64) -> Result<GradedElement, Error> {
        // a single generator may carry any legal exponent; general elements
        // only nonnegative ones
        if base.num_terms() == 1 {
            let (m, c) = base.terms().next().expect("one term");
            if c.is_one() && m.factors().len() == 1 && m.factors()[0].1 == 1 {
                let id = base.table().id_at_rank(m.factors()[0].0);
                let exp32 = i32::try_from(exp).map_err(|_| self.err("exponent out of range"))?;
                return GradedElement::gen_pow(base.table(), id, exp32);
            }
        }
        if exp < 0 {
            let inv = base.invert_unit()?;
            return Ok(inv.pow((-exp) as u32));
        }
        Ok(base.pow(u32::try_from(exp).map_err(|_| self.err("exponent out of range"))?))
    }

    fn atom(&mut self) -> Result<GradedElement, Error> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let r = self.rational_literal()?;
                Ok(GradedElement::constant(self.table, Scalar::from_rational(r)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name_atom(),
            _ => Err(self.err("expected a literal, generator or `(`")),
        }
    }

    fn name_atom(&mut self) -> Result<GradedElement, Error> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        if (name == "d" || name == "D") && self.peek() == Some(b'(') {
            self.pos += 1;
            let inner_start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += 1;
            }
            let inner =
                std::str::from_utf8(&self.bytes[inner_start..self.pos]).expect("ascii").to_string();
            if self.bump() != Some(b')') {
                return Err(self.err("expected `)` after symbol name"));
            }
            let full = format!("{name}({inner})");
            let id = self.table.require(&full)?;
            return Ok(GradedElement::generator(self.table, id));
        }
        if name == "i" {
            if !self.table.field().has_i() {
                return Err(self.err("`i` requires field Q(i)"));
            }
            return Ok(GradedElement::constant(self.table, Scalar::i()));
        }
        let id = self.table.require(name)?;
        Ok(GradedElement::generator(self.table, id))
    }

    fn int_literal(&mut self) -> Result<i64, Error> {
        self.skip_ws();
        let neg = self.peek() == Some(b'-');
        if neg {
            self.pos += 1;
        }
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected an integer"));
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        let v: i64 = s.parse().map_err(|_| self.err("integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    fn rational_literal(&mut self) -> Result<BigRational, Error> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let numer: BigInt = std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii")
            .parse()
            .expect("digits");
        if self.peek() == Some(b'/') {
            // only a literal denominator: digits must follow immediately
            if matches!(self.bytes.get(self.pos + 1), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
                let dstart = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let denom: BigInt = std::str::from_utf8(&self.bytes[dstart..self.pos])
                    .expect("ascii")
                    .parse()
                    .expect("digits");
                if denom == BigInt::from(0) {
                    return Err(self.err("zero denominator"));
                }
                return Ok(BigRational::new(numer, denom));
            }
            return Err(self.err("`/` is only valid inside a rational literal"));
        }
        Ok(BigRational::from_integer(numer))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Field;
    use crate::table::GenSpec;

    fn tbl() -> Arc<Table> {
        Table::new(
            Field::Q,
            vec![GenSpec::new("x", 0), GenSpec::new("y", -1), GenSpec::unit("q")],
        )
        .unwrap()
    }

    #[test]
    fn two_term_polynomial() {
        let t = tbl();
        let e = parse("3*x^2 - 1/2*y", &t).unwrap();
        assert_eq!(e.num_terms(), 2);
        assert_eq!(print(&e), "3*x^2 - 1/2*y");
    }

    #[test]
    fn odd_power_rejected() {
        let t = tbl();
        match parse("y^2", &t) {
            Err(Error::OddPower(name, 2)) => assert_eq!(name, "y"),
            other => panic!("expected OddPower, got {other:?}"),
        }
    }

    #[test]
    fn negative_power_needs_unit() {
        let t = tbl();
        assert!(parse("q^-2", &t).is_ok());
        assert!(matches!(parse("x^-1", &t), Err(Error::NegativePower(_, _))));
    }

    #[test]
    fn unknown_name_has_offset() {
        let t = tbl();
        match parse("x + zz", &t) {
            Err(Error::UnknownGenerator(n)) => assert_eq!(n, "zz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn imaginary_unit_gated() {
        let t = tbl();
        assert!(parse("i*x", &t).is_err());
        let ti = Table::new(Field::Qi, vec![GenSpec::new("x", 0)]).unwrap();
        let e = parse("i*x", &ti).unwrap();
        assert_eq!(print(&e), "i*x");
    }

    #[test]
    fn print_parse_round_trip_on_canonical_text() {
        let t = tbl();
        for src in ["x^3 - x + 2", "q^-1*x + 1/3", "-y", "0", "2*x*y"] {
            let e = parse(src, &t).unwrap();
            let s = print(&e);
            let e2 = parse(&s, &t).unwrap();
            assert_eq!(e, e2);
            assert_eq!(print(&e2), s);
        }
    }

    #[test]
    fn form_symbol_syntax() {
        let t = tbl().extend_forms();
        let e = parse("d(x)*d(y) - x*d(y)", &t).unwrap();
        assert_eq!(e.weight(), None); // mixed weights 2 and 1
        assert_eq!(parse(&print(&e), &t).unwrap(), e);
    }
}
