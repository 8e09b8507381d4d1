//! Instance files: the JSON document describing one model, construction
//! from a file, and the verification driver producing machine-readable
//! reports.
//!
//! One instance per file; batches are shell-level. Expressions are kept as
//! strings so fixtures stay human-editable. Schema version "ssw-1".

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::darboux::{self, DarbouxInstance, DarbouxSpec};
use crate::error::Error;
use crate::lagrangian::{
    build_lagrangian_darboux, build_weak_lagrangian_darboux, raw_from_parts,
    LagrangianInstance, LagrangianSpec, RawLagrangianData,
};
use crate::pointcheck::{
    lagrangian_nondegenerate_at, symplectic_nondegenerate_at, ClassicalPoint,
};
use crate::poisson::{
    bivector_from_darboux, bracket_from_bivector, check_coisotropic, check_p_structure,
    coisotropic_from_lagrangian,
};
use crate::report::Report;
use crate::scalar::Field;
use crate::GradedElement;

pub const SCHEMA_VERSION: &str = "ssw-1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Darboux,
    WeakDarboux,
    Lagrangian,
    WeakLagrangian,
    LagrangianRaw,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: String,
    pub field: Field,
    pub k: i64,
    pub role: Role,
    #[serde(default)]
    pub base_vars: Vec<String>,
    #[serde(default)]
    pub invertible_vars: Vec<String>,
    /// Coordinate counts per index, keys written as decimal strings.
    #[serde(default)]
    pub m: BTreeMap<String, usize>,
    #[serde(default)]
    pub n: BTreeMap<String, usize>,
    #[serde(rename = "Phi", default)]
    pub phi: String,
    #[serde(rename = "Psi", default)]
    pub psi: String,
    #[serde(default)]
    pub alpha0: BTreeMap<String, String>,
    #[serde(default)]
    pub q: Vec<String>,
    #[serde(default)]
    pub b_base_vars: Vec<String>,
    #[serde(default)]
    pub b_invertible_vars: Vec<String>,
    /// Named rational points: coordinate name -> value expression.
    #[serde(default)]
    pub points: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default)]
    pub attest_phi_reduced_zero: bool,
    /// Raw-role fields: the primitive pair, the fibre differential, and
    /// the conjugate images.
    #[serde(rename = "Xi", default, skip_serializing_if = "String::is_empty")]
    pub xi: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub raw_psi: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub d_b: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alpha_y: BTreeMap<String, String>,
}

#[derive(Debug)]
pub enum BuiltInstance {
    Darboux(DarbouxInstance),
    Lagrangian(LagrangianInstance),
    Raw(RawLagrangianData),
}

fn parse_index_map(m: &BTreeMap<String, usize>) -> Result<BTreeMap<i64, usize>, Error> {
    let mut out = BTreeMap::new();
    for (k, &v) in m {
        let i: i64 = k
            .parse()
            .map_err(|_| Error::BadInstance(format!("bad index key `{k}`")))?;
        out.insert(i, v);
    }
    Ok(out)
}

impl InstanceFile {
    pub fn from_str(text: &str) -> Result<Self, Error> {
        let file: InstanceFile = serde_json::from_str(text)
            .map_err(|e| Error::BadInstance(format!("malformed instance file: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::BadInstance(format!(
                "unsupported schema version `{}`",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    fn darboux_spec(&self) -> Result<DarbouxSpec, Error> {
        Ok(DarbouxSpec {
            field: self.field,
            k: self.k,
            base_vars: self.base_vars.clone(),
            invertible_vars: self.invertible_vars.clone(),
            m: parse_index_map(&self.m)?,
            phi: self.phi.clone(),
            attest_phi_reduced_zero: self.attest_phi_reduced_zero,
            q: if self.role == Role::WeakDarboux { self.q.clone() } else { Vec::new() },
        })
    }

    fn lagrangian_spec(&self) -> Result<LagrangianSpec, Error> {
        Ok(LagrangianSpec {
            n: parse_index_map(&self.n)?,
            b_base_vars: self.b_base_vars.clone(),
            b_invertible_vars: self.b_invertible_vars.clone(),
            alpha0: self.alpha0.clone(),
            psi: self.psi.clone(),
            q: if self.role == Role::WeakLagrangian { self.q.clone() } else { Vec::new() },
        })
    }

    /// Construct the instance this file describes; builders gate on the
    /// master equations.
    pub fn build(&self) -> Result<BuiltInstance, Error> {
        match self.role {
            Role::Darboux => Ok(BuiltInstance::Darboux(darboux::build_darboux(
                &self.darboux_spec()?,
            )?)),
            Role::WeakDarboux => Ok(BuiltInstance::Darboux(darboux::build_weak_darboux(
                &self.darboux_spec()?,
            )?)),
            Role::Lagrangian => {
                let base = darboux::build_darboux(&self.darboux_spec()?)?;
                Ok(BuiltInstance::Lagrangian(build_lagrangian_darboux(
                    &base,
                    &self.lagrangian_spec()?,
                )?))
            }
            Role::WeakLagrangian => {
                let base = darboux::build_darboux(&self.darboux_spec()?)?;
                Ok(BuiltInstance::Lagrangian(build_weak_lagrangian_darboux(
                    &base,
                    &self.lagrangian_spec()?,
                )?))
            }
            Role::LagrangianRaw => {
                let base = darboux::build_darboux(&self.darboux_spec()?)?;
                Ok(BuiltInstance::Raw(raw_from_parts(
                    &base,
                    &self.lagrangian_spec()?,
                    &self.d_b,
                    &self.alpha_y,
                    &self.xi,
                    &self.raw_psi,
                )?))
            }
        }
    }

    /// Resolve the named points against the instance's coordinate table.
    pub fn resolve_points(
        &self,
        built: &BuiltInstance,
    ) -> Result<BTreeMap<String, ClassicalPoint>, Error> {
        let table = match built {
            BuiltInstance::Darboux(d) => d.table().clone(),
            BuiltInstance::Lagrangian(l) => l.table().clone(),
            BuiltInstance::Raw(r) => r.cdga.table().clone(),
        };
        let mut out = BTreeMap::new();
        for (name, assignment) in &self.points {
            let mut values = BTreeMap::new();
            for (coord, expr) in assignment {
                let id = table.require(coord)?;
                let v = crate::parse::parse(expr, &table)?;
                let c = v.constant_term();
                if !(&v - &GradedElement::constant(&table, c.clone())).is_zero() {
                    return Err(Error::InvalidPoint(format!(
                        "point `{name}` assigns a non-scalar to `{coord}`"
                    )));
                }
                values.insert(id, c);
            }
            out.insert(name.clone(), ClassicalPoint::new(values));
        }
        Ok(out)
    }
}

/// Run the identity suite appropriate for the file's role, including the
/// Poisson side and the pointwise checks at every declared point.
pub fn run_verify(file: &InstanceFile, checks: Option<&[String]>) -> Result<Report, Error> {
    let built = file.build()?;
    let mut rep = Report::new();
    match &built {
        BuiltInstance::Darboux(inst) => {
            rep.merge(inst.verify());
            rep.merge(poisson_report(inst)?);
            let points = file.resolve_points(&built)?;
            // independent per-point checks run in parallel
            let reports: Vec<Result<Report, Error>> = points
                .par_iter()
                .map(|(name, p)| {
                    let mut r = Report::new();
                    if inst.k == -1 {
                        let phi_at = inst.phi.evaluate(&p.values)?;
                        r.merge(phi_vanishes_report(&phi_at));
                    }
                    let (_, prep) = symplectic_nondegenerate_at(inst, p)?;
                    r.merge(prep);
                    Ok(r.at_point(name))
                })
                .collect();
            for r in reports {
                rep.merge(r?);
            }
        }
        BuiltInstance::Lagrangian(inst) => {
            rep.merge(inst.base.verify());
            rep.merge(inst.verify());
            rep.merge(poisson_report(&inst.base)?);
            let data = coisotropic_from_lagrangian(inst)?;
            rep.merge(check_coisotropic(&data, inst)?);
            let points = file.resolve_points(&built)?;
            let reports: Vec<Result<Report, Error>> = points
                .par_iter()
                .map(|(name, p)| {
                    let (_, prep) = lagrangian_nondegenerate_at(inst, p)?;
                    Ok(prep.at_point(name))
                })
                .collect();
            for r in reports {
                rep.merge(r?);
            }
        }
        BuiltInstance::Raw(raw) => {
            rep.merge(raw.base.verify());
            rep.merge(raw.verify());
        }
    }
    if let Some(filter) = checks {
        rep.checks.retain(|c| {
            filter.iter().any(|f| c.equation_ref == *f || c.name == *f)
        });
    }
    Ok(rep)
}

fn phi_vanishes_report(residual: &GradedElement) -> Report {
    let mut rep = Report::new();
    rep.residual("hamiltonian_vanishes_at_point", "eq2.7", residual);
    rep
}

/// The strict Poisson suite of a Darboux instance: bivector closure and
/// self-bracket, the closed bracket table, and the four bracket axioms on
/// the generators.
fn poisson_report(inst: &DarbouxInstance) -> Result<Report, Error> {
    let mut rep = Report::new();
    let data = bivector_from_darboux(inst)?;
    rep.merge(data.verify());
    rep.merge(bracket_table_report(inst, &data)?);
    let vt = data.vcdga.table();
    let elems: Vec<GradedElement> = inst
        .table()
        .ring_ids()
        .map(|g| crate::poisson::promote_to(GradedElement::generator(inst.table(), g), vt))
        .collect();
    rep.merge(check_p_structure(&data, &inst.cdga, &elems)?);
    Ok(rep)
}

/// The closed bracket table on conjugate pairs: `{y, x} = (-1)^{i+1}` on a
/// pair, zero across pairs and within each family.
pub fn bracket_table_report(
    inst: &DarbouxInstance,
    data: &crate::poisson::StrictPoissonData,
) -> Result<Report, Error> {
    let mut rep = Report::new();
    let vt = data.vcdga.table();
    let gen = |g| crate::poisson::promote_to(GradedElement::generator(inst.table(), g), vt);
    let mut bad = Vec::new();
    for p in &inst.pairs {
        for p2 in &inst.pairs {
            let xx = bracket_from_bivector(data, &gen(p.x), &gen(p2.x))?;
            if !xx.is_zero() {
                bad.push(format!("{{x, x'}} = {xx}"));
            }
            let yy = bracket_from_bivector(data, &gen(p.y), &gen(p2.y))?;
            if !yy.is_zero() {
                bad.push(format!("{{y, y'}} = {yy}"));
            }
            let yx = bracket_from_bivector(data, &gen(p.y), &gen(p2.x))?;
            let expect = if p.x == p2.x {
                let sgn = if (p.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
                GradedElement::one(vt).scale_int(sgn)
            } else {
                GradedElement::zero(vt)
            };
            if yx != expect {
                bad.push(format!(
                    "{{{}, {}}} = {yx}",
                    inst.table().info(p.y).name,
                    inst.table().info(p2.x).name
                ));
            }
        }
    }
    if bad.is_empty() {
        rep.pass("bracket_table", "eq3.46");
    } else {
        rep.fail("bracket_table", "eq3.46", bad.join("; "));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crit_file() -> InstanceFile {
        InstanceFile {
            schema_version: SCHEMA_VERSION.into(),
            field: Field::Q,
            k: -1,
            role: Role::Darboux,
            base_vars: vec!["x".into(), "x2".into()],
            invertible_vars: vec![],
            m: BTreeMap::new(),
            n: BTreeMap::new(),
            phi: "x^3".into(),
            psi: String::new(),
            alpha0: BTreeMap::new(),
            q: vec![],
            b_base_vars: vec![],
            b_invertible_vars: vec![],
            points: {
                let mut p = BTreeMap::new();
                for (name, v) in [("origin", "0"), ("p1", "1"), ("p2", "-2")] {
                    let mut a = BTreeMap::new();
                    a.insert("x".to_string(), "0".to_string());
                    a.insert("x2".to_string(), v.to_string());
                    p.insert(name.to_string(), a);
                }
                p
            },
            attest_phi_reduced_zero: true,
            xi: String::new(),
            raw_psi: String::new(),
            d_b: BTreeMap::new(),
            alpha_y: BTreeMap::new(),
        }
    }

    #[test]
    fn round_trip_json() {
        let f = crit_file();
        let s = f.to_json();
        let f2 = InstanceFile::from_str(&s).unwrap();
        assert_eq!(f2.to_json(), s);
    }

    #[test]
    fn verify_crit_file() {
        let rep = run_verify(&crit_file(), None).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures().collect::<Vec<_>>());
        // check filtering keeps only the requested identities
        let filtered =
            run_verify(&crit_file(), Some(&["eq2.10".to_string()])).unwrap();
        assert!(!filtered.checks.is_empty());
        assert!(filtered.checks.iter().all(|c| c.equation_ref == "eq2.10"));
    }

    #[test]
    fn mutation_is_rejected() {
        let mut f = crit_file();
        f.phi = "x^3 + y1_1*y1_2".into(); // wrong degree
        assert!(run_verify(&f, None).is_err());
    }

    #[test]
    fn malformed_json_is_input_error() {
        assert!(InstanceFile::from_str("{ not json").is_err());
    }
}
