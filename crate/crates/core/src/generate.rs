//! Seeded instance generator. Families produce instance files that the
//! verifiers accept; the generator scaffolds a zero-potential model to get
//! the coordinate table, randomizes the potentials on it, then rebuilds
//! through the ordinary constructors so the verifiers remain the sole
//! authority.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::darboux::{build_darboux, DarbouxSpec};
use crate::error::Error;
use crate::instance::{BuiltInstance, InstanceFile, Role, SCHEMA_VERSION};
use crate::lagrangian::{
    build_lagrangian_darboux, enumerate_monomials, gauge_obfuscate, random_element,
    LagrangianSpec,
};
use crate::pointcheck::fuzz_points;
use crate::poisson::rebuild;
use crate::scalar::Field;
use crate::table::{GenId, Table};
use crate::GradedElement;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Critlocus,
    Quadratic,
    Conormal,
    Obfuscated,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "critlocus" => Ok(Family::Critlocus),
            "quadratic" => Ok(Family::Quadratic),
            "conormal" => Ok(Family::Conormal),
            "obfuscated" => Ok(Family::Obfuscated),
            other => Err(Error::UnsupportedFamily { family: other.into(), k: 0 }),
        }
    }
}

/// Deterministically generate one instance file. The emitted file passes
/// the verify suite; points are fuzzed on the built instance.
pub fn gen_instance(k: i64, family: Family, seed: u64) -> Result<InstanceFile, Error> {
    match family {
        Family::Critlocus => {
            if k != -1 {
                return Err(Error::UnsupportedFamily { family: "critlocus".into(), k });
            }
            critlocus(seed)
        }
        Family::Quadratic => {
            if k != -2 {
                return Err(Error::UnsupportedFamily { family: "quadratic".into(), k });
            }
            quadratic(seed)
        }
        Family::Conormal => {
            if k >= 0 || k.rem_euclid(2) != 0 {
                return Err(Error::UnsupportedFamily { family: "conormal".into(), k });
            }
            conormal(k, seed)
        }
        Family::Obfuscated => {
            if k >= 0 || k.rem_euclid(2) != 0 {
                return Err(Error::UnsupportedFamily { family: "obfuscated".into(), k });
            }
            obfuscated(k, seed)
        }
    }
}

fn base_file(k: i64, role: Role) -> InstanceFile {
    InstanceFile {
        schema_version: SCHEMA_VERSION.into(),
        field: Field::Q,
        k,
        role,
        base_vars: vec![],
        invertible_vars: vec![],
        m: BTreeMap::new(),
        n: BTreeMap::new(),
        phi: "0".into(),
        psi: "0".into(),
        alpha0: BTreeMap::new(),
        q: vec![],
        b_base_vars: vec![],
        b_invertible_vars: vec![],
        points: BTreeMap::new(),
        attest_phi_reduced_zero: false,
        xi: String::new(),
        raw_psi: String::new(),
        d_b: BTreeMap::new(),
        alpha_y: BTreeMap::new(),
    }
}

/// Random polynomial in the given coordinates with every monomial of
/// total degree between 2 and 3 (so the origin stays on the critical
/// locus).
fn random_deep_poly(
    rng: &mut ChaCha8Rng,
    table: &Arc<Table>,
    allowed: &[GenId],
    terms: usize,
) -> GradedElement {
    let mut monos = enumerate_monomials(table, allowed, 0, 0, 3);
    monos.retain(|m| {
        let deg: i32 = m.factors().iter().map(|&(_, e)| e.abs()).sum();
        deg >= 2
    });
    let mut out = GradedElement::zero(table);
    if monos.is_empty() {
        return out;
    }
    for _ in 0..terms {
        let m = &monos[rng.gen_range(0..monos.len())];
        let c = match rng.gen_range(0..4) {
            0 => crate::Scalar::from_int(1),
            1 => crate::Scalar::from_int(-1),
            2 => crate::Scalar::from_int(2),
            _ => crate::Scalar::from_ratio(-1, 2),
        };
        out = &out + &GradedElement::from_monomial(table, m.clone()).scale(&c);
    }
    out
}

pub fn attach_points(file: &mut InstanceFile, built: &BuiltInstance, want: usize) {
    let (cdga, table) = match built {
        BuiltInstance::Darboux(d) => (&d.cdga, d.table().clone()),
        BuiltInstance::Lagrangian(l) => (&l.cdga, l.table().clone()),
        BuiltInstance::Raw(r) => (&r.cdga, r.cdga.table().clone()),
    };
    let mut candidates = fuzz_points(cdga, 4 * want);
    // at shift -1 the hamiltonian must also vanish at declared points;
    // keeping to its zero locus is the computable form of restricting to
    // the right component
    if let BuiltInstance::Darboux(d) = built {
        if d.k == -1 {
            candidates.retain(|p| {
                d.phi.evaluate(&p.values).map(|r| r.is_zero()).unwrap_or(false)
            });
        }
    }
    for (idx, p) in candidates.into_iter().take(want).enumerate() {
        let mut assignment = BTreeMap::new();
        for (g, v) in &p.values {
            assignment.insert(table.info(*g).name.clone(), v.to_string());
        }
        file.points.insert(format!("p{idx}"), assignment);
    }
}

fn critlocus(seed: u64) -> Result<InstanceFile, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nvars = rng.gen_range(2..=3usize);
    let vars: Vec<String> = (1..=nvars).map(|j| format!("x{j}")).collect();
    let spec0 = DarbouxSpec {
        field: Field::Q,
        k: -1,
        base_vars: vars.clone(),
        invertible_vars: vec![],
        m: BTreeMap::new(),
        phi: "0".into(),
        attest_phi_reduced_zero: true,
        q: vec![],
    };
    let scaffold = build_darboux(&spec0)?;
    // keep the last coordinate out of the potential so the classical
    // locus stays at least one-dimensional
    let allowed: Vec<GenId> = vars[..nvars - 1]
        .iter()
        .map(|v| scaffold.table().require(v).expect("built"))
        .collect();
    let table = scaffold.table().clone();
    let terms = rng.gen_range(1..=3);
    let phi = random_deep_poly(&mut rng, &table, &allowed, terms);
    let mut file = base_file(-1, Role::Darboux);
    file.base_vars = vars;
    file.phi = rebuild(&phi, &table)?.to_string();
    file.attest_phi_reduced_zero = true;
    let built = file.build()?;
    attach_points(&mut file, &built, 4);
    Ok(file)
}

fn quadratic(seed: u64) -> Result<InstanceFile, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nvars = rng.gen_range(2..=3usize);
    let vars: Vec<String> = (1..=nvars).map(|j| format!("x{j}")).collect();
    let pairs = rng.gen_range(1..=2usize);
    let mut m = BTreeMap::new();
    m.insert("-1".to_string(), 2 * pairs);
    let mut q = Vec::new();
    let spec0 = DarbouxSpec {
        field: Field::Q,
        k: -2,
        base_vars: vars.clone(),
        invertible_vars: vec![],
        m: {
            let mut mm = BTreeMap::new();
            mm.insert(-1i64, 2 * pairs);
            mm
        },
        phi: "0".into(),
        attest_phi_reduced_zero: false,
        q: vec!["1".into(); 2 * pairs],
    };
    let scaffold = crate::darboux::build_weak_darboux(&spec0)?;
    let table = scaffold.table().clone();
    let allowed: Vec<GenId> = vars[..nvars - 1]
        .iter()
        .map(|v| table.require(v).expect("built"))
        .collect();
    let mut phi = GradedElement::zero(&table);
    for l in 0..pairs {
        let c = loop {
            let c = rng.gen_range(-3i64..=3);
            if c != 0 {
                break c;
            }
        };
        q.push(c.to_string());
        q.push((-c).to_string());
        let s = random_element(&mut rng, &table, &allowed, 0, 2, 2);
        // drop any constant term so the origin stays on the locus
        let s = s.filter_terms(|mono| !mono.is_one());
        for z_idx in [2 * l, 2 * l + 1] {
            let z = scaffold.z_gens[z_idx];
            phi = &phi + &(&GradedElement::generator(&table, z) * &s);
        }
    }
    let mut file = base_file(-2, Role::WeakDarboux);
    file.base_vars = vars;
    file.m = m;
    file.q = q;
    file.phi = rebuild(&phi, &table)?.to_string();
    let built = file.build()?;
    attach_points(&mut file, &built, 4);
    Ok(file)
}

/// Conormal data over a base whose hamiltonian compensates the chosen
/// fibre potentials exactly.
fn conormal(k: i64, seed: u64) -> Result<InstanceFile, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m0 = rng.gen_range(1..=2usize);
    let vars: Vec<String> = (1..=m0).map(|j| format!("x{j}")).collect();
    let d = (k + 1).div_euclid(2);
    let e = k.div_euclid(2);
    let mut m = BTreeMap::new();
    let mut i = -1;
    while i >= d {
        m.insert(i, rng.gen_range(1..=2usize));
        i -= 1;
    }
    let mut n = BTreeMap::new();
    let mut i = -1;
    while i >= e {
        n.insert(i, rng.gen_range(1..=2usize));
        i -= 1;
    }
    let b_base: Vec<String> = vec!["u0_1".into()];
    // scaffold with zero potentials to get the tables
    let spec_a0 = DarbouxSpec {
        field: Field::Q,
        k,
        base_vars: vars.clone(),
        invertible_vars: vec![],
        m: m.clone(),
        phi: "0".into(),
        attest_phi_reduced_zero: false,
        q: vec![],
    };
    let base0 = build_darboux(&spec_a0)?;
    let spec_b = LagrangianSpec {
        n: n.clone(),
        b_base_vars: b_base.clone(),
        b_invertible_vars: vec![],
        alpha0: BTreeMap::new(),
        psi: "0".into(),
        q: vec![],
    };
    let scaffold = build_lagrangian_darboux(&base0, &spec_b)?;
    let bt = scaffold.table().clone();
    // x-tilde coordinates, split by degree
    let xt_all: Vec<GenId> = scaffold.xt.values().copied().collect();
    let xt_deg0: Vec<GenId> =
        xt_all.iter().copied().filter(|&g| bt.info(g).degree == 0).collect();

    // fibre components: one per negative conjugate pair, pure in the
    // degree-0 coordinates with zero constant term
    let mut psi = GradedElement::zero(&bt);
    let mut psi_plus = GradedElement::zero(&bt);
    for p in scaffold.uv_pairs.iter().filter(|p| p.i < 0) {
        let g = random_element(&mut rng, &bt, &xt_deg0, p.i + 1, 2, 2)
            .filter_terms(|mono| !mono.is_one());
        psi = &psi + &(&g * &GradedElement::generator(&bt, p.y));
        // u-linear base part with image-pure coefficients
        let h = random_element(&mut rng, &bt, &xt_all, k - p.i, 2, 2);
        psi_plus = &psi_plus + &(&GradedElement::generator(&bt, p.x) * &h);
    }
    psi = &psi + &psi_plus;
    // the base equation fixes the base hamiltonian: compensate the sum
    // sum (-1)^{i+1} comp d(psi_plus)/du
    let mut s_elem = GradedElement::zero(&bt);
    {
        let vs: Vec<GenId> = scaffold.uv_pairs.iter().map(|p| p.y).collect();
        let (plus_part, comps) = psi.split_linear_in(&vs)?;
        for p in scaffold.uv_pairs.iter() {
            let Some(comp) = comps.get(&p.y) else { continue };
            let sgn = if (p.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
            s_elem = &s_elem + &(comp * &plus_part.differentiate(p.x)).scale_int(sgn);
        }
    }
    // pull the compensator back to the base coordinates by name
    let phi = pullback_by_name(&s_elem, &scaffold, &base0)?;
    let mut file = base_file(k, Role::Lagrangian);
    file.base_vars = vars;
    file.m = m.iter().map(|(i, c)| (i.to_string(), *c)).collect();
    file.n = n.iter().map(|(i, c)| (i.to_string(), *c)).collect();
    file.b_base_vars = b_base;
    file.phi = (-&phi).to_string();
    file.psi = rebuild(&psi, &bt)?.to_string();
    let built = file.build()?;
    attach_points(&mut file, &built, 3);
    Ok(file)
}

/// Rename the image coordinates back to the base coordinates.
fn pullback_by_name(
    e: &GradedElement,
    inst: &crate::lagrangian::LagrangianInstance,
    base: &crate::darboux::DarbouxInstance,
) -> Result<GradedElement, Error> {
    let bt = inst.table();
    let at = base.table();
    let mut out = GradedElement::zero(at);
    for (mono, c) in e.terms() {
        let mut term = GradedElement::constant(at, c.clone());
        for &(rank, exp) in mono.factors() {
            let b_id = bt.id_at_rank(rank);
            let a_id = inst
                .xt
                .iter()
                .find(|(_, &b)| b == b_id)
                .map(|(&a, _)| a)
                .ok_or_else(|| Error::BadInstance("element is not image-pure".into()))?;
            term = &term * &GradedElement::gen_pow(at, a_id, exp)?;
        }
        out = &out + &term;
    }
    Ok(out)
}

fn obfuscated(k: i64, seed: u64) -> Result<InstanceFile, Error> {
    let mut file = conormal(k, seed)?;
    let BuiltInstance::Lagrangian(inst) = file.build()? else {
        return Err(Error::BadInstance("conormal family must build Lagrangian data".into()));
    };
    let raw = gauge_obfuscate(&inst, seed)?;
    file.role = Role::LagrangianRaw;
    file.psi = "0".into();
    file.xi = raw.xi.to_string();
    file.raw_psi = raw.psi.to_string();
    let table = raw.cdga.table();
    file.d_b = raw
        .uv_pairs
        .iter()
        .flat_map(|p| [p.x, p.y])
        .filter_map(|g| {
            let dg = raw.cdga.diff_of(g);
            if dg.is_zero() {
                None
            } else {
                Some((table.info(g).name.clone(), dg.to_string()))
            }
        })
        .collect();
    file.alpha_y = raw
        .base
        .pairs
        .iter()
        .map(|p| {
            let name = raw.base.table().info(p.y).name.clone();
            let im = raw.alpha.image_of(p.y).expect("image");
            (name, im.to_string())
        })
        .collect();
    // points carry over; re-fuzz on the raw differential to stay valid
    file.points.clear();
    attach_points(&mut file, &BuiltInstance::Raw(raw), 3);
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::run_verify;

    #[test]
    fn determinism() {
        for family in [Family::Critlocus, Family::Quadratic] {
            let k = if family == Family::Critlocus { -1 } else { -2 };
            let a = gen_instance(k, family, 9).unwrap().to_json();
            let b = gen_instance(k, family, 9).unwrap().to_json();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn families_pass_verify() {
        for seed in 0..3u64 {
            let f = gen_instance(-1, Family::Critlocus, seed).unwrap();
            let rep = run_verify(&f, None).unwrap();
            assert!(rep.ok(), "critlocus seed {seed}: {:?}", rep.failures().collect::<Vec<_>>());
            assert!(f.points.len() >= 3, "critlocus seed {seed} has {} points", f.points.len());

            let f = gen_instance(-2, Family::Quadratic, seed).unwrap();
            let rep = run_verify(&f, None).unwrap();
            assert!(rep.ok(), "quadratic seed {seed}: {:?}", rep.failures().collect::<Vec<_>>());

            for k in [-2i64, -4] {
                let f = gen_instance(k, Family::Conormal, seed).unwrap();
                let rep = run_verify(&f, None).unwrap();
                assert!(
                    rep.ok(),
                    "conormal k={k} seed {seed}: {:?}",
                    rep.failures().collect::<Vec<_>>()
                );
                assert!(f.points.len() >= 3);
            }
        }
    }

    #[test]
    fn obfuscated_round_trips() {
        let f = gen_instance(-2, Family::Obfuscated, 3).unwrap();
        let rep = run_verify(&f, None).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures().collect::<Vec<_>>());
        let BuiltInstance::Raw(raw) = f.build().unwrap() else {
            panic!("raw role expected")
        };
        let (out, cert, rep) = crate::lagrangian::normalize(&raw).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert!(out.verify().ok());
        assert!(crate::lagrangian::verify_homotopy(&cert).ok());
    }

    #[test]
    fn family_gating() {
        assert!(matches!(
            gen_instance(-2, Family::Critlocus, 0),
            Err(Error::UnsupportedFamily { .. })
        ));
        assert!(matches!(
            gen_instance(-3, Family::Conormal, 0),
            Err(Error::UnsupportedFamily { .. })
        ));
    }
}
