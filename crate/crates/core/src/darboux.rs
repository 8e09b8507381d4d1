//! Constructors and verifiers for the symplectic side: Darboux-form data,
//! its weak/strong variants in the residue-2 shifts, the change of
//! variables from strong to plain form over Q(i), the splitting of the
//! hamiltonian into its fibration components, and the two geometric
//! wrappers (derived critical locus, quadratic zero locus).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cdga::{Cdga, CdgaMorphism};
use crate::derham::{de_rham, form_extension, pushforward};
use crate::element::GradedElement;
use crate::error::Error;
use crate::parse::parse;
use crate::report::Report;
use crate::scalar::{Field, Scalar};
use crate::table::{GenId, GenSpec, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DarbouxVariant {
    Darboux,
    Weak,
    Strong,
}

/// One conjugate coordinate pair `x^i_j, y^{k-i}_j`.
#[derive(Clone, Debug)]
pub struct Pair {
    pub i: i64,
    pub x: GenId,
    pub y: GenId,
}

#[derive(Clone, Debug)]
pub struct DarbouxSpec {
    pub field: Field,
    pub k: i64,
    pub base_vars: Vec<String>,
    pub invertible_vars: Vec<String>,
    /// Counts of the x-coordinates per index i < 0 (for the weak variant
    /// the entry at the middle index d counts the self-paired coordinates).
    pub m: BTreeMap<i64, usize>,
    pub phi: String,
    pub attest_phi_reduced_zero: bool,
    /// Unit expressions for the weak variant, one per middle coordinate.
    pub q: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DarbouxInstance {
    pub k: i64,
    pub d_index: i64,
    pub variant: DarbouxVariant,
    pub spec: DarbouxSpec,
    pub cdga: Cdga,
    /// Form extension of `cdga`, with the induced internal differential.
    pub forms: Cdga,
    pub phi: GradedElement,
    pub omega0: GradedElement,
    pub phi_form: GradedElement,
    pub pairs: Vec<Pair>,
    /// Middle self-paired coordinates (weak variant only).
    pub z_gens: Vec<GenId>,
    /// Units q_j, parallel to `z_gens`.
    pub q: Vec<GradedElement>,
}

/// The hamiltonian split into its fibration data: `phi = phi_plus +
/// sum_pairs comp_pair * y_pair`, with `phi_plus` and the components free
/// of the y-coordinates.
#[derive(Clone, Debug)]
pub struct HamiltonianSplit {
    pub phi_plus: GradedElement,
    /// Components parallel to the instance's `pairs`.
    pub components: Vec<GradedElement>,
    pub phi_plus_form: GradedElement,
    /// Weak variant only: half of the part linear in the self-paired
    /// coordinates. Those coordinates weigh one half in the base
    /// sub-potential, which is what makes its triple of identities exact;
    /// `phi_plus` already includes this summand.
    pub z_half: GradedElement,
}

impl DarbouxInstance {
    pub fn table(&self) -> &Arc<Table> {
        self.cdga.table()
    }

    pub fn form_table(&self) -> &Arc<Table> {
        self.forms.table()
    }

    pub fn y_ids(&self) -> Vec<GenId> {
        self.pairs.iter().map(|p| p.y).collect()
    }

    /// Ids of the sub-cdga generated by everything except the y's.
    pub fn plus_ids(&self) -> Vec<GenId> {
        let ys = self.y_ids();
        self.table().ring_ids().filter(|g| !ys.contains(g)).collect()
    }

    pub fn vdim(&self) -> i64 {
        self.cdga.vdim()
    }

    /// Degree-0 coordinates in pairing order (base variables then units).
    pub fn degree0_coords(&self) -> Vec<GenId> {
        self.pairs.iter().filter(|p| p.i == 0).map(|p| p.x).collect()
    }

    /// The sub-cdga generated by everything except the conjugate
    /// coordinates, with its inclusion. Fails when the differential does
    /// not preserve the sub-algebra (a conjugate-linear hamiltonian in the
    /// weak variant).
    pub fn plus_inclusion(&self) -> Result<CdgaMorphism, Error> {
        let table = self.table();
        let plus = self.plus_ids();
        let specs: Vec<GenSpec> = plus
            .iter()
            .map(|&g| {
                let info = table.info(g);
                GenSpec {
                    name: info.name.clone(),
                    degree: info.degree,
                    form_degree: 0,
                    invertible: info.invertible,
                }
            })
            .collect();
        let sub_table = Table::new(table.field(), specs)?;
        let mut diff = BTreeMap::new();
        for &g in &plus {
            let dg = self.cdga.diff_of(g);
            if dg.is_zero() {
                continue;
            }
            // rebuilding fails exactly when d leaves the sub-algebra
            let sub = crate::poisson::rebuild(&dg, &sub_table)?;
            diff.insert(sub_table.require(&table.info(g).name)?, sub);
        }
        let sub_cdga = Cdga::new(sub_table.clone(), diff)?;
        let images = sub_table
            .ring_ids()
            .map(|g| {
                let id = table.require(&sub_table.info(g).name).expect("subset");
                (g, GradedElement::generator(table, id))
            })
            .collect();
        CdgaMorphism::new(sub_cdga, self.cdga.clone(), images)
    }
}

fn name_for(prefix: &str, degree: i64, j: usize) -> String {
    format!("{}{}_{}", prefix, degree.abs(), j + 1)
}

fn non_unit_divisor(q: &GradedElement) -> Error {
    Error::NotAUnit(q.to_string())
}

/// Shared table assembly. Returns (table, pairs-by-name, z-names).
fn build_table(
    spec: &DarbouxSpec,
    weak: bool,
) -> Result<(Arc<Table>, Vec<(i64, String, String)>, Vec<String>), Error> {
    let k = spec.k;
    let d = (k + 1).div_euclid(2);
    let mut gens: Vec<GenSpec> = Vec::new();
    for v in &spec.base_vars {
        gens.push(GenSpec::new(v.clone(), 0));
    }
    for v in &spec.invertible_vars {
        gens.push(GenSpec::unit(v.clone()));
    }
    let mut pair_names: Vec<(i64, String, String)> = Vec::new();
    // degree-0 pairs
    let mut deg0 = spec.base_vars.clone();
    deg0.extend(spec.invertible_vars.iter().cloned());
    for (j, x) in deg0.iter().enumerate() {
        pair_names.push((0, x.clone(), name_for("y", k, j)));
    }
    let lowest_x = if weak { d + 1 } else { d };
    let mut i = -1;
    while i >= lowest_x {
        let count = spec.m.get(&i).copied().unwrap_or(0);
        for j in 0..count {
            pair_names.push((i, name_for("x", i, j), name_for("y", k - i, j)));
        }
        i -= 1;
    }
    let mut z_names = Vec::new();
    if weak {
        let count = spec.m.get(&d).copied().unwrap_or(0);
        if count != spec.q.len() {
            return Err(Error::BadInstance(format!(
                "{} middle coordinates but {} units",
                count,
                spec.q.len()
            )));
        }
        for j in 0..count {
            z_names.push(name_for("z", d, j));
        }
    }
    for (i, x, _) in &pair_names {
        if *i < 0 {
            gens.push(GenSpec::new(x.clone(), *i));
        }
    }
    for z in &z_names {
        gens.push(GenSpec::new(z.clone(), d));
    }
    for (i, _, y) in &pair_names {
        gens.push(GenSpec::new(y.clone(), k - i));
    }
    let table = Table::new(spec.field, gens)?;
    Ok((table, pair_names, z_names))
}

/// Build a plain Darboux-form instance: verify the classical master
/// equation, install the induced differential, and assemble the canonical
/// two-form and its potential.
pub fn build_darboux(spec: &DarbouxSpec) -> Result<DarbouxInstance, Error> {
    let k = spec.k;
    if k > 0 {
        return Err(Error::BadInstance("the shift k must be nonpositive".into()));
    }
    let (table, pair_names, _) = build_table(spec, false)?;
    let phi = parse(&spec.phi, &table)?;
    if !phi.is_zero() && phi.degree() != Some(k + 1) {
        return Err(Error::DegreeMismatch { expected: k + 1, found: phi.to_string() });
    }
    if k == 0 && !phi.is_zero() {
        return Err(Error::BadInstance(
            "a 0-shifted cotangent model has no hamiltonian; phi must be 0".into(),
        ));
    }
    if k == -1 {
        if !phi.constant_term().is_zero() {
            return Err(Error::PhiConstantTerm);
        }
        if !spec.attest_phi_reduced_zero {
            return Err(Error::PhiNotAttested);
        }
    }
    let pairs: Vec<Pair> = pair_names
        .iter()
        .map(|(i, x, y)| Pair {
            i: *i,
            x: table.require(x).expect("built"),
            y: table.require(y).expect("built"),
        })
        .collect();

    // classical master equation: sum over conjugate pairs of
    // dPhi/dx * dPhi/dy
    let mut master = GradedElement::zero(&table);
    for p in &pairs {
        master = &master + &(&phi.differentiate(p.x) * &phi.differentiate(p.y));
    }
    if !master.is_zero() {
        return Err(Error::MasterEquationViolated { residual: master.to_string() });
    }

    // differential: d x^i_j = (-1)^{(i+1)(k+1)} dPhi/dy^{k-i}_j,
    //               d y^{k-i}_j = dPhi/dx^i_j
    let mut diff = BTreeMap::new();
    for p in &pairs {
        let sgn = if ((p.i + 1) * (k + 1)).rem_euclid(2) == 1 { -1 } else { 1 };
        let dx = phi.differentiate(p.y).scale_int(sgn);
        if !dx.is_zero() {
            diff.insert(p.x, dx);
        }
        let dy = phi.differentiate(p.x);
        if !dy.is_zero() {
            diff.insert(p.y, dy);
        }
    }
    let cdga = Cdga::new(table.clone(), diff)?;
    let forms = form_extension(&cdga);
    let ft = forms.table().clone();

    let mut omega0 = GradedElement::zero(&ft);
    let mut phi_form = GradedElement::zero(&ft);
    for p in &pairs {
        let dx = GradedElement::generator(&ft, ft.form_symbol(p.x).expect("form"));
        let dy = GradedElement::generator(&ft, ft.form_symbol(p.y).expect("form"));
        let x = GradedElement::generator(&ft, p.x);
        let y = GradedElement::generator(&ft, p.y);
        omega0 = &omega0 + &(&dx * &dy);
        let sgn = if ((p.i + 1) * (k + 1)).rem_euclid(2) == 1 { -1 } else { 1 };
        phi_form = &phi_form + &(&x * &dy).scale_int(p.i);
        phi_form = &phi_form + &(&y * &dx).scale_int(sgn * (k - p.i));
    }

    let inst = DarbouxInstance {
        k,
        d_index: (k + 1).div_euclid(2),
        variant: DarbouxVariant::Darboux,
        spec: spec.clone(),
        cdga,
        forms,
        phi: phi.promote(&ft),
        omega0,
        phi_form,
        pairs,
        z_gens: Vec::new(),
        q: Vec::new(),
    };
    let report = inst.verify();
    if let Some(fail) = report.first_failure() {
        return Err(Error::BadInstance(format!(
            "internal identity {} failed: {}",
            fail.name,
            fail.residual.clone().unwrap_or_default()
        )));
    }
    Ok(inst)
}

/// Build a weak Darboux-form instance (k = 2 mod 4, negative), with middle
/// coordinates z paired against themselves through units q_j.
pub fn build_weak_darboux(spec: &DarbouxSpec) -> Result<DarbouxInstance, Error> {
    let k = spec.k;
    if k >= 0 || k.rem_euclid(4) != 2 {
        return Err(Error::WrongResidue { k });
    }
    let d = k / 2;
    let (table, pair_names, z_names) = build_table(spec, true)?;
    let phi = parse(&spec.phi, &table)?;
    if !phi.is_zero() && phi.degree() != Some(k + 1) {
        return Err(Error::DegreeMismatch { expected: k + 1, found: phi.to_string() });
    }
    let pairs: Vec<Pair> = pair_names
        .iter()
        .map(|(i, x, y)| Pair {
            i: *i,
            x: table.require(x).expect("built"),
            y: table.require(y).expect("built"),
        })
        .collect();
    let z_gens: Vec<GenId> =
        z_names.iter().map(|z| table.require(z).expect("built")).collect();
    let mut q = Vec::new();
    for qs in &spec.q {
        let e = parse(qs, &table)?;
        if !e.is_unit() {
            return Err(non_unit_divisor(&e));
        }
        q.push(e);
    }

    // master equation with the quadratic middle term:
    // sum dPhi/dx dPhi/dy + 1/4 sum (1/q_j) (dPhi/dz_j)^2
    let quarter = Scalar::from_ratio(1, 4);
    let mut master = GradedElement::zero(&table);
    for p in &pairs {
        master = &master + &(&phi.differentiate(p.x) * &phi.differentiate(p.y));
    }
    for (z, qj) in z_gens.iter().zip(&q) {
        let dz = phi.differentiate(*z);
        master = &master + &(&dz * &dz).div_unit(qj)?.scale(&quarter);
    }
    if !master.is_zero() {
        return Err(Error::MasterEquationViolated { residual: master.to_string() });
    }

    // differential:
    //   d x^i_j = (-1)^{i+1} dPhi/dy^{k-i}_j          (k odd? no: k+1 odd, so
    //      the plain-form sign (-1)^{(i+1)(k+1)} = (-1)^{i+1})
    //   d y^{k-i}_j = dPhi/dx^i_j, with the middle correction in degree 0:
    //   d y^k_j = dPhi/dx^0_j - sum_j' z_j'/(2 q_j') dq_j'/dx^0_j dPhi/dz_j'
    //   d z_j = 1/(2 q_j) dPhi/dz_j
    let mut diff = BTreeMap::new();
    let half = Scalar::from_ratio(1, 2);
    for p in &pairs {
        let sgn = if (p.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
        let dx = phi.differentiate(p.y).scale_int(sgn);
        if !dx.is_zero() {
            diff.insert(p.x, dx);
        }
        let mut dy = phi.differentiate(p.x);
        if p.i == 0 {
            for (z, qj) in z_gens.iter().zip(&q) {
                let zq = GradedElement::generator(&table, *z).div_unit(qj)?.scale(&half);
                let corr = &(&zq * &qj.differentiate(p.x)) * &phi.differentiate(*z);
                dy = &dy - &corr;
            }
        }
        if !dy.is_zero() {
            diff.insert(p.y, dy);
        }
    }
    for (z, qj) in z_gens.iter().zip(&q) {
        let dz = phi.differentiate(*z).div_unit(qj)?.scale(&half);
        if !dz.is_zero() {
            diff.insert(*z, dz);
        }
    }
    let cdga = Cdga::new(table.clone(), diff)?;
    let forms = form_extension(&cdga);
    let ft = forms.table().clone();

    // omega0 = sum d(x) d(y) + sum d(q_j z_j) d(z_j)
    let mut omega0 = GradedElement::zero(&ft);
    let mut phi_form = GradedElement::zero(&ft);
    for p in &pairs {
        let dx = GradedElement::generator(&ft, ft.form_symbol(p.x).expect("form"));
        let dy = GradedElement::generator(&ft, ft.form_symbol(p.y).expect("form"));
        omega0 = &omega0 + &(&dx * &dy);
        let x = GradedElement::generator(&ft, p.x);
        let y = GradedElement::generator(&ft, p.y);
        let sgn = if (p.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
        phi_form = &phi_form + &(&x * &dy).scale_int(p.i);
        phi_form = &phi_form + &(&y * &dx).scale_int(sgn * (k - p.i));
    }
    for (z, qj) in z_gens.iter().zip(&q) {
        let ze = GradedElement::generator(&ft, *z);
        let dz = GradedElement::generator(&ft, ft.form_symbol(*z).expect("form"));
        let qz = &qj.promote(&ft) * &ze;
        omega0 = &omega0 + &(&de_rham(&qz) * &dz);
        phi_form = &phi_form + &(&qz * &dz).scale_int(k);
    }

    let variant = if q.iter().all(|e| *e == GradedElement::one(&table)) {
        DarbouxVariant::Strong
    } else {
        DarbouxVariant::Weak
    };
    let inst = DarbouxInstance {
        k,
        d_index: d,
        variant,
        spec: spec.clone(),
        cdga,
        forms,
        phi: phi.promote(&ft),
        omega0,
        phi_form,
        pairs,
        z_gens,
        q,
    };
    let report = inst.verify();
    if let Some(fail) = report.first_failure() {
        return Err(Error::BadInstance(format!(
            "internal identity {} failed: {}",
            fail.name,
            fail.residual.clone().unwrap_or_default()
        )));
    }
    Ok(inst)
}

impl DarbouxInstance {
    /// The full identity suite for this instance.
    pub fn verify(&self) -> Report {
        let mut rep = Report::new();
        // master equation (recomputed, so corrupted instances diagnose)
        let phi = &self.phi;
        let mut master = GradedElement::zero(self.form_table());
        for p in &self.pairs {
            master = &master + &(&phi.differentiate(p.x) * &phi.differentiate(p.y));
        }
        for (z, qj) in self.z_gens.iter().zip(&self.q) {
            let dz = phi.differentiate(*z);
            if let Ok(t) = (&dz * &dz).div_unit(&qj.promote(self.form_table())) {
                master = &master + &t.scale(&Scalar::from_ratio(1, 4));
            }
        }
        let eq = if self.z_gens.is_empty() { "eq2.7" } else { "eq2.18" };
        rep.residual("master_equation", eq, &master);

        // d . d = 0 on every generator
        let bad = self.forms.check_square_zero();
        if bad.is_empty() {
            rep.pass("differential_squares_to_zero", "eq2.8");
        } else {
            for (g, r) in bad {
                rep.fail(
                    "differential_squares_to_zero",
                    "eq2.8",
                    format!("d(d {}) = {}", self.form_table().info(g).name, r),
                );
            }
        }

        // the potential triple: d Phi = 0, d_dR Phi + d phi = 0,
        // d_dR phi = k omega0
        rep.residual("hamiltonian_closed", "eq2.10", &self.forms.d(phi));
        let r2 = &de_rham(phi) + &self.forms.d(&self.phi_form);
        rep.residual("potential_matches_hamiltonian", "eq2.10", &r2);
        let r3 = &de_rham(&self.phi_form) - &self.omega0.scale_int(self.k);
        rep.residual("potential_scales_symplectic_form", "eq2.10", &r3);
        rep.residual("symplectic_form_de_rham_closed", "eq2.6", &de_rham(&self.omega0));
        rep.residual("symplectic_form_closed", "eq2.6", &self.forms.d(&self.omega0));

        // split identities; for weak instances whose hamiltonian has a
        // conjugate-linear part the sub-potential triple is not claimed
        match self.split() {
            Ok(split) => {
                let weak_twisted = self.variant != DarbouxVariant::Darboux
                    && split.components.iter().any(|c| !c.is_zero());
                if weak_twisted {
                    rep.skip("base_hamiltonian_closed", "eq2.16");
                } else {
                    rep.merge(self.verify_split(&split));
                }
            }
            Err(_) => rep.skip("hamiltonian_split", "eq2.11"),
        }

        // the base sub-algebra includes as a cdga
        match self.plus_inclusion() {
            Ok(inc) => {
                let bad = inc.check();
                if bad.is_empty() {
                    rep.pass("base_subalgebra_includes", "eq2.11");
                } else {
                    for (g, r) in bad {
                        rep.fail(
                            "base_subalgebra_includes",
                            "eq2.11",
                            format!("on {}: {}", inc.source().table().info(g).name, r),
                        );
                    }
                }
            }
            Err(_) => rep.skip("base_subalgebra_includes", "eq2.11"),
        }

        rep.merge(vdim_parity_check(self.k, Role::Symplectic, self.vdim(), None));
        rep
    }

    /// Extract the hamiltonian's fibration components. For the weak variant
    /// this succeeds only when the hamiltonian is linear in the y's.
    pub fn split(&self) -> Result<HamiltonianSplit, Error> {
        let ys = self.y_ids();
        let (y_free, parts) = self.phi.split_linear_in(&ys)?;
        let components: Vec<GradedElement> = self
            .pairs
            .iter()
            .map(|p| parts.get(&p.y).cloned().unwrap_or_else(|| GradedElement::zero(self.form_table())))
            .collect();
        // self-paired coordinates count half in the base sub-potential
        let (phi_plus, z_half) = if self.z_gens.is_empty() {
            (y_free, GradedElement::zero(self.form_table()))
        } else {
            let (z_free, z_parts) = y_free.split_linear_in(&self.z_gens)?;
            let mut z_linear = GradedElement::zero(self.form_table());
            for (&z, coeff) in &z_parts {
                z_linear =
                    &z_linear + &(coeff * &GradedElement::generator(self.form_table(), z));
            }
            let half = z_linear.scale(&Scalar::from_ratio(1, 2));
            (&z_free + &half, half)
        };
        // phi_plus_form = -sum (-1)^{(i+1)(k+1)} y d(x)  (- sum q z d(z) in
        // the weak variant, so that d_dR phi_plus_form = -omega0)
        let ft = self.form_table();
        let mut ppf = GradedElement::zero(ft);
        for p in &self.pairs {
            let y = GradedElement::generator(ft, p.y);
            let dx = GradedElement::generator(ft, ft.form_symbol(p.x).expect("form"));
            let sgn = if ((p.i + 1) * (self.k + 1)).rem_euclid(2) == 1 { -1 } else { 1 };
            ppf = &ppf - &(&y * &dx).scale_int(sgn);
        }
        for (z, qj) in self.z_gens.iter().zip(&self.q) {
            let ze = GradedElement::generator(ft, *z);
            let dz = GradedElement::generator(ft, ft.form_symbol(*z).expect("form"));
            ppf = &ppf - &(&(&qj.promote(ft) * &ze) * &dz);
        }
        Ok(HamiltonianSplit { phi_plus, components, phi_plus_form: ppf, z_half })
    }

    /// Verify the split: component equations, reassembly, consistency with
    /// the stored differential, and the sub-potential triple.
    pub fn verify_split(&self, split: &HamiltonianSplit) -> Report {
        let mut rep = Report::new();
        let ft = self.form_table();

        // reassembly is exact (phi_plus carries half the self-paired part,
        // z_half the other half)
        let mut reassembled = &split.phi_plus + &split.z_half;
        for (p, comp) in self.pairs.iter().zip(&split.components) {
            reassembled = &reassembled + &(comp * &GradedElement::generator(ft, p.y));
        }
        rep.residual("split_reassembles", "eq2.11", &(&reassembled - &self.phi));

        if self.variant == DarbouxVariant::Darboux {
            // sum (-1)^{i+1} comp * dphi_plus/dx = 0
            let mut r12 = GradedElement::zero(ft);
            for (p, comp) in self.pairs.iter().zip(&split.components) {
                let sgn = if (p.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
                r12 = &r12 + &(comp * &split.phi_plus.differentiate(p.x)).scale_int(sgn);
            }
            rep.residual("components_annihilate_base", "eq2.12", &r12);

            // pairwise component compatibility
            let mut r13 = GradedElement::zero(ft);
            for (p1, c1) in self.pairs.iter().zip(&split.components) {
                for c2 in &split.components {
                    let sgn = if (p1.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
                    r13 = &r13 + &(c1 * &c2.differentiate(p1.x)).scale_int(sgn);
                }
            }
            rep.residual("components_square_zero", "eq2.13", &r13);

            // the stored differential re-expressed through the split
            let mut r14 = GradedElement::zero(ft);
            for (p, comp) in self.pairs.iter().zip(&split.components) {
                let sgn = if (p.i + 1).rem_euclid(2) == 1 { -1 } else { 1 };
                let dx = &self.forms.diff_of(p.x) - &comp.scale_int(sgn);
                r14 = &r14 + &dx;
                let mut dy = split.phi_plus.differentiate(p.x);
                for (p2, c2) in self.pairs.iter().zip(&split.components) {
                    dy = &dy + &(&c2.differentiate(p.x) * &GradedElement::generator(ft, p2.y));
                }
                r14 = &r14 + &(&self.forms.diff_of(p.y) - &dy);
            }
            rep.residual("split_reproduces_differential", "eq2.14", &r14);
        }

        // sub-potential triple: d phi_plus = 0, d_dR phi_plus + d ppf = 0,
        // d_dR ppf = -omega0
        rep.residual("base_hamiltonian_closed", "eq2.16", &self.forms.d(&split.phi_plus));
        let r2 = &de_rham(&split.phi_plus) + &self.forms.d(&split.phi_plus_form);
        rep.residual("base_potential_matches", "eq2.16", &r2);
        let r3 = &de_rham(&split.phi_plus_form) + &self.omega0;
        rep.residual("base_potential_gives_form", "eq2.16", &r3);
        rep
    }
}

/// Change of variables from strong form (all units 1, even middle count) to
/// plain Darboux form over Q(i). The symplectic form is transported exactly.
pub fn strong_to_darboux(inst: &DarbouxInstance) -> Result<(DarbouxInstance, Report), Error> {
    if inst.variant != DarbouxVariant::Strong {
        return Err(Error::BadInstance("input is not in strong form".into()));
    }
    if inst.table().field() != Field::Qi {
        return Err(Error::FieldLacksI);
    }
    let md = inst.z_gens.len();
    if md % 2 != 0 {
        return Err(Error::OddMiddleDimension(md));
    }
    let k = inst.k;
    let d = inst.d_index;

    // new spec: middle pairs x^d_j, y^d_j, j = 1..md/2
    let mut m = inst.spec.m.clone();
    m.insert(d, md / 2);
    let mut new_spec = DarbouxSpec {
        field: Field::Qi,
        k,
        base_vars: inst.spec.base_vars.clone(),
        invertible_vars: inst.spec.invertible_vars.clone(),
        m,
        phi: String::new(),
        attest_phi_reduced_zero: inst.spec.attest_phi_reduced_zero,
        q: Vec::new(),
    };
    let (new_table, _, _) = build_table(&new_spec, false)?;

    // substitution: z_{2j-1} -> (x^d_j + y^d_j)/2, z_{2j} -> -i(x^d_j - y^d_j)/2
    let mut images: BTreeMap<GenId, GradedElement> = BTreeMap::new();
    for g in inst.table().ring_ids() {
        let name = &inst.table().info(g).name;
        if inst.z_gens.contains(&g) {
            continue;
        }
        images.insert(g, GradedElement::generator(&new_table, new_table.require(name)?));
    }
    let half = Scalar::from_ratio(1, 2);
    let minus_i_half = &(-&Scalar::i()) * &half;
    for (idx, &z) in inst.z_gens.iter().enumerate() {
        let j = idx / 2;
        let x = GradedElement::generator(&new_table, new_table.require(&name_for("x", d, j))?);
        let y = GradedElement::generator(&new_table, new_table.require(&name_for("y", k - d, j))?);
        let im = if idx % 2 == 0 {
            (&x + &y).scale(&half)
        } else {
            (&x - &y).scale(&minus_i_half)
        };
        images.insert(z, im);
    }

    // transport the hamiltonian and rebuild in plain form
    let ring_phi = inst
        .phi
        .filter_terms(|_| true); // phi lives over the form table; rebuild over ring table
    let ring_table = inst.table().clone();
    let phi_ring = reexpress(&ring_phi, &ring_table)?;
    let subst_ring = CdgaMorphism::new(
        inst.cdga.clone(),
        Cdga::new_unchecked(new_table.clone(), BTreeMap::new(), false),
        images,
    )?;
    let new_phi = subst_ring.apply(&phi_ring);
    new_spec.phi = new_phi.to_string();
    let out = build_darboux(&new_spec)?;

    // extra checks: the substitution is a cdga morphism onto the new
    // instance, vdim is preserved, and omega transports exactly
    let mut rep = Report::new();
    let subst = CdgaMorphism::new(inst.cdga.clone(), out.cdga.clone(), subst_ring.images().clone())?;
    let bad = subst.check();
    if bad.is_empty() {
        rep.pass("substitution_is_cdga_morphism", "eq2.19");
    } else {
        for (g, r) in bad {
            rep.fail(
                "substitution_is_cdga_morphism",
                "eq2.19",
                format!("on {}: {}", inst.table().info(g).name, r),
            );
        }
    }
    if inst.vdim() == out.vdim() {
        rep.pass("vdim_preserved", "eq2.5");
    } else {
        rep.fail("vdim_preserved", "eq2.5", format!("{} vs {}", inst.vdim(), out.vdim()));
    }
    let pushed = pushforward(&subst, &inst.omega0);
    rep.residual("symplectic_form_transported", "eq2.17", &(&pushed - &out.omega0));
    Ok((out, rep))
}

/// Re-express an element over a smaller table containing the same-named
/// generators (used to move between a form table and its ring part).
fn reexpress(e: &GradedElement, target: &Arc<Table>) -> Result<GradedElement, Error> {
    let mut out = GradedElement::zero(target);
    for (m, c) in e.terms() {
        let mut term = GradedElement::constant(target, c.clone());
        for &(rank, exp) in m.factors() {
            let name = &e.table().info_at_rank(rank).name;
            let id = target.require(name)?;
            term = &term * &GradedElement::gen_pow(target, id, exp)?;
        }
        out = &out + &term.scale(&Scalar::one());
    }
    Ok(out)
}

/// Derived critical locus of a degree-0 function: the k = -1 instance plus
/// the ideal presentation of its classical functions.
pub fn crit(
    field: Field,
    base_vars: Vec<String>,
    invertible_vars: Vec<String>,
    phi: &str,
    attest: bool,
) -> Result<(DarbouxInstance, Vec<GradedElement>), Error> {
    let spec = DarbouxSpec {
        field,
        k: -1,
        base_vars,
        invertible_vars,
        m: BTreeMap::new(),
        phi: phi.to_string(),
        attest_phi_reduced_zero: attest,
        q: Vec::new(),
    };
    let inst = build_darboux(&spec)?;
    let ideal: Vec<GradedElement> = inst
        .degree0_coords()
        .iter()
        .map(|&g| {
            let d = inst.phi.differentiate(g);
            reexpress(&d, inst.table()).expect("ring element")
        })
        .collect();
    Ok((inst, ideal))
}

/// Zero locus of a section of a quadratic bundle: the k = -2 weak instance
/// with hamiltonian `sum z_j s_j`, valid iff `sum s_j^2 / q_j = 0`.
pub fn quadratic_zero_locus(
    field: Field,
    base_vars: Vec<String>,
    invertible_vars: Vec<String>,
    q_texts: &[String],
    s_texts: &[String],
) -> Result<(DarbouxInstance, Vec<GradedElement>), Error> {
    if q_texts.len() != s_texts.len() {
        return Err(Error::BadInstance("need one unit per section component".into()));
    }
    let mut m = BTreeMap::new();
    m.insert(-1i64, q_texts.len());
    let mut spec = DarbouxSpec {
        field,
        k: -2,
        base_vars,
        invertible_vars,
        m,
        phi: String::new(),
        attest_phi_reduced_zero: false,
        q: q_texts.to_vec(),
    };
    // assemble phi = sum z_j s_j over the table
    let (table, _, z_names) = build_table(&spec, true)?;
    let mut phi = GradedElement::zero(&table);
    let mut sections = Vec::new();
    let mut qss = GradedElement::zero(&table);
    for ((z, s_text), q_text) in z_names.iter().zip(s_texts).zip(q_texts) {
        let s = parse(s_text, &table)?;
        if !s.is_zero() && s.degree() != Some(0) {
            return Err(Error::DegreeMismatch { expected: 0, found: s.to_string() });
        }
        let q = parse(q_text, &table)?;
        if !q.is_unit() {
            return Err(non_unit_divisor(&q));
        }
        qss = &qss + &(&s * &s).div_unit(&q)?;
        phi = &phi + &(&GradedElement::generator(&table, table.require(z)?) * &s);
        sections.push(s);
    }
    if !qss.is_zero() {
        return Err(Error::QssNonzero { residual: qss.to_string() });
    }
    spec.phi = phi.to_string();
    let inst = build_weak_darboux(&spec)?;
    let ideal = sections
        .iter()
        .map(|s| reexpress(s, inst.table()).expect("same names"))
        .collect();
    Ok((inst, ideal))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Symplectic,
    Lagrangian,
}

/// Parity constraints on virtual dimensions, by residue of the shift.
pub fn vdim_parity_check(k: i64, role: Role, vdim_x: i64, vdim_l: Option<i64>) -> Report {
    let mut rep = Report::new();
    match k.rem_euclid(4) {
        0 => {
            if vdim_x % 2 == 0 {
                rep.pass("vdim_even", "vdim");
            } else {
                rep.fail("vdim_even", "vdim", format!("vdim = {vdim_x}"));
            }
        }
        1 | 3 => {
            if vdim_x == 0 {
                rep.pass("vdim_zero", "vdim");
            } else {
                rep.fail("vdim_zero", "vdim", format!("vdim = {vdim_x}"));
            }
        }
        2 => rep.pass("vdim_unconstrained", "vdim"),
        _ => unreachable!(),
    }
    if role == Role::Lagrangian {
        if let Some(vl) = vdim_l {
            match k.rem_euclid(4) {
                0 | 2 => {
                    if 2 * vl == vdim_x {
                        rep.pass("vdim_lagrangian_half", "vdim");
                    } else {
                        rep.fail(
                            "vdim_lagrangian_half",
                            "vdim",
                            format!("vdim L = {vl}, vdim X = {vdim_x}"),
                        );
                    }
                }
                1 => {
                    if vl % 2 == 0 {
                        rep.pass("vdim_lagrangian_even", "vdim");
                    } else {
                        rep.fail("vdim_lagrangian_even", "vdim", format!("vdim L = {vl}"));
                    }
                }
                _ => rep.pass("vdim_lagrangian_unconstrained", "vdim"),
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn crit_x3() -> DarbouxInstance {
        let (inst, ideal) =
            crit(Field::Q, vec!["x".into()], vec![], "x^3", true).unwrap();
        assert_eq!(ideal.len(), 1);
        assert_eq!(ideal[0].to_string(), "3*x^2");
        inst
    }

    #[test]
    fn crit_locus_shape() {
        let inst = crit_x3();
        // d y = dPhi/dx = 3x^2
        let y = inst.table().require("y1_1").unwrap();
        assert_eq!(inst.forms.diff_of(y).to_string(), "3*x^2");
        // omega0 = d(x) d(y)
        assert_eq!(inst.omega0.to_string(), "d(x)*d(y1_1)");
        assert!(inst.verify().ok());
        assert_eq!(inst.vdim(), 0);
    }

    #[test]
    fn zero_hamiltonian_k_minus_3() {
        let mut m = BTreeMap::new();
        m.insert(-1i64, 1usize);
        let spec = DarbouxSpec {
            field: Field::Q,
            k: -3,
            base_vars: vec!["x".into()],
            invertible_vars: vec![],
            m,
            phi: "0".into(),
            attest_phi_reduced_zero: false,
            q: vec![],
        };
        let inst = build_darboux(&spec).unwrap();
        assert!(inst.cdga.diff_map().is_empty());
        assert!(inst.verify().ok());
        assert_eq!(inst.vdim(), 0); // odd shift: pairs cancel
    }

    #[test]
    fn master_equation_gate_rejects() {
        // k = -3, two degree -1 coordinates: phi = x1_1*x1_2 + x*y2_1 has
        // degree -2 but dphi/dx1_1 * dphi/dy2_1 = x1_2 * x != 0.
        let mut m = BTreeMap::new();
        m.insert(-1i64, 2usize);
        let spec = DarbouxSpec {
            field: Field::Q,
            k: -3,
            base_vars: vec!["x".into()],
            invertible_vars: vec![],
            m,
            phi: "x1_1*x1_2 + x*y2_1".into(),
            attest_phi_reduced_zero: false,
            q: vec![],
        };
        match build_darboux(&spec) {
            Err(Error::MasterEquationViolated { residual }) => {
                assert!(!residual.is_empty());
            }
            other => panic!("expected master equation violation, got {other:?}"),
        }
    }

    #[test]
    fn quadratic_locus_cancellation() {
        let (inst, ideal) = quadratic_zero_locus(
            Field::Q,
            vec!["x".into()],
            vec![],
            &["1".into(), "-1".into()],
            &["x".into(), "x".into()],
        )
        .unwrap();
        assert_eq!(inst.variant, DarbouxVariant::Weak);
        assert_eq!(ideal.len(), 2);
        assert!(inst.verify().ok());
        // vdim = 2 sum (-1)^i m_i - m_d = 2*1 - 2 = 0
        assert_eq!(inst.vdim(), 0);
        let qss = quadratic_zero_locus(
            Field::Q,
            vec!["x".into()],
            vec![],
            &["1".into(), "1".into()],
            &["x".into(), "x".into()],
        );
        match qss {
            Err(Error::QssNonzero { residual }) => assert_eq!(residual, "2*x^2"),
            other => panic!("expected QssNonzero, got {other:?}"),
        }
    }

    #[test]
    fn weak_with_unit_coefficients() {
        // q = (c, -c) exercises the middle correction terms in d y^k.
        let (inst, _) = quadratic_zero_locus(
            Field::Q,
            vec!["x".into()],
            vec!["c".into()],
            &["c".into(), "-c".into()],
            &["x".into(), "x".into()],
        )
        .unwrap();
        assert!(inst.verify().ok());
        // the partner of c picks up the z/(2q) dq/dx dPhi/dz correction
        let yc = inst.pairs.iter().find(|p| {
            inst.table().info(p.x).name == "c"
        }).unwrap();
        assert!(!inst.forms.diff_of(yc.y).is_zero());
    }

    #[test]
    fn split_round_trip_k_minus_2_twisted() {
        // k = -2 with a y-linear hamiltonian built from x0-pure components
        let mut m = BTreeMap::new();
        m.insert(-1i64, 1usize);
        let spec = DarbouxSpec {
            field: Field::Q,
            k: -2,
            base_vars: vec!["x".into()],
            invertible_vars: vec![],
            m,
            phi: "x^2*y1_1".into(),
            attest_phi_reduced_zero: false,
            q: vec![],
        };
        let inst = build_darboux(&spec).unwrap();
        let split = inst.split().unwrap();
        assert!(split.phi_plus.is_zero());
        // the component sits on the pair (x1_1, y1_1)
        let idx = inst
            .pairs
            .iter()
            .position(|p| inst.table().info(p.y).name == "y1_1")
            .unwrap();
        assert_eq!(split.components[idx].to_string(), "x^2");
        assert!(inst.verify_split(&split).ok());
        assert!(inst.verify().ok());
    }

    #[test]
    fn k_zero_cotangent_model() {
        let spec = DarbouxSpec {
            field: Field::Q,
            k: 0,
            base_vars: vec!["x".into()],
            invertible_vars: vec![],
            m: BTreeMap::new(),
            phi: "0".into(),
            attest_phi_reduced_zero: false,
            q: vec![],
        };
        let inst = build_darboux(&spec).unwrap();
        assert!(inst.verify().ok());
        assert_eq!(inst.vdim(), 2);
        assert_eq!(inst.omega0.to_string(), "d(x)*d(y0_1)");
    }

    #[test]
    fn strong_form_pairs_off() {
        // strong k = -2 instance with two middle coordinates and q = (1,1);
        // over Q(i) it converts to plain Darboux form with one pair.
        let mut m = BTreeMap::new();
        m.insert(-1i64, 2usize);
        let spec = DarbouxSpec {
            field: Field::Qi,
            k: -2,
            base_vars: vec!["x".into()],
            invertible_vars: vec![],
            m,
            phi: "z1_1*x - i*z1_2*x".into(),
            attest_phi_reduced_zero: false,
            q: vec!["1".into(), "1".into()],
        };
        // master: 1/4 [ x^2 + (i x)^2 ] = 0
        let inst = build_weak_darboux(&spec).unwrap();
        assert_eq!(inst.variant, DarbouxVariant::Strong);
        let (out, rep) = strong_to_darboux(&inst).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert_eq!(out.variant, DarbouxVariant::Darboux);
        assert_eq!(out.vdim(), inst.vdim());
        assert!(out.verify().ok());
        // field Q is rejected
        let mut mq = BTreeMap::new();
        mq.insert(-1i64, 2usize);
        let spec_q = DarbouxSpec { field: Field::Q, phi: "0".into(), m: mq, q: vec!["1".into(), "1".into()], ..spec };
        let inst_q = build_weak_darboux(&spec_q).unwrap();
        assert!(matches!(strong_to_darboux(&inst_q), Err(Error::FieldLacksI)));
    }

    #[test]
    fn k_minus_1_needs_attestation_and_zero_constant() {
        let spec = DarbouxSpec {
            field: Field::Q,
            k: -1,
            base_vars: vec!["x".into()],
            invertible_vars: vec![],
            m: BTreeMap::new(),
            phi: "x^3 + 1".into(),
            attest_phi_reduced_zero: true,
            q: vec![],
        };
        assert!(matches!(build_darboux(&spec), Err(Error::PhiConstantTerm)));
        let spec2 = DarbouxSpec { phi: "x^3".into(), attest_phi_reduced_zero: false, ..spec };
        assert!(matches!(build_darboux(&spec2), Err(Error::PhiNotAttested)));
    }
}
