//! Acceptance suite: every shipped guarantee, one test per criterion, one
//! pass/fail line each. All arithmetic is exact, so every assertion is a
//! zero-tolerance equality; the only numeric budgets are wall-clock caps.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use darboux_core::cdga::{Cdga, CdgaMorphism};
use darboux_core::darboux::{vdim_parity_check, Role as VdimRole};
use darboux_core::derham::{contract, de_rham, form_extension};
use darboux_core::element::GradedElement;
use darboux_core::error::Error;
use darboux_core::generate::{gen_instance, Family};
use darboux_core::instance::{run_verify, BuiltInstance, InstanceFile};
use darboux_core::lagrangian::{
    gauge_obfuscate, normalize, verify_homotopy,
};
use darboux_core::parse::{parse, print};
use darboux_core::pointcheck::{
    lagrangian_parts_nondegenerate_at, symplectic_parts_nondegenerate_at, ClassicalPoint,
};
use darboux_core::report::Status;
use darboux_core::scalar::{Field, Scalar};
use darboux_core::table::{GenId, GenSpec, Table};

/// The timed criteria must not contend with each other for the cores, so
/// every criterion takes this lock.
static SERIAL: std::sync::Mutex<()> = std::sync::Mutex::new(());

const GOLDEN: &[&str] = &[
    "crit_cubic.json",
    "quadratic_pair.json",
    "conormal_k2.json",
    "weak_lagrangian_k1.json",
    "relative_crit_k0.json",
];

fn golden(name: &str) -> InstanceFile {
    let path = format!("{}/fixtures/golden/{}", env!("CARGO_MANIFEST_DIR"), name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    InstanceFile::from_str(&text).expect("golden file parses")
}

fn outcome(criterion: &str, ok: bool) {
    println!("criterion {criterion}: {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed");
}

/// Criterion 1: the calibration identity suite evaluates to exactly zero
/// residuals on every golden instance, within the wall-clock budget.
#[test]
fn criterion_1_calibration_suite() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let wanted = ["eq2.10", "eq2.16", "eq3.13", "eq3.22", "eq3.23", "eq3.24"];
    let mut ok = true;
    for name in GOLDEN {
        let rep = run_verify(&golden(name), None).expect("golden builds");
        if !rep.ok() {
            eprintln!("{name}: {:?}", rep.failures().collect::<Vec<_>>());
            ok = false;
        }
        for eq in wanted {
            let hits: Vec<_> =
                rep.checks.iter().filter(|c| c.equation_ref == eq).collect();
            let applicable = match (*name, eq) {
                // the two darboux-only goldens have no lagrangian suite
                ("crit_cubic.json" | "quadratic_pair.json", e) => e.starts_with("eq2"),
                _ => true,
            };
            if applicable && (hits.is_empty() || hits.iter().any(|c| c.status == Status::Fail))
            {
                eprintln!("{name}: {eq} missing or failing");
                ok = false;
            }
        }
    }
    let elapsed = t0.elapsed();
    ok &= elapsed.as_secs_f64() < 5.0;
    println!("calibration suite: {:.2}s", elapsed.as_secs_f64());
    outcome("1 (calibration identity suite)", ok);
}

/// Criterion 2: the builders reject twenty mutated hamiltonians and
/// superpotentials, printing the nonzero residual.
#[test]
fn criterion_2_master_equation_gating() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut rejected = 0usize;
    let mut total = 0usize;
    let mut check = |file: InstanceFile| {
        total += 1;
        match file.build() {
            Err(Error::MasterEquationViolated { residual })
            | Err(Error::SuperpotentialPdeViolated { residual })
            | Err(Error::QssNonzero { residual }) => {
                assert!(!residual.is_empty(), "rejection must print the residual");
                rejected += 1;
            }
            Err(other) => panic!("expected a master-equation rejection, got {other}"),
            Ok(_) => panic!("mutant was accepted"),
        }
    };

    // weak darboux mutants
    for phi in [
        "z1_1*x + 2*z1_2*x",
        "z1_1*x + z1_2*x2",
        "z1_1*x - 2*z1_2*x",
        "z1_1*x^2 + z1_2*x",
        "3*z1_1*x + z1_2*x",
        "z1_1*x + z1_2*x + z1_1*x2",
    ] {
        let mut f = golden("quadratic_pair.json");
        f.phi = phi.into();
        check(f);
    }
    for q in [["1", "1"], ["2", "-1"]] {
        let mut f = golden("quadratic_pair.json");
        f.q = q.iter().map(|s| s.to_string()).collect();
        check(f);
    }
    // conormal superpotential mutants
    for psi in [
        "x^2*v2_1 + u1_1*xt1_1",
        "x^2*v2_1 - u1_1*xt1_1",
        "x^2*v2_1 + 2*u1_1*xt1_1",
        "x^2*v2_1 + 1/2*u1_1*xt1_1",
    ] {
        let mut f = golden("conormal_k2.json");
        f.psi = psi.into();
        check(f);
    }
    // base hamiltonian mutant under a lagrangian role
    {
        let mut f = golden("conormal_k2.json");
        f.phi = "x^2*y1_1 + x*x1_1".into();
        check(f);
    }
    // weak lagrangian mutants
    for psi in ["3*x*w1_1", "x*w1_1", "2*x*w1_1 + u0_1*w1_1", "2*x*w1_1 + w1_1"] {
        let mut f = golden("weak_lagrangian_k1.json");
        f.psi = psi.into();
        check(f);
    }
    {
        let mut f = golden("weak_lagrangian_k1.json");
        f.phi = "x^2".into();
        check(f);
    }
    {
        let mut f = golden("weak_lagrangian_k1.json");
        f.q = vec!["-1".into()];
        check(f);
    }
    // plain darboux master equation violation at k = -3
    {
        let mut f = golden("crit_cubic.json");
        f.k = -3;
        f.base_vars = vec!["x".into()];
        f.m = BTreeMap::from([("-1".to_string(), 2usize)]);
        f.phi = "x1_1*x1_2 + x*y2_1".into();
        f.points.clear();
        check(f);
    }
    assert_eq!(total, 20);
    outcome("2 (master-equation gating)", rejected == 20);
}

/// Criterion 3: fifty seeded conormal instances per even shift and fifty
/// derived critical loci all pass the full verify suite, in budget.
#[test]
fn criterion_3_generator_soundness() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let mut jobs: Vec<(i64, Family, u64)> = Vec::new();
    for seed in 0..50u64 {
        jobs.push((-2, Family::Conormal, seed));
        jobs.push((-4, Family::Conormal, seed));
        jobs.push((-1, Family::Critlocus, seed));
    }
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(k, family, seed)| {
            let file = match gen_instance(k, family, seed) {
                Ok(f) => f,
                Err(e) => return Some(format!("gen k={k} seed={seed}: {e}")),
            };
            match run_verify(&file, None) {
                Ok(rep) if rep.ok() => None,
                Ok(rep) => Some(format!(
                    "verify k={k} seed={seed}: {:?}",
                    rep.failures().collect::<Vec<_>>()
                )),
                Err(e) => Some(format!("verify k={k} seed={seed}: {e}")),
            }
        })
        .collect();
    for f in &failures {
        eprintln!("{f}");
    }
    let elapsed = t0.elapsed();
    println!("generator soundness: {:.2}s for 150 instances", elapsed.as_secs_f64());
    outcome(
        "3 (generator soundness)",
        failures.is_empty() && elapsed.as_secs_f64() < 60.0,
    );
}

/// Criterion 4: the closed bracket table and the four bracket axioms hold
/// on every golden instance.
#[test]
fn criterion_4_bracket_table() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut ok = true;
    for name in GOLDEN {
        let rep = run_verify(&golden(name), None).expect("golden builds");
        for check in ["bracket_table", "bracket_antisymmetry", "bracket_jacobi",
                      "bracket_d_compatible", "bracket_leibniz"] {
            let found = rep
                .checks
                .iter()
                .any(|c| c.name == check && c.status == Status::Pass);
            if !found {
                eprintln!("{name}: {check} missing or failing");
                ok = false;
            }
        }
    }
    outcome("4 (bracket table and axioms)", ok);
}

/// Criterion 5: strict Poisson data on the symplectic side and strict
/// coisotropic data on every golden Lagrangian, exactly.
#[test]
fn criterion_5_poisson_coisotropic() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut ok = true;
    for name in GOLDEN {
        let rep = run_verify(&golden(name), None).expect("golden builds");
        let mut want: Vec<&str> = vec!["bivector_closed", "bivector_self_bracket"];
        if matches!(*name, "conormal_k2.json" | "weak_lagrangian_k1.json" | "relative_crit_k0.json") {
            want.extend([
                "lift_commutes_with_differential",
                "lift_preserves_brackets",
                "projection_recovers_morphism",
            ]);
        }
        for check in want {
            let found = rep
                .checks
                .iter()
                .any(|c| c.name == check && c.status == Status::Pass);
            if !found {
                eprintln!("{name}: {check} missing or failing");
                ok = false;
            }
        }
    }
    outcome("5 (poisson and coisotropic structures)", ok);
}

/// Criterion 6: nondegeneracy holds at three or more rational points per
/// golden instance, and ten corruption fixtures all come back degenerate.
#[test]
fn criterion_6_nondegeneracy() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut ok = true;
    for name in GOLDEN {
        let rep = run_verify(&golden(name), None).expect("golden builds");
        let passes = rep
            .checks
            .iter()
            .filter(|c| {
                (c.name == "symplectic_nondegenerate" || c.name == "lagrangian_nondegenerate")
                    && c.status == Status::Pass
            })
            .count();
        if passes < 3 {
            eprintln!("{name}: only {passes} nondegenerate points");
            ok = false;
        }
    }

    // ten corruption fixtures, all expected degenerate
    let mut degenerate = 0usize;
    let crit = match golden("crit_cubic.json").build().unwrap() {
        BuiltInstance::Darboux(d) => d,
        _ => unreachable!(),
    };
    let quad = match golden("quadratic_pair.json").build().unwrap() {
        BuiltInstance::Darboux(d) => d,
        _ => unreachable!(),
    };
    let conormal = match golden("conormal_k2.json").build().unwrap() {
        BuiltInstance::Lagrangian(l) => l,
        _ => unreachable!(),
    };
    let weak_lag = match golden("weak_lagrangian_k1.json").build().unwrap() {
        BuiltInstance::Lagrangian(l) => l,
        _ => unreachable!(),
    };
    let k0 = match golden("relative_crit_k0.json").build().unwrap() {
        BuiltInstance::Lagrangian(l) => l,
        _ => unreachable!(),
    };
    let point_for = |table: &std::sync::Arc<Table>, vals: &[(&str, i64)]| {
        let mut m = BTreeMap::new();
        for (n, v) in vals {
            m.insert(table.require(n).unwrap(), Scalar::from_int(*v));
        }
        ClassicalPoint::new(m)
    };

    // 1-2: zeroed and half-deleted symplectic form on the critical locus
    let p = point_for(crit.table(), &[("x", 0), ("x2", 0)]);
    let zero = GradedElement::zero(crit.form_table());
    let (r1, _) = symplectic_parts_nondegenerate_at(&crit.cdga, &zero, crit.k, &p).unwrap();
    degenerate += (!r1) as usize;
    let ft = crit.form_table();
    let keep = ft.require("d(x)").unwrap();
    let dropped = crit.omega0.filter_terms(|m| {
        m.factors().iter().any(|&(r, _)| ft.id_at_rank(r) == keep)
    });
    let (r2, _) = symplectic_parts_nondegenerate_at(&crit.cdga, &dropped, crit.k, &p).unwrap();
    degenerate += (!r2) as usize;

    // 3-4: quadratic locus with the middle block zeroed, then everything
    let pq = point_for(quad.table(), &[("x", 0), ("x2", 0)]);
    let qt = quad.form_table();
    let no_z = quad.omega0.filter_terms(|m| {
        !m.factors().iter().any(|&(r, _)| qt.info_at_rank(r).name.contains("z1"))
    });
    let (r3, _) = symplectic_parts_nondegenerate_at(&quad.cdga, &no_z, quad.k, &pq).unwrap();
    degenerate += (!r3) as usize;
    let zq = GradedElement::zero(qt);
    let (r4, _) = symplectic_parts_nondegenerate_at(&quad.cdga, &zq, quad.k, &pq).unwrap();
    degenerate += (!r4) as usize;

    // 5-6: conormal data with the isotropic form zeroed, then one pairing
    // term removed
    let pc = point_for(conormal.table(), &[("x", 0), ("u0_1", 0)]);
    let zc = GradedElement::zero(conormal.form_table());
    let (r5, _) = lagrangian_parts_nondegenerate_at(
        &conormal.base, &conormal.cdga, &conormal.alpha, &zc, conormal.k, &pc,
    )
    .unwrap();
    degenerate += (!r5) as usize;
    let cft = conormal.form_table();
    let du1 = cft.require("d(u1_1)").unwrap();
    let h_dropped = conormal.h0.filter_terms(|m| {
        !m.factors().iter().any(|&(r, _)| cft.id_at_rank(r) == du1)
    });
    let (r6, _) = lagrangian_parts_nondegenerate_at(
        &conormal.base, &conormal.cdga, &conormal.alpha, &h_dropped, conormal.k, &pc,
    )
    .unwrap();
    degenerate += (!r6) as usize;

    // 7: weak lagrangian with the self-paired block removed
    let pw = point_for(weak_lag.table(), &[("x", 0), ("u0_1", 0)]);
    let wt = weak_lag.form_table();
    let no_w = weak_lag.h0.filter_terms(|m| {
        !m.factors().iter().any(|&(r, _)| wt.info_at_rank(r).name.contains("w1"))
    });
    let (r7, _) = lagrangian_parts_nondegenerate_at(
        &weak_lag.base, &weak_lag.cdga, &weak_lag.alpha, &no_w, weak_lag.k, &pw,
    )
    .unwrap();
    degenerate += (!r7) as usize;

    // 8: zero isotropic form on the relative critical locus
    let p0 = point_for(k0.table(), &[("x", 0), ("u", 0)]);
    let z0 = GradedElement::zero(k0.form_table());
    let (r8, _) = lagrangian_parts_nondegenerate_at(
        &k0.base, &k0.cdga, &k0.alpha, &z0, k0.k, &p0,
    )
    .unwrap();
    degenerate += (!r8) as usize;

    // 9: hand-built raw data with mismatched pairing counts: an orphan
    // conjugate coordinate nobody pairs with
    {
        let table = Table::new(
            Field::Q,
            vec![
                GenSpec::new("x", 0),
                GenSpec::new("u0_1", 0),
                GenSpec::new("xt1_1", -1),
                GenSpec::new("u1_1", -1),
                GenSpec::new("v3_1", -3),
                GenSpec::new("v2_1", -2),
                GenSpec::new("v2_9", -2),
            ],
        )
        .unwrap();
        let mut diff = BTreeMap::new();
        diff.insert(table.require("xt1_1").unwrap(), parse("x^2", &table).unwrap());
        diff.insert(table.require("u1_1").unwrap(), parse("x^2", &table).unwrap());
        let cdga = Cdga::new(table.clone(), diff).unwrap();
        let mut images = BTreeMap::new();
        let at = conormal.base.table();
        images.insert(at.require("x").unwrap(), parse("x", &table).unwrap());
        images.insert(at.require("x1_1").unwrap(), parse("xt1_1", &table).unwrap());
        images.insert(at.require("y2_1").unwrap(), GradedElement::zero(&table));
        images.insert(at.require("y1_1").unwrap(), GradedElement::zero(&table));
        let alpha = CdgaMorphism::new(conormal.base.cdga.clone(), cdga.clone(), images).unwrap();
        let ft9 = form_extension(&cdga).table().clone();
        let h0 = parse("d(u0_1)*d(v3_1) + d(u1_1)*d(v2_1)", &ft9).unwrap();
        let p9 = point_for(&table, &[("x", 0), ("u0_1", 0)]);
        let (r9, _) = lagrangian_parts_nondegenerate_at(
            &conormal.base, &cdga, &alpha, &h0, conormal.k, &p9,
        )
        .unwrap();
        degenerate += (!r9) as usize;
    }

    // 10: conormal data with a mismatched pairing (wrong partners)
    let swapped = parse("d(u0_1)*d(v2_1)", conormal.form_table()).unwrap();
    let (r10, _) = lagrangian_parts_nondegenerate_at(
        &conormal.base, &conormal.cdga, &conormal.alpha, &swapped, conormal.k, &pc,
    )
    .unwrap();
    degenerate += (!r10) as usize;

    outcome("6 (pointwise nondegeneracy)", ok && degenerate == 10);
}

/// Criterion 7: normalize recovers standard form from twenty-five
/// scrambles per even shift, certificates verify, and single-sign
/// mutations of a certificate are rejected. Budgeted.
#[test]
fn criterion_7_normalization_round_trip() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let mut jobs: Vec<(i64, u64)> = Vec::new();
    for seed in 0..50u64 {
        jobs.push((-2, seed));
        jobs.push((-4, seed));
    }
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(k, seed)| {
            let file = match gen_instance(k, Family::Conormal, seed) {
                Ok(f) => f,
                Err(e) => return Some(format!("gen k={k} seed={seed}: {e}")),
            };
            let BuiltInstance::Lagrangian(inst) = file.build().ok()? else {
                return Some(format!("k={k} seed={seed}: wrong role"));
            };
            let raw = match gauge_obfuscate(&inst, seed) {
                Ok(r) => r,
                Err(e) => return Some(format!("obfuscate k={k} seed={seed}: {e}")),
            };
            let (out, cert, rep) = match normalize(&raw) {
                Ok(t) => t,
                Err(e) => return Some(format!("normalize k={k} seed={seed}: {e}")),
            };
            if !rep.ok() {
                return Some(format!(
                    "pipeline k={k} seed={seed}: {:?}",
                    rep.failures().collect::<Vec<_>>()
                ));
            }
            let vrep = out.verify();
            if !vrep.ok() {
                return Some(format!(
                    "output k={k} seed={seed}: {:?}",
                    vrep.failures().collect::<Vec<_>>()
                ));
            }
            let base_rep = out.base.verify();
            if !base_rep.ok() {
                return Some(format!("base k={k} seed={seed} fails"));
            }
            let hrep = verify_homotopy(&cert);
            if !hrep.ok() {
                return Some(format!(
                    "certificate k={k} seed={seed}: {:?}",
                    hrep.failures().collect::<Vec<_>>()
                ));
            }
            // single-sign mutations must be rejected
            let mut m1 = cert.clone();
            m1.hdot0 = -&m1.hdot0;
            if verify_homotopy(&m1).ok() {
                return Some(format!("k={k} seed={seed}: flipped form accepted"));
            }
            if let Some(y) = out.base.pairs.iter().map(|p| p.y).find(|y| {
                !cert.images[y].is_zero()
            }) {
                let mut m2 = cert.clone();
                m2.images.insert(y, -&m2.images[&y]);
                if verify_homotopy(&m2).ok() {
                    return Some(format!("k={k} seed={seed}: flipped image accepted"));
                }
            }
            None
        })
        .collect();
    for f in &failures {
        eprintln!("{f}");
    }
    let elapsed = t0.elapsed();
    println!("normalization round trips: {:.2}s for 100 seeds", elapsed.as_secs_f64());
    outcome(
        "7 (normalization round trip)",
        failures.is_empty() && elapsed.as_secs_f64() < 120.0,
    );
}

/// Criterion 8: virtual-dimension parities match the case table on all
/// generated instances.
#[test]
fn criterion_8_vdim_parity() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let mut ok = true;
    // generated instances carry the parity checks inside their verify
    // reports; probe a sample directly as well
    for seed in 0..10u64 {
        for (k, family) in [(-1, Family::Critlocus), (-2, Family::Conormal), (-4, Family::Conormal), (-2, Family::Quadratic)] {
            let file = gen_instance(k, family, seed).expect("generates");
            match file.build().expect("builds") {
                BuiltInstance::Darboux(d) => {
                    let rep = vdim_parity_check(d.k, VdimRole::Symplectic, d.vdim(), None);
                    if !rep.ok() {
                        eprintln!("k={k} seed={seed}: symplectic parity");
                        ok = false;
                    }
                    if d.k == -1 && d.vdim() != 0 {
                        ok = false; // odd shifts pair coordinates off exactly
                    }
                }
                BuiltInstance::Lagrangian(l) => {
                    let rep = vdim_parity_check(
                        l.k,
                        VdimRole::Lagrangian,
                        l.base.vdim(),
                        Some(l.vdim()),
                    );
                    if !rep.ok() {
                        eprintln!("k={k} seed={seed}: lagrangian parity");
                        ok = false;
                    }
                    if l.k.rem_euclid(2) == 0 && 2 * l.vdim() != l.base.vdim() {
                        eprintln!("k={k} seed={seed}: vdim L != vdim X / 2");
                        ok = false;
                    }
                }
                BuiltInstance::Raw(_) => {}
            }
        }
    }
    outcome("8 (virtual dimension parity)", ok);
}

/// Criterion 9: ten thousand random cases across the kernel laws, zero
/// failures: graded commutativity, associativity, the three Leibniz rules,
/// both squared differentials, the anticommutation ledger, and the parser
/// round trip.
#[test]
fn criterion_9_kernel_laws() {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t0 = Instant::now();
    let table = Table::new(
        Field::Q,
        vec![
            GenSpec::new("x", 0),
            GenSpec::unit("c"),
            GenSpec::new("a1", -1),
            GenSpec::new("a2", -1),
            GenSpec::new("b", -2),
            GenSpec::new("e", -3),
        ],
    )
    .unwrap();
    let mut diff = BTreeMap::new();
    diff.insert(table.require("a1").unwrap(), parse("x^2", &table).unwrap());
    diff.insert(table.require("a2").unwrap(), parse("-x^2", &table).unwrap());
    diff.insert(table.require("b").unwrap(), parse("x*a1 + x*a2", &table).unwrap());
    diff.insert(table.require("e").unwrap(), parse("a1*a2 - x*b", &table).unwrap());
    let cdga = Cdga::new(table.clone(), diff).unwrap();
    assert!(cdga.check_square_zero().is_empty(), "fixture differential squares to zero");
    let forms = form_extension(&cdga);
    let ftable = forms.table().clone();

    let mut rng = ChaCha8Rng::seed_from_u64(0xD15C0);
    let ring_gens: Vec<GenId> = table.ids().collect();
    let form_gens: Vec<GenId> = ftable.ids().collect();

    // parity-homogeneous random elements: pick one parity and only keep
    // matching monomials
    fn random_elem(
        rng: &mut ChaCha8Rng,
        t: &std::sync::Arc<Table>,
        gens: &[GenId],
    ) -> GradedElement {
        loop {
            let mut out = GradedElement::zero(t);
            let terms = rng.gen_range(1..=3);
            let mut want_parity: Option<bool> = None;
            for _ in 0..terms {
                let mut mono = GradedElement::one(t);
                let factors = rng.gen_range(1..=3);
                for _ in 0..factors {
                    let g = gens[rng.gen_range(0..gens.len())];
                    let info = t.info(g);
                    let e: i32 = if info.odd {
                        1
                    } else if info.invertible {
                        [-2, -1, 1, 2][rng.gen_range(0..4)]
                    } else {
                        rng.gen_range(1..=2)
                    };
                    if let Ok(p) = GradedElement::gen_pow(t, g, e) {
                        mono = &mono * &p;
                    }
                }
                if mono.is_zero() {
                    continue;
                }
                let p = mono.parity().expect("monomial parity");
                match want_parity {
                    None => want_parity = Some(p),
                    Some(w) if w != p => continue,
                    _ => {}
                }
                let c = Scalar::from_ratio(rng.gen_range(-4i64..=4), rng.gen_range(1..=3));
                out = &out + &mono.scale(&c);
            }
            if !out.is_zero() {
                return out;
            }
        }
    }
    let psign = |e: &GradedElement| -> i64 {
        if e.parity().expect("homogeneous parity") {
            1
        } else {
            0
        }
    };

    let cases_per_law = 1250usize;
    let mut failures = 0usize;

    // graded commutativity
    for _ in 0..cases_per_law {
        let a = random_elem(&mut rng, &ftable, &form_gens);
        let b = random_elem(&mut rng, &ftable, &form_gens);
        let sign = if psign(&a) == 1 && psign(&b) == 1 { -1 } else { 1 };
        if &a * &b != (&b * &a).scale_int(sign) {
            failures += 1;
        }
    }
    // associativity
    for _ in 0..cases_per_law {
        let a = random_elem(&mut rng, &ftable, &form_gens);
        let b = random_elem(&mut rng, &ftable, &form_gens);
        let c = random_elem(&mut rng, &ftable, &form_gens);
        if &(&a * &b) * &c != &a * &(&b * &c) {
            failures += 1;
        }
    }
    // Leibniz for d
    for _ in 0..cases_per_law {
        let a = random_elem(&mut rng, &ftable, &form_gens);
        let b = random_elem(&mut rng, &ftable, &form_gens);
        let lhs = forms.d(&(&a * &b));
        let rhs = &(&forms.d(&a) * &b)
            + &(&a * &forms.d(&b)).scale_int(if psign(&a) == 1 { -1 } else { 1 });
        if lhs != rhs {
            failures += 1;
        }
    }
    // Leibniz for d_dR
    for _ in 0..cases_per_law {
        let a = random_elem(&mut rng, &ftable, &form_gens);
        let b = random_elem(&mut rng, &ftable, &form_gens);
        let lhs = de_rham(&(&a * &b));
        let rhs = &(&de_rham(&a) * &b)
            + &(&a * &de_rham(&b)).scale_int(if psign(&a) == 1 { -1 } else { 1 });
        if lhs != rhs {
            failures += 1;
        }
    }
    // Leibniz for partial derivatives
    for _ in 0..cases_per_law {
        let a = random_elem(&mut rng, &table, &ring_gens);
        let b = random_elem(&mut rng, &table, &ring_gens);
        let g = ring_gens[rng.gen_range(0..ring_gens.len())];
        let pg = if table.info(g).odd { 1 } else { 0 };
        let lhs = (&a * &b).differentiate(g);
        let rhs = &(&a.differentiate(g) * &b)
            + &(&a * &b.differentiate(g)).scale_int(if psign(&a) * pg == 1 { -1 } else { 1 });
        if lhs != rhs {
            failures += 1;
        }
    }
    // both squared differentials and the anticommutation ledger
    for _ in 0..cases_per_law {
        let a = random_elem(&mut rng, &ftable, &form_gens);
        if !forms.d(&forms.d(&a)).is_zero() {
            failures += 1;
        }
        if !de_rham(&de_rham(&a)).is_zero() {
            failures += 1;
        }
        let anti = &forms.d(&de_rham(&a)) + &de_rham(&forms.d(&a));
        if !anti.is_zero() {
            failures += 1;
        }
    }
    // parser round trip: parse(print(e)) == e and print is a fixed point
    for _ in 0..(2 * cases_per_law) {
        let a = random_elem(&mut rng, &ftable, &form_gens);
        let s = print(&a);
        let b = parse(&s, &ftable).unwrap_or_else(|e| panic!("reparse `{s}`: {e}"));
        if a != b || print(&b) != s {
            failures += 1;
        }
    }
    // contraction is bilinear in the form slot
    let vtable = table.extend_vectors(-2).extend_forms();
    let vgens: Vec<GenId> = vtable.ids().collect();
    let mut done = 0usize;
    while done < cases_per_law {
        let v = random_elem(&mut rng, &vtable, &vgens);
        let a = random_elem(&mut rng, &vtable, &vgens);
        let b = random_elem(&mut rng, &vtable, &vgens);
        let (Some(wv), Some(wa), Some(wb)) = (v.weight(), a.weight(), b.weight()) else {
            continue;
        };
        if wv > wa.min(wb) || wa != wb {
            continue;
        }
        done += 1;
        let lhs = contract(&v, &(&a + &b)).unwrap();
        let rhs = &contract(&v, &a).unwrap() + &contract(&v, &b).unwrap();
        if lhs != rhs {
            failures += 1;
        }
    }
    println!(
        "kernel laws: 10000 cases in {:.2}s, {failures} failures",
        t0.elapsed().as_secs_f64()
    );
    outcome("9 (kernel laws)", failures == 0);
}
