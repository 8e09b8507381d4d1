//! Command-line driver: verify instance files, bring raw Lagrangian data
//! into standard form, generate seeded instances, and probe classical
//! points. Reports are deterministic; set RAYON_NUM_THREADS to control
//! how many independent checks run in parallel.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use darboux_core::error::Error;
use darboux_core::generate::{self, Family};
use darboux_core::instance::{run_verify, BuiltInstance, InstanceFile, Role};
use darboux_core::lagrangian::{normalize, verify_homotopy};
use darboux_core::pointcheck::{
    cotangent_at, lagrangian_nondegenerate_at, symplectic_nondegenerate_at, tangent_at,
};
use darboux_core::report::{Report, Status};

#[derive(Parser)]
#[command(name = "darboux", about = "Exact workbench for shifted-symplectic Darboux models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite of an instance file.
    Verify {
        file: PathBuf,
        /// Comma-separated identity ids to keep (e.g. eq2.10,eq3.13).
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Restrict the pointwise checks to one named point.
        #[arg(long)]
        point: Option<String>,
        /// Emit the report as compact JSON.
        #[arg(long)]
        json: bool,
        /// Emit the report as indented JSON.
        #[arg(long)]
        pretty: bool,
    },
    /// Bring raw Lagrangian data into standard form, with a certificate.
    Normalize {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Generate a seeded instance file.
    Gen {
        #[arg(long, allow_hyphen_values = true)]
        k: i64,
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Evaluate the pointwise complexes and nondegeneracy at one point.
    PointCheck {
        file: PathBuf,
        #[arg(long)]
        point: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 1 = a verification gate failed; 2 = the input itself is unusable.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::MasterEquationViolated { .. }
        | Error::SuperpotentialPdeViolated { .. }
        | Error::QssNonzero { .. }
        | Error::PrereqViolated { .. }
        | Error::BMatrixNotUnit { .. }
        | Error::NotClosed { .. }
        | Error::NoPrimitive
        | Error::PhiConstantTerm
        | Error::PhiNotAttested
        | Error::OddMiddleDimension(_)
        | Error::InvalidPoint(_) => 1,
        _ => 2,
    }
}

fn load(path: &PathBuf) -> Result<InstanceFile, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadInstance(format!("cannot read {}: {e}", path.display())))?;
    InstanceFile::from_str(&text)
}

fn print_report(rep: &Report, json: bool, pretty: bool) {
    if json {
        println!("{}", serde_json::to_string(rep).expect("serializable"));
    } else if pretty {
        println!("{}", serde_json::to_string_pretty(rep).expect("serializable"));
    } else {
        for c in &rep.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skip",
            };
            let point = c.point.as_deref().map(|p| format!(" @{p}")).unwrap_or_default();
            let residual = c
                .residual
                .as_deref()
                .map(|r| format!("  residual: {r}"))
                .unwrap_or_default();
            println!("{status}  {:<40} [{}]{point}{residual}", c.name, c.equation_ref);
        }
        let failed = rep.checks.iter().filter(|c| c.status == Status::Fail).count();
        println!("{} checks, {} failed", rep.checks.len(), failed);
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Verify { file, checks, point, json, pretty } => {
            let mut f = load(&file)?;
            if let Some(name) = point {
                if !f.points.contains_key(&name) {
                    return Err(Error::InvalidPoint(format!("no point named `{name}`")));
                }
                f.points.retain(|k, _| *k == name);
            }
            let filter = if checks.is_empty() { None } else { Some(checks.as_slice()) };
            let rep = run_verify(&f, filter)?;
            print_report(&rep, json, pretty);
            Ok(if rep.ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Normalize { file, out } => {
            let f = load(&file)?;
            if f.role != Role::LagrangianRaw {
                return Err(Error::BadInstance(
                    "normalize expects an instance with role `lagrangian_raw`".into(),
                ));
            }
            let BuiltInstance::Raw(raw) = f.build()? else { unreachable!() };
            let (inst, cert, rep) = normalize(&raw)?;
            let hrep = verify_homotopy(&cert);
            // write the normalized instance, re-verified, plus certificate
            let mut out_file = f.clone();
            out_file.role = Role::Lagrangian;
            out_file.psi =
                darboux_core::poisson::rebuild(&inst.psi_sup, inst.table())?.to_string();
            out_file.xi = String::new();
            out_file.raw_psi = String::new();
            out_file.d_b = BTreeMap::new();
            out_file.alpha_y = BTreeMap::new();
            out_file.points = BTreeMap::new();
            generate::attach_points(&mut out_file, &BuiltInstance::Lagrangian(inst.clone()), 3);
            let recheck = run_verify(&out_file, None)?;
            let ok = rep.ok() && hrep.ok() && recheck.ok();
            std::fs::write(&out, out_file.to_json())
                .map_err(|e| Error::BadInstance(format!("cannot write output: {e}")))?;
            let cert_path = out.with_extension("cert.json");
            let cert_json = serde_json::json!({
                "h_images": cert
                    .images
                    .iter()
                    .map(|(g, im)| (raw.base.table().info(*g).name.clone(), im.to_string()))
                    .collect::<BTreeMap<String, String>>(),
                "hdot0": cert.hdot0.to_string(),
                "checks": hrep,
            });
            std::fs::write(&cert_path, format!("{:#}\n", cert_json))
                .map_err(|e| Error::BadInstance(format!("cannot write certificate: {e}")))?;
            let mut combined = rep;
            combined.merge(hrep);
            combined.merge(recheck);
            print_report(&combined, false, false);
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Gen { k, family, seed, out } => {
            let fam: Family = family.parse()?;
            let f = generate::gen_instance(k, fam, seed)?;
            std::fs::write(&out, f.to_json())
                .map_err(|e| Error::BadInstance(format!("cannot write output: {e}")))?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::PointCheck { file, point } => {
            let f = load(&file)?;
            let built = f.build()?;
            let points = f.resolve_points(&built)?;
            let p = points
                .get(&point)
                .ok_or_else(|| Error::InvalidPoint(format!("no point named `{point}`")))?;
            match &built {
                BuiltInstance::Darboux(inst) => {
                    let cot = cotangent_at(&inst.cdga, p)?;
                    let tan = tangent_at(&inst.cdga, p)?;
                    for i in cot.degrees() {
                        println!(
                            "degree {i}: cotangent dim {}, tangent dim {}, cohomology {}",
                            cot.dim(i),
                            tan.dim(-i),
                            cot.cohomology_dim(i)
                        );
                    }
                    let (ok, rep) = symplectic_nondegenerate_at(inst, p)?;
                    print_report(&rep, false, false);
                    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
                }
                BuiltInstance::Lagrangian(inst) => {
                    let (ok, rep) = lagrangian_nondegenerate_at(inst, p)?;
                    print_report(&rep, false, false);
                    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
                }
                BuiltInstance::Raw(raw) => {
                    let cot = cotangent_at(&raw.cdga, p)?;
                    for i in cot.degrees() {
                        println!(
                            "degree {i}: cotangent dim {}, cohomology {}",
                            cot.dim(i),
                            cot.cohomology_dim(i)
                        );
                    }
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
    }
}
