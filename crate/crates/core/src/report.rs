//! Named verification checks with structured JSON reports, driving the
//! `verify` subcommand. Each check runs against a mesh at a given order and
//! reports pass/fail with dimensions, ranks, or a failure witness.

use serde::Serialize;
use serde_json::json;

use crate::c1::{verify_airy_identity, verify_unisolvence_c1};
use crate::complex::{global_c1_check, verify_commuting, verify_exactness, Family, GlobalSpace};
use crate::fields::{divergence, is_hdiv_conforming};
use crate::geometry::MacroTriangle;
use crate::mesh::Mesh;
use crate::stress::{build_psi, verify_unisolvence_stress};

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub mesh: String,
    pub k: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    fn pass(check: &str, mesh: &str, k: usize, details: Option<serde_json::Value>) -> Self {
        CheckReport {
            check: check.into(),
            mesh: mesh.into(),
            k,
            status: "pass".into(),
            details,
            witness: None,
        }
    }

    fn fail(check: &str, mesh: &str, k: usize, witness: String) -> Self {
        CheckReport {
            check: check.into(),
            mesh: mesh.into(),
            k,
            status: "fail".into(),
            details: None,
            witness: Some(witness),
        }
    }
}

pub const ALL_CHECKS: [&str; 6] =
    ["psi", "potential", "unisolvence", "exactness", "commuting", "c1"];

/// Runs one named check over the mesh.
pub fn run_check(name: &str, mesh: &Mesh, mesh_name: &str, k: usize, seed: u64) -> CheckReport {
    match name {
        "psi" => {
            for ti in 0..mesh.num_triangles() {
                let m = MacroTriangle::new(mesh.triangle_geometry(ti));
                for i in 0..3 {
                    let psi = build_psi(&m, k.max(1), i);
                    if !divergence(&m, &psi).is_zero() {
                        return CheckReport::fail(
                            name,
                            mesh_name,
                            k,
                            format!("div psi_{i} != 0 on triangle {ti}"),
                        );
                    }
                    if !is_hdiv_conforming(&m, &psi) {
                        return CheckReport::fail(
                            name,
                            mesh_name,
                            k,
                            format!("psi_{i} normal trace jumps on triangle {ti}"),
                        );
                    }
                }
            }
            CheckReport::pass(name, mesh_name, k, Some(json!({"triangles": mesh.num_triangles()})))
        }
        "potential" => {
            for ti in 0..mesh.num_triangles() {
                let m = MacroTriangle::new(mesh.triangle_geometry(ti));
                if !verify_airy_identity(&m, k.max(1)) {
                    return CheckReport::fail(
                        name,
                        mesh_name,
                        k,
                        format!("J(v_i) != psi_i on triangle {ti}"),
                    );
                }
            }
            CheckReport::pass(name, mesh_name, k, None)
        }
        "unisolvence" => {
            for ti in 0..mesh.num_triangles() {
                let m = MacroTriangle::new(mesh.triangle_geometry(ti));
                if k >= 1 {
                    let r = verify_unisolvence_stress(&m, k);
                    if !r.is_unisolvent() {
                        return CheckReport::fail(
                            name,
                            mesh_name,
                            k,
                            format!("stress DoF matrix singular on triangle {ti}"),
                        );
                    }
                }
                let r = verify_unisolvence_c1(&m, k);
                if !r.is_unisolvent() {
                    return CheckReport::fail(
                        name,
                        mesh_name,
                        k,
                        format!(
                            "C1 DoF matrix fails on triangle {ti}: {}",
                            r.failing_block.unwrap_or_else(|| "singular".into())
                        ),
                    );
                }
            }
            CheckReport::pass(name, mesh_name, k, None)
        }
        "exactness" if k < 2 => {
            CheckReport::fail(name, mesh_name, k, "the discrete complex needs k >= 2".into())
        }
        "exactness" => match verify_exactness(mesh, k) {
            Err(msg) => CheckReport::fail(name, mesh_name, k, msg),
            Ok(report) => {
                let details = serde_json::to_value(&report).ok();
                if report.is_exact() {
                    CheckReport::pass(name, mesh_name, k, details)
                } else {
                    CheckReport {
                        check: name.into(),
                        mesh: mesh_name.into(),
                        k,
                        status: "fail".into(),
                        details,
                        witness: Some("rank identities violated".into()),
                    }
                }
            }
        },
        "commuting" if k < 2 => {
            CheckReport::fail(name, mesh_name, k, "the commuting identities need k >= 2".into())
        }
        "commuting" => match verify_commuting(mesh, k, seed, 5) {
            Ok(()) => CheckReport::pass(name, mesh_name, k, Some(json!({"trials": 5, "seed": seed}))),
            Err(f) => CheckReport::fail(
                name,
                mesh_name,
                k,
                format!("{} identity failed at trial {} DoF {}", f.identity, f.trial, f.dof),
            ),
        },
        "c1" => {
            let space = GlobalSpace::new(mesh, Family::U, k);
            match global_c1_check(mesh, &space, k) {
                Ok(()) => CheckReport::pass(
                    name,
                    mesh_name,
                    k,
                    Some(json!({"dim": space.dim(), "interior_edges": mesh.interior_edges().count()})),
                ),
                Err(v) => CheckReport::fail(
                    name,
                    mesh_name,
                    k,
                    format!("jump detected on edge {} for global DoF {}", v.edge, v.global_dof),
                ),
            }
        }
        other => CheckReport::fail(other, mesh_name, k, format!("unknown check '{other}'")),
    }
}

/// Runs the selected checks and serializes the reports as a JSON array.
pub fn run_checks(
    names: &[String],
    mesh: &Mesh,
    mesh_name: &str,
    k: usize,
    seed: u64,
) -> (Vec<CheckReport>, bool) {
    let reports: Vec<CheckReport> =
        names.iter().map(|n| run_check(n, mesh, mesh_name, k, seed)).collect();
    let all_pass = reports.iter().all(|r| r.passed());
    (reports, all_pass)
}
