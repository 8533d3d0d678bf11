//! Named invariant checks run by the `validate` command.

use serde::Serialize;

use crate::analysis::{decay_params, pd_closed_form, pd_numeric};
use crate::detection::{enumerate_outcomes, povm_elements, success_probability_ideal};
use crate::error::Result;
use crate::hilbert::CMatrix;
use crate::model::{effective_hamiltonian, full_hamiltonian, SystemParams};
use crate::network::{
    apply_hwp, apply_pbs_routing, emit_and_qwp, reference_mismatch, AtomCavityState, NetworkLayout, OUTPUT_MODES,
};
use crate::protocol::{apply_hadamard_pulses, cavity_interaction, prepare_w_state};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> CheckResult {
    match outcome {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult { name, passed: false, detail: e.to_string() },
    }
}

fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pulsed W state after the ideal interaction at the operating time.
pub fn operating_point_input() -> Result<AtomCavityState> {
    let p = SystemParams::default();
    cavity_interaction(&apply_hadamard_pulses(&prepare_w_state())?, &p, p.operating_time())
}

/// Runs every check against `params` and `layout`; never stops early.
pub fn run_checks(params: &SystemParams, layout: &NetworkLayout) -> ValidationReport {
    let mut checks = Vec::new();

    checks.push(check("system_params", params.validate().map(|_| (true, "ok".into()))));
    checks.push(check("network_layout", layout.validate().map(|_| (true, "ok".into()))));

    checks.push(check("unitarity", (|| {
        let p = if params.validate().is_ok() { *params } else { SystemParams::default() };
        let t = p.operating_time();
        let full = unitarity_error(full_hamiltonian(&p).propagator(t)?.elements());
        let eff = unitarity_error(effective_hamiltonian(&p).propagator(t)?.elements());
        let worst = full.max(eff);
        Ok((worst < 1e-10, format!("max |U†U − I| = {worst:.3e}")))
    })()));

    checks.push(check("povm_completeness", (|| {
        let eta = params.eta_d.clamp(0.0, 1.0);
        let povm = povm_elements(eta, params.n_max.max(1) + 1)?;
        let n = povm.off.nrows();
        let err = (&povm.off + &povm.click - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok((err == 0.0, format!("max |Π_off + Π_click − I| = {err:.3e}")))
    })()));

    checks.push(check("network_isometry", (|| {
        let photons = emit_and_qwp(&operating_point_input()?)?;
        let routed = apply_pbs_routing(&photons, layout)?;
        let out = apply_hwp(&routed, &OUTPUT_MODES)?;
        let err = (routed.norm_sqr() - photons.norm_sqr()).abs().max((out.norm_sqr() - photons.norm_sqr()).abs());
        Ok((err < 1e-12, format!("norm change {err:.3e}")))
    })()));

    checks.push(check("post_network_state", (|| {
        let d = reference_mismatch(&operating_point_input()?, layout)?;
        Ok((d < 1e-12, format!("distance to reference after global phase {d:.3e}")))
    })()));

    checks.push(check("decay_identity", (|| {
        let p = decay_params(100.0)?;
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            let t = i as f64 * 0.005 / p.kappa;
            let closed = pd_closed_form(&p, t);
            let numeric = pd_numeric(&p, t)?;
            let scale = closed.abs().max(numeric.abs());
            if scale > 0.0 {
                worst = worst.max((closed - numeric).abs() / scale);
            }
        }
        Ok((worst < 1e-12, format!("max relative difference {worst:.3e}")))
    })()));

    checks.push(check("success_probability", (|| {
        let eta = params.eta_d.clamp(0.0, 1.0);
        let state = crate::network::full_network(&operating_point_input()?, layout)?;
        let report = enumerate_outcomes(&state, eta)?;
        let err = (report.accepted_probability - success_probability_ideal(eta)).abs();
        let total = (report.total_probability - 1.0).abs();
        Ok((err < 1e-12 && total < 1e-10, format!("accepted deviation {err:.3e}, total deviation {total:.3e}")))
    })()));

    ValidationReport { checks }
}
