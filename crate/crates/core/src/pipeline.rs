//! The full verification run for one curve.

use num_rational::BigRational;

use crate::bsd::{
    assemble_report, global_invariants, measure_identity_trace, riemann_roch_check, BsdOptions,
    BsdReport, GlobalInvariants, MeasureTrace, RiemannRoch,
};
use crate::curve::{good_places, Curve, MWInput};
use crate::error::{Error, Result};
use crate::funcfield::enumerate_places;
use crate::localred::{all_local_data, check_local_identity, local_data, LocalData, LocalIdentityCheck};
use crate::lseries::{compute_l_with_traces, trace_sum, FiberModel, LComputation, TraceSum};
use crate::par::Exec;

/// Everything computed for one curve, with every cross-check outcome.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub curve: Curve,
    pub local: Vec<LocalData>,
    /// Local identity at the special places and all places of degree at most 2.
    pub local_identity: Vec<LocalIdentityCheck>,
    pub l: LComputation,
    pub invariants: GlobalInvariants,
    pub riemann_roch: RiemannRoch,
    pub measure: MeasureTrace,
    /// The measure trace with `Sigma` enlarged by 1, 2, 3 good places.
    pub measure_enlarged: Vec<MeasureTrace>,
    pub report: BsdReport,
}

impl Analysis {
    pub fn local_identity_pass(&self) -> bool {
        self.local_identity.iter().all(|c| c.pass)
    }

    /// Whether the measure identities hold for every `Sigma` tried and the
    /// normalized volume does not depend on it.
    pub fn measure_pass(&self) -> bool {
        self.measure.pass()
            && self.measure_enlarged.iter().all(|m| {
                m.pass() && m.normalized_volume == self.measure.normalized_volume
            })
    }

    /// Names of the failed internal cross-checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.local_identity_pass() {
            out.push("local point-count identity".to_string());
        }
        if !self.riemann_roch.pass {
            out.push("Riemann-Roch".to_string());
        }
        if !self.measure_pass() {
            out.push("measure identity trace".to_string());
        }
        if !self.report.paths_agree {
            out.push("Weil-etale and leading-term assemblies".to_string());
        }
        out
    }
}

/// Supplies `A_n`, e.g. from a cache.
pub trait TraceSource {
    fn trace(&mut self, model: &FiberModel, n: usize) -> Result<TraceSum>;
}

/// Computes every trace sum directly.
pub struct Direct(pub Exec);

impl TraceSource for Direct {
    fn trace(&mut self, model: &FiberModel, n: usize) -> Result<TraceSum> {
        trace_sum(model, n, self.0)
    }
}

pub fn analyze(
    curve: &Curve,
    mw: &MWInput,
    opts: &BsdOptions,
    source: &mut dyn TraceSource,
) -> Result<Analysis> {
    let local = all_local_data(curve)?;
    let model = FiberModel::new(curve, &local)?;
    let mut local_identity = local.iter().map(check_local_identity).collect::<Result<Vec<_>>>()?;
    for v in enumerate_places(curve.field(), 2) {
        if local.iter().any(|d| d.place == v) {
            continue;
        }
        local_identity.push(check_local_identity(&local_data(curve, &v)?)?);
    }
    let traces = (1..=model.l_degree())
        .map(|n| source.trace(&model, n))
        .collect::<Result<Vec<_>>>()?;
    let l = compute_l_with_traces(&model, traces)?;
    let invariants = global_invariants(&local)?;
    if invariants.conductor_degree != model.conductor_degree() {
        return Err(Error::Internal("conductor degree mismatch".into()));
    }
    let riemann_roch = riemann_roch_check(&invariants);
    let q = curve.field().q();
    let measure = measure_identity_trace(q, &invariants, &local, &[])?;
    let extra: Vec<LocalData> = good_places(curve, 64)?
        .into_iter()
        .filter(|v| !local.iter().any(|d| &d.place == v))
        .take(3)
        .map(|v| local_data(curve, &v))
        .collect::<Result<_>>()?;
    let measure_enlarged = (1..=extra.len())
        .map(|k| measure_identity_trace(q, &invariants, &local, &extra[..k]))
        .collect::<Result<Vec<_>>>()?;
    let report = assemble_report(curve, &local, &l.series, &invariants, mw, opts)?;
    Ok(Analysis {
        curve: curve.clone(),
        local,
        local_identity,
        l,
        invariants,
        riemann_roch,
        measure,
        measure_enlarged,
        report,
    })
}

/// The analytic Sha order, if determined.
pub fn sha(analysis: &Analysis) -> Option<&BigRational> {
    analysis.report.sha_analytic.value()
}
