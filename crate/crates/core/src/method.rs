//! Flow evaluators selectable by name at runtime.

use std::sync::LazyLock;

use crate::error::{Result, RiccatiError};
use crate::floquet::{self, Trajectory};
use crate::oracle::{self, IntegratorConfig};
use crate::steady_state::SteadyState;
use crate::Mat;

/// What an evaluator may draw on. The closed form needs the steady state,
/// the oracle only the model and its integrator settings.
pub struct FlowContext<'a> {
    pub steady: &'a SteadyState,
    pub integrator: &'a IntegratorConfig,
}

pub trait FlowMethod: Send + Sync {
    fn name(&self) -> &'static str;

    /// `φ_t(Q)` and `E_t(Q)` on an increasing grid.
    fn trajectory(&self, ctx: &FlowContext, q: &Mat, grid: &[f64]) -> Result<Trajectory>;

    /// `E_{s,t}(Q)`.
    fn transition(&self, ctx: &FlowContext, q: &Mat, s: f64, t: f64) -> Result<Mat>;
}

pub struct ClosedForm;

impl FlowMethod for ClosedForm {
    fn name(&self) -> &'static str {
        "closed"
    }

    fn trajectory(&self, ctx: &FlowContext, q: &Mat, grid: &[f64]) -> Result<Trajectory> {
        floquet::trajectory(ctx.steady, q, grid)
    }

    fn transition(&self, ctx: &FlowContext, q: &Mat, s: f64, t: f64) -> Result<Mat> {
        floquet::transition_two_time(ctx.steady, q, s, t)
    }
}

pub struct Oracle;

impl FlowMethod for Oracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn trajectory(&self, ctx: &FlowContext, q: &Mat, grid: &[f64]) -> Result<Trajectory> {
        Ok(oracle::integrate_joint(&ctx.steady.model, q, grid, ctx.integrator)?.0)
    }

    fn transition(&self, ctx: &FlowContext, q: &Mat, s: f64, t: f64) -> Result<Mat> {
        oracle::integrate_transition(&ctx.steady.model, q, s, t, ctx.integrator)
    }
}

static METHODS: LazyLock<Vec<Box<dyn FlowMethod>>> =
    LazyLock::new(|| vec![Box::new(ClosedForm), Box::new(Oracle)]);

pub fn flow_method(name: &str) -> Result<&'static dyn FlowMethod> {
    METHODS
        .iter()
        .find(|m| m.name() == name)
        .map(|m| m.as_ref())
        .ok_or_else(|| {
            RiccatiError::InvalidArgument(format!(
                "unknown method `{name}` (expected one of {})",
                method_names().join(", ")
            ))
        })
}

pub fn method_names() -> Vec<&'static str> {
    METHODS.iter().map(|m| m.name()).collect()
}
