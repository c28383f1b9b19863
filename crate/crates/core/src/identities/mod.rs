//! Identity checks and the suite runner.
//!
//! Every check produces one or more [`CheckResult`]s tied to an [`Anchor`],
//! the formula it verifies. Suites group checks; [`run_verification`] runs
//! suites in parallel and assembles a [`VerificationReport`] sorted by
//! check name.

pub mod balance;
pub mod geometry;
pub mod level;
pub mod mass;
pub mod residual;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::anisotropy::AnisotropyNorm;
use crate::config::{NormSpec, SolutionSpec};
use crate::dual_geometry::DualGauge;
use crate::error::{Error, Result};
use crate::linalg::rel_err;
use crate::quadrature::QuadratureConfig;
use crate::solution::LiouvilleSolution;

pub use mass::AsymptoticRow;

/// The formula a check verifies. Serialized as its text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Anchor {
    Ellipticity,
    Duality,
    WulffVolume,
    Perimeter,
    MassQuantization,
    MassLowerBound,
    UpperBound,
    DecayRate,
    Asymptotics,
    PdeResidual,
    FluxBalance,
    Pohozaev,
    WulffPohozaev,
    Coarea,
    LevelFlux,
    Isoperimetric,
    LevelRigidity,
    LevelClosedForms,
    LambdaFromT0,
}

impl Anchor {
    pub const ALL: [Anchor; 19] = [
        Anchor::Ellipticity,
        Anchor::Duality,
        Anchor::WulffVolume,
        Anchor::Perimeter,
        Anchor::MassQuantization,
        Anchor::MassLowerBound,
        Anchor::UpperBound,
        Anchor::DecayRate,
        Anchor::Asymptotics,
        Anchor::PdeResidual,
        Anchor::FluxBalance,
        Anchor::Pohozaev,
        Anchor::WulffPohozaev,
        Anchor::Coarea,
        Anchor::LevelFlux,
        Anchor::Isoperimetric,
        Anchor::LevelRigidity,
        Anchor::LevelClosedForms,
        Anchor::LambdaFromT0,
    ];

    pub fn text(self) -> &'static str {
        match self {
            Anchor::Ellipticity => "H² is C^{1,1} and uniformly convex (sampled Hessian eigenvalues of H²)",
            Anchor::Duality => "H0(x) = sup <x,ξ>/H(ξ); H(∇H0) = H0(∇H) = 1",
            Anchor::WulffVolume => "|B_1^{Ĥ0}| = (1/N) ∫_{S^{N-1}} Ĥ0^{-N} dσ",
            Anchor::Perimeter => "∫_{∂B_1^{Ĥ0}} H(-ν) = N |B_1^{Ĥ0}|",
            Anchor::MassQuantization => "∫ e^u = N (N²/(N-1))^{N-1} |B_1^{Ĥ0}|",
            Anchor::MassLowerBound => "∫ e^u ≥ N (N²/(N-1))^{N-1} |B_1^{Ĥ0}|, attained by the explicit family",
            Anchor::UpperBound => "u(x) ≤ C - N log|x| (sampled supremum only)",
            Anchor::DecayRate => "γ0 = [∫ e^u / (N |B_1^{Ĥ0}|)]^{1/(N-1)} = N²/(N-1)",
            Anchor::Asymptotics => "u + γ0 log Ĥ0 bounded; |x| |∇(u + γ0 log Ĥ0)| → 0",
            Anchor::PdeResidual => "-div(H^{N-1}(∇u) ∇H(∇u)) = e^u",
            Anchor::FluxBalance => "∫_{B_R^{Ĥ0}} e^u = ∫_{∂B_R^{Ĥ0}} H^{N-1}(∇u) <∇H(∇u), -ν>",
            Anchor::Pohozaev => {
                "(p-N)/p ∫ H^p(∇u) - ∫ f <x-y,∇u> = ∫_∂ H^{p-1}(∇u)<∇H(∇u),ν><x-y,∇u> - H^p(∇u)/p <x-y,ν>"
            }
            Anchor::WulffPohozaev => "M(t) = e^t |B_1^{Ĥ0}| R^N(t) + (N-1)/N H^N(∇u) |B_1^{Ĥ0}| R^N(t)",
            Anchor::Coarea => "-d/dt |Ω_t| = ∫_{∂Ω_t} 1/|∇u|; -d/dt ∫_{Ω_t} e^u = e^t ∫_{∂Ω_t} 1/|∇u|",
            Anchor::LevelFlux => "∫_{Ω_t} e^u = ∫_{∂Ω_t} H^N(∇u)/|∇u|",
            Anchor::Isoperimetric => "∫_{∂Ω} H(-ν) ≥ N |B_1^{Ĥ0}|^{1/N} |Ω|^{(N-1)/N}, equality on Wulff shapes",
            Anchor::LevelRigidity => "{u > t} = B_{R(t)}^{Ĥ0}(x0), H(∇u) constant on {u = t}",
            Anchor::LevelClosedForms => "R^N(t) closed form; M(t) = [κ_N (1 - e^{(t-t0)/N})]^{N-1}",
            Anchor::LambdaFromT0 => "λ = [e^{t0} / (N (N²/(N-1))^{N-1})]^{1/N}",
        }
    }
}

impl Serialize for Anchor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.text())
    }
}

/// One verified quantity.
///
/// `passed` holds iff `rel_err <= tol`, or `abs_err <= tol` when the target
/// is zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub anchor: Anchor,
    pub computed: f64,
    pub target: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl CheckResult {
    pub fn compare(name: impl Into<String>, anchor: Anchor, computed: f64, target: f64, tol: f64) -> Self {
        let abs_err = (computed - target).abs();
        let rel = if target == 0.0 { abs_err } else { rel_err(computed, target) };
        let passed = if target == 0.0 { abs_err <= tol } else { rel <= tol };
        Self {
            name: name.into(),
            anchor,
            computed,
            target,
            abs_err,
            rel_err: rel,
            tol,
            passed,
            seed: None,
            details: BTreeMap::new(),
        }
    }

    /// Passes iff `metric <= tol`.
    pub fn at_most(name: impl Into<String>, anchor: Anchor, metric: f64, tol: f64) -> Self {
        Self::compare(name, anchor, metric, 0.0, tol)
    }

    /// A yes/no outcome recorded as `1` against target `1`.
    pub fn flag(name: impl Into<String>, anchor: Anchor, ok: bool) -> Self {
        Self::compare(name, anchor, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    /// A check that could not be evaluated.
    pub fn errored(name: impl Into<String>, anchor: Anchor, err: &Error) -> Self {
        let mut r = Self::compare(name, anchor, f64::NAN, f64::NAN, 0.0);
        r.passed = false;
        r.details.insert("error".into(), Value::String(err.to_string()));
        r
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_detail(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.details.insert(key.to_string(), v);
        self
    }
}

/// Converts an evaluation error into a failed check with the given name.
pub(crate) fn or_errored(name: &str, anchor: Anchor, r: Result<Vec<CheckResult>>) -> Vec<CheckResult> {
    r.unwrap_or_else(|e| vec![CheckResult::errored(name, anchor, &e)])
}

/// Named groups of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Ellipticity,
    Duality,
    WulffVolume,
    Perimeter,
    Mass,
    Residual,
    FluxBalance,
    Pohozaev,
    WulffPohozaev,
    Coarea,
    Asymptotics,
    Isoperimetric,
    Rigidity,
    UpperBound,
}

impl Suite {
    pub const ALL: [Suite; 14] = [
        Suite::Ellipticity,
        Suite::Duality,
        Suite::WulffVolume,
        Suite::Perimeter,
        Suite::Mass,
        Suite::Residual,
        Suite::FluxBalance,
        Suite::Pohozaev,
        Suite::WulffPohozaev,
        Suite::Coarea,
        Suite::Asymptotics,
        Suite::Isoperimetric,
        Suite::Rigidity,
        Suite::UpperBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Ellipticity => "ellipticity",
            Suite::Duality => "duality",
            Suite::WulffVolume => "wulff_volume",
            Suite::Perimeter => "perimeter",
            Suite::Mass => "mass",
            Suite::Residual => "residual",
            Suite::FluxBalance => "flux_balance",
            Suite::Pohozaev => "pohozaev",
            Suite::WulffPohozaev => "wulff_pohozaev",
            Suite::Coarea => "coarea",
            Suite::Asymptotics => "asymptotics",
            Suite::Isoperimetric => "isoperimetric",
            Suite::Rigidity => "rigidity",
            Suite::UpperBound => "upper_bound",
        }
    }

    pub fn from_name(name: &str) -> Result<Suite> {
        let n = name.trim().replace('-', "_");
        let alias = match n.as_str() {
            "quantization" => "mass",
            "pde" | "pde_residual" => "residual",
            "level_rigidity" => "rigidity",
            other => other,
        };
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == alias)
            .ok_or_else(|| Error::Config(format!("unknown suite {name:?}")))
    }

    /// Parses `a,b,c`; `all` selects every suite. Duplicates are dropped.
    pub fn parse_list(text: &str) -> Result<Vec<Suite>> {
        let mut out = Vec::new();
        for part in text.split(',').filter(|s| !s.trim().is_empty()) {
            if part.trim() == "all" {
                out.extend(Suite::ALL);
            } else {
                out.push(Suite::from_name(part)?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("empty suite selection".into()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Checks that need boundary quadrature exist only in 2D and 3D.
    fn supports_dim(self, dim: usize) -> bool {
        match self {
            Suite::Perimeter | Suite::FluxBalance | Suite::Pohozaev | Suite::Coarea | Suite::Isoperimetric => {
                dim <= 3
            }
            _ => true,
        }
    }
}

/// Everything a suite needs.
#[derive(Debug, Clone)]
pub struct VerifyContext {
    pub norm: AnisotropyNorm,
    pub solution: LiouvilleSolution,
    pub cfg: QuadratureConfig,
    /// Second dilation center for the Pohozaev suite; defaults to
    /// `x0 + (0.3, -0.1, 0, …)`.
    pub pohozaev_y: Option<Vec<f64>>,
}

impl VerifyContext {
    pub fn new(norm: AnisotropyNorm, lambda: f64, center: Vec<f64>, cfg: QuadratureConfig) -> Result<Self> {
        let solution = LiouvilleSolution::new(DualGauge::new(norm.clone()), lambda, center)?;
        Ok(Self {
            norm,
            solution,
            cfg,
            pohozaev_y: None,
        })
    }

    pub fn gauge(&self) -> &DualGauge {
        self.solution.gauge()
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub suite: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOutput {
    pub checks: Vec<CheckResult>,
    pub skipped: Vec<Skipped>,
    pub asymptotic_curve: Vec<AsymptoticRow>,
}

pub fn run_suite(ctx: &VerifyContext, suite: Suite) -> SuiteOutput {
    let mut out = SuiteOutput::default();
    if !suite.supports_dim(ctx.dim()) {
        out.skipped.push(Skipped {
            suite: suite.name().into(),
            reason: format!("boundary quadrature is implemented for N = 2, 3 only (N = {})", ctx.dim()),
        });
        return out;
    }
    let sol = &ctx.solution;
    let cfg = &ctx.cfg;
    out.checks = match suite {
        Suite::Ellipticity => or_errored(
            "ellipticity.verdict",
            Anchor::Ellipticity,
            geometry::verify_ellipticity(&ctx.norm, 1000),
        ),
        Suite::Duality => or_errored(
            "duality",
            Anchor::Duality,
            geometry::verify_duality(ctx.gauge(), 1000, cfg.seed),
        ),
        Suite::WulffVolume => or_errored(
            "wulff_volume",
            Anchor::WulffVolume,
            geometry::verify_wulff_volume(ctx.gauge(), cfg),
        ),
        Suite::Perimeter => or_errored(
            "perimeter.unit_wulff",
            Anchor::Perimeter,
            geometry::verify_perimeter(ctx.gauge()).map(|c| vec![c]),
        ),
        Suite::Mass => or_errored(
            "mass",
            Anchor::MassQuantization,
            mass::verify_mass_quantization(sol, cfg),
        ),
        Suite::Residual => or_errored(
            "residual",
            Anchor::PdeResidual,
            residual::verify_pde_residual(sol, residual::DEFAULT_POINTS, cfg.seed),
        ),
        Suite::FluxBalance => or_errored(
            "flux_balance",
            Anchor::FluxBalance,
            balance::verify_flux_balance_suite(sol, cfg),
        ),
        Suite::Pohozaev => or_errored(
            "pohozaev",
            Anchor::Pohozaev,
            balance::verify_pohozaev_suite(&ctx.norm, sol, ctx.pohozaev_y.as_deref(), cfg),
        ),
        Suite::WulffPohozaev => or_errored(
            "wulff_pohozaev.closed_form",
            Anchor::WulffPohozaev,
            balance::verify_wulff_pohozaev_closed_form(sol, &balance::random_level_grid(sol, 16, cfg.seed))
                .map(|c| vec![c]),
        ),
        Suite::Coarea => or_errored(
            "coarea",
            Anchor::Coarea,
            balance::verify_coarea(sol, sol.t0() - 1.0, 1e-3),
        ),
        Suite::Asymptotics => match mass::verify_asymptotics(sol, &mass::default_radii(), cfg) {
            Ok((checks, curve)) => {
                out.asymptotic_curve = curve;
                checks
            }
            Err(e) => vec![CheckResult::errored("asymptotics", Anchor::Asymptotics, &e)],
        },
        Suite::Isoperimetric => or_errored(
            "isoperimetric",
            Anchor::Isoperimetric,
            geometry::verify_isoperimetric(ctx.gauge(), cfg.seed),
        ),
        Suite::Rigidity => or_errored(
            "rigidity",
            Anchor::LevelRigidity,
            level::verify_level_rigidity(sol, &level::default_level_grid(sol), cfg),
        ),
        Suite::UpperBound => vec![mass::verify_upper_bound(sol, 10_000, cfg.seed)],
    };
    out
}

/// `3σ` relative to `target`, floored at `1e-12` so that a zero-variance
/// estimator is still judged against rounding.
pub fn mc_tolerance(std_error: f64, target: f64) -> f64 {
    (3.0 * std_error / target.abs()).max(MC_ROUNDING_FLOOR)
}

const MC_ROUNDING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub toolkit_version: String,
    pub norm: NormSpec,
    pub solution: SolutionSpec,
    pub config: QuadratureConfig,
    pub suites: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub skipped: Vec<Skipped>,
    pub summary: Summary,
    /// Wall-clock seconds per suite; left out in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct VerificationRun {
    pub report: VerificationReport,
    pub asymptotic_curve: Vec<AsymptoticRow>,
}

/// Runs `suites` in parallel and assembles the report.
pub fn run_verification(
    norm_spec: &NormSpec,
    solution_spec: &SolutionSpec,
    ctx: &VerifyContext,
    suites: &[Suite],
    record_timing: bool,
) -> VerificationRun {
    let outputs: Vec<(Suite, SuiteOutput, f64)> = suites
        .par_iter()
        .map(|&s| {
            let start = Instant::now();
            let out = run_suite(ctx, s);
            (s, out, start.elapsed().as_secs_f64())
        })
        .collect();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let mut curve = Vec::new();
    let mut timing = BTreeMap::new();
    for (suite, out, secs) in outputs {
        checks.extend(out.checks);
        skipped.extend(out.skipped);
        if !out.asymptotic_curve.is_empty() {
            curve = out.asymptotic_curve;
        }
        timing.insert(suite.name().to_string(), secs);
    }
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = checks.iter().filter(|c| c.passed).count();
    let report = VerificationReport {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        norm: norm_spec.clone(),
        solution: solution_spec.clone(),
        config: ctx.cfg,
        suites: suites.iter().map(|s| s.name().to_string()).collect(),
        summary: Summary {
            total: checks.len(),
            passed,
            failed: checks.len() - passed,
        },
        checks,
        skipped,
        timing: record_timing.then_some(timing),
    };
    VerificationRun {
        report,
        asymptotic_curve: curve,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_rule() {
        assert!(CheckResult::compare("a", Anchor::Duality, 1.0 + 1e-9, 1.0, 1e-8).passed);
        assert!(!CheckResult::compare("a", Anchor::Duality, 1.0 + 1e-7, 1.0, 1e-8).passed);
        assert!(CheckResult::at_most("a", Anchor::Duality, 5e-11, 1e-10).passed);
        assert!(!CheckResult::at_most("a", Anchor::Duality, f64::NAN, 1e-10).passed);
        assert!(!CheckResult::flag("a", Anchor::Duality, false).passed);
        assert!(CheckResult::flag("a", Anchor::Duality, true).passed);
        let e = CheckResult::errored("a", Anchor::Duality, &Error::BadParameter("x".into()));
        assert!(!e.passed);
    }

    #[test]
    fn anchors_are_distinct_and_serialize_as_text() {
        let mut texts: Vec<&str> = Anchor::ALL.iter().map(|a| a.text()).collect();
        texts.sort();
        texts.dedup();
        assert_eq!(texts.len(), Anchor::ALL.len());
        let json = serde_json::to_string(&Anchor::Coarea).unwrap();
        assert_eq!(json, serde_json::to_string(Anchor::Coarea.text()).unwrap());
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()).unwrap(), s);
        }
        assert_eq!(Suite::parse_list("all").unwrap().len(), Suite::ALL.len());
        assert_eq!(Suite::parse_list("quantization,mass").unwrap(), vec![Suite::Mass]);
        assert!(matches!(Suite::parse_list("nope"), Err(Error::Config(_))));
    }
}
