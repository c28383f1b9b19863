//! Merging of the optional run file with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use finsler_core::config::{parse_vector, NormSpec, SolutionSpec};
use finsler_core::identities::Suite;
use finsler_core::quadrature::{OrderedTol, QuadratureConfig};
use finsler_core::AnisotropyNorm;
use serde::Deserialize;

use crate::args::RunArgs;
use crate::error::{CliError, CliResult};

/// Run file layout; every field is optional and flags win over it.
///
/// ```json
/// {"norm": "ellipse.json", "solution": {"N": 2, "lambda": 1.0, "center": [0, 0]},
///  "suites": ["mass", "pohozaev"], "quadrature": {"seed": 7}}
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub norm: Option<NormSource>,
    pub solution: Option<PartialSolution>,
    pub suites: Option<SuiteList>,
    pub quadrature: Option<PartialQuadrature>,
    pub pohozaev_y: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub deterministic: bool,
}

/// A norm given inline or as a path relative to the run file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum NormSource {
    Path(PathBuf),
    Inline(NormSpec),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSolution {
    #[serde(rename = "N")]
    pub dim: Option<usize>,
    pub lambda: Option<f64>,
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialQuadrature {
    pub relative_tolerance: Option<f64>,
    pub max_subdivisions: Option<usize>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SuiteList {
    One(String),
    Many(Vec<String>),
}

impl SuiteList {
    fn joined(&self) -> String {
        match self {
            SuiteList::One(s) => s.clone(),
            SuiteList::Many(v) => v.join(","),
        }
    }
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub norm_spec: NormSpec,
    pub norm: AnisotropyNorm,
    pub solution: SolutionSpec,
    pub suites: Vec<Suite>,
    pub quadrature: QuadratureConfig,
    pub pohozaev_y: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub deterministic: bool,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{what} {}: {e}", path.display())))
}

fn load_norm(path: &Path) -> CliResult<NormSpec> {
    read_json(path, "norm file")
}

impl RunConfig {
    /// `default_suites` applies when neither the flag nor the file names any.
    pub fn resolve(args: &RunArgs, suite_flag: Option<&str>, default_suites: &[Suite]) -> CliResult<Self> {
        let file: FileConfig = match &args.config {
            Some(p) => read_json(p, "run config")?,
            None => FileConfig::default(),
        };
        let base_dir = args
            .config
            .as_ref()
            .and_then(|p| p.parent())
            .map(Path::to_path_buf)
            .unwrap_or_default();

        let norm_spec = match (&args.norm, file.norm) {
            (Some(p), _) => load_norm(p)?,
            (None, Some(NormSource::Path(p))) => load_norm(&base_dir.join(p))?,
            (None, Some(NormSource::Inline(spec))) => spec,
            (None, None) => return Err(CliError::Config("no norm given (use --norm or a run file)".into())),
        };
        let sol = file.solution.unwrap_or_default();
        let dim_override = args.dim.or(sol.dim);
        let norm_spec = norm_spec.resolved(dim_override)?;
        let norm = norm_spec.build(dim_override)?;
        let dim = norm.dim();

        let lambda = args.lambda.or(sol.lambda).unwrap_or(1.0);
        let center = match &args.center {
            Some(text) => parse_vector(text)?,
            None => sol.center.unwrap_or_else(|| vec![0.0; dim]),
        };
        if center.len() != dim {
            return Err(CliError::Config(format!("center has {} entries, expected {dim}", center.len())));
        }
        let pohozaev_y = match &args.y {
            Some(text) => Some(parse_vector(text)?),
            None => file.pohozaev_y,
        };
        if let Some(y) = &pohozaev_y {
            if y.len() != dim {
                return Err(CliError::Config(format!("--y has {} entries, expected {dim}", y.len())));
            }
        }

        let suites = match (suite_flag, &file.suites) {
            (Some(s), _) => Suite::parse_list(s)?,
            (None, Some(list)) => Suite::parse_list(&list.joined())?,
            (None, None) => default_suites.to_vec(),
        };

        let q = file.quadrature.unwrap_or_default();
        let defaults = QuadratureConfig::default();
        let quadrature = QuadratureConfig {
            relative_tolerance: OrderedTol(
                args.rtol
                    .or(q.relative_tolerance)
                    .unwrap_or(defaults.relative_tolerance.0),
            ),
            max_subdivisions: q.max_subdivisions.unwrap_or(defaults.max_subdivisions),
            mc_samples: args.mc_samples.or(q.mc_samples).unwrap_or(defaults.mc_samples),
            seed: args.seed.or(q.seed).unwrap_or(defaults.seed),
        };
        quadrature.validate().map_err(|e| CliError::Config(e.to_string()))?;

        Ok(Self {
            norm_spec,
            norm,
            solution: SolutionSpec { dim, lambda, center },
            suites,
            quadrature,
            pohozaev_y,
            out: args.out.clone().or(file.out.map(|p| base_dir.join(p))),
            csv: args.csv.clone().or(file.csv.map(|p| base_dir.join(p))),
            deterministic: args.deterministic || file.deterministic,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(text.as_bytes()).unwrap();
        p
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "e.json", r#"{"family": "euclidean"}"#);
        let cfg = write(
            dir.path(),
            "run.json",
            r#"{"norm": "e.json", "solution": {"N": 3, "lambda": 2.0}, "quadrature": {"seed": 5}}"#,
        );
        let args = RunArgs {
            config: Some(cfg),
            lambda: Some(0.5),
            ..Default::default()
        };
        let rc = RunConfig::resolve(&args, None, &[Suite::Mass]).unwrap();
        assert_eq!(rc.solution.dim, 3);
        assert_eq!(rc.solution.lambda, 0.5);
        assert_eq!(rc.quadrature.seed, 5);
        assert_eq!(rc.suites, vec![Suite::Mass]);
    }

    #[test]
    fn inline_norm_and_suite_list() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write(
            dir.path(),
            "run.json",
            r#"{"norm": {"family": "pnorm", "p": 3}, "suites": ["mass", "duality"]}"#,
        );
        let args = RunArgs {
            config: Some(cfg),
            ..Default::default()
        };
        let rc = RunConfig::resolve(&args, None, &[]).unwrap();
        assert_eq!(rc.suites, vec![Suite::Duality, Suite::Mass]);
        assert_eq!(rc.solution.center, vec![0.0, 0.0]);
    }

    #[test]
    fn missing_norm_is_a_config_error() {
        let err = RunConfig::resolve(&RunArgs::default(), None, &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn center_length_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "e.json", r#"{"family": "euclidean", "dimension": 2}"#);
        let args = RunArgs {
            norm: Some(n),
            center: Some("1,2,3".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args, None, &[]).is_err());
    }
}
